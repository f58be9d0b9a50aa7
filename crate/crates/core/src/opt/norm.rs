//! Linear rows for the residual ball `||eps|| <= eta`.

use super::lp::{LpModel, RowKind};
use crate::instance::Norm;

/// Rows and auxiliary variables added by [`linearize_norm_ball`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NormBall {
    pub rows: Vec<usize>,
    pub aux: Vec<usize>,
}

/// Constrain the variables `eps` to the ball of radius `eta`.
///
/// With `eta = 0` every component is pinned to zero. The infinity norm adds
/// two rows per component; the one norm adds a bound variable `t_k` per
/// component with `t_k >= eps_k`, `t_k >= -eps_k`, and one row `sum t <= eta`.
pub fn linearize_norm_ball(model: &mut LpModel, eps: &[usize], norm: Norm, eta: f64) -> NormBall {
    let mut ball = NormBall::default();
    if eta == 0.0 {
        for &e in eps {
            ball.rows.push(model.add_row(vec![(e, 1.0)], RowKind::Eq, 0.0));
        }
        return ball;
    }
    match norm {
        Norm::Linf => {
            for &e in eps {
                ball.rows.push(model.add_row(vec![(e, 1.0)], RowKind::Le, eta));
                ball.rows.push(model.add_row(vec![(e, -1.0)], RowKind::Le, eta));
            }
        }
        Norm::L1 => {
            for &e in eps {
                let t = model.add_var(0.0, f64::INFINITY, 0.0);
                ball.aux.push(t);
                ball.rows.push(model.add_row(vec![(t, 1.0), (e, -1.0)], RowKind::Ge, 0.0));
                ball.rows.push(model.add_row(vec![(t, 1.0), (e, 1.0)], RowKind::Ge, 0.0));
            }
            let sum = ball.aux.iter().map(|&t| (t, 1.0)).collect();
            ball.rows.push(model.add_row(sum, RowKind::Le, eta));
        }
    }
    ball
}
