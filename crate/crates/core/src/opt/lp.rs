//! Linear program description, solution types, dualization and a plain-text dump.

use std::fmt::Write as _;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RowKind {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

/// A linear program `opt c^T x` subject to sparse rows and variable bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpModel {
    pub sense: Sense,
    pub obj: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LpModel {
    pub fn new(sense: Sense) -> LpModel {
        LpModel { sense, obj: Vec::new(), lower: Vec::new(), upper: Vec::new(), rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.obj.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Add a variable with bounds `[lower, upper]` and objective coefficient `obj`.
    pub fn add_var(&mut self, lower: f64, upper: f64, obj: f64) -> usize {
        self.obj.push(obj);
        self.lower.push(lower);
        self.upper.push(upper);
        self.obj.len() - 1
    }

    /// Add `n` variables sharing bounds and objective; returns the first index.
    pub fn add_vars(&mut self, n: usize, lower: f64, upper: f64, obj: f64) -> usize {
        let first = self.obj.len();
        for _ in 0..n {
            self.add_var(lower, upper, obj);
        }
        first
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, kind: RowKind, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, kind, rhs });
        self.rows.len() - 1
    }

    /// Objective value of a point.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.obj.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest bound or row violation of a point.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let viol = match row.kind {
                RowKind::Le => lhs - row.rhs,
                RowKind::Ge => row.rhs - lhs,
                RowKind::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Plain-text dump: objective, one constraint per line, then bounds.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let sense = match self.sense {
            Sense::Minimize => "minimize",
            Sense::Maximize => "maximize",
        };
        let _ = write!(s, "{sense}");
        for (j, &c) in self.obj.iter().enumerate() {
            if c != 0.0 {
                let _ = write!(s, " {c:+} x{j}");
            }
        }
        s.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(s, "r{i}:");
            for &(j, a) in &row.coeffs {
                let _ = write!(s, " {a:+} x{j}");
            }
            let op = match row.kind {
                RowKind::Le => "<=",
                RowKind::Eq => "=",
                RowKind::Ge => ">=",
            };
            let _ = writeln!(s, " {op} {}", row.rhs);
        }
        for j in 0..self.num_vars() {
            let _ = writeln!(s, "x{j} in [{}, {}]", self.lower[j], self.upper[j]);
        }
        s
    }
}

/// Result of an optimization call.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Solution {
    pub value: f64,
    pub x: Vec<f64>,
    /// Row duals, signed for the model's own sense (`d value / d rhs`).
    pub duals: Option<Vec<f64>>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SolveStatus {
    Optimal(Solution),
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl SolveStatus {
    pub fn optimal(&self) -> Option<&Solution> {
        match self {
            SolveStatus::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_optimal(self) -> Option<Solution> {
        match self {
            SolveStatus::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.optimal().map(|s| s.value)
    }
}

/// The Lagrangian dual of `model`, with one multiplier per row. Variables
/// with a nonzero finite bound get explicit bound multipliers; sign-restricted
/// variables at zero turn into inequality rows. Strong duality makes its
/// optimum equal the primal's.
pub fn dual_model(model: &LpModel) -> LpModel {
    dual_with_cost_params(model, &[], 0).0
}

/// Like [`dual_model`], but primal objective coefficients may depend on
/// parameters: each `(j, k, a)` in `terms` adds `a * z_k` to `c_j`. The
/// parameters `z_0..z_{num_params}` become dual variables in `[0, 1]` with zero
/// objective; the index of `z_0` is returned alongside the model.
pub fn dual_with_cost_params(model: &LpModel, terms: &[(usize, usize, f64)], num_params: usize) -> (LpModel, usize) {
    // Work with min c^T x; a max model is min (-c)^T x with negated value.
    let flip = if model.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut d = LpModel::new(Sense::Maximize);
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for row in &model.rows {
        let (lo, hi) = match row.kind {
            RowKind::Ge => (0.0, f64::INFINITY),
            RowKind::Le => (f64::NEG_INFINITY, 0.0),
            RowKind::Eq => (f64::NEG_INFINITY, f64::INFINITY),
        };
        let v = d.add_var(lo, hi, flip * row.rhs);
        for &(j, a) in &row.coeffs {
            cols[j].push((v, a));
        }
    }
    let mut kinds = Vec::with_capacity(model.num_vars());
    for (j, col) in cols.iter_mut().enumerate() {
        let (l, u) = (model.lower[j], model.upper[j]);
        let kind = match (l.is_finite(), u.is_finite()) {
            (true, false) if l == 0.0 => RowKind::Le,
            (false, true) if u == 0.0 => RowKind::Ge,
            (false, false) => RowKind::Eq,
            _ => {
                if l.is_finite() {
                    let mu = d.add_var(0.0, f64::INFINITY, flip * l);
                    col.push((mu, 1.0));
                }
                if u.is_finite() {
                    let nu = d.add_var(0.0, f64::INFINITY, -flip * u);
                    col.push((nu, -1.0));
                }
                RowKind::Eq
            }
        };
        kinds.push(kind);
    }
    let z0 = d.add_vars(num_params, 0.0, 1.0, 0.0);
    for &(j, k, a) in terms {
        cols[j].push((z0 + k, -flip * a));
    }
    for (j, (col, kind)) in cols.into_iter().zip(kinds).enumerate() {
        d.add_row(col, kind, flip * model.obj[j]);
    }
    if flip < 0.0 {
        // max c^T x = -min (-c)^T x, so the dual of the negated problem is minimized
        d.sense = Sense::Minimize;
    }
    (d, z0)
}
