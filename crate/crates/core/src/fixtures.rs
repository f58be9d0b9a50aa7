//! Small worked instances used in documentation, tests and the CLI.

use crate::bitset::BitSet;
use crate::choice::{Ranking, RankingModel};
use crate::instance::{Instance, Norm};

fn dense(n: usize, entries: &[(usize, f64)]) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    for &(i, x) in entries {
        v[i] = x;
    }
    v
}

/// Four products with revenues 10, 20, 30, 100 and two past assortments
/// `{0,2,3,4}` and `{0,1,2,4}`; `eta = 0`.
pub fn two_assortment_example() -> Instance {
    Instance::new(
        vec![10.0, 20.0, 30.0, 100.0],
        vec![BitSet::from_slice(&[0, 2, 3, 4]), BitSet::from_slice(&[0, 1, 2, 4])],
        vec![
            dense(4, &[(0, 0.3), (2, 0.3), (3, 0.3), (4, 0.1)]),
            dense(4, &[(0, 0.3), (1, 0.3), (2, 0.1), (4, 0.3)]),
        ],
        0.0,
        Norm::Linf,
    )
    .expect("worked instance is valid")
}

/// Worst-case revenues of every assortment containing product 4 in
/// [`two_assortment_example`].
pub const TWO_ASSORTMENT_WORST: [(&[usize], f64); 8] = [
    (&[0, 4], 30.0),
    (&[0, 1, 4], 33.0),
    (&[0, 2, 4], 36.0),
    (&[0, 3, 4], 19.0),
    (&[0, 1, 2, 4], 35.0),
    (&[0, 1, 3, 4], 12.0),
    (&[0, 2, 3, 4], 25.0),
    (&[0, 1, 2, 3, 4], 14.0),
];

fn ord(order: &[usize]) -> Ranking {
    Ranking::from_order(order).expect("valid order")
}

/// Five-atom model fitting [`two_assortment_example`] exactly; it earns 70 on `{0,4}`.
pub fn fitted_model() -> RankingModel {
    RankingModel::new(vec![
        (ord(&[0, 1, 2, 3, 4]), 0.3),
        (ord(&[1, 2, 4, 0, 3]), 0.2),
        (ord(&[1, 4, 0, 2, 3]), 0.1),
        (ord(&[2, 4, 0, 1, 3]), 0.1),
        (ord(&[3, 4, 0, 1, 2]), 0.3),
    ])
    .expect("valid model")
}

/// Seven-atom model also fitting [`two_assortment_example`]; it earns 30 on `{0,4}`.
pub fn adverse_model() -> RankingModel {
    RankingModel::new(vec![
        (ord(&[0, 1, 2, 3, 4]), 0.2),
        (ord(&[1, 0, 2, 3, 4]), 0.1),
        (ord(&[2, 0, 1, 3, 4]), 0.1),
        (ord(&[3, 0, 1, 2, 4]), 0.1),
        (ord(&[4, 0, 1, 2, 3]), 0.1),
        (ord(&[1, 2, 0, 3, 4]), 0.2),
        (ord(&[3, 4, 0, 1, 2]), 0.2),
    ])
    .expect("valid model")
}

/// Three past assortments `{0,1,2}`, `{0,1}`, `{0,2}` over two products with
/// uniform sales; used for tuple-graph examples.
pub fn three_assortment_example() -> Instance {
    Instance::new(
        vec![1.0, 2.0],
        vec![BitSet::from_slice(&[0, 1, 2]), BitSet::from_slice(&[0, 1]), BitSet::from_slice(&[0, 2])],
        vec![
            dense(2, &[(0, 1.0 / 3.0), (1, 1.0 / 3.0), (2, 1.0 / 3.0)]),
            dense(2, &[(0, 0.5), (1, 0.5)]),
            dense(2, &[(0, 0.5), (2, 0.5)]),
        ],
        0.0,
        Norm::Linf,
    )
    .expect("valid instance")
}
