//! Mixed-integer programs with binary variables, solved by best-first
//! branch-and-bound over LP relaxations. Each node's relaxation is warm
//! started from its parent's optimal basis.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::lp::{LpModel, Sense, Solution, SolveStatus};
use super::simplex::{solve_lp_warm, Basis};
use crate::error::{Error, Result};

/// Largest number of binaries accepted by the built-in solver.
pub const MAX_BINARIES: usize = 32;

/// Integrality tolerance.
pub const INT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct MilpModel {
    pub lp: LpModel,
    /// Indices of variables restricted to `{0, 1}`.
    pub binaries: Vec<usize>,
}

impl MilpModel {
    pub fn new(lp: LpModel) -> MilpModel {
        MilpModel { lp, binaries: Vec::new() }
    }

    /// Add a binary variable with objective coefficient `obj`.
    pub fn add_binary(&mut self, obj: f64) -> usize {
        let v = self.lp.add_var(0.0, 1.0, obj);
        self.binaries.push(v);
        v
    }
}

/// A MILP solver with the same status contract as the LP solver.
pub trait MilpBackend {
    fn solve(&self, model: &MilpModel) -> Result<SolveStatus>;
}

/// Built-in best-first branch-and-bound. Branches on the lowest-index
/// fractional binary, exploring the zero branch first among equal bounds.
#[derive(Clone, Debug)]
pub struct BranchAndBound {
    pub max_binaries: usize,
    pub max_nodes: usize,
    pub int_tol: f64,
    /// Relative gap below which a node is pruned.
    pub prune_tol: f64,
}

impl Default for BranchAndBound {
    fn default() -> Self {
        BranchAndBound { max_binaries: MAX_BINARIES, max_nodes: 1 << 20, int_tol: INT_TOL, prune_tol: 1e-9 }
    }
}

pub fn solve_milp(model: &MilpModel) -> Result<SolveStatus> {
    BranchAndBound::default().solve(model)
}

struct Node {
    /// Bound in maximisation orientation (larger is better).
    key: f64,
    seq: usize,
    fixes: Vec<(usize, f64)>,
    sol: Solution,
    basis: Option<Basis>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl BranchAndBound {
    fn solve_node(&self, work: &mut LpModel, base: &LpModel, fixes: &[(usize, f64)], warm: Option<&Basis>) -> Result<(SolveStatus, Option<Basis>)> {
        for &(j, v) in fixes {
            work.lower[j] = v;
            work.upper[j] = v;
        }
        let st = solve_lp_warm(work, warm);
        for &(j, _) in fixes {
            work.lower[j] = base.lower[j];
            work.upper[j] = base.upper[j];
        }
        st
    }

    fn improves(&self, key: f64, inc_key: f64) -> bool {
        inc_key == f64::NEG_INFINITY || key > inc_key + self.prune_tol * inc_key.abs().max(1.0)
    }

    fn first_fractional(&self, model: &MilpModel, x: &[f64]) -> Option<usize> {
        let mut bins = model.binaries.clone();
        bins.sort_unstable();
        bins.into_iter().find(|&j| (x[j] - x[j].round()).abs() > self.int_tol)
    }
}

impl MilpBackend for BranchAndBound {
    fn solve(&self, model: &MilpModel) -> Result<SolveStatus> {
        if model.binaries.len() > self.max_binaries {
            return Err(Error::GuardExceeded { binaries: model.binaries.len(), limit: self.max_binaries });
        }
        let flip = if model.lp.sense == Sense::Maximize { 1.0 } else { -1.0 };
        let mut base = model.lp.clone();
        for &j in &model.binaries {
            if j >= base.num_vars() {
                return Err(Error::IndexOutOfRange { what: "binary variable", index: j, len: base.num_vars() });
            }
            base.lower[j] = base.lower[j].max(0.0).ceil();
            base.upper[j] = base.upper[j].min(1.0).floor();
            if base.lower[j] > base.upper[j] {
                return Ok(SolveStatus::Infeasible);
            }
        }
        let mut work = base.clone();
        let (root, root_basis) = match solve_lp_warm(&base, None)? {
            (SolveStatus::Optimal(s), b) => (s, b),
            (other, _) => return Ok(other),
        };
        let mut nodes_solved = 1usize;
        let mut incumbent: Option<Solution> = None;
        let mut inc_key = f64::NEG_INFINITY;
        let accept = |sol: &mut Solution, incumbent: &mut Option<Solution>, inc_key: &mut f64| {
            for &j in &model.binaries {
                sol.x[j] = sol.x[j].round();
            }
            sol.value = model.lp.objective(&sol.x);
            let key = flip * sol.value;
            if key > *inc_key {
                *inc_key = key;
                *incumbent = Some(sol.clone());
            }
        };

        // rounding heuristic at the root
        if self.first_fractional(model, &root.x).is_some() {
            let fixes: Vec<(usize, f64)> = model.binaries.iter().map(|&j| (j, root.x[j].round())).collect();
            nodes_solved += 1;
            if let (SolveStatus::Optimal(mut s), _) = self.solve_node(&mut work, &base, &fixes, root_basis.as_ref())? {
                accept(&mut s, &mut incumbent, &mut inc_key);
            }
        }

        let mut heap = BinaryHeap::new();
        let mut seq = 0usize;
        heap.push(Node { key: flip * root.value, seq, fixes: Vec::new(), sol: root, basis: root_basis });
        while let Some(node) = heap.pop() {
            if !self.improves(node.key, inc_key) {
                continue;
            }
            let Some(j) = self.first_fractional(model, &node.sol.x) else {
                let mut s = node.sol;
                accept(&mut s, &mut incumbent, &mut inc_key);
                continue;
            };
            for v in [0.0, 1.0] {
                if nodes_solved >= self.max_nodes {
                    return Ok(SolveStatus::IterationLimit);
                }
                let mut fixes = node.fixes.clone();
                fixes.push((j, v));
                nodes_solved += 1;
                match self.solve_node(&mut work, &base, &fixes, node.basis.as_ref())? {
                    (SolveStatus::Optimal(s), basis) => {
                        let key = flip * s.value;
                        if self.improves(key, inc_key) {
                            seq += 1;
                            heap.push(Node { key, seq, fixes, sol: s, basis });
                        }
                    }
                    (SolveStatus::Infeasible, _) => {}
                    (SolveStatus::Unbounded, _) => return Ok(SolveStatus::Unbounded),
                    (SolveStatus::IterationLimit, _) => return Ok(SolveStatus::IterationLimit),
                }
            }
        }
        Ok(match incumbent {
            Some(mut s) => {
                s.duals = None;
                s.iterations = nodes_solved;
                SolveStatus::Optimal(s)
            }
            None => SolveStatus::Infeasible,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opt::lp::RowKind;
    use crate::opt::simplex::solve_lp;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn knapsack_like() {
        let mut m = MilpModel::new(LpModel::new(Sense::Maximize));
        let a = m.add_binary(1.0);
        let b = m.add_binary(1.0);
        m.lp.add_row(vec![(a, 1.0), (b, 1.0)], RowKind::Le, 1.0);
        assert_eq!(solve_milp(&m).unwrap().value(), Some(1.0));
    }

    #[test]
    fn guard() {
        let mut m = MilpModel::new(LpModel::new(Sense::Maximize));
        for _ in 0..33 {
            m.add_binary(1.0);
        }
        assert_eq!(solve_milp(&m), Err(Error::GuardExceeded { binaries: 33, limit: 32 }));
    }

    #[test]
    fn infeasible_integer_but_feasible_relaxation() {
        let mut m = MilpModel::new(LpModel::new(Sense::Minimize));
        let a = m.add_binary(1.0);
        let b = m.add_binary(1.0);
        m.lp.add_row(vec![(a, 2.0), (b, 2.0)], RowKind::Eq, 1.0);
        assert_eq!(solve_milp(&m).unwrap(), SolveStatus::Infeasible);
    }

    fn random_milp(seed: u64, k: usize) -> MilpModel {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let sense = if rng.gen_bool(0.5) { Sense::Minimize } else { Sense::Maximize };
        let mut m = MilpModel::new(LpModel::new(sense));
        for _ in 0..k {
            m.add_binary(rng.gen_range(-5.0..5.0f64).round());
        }
        let y = m.lp.add_var(0.0, 3.0, rng.gen_range(-2.0..2.0));
        for _ in 0..rng.gen_range(1..5) {
            let mut coeffs = Vec::new();
            for j in 0..k {
                if rng.gen_bool(0.6) {
                    coeffs.push((j, rng.gen_range(-3.0..3.0f64).round()));
                }
            }
            coeffs.push((y, rng.gen_range(-1.0..1.0)));
            let kind = if rng.gen_bool(0.5) { RowKind::Le } else { RowKind::Ge };
            m.lp.add_row(coeffs, kind, rng.gen_range(-2.0..3.0));
        }
        m
    }

    fn brute_force(m: &MilpModel) -> Option<f64> {
        let k = m.binaries.len();
        let mut best: Option<f64> = None;
        for bits in 0u32..1 << k {
            let mut lp = m.lp.clone();
            for (t, &j) in m.binaries.iter().enumerate() {
                let v = f64::from(bits >> t & 1);
                lp.lower[j] = v;
                lp.upper[j] = v;
            }
            if let Some(v) = solve_lp(&lp).unwrap().value() {
                best = Some(match (best, m.lp.sense) {
                    (None, _) => v,
                    (Some(b), Sense::Maximize) => b.max(v),
                    (Some(b), Sense::Minimize) => b.min(v),
                });
            }
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn matches_enumeration(seed in 0u64..1_000_000, k in 1usize..=8) {
            let m = random_milp(seed, k);
            let st = solve_milp(&m).unwrap();
            let relax = solve_lp(&m.lp).unwrap().value();
            match (st.value(), brute_force(&m)) {
                (Some(a), Some(b)) => {
                    prop_assert!((a - b).abs() < 1e-7, "{} vs {}", a, b);
                    let r = relax.unwrap();
                    match m.lp.sense {
                        Sense::Maximize => prop_assert!(a <= r + 1e-7),
                        Sense::Minimize => prop_assert!(a >= r - 1e-7),
                    }
                    prop_assert_eq!(solve_milp(&m).unwrap(), st);
                }
                (None, None) => {}
                (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
            }
        }
    }
}
