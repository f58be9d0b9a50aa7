//! Brute-force oracles over the full ranking space and over all `2^n`
//! assortments. They are built directly from the definitions and share no
//! code with the fast paths, so agreement between the two is evidence.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::bitset::{Assortment, BitSet};
use crate::candidates::enumerate_candidates;
use crate::choice::{enumerate_rankings, top_choice, Ranking};
use crate::error::{Error, Result};
use crate::harness::{solve_ro, Method};
use crate::instance::Instance;
use crate::opt::norm::linearize_norm_ball;
use crate::opt::{solve_lp, LpModel, RowKind, Sense, SolveStatus};
use crate::robust::{best_case_revenue, worst_case_revenue};
use crate::tuples::{build_feasible_tuples, rho, rho_nested_prefix, rho_two, FeasibleTupleSet};

/// Largest `n` for the ranking-enumeration oracles.
pub const MAX_TUPLE_ORACLE_N: usize = 6;

/// Largest `n` for the ranking-space LP oracles (`(n+1)! <= 720` columns).
pub const MAX_LP_ORACLE_N: usize = 5;

/// Largest `n` for [`RankingSpaceLp`] itself.
pub const MAX_RANKING_LP_N: usize = 6;

/// Absolute tolerance of value checks, scaled by `max(1, r_n)`.
pub const VALUE_TOL: f64 = 1e-6;

/// Ties in [`oracle_ro`] are values within this of the maximum.
pub const TIE_TOL: f64 = 1e-7;

fn size_guard(what: &'static str, n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::TooLarge { what, size: n as u128, limit: limit as u128 });
    }
    Ok(())
}

fn induced_tuple(sigma: &Ranking, past: &[Assortment]) -> Vec<usize> {
    past.iter().map(|s| top_choice(sigma, s)).collect()
}

/// `L` as the set of top-choice tuples induced by some ranking.
pub fn oracle_feasible_tuples(inst: &Instance) -> Result<FeasibleTupleSet> {
    size_guard("oracle n", inst.n(), MAX_TUPLE_ORACLE_N)?;
    let mut set = BTreeSet::new();
    for sigma in enumerate_rankings(inst.n())? {
        set.insert(induced_tuple(&sigma, inst.past()));
    }
    FeasibleTupleSet::from_tuples(inst.num_past(), set.into_iter().collect(), inst.n())
}

fn rho_extremes(tuple: &[usize], s: &Assortment, inst: &Instance) -> Result<(f64, f64)> {
    size_guard("oracle n", inst.n(), MAX_TUPLE_ORACLE_N)?;
    if tuple.len() != inst.num_past() {
        return Err(Error::Malformed(format!("tuple has {} entries for {} past assortments", tuple.len(), inst.num_past())));
    }
    let r = inst.revenues();
    let mut out: Option<(f64, f64)> = None;
    for sigma in enumerate_rankings(inst.n())? {
        if induced_tuple(&sigma, inst.past()) != tuple {
            continue;
        }
        let v = r[top_choice(&sigma, s)];
        out = Some(out.map_or((v, v), |(lo, hi)| (lo.min(v), hi.max(v))));
    }
    out.ok_or_else(|| Error::NotApplicable(format!("no ranking induces the tuple {tuple:?}")))
}

/// Smallest revenue earned from `s` by a ranking inducing `tuple`.
pub fn oracle_rho(tuple: &[usize], s: &Assortment, inst: &Instance) -> Result<f64> {
    rho_extremes(tuple, s, inst).map(|e| e.0)
}

/// Largest revenue earned from `s` by a ranking inducing `tuple`.
pub fn oracle_rho_max(tuple: &[usize], s: &Assortment, inst: &Instance) -> Result<f64> {
    rho_extremes(tuple, s, inst).map(|e| e.1)
}

/// The consistency set written over one variable per ranking.
#[derive(Clone, Debug)]
pub struct RankingSpaceLp {
    pub rankings: Vec<Ranking>,
    /// Minimization model without an objective; `lambda[k]` is the column of `rankings[k]`.
    pub model: LpModel,
    pub lambda: Vec<usize>,
}

impl RankingSpaceLp {
    pub fn build(inst: &Instance) -> Result<RankingSpaceLp> {
        size_guard("ranking LP n", inst.n(), MAX_RANKING_LP_N)?;
        let rankings: Vec<Ranking> = enumerate_rankings(inst.n())?.collect();
        let mut model = LpModel::new(Sense::Minimize);
        let lambda: Vec<usize> = rankings.iter().map(|_| model.add_var(0.0, f64::INFINITY, 0.0)).collect();
        let mut eps = Vec::new();
        for (m, s) in inst.past().iter().enumerate() {
            for i in s.iter() {
                let mut coeffs: Vec<(usize, f64)> = rankings
                    .iter()
                    .zip(&lambda)
                    .filter(|(sigma, _)| top_choice(sigma, s) == i)
                    .map(|(_, &l)| (l, 1.0))
                    .collect();
                // at eta = 0 the residuals are omitted rather than pinned
                if inst.eta() > 0.0 {
                    let e = model.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
                    eps.push(e);
                    coeffs.push((e, -1.0));
                }
                model.add_row(coeffs, RowKind::Eq, inst.sales(m)[i]);
            }
        }
        model.add_row(lambda.iter().map(|&l| (l, 1.0)).collect(), RowKind::Eq, 1.0);
        if inst.eta() > 0.0 {
            linearize_norm_ball(&mut model, &eps, inst.norm(), inst.eta());
        }
        Ok(RankingSpaceLp { rankings, model, lambda })
    }

    /// Optimize `sum_sigma c_sigma lambda_sigma`; returns the value and the weights.
    pub fn optimize(&self, costs: &[f64], sense: Sense) -> Result<(f64, Vec<f64>)> {
        let mut model = self.model.clone();
        model.sense = sense;
        for (&l, &c) in self.lambda.iter().zip(costs) {
            model.obj[l] = c;
        }
        match solve_lp(&model)? {
            SolveStatus::Optimal(sol) => Ok((sol.value, self.lambda.iter().map(|&l| sol.x[l]).collect())),
            SolveStatus::Infeasible => Err(Error::InconsistentData),
            SolveStatus::Unbounded => Err(Error::NumericalFailure("ranking LP unbounded".into())),
            SolveStatus::IterationLimit => Err(Error::NumericalFailure("ranking LP iteration limit".into())),
        }
    }

    /// Revenue earned from `s` by each ranking.
    pub fn revenue_costs(&self, inst: &Instance, s: &Assortment) -> Vec<f64> {
        self.rankings.iter().map(|sigma| inst.revenue(top_choice(sigma, s))).collect()
    }
}

fn oracle_extreme(inst: &Instance, s: &Assortment, sense: Sense) -> Result<f64> {
    size_guard("oracle n", inst.n(), MAX_LP_ORACLE_N)?;
    check_members(inst, s)?;
    let lp = RankingSpaceLp::build(inst)?;
    lp.optimize(&lp.revenue_costs(inst, s), sense).map(|v| v.0)
}

fn check_members(inst: &Instance, s: &Assortment) -> Result<()> {
    if s.max_item().is_some_and(|i| i > inst.n()) || !s.contains(0) {
        return Err(Error::BadParams(format!("{s} is not an assortment over 0..={} containing 0", inst.n())));
    }
    Ok(())
}

/// Worst-case revenue of `s` from the LP over all rankings.
pub fn oracle_worst_case(inst: &Instance, s: &Assortment) -> Result<f64> {
    oracle_extreme(inst, s, Sense::Minimize)
}

/// Best-case revenue of `s` from the LP over all rankings.
pub fn oracle_best_case(inst: &Instance, s: &Assortment) -> Result<f64> {
    oracle_extreme(inst, s, Sense::Maximize)
}

fn every_assortment(n: usize) -> Vec<Assortment> {
    (0u64..1 << n).map(|bits| BitSet::from_mask(bits << 1 | 1)).collect()
}

/// Worst case of every assortment containing 0, in mask order.
pub fn oracle_worst_table(inst: &Instance) -> Result<Vec<(Assortment, f64)>> {
    size_guard("oracle n", inst.n(), MAX_LP_ORACLE_N)?;
    let lp = RankingSpaceLp::build(inst)?;
    every_assortment(inst.n())
        .into_par_iter()
        .map(|s| {
            let v = lp.optimize(&lp.revenue_costs(inst, &s), Sense::Minimize)?.0;
            Ok((s, v))
        })
        .collect()
}

/// Every maximizer of the worst case over all `2^n` assortments containing
/// 0, in mask order, and the optimal value.
pub fn oracle_ro(inst: &Instance) -> Result<(Vec<Assortment>, f64)> {
    let table = oracle_worst_table(inst)?;
    let best = table.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let optima = table.into_iter().filter(|t| t.1 >= best - TIE_TOL).map(|t| t.0).collect();
    Ok((optima, best))
}

/// Which comparisons to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    All,
    Tuples,
    Rho,
    WorstCase,
    RobustOpt,
}

impl std::str::FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Check> {
        match s {
            "all" => Ok(Check::All),
            "L" | "l" | "tuples" => Ok(Check::Tuples),
            "rho" => Ok(Check::Rho),
            "wc" => Ok(Check::WorstCase),
            "ro" => Ok(Check::RobustOpt),
            other => Err(Error::BadParams(format!("unknown check {other:?}"))),
        }
    }
}

/// Outcome of one oracle comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub comparisons: usize,
    pub counterexample: Option<serde_json::Value>,
}

impl CheckOutcome {
    fn new(name: &str, tolerance: f64) -> CheckOutcome {
        CheckOutcome { name: name.into(), pass: true, max_deviation: 0.0, tolerance, comparisons: 0, counterexample: None }
    }

    fn record(&mut self, deviation: f64, payload: impl FnOnce() -> serde_json::Value) {
        self.comparisons += 1;
        let deviation = if deviation.is_nan() { f64::INFINITY } else { deviation };
        if deviation > self.max_deviation {
            self.max_deviation = deviation;
        }
        if deviation > self.tolerance && self.counterexample.is_none() {
            self.pass = false;
            self.counterexample = Some(payload());
        }
    }

    fn fail(&mut self, payload: serde_json::Value) {
        self.record(f64::INFINITY, || payload);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub checks: Vec<CheckOutcome>,
}

impl OracleReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Run the selected fast-path versus oracle comparisons on one instance.
pub fn run_oracle_checks(inst: &Instance, check: Check) -> Result<OracleReport> {
    let all = check == Check::All;
    let mut checks = Vec::new();
    if all || check == Check::Tuples {
        checks.push(check_tuples(inst)?);
    }
    if all || check == Check::Rho {
        checks.push(check_rho(inst)?);
    }
    if all || check == Check::WorstCase {
        checks.extend(check_extremes(inst)?);
    }
    if all || check == Check::RobustOpt {
        checks.push(check_ro(inst)?);
    }
    Ok(OracleReport { checks })
}

fn value_tol(inst: &Instance) -> f64 {
    VALUE_TOL * inst.r_max().max(1.0)
}

fn check_tuples(inst: &Instance) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("L", 0.0);
    let slow: BTreeSet<Vec<usize>> = oracle_feasible_tuples(inst)?.to_vec().into_iter().collect();
    let fast: BTreeSet<Vec<usize>> = build_feasible_tuples(inst)?.to_vec().into_iter().collect();
    let missing: Vec<_> = slow.difference(&fast).cloned().collect();
    let extra: Vec<_> = fast.difference(&slow).cloned().collect();
    out.record((missing.len() + extra.len()) as f64, || json!({ "missing": missing, "extra": extra }));
    Ok(out)
}

/// Exact extremes of `rho` for every (tuple prefix, assortment) pair, from
/// one pass over the ranking space. Key: `(prefix, mask of S)`.
fn rho_tables(inst: &Instance, prefixes: bool) -> Result<HashMap<(Vec<usize>, u64), f64>> {
    let r = inst.revenues();
    let subsets = every_assortment(inst.n());
    let mut table: HashMap<(Vec<usize>, u64), f64> = HashMap::new();
    let past = inst.past();
    for sigma in enumerate_rankings(inst.n())? {
        let tuple = induced_tuple(&sigma, past);
        let lens: Vec<usize> = if prefixes { (1..=past.len()).collect() } else { vec![past.len()] };
        for len in lens {
            for s in &subsets {
                let target = if prefixes { s.intersection(&past[len - 1]) } else { s.clone() };
                let v = r[top_choice(&sigma, &target)];
                let e = table.entry((tuple[..len].to_vec(), s.mask())).or_insert(v);
                *e = e.min(v);
            }
        }
    }
    Ok(table)
}

fn check_rho(inst: &Instance) -> Result<CheckOutcome> {
    size_guard("oracle n", inst.n(), MAX_TUPLE_ORACLE_N)?;
    let mut out = CheckOutcome::new("rho", 0.0);
    let r = inst.revenues();
    let past = inst.past();
    let table = rho_tables(inst, false)?;
    for ((tuple, mask), &want) in sorted(&table) {
        let s = BitSet::from_mask(*mask);
        let got = rho(tuple, &s, past, r)?;
        out.record((got - want).abs(), || json!({ "method": "graph", "tuple": tuple, "S": s.to_vec(), "fast": got, "oracle": want }));
        if past.len() == 2 && s.is_subset(&past[0].union(&past[1])) {
            let got = rho_two((tuple[0], tuple[1]), &s, &past[0], &past[1], r)?;
            out.record((got - want).abs(), || json!({ "method": "two", "tuple": tuple, "S": s.to_vec(), "fast": got, "oracle": want }));
        }
    }
    if inst.is_chain_ordered() {
        let table = rho_tables(inst, true)?;
        let full: Vec<&Vec<usize>> = {
            let mut v: Vec<&Vec<usize>> = table.keys().filter(|k| k.0.len() == past.len()).map(|k| &k.0).collect();
            v.sort();
            v.dedup();
            v
        };
        for tuple in full {
            for s in every_assortment(inst.n()) {
                let got = rho_nested_prefix(tuple, &s, past, r)?;
                for (m, g) in got.iter().enumerate() {
                    let want = table[&(tuple[..=m].to_vec(), s.mask())];
                    out.record((g - want).abs(), || {
                        json!({ "method": "nested", "tuple": tuple, "S": s.to_vec(), "prefix": m + 1, "fast": g, "oracle": want })
                    });
                }
            }
        }
    }
    Ok(out)
}

fn sorted<K: Ord, V>(map: &HashMap<K, V>) -> Vec<(&K, &V)> {
    let mut v: Vec<(&K, &V)> = map.iter().collect();
    v.sort_by(|a, b| a.0.cmp(b.0));
    v
}

fn check_extremes(inst: &Instance) -> Result<Vec<CheckOutcome>> {
    size_guard("oracle n", inst.n(), MAX_LP_ORACLE_N)?;
    let tol = value_tol(inst);
    let lp = RankingSpaceLp::build(inst)?;
    let rows: Vec<Result<(Assortment, [f64; 4])>> = every_assortment(inst.n())
        .into_par_iter()
        .map(|s| {
            let costs = lp.revenue_costs(inst, &s);
            let wo = lp.optimize(&costs, Sense::Minimize)?.0;
            let bo = lp.optimize(&costs, Sense::Maximize)?.0;
            let wf = worst_case_revenue(inst, &s)?.value;
            let bf = best_case_revenue(inst, &s)?.value;
            Ok((s, [wf, wo, bf, bo]))
        })
        .collect();
    let mut worst = CheckOutcome::new("worst_case", tol);
    let mut best = CheckOutcome::new("best_case", tol);
    for row in rows {
        let (s, [wf, wo, bf, bo]) = row?;
        worst.record((wf - wo).abs(), || json!({ "S": s.to_vec(), "fast": wf, "oracle": wo }));
        best.record((bf - bo).abs(), || json!({ "S": s.to_vec(), "fast": bf, "oracle": bo }));
    }
    Ok(vec![worst, best])
}

fn check_ro(inst: &Instance) -> Result<CheckOutcome> {
    let mut out = CheckOutcome::new("ro", value_tol(inst));
    let (optima, value) = oracle_ro(inst)?;
    let report = solve_ro(inst, Method::Auto)?;
    out.record((report.value - value).abs(), || json!({ "fast": report.value, "oracle": value }));
    if !optima.contains(&report.assortment) {
        out.fail(json!({ "fast_optimum": report.assortment.to_vec(), "oracle_optima": optima.iter().map(|s| s.to_vec()).collect::<Vec<_>>() }));
    }
    let candidates = enumerate_candidates(inst)?;
    if !optima.iter().any(|s| candidates.contains(s)) {
        out.fail(json!({ "reason": "no oracle optimum is a candidate", "oracle_optima": optima.iter().map(|s| s.to_vec()).collect::<Vec<_>>() }));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{three_assortment_example, two_assortment_example, TWO_ASSORTMENT_WORST};
    use crate::instance::Norm;

    fn set(items: &[usize]) -> Assortment {
        BitSet::from_slice(items)
    }

    #[test]
    fn tuple_examples() {
        assert_eq!(oracle_feasible_tuples(&two_assortment_example()).unwrap().len(), 10);
        assert_eq!(oracle_feasible_tuples(&three_assortment_example()).unwrap().len(), 5);
        let one = Instance::new(vec![1.0], vec![set(&[0, 1])], vec![vec![0.5, 0.5]], 0.0, Norm::Linf).unwrap();
        assert_eq!(oracle_feasible_tuples(&one).unwrap().to_vec(), vec![vec![0], vec![1]]);
    }

    #[test]
    fn rho_identity_and_unrealised_tuple() {
        let inst = two_assortment_example();
        assert_eq!(oracle_rho(&[0, 0], &set(&[0]), &inst).unwrap(), 0.0);
        // 2 in both assortments must be chosen consistently
        assert!(oracle_rho(&[2, 4], &set(&[0, 4]), &inst).is_err());
    }

    #[test]
    fn worked_worst_case_table() {
        let inst = two_assortment_example();
        for (s, want) in TWO_ASSORTMENT_WORST {
            let got = oracle_worst_case(&inst, &set(s)).unwrap();
            assert!((got - want).abs() < 1e-6, "{s:?}: {got} vs {want}");
        }
        assert_eq!(oracle_worst_case(&inst, &set(&[0])).unwrap(), 0.0);
        assert_eq!(oracle_best_case(&inst, &set(&[0])).unwrap(), 0.0);
    }

    #[test]
    fn worked_robust_optimum_is_unique() {
        let (optima, value) = oracle_ro(&two_assortment_example()).unwrap();
        assert_eq!(optima, vec![set(&[0, 2, 4])]);
        assert!((value - 36.0).abs() < 1e-6);
    }

    #[test]
    fn guards() {
        let n = 7;
        let inst = Instance::new(
            (1..=n).map(|k| k as f64).collect(),
            vec![BitSet::full(n + 1)],
            vec![std::iter::once(1.0).chain(std::iter::repeat(0.0).take(n)).collect()],
            0.0,
            Norm::Linf,
        )
        .unwrap();
        assert!(matches!(oracle_feasible_tuples(&inst), Err(Error::TooLarge { .. })));
        assert!(matches!(oracle_ro(&inst), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn all_checks_pass_on_worked_instances() {
        for inst in [two_assortment_example(), three_assortment_example()] {
            let report = run_oracle_checks(&inst, Check::All).unwrap();
            assert!(report.pass(), "{}", report.to_json());
        }
    }
}
