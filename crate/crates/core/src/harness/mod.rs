//! Top-level solvers: the robust assortment problem with structure dispatch,
//! the Pareto sweep, and the estimate-then-optimize baseline. Instance
//! generators and experiment runners live in the submodules.

pub mod experiments;
pub mod generators;

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bitset::{Assortment, BitSet};
use crate::candidates::{candidates_two, enumerate_candidates, CandidateSet};
use crate::choice::{expected_revenue, Ranking, RankingModel};
use crate::error::{Error, Result};
use crate::instance::{Instance, StructureKind};
use crate::nested::{compact_best_case, compact_worst_case, solve_pareto_milp_with_ro, solve_ro_milp, ParetoSolution};
use crate::opt::milp::MAX_BINARIES;
use crate::opt::Sense;
use crate::oracle::RankingSpaceLp;
use crate::robust::{best_case_with_tuples, worst_case_revenue, worst_case_two_flow, worst_case_with_tuples};
use crate::tuples::{build_feasible_tuples, FeasibleTupleSet};

pub use generators::{derive_seed, generate, rng_from_seed, GenParams, GeneratorKind};

/// Values within `TIE_TOL * max(1, r_n)` of the optimum count as ties.
pub const TIE_TOL: f64 = 1e-7;

/// Largest `n` for the exhaustive Pareto route.
pub const MAX_PARETO_ENUM_N: usize = 14;

/// Up to this `n` the automatic Pareto route enumerates even nested
/// instances: `2^n` LPs beat a branch-and-bound whose relaxation weakens
/// as the threshold nears the robust optimum.
pub const PARETO_ENUM_PREFERRED_N: usize = 10;

/// Largest `n` for [`eto_baseline`].
pub const MAX_ETO_N: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Auto,
    ClosedForm,
    Brute,
    NestedMilp,
    TwoFlow,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s.replace('-', "_").as_str() {
            "auto" => Ok(Method::Auto),
            "closed_form" => Ok(Method::ClosedForm),
            "brute" => Ok(Method::Brute),
            "nested_milp" => Ok(Method::NestedMilp),
            "two_flow" => Ok(Method::TwoFlow),
            _ => Err(Error::BadParams(format!("unknown method {s:?}"))),
        }
    }
}

/// One evaluated assortment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateRow {
    pub assortment: Assortment,
    pub worst: f64,
    pub best: Option<f64>,
}

/// Result of [`solve_ro`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    /// The concrete method that produced the result.
    pub method: Method,
    /// Every table row within the tie tolerance of the optimum, in mask order.
    pub optima: Vec<Assortment>,
    /// The optimum with the smallest mask.
    pub assortment: Assortment,
    pub value: f64,
    pub table: Vec<CandidateRow>,
    pub elapsed_ms: f64,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveOptions {
    /// Also compute the best case of every table row.
    pub with_best: bool,
    /// Recorded in the report.
    pub seed: Option<u64>,
}

fn tie_tol(inst: &Instance) -> f64 {
    TIE_TOL * inst.r_max().max(1.0)
}

/// The concrete method `Auto` resolves to.
pub fn dispatch(inst: &Instance) -> Method {
    let tag = inst.classify();
    let eta0 = inst.eta() == 0.0;
    if tag.kind == StructureKind::RevenueOrderedComplete && eta0 {
        return Method::ClosedForm;
    }
    if tag.is_nested {
        let top = inst.past().iter().map(BitSet::len).max().unwrap_or(0);
        if top.saturating_sub(1) <= MAX_BINARIES {
            return Method::NestedMilp;
        }
    }
    if inst.num_past() == 2 && eta0 {
        return Method::TwoFlow;
    }
    Method::Brute
}

/// Solve `max_S min_{lambda in U} R^lambda(S)`.
pub fn solve_ro(inst: &Instance, method: Method) -> Result<SolveReport> {
    solve_ro_with(inst, method, &SolveOptions::default())
}

pub fn solve_ro_with(inst: &Instance, method: Method, opts: &SolveOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let method = if method == Method::Auto { dispatch(inst) } else { method };
    let mut table = match method {
        Method::ClosedForm => closed_form_table(inst)?,
        Method::Brute => {
            let eval = Evaluator::new(inst)?;
            let candidates = enumerate_candidates(inst)?;
            evaluate_all(&candidates, |s| eval.worst(inst, s))?
        }
        Method::TwoFlow => {
            if inst.num_past() != 2 || inst.eta() != 0.0 {
                return Err(Error::NotApplicable("two-flow needs two past assortments and eta = 0".into()));
            }
            let candidates = candidates_two(inst)?;
            let probe = BitSet::from_slice(&[0]);
            if matches!(worst_case_two_flow(inst, &probe), Err(Error::NotApplicable(_))) {
                let eval = Evaluator::new(inst)?;
                evaluate_all(&candidates, |s| eval.worst(inst, s))?
            } else {
                evaluate_all(&candidates, |s| worst_case_two_flow(inst, s).map(|v| v.value))?
            }
        }
        Method::NestedMilp => {
            if inst.nested_order().is_none() {
                return Err(Error::NotNested);
            }
            let (s, v) = solve_ro_milp(inst)?;
            vec![CandidateRow { assortment: s, worst: v, best: None }]
        }
        Method::Auto => unreachable!("resolved above"),
    };
    if opts.with_best {
        let eval = Evaluator::new(inst)?;
        let bests: Vec<Result<f64>> = table.par_iter().map(|row| eval.best(inst, &row.assortment)).collect();
        for (row, b) in table.iter_mut().zip(bests) {
            row.best = Some(b?);
        }
    }
    let value = table.iter().map(|r| r.worst).fold(f64::NEG_INFINITY, f64::max);
    if !value.is_finite() {
        return Err(Error::NumericalFailure("empty candidate table".into()));
    }
    let tol = tie_tol(inst);
    let mut optima: Vec<Assortment> = table.iter().filter(|r| r.worst >= value - tol).map(|r| r.assortment.clone()).collect();
    optima.sort();
    let assortment = optima[0].clone();
    Ok(SolveReport {
        method,
        optima,
        assortment,
        value,
        table,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        seed: opts.seed,
    })
}

/// Worst/best-case evaluation with the feasible tuples built once, or the
/// nested compact LP when the tuple set is too large.
enum Evaluator {
    Tuples(FeasibleTupleSet),
    Compact,
}

impl Evaluator {
    fn new(inst: &Instance) -> Result<Evaluator> {
        match build_feasible_tuples(inst) {
            Ok(t) => Ok(Evaluator::Tuples(t)),
            Err(Error::ExplosionGuard { .. }) if inst.nested_order().is_some() => Ok(Evaluator::Compact),
            Err(e) => Err(e),
        }
    }

    fn worst(&self, inst: &Instance, s: &Assortment) -> Result<f64> {
        match self {
            Evaluator::Tuples(t) => worst_case_with_tuples(inst, t, s).map(|v| v.value),
            Evaluator::Compact => compact_worst_case(inst, s).map(|v| v.value),
        }
    }

    fn best(&self, inst: &Instance, s: &Assortment) -> Result<f64> {
        match self {
            Evaluator::Tuples(t) => best_case_with_tuples(inst, t, s).map(|v| v.value),
            Evaluator::Compact => compact_best_case(inst, s).map(|v| v.value),
        }
    }
}

fn evaluate_all(candidates: &CandidateSet, f: impl Fn(&Assortment) -> Result<f64> + Sync + Send) -> Result<Vec<CandidateRow>> {
    let rows: Vec<Result<CandidateRow>> =
        candidates.iter().collect::<Vec<_>>().par_iter().map(|s| Ok(CandidateRow { assortment: (*s).clone(), worst: f(s)?, best: None })).collect();
    rows.into_iter().collect()
}

/// At `eta = 0` with every revenue-ordered assortment offered, the best past
/// assortment is optimal and its worst case is its observed revenue.
fn closed_form_table(inst: &Instance) -> Result<Vec<CandidateRow>> {
    if inst.classify().kind != StructureKind::RevenueOrderedComplete || inst.eta() != 0.0 {
        return Err(Error::NotApplicable("closed form needs every revenue-ordered assortment and eta = 0".into()));
    }
    // data consistency
    worst_case_revenue(inst, &BitSet::from_slice(&[0]))?;
    let mut rows: Vec<CandidateRow> = Vec::new();
    for (m, s) in inst.past().iter().enumerate() {
        if rows.iter().any(|r| r.assortment == *s) {
            continue;
        }
        rows.push(CandidateRow { assortment: s.clone(), worst: inst.past_revenue(m)?, best: None });
    }
    rows.sort_by(|a, b| a.assortment.cmp(&b.assortment));
    Ok(rows)
}

/// How [`pareto_sweep`] solves each point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParetoRoute {
    Auto,
    Milp,
    Enumerate,
}

impl std::str::FromStr for ParetoRoute {
    type Err = Error;

    fn from_str(s: &str) -> Result<ParetoRoute> {
        match s {
            "auto" => Ok(ParetoRoute::Auto),
            "milp" => Ok(ParetoRoute::Milp),
            "enumerate" => Ok(ParetoRoute::Enumerate),
            _ => Err(Error::BadParams(format!("unknown Pareto route {s:?}"))),
        }
    }
}

/// One assortment on the robust Pareto frontier.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParetoPoint {
    /// Smallest grid threshold at which the assortment was selected.
    pub theta: f64,
    pub assortment: Assortment,
    pub best_case: f64,
    pub worst_case: f64,
}

impl ParetoPoint {
    /// `100 (v - best_past) / best_past` for the worst and best case.
    pub fn improvement_pct(&self, best_past: f64) -> (f64, f64) {
        let pct = |v: f64| 100.0 * (v - best_past) / best_past;
        (pct(self.worst_case), pct(self.best_case))
    }
}

/// `k` evenly spaced multipliers `q` from 0 to 1.
pub fn pareto_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![1.0],
        k => (0..k).map(|i| i as f64 / (k - 1) as f64).collect(),
    }
}

/// Resolve [`ParetoRoute::Auto`]: enumeration for `n` up to
/// [`PARETO_ENUM_PREFERRED_N`], then the MILP for nested instances, then
/// enumeration up to [`MAX_PARETO_ENUM_N`].
pub fn pareto_route(inst: &Instance) -> Result<ParetoRoute> {
    let top = inst.past().iter().map(BitSet::len).max().unwrap_or(0);
    if inst.n() <= PARETO_ENUM_PREFERRED_N {
        Ok(ParetoRoute::Enumerate)
    } else if inst.nested_order().is_some() && top.saturating_sub(1) <= MAX_BINARIES {
        Ok(ParetoRoute::Milp)
    } else if inst.n() <= MAX_PARETO_ENUM_N {
        Ok(ParetoRoute::Enumerate)
    } else {
        Err(Error::NotApplicable("Pareto sweep needs nested past assortments or a small product count".into()))
    }
}

/// Solve the Pareto problem at `theta = q * RO` for each `q` in `grid`.
/// Returns one point per distinct assortment, sorted by worst case.
pub fn pareto_sweep(inst: &Instance, grid: &[f64], route: ParetoRoute) -> Result<Vec<ParetoPoint>> {
    if let Some(q) = grid.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::BadParams(format!("grid value {q} outside [0, 1]")));
    }
    let route = if route == ParetoRoute::Auto { pareto_route(inst)? } else { route };
    let raw: Vec<ParetoPoint> = match route {
        ParetoRoute::Milp => {
            if inst.nested_order().is_none() {
                return Err(Error::NotNested);
            }
            let ro = solve_ro(inst, Method::Auto)?.value;
            // ascending thresholds: a solution stays optimal while its worst
            // case still clears the threshold, since the feasible set shrinks
            let mut thetas: Vec<f64> = grid.iter().map(|&q| q * ro).collect();
            thetas.sort_by(f64::total_cmp);
            let mut pts = Vec::with_capacity(thetas.len());
            let mut last: Option<ParetoSolution> = None;
            for theta in thetas {
                let slack = 1e-9 * theta.abs().max(1.0);
                let p = match last.take() {
                    Some(p) if p.worst_case >= theta - slack => p,
                    _ => solve_pareto_milp_with_ro(inst, theta, ro)?,
                };
                pts.push(ParetoPoint { theta, assortment: p.assortment.clone(), best_case: p.best_case, worst_case: p.worst_case });
                last = Some(p);
            }
            pts
        }
        ParetoRoute::Enumerate => enumerate_pareto(inst, grid)?,
        ParetoRoute::Auto => unreachable!("resolved above"),
    };
    let mut out: Vec<ParetoPoint> = Vec::new();
    for p in raw {
        match out.iter_mut().find(|q| q.assortment == p.assortment) {
            Some(q) => q.theta = q.theta.min(p.theta),
            None => out.push(p),
        }
    }
    out.sort_by(|a, b| a.worst_case.total_cmp(&b.worst_case).then(a.theta.total_cmp(&b.theta)));
    Ok(out)
}

/// Exhaustive route: evaluate every assortment once, then pick, per
/// threshold, the largest best case, then the largest worst case, then the
/// smallest mask.
fn enumerate_pareto(inst: &Instance, grid: &[f64]) -> Result<Vec<ParetoPoint>> {
    if inst.n() > MAX_PARETO_ENUM_N {
        return Err(Error::TooLarge { what: "Pareto enumeration n", size: inst.n() as u128, limit: MAX_PARETO_ENUM_N as u128 });
    }
    let eval = Evaluator::new(inst)?;
    let all: Vec<Assortment> = (0u64..1 << inst.n()).map(|b| BitSet::from_mask(b << 1 | 1)).collect();
    let rows: Vec<Result<(Assortment, f64, f64)>> =
        all.into_par_iter().map(|s| Ok((s.clone(), eval.worst(inst, &s)?, eval.best(inst, &s)?))).collect();
    let rows: Vec<(Assortment, f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    let ro = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = tie_tol(inst);
    let mut out = Vec::with_capacity(grid.len());
    for &q in grid {
        let theta = q * ro;
        let slack = 1e-9 * theta.abs().max(1.0);
        let pick = rows
            .iter()
            .filter(|r| r.1 >= theta - slack)
            .fold(None::<&(Assortment, f64, f64)>, |acc, r| match acc {
                None => Some(r),
                Some(a) if r.2 > a.2 + tol || (r.2 >= a.2 - tol && r.1 > a.1 + tol) => Some(r),
                keep => keep,
            })
            .ok_or(Error::ThetaInfeasible { theta, ro })?;
        out.push(ParetoPoint { theta, assortment: pick.0.clone(), best_case: pick.2, worst_case: pick.1 });
    }
    Ok(out)
}

/// Result of the estimate-then-optimize baseline.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EtoResult {
    pub assortment: Assortment,
    /// `R^lambda_hat(S')`.
    pub predicted: f64,
    pub worst: f64,
    pub best: f64,
    pub best_past: f64,
}

/// Fit `lambda_hat = argmin_{lambda in U} c^T lambda` with `c ~ U[0,1]` per
/// ranking, then evaluate its revenue-maximizing assortment robustly.
pub fn eto_baseline(inst: &Instance, seed: u64) -> Result<EtoResult> {
    if inst.n() > MAX_ETO_N {
        return Err(Error::TooLarge { what: "estimate-then-optimize n", size: inst.n() as u128, limit: MAX_ETO_N as u128 });
    }
    let lp = RankingSpaceLp::build(inst)?;
    let mut rng = rng_from_seed(seed);
    let costs: Vec<f64> = (0..lp.rankings.len()).map(|_| rng.gen::<f64>()).collect();
    let (_, weights) = lp.optimize(&costs, Sense::Minimize)?;
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    let atoms: Vec<(Ranking, f64)> =
        lp.rankings.iter().zip(&weights).filter(|(_, &w)| w > 1e-12).map(|(r, &w)| (r.clone(), w / total)).collect();
    let model = RankingModel::new(atoms)?;
    eto_with_model(inst, &model)
}

/// The estimate-then-optimize evaluation for a given fitted model. The new
/// assortment maximizes predicted revenue over every assortment containing
/// 0 (ties to the smallest mask).
pub fn eto_with_model(inst: &Instance, model: &RankingModel) -> Result<EtoResult> {
    if inst.n() > 24 {
        return Err(Error::TooLarge { what: "estimate-then-optimize n", size: inst.n() as u128, limit: 24 });
    }
    let r = inst.revenues();
    let mut pick: Option<(Assortment, f64)> = None;
    for bits in 0u64..1 << inst.n() {
        let s = BitSet::from_mask(bits << 1 | 1);
        let v = expected_revenue(model, r, &s);
        if pick.as_ref().is_none_or(|p| v > p.1 + 1e-12 * inst.r_max().max(1.0)) {
            pick = Some((s, v));
        }
    }
    let (assortment, predicted) = pick.expect("at least one assortment");
    let eval = Evaluator::new(inst)?;
    Ok(EtoResult {
        worst: eval.worst(inst, &assortment)?,
        best: eval.best(inst, &assortment)?,
        best_past: inst.best_past_revenue(),
        assortment,
        predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fitted_model, two_assortment_example};
    use crate::instance::Norm;

    fn set(v: &[usize]) -> Assortment {
        BitSet::from_slice(v)
    }

    #[test]
    fn worked_instance_all_methods() {
        let inst = two_assortment_example();
        for m in [Method::Auto, Method::Brute, Method::TwoFlow] {
            let rep = solve_ro(&inst, m).unwrap();
            assert_eq!(rep.assortment, set(&[0, 2, 4]), "{m:?}");
            assert_eq!(rep.optima, vec![set(&[0, 2, 4])]);
            assert!((rep.value - 36.0).abs() < 1e-6);
        }
        assert_eq!(solve_ro(&inst, Method::Auto).unwrap().method, Method::TwoFlow);
        assert!(matches!(solve_ro(&inst, Method::NestedMilp), Err(Error::NotNested)));
        assert!(matches!(solve_ro(&inst, Method::ClosedForm), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn report_invariants() {
        let inst = two_assortment_example();
        let rep = solve_ro_with(&inst, Method::Brute, &SolveOptions { with_best: true, seed: Some(7) }).unwrap();
        let max = rep.table.iter().map(|r| r.worst).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(rep.value, max);
        assert!(rep.table.iter().any(|r| r.assortment == rep.assortment && r.worst == rep.value));
        for row in &rep.table {
            assert!(row.best.unwrap() >= row.worst - 1e-9);
        }
        assert_eq!(rep.seed, Some(7));
    }

    #[test]
    fn eto_on_fitted_model() {
        let inst = two_assortment_example();
        let e = eto_with_model(&inst, &fitted_model()).unwrap();
        assert_eq!(e.assortment, set(&[0, 4]));
        assert!((e.predicted - 70.0).abs() < 1e-9);
        assert!((e.worst - 30.0).abs() < 1e-6);
        assert!(e.best >= 70.0 - 1e-6);
        assert!((e.best_past - 35.0).abs() < 1e-9);
    }

    #[test]
    fn eto_is_reproducible_and_consistent() {
        let inst = two_assortment_example();
        let a = eto_baseline(&inst, 11).unwrap();
        assert_eq!(a, eto_baseline(&inst, 11).unwrap());
        assert!(a.worst <= a.predicted + 1e-6 && a.predicted <= a.best + 1e-6);
    }

    #[test]
    fn degenerate_no_purchase_data() {
        let past = vec![set(&[0, 1, 2]), set(&[0, 2])];
        let sales = vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]];
        let inst = Instance::new(vec![1.0, 2.0], past, sales, 0.0, Norm::Linf).unwrap();
        let e = eto_baseline(&inst, 3).unwrap();
        assert_eq!(e.best_past, 0.0);
        assert!(e.worst >= -1e-9);
        assert!(solve_ro(&inst, Method::Auto).unwrap().value.abs() < 1e-9);
    }

    #[test]
    fn pareto_grid_endpoints() {
        assert_eq!(pareto_grid(3), vec![0.0, 0.5, 1.0]);
        assert_eq!(pareto_grid(101).len(), 101);
    }

    #[test]
    fn pareto_enumeration_on_worked_instance() {
        let inst = two_assortment_example();
        let pts = pareto_sweep(&inst, &pareto_grid(21), ParetoRoute::Auto).unwrap();
        let last = pts.last().unwrap();
        assert_eq!(last.assortment, set(&[0, 2, 4]));
        for w in pts.windows(2) {
            assert!(w[0].worst_case <= w[1].worst_case + 1e-9);
            assert!(w[0].best_case >= w[1].best_case - 1e-6);
        }
        for p in &pts {
            assert!(p.worst_case >= p.theta - 1e-6 && p.best_case >= p.worst_case - 1e-9);
        }
        assert!(pareto_sweep(&inst, &[1.5], ParetoRoute::Auto).is_err());
    }
}
