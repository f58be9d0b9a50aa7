//! Worst-case and best-case expected revenue of a fixed assortment over the
//! consistency set, via the tuple LP, the two-assortment flow network, or
//! the nested compact LP.

use serde::Serialize;

use crate::bitset::Assortment;
use crate::choice::{Ranking, RankingModel};
use crate::error::{Error, Result};
use crate::instance::{Instance, Norm};
use crate::nested;
use crate::opt::flow::{solve_min_cost_flow, FlowNetwork};
use crate::opt::norm::linearize_norm_ball;
use crate::opt::{solve_lp, LpModel, RowKind, Sense, SolveStatus};
use crate::tuples::{build_feasible_tuples, rho, rho_min_max, rho_support, rho_two, tuple_to_ranking, FeasibleTupleSet};

/// Weights below this are dropped from witnesses.
pub const WITNESS_EPS: f64 = 1e-12;

/// One tuple of a witness distribution, with the product the customer buys from `S`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessAtom {
    pub tuple: Vec<usize>,
    pub weight: f64,
    pub choice: usize,
}

/// An extreme expected revenue together with a distribution attaining it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustValue {
    pub value: f64,
    pub witness: Vec<WitnessAtom>,
    /// Residuals `eps[m][i]`, zero outside `S_m`.
    pub epsilon: Vec<Vec<f64>>,
}

impl RobustValue {
    /// Expand the witness into an explicit ranking-based choice model.
    pub fn to_ranking_model(&self, inst: &Instance, s: &Assortment) -> Result<RankingModel> {
        let mut atoms: Vec<(Ranking, f64)> = Vec::with_capacity(self.witness.len());
        for a in &self.witness {
            atoms.push((tuple_to_ranking(&a.tuple, inst.past(), inst.n(), Some((s, a.choice)))?, a.weight));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        for a in &mut atoms {
            a.1 /= total;
        }
        RankingModel::new(atoms)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Extreme {
    Worst,
    Best,
}

/// Check that `s` is an assortment over the instance's products containing 0.
pub fn check_assortment(inst: &Instance, s: &Assortment) -> Result<()> {
    if let Some(max) = s.max_item() {
        if max > inst.n() {
            return Err(Error::IndexOutOfRange { what: "product", index: max, len: inst.n() + 1 });
        }
    }
    if !s.contains(0) {
        return Err(Error::BadParams(format!("assortment {s} does not contain 0")));
    }
    Ok(())
}

/// `min_{lambda in U} R^lambda(S)`.
pub fn worst_case_revenue(inst: &Instance, s: &Assortment) -> Result<RobustValue> {
    check_assortment(inst, s)?;
    match build_feasible_tuples(inst) {
        Ok(tuples) => worst_case_with_tuples(inst, &tuples, s),
        Err(Error::ExplosionGuard { .. }) if inst.nested_order().is_some() => nested::compact_worst_case(inst, s),
        Err(e) => Err(e),
    }
}

/// `max_{lambda in U} R^lambda(S)`.
pub fn best_case_revenue(inst: &Instance, s: &Assortment) -> Result<RobustValue> {
    check_assortment(inst, s)?;
    match build_feasible_tuples(inst) {
        Ok(tuples) => best_case_with_tuples(inst, &tuples, s),
        Err(Error::ExplosionGuard { .. }) if inst.nested_order().is_some() => nested::compact_best_case(inst, s),
        Err(e) => Err(e),
    }
}

/// Worst case over a prebuilt feasible-tuple set.
pub fn worst_case_with_tuples(inst: &Instance, tuples: &FeasibleTupleSet, s: &Assortment) -> Result<RobustValue> {
    check_assortment(inst, s)?;
    let mut coeffs = Vec::with_capacity(tuples.len());
    for t in tuples.iter() {
        coeffs.push(rho_min_max(t, s, inst.past(), inst.revenues())?.0);
    }
    tuple_lp(inst, tuples, &coeffs, Sense::Minimize, s, Extreme::Worst, inst.revenues())
}

/// Best case over a prebuilt feasible-tuple set. Solved twice, directly with
/// `rho_max` and as `r_n` minus the worst case under revenues `r_n - r_i`;
/// disagreement beyond `1e-7 * max(1, r_n)` is a numerical failure.
pub fn best_case_with_tuples(inst: &Instance, tuples: &FeasibleTupleSet, s: &Assortment) -> Result<RobustValue> {
    check_assortment(inst, s)?;
    let r = inst.revenues();
    let rn = inst.r_max();
    let flipped: Vec<f64> = r.iter().map(|&ri| rn - ri).collect();
    let mut hi = Vec::with_capacity(tuples.len());
    let mut lo_flipped = Vec::with_capacity(tuples.len());
    for t in tuples.iter() {
        hi.push(rho_min_max(t, s, inst.past(), r)?.1);
        lo_flipped.push(rho_min_max(t, s, inst.past(), &flipped)?.0);
    }
    let direct = tuple_lp(inst, tuples, &hi, Sense::Maximize, s, Extreme::Best, r)?;
    let via_flip = tuple_lp(inst, tuples, &lo_flipped, Sense::Minimize, s, Extreme::Best, r)?;
    let other = rn - via_flip.value;
    if (direct.value - other).abs() > 1e-7 * rn.max(1.0) {
        return Err(Error::NumericalFailure(format!("best case {} disagrees with flipped worst case {}", direct.value, other)));
    }
    Ok(direct)
}

/// Add the marginal rows `sum_{t: t_m = i} lambda_t - eps_{m,i} = v_{m,i}` and
/// `sum lambda = 1`. Returns the residual variable of each `(m, i)`.
fn add_marginals(lp: &mut LpModel, inst: &Instance, tuples: &FeasibleTupleSet, with_eps: bool) -> Vec<Vec<Option<usize>>> {
    let mut eps = vec![vec![None; inst.n() + 1]; inst.num_past()];
    for (m, sm) in inst.past().iter().enumerate() {
        for i in sm.iter() {
            let mut coeffs: Vec<(usize, f64)> = tuples.with_entry(m, i).iter().map(|&k| (k, 1.0)).collect();
            if with_eps {
                let e = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
                coeffs.push((e, -1.0));
                eps[m][i] = Some(e);
            }
            lp.add_row(coeffs, RowKind::Eq, inst.sales(m)[i]);
        }
    }
    lp.add_row((0..tuples.len()).map(|k| (k, 1.0)).collect(), RowKind::Eq, 1.0);
    eps
}

fn eps_vars(eps: &[Vec<Option<usize>>]) -> Vec<usize> {
    eps.iter().flatten().flatten().copied().collect()
}

fn read_eps(eps: &[Vec<Option<usize>>], x: &[f64]) -> Vec<Vec<f64>> {
    eps.iter().map(|row| row.iter().map(|e| e.map_or(0.0, |j| x[j])).collect()).collect()
}

fn tuple_lp(
    inst: &Instance,
    tuples: &FeasibleTupleSet,
    coeffs: &[f64],
    sense: Sense,
    s: &Assortment,
    extreme: Extreme,
    revenues: &[f64],
) -> Result<RobustValue> {
    let mut lp = LpModel::new(sense);
    for &c in coeffs {
        lp.add_var(0.0, f64::INFINITY, c);
    }
    let with_eps = inst.eta() > 0.0;
    let eps = add_marginals(&mut lp, inst, tuples, with_eps);
    if with_eps {
        linearize_norm_ball(&mut lp, &eps_vars(&eps), inst.norm(), inst.eta());
    }
    let sol = match solve_lp(&lp)? {
        SolveStatus::Optimal(sol) => sol,
        SolveStatus::Infeasible => return Err(Error::InconsistentData),
        other => return Err(Error::NumericalFailure(format!("tuple LP ended with {other:?}"))),
    };
    let mut witness = Vec::new();
    for (k, t) in tuples.iter().enumerate() {
        let w = sol.x[k];
        if w > WITNESS_EPS {
            witness.push(WitnessAtom { tuple: t.to_vec(), weight: w, choice: pick_choice(inst, t, s, extreme, revenues) });
        }
    }
    Ok(RobustValue { value: sol.value, witness, epsilon: read_eps(&eps, &sol.x) })
}

/// The product of `I(S)` with the smallest (worst) or largest (best) revenue.
pub(crate) fn pick_choice(inst: &Instance, tuple: &[usize], s: &Assortment, extreme: Extreme, revenues: &[f64]) -> usize {
    let support = rho_support(tuple, s, inst.past());
    let it = support.iter();
    match extreme {
        Extreme::Worst => it.min_by(|&a, &b| revenues[a].total_cmp(&revenues[b])),
        Extreme::Best => it.max_by(|&a, &b| revenues[a].total_cmp(&revenues[b])),
    }
    .unwrap_or(0)
}

/// Worst case for two past assortments at `eta = 0` through a min-cost flow
/// on the network with supplies `v_1` on `S_1`, demands `v_2` on `S_2`, and
/// the shared products split into a supply copy and a demand copy.
pub fn worst_case_two_flow(inst: &Instance, s: &Assortment) -> Result<RobustValue> {
    check_assortment(inst, s)?;
    if inst.num_past() != 2 {
        return Err(Error::NotApplicable(format!("flow route needs two past assortments, got {}", inst.num_past())));
    }
    if inst.eta() != 0.0 {
        return Err(Error::NotApplicable("flow route needs eta = 0".into()));
    }
    let n = inst.n();
    let (s1, s2) = (&inst.past()[0], &inst.past()[1]);
    if !(s1.contains(n) && s2.contains(n)) {
        return Err(Error::NotApplicable(format!("product {n} must be offered in both past assortments")));
    }
    let past = inst.past();
    let r = inst.revenues();
    let within = s.is_subset(&s1.union(s2));
    let rho_of = |i1: usize, i2: usize| -> Result<f64> {
        if within {
            rho_two((i1, i2), s, s1, s2, r)
        } else {
            rho(&[i1, i2], s, past, r)
        }
    };
    let (v1, v2) = (inst.sales(0), inst.sales(1));
    let a = s1.difference(s2);
    let b = s2.difference(s1);
    let c = s1.intersection(s2);

    let mut net = FlowNetwork::new();
    let mut supply_node = vec![usize::MAX; n + 1];
    let mut demand_node = vec![usize::MAX; n + 1];
    for i in a.iter() {
        supply_node[i] = net.add_node(v1[i]);
    }
    for i in c.iter() {
        supply_node[i] = net.add_node(v1[i]);
        demand_node[i] = net.add_node(-v2[i]);
    }
    for i in b.iter() {
        demand_node[i] = net.add_node(-v2[i]);
    }
    let mut constant = 0.0;
    let mut diag = vec![0.0; n + 1];
    for i in c.iter() {
        diag[i] = rho_of(i, i)?;
        constant += diag[i] * v1[i];
    }
    let mut arc_tuple = Vec::new();
    for i1 in a.iter() {
        for i2 in s2.iter() {
            net.add_arc(supply_node[i1], demand_node[i2], rho_of(i1, i2)?);
            arc_tuple.push((i1, i2));
        }
    }
    for i1 in c.iter() {
        for i2 in b.iter() {
            net.add_arc(supply_node[i1], demand_node[i2], rho_of(i1, i2)? - diag[i1]);
            arc_tuple.push((i1, i2));
        }
        net.add_arc(supply_node[i1], demand_node[i1], 0.0);
        arc_tuple.push((i1, i1));
    }
    let sol = match solve_min_cost_flow(&net)? {
        SolveStatus::Optimal(sol) => sol,
        SolveStatus::Infeasible => return Err(Error::InconsistentData),
        other => return Err(Error::NumericalFailure(format!("flow ended with {other:?}"))),
    };
    let mut witness = Vec::new();
    for (k, &(i1, i2)) in arc_tuple.iter().enumerate() {
        if sol.x[k] > WITNESS_EPS {
            let t = [i1, i2];
            witness.push(WitnessAtom { tuple: t.to_vec(), weight: sol.x[k], choice: pick_choice(inst, &t, s, Extreme::Worst, r) });
        }
    }
    witness.sort_by(|x, y| x.tuple.cmp(&y.tuple));
    Ok(RobustValue { value: constant + sol.value, witness, epsilon: vec![vec![0.0; n + 1]; 2] })
}

/// Smallest `||eps||` (in the instance's norm) for which the consistency set is nonempty.
pub fn min_consistency_radius(inst: &Instance) -> Result<f64> {
    let tuples = build_feasible_tuples(inst)?;
    let mut lp = LpModel::new(Sense::Minimize);
    lp.add_vars(tuples.len(), 0.0, f64::INFINITY, 0.0);
    let eps = add_marginals(&mut lp, inst, &tuples, true);
    let eps = eps_vars(&eps);
    match inst.norm() {
        Norm::Linf => {
            let t = lp.add_var(0.0, f64::INFINITY, 1.0);
            for &e in &eps {
                lp.add_row(vec![(t, 1.0), (e, -1.0)], RowKind::Ge, 0.0);
                lp.add_row(vec![(t, 1.0), (e, 1.0)], RowKind::Ge, 0.0);
            }
        }
        Norm::L1 => {
            for &e in &eps {
                let t = lp.add_var(0.0, f64::INFINITY, 1.0);
                lp.add_row(vec![(t, 1.0), (e, -1.0)], RowKind::Ge, 0.0);
                lp.add_row(vec![(t, 1.0), (e, 1.0)], RowKind::Ge, 0.0);
            }
        }
    }
    match solve_lp(&lp)? {
        SolveStatus::Optimal(sol) => Ok(sol.value.max(0.0)),
        other => Err(Error::NumericalFailure(format!("radius LP ended with {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{consistency_residual, expected_revenue};
    use crate::bitset::BitSet;
    use crate::fixtures::{self, TWO_ASSORTMENT_WORST};

    fn set(v: &[usize]) -> BitSet {
        BitSet::from_slice(v)
    }

    #[test]
    fn worked_worst_cases() {
        let inst = fixtures::two_assortment_example();
        for (s, want) in TWO_ASSORTMENT_WORST {
            let s = set(s);
            let lp = worst_case_revenue(&inst, &s).unwrap();
            assert!((lp.value - want).abs() < 1e-6, "{s}: {} vs {want}", lp.value);
            let flow = worst_case_two_flow(&inst, &s).unwrap();
            assert!((flow.value - want).abs() < 1e-7, "{s}: flow {} vs {want}", flow.value);
        }
    }

    #[test]
    fn past_assortments_are_pinned() {
        let inst = fixtures::two_assortment_example();
        for m in 0..2 {
            let s = inst.past()[m].clone();
            let want = inst.past_revenue(m).unwrap();
            assert!((worst_case_revenue(&inst, &s).unwrap().value - want).abs() < 1e-7);
            assert!((best_case_revenue(&inst, &s).unwrap().value - want).abs() < 1e-7);
        }
        assert!((best_case_revenue(&inst, &set(&[0, 2, 3, 4])).unwrap().value - 25.0).abs() < 1e-7);
    }

    #[test]
    fn best_case_dominates_fitted_model() {
        let inst = fixtures::two_assortment_example();
        let s = set(&[0, 4]);
        let best = best_case_revenue(&inst, &s).unwrap().value;
        assert!(best >= 70.0 - 1e-7);
        assert_eq!(best_case_revenue(&inst, &set(&[0])).unwrap().value, 0.0);
        assert_eq!(worst_case_revenue(&inst, &set(&[0])).unwrap().value, 0.0);
    }

    #[test]
    fn witnesses_reproduce_values() {
        let inst = fixtures::two_assortment_example();
        for (s, _) in TWO_ASSORTMENT_WORST {
            let s = set(s);
            for rv in [worst_case_revenue(&inst, &s).unwrap(), best_case_revenue(&inst, &s).unwrap(), worst_case_two_flow(&inst, &s).unwrap()] {
                let total: f64 = rv.witness.iter().map(|a| a.weight).sum();
                assert!((total - 1.0).abs() < 1e-9);
                let model = rv.to_ranking_model(&inst, &s).unwrap();
                let (_, res) = consistency_residual(&model, &inst);
                assert!(res < 1e-6, "residual {res}");
                assert!((expected_revenue(&model, inst.revenues(), &s) - rv.value).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn radius_examples() {
        assert!(min_consistency_radius(&fixtures::two_assortment_example()).unwrap() < 1e-9);
        let mut v1 = vec![0.0; 4];
        v1[0] = 1.0;
        let mut v2 = vec![0.0; 4];
        v2[3] = 1.0;
        let past = vec![set(&[0, 3]), set(&[0, 3])];
        let inst = Instance::new(vec![1.0, 2.0, 3.0], past, vec![v1, v2], 0.0, Norm::Linf).unwrap();
        assert!((min_consistency_radius(&inst).unwrap() - 0.5).abs() < 1e-9);
        assert!((min_consistency_radius(&inst.with_norm(Norm::L1)).unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(worst_case_revenue(&inst, &set(&[0, 3])), Err(Error::InconsistentData));
        let loose = inst.with_eta(0.5).unwrap();
        let w = worst_case_revenue(&loose, &set(&[0, 3])).unwrap();
        assert!((w.value - 1.5).abs() < 1e-7);
    }

    #[test]
    fn monotone_in_eta() {
        let base = fixtures::two_assortment_example();
        for (s, _) in TWO_ASSORTMENT_WORST {
            let s = set(s);
            let mut prev = (f64::INFINITY, f64::NEG_INFINITY);
            for k in 0..6 {
                for norm in [Norm::Linf, Norm::L1] {
                    let inst = base.with_eta(0.02 * k as f64).unwrap().with_norm(norm);
                    let w = worst_case_revenue(&inst, &s).unwrap().value;
                    let b = best_case_revenue(&inst, &s).unwrap().value;
                    assert!(w <= b + 1e-7 && w >= -1e-7 && b <= inst.r_max() + 1e-7);
                    if norm == Norm::Linf {
                        assert!(w <= prev.0 + 1e-7 && b >= prev.1 - 1e-7);
                        prev = (w, b);
                    }
                }
            }
        }
    }

    #[test]
    fn flow_preconditions() {
        let inst = fixtures::two_assortment_example();
        let loose = inst.with_eta(0.1).unwrap();
        assert!(matches!(worst_case_two_flow(&loose, &set(&[0, 4])), Err(Error::NotApplicable(_))));
        let three = fixtures::three_assortment_example();
        assert!(matches!(worst_case_two_flow(&three, &set(&[0, 1])), Err(Error::NotApplicable(_))));
        assert!(matches!(worst_case_revenue(&inst, &set(&[1, 2])), Err(Error::BadParams(_))));
    }
}
