//! Feasible tuples, their preference graphs and the `rho` cost coefficients.
//!
//! A tuple `(i_1, ..., i_M)` with `i_m` in `S_m` records which product a
//! customer type buys from each past assortment. Its graph has an edge
//! `i -> i_m` for every `m` and every `i` in `S_m \ {i_m}` ("`i_m` is
//! preferred to `i`"). A ranking realising the tuple exists exactly when the
//! graph is acyclic.

use std::collections::{BTreeSet, VecDeque};

use crate::bitset::{Assortment, BitSet};
use crate::choice::Ranking;
use crate::error::{Error, Result};
use crate::instance::Instance;

/// Default cap on `|S_1 x ... x S_M|` (or on `|L|` for the closed forms).
pub const DEFAULT_TUPLE_GUARD: u128 = 10_000_000;

/// Preference graph of one tuple, built on demand.
#[derive(Clone, Debug)]
pub struct TupleGraph {
    tuple: Vec<usize>,
    /// `out[i]` lists the targets `i_m` that `i` points to.
    out: Vec<Vec<usize>>,
}

impl TupleGraph {
    pub fn new(tuple: &[usize], past: &[Assortment]) -> Result<TupleGraph> {
        check_support(tuple, past)?;
        let n = past.iter().filter_map(|s| s.max_item()).max().unwrap_or(0);
        let mut out = vec![Vec::new(); n + 1];
        for (s, &t) in past.iter().zip(tuple) {
            for i in s.iter().filter(|&i| i != t) {
                if !out[i].contains(&t) {
                    out[i].push(t);
                }
            }
        }
        Ok(TupleGraph { tuple: tuple.to_vec(), out })
    }

    pub fn tuple(&self) -> &[usize] {
        &self.tuple
    }

    pub fn num_vertices(&self) -> usize {
        self.out.len()
    }

    /// Outgoing edge targets of `i`.
    pub fn successors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    /// Vertices with at least one incoming edge.
    pub fn vertices_with_in_edges(&self) -> BitSet {
        self.out.iter().flatten().copied().collect()
    }

    /// Kahn topological order (smallest index first among ready vertices),
    /// or `None` when the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let nv = self.out.len();
        let mut indeg = vec![0usize; nv];
        for succ in &self.out {
            for &t in succ {
                indeg[t] += 1;
            }
        }
        let mut ready: BTreeSet<usize> = (0..nv).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(nv);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &t in &self.out[v] {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    ready.insert(t);
                }
            }
        }
        (order.len() == nv).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// True when there is a directed path (possibly empty) from `from` to `to`.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let mut seen = BitSet::new();
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if seen.insert(v) {
                stack.extend(self.out[v].iter().copied());
            }
        }
        false
    }
}

fn check_support(tuple: &[usize], past: &[Assortment]) -> Result<()> {
    if tuple.len() != past.len() {
        return Err(Error::Malformed(format!(
            "tuple has {} entries for {} past assortments",
            tuple.len(),
            past.len()
        )));
    }
    for (m, (&i, s)) in tuple.iter().zip(past).enumerate() {
        if !s.contains(i) {
            return Err(Error::TupleOutOfSupport { position: m, product: i });
        }
    }
    Ok(())
}

/// True when the tuple's preference graph is acyclic.
pub fn is_feasible_tuple(tuple: &[usize], past: &[Assortment]) -> Result<bool> {
    check_support(tuple, past)?;
    Ok((0..tuple.len()).all(|m| !closes_cycle(tuple, past, m)))
}

/// Whether setting position `m` to `tuple[m]` closes a cycle among the
/// edges of positions `0..=m`. Only targets have in-edges, so every cycle
/// runs through targets and it suffices to search forward from `tuple[m]`.
fn closes_cycle(tuple: &[usize], past: &[Assortment], m: usize) -> bool {
    let t = tuple[m];
    let mut seen: Vec<usize> = vec![t];
    let mut k = 0;
    while k < seen.len() {
        let u = seen[k];
        k += 1;
        for q in 0..=m {
            let v = tuple[q];
            if v != u && past[q].contains(u) && !seen.contains(&v) {
                if v != t && past[m].contains(v) {
                    return true;
                }
                seen.push(v);
            }
        }
    }
    false
}

/// The feasible-tuple set `L` with per-position indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibleTupleSet {
    num_past: usize,
    flat: Vec<usize>,
    /// `index[m][i]` lists the tuple ids whose entry `m` equals `i`.
    index: Vec<Vec<Vec<usize>>>,
}

impl FeasibleTupleSet {
    fn from_sorted(num_past: usize, tuples: Vec<Vec<usize>>, n: usize) -> FeasibleTupleSet {
        let mut flat = Vec::with_capacity(tuples.len() * num_past);
        let mut index = vec![vec![Vec::new(); n + 1]; num_past];
        for (k, t) in tuples.iter().enumerate() {
            for (m, &i) in t.iter().enumerate() {
                index[m][i].push(k);
            }
            flat.extend_from_slice(t);
        }
        FeasibleTupleSet { num_past, flat, index }
    }

    /// Build from tuples in any order; duplicates are removed.
    pub fn from_tuples(num_past: usize, mut tuples: Vec<Vec<usize>>, n: usize) -> Result<FeasibleTupleSet> {
        for t in &tuples {
            if t.len() != num_past {
                return Err(Error::Malformed(format!("tuple {t:?} has length {}, expected {num_past}", t.len())));
            }
            if let Some(&i) = t.iter().find(|&&i| i > n) {
                return Err(Error::IndexOutOfRange { what: "product", index: i, len: n + 1 });
            }
        }
        tuples.sort();
        tuples.dedup();
        Ok(FeasibleTupleSet::from_sorted(num_past, tuples, n))
    }

    pub fn len(&self) -> usize {
        if self.num_past == 0 {
            0
        } else {
            self.flat.len() / self.num_past
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_past(&self) -> usize {
        self.num_past
    }

    pub fn get(&self, k: usize) -> &[usize] {
        &self.flat[k * self.num_past..(k + 1) * self.num_past]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.flat.chunks(self.num_past.max(1))
    }

    /// Ids of the tuples with entry `m` equal to `i`.
    pub fn with_entry(&self, m: usize, i: usize) -> &[usize] {
        self.index[m].get(i).map_or(&[], |v| v.as_slice())
    }

    pub fn to_vec(&self) -> Vec<Vec<usize>> {
        self.iter().map(|t| t.to_vec()).collect()
    }
}

/// Build `L` using the generic enumeration (with the default guard), or a
/// closed form when the past assortments are nested or `M = 2`.
pub fn build_feasible_tuples(inst: &Instance) -> Result<FeasibleTupleSet> {
    build_feasible_tuples_with_guard(inst, DEFAULT_TUPLE_GUARD)
}

pub fn build_feasible_tuples_with_guard(inst: &Instance, guard: u128) -> Result<FeasibleTupleSet> {
    let past = inst.past();
    let n = inst.n();
    if let Some(order) = inst.nested_order() {
        let count = nested_tuple_count(past, &order);
        if count > guard {
            return Err(Error::ExplosionGuard { what: "feasible tuple set", size: count, limit: guard });
        }
        return Ok(FeasibleTupleSet::from_sorted(past.len(), nested_tuples(past, &order), n));
    }
    if past.len() == 2 {
        let (s1, s2) = (&past[0], &past[1]);
        let a = s1.difference(s2);
        let b = s2.difference(s1);
        let c = s1.intersection(s2);
        let count = (a.len() * s2.len() + s1.len() * b.len() - a.len() * b.len() + c.len()) as u128;
        if count > guard {
            return Err(Error::ExplosionGuard { what: "feasible tuple set", size: count, limit: guard });
        }
        let mut tuples = Vec::new();
        for i1 in s1.iter() {
            for i2 in s2.iter() {
                if a.contains(i1) || b.contains(i2) || i1 == i2 {
                    tuples.push(vec![i1, i2]);
                }
            }
        }
        return Ok(FeasibleTupleSet::from_sorted(2, tuples, n));
    }
    enumerate_general(past, n, guard)
}

/// Generic depth-first enumeration with incremental cycle checks.
pub fn enumerate_general(past: &[Assortment], n: usize, guard: u128) -> Result<FeasibleTupleSet> {
    let size = past.iter().try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128)).unwrap_or(u128::MAX);
    if size > guard {
        return Err(Error::ExplosionGuard { what: "tuple product space", size, limit: guard });
    }
    let lists: Vec<Vec<usize>> = past.iter().map(|s| s.to_vec()).collect();
    let mut out = Vec::new();
    let mut tuple = vec![0usize; past.len()];
    fn rec(m: usize, lists: &[Vec<usize>], past: &[Assortment], tuple: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if m == lists.len() {
            out.push(tuple.clone());
            return;
        }
        for &i in &lists[m] {
            tuple[m] = i;
            if !closes_cycle(tuple, past, m) {
                rec(m + 1, lists, past, tuple, out);
            }
        }
    }
    if !past.is_empty() {
        rec(0, &lists, past, &mut tuple, &mut out);
    }
    Ok(FeasibleTupleSet::from_sorted(past.len(), out, n))
}

/// `|L| = |B_1| * prod_{m >= 2} (1 + |B_m|)` for a nested chain.
pub fn nested_tuple_count(past: &[Assortment], order: &[usize]) -> u128 {
    let mut count: u128 = 1;
    let mut prev = BitSet::new();
    for (k, &m) in order.iter().enumerate() {
        let b = past[m].difference(&prev).len() as u128;
        count = count.saturating_mul(if k == 0 { b } else { 1 + b });
        prev = past[m].clone();
    }
    count
}

/// Tuples of a nested chain: `i_1` in `B_1`, then `i_{m+1}` in `{i_m} u B_{m+1}`.
/// `order` lists past-assortment indices in chain order; output tuples use
/// the stored positions and are sorted.
fn nested_tuples(past: &[Assortment], order: &[usize]) -> Vec<Vec<usize>> {
    let blocks: Vec<Vec<usize>> = order
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            if k == 0 {
                past[m].to_vec()
            } else {
                past[m].difference(&past[order[k - 1]]).to_vec()
            }
        })
        .collect();
    let mut chain_tuples: Vec<Vec<usize>> = blocks[0].iter().map(|&i| vec![i]).collect();
    for b in &blocks[1..] {
        let mut next = Vec::with_capacity(chain_tuples.len() * (1 + b.len()));
        for t in &chain_tuples {
            let last = *t.last().expect("nonempty prefix");
            for &i in std::iter::once(&last).chain(b.iter()) {
                let mut u = t.clone();
                u.push(i);
                next.push(u);
            }
        }
        chain_tuples = next;
    }
    let mut tuples: Vec<Vec<usize>> = chain_tuples
        .into_iter()
        .map(|ct| {
            let mut t = vec![0; past.len()];
            for (k, &m) in order.iter().enumerate() {
                t[m] = ct[k];
            }
            t
        })
        .collect();
    tuples.sort();
    tuples
}

/// The set `I(S)`: members of `S` with no directed path to a target `i_m`
/// lying in `S`. Computed by marking every predecessor reachable backwards
/// from the targets in `S`.
pub fn rho_support(tuple: &[usize], s: &Assortment, past: &[Assortment]) -> BitSet {
    let mut marked = BitSet::new();
    let mut visited = BitSet::new();
    let mut queue: VecDeque<usize> = tuple.iter().copied().filter(|&t| s.contains(t)).collect();
    while let Some(v) = queue.pop_front() {
        if !visited.insert(v) {
            continue;
        }
        for (q, &t) in tuple.iter().enumerate() {
            if t != v {
                continue;
            }
            for u in past[q].iter() {
                if u != v && marked.insert(u) {
                    queue.push_back(u);
                }
            }
        }
    }
    s.difference(&marked)
}

/// `rho(S) = min_{i in S n I(S)} r_i`.
pub fn rho(tuple: &[usize], s: &Assortment, past: &[Assortment], revenues: &[f64]) -> Result<f64> {
    check_support(tuple, past)?;
    rho_min_max(tuple, s, past, revenues).map(|(lo, _)| lo)
}

/// `rho_max(S) = max_{i in S n I(S)} r_i`.
pub fn rho_max(tuple: &[usize], s: &Assortment, past: &[Assortment], revenues: &[f64]) -> Result<f64> {
    check_support(tuple, past)?;
    rho_min_max(tuple, s, past, revenues).map(|(_, hi)| hi)
}

/// Both extremes of `r` over `I(S)`; assumes the tuple lies in the support.
pub fn rho_min_max(tuple: &[usize], s: &Assortment, past: &[Assortment], revenues: &[f64]) -> Result<(f64, f64)> {
    let support = rho_support(tuple, s, past);
    let mut it = support.iter().map(|i| revenues[i]);
    let first = it.next().ok_or(Error::EmptyMinimum)?;
    Ok(it.fold((first, first), |(lo, hi), r| (lo.min(r), hi.max(r))))
}

fn min_over(set: &BitSet, revenues: &[f64]) -> Option<f64> {
    set.iter().map(|i| revenues[i]).reduce(f64::min)
}

fn min_opt(a: f64, b: Option<f64>) -> f64 {
    b.map_or(a, |b| a.min(b))
}

/// Closed-form `rho` for two past assortments; `S` must lie inside `S_1 u S_2`.
pub fn rho_two(tuple: (usize, usize), s: &Assortment, s1: &Assortment, s2: &Assortment, revenues: &[f64]) -> Result<f64> {
    let (i1, i2) = tuple;
    if !s1.contains(i1) {
        return Err(Error::TupleOutOfSupport { position: 0, product: i1 });
    }
    if !s2.contains(i2) {
        return Err(Error::TupleOutOfSupport { position: 1, product: i2 });
    }
    let in_c = |i: usize| s1.contains(i) && s2.contains(i);
    let (r1, r2) = (revenues[i1], revenues[i2]);
    let (h1, h2) = (s.contains(i1), s.contains(i2));
    let min_a = || min_over(&s.intersection(s1).difference(s2), revenues);
    let min_b = || min_over(&s.intersection(s2).difference(s1), revenues);
    let v = match (in_c(i1), in_c(i2)) {
        (true, true) => {
            if i1 != i2 {
                return Err(Error::NotApplicable(format!("tuple ({i1},{i2}) is infeasible")));
            }
            if h1 { r1 } else { 0.0 }
        }
        (true, false) => {
            if h2 {
                r2
            } else if h1 {
                min_opt(r1, min_b())
            } else {
                0.0
            }
        }
        (false, true) => {
            if h1 {
                r1
            } else if h2 {
                min_opt(r2, min_a())
            } else {
                0.0
            }
        }
        (false, false) => match (h1, h2) {
            (true, true) => r1.min(r2),
            (true, false) => min_opt(r1, min_b()),
            (false, true) => min_opt(r2, min_a()),
            (false, false) => 0.0,
        },
    };
    Ok(v)
}

/// `rho(S n S_m)` for `m = 1..M` on a chain-ordered nested instance.
pub fn rho_nested_prefix(tuple: &[usize], s: &Assortment, past: &[Assortment], revenues: &[f64]) -> Result<Vec<f64>> {
    if !past.windows(2).all(|w| w[0].len() < w[1].len() && w[0].is_subset(&w[1])) {
        return Err(Error::NotNested);
    }
    check_support(tuple, past)?;
    let mut out: Vec<f64> = Vec::with_capacity(past.len());
    let mut prev: Option<f64> = None;
    for (m, &i) in tuple.iter().enumerate() {
        let value = if s.contains(i) {
            Some(revenues[i])
        } else {
            let block = if m == 0 { past[0].clone() } else { past[m].difference(&past[m - 1]) };
            match (min_over(&block.intersection(s), revenues), prev) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            }
        };
        let value = value.ok_or(Error::EmptyMinimum)?;
        out.push(value);
        prev = Some(value);
    }
    Ok(out)
}

/// Extend a feasible tuple to a full ranking. When `top` is given as
/// `(S, j)`, with `j` in `I(S)`, the ranking also picks `j` from `S`.
pub fn tuple_to_ranking(tuple: &[usize], past: &[Assortment], n: usize, top: Option<(&Assortment, usize)>) -> Result<Ranking> {
    let g = TupleGraph::new(tuple, past)?;
    let mut out = g.out.clone();
    out.resize(n + 1, Vec::new());
    if let Some((s, j)) = top {
        if j > n {
            return Err(Error::IndexOutOfRange { what: "product", index: j, len: n + 1 });
        }
        if j >= out.len() {
            out.resize(j + 1, Vec::new());
        }
        for k in s.iter().filter(|&k| k != j) {
            if k < out.len() && !out[k].contains(&j) {
                out[k].push(j);
            }
        }
    }
    let order = TupleGraph { tuple: tuple.to_vec(), out }
        .topological_order()
        .ok_or_else(|| Error::NotApplicable("tuple graph has a cycle".into()))?;
    // edges point from less to more preferred
    let prefs: Vec<usize> = order.into_iter().rev().collect();
    Ranking::from_order(&prefs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{enumerate_rankings, top_choice};
    use crate::fixtures;
    use crate::instance::Norm;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn sets(v: &[&[usize]]) -> Vec<BitSet> {
        v.iter().map(|s| BitSet::from_slice(s)).collect()
    }

    /// Tuples realised by at least one ranking.
    fn oracle_tuples(past: &[BitSet], n: usize) -> Vec<Vec<usize>> {
        let mut out: BTreeSet<Vec<usize>> = BTreeSet::new();
        for sigma in enumerate_rankings(n).unwrap() {
            out.insert(past.iter().map(|s| top_choice(&sigma, s)).collect());
        }
        out.into_iter().collect()
    }

    /// Smallest revenue any ranking realising the tuple earns on `s`.
    fn oracle_rho(tuple: &[usize], s: &BitSet, past: &[BitSet], n: usize, r: &[f64]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for sigma in enumerate_rankings(n).unwrap() {
            if past.iter().zip(tuple).all(|(p, &t)| top_choice(&sigma, p) == t) {
                let v = r[top_choice(&sigma, s)];
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    #[test]
    fn feasibility_examples() {
        let past = sets(&[&[0, 1, 2], &[0, 1], &[0, 2]]);
        assert!(is_feasible_tuple(&[1, 1, 0], &past).unwrap());
        assert!(!is_feasible_tuple(&[1, 0, 0], &past).unwrap());
        assert!(matches!(is_feasible_tuple(&[1, 2, 0], &past), Err(Error::TupleOutOfSupport { position: 1, .. })));
        let one = sets(&[&[0, 3, 5]]);
        for i in [0, 3, 5] {
            assert!(is_feasible_tuple(&[i], &one).unwrap());
        }
    }

    #[test]
    fn three_assortment_tuples() {
        let inst = fixtures::three_assortment_example();
        let l = build_feasible_tuples(&inst).unwrap();
        assert_eq!(l.to_vec(), vec![vec![0, 0, 0], vec![1, 1, 0], vec![1, 1, 2], vec![2, 0, 2], vec![2, 1, 2]]);
        assert_eq!(l.to_vec(), oracle_tuples(inst.past(), 2));
        assert_eq!(l.with_entry(0, 2), &[3, 4]);
    }

    #[test]
    fn two_assortment_closed_form() {
        let inst = fixtures::two_assortment_example();
        let l = build_feasible_tuples(&inst).unwrap();
        assert_eq!(l.len(), 10);
        assert_eq!(l.to_vec(), oracle_tuples(inst.past(), 4));
        assert_eq!(l, enumerate_general(inst.past(), 4, DEFAULT_TUPLE_GUARD).unwrap());
    }

    #[test]
    fn nested_closed_form_count() {
        let past = sets(&[&[0, 3], &[0, 1, 3], &[0, 1, 2, 3]]);
        let order = [0, 1, 2];
        assert_eq!(nested_tuple_count(&past, &order), 8);
        let mut t = nested_tuples(&past, &order);
        t.sort();
        assert_eq!(t, oracle_tuples(&past, 3));
        // stored out of chain order
        let shuffled = sets(&[&[0, 1, 2, 3], &[0, 3], &[0, 1, 3]]);
        assert_eq!(nested_tuples(&shuffled, &[1, 2, 0]), oracle_tuples(&shuffled, 3));
    }

    #[test]
    fn guard_trips() {
        let inst = fixtures::three_assortment_example();
        assert!(matches!(build_feasible_tuples_with_guard(&inst, 10), Err(Error::ExplosionGuard { .. })));
    }

    #[test]
    fn rho_examples() {
        let inst = fixtures::two_assortment_example();
        let (p, r) = (inst.past(), inst.revenues());
        let s = BitSet::from_slice(&[0, 2, 4]);
        assert_eq!(rho(&[2, 2], &s, p, r).unwrap(), 20.0);
        assert_eq!(rho(&[3, 1], &s, p, r).unwrap(), 0.0);
        assert_eq!(rho(&[3, 4], &s, p, r).unwrap(), 100.0);
        assert_eq!(rho_two((2, 2), &s, &p[0], &p[1], r).unwrap(), 20.0);
        assert_eq!(rho_two((3, 1), &s, &p[0], &p[1], r).unwrap(), 0.0);
        assert_eq!(rho_two((3, 4), &s, &p[0], &p[1], r).unwrap(), 100.0);
        for t in build_feasible_tuples(&inst).unwrap().iter() {
            assert_eq!(rho(t, &s, p, r).unwrap(), oracle_rho(t, &s, p, 4, r).0);
        }
    }

    #[test]
    fn nested_prefix_examples() {
        let past = sets(&[&[0, 3], &[0, 1, 3], &[0, 1, 2, 3]]);
        let r = [0.0, 10.0, 20.0, 30.0];
        let s = BitSet::from_slice(&[0, 2, 3]);
        assert_eq!(rho_nested_prefix(&[3, 3, 3], &s, &past, &r).unwrap(), vec![30.0; 3]);
        assert_eq!(rho_nested_prefix(&[0, 1, 1], &s, &past, &r).unwrap(), vec![0.0; 3]);
        let full = BitSet::full(4);
        assert_eq!(rho_nested_prefix(&[3, 1, 2], &full, &past, &r).unwrap(), vec![30.0, 10.0, 20.0]);
        let unordered = sets(&[&[0, 1, 3], &[0, 3]]);
        assert_eq!(rho_nested_prefix(&[0, 0], &s, &unordered, &r), Err(Error::NotNested));
    }

    #[test]
    fn witness_ranking_realises_tuple_and_choice() {
        let inst = fixtures::two_assortment_example();
        let (p, r) = (inst.past(), inst.revenues());
        let s = BitSet::from_slice(&[0, 1, 3, 4]);
        for t in build_feasible_tuples(&inst).unwrap().iter() {
            let support = rho_support(t, &s, p);
            for j in support.iter() {
                let sigma = tuple_to_ranking(t, p, 4, Some((&s, j))).unwrap();
                assert_eq!(top_choice(&sigma, &s), j);
                for (m, past_s) in p.iter().enumerate() {
                    assert_eq!(top_choice(&sigma, past_s), t[m]);
                }
            }
            let (lo, hi) = rho_min_max(t, &s, p, r).unwrap();
            assert_eq!((lo, hi), oracle_rho(t, &s, p, 4, r));
        }
    }

    fn random_past(seed: u64, n: usize, m: usize) -> Vec<BitSet> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| {
                let mut s = BitSet::from_slice(&[0]);
                for i in 1..=n {
                    if rng.gen_bool(0.6) {
                        s.insert(i);
                    }
                }
                s
            })
            .collect()
    }

    fn inst_from(past: Vec<BitSet>, n: usize) -> Instance {
        let sales = past
            .iter()
            .map(|s| {
                let mut v = vec![0.0; n + 1];
                for i in s.iter() {
                    v[i] = 1.0 / s.len() as f64;
                }
                v
            })
            .collect();
        Instance::new((1..=n).map(|i| i as f64).collect(), past, sales, 0.0, Norm::Linf).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn tuples_and_rho_match_ranking_oracle(seed in 0u64..1_000_000, n in 1usize..=4, m in 1usize..=3, smask in 0u64..32) {
            let past = random_past(seed, n, m);
            let r: Vec<f64> = (0..=n).map(|i| i as f64).collect();
            let general = enumerate_general(&past, n, DEFAULT_TUPLE_GUARD).unwrap();
            prop_assert_eq!(general.to_vec(), oracle_tuples(&past, n));
            let bound: usize = past.iter().map(|s| s.len()).product();
            prop_assert!(general.len() <= bound);
            let inst = inst_from(past.clone(), n);
            let fast = build_feasible_tuples(&inst).unwrap();
            let mut fast_tuples = fast.to_vec();
            fast_tuples.sort();
            let mut inst_general = enumerate_general(inst.past(), n, DEFAULT_TUPLE_GUARD).unwrap().to_vec();
            inst_general.sort();
            prop_assert_eq!(fast_tuples, inst_general);

            let mut s = BitSet::from_mask(smask & ((1 << (n + 1)) - 1));
            s.insert(0);
            for t in general.iter() {
                let (lo, hi) = oracle_rho(t, &s, &past, n, &r);
                prop_assert_eq!(rho(t, &s, &past, &r).unwrap(), lo);
                prop_assert_eq!(rho_max(t, &s, &past, &r).unwrap(), hi);
                if m == 2 {
                    let within = s.intersection(&past[0].union(&past[1]));
                    let lo_within = oracle_rho(t, &within, &past, n, &r).0;
                    prop_assert_eq!(rho_two((t[0], t[1]), &within, &past[0], &past[1], &r).unwrap(), lo_within);
                }
                let g = TupleGraph::new(t, &past).unwrap();
                let targets: BitSet = t.iter().copied().collect();
                prop_assert!(g.vertices_with_in_edges().is_subset(&targets));
            }
        }

        #[test]
        fn nested_prefix_matches_graph_rho(seed in 0u64..1_000_000, n in 2usize..=6, smask in 0u64..128) {
            use rand::seq::SliceRandom;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (1..=n).collect();
            perm.shuffle(&mut rng);
            let cut = rng.gen_range(1..n);
            let past = vec![
                std::iter::once(0).chain(perm[..cut].iter().copied()).collect::<BitSet>(),
                BitSet::full(n + 1),
            ];
            let mut s = BitSet::from_mask(smask & ((1 << (n + 1)) - 1));
            s.insert(0);
            let inst = inst_from(past.clone(), n);
            let l = build_feasible_tuples(&inst).unwrap();
            let blocks = [past[0].len() as u128, 1 + (past[1].len() - past[0].len()) as u128];
            prop_assert_eq!(l.len() as u128, blocks[0] * blocks[1]);
            prop_assert!(l.len() >= 2);
            for t in l.iter() {
                let prefix = rho_nested_prefix(t, &s, inst.past(), inst.revenues()).unwrap();
                let direct = rho(t, &s, inst.past(), inst.revenues()).unwrap();
                prop_assert_eq!(*prefix.last().unwrap(), direct);
                for (m, &val) in prefix.iter().enumerate() {
                    let sm = s.intersection(&inst.past()[m]);
                    let sub = &inst.past()[..=m];
                    prop_assert_eq!(val, rho(&t[..=m], &sm, sub, inst.revenues()).unwrap());
                }
            }
        }
    }
}
