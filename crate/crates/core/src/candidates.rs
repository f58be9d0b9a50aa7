//! The candidate collection: assortments closed under dominance.
//!
//! Product `a` dominates into `b` when `r_a < r_b` and every past assortment
//! offering `a` also offers `b`. Some robust-optimal assortment is always
//! closed under these edges, so only closed assortments containing 0 need to
//! be evaluated.

use serde::Serialize;

use crate::bitset::{Assortment, BitSet};
use crate::error::{Error, Result};
use crate::instance::Instance;

/// Default cap on the number of candidates.
pub const DEFAULT_CANDIDATE_GUARD: usize = 1 << 24;

/// Dominance relation `a -> b`; transitively closed and acyclic by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DominanceGraph {
    offering: Vec<BitSet>,
    succ: Vec<BitSet>,
    pred: Vec<BitSet>,
}

impl DominanceGraph {
    pub fn num_vertices(&self) -> usize {
        self.succ.len()
    }

    /// `M_i`, the past assortments offering product `i`.
    pub fn offering(&self, i: usize) -> &BitSet {
        &self.offering[i]
    }

    pub fn successors(&self, i: usize) -> &BitSet {
        &self.succ[i]
    }

    pub fn predecessors(&self, i: usize) -> &BitSet {
        &self.pred[i]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.succ[a].contains(b)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.succ.len()).flat_map(|a| self.succ[a].iter().map(move |b| (a, b))).collect()
    }

    pub fn is_transitive(&self) -> bool {
        (0..self.succ.len()).all(|a| self.succ[a].iter().all(|b| self.succ[b].is_subset(&self.succ[a])))
    }

    /// True when `s` contains every successor of each of its members.
    pub fn is_closed(&self, s: &BitSet) -> bool {
        s.iter().all(|a| a < self.succ.len() && self.succ[a].is_subset(s))
    }
}

pub fn build_dominance_graph(inst: &Instance) -> DominanceGraph {
    let offering = inst.offering_sets();
    let nv = inst.n() + 1;
    let mut succ = vec![BitSet::new(); nv];
    let mut pred = vec![BitSet::new(); nv];
    // internal indices are sorted by revenue
    for a in 0..nv {
        for b in a + 1..nv {
            if offering[a].is_subset(&offering[b]) {
                succ[a].insert(b);
                pred[b].insert(a);
            }
        }
    }
    let g = DominanceGraph { offering, succ, pred };
    debug_assert!(g.is_transitive());
    g
}

/// Pivot rule for the recursive enumeration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Pivot {
    /// Vertex with the most neighbours inside the current subgraph.
    #[default]
    MaxDegree,
    LowestIndex,
}

/// Sorted list of candidate assortments.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CandidateSet {
    pub assortments: Vec<Assortment>,
}

impl CandidateSet {
    fn from_unsorted(mut v: Vec<Assortment>) -> CandidateSet {
        v.sort();
        v.dedup();
        CandidateSet { assortments: v }
    }

    pub fn len(&self) -> usize {
        self.assortments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assortments.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Assortment> {
        self.assortments.iter()
    }

    pub fn contains(&self, s: &Assortment) -> bool {
        self.assortments.binary_search(s).is_ok()
    }
}

/// All closed assortments containing 0.
pub fn enumerate_candidates(inst: &Instance) -> Result<CandidateSet> {
    enumerate_candidates_with(inst, Pivot::MaxDegree, DEFAULT_CANDIDATE_GUARD)
}

pub fn enumerate_candidates_with(inst: &Instance, pivot: Pivot, guard: usize) -> Result<CandidateSet> {
    let g = build_dominance_graph(inst);
    let mut forced = g.succ[0].clone();
    forced.insert(0);
    let rest = BitSet::full(g.num_vertices()).difference(&forced);
    let mut out = Vec::new();
    recurse(&g, rest, forced, pivot, guard, &mut out)?;
    Ok(CandidateSet::from_unsorted(out))
}

/// Emit `base u T` for every closed subset `T` of the subgraph on `verts`.
fn recurse(g: &DominanceGraph, verts: BitSet, base: BitSet, pivot: Pivot, guard: usize, out: &mut Vec<BitSet>) -> Result<()> {
    let Some(i) = choose_pivot(g, &verts, pivot) else {
        if out.len() >= guard {
            return Err(Error::ExplosionGuard {
                what: "candidate collection",
                size: out.len() as u128 + 1,
                limit: guard as u128,
            });
        }
        out.push(base);
        return Ok(());
    };
    // i excluded: so are its predecessors
    let mut drop = g.pred[i].intersection(&verts);
    drop.insert(i);
    recurse(g, verts.difference(&drop), base.clone(), pivot, guard, out)?;
    // i included: so are its successors
    let mut take = g.succ[i].intersection(&verts);
    take.insert(i);
    let base = base.union(&take);
    recurse(g, verts.difference(&take), base, pivot, guard, out)
}

fn choose_pivot(g: &DominanceGraph, verts: &BitSet, pivot: Pivot) -> Option<usize> {
    match pivot {
        Pivot::LowestIndex => verts.min_item(),
        Pivot::MaxDegree => {
            let mut best: Option<(usize, usize)> = None;
            for v in verts.iter() {
                let deg = g.succ[v].intersection(verts).len() + g.pred[v].intersection(verts).len();
                if best.is_none_or(|(d, _)| deg > d) {
                    best = Some((deg, v));
                }
            }
            best.map(|(_, v)| v)
        }
    }
}

/// Direct closure test.
pub fn is_candidate(inst: &Instance, s: &Assortment) -> bool {
    s.contains(0) && build_dominance_graph(inst).is_closed(s)
}

/// Closed form for two past assortments: with `A = S_1 \ S_2`,
/// `B = S_2 \ S_1`, `C = S_1 n S_2`, the candidates are
/// `C u {j in A : j >= i_1} u {j in B : j >= i_2}` over every choice of
/// thresholds (including "none"). Computed on the offered products and
/// reported in the indices of `inst`.
pub fn candidates_two(inst: &Instance) -> Result<CandidateSet> {
    if inst.num_past() != 2 {
        return Err(Error::NotTwoAssortments(inst.num_past()));
    }
    let r = inst.restrict_to_offered();
    let (s1, s2) = (&r.past()[0], &r.past()[1]);
    let a = s1.difference(s2).to_vec();
    let b = s2.difference(s1).to_vec();
    let c = s1.intersection(s2);
    let mut out = Vec::with_capacity((a.len() + 1) * (b.len() + 1));
    for ka in 0..=a.len() {
        for kb in 0..=b.len() {
            let mut s = c.clone();
            s.union_with(&a[ka..].iter().copied().collect());
            s.union_with(&b[kb..].iter().copied().collect());
            out.push(r.translate(inst, &s));
        }
    }
    Ok(CandidateSet::from_unsorted(out))
}

/// The revenue-ordered assortments `{0, m, ..., n}` for `m = 1..n`.
pub fn revenue_ordered_assortments(n: usize) -> CandidateSet {
    CandidateSet::from_unsorted((1..=n).map(|m| std::iter::once(0).chain(m..=n).collect()).collect())
}

/// Every assortment containing both 0 and `n`.
pub fn assortments_containing_top(n: usize) -> Result<CandidateSet> {
    if n == 0 {
        return Ok(CandidateSet { assortments: vec![BitSet::from_slice(&[0])] });
    }
    if n > 25 {
        return Err(Error::ExplosionGuard { what: "candidate collection", size: 1u128 << (n - 1), limit: DEFAULT_CANDIDATE_GUARD as u128 });
    }
    let free = n - 1;
    let out = (0u64..1 << free)
        .map(|bits| {
            let mut s: BitSet = (0..free).filter(|k| bits >> k & 1 == 1).map(|k| k + 1).collect();
            s.insert(0);
            s.insert(n);
            s
        })
        .collect();
    Ok(CandidateSet::from_unsorted(out))
}

/// Every assortment containing 0 (`2^n` of them).
pub fn all_assortments(n: usize) -> Result<CandidateSet> {
    if n > 24 {
        return Err(Error::ExplosionGuard { what: "assortment space", size: 1u128 << n, limit: DEFAULT_CANDIDATE_GUARD as u128 });
    }
    let out = (0u64..1 << n).map(|bits| BitSet::from_mask((bits << 1) | 1)).collect();
    Ok(CandidateSet { assortments: out })
}
