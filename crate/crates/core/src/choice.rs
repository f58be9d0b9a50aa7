//! Ranking-based choice models.
//!
//! A ranking is stored as a position array: `sigma[i]` is the rank of product
//! `i`, and a lower rank is preferred. Customers pick the highest-ranked
//! offered product.

use serde::{Deserialize, Serialize};

use crate::bitset::Assortment;
use crate::error::{Error, Result};
use crate::instance::{Instance, Norm};

/// Tolerance used for `||eps|| <= eta` membership and weight sums.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Largest `n` accepted by [`enumerate_rankings`].
pub const MAX_ENUM_N: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ranking {
    sigma: Vec<usize>,
}

impl Ranking {
    /// Build from a position array, checking it is a permutation.
    pub fn new(sigma: Vec<usize>) -> Result<Ranking> {
        let mut seen = vec![false; sigma.len()];
        for &p in &sigma {
            if p >= sigma.len() || seen[p] {
                return Err(Error::Malformed(format!("{sigma:?} is not a permutation")));
            }
            seen[p] = true;
        }
        Ok(Ranking { sigma })
    }

    /// Build from a preference order, most preferred product first.
    pub fn from_order(order: &[usize]) -> Result<Ranking> {
        let mut sigma = vec![usize::MAX; order.len()];
        for (rank, &i) in order.iter().enumerate() {
            if i >= order.len() || sigma[i] != usize::MAX {
                return Err(Error::Malformed(format!("{order:?} is not a permutation")));
            }
            sigma[i] = rank;
        }
        Ok(Ranking { sigma })
    }

    /// The identity ranking on `{0, ..., n}`.
    pub fn identity(n: usize) -> Ranking {
        Ranking { sigma: (0..=n).collect() }
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn rank(&self, i: usize) -> usize {
        self.sigma[i]
    }

    /// Products listed from most to least preferred.
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.sigma.len()];
        for (i, &p) in self.sigma.iter().enumerate() {
            order[p] = i;
        }
        order
    }

    pub fn top_choice(&self, s: &Assortment) -> usize {
        top_choice(self, s)
    }
}

/// The product in `s` with the lowest rank.
pub fn top_choice(sigma: &Ranking, s: &Assortment) -> usize {
    s.iter().min_by_key(|&i| sigma.sigma[i]).expect("assortment is nonempty")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub sigma: Ranking,
    pub weight: f64,
}

/// Sparse distribution over rankings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingModel {
    pub atoms: Vec<Atom>,
}

impl RankingModel {
    /// Build a model, merging repeated rankings and dropping zero weights.
    pub fn new(atoms: Vec<(Ranking, f64)>) -> Result<RankingModel> {
        let mut merged: Vec<(Ranking, f64)> = Vec::with_capacity(atoms.len());
        let len = atoms.first().map(|a| a.0.sigma.len());
        for (r, w) in atoms {
            if Some(r.sigma.len()) != len {
                return Err(Error::Malformed("rankings of different lengths".into()));
            }
            if !(w >= 0.0) {
                return Err(Error::Malformed(format!("negative weight {w}")));
            }
            if w == 0.0 {
                continue;
            }
            match merged.iter_mut().find(|(q, _)| *q == r) {
                Some(entry) => entry.1 += w,
                None => merged.push((r, w)),
            }
        }
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > CONSISTENCY_TOL {
            return Err(Error::Malformed(format!("weights sum to {total}")));
        }
        Ok(RankingModel { atoms: merged.into_iter().map(|(sigma, weight)| Atom { sigma, weight }).collect() })
    }

    pub fn from_json(text: &str) -> Result<RankingModel> {
        let raw: RankingModel = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        RankingModel::new(raw.atoms.into_iter().map(|a| (a.sigma, a.weight)).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn demand(&self, s: &Assortment) -> Vec<f64> {
        demand(self, s)
    }

    pub fn expected_revenue(&self, revenues: &[f64], s: &Assortment) -> f64 {
        expected_revenue(self, revenues, s)
    }
}

/// Choice probabilities over `{0, ..., n}` when `s` is offered.
pub fn demand(model: &RankingModel, s: &Assortment) -> Vec<f64> {
    let len = model.atoms.first().map_or(0, |a| a.sigma.sigma.len());
    let mut d = vec![0.0; len];
    for a in &model.atoms {
        d[top_choice(&a.sigma, s)] += a.weight;
    }
    // weights sum to 1 only up to rounding
    for x in &mut d {
        *x = x.min(1.0);
    }
    d
}

/// `r^T D(s)`.
pub fn expected_revenue(model: &RankingModel, revenues: &[f64], s: &Assortment) -> f64 {
    model.atoms.iter().map(|a| a.weight * revenues[top_choice(&a.sigma, s)]).sum()
}

/// Residual of a norm-ball constraint over per-assortment component lists.
pub fn norm_value(norm: Norm, eps: &[Vec<f64>]) -> f64 {
    let it = eps.iter().flatten().map(|e| e.abs());
    match norm {
        Norm::L1 => it.sum(),
        Norm::Linf => it.fold(0.0, f64::max),
    }
}

/// Residuals `eps_{m,i} = D_i(S_m) - v_{m,i}` (dense, zero outside `S_m`) and their norm.
pub fn consistency_residual(model: &RankingModel, inst: &Instance) -> (Vec<Vec<f64>>, f64) {
    let eps: Vec<Vec<f64>> = inst
        .past()
        .iter()
        .enumerate()
        .map(|(m, s)| {
            let d = demand(model, s);
            let v = inst.sales(m);
            (0..=inst.n()).map(|i| if s.contains(i) { d[i] - v[i] } else { 0.0 }).collect()
        })
        .collect();
    let value = norm_value(inst.norm(), &eps);
    (eps, value)
}

/// True when the model lies in the uncertainty set of `inst`.
pub fn is_consistent(model: &RankingModel, inst: &Instance) -> bool {
    consistency_residual(model, inst).1 <= inst.eta() + CONSISTENCY_TOL
}

/// All `(n+1)!` rankings, position arrays in lexicographic order.
pub fn enumerate_rankings(n: usize) -> Result<RankingIter> {
    if n > MAX_ENUM_N {
        return Err(Error::TooLarge { what: "ranking space n", size: n as u128, limit: MAX_ENUM_N as u128 });
    }
    Ok(RankingIter { next: Some((0..=n).collect()) })
}

/// Lexicographic permutation iterator.
pub struct RankingIter {
    next: Option<Vec<usize>>,
}

impl Iterator for RankingIter {
    type Item = Ranking;

    fn next(&mut self) -> Option<Ranking> {
        let cur = self.next.take()?;
        let mut p = cur.clone();
        if next_permutation(&mut p) {
            self.next = Some(p);
        }
        Some(Ranking { sigma: cur })
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
