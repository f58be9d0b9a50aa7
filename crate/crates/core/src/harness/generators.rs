//! Seeded random instances.
//!
//! Every instance is a deterministic function of `(kind, params, seed)`.
//! Simulation kinds draw a ranking model `lambda*` and record its exact
//! choice probabilities as sales, so the data are consistent at `eta = 0`.

use std::collections::BTreeSet;

use num_bigint::{BigUint, RandBigInt};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bitset::{Assortment, BitSet};
use crate::choice::{demand, enumerate_rankings, Ranking, RankingModel};
use crate::error::{Error, Result};
use crate::instance::{Instance, Norm};

/// Largest `n` for which a full-support `lambda*` is drawn.
pub const MAX_FULL_SUPPORT_N: usize = 8;

/// Default number of rankings in a sparse `lambda*` for nested instances.
pub const DEFAULT_NESTED_K: usize = 80;

/// Default number of rankings in a sparse `lambda*` for two-assortment instances.
pub const DEFAULT_TWO_K: usize = 10;

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    /// Past assortments `{0, m, ..., n}` for `m = 1..n`; full-support `lambda*` unless `k` is set.
    RevOrdered,
    /// Two random past assortments sharing `{0, n}`; `k`-sparse `lambda*`.
    Two,
    /// A random chain of `m` nested past assortments ending in all products; `k`-sparse `lambda*`.
    Nested,
    /// Reverse revenue-ordered past assortments with data making `sbar` the unique robust optimum.
    Adversarial,
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<GeneratorKind> {
        match s {
            "revordered" => Ok(GeneratorKind::RevOrdered),
            "two" => Ok(GeneratorKind::Two),
            "nested" => Ok(GeneratorKind::Nested),
            "adversarial" => Ok(GeneratorKind::Adversarial),
            _ => Err(Error::BadParams(format!("unknown generator kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GenParams {
    pub n: usize,
    /// Number of past assortments (nested kind).
    pub m: Option<usize>,
    /// Support size of `lambda*`.
    pub k: Option<usize>,
    /// Target assortment (adversarial kind).
    pub sbar: Option<Vec<usize>>,
}

impl GenParams {
    pub fn new(n: usize) -> GenParams {
        GenParams { n, ..GenParams::default() }
    }
}

/// Build an instance of the given kind.
pub fn generate(kind: GeneratorKind, params: &GenParams, seed: u64) -> Result<Instance> {
    let mut rng = rng_from_seed(seed);
    let n = params.n;
    if n == 0 {
        return Err(Error::BadParams("n must be at least 1".into()));
    }
    match kind {
        GeneratorKind::RevOrdered => {
            let revenues = uniform_revenues(&mut rng, n);
            let past: Vec<Assortment> = (1..=n).map(|m| std::iter::once(0).chain(m..=n).collect()).collect();
            let model = match params.k {
                Some(k) => sparse_model(&mut rng, n, k)?,
                None => full_model(&mut rng, n)?,
            };
            simulated(revenues, past, &model)
        }
        GeneratorKind::Two => {
            if n < 2 {
                return Err(Error::BadParams("two-assortment kind needs n >= 2".into()));
            }
            let revenues = uniform_revenues(&mut rng, n);
            // redraw until the two assortments differ
            let (s1, s2) = loop {
                let mut s1 = BitSet::from_slice(&[0, n]);
                let mut s2 = s1.clone();
                for j in 1..n {
                    match rng.gen_range(0..3) {
                        0 => {
                            s1.insert(j);
                            s2.insert(j);
                        }
                        1 => {
                            s1.insert(j);
                        }
                        _ => {
                            s2.insert(j);
                        }
                    }
                }
                if s1 != s2 {
                    break (s1, s2);
                }
            };
            let model = sparse_model(&mut rng, n, default_support(n, params.k, DEFAULT_TWO_K))?;
            simulated(revenues, vec![s1, s2], &model)
        }
        GeneratorKind::Nested => {
            let m = params.m.unwrap_or(2);
            if m == 0 || m > n {
                return Err(Error::BadParams(format!("nested kind needs 1 <= m <= n, got m = {m}, n = {n}")));
            }
            let revenues = integer_revenues(&mut rng, n)?;
            let mut perm: Vec<usize> = (1..=n).collect();
            perm.shuffle(&mut rng);
            let mut cuts: Vec<usize> = index::sample(&mut rng, n - 1, m - 1).into_iter().map(|q| q + 1).collect();
            cuts.sort_unstable();
            let mut past: Vec<Assortment> = cuts.iter().map(|&q| std::iter::once(0).chain(perm[..q].iter().copied()).collect()).collect();
            past.push(BitSet::full(n + 1));
            let model = sparse_model(&mut rng, n, default_support(n, params.k, DEFAULT_NESTED_K))?;
            simulated(revenues, past, &model)
        }
        GeneratorKind::Adversarial => {
            let sbar = params.sbar.as_ref().ok_or_else(|| Error::BadParams("adversarial kind needs sbar".into()))?;
            adversarial_instance(adversarial_revenues(n), &BitSet::from_slice(sbar))
        }
    }
}

/// `n` distinct revenues from `Uniform(0, 1)`, sorted.
pub fn uniform_revenues(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut set: BTreeSet<u64> = BTreeSet::new();
    while set.len() < n {
        let r: f64 = rng.gen();
        if r > 0.0 {
            set.insert(r.to_bits());
        }
    }
    set.into_iter().map(f64::from_bits).collect()
}

/// `n` distinct revenues from `Uniform{1, ..., 10000}`, sorted.
pub fn integer_revenues(rng: &mut ChaCha8Rng, n: usize) -> Result<Vec<f64>> {
    if n > 10_000 {
        return Err(Error::BadParams("at most 10000 distinct integer revenues".into()));
    }
    let mut r: Vec<f64> = index::sample(rng, 10_000, n).into_iter().map(|v| (v + 1) as f64).collect();
    r.sort_by(f64::total_cmp);
    Ok(r)
}

/// Uniform point of the simplex via normalized `log(u)` draws.
fn simplex_weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    // 1 - gen() lies in (0, 1], so every log is finite
    let logs: Vec<f64> = (0..k).map(|_| (1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = logs.iter().sum();
    if total == 0.0 {
        return vec![1.0 / k as f64; k];
    }
    logs.iter().map(|l| l / total).collect()
}

/// A weight on every one of the `(n+1)!` rankings.
pub fn full_model(rng: &mut ChaCha8Rng, n: usize) -> Result<RankingModel> {
    if n > MAX_FULL_SUPPORT_N {
        return Err(Error::BadParams(format!("full-support model needs n <= {MAX_FULL_SUPPORT_N}")));
    }
    let rankings: Vec<Ranking> = enumerate_rankings(n)?.collect();
    let w = simplex_weights(rng, rankings.len());
    RankingModel::new(rankings.into_iter().zip(w).collect())
}

/// `k` distinct rankings drawn uniformly (Floyd's subset sampling over
/// ranking indices), with uniform simplex weights.
pub fn sparse_model(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Result<RankingModel> {
    if k == 0 {
        return Err(Error::BadParams("k must be at least 1".into()));
    }
    let total: BigUint = (1..=n as u64 + 1).map(BigUint::from).product();
    let kb = BigUint::from(k as u64);
    if kb > total {
        return Err(Error::BadParams(format!("k = {k} exceeds the {total} rankings of {n} products")));
    }
    let mut chosen: BTreeSet<BigUint> = BTreeSet::new();
    let mut j = &total - &kb;
    while j < total {
        let t = rng.gen_biguint_below(&(&j + 1u32));
        if !chosen.insert(t) {
            chosen.insert(j.clone());
        }
        j += 1u32;
    }
    let w = simplex_weights(rng, k);
    let atoms = chosen.into_iter().map(|idx| unrank(idx, n)).zip(w).collect();
    RankingModel::new(atoms)
}

/// Ranking number `idx` of `{0, ..., n}` in lexicographic order of preference lists.
fn unrank(mut idx: BigUint, n: usize) -> Ranking {
    let mut items: Vec<usize> = (0..=n).collect();
    let mut fact: BigUint = (1..=n as u64).map(BigUint::from).product();
    let mut order = Vec::with_capacity(n + 1);
    for rest in (0..=n).rev() {
        let d = &idx / &fact;
        idx %= &fact;
        let d: usize = d.try_into().expect("digit is small");
        order.push(items.remove(d));
        if rest > 0 {
            fact /= BigUint::from(rest as u64);
        }
    }
    Ranking::from_order(&order).expect("unranked order is a permutation")
}

fn simulated(revenues: Vec<f64>, past: Vec<Assortment>, model: &RankingModel) -> Result<Instance> {
    let sales = past.iter().map(|s| demand(model, s)).collect();
    Instance::new(revenues, past, sales, 0.0, Norm::Linf)
}

/// Reverse revenue-ordered past assortments `{0, 1, ..., m-1, n}` with sales
/// `v_{m,n} = (1 + |{m..n-1} \ sbar|) / n`, `v_{m,0} = |{m..n-1} n sbar| / n`
/// and `1/n` for every other offered product.
pub fn adversarial_instance(revenues: Vec<f64>, sbar: &Assortment) -> Result<Instance> {
    let n = revenues.len();
    if n < 2 || !sbar.contains(0) || !sbar.contains(n) || sbar.max_item() != Some(n) {
        return Err(Error::BadParams(format!("sbar must contain 0 and {n} and lie in 0..={n}, n >= 2")));
    }
    let nf = n as f64;
    let mut past = Vec::with_capacity(n);
    let mut sales = Vec::with_capacity(n);
    for m in 1..=n {
        let s: Assortment = (0..m).chain(std::iter::once(n)).collect();
        let tail_in = (m..n).filter(|&j| sbar.contains(j)).count() as f64;
        let tail_out = (m..n).filter(|&j| !sbar.contains(j)).count() as f64;
        let mut v = vec![0.0; n + 1];
        for i in s.iter() {
            v[i] = match i {
                0 => tail_in / nf,
                i if i == n => (1.0 + tail_out) / nf,
                _ => 1.0 / nf,
            };
        }
        past.push(s);
        sales.push(v);
    }
    Instance::new(revenues, past, sales, 0.0, Norm::Linf)
}

/// Explicit `k`, or `default` capped at the `n!` rankings available.
fn default_support(n: usize, k: Option<usize>, default: usize) -> usize {
    k.unwrap_or_else(|| {
        let mut total = 1usize;
        for i in 2..=n {
            total = total.saturating_mul(i);
            if total >= default {
                return default;
            }
        }
        default.min(total)
    })
}

/// Revenues `r_i = 1 + i / n^2`. The spread `r_n - r_1 < 1/n` keeps the
/// target the unique optimum; with widely spread revenues it can fail (see
/// the `wide_revenue_spread_breaks_uniqueness` test).
pub fn adversarial_revenues(n: usize) -> Vec<f64> {
    let nn = (n * n) as f64;
    (1..=n).map(|i| 1.0 + i as f64 / nn).collect()
}

/// The tuple weights consistent with [`adversarial_instance`]: `1/n` on
/// `(0,..,0,j,..,j)` for `j` in `sbar \ {0, n}`, on `(n,..,n,j,..,j)` for
/// `j` outside `sbar`, and on `(n,..,n)`. Entry `j` is the first `j`.
pub fn adversarial_tuples(n: usize, sbar: &Assortment) -> Vec<(Vec<usize>, f64)> {
    let w = 1.0 / n as f64;
    let mut out = Vec::with_capacity(n);
    for j in 1..n {
        let head = if sbar.contains(j) { 0 } else { n };
        let t: Vec<usize> = (1..=n).map(|m| if m <= j { head } else { j }).collect();
        out.push((t, w));
    }
    out.push((vec![n; n], w));
    out
}
