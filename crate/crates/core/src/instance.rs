//! Problem instances: products, revenues, past assortments and their sales.
//!
//! Products are relabelled on ingest so that internal index order equals
//! revenue order (`r_1 < ... < r_n`, with `r_0 = 0` for the no-purchase
//! option). The original labels are kept so results can be reported in the
//! caller's numbering.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bitset::{Assortment, BitSet};
use crate::error::{Error, Result};

/// Tolerance on `sum_i v_{m,i} = 1`.
pub const FREQ_SUM_TOL: f64 = 1e-9;

/// Norm used for the residual ball `||eps|| <= eta`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    #[default]
    Linf,
}

/// Sales record as it appears in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSales {
    pub assortment: usize,
    pub freq: BTreeMap<String, f64>,
}

/// Instance exactly as it appears in JSON, before validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    pub n: usize,
    /// `revenues[k]` is the revenue of product `k + 1`.
    pub revenues: Vec<f64>,
    pub past_assortments: Vec<Vec<usize>>,
    pub sales: Vec<RawSales>,
    pub eta: f64,
    #[serde(default)]
    pub norm: Norm,
}

/// Validated instance. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    revenues: Vec<f64>,
    past: Vec<Assortment>,
    sales: Vec<Vec<f64>>,
    eta: f64,
    norm: Norm,
    labels: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StructureKind {
    RevenueOrderedComplete,
    Nested,
    TwoAssortments,
    General,
}

/// Structural classification used to pick specialised algorithms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureTag {
    pub kind: StructureKind,
    pub is_nested: bool,
    pub covers_all_products: bool,
    /// Past-assortment indices in strictly increasing chain order, when nested.
    pub chain: Option<Vec<usize>>,
}

impl Instance {
    /// Build and validate an instance.
    ///
    /// `revenues[k]` is the revenue of product label `k + 1`. Past assortments
    /// and the dense sales vectors (length `n + 1`) use the same labels.
    pub fn new(
        revenues: Vec<f64>,
        past: Vec<Assortment>,
        sales: Vec<Vec<f64>>,
        eta: f64,
        norm: Norm,
    ) -> Result<Instance> {
        let n = revenues.len();
        for (k, &r) in revenues.iter().enumerate() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::NonPositiveRevenue { product: k + 1, value: r });
            }
        }
        // labels[internal] = original label, internal order by revenue
        let mut labels: Vec<usize> = (1..=n).collect();
        labels.sort_by(|&a, &b| revenues[a - 1].total_cmp(&revenues[b - 1]));
        for w in labels.windows(2) {
            if revenues[w[0] - 1] >= revenues[w[1] - 1] {
                return Err(Error::DuplicateRevenue { value: revenues[w[0] - 1] });
            }
        }
        labels.insert(0, 0);
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::NegativeEta(eta));
        }
        if sales.len() != past.len() {
            return Err(Error::Malformed(format!(
                "{} past assortments but {} sales vectors",
                past.len(),
                sales.len()
            )));
        }
        for (m, s) in past.iter().enumerate() {
            if let Some(mx) = s.max_item() {
                if mx > n {
                    return Err(Error::IndexOutOfRange { what: "product", index: mx, len: n + 1 });
                }
            }
            if !s.contains(0) {
                return Err(Error::MissingNoPurchase { assortment: m });
            }
        }
        for (m, v) in sales.iter().enumerate() {
            if v.len() != n + 1 {
                return Err(Error::Malformed(format!("sales vector {m} has length {}, expected {}", v.len(), n + 1)));
            }
            let mut sum = 0.0;
            for (i, &x) in v.iter().enumerate() {
                if !past[m].contains(i) {
                    if x != 0.0 {
                        return Err(Error::Malformed(format!(
                            "frequency for product {i} outside past assortment {m}"
                        )));
                    }
                    continue;
                }
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::FrequencyOutOfRange { assortment: m, product: i, value: x });
                }
                sum += x;
            }
            if (sum - 1.0).abs() > FREQ_SUM_TOL {
                return Err(Error::FrequencySumViolation { assortment: m, sum });
            }
        }

        let mut internal_of = vec![0usize; n + 1];
        for (k, &l) in labels.iter().enumerate() {
            internal_of[l] = k;
        }
        let mut r = vec![0.0; n + 1];
        for k in 1..=n {
            r[k] = revenues[labels[k] - 1];
        }
        let mut out_past: Vec<Assortment> = Vec::new();
        let mut out_sales: Vec<Vec<f64>> = Vec::new();
        for (s, v) in past.iter().zip(&sales) {
            let s2: Assortment = s.iter().map(|i| internal_of[i]).collect();
            let mut v2 = vec![0.0; n + 1];
            for i in s.iter() {
                v2[internal_of[i]] = v[i];
            }
            let dup = out_past.iter().zip(&out_sales).any(|(p, q)| p == &s2 && q == &v2);
            if dup {
                log::warn!("dropping repeated past assortment {s2} with identical sales");
                continue;
            }
            out_past.push(s2);
            out_sales.push(v2);
        }
        Ok(Instance { revenues: r, past: out_past, sales: out_sales, eta, norm, labels })
    }

    /// Validate a raw JSON instance.
    pub fn from_raw(raw: &RawInstance) -> Result<Instance> {
        if raw.revenues.len() != raw.n {
            return Err(Error::Malformed(format!(
                "n = {} but {} revenues given",
                raw.n,
                raw.revenues.len()
            )));
        }
        let n = raw.n;
        let mut past = Vec::with_capacity(raw.past_assortments.len());
        for s in &raw.past_assortments {
            let mut set = BitSet::new();
            for &i in s {
                if i > n {
                    return Err(Error::IndexOutOfRange { what: "product", index: i, len: n + 1 });
                }
                set.insert(i);
            }
            past.push(set);
        }
        let mut sales: Vec<Option<Vec<f64>>> = vec![None; past.len()];
        for rec in &raw.sales {
            if rec.assortment >= past.len() {
                return Err(Error::IndexOutOfRange {
                    what: "past assortment",
                    index: rec.assortment,
                    len: past.len(),
                });
            }
            if sales[rec.assortment].is_some() {
                return Err(Error::Malformed(format!("duplicate sales for assortment {}", rec.assortment)));
            }
            let mut v = vec![0.0; n + 1];
            for (key, &x) in &rec.freq {
                let i: usize = key
                    .trim()
                    .parse()
                    .map_err(|_| Error::Malformed(format!("product key {key:?} is not an integer")))?;
                if i > n {
                    return Err(Error::IndexOutOfRange { what: "product", index: i, len: n + 1 });
                }
                v[i] = x;
            }
            sales[rec.assortment] = Some(v);
        }
        let sales = sales
            .into_iter()
            .enumerate()
            .map(|(m, v)| v.ok_or(Error::FrequencySumViolation { assortment: m, sum: 0.0 }))
            .collect::<Result<Vec<_>>>()?;
        Instance::new(raw.revenues.clone(), past, sales, raw.eta, raw.norm)
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        let raw: RawInstance = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        Instance::from_raw(&raw)
    }

    /// Serialise back to the raw form, using original product labels.
    pub fn to_raw(&self) -> RawInstance {
        let n = self.n();
        let mut revenues = vec![0.0; n];
        for k in 1..=n {
            revenues[self.labels[k] - 1] = self.revenues[k];
        }
        let past_assortments = self.past.iter().map(|s| self.to_labels(s)).collect();
        let sales = self
            .sales
            .iter()
            .enumerate()
            .map(|(m, v)| RawSales {
                assortment: m,
                freq: self.past[m].iter().map(|i| (self.labels[i].to_string(), v[i])).collect(),
            })
            .collect();
        RawInstance { n, revenues, past_assortments, sales, eta: self.eta, norm: self.norm }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("instance serialises")
    }

    /// Number of revenue-bearing products.
    pub fn n(&self) -> usize {
        self.revenues.len() - 1
    }

    /// Number of (distinct) past assortments `M`.
    pub fn num_past(&self) -> usize {
        self.past.len()
    }

    /// Revenues indexed by internal product index; entry 0 is the no-purchase option.
    pub fn revenues(&self) -> &[f64] {
        &self.revenues
    }

    pub fn revenue(&self, i: usize) -> f64 {
        self.revenues[i]
    }

    /// Largest revenue `r_n`.
    pub fn r_max(&self) -> f64 {
        *self.revenues.last().expect("revenues never empty")
    }

    pub fn past(&self) -> &[Assortment] {
        &self.past
    }

    /// Dense sales vector of past assortment `m` (0-based), zero outside `S_m`.
    pub fn sales(&self, m: usize) -> &[f64] {
        &self.sales[m]
    }

    pub fn all_sales(&self) -> &[Vec<f64>] {
        &self.sales
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn with_eta(&self, eta: f64) -> Result<Instance> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::NegativeEta(eta));
        }
        Ok(Instance { eta, ..self.clone() })
    }

    pub fn with_norm(&self, norm: Norm) -> Instance {
        Instance { norm, ..self.clone() }
    }

    /// Original label of each internal product index.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn internal_of_label(&self, label: usize) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Assortment in original labels, sorted.
    pub fn to_labels(&self, s: &Assortment) -> Vec<usize> {
        let mut v: Vec<usize> = s.iter().map(|i| self.labels[i]).collect();
        v.sort_unstable();
        v
    }

    /// Assortment given in original labels, converted to internal indices.
    pub fn from_labels(&self, labels: &[usize]) -> Result<Assortment> {
        labels
            .iter()
            .map(|&l| {
                self.internal_of_label(l)
                    .ok_or(Error::IndexOutOfRange { what: "product", index: l, len: self.n() + 1 })
            })
            .collect()
    }

    /// Re-express an assortment of `self` in the internal indices of `other`
    /// (matching original labels); products unknown to `other` are dropped.
    pub fn translate(&self, other: &Instance, s: &Assortment) -> Assortment {
        s.iter().filter_map(|i| other.internal_of_label(self.labels[i])).collect()
    }

    /// All products `{0, ..., n}`.
    pub fn universe(&self) -> BitSet {
        BitSet::full(self.n() + 1)
    }

    /// Union of the past assortments.
    pub fn offered(&self) -> BitSet {
        let mut u = BitSet::new();
        for s in &self.past {
            u.union_with(s);
        }
        u
    }

    /// `M_i`: the set of past-assortment indices offering product `i`.
    pub fn offering_sets(&self) -> Vec<BitSet> {
        let mut sets = vec![BitSet::new(); self.n() + 1];
        for (m, s) in self.past.iter().enumerate() {
            for i in s.iter() {
                sets[i].insert(m);
            }
        }
        sets
    }

    /// Revenue of past assortment `m` (0-based) under its observed sales.
    pub fn past_revenue(&self, m: usize) -> Result<f64> {
        let v = self.sales.get(m).ok_or(Error::IndexOutOfRange {
            what: "past assortment",
            index: m,
            len: self.past.len(),
        })?;
        Ok(v.iter().zip(&self.revenues).map(|(a, b)| a * b).sum())
    }

    /// `max_m r^T v_m`.
    pub fn best_past_revenue(&self) -> f64 {
        (0..self.num_past()).map(|m| self.past_revenue(m).unwrap()).fold(0.0, f64::max)
    }

    /// Past-assortment indices in strict chain order, if the past assortments are nested.
    pub fn nested_order(&self) -> Option<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.past.len()).collect();
        order.sort_by_key(|&m| self.past[m].len());
        for w in order.windows(2) {
            let (a, b) = (&self.past[w[0]], &self.past[w[1]]);
            if a.len() >= b.len() || !a.is_subset(b) {
                return None;
            }
        }
        Some(order)
    }

    /// True when the past assortments, in their stored order, form a strict chain.
    pub fn is_chain_ordered(&self) -> bool {
        self.past.windows(2).all(|w| w[0].len() < w[1].len() && w[0].is_subset(&w[1]))
    }

    /// Copy with past assortments reordered into chain order.
    pub fn canonical_nested(&self) -> Result<Instance> {
        let order = self.nested_order().ok_or(Error::NotNested)?;
        Ok(self.reorder_past(&order))
    }

    fn reorder_past(&self, order: &[usize]) -> Instance {
        Instance {
            past: order.iter().map(|&m| self.past[m].clone()).collect(),
            sales: order.iter().map(|&m| self.sales[m].clone()).collect(),
            ..self.clone()
        }
    }

    pub fn classify(&self) -> StructureTag {
        classify_structure(self)
    }

    /// Copy whose product universe is the union of the past assortments.
    pub fn restrict_to_offered(&self) -> Instance {
        restrict_to_offered(self)
    }
}

/// Free-function form of [`Instance::from_raw`].
pub fn validate_instance(raw: &RawInstance) -> Result<Instance> {
    Instance::from_raw(raw)
}

/// Drop products that were never offered; labels are kept.
pub fn restrict_to_offered(inst: &Instance) -> Instance {
    let keep = inst.offered();
    if keep.len() == inst.n() + 1 {
        return inst.clone();
    }
    let kept: Vec<usize> = keep.to_vec();
    let mut new_of = vec![usize::MAX; inst.n() + 1];
    for (k, &i) in kept.iter().enumerate() {
        new_of[i] = k;
    }
    Instance {
        revenues: kept.iter().map(|&i| inst.revenues[i]).collect(),
        past: inst.past.iter().map(|s| s.iter().map(|i| new_of[i]).collect()).collect(),
        sales: inst.sales.iter().map(|v| kept.iter().map(|&i| v[i]).collect()).collect(),
        eta: inst.eta,
        norm: inst.norm,
        labels: kept.iter().map(|&i| inst.labels[i]).collect(),
    }
}

/// Revenue of past assortment `m` (0-based).
pub fn past_revenue(inst: &Instance, m: usize) -> Result<f64> {
    inst.past_revenue(m)
}

/// Classify the past-assortment structure.
pub fn classify_structure(inst: &Instance) -> StructureTag {
    let n = inst.n();
    let covers_all_products = inst.offered().len() == n + 1;
    let chain = inst.nested_order();
    let is_nested = chain.is_some();
    let mut distinct: Vec<&Assortment> = inst.past.iter().collect();
    distinct.sort();
    distinct.dedup();
    let rev_ordered = n >= 1
        && distinct.len() == n
        && (1..=n).all(|m| {
            let target: BitSet = std::iter::once(0).chain(m..=n).collect();
            distinct.iter().any(|s| **s == target)
        });
    let kind = if rev_ordered {
        StructureKind::RevenueOrderedComplete
    } else if is_nested {
        StructureKind::Nested
    } else if inst.num_past() == 2 {
        StructureKind::TwoAssortments
    } else {
        StructureKind::General
    };
    StructureTag { kind, is_nested, covers_all_products, chain }
}
