//! Monte Carlo experiment runners. Each replication draws its own seed from
//! the master seed, replications run in parallel, and rows come back in
//! replication order.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::generators::{derive_seed, generate, integer_revenues, rng_from_seed, sparse_model, GenParams, GeneratorKind};
use super::{eto_baseline, pareto_grid, pareto_sweep, solve_ro, Method, ParetoRoute};
use crate::bitset::{Assortment, BitSet};
use crate::choice::demand;
use crate::error::{Error, Result};
use crate::instance::{Instance, Norm};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    /// Estimate-then-optimize against the best past assortment, revenue-ordered data.
    Fig1_2,
    /// Robust optimum against the best past assortment, two past assortments.
    Fig3,
    /// Solve time of the two-assortment algorithm as `n` grows.
    Fig4,
    /// Solve time of the nested MILP as `M` grows.
    Fig5,
    /// Pareto frontiers for three nested families.
    Fig6,
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Experiment> {
        match s {
            "fig1_2" => Ok(Experiment::Fig1_2),
            "fig3" => Ok(Experiment::Fig3),
            "fig4" => Ok(Experiment::Fig4),
            "fig5" => Ok(Experiment::Fig5),
            "fig6" => Ok(Experiment::Fig6),
            _ => Err(Error::BadParams(format!("unknown experiment {s:?}"))),
        }
    }
}

/// Experiment parameters; `None` selects the default for the experiment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentParams {
    pub reps: usize,
    pub n: Option<usize>,
    /// Sizes swept by `fig4` (default `10, 12, ..., 40`).
    pub n_values: Option<Vec<usize>>,
    pub k: Option<usize>,
    /// Largest number of past assortments for `fig5` (default 10).
    pub m_max: Option<usize>,
    /// Number of grid points for `fig6` (default 101).
    pub grid: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig12Row {
    pub rep: usize,
    pub best_past: f64,
    pub worst_new: f64,
    pub best_new: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig3Row {
    pub rep: usize,
    pub best_past: f64,
    pub ro_value: f64,
    pub assortment: String,
    pub improves: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingRow {
    pub rep: usize,
    pub n: usize,
    pub m: usize,
    pub seconds: f64,
    pub ro_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig6Row {
    pub rep: usize,
    pub family: String,
    pub theta: f64,
    pub assortment: String,
    pub worst: f64,
    pub best: f64,
    pub worst_pct: f64,
    pub best_pct: f64,
}

/// Output of [`run_experiment`], one variant per experiment.
#[derive(Clone, Debug, PartialEq)]
pub enum ExperimentRows {
    Fig1_2(Vec<Fig12Row>),
    Fig3(Vec<Fig3Row>),
    Timing(Vec<TimingRow>),
    Fig6(Vec<Fig6Row>),
}

impl ExperimentRows {
    pub fn len(&self) -> usize {
        match self {
            ExperimentRows::Fig1_2(r) => r.len(),
            ExperimentRows::Fig3(r) => r.len(),
            ExperimentRows::Timing(r) => r.len(),
            ExperimentRows::Fig6(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Write as CSV with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Malformed(format!("CSV output: {e}"));
        match self {
            ExperimentRows::Fig1_2(r) => r.iter().try_for_each(|x| w.serialize(x)).map_err(io)?,
            ExperimentRows::Fig3(r) => r.iter().try_for_each(|x| w.serialize(x)).map_err(io)?,
            ExperimentRows::Timing(r) => r.iter().try_for_each(|x| w.serialize(x)).map_err(io)?,
            ExperimentRows::Fig6(r) => r.iter().try_for_each(|x| w.serialize(x)).map_err(io)?,
        }
        w.flush().map_err(|e| Error::Malformed(format!("CSV output: {e}")))
    }
}

fn label(inst: &Instance, s: &Assortment) -> String {
    inst.to_labels(s).iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

fn par_reps<T: Send>(reps: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    let out: Vec<Result<T>> = (0..reps).into_par_iter().map(f).collect();
    out.into_iter().collect()
}

/// Run an experiment with per-replication seeds `derive_seed(master, rep)`.
pub fn run_experiment(exp: Experiment, params: &ExperimentParams, master: u64) -> Result<ExperimentRows> {
    let reps = params.reps;
    let seed = |rep: usize| derive_seed(master, rep as u64);
    match exp {
        Experiment::Fig1_2 => {
            let n = params.n.unwrap_or(4);
            let rows = par_reps(reps, |rep| {
                let s = seed(rep);
                let inst = generate(GeneratorKind::RevOrdered, &GenParams { k: params.k, ..GenParams::new(n) }, s)?;
                let eto = eto_baseline(&inst, derive_seed(s, 1))?;
                Ok(Fig12Row { rep, best_past: eto.best_past, worst_new: eto.worst, best_new: eto.best })
            })?;
            Ok(ExperimentRows::Fig1_2(rows))
        }
        Experiment::Fig3 => {
            let n = params.n.unwrap_or(10);
            let k = params.k.unwrap_or(10);
            let rows = par_reps(reps, |rep| {
                let inst = generate(GeneratorKind::Two, &GenParams { k: Some(k), ..GenParams::new(n) }, seed(rep))?;
                let r = solve_ro(&inst, Method::Auto)?;
                let best_past = inst.best_past_revenue();
                let improves = r.value > best_past + 1e-9 * best_past.max(1.0);
                Ok(Fig3Row { rep, best_past, ro_value: r.value, assortment: label(&inst, &r.assortment), improves })
            })?;
            Ok(ExperimentRows::Fig3(rows))
        }
        Experiment::Fig4 => {
            let sizes = params.n_values.clone().unwrap_or_else(|| (10..=40).step_by(2).collect());
            let k = params.k.unwrap_or(1000);
            // timings run sequentially so they do not compete for cores
            let mut rows = Vec::new();
            for (si, &n) in sizes.iter().enumerate() {
                for rep in 0..reps {
                    let inst = generate(GeneratorKind::Two, &GenParams { k: Some(k), ..GenParams::new(n) }, derive_seed(master ^ si as u64, rep as u64))?;
                    let start = Instant::now();
                    let r = solve_ro(&inst, Method::TwoFlow)?;
                    rows.push(TimingRow { rep, n, m: 2, seconds: start.elapsed().as_secs_f64(), ro_value: r.value });
                }
            }
            Ok(ExperimentRows::Timing(rows))
        }
        Experiment::Fig5 => {
            let n = params.n.unwrap_or(10);
            let m_max = params.m_max.unwrap_or(10).min(n);
            let mut rows = Vec::new();
            for m in 2..=m_max {
                for rep in 0..reps {
                    let p = GenParams { m: Some(m), k: params.k, ..GenParams::new(n) };
                    let inst = generate(GeneratorKind::Nested, &p, derive_seed(master ^ (m as u64) << 32, rep as u64))?;
                    let start = Instant::now();
                    let r = solve_ro(&inst, Method::NestedMilp)?;
                    rows.push(TimingRow { rep, n, m, seconds: start.elapsed().as_secs_f64(), ro_value: r.value });
                }
            }
            Ok(ExperimentRows::Timing(rows))
        }
        Experiment::Fig6 => {
            let grid = pareto_grid(params.grid.unwrap_or(101));
            let mut rows = Vec::new();
            for family in [Family::RevenueOrdered, Family::ReverseRevenueOrdered, Family::Variety] {
                let n = params.n.unwrap_or(family.default_n());
                let fam_rows = par_reps(reps, |rep| {
                    let inst = family_instance(family, n, params.k.unwrap_or(80), derive_seed(master ^ family as u64, rep as u64))?;
                    let best_past = inst.best_past_revenue();
                    let pts = pareto_sweep(&inst, &grid, ParetoRoute::Auto)?;
                    Ok(pts
                        .into_iter()
                        .map(|p| {
                            let (worst_pct, best_pct) = p.improvement_pct(best_past);
                            Fig6Row {
                                rep,
                                family: family.name().into(),
                                theta: p.theta,
                                assortment: label(&inst, &p.assortment),
                                worst: p.worst_case,
                                best: p.best_case,
                                worst_pct,
                                best_pct,
                            }
                        })
                        .collect::<Vec<_>>())
                })?;
                rows.extend(fam_rows.into_iter().flatten());
            }
            Ok(ExperimentRows::Fig6(rows))
        }
    }
}

/// Nested past-assortment families of the Pareto experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// `{0,n}, {0,n-1,n}, ..., {0,1,...,n}`.
    RevenueOrdered,
    /// `{0,n}, {0,1,n}, ..., {0,1,...,n}`.
    ReverseRevenueOrdered,
    /// A fixed five-level chain over 15 products, truncated to `n` when `n < 15`.
    Variety,
}

const VARIETY: [&[usize]; 5] = [
    &[0, 3, 8, 13],
    &[0, 3, 5, 8, 10, 13, 15],
    &[0, 1, 3, 5, 6, 8, 10, 11, 13, 15],
    &[0, 1, 3, 4, 5, 6, 8, 9, 10, 11, 13, 14, 15],
    &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15],
];

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::RevenueOrdered => "revenue_ordered",
            Family::ReverseRevenueOrdered => "reverse_revenue_ordered",
            Family::Variety => "variety",
        }
    }

    pub fn default_n(self) -> usize {
        match self {
            Family::Variety => 15,
            _ => 10,
        }
    }

    /// The family's past assortments over products `0..=n`.
    pub fn past(self, n: usize) -> Result<Vec<Assortment>> {
        if n < 1 {
            return Err(Error::BadParams("family needs n >= 1".into()));
        }
        Ok(match self {
            Family::RevenueOrdered => (1..=n).rev().map(|m| std::iter::once(0).chain(m..=n).collect()).collect(),
            Family::ReverseRevenueOrdered => (1..=n).map(|m| (0..m).chain(std::iter::once(n)).collect()).collect(),
            Family::Variety => {
                if n > 15 {
                    return Err(Error::BadParams("variety family has at most 15 products".into()));
                }
                let mut out: Vec<Assortment> = Vec::new();
                for level in VARIETY {
                    let s: BitSet = level.iter().copied().filter(|&i| i <= n).collect();
                    if out.last() != Some(&s) && s.len() > 1 {
                        out.push(s);
                    }
                }
                let all = BitSet::full(n + 1);
                if out.last() != Some(&all) {
                    out.push(all);
                }
                out
            }
        })
    }
}

/// A family instance with integer revenues and sales from a `k`-sparse model.
pub fn family_instance(family: Family, n: usize, k: usize, seed: u64) -> Result<Instance> {
    let past = family.past(n)?;
    let mut rng = rng_from_seed(seed);
    let revenues = integer_revenues(&mut rng, n)?;
    let model = sparse_model(&mut rng, n, k)?;
    let sales = past.iter().map(|s| demand(&model, s)).collect();
    Instance::new(revenues, past, sales, 0.0, Norm::Linf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_2_rows_respect_best_past() {
        let rows = run_experiment(Experiment::Fig1_2, &ExperimentParams { reps: 6, ..Default::default() }, 1).unwrap();
        let ExperimentRows::Fig1_2(rows) = rows else { panic!() };
        assert_eq!(rows.iter().map(|r| r.rep).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
        for r in &rows {
            assert!(r.worst_new <= r.best_past + 1e-6, "{r:?}");
            assert!(r.best_new >= r.worst_new - 1e-9);
        }
    }

    #[test]
    fn csv_header_and_reproducibility() {
        let p = ExperimentParams { reps: 3, ..Default::default() };
        let a = run_experiment(Experiment::Fig1_2, &p, 9).unwrap();
        assert_eq!(a, run_experiment(Experiment::Fig1_2, &p, 9).unwrap());
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("rep,best_past,worst_new,best_new"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn families_are_nested_chains() {
        for fam in [Family::RevenueOrdered, Family::ReverseRevenueOrdered, Family::Variety] {
            for n in [5, 10, 15] {
                let inst = family_instance(fam, n, 20, 4).unwrap();
                assert!(inst.is_chain_ordered(), "{fam:?} n={n}");
                assert_eq!(inst.past().last().unwrap(), &BitSet::full(n + 1));
            }
        }
        assert_eq!(Family::Variety.past(15).unwrap().len(), 5);
        assert_eq!(Family::Variety.past(15).unwrap()[0], BitSet::from_slice(&[0, 3, 8, 13]));
    }
}
