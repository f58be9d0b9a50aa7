//! `roam`: command-line front end for robust assortment optimization.
//!
//! Instances are JSON files; assortments are read and printed in the
//! instance's original product labels. Results go to stdout as JSON.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use roam_core::harness::experiments::{run_experiment, Experiment, ExperimentParams};
use roam_core::harness::{generate, pareto_grid, pareto_sweep, solve_ro_with, GenParams, GeneratorKind, Method, ParetoRoute, SolveOptions};
use roam_core::oracle::{run_oracle_checks, Check};
use roam_core::robust::{best_case_revenue, min_consistency_radius, worst_case_revenue};
use roam_core::{Assortment, Instance};

#[derive(Parser)]
#[command(name = "roam", version, about = "Robust assortment optimization under ranking-based choice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the assortment with the largest worst-case revenue.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// auto, closed-form, brute, nested-milp or two-flow.
        #[arg(long, default_value = "auto")]
        method: String,
        /// Also report the best case of every evaluated assortment.
        #[arg(long)]
        best: bool,
    },
    /// Worst-case (and optionally best-case) revenue of one assortment.
    Eval {
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated product labels; 0 is the no-purchase option.
        #[arg(long, value_delimiter = ',')]
        assortment: Vec<usize>,
        #[arg(long)]
        best: bool,
    },
    /// Trace the worst/best-case frontier over a uniform threshold grid.
    Pareto {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// auto, milp or enumerate.
        #[arg(long, default_value = "auto")]
        route: String,
    },
    /// Generate a synthetic instance.
    Gen {
        /// revordered, two, nested or adversarial.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        sbar: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run one of the numerical experiments and write its rows as CSV.
    Experiment {
        /// fig1_2, fig3, fig4, fig5 or fig6.
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n: Option<usize>,
        /// Product counts swept by fig4.
        #[arg(long, value_delimiter = ',')]
        n_values: Option<Vec<usize>>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Cross-check the solvers against brute-force enumeration.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        /// all, L, rho, wc or ro.
        #[arg(long, default_value = "all")]
        check: String,
    },
    /// Smallest radius for which the instance is consistent.
    MinEta {
        #[arg(long)]
        instance: PathBuf,
    },
}

fn load(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Instance::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn labels(inst: &Instance, s: &Assortment) -> Value {
    json!(inst.to_labels(s))
}

fn emit(text: &str) -> Result<()> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn print(v: &Value) -> Result<()> {
    emit(&serde_json::to_string_pretty(v)?)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { instance, method, best } => {
            let inst = load(&instance)?;
            let method: Method = method.parse()?;
            let rep = solve_ro_with(&inst, method, &SolveOptions { with_best: best, seed: None })?;
            let table: Vec<Value> = rep
                .table
                .iter()
                .map(|row| json!({ "assortment": labels(&inst, &row.assortment), "worst": row.worst, "best": row.best }))
                .collect();
            print(&json!({
                "method": rep.method,
                "assortment": labels(&inst, &rep.assortment),
                "value": rep.value,
                "optima": rep.optima.iter().map(|s| labels(&inst, s)).collect::<Vec<_>>(),
                "table": table,
                "elapsed_ms": rep.elapsed_ms,
            }))?;
        }
        Command::Eval { instance, assortment, best } => {
            let inst = load(&instance)?;
            let s = inst.from_labels(&assortment)?;
            let worst = worst_case_revenue(&inst, &s)?.value;
            let best = if best { Some(best_case_revenue(&inst, &s)?.value) } else { None };
            print(&json!({ "assortment": labels(&inst, &s), "worst": worst, "best": best }))?;
        }
        Command::Pareto { instance, grid, route } => {
            let inst = load(&instance)?;
            let route: ParetoRoute = route.parse()?;
            let points = pareto_sweep(&inst, &pareto_grid(grid), route)?;
            let best_past = inst.best_past_revenue();
            let rows: Vec<Value> = points
                .iter()
                .map(|p| {
                    let (worst_pct, best_pct) = p.improvement_pct(best_past);
                    json!({
                        "theta": p.theta,
                        "assortment": labels(&inst, &p.assortment),
                        "worst": p.worst_case,
                        "best": p.best_case,
                        "worst_pct": worst_pct,
                        "best_pct": best_pct,
                    })
                })
                .collect();
            print(&json!({ "best_past": best_past, "frontier": rows }))?;
        }
        Command::Gen { kind, n, m, k, sbar, seed, output } => {
            let kind: GeneratorKind = kind.parse()?;
            let inst = generate(kind, &GenParams { n, m, k, sbar }, seed)?;
            let mut out = sink(output.as_deref())?;
            writeln!(out, "{}", inst.to_json())?;
            out.flush()?;
        }
        Command::Experiment { name, reps, seed, n, n_values, k, m_max, grid, output } => {
            let exp: Experiment = name.parse()?;
            let params = ExperimentParams { reps, n, n_values, k, m_max, grid };
            let rows = run_experiment(exp, &params, seed)?;
            let mut out = sink(output.as_deref())?;
            rows.write_csv(&mut out)?;
            out.flush()?;
        }
        Command::Oracle { instance, check } => {
            let inst = load(&instance)?;
            let check: Check = check.parse()?;
            let report = run_oracle_checks(&inst, check)?;
            emit(&report.to_json())?;
            return Ok(report.pass());
        }
        Command::MinEta { instance } => {
            let inst = load(&instance)?;
            print(&json!({ "norm": inst.norm(), "min_eta": min_consistency_radius(&inst)? }))?;
        }
    }
    Ok(true)
}

fn main() -> Result<()> {
    if !run(Cli::parse())? {
        bail!("oracle check failed");
    }
    Ok(())
}
