//! Bounded-variable revised primal simplex.
//!
//! The basis inverse is kept in product form: a list of eta matrices built
//! at reinversion time and extended by one eta per pivot. Bases arising from
//! the flow-like models in this crate are close to triangular, so the etas
//! stay sparse. Feasibility comes from a phase that minimises the sum of
//! artificial variables; Dantzig pricing switches to Bland's rule after a
//! run of degenerate pivots.
//!
//! [`solve_lp_warm`] restarts from the optimal [`Basis`] of a model with the
//! same columns and looser bounds: a dual simplex pass restores primal
//! feasibility, then the primal loop cleans up. Branch-and-bound children
//! differ from their parent in one bound, so this takes a handful of pivots.

use super::lp::{LpModel, RowKind, Sense, Solution, SolveStatus};
use crate::error::{Error, Result};

/// Optimality is re-checked on a fresh factorization once this many
/// updates have accumulated.
const VERIFY_AFTER: usize = 8;

/// Solver parameters.
#[derive(Clone, Debug)]
pub struct SimplexOptions {
    /// Iteration cap; `None` picks a cap from the model size.
    pub max_iterations: Option<usize>,
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub refactor_every: usize,
    pub bland_after: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iterations: None,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            refactor_every: 64,
            bland_after: 50,
        }
    }
}

/// Solve an LP with default options.
pub fn solve_lp(model: &LpModel) -> Result<SolveStatus> {
    solve_lp_with(model, &SimplexOptions::default())
}

pub fn solve_lp_with(model: &LpModel, opts: &SimplexOptions) -> Result<SolveStatus> {
    validate(model)?;
    let mut s = Simplex::new(model, opts);
    let status = s.run()?;
    Ok(status)
}

/// Final basis of an optimal solve, reusable by [`solve_lp_warm`].
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    head: Vec<usize>,
    /// Nonbasic columns resting on their upper bound.
    at_upper: Vec<bool>,
    /// Sign of each artificial column.
    art_sign: Vec<f64>,
}

/// Solve from `warm` when given, falling back to a cold start when the warm
/// pass stalls or the basis does not fit the model. Returns the final basis
/// when optimal.
pub fn solve_lp_warm(model: &LpModel, warm: Option<&Basis>) -> Result<(SolveStatus, Option<Basis>)> {
    validate(model)?;
    let opts = SimplexOptions::default();
    if let Some(basis) = warm {
        let mut s = Simplex::new(model, &opts);
        if s.install(basis) {
            if let Ok(Some(status)) = s.run_warm() {
                let b = s.basis_if_optimal(&status);
                return Ok((status, b));
            }
        }
    }
    let mut s = Simplex::new(model, &opts);
    let status = s.run()?;
    let b = s.basis_if_optimal(&status);
    Ok((status, b))
}

fn validate(model: &LpModel) -> Result<()> {
    let n = model.num_vars();
    if model.lower.len() != n || model.upper.len() != n {
        return Err(Error::Malformed("bound vectors do not match the variable count".into()));
    }
    for j in 0..n {
        if !model.obj[j].is_finite() || model.lower[j].is_nan() || model.upper[j].is_nan() {
            return Err(Error::Malformed(format!("variable {j} has a non-finite coefficient")));
        }
        if model.lower[j] == f64::INFINITY || model.upper[j] == f64::NEG_INFINITY {
            return Err(Error::Malformed(format!("variable {j} has an empty domain")));
        }
    }
    for (i, row) in model.rows.iter().enumerate() {
        if !row.rhs.is_finite() {
            return Err(Error::Malformed(format!("row {i} has a non-finite right-hand side")));
        }
        for &(j, a) in &row.coeffs {
            if j >= n || !a.is_finite() {
                return Err(Error::Malformed(format!("row {i} has a bad coefficient on column {j}")));
            }
        }
    }
    Ok(())
}

struct Eta {
    r: usize,
    piv: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

struct Simplex<'a> {
    opts: &'a SimplexOptions,
    model: &'a LpModel,
    m: usize,
    n_struct: usize,
    /// First artificial column; the artificial of row `i` is `art + i`.
    art: usize,
    col_start: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    b: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    /// Basis position of each column, `usize::MAX` when nonbasic.
    pos: Vec<usize>,
    etas: Vec<Eta>,
    updates: usize,
    iterations: usize,
    max_iterations: usize,
    degenerate_run: usize,
    bland: bool,
}

impl<'a> Simplex<'a> {
    fn new(model: &'a LpModel, opts: &'a SimplexOptions) -> Simplex<'a> {
        let m = model.num_rows();
        let n_struct = model.num_vars();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_struct];
        for (i, row) in model.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                if a != 0.0 {
                    cols[j].push((i, a));
                }
            }
        }
        // merge repeated entries
        for col in &mut cols {
            col.sort_by_key(|e| e.0);
            col.dedup_by(|a, b| {
                if a.0 == b.0 {
                    b.1 += a.1;
                    true
                } else {
                    false
                }
            });
            col.retain(|e| e.1 != 0.0);
        }
        let mut lower = model.lower.clone();
        let mut upper = model.upper.clone();
        let mut col_start = vec![0];
        let mut row_idx = Vec::new();
        let mut vals = Vec::new();
        for col in &cols {
            for &(i, a) in col {
                row_idx.push(i);
                vals.push(a);
            }
            col_start.push(row_idx.len());
        }
        // slacks: row + s = rhs
        for (i, row) in model.rows.iter().enumerate() {
            let (lo, hi) = match row.kind {
                RowKind::Le => (0.0, f64::INFINITY),
                RowKind::Ge => (f64::NEG_INFINITY, 0.0),
                RowKind::Eq => (0.0, 0.0),
            };
            row_idx.push(i);
            vals.push(1.0);
            col_start.push(row_idx.len());
            lower.push(lo);
            upper.push(hi);
        }
        let art = n_struct + m;
        for i in 0..m {
            row_idx.push(i);
            vals.push(1.0);
            col_start.push(row_idx.len());
            lower.push(0.0);
            upper.push(f64::INFINITY);
        }
        let ncols = art + m;
        let mut x = vec![0.0; ncols];
        for j in 0..art {
            x[j] = nonbasic_start(lower[j], upper[j]);
        }
        let b: Vec<f64> = model.rows.iter().map(|r| r.rhs).collect();
        let max_iterations = opts.max_iterations.unwrap_or(20_000 + 60 * (m + n_struct));
        Simplex {
            opts,
            model,
            m,
            n_struct,
            art,
            col_start,
            row_idx,
            vals,
            lower,
            upper,
            cost: vec![0.0; ncols],
            b,
            x,
            head: Vec::new(),
            pos: vec![usize::MAX; ncols],
            etas: Vec::new(),
            updates: 0,
            iterations: 0,
            max_iterations,
            degenerate_run: 0,
            bland: false,
        }
    }

    fn ncols(&self) -> usize {
        self.art + self.m
    }

    fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.col_start[j], self.col_start[j + 1]);
        (&self.row_idx[a..b], &self.vals[a..b])
    }

    fn is_unit(&self, j: usize) -> Option<usize> {
        (j >= self.n_struct).then(|| if j >= self.art { j - self.art } else { j - self.n_struct })
    }

    fn ftran(&self, v: &mut [f64]) {
        for e in &self.etas {
            let xr = v[e.r];
            if xr == 0.0 {
                continue;
            }
            let xr = xr / e.piv;
            v[e.r] = xr;
            for (&i, &w) in e.idx.iter().zip(&e.val) {
                v[i] -= w * xr;
            }
        }
    }

    fn btran(&self, y: &mut [f64]) {
        for e in self.etas.iter().rev() {
            let mut s = y[e.r];
            for (&i, &w) in e.idx.iter().zip(&e.val) {
                s -= w * y[i];
            }
            y[e.r] = s / e.piv;
        }
    }

    fn push_eta(&mut self, r: usize, w: &[f64]) {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &wi) in w.iter().enumerate() {
            if i != r && wi.abs() > 1e-14 {
                idx.push(i);
                val.push(wi);
            }
        }
        self.etas.push(Eta { r, piv: w[r], idx, val });
    }

    fn dense_column(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        let (ri, va) = self.column(j);
        for (&i, &a) in ri.iter().zip(va) {
            v[i] = a;
        }
        v
    }

    /// Initial basis: a slack where it can absorb the residual, otherwise the
    /// row's artificial, signed so that it starts nonnegative.
    fn crash(&mut self) {
        let mut resid = self.b.clone();
        for j in 0..self.art {
            let xj = self.x[j];
            if xj != 0.0 {
                let (ri, va) = self.column(j);
                for (&i, &a) in ri.iter().zip(va) {
                    resid[i] -= a * xj;
                }
            }
        }
        // resid already accounts for slacks at their start values (0)
        self.head = vec![0; self.m];
        for i in 0..self.m {
            let s = self.n_struct + i;
            let fits = resid[i] >= self.lower[s] && resid[i] <= self.upper[s];
            if fits && self.lower[s] != self.upper[s] {
                self.head[i] = s;
            } else {
                let a = self.art + i;
                self.vals[self.col_start[a]] = if resid[i] < 0.0 { -1.0 } else { 1.0 };
                self.head[i] = a;
            }
        }
        for j in self.art..self.ncols() {
            self.x[j] = 0.0;
        }
        for (i, &j) in self.head.clone().iter().enumerate() {
            self.pos[j] = i;
        }
        for j in self.art..self.ncols() {
            if self.pos[j] == usize::MAX {
                self.upper[j] = 0.0;
            }
        }
    }

    fn reinvert(&mut self) -> Result<()> {
        self.etas.clear();
        self.updates = 0;
        let m = self.m;
        let mut assigned = vec![false; m];
        let mut new_head = vec![usize::MAX; m];
        let mut pending = Vec::new();
        for &j in &self.head {
            match self.is_unit(j) {
                Some(i) if !assigned[i] => {
                    assigned[i] = true;
                    new_head[i] = j;
                    let sign = self.vals[self.col_start[j]];
                    if sign != 1.0 {
                        self.etas.push(Eta { r: i, piv: sign, idx: Vec::new(), val: Vec::new() });
                    }
                }
                _ => pending.push(j),
            }
        }
        // sparsest columns (counted on free rows) first
        pending.sort_by_key(|&j| {
            let (ri, _) = self.column(j);
            (ri.iter().filter(|&&i| !assigned[i]).count(), j)
        });
        let mut dropped = Vec::new();
        for &j in &pending {
            let mut w = self.dense_column(j);
            self.ftran(&mut w);
            let scale = self.column(j).1.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
            let mut best: Option<(f64, usize)> = None;
            for i in 0..m {
                if !assigned[i] && best.is_none_or(|(v, _)| w[i].abs() > v) {
                    best = Some((w[i].abs(), i));
                }
            }
            match best {
                Some((v, r)) if v > self.opts.pivot_tol * scale => {
                    self.push_eta(r, &w);
                    assigned[r] = true;
                    new_head[r] = j;
                }
                _ => dropped.push(j),
            }
        }
        for j in dropped {
            self.pos[j] = usize::MAX;
            self.x[j] = nonbasic_start(self.lower[j], self.upper[j]).clamp(self.lower[j], self.upper[j]);
        }
        for r in 0..m {
            if !assigned[r] {
                let a = self.art + r;
                new_head[r] = a;
                let sign = self.vals[self.col_start[a]];
                if sign != 1.0 {
                    self.etas.push(Eta { r, piv: sign, idx: Vec::new(), val: Vec::new() });
                }
                if self.pos[a] == usize::MAX {
                    // a fixed artificial re-enters to patch a singular basis
                    self.x[a] = 0.0;
                }
            }
        }
        for &j in &self.head {
            self.pos[j] = usize::MAX;
        }
        self.head = new_head;
        for (i, &j) in self.head.iter().enumerate() {
            self.pos[j] = i;
        }
        self.recompute_basic();
        Ok(())
    }

    fn recompute_basic(&mut self) {
        let mut rhs = self.b.clone();
        for j in 0..self.ncols() {
            if self.pos[j] == usize::MAX && self.x[j] != 0.0 {
                let xj = self.x[j];
                let (a, bnd) = (self.col_start[j], self.col_start[j + 1]);
                for k in a..bnd {
                    rhs[self.row_idx[k]] -= self.vals[k] * xj;
                }
            }
        }
        self.ftran(&mut rhs);
        for (i, &j) in self.head.iter().enumerate() {
            self.x[j] = rhs[i];
        }
    }

    fn duals(&self) -> Vec<f64> {
        let mut y: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        self.btran(&mut y);
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let (ri, va) = self.column(j);
        self.cost[j] - ri.iter().zip(va).map(|(&i, &a)| y[i] * a).sum::<f64>()
    }

    /// Run the simplex loop on the current costs until optimal.
    fn optimize(&mut self, allow_unbounded: bool) -> Result<Phase> {
        let cmax = self.cost.iter().fold(0.0f64, |a, c| a.max(c.abs())).max(1.0);
        let dtol = self.opts.optimality_tol * cmax;
        let mut verified = false;
        loop {
            if self.iterations >= self.max_iterations {
                return Ok(Phase::IterationLimit);
            }
            if self.updates >= self.opts.refactor_every {
                self.reinvert()?;
            }
            let y = self.duals();
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.ncols() {
                if self.pos[j] != usize::MAX || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                let can_up = self.x[j] < self.upper[j];
                let can_down = self.x[j] > self.lower[j];
                let attractive = (d < -dtol && can_up) || (d > dtol && can_down);
                if !attractive {
                    continue;
                }
                if self.bland {
                    entering = Some((j, d));
                    break;
                }
                if d.abs() > best {
                    best = d.abs();
                    entering = Some((j, d));
                }
            }
            let Some((q, d)) = entering else {
                // a short eta file is accurate enough to trust
                if self.updates >= VERIFY_AFTER && !verified {
                    self.reinvert()?;
                    verified = true;
                    continue;
                }
                return Ok(Phase::Optimal);
            };
            verified = false;
            self.iterations += 1;
            let dir = if d < 0.0 { 1.0 } else { -1.0 };
            let mut w = self.dense_column(q);
            self.ftran(&mut w);

            let mut t_best = self.upper[q] - self.lower[q];
            let mut leave: Option<usize> = None;
            let mut leave_piv = 0.0;
            for (i, &wi) in w.iter().enumerate() {
                if wi.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let j = self.head[i];
                let rate = -dir * wi;
                let lim = if rate < 0.0 {
                    if self.lower[j] == f64::NEG_INFINITY {
                        continue;
                    }
                    (self.x[j] - self.lower[j]) / -rate
                } else {
                    if self.upper[j] == f64::INFINITY {
                        continue;
                    }
                    (self.upper[j] - self.x[j]) / rate
                };
                let lim = lim.max(0.0);
                if lim < t_best - 1e-12 {
                    t_best = lim;
                    leave = Some(i);
                    leave_piv = wi.abs();
                } else if let Some(l) = leave {
                    if lim <= t_best + 1e-12 {
                        let wins = if self.bland { j < self.head[l] } else { wi.abs() > leave_piv };
                        if wins {
                            t_best = t_best.min(lim);
                            leave = Some(i);
                            leave_piv = wi.abs();
                        }
                    }
                }
            }
            if t_best.is_infinite() {
                if allow_unbounded {
                    return Ok(Phase::Unbounded);
                }
                return Err(Error::NumericalFailure("unbounded direction while minimizing artificials".into()));
            }
            let t = t_best;
            if t <= 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run >= self.opts.bland_after {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }
            if t != 0.0 {
                self.x[q] += dir * t;
                for (i, &wi) in w.iter().enumerate() {
                    if wi != 0.0 {
                        let j = self.head[i];
                        self.x[j] -= dir * t * wi;
                    }
                }
            }
            match leave {
                None => {
                    // bound flip of the entering variable
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some(r) => {
                    let j = self.head[r];
                    let rate = -dir * w[r];
                    self.x[j] = if rate < 0.0 { self.lower[j] } else { self.upper[j] };
                    self.pos[j] = usize::MAX;
                    self.push_eta(r, &w);
                    self.head[r] = q;
                    self.pos[q] = r;
                    self.updates += 1;
                }
            }
        }
    }

    /// Pivot basic artificials out of the basis where possible.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            let a = self.head[r];
            if a < self.art {
                continue;
            }
            let mut e = vec![0.0; self.m];
            e[r] = 1.0;
            self.btran(&mut e);
            let mut best: Option<(f64, usize)> = None;
            for j in 0..self.art {
                if self.pos[j] != usize::MAX {
                    continue;
                }
                let (ri, va) = self.column(j);
                let alpha: f64 = ri.iter().zip(va).map(|(&i, &v)| e[i] * v).sum();
                if alpha.abs() > 1e-7 && best.is_none_or(|(v, _)| alpha.abs() > v) {
                    best = Some((alpha.abs(), j));
                }
            }
            if let Some((_, q)) = best {
                let mut w = self.dense_column(q);
                self.ftran(&mut w);
                // degenerate exchange: the artificial sits at zero
                let theta = self.x[a] / w[r];
                if theta != 0.0 {
                    self.x[q] += theta;
                    for (i, &wi) in w.iter().enumerate() {
                        if wi != 0.0 {
                            let j = self.head[i];
                            self.x[j] -= theta * wi;
                        }
                    }
                }
                self.x[a] = 0.0;
                self.pos[a] = usize::MAX;
                self.push_eta(r, &w);
                self.head[r] = q;
                self.pos[q] = r;
                self.updates += 1;
                if self.updates >= self.opts.refactor_every {
                    let _ = self.reinvert();
                }
            }
        }
    }

    fn basis_if_optimal(&self, status: &SolveStatus) -> Option<Basis> {
        matches!(status, SolveStatus::Optimal(_)).then(|| Basis {
            head: self.head.clone(),
            at_upper: (0..self.ncols())
                .map(|j| self.pos[j] == usize::MAX && self.upper[j].is_finite() && self.lower[j] != self.upper[j] && self.x[j] == self.upper[j])
                .collect(),
            art_sign: (self.art..self.ncols()).map(|a| self.vals[self.col_start[a]]).collect(),
        })
    }

    /// Load a basis from a previous solve; false if it does not fit.
    fn install(&mut self, basis: &Basis) -> bool {
        let ncols = self.ncols();
        if basis.head.len() != self.m || basis.at_upper.len() != ncols || basis.art_sign.len() != self.m {
            return false;
        }
        for (i, &sign) in basis.art_sign.iter().enumerate() {
            let a = self.art + i;
            self.vals[self.col_start[a]] = sign;
            self.lower[a] = 0.0;
            self.upper[a] = 0.0;
        }
        self.pos = vec![usize::MAX; ncols];
        for (i, &j) in basis.head.iter().enumerate() {
            if j >= ncols || self.pos[j] != usize::MAX {
                return false;
            }
            self.pos[j] = i;
        }
        self.head = basis.head.clone();
        for j in 0..ncols {
            if self.pos[j] == usize::MAX {
                self.x[j] = if basis.at_upper[j] && self.upper[j].is_finite() {
                    self.upper[j]
                } else {
                    nonbasic_start(self.lower[j], self.upper[j])
                };
            }
        }
        self.reinvert().is_ok()
    }

    /// Warm path: dual simplex to primal feasibility, then phase two.
    /// `Ok(None)` asks the caller to start cold.
    fn run_warm(&mut self) -> Result<Option<SolveStatus>> {
        self.set_phase_two_costs();
        match self.dual_phase()? {
            DualPhase::Feasible => {}
            DualPhase::Infeasible => return Ok(Some(SolveStatus::Infeasible)),
            DualPhase::Stalled => return Ok(None),
        }
        match self.phase_two() {
            Ok(SolveStatus::IterationLimit) | Err(_) => Ok(None),
            Ok(status) => Ok(Some(status)),
        }
    }

    fn flip(&self) -> f64 {
        if self.model.sense == Sense::Maximize {
            -1.0
        } else {
            1.0
        }
    }

    fn set_phase_two_costs(&mut self) {
        let flip = self.flip();
        for j in 0..self.ncols() {
            self.cost[j] = if j < self.n_struct { flip * self.model.obj[j] } else { 0.0 };
        }
    }

    /// Bounded dual simplex: repeatedly move the most infeasible basic
    /// variable to its violated bound, choosing the entering column by the
    /// dual ratio test.
    fn dual_phase(&mut self) -> Result<DualPhase> {
        let bmax = self.b.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        let ftol = self.opts.feasibility_tol * bmax;
        let limit = self.iterations + 20 * self.m + 1000;
        loop {
            if self.iterations >= limit {
                return Ok(DualPhase::Stalled);
            }
            if self.updates >= self.opts.refactor_every {
                self.reinvert()?;
            }
            let mut leave: Option<(usize, f64, f64)> = None;
            for (i, &j) in self.head.iter().enumerate() {
                let (x, lo, hi) = (self.x[j], self.lower[j], self.upper[j]);
                let (gap, target) = if x < lo - ftol { (lo - x, lo) } else if x > hi + ftol { (x - hi, hi) } else { continue };
                if leave.is_none_or(|(_, g, _)| gap > g) {
                    leave = Some((i, gap, target));
                }
            }
            let Some((r, _, target)) = leave else {
                return Ok(DualPhase::Feasible);
            };
            let increase = self.x[self.head[r]] < target;
            let mut rho = vec![0.0; self.m];
            rho[r] = 1.0;
            self.btran(&mut rho);
            let y = self.duals();
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.ncols() {
                if self.pos[j] != usize::MAX || self.lower[j] == self.upper[j] {
                    continue;
                }
                let (ri, va) = self.column(j);
                let alpha: f64 = ri.iter().zip(va).map(|(&i, &a)| rho[i] * a).sum();
                if alpha.abs() <= self.opts.pivot_tol {
                    continue;
                }
                // x_r moves by -alpha per unit increase of x_j
                let up = (alpha < 0.0) == increase;
                let movable = if up { self.x[j] < self.upper[j] } else { self.x[j] > self.lower[j] };
                if !movable {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                let ratio = d.abs() / alpha.abs();
                let better = match entering {
                    None => true,
                    Some((_, best, piv)) => ratio < best - 1e-12 || (ratio <= best + 1e-12 && alpha.abs() > piv),
                };
                if better {
                    entering = Some((j, ratio, alpha.abs()));
                }
            }
            let Some((q, _, _)) = entering else {
                return Ok(DualPhase::Infeasible);
            };
            self.iterations += 1;
            let mut w = self.dense_column(q);
            self.ftran(&mut w);
            if w[r].abs() <= self.opts.pivot_tol {
                return Ok(DualPhase::Stalled);
            }
            let leaving = self.head[r];
            let step = (self.x[leaving] - target) / w[r];
            self.x[q] += step;
            for (i, &wi) in w.iter().enumerate() {
                if wi != 0.0 {
                    let j = self.head[i];
                    self.x[j] -= step * wi;
                }
            }
            self.x[leaving] = target;
            self.pos[leaving] = usize::MAX;
            self.push_eta(r, &w);
            self.head[r] = q;
            self.pos[q] = r;
            self.updates += 1;
        }
    }

    fn run(&mut self) -> Result<SolveStatus> {
        self.crash();
        self.reinvert()?;
        let needs_phase1 = self.head.iter().any(|&j| j >= self.art);
        if needs_phase1 {
            for j in self.art..self.ncols() {
                self.cost[j] = 1.0;
            }
            match self.optimize(false)? {
                Phase::IterationLimit => return Ok(SolveStatus::IterationLimit),
                Phase::Unbounded => unreachable!("phase one is bounded below"),
                Phase::Optimal => {}
            }
            let bmax = self.b.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
            let infeas: f64 = (self.art..self.ncols()).map(|j| self.x[j].abs()).sum();
            if infeas > 1e-8 * bmax {
                return Ok(SolveStatus::Infeasible);
            }
            for j in self.art..self.ncols() {
                self.cost[j] = 0.0;
                self.upper[j] = 0.0;
                self.lower[j] = 0.0;
                if self.pos[j] == usize::MAX {
                    self.x[j] = 0.0;
                }
            }
            self.drive_out_artificials();
            self.reinvert()?;
        } else {
            for j in self.art..self.ncols() {
                self.upper[j] = 0.0;
            }
        }
        self.set_phase_two_costs();
        self.phase_two()
    }

    fn phase_two(&mut self) -> Result<SolveStatus> {
        let flip = self.flip();
        self.bland = false;
        self.degenerate_run = 0;
        match self.optimize(true)? {
            Phase::IterationLimit => return Ok(SolveStatus::IterationLimit),
            Phase::Unbounded => return Ok(SolveStatus::Unbounded),
            Phase::Optimal => {}
        }
        let x: Vec<f64> = self.x[..self.n_struct]
            .iter()
            .enumerate()
            .map(|(j, &v)| v.clamp(self.model.lower[j], self.model.upper[j]))
            .collect();
        let viol = self.model.max_violation(&x);
        let bmax = self.b.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        if viol > 1e-7 * bmax {
            return Err(Error::NumericalFailure(format!("final point violates constraints by {viol:e}")));
        }
        let duals: Vec<f64> = self.duals().into_iter().map(|v| flip * v).collect();
        Ok(SolveStatus::Optimal(Solution {
            value: self.model.objective(&x),
            x,
            duals: Some(duals),
            iterations: self.iterations,
        }))
    }
}

enum DualPhase {
    Feasible,
    Infeasible,
    Stalled,
}

enum Phase {
    Optimal,
    Unbounded,
    IterationLimit,
}

fn nonbasic_start(lower: f64, upper: f64) -> f64 {
    if lower.is_finite() {
        lower
    } else if upper.is_finite() {
        upper
    } else {
        0.0
    }
}
