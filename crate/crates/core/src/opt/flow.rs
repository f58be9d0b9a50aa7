//! Uncapacitated minimum-cost flow by successive shortest paths.
//!
//! Supplies are real numbers, arcs have nonnegative flow and no upper
//! capacity. A super source feeds every supply node and every demand node
//! drains into a super sink; paths are found with Dijkstra on reduced costs
//! after Bellman-Ford initial potentials (arc costs may be negative).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::lp::{LpModel, RowKind, Sense, Solution, SolveStatus};
use crate::error::{Error, Result};

/// Flow amounts below this are treated as zero.
pub const FLOW_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub cost: f64,
}

/// Nodes with net supply (positive) or demand (negative) and directed arcs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlowNetwork {
    pub supply: Vec<f64>,
    pub arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new() -> FlowNetwork {
        FlowNetwork::default()
    }

    pub fn add_node(&mut self, supply: f64) -> usize {
        self.supply.push(supply);
        self.supply.len() - 1
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cost: f64) -> usize {
        self.arcs.push(Arc { from, to, cost });
        self.arcs.len() - 1
    }

    /// The same problem as an LP with one variable per arc.
    pub fn to_lp(&self) -> LpModel {
        let mut lp = LpModel::new(Sense::Minimize);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.supply.len()];
        for a in &self.arcs {
            let v = lp.add_var(0.0, f64::INFINITY, a.cost);
            rows[a.from].push((v, 1.0));
            rows[a.to].push((v, -1.0));
        }
        for (i, coeffs) in rows.into_iter().enumerate() {
            lp.add_row(coeffs, RowKind::Eq, self.supply[i]);
        }
        lp
    }
}

struct Edge {
    to: usize,
    cap: f64,
    cost: f64,
    rev: usize,
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Solve the flow problem; the solution vector holds one flow per arc.
pub fn solve_min_cost_flow(net: &FlowNetwork) -> Result<SolveStatus> {
    let total_supply: f64 = net.supply.iter().filter(|&&s| s > 0.0).sum();
    let balance: f64 = net.supply.iter().sum();
    if balance.abs() > 1e-9 {
        return Err(Error::BadParams(format!("supplies and demands differ by {balance}")));
    }
    for a in &net.arcs {
        if a.from >= net.supply.len() || a.to >= net.supply.len() || !a.cost.is_finite() {
            return Err(Error::Malformed(format!("bad arc {a:?}")));
        }
    }
    let nv = net.supply.len() + 2;
    let (src, sink) = (nv - 2, nv - 1);
    let mut g: Vec<Vec<Edge>> = (0..nv).map(|_| Vec::new()).collect();
    let mut arc_ref = Vec::with_capacity(net.arcs.len());
    let add = |g: &mut Vec<Vec<Edge>>, u: usize, v: usize, cap: f64, cost: f64| -> (usize, usize) {
        let (ru, rv) = (g[v].len() + usize::from(u == v), g[u].len());
        g[u].push(Edge { to: v, cap, cost, rev: ru });
        g[v].push(Edge { to: u, cap: 0.0, cost: -cost, rev: rv });
        (u, rv)
    };
    for a in &net.arcs {
        arc_ref.push(add(&mut g, a.from, a.to, f64::INFINITY, a.cost));
    }
    for (i, &s) in net.supply.iter().enumerate() {
        if s > 0.0 {
            add(&mut g, src, i, s, 0.0);
        } else if s < 0.0 {
            add(&mut g, i, sink, -s, 0.0);
        }
    }

    // Bellman-Ford potentials from the source
    let mut pot = vec![f64::INFINITY; nv];
    pot[src] = 0.0;
    for round in 0..=nv {
        let mut changed = false;
        for u in 0..nv {
            if pot[u] == f64::INFINITY {
                continue;
            }
            for e in &g[u] {
                if e.cap > FLOW_EPS && pot[u] + e.cost < pot[e.to] - 1e-12 {
                    pot[e.to] = pot[u] + e.cost;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        if round == nv {
            return Ok(SolveStatus::Unbounded);
        }
    }
    for p in &mut pot {
        if *p == f64::INFINITY {
            *p = 0.0;
        }
    }

    let mut remaining = total_supply;
    let mut dist = vec![f64::INFINITY; nv];
    let mut prev: Vec<(usize, usize)> = vec![(usize::MAX, 0); nv];
    let mut done = vec![false; nv];
    let mut iterations = 0;
    while remaining > FLOW_EPS * total_supply.max(1.0) {
        iterations += 1;
        dist.fill(f64::INFINITY);
        done.fill(false);
        dist[src] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Item(0.0, src));
        let mut finished = Vec::new();
        while let Some(Item(d, u)) = heap.pop() {
            if done[u] || d > dist[u] {
                continue;
            }
            done[u] = true;
            finished.push(u);
            if u == sink {
                break;
            }
            for (k, e) in g[u].iter().enumerate() {
                if e.cap <= FLOW_EPS {
                    continue;
                }
                let rc = (e.cost + pot[u] - pot[e.to]).max(0.0);
                let nd = d + rc;
                if nd < dist[e.to] {
                    dist[e.to] = nd;
                    prev[e.to] = (u, k);
                    heap.push(Item(nd, e.to));
                }
            }
        }
        if !done[sink] {
            return Ok(SolveStatus::Infeasible);
        }
        let dt = dist[sink];
        for &v in &finished {
            pot[v] += dist[v] - dt;
        }
        let mut amount = remaining;
        let mut v = sink;
        while v != src {
            let (u, k) = prev[v];
            amount = amount.min(g[u][k].cap);
            v = u;
        }
        let mut v = sink;
        while v != src {
            let (u, k) = prev[v];
            g[u][k].cap -= amount;
            let r = g[u][k].rev;
            g[v][r].cap += amount;
            v = u;
        }
        remaining -= amount;
    }
    let flows: Vec<f64> = arc_ref
        .iter()
        .map(|&(u, k)| {
            let e = &g[u][k];
            g[e.to][e.rev].cap
        })
        .collect();
    let value = net.arcs.iter().zip(&flows).map(|(a, f)| a.cost * f).sum();
    Ok(SolveStatus::Optimal(Solution { value, x: flows, duals: None, iterations }))
}
