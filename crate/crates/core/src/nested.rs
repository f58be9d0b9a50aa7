//! Nested past assortments: blocks, the layered graph, the compact
//! worst-case and best-case LPs, flow decomposition back to tuple weights,
//! and the robust and Pareto MILPs.
//!
//! Every function accepts the past assortments in any stored order; work is
//! done in chain order and tuples are reported in stored positions.

use serde::Serialize;

use crate::bitset::{Assortment, BitSet};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::opt::milp::{solve_milp, MilpModel};
use crate::opt::norm::linearize_norm_ball;
use crate::opt::{dual_with_cost_params, solve_lp, LpModel, RowKind, Sense, SolveStatus};
use crate::robust::{check_assortment, pick_choice, Extreme, RobustValue, WitnessAtom, WITNESS_EPS};

/// Conservation tolerance for [`decompose_flow_to_lambda`].
pub const CONSERVATION_TOL: f64 = 1e-7;

/// `B_1 = S_1`, `B_m = S_m \ S_{m-1}`, in chain order.
pub fn blocks(inst: &Instance) -> Result<Vec<BitSet>> {
    let order = inst.nested_order().ok_or(Error::NotNested)?;
    let mut out = Vec::with_capacity(order.len());
    let mut prev = BitSet::new();
    for &m in &order {
        out.push(inst.past()[m].difference(&prev));
        prev = inst.past()[m].clone();
    }
    Ok(out)
}

/// A vertex `(m, i, kappa)` with `kappa = r_j`, stored as the product `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Vertex {
    /// Layer in chain order, starting at 0.
    pub layer: usize,
    pub product: usize,
    pub kappa_product: usize,
}

/// The layered graph over chain-ordered past assortments.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayeredGraph {
    /// Stored index of the past assortment at each chain position.
    pub order: Vec<usize>,
    pub chain: Vec<BitSet>,
    pub blocks: Vec<BitSet>,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<(usize, usize)>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    index: Vec<Vec<Vec<usize>>>,
}

impl LayeredGraph {
    pub fn num_layers(&self) -> usize {
        self.chain.len()
    }

    /// Vertex id of `(m, i, r_j)`, if it exists.
    pub fn vertex_id(&self, m: usize, i: usize, j: usize) -> Option<usize> {
        self.index.get(m)?.get(i)?.get(j).copied().filter(|&v| v != usize::MAX)
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out_edges[v]
    }

    pub fn in_edges(&self, v: usize) -> &[usize] {
        &self.in_edges[v]
    }

    /// Vertices of layer `m`.
    pub fn layer(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        self.vertices.iter().enumerate().filter(move |(_, v)| v.layer == m).map(|(k, _)| k)
    }
}

pub fn build_layered_graph(inst: &Instance) -> Result<LayeredGraph> {
    let order = inst.nested_order().ok_or(Error::NotNested)?;
    let chain: Vec<BitSet> = order.iter().map(|&m| inst.past()[m].clone()).collect();
    let blocks = blocks(inst)?;
    let n = inst.n();
    let mut vertices = Vec::new();
    let mut index = vec![vec![vec![usize::MAX; n + 1]; n + 1]; chain.len()];
    for (m, sm) in chain.iter().enumerate() {
        for i in sm.iter() {
            for j in sm.iter() {
                index[m][i][j] = vertices.len();
                vertices.push(Vertex { layer: m, product: i, kappa_product: j });
            }
        }
    }
    let mut edges = Vec::new();
    let mut out_edges = vec![Vec::new(); vertices.len()];
    let mut in_edges = vec![Vec::new(); vertices.len()];
    for (u, v) in vertices.iter().enumerate() {
        let m = v.layer;
        if m + 1 == chain.len() {
            continue;
        }
        let next = &blocks[m + 1];
        for i2 in std::iter::once(v.product).chain(next.iter()) {
            for j2 in std::iter::once(v.kappa_product).chain(next.iter()) {
                let w = index[m + 1][i2][j2];
                out_edges[u].push(edges.len());
                in_edges[w].push(edges.len());
                edges.push((u, w));
            }
        }
    }
    Ok(LayeredGraph { order, chain, blocks, vertices, edges, out_edges, in_edges, index })
}

/// Membership of each vertex in the forbidden set of `s`.
pub fn forbidden_vertices(graph: &LayeredGraph, s: &Assortment) -> Vec<bool> {
    graph
        .vertices
        .iter()
        .map(|v| {
            let b = &graph.blocks[v.layer];
            let (i, j) = (v.product, v.kappa_product);
            (s.contains(i) && b.contains(i) && j != i) || (s.contains(i) && !b.contains(i) && b.contains(j)) || (b.contains(j) && !s.contains(j))
        })
        .collect()
}

/// Flow through the layered graph: per-vertex throughput and per-edge flow.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayeredFlow {
    pub g: Vec<f64>,
    pub f: Vec<f64>,
    /// Residuals in stored past-assortment order.
    pub epsilon: Vec<Vec<f64>>,
}

/// A weighted path from layer 0 to the last layer.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayeredPath {
    pub vertices: Vec<usize>,
    pub weight: f64,
}

struct CompactVars {
    g: Vec<usize>,
    f: Vec<usize>,
    eps: Vec<Vec<Option<usize>>>,
}

/// Append the variables and rows shared by every compact formulation.
fn add_compact(lp: &mut LpModel, graph: &LayeredGraph, inst: &Instance, kappa_cost: &dyn Fn(usize) -> f64) -> CompactVars {
    let last = graph.num_layers() - 1;
    let g: Vec<usize> = graph
        .vertices
        .iter()
        .map(|v| lp.add_var(0.0, f64::INFINITY, if v.layer == last { kappa_cost(v.kappa_product) } else { 0.0 }))
        .collect();
    let f = (0..graph.edges.len()).map(|_| lp.add_var(0.0, f64::INFINITY, 0.0)).collect::<Vec<_>>();
    let with_eps = inst.eta() > 0.0;
    let n = inst.n();
    let mut eps = vec![vec![None; n + 1]; inst.num_past()];
    for (m, sm) in graph.chain.iter().enumerate() {
        let stored = graph.order[m];
        for i in sm.iter() {
            let mut coeffs: Vec<(usize, f64)> = sm.iter().filter_map(|j| graph.vertex_id(m, i, j)).map(|v| (g[v], 1.0)).collect();
            if with_eps {
                let e = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
                coeffs.push((e, -1.0));
                eps[stored][i] = Some(e);
            }
            lp.add_row(coeffs, RowKind::Eq, inst.sales(stored)[i]);
        }
    }
    for v in 0..graph.vertices.len() {
        let layer = graph.vertices[v].layer;
        if layer < last {
            let mut coeffs: Vec<(usize, f64)> = graph.out_edges(v).iter().map(|&e| (f[e], 1.0)).collect();
            coeffs.push((g[v], -1.0));
            lp.add_row(coeffs, RowKind::Eq, 0.0);
        }
        if layer > 0 {
            let mut coeffs: Vec<(usize, f64)> = graph.in_edges(v).iter().map(|&e| (f[e], 1.0)).collect();
            coeffs.push((g[v], -1.0));
            lp.add_row(coeffs, RowKind::Eq, 0.0);
        }
    }
    lp.add_row(graph.layer(last).map(|v| (g[v], 1.0)).collect(), RowKind::Eq, 1.0);
    if with_eps {
        let vars: Vec<usize> = eps.iter().flatten().flatten().copied().collect();
        linearize_norm_ball(lp, &vars, inst.norm(), inst.eta());
    }
    CompactVars { g, f, eps }
}

/// Revenue caps from products of `s` outside every past assortment: a
/// customer can always prefer them, so they bound the extreme revenues.
fn outside_caps(inst: &Instance, graph: &LayeredGraph, s: &Assortment) -> (f64, f64) {
    let outside = s.difference(graph.chain.last().expect("nonempty chain"));
    let r = inst.revenues();
    let lo = outside.iter().map(|i| r[i]).fold(f64::INFINITY, f64::min);
    let hi = outside.iter().map(|i| r[i]).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn compact_extreme(inst: &Instance, s: &Assortment, extreme: Extreme) -> Result<(RobustValue, LayeredFlow, LayeredGraph)> {
    check_assortment(inst, s)?;
    let graph = build_layered_graph(inst)?;
    let r = inst.revenues().to_vec();
    let (cap_lo, cap_hi) = outside_caps(inst, &graph, s);
    let sense = match extreme {
        Extreme::Worst => Sense::Minimize,
        Extreme::Best => Sense::Maximize,
    };
    let mut lp = LpModel::new(sense);
    let cost = |j: usize| match extreme {
        Extreme::Worst => r[j].min(cap_lo),
        Extreme::Best => r[j].max(cap_hi),
    };
    let vars = add_compact(&mut lp, &graph, inst, &cost);
    for (v, bad) in forbidden_vertices(&graph, s).into_iter().enumerate() {
        if bad {
            lp.upper[vars.g[v]] = 0.0;
        }
    }
    let sol = match solve_lp(&lp)? {
        SolveStatus::Optimal(sol) => sol,
        SolveStatus::Infeasible => return Err(Error::InconsistentData),
        other => return Err(Error::NumericalFailure(format!("compact LP ended with {other:?}"))),
    };
    let epsilon = vars.eps.iter().map(|row| row.iter().map(|e| e.map_or(0.0, |j| sol.x[j])).collect()).collect();
    let flow = LayeredFlow {
        g: vars.g.iter().map(|&k| sol.x[k].max(0.0)).collect(),
        f: vars.f.iter().map(|&k| sol.x[k].max(0.0)).collect(),
        epsilon,
    };
    let lambda = paths_to_lambda(&graph, &decompose_flow_to_lambda(&graph, &flow)?);
    let witness = lambda
        .into_iter()
        .map(|(tuple, weight)| {
            let choice = pick_choice(inst, &tuple, s, extreme, inst.revenues());
            WitnessAtom { tuple, weight, choice }
        })
        .collect();
    let rv = RobustValue { value: sol.value, witness, epsilon: flow.epsilon.clone() };
    Ok((rv, flow, graph))
}

/// Worst case through the compact LP over the layered graph.
pub fn compact_worst_case(inst: &Instance, s: &Assortment) -> Result<RobustValue> {
    compact_extreme(inst, s, Extreme::Worst).map(|r| r.0)
}

/// Best case through the compact LP, maximizing instead of minimizing.
pub fn compact_best_case(inst: &Instance, s: &Assortment) -> Result<RobustValue> {
    compact_extreme(inst, s, Extreme::Best).map(|r| r.0)
}

/// The optimal flow of the compact worst-case LP, with its graph.
pub fn compact_worst_flow(inst: &Instance, s: &Assortment) -> Result<(LayeredGraph, LayeredFlow)> {
    compact_extreme(inst, s, Extreme::Worst).map(|r| (r.2, r.1))
}

/// Strip paths from a conservative layered flow, always following the edge
/// with the most remaining flow. Paths lighter than `1e-12` are dropped.
pub fn decompose_flow_to_lambda(graph: &LayeredGraph, flow: &LayeredFlow) -> Result<Vec<LayeredPath>> {
    let last = graph.num_layers() - 1;
    for (v, vert) in graph.vertices.iter().enumerate() {
        let g = flow.g[v];
        if vert.layer < last {
            let out: f64 = graph.out_edges(v).iter().map(|&e| flow.f[e]).sum();
            if (out - g).abs() > CONSERVATION_TOL {
                return Err(Error::NonConservativeFlow { vertex: v, imbalance: out - g });
            }
        }
        if vert.layer > 0 {
            let inc: f64 = graph.in_edges(v).iter().map(|&e| flow.f[e]).sum();
            if (inc - g).abs() > CONSERVATION_TOL {
                return Err(Error::NonConservativeFlow { vertex: v, imbalance: inc - g });
            }
        }
    }
    let mut g = flow.g.clone();
    let mut f = flow.f.clone();
    let mut paths = Vec::new();
    let starts: Vec<usize> = graph.layer(0).collect();
    loop {
        let Some(&start) = starts.iter().filter(|&&v| g[v] > WITNESS_EPS).max_by(|&&a, &&b| g[a].total_cmp(&g[b]).then(b.cmp(&a))) else {
            break;
        };
        let mut path = vec![start];
        let mut edges = Vec::new();
        let mut weight = g[start];
        let mut v = start;
        while graph.vertices[v].layer < last {
            let best = graph.out_edges(v).iter().copied().max_by(|&a, &b| f[a].total_cmp(&f[b]).then(b.cmp(&a)));
            match best {
                Some(e) if f[e] > 0.0 => {
                    weight = weight.min(f[e]);
                    edges.push(e);
                    v = graph.edges[e].1;
                    weight = weight.min(g[v]);
                    path.push(v);
                }
                _ => break,
            }
        }
        if graph.vertices[v].layer < last || weight <= WITNESS_EPS {
            // numerical residue: retire the start vertex
            g[start] = 0.0;
            continue;
        }
        for &e in &edges {
            f[e] -= weight;
        }
        for &u in &path {
            g[u] -= weight;
        }
        paths.push(LayeredPath { vertices: path, weight });
    }
    Ok(paths)
}

/// Aggregate paths into tuple weights, tuples in stored positions and sorted.
pub fn paths_to_lambda(graph: &LayeredGraph, paths: &[LayeredPath]) -> Vec<(Vec<usize>, f64)> {
    let mut map: std::collections::BTreeMap<Vec<usize>, f64> = std::collections::BTreeMap::new();
    for p in paths {
        let mut t = vec![0; graph.order.len()];
        for (k, &v) in p.vertices.iter().enumerate() {
            t[graph.order[k]] = graph.vertices[v].product;
        }
        *map.entry(t).or_insert(0.0) += p.weight;
    }
    map.into_iter().filter(|(_, w)| *w > WITNESS_EPS).collect()
}

/// Throughput of each vertex implied by a set of paths.
pub fn reaggregate_g(graph: &LayeredGraph, paths: &[LayeredPath]) -> Vec<f64> {
    let mut g = vec![0.0; graph.vertices.len()];
    for p in paths {
        for &v in &p.vertices {
            g[v] += p.weight;
        }
    }
    g
}

/// Products that can enter the MILPs: those offered in the largest past assortment.
fn milp_products(graph: &LayeredGraph) -> Vec<usize> {
    graph.chain.last().expect("nonempty chain").iter().filter(|&i| i != 0).collect()
}

/// Cost terms of the penalty `M(x)` on the worst-case compact LP. Parameter
/// `k` stands for `x_k`; the constant part of `r_n (1 - x_j)` is returned
/// separately per vertex.
fn penalty_terms(graph: &LayeredGraph, g: &[usize], rn: f64) -> (Vec<(usize, usize, f64)>, Vec<f64>) {
    let mut terms = Vec::new();
    let mut constant = vec![0.0; graph.vertices.len()];
    for (v, vert) in graph.vertices.iter().enumerate() {
        let b = &graph.blocks[vert.layer];
        let (i, j) = (vert.product, vert.kappa_product);
        if (b.contains(i) && j != i) || (!b.contains(i) && b.contains(j)) {
            terms.push((g[v], i, rn));
        }
        if b.contains(j) {
            constant[v] += rn;
            terms.push((g[v], j, -rn));
        }
    }
    (terms, constant)
}

/// Dual of the worst-case compact LP with the forbidden set priced into the
/// objective. Returns the model (to be maximized), the index of the `x_0`
/// column, and the dual objective coefficients.
fn robust_dual(inst: &Instance, graph: &LayeredGraph) -> (LpModel, usize) {
    let r = inst.revenues().to_vec();
    let mut primal = LpModel::new(Sense::Minimize);
    let vars = add_compact(&mut primal, graph, inst, &|j| r[j]);
    let (terms, constant) = penalty_terms(graph, &vars.g, inst.r_max());
    for (v, c) in constant.into_iter().enumerate() {
        primal.obj[vars.g[v]] += c;
    }
    let (mut dual, x0) = dual_with_cost_params(&primal, &terms, inst.n() + 1);
    // product 0 is always offered; never-offered products stay out
    dual.lower[x0] = 1.0;
    let offered = graph.chain.last().expect("nonempty chain");
    for k in 1..=inst.n() {
        if !offered.contains(k) {
            dual.upper[x0 + k] = 0.0;
        }
    }
    (dual, x0)
}

fn assortment_from_x(x: &[f64], x0: usize, n: usize) -> Assortment {
    let mut s = BitSet::from_slice(&[0]);
    for k in 1..=n {
        if x[x0 + k] > 0.5 {
            s.insert(k);
        }
    }
    s
}

/// Robust assortment MILP for nested past assortments. Returns an optimal
/// assortment and the robust optimum.
pub fn solve_ro_milp(inst: &Instance) -> Result<(Assortment, f64)> {
    if inst.past().iter().any(|s| !s.contains(0)) {
        return Err(Error::NotApplicable("past assortments must contain 0".into()));
    }
    let graph = build_layered_graph(inst)?;
    let (dual, x0) = robust_dual(inst, &graph);
    let mut milp = MilpModel::new(dual);
    milp.binaries = milp_products(&graph).into_iter().map(|k| x0 + k).collect();
    match solve_milp(&milp)? {
        SolveStatus::Optimal(sol) => Ok((assortment_from_x(&sol.x, x0, inst.n()), sol.value)),
        SolveStatus::Infeasible | SolveStatus::Unbounded => Err(Error::InconsistentData),
        SolveStatus::IterationLimit => Err(Error::NumericalFailure("branch-and-bound node limit".into())),
    }
}

/// A point of the robust Pareto problem.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParetoSolution {
    pub assortment: Assortment,
    pub best_case: f64,
    pub worst_case: f64,
}

/// Maximize the best case subject to a worst case of at least `theta`.
pub fn solve_pareto_milp(inst: &Instance, theta: f64) -> Result<ParetoSolution> {
    let (_, ro) = solve_ro_milp(inst)?;
    solve_pareto_milp_with_ro(inst, theta, ro)
}

/// [`solve_pareto_milp`] with a known robust optimum.
pub fn solve_pareto_milp_with_ro(inst: &Instance, theta: f64, ro: f64) -> Result<ParetoSolution> {
    if theta > ro + 1e-7 {
        return Err(Error::ThetaInfeasible { theta, ro });
    }
    let graph = build_layered_graph(inst)?;
    let (dual, x0) = robust_dual(inst, &graph);
    let mut lp = dual;
    // the dual objective becomes the certificate row
    let cert: Vec<(usize, f64)> = lp.obj.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(j, &c)| (j, c)).collect();
    let slack = 1e-9 * theta.abs().max(1.0);
    lp.add_row(cert, RowKind::Ge, theta.min(ro) - slack);
    lp.obj.iter_mut().for_each(|c| *c = 0.0);
    // best-case primal with the forbidden set linked to x
    let r = inst.revenues().to_vec();
    let vars = add_compact(&mut lp, &graph, inst, &|j| r[j]);
    for (v, vert) in graph.vertices.iter().enumerate() {
        let b = &graph.blocks[vert.layer];
        let (i, j) = (vert.product, vert.kappa_product);
        let gv = vars.g[v];
        if (b.contains(i) && j != i) || (!b.contains(i) && b.contains(j)) {
            lp.add_row(vec![(gv, 1.0), (x0 + i, 1.0)], RowKind::Le, 1.0);
        }
        if b.contains(j) {
            lp.add_row(vec![(gv, 1.0), (x0 + j, -1.0)], RowKind::Le, 0.0);
        }
    }
    lp.sense = Sense::Maximize;
    let mut milp = MilpModel::new(lp);
    milp.binaries = milp_products(&graph).into_iter().map(|k| x0 + k).collect();
    let sol = match solve_milp(&milp)? {
        SolveStatus::Optimal(sol) => sol,
        SolveStatus::Infeasible => return Err(Error::ThetaInfeasible { theta, ro }),
        SolveStatus::Unbounded => return Err(Error::NumericalFailure("Pareto MILP unbounded".into())),
        SolveStatus::IterationLimit => return Err(Error::NumericalFailure("branch-and-bound node limit".into())),
    };
    let s = assortment_from_x(&sol.x, x0, inst.n());
    let worst = compact_worst_case(inst, &s)?.value;
    Ok(ParetoSolution { assortment: s, best_case: sol.value, worst_case: worst })
}
