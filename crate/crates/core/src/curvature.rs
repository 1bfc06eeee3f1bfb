//! Ollivier-Ricci curvature from one-step random-walk measures.
//!
//! For nodes `x ≠ y`, `κ(x, y) = 1 - W1(μ_x, μ_y) / d(x, y)` where `μ_x`
//! puts mass `w_xy / d_x` on each neighbor `y` of `x` and `d` is the hop
//! metric.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ensure_connected, DistanceMatrix, Graph};
use crate::transport::{solve_w1, ProbabilityMeasure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureResult {
    pub pair: (usize, usize),
    pub kappa: f64,
    pub w1: f64,
    pub hop: u32,
}

/// Curvature of every edge and the mean over edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureSummary {
    pub per_edge: Vec<CurvatureResult>,
    pub average: f64,
}

/// One-step random-walk distribution from `x`.
pub fn node_measure(graph: &Graph, x: usize) -> Result<ProbabilityMeasure> {
    let neighbors = graph.neighbors(x);
    if neighbors.is_empty() {
        return Err(Error::IsolatedNode(graph.label(x).to_string()));
    }
    let total = graph.weighted_degree(x);
    let mut support: Vec<(usize, f64)> = neighbors.iter().map(|&(y, w)| (y, w / total)).collect();
    // Absorb rounding so the masses sum to one as tightly as possible.
    let drift: f64 = 1.0 - support.iter().map(|&(_, m)| m).sum::<f64>();
    if let Some(largest) = support
        .iter_mut()
        .max_by(|a, b| a.1.total_cmp(&b.1))
    {
        largest.1 += drift;
    }
    ProbabilityMeasure::new(support)
}

/// Curvature between any two distinct, mutually reachable nodes.
pub fn pair_curvature(
    graph: &Graph,
    distances: &DistanceMatrix,
    x: usize,
    y: usize,
) -> Result<CurvatureResult> {
    if x == y {
        return Err(Error::InvalidParameter(format!(
            "curvature needs two distinct nodes, got `{}` twice",
            graph.label(x)
        )));
    }
    let hop = distances.get(x, y).ok_or_else(|| {
        Error::Unreachable(graph.label(x).to_string(), graph.label(y).to_string())
    })?;
    // Always solve in (low, high) orientation so κ(x, y) and κ(y, x) agree bitwise.
    let (a, b) = if x < y { (x, y) } else { (y, x) };
    let mu_a = node_measure(graph, a)?;
    let mu_b = node_measure(graph, b)?;
    let w1 = solve_w1(&mu_a, &mu_b, distances)?.cost;
    Ok(CurvatureResult {
        pair: (x, y),
        kappa: 1.0 - w1 / f64::from(hop),
        w1,
        hop,
    })
}

/// Curvature of every edge of a connected graph, in edge order.
pub fn edge_curvatures(graph: &Graph, distances: &DistanceMatrix) -> Result<CurvatureSummary> {
    ensure_connected(graph)?;
    if graph.edge_count() == 0 {
        return Err(Error::InvalidGraph("graph has no edges".into()));
    }
    let per_edge = graph
        .edges()
        .par_iter()
        .map(|e| pair_curvature(graph, distances, e.u, e.v))
        .collect::<Result<Vec<_>>>()?;
    let average = per_edge.iter().map(|c| c.kappa).sum::<f64>() / per_edge.len() as f64;
    Ok(CurvatureSummary { per_edge, average })
}

/// Curvature of every unordered pair of distinct nodes, row-major.
pub fn all_pair_curvatures(
    graph: &Graph,
    distances: &DistanceMatrix,
) -> Result<Vec<CurvatureResult>> {
    ensure_connected(graph)?;
    let n = graph.node_count();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .collect();
    pairs
        .par_iter()
        .map(|&(u, v)| pair_curvature(graph, distances, u, v))
        .collect()
}

/// Symmetric node × node matrix holding edge curvatures, zero elsewhere.
pub fn curvature_matrix(summary: &CurvatureSummary, graph: &Graph) -> DMatrix<f64> {
    let n = graph.node_count();
    let mut k = DMatrix::zeros(n, n);
    for c in &summary.per_edge {
        let (u, v) = c.pair;
        if u != v && graph.has_edge(u, v) {
            k[(u, v)] = c.kappa;
            k[(v, u)] = c.kappa;
        }
    }
    k
}

impl CurvatureSummary {
    /// CSV with header `u,v,kappa,w1,hop`, node labels from `graph`.
    pub fn write_csv<W: Write>(&self, graph: &Graph, out: W) -> Result<()> {
        write_curvature_csv(&self.per_edge, graph, out)
    }
}

pub fn write_curvature_csv<W: Write>(
    results: &[CurvatureResult],
    graph: &Graph,
    out: W,
) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["u", "v", "kappa", "w1", "hop"])?;
    for c in results {
        writer.write_record([
            graph.label(c.pair.0).to_string(),
            graph.label(c.pair.1).to_string(),
            c.kappa.to_string(),
            c.w1.to_string(),
            c.hop.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
