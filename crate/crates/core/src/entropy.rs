//! Entropy of the simple random walk on a graph.
//!
//! The walk moves from `x` to a neighbor `y` with probability
//! `η_xy = w_xy / d_x`. Its stationary distribution is `π(x) = d_x / Σ d`,
//! nodal entropy is `S(x) = -Σ_y η_xy ln η_xy` and the network entropy is
//! `S_e = Σ_x π(x) S(x)`, all in nats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ensure_connected, Graph};

/// Largest tolerated `|πφ - π|` entry.
pub const STATIONARITY_TOLERANCE: f64 = 1e-12;

/// Row-stochastic transition matrix stored as sparse rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl StochasticMatrix {
    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x]
            .binary_search_by_key(&y, |&(n, _)| n)
            .map(|pos| self.rows[x][pos].1)
            .unwrap_or(0.0)
    }

    /// Row vector times matrix.
    pub fn apply_left(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows.len()];
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, p) in row {
                out[y] += pi[x] * p;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyResult {
    pub pi: Vec<f64>,
    pub nodal: Vec<f64>,
    pub global: f64,
    /// `max_x |(πφ)(x) - π(x)|`
    pub stationarity_residual: f64,
}

pub fn stochastic_matrix(graph: &Graph) -> Result<StochasticMatrix> {
    let rows = (0..graph.node_count())
        .map(|x| {
            let neighbors = graph.neighbors(x);
            if neighbors.is_empty() {
                return Err(Error::IsolatedNode(graph.label(x).to_string()));
            }
            let total = graph.weighted_degree(x);
            Ok(neighbors.iter().map(|&(y, w)| (y, w / total)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(StochasticMatrix { rows })
}

/// Degree-proportional invariant distribution, checked against `π = πφ`.
///
/// Power iteration is avoided on purpose: on bipartite graphs (every tree)
/// the walk is periodic and never converges.
pub fn stationary_distribution(matrix: &StochasticMatrix, graph: &Graph) -> Result<Vec<f64>> {
    ensure_connected(graph)?;
    if matrix.len() != graph.node_count() {
        return Err(Error::InvalidParameter(format!(
            "transition matrix has {} rows for {} nodes",
            matrix.len(),
            graph.node_count()
        )));
    }
    let degrees: Vec<f64> = (0..graph.node_count())
        .map(|x| graph.weighted_degree(x))
        .collect();
    let volume: f64 = degrees.iter().sum();
    if volume <= 0.0 {
        return Err(Error::InvalidGraph("graph has no edges".into()));
    }
    let pi: Vec<f64> = degrees.iter().map(|d| d / volume).collect();
    let residual = stationarity_residual(matrix, &pi);
    if residual > STATIONARITY_TOLERANCE {
        return Err(Error::Numerical(format!(
            "stationary distribution residual {residual:e} exceeds {STATIONARITY_TOLERANCE:e}"
        )));
    }
    Ok(pi)
}

pub fn stationarity_residual(matrix: &StochasticMatrix, pi: &[f64]) -> f64 {
    matrix
        .apply_left(pi)
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Shannon entropy of one transition row; `0 ln 0` counts as zero.
fn row_entropy(row: &[(usize, f64)]) -> f64 {
    -row.iter()
        .filter(|&&(_, p)| p > 0.0)
        .map(|&(_, p)| p * p.ln())
        .sum::<f64>()
}

pub fn global_entropy(graph: &Graph) -> Result<EntropyResult> {
    if graph.node_count() < 2 {
        return Err(Error::InvalidGraph(
            "entropy needs at least two nodes".into(),
        ));
    }
    ensure_connected(graph)?;
    let matrix = stochastic_matrix(graph)?;
    let pi = stationary_distribution(&matrix, graph)?;
    let nodal: Vec<f64> = matrix.rows().iter().map(|r| row_entropy(r)).collect();
    let global = pi.iter().zip(&nodal).map(|(p, s)| p * s).sum();
    let stationarity_residual = stationarity_residual(&matrix, &pi);
    Ok(EntropyResult {
        pi,
        nodal,
        global,
        stationarity_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators::*;

    #[test]
    fn transition_rows() {
        let m = stochastic_matrix(&complete(3)).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(m.get(x, y), if x == y { 0.0 } else { 0.5 });
            }
        }
        let m = stochastic_matrix(&path(2)).unwrap();
        assert_eq!(m.rows(), &[vec![(1, 1.0)], vec![(0, 1.0)]]);
        let weighted = Graph::from_indexed_edges(3, &[(0, 1, 1.0), (0, 2, 3.0)]).unwrap();
        let m = stochastic_matrix(&weighted).unwrap();
        assert_eq!(m.rows()[0], vec![(1, 0.25), (2, 0.75)]);
    }

    #[test]
    fn isolated_node_rejected() {
        let g = Graph::from_unweighted(3, &[(0, 1)]).unwrap();
        assert!(matches!(stochastic_matrix(&g), Err(Error::IsolatedNode(_))));
    }

    #[test]
    fn stationary_closed_forms() {
        let g = path(2);
        let pi = stationary_distribution(&stochastic_matrix(&g).unwrap(), &g).unwrap();
        assert_eq!(pi, vec![0.5, 0.5]);

        for leaves in [3, 5, 8] {
            let g = star(leaves);
            let m = stochastic_matrix(&g).unwrap();
            let pi = stationary_distribution(&m, &g).unwrap();
            assert!((pi[0] - 0.5).abs() < 1e-15);
            for p in &pi[1..] {
                assert!((p - 1.0 / (2.0 * leaves as f64)).abs() < 1e-15);
            }
            assert!(stationarity_residual(&m, &pi) <= STATIONARITY_TOLERANCE);
        }

        let g = complete(7);
        let pi = stationary_distribution(&stochastic_matrix(&g).unwrap(), &g).unwrap();
        assert!(pi.iter().all(|p| (p - 1.0 / 7.0).abs() < 1e-15));
    }

    #[test]
    fn stationary_requires_connected() {
        let g = crate::graph::Graph::from_unweighted(4, &[(0, 1), (2, 3)]).unwrap();
        let m = stochastic_matrix(&g).unwrap();
        assert!(matches!(
            stationary_distribution(&m, &g),
            Err(Error::Disconnected { .. })
        ));
        assert!(global_entropy(&g).is_err());
    }

    #[test]
    fn entropy_closed_forms() {
        for n in 3..10 {
            let r = global_entropy(&complete(n)).unwrap();
            assert!((r.global - ((n - 1) as f64).ln()).abs() < 1e-12);
        }
        let r = global_entropy(&star(3)).unwrap();
        assert!((r.global - 0.5 * 3f64.ln()).abs() < 1e-12);
        assert!((r.nodal[0] - 3f64.ln()).abs() < 1e-15);
        assert_eq!(r.nodal[1], 0.0);
        assert_eq!(global_entropy(&path(2)).unwrap().global, 0.0);
    }

    #[test]
    fn result_serializes() {
        let r = global_entropy(&path(2)).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: EntropyResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
