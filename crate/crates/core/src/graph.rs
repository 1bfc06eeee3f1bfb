//! Undirected graphs with string node identifiers and hop-metric geodesics.
//!
//! Nodes are kept sorted by identifier and addressed internally by dense
//! indices, so every traversal and every serialized output is reproducible.
//! Edge weights only shape random-walk measures; all distances are hop
//! counts.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge between two node indices, `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Immutable undirected graph without self-loops or parallel edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
    edges: Vec<Edge>,
}

/// Collects nodes and edges by label, then freezes them into a [`Graph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), f64>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, label: impl Into<String>) -> Result<&mut Self> {
        let label = label.into();
        validate_label(&label)?;
        self.nodes.insert(label);
        Ok(self)
    }

    pub fn add_edge(
        &mut self,
        a: impl Into<String>,
        b: impl Into<String>,
        weight: f64,
    ) -> Result<&mut Self> {
        let (a, b) = (a.into(), b.into());
        validate_label(&a)?;
        validate_label(&b)?;
        if a == b {
            return Err(Error::InvalidGraph(format!("self-loop on `{a}`")));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidGraph(format!(
                "edge `{a}`-`{b}` has non-positive weight {weight}"
            )));
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if self.edges.contains_key(&key) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge `{}`-`{}`",
                key.0, key.1
            )));
        }
        self.nodes.insert(key.0.clone());
        self.nodes.insert(key.1.clone());
        self.edges.insert(key, weight);
        Ok(self)
    }

    pub fn build(self) -> Graph {
        let labels: Vec<String> = self.nodes.into_iter().collect();
        let index: HashMap<String, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        let mut adjacency = vec![Vec::new(); labels.len()];
        let mut edges = Vec::with_capacity(self.edges.len());
        for ((a, b), weight) in self.edges {
            let (u, v) = (index[&a], index[&b]);
            adjacency[u].push((v, weight));
            adjacency[v].push((u, weight));
            edges.push(Edge { u, v, weight });
        }
        for row in &mut adjacency {
            row.sort_by_key(|&(v, _)| v);
        }
        // BTreeMap order on label pairs is the same as index order.
        Graph {
            labels,
            index,
            adjacency,
            edges,
        }
    }
}

fn validate_label(label: &str) -> Result<()> {
    if label.is_empty() || label.chars().any(char::is_whitespace) {
        return Err(Error::InvalidGraph(format!(
            "node identifier {label:?} is empty or contains whitespace"
        )));
    }
    Ok(())
}

impl Graph {
    /// Builds a graph on `n` integer-labelled nodes.
    ///
    /// Labels are zero-padded so that sorted label order coincides with
    /// index order: node `i` of the input is node `i` of the graph.
    pub fn from_indexed_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let width = n.saturating_sub(1).to_string().len();
        let label = |i: usize| format!("{i:0width$}");
        let mut builder = GraphBuilder::new();
        for i in 0..n {
            builder.add_node(label(i))?;
        }
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            builder.add_edge(label(u), label(v), w)?;
        }
        Ok(builder.build())
    }

    /// Unit-weight variant of [`Graph::from_indexed_edges`].
    pub fn from_unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::from_indexed_edges(n, &weighted)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownNode(label.to_string()))
    }

    /// Edges sorted by `(u, v)` with `u < v`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `node` with edge weights, sorted by neighbor index.
    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// Sum of incident edge weights.
    pub fn weighted_degree(&self, node: usize) -> f64 {
        self.adjacency[node].iter().map(|&(_, w)| w).sum()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.adjacency[u]
            .binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|pos| self.adjacency[u][pos].1)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v).is_some()
    }

    /// Same topology with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "weight scale must be positive, got {factor}"
            )));
        }
        let mut out = self.clone();
        for row in &mut out.adjacency {
            for entry in row.iter_mut() {
                entry.1 *= factor;
            }
        }
        for e in &mut out.edges {
            e.weight *= factor;
        }
        Ok(out)
    }

    /// Writes the edge-list text format: one `u v w` line per edge, plus a
    /// bare `u` line for every isolated node.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_edge_list().as_bytes())?;
        Ok(())
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (i, label) in self.labels.iter().enumerate() {
            if self.adjacency[i].is_empty() {
                let _ = writeln!(s, "{label}");
            }
        }
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {}", self.labels[e.u], self.labels[e.v], e.weight);
        }
        s
    }

    /// Parses the edge-list format. Blank lines and `#` comments are
    /// ignored; a missing weight defaults to 1.
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut builder = GraphBuilder::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let tokens: Vec<&str> = content.split_whitespace().collect();
            match tokens.as_slice() {
                [node] => {
                    builder.add_node(*node).map_err(|e| parse_err(e.to_string()))?;
                }
                [a, b] => {
                    builder
                        .add_edge(*a, *b, 1.0)
                        .map_err(|e| parse_err(e.to_string()))?;
                }
                [a, b, w] => {
                    let weight: f64 = w
                        .parse()
                        .map_err(|_| parse_err(format!("bad weight `{w}`")))?;
                    builder
                        .add_edge(*a, *b, weight)
                        .map_err(|e| parse_err(e.to_string()))?;
                }
                _ => return Err(parse_err(format!("expected `u v [w]`, got `{content}`"))),
            }
        }
        Ok(builder.build())
    }
}

/// All-pairs hop distances. `None` marks an unreachable pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    hops: Vec<Option<u32>>,
}

impl DistanceMatrix {
    /// Runs one BFS per node.
    pub fn new(graph: &Graph) -> Self {
        let n = graph.node_count();
        let rows: Vec<Vec<Option<u32>>> = (0..n)
            .into_par_iter()
            .map(|s| bfs_from(graph, s))
            .collect();
        Self {
            n,
            hops: rows.into_iter().flatten().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, u: usize, v: usize) -> Option<u32> {
        self.hops[u * self.n + v]
    }

    pub fn row(&self, u: usize) -> &[Option<u32>] {
        &self.hops[u * self.n..(u + 1) * self.n]
    }
}

/// Hop distances from `source` to every node, indexed by node.
pub fn bfs_from(graph: &Graph, source: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; graph.node_count()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for &(v, _) in graph.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Hop distances from the node labelled `source`, keyed by label.
pub fn bfs_distances(graph: &Graph, source: &str) -> Result<BTreeMap<String, Option<u32>>> {
    let s = graph.index_of(source)?;
    Ok(bfs_from(graph, s)
        .into_iter()
        .enumerate()
        .map(|(v, d)| (graph.label(v).to_string(), d))
        .collect())
}

/// Connected components as sorted index lists, ordered by smallest member.
pub fn connected_components(graph: &Graph) -> Vec<Vec<usize>> {
    let n = graph.node_count();
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut component = vec![start];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(v, _) in graph.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    component.push(v);
                    stack.push(v);
                }
            }
        }
        component.sort_unstable();
        components.push(component);
    }
    components
}

/// Fails with [`Error::Disconnected`] naming one node from each of the
/// first two components.
pub fn ensure_connected(graph: &Graph) -> Result<()> {
    let components = connected_components(graph);
    if components.len() > 1 {
        return Err(Error::Disconnected {
            first: graph.label(components[0][0]).to_string(),
            second: graph.label(components[1][0]).to_string(),
        });
    }
    Ok(())
}

/// Diameter and mean geodesic length of a connected graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub diameter: u32,
    pub average_shortest_path: f64,
}

/// Path statistics from precomputed distances; `graph` must be connected
/// with at least two nodes.
pub fn path_stats(graph: &Graph, distances: &DistanceMatrix) -> Result<PathStats> {
    ensure_connected(graph)?;
    let n = graph.node_count();
    if n < 2 {
        return Err(Error::InvalidGraph(
            "path statistics need at least two nodes".into(),
        ));
    }
    let mut diameter = 0u32;
    let mut total = 0u64;
    for u in 0..n {
        for v in (u + 1)..n {
            let d = distances.get(u, v).ok_or_else(|| Error::Disconnected {
                first: graph.label(u).to_string(),
                second: graph.label(v).to_string(),
            })?;
            diameter = diameter.max(d);
            total += u64::from(d);
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(PathStats {
        diameter,
        average_shortest_path: total as f64 / pairs,
    })
}

/// Longest geodesic of a connected graph.
pub fn diameter(graph: &Graph) -> Result<u32> {
    ensure_connected(graph)?;
    if graph.node_count() < 2 {
        return Ok(0);
    }
    Ok(path_stats(graph, &DistanceMatrix::new(graph))?.diameter)
}

/// Mean hop distance over unordered distinct pairs.
pub fn average_shortest_path(graph: &Graph) -> Result<f64> {
    Ok(path_stats(graph, &DistanceMatrix::new(graph))?.average_shortest_path)
}

/// Small named graphs used by tests, benches and the examples.
pub mod generators {
    use super::Graph;

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_unweighted(n, &edges).expect("valid path")
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        Graph::from_unweighted(n, &edges).expect("valid complete graph")
    }

    /// Hub is node 0, leaves are 1..=leaves.
    pub fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
        Graph::from_unweighted(leaves + 1, &edges).expect("valid star")
    }

    pub fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_unweighted(n, &edges).expect("valid cycle")
    }
}
