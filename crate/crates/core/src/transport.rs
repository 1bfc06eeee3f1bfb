//! Exact Wasserstein-1 distance between finitely supported measures.
//!
//! The transportation problem is solved with the transportation simplex
//! (MODI potentials on a spanning-tree basis). Degenerate bases keep their
//! zero-flow cells explicitly and both the entering and the leaving cell
//! follow Bland's lowest-index rule, which rules out cycling without
//! perturbing the supplies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DistanceMatrix;

/// Normalization slack accepted for input measures.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Tolerance used when validating plans.
pub const PLAN_TOLERANCE: f64 = 1e-9;

/// Reduced costs above `-OPTIMALITY_TOLERANCE` count as non-improving.
/// Hop costs are integers, so reduced costs are integral up to rounding.
const OPTIMALITY_TOLERANCE: f64 = 1e-9;

/// Nonnegative measure of unit total mass on node indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityMeasure {
    support: Vec<(usize, f64)>,
}

impl ProbabilityMeasure {
    /// Validates and sorts `(node, mass)` pairs. Every mass must be
    /// positive and the total must be 1 within [`MASS_TOLERANCE`].
    pub fn new(mut support: Vec<(usize, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        support.sort_by_key(|&(node, _)| node);
        for pair in support.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidMeasure(format!(
                    "node {} appears twice in the support",
                    pair[0].0
                )));
            }
        }
        if let Some(&(node, mass)) = support.iter().find(|(_, m)| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidMeasure(format!(
                "node {node} has non-positive mass {mass}"
            )));
        }
        let total: f64 = support.iter().map(|&(_, m)| m).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!(
                "total mass {total} differs from 1"
            )));
        }
        Ok(Self { support })
    }

    pub fn dirac(node: usize) -> Self {
        Self {
            support: vec![(node, 1.0)],
        }
    }

    /// Support sorted by node index.
    pub fn support(&self) -> &[(usize, f64)] {
        &self.support
    }

    pub fn mass(&self, node: usize) -> f64 {
        self.support
            .binary_search_by_key(&node, |&(n, _)| n)
            .map(|pos| self.support[pos].1)
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Optimal coupling with its cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub flows: Vec<Flow>,
    pub cost: f64,
}

/// Solution of a dense transportation problem: basic cells (including
/// degenerate zero-flow cells) and the objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub cells: Vec<(usize, usize, f64)>,
    pub cost: f64,
    pub pivots: usize,
}

/// Solves `min Σ c_ij x_ij` subject to row sums `supply`, column sums
/// `demand` and `x ≥ 0`. `cost` is row-major, `supply.len() × demand.len()`.
pub fn solve_transportation(
    supply: &[f64],
    demand: &[f64],
    cost: &[f64],
) -> Result<TransportSolution> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::InvalidMeasure("empty supply or demand".into()));
    }
    if cost.len() != m * n {
        return Err(Error::InvalidParameter(format!(
            "cost has {} entries, expected {}",
            cost.len(),
            m * n
        )));
    }
    let total_supply: f64 = supply.iter().sum();
    let total_demand: f64 = demand.iter().sum();
    if (total_supply - total_demand).abs() > PLAN_TOLERANCE {
        return Err(Error::InvalidMeasure(format!(
            "unbalanced problem: supply {total_supply} vs demand {total_demand}"
        )));
    }

    let mut tableau = Tableau::northwest_corner(supply, demand, cost);
    let max_pivots = 50 * m * n + 1000;
    let mut pivots = 0;
    while let Some(entering) = tableau.entering_cell() {
        tableau.pivot(entering);
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Numerical(format!(
                "transportation simplex exceeded {max_pivots} pivots"
            )));
        }
    }

    let cells: Vec<(usize, usize, f64)> = tableau
        .basis
        .iter()
        .map(|&cell| (cell / n, cell % n, tableau.flow[cell]))
        .collect();
    let cost = cells.iter().map(|&(i, j, x)| cost[i * n + j] * x).sum();
    Ok(TransportSolution {
        cells,
        cost,
        pivots,
    })
}

struct Tableau<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    flow: Vec<f64>,
    /// Basic cells as row-major indices; always `m + n - 1` of them.
    basis: Vec<usize>,
    in_basis: Vec<bool>,
}

impl<'a> Tableau<'a> {
    fn northwest_corner(supply: &[f64], demand: &[f64], cost: &'a [f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut flow = vec![0.0; m * n];
        let mut in_basis = vec![false; m * n];
        let mut basis = Vec::with_capacity(m + n - 1);
        let mut row_left = supply[0];
        let mut col_left = demand[0];
        let (mut i, mut j) = (0, 0);
        loop {
            let cell = i * n + j;
            let q = row_left.min(col_left).max(0.0);
            flow[cell] = q;
            in_basis[cell] = true;
            basis.push(cell);
            if i == m - 1 && j == n - 1 {
                break;
            }
            // Advance exactly one index per cell so the basis is a spanning
            // tree with m + n - 1 cells, degenerate or not.
            let advance_row = if i == m - 1 {
                false
            } else if j == n - 1 {
                true
            } else {
                row_left <= col_left
            };
            if advance_row {
                col_left -= q;
                i += 1;
                row_left = supply[i];
            } else {
                row_left -= q;
                j += 1;
                col_left = demand[j];
            }
        }
        Self {
            m,
            n,
            cost,
            flow,
            basis,
            in_basis,
        }
    }

    /// Tree adjacency over m row vertices followed by n column vertices.
    fn tree_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for &cell in &self.basis {
            adj[cell / self.n].push(cell);
            adj[self.m + cell % self.n].push(cell);
        }
        adj
    }

    fn potentials(&self, adj: &[Vec<usize>]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        u[0] = 0.0;
        let mut stack = vec![0usize];
        while let Some(vertex) = stack.pop() {
            for &cell in &adj[vertex] {
                let (i, j) = (cell / n, cell % n);
                if vertex < m {
                    if v[j].is_nan() {
                        v[j] = self.cost[cell] - u[i];
                        stack.push(m + j);
                    }
                } else if u[i].is_nan() {
                    u[i] = self.cost[cell] - v[j];
                    stack.push(i);
                }
            }
        }
        (u, v)
    }

    /// Lowest-index non-basic cell with negative reduced cost.
    fn entering_cell(&self) -> Option<usize> {
        let adj = self.tree_adjacency();
        let (u, v) = self.potentials(&adj);
        (0..self.m * self.n).find(|&cell| {
            !self.in_basis[cell]
                && self.cost[cell] - u[cell / self.n] - v[cell % self.n] < -OPTIMALITY_TOLERANCE
        })
    }

    fn pivot(&mut self, entering: usize) {
        let (m, n) = (self.m, self.n);
        let adj = self.tree_adjacency();
        let (row, col) = (entering / n, entering % n);

        // Tree path from the entering row vertex to the entering column vertex.
        let mut parent_cell = vec![usize::MAX; m + n];
        let mut visited = vec![false; m + n];
        visited[row] = true;
        let mut stack = vec![row];
        while let Some(vertex) = stack.pop() {
            if vertex == m + col {
                break;
            }
            for &cell in &adj[vertex] {
                let other = if vertex < m { m + cell % n } else { cell / n };
                if !visited[other] {
                    visited[other] = true;
                    parent_cell[other] = cell;
                    stack.push(other);
                }
            }
        }

        // Walk back from the column vertex: cells alternate -, +, -, ...
        let mut path = Vec::new();
        let mut vertex = m + col;
        while vertex != row {
            let cell = parent_cell[vertex];
            path.push(cell);
            vertex = if vertex < m { m + cell % n } else { cell / n };
        }

        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for &cell in path.iter().step_by(2) {
            let x = self.flow[cell];
            if x < theta || (x == theta && cell < leaving) {
                theta = x;
                leaving = cell;
            }
        }

        self.flow[entering] = theta;
        for (k, &cell) in path.iter().enumerate() {
            if k % 2 == 0 {
                self.flow[cell] = if cell == leaving {
                    0.0
                } else {
                    (self.flow[cell] - theta).max(0.0)
                };
            } else {
                self.flow[cell] += theta;
            }
        }
        self.in_basis[leaving] = false;
        self.in_basis[entering] = true;
        let slot = self
            .basis
            .iter()
            .position(|&c| c == leaving)
            .expect("leaving cell is basic");
        self.basis[slot] = entering;
    }
}

/// Hop distance between two nodes, failing if they are not connected.
fn hop(d: &DistanceMatrix, a: usize, b: usize) -> Result<u32> {
    d.get(a, b)
        .ok_or_else(|| Error::Unreachable(a.to_string(), b.to_string()))
}

/// Exact W1 distance between two measures under the hop metric `d`.
pub fn solve_w1(
    mu1: &ProbabilityMeasure,
    mu2: &ProbabilityMeasure,
    d: &DistanceMatrix,
) -> Result<TransportPlan> {
    let sources = mu1.support();
    let targets = mu2.support();
    for &(node, _) in sources.iter().chain(targets) {
        if node >= d.len() {
            return Err(Error::InvalidMeasure(format!(
                "node {node} outside a {}-node distance matrix",
                d.len()
            )));
        }
    }
    let mut cost = Vec::with_capacity(sources.len() * targets.len());
    for &(x, _) in sources {
        for &(y, _) in targets {
            cost.push(f64::from(hop(d, x, y)?));
        }
    }
    let supply: Vec<f64> = sources.iter().map(|&(_, m)| m).collect();
    let demand: Vec<f64> = targets.iter().map(|&(_, m)| m).collect();
    let solution = solve_transportation(&supply, &demand, &cost)?;

    let mut flows: Vec<Flow> = solution
        .cells
        .into_iter()
        .filter(|&(_, _, x)| x > 0.0)
        .map(|(i, j, mass)| Flow {
            source: sources[i].0,
            target: targets[j].0,
            mass,
        })
        .collect();
    flows.sort_by_key(|f| (f.source, f.target));
    let cost = plan_cost(&flows, d)?;
    Ok(TransportPlan { flows, cost })
}

fn plan_cost(flows: &[Flow], d: &DistanceMatrix) -> Result<f64> {
    flows.iter().try_fold(0.0, |acc, f| {
        Ok(acc + f64::from(hop(d, f.source, f.target)?) * f.mass)
    })
}

/// Outcome of [`validate_plan`]: worst violation of each constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub min_flow: f64,
    pub source_marginal_error: f64,
    pub target_marginal_error: f64,
    pub cost_error: f64,
    /// Names of violated constraints; empty when the plan passes.
    pub failures: Vec<String>,
}

impl PlanReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Largest violation magnitude across all checks.
    pub fn worst_violation(&self) -> f64 {
        (-self.min_flow)
            .max(0.0)
            .max(self.source_marginal_error)
            .max(self.target_marginal_error)
            .max(self.cost_error)
    }
}

/// Checks nonnegativity, both marginals and the stated cost of `plan`.
pub fn validate_plan(
    plan: &TransportPlan,
    mu1: &ProbabilityMeasure,
    mu2: &ProbabilityMeasure,
    d: &DistanceMatrix,
) -> PlanReport {
    let mut failures = Vec::new();
    let min_flow = plan
        .flows
        .iter()
        .map(|f| f.mass)
        .fold(f64::INFINITY, f64::min);
    let min_flow = if plan.flows.is_empty() { 0.0 } else { min_flow };
    if min_flow < -PLAN_TOLERANCE {
        failures.push(format!("nonnegativity: flow of {min_flow}"));
    }

    let marginal_error = |measure: &ProbabilityMeasure, pick: fn(&Flow) -> usize| {
        let mut nodes: Vec<usize> = plan.flows.iter().map(pick).collect();
        nodes.extend(measure.support().iter().map(|&(n, _)| n));
        nodes.sort_unstable();
        nodes.dedup();
        nodes
            .into_iter()
            .map(|node| {
                let shipped: f64 = plan
                    .flows
                    .iter()
                    .filter(|f| pick(f) == node)
                    .map(|f| f.mass)
                    .sum();
                (shipped - measure.mass(node)).abs()
            })
            .fold(0.0, f64::max)
    };
    let source_marginal_error = marginal_error(mu1, |f| f.source);
    let target_marginal_error = marginal_error(mu2, |f| f.target);
    if source_marginal_error > PLAN_TOLERANCE {
        failures.push(format!(
            "source marginal: off by {source_marginal_error}"
        ));
    }
    if target_marginal_error > PLAN_TOLERANCE {
        failures.push(format!(
            "target marginal: off by {target_marginal_error}"
        ));
    }

    let cost_error = match plan_cost(&plan.flows, d) {
        Ok(c) => (c - plan.cost).abs(),
        Err(_) => f64::INFINITY,
    };
    if cost_error > PLAN_TOLERANCE {
        failures.push(format!("cost consistency: off by {cost_error}"));
    }

    PlanReport {
        min_flow,
        source_marginal_error,
        target_marginal_error,
        cost_error,
        failures,
    }
}
