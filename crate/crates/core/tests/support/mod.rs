//! Test-only oracles, independent of the library's solvers.
//!
//! * a dense two-phase simplex over exact rationals (Bland's rule), used to
//!   solve transportation problems from scratch;
//! * Floyd-Warshall hop distances;
//! * seeded random graphs and rational measures.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ricci_core::graph::Graph;
use ricci_core::transport::ProbabilityMeasure;

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().expect("finite rational")
}

/// Exact optimum of `min c·x, A x = b, x ≥ 0` (with `b ≥ 0`), or `None`
/// when infeasible. Dense tableau, two phases, Bland's rule.
pub fn lp_minimum(c: &[Q], a: &[Vec<Q>], b: &[Q]) -> Option<Q> {
    let m = a.len();
    let n = c.len();
    // Columns: n structural, m artificial, then rhs.
    let width = n + m + 1;
    let mut t: Vec<Vec<Q>> = (0..m)
        .map(|i| {
            assert!(!b[i].is_negative());
            let mut row = vec![Q::zero(); width];
            row[..n].clone_from_slice(&a[i]);
            row[n + i] = Q::one();
            row[width - 1] = b[i].clone();
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the sum of artificials.
    let phase1: Vec<Q> = (0..n + m).map(|j| if j >= n { Q::one() } else { Q::zero() }).collect();
    run_simplex(&mut t, &mut basis, &phase1, n + m);
    let infeasibility: Q = basis
        .iter()
        .enumerate()
        .filter(|(_, &j)| j >= n)
        .map(|(r, _)| t[r][width - 1].clone())
        .fold(Q::zero(), |acc, v| acc + v);
    if infeasibility.is_positive() {
        return None;
    }

    // Pivot remaining (zero-level) artificials out, dropping redundant rows.
    let mut r = 0;
    while r < t.len() {
        if basis[r] >= n {
            match (0..n).find(|&j| !t[r][j].is_zero()) {
                Some(j) => {
                    pivot(&mut t, r, j);
                    basis[r] = j;
                    r += 1;
                }
                None => {
                    t.remove(r);
                    basis.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }

    run_simplex(&mut t, &mut basis, c, n);
    Some(
        basis
            .iter()
            .enumerate()
            .map(|(r, &j)| c[j].clone() * t[r][width - 1].clone())
            .fold(Q::zero(), |acc, v| acc + v),
    )
}

fn pivot(t: &mut [Vec<Q>], row: usize, col: usize) {
    let p = t[row][col].clone();
    for v in t[row].iter_mut() {
        *v = v.clone() / p.clone();
    }
    let pivot_row = t[row].clone();
    for (r, other) in t.iter_mut().enumerate() {
        if r == row || other[col].is_zero() {
            continue;
        }
        let factor = other[col].clone();
        for (v, pv) in other.iter_mut().zip(&pivot_row) {
            *v = v.clone() - factor.clone() * pv.clone();
        }
    }
}

/// Simplex on columns `0..allowed`; `cost` indexes those columns.
fn run_simplex(t: &mut [Vec<Q>], basis: &mut [usize], cost: &[Q], allowed: usize) {
    let width = t.first().map_or(0, Vec::len);
    loop {
        let entering = (0..allowed).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let z: Q = basis
                .iter()
                .enumerate()
                .map(|(r, &bj)| cost[bj].clone() * t[r][j].clone())
                .fold(Q::zero(), |acc, v| acc + v);
            (cost[j].clone() - z).is_negative()
        });
        let Some(col) = entering else { return };
        let mut best: Option<(Q, usize, usize)> = None;
        for r in 0..t.len() {
            if t[r][col].is_positive() {
                let ratio = t[r][width - 1].clone() / t[r][col].clone();
                let better = match &best {
                    None => true,
                    Some((br, _, bvar)) => ratio < *br || (ratio == *br && basis[r] < *bvar),
                };
                if better {
                    best = Some((ratio, r, basis[r]));
                }
            }
        }
        let (_, row, _) = best.expect("transportation LPs are bounded");
        pivot(t, row, col);
        basis[row] = col;
    }
}

/// Exact W1 of two rational measures with integer costs `cost[i][j]`.
pub fn transport_oracle(supply: &[Q], demand: &[Q], cost: &[Vec<i64>]) -> Q {
    let (m, n) = (supply.len(), demand.len());
    let c: Vec<Q> = (0..m * n).map(|k| q(cost[k / n][k % n])).collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, s) in supply.iter().enumerate() {
        a.push((0..m * n).map(|k| if k / n == i { Q::one() } else { Q::zero() }).collect());
        b.push(s.clone());
    }
    for (j, d) in demand.iter().enumerate() {
        a.push((0..m * n).map(|k| if k % n == j { Q::one() } else { Q::zero() }).collect());
        b.push(d.clone());
    }
    lp_minimum(&c, &a, &b).expect("balanced transportation problems are feasible")
}

/// All-pairs hop distances by Floyd-Warshall; `None` when unreachable.
pub fn floyd_warshall(g: &Graph) -> Vec<Vec<Option<u32>>> {
    let n = g.node_count();
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for e in g.edges() {
        d[e.u][e.v] = Some(1);
        d[e.v][e.u] = Some(1);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|cur| a + b < cur) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// Uniform one-step measure of `x` as exact rationals (unit weights).
pub fn uniform_neighbor_measure(g: &Graph, x: usize) -> Vec<(usize, Q)> {
    let deg = g.degree(x) as i64;
    g.neighbors(x).iter().map(|&(y, _)| (y, frac(1, deg))).collect()
}

/// Exact W1 between rational measures under Floyd-Warshall hop distances.
pub fn w1_oracle(g: &Graph, mu1: &[(usize, Q)], mu2: &[(usize, Q)]) -> Q {
    let d = floyd_warshall(g);
    let cost: Vec<Vec<i64>> = mu1
        .iter()
        .map(|&(x, _)| {
            mu2.iter()
                .map(|&(y, _)| i64::from(d[x][y].expect("connected support")))
                .collect()
        })
        .collect();
    let supply: Vec<Q> = mu1.iter().map(|(_, m)| m.clone()).collect();
    let demand: Vec<Q> = mu2.iter().map(|(_, m)| m.clone()).collect();
    transport_oracle(&supply, &demand, &cost)
}

/// Exact Ollivier-Ricci curvature of `(x, y)` on an unweighted graph.
pub fn curvature_oracle(g: &Graph, x: usize, y: usize) -> Q {
    let d = floyd_warshall(g);
    let hop = d[x][y].expect("connected pair");
    let w1 = w1_oracle(g, &uniform_neighbor_measure(g, x), &uniform_neighbor_measure(g, y));
    Q::one() - w1 / q(i64::from(hop))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random connected unweighted graph: a random spanning tree plus each
/// remaining pair independently with probability `extra`.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, extra: f64) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = std::collections::BTreeSet::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        let (a, b) = (order[k].min(parent), order[k].max(parent));
        edges.insert((a, b));
    }
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random_bool(extra) {
                edges.insert((u, v));
            }
        }
    }
    let edges: Vec<_> = edges.into_iter().collect();
    Graph::from_unweighted(n, &edges).expect("valid random graph")
}

/// Random tree on `n` nodes.
pub fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    random_connected_graph(rng, n, 0.0)
}

/// Random measure on up to `max_support` distinct nodes with integer masses
/// `k_i / K`, returned both exactly and as a library measure.
pub fn random_measure(
    rng: &mut ChaCha8Rng,
    n_nodes: usize,
    max_support: usize,
) -> (Vec<(usize, Q)>, ProbabilityMeasure) {
    let size = rng.random_range(1..=max_support.min(n_nodes));
    let mut nodes: Vec<usize> = (0..n_nodes).collect();
    nodes.shuffle(rng);
    nodes.truncate(size);
    nodes.sort_unstable();
    let weights: Vec<i64> = nodes.iter().map(|_| rng.random_range(1..=20)).collect();
    let total: i64 = weights.iter().sum();
    let exact = nodes
        .iter()
        .zip(&weights)
        .map(|(&v, &k)| (v, frac(k, total)))
        .collect();
    let float = ProbabilityMeasure::new(
        nodes
            .iter()
            .zip(&weights)
            .map(|(&v, &k)| (v, k as f64 / total as f64))
            .collect(),
    )
    .expect("normalized measure");
    (exact, float)
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(x: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
        let mut r = vec![0.0; x.len()];
        let mut k = 0;
        while k < idx.len() {
            let mut end = k;
            while end + 1 < idx.len() && x[idx[end + 1]] == x[idx[k]] {
                end += 1;
            }
            let avg = (k + end) as f64 / 2.0 + 1.0;
            for &i in &idx[k..=end] {
                r[i] = avg;
            }
            k = end + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
