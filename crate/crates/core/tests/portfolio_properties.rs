mod support;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use ricci_core::portfolio::{curvature_portfolio_measure, min_risk_weights, PortfolioProblem, KKT_TOLERANCE};
use support::*;

fn random_covariance(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| r.random_range(-0.5..0.5));
    let diag = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| r.random_range(0.02..0.3)));
    &a * a.transpose() + diag
}

fn risk(cov: &DMatrix<f64>, w: &[f64]) -> f64 {
    let w = DVector::from_column_slice(w);
    (w.transpose() * cov * &w)[(0, 0)]
}

/// Minimum of `wᵀΣw` over the simplex grid with spacing 1e-3.
fn grid_minimum(cov: &DMatrix<f64>) -> ([f64; 3], f64) {
    let steps = 1000;
    let mut best = ([0.0; 3], f64::INFINITY);
    for i in 0..=steps {
        for j in 0..=(steps - i) {
            let w = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
            let v = risk(cov, &w);
            if v < best.1 {
                best = (w, v);
            }
        }
    }
    best
}

#[test]
fn three_assets_match_grid_search() {
    let mut r = rng(11);
    for case in 0..25 {
        let cov = random_covariance(&mut r, 3);
        let problem = PortfolioProblem::new(DVector::zeros(3), cov.clone(), 0.0).unwrap();
        let result = min_risk_weights(&problem).unwrap();
        let (grid_w, grid_risk) = grid_minimum(&cov);
        for k in 0..3 {
            assert!((result.weights[k] - grid_w[k]).abs() <= 1e-3, "case {case}: {:?} vs {grid_w:?}", result.weights);
        }
        assert!((result.risk - grid_risk).abs() <= 1e-6, "case {case}: {} vs {grid_risk}", result.risk);
        assert!(result.risk <= grid_risk + 1e-12);
    }
}

#[test]
fn larger_problems_satisfy_kkt() {
    let mut r = rng(12);
    for n in [5, 10, 30, 60] {
        let cov = random_covariance(&mut r, n);
        let problem = PortfolioProblem::new(DVector::zeros(n), cov, 0.0).unwrap();
        let result = min_risk_weights(&problem).unwrap();
        assert!((result.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        assert!(result.weights.iter().all(|&w| w >= -1e-12));
        assert!(result.kkt_residual <= KKT_TOLERANCE);
    }
}

#[test]
fn reordering_assets_permutes_weights() {
    let mut r = rng(13);
    for _ in 0..20 {
        let n = 6;
        let cov = random_covariance(&mut r, n);
        let perm = [3, 0, 5, 1, 4, 2];
        let permuted = DMatrix::from_fn(n, n, |i, j| cov[(perm[i], perm[j])]);
        let a = min_risk_weights(&PortfolioProblem::new(DVector::zeros(n), cov, 0.0).unwrap()).unwrap();
        let b = min_risk_weights(&PortfolioProblem::new(DVector::zeros(n), permuted, 0.0).unwrap()).unwrap();
        assert!((a.risk - b.risk).abs() <= 1e-12);
        for (i, &src) in perm.iter().enumerate() {
            assert!((b.weights[i] - a.weights[src]).abs() <= 1e-9);
        }
    }
}

#[test]
fn curvature_measure_is_bounded() {
    let mut r = rng(14);
    for _ in 0..50 {
        let n = 7;
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                if r.random_bool(0.4) {
                    let v = r.random_range(-2.0..1.0);
                    k[(i, j)] = v;
                    k[(j, i)] = v;
                }
            }
        }
        let raw: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let v = curvature_portfolio_measure(&w, &k).unwrap();
        assert!(v.abs() <= k.amax() + 1e-12);
        assert!((v - curvature_portfolio_measure(&w, &k.transpose()).unwrap()).abs() < 1e-15);
    }
}
