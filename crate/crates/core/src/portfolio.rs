//! Long-only minimum-variance portfolio and its projection onto edge
//! curvature.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{window_covariance, ReturnMatrix};

/// Relative ridge: `ε = DEFAULT_RIDGE_SCALE · trace(Σ) / N`.
pub const DEFAULT_RIDGE_SCALE: f64 = 1e-6;

/// Termination threshold on the relative KKT residual.
pub const KKT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioProblem {
    mean_returns: DVector<f64>,
    covariance: DMatrix<f64>,
    ridge: f64,
}

impl PortfolioProblem {
    pub fn new(mean_returns: DVector<f64>, covariance: DMatrix<f64>, ridge: f64) -> Result<Self> {
        let n = covariance.nrows();
        if n == 0 || covariance.ncols() != n || mean_returns.len() != n {
            return Err(Error::InvalidParameter(format!(
                "covariance is {}x{} with {} mean returns",
                covariance.nrows(),
                covariance.ncols(),
                mean_returns.len()
            )));
        }
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(Error::InvalidParameter(format!("ridge must be nonnegative, got {ridge}")));
        }
        let scale = covariance.amax().max(1.0);
        let asymmetry = (&covariance - covariance.transpose()).amax();
        if asymmetry > 1e-12 * scale {
            return Err(Error::InvalidParameter(format!(
                "covariance is not symmetric (max deviation {asymmetry:e})"
            )));
        }
        Ok(Self {
            mean_returns,
            covariance,
            ridge,
        })
    }

    /// Problem for the return rows `start..start + len`, with the default
    /// trace-scaled ridge.
    pub fn from_window(returns: &ReturnMatrix, start: usize, len: usize) -> Result<Self> {
        let covariance = window_covariance(returns, start, len)?;
        let means = returns.values.rows(start, len).row_mean().transpose();
        let ridge = default_ridge(&covariance);
        Self::new(means, covariance, ridge)
    }

    pub fn len(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    fn regularized(&self) -> DMatrix<f64> {
        let mut q = self.covariance.clone();
        for i in 0..q.nrows() {
            q[(i, i)] += self.ridge;
        }
        q
    }
}

pub fn default_ridge(covariance: &DMatrix<f64>) -> f64 {
    DEFAULT_RIDGE_SCALE * covariance.trace() / covariance.nrows() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioResult {
    pub weights: Vec<f64>,
    /// `wᵀ Σ w` under the unregularized covariance.
    pub risk: f64,
    /// `wᵀ r̄`.
    pub expected_return: f64,
    pub kkt_residual: f64,
}

/// Minimizes `wᵀ(Σ + εI)w` over `{Σ w = 1, w ≥ 0}` with a primal
/// active-set method started at the lowest-variance vertex.
pub fn min_risk_weights(problem: &PortfolioProblem) -> Result<PortfolioResult> {
    let q = problem.regularized();
    let n = q.nrows();
    if q.clone().cholesky().is_none() {
        return Err(Error::Numerical(format!(
            "covariance plus ridge {:e} is not positive definite; use a larger ridge",
            problem.ridge
        )));
    }
    let scale = 2.0 * (0..n).map(|i| q[(i, i)]).fold(0.0, f64::max);
    let tolerance = 1e-12 * scale;

    let start = (0..n)
        .min_by(|&a, &b| q[(a, a)].total_cmp(&q[(b, b)]))
        .expect("non-empty problem");
    let mut free = vec![false; n];
    free[start] = true;
    let mut w = DVector::zeros(n);
    w[start] = 1.0;

    let max_iterations = 20 * n + 100;
    let mut converged = false;
    for _ in 0..max_iterations {
        let target = equality_solution(&q, &free)?;
        let blocking = (0..n)
            .filter(|&i| free[i] && target[i] < 0.0)
            .map(|i| (i, w[i] / (w[i] - target[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        if let Some((blocked, alpha)) = blocking {
            w += (&target - &w) * alpha;
            w[blocked] = 0.0;
            free[blocked] = false;
            continue;
        }
        w = target;
        let gradient = &q * &w * 2.0;
        let level = free_level(&gradient, &free);
        let entering = (0..n)
            .filter(|&i| !free[i])
            .map(|i| (i, gradient[i] - level))
            .filter(|&(_, s)| s < -tolerance)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        match entering {
            Some((i, _)) => free[i] = true,
            None => {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "active-set solver did not converge in {max_iterations} iterations"
        )));
    }

    for x in w.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let kkt_residual = kkt_residual(&q, &w);
    if kkt_residual > KKT_TOLERANCE {
        return Err(Error::Numerical(format!(
            "KKT residual {kkt_residual:e} exceeds {KKT_TOLERANCE:e}"
        )));
    }
    let risk = (w.transpose() * &problem.covariance * &w)[(0, 0)];
    let expected_return = w.dot(&problem.mean_returns);
    Ok(PortfolioResult {
        weights: w.iter().copied().collect(),
        risk,
        expected_return,
        kkt_residual,
    })
}

/// Minimizer of `wᵀQw` subject to `Σ w = 1` with `w` zero outside `free`.
fn equality_solution(q: &DMatrix<f64>, free: &[bool]) -> Result<DVector<f64>> {
    let idx: Vec<usize> = (0..free.len()).filter(|&i| free[i]).collect();
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| q[(idx[a], idx[b])]);
    let chol = sub
        .cholesky()
        .ok_or_else(|| Error::Numerical("free block lost positive definiteness".into()))?;
    let z = chol.solve(&DVector::from_element(idx.len(), 1.0));
    let total = z.sum();
    let mut out = DVector::zeros(free.len());
    for (k, &i) in idx.iter().enumerate() {
        out[i] = z[k] / total;
    }
    Ok(out)
}

fn free_level(gradient: &DVector<f64>, free: &[bool]) -> f64 {
    let (sum, count) = free
        .iter()
        .zip(gradient.iter())
        .filter(|(f, _)| **f)
        .fold((0.0, 0usize), |(s, c), (_, g)| (s + g, c + 1));
    sum / count.max(1) as f64
}

/// KKT residual for the simplex-constrained problem, with gradient terms
/// divided by `2 max_i Q_ii` so the value does not depend on return units.
pub fn kkt_residual(q: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    let n = w.len();
    let scale = 2.0 * (0..n).map(|i| q[(i, i)]).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let gradient = q * w * 2.0;
    let support: Vec<bool> = w.iter().map(|&x| x > 0.0).collect();
    let level = free_level(&gradient, &support);
    let mut residual = (w.sum() - 1.0).abs();
    for i in 0..n {
        residual = residual.max((-w[i]).max(0.0));
        let slack = (gradient[i] - level) / scale;
        if support[i] {
            residual = residual.max(slack.abs());
        } else {
            residual = residual.max((-slack).max(0.0));
        }
    }
    residual
}

/// `wᵀ K w` for a curvature matrix `K` (zero diagonal, zero off-edge).
pub fn curvature_portfolio_measure(weights: &[f64], curvature: &DMatrix<f64>) -> Result<f64> {
    let n = weights.len();
    if curvature.nrows() != n || curvature.ncols() != n {
        return Err(Error::InvalidParameter(format!(
            "{} weights against a {}x{} curvature matrix",
            n,
            curvature.nrows(),
            curvature.ncols()
        )));
    }
    let w = DVector::from_column_slice(weights);
    Ok((w.transpose() * curvature * &w)[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(cov: DMatrix<f64>) -> PortfolioProblem {
        let n = cov.nrows();
        PortfolioProblem::new(DVector::zeros(n), cov, 0.0).unwrap()
    }

    #[test]
    fn identity_gives_equal_weights() {
        for n in 1..8 {
            let r = min_risk_weights(&problem(DMatrix::identity(n, n))).unwrap();
            for w in &r.weights {
                assert!((w - 1.0 / n as f64).abs() < 1e-12);
            }
            assert!((r.risk - 1.0 / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn two_asset_analytic() {
        let r = min_risk_weights(&problem(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])))).unwrap();
        assert!((r.weights[0] - 0.8).abs() < 1e-12);
        assert!((r.weights[1] - 0.2).abs() < 1e-12);
        assert!((r.risk - 0.8).abs() < 1e-12);
        assert!(r.kkt_residual <= KKT_TOLERANCE);
    }

    #[test]
    fn binding_nonnegativity() {
        // Asset 1 is a noisier copy of asset 0; the unconstrained optimum shorts it.
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]);
        let r = min_risk_weights(&problem(cov)).unwrap();
        assert_eq!(r.weights, vec![1.0, 0.0]);
        assert!((r.risk - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dominant_variance_gets_smallest_weight() {
        let cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.0, 0.3, 1.2, 0.0, 0.0, 0.0, 9.0]);
        let r = min_risk_weights(&problem(cov)).unwrap();
        assert!(r.weights[2] < r.weights[0] && r.weights[2] < r.weights[1]);
    }

    #[test]
    fn singular_without_ridge_fails() {
        let cov = DMatrix::from_element(3, 3, 1.0);
        let err = min_risk_weights(&problem(cov.clone())).unwrap_err();
        assert!(matches!(err, Error::Numerical(ref m) if m.contains("larger ridge")));
        let ridged = PortfolioProblem::new(DVector::zeros(3), cov, 1e-6).unwrap();
        let r = min_risk_weights(&ridged).unwrap();
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_malformed_problems() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(PortfolioProblem::new(DVector::zeros(2), asym, 0.0).is_err());
        assert!(PortfolioProblem::new(DVector::zeros(3), DMatrix::identity(2, 2), 0.0).is_err());
        assert!(PortfolioProblem::new(DVector::zeros(2), DMatrix::identity(2, 2), -1.0).is_err());
    }

    #[test]
    fn curvature_measure_examples() {
        let zero = DMatrix::zeros(2, 2);
        assert_eq!(curvature_portfolio_measure(&[0.3, 0.7], &zero).unwrap(), 0.0);

        let k3 = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 0.5 });
        let third = 1.0 / 3.0;
        let v = curvature_portfolio_measure(&[third; 3], &k3).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(curvature_portfolio_measure(&[0.0, 1.0, 0.0], &k3).unwrap(), 0.0);
        assert!(curvature_portfolio_measure(&[0.5, 0.5], &k3).is_err());
    }
}
