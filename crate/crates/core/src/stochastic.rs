//! Ornstein-Uhlenbeck paths, their curvature, and Gaussian versus Laplace
//! differential entropy at equal variance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of `dX = -β X dt + σ dW`, `X(0) = x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub beta: f64,
    pub sigma: f64,
    pub x0: f64,
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
}

impl Default for OuParams {
    fn default() -> Self {
        Self {
            beta: 1.0,
            sigma: 1.0,
            x0: 0.0,
            dt: 1e-3,
            steps: 1000,
            seed: 0,
        }
    }
}

impl OuParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be at least 1".into()));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidParameter("x0 must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl OuPath {
    /// First time at which `|x| < fraction · |x0|`, if any.
    pub fn first_time_within(&self, fraction: f64) -> Option<f64> {
        let bound = fraction * self.values[0].abs();
        self.times
            .iter()
            .zip(&self.values)
            .find(|(_, x)| x.abs() < bound)
            .map(|(t, _)| *t)
    }
}

/// Euler-Maruyama path of `steps + 1` points. The generator is ChaCha8
/// seeded from `seed`, one standard normal per step.
pub fn simulate_ou(params: &OuParams) -> Result<OuPath> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let sqrt_dt = params.dt.sqrt();
    let mut x = params.x0;
    let mut times = Vec::with_capacity(params.steps + 1);
    let mut values = Vec::with_capacity(params.steps + 1);
    times.push(0.0);
    values.push(x);
    for k in 1..=params.steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        x += -params.beta * x * params.dt + params.sigma * sqrt_dt * z;
        times.push(k as f64 * params.dt);
        values.push(x);
    }
    Ok(OuPath { times, values })
}

/// Exact-transition sampler: `x ← x e^{-βdt} + σ √((1 − e^{-2βdt}) / 2β) z`.
pub fn simulate_ou_exact(params: &OuParams) -> Result<OuPath> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let decay = (-params.beta * params.dt).exp();
    let scale = params.sigma * ((1.0 - decay * decay) / (2.0 * params.beta)).sqrt();
    let mut x = params.x0;
    let mut times = vec![0.0];
    let mut values = vec![x];
    for k in 1..=params.steps {
        let z: f64 = StandardNormal.sample(&mut rng);
        x = x * decay + scale * z;
        times.push(k as f64 * params.dt);
        values.push(x);
    }
    Ok(OuPath { times, values })
}

/// Variance of `X_t` started from a constant: `σ²(1 − e^{-2βt}) / 2β`.
pub fn ou_variance(beta: f64, sigma: f64, t: f64) -> f64 {
    sigma * sigma * (1.0 - (-2.0 * beta * t).exp()) / (2.0 * beta)
}

/// Curvature of the OU random walk at time `t`: `1 − e^{-βt}`.
pub fn ou_curvature(beta: f64, t: f64) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
    }
    Ok(1.0 - (-beta * t).exp())
}

fn check_variance(phi: f64) -> Result<()> {
    if !(phi.is_finite() && phi > 0.0) {
        return Err(Error::InvalidParameter(format!("variance must be positive, got {phi}")));
    }
    Ok(())
}

/// Differential entropy of a normal law with variance `phi`: `½ ln(2πe φ)`.
pub fn gaussian_entropy(phi: f64) -> Result<f64> {
    check_variance(phi)?;
    Ok(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * phi).ln())
}

/// Differential entropy of a Laplace law with variance `phi`:
/// `1 + ln(2 √(φ/2)) = 1 + ln √(2φ)`.
pub fn laplace_entropy(phi: f64) -> Result<f64> {
    check_variance(phi)?;
    Ok(1.0 + (2.0 * phi).sqrt().ln())
}

/// `½ ln(πe) − 1`, the variance-independent gap between the two entropies.
pub fn gaussian_laplace_gap() -> f64 {
    0.5 * (std::f64::consts::PI * std::f64::consts::E).ln() - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_decay_matches_exponential() {
        let p = OuParams { beta: 1.0, sigma: 0.0, x0: 1.0, dt: 1e-3, steps: 2000, seed: 1 };
        let path = simulate_ou(&p).unwrap();
        assert_eq!(path.values.len(), 2001);
        for (t, x) in path.times.iter().zip(&path.values) {
            // Euler error for x' = -x on [0, 2] is bounded by t e^{-t} dt / 2 + O(dt²).
            assert!((x - (-t).exp()).abs() < 1e-3, "t={t} x={x}");
        }
    }

    #[test]
    fn zero_start_zero_noise_stays_zero() {
        let p = OuParams { beta: 0.7, sigma: 0.0, x0: 0.0, dt: 0.01, steps: 100, seed: 3 };
        assert!(simulate_ou(&p).unwrap().values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn same_seed_same_path() {
        let p = OuParams { seed: 42, steps: 50, ..Default::default() };
        assert_eq!(simulate_ou(&p).unwrap(), simulate_ou(&p).unwrap());
        let q = OuParams { seed: 43, ..p };
        assert_ne!(simulate_ou(&p).unwrap(), simulate_ou(&q).unwrap());
    }

    #[test]
    fn rejects_bad_params() {
        let ok = OuParams::default();
        assert!(simulate_ou(&OuParams { beta: 0.0, ..ok }).is_err());
        assert!(simulate_ou(&OuParams { sigma: -1.0, ..ok }).is_err());
        assert!(simulate_ou(&OuParams { dt: 0.0, ..ok }).is_err());
        assert!(simulate_ou(&OuParams { steps: 0, ..ok }).is_err());
        assert!(simulate_ou_exact(&OuParams { beta: -1.0, ..ok }).is_err());
    }

    #[test]
    fn curvature_values() {
        assert!((ou_curvature(0.05, 1.0).unwrap() - 0.0488).abs() < 5e-5);
        assert!((ou_curvature(0.15, 1.0).unwrap() - 0.1393).abs() < 5e-5);
        assert!((ou_curvature(1.0, 1.0).unwrap() - 0.6321).abs() < 5e-5);
        assert_eq!(ou_curvature(3.0, 0.0).unwrap(), 0.0);
        assert!(ou_curvature(1.0, -1.0).is_err());
    }

    #[test]
    fn entropy_values() {
        let two_pi_e = 2.0 * std::f64::consts::PI * std::f64::consts::E;
        assert!(gaussian_entropy(1.0 / two_pi_e).unwrap().abs() < 1e-15);
        assert!((gaussian_entropy(1.0).unwrap() - 1.418_938_533_204_672_7).abs() < 1e-12);
        let gain = gaussian_entropy(4.0).unwrap() - gaussian_entropy(1.0).unwrap();
        assert!((gain - 2f64.ln()).abs() < 1e-12);

        assert!((laplace_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((laplace_entropy(2.0).unwrap() - (1.0 + 2f64.ln())).abs() < 1e-15);
        assert!(gaussian_entropy(0.0).is_err());
        assert!(laplace_entropy(-1.0).is_err());
        assert!((gaussian_laplace_gap() - 0.072_364_942_924_699_97).abs() < 1e-12);
    }
}
