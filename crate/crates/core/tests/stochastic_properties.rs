use rayon::prelude::*;
use ricci_core::stochastic::{
    gaussian_entropy, gaussian_laplace_gap, laplace_entropy, ou_curvature, ou_variance, simulate_ou,
    simulate_ou_exact, OuParams,
};

fn sample_variance_at(steps: usize, dt: f64, exact: bool) -> f64 {
    let finals: Vec<f64> = (0..10_000u64)
        .into_par_iter()
        .map(|seed| {
            let p = OuParams { beta: 1.0, sigma: 1.0, x0: 0.0, dt, steps, seed };
            let path = if exact { simulate_ou_exact(&p) } else { simulate_ou(&p) }.unwrap();
            *path.values.last().unwrap()
        })
        .collect();
    let n = finals.len() as f64;
    let mean = finals.iter().sum::<f64>() / n;
    finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[test]
fn euler_maruyama_variance_matches_closed_form() {
    let expected = ou_variance(1.0, 1.0, 2.0);
    let var = sample_variance_at(2000, 1e-3, false);
    assert!((var / expected - 1.0).abs() < 0.05, "{var} vs {expected}");
}

#[test]
fn exact_sampler_variance_matches_closed_form() {
    let expected = ou_variance(1.0, 1.0, 2.0);
    let var = sample_variance_at(20, 0.1, true);
    assert!((var / expected - 1.0).abs() < 0.05, "{var} vs {expected}");
}

#[test]
fn curvature_monotone_and_bounded() {
    let betas = [0.01, 0.05, 0.15, 0.5, 1.0, 3.0];
    let times = [0.0, 0.1, 0.5, 1.0, 2.0, 10.0];
    for &t in &times {
        let ks: Vec<f64> = betas.iter().map(|&b| ou_curvature(b, t).unwrap()).collect();
        assert!(ks.iter().all(|&k| (0.0..1.0).contains(&k)));
        if t > 0.0 {
            assert!(ks.windows(2).all(|w| w[0] < w[1]));
        }
    }
    for &b in &betas {
        let ks: Vec<f64> = times.iter().map(|&t| ou_curvature(b, t).unwrap()).collect();
        assert!(ks.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn stronger_reversion_relaxes_sooner() {
    let hit = |beta: f64| {
        let p = OuParams { beta, sigma: 0.0, x0: 1.0, dt: 1e-3, steps: 200_000, seed: 0 };
        simulate_ou(&p).unwrap().first_time_within(0.1).unwrap()
    };
    let (slow, mid, fast) = (hit(0.05), hit(0.15), hit(1.0));
    assert!(fast < mid && mid < slow, "{fast} {mid} {slow}");
}

#[test]
fn gaussian_exceeds_laplace_by_constant() {
    for phi in [1e-3, 0.1, 1.0, 10.0, 1e4] {
        let gap = gaussian_entropy(phi).unwrap() - laplace_entropy(phi).unwrap();
        assert!((gap - gaussian_laplace_gap()).abs() < 1e-12);
        assert!(gap > 0.0);
    }
}
