//! Seeded one-factor market generator.
//!
//! Daily log returns follow `r_i = σ (λ f + √(1 − λ²) ε_i)` with a common
//! factor `f` and idiosyncratic noise `ε_i`, both standard normal, so the
//! pairwise correlation inside a regime is `λ²`. Regimes are concatenated
//! in order and the returns cumulated into prices starting at 100.

use std::ops::Range;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::PriceMatrix;

/// Daily return volatility shared by all synthetic assets.
pub const DAILY_VOLATILITY: f64 = 0.01;
const START_PRICE: f64 = 100.0;

/// A stretch of `length` return days with factor loading `loading`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub length: usize,
    pub loading: f64,
}

/// Return-row ranges covered by each regime.
pub fn regime_spans(regimes: &[Regime]) -> Vec<Range<usize>> {
    let mut start = 0;
    regimes
        .iter()
        .map(|r| {
            let span = start..start + r.length;
            start += r.length;
            span
        })
        .collect()
}

/// Weekdays starting at 2000-01-03.
pub fn business_days(count: usize) -> Vec<NaiveDate> {
    let mut day = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid start date");
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(day);
        }
        day = day + Days::new(1);
    }
    out
}

/// Generates `Σ length + 1` dates of closes for `n_assets` tickers
/// `S000, S001, ...`. The stream is ChaCha8 seeded with `seed`; each day
/// draws the factor first, then one shock per asset in ticker order.
pub fn synthesize_market(regimes: &[Regime], n_assets: usize, seed: u64) -> Result<PriceMatrix> {
    if regimes.is_empty() {
        return Err(Error::InvalidParameter("at least one regime is required".into()));
    }
    if n_assets < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 assets, got {n_assets}"
        )));
    }
    for r in regimes {
        if !(0.0..1.0).contains(&r.loading) {
            return Err(Error::InvalidParameter(format!(
                "factor loading must lie in [0, 1), got {}",
                r.loading
            )));
        }
        if r.length == 0 {
            return Err(Error::InvalidParameter("regime length must be positive".into()));
        }
    }
    let days: usize = regimes.iter().map(|r| r.length).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut closes = DMatrix::zeros(days + 1, n_assets);
    closes.row_mut(0).fill(START_PRICE);
    let mut t = 0;
    for regime in regimes {
        let idio = (1.0 - regime.loading * regime.loading).sqrt();
        for _ in 0..regime.length {
            let factor: f64 = StandardNormal.sample(&mut rng);
            for asset in 0..n_assets {
                let shock: f64 = StandardNormal.sample(&mut rng);
                let r = DAILY_VOLATILITY * (regime.loading * factor + idio * shock);
                closes[(t + 1, asset)] = closes[(t, asset)] * r.exp();
            }
            t += 1;
        }
    }
    let width = n_assets.saturating_sub(1).to_string().len().max(3);
    let tickers = (0..n_assets).map(|i| format!("S{i:0width$}")).collect();
    PriceMatrix::new(business_days(days + 1), tickers, closes)
}
