//! Metropolis sampler for the two-dimensional Coulomb gas
//! `P(z) ~ prod_{j<k} |z_j - z_k|^2 exp(-sum_l |z_l|^(2k))`,
//! the eigenvalue density of normal matrices with potential `|z|^(2k)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::seed::{mix_seed, stream_rng};
use crate::spectra::{Spectrum, SpectrumError};

/// Target acceptance rate of the burn-in tuner.
pub const TARGET_ACCEPTANCE: f64 = 0.4;
/// Full log-weight recomputation interval, in sweeps.
pub const RECOMPUTE_INTERVAL: usize = 100;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("potential exponent k must be at least 1")]
    BadExponent,
    #[error("proposal scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("thinning interval must be at least 1")]
    BadThinning,
    #[error("points {0} and {1} coincide")]
    Coincident(usize, usize),
    #[error("acceptance rate {rate:.3} outside [0.1, 0.9] (proposal scale {scale:e})")]
    BadAcceptance { rate: f64, scale: f64 },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LogGasConfig {
    pub n_points: usize,
    pub k_exponent: u32,
    /// Sweeps recorded after burn-in; one sweep proposes a move for every point.
    pub steps_per_point: usize,
    pub burn_in: usize,
    /// Initial Gaussian proposal width; tuned during burn-in.
    pub proposal_scale: f64,
    pub thinning: usize,
    pub seed: u64,
}

impl LogGasConfig {
    /// Defaults: 1000 burn-in sweeps, 1000 recorded sweeps thinned by 10,
    /// proposals at half the mean interparticle distance.
    pub fn new(n_points: usize, k_exponent: u32, seed: u64) -> Self {
        let mut cfg = Self {
            n_points,
            k_exponent,
            steps_per_point: 1000,
            burn_in: 1000,
            proposal_scale: 1.0,
            thinning: 10,
            seed,
        };
        if n_points > 0 && k_exponent > 0 {
            cfg.proposal_scale = 0.5 * cfg.support_radius() / (n_points as f64).sqrt();
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.n_points < 2 {
            return Err(SamplerError::TooFewPoints(self.n_points));
        }
        if self.k_exponent == 0 {
            return Err(SamplerError::BadExponent);
        }
        if !(self.proposal_scale > 0.0 && self.proposal_scale.is_finite()) {
            return Err(SamplerError::BadScale(self.proposal_scale));
        }
        if self.thinning == 0 {
            return Err(SamplerError::BadThinning);
        }
        Ok(())
    }

    /// `R = (N / k)^(1 / 2k)`, where `integral 2 pi r R1 dr` reaches `N`.
    pub fn support_radius(&self) -> f64 {
        (self.n_points as f64 / self.k_exponent as f64).powf(1.0 / (2.0 * self.k_exponent as f64))
    }

    pub fn digest(&self) -> String {
        format!(
            "n={};k={};sweeps={};burn_in={};scale={};thinning={}",
            self.n_points, self.k_exponent, self.steps_per_point, self.burn_in, self.proposal_scale, self.thinning
        )
    }
}

#[inline]
fn potential(z: Complex64, k: u32) -> f64 {
    z.norm_sqr().powi(k as i32)
}

/// `sum_{j<k} 2 ln|z_j - z_k| - sum_l |z_l|^(2k)`.
pub fn log_weight(config: &LogGasConfig, positions: &[Complex64]) -> Result<f64, SamplerError> {
    let mut w = 0.0;
    for (i, &a) in positions.iter().enumerate() {
        w -= potential(a, config.k_exponent);
        for (j, &b) in positions.iter().enumerate().skip(i + 1) {
            let d = (a - b).norm_sqr();
            if d == 0.0 {
                return Err(SamplerError::Coincident(i, j));
            }
            w += d.ln();
        }
    }
    Ok(w)
}

/// `sum_{j != i} ln(|new - z_j|^2 / |old - z_j|^2)`, or `None` on a collision.
#[inline]
fn pair_delta(positions: &[Complex64], i: usize, old: Complex64, new: Complex64) -> Option<f64> {
    // Products of a few ratios before each log; ratios stay far from
    // under/overflow for any configuration the chain can reach.
    const CHUNK: usize = 8;
    let mut total = 0.0;
    let mut prod = 1.0;
    let mut in_chunk = 0;
    for (j, &z) in positions.iter().enumerate() {
        if j == i {
            continue;
        }
        let dn = (new - z).norm_sqr();
        if dn == 0.0 {
            return None;
        }
        prod *= dn / (old - z).norm_sqr();
        in_chunk += 1;
        if in_chunk == CHUNK {
            total += prod.ln();
            prod = 1.0;
            in_chunk = 0;
        }
    }
    Some(total + prod.ln())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogGasRun {
    pub samples: Vec<Spectrum>,
    /// Acceptance over the recorded sweeps.
    pub acceptance_rate: f64,
    pub tuned_scale: f64,
    /// Largest difference between running and recomputed log-weight.
    pub max_drift: f64,
}

/// Runs one chain: random start drawn from the equilibrium radial profile, tuned burn-in, then
/// one configuration every `thinning` sweeps.
pub fn sample_log_gas(config: &LogGasConfig) -> Result<LogGasRun, SamplerError> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, 0);
    let n = config.n_points;
    let k = config.k_exponent;
    let radius = config.support_radius();
    let mut z: Vec<Complex64> = (0..n)
        .map(|_| Complex64::from_polar(radius * rng.gen::<f64>().powf(0.5 / k as f64), rng.gen::<f64>() * TAU))
        .collect();
    let mut logw = log_weight(config, &z)?;
    let mut scale = config.proposal_scale;
    let mut samples = Vec::new();
    let mut max_drift: f64 = 0.0;
    let (mut accepted, mut proposed) = (0u64, 0u64);
    let total = config.burn_in + config.steps_per_point;
    let mut window = (0u64, 0u64);

    for sweep in 0..total {
        for i in 0..n {
            let old = z[i];
            let step = Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
            let new = old + scale * step;
            let accept = pair_delta(&z, i, old, new).map(|pairs| pairs - potential(new, k) + potential(old, k));
            let ok = matches!(accept, Some(delta) if delta >= 0.0 || rng.gen::<f64>().ln() < delta);
            if ok {
                z[i] = new;
                logw += accept.unwrap_or(0.0);
            }
            if sweep < config.burn_in {
                window.0 += ok as u64;
                window.1 += 1;
            } else {
                accepted += ok as u64;
                proposed += 1;
            }
        }
        if sweep < config.burn_in && (sweep + 1) % 10 == 0 {
            let rate = window.0 as f64 / window.1 as f64;
            scale *= (rate / TARGET_ACCEPTANCE).sqrt().clamp(0.5, 2.0);
            window = (0, 0);
        }
        if (sweep + 1) % RECOMPUTE_INTERVAL == 0 {
            let exact = log_weight(config, &z)?;
            max_drift = max_drift.max((exact - logw).abs());
            logw = exact;
        }
        if sweep >= config.burn_in && (sweep + 1 - config.burn_in).is_multiple_of(config.thinning) {
            let index = samples.len() as u64;
            samples.push(Spectrum::new(
                z.clone(),
                format!("loggas:k{k}"),
                config.digest(),
                mix_seed(config.seed, index),
            )?);
        }
    }
    let acceptance_rate = if proposed > 0 { accepted as f64 / proposed as f64 } else { TARGET_ACCEPTANCE };
    if !(0.1..=0.9).contains(&acceptance_rate) {
        return Err(SamplerError::BadAcceptance { rate: acceptance_rate, scale });
    }
    Ok(LogGasRun { samples, acceptance_rate, tuned_scale: scale, max_drift })
}

/// Independent chains seeded `mix_seed(seed, chain)`, run in parallel.
pub fn sample_log_gas_chains(config: &LogGasConfig, chains: usize) -> Result<Vec<LogGasRun>, SamplerError> {
    (0..chains)
        .into_par_iter()
        .map(|c| sample_log_gas(&LogGasConfig { seed: mix_seed(config.seed, c as u64), ..config.clone() }))
        .collect()
}
