//! Monte Carlo check of the concentration bound for empirical observation
//! covariances.
//!
//! Each trial draws `M` source samples, passes them through the channel,
//! adds white noise and forms the empirical covariance at the probed
//! entries. The fraction of trials whose deviation from the population
//! covariance reaches `ε` is compared with the bound.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::channel::{operator_norm, FrequencyResponse};
use crate::covariance::concentration_bound;
use crate::error::{Error, Result};
use crate::rng::{self, trial_seed};
use crate::source::{standard_normal_matrix, SyntheticSource};

/// Fewest trials [`validate_bound_monte_carlo`] accepts.
pub const MIN_TRIALS: usize = 100;

/// Slack, in binomial standard errors, before an exceedance is flagged.
pub const FLAG_STANDARD_ERRORS: f64 = 3.0;

/// One covariance entry `(n, n')` (0-based) probed at deviation `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundProbe {
    pub n: usize,
    pub n_prime: usize,
    pub eps: f64,
}

impl BoundProbe {
    pub fn is_diagonal(&self) -> bool {
        self.n == self.n_prime
    }
}

#[derive(Debug, Clone)]
pub struct BoundValidationConfig {
    pub source: SyntheticSource,
    pub gamma: FrequencyResponse,
    pub sigma: f64,
    pub sample_count: usize,
    pub probes: Vec<BoundProbe>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoundCheck {
    pub probe_n: usize,
    pub probe_n_prime: usize,
    pub eps: f64,
    /// Fraction of trials with `|C_ŷ,M − C_ŷ| ≥ eps`.
    pub empirical: f64,
    pub bound: f64,
    /// Empirical frequency exceeds the bound by more than three standard errors.
    pub flag: bool,
}

impl BoundCheck {
    /// A bound of 1 or more says nothing about a probability.
    pub fn is_informative(&self) -> bool {
        self.bound < 1.0
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoundReport {
    pub trials: usize,
    pub c4: f64,
    pub h_norm: f64,
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn any_flagged(&self) -> bool {
        self.checks.iter().any(|c| c.flag)
    }
}

pub fn validate_bound_monte_carlo(
    config: &BoundValidationConfig,
    trials: usize,
) -> Result<BoundReport> {
    if trials < MIN_TRIALS {
        return Err(Error::invalid(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let n = config.source.dim();
    if config.gamma.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: config.gamma.len(),
        });
    }
    if config.sample_count == 0 {
        return Err(Error::invalid("sample count must be ≥ 1"));
    }
    if !(config.sigma >= 0.0) {
        return Err(Error::invalid(format!(
            "sigma must be ≥ 0, got {}",
            config.sigma
        )));
    }
    for p in &config.probes {
        if p.n >= n || p.n_prime >= n {
            return Err(Error::invalid(format!(
                "probe ({}, {}) outside 1..={n}",
                p.n + 1,
                p.n_prime + 1
            )));
        }
        if !(p.eps > 0.0) {
            return Err(Error::invalid(format!(
                "probe eps must be > 0, got {}",
                p.eps
            )));
        }
    }

    let c4 = config.source.fourth_moment();
    let h_norm = operator_norm(&config.gamma);
    let cov_x = config.source.covariance();
    let gamma = config.gamma.as_slice();
    let sigma = config.sigma;
    let population: Vec<f64> = config
        .probes
        .iter()
        .map(|p| {
            let noise = if p.is_diagonal() { sigma * sigma } else { 0.0 };
            gamma[p.n] * gamma[p.n_prime] * cov_x.get(p.n, p.n_prime) + noise
        })
        .collect();

    let rows: Vec<usize> = config
        .probes
        .iter()
        .flat_map(|p| [p.n, p.n_prime])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let row_slot = |v: usize| rows.binary_search(&v).expect("probe row registered");
    let mixing_rows = DMatrix::from_fn(rows.len(), config.source.mixing().ncols(), |r, k| {
        config.source.mixing()[(rows[r], k)]
    });
    let m = config.sample_count;

    let exceed: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(trial_seed(config.seed, t), rng::BOUND_STREAM);
            let z = standard_normal_matrix(&mut rng, mixing_rows.ncols(), m);
            let noise = standard_normal_matrix(&mut rng, rows.len(), m);
            let mut y = &mixing_rows * z;
            for (r, &v) in rows.iter().enumerate() {
                for k in 0..m {
                    y[(r, k)] = gamma[v] * y[(r, k)] + sigma * noise[(r, k)];
                }
            }
            config
                .probes
                .iter()
                .zip(&population)
                .map(|(p, &c)| {
                    let a = y.row(row_slot(p.n));
                    let b = y.row(row_slot(p.n_prime));
                    let emp = a.dot(&b) / m as f64;
                    (emp - c).abs() >= p.eps
                })
                .collect()
        })
        .collect();

    let mut checks = Vec::with_capacity(config.probes.len());
    for (i, p) in config.probes.iter().enumerate() {
        let hits = exceed.iter().filter(|row| row[i]).count();
        let empirical = hits as f64 / trials as f64;
        let bound = concentration_bound(c4, h_norm, sigma, m, p.eps, p.is_diagonal())?;
        checks.push(BoundCheck {
            probe_n: p.n,
            probe_n_prime: p.n_prime,
            eps: p.eps,
            empirical,
            bound,
            flag: exceeds_bound(empirical, bound, trials),
        });
    }
    Ok(BoundReport {
        trials,
        c4,
        h_norm,
        checks,
    })
}

/// Whether an observed frequency sits more than three binomial standard
/// errors above `bound`. Bounds of 1 or more never flag.
pub fn exceeds_bound(empirical: f64, bound: f64, trials: usize) -> bool {
    if bound >= 1.0 {
        return false;
    }
    let se = (bound * (1.0 - bound) / trials as f64).sqrt();
    empirical > bound + FLAG_STANDARD_ERRORS * se
}
