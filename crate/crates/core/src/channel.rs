//! Shift-invariant channels in their spectral form.
//!
//! A channel `H = U Γ Uᵀ` that commutes with the shift is fully described by
//! its frequency responses `γ(n)`, the diagonal of `Γ`. Applying it to a
//! spectral signal is a pointwise product, and its operator norm is
//! `max |γ(n)|`.

use nalgebra::DMatrix;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::spectral::{Domain, SignalEnsemble};

/// Responses with magnitude at or below this are refused by [`pseudo_inverse`].
pub const NEAR_ZERO_RESPONSE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse(Vec<f64>);

impl FrequencyResponse {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if let Some(n) = gamma.iter().position(|g| !g.is_finite()) {
            return Err(Error::invalid(format!(
                "response at n = {} is not finite",
                n + 1
            )));
        }
        Ok(Self(gamma))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for FrequencyResponse {
    type Output = f64;
    fn index(&self, n: usize) -> &f64 {
        &self.0[n]
    }
}

/// Responses of a pseudo-inverse: `1/γ(n)` on the support, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoInverseResponse {
    gamma_dagger: Vec<f64>,
    support: Vec<bool>,
}

impl PseudoInverseResponse {
    pub fn as_slice(&self) -> &[f64] {
        &self.gamma_dagger
    }

    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn as_response(&self) -> FrequencyResponse {
        FrequencyResponse(self.gamma_dagger.clone())
    }
}

/// Multiplies each spectral coefficient `n` of every signal by `γ(n)`.
pub fn apply_channel(gamma: &FrequencyResponse, e: &SignalEnsemble) -> Result<SignalEnsemble> {
    e.expect_domain(Domain::Spectral)?;
    if gamma.len() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            found: gamma.len(),
        });
    }
    let mut out = e.matrix().clone();
    for (mut row, g) in out.row_iter_mut().zip(gamma.as_slice()) {
        row *= *g;
    }
    SignalEnsemble::spectral(out)
}

/// `‖H‖ = max_n |γ(n)|`; zero for an empty response.
pub fn operator_norm(gamma: &FrequencyResponse) -> f64 {
    gamma.as_slice().iter().fold(0.0, |acc, g| acc.max(g.abs()))
}

/// Inverts `γ` on `support` and zeroes it elsewhere.
pub fn pseudo_inverse(
    gamma: &FrequencyResponse,
    support: &[bool],
) -> Result<PseudoInverseResponse> {
    if support.len() != gamma.len() {
        return Err(Error::DimensionMismatch {
            expected: gamma.len(),
            found: support.len(),
        });
    }
    let mut gamma_dagger = vec![0.0; gamma.len()];
    for (n, (&g, &inside)) in gamma.as_slice().iter().zip(support).enumerate() {
        if inside {
            if g.abs() <= NEAR_ZERO_RESPONSE {
                return Err(Error::NearZeroResponse {
                    index: n + 1,
                    value: g,
                });
            }
            gamma_dagger[n] = 1.0 / g;
        }
    }
    Ok(PseudoInverseResponse {
        gamma_dagger,
        support: support.to_vec(),
    })
}

/// Random channel `γ(n) = ε(n)(1 + u(n))` with `u(n)` uniform on
/// `[-amplitude, amplitude]` and `ε(n) = ±1` by a fair coin.
pub fn random_channel(n: usize, amplitude: f64, seed: u64) -> Result<FrequencyResponse> {
    random_channel_from(&mut rng::seeded(seed), n, amplitude)
}

pub fn random_channel_from(rng: &mut Rng, n: usize, amplitude: f64) -> Result<FrequencyResponse> {
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::invalid(format!(
            "channel amplitude must lie in [0, 1), got {amplitude}"
        )));
    }
    let gamma = (0..n)
        .map(|_| {
            let u: f64 = rng.random_range(-amplitude..=amplitude);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * (1.0 + u)
        })
        .collect();
    Ok(FrequencyResponse(gamma))
}

/// `‖C S − S C‖_max`; zero exactly when the covariance commutes with the
/// shift, i.e. when the signal is stationary on the graph.
pub fn stationarity_residual(cov_vertex: &DMatrix<f64>, shift: &DMatrix<f64>) -> Result<f64> {
    let n = shift.nrows();
    for d in [shift.ncols(), cov_vertex.nrows(), cov_vertex.ncols()] {
        if d != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: d,
            });
        }
    }
    Ok((cov_vertex * shift - shift * cov_vertex).amax())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ensemble() -> SignalEnsemble {
        SignalEnsemble::from_signals(&[[1.0, -2.0, 0.5], [3.0, 0.0, -1.0]], Domain::Spectral)
            .unwrap()
    }

    #[test]
    fn unit_and_zero_channels() {
        let e = ensemble();
        assert_eq!(apply_channel(&FrequencyResponse::ones(3), &e).unwrap(), e);
        let zero = FrequencyResponse::new(vec![0.0; 3]).unwrap();
        assert!(apply_channel(&zero, &e)
            .unwrap()
            .matrix()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn apply_checks_dimension() {
        let g = FrequencyResponse::ones(2);
        assert!(matches!(
            apply_channel(&g, &ensemble()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn norm_is_max_abs() {
        assert_eq!(
            operator_norm(&FrequencyResponse::new(vec![1.0, -3.0, 2.0]).unwrap()),
            3.0
        );
        assert_eq!(
            operator_norm(&FrequencyResponse::new(vec![0.0; 4]).unwrap()),
            0.0
        );
    }

    #[test]
    fn pseudo_inverse_on_support() {
        let g = FrequencyResponse::new(vec![2.0, 0.0, -4.0]).unwrap();
        let p = pseudo_inverse(&g, &[true, false, true]).unwrap();
        assert_eq!(p.as_slice(), &[0.5, 0.0, -0.25]);
        let empty = pseudo_inverse(&g, &[false; 3]).unwrap();
        assert_eq!(empty.as_slice(), &[0.0; 3]);
    }

    #[test]
    fn pseudo_inverse_refuses_near_zero() {
        let g = FrequencyResponse::new(vec![2.0, 1e-15, 1.0]).unwrap();
        assert!(matches!(
            pseudo_inverse(&g, &[true; 3]),
            Err(Error::NearZeroResponse { index: 2, .. })
        ));
    }

    #[test]
    fn random_channel_contract() {
        let flat = random_channel(50, 0.0, 3).unwrap();
        assert!(flat.as_slice().iter().all(|g| g.abs() == 1.0));
        let g = random_channel(500, 0.2, 11).unwrap();
        assert!(g.as_slice().iter().all(|g| (0.8..=1.2).contains(&g.abs())));
        let positives = g.as_slice().iter().filter(|g| **g > 0.0).count();
        assert!((200..300).contains(&positives));
        assert_eq!(g, random_channel(500, 0.2, 11).unwrap());
        assert_ne!(g, random_channel(500, 0.2, 12).unwrap());
        assert!(random_channel(3, 1.0, 0).is_err());
    }

    #[test]
    fn identity_covariance_is_stationary() {
        let s = DMatrix::from_row_slice(3, 3, &[1., -1., 0., -1., 2., -1., 0., -1., 1.]);
        assert_eq!(
            stationarity_residual(&DMatrix::identity(3, 3), &s).unwrap(),
            0.0
        );
        assert!(stationarity_residual(&DMatrix::identity(2, 2), &s).is_err());
    }
}
