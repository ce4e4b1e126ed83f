//! Blind deconvolution through the pseudo-inverse of an estimated channel,
//! plus the covariance diagnostics used to judge the reconstruction.
//!
//! Reconstruction is `x̃ = U Γ_M† Uᵀ y`, i.e. each spectral coefficient in
//! the support is divided by `γ_M(n)` and the rest are zeroed. With a good
//! estimate, `x̃` matches the source up to one sign per component plus
//! noise `n̂(n)/γ(n)`, so off-diagonal covariances are recovered while the
//! diagonal is inflated by about `σ²/γ(n)²`.

use nalgebra::{DMatrix, DVector};

use crate::channel::{apply_channel, pseudo_inverse};
use crate::covariance::{empirical_covariance, SpectralCovariance};
use crate::csice::ChannelEstimate;
use crate::error::{Error, Result};
use crate::spectral::{gft, igft, SignalEnsemble, SpectralBasis};

/// Additive offset inside every decibel conversion.
pub const DB_OFFSET: f64 = 1e-5;
/// Display floor for difference diagnostics.
pub const DIAGNOSTIC_FLOOR_DB: f64 = -20.0;
/// Display floor for raw covariance maps.
pub const COVARIANCE_FLOOR_DB: f64 = -30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvolutionResult {
    pub reconstructed: SignalEnsemble,
    pub spectral: SignalEnsemble,
    pub support: Vec<bool>,
}

/// `max(10 log₁₀(|v| + 1e-5), floor)`.
pub fn to_db(v: f64, floor_db: f64) -> f64 {
    (10.0 * (v.abs() + DB_OFFSET).log10()).max(floor_db)
}

pub fn blind_deconvolve(
    estimate: &ChannelEstimate,
    observations: &SignalEnsemble,
    basis: &SpectralBasis,
) -> Result<DeconvolutionResult> {
    let spectral_obs = gft(basis, observations)?;
    deconvolve_spectral(estimate, &spectral_obs, basis)
}

/// [`blind_deconvolve`] for observations already in the spectral domain.
pub fn deconvolve_spectral(
    estimate: &ChannelEstimate,
    spectral_obs: &SignalEnsemble,
    basis: &SpectralBasis,
) -> Result<DeconvolutionResult> {
    if !estimate.support.iter().any(|&w| w) {
        return Err(Error::invalid("channel estimate has an empty support"));
    }
    let dagger = pseudo_inverse(&estimate.gamma_m, &estimate.support)?;
    let spectral = apply_channel(&dagger.as_response(), spectral_obs)?;
    let reconstructed = igft(basis, &spectral)?;
    Ok(DeconvolutionResult {
        reconstructed,
        spectral,
        support: estimate.support.clone(),
    })
}

/// Empirical covariance of the reconstructed spectral coefficients on
/// `W × W`; entries touching frequencies outside `W` are zero.
pub fn reconstructed_covariance(result: &DeconvolutionResult) -> Result<SpectralCovariance> {
    let mut c = empirical_covariance(&result.spectral)?.into_matrix();
    for (n, &inside) in result.support.iter().enumerate() {
        if !inside {
            c.row_mut(n).fill(0.0);
            c.column_mut(n).fill(0.0);
        }
    }
    SpectralCovariance::new(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticMatrices {
    pub abs_diff_db: DMatrix<f64>,
    pub rel_diff_db: DMatrix<f64>,
    /// `C_x̃(n,n) − C_x̂(n,n)`, expected near `σ²/γ(n)²`.
    pub diagonal_inflation: DVector<f64>,
}

impl DiagnosticMatrices {
    /// Entrywise mean over several runs (all the same size).
    pub fn mean(runs: &[DiagnosticMatrices]) -> Result<DiagnosticMatrices> {
        let first = runs
            .first()
            .ok_or_else(|| Error::invalid("no diagnostics to average"))?;
        let k = runs.len() as f64;
        let mut out = first.clone();
        for r in &runs[1..] {
            if r.abs_diff_db.shape() != first.abs_diff_db.shape() {
                return Err(Error::DimensionMismatch {
                    expected: first.abs_diff_db.nrows(),
                    found: r.abs_diff_db.nrows(),
                });
            }
            out.abs_diff_db += &r.abs_diff_db;
            out.rel_diff_db += &r.rel_diff_db;
            out.diagonal_inflation += &r.diagonal_inflation;
        }
        out.abs_diff_db /= k;
        out.rel_diff_db /= k;
        out.diagonal_inflation /= k;
        Ok(out)
    }
}

/// Decibel maps of `Δ = C_recon − C_source`, absolute and normalized by
/// `√(C_source(n,n) C_source(n',n'))`, each floored at `floor_db`.
pub fn covariance_diagnostics(
    c_recon: &SpectralCovariance,
    c_source: &SpectralCovariance,
    floor_db: f64,
) -> Result<DiagnosticMatrices> {
    if c_recon.dim() != c_source.dim() {
        return Err(Error::DimensionMismatch {
            expected: c_source.dim(),
            found: c_recon.dim(),
        });
    }
    c_source.require_positive_variances()?;
    let n = c_source.dim();
    let delta = c_recon.matrix() - c_source.matrix();
    let abs_diff_db = delta.map(|d| to_db(d, floor_db));
    let rel_diff_db = DMatrix::from_fn(n, n, |i, j| {
        let scale = (c_source.get(i, i) * c_source.get(j, j)).sqrt();
        to_db(delta[(i, j)] / scale, floor_db)
    });
    Ok(DiagnosticMatrices {
        abs_diff_db,
        rel_diff_db,
        diagonal_inflation: delta.diagonal(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GapSummary {
    pub mean_diagonal_db: f64,
    pub mean_off_diagonal_db: f64,
    /// Off-diagonal mean minus diagonal mean; negative when inter-frequency
    /// correlations are recovered better than variances.
    pub gap_db: f64,
}

/// Summary of [`DiagnosticMatrices::abs_diff_db`].
pub fn summarize_gap(d: &DiagnosticMatrices) -> GapSummary {
    summarize_matrix_gap(&d.abs_diff_db)
}

pub fn summarize_matrix_gap(m: &DMatrix<f64>) -> GapSummary {
    let n = m.nrows();
    let mean_diagonal_db = m.diagonal().mean();
    let mean_off_diagonal_db = if n > 1 {
        (m.sum() - m.diagonal().sum()) / (n * (n - 1)) as f64
    } else {
        f64::NAN
    };
    GapSummary {
        mean_diagonal_db,
        mean_off_diagonal_db,
        gap_db: mean_off_diagonal_db - mean_diagonal_db,
    }
}

/// Mean of each row's off-diagonal entries.
pub fn row_off_diagonal_means(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n)
        .map(|i| (m.row(i).sum() - m[(i, i)]) / (n.max(2) - 1) as f64)
        .collect()
}

/// Per-component signs `s_k` minimizing `‖s_k x̂̃ − x̂‖` over the frequencies
/// of component `k`, for comparing a reconstruction against ground truth.
pub fn component_alignment(
    estimate: &ChannelEstimate,
    reconstructed_spectral: &SignalEnsemble,
    reference_spectral: &SignalEnsemble,
) -> Result<Vec<f64>> {
    let (a, b) = (reconstructed_spectral.matrix(), reference_spectral.matrix());
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: b.ncols(),
            found: a.ncols(),
        });
    }
    Ok(estimate
        .components
        .iter()
        .map(|c| {
            let corr: f64 = c.vertices.iter().map(|&n| a.row(n).dot(&b.row(n))).sum();
            if corr < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect())
}

/// Applies [`component_alignment`] and returns the vertex-domain signals.
pub fn aligned_reconstruction(
    estimate: &ChannelEstimate,
    result: &DeconvolutionResult,
    reference_spectral: &SignalEnsemble,
    basis: &SpectralBasis,
) -> Result<SignalEnsemble> {
    let signs = component_alignment(estimate, &result.spectral, reference_spectral)?;
    let mut s = result.spectral.matrix().clone();
    for (c, sign) in estimate.components.iter().zip(signs) {
        for &n in &c.vertices {
            s.row_mut(n).scale_mut(sign);
        }
    }
    igft(basis, &SignalEnsemble::spectral(s)?)
}

/// Whether `γ_M` carries the sign pattern of `±γ` on every component.
pub fn signs_match_up_to_component(estimate: &ChannelEstimate, truth: &[f64]) -> bool {
    let g = estimate.gamma_m.as_slice();
    estimate.components.iter().all(|c| {
        let rel = |n: usize| (g[n] >= 0.0) == (truth[n] >= 0.0);
        let first = rel(c.vertices[0]);
        c.vertices.iter().all(|&n| rel(n) == first)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov(rows: usize, data: &[f64]) -> SpectralCovariance {
        SpectralCovariance::new(DMatrix::from_row_slice(rows, rows, data)).unwrap()
    }

    #[test]
    fn db_clamps_and_offsets() {
        assert_eq!(to_db(0.0, -20.0), -20.0);
        assert!((to_db(0.1, -20.0) - 10.0 * 0.10001f64.log10()).abs() < 1e-12);
        assert!((to_db(-0.1, -20.0) + 10.0).abs() < 1e-3);
    }

    #[test]
    fn zero_difference_hits_floor() {
        let c = cov(2, &[2., 0.3, 0.3, 1.]);
        let d = covariance_diagnostics(&c, &c, -20.0).unwrap();
        assert!(d.abs_diff_db.iter().all(|v| *v == -20.0));
        assert!(d.rel_diff_db.iter().all(|v| *v == -20.0));
        assert!(d.diagonal_inflation.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn relative_mode_needs_positive_variances() {
        let c = cov(2, &[0., 0.3, 0.3, 1.]);
        assert!(covariance_diagnostics(&c, &c, -20.0).is_err());
    }

    #[test]
    fn gap_by_hand() {
        let flat = DMatrix::from_element(3, 3, -7.0);
        let g = summarize_matrix_gap(&flat);
        assert_eq!(g.gap_db, 0.0);
        let mut m = DMatrix::from_element(3, 3, -16.0);
        m.fill_diagonal(-6.0);
        let g = summarize_matrix_gap(&m);
        assert_eq!(
            (g.mean_diagonal_db, g.mean_off_diagonal_db, g.gap_db),
            (-6.0, -16.0, -10.0)
        );
        assert_eq!(row_off_diagonal_means(&m), vec![-16.0; 3]);
    }
}
