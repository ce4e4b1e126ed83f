//! Synthetic nonstationary sources with a prescribed spectral variance
//! profile.
//!
//! Spectral coefficients are generated as `x̂ = A z` with `z` standard
//! normal. Each row of the mixing matrix `A` blends a factor shared by all
//! frequencies with an independent dense Gaussian direction, then is scaled
//! to the requested variance. The shared factor keeps every pair of
//! frequencies correlated, so the source graph is connected and the
//! spectral covariance is far from diagonal.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::covariance::SpectralCovariance;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Variance of the zero-frequency component in the reference profile.
const LEAD_VARIANCE: f64 = 177.8017;
/// Variances of the next two frequencies.
const SECOND_VARIANCES: [f64; 2] = [5.1511, 5.0201];
/// The remaining frequencies decay geometrically between these two values.
const TAIL_RANGE: (f64, f64) = (3.0401, 0.2584);

/// Spectral variances decaying from a dominant zero-frequency term, shaped
/// like the GFT variances of centered regional temperature records.
pub fn reference_variance_profile(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = std::iter::once(LEAD_VARIANCE)
        .chain(SECOND_VARIANCES)
        .take(n)
        .collect();
    let tail = n.saturating_sub(3);
    let (hi, lo) = TAIL_RANGE;
    for k in 0..tail {
        let t = if tail == 1 {
            0.0
        } else {
            k as f64 / (tail - 1) as f64
        };
        v.push(hi * (lo / hi).powf(t));
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSource {
    mixing: DMatrix<f64>,
}

impl SyntheticSource {
    /// Wraps an explicit `N × K` mixing matrix.
    pub fn from_mixing(mixing: DMatrix<f64>) -> Result<Self> {
        if mixing.nrows() == 0 || mixing.ncols() == 0 {
            return Err(Error::invalid("mixing matrix must be non-empty"));
        }
        Ok(Self { mixing })
    }

    /// Draws a mixing matrix whose rows have squared norms `variances` and
    /// share a common factor with weight `common_factor ∈ [0, 1]`. Rows with
    /// `common_factor = 0` are independent Gaussian directions.
    pub fn random(rng: &mut Rng, variances: &[f64], common_factor: f64) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::invalid("variance profile must be non-empty"));
        }
        if let Some(n) = variances.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!(
                "variance at n = {} must be positive",
                n + 1
            )));
        }
        if !(0.0..=1.0).contains(&common_factor) {
            return Err(Error::invalid(format!(
                "common factor must lie in [0, 1], got {common_factor}"
            )));
        }
        let n = variances.len();
        let mut mixing = DMatrix::zeros(n, n + 1);
        for (row, &var) in variances.iter().enumerate() {
            let g = DVector::<f64>::from_fn(n, |_, _| StandardNormal.sample(rng));
            let g = g.normalize();
            mixing[(row, 0)] = (var * common_factor).sqrt();
            let private = (var * (1.0 - common_factor)).sqrt();
            for k in 0..n {
                mixing[(row, k + 1)] = private * g[k];
            }
        }
        Ok(Self { mixing })
    }

    pub fn dim(&self) -> usize {
        self.mixing.nrows()
    }

    pub fn mixing(&self) -> &DMatrix<f64> {
        &self.mixing
    }

    /// Population spectral covariance `A Aᵀ`.
    pub fn covariance(&self) -> SpectralCovariance {
        let c = &self.mixing * self.mixing.transpose();
        SpectralCovariance::new((&c + c.transpose()) * 0.5).expect("A Aᵀ is symmetric")
    }

    /// `C₄ = max_n E|x̂(n)|⁴`, which equals `3 max_n C(n,n)²` for Gaussian
    /// coefficients.
    pub fn fourth_moment(&self) -> f64 {
        self.mixing
            .row_iter()
            .map(|r| {
                let v = r.norm_squared();
                3.0 * v * v
            })
            .fold(0.0, f64::max)
    }

    /// `N × count` matrix of spectral samples.
    pub fn sample(&self, rng: &mut Rng, count: usize) -> DMatrix<f64> {
        let z = standard_normal_matrix(rng, self.mixing.ncols(), count);
        &self.mixing * z
    }
}

pub fn standard_normal_matrix(rng: &mut Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // column-major fill keeps the draw order independent of nalgebra internals
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    DMatrix::from_vec(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn reference_profile_shape() {
        let v = reference_variance_profile(32);
        assert_eq!(v.len(), 32);
        assert_eq!(v[0], 177.8017);
        assert_eq!(&v[1..3], &[5.1511, 5.0201]);
        assert!((v[3] - 3.0401).abs() < 1e-12 && (v[31] - 0.2584).abs() < 1e-12);
        assert!(v[3..].windows(2).all(|w| w[1] < w[0]));
        assert_eq!(reference_variance_profile(2), vec![177.8017, 5.1511]);
        assert_eq!(reference_variance_profile(4).len(), 4);
    }

    #[test]
    fn rows_carry_requested_variance() {
        let var = [4.0, 2.0, 1.0, 0.5];
        let s = SyntheticSource::random(&mut rng::seeded(1), &var, 0.5).unwrap();
        let c = s.covariance();
        for (n, v) in var.iter().enumerate() {
            assert!((c.get(n, n) - v).abs() < 1e-12);
        }
        // common factor contributes √(v v') / 2 to every off-diagonal entry
        assert!(c.abs_correlation(0, 3) > 0.0);
        assert!((s.fourth_moment() - 48.0).abs() < 1e-10);
    }

    #[test]
    fn sampling_is_reproducible() {
        let s = SyntheticSource::random(&mut rng::seeded(2), &[1.0, 1.0], 0.3).unwrap();
        let a = s.sample(&mut rng::seeded(9), 5);
        let b = s.sample(&mut rng::seeded(9), 5);
        assert_eq!(a, b);
        assert_eq!(a.shape(), (2, 5));
    }

    #[test]
    fn bad_profiles_rejected() {
        let mut r = rng::seeded(0);
        assert!(SyntheticSource::random(&mut r, &[], 0.5).is_err());
        assert!(SyntheticSource::random(&mut r, &[1.0, 0.0], 0.5).is_err());
        assert!(SyntheticSource::random(&mut r, &[1.0], 1.5).is_err());
    }
}
