//! Eigendecomposition of a symmetric graph shift and the graph Fourier
//! transform it induces.
//!
//! For a shift `S = U Λ Uᵀ` with orthonormal modes `U`, the GFT of a vertex
//! signal `x` is `x̂ = Uᵀ x` and the inverse is `x = U x̂`. Modes are ordered
//! by eigenvalue magnitude, so for a Laplacian the first mode is the
//! constant (zero-frequency) vector.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector, DVectorView, SymmetricEigen};

use crate::error::{Error, Result};

/// Maximum per-entry asymmetry accepted by [`eigendecompose`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Relative gap below which two eigenvalues count as coincident.
pub const DISTINCTNESS_TOLERANCE: f64 = 1e-9;

/// Entries below this magnitude are skipped when fixing eigenvector signs.
const SIGN_PIVOT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Vertex,
    Spectral,
}

/// `M` real signals of dimension `N`, stored as the columns of an `N × M`
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalEnsemble {
    data: DMatrix<f64>,
    domain: Domain,
}

impl SignalEnsemble {
    /// Wraps an `N × M` matrix whose columns are the signals.
    pub fn new(data: DMatrix<f64>, domain: Domain) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(Error::EmptyEnsemble);
        }
        if data.nrows() == 0 {
            return Err(Error::invalid("signals must have at least one entry"));
        }
        Ok(Self { data, domain })
    }

    /// Builds an ensemble from one slice per signal.
    pub fn from_signals<S: AsRef<[f64]>>(signals: &[S], domain: Domain) -> Result<Self> {
        let first = signals.first().ok_or(Error::EmptyEnsemble)?;
        let n = first.as_ref().len();
        for s in signals {
            if s.as_ref().len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: s.as_ref().len(),
                });
            }
        }
        let data = DMatrix::from_fn(n, signals.len(), |i, m| signals[m].as_ref()[i]);
        Self::new(data, domain)
    }

    pub fn vertex(data: DMatrix<f64>) -> Result<Self> {
        Self::new(data, Domain::Vertex)
    }

    pub fn spectral(data: DMatrix<f64>) -> Result<Self> {
        Self::new(data, Domain::Spectral)
    }

    /// Signal dimension `N`.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Number of signals `M`.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn signal(&self, m: usize) -> DVectorView<'_, f64> {
        self.data.column(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub(crate) fn expect_domain(&self, domain: Domain) -> Result<()> {
        if self.domain != domain {
            return Err(Error::invalid(format!(
                "expected a {domain:?}-domain ensemble, got {:?}",
                self.domain
            )));
        }
        Ok(())
    }
}

/// Orthonormal modes (columns of `U`) and eigenvalues of a graph shift,
/// ordered by `|λ|` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    modes: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

impl SpectralBasis {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn modes(&self) -> &DMatrix<f64> {
        &self.modes
    }

    pub fn mode(&self, n: usize) -> DVectorView<'_, f64> {
        self.modes.column(n)
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// `U Λ Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.modes * DMatrix::from_diagonal(&self.eigenvalues) * self.modes.transpose()
    }

    /// `U diag(response) Uᵀ`, the dense vertex-domain form of a spectral filter.
    pub fn dense_filter(&self, response: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), response.len())?;
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(response));
        Ok(&self.modes * d * self.modes.transpose())
    }

    pub fn gft(&self, e: &SignalEnsemble) -> Result<SignalEnsemble> {
        gft(self, e)
    }

    pub fn igft(&self, e: &SignalEnsemble) -> Result<SignalEnsemble> {
        igft(self, e)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Diagonalizes a real symmetric shift.
///
/// Eigenpairs are sorted by `|λ|` ascending, with `-λ` placed before `λ`
/// when both occur. Each mode is flipped so its first entry of magnitude
/// above `1e-12` is positive. Fails with [`Error::DegenerateSpectrum`] when
/// two eigenvalues lie within `1e-9 · max(1, max|λ|)` of each other.
pub fn eigendecompose(shift: &DMatrix<f64>) -> Result<SpectralBasis> {
    let n = shift.nrows();
    check_dim(n, shift.ncols())?;
    if n == 0 {
        return Err(Error::invalid("cannot decompose an empty matrix"));
    }
    let asym = (shift - shift.transpose()).amax();
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric(asym));
    }
    let sym = (shift + shift.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (la, lb) = (eig.eigenvalues[a], eig.eigenvalues[b]);
        match la.abs().total_cmp(&lb.abs()) {
            Ordering::Equal => la.total_cmp(&lb),
            o => o,
        }
    });

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let scale = eigenvalues.amax().max(1.0);
    let mut by_value: Vec<f64> = eigenvalues.iter().copied().collect();
    by_value.sort_by(f64::total_cmp);
    for w in by_value.windows(2) {
        if (w[1] - w[0]).abs() <= DISTINCTNESS_TOLERANCE * scale {
            return Err(Error::DegenerateSpectrum {
                first: w[0],
                second: w[1],
            });
        }
    }

    let mut modes = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).clone_owned();
        if let Some(pivot) = v.iter().find(|x| x.abs() > SIGN_PIVOT_THRESHOLD) {
            if *pivot < 0.0 {
                v.neg_mut();
            }
        }
        modes.set_column(col, &v);
    }
    Ok(SpectralBasis { modes, eigenvalues })
}

/// Graph Fourier transform `x̂ = Uᵀ x` applied to every signal.
pub fn gft(basis: &SpectralBasis, e: &SignalEnsemble) -> Result<SignalEnsemble> {
    e.expect_domain(Domain::Vertex)?;
    check_dim(basis.dim(), e.dim())?;
    SignalEnsemble::spectral(basis.modes.tr_mul(&e.data))
}

/// Inverse transform `x = U x̂`.
pub fn igft(basis: &SpectralBasis, e: &SignalEnsemble) -> Result<SignalEnsemble> {
    e.expect_domain(Domain::Spectral)?;
    check_dim(basis.dim(), e.dim())?;
    SignalEnsemble::vertex(&basis.modes * &e.data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn single_edge_by_hand() {
        let l = Graph::new(2, [(0, 1)]).unwrap().laplacian();
        let b = eigendecompose(&l).unwrap();
        assert!((b.eigenvalues()[0]).abs() < 1e-14);
        assert!((b.eigenvalues()[1] - 2.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((b.mode(0)[0] - s).abs() < 1e-14 && (b.mode(0)[1] - s).abs() < 1e-14);
    }

    #[test]
    fn star_is_degenerate() {
        let l = Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap().laplacian();
        match eigendecompose(&l) {
            Err(Error::DegenerateSpectrum { first, second }) => {
                assert!((first - 1.0).abs() < 1e-12 && (second - 1.0).abs() < 1e-12)
            }
            other => panic!("expected degenerate spectrum, got {other:?}"),
        }
    }

    #[test]
    fn path3_spectrum() {
        // det(L - λI) = -λ(λ - 1)(λ - 3)
        let l = Graph::new(3, [(0, 1), (1, 2)]).unwrap().laplacian();
        let b = eigendecompose(&l).unwrap();
        for (got, want) in b.eigenvalues().iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn opposite_eigenvalues_put_negative_first() {
        let s = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 1., 0., 0., 0., 0., 0.5]);
        let b = eigendecompose(&s).unwrap();
        let ev: Vec<f64> = b.eigenvalues().iter().copied().collect();
        assert!((ev[0] - 0.5).abs() < 1e-12);
        assert!((ev[1] + 1.0).abs() < 1e-12);
        assert!((ev[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_rejected() {
        let s = DMatrix::from_row_slice(2, 2, &[1., 2., 2.1, 1.]);
        assert!(matches!(eigendecompose(&s), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn constant_signal_is_zero_frequency() {
        let l = Graph::new(3, [(0, 1), (1, 2)]).unwrap().laplacian();
        let b = eigendecompose(&l).unwrap();
        let x = SignalEnsemble::from_signals(&[[1.0, 1.0, 1.0]], Domain::Vertex).unwrap();
        let xh = gft(&b, &x).unwrap();
        assert!((xh.matrix()[(0, 0)] - 3f64.sqrt()).abs() < 1e-12);
        assert!(xh.matrix()[(1, 0)].abs() < 1e-12 && xh.matrix()[(2, 0)].abs() < 1e-12);
    }

    #[test]
    fn unit_spectral_vector_is_mode() {
        let l = Graph::new(3, [(0, 1), (1, 2)]).unwrap().laplacian();
        let b = eigendecompose(&l).unwrap();
        let e = SignalEnsemble::from_signals(&[[0.0, 1.0, 0.0]], Domain::Spectral).unwrap();
        let x = igft(&b, &e).unwrap();
        assert_eq!(x.signal(0), b.mode(1));
        let z = SignalEnsemble::from_signals(&[[0.0; 3]], Domain::Spectral).unwrap();
        assert!(igft(&b, &z).unwrap().matrix().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn domain_and_dimension_checked() {
        let l = Graph::new(3, [(0, 1), (1, 2)]).unwrap().laplacian();
        let b = eigendecompose(&l).unwrap();
        let wrong_dim = SignalEnsemble::from_signals(&[[1.0, 2.0]], Domain::Vertex).unwrap();
        assert!(matches!(
            gft(&b, &wrong_dim),
            Err(Error::DimensionMismatch { .. })
        ));
        let spectral = SignalEnsemble::from_signals(&[[1.0, 2.0, 3.0]], Domain::Spectral).unwrap();
        assert!(gft(&b, &spectral).is_err());
        assert!(matches!(
            SignalEnsemble::from_signals::<[f64; 3]>(&[], Domain::Vertex),
            Err(Error::EmptyEnsemble)
        ));
    }
}
