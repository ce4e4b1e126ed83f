//! Spectral covariances, the source and observation graphs built from them,
//! and the finite-sample concentration bound for empirical covariances.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::spectral::SignalEnsemble;
use crate::traversal;

/// Default Pearson threshold for source-graph edges.
pub const DEFAULT_PEARSON_THRESHOLD: f64 = 0.01;

/// Default correlation threshold `δ` for observation-graph edges.
pub const DEFAULT_DELTA: f64 = 0.001;

/// A symmetric `N × N` covariance of GFT coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCovariance(DMatrix<f64>);

impl SpectralCovariance {
    /// Accepts a square matrix symmetric to within `1e-12` per entry
    /// (relative to its largest entry) and symmetrizes it exactly.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-12 * m.amax().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self((&m + m.transpose()) * 0.5))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.0[(n, m)]
    }

    /// `|C(n,n')| / √(C(n,n) C(n',n'))`.
    pub fn abs_correlation(&self, n: usize, m: usize) -> f64 {
        self.0[(n, m)].abs() / (self.0[(n, n)] * self.0[(m, m)]).sqrt()
    }

    /// Errors if any diagonal entry is not strictly positive.
    pub fn require_positive_variances(&self) -> Result<()> {
        for n in 0..self.dim() {
            let v = self.0[(n, n)];
            if !(v > 0.0) {
                return Err(Error::NonpositiveVariance {
                    index: n + 1,
                    value: v,
                });
            }
        }
        Ok(())
    }

    /// Signed Pearson correlation matrix.
    pub fn pearson(&self) -> Result<DMatrix<f64>> {
        self.require_positive_variances()?;
        let d: Vec<f64> = (0..self.dim()).map(|n| self.0[(n, n)].sqrt()).collect();
        Ok(DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.0[(i, j)] / (d[i] * d[j])
        }))
    }
}

/// `C(n,n') = (1/M) Σ_m ŷ_m(n) ŷ_m(n')`.
pub fn empirical_covariance(e: &SignalEnsemble) -> Result<SpectralCovariance> {
    if e.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let x = e.matrix();
    let mut c = x * x.transpose() / e.len() as f64;
    // the product is not guaranteed to be bitwise symmetric
    for i in 0..c.nrows() {
        for j in 0..i {
            c[(j, i)] = c[(i, j)];
        }
    }
    Ok(SpectralCovariance(c))
}

/// `max_n (1/M) Σ_m |x̂_m(n)|⁴`, the empirical counterpart of the kurtosis
/// constant `C₄`.
pub fn empirical_kurtosis(e: &SignalEnsemble) -> Result<f64> {
    if e.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let m = e.len() as f64;
    Ok(e.matrix()
        .row_iter()
        .map(|row| row.iter().map(|v| v.powi(4)).sum::<f64>() / m)
        .fold(0.0, f64::max))
}

/// Graph on frequency indices whose edges join significantly correlated
/// source components.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceGraph {
    graph: Graph,
    degrees: Vec<usize>,
    connected: bool,
}

impl SourceGraph {
    pub fn from_graph(graph: Graph) -> Self {
        let degrees = graph.degrees();
        let connected = graph.is_connected();
        Self {
            graph,
            degrees,
            connected,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n_vertices(&self) -> usize {
        self.graph.n_vertices()
    }

    /// `θ(n)`, the number of edges incident to each vertex.
    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Whether every frequency is reachable from every other; identifiability
    /// up to one global sign needs this.
    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Pairs `(n, n')` with `n < n'` that are *not* edges.
    pub fn missing_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_vertices();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !self.graph.has_edge(i, j))
            .collect()
    }
}

/// Joins `n ≠ n'` whenever `|ρ(n,n')| ≥ pearson_threshold`.
pub fn build_source_graph(
    cov_x: &SpectralCovariance,
    pearson_threshold: f64,
) -> Result<SourceGraph> {
    if !(pearson_threshold >= 0.0) {
        return Err(Error::invalid(format!(
            "pearson threshold must be ≥ 0, got {pearson_threshold}"
        )));
    }
    cov_x.require_positive_variances()?;
    let n = cov_x.dim();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if cov_x.abs_correlation(i, j) >= pearson_threshold {
                edges.push((i, j));
            }
        }
    }
    Ok(SourceGraph::from_graph(Graph::new(n, edges)?))
}

/// `δ₀ = min_{(n,n') ∈ R} |C_x̂(n,n')|`; `None` when `R` is empty.
pub fn min_source_covariance(cov_x: &SpectralCovariance, source: &SourceGraph) -> Option<f64> {
    source
        .graph()
        .edges()
        .map(|(i, j)| cov_x.get(i, j).abs())
        .reduce(f64::min)
}

/// Largest threshold `‖H‖² δ₀ / 8` under which the observation graph
/// provably matches the source graph for large samples. Only usable when
/// the channel norm is known, e.g. in simulations.
pub fn delta_cap(cov_x: &SpectralCovariance, source: &SourceGraph, h_norm: f64) -> Option<f64> {
    min_source_covariance(cov_x, source).map(|d0| h_norm * h_norm * d0 / 8.0)
}

/// The thresholded subgraph `𝒟 = (W, T)` of the source graph seen through
/// the empirical observation covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationGraph {
    support: Vec<bool>,
    edges: Graph,
    components: Vec<Vec<usize>>,
}

impl ObservationGraph {
    pub fn n_vertices(&self) -> usize {
        self.support.len()
    }

    /// Membership mask of `W`.
    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn support_vertices(&self) -> Vec<usize> {
        (0..self.support.len())
            .filter(|&n| self.support[n])
            .collect()
    }

    /// `T` as a graph on all `N` vertices.
    pub fn edges(&self) -> &Graph {
        &self.edges
    }

    /// Connected components `W_k`, each sorted ascending and listed by
    /// smallest vertex.
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn is_connected(&self) -> bool {
        self.components.len() == 1
    }
}

/// Keeps the source edges whose empirical correlation reaches `delta`.
///
/// A vertex belongs to `W` when at least one of its source edges survives.
/// Components are found by breadth-first search in ascending vertex order.
pub fn build_observation_graph(
    cov_y: &SpectralCovariance,
    source: &SourceGraph,
    delta: f64,
) -> Result<ObservationGraph> {
    if cov_y.dim() != source.n_vertices() {
        return Err(Error::DimensionMismatch {
            expected: source.n_vertices(),
            found: cov_y.dim(),
        });
    }
    if !(delta >= 0.0) {
        return Err(Error::invalid(format!("delta must be ≥ 0, got {delta}")));
    }
    cov_y.require_positive_variances()?;
    let n = cov_y.dim();
    let kept: Vec<(usize, usize)> = source
        .graph()
        .edges()
        .filter(|&(i, j)| cov_y.abs_correlation(i, j) >= delta)
        .collect();
    let mut support = vec![false; n];
    for &(i, j) in &kept {
        support[i] = true;
        support[j] = true;
    }
    let edges = Graph::new(n, kept)?;
    let w: Vec<usize> = (0..n).filter(|&v| support[v]).collect();
    let components = traversal::components(&edges.adjacency(), &w);
    Ok(ObservationGraph {
        support,
        edges,
        components,
    })
}

fn check_bound_inputs(c4: f64, h_norm: f64, sigma: f64, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("sample count must be ≥ 1"));
    }
    for (name, v) in [("c4", c4), ("h_norm", h_norm), ("sigma", sigma)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!(
                "{name} must be finite and ≥ 0, got {v}"
            )));
        }
    }
    Ok(())
}

/// Numerator of the Chebyshev-type bound: the fourth-moment budget of one
/// product term `ŷ(n)ŷ(n')` (off-diagonal) or `ŷ(n)²` (diagonal).
fn bound_numerator(c4: f64, h_norm: f64, sigma: f64, diagonal: bool) -> f64 {
    let h2 = h_norm * h_norm;
    let s2 = sigma * sigma;
    if diagonal {
        c4 * h2 * h2 + 6.0 * c4.sqrt() * h2 * s2 + 3.0 * s2 * s2
    } else {
        let t = c4.sqrt() * h2 + s2;
        t * t
    }
}

/// Upper bound on `Pr(|C_ŷ,M(n,n') − C_ŷ(n,n')| ≥ eps)`:
///
/// * off-diagonal: `(√C₄ ‖H‖² + σ²)² / (M ε²)`
/// * diagonal: `(C₄ ‖H‖⁴ + 6 √C₄ ‖H‖² σ² + 3 σ⁴) / (M ε²)`
///
/// The value is not clipped to 1.
pub fn concentration_bound(
    c4: f64,
    h_norm: f64,
    sigma: f64,
    m: usize,
    eps: f64,
    diagonal: bool,
) -> Result<f64> {
    check_bound_inputs(c4, h_norm, sigma, m)?;
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be > 0, got {eps}")));
    }
    Ok(bound_numerator(c4, h_norm, sigma, diagonal) / (m as f64 * eps * eps))
}

/// The `ε` at which [`concentration_bound`] equals `target`.
pub fn eps_for_bound(
    target: f64,
    c4: f64,
    h_norm: f64,
    sigma: f64,
    m: usize,
    diagonal: bool,
) -> Result<f64> {
    check_bound_inputs(c4, h_norm, sigma, m)?;
    if !(target > 0.0) {
        return Err(Error::invalid(format!(
            "target probability must be > 0, got {target}"
        )));
    }
    Ok((bound_numerator(c4, h_norm, sigma, diagonal) / (m as f64 * target)).sqrt())
}

/// Vertex-domain covariance `U C Uᵀ` of a spectral covariance.
pub fn to_vertex_domain(cov: &SpectralCovariance, modes: &DMatrix<f64>) -> DMatrix<f64> {
    modes * cov.matrix() * modes.transpose()
}
