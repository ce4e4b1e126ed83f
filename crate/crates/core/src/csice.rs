//! Covariance-based estimation of a shift-invariant channel.
//!
//! With noisy observations `ŷ = Γ x̂ + n̂` in the graph Fourier domain and a
//! known source covariance `C_x̂`, the observation covariance satisfies
//!
//! ```text
//! C_ŷ(n,n)  = γ(n)² C_x̂(n,n) + σ²
//! C_ŷ(n,n') = γ(n) γ(n') C_x̂(n,n')      (n ≠ n')
//! ```
//!
//! For every source edge `(n, n')` the difference of the two diagonal
//! relations cancels `σ²`, and together with the off-diagonal relation it
//! forms a quadratic system in `|γ(n)|`, `|γ(n')|` with the closed-form root
//!
//! ```text
//! |γ(n)| = √((√μ + α) / (2 C_x̂(n,n)))
//! α = C_ŷ(n,n) − C_ŷ(n',n'),  β = C_ŷ(n,n') / C_x̂(n,n'),
//! μ = 4 C_x̂(n,n) C_x̂(n',n') β² + α².
//! ```
//!
//! The estimator averages that root over all source edges at `n`, using the
//! empirical covariance in place of `C_ŷ`.
//!
//! Signs are only identifiable relative to each other: `sign γ(n) · sign
//! γ(n') = sign β(n,n')`. They are fixed per connected component of the
//! observation graph by choosing an anchor and propagating along a
//! breadth-first spanning tree, so each component is recovered up to one
//! global sign.

use log::warn;

use crate::channel::FrequencyResponse;
use crate::covariance::{
    build_observation_graph, empirical_covariance, ObservationGraph, SourceGraph,
    SpectralCovariance,
};
use crate::error::{Error, Result};
use crate::spectral::{gft, SignalEnsemble, SpectralBasis};
use crate::traversal::bfs_tree;

/// One connected component of the observation graph and its sign tree.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Component {
    /// Vertices `W_k`, ascending.
    pub vertices: Vec<usize>,
    /// Vertex whose sign is fixed directly.
    pub anchor: usize,
    pub anchor_sign: f64,
    /// Spanning tree as `(vertex, parent)` pairs in breadth-first order.
    pub tree: Vec<(usize, usize)>,
}

impl Component {
    pub fn contains(&self, n: usize) -> bool {
        self.vertices.binary_search(&n).is_ok()
    }
}

/// Estimated frequency responses together with the structure that produced
/// their signs.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub gamma_m: FrequencyResponse,
    pub support: Vec<bool>,
    pub components: Vec<Component>,
    /// How many per-edge radicands were clamped at zero.
    pub clamped_radicands: usize,
}

impl ChannelEstimate {
    /// Wraps a known channel as an estimate with full support and a single
    /// component anchored at the first frequency.
    pub fn known(gamma: FrequencyResponse) -> Self {
        let n = gamma.len();
        let anchor_sign = if n > 0 && gamma[0] < 0.0 { -1.0 } else { 1.0 };
        let components = if n == 0 {
            Vec::new()
        } else {
            vec![Component {
                vertices: (0..n).collect(),
                anchor: 0,
                anchor_sign,
                tree: Vec::new(),
            }]
        };
        Self {
            gamma_m: gamma,
            support: vec![true; n],
            components,
            clamped_radicands: 0,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.gamma_m.len()
    }

    /// Index into [`Self::components`] for vertex `n`, if it is in `W`.
    pub fn component_of(&self, n: usize) -> Option<usize> {
        self.components.iter().position(|c| c.contains(n))
    }

    pub fn tree_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.components.iter().flat_map(|c| c.tree.iter().copied())
    }

    pub fn is_anchor(&self, n: usize) -> bool {
        self.components.iter().any(|c| c.anchor == n)
    }
}

/// Per-vertex magnitudes `|γ_M(n)|` and how many radicands were clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct Magnitudes {
    pub values: Vec<f64>,
    pub clamped: usize,
}

/// `√μ + α` computed without cancellation when `α < 0`, using
/// `√μ + α = (μ − α²)/(√μ − α) = 4 C(n,n) C(n',n') β² / (√μ − α)`.
fn radicand(cxx_n: f64, cxx_np: f64, alpha: f64, beta: f64) -> f64 {
    let cross = 4.0 * cxx_n * cxx_np * beta * beta;
    let root_mu = (cross + alpha * alpha).sqrt();
    if alpha >= 0.0 {
        root_mu + alpha
    } else if root_mu - alpha > 0.0 {
        cross / (root_mu - alpha)
    } else {
        0.0
    }
}

/// Estimates `|γ(n)|` for every frequency from the known source covariance
/// and the empirical observation covariance, averaging over all source-graph
/// edges incident to `n`.
pub fn estimate_magnitudes(
    cov_x: &SpectralCovariance,
    cov_y: &SpectralCovariance,
    source: &SourceGraph,
) -> Result<Magnitudes> {
    let n = source.n_vertices();
    for d in [cov_x.dim(), cov_y.dim()] {
        if d != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: d,
            });
        }
    }
    cov_x.require_positive_variances()?;
    if let Some(v) = source.degrees().iter().position(|&d| d == 0) {
        return Err(Error::IsolatedVertex(v + 1));
    }
    for (i, j) in source.graph().edges() {
        if cov_x.get(i, j) == 0.0 {
            return Err(Error::invalid(format!(
                "source edge ({}, {}) has zero source covariance",
                i + 1,
                j + 1
            )));
        }
    }

    let adjacency = source.graph().adjacency();
    let mut clamped = 0;
    let mut values = Vec::with_capacity(n);
    for (v, neighbors) in adjacency.iter().enumerate() {
        let cxx = cov_x.get(v, v);
        let mut sum = 0.0;
        for &w in neighbors {
            let alpha = cov_y.get(v, v) - cov_y.get(w, w);
            let beta = cov_y.get(v, w) / cov_x.get(v, w);
            let r = radicand(cxx, cov_x.get(w, w), alpha, beta);
            let r = if r.is_nan() || r < 0.0 {
                clamped += 1;
                0.0
            } else {
                r
            };
            sum += (r / (2.0 * cxx)).sqrt();
        }
        values.push(sum / neighbors.len() as f64);
    }
    if clamped > 0 {
        warn!("clamped {clamped} negative magnitude radicands");
    }
    Ok(Magnitudes { values, clamped })
}

/// `sign β_M(n,n') = sign(C_ŷ,M(n,n') / C_x̂(n,n'))`, with zero mapped to +1.
fn beta_sign(cov_x: &SpectralCovariance, cov_y: &SpectralCovariance, n: usize, m: usize) -> f64 {
    let beta = cov_y.get(n, m) / cov_x.get(n, m);
    if beta > 0.0 {
        1.0
    } else if beta < 0.0 {
        -1.0
    } else {
        warn!("β({}, {}) is zero; treating its sign as +1", n + 1, m + 1);
        1.0
    }
}

/// Attaches signs to `magnitudes`.
///
/// Component `k` of the observation graph is anchored at its lowest-index
/// vertex with sign `anchor_signs[k]` (all `+1` when `None`). Every other
/// vertex takes its tree parent's sign times `sign β_M` on the connecting
/// edge. Frequencies outside `W` get sign `+1`.
pub fn assign_signs(
    magnitudes: &[f64],
    obs: &ObservationGraph,
    cov_x: &SpectralCovariance,
    cov_y: &SpectralCovariance,
    anchor_signs: Option<&[f64]>,
) -> Result<ChannelEstimate> {
    let n = obs.n_vertices();
    if magnitudes.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: magnitudes.len(),
        });
    }
    let k = obs.components().len();
    if let Some(signs) = anchor_signs {
        if signs.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: signs.len(),
            });
        }
        if signs.iter().any(|s| s.abs() != 1.0) {
            return Err(Error::invalid("anchor signs must be ±1"));
        }
    }

    let adjacency = obs.edges().adjacency();
    let mut sign = vec![1.0; n];
    let mut components = Vec::with_capacity(k);
    for (idx, vertices) in obs.components().iter().enumerate() {
        let anchor = *vertices.first().ok_or(Error::EmptyComponent(idx + 1))?;
        let anchor_sign = anchor_signs.map_or(1.0, |s| s[idx]);
        let mut member = vec![false; n];
        for &v in vertices {
            member[v] = true;
        }
        let tree = bfs_tree(&adjacency, &member, anchor);
        sign[anchor] = anchor_sign;
        for &(v, parent) in &tree {
            sign[v] = sign[parent] * beta_sign(cov_x, cov_y, v, parent);
        }
        components.push(Component {
            vertices: vertices.clone(),
            anchor,
            anchor_sign,
            tree,
        });
    }

    let gamma = magnitudes.iter().zip(&sign).map(|(m, s)| m * s).collect();
    Ok(ChannelEstimate {
        gamma_m: FrequencyResponse::new(gamma)?,
        support: obs.support().to_vec(),
        components,
        clamped_radicands: 0,
    })
}

/// Everything a CSICE run computes along the way.
#[derive(Debug, Clone)]
pub struct CsiceRun {
    pub estimate: ChannelEstimate,
    pub observation_graph: ObservationGraph,
    pub cov_y: SpectralCovariance,
    pub spectral_observations: SignalEnsemble,
}

/// Full estimation pipeline: GFT of the observations, empirical covariance,
/// magnitudes, observation graph at threshold `delta`, and signs with every
/// anchor set to `+1`.
pub fn csice(
    cov_x: &SpectralCovariance,
    observations: &SignalEnsemble,
    basis: &SpectralBasis,
    source: &SourceGraph,
    delta: f64,
) -> Result<ChannelEstimate> {
    csice_detailed(cov_x, observations, basis, source, delta).map(|run| run.estimate)
}

pub fn csice_detailed(
    cov_x: &SpectralCovariance,
    observations: &SignalEnsemble,
    basis: &SpectralBasis,
    source: &SourceGraph,
    delta: f64,
) -> Result<CsiceRun> {
    let spectral = gft(basis, observations)?;
    csice_spectral(cov_x, spectral, source, delta)
}

/// [`csice_detailed`] for observations already in the spectral domain.
pub fn csice_spectral(
    cov_x: &SpectralCovariance,
    spectral_observations: SignalEnsemble,
    source: &SourceGraph,
    delta: f64,
) -> Result<CsiceRun> {
    let cov_y = empirical_covariance(&spectral_observations)?;
    let magnitudes = estimate_magnitudes(cov_x, &cov_y, source)?;
    let observation_graph = build_observation_graph(&cov_y, source, delta)?;
    let mut estimate = assign_signs(&magnitudes.values, &observation_graph, cov_x, &cov_y, None)?;
    estimate.clamped_radicands = magnitudes.clamped;
    Ok(CsiceRun {
        estimate,
        observation_graph,
        cov_y,
        spectral_observations,
    })
}

/// Observation-graph edges where the estimated signs disagree with
/// `sign β_M`. Tree edges never appear; the count over non-tree edges is a
/// quality measure for the sign assignment.
pub fn sign_consistency_report(
    estimate: &ChannelEstimate,
    obs: &ObservationGraph,
    cov_x: &SpectralCovariance,
    cov_y: &SpectralCovariance,
) -> Vec<(usize, usize)> {
    let g = estimate.gamma_m.as_slice();
    let sgn = |v: f64| if v < 0.0 { -1.0 } else { 1.0 };
    obs.edges()
        .edges()
        .filter(|&(i, j)| sgn(g[i]) * sgn(g[j]) != beta_sign(cov_x, cov_y, i, j))
        .collect()
}
