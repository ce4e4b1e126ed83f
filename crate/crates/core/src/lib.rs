//! Blind deconvolution of graph signals observed through an unknown
//! shift-invariant channel.
//!
//! A graph filter `H = U Γ Uᵀ` acts on each graph frequency independently, so
//! it leaves a trace in the spectral covariance of its output:
//! `C_ŷ(n,n') = γ(n) γ(n') C_x̂(n,n')` off the diagonal. When the source
//! covariance is known and nonstationary, those off-diagonal entries pin down
//! `|γ|` without any knowledge of the noise, and the signs follow from a
//! spanning tree of reliable correlations. The estimate then drives a
//! pseudo-inverse deconvolution.
//!
//! ```
//! use graph_deconv::{
//!     build_source_graph, csice, eigendecompose, empirical_covariance, Graph, SignalEnsemble,
//! };
//! use nalgebra::DMatrix;
//!
//! // Path graph 1 - 2 - 3.
//! let graph = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
//! let basis = eigendecompose(&graph.laplacian()).unwrap();
//!
//! // Correlated spectral source samples.
//! let z = DMatrix::from_fn(3, 400, |i, m| ((m * 7 + i * 3) % 11) as f64 - 5.0);
//! let mix = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.2, 0.0, 1.0, 0.4, 0.3, 0.0, 1.0]);
//! let clean = SignalEnsemble::spectral(&mix * z).unwrap();
//! let cov_x = empirical_covariance(&clean).unwrap();
//!
//! // Observe through γ = (0.9, -1.1, 1.05) without noise.
//! let gamma = [0.9, -1.1, 1.05];
//! let mut y = clean.matrix().clone();
//! for (mut row, g) in y.row_iter_mut().zip(gamma) {
//!     row *= g;
//! }
//! let observed = basis.igft(&SignalEnsemble::spectral(y).unwrap()).unwrap();
//!
//! let source = build_source_graph(&cov_x, 0.01).unwrap();
//! let est = csice(&cov_x, &observed, &basis, &source, 0.001).unwrap();
//! for (e, g) in est.gamma_m.as_slice().iter().zip(gamma) {
//!     assert!((e - g).abs() < 1e-9);
//! }
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod covariance;
pub mod csice;
pub mod dataset;
pub mod deconv;
pub mod error;
pub mod graph;
pub mod io;
pub mod montecarlo;
pub mod rng;
pub mod simulation;
pub mod source;
pub mod spectral;
pub mod traversal;

pub use channel::{
    apply_channel, operator_norm, pseudo_inverse, random_channel, FrequencyResponse,
    PseudoInverseResponse,
};
pub use covariance::{
    build_observation_graph, build_source_graph, concentration_bound, empirical_covariance,
    empirical_kurtosis, ObservationGraph, SourceGraph, SpectralCovariance,
};
pub use csice::{csice, csice_detailed, ChannelEstimate, Component};
pub use dataset::{center_dataset, RawDataset};
pub use deconv::{
    blind_deconvolve, covariance_diagnostics, reconstructed_covariance, DiagnosticMatrices,
};
pub use error::{Error, Result};
pub use graph::{build_radius_graph, Graph, Station};
pub use montecarlo::{validate_bound_monte_carlo, BoundReport};
pub use simulation::{run_simulation, SimulationConfig};
pub use spectral::{eigendecompose, gft, igft, Domain, SignalEnsemble, SpectralBasis};
