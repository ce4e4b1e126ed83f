//! End-to-end synthetic experiment: random station layout, nonstationary
//! source, random channel, noisy observations, channel estimation,
//! deconvolution and diagnostics, repeated over seeded trials.
//!
//! The source samples are drawn once per configuration and reused by every
//! trial, mirroring a fixed recorded dataset; trials redraw the channel and
//! the noise.

use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{operator_norm, random_channel_from, FrequencyResponse};
use crate::covariance::eps_for_bound;
use crate::covariance::{
    build_source_graph, empirical_covariance, ObservationGraph, SourceGraph, SpectralCovariance,
    DEFAULT_DELTA, DEFAULT_PEARSON_THRESHOLD,
};
use crate::csice::{csice_spectral, sign_consistency_report, ChannelEstimate};
use crate::deconv::{
    aligned_reconstruction, covariance_diagnostics, deconvolve_spectral, reconstructed_covariance,
    row_off_diagonal_means, signs_match_up_to_component, summarize_gap, summarize_matrix_gap,
    DeconvolutionResult, DiagnosticMatrices, GapSummary, DIAGNOSTIC_FLOOR_DB,
};
use crate::error::{Error, Result};
use crate::graph::{build_radius_graph, Graph, Station};
use crate::io;
use crate::montecarlo::{
    validate_bound_monte_carlo, BoundProbe, BoundReport, BoundValidationConfig,
};
use crate::rng::{self, trial_seed};
use crate::source::{reference_variance_profile, standard_normal_matrix, SyntheticSource};
use crate::spectral::{eigendecompose, SignalEnsemble, SpectralBasis};

/// How many station layouts to try before giving up on a connected graph
/// with a simple Laplacian spectrum.
const MAX_LAYOUT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseDomain {
    /// `ŷ = Γ x̂ + σ n̂`
    Spectral,
    /// `y = H x + σ n`
    Vertex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_vertices: usize,
    pub sample_count: usize,
    pub noise_sigma: f64,
    pub channel_amplitude: f64,
    pub pearson_threshold: f64,
    pub delta: f64,
    pub seed: u64,
    pub trials: usize,
    /// Connection radius for stations placed uniformly in the unit square.
    pub radius: f64,
    /// Weight of the factor shared by all spectral components of the source.
    pub common_factor: f64,
    /// Spectral variances of the source; `None` selects the reference profile.
    pub spectral_variances: Option<Vec<f64>>,
    pub noise_domain: NoiseDomain,
    pub floor_db: f64,
    /// Trials for the concentration-bound check; 0 skips it.
    pub bound_trials: usize,
    /// Bound values at which the probe deviations `ε` are placed.
    pub bound_targets: Vec<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_vertices: 32,
            sample_count: 31 * 24,
            noise_sigma: 0.5,
            channel_amplitude: 0.2,
            pearson_threshold: DEFAULT_PEARSON_THRESHOLD,
            delta: DEFAULT_DELTA,
            seed: 0,
            trials: 1000,
            radius: 0.35,
            common_factor: 0.5,
            spectral_variances: None,
            noise_domain: NoiseDomain::Spectral,
            floor_db: DIAGNOSTIC_FLOOR_DB,
            bound_trials: 1000,
            bound_targets: vec![0.1, 0.5],
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n_vertices < 2 {
            return bad(format!("n_vertices must be ≥ 2, got {}", self.n_vertices));
        }
        if self.sample_count == 0 {
            return bad("sample_count must be ≥ 1".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be ≥ 0, got {}", self.noise_sigma));
        }
        if !(0.0..1.0).contains(&self.channel_amplitude) {
            return bad(format!(
                "channel_amplitude must lie in [0, 1), got {}",
                self.channel_amplitude
            ));
        }
        if !(self.delta >= 0.0) {
            return bad(format!("delta must be ≥ 0, got {}", self.delta));
        }
        if !(self.pearson_threshold >= 0.0) {
            return bad(format!(
                "pearson_threshold must be ≥ 0, got {}",
                self.pearson_threshold
            ));
        }
        if self.trials == 0 {
            return bad("trials must be ≥ 1".into());
        }
        if !(self.radius > 0.0) {
            return bad(format!("radius must be > 0, got {}", self.radius));
        }
        if let Some(v) = &self.spectral_variances {
            if v.len() != self.n_vertices {
                return bad(format!(
                    "spectral_variances has {} entries for {} vertices",
                    v.len(),
                    self.n_vertices
                ));
            }
        }
        if self.bound_trials > 0 && self.bound_trials < crate::montecarlo::MIN_TRIALS {
            return bad(format!(
                "bound_trials must be 0 or ≥ {}, got {}",
                crate::montecarlo::MIN_TRIALS,
                self.bound_trials
            ));
        }
        if self.bound_targets.iter().any(|t| !(*t > 0.0)) {
            return bad("bound_targets must be positive".into());
        }
        Ok(())
    }

    pub fn variances(&self) -> Vec<f64> {
        self.spectral_variances
            .clone()
            .unwrap_or_else(|| reference_variance_profile(self.n_vertices))
    }
}

/// Everything fixed across trials.
#[derive(Debug, Clone)]
pub struct SimulationSetup {
    pub stations: Vec<Station>,
    pub graph: Graph,
    pub basis: SpectralBasis,
    pub source: SyntheticSource,
    /// Clean spectral samples `x̂_m`.
    pub clean: SignalEnsemble,
    /// Empirical covariance of the clean samples, handed to the estimator.
    pub cov_x: SpectralCovariance,
    pub source_graph: SourceGraph,
}

impl SimulationSetup {
    pub fn prepare(config: &SimulationConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(config.seed, rng::SETUP_STREAM);
        let n = config.n_vertices;
        let (stations, graph, basis) = (0..MAX_LAYOUT_ATTEMPTS)
            .find_map(|_| {
                let stations: Vec<Station> = (0..n)
                    .map(|k| Station::new(format!("s{}", k + 1), rng.random(), rng.random()))
                    .collect();
                let graph = build_radius_graph(&stations, config.radius).ok()?;
                if !graph.is_connected() {
                    return None;
                }
                let basis = eigendecompose(&graph.laplacian()).ok()?;
                Some((stations, graph, basis))
            })
            .ok_or_else(|| {
                Error::invalid(format!(
                    "no connected layout with distinct Laplacian eigenvalues after {MAX_LAYOUT_ATTEMPTS} attempts; increase the radius"
                ))
            })?;
        let source = SyntheticSource::random(&mut rng, &config.variances(), config.common_factor)?;
        let clean = SignalEnsemble::spectral(source.sample(&mut rng, config.sample_count))?;
        let cov_x = empirical_covariance(&clean)?;
        let source_graph = build_source_graph(&cov_x, config.pearson_threshold)?;
        Ok(Self {
            stations,
            graph,
            basis,
            source,
            clean,
            cov_x,
            source_graph,
        })
    }

    /// Noisy spectral observations of the clean samples through `gamma`.
    pub fn observe(
        &self,
        gamma: &FrequencyResponse,
        sigma: f64,
        domain: NoiseDomain,
        rng: &mut rng::Rng,
    ) -> Result<SignalEnsemble> {
        let (n, m) = (self.clean.dim(), self.clean.len());
        let mut y = self.clean.matrix().clone();
        for (mut row, g) in y.row_iter_mut().zip(gamma.as_slice()) {
            row *= *g;
        }
        let noise = standard_normal_matrix(rng, n, m) * sigma;
        match domain {
            NoiseDomain::Spectral => y += noise,
            NoiseDomain::Vertex => y += self.basis.modes().tr_mul(&noise),
        }
        SignalEnsemble::spectral(y)
    }

    /// Vertex-domain clean signals `x_m = U x̂_m`.
    pub fn clean_vertex(&self) -> Result<SignalEnsemble> {
        self.basis.igft(&self.clean)
    }
}

/// Full artifacts of one trial.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub gamma: FrequencyResponse,
    pub observations: SignalEnsemble,
    pub estimate: ChannelEstimate,
    pub observation_graph: ObservationGraph,
    pub cov_y: SpectralCovariance,
    pub deconvolution: Option<DeconvolutionResult>,
    pub diagnostics: Option<DiagnosticMatrices>,
    pub summary: TrialSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub max_magnitude_error: f64,
    pub signs_match: bool,
    pub support_size: usize,
    pub n_components: usize,
    pub observation_edges: usize,
    pub non_tree_violations: usize,
    /// Max-norm reconstruction error over all samples after per-component
    /// sign alignment; `None` when the support is empty.
    pub reconstruction_error: Option<f64>,
}

pub fn run_trial(
    setup: &SimulationSetup,
    config: &SimulationConfig,
    trial: usize,
) -> Result<TrialRun> {
    let mut rng = rng::stream(trial_seed(config.seed, trial), rng::TRIAL_STREAM);
    let n = setup.clean.dim();
    let gamma = random_channel_from(&mut rng, n, config.channel_amplitude)?;
    let observed = setup.observe(&gamma, config.noise_sigma, config.noise_domain, &mut rng)?;
    let observations = setup.basis.igft(&observed)?;

    let run = csice_spectral(&setup.cov_x, observed, &setup.source_graph, config.delta)?;
    let estimate = run.estimate;
    let max_magnitude_error = estimate
        .gamma_m
        .as_slice()
        .iter()
        .zip(gamma.as_slice())
        .map(|(e, g)| (e.abs() - g.abs()).abs())
        .fold(0.0, f64::max);
    let signs_match = signs_match_up_to_component(&estimate, gamma.as_slice());
    let non_tree_violations =
        sign_consistency_report(&estimate, &run.observation_graph, &setup.cov_x, &run.cov_y).len();

    let (deconvolution, diagnostics, reconstruction_error) = if estimate.support.iter().any(|&w| w)
    {
        let result = deconvolve_spectral(&estimate, &run.spectral_observations, &setup.basis)?;
        let recon_cov = reconstructed_covariance(&result)?;
        let diag = covariance_diagnostics(&recon_cov, &setup.cov_x, config.floor_db)?;
        let aligned = aligned_reconstruction(&estimate, &result, &setup.clean, &setup.basis)?;
        let clean_vertex = setup.clean_vertex()?;
        let err = (aligned.matrix() - clean_vertex.matrix()).amax();
        (Some(result), Some(diag), Some(err))
    } else {
        (None, None, None)
    };

    let summary = TrialSummary {
        trial,
        max_magnitude_error,
        signs_match,
        support_size: estimate.support.iter().filter(|w| **w).count(),
        n_components: estimate.components.len(),
        observation_edges: run.observation_graph.edges().n_edges(),
        non_tree_violations,
        reconstruction_error,
    };
    Ok(TrialRun {
        gamma,
        observations,
        estimate,
        observation_graph: run.observation_graph,
        cov_y: run.cov_y,
        deconvolution,
        diagnostics,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub trials: usize,
    pub source_graph_edges: usize,
    pub source_graph_connected: bool,
    pub sign_recovery_rate: f64,
    pub max_magnitude_error: f64,
    pub mean_magnitude_error: f64,
    pub max_reconstruction_error: Option<f64>,
    pub mean_support_size: f64,
    /// Fraction of trials whose observation graph kept every source edge.
    pub observation_equals_source_rate: f64,
    pub observation_connected_rate: f64,
    pub mean_non_tree_violations: f64,
    /// Gap of the trial-averaged absolute dB map.
    pub gap: Option<GapSummary>,
    /// Gap of the trial-averaged relative dB map.
    pub relative_gap: Option<GapSummary>,
}

#[derive(Debug, Clone)]
pub struct SimulationBundle {
    pub config: SimulationConfig,
    pub setup: SimulationSetup,
    /// Artifacts of trial 0.
    pub first_trial: TrialRun,
    pub trials: Vec<TrialSummary>,
    /// Diagnostics averaged over trials with a non-empty support.
    pub mean_diagnostics: Option<DiagnosticMatrices>,
    pub bound_report: Option<BoundReport>,
    pub summary: SimulationSummary,
}

/// Runs every trial of the configured experiment in parallel. Results are
/// reduced in trial order, so the output depends only on the configuration.
pub fn run_simulation(config: &SimulationConfig) -> Result<SimulationBundle> {
    let setup = SimulationSetup::prepare(config)?;
    let first_trial = run_trial(&setup, config, 0)?;
    let rest: Vec<(TrialSummary, Option<DiagnosticMatrices>)> = (1..config.trials)
        .into_par_iter()
        .map(|t| run_trial(&setup, config, t).map(|r| (r.summary, r.diagnostics)))
        .collect::<Result<_>>()?;

    let mut trials = vec![first_trial.summary.clone()];
    let mut diags: Vec<DiagnosticMatrices> = first_trial.diagnostics.iter().cloned().collect();
    for (s, d) in rest {
        trials.push(s);
        diags.extend(d);
    }
    let mean_diagnostics = if diags.is_empty() {
        None
    } else {
        Some(DiagnosticMatrices::mean(&diags)?)
    };

    let bound_report = if config.bound_trials > 0 {
        Some(bound_check(&setup, config, &first_trial.gamma)?)
    } else {
        None
    };

    let k = trials.len() as f64;
    let source_edges = setup.source_graph.graph().n_edges();
    let summary = SimulationSummary {
        trials: trials.len(),
        source_graph_edges: source_edges,
        source_graph_connected: setup.source_graph.is_connected(),
        sign_recovery_rate: trials.iter().filter(|t| t.signs_match).count() as f64 / k,
        max_magnitude_error: trials
            .iter()
            .map(|t| t.max_magnitude_error)
            .fold(0.0, f64::max),
        mean_magnitude_error: trials.iter().map(|t| t.max_magnitude_error).sum::<f64>() / k,
        max_reconstruction_error: trials
            .iter()
            .filter_map(|t| t.reconstruction_error)
            .reduce(f64::max),
        mean_support_size: trials.iter().map(|t| t.support_size as f64).sum::<f64>() / k,
        observation_equals_source_rate: trials
            .iter()
            .filter(|t| t.observation_edges == source_edges)
            .count() as f64
            / k,
        observation_connected_rate: trials.iter().filter(|t| t.n_components == 1).count() as f64
            / k,
        mean_non_tree_violations: trials
            .iter()
            .map(|t| t.non_tree_violations as f64)
            .sum::<f64>()
            / k,
        gap: mean_diagnostics.as_ref().map(summarize_gap),
        relative_gap: mean_diagnostics
            .as_ref()
            .map(|d| summarize_matrix_gap(&d.rel_diff_db)),
    };
    Ok(SimulationBundle {
        config: config.clone(),
        setup,
        first_trial,
        trials,
        mean_diagnostics,
        bound_report,
        summary,
    })
}

/// Probes one diagonal and one off-diagonal entry of the observation
/// covariance against the population source, at deviations placed so the
/// bound equals each configured target.
pub fn bound_check(
    setup: &SimulationSetup,
    config: &SimulationConfig,
    gamma: &FrequencyResponse,
) -> Result<BoundReport> {
    let c4 = setup.source.fourth_moment();
    let h = operator_norm(gamma);
    let mut probes = Vec::new();
    for (n, n_prime) in [(0, 0), (0, 1)] {
        for &target in &config.bound_targets {
            let eps = eps_for_bound(
                target,
                c4,
                h,
                config.noise_sigma,
                config.sample_count,
                n == n_prime,
            )?;
            probes.push(BoundProbe { n, n_prime, eps });
        }
    }
    let mc = BoundValidationConfig {
        source: setup.source.clone(),
        gamma: gamma.clone(),
        sigma: config.noise_sigma,
        sample_count: config.sample_count,
        probes,
        seed: config.seed,
    };
    validate_bound_monte_carlo(&mc, config.bound_trials)
}

#[derive(Serialize)]
struct DiagnosticsJson<'a> {
    gap: GapSummary,
    relative_gap: GapSummary,
    diagonal_inflation: Vec<f64>,
    row_off_diagonal_db: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<&'a SimulationConfig>,
}

/// Writes the JSON summary of a diagnostics matrix set.
pub fn write_diagnostics_json(path: &Path, d: &DiagnosticMatrices) -> Result<()> {
    io::write_json(path, &diagnostics_json(d, None))
}

fn diagnostics_json<'a>(
    d: &DiagnosticMatrices,
    config: Option<&'a SimulationConfig>,
) -> DiagnosticsJson<'a> {
    DiagnosticsJson {
        gap: summarize_gap(d),
        relative_gap: summarize_matrix_gap(&d.rel_diff_db),
        diagonal_inflation: d.diagonal_inflation.iter().copied().collect(),
        row_off_diagonal_db: row_off_diagonal_means(&d.abs_diff_db),
        config,
    }
}

/// Files written by [`write_bundle`], relative to the output directory.
pub const BUNDLE_FILES: &[&str] = &[
    "config.json",
    "stations.csv",
    "edges.csv",
    "spectrum.csv",
    "sources.csv",
    "source_covariance.csv",
    "true_channel.csv",
    "observations.csv",
    "channel_estimate.csv",
    "channel_components.json",
    "reconstructed.csv",
    "abs_diff_db.csv",
    "rel_diff_db.csv",
    "diagnostics.json",
    "bound_report.csv",
    "trials.csv",
    "summary.json",
];

pub fn write_bundle(bundle: &SimulationBundle, dir: &Path) -> Result<()> {
    let p = |name: &str| dir.join(name);
    let setup = &bundle.setup;
    let first = &bundle.first_trial;
    io::write_json(&p("config.json"), &bundle.config)?;
    io::write_stations(&p("stations.csv"), &setup.stations)?;
    io::write_edges(&p("edges.csv"), &setup.graph)?;
    io::write_spectrum(&p("spectrum.csv"), &setup.basis)?;
    io::write_signals(&p("sources.csv"), &setup.clean_vertex()?)?;
    io::write_matrix(&p("source_covariance.csv"), setup.cov_x.matrix())?;
    io::write_frequency_response(&p("true_channel.csv"), &first.gamma)?;
    io::write_signals(&p("observations.csv"), &first.observations)?;
    io::write_channel_estimate(&p("channel_estimate.csv"), &first.estimate)?;
    io::write_components_json(&p("channel_components.json"), &first.estimate)?;
    if let Some(d) = &first.deconvolution {
        io::write_signals(&p("reconstructed.csv"), &d.reconstructed)?;
    }
    if let Some(d) = &bundle.mean_diagnostics {
        io::write_matrix(&p("abs_diff_db.csv"), &d.abs_diff_db)?;
        io::write_matrix(&p("rel_diff_db.csv"), &d.rel_diff_db)?;
        io::write_json(&p("diagnostics.json"), &diagnostics_json(d, None))?;
    }
    if let Some(r) = &bundle.bound_report {
        io::write_bound_report(&p("bound_report.csv"), r)?;
    }
    write_trials_csv(&p("trials.csv"), &bundle.trials)?;
    io::write_json(&p("summary.json"), &bundle.summary)
}

fn write_trials_csv(path: &Path, trials: &[TrialSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let to_err = |e: csv::Error| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    for t in trials {
        w.serialize(t).map_err(to_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
