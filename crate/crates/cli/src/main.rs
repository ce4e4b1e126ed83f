//! `graph-deconv` command-line tool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, Parser, Subcommand};
use graph_deconv::covariance::{build_source_graph, empirical_covariance, SpectralCovariance};
use graph_deconv::csice::csice_detailed;
use graph_deconv::deconv::{blind_deconvolve, covariance_diagnostics, DIAGNOSTIC_FLOOR_DB};
use graph_deconv::io;
use graph_deconv::simulation::{
    bound_check, run_simulation, write_bundle, write_diagnostics_json, SimulationConfig,
    SimulationSetup,
};
use graph_deconv::spectral::{eigendecompose, Domain, SpectralBasis};
use graph_deconv::{build_radius_graph, center_dataset, gft, Error, Graph, Result};

#[derive(Parser, Debug)]
#[command(
    name = "graph-deconv",
    version,
    about = "Blind deconvolution of graph signals"
)]
struct Cli {
    /// Base seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the radius graph and its Laplacian spectrum.
    Graph {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Estimate the channel frequency response from observations.
    Estimate {
        /// Vertex-domain observations, rows = samples, header v1..vN.
        #[arg(long)]
        signals: PathBuf,
        /// Spectral covariance of the source, N×N without header.
        #[arg(long)]
        cov_x: PathBuf,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = graph_deconv::covariance::DEFAULT_DELTA)]
        delta: f64,
        #[arg(long, default_value_t = graph_deconv::covariance::DEFAULT_PEARSON_THRESHOLD)]
        pearson_threshold: f64,
    },
    /// Invert an estimated channel on its support.
    Deconvolve {
        #[arg(long)]
        signals: PathBuf,
        /// Channel estimate written by `estimate`.
        #[arg(long)]
        estimate: PathBuf,
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Compare the covariance of reconstructed signals with the source covariance.
    Diagnose {
        /// Vertex-domain reconstruction written by `deconvolve`.
        #[arg(long)]
        reconstructed: PathBuf,
        #[arg(long)]
        cov_x: PathBuf,
        /// Restrict the comparison to this estimate's support.
        #[arg(long)]
        estimate: Option<PathBuf>,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = DIAGNOSTIC_FLOOR_DB, allow_negative_numbers = true)]
        floor_db: f64,
    },
    /// Run the synthetic experiment described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the number of trials in the config.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Monte Carlo check of the sample covariance concentration bound.
    ValidateBounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
    },
    /// Center a raw station × hour × day dataset into signals.
    Center {
        /// Long-format CSV with header station,day,hour,value.
        #[arg(long)]
        raw: PathBuf,
        /// With a graph, also write the spectral covariance of the result.
        #[command(flatten)]
        graph: OptionalGraphArgs,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = true)]
struct GraphArgs {
    /// Station coordinates, header id,x,y.
    #[arg(long, requires = "radius", conflicts_with = "edges")]
    coords: Option<PathBuf>,
    #[arg(long, requires = "coords")]
    radius: Option<f64>,
    /// Edge list, header i,j, 1-based.
    #[arg(long)]
    edges: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OptionalGraphArgs {
    #[arg(long, requires = "radius", conflicts_with = "edges")]
    coords: Option<PathBuf>,
    #[arg(long, requires = "coords")]
    radius: Option<f64>,
    #[arg(long)]
    edges: Option<PathBuf>,
}

fn load_graph(
    coords: Option<&Path>,
    radius: Option<f64>,
    edges: Option<&Path>,
    n: Option<usize>,
) -> Result<Graph> {
    let graph = match (coords, radius, edges) {
        (Some(c), Some(r), None) => build_radius_graph(&io::read_stations(c)?, r)?,
        (None, None, Some(e)) => io::read_edges(e, n)?,
        _ => {
            return Err(Error::InvalidParameter(
                "give either --coords with --radius, or --edges".into(),
            ))
        }
    };
    if let Some(n) = n {
        if graph.n_vertices() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: graph.n_vertices(),
            });
        }
    }
    Ok(graph)
}

impl GraphArgs {
    fn basis(&self, n: Option<usize>) -> Result<(Graph, SpectralBasis)> {
        let g = load_graph(
            self.coords.as_deref(),
            self.radius,
            self.edges.as_deref(),
            n,
        )?;
        let basis = eigendecompose(&g.laplacian())?;
        Ok((g, basis))
    }
}

fn run(cli: Cli) -> Result<()> {
    let out = cli.out.as_path();
    std::fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })?;
    match cli.command {
        Command::Graph { graph } => {
            let (g, basis) = graph.basis(None)?;
            io::write_edges(&out.join("edges.csv"), &g)?;
            io::write_spectrum(&out.join("spectrum.csv"), &basis)?;
            io::write_matrix(&out.join("modes.csv"), basis.modes())?;
            log::info!("{} vertices, {} edges", g.n_vertices(), g.n_edges());
        }
        Command::Estimate {
            signals,
            cov_x,
            graph,
            delta,
            pearson_threshold,
        } => {
            let y = io::read_signals(&signals, Domain::Vertex)?;
            let cov_x = SpectralCovariance::new(io::read_matrix(&cov_x)?)?;
            let (_, basis) = graph.basis(Some(y.dim()))?;
            let source = build_source_graph(&cov_x, pearson_threshold)?;
            if !source.is_connected() {
                log::warn!("source graph is disconnected; signs are only defined per component");
            }
            let run = csice_detailed(&cov_x, &y, &basis, &source, delta)?;
            io::write_channel_estimate(&out.join("channel_estimate.csv"), &run.estimate)?;
            io::write_components_json(&out.join("channel_components.json"), &run.estimate)?;
            log::info!(
                "support {} of {} frequencies in {} component(s)",
                run.observation_graph.support_vertices().len(),
                y.dim(),
                run.estimate.components.len()
            );
        }
        Command::Deconvolve {
            signals,
            estimate,
            graph,
        } => {
            let y = io::read_signals(&signals, Domain::Vertex)?;
            let est = io::read_channel_estimate(&estimate)?;
            if est.n_vertices() != y.dim() {
                return Err(Error::DimensionMismatch {
                    expected: y.dim(),
                    found: est.n_vertices(),
                });
            }
            let (_, basis) = graph.basis(Some(y.dim()))?;
            let result = blind_deconvolve(&est, &y, &basis)?;
            io::write_signals(&out.join("reconstructed.csv"), &result.reconstructed)?;
        }
        Command::Diagnose {
            reconstructed,
            cov_x,
            estimate,
            graph,
            floor_db,
        } => {
            let x = io::read_signals(&reconstructed, Domain::Vertex)?;
            let cov_x = SpectralCovariance::new(io::read_matrix(&cov_x)?)?;
            let (_, basis) = graph.basis(Some(x.dim()))?;
            let mut c = empirical_covariance(&gft(&basis, &x)?)?.into_matrix();
            if let Some(path) = estimate {
                let est = io::read_channel_estimate(&path)?;
                for (n, &inside) in est.support.iter().enumerate() {
                    if !inside {
                        c.row_mut(n).fill(0.0);
                        c.column_mut(n).fill(0.0);
                    }
                }
            }
            let d = covariance_diagnostics(&SpectralCovariance::new(c)?, &cov_x, floor_db)?;
            io::write_matrix(&out.join("abs_diff_db.csv"), &d.abs_diff_db)?;
            io::write_matrix(&out.join("rel_diff_db.csv"), &d.rel_diff_db)?;
            write_diagnostics_json(&out.join("diagnostics.json"), &d)?;
        }
        Command::Simulate { config, trials } => {
            let mut config: SimulationConfig = io::read_json(&config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            if let Some(t) = trials {
                config.trials = t;
            }
            let bundle = run_simulation(&config)?;
            write_bundle(&bundle, out)?;
            let s = &bundle.summary;
            log::info!("sign recovery rate {:.4}", s.sign_recovery_rate);
            if let Some(g) = &s.gap {
                log::info!("gap {:.3} dB", g.gap_db);
            }
        }
        Command::ValidateBounds { config, trials } => {
            let mut config: SimulationConfig = io::read_json(&config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            config.bound_trials = trials;
            config.validate()?;
            let setup = SimulationSetup::prepare(&config)?;
            let mut rng = graph_deconv::rng::stream(config.seed, graph_deconv::rng::TRIAL_STREAM);
            let gamma = graph_deconv::channel::random_channel_from(
                &mut rng,
                config.n_vertices,
                config.channel_amplitude,
            )?;
            let report = bound_check(&setup, &config, &gamma)?;
            io::write_bound_report(&out.join("bound_report.csv"), &report)?;
            if report.any_flagged() {
                log::warn!("empirical exceedance above the bound beyond sampling error");
            }
        }
        Command::Center { raw, graph } => {
            let data = io::read_raw_dataset(&raw)?;
            let x = center_dataset(&data)?;
            io::write_signals(&out.join("signals.csv"), &x)?;
            if graph.coords.is_some() || graph.edges.is_some() {
                let g = load_graph(
                    graph.coords.as_deref(),
                    graph.radius,
                    graph.edges.as_deref(),
                    Some(x.dim()),
                )?;
                let basis = eigendecompose(&g.laplacian())?;
                let cov = empirical_covariance(&gft(&basis, &x)?)?;
                io::write_matrix(&out.join("cov_x.csv"), cov.matrix())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
