//! Batch experiment driver: turns a JSON experiment config into data files
//! (graph exports, trajectory CSV, spectral CSV/DOT/JSON reports).
//!
//! Subcommands: `graph`, `evolve`, `spectrum`. Identical configs produce
//! byte-identical outputs, and every run writes its resolved config next to
//! the files it generates. Exit codes: 0 success, 2 configuration error,
//! 3 guard refusal (a computation was declined as too large).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use spinwalk::graph::{Family, GraphError};
use spinwalk::observables::{
    run_trajectory, spin_fluctuation, spin_time_average, trajectory_to_csv, ObservablesError,
    TrajectoryRecord,
};
use spinwalk::ops::{build_unitary, Coin, CzMode};
use spinwalk::spectral::{
    diagonalize, ks_distance, level_spacings, poisson_cdf, quasienergy_histogram, samples_to_csv,
    spectrum_to_csv, thermalization_report, u_network, wigner_surmise_cdf, SpectralError,
    ThermalizationReport, DEFAULT_U_NETWORK_THRESHOLD,
};
use spinwalk::state::StateError;
use spinwalk::stats::{self, StatsError, DEFAULT_BINS};
use spinwalk::{generate, Graph, GuardError, Guards, PureState};

#[derive(Parser)]
#[command(
    name = "spinwalk",
    version,
    about = "Interacting quantum walk on a graph of spins: simulation and spectral analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: CommandKind,
}

#[derive(Subcommand)]
enum CommandKind {
    /// Generate or load the configured graph and export it (edge list + DOT).
    Graph(RunArgs),
    /// Evolve the initial state, recording observables at every step.
    Evolve(RunArgs),
    /// Diagonalize the evolution operator and emit spectral statistics.
    Spectrum(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory, overriding the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Coin operator, overriding the config (grover | fourier).
    #[arg(long, value_name = "COIN")]
    coin: Option<String>,
    /// Interaction mode, overriding the config (edge_list | incident).
    #[arg(long, value_name = "MODE")]
    cz_mode: Option<String>,
    /// Number of time steps, overriding the config.
    #[arg(long, value_name = "T")]
    steps: Option<usize>,
    /// Random-graph seed, overriding the config (ignored for fixed families).
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

/// Graph source: a generator family (e.g. {"family": "cycle", "n": 9}) or an
/// edge-list file ({"edge_list": "path"}).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum GraphSpec {
    Family(Family),
    EdgeList { edge_list: PathBuf },
}

fn default_coin() -> Coin {
    Coin::Grover
}

fn default_kets() -> Vec<(usize, usize, usize)> {
    vec![(0, 0, 0)]
}

fn default_steps() -> usize {
    400
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn default_threshold() -> f64 {
    DEFAULT_U_NETWORK_THRESHOLD
}

/// One experiment, fully reproducible from this structure alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    graph: GraphSpec,
    #[serde(default = "default_coin")]
    coin: Coin,
    #[serde(default)]
    cz_mode: CzMode,
    /// Initial superposition as (node, color, spin-configuration) kets with
    /// equal weights.
    #[serde(default = "default_kets")]
    initial_kets: Vec<(usize, usize, usize)>,
    #[serde(default = "default_steps")]
    steps: usize,
    /// First step of the stationary window; defaults to steps/2. The window
    /// always ends at the last step.
    #[serde(default)]
    window_start: Option<usize>,
    #[serde(default = "default_out_dir")]
    out_dir: PathBuf,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    guards: Guards,
    #[serde(default = "default_bins")]
    bins: usize,
    #[serde(default)]
    u_network: bool,
    #[serde(default = "default_threshold")]
    u_network_threshold: f64,
}

impl ExperimentConfig {
    fn window(&self) -> (usize, usize) {
        (self.window_start.unwrap_or(self.steps / 2), self.steps)
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Guard(#[from] GuardError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Guard(_) => 3,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        match e {
            StateError::Guard(g) => CliError::Guard(g),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<ObservablesError> for CliError {
    fn from(e: ObservablesError) -> Self {
        match e {
            ObservablesError::Guard(g) => CliError::Guard(g),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::Guard(g) => CliError::Guard(g),
            SpectralError::Observables(ObservablesError::Guard(g)) => CliError::Guard(g),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Collects output files and writes them in one pass; if any write fails, the
/// files already written by this run are removed so no partial set remains.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new(dir: PathBuf) -> Self {
        Self { dir, files: Vec::new() }
    }

    fn add(&mut self, name: &str, content: String) {
        self.files.push((name.to_string(), content));
    }

    fn write_all(self) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", self.dir.display())))?;
        let mut written = Vec::new();
        for (name, content) in &self.files {
            let path = self.dir.join(name);
            if let Err(e) = fs::write(&path, content) {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                return Err(CliError::Config(format!("cannot write {}: {e}", path.display())));
            }
            written.push(path);
        }
        Ok(written)
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        CliError::Config(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;

    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(coin) = &args.coin {
        cfg.coin = coin.parse().map_err(CliError::Config)?;
    }
    if let Some(mode) = &args.cz_mode {
        cfg.cz_mode = mode.parse().map_err(CliError::Config)?;
    }
    if let Some(steps) = args.steps {
        cfg.steps = steps;
    }
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }

    if cfg.bins == 0 {
        return Err(CliError::Config("bins must be at least 1".into()));
    }
    if cfg.u_network_threshold.is_nan() || cfg.u_network_threshold <= 0.0 {
        return Err(CliError::Config("u_network_threshold must be positive".into()));
    }
    if let Some(t0) = cfg.window_start {
        if t0 > cfg.steps {
            return Err(CliError::Config(format!(
                "window_start {t0} exceeds steps {}",
                cfg.steps
            )));
        }
    }
    Ok(cfg)
}

fn build_graph(cfg: &ExperimentConfig) -> Result<Arc<Graph>, CliError> {
    match &cfg.graph {
        GraphSpec::Family(family) => {
            let family = match cfg.seed {
                Some(seed) => family.clone().with_seed(seed),
                None => family.clone(),
            };
            Ok(Arc::new(generate(&family)?))
        }
        GraphSpec::EdgeList { edge_list } => Ok(Arc::new(Graph::load(edge_list)?)),
    }
}

fn resolved_config_json(cfg: &ExperimentConfig) -> Result<String, CliError> {
    Ok(format!("{}\n", serde_json::to_string_pretty(cfg)?))
}

fn run_graph(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let graph = build_graph(cfg)?;
    let mut out = Outputs::new(cfg.out_dir.clone());
    out.add("graph.edges", graph.to_edge_list_text());
    out.add("graph.dot", graph.to_dot());
    out.add("resolved_config.json", resolved_config_json(cfg)?);
    let written = out.write_all()?;
    println!(
        "graph: {} nodes, {} edges, max degree {}",
        graph.n_nodes(),
        graph.n_edges(),
        graph.max_degree()
    );
    report_written(&written);
    Ok(())
}

#[derive(Serialize)]
struct FinalEntropies {
    position: f64,
    color: f64,
    spin: f64,
}

#[derive(Serialize)]
struct EvolveSummary {
    steps: usize,
    window: (usize, usize),
    /// Site and time mean of the magnetization over the window.
    mean_spin: f64,
    /// Per-node time-averaged magnetization over the window.
    spin_time_average: Vec<f64>,
    /// Per-node spin standard deviation over the window; absent when the
    /// window holds a single record.
    spin_fluctuation: Option<Vec<f64>>,
    final_entropies: FinalEntropies,
    final_position: Vec<f64>,
    final_spin: Vec<f64>,
}

fn run_evolve(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let graph = build_graph(cfg)?;
    let psi0 = PureState::from_kets(graph, &cfg.initial_kets, &cfg.guards)?;
    let (traj, _) = run_trajectory(&psi0, cfg.coin, cfg.cz_mode, cfg.steps, &cfg.guards)?;

    let (t0, t1) = cfg.window();
    let avg = spin_time_average(&traj, t0, t1)?;
    let fluct = if t1 > t0 { Some(spin_fluctuation(&traj, t0, t1)?) } else { None };
    let last: &TrajectoryRecord = traj.records().last().expect("at least the initial record");
    let summary = EvolveSummary {
        steps: cfg.steps,
        window: (t0, t1),
        mean_spin: avg.site_mean,
        spin_time_average: avg.per_node,
        spin_fluctuation: fluct,
        final_entropies: FinalEntropies {
            position: last.entropy_position,
            color: last.entropy_color,
            spin: last.entropy_spin,
        },
        final_position: last.position.clone(),
        final_spin: last.spin.clone(),
    };

    let mut out = Outputs::new(cfg.out_dir.clone());
    out.add("trajectory.csv", trajectory_to_csv(&traj));
    out.add("summary.json", format!("{}\n", serde_json::to_string_pretty(&summary)?));
    out.add("resolved_config.json", resolved_config_json(cfg)?);
    let written = out.write_all()?;
    println!(
        "evolve: {} steps, mean spin {:.6} over window [{t0}, {t1}]",
        cfg.steps, summary.mean_spin
    );
    report_written(&written);
    Ok(())
}

#[derive(Serialize)]
struct KsStatistics {
    wigner_filtered: f64,
    poisson_filtered: f64,
    wigner_raw: f64,
    poisson_raw: f64,
}

#[derive(Serialize)]
struct SpectrumReport {
    dim: usize,
    levels_filtered: usize,
    max_residual: f64,
    unitarity_deviation: f64,
    ks: KsStatistics,
    thermalization: ThermalizationReport,
}

fn run_spectrum(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let graph = build_graph(cfg)?;
    let op = build_unitary(&graph, cfg.coin, cfg.cz_mode, &cfg.guards)?;
    let spectral = diagonalize(&op, &cfg.guards)?;
    let net_dot = cfg
        .u_network
        .then(|| u_network(op.matrix().as_ref(), cfg.u_network_threshold).to_dot());
    drop(op);

    let raw = level_spacings(&spectral, false)?;
    let filtered = level_spacings(&spectral, true)?;
    let ks = KsStatistics {
        wigner_filtered: ks_distance(&filtered, wigner_surmise_cdf)?,
        poisson_filtered: ks_distance(&filtered, poisson_cdf)?,
        wigner_raw: ks_distance(&raw, wigner_surmise_cdf)?,
        poisson_raw: ks_distance(&raw, poisson_cdf)?,
    };

    let qhist = quasienergy_histogram(&spectral, cfg.bins)?;
    // Spacing histogram over the fixed figure range [0, 4]; the raw samples
    // file keeps any spacings beyond it.
    let in_range: Vec<f64> = filtered.iter().copied().filter(|&s| s <= 4.0).collect();
    let shist = stats::histogram(&in_range, cfg.bins, (0.0, 4.0))?;

    let psi0 = PureState::from_kets(graph, &cfg.initial_kets, &cfg.guards)?;
    let (traj, _) = run_trajectory(&psi0, cfg.coin, cfg.cz_mode, cfg.steps, &cfg.guards)?;
    let thermal = thermalization_report(&spectral, &traj, cfg.window(), &psi0)?;

    let report = SpectrumReport {
        dim: spectral.quasienergies().len(),
        levels_filtered: filtered.len() + 1,
        max_residual: spectral.max_residual(),
        unitarity_deviation: spectral.unitarity_deviation(),
        ks,
        thermalization: thermal,
    };

    let mut out = Outputs::new(cfg.out_dir.clone());
    out.add("spectrum.csv", spectrum_to_csv(&spectral));
    out.add("quasienergy_histogram.csv", qhist.to_csv());
    out.add("spacings.csv", samples_to_csv("spacing", &filtered));
    out.add("spacing_histogram.csv", shist.to_csv());
    out.add("report.json", format!("{}\n", serde_json::to_string_pretty(&report)?));
    if let Some(dot) = net_dot {
        out.add("u_network.dot", dot);
    }
    out.add("resolved_config.json", resolved_config_json(cfg)?);
    let written = out.write_all()?;
    println!(
        "spectrum: dim {}, KS wigner {:.4} / poisson {:.4} (filtered), residual {:.2e}",
        report.dim, report.ks.wigner_filtered, report.ks.poisson_filtered, report.max_residual
    );
    report_written(&written);
    Ok(())
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        CommandKind::Graph(args) => run_graph(&load_config(args)?),
        CommandKind::Evolve(args) => run_evolve(&load_config(args)?),
        CommandKind::Spectrum(args) => run_spectrum(&load_config(args)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn config_defaults_fill_in() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"graph": {"family": "bull"}}"#).unwrap();
        assert_eq!(cfg.coin, Coin::Grover);
        assert_eq!(cfg.cz_mode, CzMode::EdgeList);
        assert_eq!(cfg.initial_kets, vec![(0, 0, 0)]);
        assert_eq!(cfg.steps, 400);
        assert_eq!(cfg.window(), (200, 400));
        assert_eq!(cfg.bins, 50);
        assert!(!cfg.u_network);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(
            r#"{"graph": {"family": "bull"}, "coinn": "grover"}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn edge_list_graph_spec_parses() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"graph": {"edge_list": "some/graph.edges"}}"#).unwrap();
        match cfg.graph {
            GraphSpec::EdgeList { edge_list } => {
                assert_eq!(edge_list, Path::new("some/graph.edges"));
            }
            other => panic!("expected an edge-list source, got {other:?}"),
        }
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"graph": {"family": "erdos_renyi", "nodes": 8, "edges": 12, "seed": 1},
                "coin": "fourier", "steps": 17, "window_start": 5}"#,
        )
        .unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let again: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(again.steps, 17);
        assert_eq!(again.coin, Coin::Fourier);
        assert_eq!(again.window(), (5, 17));
    }
}
