//! `rcsbench`: reproducible random-circuit-sampling pipelines.
//!
//! Exit codes: 0 success, 2 input error, 3 hypothesis-test failure, 4 resource limit.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Hypothesis(String),
    Resource(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Hypothesis(_) => 3,
            CliError::Resource(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Hypothesis(m) => write!(f, "hypothesis test failed: {m}"),
            CliError::Resource(m) => write!(f, "resource limit: {m}"),
        }
    }
}

impl From<rcsbench::Error> for CliError {
    fn from(e: rcsbench::Error) -> Self {
        match e {
            rcsbench::Error::SizeLimit { .. } => {
                CliError::Resource(format!("{e}; use a smaller circuit or raise --max-qubits if memory allows"))
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "rcsbench", version, about = "Random circuit sampling workbench")]
pub struct Cli {
    /// Worker threads (0 = one per core). Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// JSON object of default flag values; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a topology file.
    Topology(TopologyArgs),
    /// Write a two-qubit gate parameter file.
    Params(ParamsArgs),
    /// Generate a random circuit.
    Generate(GenerateArgs),
    /// Derive a patch or elided circuit.
    Variants(VariantsArgs),
    /// Sample bitstrings from a circuit.
    Sample(SampleArgs),
    /// XEB fidelity, hypothesis tests and uncertainty of a sample file.
    Analyze(AnalyzeArgs),
    /// Fit two-qubit gate parameters patch by patch.
    Calibrate(CalibrateArgs),
    /// Classical simulation cost estimates.
    #[command(subcommand)]
    Cost(CostCommand),
    /// Summarize report files as a markdown table.
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone)]
pub struct TopologySource {
    /// Topology file.
    #[arg(long, conflicts_with_all = ["grid", "sixty"])]
    pub topology: Option<PathBuf>,
    /// Full rectangular grid, e.g. `3x4`.
    #[arg(long, conflicts_with = "sixty")]
    pub grid: Option<String>,
    /// The 60-qubit layout.
    #[arg(long)]
    pub sixty: bool,
}

#[derive(Args, Debug)]
pub struct TopologyArgs {
    #[command(flatten)]
    pub source: TopologySource,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ParamsArgs {
    #[command(flatten)]
    pub source: TopologySource,
    /// Uniform perturbation amplitude (rad) added to every θ and φ.
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KindArg {
    Standard,
    Deep22,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub source: TopologySource,
    /// Gate parameter file; nominal parameters on every coupler when absent.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub cycles: usize,
    #[arg(long, value_enum, default_value_t = KindArg::Standard)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct CutArgs {
    /// Qubits in columns below this value form the left half.
    #[arg(long, conflicts_with_all = ["cut_row", "left"])]
    pub cut_col: Option<usize>,
    /// Qubits in rows below this value form the left half.
    #[arg(long, conflicts_with = "left")]
    pub cut_row: Option<usize>,
    /// Explicit left half as comma-separated linear qubit ids.
    #[arg(long, value_delimiter = ',')]
    pub left: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    Patch,
    Elided,
}

#[derive(Args, Debug)]
pub struct VariantsArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[command(flatten)]
    pub cut: CutArgs,
    #[arg(long, value_enum)]
    pub kind: VariantArg,
    /// Final cycles that keep their crossing gates (elided only).
    #[arg(long)]
    pub keep_last: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Ideal,
    Speckle,
    Trajectory,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::Speckle)]
    pub model: ModelArg,
    /// Mixture weight of the ideal distribution (speckle model); the noise model's
    /// digital-error prediction when absent.
    #[arg(long)]
    pub fidelity: Option<f64>,
    /// Noise model JSON (`e1`, `e2`, `e_r0`, `e_r1`); simultaneous-operation defaults when absent.
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Apply readout bit flips after sampling.
    #[arg(long)]
    pub readout: bool,
    #[arg(short = 'n', long = "n-samples")]
    pub n_samples: usize,
    /// Bitstrings drawn from each noise trajectory.
    #[arg(long, default_value_t = 1)]
    pub shots: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = rcsbench::simulator::DEFAULT_MAX_QUBITS)]
    pub max_qubits: usize,
    /// Binary sample file; metadata goes to `<out>.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long, required_unless_present = "dir", conflicts_with = "dir")]
    pub circuit: Option<PathBuf>,
    #[arg(long, required_unless_present = "dir", conflicts_with = "dir")]
    pub samples: Option<PathBuf>,
    /// Analyze every sample file in a directory and combine the estimates.
    #[arg(long)]
    pub dir: Option<PathBuf>,
    /// Bootstrap resamples (0 disables the bootstrap).
    #[arg(long, default_value_t = rcsbench::xeb::DEFAULT_BOOTSTRAP_RESAMPLES)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fidelities the data must be consistent with (KS p-value at least `--alpha`).
    #[arg(long = "expect-fidelity")]
    pub expect: Vec<f64>,
    /// Fidelities the data must reject (KS p-value below `--reject-alpha`).
    #[arg(long = "reject-fidelity")]
    pub reject: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub reject_alpha: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Empirical versus model CDF table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FamilyArg {
    /// Midline quadrants.
    Four,
    /// Midline quadrants, then quadrants with both cuts moved by one.
    Staggered,
    /// Two-block column splits at each of `--cuts`.
    Columns,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TrainArg {
    All,
    ThetaPhi,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub source: TopologySource,
    #[arg(long, num_args = 1.., required = true)]
    pub circuits: Vec<PathBuf>,
    /// One sample file per circuit, full width or patch width.
    #[arg(long, num_args = 1.., required = true)]
    pub samples: Vec<PathBuf>,
    /// Starting parameters; those of the first circuit when absent.
    #[arg(long)]
    pub initial: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Staggered)]
    pub family: FamilyArg,
    #[arg(long, value_delimiter = ',')]
    pub cuts: Vec<usize>,
    #[arg(long, value_enum, default_value_t = TrainArg::All)]
    pub train: TrainArg,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Calibrated parameter file; the per-patch report goes to `<out>.report.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum CostCommand {
    /// Tensor-network contraction path, slicing and runtime extrapolation.
    Tnc(TncArgs),
    /// Schrödinger-Feynman cut and imbalanced-gate speedup.
    Sfa(SfaArgs),
}

#[derive(Args, Debug)]
pub struct TncArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    /// Number of open qubits (the first ones in circuit order).
    #[arg(long, default_value_t = rcsbench::costmodel::DEFAULT_OPEN_QUBITS)]
    pub open: usize,
    /// log2 cap on intermediate tensor size.
    #[arg(long, default_value_t = rcsbench::costmodel::DEFAULT_MAX_LOG2_SIZE)]
    pub max_log2: f64,
    #[arg(long, default_value_t = rcsbench::costmodel::DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Samples and fidelity for the runtime extrapolation.
    #[arg(long, default_value_t = 7.0e7)]
    pub n_samples: f64,
    #[arg(long, default_value_t = 3.66e-4)]
    pub fidelity: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-restart costs.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SfaArgs {
    /// Circuit to cut; without it, `--g` identical gates are analyzed.
    #[arg(long, conflicts_with = "g")]
    pub circuit: Option<PathBuf>,
    #[command(flatten)]
    pub cut: CutArgs,
    /// Number of crossing gates of a synthetic cut.
    #[arg(long, required_unless_present = "circuit")]
    pub g: Option<usize>,
    /// |θ - π/2| of every synthetic gate.
    #[arg(long, default_value_t = 0.0)]
    pub delta_theta: f64,
    /// Conditional phase of every synthetic gate.
    #[arg(long, default_value_t = std::f64::consts::PI / 18.0)]
    pub phi: f64,
    #[arg(long)]
    pub fidelity: f64,
    /// Statevector amplitude updates per second per core; enables the runtime estimate.
    #[arg(long)]
    pub step_rate: Option<f64>,
    #[arg(long, default_value_t = rcsbench::costmodel::REFERENCE_CORES)]
    pub cores: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match commands::apply_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("rcsbench: {e}");
            return ExitCode::from(e.code());
        }
    };
    let cli = Cli::parse_from(&argv);
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("rcsbench: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::dispatch(&cli, &argv[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rcsbench: {e}");
            ExitCode::from(e.code())
        }
    }
}
