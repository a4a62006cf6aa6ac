use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "weakval",
    version,
    about = "Weak values, quasiprobabilities and weak-measurement simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weak value profile postselected on position.
    Weakvalue(WeakvalueArgs),
    /// Probability of a negative weak value of p² against α_i.
    Fig1(Fig1Args),
    /// Margenau-Hill distribution of a coherent state (vacuum by default).
    Fig2(Fig2Args),
    /// Quasiprobability field of a coherent or Fock state.
    Quasiprob(QuasiprobArgs),
    /// Exact quantum (or classical Monte-Carlo) weak-measurement simulation.
    Simulate(SimulateArgs),
    /// Pointer-shift error against coupling strength.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FieldChoice {
    Standard,
    Kirkwood,
    MargenauHill,
    Wigner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PointerShape {
    Gaussian,
    Mixture,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted or `-`.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Lower end of the position grid.
    #[arg(long, default_value_t = -16.0, allow_negative_numbers = true)]
    pub q_min: f64,
    /// Upper end of the position grid (excluded).
    #[arg(long, default_value_t = 16.0, allow_negative_numbers = true)]
    pub q_max: f64,
    /// Number of grid points (even).
    #[arg(long, default_value_t = 1024)]
    pub points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct FieldGridArgs {
    /// Lower end of the position grid.
    #[arg(long, default_value_t = -8.0, allow_negative_numbers = true)]
    pub q_min: f64,
    /// Upper end of the position grid (excluded).
    #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
    pub q_max: f64,
    /// Number of grid points per axis (even).
    #[arg(long, default_value_t = 256)]
    pub points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    /// Real quadrature of the coherent amplitude, α = (α_r + iα_i)/√2.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha_r: f64,
    /// Imaginary quadrature of the coherent amplitude.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha_i: f64,
    /// Use the Fock state |n⟩ instead of a coherent state.
    #[arg(long, conflicts_with_all = ["alpha_r", "alpha_i"])]
    pub fock: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PointerArgs {
    #[arg(long, value_enum, default_value_t = PointerShape::Gaussian)]
    pub pointer: PointerShape,
    /// Pointer position spread σ.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Mixture components `weight:width`, widths in units of σ.
    #[arg(long, value_delimiter = ',', default_value = "0.5:0.75,0.5:1.25")]
    pub mixture: Vec<String>,
    /// Mean pointer momentum; any nonzero value violates the zero-current
    /// requirement and is rejected.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub pointer_drift: f64,
    /// Pointer grid points.
    #[arg(long, default_value_t = 512)]
    pub pointer_points: usize,
    /// Pointer grid half-width in units of the widest pointer component.
    #[arg(long, default_value_t = 12.0)]
    pub pointer_extent: f64,
}

#[derive(Debug, Clone, Args)]
pub struct WeakvalueArgs {
    /// Real quadrature of the coherent amplitude, α = (α_r + iα_i)/√2.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_r: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha_i: f64,
    /// Observable: q, p, q2, p2 or energy.
    #[arg(long, default_value = "p2")]
    pub obs: String,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct Fig1Args {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha_r: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha_i_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub alpha_i_max: f64,
    /// Number of α_i rows, endpoints included.
    #[arg(long, default_value_t = 31)]
    pub alpha_i_steps: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct Fig2Args {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha_r: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha_i: f64,
    #[command(flatten)]
    pub grid: FieldGridArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct QuasiprobArgs {
    #[arg(long, value_enum, default_value_t = FieldChoice::MargenauHill)]
    pub kind: FieldChoice,
    #[command(flatten)]
    pub state: StateArgs,
    #[command(flatten)]
    pub grid: FieldGridArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Classical Liouville kick on sampled phase-space points instead of the
    /// exact quantum evolution.
    #[arg(long)]
    pub classical: bool,
    #[command(flatten)]
    pub state: StateArgs,
    /// Observable: q, p, q2, p2 or energy.
    #[arg(long, default_value = "p2")]
    pub obs: String,
    /// Coupling strength ε.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[command(flatten)]
    pub pointer: PointerArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Classical sample count.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    /// Classical sampling seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Classical bins over ±4σ_q of the object.
    #[arg(long, default_value_t = 64)]
    pub bins: usize,
    /// Quantum: also write `Q, density` slices at these q to this file.
    #[arg(long)]
    pub slices_output: Option<PathBuf>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,2",
        allow_negative_numbers = true
    )]
    pub slices: Vec<f64>,
    /// Classical: also write the kicked ensemble to this file.
    #[arg(long)]
    pub ensemble_output: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value = "p2")]
    pub obs: String,
    /// Couplings, consecutive values at least a factor of two apart.
    #[arg(long, value_delimiter = ',', default_value = "0.005,0.01,0.02")]
    pub epsilons: Vec<f64>,
    #[command(flatten)]
    pub pointer: PointerArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}
