use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "wrisk",
    version,
    about = "Worst-case measures and model-risk metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Relative entropy, transport distance and worst case on a finite state space.
    Discrete(DiscreteArgs),
    /// Worst-case density on a one-dimensional grid.
    Density(DensityArgs),
    /// Closed-form worst case of a multivariate normal under a quadratic loss.
    Gaussian(GaussianArgs),
    /// Nominal and robust capital market lines.
    Frontier(FrontierArgs),
    /// Delta-hedging risk by Monte Carlo.
    Hedge(HedgeArgs),
    /// Regenerate the data behind a figure or table.
    Repro(ReproArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Discrete(_) => "discrete",
            Command::Density(_) => "density",
            Command::Gaussian(_) => "gaussian",
            Command::Frontier(_) => "frontier",
            Command::Hedge(_) => "hedge",
            Command::Repro(_) => "repro",
        }
    }
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DiscreteArgs {
    /// Reference distribution: a label row and a probability row.
    #[arg(long)]
    pub p: PathBuf,
    /// Alternative distribution, same format as --p.
    #[arg(long)]
    pub q: Option<PathBuf>,
    /// Square matrix of distances between states, in label order of --p.
    #[arg(long)]
    pub cost: PathBuf,
    /// Transport cost is distance^power.
    #[arg(long, default_value_t = 1)]
    pub power: u32,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Loss per state: a label row and a value row.
    #[arg(long)]
    pub loss: Option<PathBuf>,
    /// Prior over states, same format as --p; uniform when omitted.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct DensityArgs {
    /// normal:MEAN,STD | dirac:POINT | table:FILE
    #[arg(long = "ref")]
    pub reference: String,
    /// linear | quadratic:CENTER | table:FILE
    #[arg(long, default_value = "linear")]
    pub loss: String,
    #[arg(long, default_value_t = 2)]
    pub cost_power: u32,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// KL multiplier; selects the exponential tilt instead of transport.
    #[arg(long)]
    pub theta: Option<f64>,
    /// uniform | table:FILE
    #[arg(long, default_value = "uniform")]
    pub prior: String,
    /// LO,HI,N
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GaussianMethod {
    W,
    Kl,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct GaussianArgs {
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub sigma: PathBuf,
    /// Loss matrix.
    #[arg(long = "A")]
    pub a: PathBuf,
    /// Transport metric matrix; identity when omitted.
    #[arg(long = "B")]
    pub b: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    #[arg(long, value_enum)]
    pub method: GaussianMethod,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct FrontierArgs {
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub sigma: PathBuf,
    /// Transport metric matrix; identity when omitted.
    #[arg(long = "B")]
    pub b: Option<PathBuf>,
    /// nominal | kl | w
    #[arg(long)]
    pub method: String,
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// LO:HI:STEP
    #[arg(long, default_value = "0.1:1.0:0.05")]
    pub lambda: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HedgeMethod {
    Nominal,
    W,
    Kl,
    Volsample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Abs,
    Rms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PoolArg {
    Cumulative,
    PerRung,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct HedgeArgs {
    #[arg(long, default_value_t = 100.0)]
    pub s0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.2)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    #[arg(long, default_value_t = 100.0)]
    pub strike: f64,
    /// Maturity in years.
    #[arg(long = "T", default_value_t = 1.0)]
    pub maturity: f64,
    /// call | put
    #[arg(long, default_value = "call")]
    pub option: String,
    /// Hedge counts, comma-separated; one output row each.
    // a repeated list flag replaces the earlier one, so config values win
    #[arg(long, default_value = "200", value_delimiter = ',', action = ArgAction::Set)]
    pub n_hedge: Vec<usize>,
    /// Simulation steps; a multiple of every hedge count.
    #[arg(long, default_value_t = 200)]
    pub n_steps: usize,
    #[arg(long, default_value_t = 200)]
    pub n_paths: usize,
    #[arg(long, default_value_t = 20)]
    pub m_children: usize,
    #[arg(long, default_value_t = wrisk_core::hedging_sim::DESK_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = wrisk_core::hedging_sim::DESK_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = wrisk_core::hedging_sim::DESK_THETA)]
    pub theta: f64,
    /// Perturbation volatilities; defaults to (0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2) x sigma.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
    pub ladder: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "w")]
    pub method: HedgeMethod,
    /// Volatility distribution for volsample: uniform:LO,HI | lognormal:M,S
    #[arg(long, default_value = "uniform:0.15,0.25")]
    pub vol: String,
    #[arg(long, value_enum, default_value = "abs")]
    pub loss: LossArg,
    #[arg(long, value_enum, default_value = "cumulative")]
    pub pool: PoolArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ReproArgs {
    /// table1 | table2 | fig-intro | fig-gaussian | fig-cml | fig-eigen |
    /// fig-variance | fig-hedge | fig-hedge-ladder | all
    pub target: String,
    #[arg(long, default_value = "repro-out")]
    pub out_dir: PathBuf,
    /// Compare every output byte for byte with the files in this directory.
    #[arg(long)]
    pub check: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}
