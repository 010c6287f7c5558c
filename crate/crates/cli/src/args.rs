use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "edmpc", version, about = "EDM forecasting and closed-loop control of an agent-based rebellion model")]
pub struct Cli {
    /// TOML config file; missing keys take their defaults.
    #[arg(long, global = true, env = "EDMPC_CONFIG")]
    pub config: Option<PathBuf>,

    /// Override one config key, e.g. `--set theta=3`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Run the agent-based model and write its frame.
    Simulate(SimulateArgs),
    /// Forecast skill as a function of E, Tp or theta.
    Scan(ScanArgs),
    /// Out-of-sample S-map forecast over fixed library and prediction ranges.
    Forecast(ForecastArgs),
    /// Interaction coefficients, regime variances, trapped states and outbursts.
    Analyze(AnalyzeArgs),
    /// Write the embedded train and test matrices of the comparison dataset.
    ExportComparison(ExportArgs),
    /// Re-run a recorded command and check its outputs are byte-identical.
    #[command(alias = "replay-from-manifest")]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate(_) => "simulate",
            Self::Scan(_) => "scan",
            Self::Forecast(_) => "forecast",
            Self::Analyze(_) => "analyze",
            Self::ExportComparison(_) => "export-comparison",
            Self::Replay(_) => "replay",
        }
    }

    pub fn out_mut(&mut self) -> &mut PathBuf {
        match self {
            Self::Simulate(a) => &mut a.out,
            Self::Scan(a) => &mut a.out,
            Self::Forecast(a) => &mut a.out,
            Self::Analyze(a) => &mut a.out,
            Self::ExportComparison(a) => &mut a.out,
            Self::Replay(a) => &mut a.out,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LegitimacyArg {
    Constant,
    Random,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed sweep `first:last` (inclusive); replaces --seed.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Ticks to run; defaults to the `steps` key.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    pub control: Switch,
    #[arg(long, value_enum, default_value_t = LegitimacyArg::Constant)]
    pub legitimacy: LegitimacyArg,
    /// Concurrent scenarios in a sweep.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    E,
    Tp,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generate {
    /// Constant-legitimacy uncontrolled run.
    Nominal,
    /// The random-legitimacy comparison dataset.
    Comparison,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub mode: ScanMode,
    /// Frame CSV to scan.
    #[arg(long, conflicts_with = "generate")]
    pub data: Option<PathBuf>,
    /// Generate the data instead; defaults to nominal for E/Tp scans and
    /// comparison for theta scans.
    #[arg(long, value_enum)]
    pub generate: Option<Generate>,
    /// Series scanned in E and Tp modes.
    #[arg(long, default_value = "active")]
    pub column: String,
    /// Seed of generated data.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Length of generated nominal data.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Horizon of an E scan; defaults to the `tp` key.
    #[arg(long)]
    pub tp: Option<usize>,
    /// Dimension of a Tp scan.
    #[arg(long, default_value_t = 5)]
    pub e: usize,
    #[arg(long)]
    pub e_max: Option<usize>,
    #[arg(long)]
    pub tp_max: Option<usize>,
    /// Library share of E and Tp scans.
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ForecastArgs {
    /// Frame CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Coordinates as `column:lag`, comma separated; defaults to jailed and
    /// quiet at lags 0, 2 and 4.
    #[arg(long, value_delimiter = ',')]
    pub coords: Vec<String>,
    #[arg(long, default_value = "active")]
    pub target: String,
    #[arg(long)]
    pub tp: Option<usize>,
    /// Library origins `first:last`.
    #[arg(long)]
    pub lib: Option<String>,
    /// Prediction origins `first:last`.
    #[arg(long)]
    pub pred: Option<String>,
    #[arg(long, conflicts_with = "auto_theta")]
    pub theta: Option<f64>,
    /// Pick theta by a scan inside the library.
    #[arg(long)]
    pub auto_theta: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    /// Frame CSVs; regime variances are pooled across them.
    #[arg(long, required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub jacobian: bool,
    #[arg(long)]
    pub partition: bool,
    #[arg(long)]
    pub trapped: bool,
    #[arg(long)]
    pub outbursts: bool,
    /// Analyze only ticks `first:last`.
    #[arg(long)]
    pub ticks: Option<String>,
    /// S-map theta for the coefficients; defaults to `analysis_theta`.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

impl AnalyzeArgs {
    /// No selection flag means every analysis.
    pub fn all(&self) -> bool {
        !(self.jacobian || self.partition || self.trapped || self.outbursts)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExportArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory for the replayed outputs.
    #[arg(long)]
    pub out: PathBuf,
}
