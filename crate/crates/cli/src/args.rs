use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use graddiv::network::ActivationKind;

#[derive(Debug, Parser)]
#[command(name = "graddiv", version, about = "Gradient diversity: closed forms, Monte Carlo checks and batch-size sweeps")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// JSON file whose keys mirror the subcommand's flags. Flags given on the
    /// command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print closed-form expectations for a Gaussian linear network as JSON.
    Theory(TheoryArgs),
    /// Compare closed forms with Monte Carlo estimates; writes verify.csv.
    Verify(VerifyArgs),
    /// Average gradient diversity across a fixed-budget depth grid.
    Diversity(DiversityArgs),
    /// Epochs-to-target over a batch-size grid; writes sweep.csv and sweep.json.
    Sweep(SweepArgs),
    /// Width that spends a parameter budget at a given depth.
    SolveWidth(SolveWidthArgs),
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Root seed; falls back to $GRADDIV_SEED, then 0.
    #[arg(long, env = "GRADDIV_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// Widths K_0..K_{L-1}; the output width is 1.
    #[arg(long, value_delimiter = ',', required = true)]
    pub widths: Vec<usize>,
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub widths: Vec<usize>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 200_000)]
    pub trials: u64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, default_value_t = 4.0)]
    pub z_tol: f64,
    #[arg(long, default_value_t = 0.03)]
    pub rel_tol: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiversityArgs {
    /// Synthetic regression data (the only source supported).
    #[arg(long)]
    pub synthetic: bool,
    #[arg(long)]
    pub params: usize,
    /// Hidden layer counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub depths: Vec<usize>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 16)]
    pub din: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub target_loss: f64,
    #[arg(long, default_value_t = graddiv::experiments::DEFAULT_EPOCH_CAP)]
    pub epoch_cap: usize,
    #[arg(long, value_delimiter = ',')]
    pub lr_grid: Option<Vec<f64>>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DatasetKind {
    Mnist,
    Idx,
    Synthetic,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub dataset: DatasetKind,
    #[arg(long)]
    pub idx_images: Option<PathBuf>,
    #[arg(long)]
    pub idx_labels: Option<PathBuf>,
    /// Use only the first N examples.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Synthetic only: example count and input dimension.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub din: usize,
    #[arg(long)]
    pub params: usize,
    /// Hidden layer counts.
    #[arg(long, alias = "depth", value_delimiter = ',', required = true)]
    pub depths: Vec<usize>,
    /// `lo..hix2` (powers of two, inclusive) or a comma list.
    #[arg(long, default_value = "32..4096x2")]
    pub batches: String,
    #[arg(long, conflicts_with = "target_loss")]
    pub target_acc: Option<f64>,
    #[arg(long)]
    pub target_loss: Option<f64>,
    /// Defaults to relu for image data and linear for synthetic data.
    #[arg(long)]
    pub activation: Option<ActivationKind>,
    #[arg(long, value_delimiter = ',')]
    pub lr_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = graddiv::experiments::DEFAULT_EPOCH_CAP)]
    pub epoch_cap: usize,
    #[arg(long, default_value_t = graddiv::experiments::DEFAULT_SLACK)]
    pub slack: f64,
    /// Epoch-shuffled batches instead of sampling with replacement.
    #[arg(long)]
    pub shuffled: bool,
    /// Record average diversity every ten epochs.
    #[arg(long)]
    pub trace_diversity: bool,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveWidthArgs {
    #[arg(long)]
    pub params: usize,
    #[arg(long)]
    pub din: usize,
    #[arg(long)]
    pub dout: usize,
    /// Hidden layer count.
    #[arg(long)]
    pub depth: usize,
}

/// Parses `lo..hix2` or `a,b,c`.
pub fn parse_batch_grid(s: &str) -> Result<Vec<usize>> {
    if let Some((lo, rest)) = s.split_once("..") {
        let (hi, factor) = rest
            .split_once('x')
            .with_context(|| format!("batch grid `{s}`: expected lo..hix2"))?;
        if factor.trim() != "2" {
            bail!("batch grid `{s}`: only the factor 2 is supported");
        }
        let lo: usize = lo.trim().parse().with_context(|| format!("batch grid `{s}`"))?;
        let hi: usize = hi.trim().parse().with_context(|| format!("batch grid `{s}`"))?;
        if !lo.is_power_of_two() || !hi.is_power_of_two() || lo > hi {
            bail!("batch grid `{s}`: bounds must be powers of two with lo <= hi");
        }
        Ok(graddiv::experiments::power_of_two_grid(lo.trailing_zeros(), hi.trailing_zeros())?)
    } else {
        let grid = s
            .split(',')
            .map(|b| b.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("batch grid `{s}`"))?;
        if grid.is_empty() || grid.contains(&0) {
            bail!("batch grid `{s}` must list positive sizes");
        }
        Ok(grid)
    }
}

/// Turns a JSON object into `--key value` tokens. Arrays join with commas;
/// `true` becomes a bare flag and `false`/`null` are dropped.
pub fn config_tokens(json: &serde_json::Value) -> Result<Vec<String>> {
    let obj = json
        .as_object()
        .context("config file must hold a JSON object")?;
    let scalar = |v: &serde_json::Value| -> Result<String> {
        Ok(match v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            other => bail!("unsupported config value {other}"),
        })
    };
    let mut out = Vec::new();
    for (key, value) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            serde_json::Value::Bool(true) => out.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                let joined = items.iter().map(scalar).collect::<Result<Vec<_>>>()?;
                out.push(flag);
                out.push(joined.join(","));
            }
            v => {
                out.push(flag);
                out.push(scalar(v)?);
            }
        }
    }
    Ok(out)
}
