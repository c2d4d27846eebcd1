use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{CommandFactory, FromArgMatches, Parser};
use graddiv::experiments::{
    batch_sweep, fixed_budget_diversity, load_idx_subset, make_synthetic, solve_width,
    DiversityScanSpec, ParamBudget, Sampling, SweepMetadata, SweepRecord, SweepSpec, Target,
};
use graddiv::montecarlo::{compare, ComparisonStatus, MCConfig};
use graddiv::network::{ActivationKind, Dataset};
use graddiv::{theory, SeedKey};
use serde::Serialize;

mod args;

use args::{
    config_tokens, parse_batch_grid, Cli, Command, DatasetKind, DiversityArgs, SolveWidthArgs,
    SweepArgs, TheoryArgs, VerifyArgs,
};

fn main() -> ExitCode {
    let cli = match parse(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Some(jobs) = cli.jobs {
        graddiv::exec::set_worker_limit(jobs);
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Parses argv, splicing `--config` values in right after the subcommand so
/// explicit flags override them.
fn parse(argv: Vec<OsString>) -> Result<Cli, clap::Error> {
    // the config may supply required flags, so find it before strict parsing
    let Some(path) = config_path(&argv) else {
        return Cli::try_parse_from(&argv);
    };
    let path = Path::new(&path);
    let config_err = |msg: String| Cli::command().error(clap::error::ErrorKind::Io, msg);
    let text = fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
    let json: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| config_err(format!("config {} is not valid JSON: {e}", path.display())))?;
    let tokens = config_tokens(&json).map_err(|e| config_err(format!("config {}: {e:#}", path.display())))?;
    let names: Vec<String> = Cli::command().get_subcommands().map(|s| s.get_name().to_string()).collect();
    let Some(pos) = argv
        .iter()
        .position(|a| a.to_str().is_some_and(|s| names.iter().any(|n| n == s)))
    else {
        return Cli::try_parse_from(&argv);
    };
    let mut merged = argv[..=pos].to_vec();
    merged.extend(tokens.into_iter().map(OsString::from));
    merged.extend_from_slice(&argv[pos + 1..]);
    let matches = Cli::command().try_get_matches_from(merged)?;
    Cli::from_arg_matches(&matches)
}

/// Value of the last `--config PATH` or `--config=PATH` in argv.
fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut found = None;
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--") => break,
            Some("--config") => found = it.next().cloned(),
            Some(s) if s.starts_with("--config=") => found = Some(OsString::from(&s["--config=".len()..])),
            _ => {}
        }
    }
    found
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Theory(a) => cmd_theory(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Diversity(a) => cmd_diversity(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::SolveWidth(a) => cmd_solve_width(a),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn create_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn cmd_theory(a: TheoryArgs) -> Result<ExitCode> {
    print_json(&theory::mullnn_expectations(&a.widths, a.n)?)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VerifyRecord<'a> {
    quantity: &'a str,
    layer: Option<usize>,
    closed_form: Option<f64>,
    empirical: f64,
    stderr: Option<f64>,
    trials: u64,
    z_score: Option<f64>,
    rel_error: Option<f64>,
    status: ComparisonStatus,
    note: Option<&'a str>,
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode> {
    let cfg = MCConfig::new(a.widths, a.n, a.trials, SeedKey::new(a.seed.seed))?;
    let reports = compare(&cfg, a.z_tol, a.rel_tol)?;
    create_out_dir(&a.out)?;
    let path = a.out.join("verify.csv");
    let mut w = csv_writer(&path)?;
    for r in &reports {
        w.serialize(VerifyRecord {
            quantity: &r.quantity,
            layer: r.layer,
            closed_form: r.closed_form,
            empirical: r.empirical.mean,
            stderr: r.empirical.stderr,
            trials: r.empirical.trials,
            z_score: r.z_score,
            rel_error: r.rel_error,
            status: r.status,
            note: r.note.as_deref(),
        })?;
    }
    w.flush()?;
    let failed = reports.iter().filter(|r| r.status == ComparisonStatus::Fail).count();
    for r in &reports {
        let layer = r.layer.map_or(String::new(), |l| format!("[{l}]"));
        let stat = match (r.status, r.z_score, r.rel_error) {
            (ComparisonStatus::Skipped, ..) => format!("skipped ({})", r.note.as_deref().unwrap_or("")),
            (s, z, rel) => format!(
                "{:?} z={:.2} rel={:.4}",
                s,
                z.unwrap_or(f64::NAN),
                rel.unwrap_or(f64::NAN)
            ),
        };
        println!("{}{layer}: {stat}", r.quantity);
    }
    println!("wrote {}", path.display());
    if failed > 0 {
        eprintln!("{failed} of {} comparisons failed", reports.len());
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_diversity(a: DiversityArgs) -> Result<ExitCode> {
    if !a.synthetic {
        bail!("only --synthetic data is supported for diversity scans");
    }
    let budget = ParamBudget::new(a.params, a.din, 1)?;
    let mut spec = DiversityScanSpec::new(budget, a.depths, a.n, SeedKey::new(a.seed.seed));
    spec.batch = a.batch;
    spec.target = Target::Loss(a.target_loss);
    spec.epoch_cap = a.epoch_cap;
    if let Some(grid) = a.lr_grid {
        spec.lr_grid = grid;
    }
    let rows = fixed_budget_diversity(&spec)?;
    create_out_dir(&a.out)?;
    let path = a.out.join("diversity.csv");
    let mut w = csv_writer(&path)?;
    for r in &rows {
        w.serialize(r)?;
        println!(
            "L={} K={} avg_diversity={}",
            r.hidden_layers,
            r.width,
            r.avg_diversity.map_or("n/a".into(), |d| format!("{d:.6}"))
        );
    }
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn load_dataset(a: &SweepArgs, seed: SeedKey, shape_for_teacher: impl Fn() -> Result<graddiv::network::NetworkShape>) -> Result<(Dataset, &'static str)> {
    match a.dataset {
        DatasetKind::Mnist | DatasetKind::Idx => {
            let images = a.idx_images.as_deref().context("--idx-images is required")?;
            let labels = a.idx_labels.as_deref().context("--idx-labels is required")?;
            let name = if a.dataset == DatasetKind::Mnist { "mnist" } else { "idx" };
            Ok((load_idx_subset(images, labels, a.limit)?, name))
        }
        DatasetKind::Synthetic => {
            let n = a.n.context("--n is required for synthetic data")?;
            let (d, _) = make_synthetic(&shape_for_teacher()?, n, seed.named("data"))?;
            Ok((d, "synthetic"))
        }
    }
}

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode> {
    let seed = SeedKey::new(a.seed.seed);
    let target = match (a.target_acc, a.target_loss, a.dataset) {
        (Some(acc), None, _) => Target::Accuracy(acc),
        (None, Some(loss), _) => Target::Loss(loss),
        (None, None, DatasetKind::Synthetic) => Target::Loss(1e-12),
        (None, None, _) => Target::Accuracy(0.96),
        (Some(_), Some(_), _) => unreachable!("clap rejects both targets"),
    };
    let activation = a.activation.unwrap_or(match a.dataset {
        DatasetKind::Synthetic => ActivationKind::Linear,
        _ => ActivationKind::Relu,
    });
    let deepest = *a.depths.iter().max().context("--depths is empty")?;
    let synthetic_budget = || ParamBudget::new(a.params, a.din, 1);
    let (data, name) = load_dataset(&a, seed, || {
        Ok(synthetic_budget()?.shape(deepest, ActivationKind::Linear)?)
    })?;
    let budget = ParamBudget::new(a.params, data.dim(), data.target_dim())?;

    let mut spec = SweepSpec::new(target, seed);
    spec.batches = parse_batch_grid(&a.batches)?;
    if let Some(grid) = &a.lr_grid {
        spec.lr_grid = grid.clone();
    }
    spec.epoch_cap = a.epoch_cap;
    spec.slack = a.slack;
    spec.trace_diversity = a.trace_diversity;
    if a.shuffled {
        spec.sampling = Sampling::Shuffled;
    }

    create_out_dir(&a.out)?;
    let csv_path = a.out.join("sweep.csv");
    let mut w = csv_writer(&csv_path)?;
    let mut meta = SweepMetadata::new(name, data.len(), &spec, a.seed.seed);
    meta.budget = Some(budget);
    meta.depths = a.depths.clone();
    for &hidden in &a.depths {
        let shape = budget.shape(hidden, activation)?;
        let result = batch_sweep(&shape, &data, &spec)?;
        for row in &result.rows {
            if let Some(err) = &row.error {
                eprintln!("L={hidden} B={}: {err}", row.batch);
            }
            w.serialize(SweepRecord::from_row(name, activation, a.seed.seed, row))?;
            println!(
                "L={hidden} K={} B={} epochs={}",
                row.width,
                row.batch,
                row.epochs.epochs().map_or("did-not-converge".into(), |e| e.to_string())
            );
        }
        meta.threshold_batches.push(result.threshold_batch);
    }
    w.flush()?;
    let meta_path = a.out.join("sweep.json");
    let file = fs::File::create(&meta_path).with_context(|| format!("cannot create {}", meta_path.display()))?;
    serde_json::to_writer_pretty(&file, &meta)?;
    writeln!(&file)?;
    println!("wrote {} and {}", csv_path.display(), meta_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve_width(a: SolveWidthArgs) -> Result<ExitCode> {
    let budget = ParamBudget::new(a.params, a.din, a.dout)?;
    println!("{}", solve_width(budget, a.depth)?);
    Ok(ExitCode::SUCCESS)
}
