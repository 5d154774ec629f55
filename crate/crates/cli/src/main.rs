use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use evac_core::engine::Simulation;
use evac_core::harness::{execute, write_csv};
use evac_core::plan::ExperimentPlan;
use evac_core::summary::{read_results, summarize, GROUP_KEYS};
use evac_core::SimConfig;

/// Pedestrian evacuation simulator with shortest-route, random-follow and
/// Bayesian-Nash-equilibrium agents.
#[derive(Parser, Debug)]
#[command(name = "evac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulation and print its result line.
    Run(RunArgs),
    /// Execute an experiment plan and write its results CSV.
    Sweep(SweepArgs),
    /// Summarize a results CSV by group.
    Summarize(SummarizeArgs),
}

/// Model parameters. Unset flags fall back to the config file, then to the
/// built-in defaults.
#[derive(Args, Debug, Default)]
struct ParamArgs {
    /// Moving pattern: SR, RF, BNE, BNE+SR or BNE+RF [default: BNE]
    #[arg(long, value_name = "PATTERN")]
    pattern: Option<String>,
    /// Number of agents [default: 2000]
    #[arg(long, value_name = "N")]
    number_persons: Option<String>,
    /// Percentage of agents using BNE in mixed patterns, 0-100 [default: 100]
    #[arg(long, value_name = "PCT")]
    pct_bne: Option<String>,
    /// Probability (percent) that a nearby agent competes for a patch [default: 16.7]
    #[arg(long, value_name = "PCT")]
    probability_competing: Option<String>,
    /// Exit width in patches [default: 6]
    #[arg(long, value_name = "PATCHES")]
    door_width: Option<String>,
    /// Free walking speed in m/s [default: 2]
    #[arg(long, value_name = "M_PER_S")]
    move_speed: Option<String>,
    /// Distance covered per tick at free speed, in m [default: 0.7]
    #[arg(long, value_name = "M")]
    step_length: Option<String>,
    /// Radius within which random followers look for a leader, in patches [default: 3]
    #[arg(long, value_name = "PATCHES")]
    follow_radius: Option<String>,
    /// Weight of the distance utility in the BNE score [default: 1]
    #[arg(long, value_name = "W")]
    weight_ud: Option<String>,
    /// Random seed [default: 0]
    #[arg(long, value_name = "SEED")]
    seed: Option<String>,
    /// Tick cap after which a run is reported as stalled [default: 50000]
    #[arg(long, value_name = "TICKS")]
    max_ticks: Option<String>,
}

impl ParamArgs {
    fn overrides(&self) -> [(&'static str, Option<&String>); 11] {
        [
            ("moving_pattern", self.pattern.as_ref()),
            ("number_persons", self.number_persons.as_ref()),
            ("pct_bne", self.pct_bne.as_ref()),
            ("probability_competing", self.probability_competing.as_ref()),
            ("door_width", self.door_width.as_ref()),
            ("move_speed", self.move_speed.as_ref()),
            ("step_length", self.step_length.as_ref()),
            ("follow_radius", self.follow_radius.as_ref()),
            ("weight_ud", self.weight_ud.as_ref()),
            ("seed", self.seed.as_ref()),
            ("max_ticks", self.max_ticks.as_ref()),
        ]
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Config file of `key = value` lines
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    /// Write an occupancy snapshot every N ticks (20 when given without a value, 0 = off)
    #[arg(long, value_name = "N", num_args = 0..=1, default_value_t = 0, default_missing_value = "20")]
    snapshot_every: u64,
    /// Directory for snapshot files
    #[arg(long, value_name = "DIR", default_value = "snapshots")]
    snapshot_dir: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Plan file
    plan: PathBuf,
    /// Worker threads [default: available cores]
    #[arg(long, value_name = "N")]
    parallelism: Option<usize>,
    /// Use the plan's reduced desk-scale variant
    #[arg(long)]
    desk_scale: bool,
    /// Results CSV, overriding the plan's output entry
    #[arg(long, short, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Master seed, overriding the plan's master_seed entry
    #[arg(long, value_name = "SEED")]
    master_seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Args, Debug)]
struct SummarizeArgs {
    /// Results CSV written by `sweep`
    results: PathBuf,
    /// Comma-separated grouping columns out of name, pattern, number_persons, pct_bne
    #[arg(
        long,
        value_name = "COLS",
        default_value = "pattern,number_persons,pct_bne"
    )]
    group_by: String,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

/// Reads a `key = value` config file into `config`.
fn apply_config_file(config: &mut SimConfig, path: &Path) -> Result<()> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected `key = value`", path.display(), i + 1);
        };
        config
            .set(key, value)
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
    }
    Ok(())
}

fn resolve_config(args: &RunArgs) -> Result<SimConfig> {
    let mut config = SimConfig::default();
    if let Some(path) = &args.config {
        apply_config_file(&mut config, path)?;
    }
    for (key, value) in args.params.overrides() {
        if let Some(v) = value {
            config
                .set(key, v)
                .with_context(|| format!("--{}", key.replace('_', "-")))?;
        }
    }
    config.validate()?;
    Ok(config)
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let config = resolve_config(&args)?;
    let every = args.snapshot_every;
    if every > 0 {
        fs::create_dir_all(&args.snapshot_dir).with_context(|| {
            format!(
                "cannot create snapshot directory {}",
                args.snapshot_dir.display()
            )
        })?;
    }
    let mut sim = Simulation::initialize(&config)?;
    let mut write_err = None;
    let record = sim.run_with(|s| {
        let tick = s.world().tick;
        if every == 0 || tick % every != 0 || write_err.is_some() {
            return;
        }
        let path = args.snapshot_dir.join(format!("tick_{tick:06}.txt"));
        if let Err(e) = fs::write(&path, s.snapshot()) {
            write_err = Some(anyhow::Error::new(e).context(format!("writing {}", path.display())));
        }
    });
    if let Some(e) = write_err {
        return Err(e);
    }
    println!(
        "pattern={} number_persons={} pct_bne={} seed={} evac_ticks={} evac_seconds={} mean_uec={} stalled={}",
        config.moving_pattern,
        config.number_persons,
        config.pct_bne,
        record.seed,
        record.evac_ticks,
        record.evac_seconds,
        record.mean_uec,
        record.stalled
    );
    if record.stalled {
        eprintln!(
            "warning: run stalled at the {}-tick cap with agents still inside",
            config.max_ticks
        );
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let text = fs::read_to_string(&args.plan)
        .with_context(|| format!("cannot read plan {}", args.plan.display()))?;
    let mut plan = ExperimentPlan::parse(&text, args.desk_scale)
        .with_context(|| format!("invalid plan {}", args.plan.display()))?;
    if let Some(seed) = args.master_seed {
        plan.master_seed = seed;
    }
    let output = args
        .output
        .or_else(|| plan.output_path.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", plan.name)));
    // open before running so a bad path fails fast
    let file = fs::File::create(&output)
        .with_context(|| format!("cannot write results to {}", output.display()))?;
    let workers = args
        .parallelism
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    eprintln!(
        "{}: {} runs on {} worker(s) -> {}",
        plan.name,
        plan.run_count(),
        workers,
        output.display()
    );
    let step = (plan.run_count() / 20).max(1);
    let rows = execute(&plan, workers, |done, total| {
        if done % step == 0 || done == total {
            eprintln!("  {done}/{total}");
        }
    })?;
    write_csv(&rows, BufWriter::new(file))?;
    let stalled = rows.iter().filter(|r| r.record.stalled).count();
    if stalled > 0 {
        eprintln!("warning: {stalled} run(s) stalled");
    }
    Ok(())
}

fn cmd_summarize(args: SummarizeArgs) -> Result<()> {
    let file = fs::File::open(&args.results)
        .with_context(|| format!("cannot open {}", args.results.display()))?;
    let rows = read_results(file).with_context(|| format!("reading {}", args.results.display()))?;
    let keys: Vec<&str> = args
        .group_by
        .split(',')
        .map(str::trim)
        .filter(|k| !k.is_empty())
        .collect();
    for k in &keys {
        if !GROUP_KEYS.contains(k) {
            bail!(
                "cannot group by `{k}`; choose from {}",
                GROUP_KEYS.join(", ")
            );
        }
    }
    let summary = summarize(&rows, &keys)?;
    let out = match args.format {
        Format::Table => summary.to_table(),
        Format::Csv => summary.to_csv(),
    };
    io::stdout().lock().write_all(out.as_bytes())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Summarize(a) => cmd_summarize(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
