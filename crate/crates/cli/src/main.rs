use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use kgworlds_core::dataset_io::{
    aggregate_stats, compute_stats, difficulty_bucket, read_suite_filtered, write_suite,
};
use kgworlds_core::{generate_suite, solve_suite, summarize, validate_suite, Error, SuiteConfig};

#[derive(Parser)]
#[command(
    name = "kgworlds",
    version,
    about = "Generate and check logic-grounded graph reasoning suites"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a suite into an empty output directory.
    Generate {
        /// JSON config; omitted fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Build only this world.
        #[arg(long)]
        world_id: Option<usize>,
    },
    /// Check every instance with the symbolic resolver and print a JSON report.
    Validate(SuiteArgs),
    /// Score the symbolic baseline on every world.
    Solve {
        #[command(flatten)]
        suite: SuiteArgs,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Print per-world statistics with an aggregate row.
    Stats {
        #[command(flatten)]
        suite: SuiteArgs,
        /// JSON object of accuracies keyed by world id ("9" or "rule_9");
        /// adds a difficulty column.
        #[arg(long)]
        accuracy: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct SuiteArgs {
    /// Suite directory.
    suite: PathBuf,
    #[arg(long)]
    world_id: Option<usize>,
}

/// Failures that map to exit code 1; everything else exits 2.
#[derive(Debug)]
struct Failed;

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("check failed")
    }
}

impl std::error::Error for Failed {}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if e.downcast_ref::<Failed>().is_none() {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Failed>().is_some() {
        return 1;
    }
    match e.downcast_ref::<Error>() {
        Some(
            Error::InvalidConfiguration(_)
            | Error::Io { .. }
            | Error::Parse { .. }
            | Error::InvalidInput(_),
        ) => 2,
        Some(_) => 1,
        None => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::InvalidConfiguration("--workers must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    match cli.command {
        Command::Generate {
            config,
            seed,
            out,
            world_id,
        } => cmd_generate(config.as_deref(), seed, &out, world_id),
        Command::Validate(args) => cmd_validate(&args),
        Command::Solve { suite, json } => cmd_solve(&suite, json),
        Command::Stats {
            suite,
            accuracy,
            json,
        } => cmd_stats(&suite, accuracy.as_deref(), json),
    }
}

fn cmd_generate(
    config: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
    world_id: Option<usize>,
) -> anyhow::Result<()> {
    let mut cfg = match config {
        Some(path) => SuiteConfig::load(path)?,
        None => SuiteConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let suite = generate_suite(&cfg, world_id)?;
    write_suite(out, &suite)?;
    let s = summarize(&suite);
    println!("{:<10} {:>8}", "worlds", s.worlds);
    println!("{:<10} {:>8}", "rules", s.rules);
    println!("{:<10} {:>8}", "instances", s.instances);
    println!("{:<10} {:>8.6}", "ambiguity", s.ambiguity_rate);
    Ok(())
}

fn cmd_validate(args: &SuiteArgs) -> anyhow::Result<()> {
    let suite = read_suite_filtered(&args.suite, args.world_id)?;
    let report = validate_suite(&suite);
    println!("{}", serde_json::to_string_pretty(&report)?);
    if report.passed() {
        Ok(())
    } else {
        for w in report
            .worlds
            .iter()
            .filter(|w| w.counts.valid < w.counts.instances || w.stats_mismatch)
        {
            eprintln!(
                "world {}: {} of {} instances invalid{}",
                w.world_id,
                w.counts.instances - w.counts.valid,
                w.counts.instances,
                if w.stats_mismatch {
                    ", stats.json out of date"
                } else {
                    ""
                }
            );
        }
        Err(Failed.into())
    }
}

fn fmt_acc(a: Option<f64>) -> String {
    a.map_or_else(|| "-".to_string(), |a| format!("{a:.6}"))
}

fn cmd_solve(args: &SuiteArgs, json: bool) -> anyhow::Result<()> {
    let suite = read_suite_filtered(&args.suite, args.world_id)?;
    let report = solve_suite(&suite);
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    println!("{:<8} {:>9} {:>9}", "world", "instances", "accuracy");
    for w in &report.worlds {
        println!(
            "{:<8} {:>9} {:>9}",
            w.world_id,
            w.instances,
            fmt_acc(w.accuracy)
        );
    }
    let total: usize = report.worlds.iter().map(|w| w.instances).sum();
    println!("{:<8} {:>9} {:>9}", "AGG", total, fmt_acc(report.aggregate));
    Ok(())
}

fn load_accuracies(path: &Path) -> anyhow::Result<BTreeMap<usize, f64>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: BTreeMap<String, f64> = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let mut out = BTreeMap::new();
    for (key, acc) in raw {
        let id = key.strip_prefix("rule_").unwrap_or(&key);
        let Ok(id) = id.parse::<usize>() else {
            bail!(Error::InvalidInput(format!(
                "{}: bad world key {key:?}",
                path.display()
            )));
        };
        out.insert(id, acc);
    }
    Ok(out)
}

#[derive(serde::Serialize)]
struct StatsRow {
    #[serde(flatten)]
    stats: kgworlds_core::WorldStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    difficulty: Option<kgworlds_core::Difficulty>,
}

fn cmd_stats(args: &SuiteArgs, accuracy: Option<&Path>, json: bool) -> anyhow::Result<()> {
    let suite = read_suite_filtered(&args.suite, args.world_id)?;
    let accuracies = accuracy.map(load_accuracies).transpose()?;
    let mut rows = Vec::with_capacity(suite.worlds.len());
    for w in &suite.worlds {
        let stats = compute_stats(&w.dataset, w.split)?;
        let difficulty = match accuracies.as_ref().and_then(|a| a.get(&w.spec.world_id)) {
            Some(&acc) => Some(difficulty_bucket(acc)?),
            None => None,
        };
        rows.push(StatsRow { stats, difficulty });
    }
    let plain: Vec<_> = rows.iter().map(|r| r.stats.clone()).collect();
    let agg = aggregate_stats(&plain, suite.worlds.iter().map(|w| &w.dataset))?;

    if json {
        let doc = serde_json::json!({ "worlds": rows, "aggregate": agg });
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(());
    }
    let with_d = accuracies.is_some();
    print!(
        "{:<10} {:<6} {:>4} {:>8} {:>6} {:>7} {:>7}",
        "world", "split", "NC", "ND", "ARL", "AN", "AE"
    );
    println!(
        "{}",
        if with_d {
            format!(" {:>7}", "D")
        } else {
            String::new()
        }
    );
    for r in &rows {
        let s = &r.stats;
        print!(
            "{:<10} {:<6} {:>4} {:>8} {:>6.2} {:>7.2} {:>7.2}",
            format!("rule_{}", s.world_id),
            s.split,
            s.nc,
            s.nd,
            s.arl,
            s.an,
            s.ae
        );
        let d = r
            .difficulty
            .map_or_else(|| "-".to_string(), |d| d.to_string());
        println!(
            "{}",
            if with_d {
                format!(" {d:>7}")
            } else {
                String::new()
            }
        );
    }
    println!(
        "{:<10} {:<6} {:>4.2} {:>8.2} {:>6.2} {:>7.2} {:>7.2}",
        "AGG", "", agg.nc, agg.nd, agg.arl, agg.an, agg.ae
    );
    println!("pooled distinct descriptors: {}", agg.nd_pooled);
    Ok(())
}
