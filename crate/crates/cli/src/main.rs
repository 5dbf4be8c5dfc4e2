//! `randpoly`: experiment runner for random polytope approximation of smooth
//! convex bodies.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::{error, info, LevelFilter};

use randpoly::harness::{
    compare_densities, fit_rate, functionals_table, read_csv, sweep, write_csv, ExperimentConfig,
    ResultRow,
};
use randpoly::hull::build_hull;
use randpoly::rng::RngStream;
use randpoly::sampler::BoundarySampler;
use randpoly::validation::run_all;

#[derive(Parser)]
#[command(name = "randpoly", version, about = "Random polytope approximation experiments")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sample → hull → shrink → symmetric difference sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; defaults to the config's "output".
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Record wall time per row (makes output run-dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Fit log(mean symdiff) against log N per body and density.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print the closed-form functionals of the configured body as CSV.
    Functionals {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sweep every density of the config and report them side by side.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the auxiliary checks; exits with 2 if any fails.
    Validate {
        /// Smaller sample sizes.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Draw boundary points from the configured density.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the hull of the sample as JSON.
        #[arg(long)]
        dump_hull: Option<PathBuf>,
    },
}

enum Outcome {
    Success,
    ValidationFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli.command) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed) => ExitCode::from(2),
        Err(e) => {
            error!("{e:#}");
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn output_path(out: Option<PathBuf>, cfg: &ExperimentConfig) -> Result<PathBuf> {
    match out.or_else(|| cfg.output.clone()) {
        Some(p) => Ok(p),
        None => bail!("no output path: pass --out or set \"output\" in the config"),
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Sweep {
            config,
            out,
            seed,
            timing,
        } => {
            let cfg = load_config(&config, seed)?;
            let out = output_path(out, &cfg)?;
            let (rows, failure) = match sweep(&cfg, timing) {
                Ok(rows) => (rows, None),
                Err(partial) => (partial.rows, Some(partial.error)),
            };
            write_csv(create(&out)?, cfg.seed, &rows)?;
            info!("wrote {} rows to {}", rows.len(), out.display());
            if let Some(e) = failure {
                bail!("sweep failed after {} rows (flushed to {}): {e}", rows.len(), out.display());
            }
        }
        Command::Fit { input } => {
            let rows = read_csv(File::open(&input).with_context(|| format!("opening {}", input.display()))?)?;
            fit_groups(&rows, io::stdout().lock())?;
        }
        Command::Functionals { config } => {
            let cfg = load_config(&config, None)?;
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            for row in functionals_table(&cfg)? {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Command::Compare { config, out, seed } => {
            let cfg = load_config(&config, seed)?;
            let table = compare_densities(&cfg)?;
            let sink: Box<dyn Write> = match out {
                Some(p) => Box::new(create(&p)?),
                None => Box::new(io::stdout().lock()),
            };
            let mut w = csv::Writer::from_writer(sink);
            for row in table {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Command::Validate { quick, seed, report } => {
            let r = run_all(quick, seed)?;
            let text = serde_json::to_string_pretty(&r)?;
            println!("{text}");
            if let Some(p) = report {
                let mut f = create(&p)?;
                writeln!(f, "{text}")?;
                f.flush()?;
            }
            if !r.passed {
                for c in r.checks.iter().filter(|c| !c.passed) {
                    eprintln!("check failed: {}", c.name);
                }
                return Ok(Outcome::ValidationFailed);
            }
        }
        Command::Sample {
            config,
            count,
            out,
            seed,
            dump_hull,
        } => {
            let cfg = load_config(&config, seed)?;
            let body = cfg.body.build()?;
            let nd = cfg.density.build(body.dim()).normalize(&body)?;
            let sampler = BoundarySampler::new(nd)?;
            let points = sampler.sample_batch(count, RngStream::new(cfg.seed, u64::MAX))?;
            let n = body.dim();
            let mut w = csv::Writer::from_writer(create(&out)?);
            let mut header: Vec<String> = (0..n).map(|k| format!("x{k}")).collect();
            header.extend((0..n).map(|k| format!("normal{k}")));
            header.extend(["curvature".to_string(), "support".to_string()]);
            w.write_record(&header)?;
            for p in &points {
                let mut rec: Vec<String> = p.position.iter().map(f64::to_string).collect();
                rec.extend(p.outer_normal.iter().map(f64::to_string));
                rec.push(p.gauss_curvature.to_string());
                rec.push(p.support_value.to_string());
                w.write_record(&rec)?;
            }
            w.flush()?;
            if let Some(path) = dump_hull {
                let pts: Vec<Vec<f64>> = points.into_iter().map(|p| p.position).collect();
                let hull = build_hull(&pts, n)?;
                let mut f = create(&path)?;
                writeln!(f, "{}", hull.to_json()?)?;
                f.flush()?;
            }
        }
    }
    Ok(Outcome::Success)
}

/// One fitted line per (n, body, density) group, in order of appearance.
fn fit_groups<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut keys: Vec<(usize, String, String)> = Vec::new();
    for r in rows {
        let key = (r.n, r.body.clone(), r.density.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    if keys.is_empty() {
        bail!("no rows to fit");
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "body", "density", "slope", "intercept", "r_squared", "expected_slope"])?;
    for (n, body, density) in keys {
        let group: Vec<ResultRow> = rows
            .iter()
            .filter(|r| r.n == n && r.body == body && r.density == density)
            .cloned()
            .collect();
        let fit = fit_rate(&group).with_context(|| format!("fitting {body} {density}"))?;
        let expected = -2.0 / (n as f64 - 1.0);
        w.write_record([
            n.to_string(),
            body,
            density,
            fit.slope.to_string(),
            fit.intercept.to_string(),
            fit.r_squared.to_string(),
            expected.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
