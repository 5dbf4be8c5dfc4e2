//! Experiment runner: sample → hull → shrink → symmetric difference over a
//! grid of point counts, aggregated over replications.

mod config;
mod fit;

pub use config::{AlphaBetaSpec, BodySpec, DensitySpec, ExperimentConfig, NamedDensity, PAffineSpec};
pub use fit::{fit_power_law, fit_rate, RateFit};

use std::fmt;
use std::io::{BufRead, Read, Write};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::ConvexBody;
use crate::densities::BoundaryDensity;
use crate::error::{Error, Result};
use crate::functionals::{
    p_affine_surface_area, predicted_from_rhs, rhs_integral, shrink_from_prediction, sw_constant,
};
use crate::hull::{build_hull, Polytope};
use crate::rng::RngStream;
use crate::sampler::{BoundarySampler, DEFAULT_SAFETY};
use crate::volumetrics::{missed_volume, shrink, symmetric_difference, McEstimate};

/// How many times a sweep restarts with a doubled envelope before giving up.
const ENVELOPE_RETRIES: usize = 4;

/// A body and density prepared for repeated replications.
#[derive(Clone, Debug)]
pub struct Experiment {
    body: ConvexBody,
    density: BoundaryDensity,
    sampler: BoundarySampler,
    rhs: f64,
    seed: u64,
    mc_budget: usize,
}

/// Outcome of one replication at a given N.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Replication {
    pub points: usize,
    pub rep: usize,
    pub symdiff: McEstimate,
    pub missed: f64,
    pub polytope_volume: f64,
    pub contains_origin: bool,
    /// Shrink factor used; 0 when the asymptotic value is not below 1/2.
    pub c: f64,
    pub shrunk: bool,
    pub redrawn: bool,
}

impl Experiment {
    pub fn new(cfg: &ExperimentConfig, density: &DensitySpec) -> Result<Self> {
        Self::with_safety(cfg, density, DEFAULT_SAFETY)
    }

    pub fn with_safety(cfg: &ExperimentConfig, density: &DensitySpec, safety: f64) -> Result<Self> {
        cfg.validate()?;
        let body = cfg.body.build()?;
        let density = density.build(body.dim());
        let nd = density.normalize(&body)?;
        let rhs = rhs_integral(&nd)?.value;
        let sampler = BoundarySampler::with_safety(nd, safety)?;
        Ok(Experiment {
            body,
            density,
            sampler,
            rhs,
            seed: cfg.seed,
            mc_budget: cfg.mc_budget,
        })
    }

    fn rebuilt(&self) -> Result<Self> {
        Ok(Experiment {
            sampler: self.sampler.rebuilt()?,
            ..self.clone()
        })
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn density(&self) -> &BoundaryDensity {
        &self.density
    }

    pub fn sampler(&self) -> &BoundarySampler {
        &self.sampler
    }

    pub fn rhs_integral(&self) -> f64 {
        self.rhs
    }

    /// The asymptotic shrink factor at N points.
    pub fn shrink_factor(&self, points: usize) -> Result<f64> {
        let pred = predicted_from_rhs(self.body.dim(), self.rhs, points)?;
        shrink_from_prediction(&self.body, pred, points)
    }

    pub fn predicted_missed_volume(&self, points: usize) -> Result<f64> {
        predicted_from_rhs(self.body.dim(), self.rhs, points)
    }

    /// The random stream owned by replication `rep` at N points.
    pub fn stream(&self, points: usize, rep: usize) -> RngStream {
        RngStream::new(self.seed, ((points as u64) << 32) | rep as u64)
    }

    fn draw_hull(&self, points: usize, stream: RngStream) -> Result<Polytope> {
        let mut rng = stream.rng();
        let pts: Vec<Vec<f64>> = self
            .sampler
            .sample_many(points, &mut rng)?
            .into_iter()
            .map(|p| p.position)
            .collect();
        build_hull(&pts, self.body.dim())
    }

    /// Draws N points, builds their hull and measures it against (1 − c)K.
    /// A degenerate draw is replaced once from a sibling stream. Below the
    /// N where the asymptotic c drops under 1/2 the body is not shrunk.
    pub fn run_replication(&self, points: usize, rep: usize) -> Result<Replication> {
        let n = self.body.dim();
        if points < n + 1 {
            return Err(Error::InvalidConfig(format!(
                "N = {points} cannot span a polytope in dimension {n}"
            )));
        }
        let (c, shrunk) = match self.shrink_factor(points) {
            Ok(c) => (c, true),
            Err(Error::NTooSmall { c, .. }) => {
                if rep == 0 {
                    warn!("asymptotic shrink factor {c} at N = {points} is not below 1/2; using c = 0");
                }
                (0.0, false)
            }
            Err(e) => return Err(e),
        };
        let stream = self.stream(points, rep);
        let (hull, redrawn) = match self.draw_hull(points, stream) {
            Ok(h) => (h, false),
            Err(Error::DegenerateInput(msg)) => {
                warn!("degenerate draw at N = {points}, rep {rep}: {msg}; redrawing");
                (self.draw_hull(points, stream.substream(1))?, true)
            }
            Err(e) => return Err(e),
        };
        let mut rng = stream.substream(2).rng();
        let symdiff = symmetric_difference(&shrink(&self.body, c)?, &hull, &mut rng, self.mc_budget)?;
        Ok(Replication {
            points,
            rep,
            symdiff,
            missed: missed_volume(&self.body, &hull)?,
            polytope_volume: hull.volume(),
            contains_origin: hull.contains_origin(),
            c,
            shrunk,
            redrawn,
        })
    }

    /// All replications at N points in rep order.
    pub fn replicate(&self, points: usize, reps: usize) -> Result<Vec<Replication>> {
        (0..reps)
            .into_par_iter()
            .map(|rep| self.run_replication(points, rep))
            .collect()
    }
}

/// One aggregated line of sweep output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub body: String,
    pub density: String,
    #[serde(rename = "N")]
    pub points: usize,
    pub reps: usize,
    pub symdiff_mean: f64,
    pub symdiff_stderr: f64,
    pub missed_mean: f64,
    pub missed_stderr: f64,
    pub c: f64,
    pub origin_in_rate: f64,
    pub seconds: f64,
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

impl ResultRow {
    pub fn aggregate(exp: &Experiment, points: usize, reps: &[Replication], seconds: f64) -> Self {
        let (symdiff_mean, symdiff_stderr) = mean_stderr(reps.iter().map(|r| r.symdiff.mean));
        let (missed_mean, missed_stderr) = mean_stderr(reps.iter().map(|r| r.missed));
        let inside = reps.iter().filter(|r| r.contains_origin).count();
        ResultRow {
            n: exp.body.dim(),
            body: exp.body.label(),
            density: exp.density.label(),
            points,
            reps: reps.len(),
            symdiff_mean,
            symdiff_stderr,
            missed_mean,
            missed_stderr,
            c: reps.first().map_or(f64::NAN, |r| r.c),
            origin_in_rate: inside as f64 / reps.len() as f64,
            seconds,
        }
    }
}

/// A sweep that stopped early, with the rows finished before the failure.
#[derive(Debug)]
pub struct PartialSweep {
    pub rows: Vec<ResultRow>,
    pub error: Error,
}

impl fmt::Display for PartialSweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sweep stopped after {} rows: {}", self.rows.len(), self.error)
    }
}

impl std::error::Error for PartialSweep {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Runs every N of the config for its density. With `timing` off the
/// `seconds` column is 0 so that reruns are byte-identical.
pub fn sweep(cfg: &ExperimentConfig, timing: bool) -> std::result::Result<Vec<ResultRow>, PartialSweep> {
    sweep_density(cfg, &cfg.density, timing)
}

pub fn sweep_density(
    cfg: &ExperimentConfig,
    density: &DensitySpec,
    timing: bool,
) -> std::result::Result<Vec<ResultRow>, PartialSweep> {
    let exp = Experiment::new(cfg, density).map_err(|error| PartialSweep {
        rows: Vec::new(),
        error,
    })?;
    sweep_with(exp, cfg, timing, |exp, points| exp.replicate(points, cfg.reps))
}

/// The sweep loop: rows in N order, restarting from the first N with a
/// doubled envelope whenever a proposal weight exceeds it.
fn sweep_with<F>(
    mut exp: Experiment,
    cfg: &ExperimentConfig,
    timing: bool,
    replicate: F,
) -> std::result::Result<Vec<ResultRow>, PartialSweep>
where
    F: Fn(&Experiment, usize) -> Result<Vec<Replication>>,
{
    let mut attempts = 0;
    'restart: loop {
        let mut rows = Vec::with_capacity(cfg.n_list.len());
        for &points in &cfg.n_list {
            let start = Instant::now();
            match replicate(&exp, points) {
                Ok(reps) => {
                    let secs = if timing { start.elapsed().as_secs_f64() } else { 0.0 };
                    let row = ResultRow::aggregate(&exp, points, &reps, secs);
                    info!(
                        "{} {} N={} symdiff={:.6e}±{:.1e} missed={:.6e}",
                        row.body, row.density, points, row.symdiff_mean, row.symdiff_stderr, row.missed_mean
                    );
                    rows.push(row);
                }
                Err(Error::EnvelopeExceeded { weight, bound }) if attempts < ENVELOPE_RETRIES => {
                    warn!("acceptance weight {weight} above envelope {bound}; restarting sweep");
                    attempts += 1;
                    exp = exp.rebuilt().map_err(|error| PartialSweep {
                        rows: Vec::new(),
                        error,
                    })?;
                    continue 'restart;
                }
                Err(error) => return Err(PartialSweep { rows, error }),
            }
        }
        return Ok(rows);
    }
}

/// Writes `rows` as CSV after a `#` comment line recording the seed.
pub fn write_csv<W: Write>(mut out: W, seed: u64, rows: &[ResultRow]) -> Result<()> {
    writeln!(out, "# seed={seed}")?;
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "n", "body", "density", "N", "reps", "symdiff_mean", "symdiff_stderr", "missed_mean",
            "missed_stderr", "c", "origin_in_rate", "seconds",
        ])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_csv`]; `#` lines are skipped.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// The seed recorded in a CSV header comment, if any.
pub fn read_seed<R: BufRead>(input: R) -> Option<u64> {
    input
        .lines()
        .map_while(|l| l.ok())
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.trim_start_matches('#').trim().strip_prefix("seed=")?.parse().ok())
}

/// Sweep rows of several densities on one body, with their rate integrals.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRow {
    pub density: String,
    #[serde(rename = "N")]
    pub points: usize,
    pub reps: usize,
    pub symdiff_mean: f64,
    pub symdiff_stderr: f64,
    pub missed_mean: f64,
    pub missed_stderr: f64,
    pub rhs_integral: f64,
    pub predicted_missed: f64,
}

pub fn compare_densities(cfg: &ExperimentConfig) -> std::result::Result<Vec<ComparisonRow>, PartialSweep> {
    let mut table = Vec::new();
    for density in cfg.comparison_densities() {
        let partial = |error| PartialSweep {
            rows: Vec::new(),
            error,
        };
        let exp = Experiment::new(cfg, &density).map_err(partial)?;
        let rows = sweep_density(cfg, &density, false)?;
        for row in rows {
            table.push(ComparisonRow {
                density: row.density,
                points: row.points,
                reps: row.reps,
                symdiff_mean: row.symdiff_mean,
                symdiff_stderr: row.symdiff_stderr,
                missed_mean: row.missed_mean,
                missed_stderr: row.missed_stderr,
                rhs_integral: exp.rhs_integral(),
                predicted_missed: exp.predicted_missed_volume(row.points).map_err(partial)?,
            });
        }
    }
    Ok(table)
}

/// One line of the functionals table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalRow {
    pub quantity: String,
    pub parameter: String,
    pub value: f64,
    pub error: f64,
}

pub const P_GRID: [f64; 8] = [-1.0, 0.0, 0.5, 1.0, 2.0, 3.0, 4.0, f64::INFINITY];

/// as_p over [`P_GRID`], rate integrals per density, the limiting constant
/// and c(N) over the config's N values.
pub fn functionals_table(cfg: &ExperimentConfig) -> Result<Vec<FunctionalRow>> {
    let body = cfg.body.build()?;
    let n = body.dim();
    let row = |quantity: &str, parameter: String, value: f64, error: f64| FunctionalRow {
        quantity: quantity.into(),
        parameter,
        value,
        error,
    };
    let mut rows = vec![
        row("volume", String::new(), body.volume(), body.volume_estimate().error),
        row("surface_area", String::new(), body.surface_area(), body.surface_area_estimate().error),
    ];
    for p in P_GRID {
        let q = p_affine_surface_area(&body, p)?;
        rows.push(row("as_p", p.to_string(), q.value, q.error));
    }
    rows.push(row("isoperimetric_ratio", String::new(), crate::functionals::isoperimetric_ratio(&body)?, 0.0));
    rows.push(row("sw_constant", n.to_string(), sw_constant(n)?.value, 0.0));
    let mut densities = vec![DensitySpec::Named(NamedDensity::Uniform), DensitySpec::Named(NamedDensity::Affine)];
    for d in cfg.comparison_densities() {
        if !densities.contains(&d) {
            densities.push(d);
        }
    }
    for spec in &densities {
        let d = spec.build(n);
        let q = rhs_integral(&d.normalize(&body)?)?;
        rows.push(row("rhs_integral", d.label(), q.value, q.error));
    }
    let exp = Experiment::new(cfg, &cfg.density)?;
    for &points in &cfg.n_list {
        rows.push(row("predicted_missed", points.to_string(), exp.predicted_missed_volume(points)?, 0.0));
        match exp.shrink_factor(points) {
            Ok(c) => rows.push(row("c", points.to_string(), c, 0.0)),
            Err(Error::NTooSmall { c, .. }) => {
                warn!("asymptotic shrink factor {c} at N = {points} is not below 1/2");
                rows.push(row("c", points.to_string(), f64::NAN, 0.0));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}
