//! Independent checks of the auxiliary results the construction relies on:
//! Miles' spherical integral, the origin-containment bound and the leading
//! order of cap masses.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;
use statrs::function::factorial::factorial;

use crate::bodies::{ConvexBody, Direction};
use crate::densities::{BoundaryDensity, NormalizedDensity};
use crate::error::{Error, Result};
use crate::hull::build_hull;
use crate::linalg::det_in_place;
use crate::rng::RngStream;
use crate::sampler::{cap_mass, BoundarySampler};
use crate::sphere::{
    gauss_legendre_on, integrate_patch, integrate_sphere, random_direction, sphere_area,
    unit_ball_volume,
};
use crate::volumetrics::McEstimate;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MilesReport {
    pub n: usize,
    pub lhs: McEstimate,
    pub rhs: f64,
}

impl MilesReport {
    pub fn within(&self, sigmas: f64) -> bool {
        (self.lhs.mean - self.rhs).abs() <= sigmas * self.lhs.stderr + 1e-12 * self.rhs
    }
}

/// n ω_{n−1}ⁿ / ((n−1)! (n−1)^{n−1}).
pub fn miles_closed_form(n: usize) -> f64 {
    let m = n as f64 - 1.0;
    n as f64 * sphere_area(n - 1).powi(n as i32) / (factorial(n as u64 - 1) * m.powf(m))
}

/// ∫ vol_{n−1}([x₁, …, xₙ])² over n points of 𝕊^{n−2} ⊂ ℝ^{n−1}, exact for
/// n = 2 (enumeration of 𝕊⁰) and Monte Carlo otherwise.
pub fn miles_check<R: Rng + ?Sized>(n: usize, samples: usize, rng: &mut R) -> Result<MilesReport> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("Miles check needs n ≥ 2, got {n}")));
    }
    let rhs = miles_closed_form(n);
    if n == 2 {
        let mut sum = 0.0;
        for a in [-1.0f64, 1.0] {
            for b in [-1.0f64, 1.0] {
                sum += (a - b).powi(2);
            }
        }
        let lhs = McEstimate {
            mean: sum,
            stderr: 0.0,
            samples: 4,
        };
        return Ok(MilesReport { n, lhs, rhs });
    }
    if samples < 10_000 {
        return Err(Error::InvalidConfig(format!(
            "Miles check needs at least 10⁴ samples, got {samples}"
        )));
    }
    let d = n - 1;
    let scale = sphere_area(d).powi(n as i32);
    let norm = factorial(d as u64).powi(2);
    let mut pts = vec![vec![0.0; d]; n];
    let mut m = vec![0.0; d * d];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        for p in pts.iter_mut() {
            random_direction(rng, p);
        }
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = pts[i + 1][j] - pts[0][j];
            }
        }
        let v2 = det_in_place(&mut m, d).powi(2) / norm;
        sum += v2;
        sum_sq += v2 * v2;
    }
    let k = samples as f64;
    let mean = sum / k;
    let var = ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0);
    let lhs = McEstimate {
        mean: scale * mean,
        stderr: scale * (var / k).sqrt(),
        samples,
    };
    Ok(MilesReport { n, lhs, rhs })
}

const ORTHANT_NODES: usize = 64;

/// ℙ_f-masses of ∂K ∩ σ for the 2ⁿ coordinate orthants σ, indexed by sign
/// pattern (bit k set ⇔ x_k < 0).
pub fn orthant_masses(nd: &NormalizedDensity) -> Result<Vec<f64>> {
    let body = &nd.body;
    let n = body.dim();
    let mass = |u: &[f64]| -> Result<f64> {
        let p = body.surface_point_at(u)?;
        Ok(nd.evaluate(&p) * p.radial_jacobian())
    };
    match n {
        2 => (0..4)
            .map(|k| {
                let quarter = [0.0, 1.0, 3.0, 2.0][k] * PI / 2.0;
                gauss_legendre_on(ORTHANT_NODES, quarter, quarter + PI / 2.0)
                    .map(|(t, w)| Ok(w * mass(&[t.cos(), t.sin()])?))
                    .sum()
            })
            .collect(),
        3 => (0..8)
            .map(|k| {
                let phi0 = [0.0, 1.0, 3.0, 2.0][k & 3] * PI / 2.0;
                let theta = if k & 4 == 0 { (0.0, PI / 2.0) } else { (PI / 2.0, PI) };
                integrate_patch(theta, (phi0, phi0 + PI / 2.0), ORTHANT_NODES, mass)
            })
            .collect(),
        _ => (0..1usize << n)
            .map(|k| {
                let q = integrate_sphere(n, |u| {
                    let cell = u
                        .iter()
                        .enumerate()
                        .fold(0, |acc, (i, &x)| acc | (usize::from(x < 0.0) << i));
                    if cell == k {
                        mass(u)
                    } else {
                        Ok(0.0)
                    }
                })?;
                Ok(q.value)
            })
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OriginMissReport {
    pub points: usize,
    pub empirical: McEstimate,
    pub min_orthant_mass: f64,
    pub bound: f64,
}

impl OriginMissReport {
    pub fn bound_holds(&self, sigmas: f64) -> bool {
        self.empirical.mean <= self.bound + sigmas * self.empirical.stderr
    }
}

/// Frequency of 0 ∉ [x₁, …, x_N] over `reps` draws, with the bound
/// 2ⁿ(1 − min_σ ℙ_f(∂K ∩ σ))^N.
pub fn origin_miss_probability(
    sampler: &BoundarySampler,
    points: usize,
    reps: usize,
    stream: RngStream,
) -> Result<OriginMissReport> {
    if reps < 1_000 {
        return Err(Error::InvalidConfig(format!(
            "origin check needs at least 10³ repetitions, got {reps}"
        )));
    }
    let n = sampler.body().dim();
    if points < n + 1 {
        return Err(Error::InvalidConfig(format!(
            "{points} points cannot span a polytope in dimension {n}"
        )));
    }
    let masses = orthant_masses(sampler.density())?;
    let m = masses.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = 2f64.powi(n as i32) * (1.0 - m).powi(points as i32);
    let mut misses = 0usize;
    for rep in 0..reps {
        let mut rng = RngStream::new(stream.seed, stream.stream_id + rep as u64).rng();
        let pts: Vec<Vec<f64>> = sampler
            .sample_many(points, &mut rng)?
            .into_iter()
            .map(|p| p.position)
            .collect();
        misses += usize::from(!build_hull(&pts, n)?.contains_origin());
    }
    let k = reps as f64;
    let p = misses as f64 / k;
    let empirical = McEstimate {
        mean: p,
        stderr: (p * (1.0 - p) / (k - 1.0)).sqrt(),
        samples: reps,
    };
    Ok(OriginMissReport {
        points,
        empirical,
        min_orthant_mass: m,
        bound,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CapRatio {
    pub z: f64,
    pub mass: f64,
    pub predicted: f64,
    pub ratio: f64,
}

/// Cap masses s(z) = ℙ_f{⟨x, u⟩ ≥ h_K(u) − z} against the leading term
/// 2^{(n−1)/2} f κ^{−1/2} κ_{n−1} z^{(n−1)/2} at the point with normal u.
///
/// The ratio tends to 1 as z → 0; larger z is reported without judgement.
pub fn cap_asymptotics(nd: &NormalizedDensity, u: &Direction, z_grid: &[f64]) -> Result<Vec<CapRatio>> {
    let body = &nd.body;
    let n = body.dim();
    let top = body.point_with_normal(u)?;
    let h = top.support_value;
    let e = (n as f64 - 1.0) / 2.0;
    let lead = 2f64.powf(e) * nd.evaluate(&top) * top.gauss_curvature.powf(-0.5) * unit_ball_volume(n - 1);
    z_grid
        .iter()
        .map(|&z| {
            if !(z > 0.0 && z <= h) {
                return Err(Error::InvalidConfig(format!("cap depth {z} outside (0, {h}]")));
            }
            let mass = cap_mass(nd, u, h - z)?.value;
            let predicted = lead * z.powf(e);
            Ok(CapRatio {
                z,
                mass,
                predicted,
                ratio: mass / predicted,
            })
        })
        .collect()
}

/// One named check of a validation run.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub quick: bool,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

fn check<T: Serialize>(name: impl Into<String>, passed: bool, detail: &T) -> Result<CheckResult> {
    Ok(CheckResult {
        name: name.into(),
        passed,
        detail: serde_json::to_value(detail)?,
    })
}

/// Runs the Miles, origin-containment and cap checks; `quick` shrinks the
/// sample sizes.
pub fn run_all(quick: bool, seed: u64) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    let base = RngStream::new(seed, 0);
    let miles_samples = if quick { 100_000 } else { 1_000_000 };

    let exact = miles_check(2, 0, &mut base.rng())?;
    checks.push(check("miles_n2_exact", exact.lhs.mean == 8.0 && exact.rhs == 8.0, &exact)?);
    for n in [3usize, 4] {
        let r = miles_check(n, miles_samples, &mut base.substream(n as u32).rng())?;
        checks.push(check(format!("miles_n{n}"), r.within(3.0), &r)?);
    }

    let reps = if quick { 5_000 } else { 100_000 };
    let disk = ConvexBody::ball(2, 1.0)?;
    let bodies = vec![
        (disk.clone(), BoundaryDensity::Uniform),
        (ConvexBody::ellipsoid(vec![2.0, 1.0])?, BoundaryDensity::Uniform),
        (ConvexBody::ellipsoid(vec![2.0, 1.0])?, BoundaryDensity::AffineSurfaceArea),
        (ConvexBody::ball(3, 1.0)?, BoundaryDensity::Uniform),
    ];
    for (i, (body, density)) in bodies.into_iter().enumerate() {
        let sampler = BoundarySampler::new(density.normalize(&body)?)?;
        let points = if body.dim() == 2 { 10 } else { 12 };
        let stream = RngStream::new(seed, (1 + i as u64) << 40);
        let r = origin_miss_probability(&sampler, points, reps.min(20_000), stream)?;
        let name = format!("origin_bound_{}_{}", body.label(), density.label());
        checks.push(check(name, r.bound_holds(3.0), &r)?);
    }
    let sampler = BoundarySampler::new(BoundaryDensity::Uniform.normalize(&disk)?)?;
    let r = origin_miss_probability(&sampler, 10, reps, RngStream::new(seed, 7 << 40))?;
    let exact = 10.0 / 512.0;
    let ok = (r.empirical.mean - exact).abs() <= 3.0 * r.empirical.stderr && r.bound_holds(0.0);
    checks.push(check("origin_miss_disk_exact", ok, &r)?);

    let cap_cases: Vec<(ConvexBody, f64, &[f64])> = vec![
        (disk.clone(), 1e-2, &[1e-4]),
        (ConvexBody::ball(3, 1.0)?, 1e-9, &[1e-4, 1e-3, 1e-2]),
        (ConvexBody::ellipsoid(vec![2.0, 1.0])?, 5e-2, &[1e-4, 1e-3]),
        (ConvexBody::ellipsoid(vec![2.0, 1.0, 1.0])?, 5e-2, &[1e-4, 1e-3]),
    ];
    for (body, tol, zs) in cap_cases {
        let nd = BoundaryDensity::Uniform.normalize(&body)?;
        for axis in 0..body.dim() {
            let rows = cap_asymptotics(&nd, &Direction::axis(body.dim(), axis), zs)?;
            let ok = rows.iter().all(|r| (r.ratio - 1.0).abs() <= tol);
            checks.push(check(format!("cap_{}_axis{axis}", body.label()), ok, &rows)?);
        }
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        quick,
        seed,
        passed,
        checks,
    })
}
