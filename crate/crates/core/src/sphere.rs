//! Unit-sphere constants, random directions and quadrature rules on 𝕊^{n-1}.
//!
//! Index convention: `unit_ball_volume(m)` is the volume of the m-dimensional
//! unit ball and `sphere_area(m)` the (m-1)-dimensional measure of its
//! boundary 𝕊^{m-1}, so `sphere_area(1) == 2` (the two points of 𝕊⁰) and
//! `sphere_area(m) == m * unit_ball_volume(m)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Volume of the m-dimensional unit ball, π^{m/2} / Γ(m/2 + 1), by the
/// recurrence κ_m = 2π κ_{m−2} / m from κ₀ = 1, κ₁ = 2.
pub fn unit_ball_volume(m: usize) -> f64 {
    let mut k = if m % 2 == 0 { 1.0 } else { 2.0 };
    let mut j = 2 + m % 2;
    while j <= m {
        k *= 2.0 * PI / j as f64;
        j += 2;
    }
    k
}

/// Surface measure of 𝕊^{m-1} ⊂ ℝ^m.
pub fn sphere_area(m: usize) -> f64 {
    m as f64 * unit_ball_volume(m)
}

/// Writes a uniformly distributed unit vector into `out`.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    if out.len() == 2 {
        let t = rng.random::<f64>() * 2.0 * PI;
        let (s, c) = t.sin_cos();
        out[0] = c;
        out[1] = s;
        return;
    }
    loop {
        let mut sq = 0.0;
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
            sq += *x * *x;
        }
        if sq > 1e-300 {
            let inv = sq.sqrt().recip();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let (p, pm1) = if m == 1 { (x, 1.0) } else { (p1, p0) };
            dp = m as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if m == 1 {
            dp = 1.0;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped onto [a, b].
pub fn gauss_legendre_on(m: usize, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let (x, w) = gauss_legendre(m);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.into_iter()
        .zip(w)
        .map(move |(x, w)| (mid + half * x, half * w))
}

/// A quadrature value with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Absolute error estimate: fine-vs-coarse difference for deterministic
    /// rules, standard error for Monte Carlo rules.
    pub error: f64,
    pub monte_carlo: bool,
}

impl Quadrature {
    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            self.error
        } else {
            self.error / self.value.abs()
        }
    }

    /// Fails when the relative error exceeds `tol` (deterministic rules) or
    /// `MC_RELATIVE_TOLERANCE` (Monte Carlo rules).
    pub fn checked(self, tol: f64) -> Result<Self> {
        let limit = if self.monte_carlo {
            MC_RELATIVE_TOLERANCE
        } else {
            tol
        };
        if self.relative_error() > limit || !self.value.is_finite() {
            return Err(Error::QuadratureFailure {
                relative_error: self.relative_error(),
            });
        }
        Ok(self)
    }
}

/// Default relative tolerance for deterministic boundary integrals.
pub const QUADRATURE_TOLERANCE: f64 = 1e-4;
/// Relative standard error allowed for Monte Carlo sphere integrals (n ≥ 4).
pub const MC_RELATIVE_TOLERANCE: f64 = 1e-2;
/// Sample count for Monte Carlo sphere integrals.
pub const MC_SPHERE_SAMPLES: usize = 1 << 18;

const CIRCLE_NODES: (usize, usize) = (256, 16_384);
const POLAR_NODES: (usize, usize) = (48, 768);
/// Refinement stops once successive levels agree to this relative accuracy.
const REFINE_TARGET: f64 = 1e-10;
const MC_SEED: u64 = 0x5EED_5A3E;

/// Integrates `f` over 𝕊^{n-1} with surface measure.
///
/// n = 2: periodic trapezoid; n = 3: Gauss–Legendre in the polar angle times
/// trapezoid in azimuth; both double their resolution until two levels agree,
/// reporting the last difference as the error. n ≥ 4: Monte Carlo with a
/// fixed seed.
pub fn integrate_sphere<F>(n: usize, mut f: F) -> Result<Quadrature>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    match n {
        2 => refine(CIRCLE_NODES, |m| circle_rule(m, &mut f)),
        3 => refine(POLAR_NODES, |m| product_rule(m, &mut f)),
        _ => {
            let mut rng = RngStream::new(MC_SEED, n as u64).rng();
            let mut u = vec![0.0; n];
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..MC_SPHERE_SAMPLES / 2 {
                random_direction(&mut rng, &mut u);
                let a = f(&u)?;
                u.iter_mut().for_each(|x| *x = -*x);
                let v = 0.5 * (a + f(&u)?);
                sum += v;
                sq += v * v;
            }
            let m = (MC_SPHERE_SAMPLES / 2) as f64;
            let mean = sum / m;
            let var = ((sq / m - mean * mean) * m / (m - 1.0)).max(0.0);
            let area = sphere_area(n);
            Ok(Quadrature {
                value: area * mean,
                error: area * (var / m).sqrt(),
                monte_carlo: true,
            })
        }
    }
}

fn refine<R>((start, cap): (usize, usize), mut rule: R) -> Result<Quadrature>
where
    R: FnMut(usize) -> Result<f64>,
{
    let mut m = start;
    let mut coarse = rule(m)?;
    let mut last_error = f64::INFINITY;
    loop {
        m *= 2;
        let fine = rule(m)?;
        let error = (fine - coarse).abs();
        // a stalled difference means the integrand's own noise floor
        let stalled = m >= 8 * start && error > 0.5 * last_error;
        if error <= REFINE_TARGET * fine.abs() || stalled || m >= cap {
            return Ok(Quadrature {
                value: fine,
                error,
                monte_carlo: false,
            });
        }
        coarse = fine;
        last_error = error;
    }
}

fn circle_rule<F>(m: usize, f: &mut F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let h = 2.0 * PI / m as f64;
    let mut acc = 0.0;
    for k in 0..m {
        let (s, c) = (k as f64 * h).sin_cos();
        acc += f(&[c, s])?;
    }
    Ok(acc * h)
}

fn product_rule<F>(polar: usize, f: &mut F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let azimuth = 2 * polar;
    let h = 2.0 * PI / azimuth as f64;
    let mut acc = 0.0;
    for (theta, w) in gauss_legendre_on(polar, 0.0, PI) {
        let (st, ct) = theta.sin_cos();
        let mut ring = 0.0;
        for k in 0..azimuth {
            let (sp, cp) = (k as f64 * h).sin_cos();
            ring += f(&[st * cp, st * sp, ct])?;
        }
        acc += w * st * ring * h;
    }
    Ok(acc)
}

/// Integrates `f` over the spherical patch θ ∈ [θ₀, θ₁] (polar angle from the
/// third axis) × φ ∈ [φ₀, φ₁] of 𝕊², Gauss–Legendre in both angles.
pub fn integrate_patch<F>(theta: (f64, f64), phi: (f64, f64), nodes: usize, mut f: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let phis: Vec<(f64, f64)> = gauss_legendre_on(nodes, phi.0, phi.1).collect();
    let mut acc = 0.0;
    for (t, wt) in gauss_legendre_on(nodes, theta.0, theta.1) {
        let (st, ct) = t.sin_cos();
        for &(p, wp) in &phis {
            let (sp, cp) = p.sin_cos();
            acc += wt * wp * st * f(&[st * cp, st * sp, ct])?;
        }
    }
    Ok(acc)
}

/// A deterministic set of `count` well-spread directions: equispaced angles
/// (n = 2), a Fibonacci lattice (n = 3), seeded uniform draws (n ≥ 4).
pub fn grid_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng: ChaCha8Rng = RngStream::new(MC_SEED ^ 0xA5A5, n as u64).rng();
            (0..count)
                .map(|_| {
                    let mut u = vec![0.0; n];
                    random_direction(&mut rng, &mut u);
                    u
                })
                .collect()
        }
    }
}
