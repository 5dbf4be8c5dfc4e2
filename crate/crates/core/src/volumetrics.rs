//! Volumes of K′ Δ P and K ∖ P with Monte Carlo error bars.

use rand::Rng;
use serde::Serialize;

use crate::bodies::ConvexBody;
use crate::error::{Error, Result};
use crate::hull::Polytope;
use crate::linalg::norm;
use crate::sampler::sample_interior;
use crate::sphere::{random_direction, sphere_area};

pub const MIN_BUDGET: usize = 1_000;
pub const DEFAULT_BUDGET: usize = 200_000;
pub const VERTEX_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl McEstimate {
    /// Estimate of `scale · E[X]` from the running sums of X and X².
    fn from_sums(sum: f64, sum_sq: f64, samples: usize, scale: f64) -> Self {
        let m = samples as f64;
        let mean = sum / m;
        let var = if samples > 1 {
            ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            mean: scale * mean,
            stderr: scale.abs() * (var / m).sqrt(),
            samples,
        }
    }

    /// `a + b·self`, with the error propagated linearly.
    pub fn affine(self, a: f64, b: f64) -> Self {
        McEstimate {
            mean: a + b * self.mean,
            stderr: b.abs() * self.stderr,
            samples: self.samples,
        }
    }
}

/// The body `scale · base`.
#[derive(Clone, Copy, Debug)]
pub struct ScaledBody<'a> {
    pub base: &'a ConvexBody,
    pub scale: f64,
}

impl ScaledBody<'_> {
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn radial_at(&self, u: &[f64]) -> f64 {
        self.scale * self.base.radial_at(u)
    }

    pub fn volume(&self) -> f64 {
        self.scale.powi(self.dim() as i32) * self.base.volume()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let r = norm(x);
        r == 0.0 || r <= self.scale * self.base.radial_at(&unit(x, r))
    }
}

fn unit(x: &[f64], r: f64) -> Vec<f64> {
    x.iter().map(|v| v / r).collect()
}

/// (1 − c)K.
pub fn shrink(body: &ConvexBody, c: f64) -> Result<ScaledBody<'_>> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidConfig(format!("shrink factor {c} outside [0, 1)")));
    }
    Ok(ScaledBody {
        base: body,
        scale: 1.0 - c,
    })
}

fn check_budget(budget: usize) -> Result<()> {
    if budget < MIN_BUDGET {
        return Err(Error::InvalidConfig(format!(
            "Monte Carlo budget {budget} below {MIN_BUDGET}"
        )));
    }
    Ok(())
}

/// vol(K) − vol(P) for a polytope inscribed in K.
pub fn missed_volume(body: &ConvexBody, p: &Polytope) -> Result<f64> {
    for (index, v) in p.vertices().iter().enumerate() {
        let r = norm(v);
        let offset = if r == 0.0 {
            f64::INFINITY
        } else {
            r - body.radial_at(&unit(v, r))
        };
        if !(offset.abs() <= VERTEX_TOLERANCE * r.max(1.0)) {
            return Err(Error::VertexOffBoundary { index, offset });
        }
    }
    Ok(body.volume() - p.volume())
}

/// Hit-or-miss estimate of vol(K′ ∩ P) from uniform points of K′.
pub fn intersection_volume<R: Rng + ?Sized>(
    body: &ScaledBody,
    p: &Polytope,
    rng: &mut R,
    budget: usize,
) -> Result<McEstimate> {
    check_budget(budget)?;
    let mut x = vec![0.0; body.dim()];
    let mut hits = 0usize;
    for _ in 0..budget {
        sample_interior(body.base, body.scale, rng, &mut x);
        hits += usize::from(p.contains(&x, 0.0));
    }
    let h = hits as f64;
    Ok(McEstimate::from_sums(h, h, budget, body.volume()))
}

/// Hit-or-miss estimate of vol(K′ ∩ P) from uniform points of P.
pub fn intersection_volume_from_polytope<R: Rng + ?Sized>(
    body: &ScaledBody,
    p: &Polytope,
    rng: &mut R,
    budget: usize,
) -> Result<McEstimate> {
    check_budget(budget)?;
    let mut x = vec![0.0; body.dim()];
    let mut hits = 0usize;
    for _ in 0..budget {
        p.sample_uniform(rng, &mut x);
        hits += usize::from(body.contains(&x));
    }
    let h = hits as f64;
    Ok(McEstimate::from_sums(h, h, budget, p.volume()))
}

/// Estimate of vol(K′ ∩ P) with the radial coordinate of each hit-or-miss
/// sample integrated exactly.
///
/// In polar coordinates vol(K′ ∩ P) = vol(K′) − ∫ (ρ_{K′}ⁿ − ρ_Pⁿ)⁺/n du, so
/// only the direction is random and the variance scales with the size of
/// K′ ∖ P rather than the size of K′. Needs the origin inside P; returns
/// `None` otherwise.
pub fn intersection_volume_radial<R: Rng + ?Sized>(
    body: &ScaledBody,
    p: &Polytope,
    rng: &mut R,
    budget: usize,
) -> Result<Option<McEstimate>> {
    check_budget(budget)?;
    let n = body.dim();
    let ni = n as i32;
    let mut u = vec![0.0; n];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..budget {
        random_direction(rng, &mut u);
        let Some(rp) = p.radial(&u) else {
            return Ok(None);
        };
        let excess = (body.radial_at(&u).powi(ni) - rp.powi(ni)).max(0.0);
        sum += excess;
        sum_sq += excess * excess;
    }
    let outside = McEstimate::from_sums(sum, sum_sq, budget, sphere_area(n) / n as f64);
    Ok(Some(outside.affine(body.volume(), -1.0)))
}

/// vol(K′ Δ P) = vol(K′) + vol(P) − 2 vol(K′ ∩ P).
///
/// The intersection uses the radially integrated estimator when the origin
/// is interior to P and plain hit-or-miss otherwise.
pub fn symmetric_difference<R: Rng + ?Sized>(
    body: &ScaledBody,
    p: &Polytope,
    rng: &mut R,
    budget: usize,
) -> Result<McEstimate> {
    let inter = match intersection_volume_radial(body, p, rng, budget)? {
        Some(est) => est,
        None => intersection_volume(body, p, rng, budget)?,
    };
    Ok(inter.affine(body.volume() + p.volume(), -2.0))
}

/// [`symmetric_difference`] restricted to plain hit-or-miss.
pub fn symmetric_difference_hit_or_miss<R: Rng + ?Sized>(
    body: &ScaledBody,
    p: &Polytope,
    rng: &mut R,
    budget: usize,
) -> Result<McEstimate> {
    let inter = intersection_volume(body, p, rng, budget)?;
    Ok(inter.affine(body.volume() + p.volume(), -2.0))
}
