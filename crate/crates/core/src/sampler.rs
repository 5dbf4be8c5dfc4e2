//! Rejection sampling of ℙ_f on ∂K, uniform sampling inside star bodies, and
//! ℙ_f-masses of caps.
//!
//! Proposals are uniform directions u; x(u) = ρ(u)u is accepted with
//! probability w(u)/M where w(u) = f(x(u))·ρ(u)ⁿ/⟨x(u), N(x(u))⟩ is the
//! density of ℙ_f pulled back to the sphere.

use std::f64::consts::PI;

use log::warn;
use rand::Rng;

use crate::bodies::{BodyKind, ConvexBody, Direction, SurfacePoint};
use crate::densities::NormalizedDensity;
use crate::error::{Error, Result};
use crate::linalg::{complement_basis, dot, normalize};
use crate::rng::RngStream;
use crate::sphere::{
    gauss_legendre_on, grid_directions, integrate_sphere, random_direction, Quadrature,
};

pub const ENVELOPE_GRID: usize = 1 << 12;
pub const DEFAULT_SAFETY: f64 = 1.5;

/// Upper bound M = grid_max × safety on the acceptance weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeBound {
    pub bound: f64,
    pub grid_max: f64,
    pub safety: f64,
}

#[derive(Clone, Debug)]
pub struct BoundarySampler {
    density: NormalizedDensity,
    envelope: EnvelopeBound,
}

impl BoundarySampler {
    pub fn new(density: NormalizedDensity) -> Result<Self> {
        Self::with_safety(density, DEFAULT_SAFETY)
    }

    pub fn with_safety(density: NormalizedDensity, safety: f64) -> Result<Self> {
        if !(safety >= DEFAULT_SAFETY) {
            return Err(Error::InvalidConfig(format!(
                "envelope safety {safety} below {DEFAULT_SAFETY}"
            )));
        }
        let n = density.body.dim();
        let mut grid_max: f64 = 0.0;
        for u in grid_directions(n, ENVELOPE_GRID) {
            let (_, w) = weight(&density, &u)?;
            grid_max = grid_max.max(w);
        }
        Ok(BoundarySampler {
            density,
            envelope: EnvelopeBound {
                bound: grid_max * safety,
                grid_max,
                safety,
            },
        })
    }

    /// The same density with the envelope safety doubled.
    pub fn rebuilt(&self) -> Result<Self> {
        let safety = self.envelope.safety * 2.0;
        warn!(
            "rebuilding envelope for {} with safety {safety}",
            self.density.label()
        );
        Self::with_safety(self.density.clone(), safety)
    }

    pub fn envelope(&self) -> EnvelopeBound {
        self.envelope
    }

    pub fn density(&self) -> &NormalizedDensity {
        &self.density
    }

    pub fn body(&self) -> &ConvexBody {
        &self.density.body
    }

    /// One ℙ_f-distributed boundary point.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SurfacePoint> {
        let n = self.body().dim();
        let mut u = vec![0.0; n];
        loop {
            random_direction(rng, &mut u);
            let (p, w) = weight(&self.density, &u)?;
            if w > self.envelope.bound {
                return Err(Error::EnvelopeExceeded {
                    weight: w,
                    bound: self.envelope.bound,
                });
            }
            if rng.random::<f64>() * self.envelope.bound < w {
                return Ok(p);
            }
        }
    }

    /// `count` independent points from the start of `stream`.
    pub fn sample_batch(&self, count: usize, stream: RngStream) -> Result<Vec<SurfacePoint>> {
        let mut rng = stream.rng();
        self.sample_many(count, &mut rng)
    }

    pub fn sample_many<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<SurfacePoint>> {
        (0..count).map(|_| self.sample(rng)).collect()
    }
}

fn weight(density: &NormalizedDensity, u: &[f64]) -> Result<(SurfacePoint, f64)> {
    let p = density.body.surface_point_at(u)?;
    let w = density.evaluate(&p) * p.radial_jacobian();
    Ok((p, w))
}

/// A uniform point in `body` scaled by `scale`.
///
/// The direction u has density ∝ ρ(u)ⁿ (by rejection against the radial
/// bound) and the radius is scale·ρ(u)·U^{1/n}.
pub fn sample_interior<R: Rng + ?Sized>(body: &ConvexBody, scale: f64, rng: &mut R, out: &mut [f64]) {
    let n = body.dim();
    let ni = n as i32;
    let bound = body.radial_bound();
    let rho = loop {
        random_direction(rng, out);
        let rho = body.radial_at(out);
        if matches!(body.kind(), BodyKind::Ball { .. })
            || rng.random::<f64>() < (rho / bound).powi(ni)
        {
            break rho;
        }
    };
    let r = scale * rho * rng.random::<f64>().powf(1.0 / n as f64);
    out.iter_mut().for_each(|x| *x *= r);
}

const CAP_ANGULAR_NODES: usize = 64;
const CAP_AZIMUTH_NODES: usize = 128;

/// ℙ_f-mass of the cap {x ∈ ∂K : ⟨x, u⟩ ≥ t}, for 0 ≤ t ≤ h_K(u).
///
/// In n = 2, 3 the cap is integrated in geodesic polar coordinates about the
/// direction of x(u); along each geodesic from that pole the cap is an
/// interval whose end is found by bisection. n ≥ 4 uses Monte Carlo.
pub fn cap_mass(density: &NormalizedDensity, u: &Direction, t: f64) -> Result<Quadrature> {
    let body = &density.body;
    let n = body.dim();
    let h = body.support(u)?;
    if !(t >= 0.0) || t > h * (1.0 + 1e-12) {
        return Err(Error::InvalidConfig(format!(
            "cap offset {t} outside [0, h_K(u) = {h}]"
        )));
    }
    let empty = Quadrature {
        value: 0.0,
        error: 0.0,
        monte_carlo: false,
    };
    if t >= h {
        return Ok(empty);
    }
    let in_cap = |v: &[f64]| body.radial_at(v) * dot(v, u) - t;
    let mass_density = |v: &[f64]| -> Result<f64> {
        let p = body.surface_point_at(v)?;
        Ok(density.evaluate(&p) * p.radial_jacobian())
    };
    if n >= 4 {
        return integrate_sphere(n, |v| {
            if in_cap(v) >= 0.0 {
                mass_density(v)
            } else {
                Ok(0.0)
            }
        });
    }

    let mut pole = body.point_with_normal(u)?.position;
    normalize(&mut pole);
    let basis = complement_basis(&pole);
    let geodesic = |e: &[f64], psi: f64| -> Vec<f64> {
        let (s, c) = psi.sin_cos();
        pole.iter().zip(e).map(|(a, b)| c * a + s * b).collect()
    };
    let extent = |e: &[f64]| -> f64 {
        let (mut lo, mut hi) = (0.0, PI);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if in_cap(&geodesic(e, mid)) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        0.5 * (lo + hi)
    };

    let line = |e: &[f64], psi_max: f64, nodes: usize, sine: bool| -> Result<f64> {
        let mut acc = 0.0;
        for (psi, w) in gauss_legendre_on(nodes, 0.0, psi_max) {
            let jac = if sine { psi.sin() } else { 1.0 };
            acc += w * jac * mass_density(&geodesic(e, psi))?;
        }
        Ok(acc)
    };

    let (fine, coarse) = if n == 2 {
        let e = &basis[0];
        let back: Vec<f64> = e.iter().map(|x| -x).collect();
        let (right, left) = (extent(e), extent(&back));
        let fine = line(e, right, CAP_ANGULAR_NODES, false)? + line(&back, left, CAP_ANGULAR_NODES, false)?;
        let coarse = line(e, right, CAP_ANGULAR_NODES / 2, false)?
            + line(&back, left, CAP_ANGULAR_NODES / 2, false)?;
        (fine, coarse)
    } else {
        let ring = |count: usize, nodes: usize| -> Result<f64> {
            let step = 2.0 * PI / count as f64;
            let mut acc = 0.0;
            for k in 0..count {
                let (s, c) = (k as f64 * step).sin_cos();
                let e: Vec<f64> = basis[0].iter().zip(&basis[1]).map(|(a, b)| c * a + s * b).collect();
                acc += line(&e, extent(&e), nodes, true)?;
            }
            Ok(acc * step)
        };
        (
            ring(CAP_AZIMUTH_NODES, CAP_ANGULAR_NODES)?,
            ring(CAP_AZIMUTH_NODES / 2, CAP_ANGULAR_NODES / 2)?,
        )
    };
    Ok(Quadrature {
        value: fine,
        error: (fine - coarse).abs(),
        monte_carlo: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::Profile;
    use crate::densities::BoundaryDensity;
    use crate::linalg::norm;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn three_sigma_fraction(hits: usize, total: usize, p: f64) -> bool {
        let sigma = (p * (1.0 - p) / total as f64).sqrt();
        ((hits as f64 / total as f64) - p).abs() <= 3.0 * sigma
    }

    fn uniform(body: &ConvexBody) -> NormalizedDensity {
        BoundaryDensity::Uniform.normalize(body).unwrap()
    }

    #[test]
    fn ball_uniform_has_flat_weight() {
        let ball = ConvexBody::ball(2, 1.0).unwrap();
        let s = BoundarySampler::new(uniform(&ball)).unwrap();
        let env = s.envelope();
        assert!((env.grid_max - 1.0 / (2.0 * PI)).abs() < 1e-12);
        assert!((env.bound - 1.5 * env.grid_max).abs() < 1e-15);
        assert!(BoundarySampler::with_safety(uniform(&ball), 1.2).is_err());
        assert_eq!(s.rebuilt().unwrap().envelope().safety, 3.0);
    }

    #[test]
    fn quarter_circle_fraction() {
        let ball = ConvexBody::ball(2, 1.0).unwrap();
        let s = BoundarySampler::new(uniform(&ball)).unwrap();
        let pts = s.sample_batch(40_000, RngStream::new(1, 0)).unwrap();
        let hits = pts
            .iter()
            .filter(|p| p.position[0] >= 0.0 && p.position[1] >= 0.0)
            .count();
        assert!(three_sigma_fraction(hits, pts.len(), 0.25));
    }

    #[test]
    fn ellipse_half_plane_fraction() {
        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        let s = BoundarySampler::new(uniform(&e)).unwrap();
        let pts = s.sample_batch(40_000, RngStream::new(2, 0)).unwrap();
        let hits = pts.iter().filter(|p| p.position[0] > 0.0).count();
        assert!(three_sigma_fraction(hits, pts.len(), 0.5));
    }

    #[test]
    fn batches_are_reproducible() {
        let ball = ConvexBody::ball(2, 1.0).unwrap();
        let s = BoundarySampler::new(uniform(&ball)).unwrap();
        assert!(s.sample_batch(0, RngStream::new(3, 0)).unwrap().is_empty());
        let a = s.sample_batch(4, RngStream::new(3, 0)).unwrap();
        let b = s.sample_batch(4, RngStream::new(3, 0)).unwrap();
        assert_eq!(a, b);
        let c = s.sample_batch(4, RngStream::new(3, 1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sphere_mean_vector_is_small() {
        let ball = ConvexBody::ball(3, 1.0).unwrap();
        let s = BoundarySampler::new(uniform(&ball)).unwrap();
        let count = 100_000;
        let pts = s.sample_batch(count, RngStream::new(4, 0)).unwrap();
        let mut mean = vec![0.0; 3];
        for p in &pts {
            for k in 0..3 {
                mean[k] += p.position[k] / count as f64;
            }
        }
        assert!(norm(&mean) <= 4.0 / (count as f64).sqrt());
    }

    #[test]
    fn ellipse_uniform_arc_length_histogram() {
        // arc-length fractions of angular sectors compared with the
        // quadrature of the same sectors
        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        let nd = uniform(&e);
        let s = BoundarySampler::new(nd.clone()).unwrap();
        let bins = 16;
        let count = 64_000;
        let mut observed = vec![0usize; bins];
        for p in s.sample_batch(count, RngStream::new(5, 0)).unwrap() {
            let t = p.position[1].atan2(p.position[0]).rem_euclid(2.0 * PI);
            observed[((t / (2.0 * PI) * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let expected: Vec<f64> = (0..bins)
            .map(|k| {
                let (a, b) = (k as f64, k as f64 + 1.0);
                let (a, b) = (a * 2.0 * PI / bins as f64, b * 2.0 * PI / bins as f64);
                gauss_legendre_on(64, a, b)
                    .map(|(t, w)| {
                        let p = e.surface_point_at(&[t.cos(), t.sin()]).unwrap();
                        w * nd.evaluate(&p) * p.radial_jacobian()
                    })
                    .sum::<f64>()
                    * count as f64
            })
            .collect();
        let chi2: f64 = observed
            .iter()
            .zip(&expected)
            .map(|(o, e)| (*o as f64 - e).powi(2) / e)
            .sum();
        let p_value = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
        assert!(p_value > 1e-3, "chi2 = {chi2}");
    }

    #[test]
    fn interior_fractions() {
        let mut rng = RngStream::new(6, 0).rng();
        let b2 = ConvexBody::ball(2, 1.0).unwrap();
        let mut x = vec![0.0; 2];
        let total = 40_000;
        let hits = (0..total)
            .filter(|_| {
                sample_interior(&b2, 1.0, &mut rng, &mut x);
                norm(&x) <= 0.5
            })
            .count();
        assert!(three_sigma_fraction(hits, total, 0.25));

        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        let hits = (0..total)
            .filter(|_| {
                sample_interior(&e, 1.0, &mut rng, &mut x);
                assert!(e.contains(&x, 1e-12));
                norm(&x) <= 1.0
            })
            .count();
        // the unit disk holds half the area of the ellipse
        assert!(three_sigma_fraction(hits, total, 0.5));

        let pb = ConvexBody::perturbed_ball(2, 1.0, 0.3, Profile::ZonalQuartic).unwrap();
        let hits = (0..total)
            .filter(|_| {
                sample_interior(&pb, 1.0, &mut rng, &mut x);
                norm(&x) <= 1.0
            })
            .count();
        assert!(three_sigma_fraction(hits, total, PI / pb.volume()));

        let b3 = ConvexBody::ball(3, 1.0).unwrap();
        let mut x = vec![0.0; 3];
        let hits = (0..total)
            .filter(|_| {
                sample_interior(&b3, 1.0, &mut rng, &mut x);
                norm(&x) <= 0.5
            })
            .count();
        assert!(three_sigma_fraction(hits, total, 0.125));
    }

    #[test]
    fn cap_mass_examples() {
        let b2 = ConvexBody::ball(2, 1.0).unwrap();
        let nd = uniform(&b2);
        let u = Direction::new(vec![0.3, 0.7]).unwrap();
        assert!((cap_mass(&nd, &u, 0.0).unwrap().value - 0.5).abs() < 1e-12);
        let z: f64 = 0.1;
        let want = (1.0 - z).acos() / PI;
        assert!((want - 0.14357).abs() < 1e-5);
        assert!((cap_mass(&nd, &u, 1.0 - z).unwrap().value - want).abs() < 1e-12);
        assert_eq!(cap_mass(&nd, &u, 1.0).unwrap().value, 0.0);
        assert!(cap_mass(&nd, &u, 1.5).is_err());

        let b3 = ConvexBody::ball(3, 1.0).unwrap();
        let nd = uniform(&b3);
        let u = Direction::new(vec![0.2, -0.4, 0.9]).unwrap();
        // Archimedes: cap area 2πz on the unit sphere
        for z in [1e-4, 0.01, 0.5, 1.0] {
            let s = cap_mass(&nd, &u, 1.0 - z).unwrap().value;
            assert!((s - z / 2.0).abs() < 1e-10, "z={z}: {s}");
        }
    }

    #[test]
    fn cap_mass_is_monotone_and_complementary() {
        let bodies = vec![
            ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap(),
            ConvexBody::ellipsoid(vec![3.0, 2.0, 1.0]).unwrap(),
            ConvexBody::perturbed_ball(3, 1.0, 0.2, Profile::Quartic).unwrap(),
        ];
        for body in bodies {
            let nd = BoundaryDensity::AffineSurfaceArea.normalize(&body).unwrap();
            let n = body.dim();
            let mut v = vec![0.4; n];
            v[0] = -0.8;
            let u = Direction::new(v).unwrap();
            let minus = Direction::new(u.iter().map(|x| -x).collect()).unwrap();
            let total = cap_mass(&nd, &u, 0.0).unwrap().value + cap_mass(&nd, &minus, 0.0).unwrap().value;
            assert!((total - 1.0).abs() < 1e-6, "{}: {total}", body.label());
            let h = body.support(&u).unwrap();
            let mut last = f64::INFINITY;
            for k in 0..=10 {
                let t = h * k as f64 / 10.0;
                let s = cap_mass(&nd, &u, t).unwrap().value;
                assert!(s <= last + 1e-9);
                last = s;
            }
        }
    }
}
