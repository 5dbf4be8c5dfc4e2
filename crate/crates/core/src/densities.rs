//! Positive densities on ∂K and their normalization against surface measure.

use std::fmt;
use std::sync::Arc;

use crate::bodies::{ConvexBody, SurfacePoint};
use crate::error::{Error, Result};
use crate::sphere::QUADRATURE_TOLERANCE;

pub type DensityFn = Arc<dyn Fn(&SurfacePoint) -> f64 + Send + Sync>;

/// An unnormalized density g on the boundary, relative to surface measure.
#[derive(Clone)]
pub enum BoundaryDensity {
    /// g = 1 (normalizes to the surface measure).
    Uniform,
    /// g = κ^{1/(n+1)} (normalizes to the affine surface area measure).
    AffineSurfaceArea,
    /// g = ⟨x, N⟩^α κ^β.
    AlphaBeta { alpha: f64, beta: f64 },
    Custom { name: String, eval: DensityFn },
}

impl BoundaryDensity {
    pub fn custom<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&SurfacePoint) -> f64 + Send + Sync + 'static,
    {
        BoundaryDensity::Custom {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    /// The α, β pair whose integral is the p-affine surface area.
    pub fn p_affine(n: usize, p: f64) -> Self {
        let n = n as f64;
        BoundaryDensity::AlphaBeta {
            alpha: -n * (p - 1.0) / (n + p),
            beta: p / (n + p),
        }
    }

    pub fn label(&self) -> String {
        match self {
            BoundaryDensity::Uniform => "uniform".into(),
            BoundaryDensity::AffineSurfaceArea => "affine".into(),
            BoundaryDensity::AlphaBeta { alpha, beta } => format!("alpha{alpha}_beta{beta}"),
            BoundaryDensity::Custom { name, .. } => name.clone(),
        }
    }

    fn raw(&self, p: &SurfacePoint) -> f64 {
        match self {
            BoundaryDensity::Uniform => 1.0,
            BoundaryDensity::AffineSurfaceArea => {
                p.gauss_curvature.powf(1.0 / (p.dim() as f64 + 1.0))
            }
            BoundaryDensity::AlphaBeta { alpha, beta } => {
                p.support_value.powf(*alpha) * p.gauss_curvature.powf(*beta)
            }
            BoundaryDensity::Custom { eval, .. } => eval(p),
        }
    }

    /// g(p), checked for strict positivity.
    pub fn unnormalized(&self, p: &SurfacePoint) -> Result<f64> {
        let v = self.raw(p);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonPositiveDensity(v))
        }
    }

    /// Normalizes against `body`; positivity is checked at every quadrature node.
    pub fn normalize(&self, body: &ConvexBody) -> Result<NormalizedDensity> {
        let q = body
            .try_boundary_integral(|p| self.unnormalized(p))?
            .checked(QUADRATURE_TOLERANCE)?;
        Ok(NormalizedDensity {
            density: self.clone(),
            body: body.clone(),
            normalizer: q.value,
            quadrature_error: q.error,
        })
    }
}

impl fmt::Debug for BoundaryDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryDensity::Custom { name, .. } => write!(f, "Custom({name})"),
            other => f.write_str(&other.label()),
        }
    }
}

/// f = g / Z with ∫_{∂K} f dμ = 1.
#[derive(Clone, Debug)]
pub struct NormalizedDensity {
    pub density: BoundaryDensity,
    pub body: ConvexBody,
    pub normalizer: f64,
    pub quadrature_error: f64,
}

impl NormalizedDensity {
    pub fn evaluate(&self, p: &SurfacePoint) -> f64 {
        self.density.raw(p) / self.normalizer
    }

    pub fn label(&self) -> String {
        self.density.label()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{Direction, Profile};
    use std::f64::consts::PI;

    fn bodies() -> Vec<ConvexBody> {
        vec![
            ConvexBody::ball(2, 1.0).unwrap(),
            ConvexBody::ball(3, 2.0).unwrap(),
            ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap(),
            ConvexBody::ellipsoid(vec![3.0, 2.0, 1.0]).unwrap(),
            ConvexBody::perturbed_ball(2, 1.0, 0.2, Profile::Quartic).unwrap(),
            ConvexBody::perturbed_ball(3, 1.0, 0.15, Profile::Quartic).unwrap(),
        ]
    }

    fn densities() -> Vec<BoundaryDensity> {
        vec![
            BoundaryDensity::Uniform,
            BoundaryDensity::AffineSurfaceArea,
            BoundaryDensity::AlphaBeta {
                alpha: 1.0,
                beta: 0.0,
            },
            BoundaryDensity::AlphaBeta {
                alpha: -1.0,
                beta: 1.0,
            },
            BoundaryDensity::custom("bump", |p| 1.0 + 0.5 * p.outer_normal[0].powi(2)),
        ]
    }

    #[test]
    fn unnormalized_examples() {
        let ball = ConvexBody::ball(3, 1.0).unwrap();
        let p = ball.surface_point_at(&[0.0, 0.6, 0.8]).unwrap();
        assert_eq!(BoundaryDensity::Uniform.unnormalized(&p).unwrap(), 1.0);
        assert_eq!(BoundaryDensity::AffineSurfaceArea.unnormalized(&p).unwrap(), 1.0);
        let big = ConvexBody::ball(2, 2.0).unwrap();
        let p = big.surface_point_at(&[0.6, 0.8]).unwrap();
        let d = BoundaryDensity::AlphaBeta {
            alpha: 1.0,
            beta: 0.0,
        };
        assert_eq!(d.unnormalized(&p).unwrap(), 2.0);
        let bad = BoundaryDensity::custom("neg", |_| -1.0);
        assert!(matches!(bad.unnormalized(&p), Err(Error::NonPositiveDensity(_))));
        assert!(bad.normalize(&big).is_err());
    }

    #[test]
    fn normalizer_examples() {
        let b3 = ConvexBody::ball(3, 1.0).unwrap();
        let nd = BoundaryDensity::Uniform.normalize(&b3).unwrap();
        assert!((nd.normalizer - 4.0 * PI).abs() < 1e-12);
        let b2 = ConvexBody::ball(2, 1.0).unwrap();
        let nd = BoundaryDensity::AffineSurfaceArea.normalize(&b2).unwrap();
        assert!((nd.normalizer - 2.0 * PI).abs() < 1e-12);
        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        let nd = BoundaryDensity::AffineSurfaceArea.normalize(&e).unwrap();
        let want = 2f64.powf(1.0 / 3.0) * 2.0 * PI;
        assert!((nd.normalizer - want).abs() < 1e-10);
        assert!((want - 7.9163).abs() < 1e-4);
    }

    #[test]
    fn evaluate_examples() {
        let b2 = ConvexBody::ball(2, 1.0).unwrap();
        let nd = BoundaryDensity::Uniform.normalize(&b2).unwrap();
        let p = b2.surface_point_from_direction(&Direction::axis(2, 1)).unwrap();
        assert!((nd.evaluate(&p) - 1.0 / (2.0 * PI)).abs() < 1e-14);
        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        let nd = BoundaryDensity::Uniform.normalize(&e).unwrap();
        let p = e.surface_point_at(&[0.6, 0.8]).unwrap();
        assert!((nd.evaluate(&p) - 1.0 / 9.688448220547675).abs() < 1e-12);
    }

    #[test]
    fn normalized_densities_integrate_to_one() {
        for body in bodies() {
            for d in densities() {
                let nd = d.normalize(&body).unwrap();
                let q = body.boundary_integral(|p| nd.evaluate(p)).unwrap();
                assert!(
                    (q.value - 1.0).abs() < 1e-6f64.max(3.0 * nd.quadrature_error),
                    "{} {}",
                    body.label(),
                    nd.label()
                );
            }
        }
    }

    #[test]
    fn family_coherence() {
        for body in bodies() {
            let n = body.dim() as f64;
            let aff = BoundaryDensity::AffineSurfaceArea.normalize(&body).unwrap();
            let ab = BoundaryDensity::AlphaBeta {
                alpha: 0.0,
                beta: 1.0 / (n + 1.0),
            }
            .normalize(&body)
            .unwrap();
            let uni = BoundaryDensity::Uniform.normalize(&body).unwrap();
            let zero = BoundaryDensity::AlphaBeta {
                alpha: 0.0,
                beta: 0.0,
            }
            .normalize(&body)
            .unwrap();
            for u in crate::sphere::grid_directions(body.dim(), 50) {
                let p = body.surface_point_at(&u).unwrap();
                assert!((aff.evaluate(&p) - ab.evaluate(&p)).abs() < 1e-12);
                assert!((uni.evaluate(&p) - zero.evaluate(&p)).abs() < 1e-12);
            }
        }
    }
}
