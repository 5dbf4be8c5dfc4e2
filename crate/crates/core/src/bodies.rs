//! Smooth convex bodies with positive curvature, star-shaped about the origin.
//!
//! Every body is parameterized by its radial function ρ on 𝕊^{n-1}; boundary
//! points are x(u) = ρ(u)·u. Balls and ellipsoids use closed forms; the
//! perturbed ball ρ(u) = R(1 + ε·g(u)) uses analytic derivatives of a
//! polynomial profile g and the bordered-Hessian curvature formula of its
//! defining function F(x) = |x| − ρ(x/|x|).

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{complement_basis, det_in_place, dot, norm, normalize, solve_in_place};
use crate::sphere::{grid_directions, integrate_sphere, unit_ball_volume, Quadrature};

pub const MAX_DIMENSION: usize = 8;

/// A unit vector in ℝⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Normalizes `v`; fails on the zero vector.
    pub fn new(mut v: Vec<f64>) -> Result<Self> {
        let len = normalize(&mut v);
        if len == 0.0 || !len.is_finite() {
            return Err(Error::InvalidBody(format!("cannot normalize {v:?}")));
        }
        Ok(Direction(v))
    }

    /// Wraps a vector that is already unit length.
    pub fn from_unit(v: Vec<f64>) -> Self {
        debug_assert!((norm(&v) - 1.0).abs() < 1e-12);
        Direction(v)
    }

    /// The k-th coordinate axis of ℝⁿ.
    pub fn axis(n: usize, k: usize) -> Self {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        Direction(v)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Direction {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A boundary point with its first- and second-order data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub position: Vec<f64>,
    pub outer_normal: Vec<f64>,
    pub gauss_curvature: f64,
    /// ⟨position, outer_normal⟩.
    pub support_value: f64,
}

impl SurfacePoint {
    pub fn dim(&self) -> usize {
        self.position.len()
    }

    /// Density of surface measure with respect to spherical measure under the
    /// radial map u ↦ ρ(u)u, namely ρⁿ / ⟨x, N(x)⟩.
    pub fn radial_jacobian(&self) -> f64 {
        let r = norm(&self.position);
        r.powi(self.dim() as i32) / self.support_value
    }
}

/// Polynomial profiles g for the perturbed ball. All are even, so the
/// resulting bodies are centrally symmetric and have their centroid at 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// g(u) = Σ uᵢ⁴.
    Quartic,
    /// g(u) = u₁⁴.
    ZonalQuartic,
}

impl Profile {
    pub fn name(&self) -> &'static str {
        match self {
            Profile::Quartic => "quartic",
            Profile::ZonalQuartic => "zonal_quartic",
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            Profile::Quartic => y.iter().map(|v| v.powi(4)).sum(),
            Profile::ZonalQuartic => y[0].powi(4),
        }
    }

    pub fn gradient(&self, y: &[f64], out: &mut [f64]) {
        match self {
            Profile::Quartic => {
                for (o, v) in out.iter_mut().zip(y) {
                    *o = 4.0 * v.powi(3);
                }
            }
            Profile::ZonalQuartic => {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[0] = 4.0 * y[0].powi(3);
            }
        }
    }

    /// Row-major n×n Hessian.
    pub fn hessian(&self, y: &[f64], out: &mut [f64]) {
        let n = y.len();
        out.iter_mut().for_each(|o| *o = 0.0);
        match self {
            Profile::Quartic => {
                for i in 0..n {
                    out[i * n + i] = 12.0 * y[i] * y[i];
                }
            }
            Profile::ZonalQuartic => out[0] = 12.0 * y[0] * y[0],
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BodyKind {
    Ball {
        radius: f64,
    },
    /// {x : |D⁻¹Rᵀx| ≤ 1} with D = diag(semiaxes) and an optional orthogonal
    /// row-major rotation R.
    Ellipsoid {
        semiaxes: Vec<f64>,
        rotation: Option<Vec<f64>>,
    },
    PerturbedBall {
        radius: f64,
        epsilon: f64,
        profile: Profile,
    },
}

/// A C²₊ convex body in ℝⁿ containing the origin in its interior.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexBody {
    dim: usize,
    kind: BodyKind,
    volume: Quadrature,
    surface_area: Quadrature,
}

fn check_dim(n: usize) -> Result<()> {
    if !(2..=MAX_DIMENSION).contains(&n) {
        return Err(Error::InvalidBody(format!(
            "dimension {n} outside 2..={MAX_DIMENSION}"
        )));
    }
    Ok(())
}

fn exact(value: f64) -> Quadrature {
    Quadrature {
        value,
        error: 0.0,
        monte_carlo: false,
    }
}

impl ConvexBody {
    pub fn ball(n: usize, radius: f64) -> Result<Self> {
        check_dim(n)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidBody(format!("radius {radius}")));
        }
        let volume = unit_ball_volume(n) * radius.powi(n as i32);
        Ok(ConvexBody {
            dim: n,
            kind: BodyKind::Ball { radius },
            volume: exact(volume),
            surface_area: exact(n as f64 * volume / radius),
        })
    }

    pub fn ellipsoid(semiaxes: Vec<f64>) -> Result<Self> {
        Self::build_ellipsoid(semiaxes, None)
    }

    /// An ellipsoid with axes along the columns of the orthogonal matrix `rotation`.
    pub fn rotated_ellipsoid(semiaxes: Vec<f64>, rotation: Vec<f64>) -> Result<Self> {
        let n = semiaxes.len();
        if rotation.len() != n * n {
            return Err(Error::InvalidBody("rotation has wrong shape".into()));
        }
        for i in 0..n {
            for j in 0..n {
                let g: f64 = (0..n).map(|k| rotation[k * n + i] * rotation[k * n + j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (g - want).abs() > 1e-10 {
                    return Err(Error::InvalidBody("rotation is not orthogonal".into()));
                }
            }
        }
        Self::build_ellipsoid(semiaxes, Some(rotation))
    }

    fn build_ellipsoid(semiaxes: Vec<f64>, rotation: Option<Vec<f64>>) -> Result<Self> {
        let n = semiaxes.len();
        check_dim(n)?;
        if semiaxes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidBody(format!("semiaxes {semiaxes:?}")));
        }
        let volume = unit_ball_volume(n) * semiaxes.iter().product::<f64>();
        let mut body = ConvexBody {
            dim: n,
            kind: BodyKind::Ellipsoid { semiaxes, rotation },
            volume: exact(volume),
            surface_area: exact(0.0),
        };
        body.surface_area = body.boundary_integral(|_| 1.0)?;
        Ok(body)
    }

    /// ρ(u) = radius·(1 + ε·g(u)); rejected unless curvature is positive on a
    /// grid of 2¹² (n ≤ 3) or 2¹⁴ (n ≥ 4) directions.
    pub fn perturbed_ball(n: usize, radius: f64, epsilon: f64, profile: Profile) -> Result<Self> {
        check_dim(n)?;
        if !(radius > 0.0 && radius.is_finite() && epsilon.is_finite()) {
            return Err(Error::InvalidBody(format!(
                "radius {radius}, epsilon {epsilon}"
            )));
        }
        let mut body = ConvexBody {
            dim: n,
            kind: BodyKind::PerturbedBall {
                radius,
                epsilon,
                profile,
            },
            volume: exact(0.0),
            surface_area: exact(0.0),
        };
        let grid = if n <= 3 { 1 << 12 } else { 1 << 14 };
        for u in grid_directions(n, grid) {
            if body.radial_at(&u) <= 0.0 {
                return Err(Error::InvalidBody(format!(
                    "radial function is not positive at {u:?}"
                )));
            }
            body.surface_point_at(&u)?;
        }
        body.volume = integrate_sphere(n, |u| Ok(body.radial_at(u).powi(n as i32) / n as f64))?;
        body.surface_area = body.boundary_integral(|_| 1.0)?;
        Ok(body)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    /// A short identifier used in result tables.
    pub fn label(&self) -> String {
        match &self.kind {
            BodyKind::Ball { radius } => format!("ball_r{radius}"),
            BodyKind::Ellipsoid { semiaxes, rotation } => {
                let axes: Vec<String> = semiaxes.iter().map(|a| a.to_string()).collect();
                let rot = if rotation.is_some() { "_rot" } else { "" };
                format!("ellipsoid_{}{rot}", axes.join("_"))
            }
            BodyKind::PerturbedBall {
                radius,
                epsilon,
                profile,
            } => format!("perturbed_{profile}_r{radius}_e{epsilon}"),
        }
    }

    /// The body dilated by `factor` about the origin.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        match &self.kind {
            BodyKind::Ball { radius } => Self::ball(self.dim, radius * factor),
            BodyKind::Ellipsoid { semiaxes, rotation } => Self::build_ellipsoid(
                semiaxes.iter().map(|a| a * factor).collect(),
                rotation.clone(),
            ),
            BodyKind::PerturbedBall {
                radius,
                epsilon,
                profile,
            } => Self::perturbed_ball(self.dim, radius * factor, *epsilon, *profile),
        }
    }

    fn to_local(rotation: &Option<Vec<f64>>, x: &[f64], out: &mut [f64]) {
        match rotation {
            None => out.copy_from_slice(x),
            Some(r) => {
                let n = x.len();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..n).map(|j| r[j * n + i] * x[j]).sum();
                }
            }
        }
    }

    fn to_world(rotation: &Option<Vec<f64>>, y: &[f64], out: &mut [f64]) {
        match rotation {
            None => out.copy_from_slice(y),
            Some(r) => {
                let n = y.len();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..n).map(|j| r[i * n + j] * y[j]).sum();
                }
            }
        }
    }

    /// An upper bound on the radial function.
    pub fn radial_bound(&self) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius } => *radius,
            BodyKind::Ellipsoid { semiaxes, .. } => semiaxes.iter().copied().fold(0.0, f64::max),
            // both profiles take values in [0, 1] on the sphere
            BodyKind::PerturbedBall { radius, epsilon, .. } => radius * (1.0 + epsilon.max(0.0)),
        }
    }

    pub fn radial(&self, u: &Direction) -> f64 {
        self.radial_at(u)
    }

    /// Radial function at a unit vector given as a slice.
    pub fn radial_at(&self, u: &[f64]) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius } => *radius,
            BodyKind::Ellipsoid { semiaxes, rotation } => {
                let s: f64 = match rotation {
                    None => u.iter().zip(semiaxes).map(|(w, a)| (w / a).powi(2)).sum(),
                    Some(_) => {
                        let mut w = vec![0.0; self.dim];
                        Self::to_local(rotation, u, &mut w);
                        w.iter().zip(semiaxes).map(|(w, a)| (w / a).powi(2)).sum()
                    }
                };
                s.sqrt().recip()
            }
            BodyKind::PerturbedBall {
                radius,
                epsilon,
                profile,
            } => radius * (1.0 + epsilon * profile.value(u)),
        }
    }

    pub fn support(&self, u: &Direction) -> Result<f64> {
        match &self.kind {
            BodyKind::Ball { radius } => Ok(*radius),
            BodyKind::Ellipsoid { semiaxes, rotation } => {
                let mut w = vec![0.0; self.dim];
                Self::to_local(rotation, u, &mut w);
                Ok(w.iter()
                    .zip(semiaxes)
                    .map(|(w, a)| (w * a).powi(2))
                    .sum::<f64>()
                    .sqrt())
            }
            BodyKind::PerturbedBall { .. } => {
                let p = self.maximize_linear(u)?;
                Ok(dot(&p.position, u))
            }
        }
    }

    pub fn surface_point_from_direction(&self, u: &Direction) -> Result<SurfacePoint> {
        self.surface_point_at(u)
    }

    /// Boundary point x(u) = ρ(u)·u for a unit vector given as a slice.
    pub fn surface_point_at(&self, u: &[f64]) -> Result<SurfacePoint> {
        let n = self.dim;
        match &self.kind {
            BodyKind::Ball { radius } => Ok(SurfacePoint {
                position: u.iter().map(|v| v * radius).collect(),
                outer_normal: u.to_vec(),
                gauss_curvature: radius.powi(-(n as i32 - 1)),
                support_value: *radius,
            }),
            BodyKind::Ellipsoid { semiaxes, rotation } => {
                let mut w = vec![0.0; n];
                Self::to_local(rotation, u, &mut w);
                let s: f64 = w.iter().zip(semiaxes).map(|(w, a)| (w / a).powi(2)).sum();
                let rho = s.sqrt().recip();
                let mut grad: Vec<f64> = w
                    .iter()
                    .zip(semiaxes)
                    .map(|(w, a)| w * rho / (a * a))
                    .collect();
                let glen = normalize(&mut grad);
                let mut normal = vec![0.0; n];
                Self::to_world(rotation, &grad, &mut normal);
                let axes_sq: f64 = semiaxes.iter().map(|a| a * a).product();
                Ok(SurfacePoint {
                    position: u.iter().map(|v| v * rho).collect(),
                    outer_normal: normal,
                    gauss_curvature: (axes_sq * glen.powi(n as i32 + 1)).recip(),
                    support_value: glen.recip(),
                })
            }
            BodyKind::PerturbedBall { .. } => {
                let position: Vec<f64> = u.iter().map(|v| v * self.radial_at(u)).collect();
                self.perturbed_point(position)
            }
        }
    }

    /// Defining function F(x) = |x| − R(1 + ε g(x/|x|)) with gradient and
    /// row-major Hessian. Only meaningful for the perturbed ball.
    fn defining_function(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let BodyKind::PerturbedBall {
            radius,
            epsilon,
            profile,
        } = &self.kind
        else {
            unreachable!("defining function is only used for perturbed balls")
        };
        let n = self.dim;
        let r = norm(x);
        let y: Vec<f64> = x.iter().map(|v| v / r).collect();
        let mut a = vec![0.0; n];
        let mut hg = vec![0.0; n * n];
        profile.gradient(&y, &mut a);
        profile.hessian(&y, &mut hg);
        let ya = dot(&y, &a);
        let scale = radius * epsilon;

        // φ(x) = g(x/|x|): ∇φ = P a / r with P = I − y yᵀ.
        let grad_phi: Vec<f64> = (0..n).map(|i| (a[i] - ya * y[i]) / r).collect();
        // P Hg P
        let mut hp = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = hg[i * n + j];
                let hy_i: f64 = (0..n).map(|k| hg[i * n + k] * y[k]).sum();
                let hy_j: f64 = (0..n).map(|k| hg[j * n + k] * y[k]).sum();
                let yhy: f64 = (0..n).map(|k| y[k] * (0..n).map(|l| hg[k * n + l] * y[l]).sum::<f64>()).sum();
                acc += -hy_i * y[j] - y[i] * hy_j + yhy * y[i] * y[j];
                hp[i * n + j] = acc;
            }
        }
        let mut hess = vec![0.0; n * n];
        let mut grad = vec![0.0; n];
        for i in 0..n {
            grad[i] = y[i] - scale * grad_phi[i];
            for j in 0..n {
                let delta = if i == j { 1.0 } else { 0.0 };
                let h_phi = (hp[i * n + j] - a[i] * y[j] - y[i] * a[j] + 3.0 * ya * y[i] * y[j]
                    - ya * delta)
                    / (r * r);
                hess[i * n + j] = (delta - y[i] * y[j]) / r - scale * h_phi;
            }
        }
        let value = r - radius * (1.0 + epsilon * profile.value(&y));
        (value, grad, hess)
    }

    fn perturbed_point(&self, position: Vec<f64>) -> Result<SurfacePoint> {
        let n = self.dim;
        let (_, grad, hess) = self.defining_function(&position);
        let m = n + 1;
        let mut bordered = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                bordered[i * m + j] = hess[i * n + j];
            }
            bordered[i * m + n] = grad[i];
            bordered[n * m + i] = grad[i];
        }
        let glen = norm(&grad);
        let curvature = -det_in_place(&mut bordered, m) / glen.powi(m as i32);
        if !(curvature > 0.0) {
            let mut u = position.clone();
            normalize(&mut u);
            return Err(Error::CurvatureNotPositive {
                value: curvature,
                direction: u,
            });
        }
        let normal: Vec<f64> = grad.iter().map(|g| g / glen).collect();
        let support_value = dot(&position, &normal);
        Ok(SurfacePoint {
            position,
            outer_normal: normal,
            gauss_curvature: curvature,
            support_value,
        })
    }

    /// The boundary point whose outer normal is `u`.
    pub fn point_with_normal(&self, u: &Direction) -> Result<SurfacePoint> {
        match &self.kind {
            BodyKind::Ball { .. } => self.surface_point_at(u),
            BodyKind::Ellipsoid { semiaxes, rotation } => {
                let n = self.dim;
                let mut w = vec![0.0; n];
                Self::to_local(rotation, u, &mut w);
                let h = self.support(u)?;
                let y: Vec<f64> = w.iter().zip(semiaxes).map(|(w, a)| a * a * w / h).collect();
                let mut x = vec![0.0; n];
                Self::to_world(rotation, &y, &mut x);
                normalize(&mut x);
                self.surface_point_at(&x)
            }
            BodyKind::PerturbedBall { .. } => self.maximize_linear(u),
        }
    }

    /// Maximizes ⟨x, u⟩ over ∂K by Newton iteration on the Lagrange system
    /// u = μ∇F(x), F(x) = 0, retracting onto ∂K radially after each step.
    /// Up to eight starting points are tried in turn.
    fn maximize_linear(&self, u: &[f64]) -> Result<SurfacePoint> {
        const STARTS: usize = 8;
        const TOL: f64 = 1e-10;
        let n = self.dim;
        let mut starts = vec![u.to_vec()];
        let basis = complement_basis(u);
        'outer: for scale in [0.35, 0.7] {
            for b in &basis {
                for sign in [1.0, -1.0] {
                    if starts.len() == STARTS {
                        break 'outer;
                    }
                    let mut s: Vec<f64> = u.iter().zip(b).map(|(a, b)| a + sign * scale * b).collect();
                    normalize(&mut s);
                    starts.push(s);
                }
            }
        }

        let mut best_residual = f64::INFINITY;
        for start in starts {
            let rho = self.radial_at(&start);
            let mut x: Vec<f64> = start.iter().map(|v| v * rho).collect();
            let (_, g0, _) = self.defining_function(&x);
            let mut mu = dot(u, &g0) / dot(&g0, &g0);
            let mut residual = f64::INFINITY;
            for _ in 0..60 {
                let (f, grad, hess) = self.defining_function(&x);
                let glen = norm(&grad);
                residual = grad
                    .iter()
                    .zip(u)
                    .map(|(g, u)| (g / glen - u).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if residual < 1e-14 {
                    break;
                }
                let m = n + 1;
                let mut jac = vec![0.0; m * m];
                let mut rhs = vec![0.0; m];
                for i in 0..n {
                    for j in 0..n {
                        jac[i * m + j] = mu * hess[i * n + j];
                    }
                    jac[i * m + n] = grad[i];
                    jac[n * m + i] = grad[i];
                    rhs[i] = u[i] - mu * grad[i];
                }
                rhs[n] = -f;
                if solve_in_place(&mut jac, &mut rhs, m).is_none() {
                    break;
                }
                for i in 0..n {
                    x[i] += rhs[i];
                }
                mu += rhs[n];
                let mut v = x.clone();
                normalize(&mut v);
                let rho = self.radial_at(&v);
                x = v.iter().map(|c| c * rho).collect();
                let step = rhs[..n].iter().map(|d| d * d).sum::<f64>().sqrt();
                if step < 1e-16 {
                    let (_, grad, _) = self.defining_function(&x);
                    let glen = norm(&grad);
                    residual = grad
                        .iter()
                        .zip(u)
                        .map(|(g, u)| (g / glen - u).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    break;
                }
            }
            best_residual = best_residual.min(residual);
            // strict convexity makes the Gauss map injective, so the first
            // converged critical point with μ > 0 is the maximizer
            if residual <= TOL && mu > 0.0 {
                return self.perturbed_point(x);
            }
        }
        Err(Error::ConvergenceFailure(format!(
            "support point search for {u:?} stalled at residual {best_residual:e}"
        )))
    }

    pub fn volume(&self) -> f64 {
        self.volume.value
    }

    pub fn surface_area(&self) -> f64 {
        self.surface_area.value
    }

    /// Volume with its quadrature error estimate.
    pub fn volume_estimate(&self) -> Quadrature {
        self.volume
    }

    pub fn surface_area_estimate(&self) -> Quadrature {
        self.surface_area
    }

    /// True iff |p| ≤ ρ(p/|p|)·(1 + tol); the origin is always contained.
    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        let r = norm(point);
        if r == 0.0 {
            return true;
        }
        let u: Vec<f64> = point.iter().map(|v| v / r).collect();
        r <= self.radial_at(&u) * (1.0 + tol)
    }

    /// ∫_{∂K} φ dμ, pulled back to the sphere through the radial map.
    pub fn boundary_integral<F>(&self, mut integrand: F) -> Result<Quadrature>
    where
        F: FnMut(&SurfacePoint) -> f64,
    {
        self.try_boundary_integral(|p| Ok(integrand(p)))
    }

    pub fn try_boundary_integral<F>(&self, mut integrand: F) -> Result<Quadrature>
    where
        F: FnMut(&SurfacePoint) -> Result<f64>,
    {
        integrate_sphere(self.dim, |u| {
            let p = self.surface_point_at(u)?;
            Ok(integrand(&p)? * p.radial_jacobian())
        })
    }

    /// ∫_K x dx / vol(K).
    pub fn centroid(&self) -> Result<Vec<f64>> {
        let n = self.dim;
        (0..n)
            .map(|k| {
                let q = integrate_sphere(n, |u| {
                    Ok(self.radial_at(u).powi(n as i32 + 1) * u[k] / (n as f64 + 1.0))
                })?;
                Ok(q.value / self.volume())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::sphere::random_direction;
    use std::f64::consts::PI;

    fn dir(v: &[f64]) -> Direction {
        Direction::new(v.to_vec()).unwrap()
    }

    /// Gauss curvature from central finite differences of the position map
    /// x(u) = ρ(u)u only: κ = det(II)/det(I) in coordinates t ↦ u + Σ tₖeₖ.
    fn fd_curvature(body: &ConvexBody, u: &[f64]) -> f64 {
        let n = u.len();
        let h = 2e-4;
        let basis = complement_basis(u);
        let pos = |t: &[f64]| -> Vec<f64> {
            let mut v = u.to_vec();
            for (k, tk) in t.iter().enumerate() {
                for i in 0..n {
                    v[i] += tk * basis[k][i];
                }
            }
            normalize(&mut v);
            let r = body.radial_at(&v);
            v.iter().map(|c| c * r).collect()
        };
        let m = n - 1;
        let zero = vec![0.0; m];
        let x0 = pos(&zero);
        let tangent = |k: usize| -> Vec<f64> {
            let mut tp = zero.clone();
            let mut tm = zero.clone();
            tp[k] = h;
            tm[k] = -h;
            let (a, b) = (pos(&tp), pos(&tm));
            (0..n).map(|i| (a[i] - b[i]) / (2.0 * h)).collect()
        };
        let tangents: Vec<Vec<f64>> = (0..m).map(tangent).collect();
        // normal: component of x0 orthogonal to the tangent span
        let mut normal = x0.clone();
        let mut ortho: Vec<Vec<f64>> = Vec::new();
        for t in &tangents {
            let mut t = t.clone();
            for o in &ortho {
                let p = dot(&t, o);
                t.iter_mut().zip(o).for_each(|(a, b)| *a -= p * b);
            }
            normalize(&mut t);
            ortho.push(t);
        }
        for o in &ortho {
            let p = dot(&normal, o);
            normal.iter_mut().zip(o).for_each(|(a, b)| *a -= p * b);
        }
        normalize(&mut normal);
        let mut first = vec![0.0; m * m];
        let mut second = vec![0.0; m * m];
        for k in 0..m {
            for l in 0..m {
                first[k * m + l] = dot(&tangents[k], &tangents[l]);
                let mut pp = zero.clone();
                let mut pm = zero.clone();
                let mut mp = zero.clone();
                let mut mm = zero.clone();
                pp[k] += h;
                pp[l] += h;
                pm[k] += h;
                pm[l] -= h;
                mp[k] -= h;
                mp[l] += h;
                mm[k] -= h;
                mm[l] -= h;
                let (a, b, c, d) = (pos(&pp), pos(&pm), pos(&mp), pos(&mm));
                let xkl: Vec<f64> = (0..n)
                    .map(|i| (a[i] - b[i] - c[i] + d[i]) / (4.0 * h * h))
                    .collect();
                second[k * m + l] = -dot(&xkl, &normal);
            }
        }
        det_in_place(&mut second, m) / det_in_place(&mut first, m)
    }

    fn test_bodies() -> Vec<ConvexBody> {
        vec![
            ConvexBody::ball(2, 1.5).unwrap(),
            ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap(),
            ConvexBody::ellipsoid(vec![3.0, 2.0, 1.0]).unwrap(),
            ConvexBody::perturbed_ball(2, 1.0, 0.2, Profile::Quartic).unwrap(),
            ConvexBody::perturbed_ball(3, 1.0, 0.15, Profile::Quartic).unwrap(),
            ConvexBody::perturbed_ball(3, 1.0, 0.2, Profile::ZonalQuartic).unwrap(),
        ]
    }

    #[test]
    fn radial_examples() {
        let b = ConvexBody::ball(3, 1.0).unwrap();
        assert_eq!(b.radial(&dir(&[0.3, 0.4, 0.5])), 1.0);
        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        assert!((e.radial(&dir(&[1.0, 0.0])) - 2.0).abs() < 1e-15);
        // (t/(2√2))² + (t/√2)² = 1  ⇒  t = √(8/5)
        assert!((e.radial(&dir(&[1.0, 1.0])) - (8.0f64 / 5.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn support_examples() {
        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        assert!((e.support(&dir(&[0.0, 1.0])).unwrap() - 1.0).abs() < 1e-15);
        let e3 = ConvexBody::ellipsoid(vec![3.0, 2.0, 1.0]).unwrap();
        let want = (14.0f64 / 3.0).sqrt();
        assert!((e3.support(&dir(&[1.0, 1.0, 1.0])).unwrap() - want).abs() < 1e-14);
        assert!((want - 2.1602).abs() < 1e-4);
    }

    #[test]
    fn ellipse_curvature_at_vertices() {
        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        let p = e.surface_point_from_direction(&dir(&[1.0, 0.0])).unwrap();
        assert!((p.gauss_curvature - 2.0).abs() < 1e-14);
        assert!((fd_curvature(&e, &[1.0, 0.0]) - 2.0).abs() < 1e-5);
        let p = e.surface_point_from_direction(&dir(&[0.0, 1.0])).unwrap();
        assert!((p.gauss_curvature - 0.25).abs() < 1e-15);
        assert!((fd_curvature(&e, &[0.0, 1.0]) - 0.25).abs() < 1e-6);
    }

    #[test]
    fn ball_point_data() {
        let b = ConvexBody::ball(3, 1.0).unwrap();
        let p = b.surface_point_from_direction(&dir(&[1.0, 2.0, 2.0])).unwrap();
        assert_eq!(p.gauss_curvature, 1.0);
        assert_eq!(p.support_value, 1.0);
    }

    #[test]
    fn point_with_normal_examples() {
        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        let p = e.point_with_normal(&dir(&[1.0, 0.0])).unwrap();
        assert!((p.position[0] - 2.0).abs() < 1e-14 && p.position[1].abs() < 1e-14);
        let u = dir(&[1.0, 1.0]);
        let p = e.point_with_normal(&u).unwrap();
        let h = (2.5f64).sqrt();
        assert!((dot(&p.position, &u) - h).abs() < 1e-12);
        let on_ellipse = (p.position[0] / 2.0).powi(2) + p.position[1].powi(2);
        assert!((on_ellipse - 1.0).abs() < 1e-12);
        assert!((p.position[0] - 4.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!((p.position[1] - 1.0 / 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn perturbed_point_with_normal_converges() {
        let b = ConvexBody::perturbed_ball(3, 1.0, 0.2, Profile::ZonalQuartic).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..20 {
            let mut u = vec![0.0; 3];
            random_direction(&mut rng, &mut u);
            let u = Direction::from_unit(u);
            let p = b.point_with_normal(&u).unwrap();
            for (a, b) in p.outer_normal.iter().zip(u.iter()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn measures_of_simple_bodies() {
        let b = ConvexBody::ball(2, 1.0).unwrap();
        assert!((b.volume() - PI).abs() < 1e-14);
        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        assert!((e.volume() - 2.0 * PI).abs() < 1e-14);
        assert!((e.surface_area() - 9.688448220547675).abs() < 1e-10);
        let b3 = ConvexBody::ball(3, 1.0).unwrap();
        assert!((b3.surface_area() - 4.0 * PI).abs() < 1e-13);
        // quadrature path agrees with the closed form
        let q = b3.boundary_integral(|_| 1.0).unwrap();
        assert!((q.value - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn contains_examples() {
        let b = ConvexBody::ball(2, 1.0).unwrap();
        assert!(b.contains(&[0.5, 0.0], 0.0));
        assert!(!b.contains(&[1.001, 0.0], 0.0));
        assert!(b.contains(&[0.0, 0.0], 0.0));
        let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        assert!(e.contains(&[1.9, 0.1], 0.0));
        assert!(!e.contains(&[1.9, 0.4], 0.0));
    }

    #[test]
    fn support_consistency_on_grid() {
        for body in test_bodies() {
            for u in grid_directions(body.dim(), 64) {
                let p = body.surface_point_at(&u).unwrap();
                let nrm = Direction::from_unit(p.outer_normal.clone());
                let h = body.support(&nrm).unwrap();
                assert!(
                    (h - p.support_value).abs() < 1e-8,
                    "{}: {h} vs {}",
                    body.label(),
                    p.support_value
                );
            }
        }
    }

    #[test]
    fn gauss_map_jacobian_identity() {
        // ∫_{𝕊} h(u)/κ(x(u)) dσ(u) = n·vol(K)
        for body in test_bodies() {
            let n = body.dim();
            let q = integrate_sphere(n, |u| {
                let u = Direction::from_unit(u.to_vec());
                let p = body.point_with_normal(&u)?;
                Ok(p.support_value / p.gauss_curvature)
            })
            .unwrap();
            let want = n as f64 * body.volume();
            assert!(
                (q.value / want - 1.0).abs() < 1e-6,
                "{}: {} vs {want}",
                body.label(),
                q.value
            );
        }
    }

    #[test]
    fn curvature_matches_finite_difference_oracle() {
        let mut rng = RngStream::new(11, 0).rng();
        for body in test_bodies() {
            let n = body.dim();
            for _ in 0..100 {
                let mut u = vec![0.0; n];
                random_direction(&mut rng, &mut u);
                let exact = body.surface_point_at(&u).unwrap().gauss_curvature;
                let fd = fd_curvature(&body, &u);
                assert!(
                    (fd / exact - 1.0).abs() < 1e-5,
                    "{} at {u:?}: {exact} vs {fd}",
                    body.label()
                );
            }
        }
    }

    #[test]
    fn normal_is_orthogonal_to_boundary() {
        let body = ConvexBody::perturbed_ball(3, 1.0, 0.15, Profile::Quartic).unwrap();
        let mut rng = RngStream::new(5, 0).rng();
        for _ in 0..50 {
            let mut u = vec![0.0; 3];
            random_direction(&mut rng, &mut u);
            let p = body.surface_point_at(&u).unwrap();
            for b in complement_basis(&u) {
                let h = 1e-6;
                let mut a: Vec<f64> = u.iter().zip(&b).map(|(x, y)| x + h * y).collect();
                let mut c: Vec<f64> = u.iter().zip(&b).map(|(x, y)| x - h * y).collect();
                normalize(&mut a);
                normalize(&mut c);
                let xa: Vec<f64> = a.iter().map(|v| v * body.radial_at(&a)).collect();
                let xc: Vec<f64> = c.iter().map(|v| v * body.radial_at(&c)).collect();
                let t: Vec<f64> = xa.iter().zip(&xc).map(|(a, c)| (a - c) / (2.0 * h)).collect();
                assert!(dot(&t, &p.outer_normal).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn rotation_leaves_measures_unchanged() {
        let (c, s) = (0.6f64, 0.8f64);
        let rot = vec![c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0];
        let e = ConvexBody::ellipsoid(vec![3.0, 2.0, 1.0]).unwrap();
        let r = ConvexBody::rotated_ellipsoid(vec![3.0, 2.0, 1.0], rot).unwrap();
        assert!((e.volume() - r.volume()).abs() < 1e-10);
        assert!((e.surface_area() - r.surface_area()).abs() < 1e-10);
        let rot2 = vec![c, -s, s, c];
        let e2 = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
        let r2 = ConvexBody::rotated_ellipsoid(vec![2.0, 1.0], rot2).unwrap();
        assert!((e2.surface_area() - r2.surface_area()).abs() < 1e-10);
        // rotated body evaluates the original at rotated inputs
        let u = dir(&[0.2, 0.9]);
        let ru = dir(&[c * 0.2 - s * 0.9, s * 0.2 + c * 0.9]);
        assert!((e2.radial(&u) - r2.radial(&ru)).abs() < 1e-14);
    }

    #[test]
    fn perturbed_ball_is_centered() {
        let body = ConvexBody::perturbed_ball(3, 1.0, 0.2, Profile::ZonalQuartic).unwrap();
        for c in body.centroid().unwrap() {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_perturbation_rejected() {
        let err = ConvexBody::perturbed_ball(2, 1.0, 0.9, Profile::Quartic).unwrap_err();
        assert!(matches!(err, Error::CurvatureNotPositive { .. }));
        assert!(ConvexBody::ball(1, 1.0).is_err());
        assert!(ConvexBody::ball(9, 1.0).is_err());
        assert!(ConvexBody::ellipsoid(vec![1.0, -1.0]).is_err());
    }
}
