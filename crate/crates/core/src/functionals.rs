//! Closed-form functionals of the approximation problem: the rate integral,
//! p-affine surface areas, the limiting constant, and the shrink factor c.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::bodies::{ConvexBody, SurfacePoint};
use crate::densities::{BoundaryDensity, NormalizedDensity};
use crate::error::{Error, Result};
use crate::sphere::{sphere_area, unit_ball_volume, Quadrature, MC_RELATIVE_TOLERANCE};

/// Relative accuracy demanded of deterministic functional quadratures.
pub const FUNCTIONAL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateConstant {
    pub n: usize,
    pub value: f64,
}

fn checked(q: Quadrature) -> Result<Quadrature> {
    let tol = if q.monte_carlo {
        MC_RELATIVE_TOLERANCE
    } else {
        FUNCTIONAL_TOLERANCE
    };
    q.checked(tol)
}

/// ∫_{∂K} κ^{1/(n−1)} f^{−2/(n−1)} dμ.
pub fn rhs_integral(nd: &NormalizedDensity) -> Result<Quadrature> {
    let e = 1.0 / (nd.body.dim() as f64 - 1.0);
    checked(nd.body.try_boundary_integral(|p| {
        let f = nd.density.unnormalized(p)? / nd.normalizer;
        Ok(p.gauss_curvature.powf(e) * f.powf(-2.0 * e))
    })?)
}

/// Curvature and support exponents of the as_p integrand, with the limits
/// (1, n) at p = ±∞.
fn p_exponents(n: usize, p: f64) -> Result<(f64, f64)> {
    let nf = n as f64;
    if p.is_nan() || p == -nf {
        return Err(Error::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok((1.0, nf));
    }
    Ok((p / (nf + p), nf * (p - 1.0) / (nf + p)))
}

/// as_p(K) = ∫_{∂K} κ^{p/(n+p)} ⟨x, N⟩^{−n(p−1)/(n+p)} dμ, for p ≠ −n
/// (p = ±∞ allowed).
pub fn p_affine_surface_area(body: &ConvexBody, p: f64) -> Result<Quadrature> {
    let (a, b) = p_exponents(body.dim(), p)?;
    let integrand = move |s: &SurfacePoint| s.gauss_curvature.powf(a) * s.support_value.powf(-b);
    checked(body.boundary_integral(integrand)?)
}

/// The classical affine surface area as(K) = as_1(K).
pub fn affine_surface_area(body: &ConvexBody) -> Result<Quadrature> {
    p_affine_surface_area(body, 1.0)
}

/// The q paired with p in as_p(K)^{2/(n−1)} · as_q(K); infinite when n + p = 2.
pub fn dual_exponent(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    let den = nf + p - 2.0;
    if den == 0.0 {
        f64::INFINITY
    } else {
        (nf - p) / den
    }
}

/// (n−1)^{(n+1)/(n−1)} Γ(n+1+2/(n−1)) / (2 (n+1)! ω_{n−1}^{2/(n−1)}).
pub fn sw_constant(n: usize) -> Result<RateConstant> {
    if n < 2 {
        return Err(Error::InvalidBody(format!("dimension {n} below 2")));
    }
    let nf = n as f64;
    let e = 2.0 / (nf - 1.0);
    let ln = (nf + 1.0) / (nf - 1.0) * (nf - 1.0).ln() + ln_gamma(nf + 1.0 + e)
        - 2f64.ln()
        - ln_gamma(nf + 2.0)
        - e * sphere_area(n - 1).ln();
    Ok(RateConstant { n, value: ln.exp() })
}

fn check_points(n: usize, points: usize) -> Result<()> {
    if points < n + 1 {
        return Err(Error::InvalidConfig(format!(
            "{points} points cannot span a polytope in dimension {n}"
        )));
    }
    Ok(())
}

/// N^{−2/(n−1)} · sw_constant(n) · rhs_integral, the limiting missed volume.
pub fn predicted_missed_volume(nd: &NormalizedDensity, points: usize) -> Result<f64> {
    let rhs = rhs_integral(nd)?.value;
    predicted_from_rhs(nd.body.dim(), rhs, points)
}

pub fn predicted_from_rhs(n: usize, rhs: f64, points: usize) -> Result<f64> {
    check_points(n, points)?;
    let e = -2.0 / (n as f64 - 1.0);
    Ok((points as f64).powf(e) * sw_constant(n)?.value * rhs)
}

/// Shrink factor c = predicted missed volume / (n vol(K)).
pub fn shrink_factor(nd: &NormalizedDensity, points: usize) -> Result<f64> {
    let pred = predicted_missed_volume(nd, points)?;
    shrink_from_prediction(&nd.body, pred, points)
}

pub fn shrink_from_prediction(body: &ConvexBody, predicted: f64, points: usize) -> Result<f64> {
    let c = predicted / (body.dim() as f64 * body.volume());
    if c >= 0.5 {
        return Err(Error::NTooSmall { n_points: points, c });
    }
    Ok(c)
}

/// The c solving (1 − c)ⁿ vol(K) = vol(K) − predicted missed volume.
pub fn shrink_factor_exact(nd: &NormalizedDensity, points: usize) -> Result<f64> {
    let pred = predicted_missed_volume(nd, points)?;
    let ratio = 1.0 - pred / nd.body.volume();
    if ratio <= 0.0 {
        return Err(Error::NTooSmall {
            n_points: points,
            c: 1.0,
        });
    }
    Ok(1.0 - ratio.powf(1.0 / nd.body.dim() as f64))
}

/// Whether the calibrated c is at least (1 − 1/n) times the asymptotic c.
pub fn lower_estimate_holds(nd: &NormalizedDensity, points: usize) -> Result<bool> {
    let asymptotic = shrink_factor(nd, points)?;
    let exact = shrink_factor_exact(nd, points)?;
    let n = nd.body.dim() as f64;
    Ok(exact >= (1.0 - 1.0 / n) * asymptotic)
}

/// (as(K)/as(Bⁿ))^{(n+1)/(n−1)} / (vol(K)/vol(Bⁿ)); at most 1, with
/// equality exactly for ellipsoids.
pub fn isoperimetric_ratio(body: &ConvexBody) -> Result<f64> {
    let n = body.dim();
    let nf = n as f64;
    let a = affine_surface_area(body)?.value / sphere_area(n);
    let v = body.volume() / unit_ball_volume(n);
    Ok(a.powf((nf + 1.0) / (nf - 1.0)) / v)
}

/// The AlphaBeta densities over α, β ∈ {−1, 0, 1}.
pub fn alpha_beta_grid() -> Vec<BoundaryDensity> {
    let vals = [-1.0, 0.0, 1.0];
    vals.iter()
        .flat_map(|&alpha| vals.iter().map(move |&beta| BoundaryDensity::AlphaBeta { alpha, beta }))
        .collect()
}
