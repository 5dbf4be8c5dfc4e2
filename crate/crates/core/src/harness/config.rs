use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bodies::{ConvexBody, Profile};
use crate::densities::BoundaryDensity;
use crate::error::{Error, Result};
use crate::volumetrics::{DEFAULT_BUDGET, MIN_BUDGET};

/// A body as written in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Ball {
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    Ellipsoid {
        semiaxes: Vec<f64>,
        #[serde(default)]
        rotation: Option<Vec<f64>>,
    },
    PerturbedBall {
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
        epsilon: f64,
        profile: Profile,
    },
}

fn one() -> f64 {
    1.0
}

impl BodySpec {
    pub fn build(&self) -> Result<ConvexBody> {
        match self {
            BodySpec::Ball { dim, radius } => ConvexBody::ball(*dim, *radius),
            BodySpec::Ellipsoid { semiaxes, rotation } => match rotation {
                None => ConvexBody::ellipsoid(semiaxes.clone()),
                Some(r) => ConvexBody::rotated_ellipsoid(semiaxes.clone(), r.clone()),
            },
            BodySpec::PerturbedBall {
                dim,
                radius,
                epsilon,
                profile,
            } => ConvexBody::perturbed_ball(*dim, *radius, *epsilon, *profile),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            BodySpec::Ball { dim, .. } | BodySpec::PerturbedBall { dim, .. } => *dim,
            BodySpec::Ellipsoid { semiaxes, .. } => semiaxes.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedDensity {
    Uniform,
    Affine,
}

/// A density as written in a config file: `"uniform"`, `"affine"`,
/// `{"alpha": a, "beta": b}` or `{"p": p}` for the p-affine pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensitySpec {
    Named(NamedDensity),
    AlphaBeta(AlphaBetaSpec),
    PAffine(PAffineSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaBetaSpec {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PAffineSpec {
    pub p: f64,
}

impl DensitySpec {
    pub fn build(&self, n: usize) -> BoundaryDensity {
        match *self {
            DensitySpec::Named(NamedDensity::Uniform) => BoundaryDensity::Uniform,
            DensitySpec::Named(NamedDensity::Affine) => BoundaryDensity::AffineSurfaceArea,
            DensitySpec::AlphaBeta(AlphaBetaSpec { alpha, beta }) => {
                BoundaryDensity::AlphaBeta { alpha, beta }
            }
            DensitySpec::PAffine(PAffineSpec { p }) => BoundaryDensity::p_affine(n, p),
        }
    }
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

/// One experiment: a body, a density, an increasing list of point counts and
/// the number of replications at each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub body: BodySpec,
    pub density: DensitySpec,
    /// Densities for the comparison run; `density` alone when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub densities: Option<Vec<DensitySpec>>,
    #[serde(rename = "N_list")]
    pub n_list: Vec<usize>,
    pub reps: usize,
    #[serde(default = "default_budget")]
    pub mc_budget: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.body.dim();
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_list.is_empty() {
            return bad("N_list is empty".into());
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("N_list {:?} is not strictly increasing", self.n_list));
        }
        if self.n_list[0] < n + 1 {
            return bad(format!("N = {} cannot span a polytope in dimension {n}", self.n_list[0]));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.mc_budget < MIN_BUDGET {
            return bad(format!("mc_budget {} below {MIN_BUDGET}", self.mc_budget));
        }
        if matches!(&self.densities, Some(d) if d.is_empty()) {
            return bad("densities list is empty".into());
        }
        Ok(())
    }

    pub fn comparison_densities(&self) -> Vec<DensitySpec> {
        self.densities.clone().unwrap_or_else(|| vec![self.density])
    }
}
