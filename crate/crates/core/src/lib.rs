pub mod bodies;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod sphere;
pub mod densities;
pub mod hull;
pub mod sampler;
pub mod volumetrics;
pub mod functionals;
pub mod validation;
pub mod harness;
