//! Simulation and verification toolkit for Liouville Brownian motion.
//!
//! The crate builds the layered massive Gaussian free field and its Liouville
//! measure on a grid, runs the time-changed Brownian motion on top of it, and
//! provides estimators for measure scaling, exit times, heat kernels and the
//! Feller-type decay of the process.

pub mod error;
pub mod feller;
pub mod gaussian_field;
pub mod geometry;
pub mod harness;
pub mod heat_kernel;
pub mod lbm;
pub mod liouville_measure;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{Geometry, Point};

/// Guide chapters and the README, compiled so their snippets stay current.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../README.md")]
    pub struct Readme;
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/gaussian-field.md")]
    pub struct GaussianField;
    #[doc = include_str!("../../../book/src/liouville-measure.md")]
    pub struct LiouvilleMeasure;
    #[doc = include_str!("../../../book/src/brownian-motion.md")]
    pub struct BrownianMotion;
    #[doc = include_str!("../../../book/src/heat-kernel.md")]
    pub struct HeatKernel;
    #[doc = include_str!("../../../book/src/feller.md")]
    pub struct Feller;
    #[doc = include_str!("../../../book/src/campaigns.md")]
    pub struct Campaigns;
}
