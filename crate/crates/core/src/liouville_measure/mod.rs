//! The regularized Liouville measure on grid cells, its exponent formulas and
//! the measure-side estimators.

mod estimators;
mod measure;
mod spectrum;

pub use estimators::{
    dyadic_square_masses, fit_moment_scaling, holder_scaling, holder_statistic,
    holder_statistic_in, moment_scaling_estimate, placement_moments, scaled_set_masses,
    HolderMode, ScaledSet, HOLDER_HALF_WIDTH,
};
pub use measure::{ball_mass, build_measure, MeasureGrid};
pub use spectrum::SpectrumParams;
