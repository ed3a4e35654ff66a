//! Ingredients of the vanishing of `P_x[Y_t ∈ D_R]` at infinity: harmonic
//! measure convergence on large circles and the decay of the running
//! supremum probability `g`.

mod poisson;
mod scan;

pub use poisson::{harmonic_tv_distance, poisson_density, tv_at_ratio, CircleMeasure, CIRCLE_NODES};
pub use scan::{
    aggregate_scan, feller_scan_field, gaussian_disk_probability, gaussian_running_sup_bounds, rotation_test,
    DecayPoint, FellerScan, FellerScanConfig, FieldPoint, RotationCheck, EXCURSION_LIMIT,
};
