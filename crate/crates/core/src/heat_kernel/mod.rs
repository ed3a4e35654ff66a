//! The Liouville heat kernel on a killed domain: the discrete generator,
//! spectral and Monte Carlo kernels, principal eigenvalue, Green operator and
//! the on- and off-diagonal profiles.

mod generator;
mod montecarlo;
mod profiles;
mod solve;
mod spectral;

pub use generator::{assemble_generator, DiscreteGenerator, CONDUCTANCE};
pub use montecarlo::{
    cross_validate, hk_montecarlo, lbm_endpoints, spectral_blocks, BlockPartition, CrossCheck,
    HeatKernelEstimate, KernelMethod, WIDE_COUNT,
};
pub use profiles::{
    offdiag_tail_fit, ondiag_profile, radial_profile, stretch_summary, OnDiagProfile, ProbeSet,
    RadialProfile, StretchSummary,
};
pub use solve::{
    green_one, green_operator_sup, lambda1, lambda1_and_faber_krahn, solve_stiffness, FaberKrahn,
    GreenReport, GreenSolution, PrincipalEigen, CG_TOLERANCE, EIGEN_TOLERANCE,
};
pub use spectral::{
    chapman_kolmogorov_residual, diagonal, hk_spectral, kernel_rows, Eigenbasis, KernelRow,
    KernelValue, DENSE_LIMIT, KRYLOV_TOLERANCE, TRUNCATION_LIMIT,
};
