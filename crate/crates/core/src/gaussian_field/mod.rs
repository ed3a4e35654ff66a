//! Covariance kernels of the layered massive free field and samplers for the
//! layers `η_k` and the cumulative field `X_n = η_1 + … + η_n`.

mod kernel;
mod sampler;

pub use kernel::{
    green_function, kernel_km, layer_covariance, layer_tail, CovarianceTable, KernelSpec,
    LayerSchedule, S_MAX_BASE, S_MIN,
};
pub use sampler::{
    accumulate_field, sample_layer, FieldGrid, FieldSource, FieldSampler, LayerEmbedding, LayerSample,
    SamplerMode, NEGATIVE_MASS_TOLERANCE,
};
