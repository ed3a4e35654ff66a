//! Circulant-embedding sampler for the stationary layers `η_k` and the
//! cumulative field `X_n`.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::kernel::{CovarianceTable, KernelSpec, LayerSchedule};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point};
use crate::rng::{StreamTag, Substream};

/// Relative negative spectral mass that is clipped silently.
pub const NEGATIVE_MASS_TOLERANCE: f64 = 1e-8;

/// Largest torus side tried before giving up on an exact embedding.
const MAX_PADDING: usize = 4;

/// How a layer was sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerMode {
    /// Exact circulant embedding (negative mass below tolerance, clipped).
    Exact,
    /// Negative eigenvalues clipped and the spectrum rescaled to preserve the
    /// point variance; covariances at long lags are approximate.
    SpectralTruncation,
}

/// Two-dimensional complex FFT on a `px × py` row-major buffer.
struct Fft2 {
    px: usize,
    py: usize,
    row: Arc<dyn Fft<f64>>,
    col: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(px: usize, py: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            px,
            py,
            row: planner.plan_fft_forward(px),
            col: planner.plan_fft_forward(py),
        }
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.row.process(data);
        let mut column = vec![Complex64::default(); self.py];
        for i in 0..self.px {
            for (j, c) in column.iter_mut().enumerate() {
                *c = data[j * self.px + i];
            }
            self.col.process(&mut column);
            for (j, c) in column.iter().enumerate() {
                data[j * self.px + i] = *c;
            }
        }
    }
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{})", self.px, self.py)
    }
}

/// Precomputed square-root spectrum of one layer on one geometry.
#[derive(Debug)]
pub struct LayerEmbedding {
    pub k: usize,
    pub geometry: Geometry,
    pub mode: SamplerMode,
    /// Relative negative spectral mass before clipping.
    pub negative_mass: f64,
    /// Point variance of the sampled field.
    pub variance: f64,
    amplitude: Vec<f64>,
    fft: Fft2,
}

impl LayerEmbedding {
    pub fn new(spec: &KernelSpec, schedule: &LayerSchedule, k: usize, geometry: &Geometry) -> Result<Self> {
        geometry.validate()?;
        let (lo, hi) = schedule.bounds(k)?;
        let table = CovarianceTable::global();
        let cov = |r: f64| table.layer_covariance(spec.mass, lo, hi, r);
        let mut best: Option<(usize, usize, Vec<f64>, f64)> = None;
        for pad in 1..=MAX_PADDING {
            let px = smooth_size(2 * pad * (geometry.nx - 1));
            let py = smooth_size(2 * pad * (geometry.ny - 1));
            let (lambda, negative) = embedding_spectrum(px, py, geometry.h, &cov);
            let done = negative <= NEGATIVE_MASS_TOLERANCE;
            if best.as_ref().is_none_or(|b| negative < b.3) {
                best = Some((px, py, lambda, negative));
            }
            if done {
                break;
            }
        }
        let (px, py, mut lambda, negative) = best.expect("at least one embedding tried");
        let mode = if negative <= NEGATIVE_MASS_TOLERANCE {
            SamplerMode::Exact
        } else {
            SamplerMode::SpectralTruncation
        };
        let total: f64 = lambda.iter().sum();
        for l in lambda.iter_mut() {
            *l = l.max(0.0);
        }
        if mode == SamplerMode::SpectralTruncation {
            let kept: f64 = lambda.iter().sum();
            let scale = total / kept;
            for l in lambda.iter_mut() {
                *l *= scale;
            }
        }
        let cells = (px * py) as f64;
        let amplitude = lambda.iter().map(|l| (l / cells).sqrt()).collect();
        Ok(Self {
            k,
            geometry: *geometry,
            mode,
            negative_mass: negative,
            variance: cov(0.0),
            amplitude,
            fft: Fft2::new(px, py),
        })
    }

    /// Torus dimensions of the embedding.
    pub fn torus(&self) -> (usize, usize) {
        (self.fft.px, self.fft.py)
    }

    /// One draw using the given generator.
    pub fn sample_with(&self, rng: &mut Substream) -> Vec<f64> {
        let mut buf: Vec<Complex64> = self
            .amplitude
            .iter()
            .map(|a| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(a * re, a * im)
            })
            .collect();
        self.fft.forward(&mut buf);
        let g = &self.geometry;
        let mut out = Vec::with_capacity(g.len());
        for j in 0..g.ny {
            out.extend(buf[j * self.fft.px..j * self.fft.px + g.nx].iter().map(|c| c.re));
        }
        out
    }

    /// The draw for replica `replica` under master seed `master`.
    pub fn sample(&self, master: u64, replica: u32) -> Vec<f64> {
        let mut rng = Substream::new(master, StreamTag::Field, replica, self.k as u32);
        self.sample_with(&mut rng)
    }
}

/// Smallest `n' >= n` whose prime factors are 2, 3 and 5 (fast FFT sizes).
fn smooth_size(n: usize) -> usize {
    (n.max(2)..)
        .find(|&c| {
            let mut c = c;
            for p in [2, 3, 5] {
                while c % p == 0 {
                    c /= p;
                }
            }
            c == 1
        })
        .expect("5-smooth numbers are unbounded")
}

/// Eigenvalues of the even periodic extension of `cov` on a `px × py` torus,
/// with the relative negative mass `Σ|λ⁻| / Σ|λ|`.
fn embedding_spectrum(px: usize, py: usize, h: f64, cov: &dyn Fn(f64) -> f64) -> (Vec<f64>, f64) {
    let mut data = vec![Complex64::default(); px * py];
    for j in 0..py {
        let dy = j.min(py - j) as f64;
        for i in 0..px {
            let dx = i.min(px - i) as f64;
            data[j * px + i] = Complex64::new(cov(h * dx.hypot(dy)), 0.0);
        }
    }
    Fft2::new(px, py).forward(&mut data);
    let lambda: Vec<f64> = data.iter().map(|c| c.re).collect();
    let abs: f64 = lambda.iter().map(|l| l.abs()).sum();
    let neg: f64 = lambda.iter().filter(|l| **l < 0.0).map(|l| -l).sum();
    (lambda, if abs > 0.0 { neg / abs } else { 0.0 })
}

/// One sampled layer with its bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSample {
    pub k: usize,
    pub geometry: Geometry,
    pub values: Vec<f64>,
    pub variance: f64,
    pub mode: SamplerMode,
}

/// Draw layer `k` for replica `replica`; deterministic in
/// `(master, replica, k, geometry)`.
pub fn sample_layer(
    spec: &KernelSpec,
    schedule: &LayerSchedule,
    k: usize,
    geometry: &Geometry,
    master: u64,
    replica: u32,
) -> Result<LayerSample> {
    let emb = LayerEmbedding::new(spec, schedule, k, geometry)?;
    Ok(LayerSample {
        k,
        geometry: *geometry,
        values: emb.sample(master, replica),
        variance: emb.variance,
        mode: emb.mode,
    })
}

/// The substream coordinates a field was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSource {
    pub master: u64,
    pub replica: u32,
}

/// Sampled layers `η_1..η_n` and the cumulative field `X_n` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub geometry: Geometry,
    pub source: Option<FieldSource>,
    /// Per-layer node values; may be empty for fields built from `X_n` alone.
    pub layers: Vec<Vec<f64>>,
    /// Per-layer point variances `σ_k²`.
    pub variances: Vec<f64>,
    /// `X_n` at the nodes.
    pub cumulative: Vec<f64>,
    /// Point variance of `X_n`, `Σ σ_k² = log c_n`.
    pub variance: f64,
    pub modes: Vec<SamplerMode>,
}

impl FieldGrid {
    /// A constant field `X ≡ value` whose nominal variance is `variance`.
    pub fn constant(geometry: Geometry, value: f64, variance: f64) -> Self {
        Self {
            geometry,
            source: None,
            layers: Vec::new(),
            variances: vec![variance],
            cumulative: vec![value; geometry.len()],
            variance,
            modes: vec![SamplerMode::Exact],
        }
    }

    /// A field given by its node values with nominal variance `variance`.
    pub fn from_values(geometry: Geometry, values: Vec<f64>, variance: f64) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::GeometryMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                geometry.len()
            )));
        }
        Ok(Self {
            geometry,
            source: None,
            layers: Vec::new(),
            variances: vec![variance],
            cumulative: values,
            variance,
            modes: vec![SamplerMode::Exact],
        })
    }

    pub fn n_layers(&self) -> usize {
        self.variances.len()
    }

    /// `X_n` at `p` by bilinear interpolation between nodes.
    pub fn value_at(&self, p: Point) -> Option<f64> {
        self.geometry.bilinear(&self.cumulative, p)
    }

    /// Whether every layer used the exact embedding.
    pub fn is_exact(&self) -> bool {
        self.modes.iter().all(|m| *m == SamplerMode::Exact)
    }

    /// Add `c` to every node of `X_n`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.cumulative.iter_mut().for_each(|v| *v += c);
        out
    }
}

/// `X_n = Σ_{k ≤ n} η_k` nodewise.
pub fn accumulate_field(layers: Vec<LayerSample>) -> Result<FieldGrid> {
    let first = layers
        .first()
        .ok_or_else(|| Error::InvalidArgument("no layers to accumulate".into()))?;
    let geometry = first.geometry;
    let mut cumulative = vec![0.0; geometry.len()];
    let mut variances = Vec::with_capacity(layers.len());
    let mut modes = Vec::with_capacity(layers.len());
    for layer in &layers {
        if layer.geometry != geometry || layer.values.len() != geometry.len() {
            return Err(Error::GeometryMismatch(format!(
                "layer {} lives on {}, expected {}",
                layer.k,
                layer.geometry.describe(),
                geometry.describe()
            )));
        }
        for (c, v) in cumulative.iter_mut().zip(&layer.values) {
            *c += v;
        }
        variances.push(layer.variance);
        modes.push(layer.mode);
    }
    let variance = variances.iter().sum();
    Ok(FieldGrid {
        geometry,
        source: None,
        layers: layers.into_iter().map(|l| l.values).collect(),
        variances,
        cumulative,
        variance,
        modes,
    })
}

/// Embeddings for every layer of a schedule on one geometry, reusable across
/// replicas.
#[derive(Debug)]
pub struct FieldSampler {
    pub spec: KernelSpec,
    pub schedule: LayerSchedule,
    pub geometry: Geometry,
    embeddings: Vec<LayerEmbedding>,
    warnings: Vec<String>,
}

impl FieldSampler {
    pub fn new(spec: KernelSpec, schedule: LayerSchedule, geometry: Geometry) -> Result<Self> {
        let embeddings = (1..=schedule.layers())
            .map(|k| LayerEmbedding::new(&spec, &schedule, k, &geometry))
            .collect::<Result<Vec<_>>>()?;
        let mut warnings = Vec::new();
        let finest = 1.0 / (spec.mass * schedule.cutoff(schedule.layers()));
        if finest < 2.0 * geometry.h {
            warnings.push(format!(
                "finest correlation length {finest:.4} is below 2h = {:.4}; refine the grid or drop layers",
                2.0 * geometry.h
            ));
        }
        let side = (geometry.nx.min(geometry.ny) as f64) * geometry.h;
        if side < 2.0 / spec.mass {
            warnings.push(format!(
                "grid side {side:.3} is shorter than twice the coarsest correlation length {:.3}",
                1.0 / spec.mass
            ));
        }
        for e in &embeddings {
            if e.mode == SamplerMode::SpectralTruncation {
                warnings.push(format!(
                    "layer {} fell back to spectral truncation (negative mass {:.2e})",
                    e.k, e.negative_mass
                ));
            }
        }
        Ok(Self {
            spec,
            schedule,
            geometry,
            embeddings,
            warnings,
        })
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn embedding(&self, k: usize) -> &LayerEmbedding {
        &self.embeddings[k - 1]
    }

    pub fn layer(&self, k: usize, master: u64, replica: u32) -> LayerSample {
        let e = self.embedding(k);
        LayerSample {
            k,
            geometry: self.geometry,
            values: e.sample(master, replica),
            variance: e.variance,
            mode: e.mode,
        }
    }

    /// All layers of replica `replica`, accumulated.
    pub fn sample(&self, master: u64, replica: u32) -> FieldGrid {
        let layers = (1..=self.schedule.layers())
            .map(|k| self.layer(k, master, replica))
            .collect();
        let mut field = accumulate_field(layers).expect("layers share the sampler geometry");
        field.source = Some(FieldSource { master, replica });
        field
    }

    /// Only `X_n`, without keeping per-layer arrays.
    pub fn sample_cumulative(&self, master: u64, replica: u32) -> FieldGrid {
        let mut field = self.sample(master, replica);
        field.layers.clear();
        field
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_field::kernel::layer_covariance;

    fn setup() -> (KernelSpec, LayerSchedule, Geometry) {
        (
            KernelSpec::new(1.0).unwrap(),
            LayerSchedule::dyadic(3).unwrap(),
            Geometry::centered(1.0, 24).unwrap(),
        )
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(510), 512);
        assert_eq!(smooth_size(1530), 1536);
        assert_eq!(smooth_size(14), 15);
    }

    #[test]
    fn deterministic_given_seed() {
        let (spec, schedule, g) = setup();
        let a = sample_layer(&spec, &schedule, 2, &g, 11, 4).unwrap();
        let b = sample_layer(&spec, &schedule, 2, &g, 11, 4).unwrap();
        assert_eq!(a.values, b.values);
        let c = sample_layer(&spec, &schedule, 2, &g, 11, 5).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn embedding_is_exact_for_smooth_layers() {
        let (spec, schedule, g) = setup();
        for k in 1..=3 {
            let e = LayerEmbedding::new(&spec, &schedule, k, &g).unwrap();
            assert_eq!(e.mode, SamplerMode::Exact, "layer {k}: {}", e.negative_mass);
        }
    }

    #[test]
    fn accumulate_sums_layers_and_variances() {
        let (spec, schedule, g) = setup();
        let sampler = FieldSampler::new(spec, schedule.clone(), g).unwrap();
        let f = sampler.sample(3, 0);
        for idx in [0, 17, g.len() - 1] {
            let s: f64 = f.layers.iter().map(|l| l[idx]).sum();
            assert!((s - f.cumulative[idx]).abs() < 1e-12);
        }
        assert!((f.variance - schedule.cumulative_variance(3)).abs() < 1e-10);
        let single = accumulate_field(vec![sampler.layer(1, 3, 0)]).unwrap();
        assert_eq!(single.cumulative, f.layers[0]);
    }

    #[test]
    fn mismatched_geometry_is_rejected() {
        let (spec, schedule, g) = setup();
        let other = Geometry::centered(1.0, 20).unwrap();
        let a = sample_layer(&spec, &schedule, 1, &g, 1, 0).unwrap();
        let b = sample_layer(&spec, &schedule, 2, &other, 1, 0).unwrap();
        assert!(matches!(accumulate_field(vec![a, b]), Err(Error::GeometryMismatch(_))));
    }

    #[test]
    fn point_variance_matches_layer_covariance() {
        let (spec, schedule, g) = setup();
        let e = LayerEmbedding::new(&spec, &schedule, 1, &g).unwrap();
        let exact = layer_covariance(&spec, &schedule, 1, 0.0).unwrap();
        assert!((e.variance - exact).abs() < 1e-10);
    }
}
