//! On-diagonal growth and off-diagonal decay of the killed heat kernel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generator::DiscreteGenerator;
use super::spectral::{diagonal, KernelRow};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::stats::{t_quantile_975, MeanEstimate, ScalingFit};

/// Vertices at which the diagonal is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeSet {
    All,
    /// Cells whose grid coordinates are both multiples of the stride.
    Stride(usize),
    Vertices(Vec<usize>),
}

impl ProbeSet {
    pub fn vertices(&self, gen: &DiscreteGenerator) -> Vec<usize> {
        match self {
            ProbeSet::All => (0..gen.len()).collect(),
            ProbeSet::Stride(s) => {
                let s = (*s).max(1);
                (0..gen.len())
                    .filter(|&v| {
                        let (i, j) = gen.geometry().coords(gen.cells()[v]);
                        i % s == 0 && j % s == 0
                    })
                    .collect()
            }
            ProbeSet::Vertices(v) => v.clone(),
        }
    }
}

/// `sup_x p_t(x, x)` over the probes for each `t`, and the normalized
/// curve `p t / log(1/t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnDiagProfile {
    pub t: Vec<f64>,
    pub sup: Vec<f64>,
    pub argmax: Vec<Point>,
    pub error: Vec<f64>,
    pub normalized: Vec<f64>,
    /// `max / min` of the normalized curve.
    pub ratio: f64,
    pub probes: usize,
}

pub fn ondiag_profile(gen: &DiscreteGenerator, ts: &[f64], probes: &ProbeSet, tol: f64) -> Result<OnDiagProfile> {
    if ts.is_empty() || ts.iter().any(|&t| !(t > 0.0 && t <= 0.5)) {
        return Err(Error::InvalidArgument("on-diagonal times must lie in (0, 1/2]".into()));
    }
    let vs = probes.vertices(gen);
    if vs.is_empty() {
        return Err(Error::InvalidArgument("no probe vertices in the domain".into()));
    }
    let diags: Vec<_> = vs
        .par_iter()
        .map(|&v| diagonal(gen, v, ts, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut sup = vec![f64::NEG_INFINITY; ts.len()];
    let mut argmax = vec![Point::ORIGIN; ts.len()];
    let mut error = vec![0.0; ts.len()];
    for (d, &v) in diags.iter().zip(&vs) {
        for k in 0..ts.len() {
            if d[k].value > sup[k] {
                sup[k] = d[k].value;
                argmax[k] = gen.center(v);
                error[k] = d[k].truncation;
            }
        }
    }
    let normalized: Vec<f64> = ts.iter().zip(&sup).map(|(t, p)| p * t / (1.0 / t).ln()).collect();
    let max = normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = normalized.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(OnDiagProfile {
        t: ts.to_vec(),
        sup,
        argmax,
        error,
        normalized,
        ratio: max / min,
        probes: vs.len(),
    })
}

/// Mass-weighted ring averages of a kernel row around its source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub t: f64,
    pub distances: Vec<f64>,
    pub values: Vec<f64>,
    /// `max_y p_t(x, y)`.
    pub peak: f64,
}

/// Average `p_t(x, y)` against `M` over the rings `| |y − x| − d | ≤ width/2`.
pub fn radial_profile(gen: &DiscreteGenerator, row: &KernelRow, distances: &[f64], width: f64) -> Result<RadialProfile> {
    let x = gen.center(row.source);
    let masses = gen.masses();
    let values = distances
        .iter()
        .map(|&d| {
            let (mut num, mut den) = (0.0, 0.0);
            for v in 0..gen.len() {
                if (gen.center(v).dist(x) - d).abs() <= 0.5 * width {
                    num += row.values[v] * masses[v];
                    den += masses[v];
                }
            }
            if den > 0.0 {
                Ok(num / den)
            } else {
                Err(Error::InsufficientData(format!("no domain cells at distance {d}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RadialProfile {
        t: row.t,
        distances: distances.to_vec(),
        values,
        peak: row.values.iter().copied().fold(0.0, f64::max),
    })
}

/// Fit of `log(−log(p_t(x, y) / max_y p_t(x, y)))` against `log |x − y|`; the slope
/// estimates the stretch exponent `β / (β − 1)`.
pub fn offdiag_tail_fit(profile: &RadialProfile, floor: f64) -> Result<ScalingFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&d, &p) in profile.distances.iter().zip(&profile.values) {
        let ratio = p / profile.peak;
        if p > floor && ratio > 0.0 && ratio < 1.0 {
            x.push(d.ln());
            y.push((-ratio.ln()).ln());
        }
    }
    if x.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} usable distances above the floor, need 4",
            x.len()
        )));
    }
    let n = x.len();
    ScalingFit::ols(&x, &y, vec![1; n])
}

/// Field-ensemble summary of off-diagonal fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchSummary {
    pub slope: MeanEstimate,
    /// One-sided 95% lower confidence bound on the mean slope.
    pub lower95: f64,
    pub mean_profile: Vec<MeanEstimate>,
    /// Distances where the ensemble-mean profile increases by more than
    /// three standard errors.
    pub monotonicity_violations: Vec<f64>,
}

pub fn stretch_summary(fits: &[ScalingFit], profiles: &[RadialProfile]) -> Result<StretchSummary> {
    if fits.len() < 2 {
        return Err(Error::InsufficientData("need at least two fields".into()));
    }
    let slopes: Vec<f64> = fits.iter().map(|f| f.slope).collect();
    let slope = MeanEstimate::from_samples(&slopes);
    // one-sided 95% uses the two-sided 90% quantile; the 97.5% quantile is
    // the conservative stand-in
    let lower95 = slope.mean - t_quantile_975(slope.n - 1) * slope.std_err;
    let k = profiles.first().map_or(0, |p| p.distances.len());
    let mean_profile: Vec<MeanEstimate> = (0..k)
        .map(|i| MeanEstimate::from_samples(&profiles.iter().map(|p| p.values[i] / p.peak).collect::<Vec<_>>()))
        .collect();
    let monotonicity_violations = mean_profile
        .windows(2)
        .zip(profiles.first().map_or(&[][..], |p| &p.distances[1..]))
        .filter(|(w, _)| {
            let se = (w[0].std_err.powi(2) + w[1].std_err.powi(2)).sqrt();
            w[1].mean - w[0].mean > 3.0 * se
        })
        .map(|(_, &d)| d)
        .collect();
    Ok(StretchSummary {
        slope,
        lower95,
        mean_profile,
        monotonicity_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_profile_has_slope_two() {
        let t: f64 = 0.05;
        let distances: Vec<f64> = (0..6).map(|k| (3.0 + 0.3 * k as f64) * t.sqrt()).collect();
        let peak = 1.0 / (2.0 * std::f64::consts::PI * t);
        let profile = RadialProfile {
            t,
            values: distances.iter().map(|d| peak * (-d * d / (2.0 * t)).exp()).collect(),
            distances,
            peak,
        };
        let fit = offdiag_tail_fit(&profile, 1e-300).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-10);
    }

    #[test]
    fn too_few_distances() {
        let p = RadialProfile {
            t: 0.1,
            distances: vec![0.5, 0.6, 0.7],
            values: vec![0.1, 0.05, 0.01],
            peak: 1.0,
        };
        assert!(matches!(offdiag_tail_fit(&p, 0.0), Err(Error::InsufficientData(_))));
    }
}
