//! Exit-moment, exit-tail and running-supremum estimators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::exit::{ExitSample, LbmRun};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::liouville_measure::SpectrumParams;
use crate::rng::Substream;
use crate::stats::{MeanEstimate, ScalingFit};

/// Largest tolerated censored fraction in exit-moment campaigns.
pub const CENSORING_LIMIT: f64 = 0.01;

/// Exponent bookkeeping for the exit-time and off-diagonal bounds: moment
/// order `q > 0`, Hölder exponent `p > 1` (with `p' = p / (p − 1)`), moment
/// exponent `κ > p (2 + ξ̃(q))` and stretch exponent `β > κ / q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentParams {
    pub spectrum: SpectrumParams,
    pub q: f64,
    pub p: f64,
    pub kappa: f64,
    pub beta: f64,
}

impl ExponentParams {
    pub fn new(spectrum: SpectrumParams, q: f64, p: f64, kappa: f64, beta: f64) -> Result<Self> {
        let s = Self {
            spectrum,
            q,
            p,
            kappa,
            beta,
        };
        if !(q > 0.0) {
            return Err(Error::Domain {
                quantity: "q",
                value: q,
                expected: "q > 0".into(),
            });
        }
        if !(p > 1.0) {
            return Err(Error::Domain {
                quantity: "p",
                value: p,
                expected: "p > 1".into(),
            });
        }
        if !(kappa > s.kappa_min()) {
            return Err(Error::Domain {
                quantity: "kappa",
                value: kappa,
                expected: format!("kappa > p (2 + xi~(q)) = {}", s.kappa_min()),
            });
        }
        if !(beta > kappa / q) {
            return Err(Error::Domain {
                quantity: "beta",
                value: beta,
                expected: format!("beta > kappa / q = {}", kappa / q),
            });
        }
        Ok(s)
    }

    /// The smallest admissible parameters scaled by `1 + slack`.
    pub fn minimal(spectrum: SpectrumParams, q: f64, p: f64, slack: f64) -> Result<Self> {
        let kappa = p * (2.0 + spectrum.xi_tilde(q)) * (1.0 + slack);
        let beta = kappa / q * (1.0 + slack);
        Self::new(spectrum, q, p, kappa, beta)
    }

    /// `p' = p / (p − 1)`.
    pub fn p_conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `p (2 + ξ̃(q))`.
    pub fn kappa_min(&self) -> f64 {
        self.p * (2.0 + self.spectrum.xi_tilde(self.q))
    }

    /// Exponent `1 / (β − 1)` of the stretched-exponential exit tail in `1/t`.
    pub fn tail_exponent(&self) -> f64 {
        1.0 / (self.beta - 1.0)
    }

    /// Exponent `β / (β − 1)` of the off-diagonal decay in distance.
    pub fn offdiag_exponent(&self) -> f64 {
        self.beta / (self.beta - 1.0)
    }

    /// Growth exponent `2p'` of the random constant in the moment bound.
    pub fn moment_growth(&self) -> f64 {
        2.0 * self.p_conjugate()
    }
}

/// Where exit-moment paths start relative to the ball center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum StartRule {
    Center,
    /// Uniform on the concentric circle of radius `fraction · r`.
    UniformOnCircle { fraction: f64 },
}

impl Default for StartRule {
    fn default() -> Self {
        StartRule::UniformOnCircle { fraction: 0.5 }
    }
}

impl StartRule {
    pub fn start(&self, center: Point, r: f64, rng: &mut Substream) -> Point {
        match *self {
            StartRule::Center => center,
            StartRule::UniformOnCircle { fraction } => {
                let theta = rng.random_range(0.0..std::f64::consts::TAU);
                center + Point::polar(fraction * r, theta)
            }
        }
    }
}

fn samples_at(samples: &[ExitSample], r: f64) -> Vec<&ExitSample> {
    samples.iter().filter(|s| s.radius == r).collect()
}

/// Mean of `τ^{−q}` at radius `r` over uncensored samples, with the censored
/// fraction.
pub fn inverse_moment(samples: &[ExitSample], q: f64, r: f64) -> Result<(MeanEstimate, f64)> {
    let at = samples_at(samples, r);
    if at.is_empty() {
        return Err(Error::InsufficientData(format!("no exit samples at radius {r}")));
    }
    let censored = at.iter().filter(|s| s.censored).count();
    let fraction = censored as f64 / at.len() as f64;
    let values: Vec<f64> = at
        .iter()
        .filter(|s| !s.censored)
        .map(|s| s.tau.powf(-q))
        .collect();
    Ok((MeanEstimate::from_samples(&values), fraction))
}

/// Log-log fit of the ensemble mean of `τ_{x,r}^{−q}` against `r`.
///
/// Censored samples are excluded; a censored fraction at or above 1% at any
/// radius is an error asking for a longer horizon.
pub fn exit_moment_estimate(samples: &[ExitSample], q: f64, radii: &[f64]) -> Result<ScalingFit> {
    if !(q > 0.0) {
        return Err(Error::Domain {
            quantity: "q",
            value: q,
            expected: "q > 0".into(),
        });
    }
    if radii.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return Err(Error::InvalidArgument("exit-moment radii must lie in (0, 1]".into()));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut sigma = Vec::new();
    let mut sizes = Vec::new();
    let mut warnings = Vec::new();
    for &r in radii {
        let (est, fraction) = inverse_moment(samples, q, r)?;
        if fraction >= CENSORING_LIMIT {
            return Err(Error::Censoring {
                fraction,
                limit: CENSORING_LIMIT,
            });
        }
        if fraction > 0.0 {
            warnings.push(format!("radius {r}: censored fraction {fraction:.4} excluded"));
        }
        x.push(r.ln());
        y.push(est.mean.ln());
        sigma.push((est.std_err / est.mean).max(1e-12));
        sizes.push(est.n);
    }
    let mut fit = ScalingFit::weighted(&x, &y, Some(&sigma), sizes)?;
    fit.warnings = warnings;
    Ok(fit)
}

/// Empirical exit-time distribution `P[τ ≤ t]` on a grid of `t`, with a
/// stretched-exponential fit of `log(−log P)` against `log(1/t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCurve {
    pub radius: f64,
    pub t: Vec<f64>,
    pub probability: Vec<f64>,
    pub counts: Vec<usize>,
    pub n: usize,
    pub monotone: bool,
    pub fit: Option<ScalingFit>,
    /// One-sided 95% upper bound `3 / n` at the smallest `t` when no exit
    /// was observed there.
    pub zero_count_bound: Option<f64>,
}

/// `P[τ_{x,r} ≤ t]` for each `t` in `t_grid` from samples at radius `r`.
///
/// Censored samples count as `τ > t`, which is exact as long as every `t`
/// stays below the sample's clock total; `t_grid` must respect that.
pub fn exit_tail_estimate(samples: &[ExitSample], r: f64, t_grid: &[f64]) -> Result<TailCurve> {
    let at = samples_at(samples, r);
    if at.is_empty() {
        return Err(Error::InsufficientData(format!("no exit samples at radius {r}")));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.first().is_some_and(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("t-grid must be positive and increasing".into()));
    }
    if let Some(s) = at.iter().find(|s| s.censored && s.tau < *t_grid.last().unwrap_or(&0.0)) {
        return Err(Error::HorizonExceeded {
            requested: *t_grid.last().unwrap_or(&0.0),
            available: s.tau,
        });
    }
    let n = at.len();
    let counts: Vec<usize> = t_grid
        .iter()
        .map(|&t| at.iter().filter(|s| !s.censored && s.tau <= t).count())
        .collect();
    let probability: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let monotone = probability.windows(2).all(|w| w[1] >= w[0]);
    let zero_count_bound = (counts.first() == Some(&0)).then(|| 3.0 / n as f64);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut sigma = Vec::new();
    let mut sizes = Vec::new();
    for ((&t, &p), &c) in t_grid.iter().zip(&probability).zip(&counts) {
        if c > 0 && c < n {
            x.push((1.0 / t).ln());
            y.push((-p.ln()).ln());
            sigma.push((p * (1.0 - p) / n as f64).sqrt() / (p * p.ln()).abs());
            sizes.push(c);
        }
    }
    let fit = if x.len() >= 3 {
        Some(ScalingFit::weighted(&x, &y, Some(&sigma), sizes)?)
    } else {
        None
    };
    Ok(TailCurve {
        radius: r,
        t: t_grid.to_vec(),
        probability,
        counts,
        n,
        monotone,
        fit,
        zero_count_bound,
    })
}

/// Mean of `τ^{−q}` per radius over a field ensemble: each field's mean of
/// its uncensored samples, then the mean and standard error across fields.
/// The fit follows [`exit_moment_estimate`].
pub fn exit_moment_ensemble(per_field: &[Vec<ExitSample>], q: f64, radii: &[f64]) -> Result<ScalingFit> {
    if per_field.len() < 2 {
        let flat: Vec<ExitSample> = per_field.iter().flatten().copied().collect();
        return exit_moment_estimate(&flat, q, radii);
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut sigma = Vec::new();
    let mut sizes = Vec::new();
    let mut warnings = Vec::new();
    for &r in radii {
        let mut means = Vec::with_capacity(per_field.len());
        let (mut censored, mut total) = (0.0, 0.0);
        for samples in per_field {
            let (est, fraction) = inverse_moment(samples, q, r)?;
            let n = samples.iter().filter(|s| s.radius == r).count() as f64;
            censored += fraction * n;
            total += n;
            means.push(est.mean);
        }
        let fraction = censored / total;
        if fraction >= CENSORING_LIMIT {
            return Err(Error::Censoring {
                fraction,
                limit: CENSORING_LIMIT,
            });
        }
        if fraction > 0.0 {
            warnings.push(format!("radius {r}: censored fraction {fraction:.4} excluded"));
        }
        let est = MeanEstimate::from_samples(&means);
        x.push(r.ln());
        y.push(est.mean.ln());
        sigma.push((est.std_err / est.mean).max(1e-12));
        sizes.push(total as usize);
    }
    let mut fit = ScalingFit::weighted(&x, &y, Some(&sigma), sizes)?;
    fit.warnings = warnings;
    Ok(fit)
}

/// Field-averaged `P[τ ≤ t]` with standard errors across fields, and the
/// stretched-exponential fit weighted by the delta-method errors of
/// `log(−log P)`.
pub fn exit_tail_ensemble(per_field: &[Vec<ExitSample>], r: f64, t_grid: &[f64]) -> Result<(TailCurve, Vec<MeanEstimate>)> {
    if per_field.len() < 2 {
        let flat: Vec<ExitSample> = per_field.iter().flatten().copied().collect();
        let c = exit_tail_estimate(&flat, r, t_grid)?;
        let ests = c
            .probability
            .iter()
            .map(|&p| MeanEstimate {
                mean: p,
                std_err: (p * (1.0 - p) / c.n as f64).sqrt(),
                n: c.n,
            })
            .collect();
        return Ok((c, ests));
    }
    let curves = per_field
        .iter()
        .map(|s| exit_tail_estimate(s, r, t_grid))
        .collect::<Result<Vec<_>>>()?;
    let ests: Vec<MeanEstimate> = (0..t_grid.len())
        .map(|k| MeanEstimate::from_samples(&curves.iter().map(|c| c.probability[k]).collect::<Vec<_>>()))
        .collect();
    let n: usize = curves.iter().map(|c| c.n).sum();
    let counts: Vec<usize> = (0..t_grid.len()).map(|k| curves.iter().map(|c| c.counts[k]).sum()).collect();
    let probability: Vec<f64> = ests.iter().map(|e| e.mean).collect();
    let monotone = probability.windows(2).all(|w| w[1] >= w[0]);
    let zero_count_bound = (counts.first() == Some(&0)).then(|| 3.0 / n as f64);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut sigma = Vec::new();
    let mut sizes = Vec::new();
    for ((&t, e), &c) in t_grid.iter().zip(&ests).zip(&counts) {
        let p = e.mean;
        if c > 0 && p < 1.0 && e.std_err > 0.0 {
            x.push((1.0 / t).ln());
            y.push((-p.ln()).ln());
            sigma.push(e.std_err / (p * p.ln()).abs());
            sizes.push(c);
        }
    }
    let fit = if x.len() >= 3 {
        Some(ScalingFit::weighted(&x, &y, Some(&sigma), sizes)?)
    } else {
        None
    };
    Ok((
        TailCurve {
            radius: r,
            t: t_grid.to_vec(),
            probability,
            counts,
            n,
            monotone,
            fit,
            zero_count_bound,
        },
        ests,
    ))
}

/// `g = P[max_{s ≤ t} |Y_s − Y_0| ≥ threshold]` from runs to time `t`.
pub fn running_sup_tail(runs: &[LbmRun], threshold: f64) -> MeanEstimate {
    let hits: Vec<f64> = runs
        .iter()
        .map(|r| if r.max_displacement >= threshold { 1.0 } else { 0.0 })
        .collect();
    MeanEstimate::from_samples(&hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(r: f64, tau: f64, censored: bool) -> ExitSample {
        ExitSample {
            center: Point::ORIGIN,
            radius: r,
            tau,
            brownian_exit: tau,
            exit_position: Point::new(r, 0.0),
            censored,
        }
    }

    #[test]
    fn exact_power_law_recovered() {
        let mut s = Vec::new();
        for r in [0.25, 0.5, 1.0] {
            for k in 1..=10 {
                s.push(sample(r, r * r * (0.5 + 0.1 * k as f64), false));
            }
        }
        let fit = exit_moment_estimate(&s, 1.0, &[0.25, 0.5, 1.0]).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-10);
    }

    #[test]
    fn censoring_above_limit_is_an_error() {
        let mut s: Vec<ExitSample> = (0..50).map(|k| sample(1.0, 0.1 + k as f64 * 0.01, false)).collect();
        s.push(sample(1.0, 5.0, true));
        assert!(matches!(
            exit_moment_estimate(&s, 1.0, &[1.0, 1.0, 1.0]),
            Err(Error::Censoring { .. })
        ));
    }

    #[test]
    fn tail_curve_is_monotone_and_bounded() {
        let s: Vec<ExitSample> = (1..=200).map(|k| sample(1.0, k as f64 * 0.01, false)).collect();
        let c = exit_tail_estimate(&s, 1.0, &[0.005, 0.1, 0.5, 1.0]).unwrap();
        assert!(c.monotone);
        assert_eq!(c.counts, vec![0, 10, 50, 100]);
        assert_eq!(c.zero_count_bound, Some(3.0 / 200.0));
        assert!(c.fit.is_some());
    }

    #[test]
    fn exponent_constraints() {
        let sp = SpectrumParams::new(0.5).unwrap();
        let e = ExponentParams::minimal(sp, 1.0, 2.0, 0.1).unwrap();
        assert!(e.kappa > e.kappa_min() && e.beta > e.kappa / e.q);
        assert!((e.p_conjugate() - 2.0).abs() < 1e-15);
        assert!(e.offdiag_exponent() > 1.0 && e.tail_exponent() > 0.0);
        assert!(ExponentParams::new(sp, 1.0, 2.0, 1.0, 10.0).is_err());
    }
}
