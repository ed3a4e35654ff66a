//! Decay of `P_x[Y_t ∈ D_R]` and of `g(x) = P_x[Y*_t ≥ |x| − R]` as `|x|`
//! grows, with `Y*_t = max_{s ≤ t} |Y_s − Y_0|`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::lbm::{run_lbm_until, ClockIntegrand, LbmOutcome};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::rng::{StreamTag, Substream};
use crate::stats::MeanEstimate;

/// Largest tolerated fraction of paths leaving the grid.
pub const EXCURSION_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FellerScanConfig {
    pub t: f64,
    pub radius: f64,
    pub distances: Vec<f64>,
    /// Starting points are `|x| e^{iθ}` for each angle.
    pub angles: Vec<f64>,
    pub paths: usize,
    pub dt: f64,
    pub horizon: f64,
}

/// Quenched estimates at one starting point on one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub distance: f64,
    pub angle: f64,
    /// Fraction of paths with `Y_t ∈ D_R`.
    pub hit: f64,
    /// Fraction of paths with `Y*_t ≥ |x| − R`.
    pub g: f64,
    pub paths: usize,
    pub excursions: usize,
}

/// Run the scan on one field; path `k` at point `i` uses substream
/// `(master, Path, field, i · paths + k)`.
pub fn feller_scan_field(integrand: ClockIntegrand<'_>, config: &FellerScanConfig, master: u64, field: u32) -> Result<Vec<FieldPoint>> {
    if !(config.t > 0.0 && config.radius > 0.0) || config.paths == 0 || config.angles.is_empty() {
        return Err(Error::InvalidArgument("feller scan needs t > 0, R > 0, paths and angles".into()));
    }
    if let Some(d) = config.distances.iter().find(|&&d| !(d > config.radius)) {
        return Err(Error::InvalidArgument(format!("scan distance {d} must exceed R = {}", config.radius)));
    }
    let mut points = Vec::new();
    for &d in &config.distances {
        for &a in &config.angles {
            points.push((d, a));
        }
    }
    let out: Vec<FieldPoint> = points
        .par_iter()
        .enumerate()
        .map(|(i, &(distance, angle))| {
            let x = Point::polar(distance, angle);
            let mut hits = 0usize;
            let mut gs = 0usize;
            let mut excursions = 0usize;
            for k in 0..config.paths {
                let mut rng = Substream::new(master, StreamTag::Path, field, (i * config.paths + k) as u32);
                match run_lbm_until(integrand, x, config.t, config.dt, config.horizon, None, &mut rng)? {
                    LbmOutcome::Reached(run) => {
                        if run.endpoint.norm() < config.radius {
                            hits += 1;
                        }
                        if run.max_displacement >= distance - config.radius {
                            gs += 1;
                        }
                    }
                    LbmOutcome::LeftField { .. } => excursions += 1,
                    LbmOutcome::Killed { .. } => unreachable!("no killing radius"),
                }
            }
            let n = config.paths - excursions;
            Ok(FieldPoint {
                distance,
                angle,
                hit: if n > 0 { hits as f64 / n as f64 } else { f64::NAN },
                g: if n > 0 { gs as f64 / n as f64 } else { f64::NAN },
                paths: n,
                excursions,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = out.len() * config.paths;
    let violations: usize = out.iter().map(|p| p.excursions).sum();
    if violations as f64 > EXCURSION_LIMIT * total as f64 {
        return Err(Error::Excursion { violations, total });
    }
    Ok(out)
}

/// Field-averaged curve at one distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub distance: f64,
    pub hit: MeanEstimate,
    pub g: MeanEstimate,
    pub n_fields: usize,
    pub n_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FellerScan {
    pub points: Vec<DecayPoint>,
    /// No increase larger than two standard errors between neighbours.
    pub hit_nonincreasing: bool,
    pub g_nonincreasing: bool,
}

fn nonincreasing(v: &[MeanEstimate]) -> bool {
    v.windows(2).all(|w| {
        let se = (w[0].std_err.powi(2) + w[1].std_err.powi(2)).sqrt();
        w[1].mean - w[0].mean <= 2.0 * se
    })
}

/// Average quenched estimates over fields (and angles) at each distance.
pub fn aggregate_scan(per_field: &[Vec<FieldPoint>]) -> Result<FellerScan> {
    let first = per_field.first().ok_or_else(|| Error::InsufficientData("no fields".into()))?;
    let mut distances: Vec<f64> = first.iter().map(|p| p.distance).collect();
    distances.dedup();
    let points: Vec<DecayPoint> = distances
        .iter()
        .map(|&d| {
            let at: Vec<&FieldPoint> = per_field.iter().flatten().filter(|p| p.distance == d).collect();
            let hit: Vec<f64> = at.iter().map(|p| p.hit).collect();
            let g: Vec<f64> = at.iter().map(|p| p.g).collect();
            DecayPoint {
                distance: d,
                hit: MeanEstimate::from_samples(&hit),
                g: MeanEstimate::from_samples(&g),
                n_fields: per_field.len(),
                n_paths: at.iter().map(|p| p.paths).sum(),
            }
        })
        .collect();
    let hits: Vec<MeanEstimate> = points.iter().map(|p| p.hit).collect();
    let gs: Vec<MeanEstimate> = points.iter().map(|p| p.g).collect();
    Ok(FellerScan {
        hit_nonincreasing: nonincreasing(&hits),
        g_nonincreasing: nonincreasing(&gs),
        points,
    })
}

/// Paired comparison of `g(θx)` with `g(x)` over fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationCheck {
    pub distance: f64,
    pub angle: f64,
    /// Field-mean of `g(θx) − g(x)`.
    pub difference: MeanEstimate,
    pub z: f64,
}

/// Compare every angle against `reference_angle` at each distance.
pub fn rotation_test(per_field: &[Vec<FieldPoint>], reference_angle: f64) -> Result<Vec<RotationCheck>> {
    let first = per_field.first().ok_or_else(|| Error::InsufficientData("no fields".into()))?;
    let mut out = Vec::new();
    for p in first.iter().filter(|p| p.angle != reference_angle) {
        let diffs = per_field
            .iter()
            .map(|f| {
                let find = |a: f64| f.iter().find(|q| q.distance == p.distance && q.angle == a).map(|q| q.g);
                match (find(p.angle), find(reference_angle)) {
                    (Some(a), Some(b)) => Ok(a - b),
                    _ => Err(Error::InvalidArgument("fields were scanned on different points".into())),
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        let difference = MeanEstimate::from_samples(&diffs);
        let z = if difference.std_err > 0.0 {
            difference.mean / difference.std_err
        } else if difference.mean == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        out.push(RotationCheck {
            distance: p.distance,
            angle: p.angle,
            difference,
            z,
        });
    }
    Ok(out)
}

/// `P[x + B_t ∈ D_R]` for planar Brownian motion, by quadrature of the
/// Gaussian density over the disk in polar coordinates about its center.
pub fn gaussian_disk_probability(x: Point, t: f64, radius: f64) -> Result<f64> {
    let rho = x.norm();
    let opts = QuadratureOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-10,
        max_intervals: 4000,
    };
    let inner = |r: f64| -> f64 {
        let f = |phi: f64| {
            let d2 = r * r + rho * rho - 2.0 * r * rho * phi.cos();
            (-d2 / (2.0 * t)).exp()
        };
        integrate(f, 0.0, PI, &opts).map_or(f64::NAN, |i| i.value) * 2.0 * r / (2.0 * PI * t)
    };
    Ok(integrate(inner, 0.0, radius, &opts)?.value)
}

/// Bounds `e^{−a²/(2t)} ≤ P[max_{s ≤ t} |B_s| ≥ a] ≤ 2 e^{−a²/(2t)}` for
/// planar Brownian motion: `|B_t| ≥ a` forces the event, and after hitting
/// the circle the path ends outside the disk with probability at least one
/// half because the tangent half-plane lies outside it.
pub fn gaussian_running_sup_bounds(a: f64, t: f64) -> (f64, f64) {
    let p = (-a * a / (2.0 * t)).exp();
    (p, (2.0 * p).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_scan_matches_gaussian() {
        let cfg = FellerScanConfig {
            t: 0.5,
            radius: 0.5,
            distances: vec![0.75, 1.5],
            angles: vec![0.0],
            paths: 4000,
            dt: 1e-3,
            horizon: 1.0,
        };
        let f = feller_scan_field(ClockIntegrand::Flat, &cfg, 9, 0).unwrap();
        for p in &f {
            let exact = gaussian_disk_probability(Point::new(p.distance, 0.0), 0.5, 0.5).unwrap();
            let se = (exact * (1.0 - exact) / p.paths as f64).sqrt();
            assert!((p.hit - exact).abs() < 4.0 * se, "{} vs {exact}", p.hit);
        }
    }

    #[test]
    fn disk_probability_at_center() {
        // P[|B_t| < R] = 1 − e^{−R²/(2t)}
        let p = gaussian_disk_probability(Point::ORIGIN, 0.3, 0.7).unwrap();
        assert!((p - (1.0 - (-0.49f64 / 0.6).exp())).abs() < 1e-9);
    }
}
