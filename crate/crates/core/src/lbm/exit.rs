//! Exit times `τ_{x,r} = F(T_r)` and streaming LBM runs.

use serde::{Deserialize, Serialize};

use super::clock::{ClockIntegrand, ClockTrace};
use super::path::{increment, validate_steps, PathSample};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::rng::Substream;
use crate::stats::CompensatedSum;

/// Exit of the time-changed process from the closed ball `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitSample {
    pub center: Point,
    pub radius: f64,
    /// Liouville exit time `τ = F(T_r)`; for censored samples the lower bound `F(T)`.
    pub tau: f64,
    /// Brownian exit time `T_r` (the horizon when censored).
    pub brownian_exit: f64,
    pub exit_position: Point,
    pub censored: bool,
}

/// Continuity correction for exits monitored at spacing `dt`: the sampled
/// walk overshoots the circle by `β √dt` on average, `β = −ζ(1/2)/√(2π)`.
pub const MONITORING_SHIFT: f64 = 0.582_597_157_939_010_6;

/// Radius at which a walk sampled every `dt` is stopped so that its exit
/// time matches continuous monitoring of radius `r` to first order.
pub fn monitored_radius(r: f64, dt: f64) -> f64 {
    (r - MONITORING_SHIFT * dt.sqrt()).max(0.5 * r)
}

/// Fraction `θ ∈ (0, 1]` of the step `a → b` at which `|· − x| = r`, given
/// `|a − x| ≤ r < |b − x|`.
pub fn crossing_fraction(a: Point, b: Point, x: Point, r: f64) -> f64 {
    let d = a - x;
    let e = b - a;
    let ee = e.norm_sq();
    let de = d.dot(e);
    let c = d.norm_sq() - r * r;
    let disc = (de * de - ee * c).max(0.0);
    // Stable root of ee θ² + 2 de θ + c = 0 with c ≤ 0.
    let theta = if de >= 0.0 {
        -c / (de + disc.sqrt())
    } else {
        (disc.sqrt() - de) / ee
    };
    theta.clamp(0.0, 1.0)
}

/// Exit from `B(x, r)` along a stored path: the first sample outside the
/// [`monitored_radius`], refined linearly inside the last step.
pub fn exit_time(path: &PathSample, trace: &ClockTrace, x: Point, r: f64) -> Result<ExitSample> {
    if !(r > 0.0) {
        return Err(Error::Domain {
            quantity: "r",
            value: r,
            expected: "r > 0".into(),
        });
    }
    let rm = monitored_radius(r, path.dt);
    let r2 = rm * rm;
    match path.positions.iter().position(|p| (*p - x).norm_sq() > r2) {
        Some(0) => Err(Error::InvalidArgument(format!(
            "path starts outside B({}, {r})",
            format_point(x)
        ))),
        Some(i) => {
            let (a, b) = (path.positions[i - 1], path.positions[i]);
            let theta = crossing_fraction(a, b, x, rm);
            let s = (i as f64 - 1.0 + theta) * path.dt;
            let tau = trace.values[i - 1] + theta * (trace.values[i] - trace.values[i - 1]);
            Ok(ExitSample {
                center: x,
                radius: r,
                tau,
                brownian_exit: s,
                exit_position: a + (b - a) * theta,
                censored: false,
            })
        }
        None => Ok(ExitSample {
            center: x,
            radius: r,
            tau: trace.total(),
            brownian_exit: path.horizon(),
            exit_position: *path.positions.last().expect("non-empty path"),
            censored: true,
        }),
    }
}

fn format_point(p: Point) -> String {
    format!("({}, {})", p.x, p.y)
}

/// Simulate one path from `start` step by step and record its exits from
/// the nested balls `B(center, r)`, `r ∈ radii`; stops at the exit from the
/// largest ball or at the horizon. Results follow the order of `radii`.
pub fn simulate_exits(
    integrand: ClockIntegrand<'_>,
    start: Point,
    center: Point,
    radii: &[f64],
    dt: f64,
    horizon: f64,
    rng: &mut Substream,
) -> Result<Vec<ExitSample>> {
    let steps = validate_steps(horizon, dt)?;
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidArgument("radii must be positive and non-empty".into()));
    }
    if radii.iter().any(|r| (start - center).norm() > *r) {
        return Err(Error::InvalidArgument("start point lies outside a requested ball".into()));
    }
    let sqrt_dt = dt.sqrt();
    let monitored: Vec<f64> = radii.iter().map(|&r| monitored_radius(r, dt)).collect();
    let mut out: Vec<Option<ExitSample>> = vec![None; radii.len()];
    let mut pending = radii.len();
    let mut w = start;
    let mut clock = CompensatedSum::default();
    let mut clock_total = 0.0;
    for i in 0..steps {
        let f = integrand.eval(w).ok_or(Error::OutsideField { index: i, x: w.x, y: w.y })?;
        let f_before = dt * clock.value();
        clock.add(f);
        let f_after = dt * clock.value();
        clock_total = f_after;
        let next = w + increment(rng, sqrt_dt);
        let d2 = (next - center).norm_sq();
        for ((slot, &r), &rm) in out.iter_mut().zip(radii).zip(&monitored) {
            if slot.is_none() && d2 > rm * rm {
                let theta = crossing_fraction(w, next, center, rm);
                *slot = Some(ExitSample {
                    center,
                    radius: r,
                    tau: f_before + theta * (f_after - f_before),
                    brownian_exit: (i as f64 + theta) * dt,
                    exit_position: w + (next - w) * theta,
                    censored: false,
                });
                pending -= 1;
            }
        }
        w = next;
        if pending == 0 {
            break;
        }
    }
    let total_time = steps as f64 * dt;
    Ok(out
        .into_iter()
        .zip(radii)
        .map(|(s, &r)| {
            s.unwrap_or(ExitSample {
                center,
                radius: r,
                tau: clock_total,
                brownian_exit: total_time,
                exit_position: w,
                censored: true,
            })
        })
        .collect())
}

/// Outcome of running the time-changed process up to Liouville time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbmRun {
    /// `Y_t`.
    pub endpoint: Point,
    /// `max_{s ≤ t} |Y_s − Y_0|` over the sampled path.
    pub max_displacement: f64,
    /// `F̄(t)`.
    pub brownian_time: f64,
}

/// How a streamed run of `Y` ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum LbmOutcome {
    Reached(LbmRun),
    /// The path left `B(start, radius)` before Liouville time `t`.
    Killed { brownian_time: f64 },
    /// The path left the field domain at step `index`.
    LeftField { index: usize, position: Point },
}

/// Run `Y` from `start` until Liouville time `t`, streaming the clock.
///
/// Fails with [`Error::HorizonExceeded`] when the Brownian horizon ends
/// before the clock reaches `t`, and with [`Error::OutsideField`] when the
/// path leaves the field domain.
pub fn run_lbm(
    integrand: ClockIntegrand<'_>,
    start: Point,
    t: f64,
    dt: f64,
    horizon: f64,
    rng: &mut Substream,
) -> Result<LbmRun> {
    match run_lbm_until(integrand, start, t, dt, horizon, None, rng)? {
        LbmOutcome::Reached(run) => Ok(run),
        LbmOutcome::LeftField { index, position } => Err(Error::OutsideField {
            index,
            x: position.x,
            y: position.y,
        }),
        LbmOutcome::Killed { .. } => unreachable!("no killing radius"),
    }
}

/// [`run_lbm`] with optional killing on leaving `B(start, kill_radius)`,
/// monitored at the [`monitored_radius`]; leaving the field domain is
/// reported as an outcome instead of an error.
pub fn run_lbm_until(
    integrand: ClockIntegrand<'_>,
    start: Point,
    t: f64,
    dt: f64,
    horizon: f64,
    kill_radius: Option<f64>,
    rng: &mut Substream,
) -> Result<LbmOutcome> {
    let steps = validate_steps(horizon, dt)?;
    if !(t > 0.0) {
        return Err(Error::Domain {
            quantity: "t",
            value: t,
            expected: "t > 0".into(),
        });
    }
    let kill2 = kill_radius.map_or(f64::INFINITY, |r| monitored_radius(r, dt).powi(2));
    let sqrt_dt = dt.sqrt();
    let mut w = start;
    let mut clock = CompensatedSum::default();
    let mut max_d2: f64 = 0.0;
    for i in 0..steps {
        let Some(f) = integrand.eval(w) else {
            return Ok(LbmOutcome::LeftField { index: i, position: w });
        };
        let before = dt * clock.value();
        clock.add(f);
        let after = dt * clock.value();
        let next = w + increment(rng, sqrt_dt);
        if after >= t {
            let theta = (t - before) / (after - before);
            let end = w + (next - w) * theta;
            max_d2 = max_d2.max((end - start).norm_sq());
            if max_d2 > kill2 {
                return Ok(LbmOutcome::Killed {
                    brownian_time: (i as f64 + theta) * dt,
                });
            }
            return Ok(LbmOutcome::Reached(LbmRun {
                endpoint: end,
                max_displacement: max_d2.sqrt(),
                brownian_time: (i as f64 + theta) * dt,
            }));
        }
        max_d2 = max_d2.max((next - start).norm_sq());
        if max_d2 > kill2 {
            return Ok(LbmOutcome::Killed {
                brownian_time: (i + 1) as f64 * dt,
            });
        }
        w = next;
    }
    Err(Error::HorizonExceeded {
        requested: t,
        available: dt * clock.value(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lbm::clock::clock_with;
    use crate::lbm::path::simulate_bm;
    use crate::rng::StreamTag;

    #[test]
    fn corrected_mean_exit_time() {
        // E[T_r] = r²/2 from the center; uncorrected monitoring at this dt
        // overshoots by about 4%.
        let (r, dt, n) = (1.0, 1e-3, 4000);
        let taus: Vec<f64> = (0..n)
            .map(|k| {
                let mut rng = Substream::new(21, StreamTag::Path, 0, k);
                simulate_exits(ClockIntegrand::Flat, Point::ORIGIN, Point::ORIGIN, &[r], dt, 20.0, &mut rng).unwrap()[0].tau
            })
            .collect();
        let est = crate::stats::MeanEstimate::from_samples(&taus);
        assert!((est.mean - 0.5).abs() < 0.01 && est.within(0.5, 4.0), "{est:?}");
    }

    #[test]
    fn crossing_lands_on_circle() {
        let x = Point::new(0.1, -0.2);
        let a = Point::new(0.5, 0.3);
        let b = Point::new(1.4, 0.1);
        let th = crossing_fraction(a, b, x, 1.0);
        assert!(((a + (b - a) * th) - x).norm() - 1.0 < 1e-12);
    }

    #[test]
    fn streaming_matches_stored_path() {
        let path = simulate_bm(Point::ORIGIN, 2.0, 1e-3, 5, 0, 0).unwrap();
        let tr = clock_with(&path, ClockIntegrand::Flat).unwrap();
        let mut rng = Substream::new(5, StreamTag::Path, 0, 0);
        let radii = [0.25, 0.5];
        let streamed = simulate_exits(ClockIntegrand::Flat, Point::ORIGIN, Point::ORIGIN, &radii, 1e-3, 2.0, &mut rng).unwrap();
        for (s, &r) in streamed.iter().zip(&radii) {
            let stored = exit_time(&path, &tr, Point::ORIGIN, r).unwrap();
            assert_eq!(s.censored, stored.censored);
            assert!((s.tau - stored.tau).abs() < 1e-12);
            assert!((s.exit_position - stored.exit_position).norm() < 1e-12);
        }
    }

    #[test]
    fn nested_radii_give_ordered_exits() {
        let mut rng = Substream::new(8, StreamTag::Path, 0, 1);
        let radii = [0.1, 0.2, 0.4];
        let ex = simulate_exits(ClockIntegrand::Flat, Point::ORIGIN, Point::ORIGIN, &radii, 1e-4, 5.0, &mut rng).unwrap();
        assert!(ex.windows(2).all(|w| w[0].tau <= w[1].tau));
    }

    #[test]
    fn run_lbm_reports_horizon() {
        let mut rng = Substream::new(1, StreamTag::Path, 0, 0);
        assert!(matches!(
            run_lbm(ClockIntegrand::Flat, Point::ORIGIN, 1.0, 1e-3, 0.5, &mut rng),
            Err(Error::HorizonExceeded { .. })
        ));
        let mut rng = Substream::new(1, StreamTag::Path, 0, 0);
        let run = run_lbm(ClockIntegrand::Flat, Point::ORIGIN, 0.3, 1e-3, 0.5, &mut rng).unwrap();
        assert!((run.brownian_time - 0.3).abs() < 1e-12);
        assert!(run.max_displacement >= run.endpoint.norm());
    }
}
