//! Discretized Brownian paths.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point};
use crate::rng::{StreamId, StreamTag, Substream};

/// A planar Brownian path sampled at `t_i = i Δt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub start: Point,
    pub dt: f64,
    pub positions: Vec<Point>,
    /// First index whose position leaves the interpolation domain of the grid
    /// passed to [`simulate_bm_in`], if any.
    pub first_outside: Option<usize>,
    pub stream: StreamId,
}

impl PathSample {
    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps())
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// `W_s` by linear interpolation between samples, `0 ≤ s ≤ T`.
    pub fn position_at(&self, s: f64) -> Point {
        let u = (s / self.dt).clamp(0.0, self.steps() as f64);
        let i = (u.floor() as usize).min(self.steps().saturating_sub(1));
        let frac = u - i as f64;
        let (a, b) = (self.positions[i], self.positions[(i + 1).min(self.steps())]);
        a + (b - a) * frac
    }
}

pub(crate) fn validate_steps(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain {
            quantity: "dt",
            value: dt,
            expected: "dt > 0".into(),
        });
    }
    if !(horizon >= dt && horizon.is_finite()) {
        return Err(Error::Domain {
            quantity: "T",
            value: horizon,
            expected: format!("T >= dt = {dt}"),
        });
    }
    Ok((horizon / dt - 1e-9).ceil() as usize)
}

/// Draw one Brownian increment `(ΔW_x, ΔW_y)` with variance `dt` per coordinate.
pub fn increment(rng: &mut Substream, sqrt_dt: f64) -> Point {
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    Point::new(sqrt_dt * a, sqrt_dt * b)
}

/// Brownian path from `start` over `[0, T]` with exact Gaussian increments,
/// drawn from substream `(master, Path, field, path)`.
pub fn simulate_bm(start: Point, horizon: f64, dt: f64, master: u64, field: u32, path: u32) -> Result<PathSample> {
    simulate(start, horizon, dt, Substream::new(master, StreamTag::Path, field, path), None)
}

/// As [`simulate_bm`], flagging the first sample outside `geometry`'s
/// interpolation domain.
pub fn simulate_bm_in(
    start: Point,
    horizon: f64,
    dt: f64,
    master: u64,
    field: u32,
    path: u32,
    geometry: &Geometry,
) -> Result<PathSample> {
    simulate(
        start,
        horizon,
        dt,
        Substream::new(master, StreamTag::Path, field, path),
        Some(geometry),
    )
}

fn simulate(start: Point, horizon: f64, dt: f64, mut rng: Substream, geometry: Option<&Geometry>) -> Result<PathSample> {
    let steps = validate_steps(horizon, dt)?;
    let sqrt_dt = dt.sqrt();
    let mut positions = Vec::with_capacity(steps + 1);
    positions.push(start);
    let mut w = start;
    for _ in 0..steps {
        w = w + increment(&mut rng, sqrt_dt);
        positions.push(w);
    }
    let first_outside = geometry.and_then(|g| positions.iter().position(|p| !g.interpolates(*p)));
    Ok(PathSample {
        start,
        dt,
        positions,
        first_outside,
        stream: rng.id(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_path() {
        let a = simulate_bm(Point::ORIGIN, 0.1, 1e-3, 9, 1, 2).unwrap();
        let b = simulate_bm(Point::ORIGIN, 0.1, 1e-3, 9, 1, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.positions[0], Point::ORIGIN);
        assert_eq!(a.steps(), 100);
    }

    #[test]
    fn flags_leaving_the_grid() {
        let g = Geometry::centered(0.05, 10).unwrap();
        let p = simulate_bm_in(Point::ORIGIN, 1.0, 1e-3, 1, 0, 0, &g).unwrap();
        assert!(p.first_outside.is_some());
    }

    #[test]
    fn rejects_bad_steps() {
        assert!(simulate_bm(Point::ORIGIN, 1.0, 0.0, 1, 0, 0).is_err());
        assert!(simulate_bm(Point::ORIGIN, 1e-4, 1e-3, 1, 0, 0).is_err());
    }

    #[test]
    fn interpolated_position_hits_knots() {
        let p = simulate_bm(Point::new(1.0, 2.0), 0.01, 1e-3, 3, 0, 0).unwrap();
        assert_eq!(p.position_at(0.0), p.start);
        assert!((p.position_at(p.time(4)) - p.positions[4]).norm() < 1e-15);
    }
}
