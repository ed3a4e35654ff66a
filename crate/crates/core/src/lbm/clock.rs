//! The Liouville clock `F(t) = ∫₀^t exp(γ X_n(W_s) − (γ²/2) Var X_n) ds`, its
//! inverse, and the time-changed position `Y_t = W_{F̄(t)}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::path::{increment, PathSample};
use crate::error::{Error, Result};
use crate::gaussian_field::FieldGrid;
use crate::geometry::Point;
use crate::rng::{StreamTag, Substream};
use crate::stats::{CompensatedSum, MeanEstimate};

/// Integrand of the clock along a path.
#[derive(Debug, Clone, Copy)]
pub enum ClockIntegrand<'a> {
    /// `γ = 0`: the integrand is identically one and no field is needed.
    Flat,
    Field { field: &'a FieldGrid, gamma: f64 },
}

impl<'a> ClockIntegrand<'a> {
    pub fn new(field: &'a FieldGrid, gamma: f64) -> Self {
        ClockIntegrand::Field { field, gamma }
    }

    /// `exp(γ X(p) − γ² Var / 2)`, or `None` outside the field domain.
    pub fn eval(&self, p: Point) -> Option<f64> {
        match *self {
            ClockIntegrand::Flat => Some(1.0),
            ClockIntegrand::Field { field, gamma } => {
                let x = field.value_at(p)?;
                if gamma == 0.0 {
                    Some(1.0)
                } else {
                    Some((gamma * x - 0.5 * gamma * gamma * field.variance).exp())
                }
            }
        }
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            ClockIntegrand::Flat => 0.0,
            ClockIntegrand::Field { gamma, .. } => gamma,
        }
    }
}

/// Cumulative clock values at the path's sample times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockTrace {
    pub dt: f64,
    /// `F(t_i)`, with `F(t_0) = 0`.
    pub values: Vec<f64>,
    /// Integrand samples `f(W_{t_i})`.
    pub integrand: Vec<f64>,
    /// Riemann-sum error estimate `(Δt / 2) Σ |f_{i+1} − f_i|`.
    pub riemann_error: f64,
}

impl ClockTrace {
    /// `F(T)` at the end of the path.
    pub fn total(&self) -> f64 {
        *self.values.last().expect("trace is never empty")
    }

    /// `F(s)` for `0 ≤ s ≤ T`, linear between knots.
    pub fn at(&self, s: f64) -> f64 {
        let n = self.values.len() - 1;
        let u = (s / self.dt).clamp(0.0, n as f64);
        let i = (u.floor() as usize).min(n.saturating_sub(1));
        let frac = u - i as f64;
        self.values[i] + frac * (self.values[(i + 1).min(n)] - self.values[i])
    }
}

/// Left-endpoint Riemann sum of the clock integrand along `path`.
pub fn clock(path: &PathSample, field: &FieldGrid, gamma: f64) -> Result<ClockTrace> {
    clock_with(path, ClockIntegrand::new(field, gamma))
}

pub fn clock_with(path: &PathSample, integrand: ClockIntegrand<'_>) -> Result<ClockTrace> {
    let n = path.positions.len();
    let mut fs = Vec::with_capacity(n);
    for (index, p) in path.positions.iter().enumerate() {
        match integrand.eval(*p) {
            Some(v) => fs.push(v),
            None => return Err(Error::OutsideField { index, x: p.x, y: p.y }),
        }
    }
    let mut values = Vec::with_capacity(n);
    let mut sum = CompensatedSum::default();
    values.push(0.0);
    for f in &fs[..n - 1] {
        sum.add(*f);
        values.push(path.dt * sum.value());
    }
    let variation: f64 = fs.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok(ClockTrace {
        dt: path.dt,
        values,
        integrand: fs,
        riemann_error: 0.5 * path.dt * variation,
    })
}

/// `F̄(t) = inf{s : F(s) > t}` with `F` linear between knots.
pub fn invert_clock(trace: &ClockTrace, t: f64) -> Result<f64> {
    let total = trace.total();
    if !(t >= 0.0) {
        return Err(Error::Domain {
            quantity: "t",
            value: t,
            expected: "t >= 0".into(),
        });
    }
    if t > total {
        return Err(Error::HorizonExceeded {
            requested: t,
            available: total,
        });
    }
    let v = &trace.values;
    // First knot with F > t, then step back one interval.
    let hi = v.partition_point(|&f| f <= t);
    if hi == 0 {
        return Ok(0.0);
    }
    let i = hi - 1;
    if v[i] == t || i + 1 >= v.len() {
        return Ok(i as f64 * trace.dt);
    }
    let frac = (t - v[i]) / (v[i + 1] - v[i]);
    Ok((i as f64 + frac) * trace.dt)
}

/// `Y_t = W_{F̄(t)}` with `W` linear between samples.
pub fn lbm_position(path: &PathSample, trace: &ClockTrace, t: f64) -> Result<Point> {
    let s = invert_clock(trace, t)?;
    Ok(path.position_at(s))
}

/// Largest `Δt = dt0 / 2^k` for which `γ (X(W_{t+Δt}) − X(W_t))` has sample
/// standard deviation below `threshold`, estimated from `samples` one-step
/// increments started uniformly in the inner half of the grid.
pub fn adapt_dt(field: &FieldGrid, gamma: f64, dt0: f64, threshold: f64, master: u64, samples: usize) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(dt0);
    }
    let g = &field.geometry;
    let (cx, cy) = (0.5 * (g.x0 + g.x_max()), 0.5 * (g.y0 + g.y_max()));
    let (wx, wy) = (0.25 * (g.x_max() - g.x0), 0.25 * (g.y_max() - g.y0));
    let mut dt = dt0;
    for _ in 0..40 {
        let mut rng = Substream::new(master, StreamTag::Custom(0xada7), 0, 0);
        let sqrt_dt = dt.sqrt();
        let mut increments = Vec::with_capacity(samples);
        for _ in 0..samples {
            let p = Point::new(cx + wx * rng.random_range(-1.0..1.0), cy + wy * rng.random_range(-1.0..1.0));
            let q = p + increment(&mut rng, sqrt_dt);
            if let (Some(a), Some(b)) = (field.value_at(p), field.value_at(q)) {
                increments.push(gamma * (b - a));
            }
        }
        let est = MeanEstimate::from_samples(&increments);
        let sd = (est.std_err * est.std_err * est.n as f64).sqrt();
        if sd < threshold {
            return Ok(dt);
        }
        dt *= 0.5;
    }
    Err(Error::InvalidArgument(
        "clock step adaptation did not reach the increment threshold".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Geometry;
    use crate::lbm::path::simulate_bm;

    fn grid() -> Geometry {
        Geometry::centered(3.0, 60).unwrap()
    }

    #[test]
    fn flat_clock_is_identity() {
        let path = simulate_bm(Point::ORIGIN, 0.5, 1e-3, 1, 0, 0).unwrap();
        let field = FieldGrid::constant(grid(), 0.4, 1.0);
        let tr = clock(&path, &field, 0.0).unwrap();
        for (i, f) in tr.values.iter().enumerate() {
            assert_eq!(*f, path.time(i));
        }
        assert!((invert_clock(&tr, 0.25).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(lbm_position(&path, &tr, 0.0).unwrap(), path.start);
    }

    #[test]
    fn constant_field_clock() {
        let path = simulate_bm(Point::ORIGIN, 0.2, 1e-3, 2, 0, 0).unwrap();
        let (c, v, gamma) = (0.3, 2.0, 0.8);
        let field = FieldGrid::constant(grid(), c, v);
        let tr = clock(&path, &field, gamma).unwrap();
        let rate = (gamma * c - 0.5 * gamma * gamma * v).exp();
        for (i, f) in tr.values.iter().enumerate() {
            assert!((f - path.time(i) * rate).abs() < 1e-13);
        }
        let t = 0.05;
        assert!((invert_clock(&tr, t).unwrap() - t / rate).abs() < 1e-12);
    }

    #[test]
    fn inverse_at_knots_and_horizon() {
        let g = grid();
        let values: Vec<f64> = (0..g.len()).map(|k| ((k % 17) as f64 * 0.3).sin()).collect();
        let field = FieldGrid::from_values(g, values, 1.0).unwrap();
        let path = simulate_bm(Point::ORIGIN, 0.3, 1e-3, 3, 0, 0).unwrap();
        let tr = clock(&path, &field, 1.0).unwrap();
        assert!(tr.values.windows(2).all(|w| w[1] > w[0]));
        for i in [0, 1, 50, 299] {
            assert_eq!(invert_clock(&tr, tr.values[i]).unwrap(), path.time(i));
        }
        assert!(matches!(
            invert_clock(&tr, tr.total() * 1.01),
            Err(Error::HorizonExceeded { .. })
        ));
    }

    #[test]
    fn outside_field_names_first_index() {
        let g = Geometry::centered(0.02, 4).unwrap();
        let field = FieldGrid::constant(g, 0.0, 1.0);
        let path = simulate_bm(Point::ORIGIN, 1.0, 1e-3, 4, 0, 0).unwrap();
        match clock(&path, &field, 0.5) {
            Err(Error::OutsideField { index, .. }) => {
                assert!(index > 0);
                assert!(!g.interpolates(path.positions[index]));
                assert!(path.positions[..index].iter().all(|p| g.interpolates(*p)));
            }
            other => panic!("expected an outside-field error, got {other:?}"),
        }
    }
}
