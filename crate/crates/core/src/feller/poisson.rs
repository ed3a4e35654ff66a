//! Harmonic measure on a circle seen from outside: the Poisson kernel after
//! inversion, and its total-variation distance to the uniform measure.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::{integrate, QuadratureOptions};

/// Angular nodes of the periodic trapezoid rule on the circle.
pub const CIRCLE_NODES: usize = 4096;

fn inverted(n: f64, x: Point) -> Result<Point> {
    if !(n > 0.0) {
        return Err(Error::Domain {
            quantity: "n",
            value: n,
            expected: "n > 0".into(),
        });
    }
    let r2 = x.norm_sq();
    if !(r2 > n * n) {
        return Err(Error::Domain {
            quantity: "|x|",
            value: r2.sqrt(),
            expected: format!("|x| > n = {n}"),
        });
    }
    Ok(x * (n * n / r2))
}

/// Density at `z = n e^{iθ}` of the exit distribution on `∂D_n` from `x`
/// (`|x| > n`), against the uniform probability `σ̄_n`: the Poisson kernel
/// `(n² − |x'|²) / |x' − z|²` at the inverted point `x' = n² x / |x|²`.
pub fn poisson_density(n: f64, x: Point, theta: f64) -> Result<f64> {
    let xp = inverted(n, x)?;
    let z = Point::polar(n, theta);
    Ok((n * n - xp.norm_sq()) / (xp - z).norm_sq())
}

/// `‖μ_{x,n} − σ̄_n‖ = ∫ |p_n(x', z) − 1| σ̄_n(dz)`.
///
/// With `ρ = |x'| / n` and `φ` the angle from `x'`, the density exceeds one
/// exactly for `cos φ > ρ`; the integral is split at `φ₀ = arccos ρ` so each
/// piece is smooth.
pub fn harmonic_tv_distance(n: f64, x: Point) -> Result<f64> {
    let xp = inverted(n, x)?;
    Ok(tv_at_ratio(xp.norm() / n))
}

/// Total-variation distance for the inverted-point ratio `ρ = |x'| / n ∈ [0, 1)`.
pub fn tv_at_ratio(rho: f64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let density = |phi: f64| (1.0 - rho * rho) / (1.0 - 2.0 * rho * phi.cos() + rho * rho);
    let phi0 = rho.acos();
    let opts = QuadratureOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let above = integrate(|p| density(p) - 1.0, 0.0, phi0, &opts).map_or(f64::NAN, |i| i.value);
    let below = integrate(|p| 1.0 - density(p), phi0, PI, &opts).map_or(f64::NAN, |i| i.value);
    (above + below) / PI
}

/// A density against `σ̄_n` sampled at [`CIRCLE_NODES`] equally spaced angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleMeasure {
    pub radius: f64,
    pub density: Vec<f64>,
}

impl CircleMeasure {
    pub fn uniform(radius: f64) -> Self {
        Self {
            radius,
            density: vec![1.0; CIRCLE_NODES],
        }
    }

    /// Harmonic measure `μ_{x,n}` from `x` outside `D_n`.
    pub fn harmonic(n: f64, x: Point) -> Result<Self> {
        let density = (0..CIRCLE_NODES)
            .map(|k| poisson_density(n, x, Self::angle(k)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { radius: n, density })
    }

    pub fn angle(k: usize) -> f64 {
        2.0 * PI * k as f64 / CIRCLE_NODES as f64
    }

    /// `∫ f dσ̄_n` by the periodic trapezoid rule.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.density
            .iter()
            .enumerate()
            .map(|(k, d)| d * f(Self::angle(k)))
            .sum::<f64>()
            / CIRCLE_NODES as f64
    }

    pub fn total(&self) -> f64 {
        self.integrate(|_| 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_values() {
        // |x| = 2 gives x' = 0.5
        assert!((poisson_density(1.0, Point::new(2.0, 0.0), 0.0).unwrap() - 3.0).abs() < 1e-14);
        assert!((poisson_density(1.0, Point::new(1e9, 0.0), 1.3).unwrap() - 1.0).abs() < 1e-8);
        assert!(poisson_density(1.0, Point::new(0.5, 0.5), 0.0).is_err());
        let a = poisson_density(2.0, Point::new(3.0, 0.0), 0.7).unwrap();
        let b = poisson_density(2.0, Point::new(3.0, 0.0), -0.7).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn harmonic_measure_is_a_probability() {
        for x in [Point::new(1.05, 0.0), Point::new(-3.0, 4.0), Point::new(0.0, 50.0)] {
            let m = CircleMeasure::harmonic(1.0, x).unwrap();
            assert!((m.total() - 1.0).abs() < 1e-10);
            assert!(m.density.iter().all(|&d| d >= 0.0));
        }
    }

    #[test]
    fn tv_is_monotone_and_vanishes() {
        assert_eq!(tv_at_ratio(0.0), 0.0);
        assert!(tv_at_ratio(1e-6) < 1e-5);
        assert!(tv_at_ratio(0.9) > tv_at_ratio(0.5));
        let d: Vec<f64> = [1.2, 1.5, 2.0, 4.0, 10.0]
            .iter()
            .map(|&r| harmonic_tv_distance(1.0, Point::new(r, 0.0)).unwrap())
            .collect();
        assert!(d.windows(2).all(|w| w[1] < w[0]));
    }
}
