//! Points in the plane and the uniform cell grid shared by fields and measures.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Rotation about the origin.
    pub fn rotate(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// A uniform grid of `nx × ny` square cells of side `h`.
///
/// Cell `(i, j)` covers `[x0 + i h, x0 + (i + 1) h] × [y0 + j h, y0 + (j + 1) h]`.
/// Field values live at cell centers, so the field nodes and the measure
/// cells coincide. Arrays are stored row-major with `j` as the row index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Geometry {
    pub fn new(x0: f64, y0: f64, h: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = Self { x0, y0, h, nx, ny };
        g.validate()?;
        Ok(g)
    }

    /// Square grid of `n × n` cells covering `[-half_width, half_width]²`.
    pub fn centered(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, -half_width, 2.0 * half_width / n as f64, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {}", self.h)));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2x2 cells, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.x0.is_finite() && self.y0.is_finite()) {
            return Err(Error::InvalidArgument("grid origin must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.x0 + (i as f64 + 0.5) * self.h,
            self.y0 + (j as f64 + 0.5) * self.h,
        )
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.nx as f64 * self.h
    }

    pub fn y_max(&self) -> f64 {
        self.y0 + self.ny as f64 * self.h
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// Cell containing `p`, if any.
    pub fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        let fx = (p.x - self.x0) / self.h;
        let fy = (p.y - self.y0) / self.h;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx as usize, fy as usize);
        (i < self.nx && j < self.ny).then_some((i, j))
    }

    /// Whether bilinear interpolation between cell centers is defined at `p`.
    pub fn interpolates(&self, p: Point) -> bool {
        let lo = 0.5 * self.h;
        p.x >= self.x0 + lo
            && p.x <= self.x_max() - lo
            && p.y >= self.y0 + lo
            && p.y <= self.y_max() - lo
    }

    /// Largest radius `r` such that the closed ball `B(p, r)` stays inside the
    /// interpolation domain.
    pub fn interior_radius(&self, p: Point) -> f64 {
        let lo = 0.5 * self.h;
        (p.x - self.x0 - lo)
            .min(self.x_max() - lo - p.x)
            .min(p.y - self.y0 - lo)
            .min(self.y_max() - lo - p.y)
    }

    /// Bilinear interpolation of node values at `p`; `None` outside the
    /// interpolation domain.
    pub fn bilinear(&self, values: &[f64], p: Point) -> Option<f64> {
        if !self.interpolates(p) {
            return None;
        }
        let fx = (p.x - self.x0) / self.h - 0.5;
        let fy = (p.y - self.y0) / self.h - 0.5;
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let k = self.index(i, j);
        let v00 = values[k];
        let v10 = values[k + 1];
        let v01 = values[k + self.nx];
        let v11 = values[k + self.nx + 1];
        Some((1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11))
    }

    pub fn describe(&self) -> String {
        format!(
            "[{}, {}] x [{}, {}] with h = {}",
            self.x0,
            self.x_max(),
            self.y0,
            self.y_max(),
            self.h
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_grid_is_symmetric() {
        let g = Geometry::centered(2.0, 8).unwrap();
        assert_eq!(g.h, 0.5);
        assert_eq!(g.center(0, 0), Point::new(-1.75, -1.75));
        assert_eq!(g.center(7, 7), Point::new(1.75, 1.75));
    }

    #[test]
    fn bilinear_reproduces_affine_functions() {
        let g = Geometry::centered(1.0, 10).unwrap();
        let values: Vec<f64> = (0..g.len())
            .map(|k| {
                let (i, j) = g.coords(k);
                let c = g.center(i, j);
                2.0 * c.x - 0.5 * c.y + 1.0
            })
            .collect();
        for p in [Point::new(0.1, -0.33), Point::new(0.89, 0.9), Point::new(-0.9, 0.0)] {
            let v = g.bilinear(&values, p).unwrap();
            assert!((v - (2.0 * p.x - 0.5 * p.y + 1.0)).abs() < 1e-12);
        }
        assert!(g.bilinear(&values, Point::new(0.96, 0.0)).is_none());
    }

    #[test]
    fn cell_lookup() {
        let g = Geometry::centered(1.0, 4).unwrap();
        assert_eq!(g.cell_of(Point::new(-0.99, 0.01)), Some((0, 2)));
        assert_eq!(g.cell_of(Point::new(1.01, 0.0)), None);
    }
}
