//! The regularized Liouville measure on grid cells.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian_field::{FieldGrid, FieldSource};
use crate::geometry::{Geometry, Point};
use crate::stats::compensated_sum;

use super::spectrum::SpectrumParams;

/// Per-cell masses of `M_{n,γ}(dz) = exp(γ X_n(z) − (γ²/2) E[X_n(z)²]) dz`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureGrid {
    pub geometry: Geometry,
    pub gamma: f64,
    pub source: Option<FieldSource>,
    masses: Vec<f64>,
    /// Summed-area table with `(nx + 1) × (ny + 1)` entries.
    #[serde(skip)]
    prefix: Vec<f64>,
}

/// Midpoint rule per cell: mass `exp(γ X_n(center) − (γ²/2) Var X_n) h²`.
pub fn build_measure(field: &FieldGrid, gamma: f64) -> Result<MeasureGrid> {
    SpectrumParams::new(gamma)?;
    let area = field.geometry.cell_area();
    let shift = 0.5 * gamma * gamma * field.variance;
    let masses = if gamma == 0.0 {
        vec![area; field.geometry.len()]
    } else {
        field
            .cumulative
            .iter()
            .map(|x| (gamma * x - shift).exp() * area)
            .collect()
    };
    Ok(MeasureGrid::from_masses(field.geometry, gamma, masses, field.source))
}

impl MeasureGrid {
    pub fn from_masses(
        geometry: Geometry,
        gamma: f64,
        masses: Vec<f64>,
        source: Option<FieldSource>,
    ) -> Self {
        assert_eq!(masses.len(), geometry.len(), "one mass per cell");
        let (nx, ny) = (geometry.nx, geometry.ny);
        let mut prefix = vec![0.0; (nx + 1) * (ny + 1)];
        for j in 0..ny {
            let mut row = 0.0;
            for i in 0..nx {
                row += masses[j * nx + i];
                prefix[(j + 1) * (nx + 1) + i + 1] = prefix[j * (nx + 1) + i + 1] + row;
            }
        }
        Self {
            geometry,
            gamma,
            source,
            masses,
            prefix,
        }
    }

    /// Lebesgue measure on the grid.
    pub fn lebesgue(geometry: Geometry) -> Self {
        Self::from_masses(geometry, 0.0, vec![geometry.cell_area(); geometry.len()], None)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.masses[self.geometry.index(i, j)]
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    /// Mass of the cell rectangle `[i0, i0 + w) × [j0, j0 + hgt)`.
    pub fn rect_mass(&self, i0: usize, j0: usize, w: usize, hgt: usize) -> f64 {
        let stride = self.geometry.nx + 1;
        let (i1, j1) = (i0 + w, j0 + hgt);
        assert!(i1 <= self.geometry.nx && j1 <= self.geometry.ny, "rectangle inside grid");
        let p = &self.prefix;
        (p[j1 * stride + i1] - p[j0 * stride + i1] - p[j1 * stride + i0] + p[j0 * stride + i0]).max(0.0)
    }

    /// Sum of the masses of the listed cells.
    pub fn cells_mass(&self, cells: impl IntoIterator<Item = usize>) -> f64 {
        compensated_sum(cells.into_iter().map(|k| self.masses[k]))
    }

    /// Indices of cells whose centers lie in the closed ball `B(center, r)`.
    pub fn ball_cells(&self, center: Point, r: f64) -> Vec<usize> {
        let g = &self.geometry;
        let lo_i = (((center.x - r - g.x0) / g.h - 0.5).floor().max(0.0)) as usize;
        let hi_i = ((((center.x + r - g.x0) / g.h - 0.5).ceil()).max(0.0) as usize).min(g.nx - 1);
        let lo_j = (((center.y - r - g.y0) / g.h - 0.5).floor().max(0.0)) as usize;
        let hi_j = ((((center.y + r - g.y0) / g.h - 0.5).ceil()).max(0.0) as usize).min(g.ny - 1);
        let r2 = r * r;
        let mut out = Vec::new();
        for j in lo_j..=hi_j {
            for i in lo_i..=hi_i {
                if (g.center(i, j) - center).norm_sq() <= r2 {
                    out.push(g.index(i, j));
                }
            }
        }
        out
    }

    /// Check that `B(center, r)` lies inside the grid rectangle.
    pub fn check_ball(&self, center: Point, r: f64) -> Result<()> {
        let g = &self.geometry;
        if center.x - r < g.x0 || center.x + r > g.x_max() || center.y - r < g.y0 || center.y + r > g.y_max() {
            return Err(Error::RegionOutsideGrid {
                required: format!(
                    "[{}, {}] x [{}, {}] (grid is {})",
                    center.x - r,
                    center.x + r,
                    center.y - r,
                    center.y + r,
                    g.describe()
                ),
            });
        }
        Ok(())
    }
}

/// `M(B(center, r))` with cells counted by the center-in-ball rule.
pub fn ball_mass(measure: &MeasureGrid, center: Point, r: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Domain {
            quantity: "r",
            value: r,
            expected: "r >= 0".into(),
        });
    }
    measure.check_ball(center, r)?;
    Ok(measure.cells_mass(measure.ball_cells(center, r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_field::FieldGrid;
    use proptest::prelude::*;

    #[test]
    fn gamma_zero_is_lebesgue() {
        let g = Geometry::centered(2.0, 64).unwrap();
        let field = FieldGrid::from_values(g, (0..g.len()).map(|k| k as f64 * 0.01).collect(), 3.0).unwrap();
        let m = build_measure(&field, 0.0).unwrap();
        assert!(m.masses().iter().all(|&v| v == g.cell_area()));
        let disk = ball_mass(&m, Point::ORIGIN, 1.0).unwrap();
        assert!((disk - std::f64::consts::PI).abs() < 4.0 * g.h);
    }

    #[test]
    fn shift_multiplies_masses() {
        let g = Geometry::centered(1.0, 8).unwrap();
        let field = FieldGrid::from_values(g, (0..g.len()).map(|k| (k as f64).sin()).collect(), 1.0).unwrap();
        let a = build_measure(&field, 0.7).unwrap();
        let b = build_measure(&field.shifted(0.3), 0.7).unwrap();
        for (x, y) in a.masses().iter().zip(b.masses()) {
            assert!((y / x - (0.7f64 * 0.3).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_outside_grid_is_rejected() {
        let m = MeasureGrid::lebesgue(Geometry::centered(1.0, 8).unwrap());
        assert!(matches!(
            ball_mass(&m, Point::new(0.5, 0.0), 0.6),
            Err(Error::RegionOutsideGrid { .. })
        ));
    }

    #[test]
    fn rect_mass_matches_cell_sum() {
        let g = Geometry::centered(1.0, 16).unwrap();
        let masses: Vec<f64> = (0..g.len()).map(|k| 1.0 + (k as f64 * 0.37).sin().abs()).collect();
        let m = MeasureGrid::from_masses(g, 0.5, masses, None);
        let direct: f64 = (3..9)
            .flat_map(|j| (2..7).map(move |i| (i, j)))
            .map(|(i, j)| m.mass(i, j))
            .sum();
        assert!((m.rect_mass(2, 3, 5, 6) - direct).abs() < 1e-12);
        assert!((m.rect_mass(0, 0, 16, 16) - m.total_mass()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn ball_mass_is_monotone(r1 in 0.0f64..0.9, dr in 0.0f64..0.5, cx in -0.05f64..0.05) {
            let g = Geometry::centered(1.5, 30).unwrap();
            let masses: Vec<f64> = (0..g.len()).map(|k| 0.01 + (k as f64).cos().powi(2)).collect();
            let m = MeasureGrid::from_masses(g, 0.5, masses, None);
            let c = Point::new(cx, 0.0);
            let r2 = (r1 + dr).min(1.4);
            prop_assert!(ball_mass(&m, c, r1).unwrap() <= ball_mass(&m, c, r2).unwrap());
        }
    }
}
