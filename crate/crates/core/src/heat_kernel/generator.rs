//! The killed generator of the time-changed process on grid cells.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point};
use crate::liouville_measure::MeasureGrid;
use crate::stats::compensated_sum;

/// Edge conductance of the 5-point lattice; with unit-area masses the
/// generator is `½ Δ_h`.
pub const CONDUCTANCE: f64 = 0.5;

const NONE: u32 = u32::MAX;

/// Nearest-neighbour graph on the cells of a domain `U`, with vertex masses
/// `m_v = M(cell v)` and Dirichlet killing on every edge leaving `U`.
///
/// `(L f)(v) = (1 / m_v) Σ_{w ∼ v} c (f(w) − f(v))` with `f = 0` off `U`.
/// Internally `−L = M⁻¹ K` with `K` the killed graph Laplacian, and spectral
/// work uses the symmetric form `A = M^{−1/2} K M^{−1/2}`.
#[derive(Debug, Clone)]
pub struct DiscreteGenerator {
    geometry: Geometry,
    cells: Vec<usize>,
    masses: Vec<f64>,
    neighbors: Vec<[u32; 4]>,
    vertex: Vec<u32>,
}

/// Generator killed outside the cells whose centers lie in `B(center, radius)`.
pub fn assemble_generator(measure: &MeasureGrid, center: Point, radius: f64) -> Result<DiscreteGenerator> {
    measure.check_ball(center, radius + measure.geometry.h)?;
    DiscreteGenerator::on_cells(measure, &measure.ball_cells(center, radius))
}

impl DiscreteGenerator {
    /// Generator killed outside an arbitrary cell set. Cells on the outer
    /// ring of the grid are rejected so that every killed neighbour exists.
    pub fn on_cells(measure: &MeasureGrid, cells: &[usize]) -> Result<Self> {
        let g = measure.geometry;
        if cells.is_empty() {
            return Err(Error::InvalidArgument("empty domain".into()));
        }
        let mut sorted = cells.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut vertex = vec![NONE; g.len()];
        for (v, &c) in sorted.iter().enumerate() {
            if c >= g.len() {
                return Err(Error::InvalidArgument(format!("cell index {c} outside the grid")));
            }
            let (i, j) = g.coords(c);
            if i == 0 || j == 0 || i + 1 == g.nx || j + 1 == g.ny {
                return Err(Error::RegionOutsideGrid {
                    required: format!("a one-cell ring around the domain (grid is {})", g.describe()),
                });
            }
            vertex[c] = v as u32;
        }
        let neighbors = sorted
            .iter()
            .map(|&c| {
                let (i, j) = g.coords(c);
                [
                    vertex[g.index(i - 1, j)],
                    vertex[g.index(i + 1, j)],
                    vertex[g.index(i, j - 1)],
                    vertex[g.index(i, j + 1)],
                ]
            })
            .collect();
        let masses: Vec<f64> = sorted.iter().map(|&c| measure.masses()[c]).collect();
        if masses.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidArgument("vertex masses must be positive".into()));
        }
        Ok(Self {
            geometry: g,
            cells: sorted,
            masses,
            neighbors,
            vertex,
        })
    }

    /// The generator restricted to the vertices in `keep`.
    pub fn restrict(&self, measure: &MeasureGrid, keep: impl Fn(usize, Point) -> bool) -> Result<Self> {
        let cells: Vec<usize> = (0..self.len())
            .filter(|&v| keep(v, self.center(v)))
            .map(|v| self.cells[v])
            .collect();
        Self::on_cells(measure, &cells)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Grid cell index of each vertex.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// `M(U)`.
    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    /// Vertex of grid cell `cell`, if the cell belongs to the domain.
    pub fn vertex_of_cell(&self, cell: usize) -> Option<usize> {
        self.vertex.get(cell).filter(|&&v| v != NONE).map(|&v| v as usize)
    }

    /// Vertex whose cell contains `p`.
    pub fn vertex_at(&self, p: Point) -> Option<usize> {
        let (i, j) = self.geometry.cell_of(p)?;
        self.vertex_of_cell(self.geometry.index(i, j))
    }

    pub fn center(&self, v: usize) -> Point {
        let (i, j) = self.geometry.coords(self.cells[v]);
        self.geometry.center(i, j)
    }

    /// Neighbours of `v` inside the domain.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[v].iter().filter(|&&w| w != NONE).map(|&w| w as usize)
    }

    /// Whether all four neighbours of `v` lie in the domain.
    pub fn is_interior(&self, v: usize) -> bool {
        self.neighbors[v].iter().all(|&w| w != NONE)
    }

    /// `y = K x`.
    pub fn apply_stiffness(&self, x: &[f64], y: &mut [f64]) {
        for (v, nb) in self.neighbors.iter().enumerate() {
            let mut s = 4.0 * x[v];
            for &w in nb {
                if w != NONE {
                    s -= x[w as usize];
                }
            }
            y[v] = CONDUCTANCE * s;
        }
    }

    /// `L f`.
    pub fn apply_generator(&self, f: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.len()];
        self.apply_stiffness(f, &mut y);
        y.iter().zip(&self.masses).map(|(k, m)| -k / m).collect()
    }

    /// `y = A x` with `A = M^{−1/2} K M^{−1/2}`.
    pub fn apply_symmetric(&self, x: &[f64], y: &mut [f64]) {
        for (v, nb) in self.neighbors.iter().enumerate() {
            let sv = self.masses[v].sqrt();
            let mut s = 4.0 * x[v] / sv;
            for &w in nb {
                if w != NONE {
                    s -= x[w as usize] / self.masses[w as usize].sqrt();
                }
            }
            y[v] = CONDUCTANCE * s / sv;
        }
    }

    /// Gershgorin bound on the largest eigenvalue of `A`.
    pub fn spectral_radius_bound(&self) -> f64 {
        (0..self.len())
            .map(|v| {
                let mv = self.masses[v];
                let off: f64 = self.neighbors(v).map(|w| CONDUCTANCE / (mv * self.masses[w]).sqrt()).sum();
                4.0 * CONDUCTANCE / mv + off
            })
            .fold(0.0, f64::max)
    }

    /// Dense `A`.
    pub fn dense_symmetric(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut a = DMatrix::zeros(n, n);
        for v in 0..n {
            a[(v, v)] = 4.0 * CONDUCTANCE / self.masses[v];
            for w in self.neighbors(v) {
                a[(v, w)] = -CONDUCTANCE / (self.masses[v] * self.masses[w]).sqrt();
            }
        }
        a
    }

    /// Entry `m_v L_{vw}`; symmetric in `(v, w)` by construction.
    pub fn weighted_entry(&self, v: usize, w: usize) -> f64 {
        if v == w {
            -4.0 * CONDUCTANCE
        } else if self.neighbors(v).any(|u| u == w) {
            CONDUCTANCE
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lebesgue_disk(n: usize, half: f64, r: f64) -> (MeasureGrid, DiscreteGenerator) {
        let m = MeasureGrid::lebesgue(Geometry::centered(half, n).unwrap());
        let g = assemble_generator(&m, Point::ORIGIN, r).unwrap();
        (m, g)
    }

    #[test]
    fn quadratic_is_consistent() {
        let (_, g) = lebesgue_disk(64, 1.25, 1.0);
        let f: Vec<f64> = (0..g.len()).map(|v| g.center(v).norm_sq()).collect();
        let lf = g.apply_generator(&f);
        for v in (0..g.len()).filter(|&v| g.is_interior(v)) {
            assert!((lf[v] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constants_are_harmonic_inside() {
        let m = MeasureGrid::from_masses(
            Geometry::centered(1.0, 20).unwrap(),
            0.5,
            (0..400).map(|k| 0.001 + 0.01 * ((k as f64) * 0.7).sin().abs()).collect(),
            None,
        );
        let g = assemble_generator(&m, Point::ORIGIN, 0.8).unwrap();
        let lf = g.apply_generator(&vec![1.0; g.len()]);
        for v in 0..g.len() {
            if g.is_interior(v) {
                assert_eq!(lf[v], 0.0);
            } else {
                assert!(lf[v] < 0.0);
            }
        }
        for v in 0..g.len() {
            for w in g.neighbors(v) {
                assert_eq!(g.weighted_entry(v, w), g.weighted_entry(w, v));
            }
        }
        let a = g.dense_symmetric();
        assert_eq!(a, a.transpose());
    }

    #[test]
    fn domain_errors() {
        let m = MeasureGrid::lebesgue(Geometry::centered(1.0, 16).unwrap());
        assert!(DiscreteGenerator::on_cells(&m, &[]).is_err());
        assert!(matches!(
            DiscreteGenerator::on_cells(&m, &[0]),
            Err(Error::RegionOutsideGrid { .. })
        ));
        assert!(assemble_generator(&m, Point::ORIGIN, 0.99).is_err());
    }
}
