//! Monte Carlo heat-kernel estimates from endpoints of the time-changed
//! process, and their comparison with the spectral kernel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generator::DiscreteGenerator;
use super::spectral::KernelRow;
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Point};
use crate::lbm::{run_lbm_until, ClockIntegrand, LbmOutcome};
use crate::liouville_measure::MeasureGrid;
use crate::rng::{StreamTag, Substream};

/// Cells with fewer endpoint counts are flagged as wide-confidence.
pub const WIDE_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMethod {
    Spectral,
    MonteCarlo,
}

/// Partition of the grid into `block × block` squares of cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub geometry: Geometry,
    pub block: usize,
    pub nbx: usize,
    pub nby: usize,
}

impl BlockPartition {
    pub fn new(geometry: Geometry, block: usize) -> Result<Self> {
        if block == 0 || geometry.nx % block != 0 || geometry.ny % block != 0 {
            return Err(Error::InvalidArgument(format!(
                "block size {block} must divide the grid dimensions {}x{}",
                geometry.nx, geometry.ny
            )));
        }
        Ok(Self {
            geometry,
            block,
            nbx: geometry.nx / block,
            nby: geometry.ny / block,
        })
    }

    pub fn len(&self) -> usize {
        self.nbx * self.nby
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block_of_cell(&self, cell: usize) -> usize {
        let (i, j) = self.geometry.coords(cell);
        (j / self.block) * self.nbx + i / self.block
    }

    pub fn block_of(&self, p: Point) -> Option<usize> {
        let (i, j) = self.geometry.cell_of(p)?;
        Some(self.block_of_cell(self.geometry.index(i, j)))
    }

    pub fn center(&self, b: usize) -> Point {
        let (bi, bj) = (b % self.nbx, b / self.nbx);
        let s = self.block as f64 * self.geometry.h;
        Point::new(
            self.geometry.x0 + (bi as f64 + 0.5) * s,
            self.geometry.y0 + (bj as f64 + 0.5) * s,
        )
    }

    /// `M(block)` for every block.
    pub fn masses(&self, measure: &MeasureGrid) -> Vec<f64> {
        (0..self.len())
            .map(|b| {
                let (bi, bj) = (b % self.nbx, b / self.nbx);
                measure.rect_mass(bi * self.block, bj * self.block, self.block, self.block)
            })
            .collect()
    }
}

/// Block-averaged kernel density `p_t(x, ·)` with respect to `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelEstimate {
    pub t: f64,
    pub source: Point,
    pub method: KernelMethod,
    pub partition: BlockPartition,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Endpoint counts per block (Monte Carlo only).
    pub counts: Option<Vec<usize>>,
    /// Number of simulated paths (Monte Carlo only).
    pub paths: usize,
    /// Paths killed before `t` or lost off the grid.
    pub lost: usize,
}

impl HeatKernelEstimate {
    /// `Σ_B p_B M(B)`, the surviving probability.
    pub fn total_mass(&self, measure: &MeasureGrid) -> f64 {
        self.values.iter().zip(self.partition.masses(measure)).map(|(p, m)| p * m).sum()
    }

    /// Whether block `b` has fewer than [`WIDE_COUNT`] endpoint counts.
    pub fn is_wide(&self, b: usize) -> bool {
        self.counts.as_ref().is_some_and(|c| c[b] < WIDE_COUNT)
    }
}

/// Endpoint-count estimate `count_B / (N M(B))` with binomial standard
/// errors. `None` endpoints are killed paths.
pub fn hk_montecarlo(
    measure: &MeasureGrid,
    source: Point,
    t: f64,
    endpoints: &[Option<Point>],
    partition: BlockPartition,
) -> Result<HeatKernelEstimate> {
    if partition.geometry != measure.geometry {
        return Err(Error::GeometryMismatch("partition and measure grids differ".into()));
    }
    if endpoints.is_empty() {
        return Err(Error::InsufficientData("no endpoints".into()));
    }
    let n = endpoints.len() as f64;
    let mut counts = vec![0usize; partition.len()];
    let mut lost = 0;
    for p in endpoints {
        match p.and_then(|p| partition.block_of(p)) {
            Some(b) => counts[b] += 1,
            None => lost += 1,
        }
    }
    let masses = partition.masses(measure);
    let (values, errors) = counts
        .iter()
        .zip(&masses)
        .map(|(&c, &m)| {
            let f = c as f64 / n;
            (f / m, (f * (1.0 - f) / n).sqrt() / m)
        })
        .unzip();
    Ok(HeatKernelEstimate {
        t,
        source,
        method: KernelMethod::MonteCarlo,
        partition,
        values,
        errors,
        counts: Some(counts),
        paths: endpoints.len(),
        lost,
    })
}

/// Block averages `Σ_{v ∈ B} p_t(x, v) m_v / M(B)` of a spectral row.
pub fn spectral_blocks(
    gen: &DiscreteGenerator,
    measure: &MeasureGrid,
    row: &KernelRow,
    partition: BlockPartition,
) -> Result<HeatKernelEstimate> {
    if partition.geometry != *gen.geometry() {
        return Err(Error::GeometryMismatch("partition and generator grids differ".into()));
    }
    let masses = partition.masses(measure);
    let mut acc = vec![0.0; partition.len()];
    for v in 0..gen.len() {
        acc[partition.block_of_cell(gen.cells()[v])] += row.values[v] * gen.masses()[v];
    }
    let mx = gen.masses()[row.source];
    let values = acc.iter().zip(&masses).map(|(a, m)| a / m).collect();
    let errors = masses.iter().map(|m| row.error / (mx * m).sqrt()).collect();
    Ok(HeatKernelEstimate {
        t: row.t,
        source: gen.center(row.source),
        method: KernelMethod::Spectral,
        partition,
        values,
        errors,
        counts: None,
        paths: 0,
        lost: 0,
    })
}

/// Block-by-block comparison of a spectral and a Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub blocks: usize,
    pub agreeing: usize,
    pub fraction: f64,
    pub max_z: f64,
}

/// Blocks with at least `min_count` endpoints agree when
/// `|p_spec − p_mc| ≤ k √(σ_spec² + σ_mc²)`.
pub fn cross_validate(spectral: &HeatKernelEstimate, mc: &HeatKernelEstimate, min_count: usize, k: f64) -> Result<CrossCheck> {
    let counts = mc
        .counts
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("second estimate must be Monte Carlo".into()))?;
    if spectral.partition != mc.partition {
        return Err(Error::GeometryMismatch("estimates use different partitions".into()));
    }
    let mut blocks = 0;
    let mut agreeing = 0;
    let mut max_z: f64 = 0.0;
    for b in 0..counts.len() {
        if counts[b] < min_count {
            continue;
        }
        blocks += 1;
        let se = (spectral.errors[b].powi(2) + mc.errors[b].powi(2)).sqrt();
        let z = (spectral.values[b] - mc.values[b]).abs() / se;
        max_z = max_z.max(z);
        if z <= k {
            agreeing += 1;
        }
    }
    if blocks == 0 {
        return Err(Error::InsufficientData(format!("no block has {min_count} endpoint counts")));
    }
    Ok(CrossCheck {
        blocks,
        agreeing,
        fraction: agreeing as f64 / blocks as f64,
        max_z,
    })
}

/// Endpoints `Y_t` of `n` paths from `source`, killed on leaving
/// `B(source, kill_radius)` when given. Path `k` uses substream
/// `(master, Path, field, k)`.
#[allow(clippy::too_many_arguments)]
pub fn lbm_endpoints(
    integrand: ClockIntegrand<'_>,
    source: Point,
    t: f64,
    dt: f64,
    horizon: f64,
    kill_radius: Option<f64>,
    master: u64,
    field: u32,
    n: usize,
) -> Result<Vec<Option<Point>>> {
    (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = Substream::new(master, StreamTag::Path, field, k as u32);
            match run_lbm_until(integrand, source, t, dt, horizon, kill_radius, &mut rng)? {
                LbmOutcome::Reached(run) => Ok(Some(run.endpoint)),
                LbmOutcome::Killed { .. } => Ok(None),
                LbmOutcome::LeftField { index, position } => Err(Error::OutsideField {
                    index,
                    x: position.x,
                    y: position.y,
                }),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unkilled_mass_is_one() {
        let g = Geometry::centered(4.0, 32).unwrap();
        let m = MeasureGrid::lebesgue(g);
        let ends = lbm_endpoints(ClockIntegrand::Flat, Point::ORIGIN, 0.5, 1e-2, 2.0, None, 3, 0, 2000).unwrap();
        let est = hk_montecarlo(&m, Point::ORIGIN, 0.5, &ends, BlockPartition::new(g, 4).unwrap()).unwrap();
        assert_eq!(est.lost, 0);
        assert!((est.total_mass(&m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn block_indexing() {
        let g = Geometry::centered(1.0, 8).unwrap();
        let p = BlockPartition::new(g, 2).unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p.block_of(Point::new(-0.99, -0.99)), Some(0));
        assert_eq!(p.block_of(Point::new(0.99, 0.99)), Some(15));
        assert!((p.center(0).x + 0.75).abs() < 1e-15);
        assert!(BlockPartition::new(g, 3).is_err());
    }
}
