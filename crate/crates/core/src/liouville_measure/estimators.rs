//! Moment-scaling and dyadic-square (Hölder) statistics of the measure.

use serde::{Deserialize, Serialize};

use super::measure::MeasureGrid;
use super::spectrum::SpectrumParams;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::stats::{compensated_sum, MeanEstimate, ScalingFit};

/// Half-width of the window partitioned into dyadic squares.
pub const HOLDER_HALF_WIDTH: f64 = 8.0;

/// The reference set `A` whose dilates `rA` are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaledSet {
    /// `A = [0, 1]²`, so `rA` is a square of side `r`.
    Square,
    /// `A` is the disk of diameter 1 inscribed in the unit square.
    Disk,
}

fn cells_for(measure: &MeasureGrid, r: f64) -> Result<usize> {
    let cells = r / measure.geometry.h;
    let rounded = cells.round();
    if rounded < 1.0 || (cells - rounded).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "scale {r} is not a positive multiple of the grid spacing {}",
            measure.geometry.h
        )));
    }
    Ok(rounded as usize)
}

/// `M(rA)` for every translate of `rA` in the tiling of the grid by squares
/// of side `r`.
pub fn scaled_set_masses(measure: &MeasureGrid, r: f64, set: ScaledSet) -> Result<Vec<f64>> {
    let side = cells_for(measure, r)?;
    let g = &measure.geometry;
    let (tx, ty) = (g.nx / side, g.ny / side);
    if tx == 0 || ty == 0 {
        return Err(Error::RegionOutsideGrid {
            required: format!("a square of side {r}; grid is {}", g.describe()),
        });
    }
    let mut out = Vec::with_capacity(tx * ty);
    for b in 0..ty {
        for a in 0..tx {
            let (i0, j0) = (a * side, b * side);
            let value = match set {
                ScaledSet::Square => measure.rect_mass(i0, j0, side, side),
                ScaledSet::Disk => {
                    let c = Point::new(
                        g.x0 + (i0 as f64 + 0.5 * side as f64) * g.h,
                        g.y0 + (j0 as f64 + 0.5 * side as f64) * g.h,
                    );
                    measure.cells_mass(measure.ball_cells(c, 0.5 * r))
                }
            };
            out.push(value);
        }
    }
    Ok(out)
}

/// Per-replica statistic: mean over translates of `M(rA)^q`, for each `q`
/// (outer index) and each radius (inner index).
pub fn placement_moments(
    measure: &MeasureGrid,
    qs: &[f64],
    radii: &[f64],
    set: ScaledSet,
) -> Result<Vec<Vec<f64>>> {
    let masses = radii
        .iter()
        .map(|&r| scaled_set_masses(measure, r, set))
        .collect::<Result<Vec<_>>>()?;
    Ok(qs
        .iter()
        .map(|&q| {
            masses
                .iter()
                .map(|ms| compensated_sum(ms.iter().map(|m| m.powf(q))) / ms.len() as f64)
                .collect()
        })
        .collect())
}

fn validate_moment_design(params: &SpectrumParams, q: f64, radii: &[f64]) -> Result<Vec<String>> {
    if radii.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "moment scaling needs at least 3 radii, got {}",
            radii.len()
        )));
    }
    let (lo, hi) = radii
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    if !(lo > 0.0) || hi / lo < 10.0 - 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "radii must be positive and span at least one decade, got [{lo}, {hi}]"
        )));
    }
    if q > 0.0 && q >= params.moment_limit() {
        return Err(Error::Domain {
            quantity: "q",
            value: q,
            expected: format!("q < 4 / gamma^2 = {}", params.moment_limit()),
        });
    }
    let mut warnings = Vec::new();
    let g2 = params.gamma().powi(2);
    if q * g2 >= 2.0 {
        warnings.push(format!(
            "q gamma^2 = {:.3} >= 2: moments are heavy-tailed and Monte Carlo convergence is slow",
            q * g2
        ));
    }
    Ok(warnings)
}

/// Log-log fit of the ensemble mean of `M(rA)^q` against `r`.
///
/// `per_replica[i][j]` is replica `i`'s statistic at `radii[j]` (as produced
/// by [`placement_moments`]). The fit is weighted by the delta-method error
/// `se / mean` of each log-mean.
pub fn fit_moment_scaling(
    params: &SpectrumParams,
    q: f64,
    radii: &[f64],
    per_replica: &[Vec<f64>],
) -> Result<ScalingFit> {
    let warnings = validate_moment_design(params, q, radii)?;
    if per_replica.len() < 2 {
        return Err(Error::InsufficientData("need at least two replicas".into()));
    }
    let mut x = Vec::with_capacity(radii.len());
    let mut y = Vec::with_capacity(radii.len());
    let mut sigma = Vec::with_capacity(radii.len());
    for (j, &r) in radii.iter().enumerate() {
        let column: Vec<f64> = per_replica.iter().map(|row| row[j]).collect();
        let est = MeanEstimate::from_samples(&column);
        x.push(r.ln());
        y.push(est.mean.ln());
        sigma.push((est.std_err / est.mean).max(1e-12));
    }
    let mut fit = ScalingFit::weighted(&x, &y, Some(&sigma), vec![per_replica.len(); radii.len()])?;
    fit.warnings = warnings;
    Ok(fit)
}

/// Moment-scaling estimate over an ensemble of measures.
pub fn moment_scaling_estimate<'a>(
    ensemble: impl IntoIterator<Item = &'a MeasureGrid>,
    q: f64,
    radii: &[f64],
    set: ScaledSet,
) -> Result<ScalingFit> {
    let mut gamma = None;
    let mut rows = Vec::new();
    for m in ensemble {
        gamma.get_or_insert(m.gamma);
        rows.push(placement_moments(m, &[q], radii, set)?.remove(0));
    }
    let gamma = gamma.ok_or_else(|| Error::InsufficientData("empty ensemble".into()))?;
    fit_moment_scaling(&SpectrumParams::new(gamma)?, q, radii, &rows)
}

/// Which extreme of the dyadic-square masses to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HolderMode {
    Max,
    Min,
}

/// Masses of the `2^{2n}` dyadic squares partitioning
/// `center + [−half_width, half_width]²`.
pub fn dyadic_square_masses(
    measure: &MeasureGrid,
    n: u32,
    center: Point,
    half_width: f64,
) -> Result<Vec<f64>> {
    let g = &measure.geometry;
    let lo = Point::new(center.x - half_width, center.y - half_width);
    if lo.x < g.x0 - 1e-9 * g.h
        || lo.y < g.y0 - 1e-9 * g.h
        || center.x + half_width > g.x_max() + 1e-9 * g.h
        || center.y + half_width > g.y_max() + 1e-9 * g.h
    {
        return Err(Error::RegionOutsideGrid {
            required: format!(
                "[{}, {}] x [{}, {}] (grid is {})",
                lo.x,
                center.x + half_width,
                lo.y,
                center.y + half_width,
                g.describe()
            ),
        });
    }
    let fi = (lo.x - g.x0) / g.h;
    let fj = (lo.y - g.y0) / g.h;
    let width = 2.0 * half_width / g.h;
    let per_side = 1usize << n;
    let side = width / per_side as f64;
    let aligned = |v: f64| (v - v.round()).abs() < 1e-6;
    if !(aligned(fi) && aligned(fj) && aligned(side) && side.round() >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "level-{n} dyadic squares of the window do not align with grid cells of side {}",
            g.h
        )));
    }
    let (i0, j0, s) = (fi.round() as usize, fj.round() as usize, side.round() as usize);
    let mut out = Vec::with_capacity(per_side * per_side);
    for b in 0..per_side {
        for a in 0..per_side {
            out.push(measure.rect_mass(i0 + a * s, j0 + b * s, s, s));
        }
    }
    Ok(out)
}

/// Max (or min) over the `2^{2n}` dyadic squares of `z₀ + [−8, 8]²`.
pub fn holder_statistic(measure: &MeasureGrid, n: u32, center: Point, mode: HolderMode) -> Result<f64> {
    holder_statistic_in(measure, n, center, HOLDER_HALF_WIDTH, mode)
}

/// [`holder_statistic`] on a window of arbitrary half-width.
pub fn holder_statistic_in(
    measure: &MeasureGrid,
    n: u32,
    center: Point,
    half_width: f64,
    mode: HolderMode,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidArgument("dyadic level must be at least 1".into()));
    }
    let masses = dyadic_square_masses(measure, n, center, half_width)?;
    Ok(match mode {
        HolderMode::Max => masses.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        HolderMode::Min => masses.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Fit of the ensemble mean of `log(statistic)` against `n log 2`.
///
/// `per_replica[i][j]` is replica `i`'s statistic at `levels[j]`. The slope
/// estimates minus the effective Hölder exponent over the sampled scales.
pub fn holder_scaling(levels: &[u32], per_replica: &[Vec<f64>]) -> Result<ScalingFit> {
    if per_replica.len() < 2 {
        return Err(Error::InsufficientData("need at least two replicas".into()));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut sigma = Vec::new();
    for (j, &n) in levels.iter().enumerate() {
        let logs: Vec<f64> = per_replica.iter().map(|row| row[j].ln()).collect();
        let est = MeanEstimate::from_samples(&logs);
        x.push(n as f64 * std::f64::consts::LN_2);
        y.push(est.mean);
        sigma.push(est.std_err.max(1e-12));
    }
    ScalingFit::weighted(&x, &y, Some(&sigma), vec![per_replica.len(); levels.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Geometry;

    #[test]
    fn lebesgue_square_statistic() {
        let m = MeasureGrid::lebesgue(Geometry::centered(8.0, 64).unwrap());
        let v = holder_statistic(&m, 2, Point::ORIGIN, HolderMode::Max).unwrap();
        assert!((v - 16.0).abs() < 1e-10);
        let w = holder_statistic(&m, 2, Point::ORIGIN, HolderMode::Min).unwrap();
        assert!((w - 16.0).abs() < 1e-10);
    }

    #[test]
    fn window_must_fit_and_align() {
        let m = MeasureGrid::lebesgue(Geometry::centered(8.0, 64).unwrap());
        assert!(matches!(
            holder_statistic(&m, 2, Point::new(1.0, 0.0), HolderMode::Max),
            Err(Error::RegionOutsideGrid { .. })
        ));
        assert!(holder_statistic(&m, 7, Point::ORIGIN, HolderMode::Max).is_err());
    }

    #[test]
    fn max_statistic_is_nonincreasing_in_level() {
        let g = Geometry::centered(8.0, 64).unwrap();
        let masses: Vec<f64> = (0..g.len()).map(|k| 0.05 + ((k * 7919) % 101) as f64 / 101.0).collect();
        let m = MeasureGrid::from_masses(g, 0.5, masses, None);
        let stats: Vec<f64> = (1..=6)
            .map(|n| holder_statistic(&m, n, Point::ORIGIN, HolderMode::Max).unwrap())
            .collect();
        assert!(stats.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn lebesgue_moment_slope_is_two_q() {
        let m = MeasureGrid::lebesgue(Geometry::centered(2.0, 128).unwrap());
        let h = m.geometry.h;
        let radii: Vec<f64> = [2.0, 4.0, 8.0, 16.0, 32.0].iter().map(|c| c * h).collect();
        let ensemble = [m.clone(), m];
        for q in [0.5, 1.0, 2.0] {
            let fit = moment_scaling_estimate(ensemble.iter(), q, &radii, ScaledSet::Square).unwrap();
            assert!((fit.slope - 2.0 * q).abs() < 1e-9);
        }
    }

    #[test]
    fn moment_design_checks() {
        let p = SpectrumParams::new(1.0).unwrap();
        let rows = vec![vec![1.0; 3]; 3];
        assert!(fit_moment_scaling(&p, 1.0, &[0.1, 0.2], &rows).is_err());
        assert!(fit_moment_scaling(&p, 1.0, &[0.1, 0.2, 0.4], &rows).is_err());
        assert!(fit_moment_scaling(&p, 4.0, &[0.1, 0.3, 1.0], &rows).is_err());
    }
}
