//! Campaign orchestration: dispatch a configuration to the estimators,
//! collect per-row records with their substream lineage and pass/fail checks.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::cache::FieldCache;
use super::config::ExperimentConfig;
use super::emit::{num, CampaignResult, Lineage, Summary, Table};
use crate::error::{Error, Result};
use crate::feller::{
    aggregate_scan, feller_scan_field, gaussian_disk_probability, gaussian_running_sup_bounds,
    harmonic_tv_distance, rotation_test, tv_at_ratio, FellerScanConfig, FieldPoint,
};
use crate::gaussian_field::{
    green_function, kernel_km, layer_covariance, layer_tail, FieldGrid, FieldSampler, KernelSpec,
    LayerSchedule,
};
use crate::geometry::{Geometry, Point};
use crate::heat_kernel::{
    assemble_generator, chapman_kolmogorov_residual, cross_validate, green_operator_sup, hk_montecarlo,
    kernel_rows, lbm_endpoints, offdiag_tail_fit, ondiag_profile, radial_profile, spectral_blocks,
    stretch_summary, BlockPartition, DiscreteGenerator, ProbeSet,
};
use crate::lbm::{
    adapt_dt, exit_moment_ensemble, exit_tail_ensemble, simulate_exits, ClockIntegrand, ExitSample, StartRule,
};
use crate::liouville_measure::{
    ball_mass, build_measure, fit_moment_scaling, holder_scaling, holder_statistic_in, placement_moments,
    HolderMode, MeasureGrid, SpectrumParams,
};
use crate::rng::{StreamTag, Substream};
use crate::stats::{MeanEstimate, ScalingFit};

/// Tables and checks of one campaign, before timing and hashing.
#[derive(Debug, Default)]
struct Part {
    tables: Vec<Table>,
    summary: Summary,
}

/// Run the campaign selected by `config.campaign`, using the cache directory
/// from the environment.
pub fn run_campaign(config: &ExperimentConfig) -> Result<CampaignResult> {
    run_campaign_with(config, &FieldCache::from_env())
}

pub fn run_campaign_with(config: &ExperimentConfig, cache: &FieldCache) -> Result<CampaignResult> {
    config.validate()?;
    let start = Instant::now();
    let part = dispatch(config, cache)?;
    Ok(CampaignResult {
        campaign: config.campaign.clone(),
        config_hash: config.hash(),
        tables: part.tables,
        summary: part.summary,
        wall_clock: start.elapsed().as_secs_f64(),
    })
}

fn dispatch(cfg: &ExperimentConfig, cache: &FieldCache) -> Result<Part> {
    match cfg.campaign.as_str() {
        "gamma-zero-suite" => gamma_zero_suite(cfg, cache),
        name => {
            let ctx = Ctx::new(cfg, cache)?;
            match name {
                "field-sample" => field_sample(&ctx),
                "measure-scaling" => measure_scaling(&ctx),
                "exit-moments" => exit_moments(&ctx),
                "exit-tails" => exit_tails(&ctx),
                "heat-kernel" => heat_kernel(&ctx),
                "ondiag" => ondiag(&ctx),
                "offdiag" => offdiag(&ctx),
                "feller-scan" => feller(&ctx),
                other => Err(Error::UnknownCampaign(other.to_string())),
            }
        }
    }
}

/// Shared state of a campaign run.
struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    cache: &'a FieldCache,
    spectrum: SpectrumParams,
    spec: KernelSpec,
    schedule: LayerSchedule,
    geometry: Geometry,
    sampler: Option<FieldSampler>,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a ExperimentConfig, cache: &'a FieldCache) -> Result<Self> {
        let spec = cfg.kernel()?;
        let schedule = cfg.schedule.build()?;
        let geometry = cfg.grid.build()?;
        let needs_field = cfg.gamma > 0.0 || cfg.campaign == "field-sample";
        let sampler = if needs_field {
            Some(FieldSampler::new(spec, schedule.clone(), geometry)?)
        } else {
            None
        };
        Ok(Self {
            cfg,
            cache,
            spectrum: cfg.spectrum()?,
            spec,
            schedule,
            geometry,
            sampler,
        })
    }

    fn seed(&self) -> u64 {
        self.cfg.seed
    }

    fn gamma(&self) -> f64 {
        self.cfg.gamma
    }

    fn summary(&self) -> Summary {
        let mut s = Summary::default();
        if let Some(sampler) = &self.sampler {
            s.warnings.extend(sampler.warnings().iter().cloned());
        }
        s
    }

    /// `X_n` of replica `f`; `None` when `γ = 0` makes the field irrelevant.
    fn field(&self, f: usize) -> Result<Option<FieldGrid>> {
        match &self.sampler {
            Some(s) if self.gamma() > 0.0 || self.cfg.campaign == "field-sample" => {
                Ok(Some(self.cache.cumulative(s, self.seed(), f as u32)?))
            }
            _ => Ok(None),
        }
    }

    fn measure(&self, field: Option<&FieldGrid>) -> Result<MeasureGrid> {
        match field {
            Some(f) => build_measure(f, self.gamma()),
            None => Ok(MeasureGrid::lebesgue(self.geometry)),
        }
    }

    fn integrand<'f>(&self, field: Option<&'f FieldGrid>) -> ClockIntegrand<'f> {
        match field {
            Some(f) if self.gamma() > 0.0 => ClockIntegrand::new(f, self.gamma()),
            _ => ClockIntegrand::Flat,
        }
    }

    /// Cell center next to the origin, used as the heat-kernel source.
    fn source(&self) -> Result<Point> {
        let (i, j) = self
            .geometry
            .cell_of(Point::new(1e-12, 1e-12))
            .ok_or_else(|| Error::RegionOutsideGrid {
                required: format!("the origin (grid is {})", self.geometry.describe()),
            })?;
        Ok(self.geometry.center(i, j))
    }

    fn fields(&self) -> usize {
        self.cfg.fields
    }

    fn field_range(&self) -> String {
        Lineage::range(0, self.fields())
    }
}

fn within(summary: &mut Summary, name: &str, value: f64, target: f64, tol: f64, detail: &str) {
    summary.check(
        name,
        (value - target).abs() <= tol,
        value,
        format!("{} ± {}", num(target), num(tol)),
        detail,
    );
}

fn relative(summary: &mut Summary, name: &str, value: f64, target: f64, rel: f64, detail: &str) {
    summary.check(
        name,
        ((value - target) / target).abs() <= rel,
        value,
        format!("{} ± {}%", num(target), rel * 100.0),
        detail,
    );
}

fn z_check(summary: &mut Summary, name: &str, est: &MeanEstimate, target: f64, k: f64, detail: &str) {
    summary.check(
        name,
        est.within(target, k),
        est.mean,
        format!("{} within {k} standard errors (se {:.3e})", num(target), est.std_err),
        detail,
    );
}

fn store_fit(summary: &mut Summary, name: &str, fit: ScalingFit) {
    summary.warnings.extend(fit.warnings.iter().map(|w| format!("{name}: {w}")));
    summary.fits.insert(name.to_string(), fit);
}

fn par_fields<T: Send>(ctx: &Ctx<'_>, work: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..ctx.fields()).into_par_iter().map(work).collect()
}

// ---------------------------------------------------------------------------
// field-sample

/// Kernel identities checked against closed-form Bessel values.
fn kernel_identities(spec: &KernelSpec, schedule: &LayerSchedule, summary: &mut Summary) -> Result<Table> {
    let unit = KernelSpec::new(1.0)?;
    within(summary, "k_m(0)", kernel_km(spec, 0.0)?, 1.0, 1e-10, "k_m(0) = 1");
    within(summary, "k_1(1)", kernel_km(&unit, 1.0)?, 0.60191, 1e-5, "k_1(1) = K_1(1)");
    within(summary, "G_1(1)", green_function(&unit, 1.0)?, 0.42102, 1e-5, "G_1(1) = K_0(1)");
    let mut table = Table::new("kernel", &["lag", "layered_sum", "tail", "green", "residual"]);
    let none = Lineage::new(0, "none", "-", "-");
    for lag in [0.05, 0.25, 1.0, 2.0] {
        let layered: f64 = (1..=schedule.layers())
            .map(|k| layer_covariance(spec, schedule, k, lag))
            .sum::<Result<f64>>()?;
        let tail = layer_tail(spec, schedule, lag)?;
        let green = green_function(spec, lag)?;
        let residual = layered + tail - green;
        within(summary, &format!("layers+tail=G at r={lag}"), layered + tail, green, 1e-6, "layer decomposition");
        table.push(&none, vec![lag.into(), layered.into(), tail.into(), green.into(), residual.into()]);
    }
    Ok(table)
}

/// Spatial mean of `X(z) X(z + lag)` over both axes, pairs inside the grid.
fn lag_product(field: &FieldGrid, lag: usize) -> f64 {
    let g = &field.geometry;
    let x = &field.cumulative;
    let (mut sum, mut n) = (0.0, 0usize);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let v = x[g.index(i, j)];
            if i + lag < g.nx {
                sum += v * x[g.index(i + lag, j)];
                n += 1;
            }
            if j + lag < g.ny {
                sum += v * x[g.index(i, j + lag)];
                n += 1;
            }
        }
    }
    sum / n as f64
}

fn field_sample(ctx: &Ctx<'_>) -> Result<Part> {
    let mut summary = ctx.summary();
    let kernel = kernel_identities(&ctx.spec, &ctx.schedule, &mut summary)?;
    let g = ctx.geometry;
    let lags: Vec<usize> = [0usize, 1, 2, 4, 8, 16].into_iter().filter(|&l| l < g.nx.min(g.ny) / 2).collect();
    let theory: Vec<f64> = lags
        .iter()
        .map(|&l| {
            (1..=ctx.schedule.layers())
                .map(|k| layer_covariance(&ctx.spec, &ctx.schedule, k, l as f64 * g.h))
                .sum::<Result<f64>>()
        })
        .collect::<Result<_>>()?;
    let per_replica = par_fields(ctx, |f| {
        let field = ctx.field(f)?.expect("field-sample always samples");
        Ok(lags.iter().map(|&l| lag_product(&field, l)).collect::<Vec<f64>>())
    })?;
    let mut table = Table::new("covariance", &["lag_cells", "lag", "product_mean", "theory"]);
    for (f, row) in per_replica.iter().enumerate() {
        let lin = Lineage::new(ctx.seed(), "field", f, "-");
        for (k, &l) in lags.iter().enumerate() {
            table.push(&lin, vec![l.into(), (l as f64 * g.h).into(), row[k].into(), theory[k].into()]);
        }
    }
    let k_se = ctx.cfg.tolerances.covariance_se;
    for (k, &l) in lags.iter().enumerate() {
        let column: Vec<f64> = per_replica.iter().map(|r| r[k]).collect();
        let est = MeanEstimate::from_samples(&column);
        let name = if l == 0 { "variance".to_string() } else { format!("covariance lag={l}h") };
        summary.value(format!("{name}/mean"), est.mean);
        summary.value(format!("{name}/std_err"), est.std_err);
        summary.value(format!("{name}/theory"), theory[k]);
        if ctx.fields() >= 2 {
            z_check(&mut summary, &name, &est, theory[k], k_se, "ensemble mean of X(z)X(z+lag)");
        }
    }
    Ok(Part {
        tables: vec![kernel, table],
        summary,
    })
}

// ---------------------------------------------------------------------------
// measure-scaling

/// Holder levels whose dyadic squares are whole cells of the grid window.
fn holder_window(g: &Geometry, levels: &[u32]) -> (f64, Vec<u32>) {
    let half = g.x_max().min(g.y_max()).min(-g.x0).min(-g.y0);
    let cells_half = (half / g.h).floor();
    let hw = cells_half * g.h;
    let usable = levels
        .iter()
        .copied()
        .filter(|&n| {
            let side = 2.0 * cells_half / 2f64.powi(n as i32);
            side >= 1.0 && (side - side.round()).abs() < 1e-9
        })
        .collect();
    (hw, usable)
}

fn measure_scaling(ctx: &Ctx<'_>) -> Result<Part> {
    let cfg = &ctx.cfg.moments;
    let mut summary = ctx.summary();
    let g = ctx.geometry;
    let radii: Vec<f64> = cfg.radii_cells.iter().map(|&c| c as f64 * g.h).collect();
    let (hw, levels) = holder_window(&g, &cfg.holder_levels);
    if levels.len() < cfg.holder_levels.len() {
        summary
            .warnings
            .push(format!("Hölder levels restricted to {levels:?} by the grid window of half-width {hw}"));
    }
    struct Replica {
        ball: f64,
        moments: Vec<Vec<f64>>,
        holder: Vec<f64>,
    }
    let reps = par_fields(ctx, |f| {
        let field = ctx.field(f)?;
        let m = ctx.measure(field.as_ref())?;
        let holder = levels
            .iter()
            .map(|&n| holder_statistic_in(&m, n, Point::ORIGIN, hw, HolderMode::Max))
            .collect::<Result<Vec<_>>>()?;
        Ok(Replica {
            ball: ball_mass(&m, Point::ORIGIN, cfg.ball_radius)?,
            moments: placement_moments(&m, &cfg.qs, &radii, cfg.set)?,
            holder,
        })
    })?;
    let stream = if ctx.gamma() > 0.0 { "field" } else { "none" };
    let mut balls = Table::new("ball", &["radius", "mass"]);
    let mut moments = Table::new("moments", &["q", "r", "statistic"]);
    let mut holder = Table::new("holder", &["level", "max_square_mass"]);
    for (f, rep) in reps.iter().enumerate() {
        let lin = Lineage::new(ctx.seed(), stream, f, "-");
        balls.push(&lin, vec![cfg.ball_radius.into(), rep.ball.into()]);
        for (qi, &q) in cfg.qs.iter().enumerate() {
            for (ri, &r) in radii.iter().enumerate() {
                moments.push(&lin, vec![q.into(), r.into(), rep.moments[qi][ri].into()]);
            }
        }
        for (li, &n) in levels.iter().enumerate() {
            holder.push(&lin, vec![n.into(), rep.holder[li].into()]);
        }
    }
    let tol = &ctx.cfg.tolerances;
    // The expectation equals the Lebesgue measure of the discretized ball.
    let cells = MeasureGrid::lebesgue(g).ball_cells(Point::ORIGIN, cfg.ball_radius).len();
    let discrete_area = cells as f64 * g.cell_area();
    let ball = MeanEstimate::from_samples(&reps.iter().map(|r| r.ball).collect::<Vec<_>>());
    let area = PI * cfg.ball_radius * cfg.ball_radius;
    summary.value("ball/mean", ball.mean);
    summary.value("ball/std_err", ball.std_err);
    summary.value("ball/discrete_area", discrete_area);
    if ctx.gamma() == 0.0 {
        within(&mut summary, "ball mass", ball.mean, discrete_area, 1e-9 * discrete_area, "Lebesgue measure of the cell ball");
    } else if ctx.fields() >= 2 {
        z_check(&mut summary, "ball mass", &ball, area, tol.mean_mass_se, "E[M(B_r)] = area of B_r");
    }
    for (qi, &q) in cfg.qs.iter().enumerate() {
        let rows: Vec<Vec<f64>> = reps.iter().map(|r| r.moments[qi].clone()).collect();
        let rows = if rows.len() == 1 { vec![rows[0].clone(), rows[0].clone()] } else { rows };
        let fit = fit_moment_scaling(&ctx.spectrum, q, &radii, &rows)?;
        let xi = ctx.spectrum.xi(q);
        let (name, tol_q) = if ctx.gamma() == 0.0 {
            (format!("moment slope q={q}"), tol.lebesgue_slope)
        } else {
            (format!("moment slope q={q}"), tol.moment_slope)
        };
        within(&mut summary, &name, fit.slope, xi, tol_q, "fitted slope vs ξ_M(q)");
        store_fit(&mut summary, &format!("moments q={q}"), fit);
    }
    if levels.len() >= 2 && reps.len() >= 2 {
        let rows: Vec<Vec<f64>> = reps.iter().map(|r| r.holder.clone()).collect();
        let fit = holder_scaling(&levels, &rows)?;
        let alpha = -fit.slope;
        let slack = 3.0 * fit.slope_se;
        let lo = if ctx.gamma() == 0.0 { 2.0 } else { ctx.spectrum.alpha2() };
        summary.check(
            "holder exponent",
            fit.slope < 0.0 && alpha >= lo - slack - 1e-9 && alpha <= 2.0 + slack + 1e-9,
            alpha,
            format!("in [{lo}, 2] ± 3σ"),
            "effective exponent of the largest dyadic-square mass",
        );
        store_fit(&mut summary, "holder", fit);
    }
    Ok(Part {
        tables: vec![balls, moments, holder],
        summary,
    })
}

// ---------------------------------------------------------------------------
// exit-moments and exit-tails

struct ExitRecord {
    field: usize,
    path: usize,
    start: Point,
    dt: f64,
    sample: ExitSample,
}

/// Exit samples of one field from balls centered at the origin.
///
/// With a center start every path serves all radii; with a uniform start
/// radius `i` of path `k` uses path index `k · radii + i`.
fn exit_samples(ctx: &Ctx<'_>, f: usize) -> Result<Vec<ExitRecord>> {
    let cfg = &ctx.cfg.exit;
    let field = ctx.field(f)?;
    let integrand = ctx.integrand(field.as_ref());
    let dt = match &field {
        Some(fld) if cfg.adapt_threshold > 0.0 => adapt_dt(fld, ctx.gamma(), ctx.cfg.dt, cfg.adapt_threshold, ctx.seed(), 1000)?,
        _ => ctx.cfg.dt,
    };
    let c = Point::ORIGIN;
    let horizon = ctx.cfg.horizon;
    let nr = cfg.radii.len();
    let paths = ctx.cfg.paths;
    let out: Vec<Vec<ExitRecord>> = (0..paths)
        .into_par_iter()
        .map(|k| match cfg.start {
            StartRule::Center => {
                let mut rng = Substream::new(ctx.seed(), StreamTag::Path, f as u32, k as u32);
                let ex = simulate_exits(integrand, c, c, &cfg.radii, dt, horizon, &mut rng)?;
                Ok(ex
                    .into_iter()
                    .map(|sample| ExitRecord { field: f, path: k, start: c, dt, sample })
                    .collect())
            }
            StartRule::UniformOnCircle { .. } => (0..nr)
                .map(|i| {
                    let idx = k * nr + i;
                    let r = cfg.radii[i];
                    let mut srng = Substream::new(ctx.seed(), StreamTag::StartPoint, f as u32, idx as u32);
                    let start = cfg.start.start(c, r, &mut srng);
                    let mut rng = Substream::new(ctx.seed(), StreamTag::Path, f as u32, idx as u32);
                    let sample = simulate_exits(integrand, start, c, &[r], dt, horizon, &mut rng)?.remove(0);
                    Ok(ExitRecord { field: f, path: idx, start, dt, sample })
                })
                .collect(),
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().flatten().collect())
}

fn exit_table(ctx: &Ctx<'_>, records: &[Vec<ExitRecord>]) -> Table {
    let mut t = Table::new(
        "exits",
        &["radius", "start_x", "start_y", "tau", "brownian_exit", "censored", "dt"],
    );
    for rec in records.iter().flatten() {
        let s = &rec.sample;
        t.push(
            &Lineage::new(ctx.seed(), "path", rec.field, rec.path),
            vec![
                s.radius.into(),
                rec.start.x.into(),
                rec.start.y.into(),
                s.tau.into(),
                s.brownian_exit.into(),
                s.censored.into(),
                rec.dt.into(),
            ],
        );
    }
    t
}

/// Samples grouped by field; at `γ = 0` every field gives the same law, so
/// the paths are pooled into one group.
fn per_field_samples(ctx: &Ctx<'_>, records: &[Vec<ExitRecord>]) -> Vec<Vec<ExitSample>> {
    let groups: Vec<Vec<ExitSample>> = records.iter().map(|r| r.iter().map(|x| x.sample).collect()).collect();
    if ctx.gamma() == 0.0 {
        vec![groups.into_iter().flatten().collect()]
    } else {
        groups
    }
}

fn exit_moments(ctx: &Ctx<'_>) -> Result<Part> {
    let cfg = &ctx.cfg.exit;
    let tol = &ctx.cfg.tolerances;
    let mut summary = ctx.summary();
    let records = par_fields(ctx, |f| exit_samples(ctx, f))?;
    let per_field = per_field_samples(ctx, &records);
    for &r in &cfg.radii {
        let recs: Vec<&ExitRecord> = records.iter().flatten().filter(|x| x.sample.radius == r).collect();
        let taus: Vec<f64> = recs.iter().map(|x| x.sample.tau).collect();
        let mean = MeanEstimate::from_samples(&taus);
        summary.value(format!("mean exit r={r}"), mean.mean);
        summary.value(format!("mean exit r={r}/std_err"), mean.std_err);
        if ctx.gamma() == 0.0 {
            // E[T_r] = (r² − |x − c|²) / 2 for planar Brownian motion.
            let oracle = recs.iter().map(|x| 0.5 * (r * r - x.start.norm_sq())).sum::<f64>() / recs.len() as f64;
            summary.value(format!("mean exit r={r}/oracle"), oracle);
            relative(&mut summary, &format!("mean exit r={r}"), mean.mean, oracle, tol.exit_mean_rel, "E[τ] = (r² − |x|²)/2");
        }
    }
    for &q in &cfg.qs {
        let fit = exit_moment_ensemble(&per_field, q, &cfg.radii)?;
        let xt = ctx.spectrum.xi_tilde(q);
        if ctx.gamma() == 0.0 {
            within(&mut summary, &format!("inverse moment slope q={q}"), fit.slope, -xt, tol.exit_slope, "slope of E[τ^-q] vs r");
        } else {
            let ratios: Vec<f64> = fit
                .abscissae
                .iter()
                .zip(&fit.ordinates)
                .map(|(x, y)| (y + xt * x).exp())
                .collect();
            let max = ratios.iter().copied().fold(f64::MIN, f64::max);
            let min = ratios.iter().copied().fold(f64::MAX, f64::min);
            summary.value(format!("inverse moment q={q}/slope"), fit.slope);
            summary.check(
                format!("inverse moment ratio q={q}"),
                max / min < tol.exit_ratio,
                max / min,
                format!("< {}", tol.exit_ratio),
                "max/min of E[τ^-q] r^ξ̃(q) over the radii",
            );
        }
        store_fit(&mut summary, &format!("inverse moment q={q}"), fit);
    }
    Ok(Part {
        tables: vec![exit_table(ctx, &records)],
        summary,
    })
}

fn exit_tails(ctx: &Ctx<'_>) -> Result<Part> {
    let cfg = &ctx.cfg.exit;
    let mut summary = ctx.summary();
    let records = par_fields(ctx, |f| exit_samples(ctx, f))?;
    let per_field = per_field_samples(ctx, &records);
    let lin = Lineage::new(ctx.seed(), "path", ctx.field_range(), Lineage::range(0, ctx.cfg.paths));
    let mut table = Table::new("tail", &["radius", "t", "probability", "std_err", "count", "n"]);
    let mut curves = Vec::new();
    for &r in &cfg.radii {
        let grid: Vec<f64> = cfg.tail_times.iter().map(|s| s * r * r).collect();
        let (curve, ests) = exit_tail_ensemble(&per_field, r, &grid)?;
        for (k, &t) in grid.iter().enumerate() {
            table.push(
                &lin,
                vec![r.into(), t.into(), curve.probability[k].into(), ests[k].std_err.into(), curve.counts[k].into(), curve.n.into()],
            );
        }
        summary.check(format!("monotone in t r={r}"), curve.monotone, r, "nondecreasing", "P[τ_r ≤ t] against t");
        match &curve.fit {
            Some(fit) => {
                let (lo, _) = fit.slope_interval_95();
                summary.check(
                    format!("stretched exponent r={r}"),
                    lo > 0.0,
                    fit.slope,
                    "lower 95% bound > 0",
                    format!("slope of log(-log P) vs log(1/t); lower 95% bound {lo:.4}"),
                );
                store_fit(&mut summary, &format!("tail r={r}"), fit.clone());
            }
            None => summary.check(format!("stretched exponent r={r}"), false, f64::NAN, "fit", "fewer than 3 usable points"),
        }
        if let Some(b) = curve.zero_count_bound {
            summary.value(format!("tail r={r}/zero_count_bound"), b);
        }
        curves.push(curve);
    }
    // Monotonicity in r at fixed t: P[τ_r ≤ t] is nonincreasing in r.
    let mut ts: Vec<f64> = curves.iter().flat_map(|c| c.t.clone()).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut violations = 0;
    for &t in &ts {
        let ps: Vec<(f64, f64)> = cfg
            .radii
            .iter()
            .map(|&r| {
                let v: Vec<f64> = per_field
                    .iter()
                    .map(|s| {
                        let at: Vec<&ExitSample> = s.iter().filter(|x| x.radius == r).collect();
                        at.iter().filter(|x| !x.censored && x.tau <= t).count() as f64 / at.len() as f64
                    })
                    .collect();
                let e = MeanEstimate::from_samples(&v);
                let n: usize = per_field.iter().map(|s| s.iter().filter(|x| x.radius == r).count()).sum();
                let se = if v.len() >= 2 { e.std_err } else { (e.mean * (1.0 - e.mean) / n as f64).sqrt() };
                (e.mean, se)
            })
            .collect();
        let mut order: Vec<usize> = (0..cfg.radii.len()).collect();
        order.sort_by(|&a, &b| cfg.radii[a].total_cmp(&cfg.radii[b]));
        for w in order.windows(2) {
            let (p0, s0) = ps[w[0]];
            let (p1, s1) = ps[w[1]];
            let exact = cfg.start == StartRule::Center;
            let slack = if exact { 0.0 } else { 2.0 * (s0 * s0 + s1 * s1).sqrt() };
            if p1 - p0 > slack + 1e-12 {
                violations += 1;
            }
        }
    }
    summary.check("monotone in r", violations == 0, violations as f64, "0 violations", "P[τ_r ≤ t] against r on the union of time grids");
    Ok(Part {
        tables: vec![table, exit_table(ctx, &records)],
        summary,
    })
}

// ---------------------------------------------------------------------------
// heat-kernel

/// Union of three disks with centers in `B(0, R/2)` and radii in `[0.15R, 0.4R]`.
fn random_domain(measure: &MeasureGrid, radius: f64, seed: u64, d: usize) -> Result<(Vec<usize>, String)> {
    let mut rng = Substream::new(seed, StreamTag::Domain, 0, d as u32);
    let mut cells = Vec::new();
    let mut desc = Vec::new();
    for _ in 0..3 {
        let rho = 0.5 * radius * rng.random::<f64>().sqrt();
        let c = Point::polar(rho, rng.random_range(0.0..std::f64::consts::TAU));
        let r = radius * rng.random_range(0.15..0.4);
        measure.check_ball(c, r + measure.geometry.h)?;
        cells.extend(measure.ball_cells(c, r));
        desc.push(format!("B(({:.4},{:.4}),{:.4})", c.x, c.y, r));
    }
    cells.sort_unstable();
    cells.dedup();
    Ok((cells, desc.join("+")))
}

fn heat_kernel(ctx: &Ctx<'_>) -> Result<Part> {
    let cfg = &ctx.cfg.heat;
    let tol = &ctx.cfg.tolerances;
    let mut summary = ctx.summary();
    let src = ctx.source()?;
    let radius = cfg.domain_radius;
    let partition = BlockPartition::new(ctx.geometry, cfg.block)?;
    struct FieldOut {
        cross: crate::heat_kernel::CrossCheck,
        blocks: Vec<(usize, f64, f64, f64, usize)>,
        lost: usize,
        ck: f64,
        report: crate::heat_kernel::GreenReport,
        fk: f64,
    }
    let outs = par_fields(ctx, |f| {
        let field = ctx.field(f)?;
        let measure = ctx.measure(field.as_ref())?;
        let gen = assemble_generator(&measure, src, radius)?;
        let x = gen.vertex_at(src).expect("source cell lies in its own ball");
        let row = kernel_rows(&gen, x, &[cfg.t], cfg.krylov_tolerance)?.remove(0);
        let spectral = spectral_blocks(&gen, &measure, &row, partition)?;
        let ends = lbm_endpoints(
            ctx.integrand(field.as_ref()),
            src,
            cfg.t,
            ctx.cfg.dt,
            ctx.cfg.horizon,
            Some(radius),
            ctx.seed(),
            f as u32,
            ctx.cfg.paths,
        )?;
        let mc = hk_montecarlo(&measure, src, cfg.t, &ends, partition)?;
        let cross = match cross_validate(&spectral, &mc, cfg.min_count, tol.cross_sigma) {
            Err(Error::InsufficientData(_)) => crate::heat_kernel::CrossCheck {
                blocks: 0,
                agreeing: 0,
                fraction: 0.0,
                max_z: 0.0,
            },
            other => other?,
        };
        let counts = mc.counts.clone().unwrap_or_default();
        let blocks = (0..partition.len())
            .filter(|&b| spectral.values[b] > 0.0 || counts.get(b).copied().unwrap_or(0) > 0)
            .map(|b| (b, spectral.values[b], mc.values[b], mc.errors[b], counts.get(b).copied().unwrap_or(0)))
            .collect();
        let probe = Point::new(src.x + 0.25 * radius, src.y);
        let y = gen.vertex_at(probe).ok_or_else(|| Error::InvalidArgument("CK probe outside the domain".into()))?;
        let ck = chapman_kolmogorov_residual(&gen, x, y, cfg.t, cfg.krylov_tolerance)?;
        let report = green_operator_sup(&gen, radius)?;
        let fk = report.lambda1 * report.mass * (2.0 + 1.0 / report.mass).ln();
        Ok(FieldOut {
            cross,
            blocks,
            lost: mc.lost,
            ck,
            report,
            fk,
        })
    })?;
    let stream = if ctx.gamma() > 0.0 { "field" } else { "none" };
    let mut cross_t = Table::new("cross_check", &["t", "blocks", "agreeing", "fraction", "max_z", "paths", "lost"]);
    let mut block_t = Table::new("blocks", &["block", "center_x", "center_y", "spectral", "montecarlo", "mc_std_err", "count"]);
    let mut spec_t = Table::new(
        "spectral",
        &["domain_radius", "lambda1", "green_sup", "mass", "inequality", "green_constant", "faber_krahn", "ck_residual"],
    );
    let (mut agreeing, mut blocks) = (0, 0);
    let mut max_ck: f64 = 0.0;
    for (f, o) in outs.iter().enumerate() {
        let lin = Lineage::new(ctx.seed(), "path", f, Lineage::range(0, ctx.cfg.paths));
        cross_t.push(
            &lin,
            vec![cfg.t.into(), o.cross.blocks.into(), o.cross.agreeing.into(), o.cross.fraction.into(), o.cross.max_z.into(), ctx.cfg.paths.into(), o.lost.into()],
        );
        for &(b, s, m, e, c) in &o.blocks {
            let p = partition.center(b);
            block_t.push(&lin, vec![b.into(), p.x.into(), p.y.into(), s.into(), m.into(), e.into(), c.into()]);
        }
        let r = &o.report;
        spec_t.push(
            &Lineage::new(ctx.seed(), stream, f, "-"),
            vec![radius.into(), r.lambda1.into(), r.sup.into(), r.mass.into(), r.inequality_holds.into(), r.constant.into(), o.fk.into(), o.ck.into()],
        );
        agreeing += o.cross.agreeing;
        blocks += o.cross.blocks;
        max_ck = max_ck.max(o.ck);
    }
    let fraction = if blocks > 0 { agreeing as f64 / blocks as f64 } else { 0.0 };
    if blocks == 0 {
        summary
            .warnings
            .push(format!("no block reached {} Monte Carlo endpoints; increase `paths`", cfg.min_count));
    }
    summary.check(
        "spectral vs monte carlo",
        blocks > 0 && fraction >= tol.cross_fraction,
        fraction,
        format!(">= {} of blocks with >= {} paths agree at {}σ", tol.cross_fraction, cfg.min_count, tol.cross_sigma),
        format!("{agreeing} of {blocks} blocks"),
    );
    summary.check(
        "chapman-kolmogorov",
        max_ck <= cfg.krylov_tolerance,
        max_ck,
        format!("<= {}", cfg.krylov_tolerance),
        "relative residual of p_2t(x,y) vs Σ_z p_t(x,z) p_t(z,y) m_z",
    );
    if ctx.gamma() == 0.0 {
        let r = &outs[0].report;
        relative(&mut summary, "lambda1 disk", r.lambda1, 2.8916 / (radius * radius), tol.eigen_rel, "j_{0,1}²/(2R²)");
        relative(&mut summary, "green sup disk", r.sup, 0.5 * radius * radius, tol.eigen_rel, "E[T_R] from the center = R²/2");
    }
    let fks: Vec<f64> = outs.iter().map(|o| o.fk).collect();
    let fk = MeanEstimate::from_samples(&fks);
    summary.value("faber_krahn/mean", fk.mean);
    summary.value("faber_krahn/std_err", fk.std_err);
    summary.value("faber_krahn/min", fks.iter().copied().fold(f64::INFINITY, f64::min));
    summary.check("faber-krahn positive", fks.iter().all(|&v| v > 0.0), fk.mean, "> 0 on every field", "λ₁ M(U) log(2 + 1/M(U))");
    summary.check(
        "green inequality on balls",
        outs.iter().all(|o| o.report.inequality_holds),
        outs.iter().map(|o| 1.0 / (o.report.lambda1 * o.report.sup)).fold(0.0, f64::max),
        "max 1/(λ₁ ‖G1‖) <= 1",
        "every field",
    );
    // Random domains on the first field.
    let field = ctx.field(0)?;
    let measure = ctx.measure(field.as_ref())?;
    let mut dom_t = Table::new("domains", &["domain", "cells", "lambda1", "green_sup", "mass", "inequality"]);
    let reports = (0..cfg.random_domains)
        .into_par_iter()
        .map(|d| {
            let (cells, desc) = random_domain(&measure, radius, ctx.seed(), d)?;
            let gen = DiscreteGenerator::on_cells(&measure, &cells)?;
            Ok((desc, cells.len(), green_operator_sup(&gen, radius)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut holds = 0;
    let mut worst: f64 = 0.0;
    for (d, (desc, n, r)) in reports.iter().enumerate() {
        dom_t.push(
            &Lineage::new(ctx.seed(), "domain", 0, d),
            vec![desc.clone().into(), (*n).into(), r.lambda1.into(), r.sup.into(), r.mass.into(), r.inequality_holds.into()],
        );
        holds += usize::from(r.inequality_holds);
        worst = worst.max(1.0 / (r.lambda1 * r.sup));
    }
    if cfg.random_domains > 0 {
        summary.check(
            "green inequality on random domains",
            holds == cfg.random_domains,
            worst,
            "max 1/(λ₁ ‖G1‖) <= 1",
            format!("{holds} of {} domains", cfg.random_domains),
        );
    }
    Ok(Part {
        tables: vec![cross_t, block_t, spec_t, dom_t],
        summary,
    })
}

// ---------------------------------------------------------------------------
// ondiag and offdiag

fn ondiag(ctx: &Ctx<'_>) -> Result<Part> {
    let cfg = &ctx.cfg.ondiag;
    let tol = &ctx.cfg.tolerances;
    let mut summary = ctx.summary();
    let profiles = par_fields(ctx, |f| {
        let field = ctx.field(f)?;
        let measure = ctx.measure(field.as_ref())?;
        let gen = assemble_generator(&measure, Point::ORIGIN, cfg.domain_radius)?;
        ondiag_profile(&gen, &cfg.times, &ProbeSet::Stride(cfg.stride), cfg.tolerance)
    })?;
    let stream = if ctx.gamma() > 0.0 { "field" } else { "none" };
    let mut table = Table::new("ondiag", &["t", "sup", "argmax_x", "argmax_y", "error", "normalized", "probes"]);
    for (f, p) in profiles.iter().enumerate() {
        let lin = Lineage::new(ctx.seed(), stream, f, "-");
        for k in 0..p.t.len() {
            table.push(
                &lin,
                vec![p.t[k].into(), p.sup[k].into(), p.argmax[k].x.into(), p.argmax[k].y.into(), p.error[k].into(), p.normalized[k].into(), p.probes.into()],
            );
        }
    }
    if ctx.gamma() == 0.0 {
        let p = &profiles[0];
        for (k, &t) in p.t.iter().enumerate() {
            relative(&mut summary, &format!("2πt p_t t={t}"), 2.0 * PI * t * p.sup[k], 1.0, tol.ondiag_rel, "flat heat kernel 1/(2πt)");
        }
    } else {
        let worst = profiles.iter().map(|p| p.ratio).fold(0.0, f64::max);
        summary.check(
            "normalized on-diagonal ratio",
            worst < tol.ondiag_ratio,
            worst,
            format!("< {}", tol.ondiag_ratio),
            "max over fields of max/min of sup_x p_t(x,x) t / log(1/t)",
        );
    }
    let ratios: Vec<f64> = profiles.iter().map(|p| p.ratio).collect();
    let r = MeanEstimate::from_samples(&ratios);
    summary.value("ratio/mean", r.mean);
    summary.value("ratio/max", ratios.iter().copied().fold(0.0, f64::max));
    Ok(Part {
        tables: vec![table],
        summary,
    })
}

fn offdiag(ctx: &Ctx<'_>) -> Result<Part> {
    let cfg = &ctx.cfg.offdiag;
    let tol = &ctx.cfg.tolerances;
    let mut summary = ctx.summary();
    let src = ctx.source()?;
    let st = cfg.t.sqrt();
    let n = cfg.distances.max(2);
    let distances: Vec<f64> = (0..n)
        .map(|i| st * (cfg.window[0] + (cfg.window[1] - cfg.window[0]) * i as f64 / (n - 1) as f64))
        .collect();
    let width = 1.5 * ctx.geometry.h;
    let results = par_fields(ctx, |f| {
        let field = ctx.field(f)?;
        let measure = ctx.measure(field.as_ref())?;
        let gen = assemble_generator(&measure, src, cfg.domain_radius)?;
        let x = gen.vertex_at(src).expect("source cell lies in its own ball");
        let row = kernel_rows(&gen, x, &[cfg.t], ctx.cfg.heat.krylov_tolerance)?.remove(0);
        let profile = radial_profile(&gen, &row, &distances, width)?;
        let fit = offdiag_tail_fit(&profile, cfg.floor)?;
        Ok((profile, fit))
    })?;
    let stream = if ctx.gamma() > 0.0 { "field" } else { "none" };
    let mut table = Table::new("offdiag", &["t", "distance", "ring_mean", "peak", "slope"]);
    for (f, (p, fit)) in results.iter().enumerate() {
        let lin = Lineage::new(ctx.seed(), stream, f, "-");
        for (d, v) in p.distances.iter().zip(&p.values) {
            table.push(&lin, vec![cfg.t.into(), (*d).into(), (*v).into(), p.peak.into(), fit.slope.into()]);
        }
    }
    let (profiles, fits): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    if ctx.gamma() == 0.0 {
        within(&mut summary, "stretch slope", fits[0].slope, 2.0, tol.stretch_gaussian, "Gaussian decay exp(-d²/2t)");
    }
    if fits.len() >= 2 {
        let s = stretch_summary(&fits, &profiles)?;
        summary.value("slope/mean", s.slope.mean);
        summary.value("slope/std_err", s.slope.std_err);
        summary.value("slope/lower95", s.lower95);
        if !s.monotonicity_violations.is_empty() {
            summary.warnings.push(format!("mean profile increases at {:?}", s.monotonicity_violations));
        }
        if ctx.gamma() > 0.0 {
            summary.check("stretch slope > 1", s.lower95 > 1.0, s.slope.mean, "lower 95% bound > 1", format!("lower bound {:.4} over {} fields", s.lower95, fits.len()));
        }
    }
    for (f, fit) in fits.into_iter().enumerate() {
        store_fit(&mut summary, &format!("field {f}"), fit);
    }
    Ok(Part {
        tables: vec![table],
        summary,
    })
}

// ---------------------------------------------------------------------------
// feller-scan

fn feller(ctx: &Ctx<'_>) -> Result<Part> {
    let cfg = &ctx.cfg.feller;
    let tol = &ctx.cfg.tolerances;
    let mut summary = ctx.summary();
    let none = Lineage::new(0, "none", "-", "-");
    let mut tv = Table::new("tv", &["rho", "closed_form", "quadrature"]);
    for &rho in &cfg.tv_ratios {
        let quad = if rho > 0.0 { harmonic_tv_distance(1.0, Point::new(1.0 / rho, 0.0))? } else { 0.0 };
        tv.push(&none, vec![rho.into(), tv_at_ratio(rho).into(), quad.into()]);
    }
    within(&mut summary, "tv rho=1/2", tv_at_ratio(0.5), 2.0 / 3.0, tol.tv_abs, "closed form");
    within(&mut summary, "tv rho=1/2 quadrature", harmonic_tv_distance(1.0, Point::new(2.0, 0.0))?, 2.0 / 3.0, tol.tv_abs, "Poisson kernel quadrature");
    summary.check("tv vanishes", tv_at_ratio(1e-6) < 1e-5, tv_at_ratio(1e-6), "< 1e-5 at rho = 1e-6", "TV → 0 as rho → 0");

    let decay_cfg = FellerScanConfig {
        t: cfg.t,
        radius: cfg.radius,
        distances: cfg.distances.clone(),
        angles: vec![0.0],
        paths: ctx.cfg.paths,
        dt: ctx.cfg.dt,
        horizon: ctx.cfg.horizon,
    };
    let mut rot_angles = vec![0.0];
    rot_angles.extend(cfg.rotation_angles.iter().copied());
    let rot_cfg = FellerScanConfig {
        distances: vec![cfg.rotation_distance],
        angles: rot_angles,
        ..decay_cfg.clone()
    };
    let scans: Vec<(Vec<FieldPoint>, Vec<FieldPoint>)> = par_fields(ctx, |f| {
        let field = ctx.field(f)?;
        let integrand = ctx.integrand(field.as_ref());
        Ok((
            feller_scan_field(integrand, &decay_cfg, ctx.seed(), f as u32)?,
            feller_scan_field(integrand, &rot_cfg, ctx.seed(), f as u32)?,
        ))
    })?;
    let (decay, rot): (Vec<_>, Vec<_>) = scans.into_iter().unzip();
    let mut points = Table::new("points", &["scan", "distance", "angle", "hit", "g", "paths", "excursions"]);
    for (f, (d, r)) in decay.iter().zip(&rot).enumerate() {
        let lin = Lineage::new(ctx.seed(), "path", f, Lineage::range(0, ctx.cfg.paths * d.len().max(r.len())));
        for (name, pts) in [("decay", d), ("rotation", r)] {
            for p in pts {
                points.push(
                    &lin,
                    vec![name.into(), p.distance.into(), p.angle.into(), p.hit.into(), p.g.into(), p.paths.into(), p.excursions.into()],
                );
            }
        }
    }
    let scan = aggregate_scan(&decay)?;
    let lin = Lineage::new(ctx.seed(), "path", ctx.field_range(), Lineage::range(0, ctx.cfg.paths * cfg.distances.len()));
    let mut table = Table::new("decay", &["distance", "estimate", "stderr", "g", "g_stderr", "n_fields", "n_paths"]);
    for p in &scan.points {
        table.push(
            &lin,
            vec![p.distance.into(), p.hit.mean.into(), p.hit.std_err.into(), p.g.mean.into(), p.g.std_err.into(), p.n_fields.into(), p.n_paths.into()],
        );
    }
    summary.check("hit probability nonincreasing", scan.hit_nonincreasing, f64::NAN, "2σ rule", "P_x[Y_t ∈ D_R] against |x|");
    summary.check("g nonincreasing", scan.g_nonincreasing, f64::NAN, "2σ rule", "g(x) against |x|");
    if let Some(last) = scan.points.last() {
        summary.check(
            "far-end hit probability",
            last.hit.mean < cfg.epsilon,
            last.hit.mean,
            format!("< {}", cfg.epsilon),
            format!("at |x| = {}", last.distance),
        );
    }
    if ctx.gamma() == 0.0 {
        // Pooled over fields: at γ = 0 every field gives Brownian motion.
        let k = tol.gaussian_mc_sigma;
        let (mut hit_ok, mut g_ok) = (true, true);
        let mut worst: f64 = 0.0;
        for (i, &d) in cfg.distances.iter().enumerate() {
            let n: usize = decay.iter().map(|f| f[i].paths).sum();
            let hit = decay.iter().map(|f| f[i].hit * f[i].paths as f64).sum::<f64>() / n as f64;
            let g = decay.iter().map(|f| f[i].g * f[i].paths as f64).sum::<f64>() / n as f64;
            let exact = gaussian_disk_probability(Point::new(d, 0.0), cfg.t, cfg.radius)?;
            let se = (exact.max(1.0 / n as f64) * (1.0 - exact) / n as f64).sqrt();
            let z = (hit - exact).abs() / se;
            worst = worst.max(z);
            hit_ok &= z <= k;
            let (lo, hi) = gaussian_running_sup_bounds(d - cfg.radius, cfg.t);
            let gse = (g.max(1.0 / n as f64) * (1.0 - g).max(1.0 / n as f64) / n as f64).sqrt();
            g_ok &= g >= lo - k * gse && g <= (hi + k * gse).min(1.0);
        }
        summary.check("hit vs gaussian", hit_ok, worst, format!("|z| <= {k}"), "P[|x + W_t| < R] by polar quadrature");
        summary.check("g within gaussian bounds", g_ok, f64::NAN, format!("[e^(-a²/2t), 2e^(-a²/2t)] ± {k}σ"), "a = |x| − R");
    }
    let mut rot_t = Table::new("rotation", &["distance", "angle", "difference", "std_err", "z"]);
    if ctx.gamma() == 0.0 {
        // Brownian motion: each angle uses its own path indices, so the pooled
        // estimates are independent binomials.
        let pooled = |i: usize| {
            let n: usize = rot.iter().map(|f| f[i].paths).sum();
            let g = rot.iter().map(|f| f[i].g * f[i].paths as f64).sum::<f64>() / n as f64;
            (g, n as f64)
        };
        let (g0, n0) = pooled(0);
        let mut worst: f64 = 0.0;
        for i in 1..rot[0].len() {
            let (g, n) = pooled(i);
            let p = (g * n + g0 * n0) / (n + n0);
            let se = (p * (1.0 - p) * (1.0 / n + 1.0 / n0)).sqrt();
            let z = if se > 0.0 { (g - g0) / se } else { 0.0 };
            worst = worst.max(z.abs());
            let p = &rot[0][i];
            rot_t.push(&lin, vec![p.distance.into(), p.angle.into(), (g - g0).into(), se.into(), z.into()]);
        }
        summary.check(
            "rotation invariance",
            worst <= tol.rotation_sigma,
            worst,
            format!("|z| <= {}", tol.rotation_sigma),
            "pooled binomial difference of g against angle 0",
        );
    } else if ctx.fields() >= 2 {
        let checks = rotation_test(&rot, 0.0)?;
        let worst = checks.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
        for c in &checks {
            rot_t.push(&lin, vec![c.distance.into(), c.angle.into(), c.difference.mean.into(), c.difference.std_err.into(), c.z.into()]);
        }
        summary.check(
            "rotation invariance",
            worst <= tol.rotation_sigma,
            worst,
            format!("|z| <= {}", tol.rotation_sigma),
            "paired per-field differences of g against angle 0",
        );
    } else {
        summary.warnings.push("rotation test needs at least two fields; skipped".into());
    }
    Ok(Part {
        tables: vec![tv, table, points, rot_t],
        summary,
    })
}

// ---------------------------------------------------------------------------
// gamma-zero-suite

/// Every campaign at `γ = 0`, where the exact Brownian and Lebesgue oracles
/// apply; tables are prefixed with the sub-campaign name.
fn gamma_zero_suite(cfg: &ExperimentConfig, cache: &FieldCache) -> Result<Part> {
    let mut out = Part::default();
    let spec = cfg.kernel()?;
    let schedule = cfg.schedule.build()?;
    let kernel = kernel_identities(&spec, &schedule, &mut out.summary)?;
    out.tables.push(kernel);
    for name in ["measure-scaling", "exit-moments", "exit-tails", "heat-kernel", "ondiag", "offdiag", "feller-scan"] {
        let sub = ExperimentConfig {
            campaign: name.to_string(),
            gamma: 0.0,
            ..cfg.clone()
        };
        let ctx = Ctx::new(&sub, cache)?;
        let part = match name {
            "measure-scaling" => measure_scaling(&ctx),
            "exit-moments" => exit_moments(&ctx),
            "exit-tails" => exit_tails(&ctx),
            "heat-kernel" => heat_kernel(&ctx),
            "ondiag" => ondiag(&ctx),
            "offdiag" => offdiag(&ctx),
            _ => feller(&ctx),
        }?;
        for mut t in part.tables {
            t.name = format!("{name}.{}", t.name);
            out.tables.push(t);
        }
        out.summary.absorb(name, part.summary);
    }
    Ok(out)
}
