//! Acceptance criteria 1 to 11, one PASS/FAIL line each.
//!
//! Run a subset with `cargo test --test acceptance -- ac5 ac7`.

use std::path::Path;
use std::time::Instant;

use liouville_lab::gaussian_field::{green_function, kernel_km, layer_covariance, layer_tail, KernelSpec, LayerSchedule};
use liouville_lab::harness::{
    emit, run_campaign_with, CampaignResult, Check, ExperimentConfig, FieldCache, Format, GridConfig,
    ScheduleConfig, CAMPAIGNS,
};
use liouville_lab::lbm::StartRule;
use liouville_lab::Result;

const SEED: u64 = 20_241_016;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn from_checks(checks: &[&Check]) -> Self {
        let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
        let detail = checks
            .iter()
            .map(|c| format!("{}{}={}", if c.passed { "" } else { "!" }, c.name, short(c.value)))
            .collect::<Vec<_>>()
            .join("; ");
        Self { passed, detail }
    }

    fn and(self, other: Outcome) -> Outcome {
        Outcome {
            passed: self.passed && other.passed,
            detail: format!("{}; {}", self.detail, other.detail),
        }
    }
}

fn short(v: f64) -> String {
    if v.is_nan() {
        "-".into()
    } else if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:.3e}")
    } else {
        format!("{v:.5}")
    }
}

fn config(campaign: &str, gamma: f64) -> ExperimentConfig {
    ExperimentConfig {
        campaign: campaign.into(),
        gamma,
        seed: SEED,
        ..Default::default()
    }
}

fn run(cfg: &ExperimentConfig) -> Result<CampaignResult> {
    run_campaign_with(cfg, &FieldCache::disabled())
}

fn checks<'a>(res: &'a CampaignResult, names: &[&str]) -> Vec<&'a Check> {
    res.summary
        .checks
        .iter()
        .filter(|c| names.iter().any(|n| c.name == *n || (n.ends_with('*') && c.name.starts_with(&n[..n.len() - 1]))))
        .collect()
}

struct Shared {
    heat_gamma: Option<CampaignResult>,
}

impl Shared {
    /// Heat-kernel campaign at γ = 0.5 on 20 fields, used by AC7 and AC8.
    fn heat_gamma(&mut self) -> Result<&CampaignResult> {
        if self.heat_gamma.is_none() {
            let mut c = config("heat-kernel", 0.5);
            c.grid = GridConfig { half_width: 1.25, n: 128 };
            c.schedule = ScheduleConfig::Dyadic { layers: 4 };
            c.fields = 20;
            c.paths = 20_000;
            c.dt = 1e-4;
            c.horizon = 50.0;
            c.heat.random_domains = 0;
            self.heat_gamma = Some(run(&c)?);
        }
        Ok(self.heat_gamma.as_ref().unwrap())
    }
}

fn ac1(_: &mut Shared) -> Result<Outcome> {
    let unit = KernelSpec::new(1.0)?;
    let heavy = KernelSpec::new(2.5)?;
    let schedule = LayerSchedule::dyadic(6)?;
    let mut ok = true;
    let mut detail = Vec::new();
    let mut close = |name: &str, v: f64, target: f64, tol: f64| {
        let pass = (v - target).abs() <= tol;
        ok &= pass;
        detail.push(format!("{}{name}={v:.7}", if pass { "" } else { "!" }));
    };
    close("k_1(0)", kernel_km(&unit, 0.0)?, 1.0, 1e-10);
    close("k_2.5(0)", kernel_km(&heavy, 0.0)?, 1.0, 1e-10);
    close("k_1(1)", kernel_km(&unit, 1.0)?, 0.60191, 1e-5);
    close("G_1(1)", green_function(&unit, 1.0)?, 0.42102, 1e-5);
    for lag in [0.01, 0.1, 0.5, 2.0] {
        let layered: f64 = (1..=schedule.layers()).map(|k| layer_covariance(&unit, &schedule, k, lag)).sum::<Result<f64>>()?;
        let total = layered + layer_tail(&unit, &schedule, lag)?;
        close(&format!("sum+tail-G(r={lag})"), total - green_function(&unit, lag)?, 0.0, 1e-6);
    }
    Ok(Outcome {
        passed: ok,
        detail: detail.join("; "),
    })
}

fn ac2(_: &mut Shared) -> Result<Outcome> {
    let mut c = config("field-sample", 0.0);
    c.grid = GridConfig { half_width: 2.0, n: 256 };
    c.schedule = ScheduleConfig::Dyadic { layers: 4 };
    c.fields = 200;
    let res = run(&c)?;
    Ok(Outcome::from_checks(&checks(&res, &["variance", "covariance lag=*"])))
}

fn ac3(_: &mut Shared) -> Result<Outcome> {
    let mut out: Option<Outcome> = None;
    for gamma in [0.5, 1.0] {
        let mut c = config("measure-scaling", gamma);
        c.grid = GridConfig { half_width: 2.0, n: 256 };
        c.schedule = ScheduleConfig::Dyadic { layers: 5 };
        c.fields = 200;
        c.moments.qs = vec![1.0];
        c.moments.radii_cells = vec![4, 16, 64];
        c.moments.holder_levels = vec![];
        let res = run(&c)?;
        let mut o = Outcome::from_checks(&checks(&res, &["ball mass"]));
        o.detail = format!(
            "γ={gamma}: M(B_1)={:.4}±{:.4}",
            res.summary.values["ball/mean"], res.summary.values["ball/std_err"]
        ) + if o.passed { "" } else { " !" };
        out = Some(match out {
            None => o,
            Some(p) => p.and(o),
        });
    }
    Ok(out.unwrap())
}

fn ac4(_: &mut Shared) -> Result<Outcome> {
    let mut out: Option<Outcome> = None;
    for (gamma, fields) in [(0.5, 500), (0.0, 2)] {
        let mut c = config("measure-scaling", gamma);
        c.grid = GridConfig { half_width: 2.0, n: 256 };
        c.schedule = ScheduleConfig::Dyadic { layers: 6 };
        c.fields = fields;
        c.moments.qs = vec![0.5, 1.0, 2.0];
        c.moments.radii_cells = vec![4, 8, 16, 32, 64];
        let res = run(&c)?;
        let mut o = Outcome::from_checks(&checks(&res, &["moment slope q=*"]));
        o.detail = format!("γ={gamma}: {}", o.detail);
        out = Some(match out {
            None => o,
            Some(p) => p.and(o),
        });
    }
    Ok(out.unwrap())
}

fn exit_config(campaign: &str, gamma: f64) -> ExperimentConfig {
    let mut c = config(campaign, gamma);
    c.grid = GridConfig { half_width: 1.25, n: 256 };
    c.schedule = ScheduleConfig::Dyadic { layers: 5 };
    c.dt = 5e-5;
    c.horizon = 5.0;
    c.fields = 50;
    c.paths = 200;
    c.exit.radii = vec![0.25, 0.5, 1.0];
    c.exit.qs = vec![1.0];
    c
}

fn ac5(_: &mut Shared) -> Result<Outcome> {
    let mut flat = exit_config("exit-moments", 0.0);
    flat.fields = 1;
    flat.paths = 10_000;
    flat.exit.start = StartRule::Center;
    let res = run(&flat)?;
    let a = Outcome::from_checks(&checks(&res, &["mean exit r=1", "inverse moment slope q=1"]));
    let rough = exit_config("exit-moments", 0.5);
    let res = run(&rough)?;
    let b = Outcome::from_checks(&checks(&res, &["inverse moment ratio q=1"]));
    Ok(a.and(b))
}

fn ac6(_: &mut Shared) -> Result<Outcome> {
    let mut c = exit_config("exit-tails", 0.5);
    c.exit.start = StartRule::Center;
    let res = run(&c)?;
    Ok(Outcome::from_checks(&checks(&res, &["monotone in t r=*", "monotone in r", "stretched exponent r=*"])))
}

fn ac7(shared: &mut Shared) -> Result<Outcome> {
    let mut c = config("heat-kernel", 0.0);
    c.grid = GridConfig { half_width: 1.25, n: 128 };
    c.fields = 1;
    c.paths = 20_000;
    c.dt = 1e-4;
    c.horizon = 50.0;
    c.heat.random_domains = 20;
    let res = run(&c)?;
    let a = Outcome::from_checks(&checks(&res, &["lambda1 disk", "green sup disk", "green inequality on random domains"]));
    let res = shared.heat_gamma()?;
    let mut b = Outcome::from_checks(&checks(res, &["faber-krahn positive"]));
    b.detail = format!(
        "{} (γ=0.5, 20 fields: mean {:.4} ± {:.4}, min {:.4})",
        b.detail,
        res.summary.values["faber_krahn/mean"],
        res.summary.values["faber_krahn/std_err"],
        res.summary.values["faber_krahn/min"]
    );
    Ok(a.and(b))
}

fn ondiag_config(gamma: f64, fields: usize) -> ExperimentConfig {
    let mut c = config("ondiag", gamma);
    c.grid = GridConfig { half_width: 2.0, n: 128 };
    c.schedule = ScheduleConfig::Dyadic { layers: 4 };
    c.fields = fields;
    c
}

fn ac8(shared: &mut Shared) -> Result<Outcome> {
    let res = run(&ondiag_config(0.0, 1))?;
    let a = Outcome::from_checks(&checks(&res, &["2πt p_t t=*"]));
    let res = shared.heat_gamma()?;
    let b = Outcome::from_checks(&checks(res, &["spectral vs monte carlo", "chapman-kolmogorov"]));
    let res = run(&ondiag_config(0.5, 3))?;
    let c = Outcome::from_checks(&checks(&res, &["normalized on-diagonal ratio"]));
    Ok(a.and(b).and(c))
}

fn ac9(_: &mut Shared) -> Result<Outcome> {
    let mut out: Option<Outcome> = None;
    for (gamma, fields, name) in [(0.0, 1, "stretch slope"), (0.5, 20, "stretch slope > 1")] {
        let mut c = config("offdiag", gamma);
        c.grid = GridConfig { half_width: 2.0, n: 128 };
        c.schedule = ScheduleConfig::Dyadic { layers: 4 };
        c.fields = fields;
        let res = run(&c)?;
        let mut o = Outcome::from_checks(&checks(&res, &[name]));
        if gamma > 0.0 {
            o.detail = format!("{} (lower 95% {:.4})", o.detail, res.summary.values["slope/lower95"]);
        }
        out = Some(match out {
            None => o,
            Some(p) => p.and(o),
        });
    }
    Ok(out.unwrap())
}

fn ac10(_: &mut Shared) -> Result<Outcome> {
    let mut c = config("feller-scan", 0.5);
    c.grid = GridConfig { half_width: 10.0, n: 512 };
    c.schedule = ScheduleConfig::Dyadic { layers: 3 };
    c.fields = 20;
    c.paths = 1000;
    c.dt = 1e-3;
    c.horizon = 20.0;
    let res = run(&c)?;
    Ok(Outcome::from_checks(&checks(
        &res,
        &["tv rho=1/2", "tv rho=1/2 quadrature", "tv vanishes", "rotation invariance", "hit probability nonincreasing", "far-end hit probability"],
    )))
}

/// Small configuration of each campaign for the determinism check.
fn tiny(campaign: &str) -> ExperimentConfig {
    let mut c = config(campaign, if campaign == "gamma-zero-suite" { 0.0 } else { 0.5 });
    c.grid = GridConfig { half_width: 2.0, n: 64 };
    c.schedule = ScheduleConfig::Dyadic { layers: 3 };
    c.fields = 2;
    c.paths = 40;
    c.dt = 1e-3;
    c.horizon = 20.0;
    c.moments.radii_cells = vec![1, 2, 4, 8, 16];
    c.moments.holder_levels = vec![1, 2, 3];
    c.exit.start = StartRule::default();
    c.heat.random_domains = 2;
    c.ondiag.times = vec![0.05, 0.2];
    c.ondiag.stride = 16;
    c.feller.distances = vec![0.75, 1.0, 1.5];
    if campaign == "feller-scan" {
        c.grid = GridConfig { half_width: 5.0, n: 128 };
    }
    c
}

fn emitted(dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)?
        .map(|e| {
            let p = e?.path();
            Ok((p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p)?))
        })
        .filter(|f: &Result<(String, Vec<u8>)>| f.as_ref().map_or(true, |(n, _)| !n.ends_with(".timing.json")))
        .collect::<Result<_>>()?;
    files.sort();
    Ok(files)
}

fn ac11(_: &mut Shared) -> Result<Outcome> {
    let root = tempfile::tempdir()?;
    let mut mismatched = Vec::new();
    let mut total = 0;
    for &campaign in CAMPAIGNS.iter() {
        let c = tiny(campaign);
        let a = root.path().join(format!("{campaign}-a"));
        let b = root.path().join(format!("{campaign}-b"));
        let first = run(&c).map_err(|e| liouville_lab::Error::Config(format!("{campaign}: {e}")))?;
        emit(&first, &c, &a, &[Format::Csv, Format::Json])?;
        // Second run on a three-thread pool: results must not depend on scheduling.
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().expect("thread pool");
        let second = pool.install(|| run(&c))?;
        emit(&second, &c, &b, &[Format::Csv, Format::Json])?;
        let (fa, fb) = (emitted(&a)?, emitted(&b)?);
        total += fa.len();
        if fa != fb {
            mismatched.push(campaign);
        }
    }
    // Substream independence: with a uniform start every (field, path) pair
    // of the exit table is drawn once.
    let c = tiny("exit-moments");
    let res = run(&c)?;
    let t = res.table("exits").expect("exit table");
    let (fi, pi) = (t.column("field").unwrap(), t.column("path").unwrap());
    let mut ids: Vec<String> = t.rows.iter().map(|r| format!("{:?}/{:?}", r[fi], r[pi])).collect();
    let n = ids.len();
    ids.sort();
    ids.dedup();
    let unique = ids.len() == n;
    Ok(Outcome {
        passed: mismatched.is_empty() && unique,
        detail: format!(
            "{total} files over {} campaigns identical{}; {} exit stream ids {}",
            CAMPAIGNS.len(),
            if mismatched.is_empty() { String::new() } else { format!(" except {mismatched:?}") },
            n,
            if unique { "distinct" } else { "COLLIDE" }
        ),
    })
}

type Criterion = (usize, &'static str, fn(&mut Shared) -> Result<Outcome>);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "kernel identities", ac1),
        (2, "field statistics", ac2),
        (3, "measure mean", ac3),
        (4, "multifractal scaling", ac4),
        (5, "exit times", ac5),
        (6, "exit tails", ac6),
        (7, "spectral suite", ac7),
        (8, "heat kernel", ac8),
        (9, "off-diagonal decay", ac9),
        (10, "feller suite", ac10),
        (11, "determinism", ac11),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).map(|a| a.to_lowercase()).collect();
    let mut shared = Shared { heat_gamma: None };
    let mut failed = Vec::new();
    for (id, title, f) in criteria {
        let tag = format!("ac{id}");
        if !filters.is_empty() && !filters.iter().any(|x| *x == tag) {
            continue;
        }
        let start = Instant::now();
        let outcome = f(&mut shared).unwrap_or_else(|e| Outcome {
            passed: false,
            detail: format!("error: {e}"),
        });
        println!(
            "AC{id:<2} {} {title}: {} [{:.1} s]",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        if !outcome.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria pass");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
