//! Experiment configuration: one TOML file per campaign.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gaussian_field::{KernelSpec, LayerSchedule};
use crate::geometry::Geometry;
use crate::lbm::StartRule;
use crate::liouville_measure::{ScaledSet, SpectrumParams};

pub const CAMPAIGNS: [&str; 9] = [
    "field-sample",
    "measure-scaling",
    "exit-moments",
    "exit-tails",
    "heat-kernel",
    "ondiag",
    "offdiag",
    "feller-scan",
    "gamma-zero-suite",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleConfig {
    /// `c_k = 2^k`.
    Dyadic { layers: usize },
    /// `c_k = base^k`.
    Geometric { base: f64, layers: usize },
    Explicit { cutoffs: Vec<f64> },
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<LayerSchedule> {
        match self {
            ScheduleConfig::Dyadic { layers } => LayerSchedule::dyadic(*layers),
            ScheduleConfig::Geometric { base, layers } => LayerSchedule::geometric(*base, *layers),
            ScheduleConfig::Explicit { cutoffs } => LayerSchedule::new(cutoffs.clone()),
        }
    }
}

/// Square grid of `n × n` cells on `[−half_width, half_width]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub n: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<Geometry> {
        Geometry::centered(self.half_width, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentConfig {
    pub qs: Vec<f64>,
    /// Scales `r` in units of the grid spacing.
    pub radii_cells: Vec<usize>,
    pub set: ScaledSet,
    /// Radius of the ball whose mean mass is compared with its area.
    pub ball_radius: f64,
    /// Dyadic levels of the Hölder statistic; skipped when the window does
    /// not fit the grid.
    pub holder_levels: Vec<u32>,
}

impl Default for MomentConfig {
    fn default() -> Self {
        Self {
            qs: vec![0.5, 1.0, 2.0],
            radii_cells: vec![4, 8, 16, 32, 64],
            set: ScaledSet::Square,
            ball_radius: 1.0,
            holder_levels: vec![1, 2, 3, 4, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExitConfig {
    pub radii: Vec<f64>,
    pub qs: Vec<f64>,
    pub start: StartRule,
    /// Tail times as multiples of `r²`.
    pub tail_times: Vec<f64>,
    /// Halve `dt` until the std of `γ`-field increments is below this;
    /// zero disables adaptation.
    pub adapt_threshold: f64,
}

impl Default for ExitConfig {
    fn default() -> Self {
        Self {
            radii: vec![0.25, 0.5, 1.0],
            qs: vec![1.0],
            start: StartRule::default(),
            tail_times: vec![0.06, 0.08, 0.1, 0.13, 0.17, 0.22, 0.3],
            adapt_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatConfig {
    pub domain_radius: f64,
    pub t: f64,
    pub block: usize,
    pub min_count: usize,
    /// Random sub-domains on which `λ₁⁻¹ ≤ ‖G_U 1‖_∞` is checked.
    pub random_domains: usize,
    pub krylov_tolerance: f64,
}

impl Default for HeatConfig {
    fn default() -> Self {
        Self {
            domain_radius: 1.0,
            t: 0.05,
            block: 4,
            min_count: 50,
            random_domains: 20,
            krylov_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnDiagConfig {
    pub domain_radius: f64,
    pub times: Vec<f64>,
    pub stride: usize,
    pub tolerance: f64,
}

impl Default for OnDiagConfig {
    fn default() -> Self {
        Self {
            domain_radius: 1.5,
            times: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5],
            stride: 4,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OffDiagConfig {
    pub domain_radius: f64,
    pub t: f64,
    /// Fit window `[lo √t, hi √t]`.
    pub window: [f64; 2],
    pub distances: usize,
    /// Values below this are excluded from the fit.
    pub floor: f64,
}

impl Default for OffDiagConfig {
    fn default() -> Self {
        Self {
            domain_radius: 1.5,
            t: 0.05,
            window: [3.0, 4.5],
            distances: 6,
            floor: 1e-250,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FellerConfig {
    pub t: f64,
    pub radius: f64,
    pub distances: Vec<f64>,
    pub rotation_distance: f64,
    pub rotation_angles: Vec<f64>,
    pub epsilon: f64,
    /// Ratios `ρ = |x'| / n` at which the total-variation distance is tabulated.
    pub tv_ratios: Vec<f64>,
}

impl Default for FellerConfig {
    fn default() -> Self {
        Self {
            t: 0.1,
            radius: 0.5,
            distances: vec![0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.2],
            rotation_distance: 0.9,
            rotation_angles: vec![
                std::f64::consts::FRAC_PI_4,
                std::f64::consts::FRAC_PI_2,
                std::f64::consts::PI,
                1.5 * std::f64::consts::PI,
            ],
            epsilon: 1e-3,
            tv_ratios: vec![0.0, 0.1, 0.25, 0.5, 0.75, 0.9],
        }
    }
}

/// Tolerances of the pass/fail checks recorded in campaign summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub covariance_se: f64,
    pub mean_mass_se: f64,
    pub moment_slope: f64,
    pub lebesgue_slope: f64,
    pub exit_mean_rel: f64,
    pub exit_slope: f64,
    pub exit_ratio: f64,
    pub eigen_rel: f64,
    pub ondiag_rel: f64,
    pub ondiag_ratio: f64,
    pub cross_fraction: f64,
    pub cross_sigma: f64,
    pub stretch_gaussian: f64,
    pub tv_abs: f64,
    pub rotation_sigma: f64,
    pub gaussian_mc_sigma: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            covariance_se: 4.0,
            mean_mass_se: 3.0,
            moment_slope: 0.15,
            lebesgue_slope: 0.05,
            exit_mean_rel: 0.02,
            exit_slope: 0.05,
            exit_ratio: 3.0,
            eigen_rel: 0.03,
            ondiag_rel: 0.05,
            ondiag_ratio: 50.0,
            cross_fraction: 0.9,
            cross_sigma: 3.0,
            stretch_gaussian: 0.1,
            tv_abs: 1e-8,
            rotation_sigma: 3.0,
            gaussian_mc_sigma: 3.0,
        }
    }
}

/// Everything a campaign needs; serializes to and from TOML losslessly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub campaign: String,
    pub gamma: f64,
    pub mass: f64,
    pub seed: u64,
    pub schedule: ScheduleConfig,
    pub grid: GridConfig,
    pub dt: f64,
    pub horizon: f64,
    pub fields: usize,
    pub paths: usize,
    pub output: PathBuf,
    pub moments: MomentConfig,
    pub exit: ExitConfig,
    pub heat: HeatConfig,
    pub ondiag: OnDiagConfig,
    pub offdiag: OffDiagConfig,
    pub feller: FellerConfig,
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            campaign: "gamma-zero-suite".into(),
            gamma: 0.0,
            mass: 1.0,
            seed: 1,
            schedule: ScheduleConfig::Dyadic { layers: 4 },
            grid: GridConfig { half_width: 2.0, n: 128 },
            dt: 1e-4,
            horizon: 5.0,
            fields: 4,
            paths: 500,
            output: PathBuf::from("results"),
            moments: MomentConfig::default(),
            exit: ExitConfig::default(),
            heat: HeatConfig::default(),
            ondiag: OnDiagConfig::default(),
            offdiag: OffDiagConfig::default(),
            feller: FellerConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !CAMPAIGNS.contains(&self.campaign.as_str()) {
            return Err(Error::UnknownCampaign(self.campaign.clone()));
        }
        SpectrumParams::new(self.gamma).map_err(|_| {
            Error::Config(format!("gamma = {} is out of range; gamma must satisfy 0 <= gamma < 2", self.gamma))
        })?;
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Config(format!("mass m = {} must be positive", self.mass)));
        }
        if self.fields == 0 || self.paths == 0 {
            return Err(Error::Config("ensemble sizes `fields` and `paths` must be at least 1".into()));
        }
        if !(self.dt > 0.0 && self.horizon > self.dt) {
            return Err(Error::Config(format!(
                "need 0 < dt < horizon, got dt = {} and horizon = {}",
                self.dt, self.horizon
            )));
        }
        self.schedule.build().map_err(|e| Error::Config(format!("schedule: {e}")))?;
        self.grid.build().map_err(|e| Error::Config(format!("grid: {e}")))?;
        Ok(())
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        KernelSpec::new(self.mass)
    }

    pub fn spectrum(&self) -> Result<SpectrumParams> {
        SpectrumParams::new(self.gamma)
    }

    /// SHA-256 of the canonical JSON form, in hex. The output directory is
    /// left out because it does not affect results.
    pub fn hash(&self) -> String {
        let canonical = Self {
            output: PathBuf::new(),
            ..self.clone()
        };
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex(&Sha256::digest(json))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_is_lossless() {
        let mut c = ExperimentConfig {
            campaign: "exit-moments".into(),
            gamma: 0.1 + 0.2,
            dt: 1.0 / 3.0 * 1e-4,
            ..Default::default()
        };
        c.exit.start = StartRule::UniformOnCircle { fraction: 0.5 };
        c.schedule = ScheduleConfig::Explicit { cutoffs: vec![1.0, 3.0, 7.25] };
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn rejects_out_of_range_gamma() {
        let err = ExperimentConfig::from_toml("campaign = \"ondiag\"\ngamma = 2.5\n").unwrap_err();
        assert!(err.to_string().contains("0 <= gamma < 2"), "{err}");
    }

    #[test]
    fn rejects_unknown_campaign_and_fields() {
        assert!(matches!(
            ExperimentConfig::from_toml("campaign = \"nope\"\n"),
            Err(Error::UnknownCampaign(_))
        ));
        assert!(ExperimentConfig::from_toml("campaign = \"ondiag\"\ngama = 0.5\n").is_err());
    }
}
