//! The stationary kernel `k_m`, the layered covariances and the Green function.

use std::cell::RefCell;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};

/// Lower end of the `s`-integral in [`kernel_km`]. The integrand is bounded
/// by `½`, so dropping `(0, S_MIN)` costs at most `S_MIN / 2 = 1e-13`.
pub const S_MIN: f64 = 2e-13;

/// Base upper end of the `s`-integral; the dropped tail is below `e^{-30}`.
pub const S_MAX_BASE: f64 = 60.0;

/// Mass and quadrature tolerance for the kernel `k_m`.
///
/// `k_m(r) = ½ ∫₀^∞ exp(−m² r² / (2s) − s/2) ds`, a continuous covariance
/// kernel with `k_m(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub mass: f64,
    /// Relative quadrature tolerance.
    pub tolerance: f64,
}

impl KernelSpec {
    pub fn new(mass: f64) -> Result<Self> {
        Self::with_tolerance(mass, 1e-10)
    }

    pub fn with_tolerance(mass: f64, tolerance: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Domain {
                quantity: "m",
                value: mass,
                expected: "m > 0".into(),
            });
        }
        if !(tolerance > 0.0 && tolerance < 1.0) {
            return Err(Error::Domain {
                quantity: "tolerance",
                value: tolerance,
                expected: "0 < tolerance < 1".into(),
            });
        }
        Ok(Self { mass, tolerance })
    }

    fn options(&self) -> QuadratureOptions {
        QuadratureOptions {
            abs_tol: 1e-3 * self.tolerance,
            rel_tol: self.tolerance,
            max_intervals: 4000,
        }
    }

    /// Upper cutoff of the `s`-integral at lag `r`; it sits well beyond the
    /// integrand's peak at `s = m r`.
    pub fn upper_cutoff(&self, r: f64) -> f64 {
        S_MAX_BASE + 4.0 * self.mass * r
    }
}

/// Cutoffs `1 = c_0 < c_1 < … < c_N` of the layered regularization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSchedule {
    cutoffs: Vec<f64>,
}

impl LayerSchedule {
    pub fn new(cutoffs: Vec<f64>) -> Result<Self> {
        if cutoffs.len() < 2 {
            return Err(Error::InvalidArgument(
                "a layer schedule needs at least one layer (c_0 and c_1)".into(),
            ));
        }
        if cutoffs[0] != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "schedule must start at c_0 = 1, got {}",
                cutoffs[0]
            )));
        }
        if cutoffs.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidArgument(
                "schedule cutoffs must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self { cutoffs })
    }

    /// `c_k = 2^k` for `k = 0..=n`.
    pub fn dyadic(n: usize) -> Result<Self> {
        Self::new((0..=n).map(|k| 2f64.powi(k as i32)).collect())
    }

    /// `c_k = base^k` for `k = 0..=n`.
    pub fn geometric(base: f64, n: usize) -> Result<Self> {
        Self::new((0..=n).map(|k| base.powi(k as i32)).collect())
    }

    pub fn layers(&self) -> usize {
        self.cutoffs.len() - 1
    }

    pub fn cutoffs(&self) -> &[f64] {
        &self.cutoffs
    }

    pub fn cutoff(&self, k: usize) -> f64 {
        self.cutoffs[k]
    }

    /// `(c_{k-1}, c_k)` for layer `k ∈ 1..=N`.
    pub fn bounds(&self, k: usize) -> Result<(f64, f64)> {
        if k == 0 || k > self.layers() {
            return Err(Error::InvalidArgument(format!(
                "layer index {k} outside 1..={}",
                self.layers()
            )));
        }
        Ok((self.cutoffs[k - 1], self.cutoffs[k]))
    }

    /// `log(c_k / c_{k-1})`, the variance of layer `k`.
    pub fn layer_variance(&self, k: usize) -> Result<f64> {
        let (lo, hi) = self.bounds(k)?;
        Ok((hi / lo).ln())
    }

    /// `log c_n`, the variance of the cumulative field `X_n`.
    pub fn cumulative_variance(&self, n: usize) -> f64 {
        self.cutoffs[n.min(self.layers())].ln()
    }

    /// Truncate to the first `n` layers.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.layers() {
            return Err(Error::InvalidArgument(format!(
                "cannot keep {n} of {} layers",
                self.layers()
            )));
        }
        Self::new(self.cutoffs[..=n].to_vec())
    }
}

/// `½ exp(u − a e^{−u} − e^u / 2)`: the `k_m` integrand after `s = e^u`,
/// with `a = m² r² / 2`.
fn km_integrand(u: f64, a: f64) -> f64 {
    let s = u.exp();
    0.5 * (u - a / s - 0.5 * s).exp()
}

fn km_with(spec: &KernelSpec, r: f64, opts: &QuadratureOptions) -> Result<f64> {
    let a = 0.5 * (spec.mass * r).powi(2);
    let lo = S_MIN.ln();
    let hi = spec.upper_cutoff(r).ln();
    // Split at the integrand's peak so the bisection starts well placed.
    let peak = (1.0 + (1.0 + 2.0 * a).sqrt()).ln();
    let f = |u: f64| km_integrand(u, a);
    let mut total = 0.0;
    if peak > lo && peak < hi {
        total += integrate(f, lo, peak, opts)?.value;
        total += integrate(f, peak, hi, opts)?.value;
    } else {
        total += integrate(f, lo, hi, opts)?.value;
    }
    Ok(total)
}

/// `k_m(r) = ½ ∫₀^∞ exp(−m² r² / (2s) − s/2) ds` by adaptive quadrature.
///
/// ```
/// use liouville_lab::gaussian_field::{kernel_km, KernelSpec};
/// let spec = KernelSpec::new(1.0).unwrap();
/// assert!((kernel_km(&spec, 0.0).unwrap() - 1.0).abs() < 1e-10);
/// ```
pub fn kernel_km(spec: &KernelSpec, r: f64) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Domain {
            quantity: "r",
            value: r,
            expected: "r >= 0".into(),
        });
    }
    km_with(spec, r, &spec.options())
}

/// Integrate `g(v) = k_1(v) / v` over `[a, b]` (or `[a, ∞)` when `b` is
/// infinite) in the variable `w = ln v`.
fn integrate_k1_over_v(a: f64, b: f64, spec: &KernelSpec) -> Result<f64> {
    let unit = KernelSpec {
        mass: 1.0,
        tolerance: spec.tolerance,
    };
    let inner = QuadratureOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-3 * spec.tolerance,
        max_intervals: 4000,
    };
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let g = |w: f64| match km_with(&unit, w.exp(), &inner) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    // k_1(v) < 2 v e^{-v} for v > 2, so the tail past v = a + 60 is < e^{-55}.
    let hi = if b.is_finite() { b } else { a.max(1.0) + 60.0 };
    let outer = spec.options();
    let mut total = 0.0;
    // Break the range at v = 1 and at powers of two above it; k_1 decays on
    // the scale v ~ 1 and the w-range can be long.
    let mut knots = vec![a.ln()];
    let mut v = 1.0;
    while v < hi {
        if v > a {
            knots.push(v.ln());
        }
        v *= 2.0;
    }
    knots.push(hi.ln());
    for w in knots.windows(2) {
        total += integrate(&g, w[0], w[1], &outer)?.value;
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(total)
}

/// `E[η_k(x) η_k(y)] = ∫_{c_{k−1}}^{c_k} k_m(u r) / u du` at `r = |x − y|`.
pub fn layer_covariance(spec: &KernelSpec, schedule: &LayerSchedule, k: usize, r: f64) -> Result<f64> {
    let (lo, hi) = schedule.bounds(k)?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Domain {
            quantity: "r",
            value: r,
            expected: "r >= 0".into(),
        });
    }
    if r == 0.0 {
        return Ok(kernel_km(spec, 0.0)? * (hi / lo).ln());
    }
    // k_m(u r) = k_1(m u r); substitute v = m u r.
    let scale = spec.mass * r;
    integrate_k1_over_v(scale * lo, scale * hi, spec)
}

/// The covariance beyond the last cutoff, `∫_{c_N}^∞ k_m(u r) / u du`, `r > 0`.
pub fn layer_tail(spec: &KernelSpec, schedule: &LayerSchedule, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain {
            quantity: "r",
            value: r,
            expected: "r > 0 (the tail diverges at r = 0)".into(),
        });
    }
    let c_n = schedule.cutoff(schedule.layers());
    integrate_k1_over_v(spec.mass * r * c_n, f64::INFINITY, spec)
}

/// `G_m(r) = ∫₀^∞ exp(−m² u / 2 − r² / (2u)) du / (2u)`.
pub fn green_function(spec: &KernelSpec, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain {
            quantity: "r",
            value: r,
            expected: "r > 0 (logarithmic singularity at 0)".into(),
        });
    }
    let m2 = spec.mass * spec.mass;
    let r2 = r * r;
    // u = e^w: ½ ∫ exp(−m² e^w / 2 − r² e^{−w} / 2) dw. Both ends decay
    // double-exponentially past exp(−50).
    let f = |w: f64| 0.5 * (-0.5 * m2 * w.exp() - 0.5 * r2 * (-w).exp()).exp();
    let lo = (r2 / 100.0).ln();
    let hi = (100.0 / m2).ln();
    let peak = (r / spec.mass).ln().clamp(lo, hi);
    let opts = spec.options();
    Ok(integrate(f, lo, peak, &opts)?.value + integrate(f, peak, hi, &opts)?.value)
}

/// Tabulated `F(x) = ∫_x^∞ k_1(v) / v dv`, so that the layer covariance is
/// `F(m r c_{k−1}) − F(m r c_k)` for `r > 0`.
///
/// Stored on a uniform grid in `w = ln x` with cubic Hermite interpolation;
/// the derivative `dF/dw = −k_1(e^w)` is known exactly at the knots.
#[derive(Debug, Clone)]
pub struct CovarianceTable {
    w0: f64,
    dw: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

const TABLE_X_MIN: f64 = 1e-8;
const TABLE_X_MAX: f64 = 80.0;
const TABLE_KNOTS: usize = 2400;

impl CovarianceTable {
    /// The shared table, built on first use.
    pub fn global() -> &'static CovarianceTable {
        static TABLE: OnceLock<CovarianceTable> = OnceLock::new();
        TABLE.get_or_init(|| Self::build().expect("covariance table quadrature converges"))
    }

    pub fn build() -> Result<Self> {
        let unit = KernelSpec::with_tolerance(1.0, 1e-12)?;
        let opts = QuadratureOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-12,
            max_intervals: 4000,
        };
        let w0 = TABLE_X_MIN.ln();
        let w1 = TABLE_X_MAX.ln();
        let dw = (w1 - w0) / (TABLE_KNOTS - 1) as f64;
        let k1 = |w: f64| km_with(&unit, w.exp(), &opts).unwrap_or(f64::NAN);
        let slopes: Vec<f64> = (0..TABLE_KNOTS).map(|i| -k1(w0 + i as f64 * dw)).collect();
        let mut values = vec![0.0; TABLE_KNOTS];
        // k_1(80) ~ 1e-33: the tail past the last knot is negligible.
        for i in (0..TABLE_KNOTS - 1).rev() {
            let a = w0 + i as f64 * dw;
            let seg = integrate(k1, a, a + dw, &opts)?.value;
            values[i] = values[i + 1] + seg;
        }
        if values.iter().chain(&slopes).any(|v| !v.is_finite()) {
            return Err(Error::Quadrature {
                achieved: f64::NAN,
                requested: opts.rel_tol,
            });
        }
        Ok(Self {
            w0,
            dw,
            values,
            slopes,
        })
    }

    /// `F(x)` for `x > 0`.
    pub fn tail(&self, x: f64) -> f64 {
        if x <= TABLE_X_MIN {
            // k_1(v) = 1 + O(v² log v) near zero.
            return self.values[0] + (TABLE_X_MIN / x).ln();
        }
        if x >= TABLE_X_MAX {
            return 0.0;
        }
        let t = (x.ln() - self.w0) / self.dw;
        let i = (t.floor() as usize).min(TABLE_KNOTS - 2);
        let s = t - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * self.dw, self.slopes[i + 1] * self.dw);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1
    }

    /// Layer covariance at lag `r` from the table.
    pub fn layer_covariance(&self, mass: f64, lo: f64, hi: f64, r: f64) -> f64 {
        if r == 0.0 {
            return (hi / lo).ln();
        }
        let x = mass * r;
        self.tail(x * lo) - self.tail(x * hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `K_ν(x) = ∫₀^∞ e^{−x cosh t} cosh(ν t) dt` by a fine trapezoid rule;
    /// independent of the production quadrature.
    fn bessel_k(nu: f64, x: f64) -> f64 {
        let h: f64 = 1e-3;
        let mut sum = 0.5 * (-x).exp();
        let mut t = h;
        loop {
            let term = (-x * t.cosh()).exp() * (nu * t).cosh();
            sum += term;
            if term < 1e-300 || t > 50.0 {
                break;
            }
            t += h;
        }
        sum * h
    }

    #[test]
    fn kernel_at_zero_is_one() {
        for m in [0.5, 1.0, 3.0] {
            let spec = KernelSpec::new(m).unwrap();
            assert!((kernel_km(&spec, 0.0).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn kernel_matches_bessel_form() {
        let spec = KernelSpec::new(1.0).unwrap();
        for r in [0.01, 0.3, 1.0, 2.5, 7.0] {
            let expected = r * bessel_k(1.0, r);
            let got = kernel_km(&spec, r).unwrap();
            assert!((got - expected).abs() < 1e-10, "r={r}: {got} vs {expected}");
        }
    }

    #[test]
    fn kernel_is_nonincreasing() {
        let spec = KernelSpec::new(2.0).unwrap();
        let values: Vec<f64> = (0..60).map(|i| kernel_km(&spec, 0.1 * i as f64).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0] && w[1] >= 0.0));
    }

    #[test]
    fn green_matches_bessel_k0() {
        let spec = KernelSpec::new(1.0).unwrap();
        for r in [0.05, 1.0, 3.0] {
            let got = green_function(&spec, r).unwrap();
            assert!((got - bessel_k(0.0, r)).abs() < 1e-10);
        }
        assert!(green_function(&spec, 0.0).is_err());
    }

    #[test]
    fn layer_covariance_matches_k0_difference() {
        let spec = KernelSpec::new(1.0).unwrap();
        let schedule = LayerSchedule::dyadic(5).unwrap();
        for (k, r) in [(1, 0.2), (3, 0.1), (5, 0.01)] {
            let (lo, hi) = schedule.bounds(k).unwrap();
            let expected = bessel_k(0.0, r * lo) - bessel_k(0.0, r * hi);
            let got = layer_covariance(&spec, &schedule, k, r).unwrap();
            assert!((got - expected).abs() < 1e-9, "k={k}: {got} vs {expected}");
        }
    }

    #[test]
    fn table_agrees_with_direct_quadrature() {
        let table = CovarianceTable::global();
        let spec = KernelSpec::new(1.3).unwrap();
        let schedule = LayerSchedule::dyadic(8).unwrap();
        for k in 1..=8 {
            let (lo, hi) = schedule.bounds(k).unwrap();
            for r in [0.0, 1e-3, 0.02, 0.1, 0.5, 1.0, 4.0] {
                let direct = layer_covariance(&spec, &schedule, k, r).unwrap();
                let tab = table.layer_covariance(1.3, lo, hi, r);
                assert!((direct - tab).abs() < 1e-9, "k={k} r={r}: {direct} vs {tab}");
            }
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(LayerSchedule::new(vec![1.0]).is_err());
        assert!(LayerSchedule::new(vec![2.0, 4.0]).is_err());
        assert!(LayerSchedule::new(vec![1.0, 3.0, 3.0]).is_err());
        let s = LayerSchedule::dyadic(3).unwrap();
        assert!(s.bounds(0).is_err() && s.bounds(4).is_err());
        assert!((s.layer_variance(2).unwrap() - 2f64.ln()).abs() < 1e-15);
    }
}
