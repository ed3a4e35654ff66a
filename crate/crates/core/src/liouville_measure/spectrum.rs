//! Exponents of the Liouville measure: the power-law spectrum and the Hölder
//! exponents built from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coupling `γ ∈ [0, 2)` and the exponents derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    gamma: f64,
}

impl SpectrumParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..2.0).contains(&gamma) {
            return Err(Error::Domain {
                quantity: "gamma",
                value: gamma,
                expected: "0 <= gamma < 2".into(),
            });
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn half_g2(&self) -> f64 {
        0.5 * self.gamma * self.gamma
    }

    /// `α₁ = (2 + γ)² / 2`.
    pub fn alpha1(&self) -> f64 {
        0.5 * (2.0 + self.gamma).powi(2)
    }

    /// `α₂ = (2 − γ)² / 2`.
    pub fn alpha2(&self) -> f64 {
        0.5 * (2.0 - self.gamma).powi(2)
    }

    /// `ξ_M(q) = −(γ²/2) q² + (2 + γ²/2) q`.
    pub fn xi(&self, q: f64) -> f64 {
        let g = self.half_g2();
        -g * q * q + (2.0 + g) * q
    }

    /// `ξ̃(q) = −ξ_M(−q) = (2 + γ²/2) q + (γ²/2) q²`.
    pub fn xi_tilde(&self, q: f64) -> f64 {
        let g = self.half_g2();
        (2.0 + g) * q + g * q * q
    }

    /// Largest positive moment order with a finite moment, `4 / γ²`.
    pub fn moment_limit(&self) -> f64 {
        if self.gamma == 0.0 {
            f64::INFINITY
        } else {
            4.0 / (self.gamma * self.gamma)
        }
    }

    /// Upper Hölder growth exponent
    /// `m₀(γ, α) = γ²/2 + 4αγ² / ((α₁ − α)(α₂ − α))` for `0 < α < α₂`.
    pub fn m0(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < self.alpha2()) {
            return Err(Error::Domain {
                quantity: "alpha",
                value: alpha,
                expected: format!("0 < alpha < alpha2 = {}", self.alpha2()),
            });
        }
        let g2 = self.gamma * self.gamma;
        Ok(0.5 * g2 + 4.0 * alpha * g2 / ((self.alpha1() - alpha) * (self.alpha2() - alpha)))
    }

    /// `K(α, p) = ξ_M(p) − α p − 2`.
    pub fn exponent_k(&self, alpha: f64, p: f64) -> f64 {
        self.xi(p) - alpha * p - 2.0
    }

    /// The order `p(α) = (2 + γ²/2 − α) / γ²` that maximizes `K(α, ·)`;
    /// there `K = (α₁ − α)(α₂ − α) / (2γ²)`.
    pub fn optimal_p(&self, alpha: f64) -> Result<f64> {
        if self.gamma == 0.0 {
            return Err(Error::Domain {
                quantity: "gamma",
                value: 0.0,
                expected: "gamma > 0 for the optimal moment order".into(),
            });
        }
        Ok((2.0 + self.half_g2() - alpha) / (self.gamma * self.gamma))
    }

    /// Threshold `γ²/2 + 2√2 γ + 2` above which the lower Hölder bound holds.
    pub fn lower_holder_threshold(&self) -> f64 {
        self.half_g2() + 2.0 * std::f64::consts::SQRT_2 * self.gamma + 2.0
    }

    /// Lower Hölder growth exponent `m₀₀(γ, α)` evaluated with Hölder pair
    /// `(q, q')`:
    /// `2q'γ² / (√((2 + γ²/2)² − 4q'γ² + (q'/q)(α₂ − α)(α₁ − α)) − γ²/2 − 2)`.
    ///
    /// `q` must satisfy `1 < q < K(α, p(α)) / 2` so that the exponent is
    /// admissible; see [`SpectrumParams::m00_q_range`].
    pub fn m00(&self, alpha: f64, q: f64) -> Result<f64> {
        let (lo, hi) = self.m00_q_range(alpha)?;
        if !(q > lo && q < hi) {
            return Err(Error::Domain {
                quantity: "q",
                value: q,
                expected: format!("{lo} < q < {hi}"),
            });
        }
        let g2 = self.gamma * self.gamma;
        let qp = q / (q - 1.0);
        let disc = (2.0 + 0.5 * g2).powi(2) - 4.0 * qp * g2
            + qp / q * (self.alpha2() - alpha) * (self.alpha1() - alpha);
        let denom = disc.max(0.0).sqrt() - 0.5 * g2 - 2.0;
        if !(denom > 0.0) {
            return Err(Error::Domain {
                quantity: "q",
                value: q,
                expected: "a Hölder pair with positive denominator".into(),
            });
        }
        Ok(2.0 * qp * g2 / denom)
    }

    /// Open interval of admissible `q` for [`SpectrumParams::m00`].
    pub fn m00_q_range(&self, alpha: f64) -> Result<(f64, f64)> {
        if self.gamma == 0.0 || !(alpha > self.lower_holder_threshold()) {
            return Err(Error::Domain {
                quantity: "alpha",
                value: alpha,
                expected: format!(
                    "gamma > 0 and alpha > {}",
                    self.lower_holder_threshold()
                ),
            });
        }
        let k = (self.alpha1() - alpha) * (self.alpha2() - alpha) / (2.0 * self.gamma * self.gamma);
        Ok((1.0, 0.5 * k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn worked_values() {
        let s = SpectrumParams::new(1.0).unwrap();
        assert_eq!(s.xi(2.0), 3.0);
        assert_eq!(s.xi_tilde(3.0), 12.0);
        assert!((s.m0(0.25).unwrap() - (0.5 + 1.0 / 1.0625)).abs() < 1e-12);
        assert!((s.exponent_k(0.25, 2.25) - 0.53125).abs() < 1e-12);
        assert!((s.optimal_p(0.25).unwrap() - 2.25).abs() < 1e-12);
    }

    #[test]
    fn m0_has_a_pole_at_alpha2() {
        let s = SpectrumParams::new(1.0).unwrap();
        assert!(s.m0(0.5 - 1e-9).unwrap() > 1e8);
        assert!(s.m0(0.5).is_err());
        assert!(s.m0(0.0).is_err());
    }

    #[test]
    fn rejects_out_of_range_gamma() {
        assert!(SpectrumParams::new(2.0).is_err());
        assert!(SpectrumParams::new(-0.1).is_err());
        assert!(SpectrumParams::new(2.5).is_err());
    }

    #[test]
    fn m00_positive_in_its_range() {
        let s = SpectrumParams::new(0.5).unwrap();
        let alpha = s.lower_holder_threshold() + 1.0;
        let (lo, hi) = s.m00_q_range(alpha).unwrap();
        let q = 0.5 * (lo + hi);
        assert!(s.m00(alpha, q).unwrap() > 0.0);
        assert!(s.m00(s.alpha1(), 1.5).is_err());
    }

    proptest! {
        #[test]
        fn xi_identities(gamma in 0.0f64..1.999, q in -5.0f64..5.0) {
            let s = SpectrumParams::new(gamma).unwrap();
            prop_assert!((s.xi_tilde(q) + s.xi(-q)).abs() < 1e-12);
            prop_assert!((s.xi(1.0) - 2.0).abs() < 1e-12);
        }

        #[test]
        fn alpha_ordering(gamma in 1e-3f64..1.999) {
            let s = SpectrumParams::new(gamma).unwrap();
            prop_assert!(s.alpha1() > 2.0 && 2.0 > s.alpha2() && s.alpha2() > 0.0);
        }

        #[test]
        fn k_at_optimal_p(gamma in 0.05f64..1.95, frac in 0.01f64..0.99) {
            let s = SpectrumParams::new(gamma).unwrap();
            let alpha = frac * s.alpha2();
            let p = s.optimal_p(alpha).unwrap();
            let closed = (s.alpha1() - alpha) * (s.alpha2() - alpha) / (2.0 * gamma * gamma);
            prop_assert!((s.exponent_k(alpha, p) - closed).abs() < 1e-9 * closed.abs().max(1.0));
        }
    }
}
