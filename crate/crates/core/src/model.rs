//! Model parameters, closed-form constants, spectral density, variance law and Psi.

use crate::error::{Error, Result};
use crate::special::gamma;
use std::f64::consts::PI;

/// Constants derived once from (alpha, H).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConstants {
    /// Noise spectral constant Gamma(2H+1) sin(pi H) / (2 pi).
    pub c1h: f64,
    /// Variance constant: E[u(t,x)^2] = c21 t^{2 kappa}.
    pub c21: f64,
    /// Time exponent (2H+alpha-2)/(2 alpha).
    pub kappa: f64,
    /// Space exponent (2H+alpha-2)/2.
    pub space_exp: f64,
    /// Roughness 2H+alpha-2, the power in xi^{-roughness-1}.
    pub roughness: f64,
}

/// Admissible (alpha, H): 1 < alpha < 2 and (2-alpha)/2 < H < 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    alpha: f64,
    hurst: f64,
    constants: ModelConstants,
}

impl ModelParams {
    pub fn new(alpha: f64, hurst: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::OutOfRange {
                which: "alpha",
                value: alpha,
                interval: "(1, 2)".into(),
            });
        }
        let lo = (2.0 - alpha) / 2.0;
        if !(hurst > lo && hurst < 0.5) {
            return Err(Error::OutOfRange {
                which: "hurst",
                value: hurst,
                interval: format!("({lo}, 0.5)"),
            });
        }
        let roughness = 2.0 * hurst + alpha - 2.0;
        let c1h = gamma(2.0 * hurst + 1.0) * (PI * hurst).sin() / (2.0 * PI);
        let c21 = c1h / roughness
            * 2f64.powf(roughness / alpha)
            * gamma((2.0 - 2.0 * hurst) / alpha);
        let constants = ModelConstants {
            c1h,
            c21,
            kappa: roughness / (2.0 * alpha),
            space_exp: roughness / 2.0,
            roughness,
        };
        Ok(Self {
            alpha,
            hurst,
            constants,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn constants(&self) -> &ModelConstants {
        &self.constants
    }

    pub fn c1h(&self) -> f64 {
        self.constants.c1h
    }

    pub fn c21(&self) -> f64 {
        self.constants.c21
    }

    pub fn kappa(&self) -> f64 {
        self.constants.kappa
    }

    pub fn roughness(&self) -> f64 {
        self.constants.roughness
    }

    /// E[u(t,x)^2] = c21 t^{(2H+alpha-2)/alpha}.
    pub fn variance(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.constants.c21 * t.powf(2.0 * self.constants.kappa)
    }

    /// One-sided spectral density f_t(xi) = c1H (1 - e^{-2 t xi^alpha}) xi^{1-2H-alpha}.
    /// Its integral over (0, inf) is the variance.
    pub fn spectral_density(&self, t: f64, xi: f64) -> f64 {
        let xi = xi.abs();
        if xi == 0.0 || t <= 0.0 {
            return 0.0;
        }
        let c = &self.constants;
        c.c1h * -(-2.0 * t * xi.powf(self.alpha)).exp_m1() * xi.powf(-c.roughness - 1.0)
    }

    /// Psi(t, L) = 1 + sqrt(log2(L / t^{1/alpha} v 1)).
    pub fn psi(&self, t: f64, l: f64) -> f64 {
        let r = l / t.powf(1.0 / self.alpha);
        1.0 + r.max(1.0).log2().sqrt()
    }

    /// Natural length scale t^{1/alpha}.
    pub fn length_scale(&self, t: f64) -> f64 {
        t.powf(1.0 / self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> ModelParams {
        ModelParams::new(1.5, 0.4).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!((p().kappa() - 0.1).abs() < 1e-15);
        match ModelParams::new(1.5, 0.25) {
            Err(Error::OutOfRange { which, .. }) => assert_eq!(which, "hurst"),
            other => panic!("{other:?}"),
        }
        match ModelParams::new(2.0, 0.4) {
            Err(Error::OutOfRange { which, .. }) => assert_eq!(which, "alpha"),
            other => panic!("{other:?}"),
        }
        assert!(ModelParams::new(1.0, 0.4).is_err());
        assert!(ModelParams::new(1.5, 0.5).is_err());
        assert!(ModelParams::new(f64::NAN, 0.4).is_err());
    }

    #[test]
    fn c1h_at_quarter() {
        // Gamma(1.5) sin(pi/4) / (2 pi) evaluated in 30-digit arithmetic
        let q = ModelParams::new(1.6, 0.25).unwrap();
        assert!((q.c1h() - 0.099_735_570_100_358_17).abs() < 1e-15);
    }

    #[test]
    fn c21_reference() {
        // term-by-term high-precision evaluation
        let c = p().constants;
        assert!((c.c1h - 0.140_979_226_499_995_19).abs() < 1e-14);
        assert!((c.c21 - 0.628_461_311_072_915_18).abs() < 1e-13);
        assert!((c.space_exp - 0.15).abs() < 1e-15);
    }

    #[test]
    fn c21_diverges_at_boundary() {
        let alpha = 1.5;
        let h = (2.0 - alpha) / 2.0 + 0.5e-8;
        let q = ModelParams::new(alpha, h).unwrap();
        assert!(q.c21() > 1e6);
    }

    #[test]
    fn variance_law() {
        let q = p();
        assert_eq!(q.variance(0.0), 0.0);
        assert_eq!(q.variance(1.0), q.c21());
        let ratio = q.variance(2.0) / q.variance(1.0);
        assert!((ratio - 2f64.powf(0.2)).abs() < 1e-15);
    }

    #[test]
    fn psi_examples() {
        let q = p();
        assert_eq!(q.psi(1.0, 1.0), 1.0);
        assert!((q.psi(1.0, 8.0) - (1.0 + 3f64.sqrt())).abs() < 1e-15);
        assert_eq!(q.psi(8.0, 2.0), 1.0);
        let t = 3.0;
        assert!((q.psi(t, q.length_scale(t)) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn spectral_density_zero_and_small_xi() {
        let q = p();
        assert_eq!(q.spectral_density(1.0, 0.0), 0.0);
        let xi: f64 = 1e-6;
        let approx = 2.0 * q.c1h() * xi.powf(1.0 - 0.8);
        assert!((q.spectral_density(1.0, xi) / approx - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn psi_monotone(t in 0.01f64..100.0, l in 0.01f64..1e4) {
            let q = p();
            prop_assert!(q.psi(t, l) >= 1.0);
            prop_assert!(q.psi(t, 2.0 * l) >= q.psi(t, l));
            prop_assert!(q.psi(2.0 * t, l) <= q.psi(t, l));
            // concave in log2 L: successive dyadic increments shrink
            let d1 = q.psi(t, 2.0 * l) - q.psi(t, l);
            let d2 = q.psi(t, 4.0 * l) - q.psi(t, 2.0 * l);
            if l > q.length_scale(t) {
                prop_assert!(d2 <= d1 + 1e-12);
            }
        }

        #[test]
        fn spectral_density_monotone_in_t(t in 0.01f64..10.0, xi in 0.0f64..100.0) {
            let q = p();
            prop_assert!(q.spectral_density(2.0 * t, xi) >= q.spectral_density(t, xi));
            prop_assert!(q.spectral_density(t, xi) >= 0.0);
        }

        #[test]
        fn admissible_region(alpha in 1.0f64..2.0, h in 0.0f64..0.6) {
            let ok = alpha > 1.0 && alpha < 2.0 && h > (2.0 - alpha) / 2.0 && h < 0.5;
            let r = ModelParams::new(alpha, h);
            prop_assert_eq!(r.is_ok(), ok);
            if let Ok(q) = r {
                prop_assert!(q.kappa() > 0.0 && q.kappa() < 0.25);
                prop_assert!(q.c1h() > 0.0 && q.c21() > 0.0);
            }
        }
    }
}
