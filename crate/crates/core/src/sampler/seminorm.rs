use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::model::ModelParams;
use crate::quadrature::gk::adaptive;
use crate::quadrature::riesz_identity;
use crate::special::gamma;
use rayon::prelude::*;

/// Grid parameters of the weighted increment functional
/// N^2(x) = int |u(x+h) - u(x)|^2 |h|^{2H-2} dh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormSpec {
    pub t: f64,
    pub dx: f64,
    pub h_max: f64,
}

/// Discretized estimator of N^2 at grid points of one time slice.
///
/// Lags k dx for 1 <= k <= K = round(h_max/dx) are summed with the exact cell
/// weights of |h|^{2H-2} over [(k-1/2)dx, (k+1/2)dx]. The contributions of
/// |h| < dx/2 and |h| > (K+1/2)dx are replaced by their expectations.
#[derive(Debug, Clone)]
pub struct SeminormEstimator {
    spec: SeminormSpec,
    lags: usize,
    weights: Vec<f64>,
    small: f64,
    large: f64,
    grid_mean: f64,
    mid_exact: f64,
    total: f64,
}

/// Closed form of E[N^2] on the whole line; finite iff 4H + alpha > 3.
pub fn seminorm_expectation(p: &ModelParams, t: f64) -> Result<f64> {
    let g = 4.0 * p.hurst() + p.alpha() - 3.0;
    if g <= 0.0 {
        return Err(Error::NotIntegrable {
            end: crate::error::End::Infinity,
            exponent: g,
        });
    }
    let e = g / p.alpha();
    Ok(4.0 * p.c1h() * riesz_identity(1.0 - 2.0 * p.hurst(), 1.0) * (2.0 * t).powf(e) * gamma(1.0 - e)
        / g)
}

impl SeminormEstimator {
    pub fn new(m: &Metrics, spec: SeminormSpec) -> Result<Self> {
        let p = m.params();
        let SeminormSpec { t, dx, h_max } = spec;
        if !(t > 0.0 && dx > 0.0 && h_max > 0.0) {
            return Err(Error::InvalidInput(format!("seminorm spec {spec:?}")));
        }
        if dx > h_max / 64.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "grid spacing {dx} exceeds h_max/64 = {}",
                h_max / 64.0
            )));
        }
        let total = seminorm_expectation(p, t)?;
        let e = 2.0 * p.hurst() - 1.0;
        let lags = (h_max / dx).round() as usize;
        let weights: Vec<f64> = (1..=lags)
            .map(|k| {
                let k = k as f64;
                (((k + 0.5) * dx).powf(e) - ((k - 0.5) * dx).powf(e)) / e
            })
            .collect();
        let incr = |h: f64| m.space_increment_variance(t, h).map(|s| s.value);
        let d: Vec<f64> = (1..=lags)
            .into_par_iter()
            .map(|k| incr(k as f64 * dx))
            .collect::<Result<_>>()?;
        let grid_mean = 2.0 * weights.iter().zip(&d).map(|(w, v)| w * v).sum::<f64>();

        // |h| < dx/2: h = a v^{1/g} flattens the h^{g-1} singularity
        let g = 4.0 * p.hurst() + p.alpha() - 3.0;
        let a = 0.5 * dx;
        let small_f = |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            let h = a * v.powf(1.0 / g);
            incr(h).unwrap_or(f64::NAN) * h.powf(e - 1.0) * h / (g * v)
        };
        let (small, _, _) = adaptive(&small_f, 0.0, 1.0, 0.0, 1e-9, 200);
        let small = 2.0 * small;

        let b = (lags as f64 + 0.5) * dx;
        let mid_f = |h: f64| incr(h).unwrap_or(f64::NAN) * h.powf(e - 1.0);
        let (mid, _, _) = adaptive(&mid_f, a, b, 0.0, 1e-9, 400);
        let mid_exact = 2.0 * mid;
        if !(small.is_finite() && mid_exact.is_finite()) {
            return Err(Error::ToleranceNotMet {
                error_bound: f64::NAN,
                panels: 0,
            });
        }
        Ok(Self {
            spec,
            lags,
            weights,
            small,
            large: total - small - mid_exact,
            grid_mean,
            mid_exact,
            total,
        })
    }

    pub fn spec(&self) -> &SeminormSpec {
        &self.spec
    }

    /// Number of grid lags K on each side.
    pub fn lags(&self) -> usize {
        self.lags
    }

    /// Expected contribution of |h| < dx/2 (both signs).
    pub fn small_completion(&self) -> f64 {
        self.small
    }

    /// Expected contribution of |h| > (K + 1/2) dx (both signs).
    pub fn large_completion(&self) -> f64 {
        self.large
    }

    /// E[N^2] on the whole line.
    pub fn exact_expectation(&self) -> f64 {
        self.total
    }

    /// Expectation of the estimator itself.
    pub fn expectation(&self) -> f64 {
        self.grid_mean + self.small + self.large
    }

    /// Bias of the lag sum relative to the continuous integral over the same range.
    pub fn discretization_bias(&self) -> f64 {
        self.grid_mean - self.mid_exact
    }

    /// Estimate at index j of one slice; needs K points on both sides.
    pub fn estimate(&self, row: &[f64], j: usize) -> Result<f64> {
        let k = self.lags;
        if j < k || j + k >= row.len() {
            return Err(Error::EdgeTooClose {
                x: j as f64 * self.spec.dx,
                h_max: k as f64 * self.spec.dx,
            });
        }
        let u = row[j];
        let mut s = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            let (l, r) = (row[j - i - 1] - u, row[j + i + 1] - u);
            s += w * (l * l + r * r);
        }
        Ok(s + self.small + self.large)
    }

    /// Max over the indices in `range`.
    pub fn sup(&self, row: &[f64], range: std::ops::RangeInclusive<usize>) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for j in range {
            best = best.max(self.estimate(row, j)?);
        }
        Ok(best)
    }

    /// Grid part only, without the deterministic completions.
    pub fn lag_sum(&self, row: &[f64], j: usize) -> Result<f64> {
        Ok(self.estimate(row, j)? - self.small - self.large)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureSpec;

    fn setup() -> (Metrics, SeminormEstimator) {
        let m = Metrics::new(ModelParams::new(1.5, 0.4).unwrap(), QuadratureSpec::default());
        let e = SeminormEstimator::new(
            &m,
            SeminormSpec {
                t: 1.0,
                dx: 1.0 / 64.0,
                h_max: 1.0,
            },
        )
        .unwrap();
        (m, e)
    }

    #[test]
    fn zero_and_constant_fields_have_no_lag_sum() {
        let (_, e) = setup();
        for c in [0.0, 2.5] {
            let row = vec![c; 200];
            assert_eq!(e.lag_sum(&row, 100).unwrap(), 0.0);
        }
        assert!(e.small_completion() > 0.0 && e.large_completion() > 0.0);
    }

    #[test]
    fn edge_and_spacing_checks() {
        let (m, e) = setup();
        let row = vec![0.0; 200];
        assert!(matches!(e.estimate(&row, 10), Err(Error::EdgeTooClose { .. })));
        assert!(matches!(e.estimate(&row, 136), Err(Error::EdgeTooClose { .. })));
        assert!(e.estimate(&row, 135).is_ok());
        let bad = SeminormSpec {
            t: 1.0,
            dx: 0.1,
            h_max: 1.0,
        };
        assert!(SeminormEstimator::new(&m, bad).is_err());
    }

    #[test]
    fn closed_form_matches_tail_split() {
        // large completion against 4 var b^{2H-1}/(1-2H) minus the covariance part
        let (m, e) = setup();
        let p = m.params();
        let b = (e.lags() as f64 + 0.5) / 64.0;
        let hh = 2.0 * p.hurst() - 1.0;
        let crude = 4.0 * p.variance(1.0) * b.powf(hh) / -hh;
        assert!(e.large_completion() > 0.0 && e.large_completion() < 1.5 * crude);
        assert!(e.discretization_bias().abs() < 0.05 * e.exact_expectation());
    }

    #[test]
    fn non_integrable_region() {
        let p = ModelParams::new(1.2, 0.42).unwrap();
        assert!(seminorm_expectation(&p, 1.0).is_err());
    }
}
