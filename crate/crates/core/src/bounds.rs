//! Chaining upper bounds, Sudakov lower bounds and the Borell tail.
//!
//! Universal constants (the majorizing-measure and Sudakov constants) are
//! set to one; the reports carry the raw bound values and callers fit the
//! multipliers needed to sandwich Monte Carlo estimates.

use crate::error::{Error, Result};
use crate::metrics::{Metrics, SpacetimePoint};
use crate::model::ModelParams;
use crate::quadrature::CompensatedSum;
use rayon::prelude::*;
use std::io::Write;

/// Terms below this fraction of the running total end the series.
pub const SERIES_CUTOFF: f64 = 1e-15;
const MAX_LEVEL: u32 = 64;

/// inf{n >= 2 : 2^{n-2} >= log2(L / T^{1/alpha} v 2)}.
pub fn cut_index(p: &ModelParams, t: f64, l: f64) -> u32 {
    let target = (l / p.length_scale(t)).max(2.0).log2();
    let mut n = 2;
    while 2f64.powi(n as i32 - 2) < target {
        n += 1;
    }
    n
}

/// Time cells of width 2^{-2^{n-1}} T over [0, T] and space cells of width
/// 2^{-2^{n-2}} L over [-L, L]. Levels 0 and 1 keep the whole interval in
/// space (and in time at level 0) so every level is admissible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicPartitionScheme {
    pub horizon: f64,
    pub half_width: f64,
    pub n_max: Option<u32>,
}

impl DyadicPartitionScheme {
    pub fn new(horizon: f64, half_width: f64) -> Result<Self> {
        if !(horizon > 0.0 && half_width > 0.0 && horizon.is_finite() && half_width.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "partition domain T = {horizon}, L = {half_width}"
            )));
        }
        Ok(Self {
            horizon,
            half_width,
            n_max: None,
        })
    }

    /// Truncate the scheme at level n_max.
    pub fn with_max_level(mut self, n_max: u32) -> Self {
        self.n_max = Some(n_max);
        self
    }

    /// log2 of the time cell count at level n.
    pub fn log2_time_cells(n: u32) -> f64 {
        if n == 0 {
            0.0
        } else {
            2f64.powi(n as i32 - 1)
        }
    }

    /// log2 of the space cell count at level n.
    pub fn log2_space_cells(n: u32) -> f64 {
        if n < 2 {
            0.0
        } else {
            1.0 + 2f64.powi(n as i32 - 2)
        }
    }

    /// #A_n <= 2^{2^n} for the time-only, space-only and product partitions.
    pub fn admissible(n: u32) -> bool {
        let budget = 2f64.powi(n as i32);
        let (a, b) = (Self::log2_time_cells(n), Self::log2_space_cells(n));
        a <= budget && b <= budget && a + b <= budget
    }
}

/// Diameter law of the level-n cells, scaled by a fitted multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiameterLaw {
    /// Space-time cells under d1.
    D1 { multiplier: f64 },
    /// Space cells under the d2 metric of Delta_h u at a fixed time.
    D2 { multiplier: f64, h: f64, theta: f64 },
    /// Space cells under the d3 metric of D_tau u at a fixed time.
    D3 { multiplier: f64, tau: f64, theta: f64 },
}

impl DiameterLaw {
    fn multiplier(&self) -> f64 {
        match *self {
            DiameterLaw::D1 { multiplier }
            | DiameterLaw::D2 { multiplier, .. }
            | DiameterLaw::D3 { multiplier, .. } => multiplier,
        }
    }

    /// Scale s such that total / (s Psi) is the comparison constant.
    pub fn scale(&self, p: &ModelParams, t: f64) -> f64 {
        let (g, a) = (p.roughness(), p.alpha());
        match *self {
            DiameterLaw::D1 { .. } => t.powf(p.kappa()),
            DiameterLaw::D2 { h, theta, .. } => {
                h.powf(theta) * t.powf((g - 2.0 * theta) / (2.0 * a))
            }
            DiameterLaw::D3 { tau, theta, .. } => {
                tau.powf(theta / 2.0) * t.powf((g - a * theta) / (2.0 * a))
            }
        }
    }

    fn validate(&self, p: &ModelParams) -> Result<()> {
        let g = p.roughness();
        let m = self.multiplier();
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidInput(format!("multiplier {m}")));
        }
        match *self {
            DiameterLaw::D1 { .. } => Ok(()),
            DiameterLaw::D2 { h, theta, .. } => {
                if !(h > 0.0) || !(0.0..=g / 2.0).contains(&theta) {
                    return Err(Error::ValidityWindowViolated(format!(
                        "d2 chaining needs h > 0 and theta in [0, {}], got h = {h}, theta = {theta}",
                        g / 2.0
                    )));
                }
                if theta >= g / 2.0 {
                    return Err(Error::DivergentSeries(format!(
                        "theta = {theta} leaves no decay in the cell diameters"
                    )));
                }
                Ok(())
            }
            DiameterLaw::D3 { tau, theta, .. } => {
                let top = g / p.alpha();
                if !(tau > 0.0) || !(0.0..=top).contains(&theta) {
                    return Err(Error::ValidityWindowViolated(format!(
                        "d3 chaining needs tau > 0 and theta in [0, {top}], got tau = {tau}, theta = {theta}"
                    )));
                }
                if theta >= top {
                    return Err(Error::DivergentSeries(format!(
                        "theta = {theta} leaves no decay in the cell diameters"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Uniform bound on diam(A_n(t, x)).
    pub fn diameter(&self, p: &ModelParams, s: &DyadicPartitionScheme, n: u32) -> f64 {
        let (g, a) = (p.roughness(), p.alpha());
        let (t, l) = (s.horizon, s.half_width);
        let space_level = 2f64.powi(n as i32 - 2);
        let width = 2f64.powf(-space_level) * l;
        self.multiplier()
            * match *self {
                DiameterLaw::D1 { .. } => {
                    let tk = t.powf(p.kappa());
                    width.powf(g / 2.0).min(tk)
                        + 2f64.powf(-p.kappa() * 2f64.powi(n as i32 - 1)) * tk
                }
                DiameterLaw::D2 { h, theta, .. } => {
                    let e = g - 2.0 * theta;
                    h.powf(theta) * width.powf(e / 2.0).min(t.powf(e / (2.0 * a)))
                }
                DiameterLaw::D3 { tau, theta, .. } => {
                    let e = g - a * theta;
                    tau.powf(theta / 2.0) * width.powf(e / 2.0).min(t.powf(e / (2.0 * a)))
                }
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainingLevel {
    pub n: u32,
    pub diameter: f64,
    /// 2^{n/2} diam(A_n)
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainingReport {
    pub levels: Vec<ChainingLevel>,
    pub cut_index: u32,
    pub total: f64,
    /// Sum of the terms with n > cut index.
    pub tail_after_cut: f64,
    pub psi: f64,
    pub scale: f64,
    /// total / (scale Psi)
    pub ratio: f64,
    /// Relative size of the last term kept.
    pub truncation: f64,
}

/// Evaluates sum_n 2^{n/2} diam(A_n) for the scheme and diameter law.
pub fn chaining_upper_bound(
    p: &ModelParams,
    scheme: &DyadicPartitionScheme,
    law: DiameterLaw,
) -> Result<ChainingReport> {
    law.validate(p)?;
    let cut = cut_index(p, scheme.horizon, scheme.half_width);
    let mut levels = Vec::new();
    let mut total = CompensatedSum::new();
    let mut tail = CompensatedSum::new();
    let mut truncation = 0.0;
    let last = scheme.n_max.unwrap_or(MAX_LEVEL);
    for n in 0..=last {
        let diameter = law.diameter(p, scheme, n);
        let term = 2f64.powf(n as f64 / 2.0) * diameter;
        levels.push(ChainingLevel { n, diameter, term });
        total.add(term);
        if n > cut {
            tail.add(term);
        }
        truncation = term / total.value();
        if scheme.n_max.is_none() && n > cut && truncation < SERIES_CUTOFF {
            break;
        }
        if n == MAX_LEVEL {
            return Err(Error::DivergentSeries(format!(
                "chaining terms still at {truncation:e} of the total after {MAX_LEVEL} levels"
            )));
        }
    }
    let total = total.value();
    if !total.is_finite() {
        return Err(Error::DivergentSeries("non-finite chaining total".into()));
    }
    let psi = p.psi(scheme.horizon, scheme.half_width);
    let scale = law.scale(p, scheme.horizon);
    Ok(ChainingReport {
        levels,
        cut_index: cut,
        total,
        tail_after_cut: tail.value(),
        psi,
        scale,
        ratio: total / (scale * psi),
        truncation,
    })
}

impl ChainingReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record([
            "row", "n", "diameter", "term", "cut_index", "total", "tail_after_cut", "psi",
            "scale", "ratio",
        ])?;
        for l in &self.levels {
            w.write_record([
                "level".to_string(),
                l.n.to_string(),
                l.diameter.to_string(),
                l.term.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
        w.write_record([
            "summary".to_string(),
            self.levels.len().to_string(),
            String::new(),
            String::new(),
            self.cut_index.to_string(),
            self.total.to_string(),
            self.tail_after_cut.to_string(),
            self.psi.to_string(),
            self.scale.to_string(),
            self.ratio.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Metric used on the Sudakov grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SudakovMetric {
    D1,
    D2 { h: f64 },
    D3 { tau: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SudakovReport {
    pub grid_step: f64,
    pub point_count: usize,
    /// (lag index, metric) for every lag that was evaluated.
    pub checked: Vec<(usize, f64)>,
    pub min_metric: f64,
    pub delta: f64,
    /// delta sqrt(log2 n), or delta alone for the two-point fallback.
    pub bound: f64,
    /// delta Psi(t, L) / 2
    pub psi_form: f64,
    pub fallback: bool,
}

/// Lag indices checked on a grid with `max_lag` distinct lags: all of them up
/// to 64, otherwise 1..=50 and a geometric sweep to `max_lag`.
fn lag_plan(max_lag: usize) -> Vec<usize> {
    if max_lag <= 64 {
        return (1..=max_lag).collect();
    }
    let mut v: Vec<usize> = (1..=50).collect();
    let mut k = 50.0f64;
    while (k as usize) < max_lag {
        k *= 1.25;
        v.push((k as usize).min(max_lag));
    }
    v.dedup();
    v
}

/// Sudakov lower bound on the grid x_j = j t^{1/alpha}, |j| <= floor(L / t^{1/alpha}).
///
/// `delta` is the claimed separation (a fitted multiple of the metric's lower
/// scale); every evaluated pair distance must reach it.
pub fn sudakov_lower_bound(
    m: &Metrics,
    t: f64,
    l: f64,
    metric: SudakovMetric,
    delta: f64,
) -> Result<SudakovReport> {
    let p = m.params();
    if !(t > 0.0 && l > 0.0 && delta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "sudakov needs t, L, delta > 0: {t}, {l}, {delta}"
        )));
    }
    let step = p.length_scale(t);
    let psi = p.psi(t, l);
    let ratio = l / step;
    if ratio < 1.0 {
        // two points (t/2, 0) and (t, 0)
        if metric != SudakovMetric::D1 {
            return Err(Error::ValidityWindowViolated(format!(
                "increment bounds need L >= t^(1/alpha) = {step}, got {l}"
            )));
        }
        let d = m
            .d1(SpacetimePoint { t: t / 2.0, x: 0.0 }, SpacetimePoint { t, x: 0.0 })?
            .value;
        if d < delta {
            return Err(Error::SeparationViolated {
                i: 0,
                j: 1,
                distance: d,
                delta,
            });
        }
        return Ok(SudakovReport {
            grid_step: step,
            point_count: 2,
            checked: vec![(0, d)],
            min_metric: d,
            delta,
            bound: delta,
            psi_form: delta * psi / 2.0,
            fallback: true,
        });
    }
    let half = ratio.floor() as usize;
    let count = 2 * half + 1;
    let lags = lag_plan(2 * half);
    let checked: Vec<(usize, f64)> = lags
        .par_iter()
        .map(|&k| {
            let r = k as f64 * step;
            let v = match metric {
                SudakovMetric::D1 => m
                    .d1(SpacetimePoint { t, x: 0.0 }, SpacetimePoint { t, x: r })?
                    .value,
                SudakovMetric::D2 { h } => m.d2(t, h, 0.0, r)?.value,
                SudakovMetric::D3 { tau } => m.d3(t, tau, 0.0, r)?.value,
            };
            Ok((k, v))
        })
        .collect::<Result<_>>()?;
    let (k_min, min_metric) = checked
        .iter()
        .copied()
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    if min_metric < delta {
        return Err(Error::SeparationViolated {
            i: 0,
            j: k_min as i64,
            distance: min_metric,
            delta,
        });
    }
    Ok(SudakovReport {
        grid_step: step,
        point_count: count,
        checked,
        min_metric,
        delta,
        bound: delta * (count as f64).log2().sqrt(),
        psi_form: delta * psi / 2.0,
        fallback: false,
    })
}

impl SudakovReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record([
            "row", "lag", "metric", "grid_step", "point_count", "min_metric", "delta", "bound",
            "psi_form",
        ])?;
        for (k, v) in &self.checked {
            w.write_record([
                "grid".to_string(),
                k.to_string(),
                v.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ])?;
        }
        w.write_record([
            "summary".to_string(),
            String::new(),
            String::new(),
            self.grid_step.to_string(),
            self.point_count.to_string(),
            self.min_metric.to_string(),
            self.delta.to_string(),
            self.bound.to_string(),
            self.psi_form.to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// 2 exp(-lambda^2 / (2 sigma^2)); NaN outside sigma^2 > 0, lambda >= 0.
pub fn borell_tail(sigma_sq: f64, lambda: f64) -> f64 {
    if !(sigma_sq > 0.0 && lambda >= 0.0) {
        return f64::NAN;
    }
    2.0 * (-lambda * lambda / (2.0 * sigma_sq)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureSpec;
    use proptest::prelude::*;

    fn p() -> ModelParams {
        ModelParams::new(1.5, 0.4).unwrap()
    }

    #[test]
    fn cut_index_fixtures() {
        let p = p();
        assert_eq!(cut_index(&p, 1.0, 16.0), 4);
        assert_eq!(cut_index(&p, 1.0, 1.0), 2);
        assert_eq!(cut_index(&p, 8.0, 0.5), 2);
        assert_eq!(cut_index(&p, 1.0, 17.0), 5);
    }

    proptest! {
        #[test]
        fn cut_index_against_psi(t in 0.01f64..100.0, l in 0.01f64..1e6) {
            let p = p();
            let n = cut_index(&p, t, l);
            prop_assert!(2f64.powf(n as f64 / 2.0) <= 2f64.powf(1.5) * p.psi(t, l) * (1.0 + 1e-12));
            // minimality
            if n > 2 {
                prop_assert!(2f64.powi(n as i32 - 3) < (l / p.length_scale(t)).max(2.0).log2());
            }
        }
    }

    #[test]
    fn levels_are_admissible() {
        for n in 0..30 {
            assert!(DyadicPartitionScheme::admissible(n), "level {n}");
        }
    }

    #[test]
    fn single_level_is_domain_diameter() {
        let p = p();
        let s = DyadicPartitionScheme::new(1.0, 4.0).unwrap().with_max_level(0);
        let law = DiameterLaw::D1 { multiplier: 1.0 };
        let r = chaining_upper_bound(&p, &s, law).unwrap();
        assert_eq!(r.levels.len(), 1);
        assert_eq!(r.total, law.diameter(&p, &s, 0));
    }

    #[test]
    fn short_domain_scales_like_t_kappa() {
        // L = T^{1/alpha}/2: the bound is exactly proportional to T^kappa
        let p = p();
        let law = DiameterLaw::D1 { multiplier: 1.0 };
        let ratios: Vec<f64> = [0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&t| {
                let s = DyadicPartitionScheme::new(t, 0.5 * p.length_scale(t)).unwrap();
                chaining_upper_bound(&p, &s, law).unwrap().total / t.powf(p.kappa())
            })
            .collect();
        for r in &ratios {
            assert!((r / ratios[0] - 1.0).abs() < 1e-12, "{ratios:?}");
        }
    }

    /// sup over N0 of sum_{n > N0} 2^{n/2} [(2^{2^{N0-2}} / 2^{2^{n-2}})^{gamma/2} + 2^{-kappa 2^{n-1}}]
    fn tail_constant(p: &ModelParams) -> f64 {
        let (g, k) = (p.roughness(), p.kappa());
        (2..20)
            .map(|n0: i32| {
                (n0 + 1..80)
                    .map(|n| {
                        let sp = 2f64.powf(-(g / 2.0) * (2f64.powi(n - 2) - 2f64.powi(n0 - 2)));
                        2f64.powf(n as f64 / 2.0) * (sp + 2f64.powf(-k * 2f64.powi(n - 1)))
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn psi_ratio_is_stable() {
        let p = p();
        let law = DiameterLaw::D1 { multiplier: 1.0 };
        let mut rs = Vec::new();
        for t in [1.0, 4.0] {
            for l in [2.0, 16.0, 256.0] {
                if l < p.length_scale(t) {
                    continue;
                }
                let s = DyadicPartitionScheme::new(t, l).unwrap();
                let r = chaining_upper_bound(&p, &s, law).unwrap();
                assert!(r.levels.iter().all(|x| x.term <= r.total));
                assert!(r.tail_after_cut <= tail_constant(&p) * t.powf(p.kappa()), "{r:?}");
                rs.push(r.ratio);
            }
        }
        let max = rs.iter().cloned().fold(0.0, f64::max);
        let min = rs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 2.0, "{rs:?}");
    }

    #[test]
    fn increment_laws_and_divergence() {
        let p = p();
        let s = DyadicPartitionScheme::new(1.0, 64.0).unwrap();
        let g = p.roughness();
        for theta in [0.0, g / 4.0] {
            let r = chaining_upper_bound(
                &p,
                &s,
                DiameterLaw::D2 {
                    multiplier: 1.0,
                    h: 0.01,
                    theta,
                },
            )
            .unwrap();
            assert!(r.total.is_finite() && r.ratio > 0.0);
        }
        let r = chaining_upper_bound(
            &p,
            &s,
            DiameterLaw::D3 {
                multiplier: 1.0,
                tau: 0.01,
                theta: 0.1,
            },
        )
        .unwrap();
        assert!(r.total > 0.0);
        let e = chaining_upper_bound(
            &p,
            &s,
            DiameterLaw::D2 {
                multiplier: 1.0,
                h: 0.01,
                theta: g / 2.0,
            },
        );
        assert!(matches!(e, Err(Error::DivergentSeries(_))));
    }

    #[test]
    fn sudakov_grid_and_separation() {
        let p = p();
        let m = Metrics::new(p, QuadratureSpec::default());
        let r = sudakov_lower_bound(&m, 1.0, 1024.0, SudakovMetric::D1, 0.1).unwrap();
        assert_eq!(r.point_count, 2049);
        assert!(r.min_metric >= 0.1);
        // neighbours set the minimum
        assert_eq!(r.checked.iter().find(|c| c.1 == r.min_metric).unwrap().0, 1);
        let too_big = 1.01 * r.min_metric;
        assert!(matches!(
            sudakov_lower_bound(&m, 1.0, 1024.0, SudakovMetric::D1, too_big),
            Err(Error::SeparationViolated { .. })
        ));
        let f = sudakov_lower_bound(&m, 1.0, 0.5, SudakovMetric::D1, 0.1).unwrap();
        assert!(f.fallback && f.point_count == 2);
        assert!(sudakov_lower_bound(&m, 1.0, 0.5, SudakovMetric::D2 { h: 0.01 }, 0.01).is_err());
    }

    #[test]
    fn borell_examples() {
        assert_eq!(borell_tail(0.7, 0.0), 2.0);
        let s2: f64 = 0.7;
        let one = borell_tail(s2, (s2 * 2.0 * 2f64.ln()).sqrt());
        assert!((one - 1.0).abs() < 1e-14);
        let v = borell_tail(p().c21(), 3.0);
        assert!((v - 1.5536e-3).abs() < 1e-7, "{v}");
        assert!(borell_tail(0.0, 1.0).is_nan());
    }

    #[test]
    fn csv_has_summary_row() {
        let p = p();
        let s = DyadicPartitionScheme::new(1.0, 16.0).unwrap();
        let r = chaining_upper_bound(&p, &s, DiameterLaw::D1 { multiplier: 1.0 }).unwrap();
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("row,n,diameter"));
        assert!(text.lines().last().unwrap().starts_with("summary,"));
        assert_eq!(text.lines().count(), r.levels.len() + 2);
    }
}
