//! Canonical metrics, correlations and covariances of the field, evaluated from
//! their spectral integrals.
//!
//! Every quantity is `c1H` times an integral of the kernel family in
//! [`crate::quadrature`] against `xi^{-gamma-1}` with `gamma = 2H + alpha - 2`.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::{
    cos_power_tail, integrate, riesz_identity, Amplitude, AmplitudeTail, KernelSpec,
    QuadratureSpec,
};
use crate::special::gamma;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: f64,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: f64) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0 && x.is_finite()) {
            return Err(Error::InvalidInput(format!("point ({t}, {x})")));
        }
        Ok(Self { t, x })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    D1,
    D1Tilde,
    D2,
    D3,
    D4,
    Rho1,
    Rho2,
    Rho3,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MetricKind::D1 => "d1",
            MetricKind::D1Tilde => "d1tilde",
            MetricKind::D2 => "d2",
            MetricKind::D3 => "d3",
            MetricKind::D4 => "d4",
            MetricKind::Rho1 => "rho1",
            MetricKind::Rho2 => "rho2",
            MetricKind::Rho3 => "rho3",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "d1" => MetricKind::D1,
            "d1tilde" => MetricKind::D1Tilde,
            "d2" => MetricKind::D2,
            "d3" => MetricKind::D3,
            "d4" => MetricKind::D4,
            "rho1" => MetricKind::Rho1,
            "rho2" => MetricKind::Rho2,
            "rho3" => MetricKind::Rho3,
            _ => return Err(Error::InvalidInput(format!("unknown metric kind {s}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub kind: MetricKind,
    pub value: f64,
    pub error_bound: f64,
    pub inputs: Vec<(&'static str, f64)>,
}

/// A squared quantity and its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Squared {
    pub value: f64,
    pub error: f64,
}

impl Squared {
    fn add(self, o: Squared) -> Squared {
        Squared {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }

    fn scale(self, c: f64) -> Squared {
        Squared {
            value: c * self.value,
            error: c.abs() * self.error,
        }
    }

    /// Square root with a propagated bound.
    pub fn sqrt(self) -> (f64, f64) {
        let v = self.value.max(0.0);
        let hi = (v + self.error).sqrt();
        let lo = (v - self.error).max(0.0).sqrt();
        let d = v.sqrt();
        (d, (hi - d).max(d - lo))
    }
}

/// Which correlation function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation {
    /// u(t, x) against u(t, x + lag).
    Field,
    /// Delta_h u(t, x) against Delta_h u(t, x + lag).
    Space { h: f64 },
    /// D_tau u(t, x) against D_tau u(t, x + lag).
    Time { tau: f64 },
}

/// Evaluator bound to one model and quadrature policy.
#[derive(Debug, Clone)]
pub struct Metrics {
    params: ModelParams,
    quad: QuadratureSpec,
}

impl Metrics {
    pub fn new(params: ModelParams, quad: QuadratureSpec) -> Self {
        Self { params, quad }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    fn kernel(&self) -> KernelSpec {
        KernelSpec::new(self.params.roughness(), self.params.alpha())
    }

    fn c1h_integral(&self, k: &KernelSpec) -> Result<Squared> {
        let r = integrate(k, &self.quad)?;
        Ok(Squared {
            value: r.value,
            error: r.error_bound,
        }
        .scale(self.params.c1h()))
    }

    /// E[u(t,x)^2] by quadrature.
    pub fn variance_quadrature(&self, t: f64) -> Result<Squared> {
        self.c1h_integral(&self.kernel().exp(2.0, t, 1))
    }

    /// E[u(t,x) u(s,y)].
    pub fn covariance(&self, a: SpacetimePoint, b: SpacetimePoint) -> Result<Squared> {
        let s = a.t.min(b.t);
        let delta = (a.t - b.t).abs();
        let r = (a.x - b.x).abs();
        if s == 0.0 {
            return Ok(Squared {
                value: 0.0,
                error: 0.0,
            });
        }
        let mut k = self.kernel().exp(2.0, s, 1);
        if delta > 0.0 {
            k = k.decay(1.0, delta);
        }
        if r > 0.0 {
            k = k.lag(r);
        }
        if delta == 0.0 && r == 0.0 {
            return Ok(Squared {
                value: self.params.variance(s),
                error: 0.0,
            });
        }
        self.c1h_integral(&k)
    }

    /// d1^2 = E|u(t,x) - u(s,y)|^2.
    pub fn d1_sq(&self, a: SpacetimePoint, b: SpacetimePoint) -> Result<Squared> {
        let (hi, lo) = if a.t >= b.t { (a, b) } else { (b, a) };
        let (t, s) = (hi.t, lo.t);
        let delta = t - s;
        let r = (a.x - b.x).abs();
        let zero = Squared {
            value: 0.0,
            error: 0.0,
        };
        // noise on [s, t]
        let late = Squared {
            value: self.params.variance(delta),
            error: 0.0,
        };
        if s == 0.0 {
            return Ok(late);
        }
        // noise on [0, s]: (1 - e^{-delta})^2 + 2 e^{-delta} (1 - cos r)
        let drift = if delta > 0.0 {
            self.c1h_integral(&self.kernel().exp(2.0, s, 1).exp(1.0, delta, 2))?
        } else {
            zero
        };
        let spread = if r > 0.0 {
            let mut k = self.kernel().exp(2.0, s, 1).cos(r);
            if delta > 0.0 {
                k = k.decay(1.0, delta);
            }
            self.c1h_integral(&k)?.scale(2.0)
        } else {
            zero
        };
        Ok(late.add(drift).add(spread))
    }

    pub fn d1(&self, a: SpacetimePoint, b: SpacetimePoint) -> Result<MetricReport> {
        let (value, error_bound) = self.d1_sq(a, b)?.sqrt();
        Ok(MetricReport {
            kind: MetricKind::D1,
            value,
            error_bound,
            inputs: vec![("t", a.t), ("x", a.x), ("s", b.t), ("y", b.x)],
        })
    }

    /// Closed-form equivalent metric.
    pub fn d1_tilde(&self, a: SpacetimePoint, b: SpacetimePoint) -> f64 {
        let c = self.params.constants();
        let r = (a.x - b.x).abs();
        let m = a.t.min(b.t);
        let space = if r == 0.0 || m == 0.0 {
            0.0
        } else {
            r.powf(c.space_exp).min(m.powf(c.kappa))
        };
        space + (a.t - b.t).abs().powf(c.kappa)
    }

    /// d2^2 = 4 c1H int (1 - e^{-2t}) (1 - cos h) (1 - cos r).
    pub fn d2_sq(&self, t: f64, h: f64, x: f64, y: f64) -> Result<Squared> {
        positive_time(t)?;
        let k = self.kernel().exp(2.0, t, 1).cos(h).cos(x - y);
        Ok(self.c1h_integral(&k)?.scale(4.0))
    }

    pub fn d2(&self, t: f64, h: f64, x: f64, y: f64) -> Result<MetricReport> {
        let (value, error_bound) = self.d2_sq(t, h, x, y)?.sqrt();
        Ok(MetricReport {
            kind: MetricKind::D2,
            value,
            error_bound,
            inputs: vec![("t", t), ("h", h), ("x", x), ("y", y)],
        })
    }

    /// d3^2 = 2 c1H int [(1 - e^{-2t})(1 - e^{-tau})^2 + (1 - e^{-2 tau})] (1 - cos r).
    pub fn d3_sq(&self, t: f64, tau: f64, x: f64, y: f64) -> Result<Squared> {
        positive_time(t)?;
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidInput(format!("tau = {tau}")));
        }
        let r = x - y;
        let early = self.kernel().exp(2.0, t, 1).exp(1.0, tau, 2).cos(r);
        let late = self.kernel().exp(2.0, tau, 1).cos(r);
        Ok(self
            .c1h_integral(&early)?
            .add(self.c1h_integral(&late)?)
            .scale(2.0))
    }

    pub fn d3(&self, t: f64, tau: f64, x: f64, y: f64) -> Result<MetricReport> {
        let (value, error_bound) = self.d3_sq(t, tau, x, y)?.sqrt();
        Ok(MetricReport {
            kind: MetricKind::D3,
            value,
            error_bound,
            inputs: vec![("t", t), ("tau", tau), ("x", x), ("y", y)],
        })
    }

    /// Metric of the smoothed field u_rho(t,x) = int Delta_h u(t,x) rho(h) dh:
    /// d4^2 = 8 c1H int (1 - e^{-2t}) (1 - cos r) R(xi)^2 with R the one-sided
    /// transform of rho.
    pub fn d4_sq(&self, t: f64, x: f64, y: f64) -> Result<Squared> {
        positive_time(t)?;
        let g = Arc::new(RhoTransformSq::new(&self.params));
        let k = self.kernel().exp(2.0, t, 1).cos(x - y).amplitude(g);
        Ok(self.c1h_integral(&k)?.scale(8.0))
    }

    pub fn d4(&self, t: f64, x: f64, y: f64) -> Result<MetricReport> {
        let (value, error_bound) = self.d4_sq(t, x, y)?.sqrt();
        Ok(MetricReport {
            kind: MetricKind::D4,
            value,
            error_bound,
            inputs: vec![("t", t), ("x", x), ("y", y)],
        })
    }

    /// E|Delta_h u(t,x)|^2 = 2 c1H int (1 - e^{-2t})(1 - cos h).
    pub fn space_increment_variance(&self, t: f64, h: f64) -> Result<Squared> {
        positive_time(t)?;
        Ok(self
            .c1h_integral(&self.kernel().exp(2.0, t, 1).cos(h))?
            .scale(2.0))
    }

    /// E|D_tau u(t,x)|^2.
    pub fn time_increment_variance(&self, t: f64, tau: f64) -> Result<Squared> {
        positive_time(t)?;
        let a = self.c1h_integral(&self.kernel().exp(2.0, t, 1).exp(1.0, tau, 2))?;
        let b = Squared {
            value: self.params.variance(tau),
            error: 0.0,
        };
        Ok(a.add(b))
    }

    /// Correlation at spatial lag; the normalizer is the matching increment variance.
    pub fn correlation(&self, which: Correlation, t: f64, lag: f64) -> Result<MetricReport> {
        positive_time(t)?;
        let lag = lag.abs();
        let (kind, aux, cov, var) = match which {
            Correlation::Field => {
                let var = Squared {
                    value: self.params.variance(t),
                    error: 0.0,
                };
                let mut k = self.kernel().exp(2.0, t, 1);
                if lag > 0.0 {
                    k = k.lag(lag);
                }
                let cov = if lag > 0.0 { self.c1h_integral(&k)? } else { var };
                (MetricKind::Rho1, ("aux", 0.0), cov, var)
            }
            Correlation::Space { h } => {
                let var = self.space_increment_variance(t, h)?;
                let cov = if lag > 0.0 {
                    self.c1h_integral(&self.kernel().exp(2.0, t, 1).cos(h).lag(lag))?
                        .scale(2.0)
                } else {
                    var
                };
                (MetricKind::Rho2, ("h", h), cov, var)
            }
            Correlation::Time { tau } => {
                let var = self.time_increment_variance(t, tau)?;
                let cov = if lag > 0.0 {
                    let a = self.c1h_integral(
                        &self.kernel().exp(2.0, t, 1).exp(1.0, tau, 2).lag(lag),
                    )?;
                    let b = self.c1h_integral(&self.kernel().exp(2.0, tau, 1).lag(lag))?;
                    a.add(b)
                } else {
                    var
                };
                (MetricKind::Rho3, ("tau", tau), cov, var)
            }
        };
        if var.value <= 0.0 {
            return Err(Error::InvalidInput("zero normalizing variance".into()));
        }
        let value = cov.value / var.value;
        let error_bound = (cov.error + value.abs() * var.error) / var.value;
        Ok(MetricReport {
            kind,
            value,
            error_bound,
            inputs: vec![("t", t), aux, ("lag", lag)],
        })
    }

    /// Extreme ratios of a metric to its comparison function over a grid.
    pub fn sandwich_check(&self, kind: Sandwich, grid: &[[f64; 4]]) -> Result<SandwichReport> {
        for g in grid {
            kind.check_region(&self.params, g)?;
        }
        let ratios: Vec<f64> = grid
            .par_iter()
            .map(|g| kind.ratio(self, g))
            .collect::<Result<Vec<_>>>()?;
        let mut ratio_min = f64::INFINITY;
        let mut ratio_max = f64::NEG_INFINITY;
        for r in &ratios {
            ratio_min = ratio_min.min(*r);
            ratio_max = ratio_max.max(*r);
        }
        Ok(SandwichReport {
            ratio_min,
            ratio_max,
            points: grid.len(),
        })
    }
}

fn positive_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("time must be positive, got {t}")))
    }
}

/// Metric/comparison pairs with their lemma regions. Grid rows are
/// `[t, x, s, y]` for d1, `[t, h, x, y]` for d2 and `[t, tau, x, y]` for d3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sandwich {
    D1,
    D2Lower,
    D2Upper { theta: f64 },
    D3Lower,
    D3Upper { theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub points: usize,
}

impl Sandwich {
    /// Largest h allowed by the d2 lower bound at (t, r).
    pub fn d2_lower_h_max(p: &ModelParams, t: f64, r: f64) -> f64 {
        let ts = p.length_scale(t);
        let proof = PI / 4.0 * (2.0 / std::f64::consts::LN_2).powf(1.0 / p.alpha()) * ts;
        (3.0 * r / 64.0).min(proof).min(3.0 * ts / 64.0)
    }

    fn check_region(&self, p: &ModelParams, g: &[f64; 4]) -> Result<()> {
        let gam = p.roughness();
        let bad = |m: String| Err(Error::RegionViolation(m));
        match *self {
            Sandwich::D1 => {
                if g[0] == g[2] && g[1] == g[3] {
                    return bad(format!("degenerate pair {g:?}"));
                }
                if g[0] < 0.0 || g[2] < 0.0 {
                    return bad(format!("negative time {g:?}"));
                }
            }
            Sandwich::D2Lower => {
                let r = (g[2] - g[3]).abs();
                if !(g[0] > 0.0 && r >= p.length_scale(g[0])) {
                    return bad(format!("d2 lower bound needs |x-y| >= t^(1/alpha): {g:?}"));
                }
                if !(g[1] > 0.0 && g[1] <= Self::d2_lower_h_max(p, g[0], r)) {
                    return bad(format!("d2 lower bound h outside window: {g:?}"));
                }
            }
            Sandwich::D2Upper { theta } => {
                if !(0.0..=gam / 2.0).contains(&theta) {
                    return bad(format!("theta {theta} outside [0, gamma/2]"));
                }
                if !(g[0] > 0.0 && g[1] > 0.0 && g[2] != g[3]) {
                    return bad(format!("d2 upper bound needs t, h > 0 and x != y: {g:?}"));
                }
            }
            Sandwich::D3Lower => {
                let r = (g[2] - g[3]).abs();
                if !(g[0] > 0.0 && r >= p.length_scale(g[0])) {
                    return bad(format!("d3 lower bound needs |x-y| >= t^(1/alpha): {g:?}"));
                }
                if !(g[1] > 0.0 && g[1] <= (3.0 / 32.0 * r).powf(p.alpha())) {
                    return bad(format!("d3 lower bound tau outside window: {g:?}"));
                }
            }
            Sandwich::D3Upper { theta } => {
                if !(0.0..=gam / p.alpha()).contains(&theta) {
                    return bad(format!("theta {theta} outside [0, gamma/alpha]"));
                }
                if !(g[1] > 0.0 && g[1] <= g[0] && g[2] != g[3]) {
                    return bad(format!("d3 upper bound needs 0 < tau <= t, x != y: {g:?}"));
                }
            }
        }
        Ok(())
    }

    fn ratio(&self, m: &Metrics, g: &[f64; 4]) -> Result<f64> {
        let p = m.params();
        let gam = p.roughness();
        let alpha = p.alpha();
        Ok(match *self {
            Sandwich::D1 => {
                let a = SpacetimePoint::new(g[0], g[1])?;
                let b = SpacetimePoint::new(g[2], g[3])?;
                m.d1(a, b)?.value / m.d1_tilde(a, b)
            }
            Sandwich::D2Lower => m.d2(g[0], g[1], g[2], g[3])?.value / g[1].powf(gam / 2.0),
            Sandwich::D2Upper { theta } => {
                let r = (g[2] - g[3]).abs();
                let e = gam - 2.0 * theta;
                let cmp = g[1].powf(theta) * r.powf(e / 2.0).min(g[0].powf(e / (2.0 * alpha)));
                m.d2(g[0], g[1], g[2], g[3])?.value / cmp
            }
            Sandwich::D3Lower => {
                m.d3(g[0], g[1], g[2], g[3])?.value / g[1].powf(gam / (2.0 * alpha))
            }
            Sandwich::D3Upper { theta } => {
                let r = (g[2] - g[3]).abs();
                let e = gam - alpha * theta;
                let cmp =
                    g[1].powf(theta / 2.0) * r.powf(e / 2.0).min(g[0].powf(e / (2.0 * alpha)));
                m.d3(g[0], g[1], g[2], g[3])?.value / cmp
            }
        })
    }
}

/// Explicit bound on |rho1(r)| r^{(1-H)/2} at time t from splitting the
/// cosine integral at r^{-1/4}.
pub fn field_correlation_bracket(p: &ModelParams, t: f64, r: f64) -> f64 {
    let (h, a) = (p.hurst(), p.alpha());
    let b = t / (1.0 - h)
        + 2.0 * t * r.powf(-0.75)
        + (2.0 * t).powf((2.0 * h + a - 1.0) / a)
            * gamma((1.0 - 2.0 * h) / a)
            * r.powf(-(1.0 + h) / 2.0)
        + r.powf(-(3.0 - a) / 4.0);
    p.c1h() / p.variance(t) * b
}

/// Normalizing constant of rho: 1/2 (4/(4-2H-alpha) + 1/(1-2H))^{-1}.
pub fn rho_constant(p: &ModelParams) -> f64 {
    let (h, a) = (p.hurst(), p.alpha());
    0.5 / (4.0 / (4.0 - 2.0 * h - a) + 1.0 / (1.0 - 2.0 * h))
}

/// Probability density rho(h) used to smooth spatial increments.
pub fn rho_density(p: &ModelParams, h: f64) -> f64 {
    let h = h.abs();
    if h == 0.0 {
        return f64::INFINITY;
    }
    let c = rho_constant(p);
    if h <= 1.0 {
        c * h.powf(-p.hurst() / 2.0 - p.alpha() / 4.0)
    } else {
        c * h.powf(2.0 * p.hurst() - 2.0)
    }
}

/// R(xi) = int_0^inf (1 - cos h xi) rho(h) dh.
pub fn rho_transform(p: &ModelParams, xi: f64) -> f64 {
    RhoTransformSq::new(p).transform(xi)
}

/// Amplitude R(xi)^2 for the d4 kernel.
#[derive(Debug, Clone)]
pub struct RhoTransformSq {
    c: f64,
    /// small-h power of rho
    p: f64,
    /// large-h power of rho
    q: f64,
    /// Gamma(1-p) sin(pi p / 2): int_0^inf cos(u) u^{-p} du
    gp: f64,
    /// Riesz constant for exponent q - 1
    rq: f64,
}

const RHO_SERIES_MAX: f64 = 8.0;

impl RhoTransformSq {
    pub fn new(params: &ModelParams) -> Self {
        let p = params.hurst() / 2.0 + params.alpha() / 4.0;
        let q = 2.0 - 2.0 * params.hurst();
        Self {
            c: rho_constant(params),
            p,
            q,
            gp: gamma(1.0 - p) * (PI * p / 2.0).sin(),
            rq: riesz_identity(q - 1.0, 1.0),
        }
    }

    /// sum_{k>=1} (-1)^{k+1} xi^{2k} / ((2k)! (2k+1-s)) = int_0^1 (1 - cos h xi) h^{-s} dh.
    fn unit_series(s: f64, xi: f64) -> f64 {
        let x2 = xi * xi;
        let mut term = 1.0; // xi^{2k}/(2k)! with sign
        let mut sum = 0.0;
        for k in 1..200 {
            let kk = 2.0 * k as f64;
            term *= x2 / ((kk - 1.0) * kk);
            let add = term / (kk + 1.0 - s);
            sum += if k % 2 == 1 { add } else { -add };
            if add < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    }

    pub fn transform(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        if xi == 0.0 {
            return 0.0;
        }
        let (p, q, c) = (self.p, self.q, self.c);
        if xi <= RHO_SERIES_MAX {
            let near = Self::unit_series(p, xi);
            let far = self.rq * xi.powf(q - 1.0) - Self::unit_series(q, xi);
            return c * (near + far);
        }
        let (cp, _) = cos_power_tail(p, xi);
        let (cq, _) = cos_power_tail(q, xi);
        0.5 - c * (xi.powf(p - 1.0) * (self.gp - cp) + xi.powf(q - 1.0) * cq)
    }
}

impl Amplitude for RhoTransformSq {
    fn eval(&self, xi: f64) -> f64 {
        let r = self.transform(xi);
        r * r
    }

    fn small_power(&self) -> f64 {
        2.0 * (self.q - 1.0)
    }

    fn sup(&self) -> f64 {
        1.0
    }

    fn tail_start(&self) -> f64 {
        50.0
    }

    fn tail(&self, from: f64) -> AmplitudeTail {
        let (p, q, c) = (self.p, self.q, self.c);
        let k = c * self.gp;
        // R = 1/2 - K xi^{p-1} + E with |E| <= cE xi^{-2}
        let ce = c * ((q - p).abs() + 2.0 * (p * (p + 1.0) + q * (q + 1.0)) / from);
        let a_max = 0.5 + k * from.powf(p - 1.0);
        AmplitudeTail {
            terms: vec![(0.25, 0.0), (-k, 1.0 - p), (k * k, 2.0 - 2.0 * p)],
            remainder_coeff: 2.0 * a_max * ce + ce * ce / (from * from),
            remainder_power: 2.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m() -> Metrics {
        Metrics::new(ModelParams::new(1.5, 0.4).unwrap(), QuadratureSpec::default())
    }

    fn pt(t: f64, x: f64) -> SpacetimePoint {
        SpacetimePoint::new(t, x).unwrap()
    }

    #[test]
    fn variance_quadrature_matches_closed_form() {
        let m = m();
        for t in [0.1, 1.0, 10.0] {
            let q = m.variance_quadrature(t).unwrap();
            let v = m.params().variance(t);
            assert!(((q.value - v) / v).abs() < 1e-6, "t={t}: {} vs {v}", q.value);
        }
    }

    #[test]
    fn d1_trivial_examples() {
        let m = m();
        assert_eq!(m.d1(pt(1.0, 0.0), pt(1.0, 0.0)).unwrap().value, 0.0);
        for (x, y) in [(0.0, 0.0), (3.0, -1.0)] {
            let d = m.d1_sq(pt(2.0, x), pt(0.0, y)).unwrap();
            assert!((d.value - m.params().variance(2.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn d1_tilde_examples() {
        let m = m();
        assert!((m.d1_tilde(pt(1.0, 0.0), pt(1.0, 1.0)) - 1.0).abs() < 1e-15);
        assert!((m.d1_tilde(pt(1.0, 0.0), pt(0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!((m.d1_tilde(pt(1.0, 0.0), pt(1.0, 0.5)) - 0.901_250_462_610_830_2).abs() < 1e-14);
    }

    #[test]
    fn polarization_identity() {
        // equal-time covariance = variance - d1^2 / 2
        let m = m();
        let (a, b) = (pt(1.0, 0.0), pt(1.0, 0.7));
        let c = m.covariance(a, b).unwrap().value;
        let d = m.d1_sq(a, b).unwrap().value;
        assert!((c - (m.params().variance(1.0) - d / 2.0)).abs() < 1e-8);
    }

    #[test]
    fn covariance_closed_form_at_zero_lag() {
        // c1H/alpha |Gamma(-g/a)| ((|t-s| + 2 min)^{g/a} - |t-s|^{g/a})
        let m = m();
        let p = m.params();
        let e = p.roughness() / p.alpha();
        for (t, s) in [(1.0, 0.5), (2.0, 1.9), (0.3, 3.0)] {
            let c = m.covariance(pt(t, 0.0), pt(s, 0.0)).unwrap();
            let d = (t - s).abs();
            let mn = t.min(s);
            let exact = p.c1h() / p.alpha() * gamma(-e).abs() * ((d + 2.0 * mn).powf(e) - d.powf(e));
            assert!(((c.value - exact) / exact).abs() < 1e-8, "{} {exact}", c.value);
        }
    }

    #[test]
    fn d2_examples() {
        let m = m();
        assert_eq!(m.d2(1.0, 0.0, 0.0, 2.0).unwrap().value, 0.0);
        assert_eq!(m.d2(1.0, 0.5, 1.0, 1.0).unwrap().value, 0.0);
        // exchange symmetry and translation invariance
        let a = m.d2_sq(1.0, 0.3, 0.0, 1.7).unwrap();
        let b = m.d2_sq(1.0, 1.7, 5.0, 5.3).unwrap();
        assert!((a.value - b.value).abs() <= a.error + b.error);
    }

    #[test]
    fn d3_examples() {
        let m = m();
        assert_eq!(m.d3(1.0, 0.1, 1.0, 1.0).unwrap().value, 0.0);
        // d3 vanishes only like tau^kappa; far apart d3^2 ~ 2 E|D_tau u|^2, and
        // E|D_tau u|^2 ~ 2^{1-e} c21 tau^e with e = gamma/alpha as tau -> 0
        let mut prev = f64::INFINITY;
        for tau in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let d = m.d3_sq(1.0, tau, 0.0, 2.0).unwrap().value;
            assert!(d < prev);
            prev = d;
        }
        let e = m.params().roughness() / m.params().alpha();
        let lim = 2.0 * 2f64.powf(1.0 - e) * m.params().variance(1e-6);
        assert!((prev / lim - 1.0).abs() < 0.02, "{prev} {lim}");
    }

    #[test]
    fn rho_normalization_and_constant() {
        let p = ModelParams::new(1.5, 0.4).unwrap();
        assert!((rho_constant(&p) - 0.068).abs() < 1e-15);
        assert_eq!(rho_density(&p, 0.3), rho_density(&p, -0.3));
        // int rho = 2c (1/(1-p) + 1/(q-1)) computed piecewise by quadrature
        let g = |h: f64| rho_density(&p, h);
        // u = h^{1-p} substitution removes the singularity on [0,1]
        let pw = 0.4 / 2.0 + 1.5 / 4.0;
        let mut near = 0.0;
        let n = 200_000;
        for i in 0..n {
            let u = (i as f64 + 0.5) / n as f64;
            let h = u.powf(1.0 / (1.0 - pw));
            near += g(h) * h.powf(pw) / (1.0 - pw) / n as f64;
        }
        // [1, inf): h = 1/v^{1/(q-1)}
        let q = 2.0 - 0.8;
        let mut far = 0.0;
        for i in 0..n {
            let v = (i as f64 + 0.5) / n as f64;
            let h = v.powf(-1.0 / (q - 1.0));
            far += g(h) * h.powf(q) / (q - 1.0) / n as f64;
        }
        assert!((2.0 * (near + far) - 1.0).abs() < 1e-10, "{}", 2.0 * (near + far));
    }

    #[test]
    fn rho_transform_branches_agree() {
        let p = ModelParams::new(1.5, 0.4).unwrap();
        let r = RhoTransformSq::new(&p);
        // evaluate the closed form just below the series cutoff and compare
        for xi in [2.0, 5.0, 7.9] {
            let series = r.transform(xi);
            let (cp, _) = cos_power_tail(r.p, xi);
            let (cq, _) = cos_power_tail(r.q, xi);
            let closed = 0.5 - r.c * (xi.powf(r.p - 1.0) * (r.gp - cp) + xi.powf(r.q - 1.0) * cq);
            assert!((series - closed).abs() < 1e-11, "xi={xi} {series} {closed}");
        }
        assert!((r.transform(1e6) - 0.5).abs() < 0.01);
    }

    #[test]
    fn rho_tail_remainder_is_honest() {
        let p = ModelParams::new(1.5, 0.4).unwrap();
        let r = RhoTransformSq::new(&p);
        let t = r.tail(50.0);
        for xi in [50.0f64, 73.3, 200.0, 1e4] {
            let approx: f64 = t.terms.iter().map(|(c, pw)| c * xi.powf(-pw)).sum();
            let diff = (r.eval(xi) - approx).abs();
            assert!(diff <= t.remainder_coeff * xi.powf(-t.remainder_power));
        }
    }

    #[test]
    fn d4_examples() {
        let m = m();
        assert_eq!(m.d4(1.0, 2.0, 2.0).unwrap().value, 0.0);
        // lower-bound display evaluated at |x-y| = t^{1/alpha}
        let p = m.params();
        for t in [0.5, 1.0, 2.0] {
            let r = p.length_scale(t);
            let d = m.d4_sq(t, 0.0, r).unwrap().value;
            let (h, a) = (p.hurst(), p.alpha());
            let c = rho_constant(p);
            let lb = 4.0 * p.c1h() * c * c / (12.0 - 2.0 * h - a).powi(2)
                * (1.0 - (-2.0 * t).exp())
                * (r / (r + 3.0 * PI)).powf(h + a / 2.0);
            assert!(d >= lb, "t={t}: {d} < {lb}");
        }
    }

    #[test]
    fn field_correlation_respects_bracket() {
        let m = m();
        let p = *m.params();
        for t in [0.5, 1.0, 4.0] {
            for r in [10.0, 100.0, 1000.0] {
                let rho = m.correlation(Correlation::Field, t, r).unwrap().value;
                let scaled = rho.abs() * r.powf((1.0 - p.hurst()) / 2.0);
                let b = field_correlation_bracket(&p, t, r);
                assert!(scaled.is_finite() && scaled <= b, "t={t} r={r}: {scaled} > {b}");
            }
        }
    }

    #[test]
    fn correlations_at_zero_lag() {
        let m = m();
        for c in [
            Correlation::Field,
            Correlation::Space { h: 0.1 },
            Correlation::Time { tau: 0.01 },
        ] {
            assert_eq!(m.correlation(c, 1.0, 0.0).unwrap().value, 1.0);
            let r = m.correlation(c, 1.0, 2.5).unwrap();
            assert!(r.value.abs() <= 1.0 + r.error_bound);
        }
    }

    #[test]
    fn sandwich_rejects_out_of_region() {
        let m = m();
        let e = m.sandwich_check(Sandwich::D2Lower, &[[1.0, 0.5, 0.0, 2.0]]);
        assert!(matches!(e, Err(Error::RegionViolation(_))));
        let e = m.sandwich_check(Sandwich::D1, &[[1.0, 0.0, 1.0, 0.0]]);
        assert!(matches!(e, Err(Error::RegionViolation(_))));
    }

    #[test]
    fn d1_monotone_in_distance() {
        let m = m();
        let mut prev = 0.0;
        for i in 1..40 {
            let r = 0.1 * i as f64;
            let d = m.d1_sq(pt(1.0, 0.0), pt(1.0, r)).unwrap();
            assert!(d.value >= prev - d.error, "r={r}");
            prev = d.value;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn d1_triangle(t in prop::array::uniform3(0.05f64..3.0), x in prop::array::uniform3(-3.0f64..3.0)) {
            let m = m();
            let (a, b, c) = (pt(t[0], x[0]), pt(t[1], x[1]), pt(t[2], x[2]));
            let ab = m.d1(a, b).unwrap();
            let bc = m.d1(b, c).unwrap();
            let ac = m.d1(a, c).unwrap();
            let slack = 2.0 * (ab.error_bound + bc.error_bound + ac.error_bound);
            prop_assert!(ac.value <= ab.value + bc.value + slack);
        }

        #[test]
        fn d1_symmetric_and_translation_invariant(t in 0.05f64..3.0, s in 0.05f64..3.0, x in -3.0f64..3.0, y in -3.0f64..3.0, c in -5.0f64..5.0) {
            let m = m();
            let ab = m.d1_sq(pt(t, x), pt(s, y)).unwrap();
            let ba = m.d1_sq(pt(s, y), pt(t, x)).unwrap();
            let sh = m.d1_sq(pt(t, x + c), pt(s, y + c)).unwrap();
            prop_assert_eq!(ab.value, ba.value);
            prop_assert!((ab.value - sh.value).abs() <= ab.error + sh.error + 1e-12);
        }
    }
}
