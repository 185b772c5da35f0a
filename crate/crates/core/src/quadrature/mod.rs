//! Certified quadrature for the kernel family
//!
//! ```text
//! int_0^inf g(xi) xi^{-gamma-1} prod_i (1 - cos a_i xi) prod_j (1 - e^{-c_j t_j xi^alpha})^{m_j}
//!           [e^{-c t xi^alpha}] [cos(lag xi)] d xi
//! ```
//!
//! The range is split into a head `[0, xi0]` handled with a power substitution,
//! a midrange of panels no longer than one period of the fastest oscillation,
//! and a tail beyond `X` that is either bounded (exponential damping) or
//! integrated analytically through the Fourier expansion of the cosine product.

pub(crate) mod gk;
pub mod tail;

use crate::error::{End, Error, Result};
use crate::special::gamma;
use std::f64::consts::PI;
use std::sync::Arc;
pub use tail::{cos_power_tail, power_cos_tail, CompensatedSum};

/// Exponent at which e^{-x} is treated as converged in tail bounds.
const EXP_CUTOFF: f64 = 40.0;

/// Rule for the head/midrange split point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitPolicy {
    /// min(1, 1/max a_i, (c t)^{-1/alpha}) over all factors.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Cap on the number of midrange panels.
    pub max_periods: usize,
    pub split: SplitPolicy,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_periods: 1_000_000,
            split: SplitPolicy::Auto,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_periods >= 16) {
            return Err(Error::InvalidInput(format!(
                "quadrature spec needs rel_tol > 0, abs_tol > 0, max_periods >= 16: {self:?}"
            )));
        }
        if let SplitPolicy::Fixed(x) = self.split {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidInput(format!("split point {x}")));
            }
        }
        Ok(())
    }
}

/// Factor (1 - e^{-coeff time xi^alpha})^power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub coeff: f64,
    pub time: f64,
    pub power: u32,
}

/// Large-xi description of an amplitude: sum_j c_j xi^{-p_j} with
/// |g(xi) - sum| <= remainder_coeff xi^{-remainder_power} for xi >= the requested start.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTail {
    pub terms: Vec<(f64, f64)>,
    pub remainder_coeff: f64,
    pub remainder_power: f64,
}

/// Extra smooth multiplicative factor g(xi).
pub trait Amplitude: Send + Sync + std::fmt::Debug {
    fn eval(&self, xi: f64) -> f64;
    /// g(xi) = O(xi^p) as xi -> 0.
    fn small_power(&self) -> f64;
    /// Upper bound on |g|.
    fn sup(&self) -> f64;
    /// Smallest start at which `tail` is valid.
    fn tail_start(&self) -> f64;
    fn tail(&self, from: f64) -> AmplitudeTail;
}

#[derive(Debug, Clone)]
pub struct KernelSpec {
    /// Power in xi^{-gamma-1}.
    pub gamma: f64,
    /// Power of xi inside the exponentials.
    pub alpha: f64,
    pub cos_freqs: Vec<f64>,
    pub exp_terms: Vec<ExpTerm>,
    /// Signed factor e^{-c t xi^alpha} as (c, t).
    pub decay: Option<(f64, f64)>,
    /// Signed factor cos(lag xi).
    pub lag: Option<f64>,
    pub amplitude: Option<Arc<dyn Amplitude>>,
}

impl KernelSpec {
    pub fn new(gamma: f64, alpha: f64) -> Self {
        Self {
            gamma,
            alpha,
            cos_freqs: Vec::new(),
            exp_terms: Vec::new(),
            decay: None,
            lag: None,
            amplitude: None,
        }
    }

    pub fn cos(mut self, a: f64) -> Self {
        self.cos_freqs.push(a);
        self
    }

    pub fn exp(mut self, coeff: f64, time: f64, power: u32) -> Self {
        self.exp_terms.push(ExpTerm { coeff, time, power });
        self
    }

    pub fn decay(mut self, coeff: f64, time: f64) -> Self {
        self.decay = Some((coeff, time));
        self
    }

    pub fn lag(mut self, lag: f64) -> Self {
        self.lag = Some(lag);
        self
    }

    pub fn amplitude(mut self, g: Arc<dyn Amplitude>) -> Self {
        self.amplitude = Some(g);
        self
    }

    /// Pointwise integrand.
    pub fn eval(&self, xi: f64) -> f64 {
        let k = Normalized::from_spec(self);
        k.eval(xi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_bound: f64,
    pub panels: usize,
}

/// Gamma(1-gamma)/gamma cos(pi gamma/2) |xi|^gamma, the value of
/// int_0^inf (1 - cos xi z) z^{-1-gamma} dz.
pub fn riesz_identity(gamma_exp: f64, xi: f64) -> f64 {
    assert!(gamma_exp > 0.0 && gamma_exp < 1.0, "riesz identity needs 0 < gamma < 1");
    if xi == 0.0 {
        return 0.0;
    }
    gamma(1.0 - gamma_exp) / gamma_exp * (PI * gamma_exp / 2.0).cos() * xi.abs().powf(gamma_exp)
}

/// Spec with zero-effect factors dropped and signs normalized.
struct Normalized<'a> {
    gamma: f64,
    alpha: f64,
    cos: Vec<f64>,
    /// (lambda = coeff * time, power)
    exps: Vec<(f64, u32)>,
    decay: f64,
    lag: f64,
    amp: Option<&'a dyn Amplitude>,
}

impl<'a> Normalized<'a> {
    fn from_spec(k: &'a KernelSpec) -> Self {
        Self {
            gamma: k.gamma,
            alpha: k.alpha,
            cos: k.cos_freqs.iter().map(|a| a.abs()).collect(),
            exps: k
                .exp_terms
                .iter()
                .filter(|e| e.power > 0)
                .map(|e| (e.coeff * e.time, e.power))
                .collect(),
            decay: k.decay.map_or(0.0, |(c, t)| c * t),
            lag: k.lag.map_or(0.0, f64::abs),
            amp: k.amplitude.as_deref(),
        }
    }

    fn vanishes(&self) -> bool {
        self.cos.iter().any(|&a| a == 0.0) || self.exps.iter().any(|&(l, _)| l == 0.0)
    }

    #[inline]
    fn eval(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        let ln = xi.ln();
        let xa = (self.alpha * ln).exp();
        let mut v = (-(self.gamma + 1.0) * ln).exp();
        for &a in &self.cos {
            let s = (0.5 * a * xi).sin();
            v *= 2.0 * s * s;
        }
        for &(l, m) in &self.exps {
            v *= (-(-l * xa).exp_m1()).powi(m as i32);
        }
        if self.decay > 0.0 {
            v *= (-self.decay * xa).exp();
        }
        if self.lag > 0.0 {
            v *= (self.lag * xi).cos();
        }
        if let Some(g) = self.amp {
            v *= g.eval(xi);
        }
        v
    }

    fn small_exponent(&self) -> f64 {
        let m: u32 = self.exps.iter().map(|e| e.1).sum();
        -self.gamma - 1.0
            + 2.0 * self.cos.len() as f64
            + self.alpha * m as f64
            + self.amp.map_or(0.0, |g| g.small_power())
    }

    fn split(&self, policy: SplitPolicy) -> f64 {
        if let SplitPolicy::Fixed(x) = policy {
            return x;
        }
        let mut x0: f64 = 1.0;
        for &a in self.cos.iter().chain(std::iter::once(&self.lag)) {
            if a > 0.0 {
                x0 = x0.min(1.0 / a);
            }
        }
        for &(l, _) in &self.exps {
            x0 = x0.min(l.powf(-1.0 / self.alpha));
        }
        if self.decay > 0.0 {
            x0 = x0.min(self.decay.powf(-1.0 / self.alpha));
        }
        x0
    }

    /// Fourier expansion sum_k p_k cos(b_k xi) of prod(1 - cos a_i xi) cos(lag xi).
    fn trig_expansion(&self) -> Vec<(f64, f64)> {
        let mut terms = vec![(1.0, 0.0)];
        let mult = |terms: &mut Vec<(f64, f64)>, a: f64, one_minus: bool| {
            let mut next = Vec::with_capacity(terms.len() * 3);
            for &(p, b) in terms.iter() {
                if one_minus {
                    next.push((p, b));
                    next.push((-0.5 * p, b + a));
                    next.push((-0.5 * p, (b - a).abs()));
                } else {
                    next.push((0.5 * p, b + a));
                    next.push((0.5 * p, (b - a).abs()));
                }
            }
            *terms = merge_frequencies(next);
        };
        for &a in &self.cos {
            mult(&mut terms, a, true);
        }
        if self.lag > 0.0 {
            mult(&mut terms, self.lag, false);
        }
        terms
    }
}

fn merge_frequencies(mut terms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let scale = terms.iter().fold(0.0f64, |m, t| m.max(t.1));
    for t in terms.iter_mut() {
        if t.1 <= 1e-13 * scale {
            t.1 = 0.0;
        }
    }
    terms.sort_by(|x, y| x.1.total_cmp(&y.1));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(terms.len());
    for (p, b) in terms {
        match out.last_mut() {
            Some(last) if (b - last.1).abs() <= 1e-13 * scale => last.0 += p,
            _ => out.push((p, b)),
        }
    }
    out.retain(|t| t.0 != 0.0);
    out
}

/// Bound on int_X^inf e^{-lambda xi^alpha} xi^{beta} d xi for beta < alpha - 1.
fn exp_tail_bound(lambda: f64, alpha: f64, beta: f64, x: f64) -> f64 {
    let xa = x.powf(alpha);
    // convexity of xi^alpha gives the exponential majorant with rate lambda alpha X^{alpha-1}
    let rate = lambda * alpha * x.powf(alpha - 1.0) - beta.max(0.0) / x;
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    (-lambda * xa).exp() * x.powf(beta) / rate
}

/// Evaluate the kernel integral with a certified error bound.
pub fn integrate(k: &KernelSpec, q: &QuadratureSpec) -> Result<QuadResult> {
    q.validate()?;
    let checks = [k.gamma, k.alpha];
    if checks.iter().any(|v| !v.is_finite()) || k.alpha <= 0.0 {
        return Err(Error::InvalidInput(format!("kernel exponents {checks:?}")));
    }
    let n = Normalized::from_spec(k);
    if n.cos.iter().chain(&[n.decay, n.lag]).any(|v| !v.is_finite() || *v < 0.0)
        || n.exps.iter().any(|e| !(e.0.is_finite() && e.0 >= 0.0))
    {
        return Err(Error::InvalidInput("kernel factors must be finite, nonnegative".into()));
    }
    if n.vanishes() {
        return Ok(QuadResult {
            value: 0.0,
            error_bound: 0.0,
            panels: 0,
        });
    }
    let beta = n.small_exponent();
    if beta <= -1.0 {
        return Err(Error::NotIntegrable {
            end: End::Zero,
            exponent: beta,
        });
    }
    let trig = n.trig_expansion();
    let amp_tail_probe = n.amp.map(|g| g.tail(g.tail_start()));
    if n.decay == 0.0 {
        let amp_decay = amp_tail_probe.as_ref().map_or(0.0, |t| {
            t.terms
                .iter()
                .filter(|c| c.0 != 0.0)
                .map(|c| c.1)
                .fold(f64::INFINITY, f64::min)
                .min(t.remainder_power)
        });
        let has_const = trig.iter().any(|t| t.1 == 0.0);
        let s = k.gamma + 1.0 + amp_decay;
        let need = if has_const { 1.0 } else { 0.0 };
        if s <= need {
            return Err(Error::NotIntegrable {
                end: End::Infinity,
                exponent: -s,
            });
        }
    }

    let xi0 = n.split(q.split);
    let trig_bound = 2f64.powi(n.cos.len() as i32);
    let gsup = n.amp.map_or(1.0, |g| g.sup());
    let fastest = n.cos.iter().sum::<f64>() + n.lag;

    // Start of the analytic tail.
    let mut x_end = xi0;
    if n.decay > 0.0 {
        x_end = x_end.max((EXP_CUTOFF / n.decay).powf(1.0 / n.alpha));
    } else {
        for &(l, _) in &n.exps {
            x_end = x_end.max((EXP_CUTOFF / l).powf(1.0 / n.alpha));
        }
        if let Some(g) = n.amp {
            x_end = x_end.max(g.tail_start());
        }
    }

    let mut body = Body::new(&n, xi0, fastest);
    let mut attempt = 0;
    loop {
        let tail = tail_part(&n, &trig, x_end, trig_bound, gsup)?;
        let panels = body.extend_to(x_end, q)?;
        let mut value = body.value() + tail.0;
        let mut err = body.error() + tail.1;
        let target = q.abs_tol.max(q.rel_tol * value.abs());
        if err > target && tail.1 < target {
            body.refine(0.9 * (target - tail.1));
            value = body.value() + tail.0;
            err = body.error() + tail.1;
        }
        let target = q.abs_tol.max(q.rel_tol * value.abs());
        if err <= target {
            return Ok(QuadResult {
                value,
                error_bound: err,
                panels,
            });
        }
        // the tail bound dominates: push X further out
        attempt += 1;
        if tail.1 > 0.5 * target && attempt < 60 {
            x_end *= 2.0;
            continue;
        }
        return Err(Error::ToleranceNotMet {
            error_bound: err,
            panels,
        });
    }
}

/// Tail contribution beyond X: (value, error bound).
fn tail_part(
    n: &Normalized<'_>,
    trig: &[(f64, f64)],
    x: f64,
    trig_bound: f64,
    gsup: f64,
) -> Result<(f64, f64)> {
    let base = -n.gamma - 1.0;
    if n.decay > 0.0 {
        let b = trig_bound * gsup * exp_tail_bound(n.decay, n.alpha, base, x);
        return Ok((0.0, b));
    }
    let mut err = 0.0;
    // (1 - e^{-l xi^a})^m differs from 1 by at most m e^{-l xi^a}
    for &(l, m) in &n.exps {
        err += trig_bound * gsup * m as f64 * exp_tail_bound(l, n.alpha, base, x);
    }
    let amp_terms = match n.amp {
        Some(g) => {
            let t = g.tail(x);
            let s = n.gamma + t.remainder_power;
            err += trig_bound * t.remainder_coeff * x.powf(-s) / s;
            t.terms
        }
        None => vec![(1.0, 0.0)],
    };
    let mut value = CompensatedSum::new();
    for &(p, b) in trig {
        for &(c, pw) in &amp_terms {
            if c == 0.0 {
                continue;
            }
            let s = n.gamma + 1.0 + pw;
            let (v, e) = power_cos_tail(s, x, b);
            value.add(p * c * v);
            err += (p * c).abs() * e;
        }
    }
    Ok((value.value(), err))
}

/// Head plus midrange panels, extendable to a larger X.
struct Body<'a, 'b> {
    n: &'b Normalized<'a>,
    xi0: f64,
    fastest: f64,
    panels: Vec<(f64, f64, f64, f64)>,
    end: f64,
}

impl<'a, 'b> Body<'a, 'b> {
    fn new(n: &'b Normalized<'a>, xi0: f64, fastest: f64) -> Self {
        Self {
            n,
            xi0,
            fastest,
            panels: Vec::new(),
            end: 0.0,
        }
    }

    fn head(&self, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
        let beta = self.n.small_exponent();
        let m = if beta + 1.0 < 1.0 { 1.0 / (beta + 1.0) } else { 1.0 };
        let xi0 = self.xi0;
        let f = |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            let xi = xi0 * v.powf(m);
            self.n.eval(xi) * m * xi0 * v.powf(m - 1.0)
        };
        let (val, err, _) = gk::adaptive(&f, 0.0, 1.0, abs_tol, rel_tol, 400);
        (val, err)
    }

    fn panel(&self, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
        let f = |xi: f64| self.n.eval(xi);
        let (val, err, _) = gk::adaptive(&f, a, b, abs_tol, rel_tol, 200);
        (val, err)
    }

    fn boundaries(&self, from: f64, to: f64) -> Vec<f64> {
        let period = if self.fastest > 0.0 {
            2.0 * PI / self.fastest
        } else {
            f64::INFINITY
        };
        let mut out = vec![from];
        let mut cur = from;
        while cur < to {
            let next = (2.0 * cur).min(cur + period).min(to);
            out.push(next);
            cur = next;
        }
        out
    }

    fn extend_to(&mut self, x: f64, q: &QuadratureSpec) -> Result<usize> {
        let rel = 0.1 * q.rel_tol;
        if self.panels.is_empty() {
            let (v, e) = self.head(0.1 * q.abs_tol, rel);
            self.panels.push((0.0, self.xi0, v, e));
            self.end = self.xi0;
        }
        if x > self.end {
            let estimate = if self.fastest > 0.0 {
                (x - self.end) * self.fastest / (2.0 * PI)
            } else {
                0.0
            };
            if estimate + self.panels.len() as f64 > q.max_periods as f64 {
                return Err(Error::ToleranceNotMet {
                    error_bound: f64::INFINITY,
                    panels: q.max_periods,
                });
            }
            let b = self.boundaries(self.end, x);
            let abs = 0.1 * q.abs_tol / b.len() as f64;
            for w in b.windows(2) {
                let (v, e) = self.panel(w[0], w[1], abs, rel);
                self.panels.push((w[0], w[1], v, e));
            }
            self.end = x;
        }
        Ok(self.panels.len())
    }

    /// Re-integrate every panel to a shared absolute budget.
    fn refine(&mut self, budget: f64) {
        let per = budget / self.panels.len() as f64;
        let rel = 1e-15;
        for i in 0..self.panels.len() {
            let (a, b, _, e) = self.panels[i];
            if e <= per {
                continue;
            }
            let (v, e) = if i == 0 {
                self.head(per, rel)
            } else {
                self.panel(a, b, per, rel)
            };
            self.panels[i] = (a, b, v, e);
        }
    }

    fn value(&self) -> f64 {
        let mut s = CompensatedSum::new();
        for p in &self.panels {
            s.add(p.2);
        }
        s.value()
    }

    fn error(&self) -> f64 {
        self.panels.iter().map(|p| p.3).sum()
    }
}
