//! Power-law Fourier tails: integral of cos(b xi) xi^{-s} over (x, inf).

use super::gk::adaptive;
use std::f64::consts::PI;

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

const ASYMPTOTIC_FROM: f64 = 40.0;

/// Integral of e^{iu} u^{-s} over (y, inf) for y >= ASYMPTOTIC_FROM, s > 0.
/// Returns (re, im, error).
fn exp_tail_asymptotic(s: f64, y: f64) -> (f64, f64, f64) {
    // i e^{iy} y^{-s} sum_k (s)_k (-i/y)^k, remainder <= 2 (s)_{K} y^{-s-K}
    let (sin_y, cos_y) = y.sin_cos();
    let base = y.powf(-s);
    let (mut re, mut im) = (0.0, 0.0);
    let mut coef = 1.0; // (s)_k / y^k
    let mut k = 0usize;
    loop {
        // (-i)^k
        let (pr, pi) = match k % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, -1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, 1.0),
        };
        // i e^{iy} (-i)^k = i (cos + i sin)(pr + i pi)
        let zr = cos_y * pr - sin_y * pi;
        let zi = cos_y * pi + sin_y * pr;
        re += -zi * coef;
        im += zr * coef;
        let next = coef * (s + k as f64) / y;
        k += 1;
        let mag = re.abs().max(im.abs());
        if next < 1e-17 * mag || next >= coef || k > 200 {
            return (re * base, im * base, 2.0 * next * base);
        }
        coef = next;
    }
}

/// C_s(y) = integral of cos(u) u^{-s} over (y, inf), s > 0, y > 0. Returns (value, error).
pub fn cos_power_tail(s: f64, y: f64) -> (f64, f64) {
    assert!(s > 0.0 && y > 0.0);
    if y >= ASYMPTOTIC_FROM {
        let (re, _, err) = exp_tail_asymptotic(s, y);
        return (re, err);
    }
    let (head, herr) = cos_power_segment(s, y, ASYMPTOTIC_FROM);
    let (re, _, err) = exp_tail_asymptotic(s, ASYMPTOTIC_FROM);
    (head + re, herr + err)
}

/// Integral of cos(u) u^{-s} over [y, z].
fn cos_power_segment(s: f64, y: f64, z: f64) -> (f64, f64) {
    let f = |u: f64| u.cos() * u.powf(-s);
    let mut total = CompensatedSum::new();
    let mut err = 0.0;
    let mut a = y;
    while a < z {
        let b = if a < 1.0 { (2.0 * a).min(1.0) } else { a + 0.5 * PI }.min(z);
        let (v, e, _) = adaptive(&f, a, b, 1e-17, 1e-14, 200);
        total.add(v);
        err += e;
        a = b;
    }
    (total.value(), err)
}

/// Integral of cos(b xi) xi^{-s} over (x, inf); s > 1 when b = 0, else s > 0.
/// Returns (value, error).
pub fn power_cos_tail(s: f64, x: f64, b: f64) -> (f64, f64) {
    assert!(x > 0.0);
    let b = b.abs();
    if b == 0.0 {
        assert!(s > 1.0, "non-oscillatory tail needs s > 1");
        return (x.powf(1.0 - s) / (s - 1.0), 0.0);
    }
    let (c, e) = cos_power_tail(s, b * x);
    let scale = b.powf(s - 1.0);
    (scale * c, scale * e)
}
