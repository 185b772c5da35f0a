use crate::sampler::stream;
use rand::Rng;

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ols {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Ols {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ols {
        slope,
        intercept,
        r2,
    }
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// OLS fit with a 95% bootstrap percentile interval for the slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapFit {
    pub fit: Ols,
    pub slope_lo: f64,
    pub slope_hi: f64,
    pub resamples: usize,
}

/// OLS of the column means of `stats` (replicate-major, one column per sweep
/// entry) against `x`, with a replicate-level bootstrap of the slope.
/// `transform` maps a column mean to the regressand (identity or ln).
pub fn bootstrap_fit(
    stats: &[Vec<f64>],
    columns: &[usize],
    x: &[f64],
    transform: fn(f64) -> f64,
    resamples: usize,
    seed: u64,
) -> BootstrapFit {
    let n = stats.len();
    let means = |idx: &mut dyn Iterator<Item = usize>| {
        let mut acc = vec![0.0; columns.len()];
        let mut count = 0usize;
        for r in idx {
            for (a, &c) in acc.iter_mut().zip(columns) {
                *a += stats[r][c];
            }
            count += 1;
        }
        acc.iter().map(|a| transform(a / count as f64)).collect::<Vec<_>>()
    };
    let fit = ols(x, &means(&mut (0..n)));
    // stream index far from the replicate streams
    let mut rng = stream(seed, u64::MAX - 1);
    let mut slopes: Vec<f64> = (0..resamples)
        .map(|_| {
            let pick: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            ols(x, &means(&mut pick.into_iter())).slope
        })
        .collect();
    slopes.sort_by(|a, b| a.total_cmp(b));
    BootstrapFit {
        fit,
        slope_lo: quantile(&slopes, 0.025),
        slope_hi: quantile(&slopes, 0.975),
        resamples,
    }
}
