use super::config::{ExperimentConfig, ExperimentKind, ResolutionCheck};
use super::stats::{bootstrap_fit, mean_se};
use super::{ExperimentResult, FitRow, ResultRow};
use crate::bounds::{
    borell_tail, chaining_upper_bound, sudakov_lower_bound, DiameterLaw, DyadicPartitionScheme,
    SudakovMetric,
};
use crate::error::{Error, Result};
use crate::metrics::{Metrics, Sandwich};
use crate::model::ModelParams;
use crate::sampler::{
    FieldSample, SeminormEstimator, SeminormSpec, SpacetimeGrid, SpectralOptions, SpectralSampler,
};
use rayon::prelude::*;

/// Per-replicate values of the running sqrt(2)-law statistic at one L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root2Trajectory {
    pub replicate: u32,
    pub l: f64,
    pub nested: f64,
    pub annulus: f64,
}

/// Separation claims are shaved by this factor so that quadrature rounding
/// between the fit and the check cannot flip them.
const SEPARATION_SLACK: f64 = 1.0 - 1e-6;

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    p: ModelParams,
    m: Metrics,
    meta: Vec<(String, String)>,
}

impl Ctx<'_> {
    fn note(&mut self, k: &str, v: impl ToString) {
        self.meta.push((k.to_string(), v.to_string()));
    }

    fn single_t(&self) -> Result<f64> {
        match self.cfg.t.as_slice() {
            [t] => Ok(*t),
            _ => Err(Error::Config {
                line: 0,
                message: format!("{} takes a single time t", self.cfg.kind),
            }),
        }
    }

    fn opts(&self) -> SpectralOptions {
        SpectralOptions {
            bias_budget: self.cfg.bias_budget,
            ..Default::default()
        }
    }

    /// Periodic grid centred on x = 0 whose period is at least 8 times `extent`.
    fn grid(&self, dx: f64, t0: f64, dt: f64, nt: usize, extent: f64) -> Result<SpacetimeGrid> {
        let need = (8.0 * extent / dx).ceil() as usize;
        let nx = match self.cfg.nx {
            Some(n) if dx == self.cfg.dx => {
                if n < need {
                    return Err(Error::Config {
                        line: 0,
                        message: format!(
                            "nx = {n} gives period {} < 8 x largest lag {extent}",
                            n as f64 * dx
                        ),
                    });
                }
                n
            }
            _ => need.next_power_of_two().max(64),
        };
        SpacetimeGrid::new(t0, dt, nt, -((nx / 2) as f64) * dx, dx, nx)
    }

    fn sampler(&mut self, grid: SpacetimeGrid) -> Result<SpectralSampler> {
        let s = SpectralSampler::new(self.p, grid, self.opts())?;
        if !self.meta.iter().any(|(k, _)| k == "nx") {
            self.note("dx", grid.dx);
            self.note("nx", grid.nx);
            self.note("period", grid.period());
            self.note("nt", grid.nt);
            self.note("dt", grid.dt);
            self.note("lag0_bias", s.lag0_bias());
            self.note("spectral_components", s.component_count());
        }
        Ok(s)
    }

    fn fit(
        &self,
        series: &str,
        regressor: &str,
        stats: &[Vec<f64>],
        cols: &[usize],
        x: &[f64],
        log: bool,
    ) -> FitRow {
        let tr: fn(f64) -> f64 = if log { f64::ln } else { |v| v };
        let b = bootstrap_fit(stats, cols, x, tr, self.cfg.bootstrap, self.cfg.seed);
        FitRow {
            series: series.to_string(),
            regressor: regressor.to_string(),
            slope: b.fit.slope,
            intercept: b.fit.intercept,
            r2: b.fit.r2,
            slope_lo: b.slope_lo,
            slope_hi: b.slope_hi,
            points: x.len(),
        }
    }

    fn finish(self, rows: Vec<ResultRow>, fits: Vec<FitRow>) -> ExperimentResult {
        ExperimentResult {
            kind: self.cfg.kind,
            rows,
            fits,
            meta: self.meta,
            trajectories: Vec::new(),
        }
    }
}

fn replicate_stats<F>(s: &SpectralSampler, n: u32, seed: u64, f: F) -> Vec<Vec<f64>>
where
    F: Fn(&FieldSample) -> Vec<f64> + Sync,
{
    (0..n).into_par_iter().map(|r| f(&s.sample(seed, r))).collect()
}

fn column(stats: &[Vec<f64>], j: usize) -> Vec<f64> {
    stats.iter().map(|r| r[j]).collect()
}

fn summarize(
    stats: &[Vec<f64>],
    cols: &[usize],
    series: &str,
    xs: &[f64],
    regs: &[f64],
) -> Vec<ResultRow> {
    cols.iter()
        .zip(xs.iter().zip(regs))
        .map(|(&c, (&x, &reg))| {
            let (estimate, std_error) = mean_se(&column(stats, c));
            ResultRow {
                series: series.to_string(),
                x,
                regressor: reg,
                estimate,
                std_error,
                lower_bound: f64::NAN,
                upper_bound: f64::NAN,
                replicates: stats.len() as u32,
            }
        })
        .collect()
}

/// Number of grid steps within half-width l.
fn half_index(l: f64, dx: f64) -> usize {
    (l / dx + 1e-9).floor() as usize
}

/// Integer number of grid steps in `v`, or a config error.
fn steps(v: f64, d: f64, what: &str) -> Result<usize> {
    let k = (v / d).round();
    if k < 1.0 || (k * d - v).abs() > 1e-9 * v {
        return Err(Error::Config {
            line: 0,
            message: format!("{what} = {v} is not a positive multiple of the grid step {d}"),
        });
    }
    Ok(k as usize)
}

fn window_max(row: &[f64], c: usize, k: usize) -> f64 {
    row[c - k..=c + k]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Fitted multipliers a, b with a*lower <= est <= b*upper over the sweep,
/// and the spreads max(est/lower)/a and b/min(est/upper).
fn fit_sandwich(est: &[f64], lower: &[f64], upper: &[f64]) -> (f64, f64, f64, f64) {
    let lo: Vec<f64> = est.iter().zip(lower).map(|(e, l)| e / l).collect();
    let up: Vec<f64> = est.iter().zip(upper).map(|(e, u)| e / u).collect();
    let a = lo.iter().copied().fold(f64::INFINITY, f64::min);
    let b = max_of(&up);
    let min_up = up.iter().copied().fold(f64::INFINITY, f64::min);
    (a, b, max_of(&lo) / a, b / min_up)
}

fn apply_sandwich(
    ctx: &mut Ctx,
    rows: &mut [ResultRow],
    lower: &[f64],
    upper: &[f64],
    tag: &str,
) {
    let est: Vec<f64> = rows.iter().map(|r| r.estimate).collect();
    let (a, b, ls, us) = fit_sandwich(&est, lower, upper);
    for (r, (l, u)) in rows.iter_mut().zip(lower.iter().zip(upper)) {
        r.lower_bound = a * l;
        r.upper_bound = b * u;
    }
    ctx.note(&format!("{tag}_lower_multiplier"), a);
    ctx.note(&format!("{tag}_upper_multiplier"), b);
    ctx.note(&format!("{tag}_lower_spread"), ls);
    ctx.note(&format!("{tag}_upper_spread"), us);
}

/// Extreme d1 / d1-tilde ratios at t = 1; the ratio is invariant under
/// (t, x) -> (lambda^alpha t, lambda x), so this covers every horizon.
fn d1_constants(m: &Metrics, r_max: f64) -> Result<(f64, f64)> {
    let mut grid = Vec::new();
    let mut r = 1.0 / 64.0;
    while r <= r_max * (1.0 + 1e-12) {
        grid.push([1.0, 0.0, 1.0, r]);
        r *= 2.0;
    }
    grid.push([1.0, 0.0, 1.0, 1.0]);
    for s in [0.05, 0.25, 0.5, 0.75, 0.9, 0.99] {
        for y in [0.0, 0.1, 1.0, 4.0] {
            grid.push([1.0, 0.0, s, y]);
        }
    }
    let rep = m.sandwich_check(Sandwich::D1, &grid)?;
    Ok((rep.ratio_min, rep.ratio_max))
}

/// Lags (multiples of t^{1/alpha}) used to fit increment lower constants.
fn lower_lags(ts: f64) -> Vec<f64> {
    [1.0, 2.0, 3.0, 5.0, 8.0, 16.0].iter().map(|k| k * ts).collect()
}

fn upper_lags(dx: f64, r_max: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut r = dx;
    while r <= r_max {
        v.push(r);
        r *= 4.0;
    }
    v.push(r_max);
    v
}

/// Sudakov bounds over a sweep of (t, L) with one separation constant per
/// unit scale: the smaller of the lemma constant and the least distance the
/// checks actually evaluate.
fn sudakov_sweep(
    m: &Metrics,
    sweep: &[(f64, f64)],
    metric: SudakovMetric,
    scale: impl Fn(f64) -> f64,
    c_lemma: f64,
) -> Result<(Vec<f64>, f64)> {
    let mut c = c_lemma;
    for &(t, l) in sweep {
        let r = sudakov_lower_bound(m, t, l, metric, f64::MIN_POSITIVE)?;
        c = c.min(r.min_metric / scale(t));
    }
    let c = c * SEPARATION_SLACK;
    let bounds = sweep
        .iter()
        .map(|&(t, l)| Ok(sudakov_lower_bound(m, t, l, metric, c * scale(t))?.bound))
        .collect::<Result<_>>()?;
    Ok((bounds, c))
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let p = ModelParams::new(cfg.alpha, cfg.hurst)?;
    let mut ctx = Ctx {
        cfg,
        p,
        m: Metrics::new(p, cfg.quadrature),
        meta: Vec::new(),
    };
    ctx.note("kind", cfg.kind);
    ctx.note("alpha", cfg.alpha);
    ctx.note("hurst", cfg.hurst);
    ctx.note("seed", cfg.seed);
    ctx.note("replicates", cfg.replicates);
    match cfg.kind {
        ExperimentKind::SupGrowthL => sup_growth_l(ctx),
        ExperimentKind::SupGrowthTL => sup_growth_tl(ctx),
        ExperimentKind::HolderSpace => holder(ctx, Increment::Space),
        ExperimentKind::HolderTime => holder(ctx, Increment::Time),
        ExperimentKind::Root2Law => root2(ctx),
        ExperimentKind::SeminormGrowth => seminorm(ctx),
        ExperimentKind::Concentration => concentration(ctx),
    }
}

fn sup_slice_stats(ctx: &mut Ctx, t: f64, dx: f64) -> Result<Vec<Vec<f64>>> {
    let lmax = max_of(&ctx.cfg.l);
    let grid = ctx.grid(dx, t, 0.0, 1, 2.0 * lmax)?;
    let s = ctx.sampler(grid)?;
    let c = grid.nx / 2;
    let ks: Vec<usize> = ctx.cfg.l.iter().map(|&l| half_index(l, dx)).collect();
    Ok(replicate_stats(&s, ctx.cfg.replicates, ctx.cfg.seed, |f| {
        let row = f.row(0);
        ks.iter().map(|&k| window_max(row, c, k)).collect()
    }))
}

fn sup_growth_l(mut ctx: Ctx) -> Result<ExperimentResult> {
    let t = ctx.single_t()?;
    let cfg = ctx.cfg;
    let p = ctx.p;
    let stats = sup_slice_stats(&mut ctx, t, cfg.dx)?;
    let cols: Vec<usize> = (0..cfg.l.len()).collect();
    let psi: Vec<f64> = cfg.l.iter().map(|&l| p.psi(t, l)).collect();
    let mut rows = summarize(&stats, &cols, "sup", &cfg.l, &psi);
    let fits = vec![ctx.fit("sup", "psi", &stats, &cols, &psi, false)];

    let lmax = max_of(&cfg.l);
    let (lo, hi) = d1_constants(&ctx.m, 2.0 * lmax / p.length_scale(t))?;
    let sweep: Vec<(f64, f64)> = cfg.l.iter().map(|&l| (t, l)).collect();
    let kappa = p.kappa();
    let (sud, lo) = sudakov_sweep(&ctx.m, &sweep, SudakovMetric::D1, |t| t.powf(kappa), lo)?;
    ctx.note("d1_lower_constant", lo);
    ctx.note("d1_upper_constant", hi);
    let mut chain = Vec::new();
    for &l in &cfg.l {
        let scheme = DyadicPartitionScheme::new(t, l)?;
        chain.push(chaining_upper_bound(&p, &scheme, DiameterLaw::D1 { multiplier: hi })?.total);
    }
    apply_sandwich(&mut ctx, &mut rows, &sud, &chain, "sandwich");

    if cfg.resolution != ResolutionCheck::Off {
        let fine = sup_slice_stats(&mut ctx, t, cfg.dx / 2.0)?;
        let mut worst: (f64, f64) = (0.0, f64::NAN);
        for (j, r) in rows.iter().enumerate() {
            let (m2, _) = mean_se(&column(&fine, j));
            let change = (m2 - r.estimate).abs();
            if worst.1.is_nan() || change / r.std_error > worst.0 / worst.1 {
                worst = (change, r.std_error);
            }
        }
        ctx.note("resolution_change", worst.0);
        ctx.note("resolution_std_error", worst.1);
        ctx.note("resolution_change_over_se", worst.0 / worst.1);
        if cfg.resolution == ResolutionCheck::Enforce && worst.0 > worst.1 {
            return Err(Error::ResolutionInsufficient {
                change: worst.0,
                std_error: worst.1,
            });
        }
    }
    Ok(ctx.finish(rows, fits))
}

fn sup_growth_tl(mut ctx: Ctx) -> Result<ExperimentResult> {
    let cfg = ctx.cfg;
    let p = ctx.p;
    // each pair gets its own grid co-scaled with T: dx T^{1/alpha}, dt T
    let dt = cfg.dt.unwrap_or(1.0 / 16.0);
    let nt = steps(1.0, dt, "dt (as a fraction of T)")?;
    let mut stats = vec![Vec::with_capacity(cfg.t.len()); cfg.replicates as usize];
    for (&t, &l) in cfg.t.iter().zip(&cfg.l) {
        let dx = cfg.dx * p.length_scale(t);
        let grid = ctx.grid(dx, dt * t, dt * t, nt, 2.0 * l)?;
        let s = ctx.sampler(grid)?;
        let c = grid.nx / 2;
        let k = half_index(l, dx);
        let col = replicate_stats(&s, cfg.replicates, cfg.seed, |f| {
            vec![(0..nt)
                .map(|i| window_max(f.row(i), c, k))
                .fold(f64::NEG_INFINITY, f64::max)]
        });
        for (r, v) in stats.iter_mut().zip(col) {
            r.push(v[0]);
        }
    }
    let cols: Vec<usize> = (0..cfg.t.len()).collect();
    let reg: Vec<f64> = cfg
        .t
        .iter()
        .zip(&cfg.l)
        .map(|(&t, &l)| t.powf(p.kappa()) * p.psi(t, l))
        .collect();
    let xs: Vec<f64> = (0..cfg.t.len()).map(|i| i as f64).collect();
    let mut rows = summarize(&stats, &cols, "sup_tl", &xs, &reg);
    let fits = vec![ctx.fit("sup_tl", "t^kappa*psi", &stats, &cols, &reg, false)];

    let r_max = cfg
        .t
        .iter()
        .zip(&cfg.l)
        .map(|(&t, &l)| 2.0 * l / p.length_scale(t))
        .fold(1.0, f64::max);
    let (lo, hi) = d1_constants(&ctx.m, r_max)?;
    let sweep: Vec<(f64, f64)> = cfg.t.iter().copied().zip(cfg.l.iter().copied()).collect();
    let kappa = p.kappa();
    let (sud, lo) = sudakov_sweep(&ctx.m, &sweep, SudakovMetric::D1, |t| t.powf(kappa), lo)?;
    ctx.note("d1_lower_constant", lo);
    ctx.note("d1_upper_constant", hi);
    let mut chain = Vec::new();
    for (&t, &l) in cfg.t.iter().zip(&cfg.l) {
        let scheme = DyadicPartitionScheme::new(t, l)?;
        chain.push(chaining_upper_bound(&p, &scheme, DiameterLaw::D1 { multiplier: hi })?.total);
    }
    for (i, (t, l)) in cfg.t.iter().zip(&cfg.l).enumerate() {
        ctx.note(&format!("pair_{i}"), format!("T={t} L={l}"));
    }
    apply_sandwich(&mut ctx, &mut rows, &sud, &chain, "sandwich");
    Ok(ctx.finish(rows, fits))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Increment {
    Space,
    Time,
}

fn holder(mut ctx: Ctx, which: Increment) -> Result<ExperimentResult> {
    let t = ctx.single_t()?;
    let cfg = ctx.cfg;
    let p = ctx.p;
    let (g, a) = (p.roughness(), p.alpha());
    let ts = p.length_scale(t);
    let (name, sizes, fixed) = match which {
        Increment::Space => ("holder_space", &cfg.h, cfg.h_fixed),
        Increment::Time => ("holder_time", &cfg.tau, cfg.tau_fixed),
    };
    if sizes.is_empty() {
        return Err(Error::Config {
            line: 0,
            message: format!("{} needs a nonempty increment list", cfg.kind),
        });
    }
    let (limit, target, theta_top) = match which {
        Increment::Space => (3.0 / 64.0 * ts, g / 2.0, g / 2.0),
        Increment::Time => ((3.0f64 / 32.0).powf(a) * t, g / (2.0 * a), g / a),
    };
    for &v in sizes.iter().chain([fixed].iter()) {
        if !(v > 0.0 && v <= limit * (1.0 + 1e-12)) {
            return Err(Error::ValidityWindowViolated(format!(
                "{name}: increment {v} outside (0, {limit}]"
            )));
        }
    }
    for &l in cfg.l.iter().chain([cfg.l_fixed].iter()) {
        if l < ts * (1.0 - 1e-12) {
            return Err(Error::ValidityWindowViolated(format!(
                "{name}: L = {l} below t^(1/alpha) = {ts}"
            )));
        }
    }
    let thetas = if cfg.theta.is_empty() {
        vec![theta_top / 2.0]
    } else {
        cfg.theta.clone()
    };
    for &th in &thetas {
        if !(0.0..theta_top).contains(&th) {
            return Err(Error::ValidityWindowViolated(format!(
                "{name}: theta = {th} outside [0, {theta_top})"
            )));
        }
    }
    ctx.note("target_power", target);

    let lmax = max_of(&cfg.l).max(cfg.l_fixed);
    let step = match which {
        Increment::Space => cfg.dx,
        Increment::Time => cfg.dt.unwrap_or(sizes.iter().copied().fold(fixed, f64::min)),
    };
    let ksize: Vec<usize> = sizes
        .iter()
        .map(|&v| steps(v, step, "increment"))
        .collect::<Result<_>>()?;
    let kfixed = steps(fixed, step, "increment")?;
    let kmax = ksize.iter().copied().fold(kfixed, usize::max);
    let grid = match which {
        Increment::Space => ctx.grid(cfg.dx, t, 0.0, 1, 2.0 * lmax + kmax as f64 * cfg.dx)?,
        Increment::Time => ctx.grid(cfg.dx, t, step, kmax + 1, 2.0 * lmax)?,
    };
    let s = ctx.sampler(grid)?;
    let c = grid.nx / 2;
    let kl: Vec<usize> = cfg.l.iter().map(|&l| half_index(l, cfg.dx)).collect();
    let kf = half_index(cfg.l_fixed, cfg.dx);
    // coarse grid x_j = j t^{1/alpha} inside [-L_fixed, L_fixed]
    let stride = ((ts / cfg.dx).round() as usize).max(1);
    let coarse: Vec<usize> = (0..=kf / stride)
        .flat_map(|j| [c - j * stride, c + j * stride])
        .collect();
    let incr = |f: &FieldSample, k: usize, j: usize| match which {
        Increment::Space => f.row(0)[j + k] - f.row(0)[j],
        Increment::Time => f.row(k)[j] - f.row(0)[j],
    };
    let nl = cfg.l.len();
    let ns = sizes.len();
    let stats = replicate_stats(&s, cfg.replicates, cfg.seed, |f| {
        let sup = |k: usize, half: usize| {
            (c - half..=c + half)
                .map(|j| incr(f, k, j))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut v = Vec::with_capacity(nl + 2 * ns);
        v.extend(kl.iter().map(|&h| sup(kfixed, h)));
        v.extend(ksize.iter().map(|&k| sup(k, kf)));
        v.extend(ksize.iter().map(|&k| {
            coarse
                .iter()
                .map(|&j| incr(f, k, j))
                .fold(f64::NEG_INFINITY, f64::max)
        }));
        v
    });

    let cols_l: Vec<usize> = (0..nl).collect();
    let cols_s: Vec<usize> = (nl..nl + ns).collect();
    let cols_c: Vec<usize> = (nl + ns..nl + 2 * ns).collect();
    let psi: Vec<f64> = cfg.l.iter().map(|&l| p.psi(t, l)).collect();
    let logs: Vec<f64> = sizes.iter().map(|v| v.ln()).collect();
    let (s_l, s_s, s_c) = (
        format!("{name}_L"),
        format!("{name}_power"),
        format!("{name}_power_coarse"),
    );
    let mut rows_l = summarize(&stats, &cols_l, &s_l, &cfg.l, &psi);
    let mut rows = Vec::new();
    let fits = vec![
        ctx.fit(&s_l, "psi", &stats, &cols_l, &psi, false),
        ctx.fit(&s_s, "ln_increment", &stats, &cols_s, &logs, true),
        ctx.fit(&s_c, "ln_increment", &stats, &cols_c, &logs, true),
    ];

    // bounds on the L sweep
    let m = &ctx.m;
    let r_up = upper_lags(cfg.dx.max(fixed), 2.0 * lmax);
    let (lower_grid, sandwich_lo, sudakov_metric): (Vec<[f64; 4]>, Sandwich, SudakovMetric) =
        match which {
            Increment::Space => (
                lower_lags(ts)
                    .into_iter()
                    .filter(|&r| fixed <= Sandwich::d2_lower_h_max(&p, t, r))
                    .map(|r| [t, fixed, 0.0, r])
                    .collect(),
                Sandwich::D2Lower,
                SudakovMetric::D2 { h: fixed },
            ),
            Increment::Time => (
                lower_lags(ts).into_iter().map(|r| [t, fixed, 0.0, r]).collect(),
                Sandwich::D3Lower,
                SudakovMetric::D3 { tau: fixed },
            ),
        };
    let c_lo = m.sandwich_check(sandwich_lo, &lower_grid)?.ratio_min;
    let theta = thetas[0];
    let upper_grid: Vec<[f64; 4]> = r_up.iter().map(|&r| [t, fixed, 0.0, r]).collect();
    let (sandwich_up, law) = match which {
        Increment::Space => (Sandwich::D2Upper { theta }, DiameterLaw::D2 {
            multiplier: 1.0,
            h: fixed,
            theta,
        }),
        Increment::Time => (Sandwich::D3Upper { theta }, DiameterLaw::D3 {
            multiplier: 1.0,
            tau: fixed,
            theta,
        }),
    };
    let c_hi = m.sandwich_check(sandwich_up, &upper_grid)?.ratio_max;
    let law = match law {
        DiameterLaw::D2 { h, theta, .. } => DiameterLaw::D2 { multiplier: c_hi, h, theta },
        DiameterLaw::D3 { tau, theta, .. } => DiameterLaw::D3 { multiplier: c_hi, tau, theta },
        d => d,
    };
    let sweep: Vec<(f64, f64)> = cfg.l.iter().map(|&l| (t, l)).collect();
    let unit = fixed.powf(target);
    let (sud, c_lo) = sudakov_sweep(m, &sweep, sudakov_metric, |_| unit, c_lo)?;
    let mut chain = Vec::new();
    for &l in &cfg.l {
        let scheme = DyadicPartitionScheme::new(t, l)?;
        chain.push(chaining_upper_bound(&p, &scheme, law)?.total);
    }
    ctx.note("increment_lower_constant", c_lo);
    ctx.note("increment_upper_constant", c_hi);
    ctx.note("theta", theta);
    apply_sandwich(&mut ctx, &mut rows_l, &sud, &chain, "sandwich");
    rows.extend(rows_l);
    rows.extend(summarize(&stats, &cols_s, &s_s, sizes, &logs));
    rows.extend(summarize(&stats, &cols_c, &s_c, sizes, &logs));
    Ok(ctx.finish(rows, fits))
}

/// Running sqrt(2)-law statistics u(x) / (sigma sqrt(log2|x| v 2)) for sorted
/// half-widths `ls`: the max over |x| <= L (nested) and over
/// L_prev < |x| <= L (annulus; the first annulus is the whole first window).
pub fn root2_statistic(values: &[f64], positions: &[f64], sigma: f64, ls: &[f64]) -> Vec<(f64, f64)> {
    let mut bucket = vec![f64::NEG_INFINITY; ls.len()];
    for (&v, &x) in values.iter().zip(positions) {
        let ax = x.abs();
        if let Some(b) = ls.iter().position(|&l| ax <= l * (1.0 + 1e-12)) {
            let r = v / (sigma * ax.log2().max(2.0).sqrt());
            bucket[b] = bucket[b].max(r);
        }
    }
    let mut run = f64::NEG_INFINITY;
    bucket
        .into_iter()
        .map(|a| {
            run = run.max(a);
            (run, if a.is_finite() { a } else { f64::NAN })
        })
        .collect()
}

fn root2(mut ctx: Ctx) -> Result<ExperimentResult> {
    let t = ctx.single_t()?;
    let cfg = ctx.cfg;
    let p = ctx.p;
    let mut ls = cfg.l.clone();
    ls.sort_by(|a, b| a.total_cmp(b));
    ls.dedup();
    let lmax = max_of(&ls);
    let grid = ctx.grid(cfg.dx, t, 0.0, 1, 2.0 * lmax)?;
    let s = ctx.sampler(grid)?;
    let c = grid.nx / 2;
    let k = half_index(lmax, cfg.dx);
    let positions: Vec<f64> = (c - k..=c + k).map(|j| grid.position(j)).collect();
    let sigma = p.variance(t).sqrt();
    let nl = ls.len();
    let stats = replicate_stats(&s, cfg.replicates, cfg.seed, |f| {
        let st = root2_statistic(&f.row(0)[c - k..=c + k], &positions, sigma, &ls);
        st.iter().map(|x| x.0).chain(st.iter().map(|x| x.1)).collect()
    });
    let lg: Vec<f64> = ls.iter().map(|l| l.log2()).collect();
    let cols_n: Vec<usize> = (0..nl).collect();
    let cols_a: Vec<usize> = (nl..2 * nl).collect();
    let mut rows = summarize(&stats, &cols_n, "root2_nested", &ls, &lg);
    rows.extend(summarize(&stats, &cols_a, "root2_annulus", &ls, &lg));
    let fits = vec![
        ctx.fit("root2_nested", "log2_L", &stats, &cols_n, &lg, false),
        ctx.fit("root2_annulus", "log2_L", &stats, &cols_a, &lg, false),
    ];
    let monotone = stats
        .iter()
        .all(|r| r[..nl].windows(2).all(|w| w[1] >= w[0]));
    ctx.note("normalization", "sqrt(log2|x| v 2)");
    ctx.note("nested_monotone", monotone);
    ctx.note("limit_constant_check", "unresolved at desk scale");
    let trajectories = stats
        .iter()
        .enumerate()
        .flat_map(|(r, v)| {
            ls.iter().enumerate().map(move |(j, &l)| Root2Trajectory {
                replicate: r as u32,
                l,
                nested: v[j],
                annulus: v[nl + j],
            })
        })
        .collect();
    let mut res = ctx.finish(rows, fits);
    res.trajectories = trajectories;
    Ok(res)
}

fn seminorm(mut ctx: Ctx) -> Result<ExperimentResult> {
    let t = ctx.single_t()?;
    let cfg = ctx.cfg;
    let est = SeminormEstimator::new(
        &ctx.m,
        SeminormSpec {
            t,
            dx: cfg.dx,
            h_max: cfg.h_max,
        },
    )?;
    let lmax = max_of(&cfg.l);
    let h_eff = est.lags() as f64 * cfg.dx;
    let grid = ctx.grid(cfg.dx, t, 0.0, 1, 2.0 * lmax + 2.0 * h_eff)?;
    let s = ctx.sampler(grid)?;
    let c = grid.nx / 2;
    let kmax = half_index(lmax, cfg.dx);
    let ks: Vec<usize> = cfg.l.iter().map(|&l| half_index(l, cfg.dx)).collect();
    let nl = cfg.l.len();
    let stats: Vec<Vec<f64>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let f = s.sample(cfg.seed, r);
            let row = f.row(0);
            let n2: Vec<f64> = (c - kmax..=c + kmax)
                .map(|j| est.estimate(row, j))
                .collect::<Result<_>>()?;
            let mut v: Vec<f64> = ks.iter().map(|&k| max_of(&n2[kmax - k..=kmax + k])).collect();
            v.push(n2[kmax]);
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let lg: Vec<f64> = cfg.l.iter().map(|l| l.log2()).collect();
    let cols: Vec<usize> = (0..nl).collect();
    let mut rows = summarize(&stats, &cols, "seminorm_sup", &cfg.l, &lg);
    let mut point = summarize(&stats, &[nl], "seminorm_point", &[0.0], &[0.0]);
    point[0].lower_bound = est.expectation();
    point[0].upper_bound = est.expectation();
    let z = (point[0].estimate - est.expectation()) / point[0].std_error;
    rows.extend(point);
    let fits = vec![ctx.fit("seminorm_sup", "log2_L", &stats, &cols, &lg, false)];
    ctx.note("seminorm_expectation", est.expectation());
    ctx.note("seminorm_exact", est.exact_expectation());
    ctx.note("seminorm_discretization_bias", est.discretization_bias());
    ctx.note("seminorm_small_completion", est.small_completion());
    ctx.note("seminorm_large_completion", est.large_completion());
    ctx.note("seminorm_point_z", z);
    Ok(ctx.finish(rows, fits))
}

fn concentration(mut ctx: Ctx) -> Result<ExperimentResult> {
    let t = ctx.single_t()?;
    let cfg = ctx.cfg;
    let l = cfg.l[0];
    let grid = ctx.grid(cfg.dx, t, 0.0, 1, 2.0 * l)?;
    let s = ctx.sampler(grid)?;
    let c = grid.nx / 2;
    let k = half_index(l, cfg.dx);
    let stats = replicate_stats(&s, cfg.replicates, cfg.seed, |f| {
        vec![window_max(f.row(0), c, k)]
    });
    let sup = column(&stats, 0);
    let n = sup.len() as f64;
    let (mean, se) = mean_se(&sup);
    let sd = se * n.sqrt();
    let sigma_sq = ctx.p.variance(t);
    let sigma = sigma_sq.sqrt();
    let mut pass = true;
    let rows: Vec<ResultRow> = cfg
        .lambda
        .iter()
        .map(|&mult| {
            let lambda = mult * sigma;
            let freq = sup.iter().filter(|v| (*v - mean).abs() > lambda).count() as f64 / n;
            let bound = borell_tail(sigma_sq, lambda);
            let pb = bound.min(1.0);
            let std_error = (pb * (1.0 - pb) / n).sqrt();
            pass &= freq <= bound + 3.0 * std_error;
            ResultRow {
                series: "concentration".into(),
                x: mult,
                regressor: lambda,
                estimate: freq,
                std_error,
                lower_bound: f64::NAN,
                upper_bound: bound,
                replicates: cfg.replicates,
            }
        })
        .collect();
    ctx.note("L", l);
    ctx.note("sup_mean", mean);
    ctx.note("sup_sd", sd);
    ctx.note("sigma_sq", sigma_sq);
    ctx.note("borell_pass", pass);
    Ok(ctx.finish(rows, Vec::new()))
}
