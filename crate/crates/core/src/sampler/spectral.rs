//! Spectral sampler on a periodic grid.
//!
//! The field restricted to the grid x_j = x0 + j dx with period P = nx dx is
//! represented through the lattice frequencies dxi Z, dxi = 2 pi / P. Every
//! lattice frequency folds onto one of the grid modes m in [0, nx/2]; each
//! folded frequency nu carries an independent Ornstein-Uhlenbeck amplitude
//! with stationary variance c1H dxi nu^{-gamma-1} and rate nu^alpha, which is
//! advanced exactly between grid times. Frequencies whose memory
//! e^{-tau nu^alpha} is negligible over the shortest time step are pooled
//! into one memoryless Gaussian per mode, with the pooled variance summed by
//! a Hurwitz zeta function.
//!
//! The resulting process has exactly the periodized covariance
//! sum_k C(r + kP) at grid points (up to the pooled-memory bound), so the
//! discretization bias is C_per - C, which [`SpectralSampler::bias`] reports.

use super::{stream, FieldSample, Layout, Method, SpacetimeGrid};
use crate::error::{Error, Result};
use crate::metrics::{Metrics, SpacetimePoint};
use crate::model::ModelParams;
use crate::special::hurwitz_zeta;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Highest frequency represented; defaults to pi/dx with every higher
    /// frequency folded onto the grid. A lower cutoff discards the rest.
    pub cutoff: Option<f64>,
    /// Allowed |C_per(0) - C(0)| / C(0) at the last time slice.
    pub bias_budget: f64,
    /// Frequencies with tau_min nu^alpha above this are pooled as memoryless.
    pub memory_cutoff: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            cutoff: None,
            bias_budget: 0.02,
            memory_cutoff: 36.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Component {
    nu: f64,
    /// e^{-dt nu^alpha}
    decay: f64,
    sd_init: f64,
    sd_innov: f64,
}

#[derive(Debug, Clone)]
struct Mode {
    /// lattice index m in [0, nx/2]
    m: usize,
    has_sin: bool,
    first: usize,
    count: usize,
    /// stationary pooled variance per amplitude
    pooled: f64,
}

/// One entry of the discretization-bias report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasEntry {
    pub i: usize,
    pub k: usize,
    pub lag: usize,
    pub model: f64,
    pub exact: f64,
    pub bias: f64,
    /// Bound on the neglected memory of pooled frequencies.
    pub pooled_bound: f64,
}

pub struct SpectralSampler {
    params: ModelParams,
    grid: SpacetimeGrid,
    modes: Vec<Mode>,
    comps: Vec<Component>,
    fft: Arc<dyn Fft<f64>>,
    dxi: f64,
    memory_cutoff: f64,
    lag0_bias: f64,
}

impl std::fmt::Debug for SpectralSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralSampler")
            .field("grid", &self.grid)
            .field("modes", &self.modes.len())
            .field("components", &self.comps.len())
            .field("lag0_bias", &self.lag0_bias)
            .finish()
    }
}

impl SpectralSampler {
    pub fn new(params: ModelParams, grid: SpacetimeGrid, opts: SpectralOptions) -> Result<Self> {
        grid.validate()?;
        if grid.nx < 2 {
            return Err(Error::InvalidInput("spectral grid needs nx >= 2".into()));
        }
        let nyq = grid.nyquist();
        if let Some(c) = opts.cutoff {
            if c > nyq * (1.0 + 1e-12) {
                return Err(Error::NyquistViolation {
                    cutoff: c,
                    limit: nyq,
                });
            }
        }
        let n = grid.nx;
        let dxi = grid.frequency_step();
        let two_xi = 2.0 * nyq;
        let alpha = params.alpha();
        let s = params.roughness() + 1.0;
        let c1h = params.c1h();
        let mut tau_min = f64::INFINITY;
        if grid.t0 > 0.0 {
            tau_min = grid.t0;
        }
        if grid.nt > 1 {
            tau_min = tau_min.min(grid.dt);
        }
        let nu_cut = if tau_min.is_finite() {
            (opts.memory_cutoff / tau_min).powf(1.0 / alpha)
        } else {
            0.0
        };
        let mut modes = Vec::new();
        let mut comps = Vec::new();
        for m in 0..=n / 2 {
            let nyquist_mode = n % 2 == 0 && m == n / 2;
            let has_sin = m != 0 && !nyquist_mode;
            let phases: Vec<f64> = if m == 0 {
                vec![1.0]
            } else if nyquist_mode {
                vec![0.5]
            } else {
                let f = m as f64 / n as f64;
                vec![f, 1.0 - f]
            };
            let first = comps.len();
            let mut pooled = 0.0;
            if let Some(c) = opts.cutoff {
                // truncated spectrum: primary frequency only, no folding
                let nu = m as f64 * dxi;
                if m > 0 && nu <= c {
                    comps.push(component(&params, grid, dxi, nu));
                }
                modes.push(Mode {
                    m,
                    has_sin,
                    first,
                    count: comps.len() - first,
                    pooled,
                });
                continue;
            }
            for phi in phases {
                let mut k = 0.0;
                loop {
                    let nu = two_xi * (k + phi);
                    if nu > nu_cut {
                        break;
                    }
                    comps.push(component(&params, grid, dxi, nu));
                    k += 1.0;
                }
                if tau_min.is_finite() {
                    pooled += c1h * dxi * two_xi.powf(-s) * hurwitz_zeta(s, k + phi);
                }
            }
            modes.push(Mode {
                m,
                has_sin,
                first,
                count: comps.len() - first,
                pooled,
            });
        }
        let fft = FftPlanner::new().plan_fft_inverse(n);
        let mut sampler = Self {
            params,
            grid,
            modes,
            comps,
            fft,
            dxi,
            memory_cutoff: opts.memory_cutoff,
            lag0_bias: 0.0,
        };
        let last = grid.nt - 1;
        let t_last = grid.time(last);
        if t_last > 0.0 {
            let model = sampler.model_covariance(last, last, 0);
            let exact = params.variance(t_last);
            sampler.lag0_bias = (model - exact) / exact;
            if sampler.lag0_bias.abs() > opts.bias_budget {
                return Err(Error::TruncationBudgetExceeded {
                    bias: sampler.lag0_bias,
                    budget: opts.bias_budget,
                });
            }
        }
        Ok(sampler)
    }

    pub fn grid(&self) -> &SpacetimeGrid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Relative variance bias (C_per(0) - C(0))/C(0) at the last slice.
    pub fn lag0_bias(&self) -> f64 {
        self.lag0_bias
    }

    pub fn component_count(&self) -> usize {
        self.comps.len()
    }

    fn pooled_variance(&self, mode: &Mode, t: f64) -> f64 {
        if t > 0.0 {
            mode.pooled
        } else {
            0.0
        }
    }

    fn mode_weight(&self, mode: &Mode, i: usize, k: usize) -> f64 {
        let (ti, tk) = (self.grid.time(i), self.grid.time(k));
        let s = ti.min(tk);
        let gap = (ti - tk).abs();
        let alpha = self.params.alpha();
        let mut w = 0.0;
        for c in &self.comps[mode.first..mode.first + mode.count] {
            let na = c.nu.powf(alpha);
            w += self.dxi * self.params.spectral_density(s, c.nu) * (-gap * na).exp();
        }
        if i == k {
            w += self.pooled_variance(mode, ti);
        }
        w
    }

    fn character(&self, m: usize, lag: usize) -> f64 {
        let n = self.grid.nx;
        if m == 0 {
            1.0
        } else if n % 2 == 0 && m == n / 2 {
            if lag % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        } else {
            (2.0 * PI * (m * lag % n) as f64 / n as f64).cos()
        }
    }

    /// Covariance of the sampled process between slice i at x_j and slice k at x_{j+lag}.
    pub fn model_covariance(&self, i: usize, k: usize, lag: usize) -> f64 {
        self.modes
            .iter()
            .map(|md| self.mode_weight(md, i, k) * self.character(md.m, lag))
            .sum()
    }

    /// Model minus exact covariance at the requested slice pair and lags.
    pub fn bias(&self, m: &Metrics, i: usize, k: usize, lags: &[usize]) -> Result<Vec<BiasEntry>> {
        let pooled: f64 = if i != k {
            let gap = (self.grid.time(i) - self.grid.time(k)).abs();
            let tau_min = self.grid.dt.min(if self.grid.t0 > 0.0 { self.grid.t0 } else { f64::INFINITY });
            let decay = (-self.memory_cutoff * gap / tau_min).exp();
            self.modes.iter().map(|md| md.pooled).sum::<f64>() * decay
        } else {
            0.0
        };
        lags.iter()
            .map(|&lag| {
                let model = self.model_covariance(i, k, lag);
                let a = SpacetimePoint {
                    t: self.grid.time(i),
                    x: 0.0,
                };
                let b = SpacetimePoint {
                    t: self.grid.time(k),
                    x: lag as f64 * self.grid.dx,
                };
                let exact = m.covariance(a, b)?.value;
                Ok(BiasEntry {
                    i,
                    k,
                    lag,
                    model,
                    exact,
                    bias: model - exact,
                    pooled_bound: pooled,
                })
            })
            .collect()
    }

    pub fn sample(&self, seed: u64, replicate: u32) -> FieldSample {
        let g = &self.grid;
        let n = g.nx;
        let mut rng = stream(seed, replicate as u64);
        let mut z = || rng.sample::<f64, _>(StandardNormal);
        let mut state_a = vec![0.0; self.comps.len()];
        let mut state_b = vec![0.0; self.comps.len()];
        let mut values = Vec::with_capacity(g.len());
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for slice in 0..g.nt {
            let t = g.time(slice);
            for md in &self.modes {
                let (mut a_sum, mut b_sum) = (0.0, 0.0);
                for ci in md.first..md.first + md.count {
                    let c = &self.comps[ci];
                    let (a, b) = (&mut state_a[ci], &mut state_b[ci]);
                    if slice == 0 {
                        *a = c.sd_init * z();
                        if md.has_sin {
                            *b = c.sd_init * z();
                        }
                    } else {
                        *a = c.decay * *a + c.sd_innov * z();
                        if md.has_sin {
                            *b = c.decay * *b + c.sd_innov * z();
                        }
                    }
                    a_sum += *a;
                    b_sum += *b;
                }
                let pooled = self.pooled_variance(md, t);
                if pooled > 0.0 {
                    let sd = pooled.sqrt();
                    a_sum += sd * z();
                    if md.has_sin {
                        b_sum += sd * z();
                    }
                }
                if md.has_sin {
                    buf[md.m] = Complex64::new(0.5 * a_sum, -0.5 * b_sum);
                    buf[n - md.m] = Complex64::new(0.5 * a_sum, 0.5 * b_sum);
                } else {
                    buf[md.m] = Complex64::new(a_sum, 0.0);
                }
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            values.extend(buf.iter().map(|c| c.re));
        }
        FieldSample {
            values,
            layout: Layout::Grid(*g),
            seed,
            replicate,
            method: Method::Spectral,
        }
    }
}

fn component(p: &ModelParams, g: SpacetimeGrid, dxi: f64, nu: f64) -> Component {
    let na = nu.powf(p.alpha());
    let stationary = p.c1h() * dxi * nu.powf(-p.roughness() - 1.0);
    let innov = if g.nt > 1 {
        stationary * -(-2.0 * g.dt * na).exp_m1()
    } else {
        0.0
    };
    Component {
        nu,
        decay: if g.nt > 1 { (-g.dt * na).exp() } else { 0.0 },
        sd_init: (dxi * p.spectral_density(g.t0, nu)).sqrt(),
        sd_innov: innov.sqrt(),
    }
}
