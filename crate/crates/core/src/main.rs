use clap::{Args, Parser, Subcommand, ValueEnum};
use sfhe_core::bounds::{
    chaining_upper_bound, sudakov_lower_bound, DiameterLaw, DyadicPartitionScheme, SudakovMetric,
};
use sfhe_core::experiments::{self, stats::ols, ExperimentConfig};
use sfhe_core::metrics::{Correlation, MetricKind, MetricReport, Metrics, SpacetimePoint};
use sfhe_core::quadrature::QuadratureSpec;
use sfhe_core::sampler::{
    io, CholeskySampler, Method, PointSet, SpacetimeGrid, SpectralOptions, SpectralSampler,
};
use sfhe_core::{Error, ModelParams, Result};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sfhe", version, about = "Stochastic fractional heat equation laboratory")]
struct Cli {
    /// Master seed; overrides the seed in an experiment config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Binary,
}

#[derive(Args, Clone, Copy)]
struct Model {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    hurst: f64,
}

impl Model {
    fn params(self) -> Result<ModelParams> {
        ModelParams::new(self.alpha, self.hurst)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form constants and the variance at time t.
    Moments {
        #[command(flatten)]
        model: Model,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
    /// One metric or correlation value with its error bound.
    Metrics {
        #[command(flatten)]
        model: Model,
        /// d1, d1tilde, d2, d3, d4, rho1, rho2, rho3
        #[arg(long)]
        kind: MetricKind,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        /// Second time (d1, d1tilde).
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        /// Spatial increment (d2, rho2).
        #[arg(long)]
        h: Option<f64>,
        /// Time increment (d3, rho3).
        #[arg(long)]
        tau: Option<f64>,
        /// Correlation lag (rho*).
        #[arg(long)]
        lag: Option<f64>,
        #[arg(long)]
        rel_tol: Option<f64>,
    },
    /// Draw field samples on a space-time grid.
    Sample {
        #[command(flatten)]
        model: Model,
        #[arg(long, value_enum, default_value_t = SampleMethod::Spectral)]
        method: SampleMethod,
        #[arg(long)]
        t0: f64,
        #[arg(long, default_value_t = 0.0)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        nt: usize,
        #[arg(long)]
        dx: f64,
        #[arg(long)]
        nx: usize,
        /// Left edge (default: centred on x = 0).
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long, default_value_t = 1)]
        replicates: u32,
    },
    /// Chaining upper bound or Sudakov lower bound.
    Bounds {
        #[command(flatten)]
        model: Model,
        #[arg(long, value_enum)]
        kind: BoundKind,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        l: f64,
        #[arg(long, value_enum, default_value_t = Law::D1)]
        law: Law,
        #[arg(long, default_value_t = 1.0)]
        multiplier: f64,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        /// Claimed separation for the Sudakov bound.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Run or summarize Monte Carlo experiments.
    Experiment {
        #[command(subcommand)]
        action: ExperimentCmd,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleMethod {
    Spectral,
    Cholesky,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundKind {
    Chaining,
    Sudakov,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Law {
    D1,
    D2,
    D3,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Refit a results file and emit plot data.
    Report { results: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    match &cli.cmd {
        Cmd::Moments { model, t } => moments(cli, *model, *t),
        Cmd::Metrics { .. } => metrics(cli),
        Cmd::Sample { .. } => sample(cli),
        Cmd::Bounds { .. } => bounds(cli),
        Cmd::Experiment { action } => match action {
            ExperimentCmd::Run { config } => experiment_run(cli, config),
            ExperimentCmd::Report { results } => experiment_report(cli, results),
        },
    }
}

fn output(cli: &Cli) -> Result<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn csv_only(cli: &Cli, what: &str) -> Result<()> {
    if cli.format == Format::Binary {
        return Err(Error::InvalidInput(format!("{what} has no binary format")));
    }
    Ok(())
}

fn moments(cli: &Cli, model: Model, t: f64) -> Result<()> {
    csv_only(cli, "moments")?;
    let p = model.params()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("t must be positive, got {t}")));
    }
    let c = p.constants();
    let mut w = csv::Writer::from_writer(output(cli)?);
    w.write_record(["quantity", "value"])?;
    for (k, v) in [
        ("alpha", p.alpha()),
        ("hurst", p.hurst()),
        ("c1H", c.c1h),
        ("c21", c.c21),
        ("kappa", c.kappa),
        ("space_exponent", c.space_exp),
        ("roughness", c.roughness),
        ("t", t),
        ("variance", p.variance(t)),
    ] {
        w.write_record([k.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidInput(format!("--{name} is required for this metric")))
}

fn metrics(cli: &Cli) -> Result<()> {
    csv_only(cli, "metrics")?;
    let Cmd::Metrics {
        model,
        kind,
        t,
        x,
        s,
        y,
        h,
        tau,
        lag,
        rel_tol,
    } = &cli.cmd
    else {
        unreachable!()
    };
    let mut quad = QuadratureSpec::default();
    if let Some(r) = rel_tol {
        quad = quad.with_rel_tol(*r);
    }
    let m = Metrics::new(model.params()?, quad);
    let a = SpacetimePoint::new(*t, *x)?;
    let report: MetricReport = match kind {
        MetricKind::D1 => m.d1(a, SpacetimePoint::new(s.unwrap_or(*t), *y)?)?,
        MetricKind::D1Tilde => {
            let b = SpacetimePoint::new(s.unwrap_or(*t), *y)?;
            MetricReport {
                kind: MetricKind::D1Tilde,
                value: m.d1_tilde(a, b),
                error_bound: 0.0,
                inputs: vec![("t", *t), ("x", *x), ("s", b.t), ("y", *y)],
            }
        }
        MetricKind::D2 => m.d2(*t, need(*h, "h")?, *x, *y)?,
        MetricKind::D3 => m.d3(*t, need(*tau, "tau")?, *x, *y)?,
        MetricKind::D4 => m.d4(*t, *x, *y)?,
        MetricKind::Rho1 => m.correlation(Correlation::Field, *t, need(*lag, "lag")?)?,
        MetricKind::Rho2 => m.correlation(
            Correlation::Space { h: need(*h, "h")? },
            *t,
            need(*lag, "lag")?,
        )?,
        MetricKind::Rho3 => m.correlation(
            Correlation::Time {
                tau: need(*tau, "tau")?,
            },
            *t,
            need(*lag, "lag")?,
        )?,
    };
    let inputs = report
        .inputs
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";");
    let mut w = csv::Writer::from_writer(output(cli)?);
    w.write_record(["kind", "inputs", "value", "errorBound"])?;
    w.write_record([
        report.kind.to_string(),
        inputs,
        report.value.to_string(),
        report.error_bound.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

fn sample(cli: &Cli) -> Result<()> {
    let Cmd::Sample {
        model,
        method,
        t0,
        dt,
        nt,
        dx,
        nx,
        x0,
        replicates,
    } = &cli.cmd
    else {
        unreachable!()
    };
    let p = model.params()?;
    let x0 = x0.unwrap_or(-((*nx / 2) as f64) * dx);
    let grid = SpacetimeGrid::new(*t0, *dt, *nt, x0, *dx, *nx)?;
    let seed = cli.seed.unwrap_or(0);
    let draw: Box<dyn Fn(u32) -> sfhe_core::sampler::FieldSample> = match method {
        SampleMethod::Spectral => {
            let s = SpectralSampler::new(p, grid, SpectralOptions::default())?;
            Box::new(move |r| s.sample(seed, r))
        }
        SampleMethod::Cholesky => {
            let m = Metrics::new(p, QuadratureSpec::default());
            let s = CholeskySampler::new(&m, PointSet::from_grid(&grid)?)?;
            Box::new(move |r| {
                let mut f = s.sample(seed, r);
                f.layout = sfhe_core::sampler::Layout::Grid(grid);
                f.method = Method::Cholesky;
                f
            })
        }
    };
    let mut out = output(cli)?;
    match cli.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            io::write_csv_header(&mut w)?;
            for r in 0..*replicates {
                io::write_csv_rows(&mut w, &draw(r))?;
            }
            w.flush()?;
        }
        Format::Binary => {
            for r in 0..*replicates {
                io::write_binary(&mut out, &draw(r))?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

fn bounds(cli: &Cli) -> Result<()> {
    csv_only(cli, "bounds")?;
    let Cmd::Bounds {
        model,
        kind,
        t,
        l,
        law,
        multiplier,
        h,
        tau,
        theta,
        delta,
    } = &cli.cmd
    else {
        unreachable!()
    };
    let p = model.params()?;
    let out = output(cli)?;
    match kind {
        BoundKind::Chaining => {
            let law = match law {
                Law::D1 => DiameterLaw::D1 {
                    multiplier: *multiplier,
                },
                Law::D2 => DiameterLaw::D2 {
                    multiplier: *multiplier,
                    h: need(*h, "h")?,
                    theta: theta.unwrap_or(p.roughness() / 4.0),
                },
                Law::D3 => DiameterLaw::D3 {
                    multiplier: *multiplier,
                    tau: need(*tau, "tau")?,
                    theta: theta.unwrap_or(p.roughness() / (2.0 * p.alpha())),
                },
            };
            let scheme = DyadicPartitionScheme::new(*t, *l)?;
            chaining_upper_bound(&p, &scheme, law)?.write_csv(out)
        }
        BoundKind::Sudakov => {
            let metric = match law {
                Law::D1 => SudakovMetric::D1,
                Law::D2 => SudakovMetric::D2 { h: need(*h, "h")? },
                Law::D3 => SudakovMetric::D3 {
                    tau: need(*tau, "tau")?,
                },
            };
            let m = Metrics::new(p, QuadratureSpec::default());
            sudakov_lower_bound(&m, *t, *l, metric, need(*delta, "delta")?)?.write_csv(out)
        }
    }
}

fn experiment_run(cli: &Cli, config: &Path) -> Result<()> {
    csv_only(cli, "experiment run")?;
    let text = std::fs::read_to_string(config)
        .map_err(|e| Error::Config {
            line: 0,
            message: format!("{}: {e}", config.display()),
        })?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output = Some(o.clone());
    }
    let res = experiments::run(&cfg)?;
    match &cfg.output {
        Some(path) => {
            for f in res.save(path)? {
                eprintln!("wrote {}", f.display());
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            res.write_rows(&mut out)?;
            writeln!(out)?;
            res.write_fits(&mut out)?;
        }
    }
    Ok(())
}

fn experiment_report(cli: &Cli, results: &Path) -> Result<()> {
    csv_only(cli, "experiment report")?;
    let rows = experiments::read_rows(results)?;
    let mut w = csv::Writer::from_writer(output(cli)?);
    w.write_record(["series", "points", "slope", "intercept", "r2", "inside_bounds"])?;
    let mut series: Vec<&str> = rows.iter().map(|r| r.series.as_str()).collect();
    series.dedup();
    for s in series {
        let pts: Vec<_> = rows.iter().filter(|r| r.series == s).collect();
        let x: Vec<f64> = pts.iter().map(|r| r.regressor).collect();
        let y: Vec<f64> = pts.iter().map(|r| r.estimate).collect();
        let f = ols(&x, &y);
        let inside = pts.iter().all(|r| {
            !(r.lower_bound > r.estimate * (1.0 + 1e-12) || r.upper_bound < r.estimate * (1.0 - 1e-12))
        });
        w.write_record([
            s.to_string(),
            pts.len().to_string(),
            f.slope.to_string(),
            f.intercept.to_string(),
            f.r2.to_string(),
            inside.to_string(),
        ])?;
    }
    w.flush()?;
    for f in experiments::write_plot_data(&rows, results)? {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}
