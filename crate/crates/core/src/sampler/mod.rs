//! Gaussian field samplers: exact Cholesky on point sets and a per-mode
//! Ornstein-Uhlenbeck spectral sampler on periodic space-time grids.

mod cholesky;
mod covariance;
pub mod io;
mod rng;
mod seminorm;
mod spectral;

pub use cholesky::CholeskySampler;
pub use covariance::covariance_matrix;
pub use rng::stream;
pub use seminorm::{seminorm_expectation, SeminormEstimator, SeminormSpec};
pub use spectral::{BiasEntry, SpectralOptions, SpectralSampler};

use crate::error::{Error, Result};
use crate::metrics::SpacetimePoint;
use std::fmt;
use std::sync::Arc;

/// Ordered, duplicate-free list of space-time points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<SpacetimePoint>,
}

impl PointSet {
    pub fn new(points: impl IntoIterator<Item = SpacetimePoint>) -> Result<Self> {
        let mut out: Vec<SpacetimePoint> = Vec::new();
        for p in points {
            if !(p.t.is_finite() && p.t >= 0.0 && p.x.is_finite()) {
                return Err(Error::InvalidInput(format!("point ({}, {})", p.t, p.x)));
            }
            if !out.iter().any(|q| q.t == p.t && q.x == p.x) {
                out.push(p);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidInput("empty point set".into()));
        }
        Ok(Self { points: out })
    }

    /// All points of a grid in row-major (time, space) order.
    pub fn from_grid(g: &SpacetimeGrid) -> Result<Self> {
        Self::new((0..g.nt).flat_map(|i| {
            (0..g.nx).map(move |j| SpacetimePoint {
                t: g.time(i),
                x: g.position(j),
            })
        }))
    }

    pub fn points(&self) -> &[SpacetimePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Regular space-time grid: times t0 + i dt (i < nt), positions x0 + j dx (j < nx).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    pub x0: f64,
    pub dx: f64,
    pub nx: usize,
}

impl SpacetimeGrid {
    pub fn new(t0: f64, dt: f64, nt: usize, x0: f64, dx: f64, nx: usize) -> Result<Self> {
        let g = Self {
            t0,
            dt,
            nt,
            x0,
            dx,
            nx,
        };
        g.validate()?;
        Ok(g)
    }

    /// Single time slice.
    pub fn slice(t: f64, x0: f64, dx: f64, nx: usize) -> Result<Self> {
        Self::new(t, 0.0, 1, x0, dx, nx)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.nt >= 1
            && self.nx >= 1
            && self.t0.is_finite()
            && self.t0 >= 0.0
            && (self.nt == 1 || (self.dt > 0.0 && self.dt.is_finite()))
            && self.dx > 0.0
            && self.dx.is_finite()
            && self.x0.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid grid {self:?}")))
        }
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn position(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    /// Nyquist frequency pi/dx.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.dx
    }

    /// Spectral resolution 2 pi / (nx dx).
    pub fn frequency_step(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.nx as f64 * self.dx)
    }

    pub fn period(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn len(&self) -> usize {
        self.nt * self.nx
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Cholesky,
    Spectral,
}

impl Method {
    pub fn code(self) -> u32 {
        match self {
            Method::Cholesky => 0,
            Method::Spectral => 1,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cholesky => "cholesky",
            Method::Spectral => "spectral",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cholesky" => Ok(Method::Cholesky),
            "spectral" => Ok(Method::Spectral),
            _ => Err(Error::InvalidInput(format!("unknown method {s}"))),
        }
    }
}

/// Where the values of a sample live.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Grid(SpacetimeGrid),
    Points(Arc<PointSet>),
}

/// One realized field with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub values: Vec<f64>,
    pub layout: Layout,
    pub seed: u64,
    pub replicate: u32,
    pub method: Method,
}

impl FieldSample {
    /// (nt, nx); point sets are a single row.
    pub fn shape(&self) -> (usize, usize) {
        match &self.layout {
            Layout::Grid(g) => (g.nt, g.nx),
            Layout::Points(p) => (1, p.len()),
        }
    }

    pub fn coordinate(&self, k: usize) -> (f64, f64) {
        match &self.layout {
            Layout::Grid(g) => (g.time(k / g.nx), g.position(k % g.nx)),
            Layout::Points(p) => {
                let q = p.points()[k];
                (q.t, q.x)
            }
        }
    }

    /// Values at time slice i of a grid sample.
    pub fn row(&self, i: usize) -> &[f64] {
        let (_, nx) = self.shape();
        &self.values[i * nx..(i + 1) * nx]
    }
}
