use super::{covariance_matrix, stream, FieldSample, Layout, Method, PointSet};
use crate::error::{Error, Result};
use crate::metrics::Metrics;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

const JITTER_START: f64 = 1e-14;
const JITTER_CAP: f64 = 1e-6;

/// Exact sampler for a finite point set through a Cholesky factor of the
/// covariance matrix. Points at t = 0 carry no variance and are excluded from
/// the factorization.
#[derive(Debug, Clone)]
pub struct CholeskySampler {
    points: Arc<PointSet>,
    active: Vec<usize>,
    factor: DMatrix<f64>,
    covariance: DMatrix<f64>,
    jitter: f64,
}

impl CholeskySampler {
    pub fn new(m: &Metrics, points: PointSet) -> Result<Self> {
        let full = covariance_matrix(m, &points)?;
        let active: Vec<usize> = (0..points.len())
            .filter(|&i| points.points()[i].t > 0.0)
            .collect();
        let n = active.len();
        let sub = DMatrix::from_fn(n, n, |i, j| full[(active[i], active[j])]);
        let (factor, jitter) = factor_with_jitter(&sub)?;
        Ok(Self {
            points: Arc::new(points),
            active,
            factor,
            covariance: full,
            jitter,
        })
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Diagonal jitter that was needed for the factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn sample(&self, seed: u64, replicate: u32) -> FieldSample {
        let mut rng = stream(seed, replicate as u64);
        let n = self.active.len();
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let u = &self.factor * z;
        let mut values = vec![0.0; self.points.len()];
        for (k, &i) in self.active.iter().enumerate() {
            values[i] = u[k];
        }
        FieldSample {
            values,
            layout: Layout::Points(self.points.clone()),
            seed,
            replicate,
            method: Method::Cholesky,
        }
    }

    /// Replicates 0..n in order.
    pub fn samples(&self, seed: u64, n: u32) -> impl Iterator<Item = FieldSample> + '_ {
        (0..n).map(move |r| self.sample(seed, r))
    }
}

/// Lower Cholesky factor, adding eps I with eps doubling from 1e-14 when needed.
fn factor_with_jitter(c: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = c.nrows();
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), 0.0));
    }
    let max_diag = (0..n).map(|i| c[(i, i)]).fold(0.0f64, f64::max);
    let cap = JITTER_CAP * max_diag;
    if let Some(ch) = c.clone().cholesky() {
        return Ok((ch.l(), 0.0));
    }
    let mut eps = JITTER_START;
    while eps <= cap {
        let mut a = c.clone();
        for i in 0..n {
            a[(i, i)] += eps;
        }
        if let Some(ch) = a.cholesky() {
            return Ok((ch.l(), eps));
        }
        eps *= 2.0;
    }
    Err(Error::PsdRepairExceeded { jitter: eps, cap })
}
