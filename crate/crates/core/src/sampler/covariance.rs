use super::PointSet;
use crate::error::Result;
use crate::metrics::{Metrics, SpacetimePoint};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::collections::HashMap;

/// Covariance entries depend only on (min time, time gap, distance); each
/// distinct triple is integrated once.
fn key(a: &SpacetimePoint, b: &SpacetimePoint) -> (u64, u64, u64) {
    let s = a.t.min(b.t);
    let d = (a.t - b.t).abs();
    let r = (a.x - b.x).abs();
    (s.to_bits(), d.to_bits(), r.to_bits())
}

/// E[u(p_i) u(p_j)] for all pairs of a point set.
pub fn covariance_matrix(m: &Metrics, pts: &PointSet) -> Result<DMatrix<f64>> {
    let p = pts.points();
    let n = p.len();
    let mut keys: Vec<(u64, u64, u64)> = Vec::new();
    let mut index: HashMap<(u64, u64, u64), usize> = HashMap::new();
    let mut reps: Vec<(SpacetimePoint, SpacetimePoint)> = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            let k = key(&p[i], &p[j]);
            if !index.contains_key(&k) {
                index.insert(k, reps.len());
                keys.push(k);
                reps.push((p[i], p[j]));
            }
        }
    }
    let values: Vec<f64> = reps
        .par_iter()
        .map(|(a, b)| m.covariance(*a, *b).map(|c| c.value))
        .collect::<Result<Vec<_>>>()?;
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = values[index[&key(&p[i], &p[j])]];
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}
