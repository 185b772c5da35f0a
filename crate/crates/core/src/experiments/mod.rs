//! Monte Carlo experiment harness: configuration, runs, results and
//! plot-data emission.

pub mod config;
mod runs;
pub mod stats;

pub use config::{ExperimentConfig, ExperimentKind, ResolutionCheck};
pub use runs::{root2_statistic, run, Root2Trajectory};

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// One sweep point of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub series: String,
    pub x: f64,
    pub regressor: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// Fitted lower bound (NaN when the series has none).
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub replicates: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub series: String,
    pub regressor: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_lo: f64,
    pub slope_hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub rows: Vec<ResultRow>,
    pub fits: Vec<FitRow>,
    pub meta: Vec<(String, String)>,
    pub trajectories: Vec<Root2Trajectory>,
}

impl ExperimentResult {
    pub fn rows_of<'a>(&'a self, series: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.series == series)
    }

    pub fn fit(&self, series: &str) -> Option<&FitRow> {
        self.fits.iter().find(|f| f.series == series)
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta(key)?.parse().ok()
    }

    pub fn write_rows<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record([
            "experiment",
            "series",
            "x",
            "regressor",
            "estimate",
            "std_error",
            "lower_bound",
            "upper_bound",
            "replicates",
        ])?;
        for r in &self.rows {
            w.write_record([
                self.kind.name().to_string(),
                r.series.clone(),
                r.x.to_string(),
                r.regressor.to_string(),
                r.estimate.to_string(),
                r.std_error.to_string(),
                r.lower_bound.to_string(),
                r.upper_bound.to_string(),
                r.replicates.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_fits<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record([
            "series",
            "regressor",
            "slope",
            "intercept",
            "r2",
            "slope_lo",
            "slope_hi",
            "points",
        ])?;
        for f in &self.fits {
            w.write_record([
                f.series.clone(),
                f.regressor.clone(),
                f.slope.to_string(),
                f.intercept.to_string(),
                f.r2.to_string(),
                f.slope_lo.to_string(),
                f.slope_hi.to_string(),
                f.points.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_meta<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["key", "value"])?;
        for (k, v) in &self.meta {
            w.write_record([k, v])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_trajectories<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["replicate", "L", "nested", "annulus"])?;
        for t in &self.trajectories {
            w.write_record([
                t.replicate.to_string(),
                t.l.to_string(),
                t.nested.to_string(),
                t.annulus.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv` plus `.fits.csv`, `.meta.csv` and, when present,
    /// `.traj.csv` siblings. Returns the paths written.
    pub fn save(&self, path: &Path) -> Result<Vec<PathBuf>> {
        let mut out = vec![path.to_path_buf()];
        self.write_rows(std::fs::File::create(path)?)?;
        let fits = sibling(path, "fits");
        self.write_fits(std::fs::File::create(&fits)?)?;
        out.push(fits);
        let meta = sibling(path, "meta");
        self.write_meta(std::fs::File::create(&meta)?)?;
        out.push(meta);
        if !self.trajectories.is_empty() {
            let traj = sibling(path, "traj");
            self.write_trajectories(std::fs::File::create(&traj)?)?;
            out.push(traj);
        }
        Ok(out)
    }
}

/// `dir/name.csv` -> `dir/name.<tag>.csv`.
pub fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{tag}.csv"))
}

/// Reads a rows file written by [`ExperimentResult::write_rows`].
pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("{}: missing column {name}", path.display())))
    };
    let idx = [
        col("series")?,
        col("x")?,
        col("regressor")?,
        col("estimate")?,
        col("std_error")?,
        col("lower_bound")?,
        col("upper_bound")?,
        col("replicates")?,
    ];
    let num = |rec: &csv::StringRecord, i: usize| -> Result<f64> {
        rec[i]
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad number {:?}", &rec[i])))
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(ResultRow {
            series: rec[idx[0]].to_string(),
            x: num(&rec, idx[1])?,
            regressor: num(&rec, idx[2])?,
            estimate: num(&rec, idx[3])?,
            std_error: num(&rec, idx[4])?,
            lower_bound: num(&rec, idx[5])?,
            upper_bound: num(&rec, idx[6])?,
            replicates: num(&rec, idx[7])? as u32,
        });
    }
    Ok(rows)
}

/// (x, y, yerr) triples per series, in row order.
pub fn plot_data(rows: &[ResultRow]) -> BTreeMap<String, Vec<(f64, f64, f64)>> {
    let mut m: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for r in rows {
        m.entry(r.series.clone())
            .or_default()
            .push((r.x, r.estimate, r.std_error));
    }
    m
}

/// Writes one `<stem>.<series>.dat` file per series with `x y yerr` lines.
pub fn write_plot_data(rows: &[ResultRow], stem: &Path) -> Result<Vec<PathBuf>> {
    let base = stem
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut out = Vec::new();
    for (series, pts) in plot_data(rows) {
        let path = stem.with_file_name(format!("{base}.{series}.dat"));
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(f, "# x y yerr")?;
        for (x, y, e) in pts {
            writeln!(f, "{x} {y} {e}")?;
        }
        f.flush()?;
        out.push(path);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result() -> ExperimentResult {
        ExperimentResult {
            kind: ExperimentKind::SupGrowthL,
            rows: vec![
                ResultRow {
                    series: "sup".into(),
                    x: 1.0,
                    regressor: 1.0,
                    estimate: 1.5,
                    std_error: 0.01,
                    lower_bound: 1.0,
                    upper_bound: f64::NAN,
                    replicates: 10,
                },
                ResultRow {
                    series: "sup".into(),
                    x: 2.0,
                    regressor: 2.0,
                    estimate: 2.5,
                    std_error: 0.02,
                    lower_bound: 1.5,
                    upper_bound: 9.0,
                    replicates: 10,
                },
            ],
            fits: vec![],
            meta: vec![("seed".into(), "1".into())],
            trajectories: vec![],
        }
    }

    #[test]
    fn save_and_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let r = result();
        let files = r.save(&path).unwrap();
        assert_eq!(files.len(), 3);
        assert!(dir.path().join("run.fits.csv").exists());
        let back = read_rows(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].estimate, 2.5);
        assert!(back[0].upper_bound.is_nan());
        let dat = write_plot_data(&back, &path).unwrap();
        let text = std::fs::read_to_string(&dat[0]).unwrap();
        assert_eq!(text.lines().nth(2).unwrap(), "2 2.5 0.02");
    }
}
