//! Experiment configuration files.
//!
//! Grammar (UTF-8, line oriented):
//!
//! ```text
//! file    = { line }
//! line    = [ section | pair ] [ comment ] newline
//! section = "[" name "]"
//! pair    = key "=" value { "," value }
//! value   = number | word | "dyadic(" number "," number ")"
//! comment = ("#" | ";") { any }
//! ```
//!
//! Keys are case sensitive and may appear once per section. `dyadic(a, b)`
//! expands to a, 2a, 4a, ... up to b. Unknown sections or keys are errors.
//! See `docs/config.md` for the key reference.

use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    SupGrowthTL,
    SupGrowthL,
    HolderSpace,
    HolderTime,
    Root2Law,
    SeminormGrowth,
    Concentration,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::SupGrowthTL,
        ExperimentKind::SupGrowthL,
        ExperimentKind::HolderSpace,
        ExperimentKind::HolderTime,
        ExperimentKind::Root2Law,
        ExperimentKind::SeminormGrowth,
        ExperimentKind::Concentration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SupGrowthTL => "supGrowthTL",
            ExperimentKind::SupGrowthL => "supGrowthL",
            ExperimentKind::HolderSpace => "holderSpace",
            ExperimentKind::HolderTime => "holderTime",
            ExperimentKind::Root2Law => "root2Law",
            ExperimentKind::SeminormGrowth => "seminormGrowth",
            ExperimentKind::Concentration => "concentration",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown experiment kind {s}")))
    }
}

/// Whether the 2x grid refinement check runs, and whether it can fail the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolutionCheck {
    Off,
    Report,
    Enforce,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub hurst: f64,
    pub kind: ExperimentKind,
    pub replicates: u32,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub resolution: ResolutionCheck,
    /// Times; for supGrowthTL the horizons paired with `l`.
    pub t: Vec<f64>,
    pub l: Vec<f64>,
    pub h: Vec<f64>,
    pub tau: Vec<f64>,
    pub theta: Vec<f64>,
    /// Thresholds in units of sigma for the concentration experiment.
    pub lambda: Vec<f64>,
    /// L used by the h and tau power sweeps.
    pub l_fixed: f64,
    /// h used by the L sweep of holderSpace.
    pub h_fixed: f64,
    /// tau used by the L sweep of holderTime.
    pub tau_fixed: f64,
    pub h_max: f64,
    pub dx: f64,
    pub nx: Option<usize>,
    pub dt: Option<f64>,
    pub bias_budget: f64,
    pub bootstrap: usize,
    pub quadrature: QuadratureSpec,
}

fn dyadic(a: f64, b: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut x = a;
    while x <= b * (1.0 + 1e-12) {
        v.push(x);
        x *= 2.0;
    }
    v
}

impl ExperimentConfig {
    /// Defaults for a kind at alpha = 1.5, H = 0.4.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut c = Self {
            alpha: 1.5,
            hurst: 0.4,
            kind,
            replicates: 400,
            seed: 1,
            output: None,
            resolution: ResolutionCheck::Off,
            t: vec![1.0],
            l: dyadic(1.0, 256.0),
            h: vec![],
            tau: vec![],
            theta: vec![],
            lambda: vec![],
            l_fixed: 4.0,
            h_fixed: 8e-3,
            tau_fixed: 8e-3,
            h_max: 1.0,
            dx: 1.0 / 16.0,
            nx: None,
            dt: None,
            bias_budget: 0.02,
            bootstrap: 200,
            quadrature: QuadratureSpec::default(),
        };
        match kind {
            ExperimentKind::SupGrowthL => c.resolution = ResolutionCheck::Report,
            ExperimentKind::SupGrowthTL => {
                c.t = vec![0.5, 1.0, 2.0, 1.0, 1.0];
                c.l = vec![4.0, 4.0, 4.0, 16.0, 64.0];
                c.dt = Some(1.0 / 16.0);
                c.replicates = 200;
            }
            ExperimentKind::HolderSpace => {
                c.l = dyadic(1.0, 16.0);
                c.h = vec![1e-3, 2e-3, 4e-3, 8e-3];
                c.dx = 1e-3;
                c.replicates = 200;
            }
            ExperimentKind::HolderTime => {
                c.l = dyadic(1.0, 16.0);
                c.tau = vec![1e-3, 2e-3, 4e-3, 8e-3];
                c.dx = 0.01;
                c.replicates = 200;
            }
            ExperimentKind::Root2Law => {
                c.l = dyadic(2.0, 2048.0);
                c.dx = 0.25;
                c.replicates = 200;
            }
            ExperimentKind::SeminormGrowth => {
                c.l = dyadic(1.0, 64.0);
                c.dx = 1.0 / 64.0;
                c.replicates = 200;
            }
            ExperimentKind::Concentration => {
                c.l = vec![16.0];
                c.lambda = vec![1.0, 2.0, 3.0];
                c.replicates = 2000;
            }
        }
        c
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        let kind_entry = doc.get("experiment", "kind").ok_or(Error::Config {
            line: 0,
            message: "missing [experiment] kind".into(),
        })?;
        let kind: ExperimentKind = kind_entry.single()?.parse().map_err(|_| Error::Config {
            line: kind_entry.line,
            message: format!("unknown experiment kind {}", kind_entry.raw),
        })?;
        let mut c = Self::defaults(kind);
        for (section, key, e) in doc.entries() {
            match (section, key) {
                ("model", "alpha") => c.alpha = e.number()?,
                ("model", "hurst") => c.hurst = e.number()?,
                ("experiment", "kind") => {}
                ("experiment", "replicates") => c.replicates = e.integer()? as u32,
                ("experiment", "seed") => c.seed = e.integer()?,
                ("experiment", "output") => c.output = Some(PathBuf::from(e.single()?)),
                ("experiment", "bootstrap") => c.bootstrap = e.integer()? as usize,
                ("experiment", "resolution_check") => {
                    c.resolution = match e.single()? {
                        "off" => ResolutionCheck::Off,
                        "report" => ResolutionCheck::Report,
                        "enforce" => ResolutionCheck::Enforce,
                        other => return Err(e.error(format!("resolution_check {other}"))),
                    }
                }
                ("sweep", "t") => c.t = e.numbers()?,
                ("sweep", "L") => c.l = e.numbers()?,
                ("sweep", "h") => c.h = e.numbers()?,
                ("sweep", "tau") => c.tau = e.numbers()?,
                ("sweep", "theta") => c.theta = e.numbers()?,
                ("sweep", "lambda") => c.lambda = e.numbers()?,
                ("sweep", "L_fixed") => c.l_fixed = e.number()?,
                ("sweep", "h_fixed") => c.h_fixed = e.number()?,
                ("sweep", "tau_fixed") => c.tau_fixed = e.number()?,
                ("sweep", "h_max") => c.h_max = e.number()?,
                ("grid", "dx") => c.dx = e.number()?,
                ("grid", "nx") => c.nx = Some(e.integer()? as usize),
                ("grid", "dt") => c.dt = Some(e.number()?),
                ("grid", "bias_budget") => c.bias_budget = e.number()?,
                ("quadrature", "rel_tol") => c.quadrature = c.quadrature.with_rel_tol(e.number()?),
                ("quadrature", "abs_tol") => c.quadrature = c.quadrature.with_abs_tol(e.number()?),
                ("quadrature", "max_periods") => c.quadrature.max_periods = e.integer()? as usize,
                _ => return Err(e.error(format!("unknown key {key} in [{section}]"))),
            }
        }
        c.check_basic()?;
        Ok(c)
    }

    /// Structural checks that do not depend on the model; window checks
    /// happen when the experiment runs.
    fn check_basic(&self) -> Result<()> {
        let bad = |m: String| {
            Err(Error::Config {
                line: 0,
                message: m,
            })
        };
        if self.replicates < 2 {
            return bad("replicates must be at least 2".into());
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return bad(format!("dx = {}", self.dx));
        }
        if self.t.is_empty() || self.t.iter().any(|t| !(*t > 0.0)) {
            return bad("t must be a nonempty list of positive times".into());
        }
        if self.l.is_empty() || self.l.iter().any(|l| !(*l > 0.0)) {
            return bad("L must be a nonempty list of positive half-widths".into());
        }
        if self.kind == ExperimentKind::SupGrowthTL && self.t.len() != self.l.len() {
            return bad("supGrowthTL pairs t and L; the lists must have equal length".into());
        }
        self.quadrature.validate().map_err(|e| Error::Config {
            line: 0,
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone)]
struct Entry {
    raw: String,
    line: usize,
}

impl Entry {
    fn error(&self, message: String) -> Error {
        Error::Config {
            line: self.line,
            message,
        }
    }

    fn items(&self) -> Vec<&str> {
        split_items(&self.raw)
    }

    fn single(&self) -> Result<&str> {
        match self.items().as_slice() {
            [one] => Ok(one),
            _ => Err(self.error(format!("expected a single value, got {}", self.raw))),
        }
    }

    fn number(&self) -> Result<f64> {
        let s = self.single()?;
        parse_number(s).ok_or_else(|| self.error(format!("not a number: {s}")))
    }

    fn integer(&self) -> Result<u64> {
        let s = self.single()?;
        s.parse().map_err(|_| self.error(format!("not a nonnegative integer: {s}")))
    }

    fn numbers(&self) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for item in self.items() {
            if let Some(args) = item.strip_prefix("dyadic(").and_then(|r| r.strip_suffix(')')) {
                let parts: Vec<&str> = args.split(',').map(str::trim).collect();
                let (a, b) = match parts.as_slice() {
                    [a, b] => (parse_number(a), parse_number(b)),
                    _ => (None, None),
                };
                match (a, b) {
                    (Some(a), Some(b)) if a > 0.0 && b >= a => out.extend(dyadic(a, b)),
                    _ => return Err(self.error(format!("bad dyadic range {item}"))),
                }
            } else {
                out.push(parse_number(item).ok_or_else(|| self.error(format!("not a number: {item}")))?);
            }
        }
        Ok(out)
    }
}

fn parse_number(s: &str) -> Option<f64> {
    // allow simple fractions such as 1/16
    if let Some((a, b)) = s.split_once('/') {
        let (a, b): (f64, f64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return (b != 0.0).then_some(a / b).filter(|v| v.is_finite());
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Splits on commas outside parentheses.
fn split_items(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out.retain(|x| !x.is_empty());
    out
}

const SECTIONS: [&str; 5] = ["model", "experiment", "sweep", "grid", "quadrature"];

#[derive(Debug, Default)]
struct Document {
    sections: BTreeMap<String, Vec<(String, Entry)>>,
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let mut doc = Document::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |m: String| Error::Config { line, message: m };
            let content = match raw.find(['#', ';']) {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| err(format!("unterminated section header {content}")))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(err(format!("unknown section [{name}]")));
                }
                if doc.sections.contains_key(name) {
                    return Err(err(format!("section [{name}] appears twice")));
                }
                doc.sections.insert(name.to_string(), Vec::new());
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {content}")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(err(format!("bad key {key:?}")));
            }
            if value.is_empty() {
                return Err(err(format!("empty value for {key}")));
            }
            let section = current
                .as_ref()
                .ok_or_else(|| err(format!("key {key} before any section header")))?;
            let entries = doc.sections.get_mut(section).unwrap();
            if entries.iter().any(|(k, _)| k == key) {
                return Err(err(format!("duplicate key {key} in [{section}]")));
            }
            entries.push((
                key.to_string(),
                Entry {
                    raw: value.to_string(),
                    line,
                },
            ));
        }
        Ok(doc)
    }

    fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections
            .get(section)?
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, e)| e)
    }

    fn entries(&self) -> impl Iterator<Item = (&str, &str, &Entry)> {
        self.sections
            .iter()
            .flat_map(|(s, v)| v.iter().map(move |(k, e)| (s.as_str(), k.as_str(), e)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# sup growth at t = 1
[model]
alpha = 1.5
hurst = 0.4   ; inline comment

[experiment]
kind = supGrowthL
replicates = 100
seed = 7

[sweep]
t = 1
L = dyadic(1, 16), 64

[grid]
dx = 1/16
";

    #[test]
    fn parses_sample() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.kind, ExperimentKind::SupGrowthL);
        assert_eq!(c.replicates, 100);
        assert_eq!(c.seed, 7);
        assert_eq!(c.l, vec![1.0, 2.0, 4.0, 8.0, 16.0, 64.0]);
        assert_eq!(c.dx, 0.0625);
        assert_eq!(c.hurst, 0.4);
    }

    fn line_of(text: &str) -> usize {
        match ExperimentConfig::parse(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn reports_error_lines() {
        assert_eq!(line_of("alpha = 1\n"), 1);
        assert_eq!(line_of("[experiment]\nkind = supGrowthL\n[bogus]\n"), 3);
        assert_eq!(line_of("[experiment]\nkind = supGrowthL\nkind = holderSpace\n"), 3);
        assert_eq!(line_of("[experiment]\nkind = supGrowthL\n[grid]\ndx = abc\n"), 4);
        assert_eq!(line_of("[experiment]\nkind = nope\n"), 2);
        assert_eq!(line_of("[experiment]\nkind = supGrowthL\n[sweep]\nL = dyadic(4, 1)\n"), 4);
        assert_eq!(line_of("[experiment]\nkind = supGrowthL\n[sweep]\nfoo = 1\n"), 4);
        assert_eq!(line_of("[experiment]\nkind = supGrowthL\nseed\n"), 3);
        assert_eq!(line_of("[model]\nalpha = 1.5\n"), 0);
    }

    #[test]
    fn tl_lists_must_pair() {
        let text = "[experiment]\nkind = supGrowthTL\n[sweep]\nt = 1, 2\nL = 4\n";
        assert!(matches!(
            ExperimentConfig::parse(text),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn kinds_roundtrip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
    }
}
