//! On-disk formats: TOML metadata, plain-text snapshots and the column time
//! series. Floats are written with 17 significant digits so that a parse
//! gives back the exact bits.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::ParseError;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::Result;
use crate::geometry::{Curve, C64};
use crate::kernels::PointVortex;
use crate::model::{Formulation, SheetState};

pub const METADATA_FILE: &str = "metadata.toml";
pub const TIME_SERIES_FILE: &str = "timeseries.txt";
pub const SNAPSHOT_DIR: &str = "snapshots";
const SNAPSHOT_MAGIC: &str = "surfwave-snapshot 1";

/// Number formatting shared by all text outputs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", deny_unknown_fields)]
pub enum Outcome {
    Completed { time: f64, steps: u64 },
    Instability { time: f64, steps: u64, reason: String },
    Splash { time: f64, steps: u64 },
    Failed { time: f64, steps: u64, reason: String },
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Completed { .. } => 0,
            Outcome::Instability { .. } => 2,
            Outcome::Splash { .. } => 3,
            Outcome::Failed { .. } => 1,
        }
    }

    /// Time of the last good state.
    pub fn time(&self) -> f64 {
        match self {
            Outcome::Completed { time, .. }
            | Outcome::Instability { time, .. }
            | Outcome::Splash { time, .. }
            | Outcome::Failed { time, .. } => *time,
        }
    }

    pub fn steps(&self) -> u64 {
        match self {
            Outcome::Completed { steps, .. }
            | Outcome::Instability { steps, .. }
            | Outcome::Splash { steps, .. }
            | Outcome::Failed { steps, .. } => *steps,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Completed { time, steps } => write!(f, "completed at t = {time:.6} after {steps} steps"),
            Outcome::Instability { time, steps, reason } => {
                write!(f, "instability after t = {time:.6} ({steps} steps): {reason}")
            }
            Outcome::Splash { time, steps } => write!(f, "splash at t = {time:.6} ({steps} steps)"),
            Outcome::Failed { time, steps, reason } => write!(f, "failed after t = {time:.6} ({steps} steps): {reason}"),
        }
    }
}

/// Everything needed to reproduce a run, plus its outcome once known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMetadata {
    pub version: String,
    /// Time step actually used.
    pub dt: f64,
    pub t0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_time: Option<f64>,
    pub initial_min_spacing: f64,
    pub initial_max_sheet: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    pub config: RunConfig,
}

impl RunMetadata {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("metadata serializes")
    }
}

pub fn parse_metadata(text: &str) -> std::result::Result<RunMetadata, ParseError> {
    toml::from_str(text).map_err(ParseError::toml)
}

/// One snapshot: surface nodes, surface density and point vortices.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedState {
    pub time: f64,
    pub step: u64,
    pub formulation: Formulation,
    pub period: f64,
    pub de: f64,
    pub points: Vec<C64>,
    pub density: Vec<f64>,
    pub vortices: Vec<PointVortex>,
}

impl SavedState {
    pub fn new(state: &SheetState, time: f64, step: u64) -> Self {
        SavedState {
            time,
            step,
            formulation: state.mode,
            period: state.surface.period(),
            de: state.surface.de(),
            points: state.surface.points().to_vec(),
            density: state.density.clone(),
            vortices: state.vortices.clone(),
        }
    }

    pub fn curve(&self) -> Result<Curve> {
        Ok(Curve::with_step(self.points.clone(), self.period, self.de)?)
    }

    pub fn to_state(&self) -> Result<SheetState> {
        let mut s = SheetState::new(self.curve()?, self.density.clone(), self.formulation)?;
        s.vortices = self.vortices.clone();
        s.check()?;
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let f = fmt_f64;
        let _ = writeln!(out, "{SNAPSHOT_MAGIC}");
        let _ = writeln!(out, "time {}", f(self.time));
        let _ = writeln!(out, "step {}", self.step);
        let _ = writeln!(out, "formulation {}", self.formulation);
        let _ = writeln!(out, "period {}", f(self.period));
        let _ = writeln!(out, "de {}", f(self.de));
        let _ = writeln!(out, "nodes {}", self.points.len());
        let _ = writeln!(out, "vortices {}", self.vortices.len());
        let _ = writeln!(out, "# x y density");
        for (z, d) in self.points.iter().zip(&self.density) {
            let _ = writeln!(out, "{} {} {}", f(z.re), f(z.im), f(*d));
        }
        if !self.vortices.is_empty() {
            let _ = writeln!(out, "# x y strength");
        }
        for v in &self.vortices {
            let _ = writeln!(out, "{} {} {}", f(v.z.re), f(v.z.im), f(v.strength));
        }
        out
    }

    pub fn file_name(index: u64) -> String {
        format!("snap_{index:06}.txt")
    }
}

fn field<T: FromStr>(line: (usize, &str), key: &str) -> std::result::Result<T, ParseError> {
    let (no, text) = line;
    let mut it = text.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(k), Some(v), None) if k == key => {
            v.parse().map_err(|_| ParseError::at(no, format!("bad value for {key}: {v:?}")))
        }
        _ => Err(ParseError::at(no, format!("expected `{key} <value>`"))),
    }
}

fn floats<const K: usize>(line: (usize, &str)) -> std::result::Result<[f64; K], ParseError> {
    let (no, text) = line;
    let mut out = [0.0f64; K];
    let mut it = text.split_whitespace();
    for slot in out.iter_mut() {
        let tok = it.next().ok_or_else(|| ParseError::at(no, format!("expected {K} numbers")))?;
        *slot = tok.parse().map_err(|_| ParseError::at(no, format!("bad number {tok:?}")))?;
        if !slot.is_finite() {
            return Err(ParseError::at(no, "non-finite value"));
        }
    }
    if it.next().is_some() {
        return Err(ParseError::at(no, format!("expected {K} numbers")));
    }
    Ok(out)
}

/// Parses a snapshot and checks that it describes a valid curve.
pub fn parse_snapshot(text: &str) -> std::result::Result<SavedState, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| lines.next().ok_or_else(|| ParseError::at(0, format!("missing {what}")));
    let magic = next("header")?;
    if magic.1 != SNAPSHOT_MAGIC {
        return Err(ParseError::at(magic.0, "not a surfwave snapshot"));
    }
    let time: f64 = field(next("time")?, "time")?;
    let step: u64 = field(next("step")?, "step")?;
    let form: String = field(next("formulation")?, "formulation")?;
    let formulation = match form.as_str() {
        "vortex" => Formulation::Vortex,
        "dipole" => Formulation::Dipole,
        other => return Err(ParseError::at(0, format!("unknown formulation {other:?}"))),
    };
    let period: f64 = field(next("period")?, "period")?;
    let de: f64 = field(next("de")?, "de")?;
    let n: usize = field(next("nodes")?, "nodes")?;
    let m: usize = field(next("vortices")?, "vortices")?;
    if !time.is_finite() || !(period > 0.0 && period.is_finite()) || !(de > 0.0 && de.is_finite()) {
        return Err(ParseError::invalid("time, period and de must be finite, period and de positive"));
    }
    let mut points = Vec::new();
    let mut density = Vec::new();
    for _ in 0..n {
        let [x, y, d] = floats::<3>(next("node line")?)?;
        points.push(C64::new(x, y));
        density.push(d);
    }
    let mut vortices = Vec::new();
    for _ in 0..m {
        let [x, y, s] = floats::<3>(next("vortex line")?)?;
        vortices.push(PointVortex { z: C64::new(x, y), strength: s });
    }
    if let Some((no, _)) = lines.next() {
        return Err(ParseError::at(no, "trailing data"));
    }
    let saved = SavedState { time, step, formulation, period, de, points, density, vortices };
    saved.to_state().map_err(|e| ParseError::invalid(e.to_string()))?;
    Ok(saved)
}

/// One time-series line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRow {
    pub step: u64,
    pub record: DiagnosticsRecord,
    pub cfl_max: f64,
    pub kick_iterations: usize,
    pub drift_iterations: usize,
}

pub const TIME_SERIES_HEADER: &str =
    "# step time mass energy cfl cfl_max circulation compatibility_residual kick_iterations drift_iterations";

impl TimeSeriesRow {
    pub fn to_line(&self) -> String {
        let r = &self.record;
        let f = fmt_f64;
        format!(
            "{} {} {} {} {} {} {} {} {} {}",
            self.step,
            f(r.time),
            f(r.mass),
            f(r.energy.unwrap_or(f64::NAN)),
            f(r.cfl),
            f(self.cfl_max),
            f(r.circulation_total),
            f(r.compatibility_residual),
            self.kick_iterations,
            self.drift_iterations
        )
    }
}

pub fn parse_time_series(text: &str) -> std::result::Result<Vec<TimeSeriesRow>, ParseError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 10 {
            return Err(ParseError::at(no, format!("expected 10 columns, found {}", tok.len())));
        }
        let num = |k: usize| -> std::result::Result<f64, ParseError> {
            tok[k].parse::<f64>().map_err(|_| ParseError::at(no, format!("bad number {:?}", tok[k])))
        };
        let int = |k: usize| -> std::result::Result<u64, ParseError> {
            tok[k].parse::<u64>().map_err(|_| ParseError::at(no, format!("bad integer {:?}", tok[k])))
        };
        let energy = num(3)?;
        let record = DiagnosticsRecord {
            time: num(1)?,
            mass: num(2)?,
            energy: (!energy.is_nan()).then_some(energy),
            cfl: num(4)?,
            circulation_total: num(6)?,
            compatibility_residual: num(7)?,
        };
        rows.push(TimeSeriesRow {
            step: int(0)?,
            record,
            cfl_max: num(5)?,
            kick_iterations: int(8)? as usize,
            drift_iterations: int(9)? as usize,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::graph_points;
    use crate::runner::config::RunConfig;
    use crate::scenarios::{ScenarioKind, ScenarioSpec};
    use std::f64::consts::PI;

    fn saved() -> SavedState {
        let l = 2.0 * PI;
        let c = Curve::new(graph_points(16, l, |x| 0.1 * x.cos() + 1.0 / 3.0), l).unwrap();
        let d: Vec<f64> = c.points().iter().map(|z| (z.re * 0.7).sin() / 7.0).collect();
        let mut s = SheetState::new(c, d, Formulation::Vortex).unwrap();
        s.vortices.push(PointVortex { z: C64::new(1.0, -0.5), strength: 0.1 });
        SavedState::new(&s, 0.1 + 0.2, 42)
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let s = saved();
        let back = parse_snapshot(&s.to_text()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn snapshot_rejects_damage() {
        let text = saved().to_text();
        assert!(parse_snapshot(&text.replace("nodes 16", "nodes 17")).is_err());
        assert!(parse_snapshot(&text.replace("vortices 1", "vortices 0")).is_err());
        assert!(parse_snapshot(&text.replace("formulation vortex", "formulation foo")).is_err());
        assert!(parse_snapshot(&text.replacen("surfwave-snapshot 1", "x", 1)).is_err());
        assert!(parse_snapshot("").is_err());
        let nodes: Vec<&str> = text.lines().collect();
        let cut = nodes[..12].join("\n");
        assert!(parse_snapshot(&cut).is_err());
    }

    #[test]
    fn time_series_round_trip() {
        let row = TimeSeriesRow {
            step: 7,
            record: DiagnosticsRecord {
                time: 0.7,
                mass: 2.0 * PI,
                energy: Some(1.0 / 3.0),
                cfl: 0.05,
                circulation_total: -0.0,
                compatibility_residual: 1e-17,
            },
            cfl_max: 0.1,
            kick_iterations: 3,
            drift_iterations: 4,
        };
        let none = TimeSeriesRow { record: DiagnosticsRecord { energy: None, ..row.record }, ..row };
        let text = format!("{TIME_SERIES_HEADER}\n{}\n{}\n", row.to_line(), none.to_line());
        assert_eq!(parse_time_series(&text).unwrap(), vec![row, none]);
        assert!(parse_time_series("1 2 3").is_err());
        assert!(parse_time_series("x 0 0 0 0 0 0 0 0 0").is_err());
    }

    #[test]
    fn metadata_round_trip() {
        let cfg = RunConfig::new(ScenarioSpec::new(ScenarioKind::LinearWave, 1e-3, 64, Formulation::Dipole), "out");
        let mut m = RunMetadata {
            version: "0.1.0".into(),
            dt: 0.1 / 3.0,
            t0: 0.0,
            end_time: Some(72.0),
            initial_min_spacing: 0.09817477042468103,
            initial_max_sheet: 1e-3,
            outcome: None,
            config: cfg,
        };
        assert_eq!(parse_metadata(&m.to_toml()).unwrap(), m);
        m.outcome = Some(Outcome::Instability { time: 3.04, steps: 1234, reason: "node spacing".into() });
        assert_eq!(parse_metadata(&m.to_toml()).unwrap(), m);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Outcome::Completed { time: 1.0, steps: 1 }.exit_code(), 0);
        assert_eq!(Outcome::Instability { time: 1.0, steps: 1, reason: String::new() }.exit_code(), 2);
        assert_eq!(Outcome::Splash { time: 1.0, steps: 1 }.exit_code(), 3);
        assert_eq!(Outcome::Failed { time: 1.0, steps: 1, reason: String::new() }.exit_code(), 1);
    }
}
