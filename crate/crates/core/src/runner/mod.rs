//! Run orchestration: configuration, the step loop with its stop rules,
//! artifacts on disk, and the convergence and Table 1 studies.

pub mod artifacts;
pub mod config;
pub mod detect;
pub mod study;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::SimError;
use crate::model::{Formulation, Problem, SheetState};
use crate::scenarios::ScenarioKind;
use crate::snapshot::Snapshot;
use crate::stepper::{self, StepConfig, Stepper};

pub use artifacts::{
    parse_metadata, parse_snapshot, parse_time_series, Outcome, RunMetadata, SavedState, TimeSeriesRow,
};
pub use config::{parse_run_config, EndConfig, InstabilityConfig, OutputConfig, Physics, RunConfig};
pub use detect::{detect_splash, InstabilityDetector};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    /// 1-based line, 0 when the error concerns the whole document.
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        ParseError::at(0, message)
    }

    pub fn toml(e: toml::de::Error) -> Self {
        ParseError::invalid(e.message().to_string())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
}

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

pub fn read_file(path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn load_snapshot(path: &Path) -> Result<SavedState, RunError> {
    parse_snapshot(&read_file(path)?).map_err(|source| RunError::Parse { path: path.to_path_buf(), source })
}

pub fn load_metadata(dir: &Path) -> Result<RunMetadata, RunError> {
    let path = dir.join(artifacts::METADATA_FILE);
    parse_metadata(&read_file(&path)?).map_err(|source| RunError::Parse { path, source })
}

pub fn load_time_series(dir: &Path) -> Result<Vec<TimeSeriesRow>, RunError> {
    let path = dir.join(artifacts::TIME_SERIES_FILE);
    parse_time_series(&read_file(&path)?).map_err(|source| RunError::Parse { path, source })
}

/// Path of the snapshot taken at `index * snapshot_interval`.
pub fn snapshot_path(dir: &Path, index: u64) -> PathBuf {
    dir.join(artifacts::SNAPSHOT_DIR).join(SavedState::file_name(index))
}

/// Last good state of a run.
pub fn final_snapshot_path(dir: &Path) -> PathBuf {
    dir.join(artifacts::SNAPSHOT_DIR).join("final.txt")
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub dt: f64,
    pub outcome: Outcome,
    /// Last good synchronized state and its time.
    pub final_state: SheetState,
    pub final_time: f64,
}

/// Initial state and its time.
pub fn initial_state(cfg: &RunConfig, problem: &Problem) -> Result<(SheetState, f64), RunError> {
    if cfg.scenario.kind != ScenarioKind::Custom {
        return Ok((cfg.scenario.initial_state(problem)?, 0.0));
    }
    let path = cfg.initial_snapshot.as_ref().ok_or_else(|| SimError::Config("custom scenario without snapshot".into()))?;
    let saved = load_snapshot(path)?;
    if saved.formulation != problem.formulation {
        return Err(SimError::Config("snapshot formulation differs from the scenario".into()).into());
    }
    if saved.period != problem.params.l {
        return Err(SimError::Config("snapshot period differs from scenario L".into()).into());
    }
    Ok((saved.to_state()?, saved.time))
}

/// Time step: the configured one, or `cfl_target` times the smallest
/// `|z_e| de / |zdot|`, then shrunk so that `unit` is a whole number of
/// steps.
pub fn choose_dt(problem: &Problem, state: &SheetState, step: &StepConfig, unit: Option<f64>) -> Result<f64, RunError> {
    let dt0 = if step.dt > 0.0 {
        step.dt
    } else {
        let snap = Snapshot::new(problem, state.surface.clone(), state.vortices.clone())?;
        let kin = stepper::kinematics(&snap, &state.density)?;
        let c = &state.surface;
        let mut ratio = f64::INFINITY;
        for (v, ze) in kin.zdot.iter().zip(c.d1()) {
            if v.norm() > 0.0 {
                ratio = ratio.min(ze.norm() * c.de() / v.norm());
            }
        }
        // the shortest grid wave sets the limit when the flow is slow
        let p = &problem.params;
        let k = std::f64::consts::PI / c.min_spacing();
        let omega = (p.g * k + p.sigma * k.powi(3) / p.rho_f).sqrt();
        if omega > 0.0 {
            ratio = ratio.min(2.0 * std::f64::consts::PI / omega);
        }
        if !ratio.is_finite() {
            return Err(SimError::Config("cannot pick a time step: set step.dt".into()).into());
        }
        step.cfl_target * ratio
    };
    Ok(match unit {
        Some(u) if u > 0.0 => u / (u / dt0 - 1e-9).ceil().max(1.0),
        _ => dt0,
    })
}

/// Diagnostics of a synchronized state.
pub fn diagnose(problem: &Problem, state: &SheetState, time: f64, cfl: f64) -> Result<DiagnosticsRecord, SimError> {
    let snap = Snapshot::new(problem, state.surface.clone(), state.vortices.clone())?;
    let kin = stepper::kinematics(&snap, &state.density)?;
    let energy = diagnostics::energy(&snap, &kin).ok().map(|e| e.wave());
    let compatibility_residual = match problem.formulation {
        Formulation::Dipole => {
            diagnostics::mu_compatibility_residual(&state.surface, &state.density, snap.bottom(), &kin.bottom_density)
        }
        Formulation::Vortex => 0.0,
    };
    Ok(DiagnosticsRecord {
        time,
        mass: diagnostics::mass(problem, &state.surface),
        energy,
        cfl,
        circulation_total: diagnostics::circulation_total(&snap, &kin),
        compatibility_residual,
    })
}

struct Recorder {
    dir: PathBuf,
    series: BufWriter<fs::File>,
    series_path: PathBuf,
    every: u64,
    snap_every: Option<u64>,
}

impl Recorder {
    fn row(&mut self, problem: &Problem, state: &SheetState, step: u64, time: f64, cfl: (f64, f64), iters: (usize, usize)) -> Result<(), RunError> {
        let record = diagnose(problem, state, time, cfl.0)?;
        let row = TimeSeriesRow { step, record, cfl_max: cfl.1, kick_iterations: iters.0, drift_iterations: iters.1 };
        writeln!(self.series, "{}", row.to_line()).map_err(io_err(&self.series_path))
    }

    /// Time-series row and snapshot when due.
    fn record(&mut self, problem: &Problem, state: &SheetState, step: u64, time: f64, cfl: (f64, f64), iters: (usize, usize)) -> Result<(), RunError> {
        if step % self.every == 0 {
            self.row(problem, state, step, time, cfl, iters)?;
        }
        if let Some(k) = self.snap_every {
            if step % k == 0 {
                write_file(&snapshot_path(&self.dir, step / k), &SavedState::new(state, time, step).to_text())?;
            }
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<(), RunError> {
        self.series.flush().map_err(io_err(&self.series_path))
    }
}

/// Runs a configuration to its end, an instability or a splash, writing
/// the artifacts under `cfg.output.dir`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let (state, t0) = initial_state(cfg, &problem)?;
    let end = cfg.end_time()?;
    let unit = cfg.output.snapshot_interval.or(end.map(|e| e - t0));
    if unit.is_some_and(|u| u <= 0.0) {
        return Err(SimError::Config("end time must lie after the initial time".into()).into());
    }
    if let (Some(e), Some(u), false) = (end, cfg.output.snapshot_interval, cfg.end.until_instability) {
        let k = (e - t0) / u;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return Err(SimError::Config("the run length must be a whole number of snapshot intervals".into()).into());
        }
    }
    let dt = choose_dt(&problem, &state, &cfg.step, unit)?;
    let step_cfg = StepConfig { dt, ..cfg.step };
    let steps_total = end.map(|e| ((e - t0) / dt).round() as u64);
    let limit = match (steps_total, cfg.end.max_steps) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };

    let dir = &cfg.output.dir;
    fs::create_dir_all(dir.join(artifacts::SNAPSHOT_DIR)).map_err(io_err(dir))?;
    let detector = InstabilityDetector::new(&state, cfg.instability);
    let mut meta = RunMetadata {
        version: env!("CARGO_PKG_VERSION").to_string(),
        dt,
        t0,
        end_time: end,
        initial_min_spacing: detector.min_spacing0,
        initial_max_sheet: detector.max_sheet0,
        outcome: None,
        config: cfg.clone(),
    };
    let meta_path = dir.join(artifacts::METADATA_FILE);
    write_file(&meta_path, &meta.to_toml())?;
    let series_path = dir.join(artifacts::TIME_SERIES_FILE);
    let file = fs::File::create(&series_path).map_err(io_err(&series_path))?;
    let mut rec = Recorder {
        dir: dir.clone(),
        series: BufWriter::new(file),
        series_path,
        every: cfg.output.diagnostics_every as u64,
        snap_every: cfg.output.snapshot_interval.map(|i| ((i / dt).round() as u64).max(1)),
    };
    writeln!(rec.series, "{}", artifacts::TIME_SERIES_HEADER).map_err(io_err(&rec.series_path))?;
    rec.record(&problem, &state, 0, t0, (0.0, 0.0), (0, 0))?;
    log::info!("{}: dt = {dt:.6e}, end = {end:?}, N = {}", dir.display(), state.surface.len());

    let mut last = (state.clone(), t0, 0u64);
    let outcome = match Stepper::new(&problem, step_cfg, state, t0) {
        Err(e) => breakdown(e, t0, 0),
        Ok(mut stepper) => step_loop(cfg, &problem, &mut stepper, &detector, &mut rec, limit, &mut last)?,
    };
    rec.flush()?;
    write_file(&final_snapshot_path(dir), &SavedState::new(&last.0, last.1, last.2).to_text())?;
    log::info!("{}: {outcome}", dir.display());
    meta.outcome = Some(outcome.clone());
    write_file(&meta_path, &meta.to_toml())?;
    Ok(RunSummary { dir: dir.clone(), dt, outcome, final_state: last.0, final_time: last.1 })
}

fn breakdown(e: SimError, time: f64, steps: u64) -> Outcome {
    if detect::is_breakdown(&e) {
        Outcome::Instability { time, steps, reason: e.to_string() }
    } else {
        Outcome::Failed { time, steps, reason: e.to_string() }
    }
}

fn step_loop(
    cfg: &RunConfig,
    problem: &Problem,
    stepper: &mut Stepper<'_>,
    detector: &InstabilityDetector,
    rec: &mut Recorder,
    limit: Option<u64>,
    last: &mut (SheetState, f64, u64),
) -> Result<Outcome, RunError> {
    let mut cfl = (0.0, 0.0);
    loop {
        let n = stepper.steps() as u64;
        if limit == Some(n) {
            break;
        }
        let report = match stepper.step() {
            Ok(r) => r,
            Err(e) => return Ok(breakdown(e, last.1, last.2)),
        };
        // report.synced sits at step n; step 0 was recorded from the exact
        // initial state
        if let Some(reason) = detector.check(&report.synced) {
            return Ok(Outcome::Instability { time: last.1, steps: last.2, reason });
        }
        cfl = (report.cfl, report.cfl_max);
        if n > 0 {
            *last = (report.synced.clone(), report.time, n);
            rec.record(problem, &report.synced, n, report.time, (report.cfl, report.cfl_max), (report.kick_iterations, report.drift_iterations))?;
        }
        if cfg.instability.splash && detect_splash(&stepper.staggered().surface) {
            return Ok(Outcome::Splash { time: stepper.time(), steps: n + 1 });
        }
        if n % 100 == 0 {
            log::debug!("t = {:.5} step {n} cfl {:.4} iterations {}/{}", report.time, report.cfl_max, report.kick_iterations, report.drift_iterations);
        }
    }
    let n = stepper.steps() as u64;
    let time = stepper.time();
    let synced = match stepper.synchronize() {
        Ok(s) => s,
        Err(e) => return Ok(breakdown(e, last.1, last.2)),
    };
    if let Some(reason) = detector.check(&synced) {
        return Ok(Outcome::Instability { time: last.1, steps: last.2, reason });
    }
    if n > 0 {
        rec.record(problem, &synced, n, time, cfl, (0, 0))?;
        *last = (synced, time, n);
    }
    Ok(Outcome::Completed { time, steps: n })
}
