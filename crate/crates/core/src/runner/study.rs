//! Batches of runs: resolution studies measured with the Hausdorff
//! distance, and the breaking-wave stability table.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::artifacts::fmt_f64;
use super::config::RunConfig;
use super::{load_metadata, load_snapshot, run, snapshot_path, write_file, Outcome, RunError};
use crate::diagnostics::hausdorff;
use crate::error::SimError;
use crate::model::Formulation;
use crate::regularize::{FilterSpec, Regularizer};
use crate::scenarios::{ScenarioKind, ScenarioSpec};

/// Runs `cfg` unless `reuse` is set and a finished run of the same config
/// sits in its directory.
pub fn run_or_reuse(cfg: &RunConfig, reuse: bool) -> Result<Outcome, RunError> {
    if reuse {
        if let Ok(meta) = load_metadata(&cfg.output.dir) {
            if meta.config == *cfg {
                if let Some(o) = meta.outcome {
                    log::info!("{}: reusing ({o})", cfg.output.dir.display());
                    return Ok(o);
                }
            }
        }
    }
    Ok(run(cfg)?.outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub ns: Vec<usize>,
    pub reference_n: usize,
    pub times: Vec<f64>,
    /// `errors[i][k]`: resolution `ns[i]` at `times[k]`; `None` when a run
    /// stopped before that time.
    pub errors: Vec<Vec<Option<f64>>>,
    /// Least-squares slope of `-log error` against `log N`, per time.
    pub slopes: Vec<Option<f64>>,
}

impl ConvergenceTable {
    pub fn complete(&self) -> bool {
        self.errors.iter().all(|r| r.iter().all(Option::is_some))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# Hausdorff error against N = {}\n# N", self.reference_n);
        for t in &self.times {
            let _ = write!(out, " t={t}");
        }
        out.push('\n');
        for (n, row) in self.ns.iter().zip(&self.errors) {
            let _ = write!(out, "{n}");
            for e in row {
                let _ = write!(out, " {}", e.map_or("missing".to_string(), fmt_f64));
            }
            out.push('\n');
        }
        let _ = write!(out, "# slope");
        for s in &self.slopes {
            let _ = write!(out, " {}", s.map_or("n/a".to_string(), |v| format!("{v:.3}")));
        }
        out.push('\n');
        if !self.complete() {
            out.push_str("# partial table: some runs stopped early\n");
        }
        out
    }
}

/// Slope `p` of `e ~ C N^-p` by least squares in log-log.
pub fn fit_order(ns: &[usize], errors: &[Option<f64>]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(errors)
        .filter_map(|(n, e)| e.filter(|v| *v > 0.0).map(|v| ((*n as f64).ln(), v.ln())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    (den > 0.0).then(|| -num / den)
}

/// Step between the requested times: the configured snapshot interval if
/// every time is a whole multiple of it, else the smallest requested time.
fn interval_for(base: &RunConfig, times: &[f64]) -> Result<f64, SimError> {
    if times.is_empty() || times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(SimError::Config("comparison times must be positive".into()));
    }
    let divides = |unit: f64| {
        times.iter().all(|t| {
            let k = t / unit;
            (k - k.round()).abs() <= 1e-9 * k.max(1.0)
        })
    };
    let smallest = times.iter().copied().fold(f64::INFINITY, f64::min);
    base.output
        .snapshot_interval
        .into_iter()
        .chain([smallest])
        .find(|u| divides(*u))
        .ok_or_else(|| SimError::Config("comparison times must be multiples of the smallest one".into()))
}

pub fn resolution_config(base: &RunConfig, n: usize, unit: f64, end: f64) -> RunConfig {
    let mut cfg = base.clone();
    cfg.scenario.n_s = n;
    cfg.scenario.n_b = None;
    cfg.output.dir = base.output.dir.join(format!("n{n}"));
    cfg.output.snapshot_interval = Some(unit);
    cfg.end.time = Some(end);
    cfg
}

/// Runs `base` at every resolution in `ns` and at `reference_n`, then
/// measures each against the reference at `times`.
pub fn convergence_study(
    base: &RunConfig,
    ns: &[usize],
    reference_n: usize,
    times: &[f64],
    reuse: bool,
) -> Result<ConvergenceTable, RunError> {
    let unit = interval_for(base, times)?;
    let end = times.iter().copied().fold(0.0, f64::max);
    let mut all: Vec<usize> = ns.to_vec();
    all.push(reference_n);
    all.sort_unstable();
    all.dedup();
    let configs: Vec<RunConfig> = all.iter().map(|n| resolution_config(base, *n, unit, end)).collect();
    configs.par_iter().map(|c| run_or_reuse(c, reuse).map(|_| ())).collect::<Result<Vec<()>, RunError>>()?;

    let dir_of = |n: usize| base.output.dir.join(format!("n{n}"));
    let curve_at = |n: usize, t: f64| -> Option<crate::geometry::Curve> {
        let idx = (t / unit).round() as u64;
        load_snapshot(&snapshot_path(&dir_of(n), idx)).ok()?.curve().ok()
    };
    let reference: Vec<_> = times.iter().map(|t| curve_at(reference_n, *t)).collect();
    let errors: Vec<Vec<Option<f64>>> = ns
        .iter()
        .map(|n| {
            times
                .iter()
                .zip(&reference)
                .map(|(t, r)| Some(hausdorff(&curve_at(*n, *t)?, r.as_ref()?)))
                .collect()
        })
        .collect();
    let slopes = (0..times.len())
        .map(|k| fit_order(ns, &errors.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .collect();
    let table = ConvergenceTable { ns: ns.to_vec(), reference_n, times: times.to_vec(), errors, slopes };
    write_file(&base.output.dir.join("convergence.txt"), &table.to_text())?;
    Ok(table)
}

/// The four schemes compared on the breaking wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Vortex,
    Dipole,
    OecDipole,
    FVortex,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Vortex, Scheme::Dipole, Scheme::OecDipole, Scheme::FVortex];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Vortex => "vortex",
            Scheme::Dipole => "dipole",
            Scheme::OecDipole => "oec-dipole",
            Scheme::FVortex => "f-vortex",
        }
    }

    fn formulation(&self) -> Formulation {
        match self {
            Scheme::Vortex | Scheme::FVortex => Formulation::Vortex,
            Scheme::Dipole | Scheme::OecDipole => Formulation::Dipole,
        }
    }
}

/// Breaking-wave run of `scheme` at `n` nodes that stops at the first
/// instability or splash, or at `cap`.
pub fn breaking_config(dir: &Path, scheme: Scheme, n: usize, cap: f64) -> RunConfig {
    let spec = ScenarioSpec::new(ScenarioKind::Breaking, 0.5, n, scheme.formulation());
    let mut cfg = RunConfig::new(spec, dir.join(format!("{}-{n}", scheme.name())));
    cfg.step.oec = scheme == Scheme::OecDipole;
    if scheme == Scheme::FVortex {
        cfg.regularizer = Regularizer::Filter(FilterSpec::default());
    }
    cfg.end.time = Some(cap);
    cfg.end.until_instability = true;
    cfg.output.snapshot_interval = Some(0.5);
    cfg.output.diagnostics_every = 10;
    cfg
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1 {
    pub ns: Vec<usize>,
    pub cap: f64,
    /// `outcomes[i][s]` for `ns[i]` and `Scheme::ALL[s]`.
    pub outcomes: Vec<Vec<Outcome>>,
}

impl Table1 {
    /// Final time before breakdown; `None` when the run reached the cap.
    pub fn final_time(&self, i: usize, scheme: Scheme) -> Option<f64> {
        let s = Scheme::ALL.iter().position(|x| *x == scheme).expect("scheme listed");
        match &self.outcomes[i][s] {
            Outcome::Completed { .. } => None,
            o => Some(o.time()),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# final time before instability (s = splash, > = reached the cap)\n# N");
        for s in Scheme::ALL {
            let _ = write!(out, " {}", s.name());
        }
        out.push('\n');
        for (n, row) in self.ns.iter().zip(&self.outcomes) {
            let _ = write!(out, "{n}");
            for o in row {
                let cell = match o {
                    Outcome::Completed { time, .. } => format!(">{time:.2}"),
                    Outcome::Splash { time, .. } => format!("{time:.2}s"),
                    Outcome::Failed { .. } => "failed".to_string(),
                    Outcome::Instability { time, .. } => format!("{time:.2}"),
                };
                let _ = write!(out, " {cell}");
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the sixteen breaking-wave cases (four schemes, each `n`).
pub fn table1(dir: &Path, ns: &[usize], cap: f64, reuse: bool) -> Result<Table1, RunError> {
    let configs: Vec<(usize, Scheme, RunConfig)> = ns
        .iter()
        .flat_map(|n| Scheme::ALL.map(|s| (*n, s, breaking_config(dir, s, *n, cap))))
        .collect();
    let results: Vec<Outcome> = configs
        .par_iter()
        .map(|(_, _, c)| run_or_reuse(c, reuse))
        .collect::<Result<Vec<_>, RunError>>()?;
    let outcomes = results.chunks(Scheme::ALL.len()).map(|c| c.to_vec()).collect();
    let t = Table1 { ns: ns.to_vec(), cap, outcomes };
    write_file(&dir.join("table1.txt"), &t.to_text())?;
    Ok(t)
}
