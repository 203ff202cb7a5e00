use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::{Formulation, PhysParams, Problem};
use crate::regularize::Regularizer;
use crate::scenarios::{ScenarioKind, ScenarioSpec};
use crate::stepper::StepConfig;

/// Physical constants not fixed by the scenario (`g`, `L` and `h0` are).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    pub rho_f: f64,
    pub rho_a: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub omega0: f64,
    pub alpha: f64,
}

impl Default for Physics {
    fn default() -> Self {
        let p = PhysParams::default();
        Physics { rho_f: p.rho_f, rho_a: p.rho_a, sigma: p.sigma, gamma: p.gamma, omega0: p.omega0, alpha: p.alpha }
    }
}

impl Physics {
    pub fn params(&self) -> PhysParams {
        PhysParams {
            rho_f: self.rho_f,
            rho_a: self.rho_a,
            sigma: self.sigma,
            gamma: self.gamma,
            omega0: self.omega0,
            alpha: self.alpha,
            ..PhysParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Time between snapshots; the time step is shrunk to divide it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_interval: Option<f64>,
    /// Steps between time-series rows.
    #[serde(default = "one")]
    pub diagnostics_every: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EndConfig {
    /// Final time; defaults to the scenario's natural end.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    /// Run until an instability or splash; `time`, if any, is then a cap.
    pub until_instability: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
}

/// Thresholds of the blow-up detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstabilityConfig {
    /// Fires when the smallest node spacing drops below this fraction of
    /// its initial value.
    pub spacing_ratio: f64,
    /// Fires when the largest sheet strength exceeds this multiple of its
    /// initial value.
    pub growth_ratio: f64,
    pub splash: bool,
}

impl Default for InstabilityConfig {
    fn default() -> Self {
        InstabilityConfig { spacing_ratio: 1e-3, growth_ratio: 1e3, splash: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Start from this snapshot file (scenario kind `custom`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_snapshot: Option<PathBuf>,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub step: StepConfig,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub regularizer: Regularizer,
    pub output: OutputConfig,
    #[serde(default)]
    pub end: EndConfig,
    #[serde(default)]
    pub instability: InstabilityConfig,
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl RunConfig {
    /// A config with defaults everywhere but the scenario and output dir.
    pub fn new(scenario: ScenarioSpec, dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            initial_snapshot: None,
            scenario,
            step: StepConfig::default(),
            physics: Physics::default(),
            regularizer: Regularizer::None,
            output: OutputConfig { dir: dir.into(), snapshot_interval: None, diagnostics_every: 1 },
            end: EndConfig::default(),
            instability: InstabilityConfig::default(),
        }
    }

    pub fn formulation(&self) -> Formulation {
        self.scenario.formulation
    }

    /// Checks everything that does not need the initial state.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        self.scenario.validate()?;
        let custom = self.scenario.kind == ScenarioKind::Custom;
        if custom != self.initial_snapshot.is_some() {
            return bad("initial_snapshot is required for, and only for, the custom scenario");
        }
        if self.step.oec && self.formulation() != Formulation::Dipole {
            return bad("odd-even coupling applies to the dipole formulation");
        }
        if self.formulation() == Formulation::Dipole && self.regularizer != Regularizer::None {
            return bad("filter and offset baselines apply to the vortex formulation");
        }
        let s = &self.step;
        if !(s.dt >= 0.0 && s.dt.is_finite()) {
            return bad("step.dt must be >= 0 (0 picks it from cfl_target)");
        }
        if !positive(s.cfl_target) || !positive(s.fixed_point_tol) || s.fixed_point_max_iters == 0 {
            return bad("step needs cfl_target > 0, fixed_point_tol > 0 and fixed_point_max_iters > 0");
        }
        if self.output.snapshot_interval.is_some_and(|v| !positive(v)) {
            return bad("output.snapshot_interval must be positive");
        }
        if self.output.diagnostics_every == 0 {
            return bad("output.diagnostics_every must be at least 1");
        }
        if self.end.time.is_some_and(|v| !positive(v)) {
            return bad("end.time must be positive");
        }
        let i = &self.instability;
        if !positive(i.spacing_ratio) || i.spacing_ratio >= 1.0 || !positive(i.growth_ratio) || i.growth_ratio <= 1.0 {
            return bad("instability needs 0 < spacing_ratio < 1 and growth_ratio > 1");
        }
        if !self.end.until_instability && self.end.time.is_none() && self.end.max_steps.is_none() {
            let natural = self.scenario.natural_end()?;
            if natural.is_none() {
                return bad("this scenario has no natural end: set end.time, end.max_steps or end.until_instability");
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<Problem> {
        self.scenario.problem_with(self.physics.params(), self.regularizer)
    }

    /// End time: explicit, else the scenario's natural end.
    pub fn end_time(&self) -> Result<Option<f64>> {
        match self.end.time {
            Some(t) => Ok(Some(t)),
            None if self.end.until_instability => Ok(None),
            None => self.scenario.natural_end(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Parses and validates a run configuration.
pub fn parse_run_config(text: &str) -> std::result::Result<RunConfig, super::ParseError> {
    let cfg: RunConfig = toml::from_str(text).map_err(super::ParseError::toml)?;
    cfg.validate().map_err(|e| super::ParseError::invalid(e.to_string()))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
[scenario]
kind = "breaking"
A = 0.5
n_s = 256
formulation = "dipole"

[step]
oec = true

[output]
dir = "runs/breaking"
snapshot_interval = 0.5

[end]
time = 4.0
until_instability = true
"#;

    #[test]
    fn example_parses() {
        let c = parse_run_config(EXAMPLE).unwrap();
        assert_eq!(c.scenario.n_s, 256);
        assert!(c.step.oec);
        assert_eq!(c.step.dt, 0.0);
        assert_eq!(c.regularizer, Regularizer::None);
        assert_eq!(c.end_time().unwrap(), Some(4.0));
    }

    #[test]
    fn round_trip() {
        let c = parse_run_config(EXAMPLE).unwrap();
        assert_eq!(parse_run_config(&c.to_toml()).unwrap(), c);
        let mut f = c.clone();
        f.scenario.formulation = Formulation::Vortex;
        f.step.oec = false;
        f.regularizer = Regularizer::Filter(Default::default());
        f.physics.gamma = 0.1 + 0.2;
        assert_eq!(parse_run_config(&f.to_toml()).unwrap(), f);
    }

    #[test]
    fn inconsistent_configs_rejected() {
        let c = parse_run_config(EXAMPLE).unwrap();
        let mut v = c.clone();
        v.scenario.formulation = Formulation::Vortex;
        assert!(v.validate().is_err(), "oec with vortex");
        let mut e = c.clone();
        e.end = EndConfig::default();
        assert!(e.validate().is_err(), "breaking without an end");
        let mut s = c.clone();
        s.instability.spacing_ratio = 2.0;
        assert!(s.validate().is_err());
        let mut k = c;
        k.scenario.kind = ScenarioKind::Custom;
        assert!(k.validate().is_err(), "custom without snapshot");
        assert!(parse_run_config("[scenario]\nkind = \"breaking\"").is_err());
        assert!(parse_run_config(&EXAMPLE.replace("oec = true", "oec = true\nbogus = 1")).is_err());
    }

    #[test]
    fn filter_with_dipole_rejected() {
        let mut c = parse_run_config(EXAMPLE).unwrap();
        c.step.oec = false;
        c.regularizer = Regularizer::Filter(Default::default());
        assert!(c.validate().is_err());
    }
}
