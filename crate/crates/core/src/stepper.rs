//! Staggered Verlet integration. Positions live at integer times, the sheet
//! density at half times; each half is an implicit midpoint update solved by
//! plain fixed-point relaxation.

use serde::{Deserialize, Serialize};

use crate::dipole_dynamics::{self, oec_smooth};
use crate::error::{Result, SimError};
use crate::geometry::{Curve, C64};
use crate::model::{Formulation, Kinematics, Problem, SheetState};
use crate::regularize::{filter_curve, fourier_filter, Regularizer};
use crate::snapshot::Snapshot;
use crate::vortex_dynamics;

const STALL_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepConfig {
    pub dt: f64,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iters: usize,
    /// CFL used to pick `dt` when a run gives none.
    pub cfl_target: f64,
    pub oec: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig { dt: 0.0, fixed_point_tol: 1e-12, fixed_point_max_iters: 50, cfl_target: 0.1, oec: false }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(SimError::Config("dt must be finite and nonzero".into()));
        }
        if !(self.fixed_point_tol > 0.0) || self.fixed_point_max_iters == 0 {
            return Err(SimError::Config("fixed point needs tol > 0 and at least one iteration".into()));
        }
        if !(self.cfl_target > 0.0 && self.cfl_target.is_finite()) {
            return Err(SimError::Config("cfl_target must be positive".into()));
        }
        Ok(())
    }
}

/// `min_i |zdot_i| dt / (|z_e,i| de)`, as used for the stability envelope.
pub fn cfl_number(zdot: &[C64], surface: &Curve, dt: f64) -> f64 {
    cfl_values(zdot, surface, dt).fold(f64::INFINITY, f64::min)
}

/// Max over the nodes of the same ratio.
pub fn cfl_max(zdot: &[C64], surface: &Curve, dt: f64) -> f64 {
    cfl_values(zdot, surface, dt).fold(0.0, f64::max)
}

fn cfl_values<'a>(zdot: &'a [C64], surface: &'a Curve, dt: f64) -> impl Iterator<Item = f64> + 'a {
    let de = surface.de();
    zdot.iter().zip(surface.d1()).map(move |(u, ze)| u.norm() * dt.abs() / (ze.norm() * de))
}

/// Kinematics of the formulation in `problem`.
pub fn kinematics(snap: &Snapshot<'_>, density: &[f64]) -> Result<Kinematics> {
    match snap.problem.formulation {
        Formulation::Vortex => vortex_dynamics::kinematics(snap, density),
        Formulation::Dipole => dipole_dynamics::kinematics(snap, density),
    }
}

/// Density rate `G(Z, X)` and the kinematics it was built from.
pub fn density_rate(snap: &Snapshot<'_>, density: &[f64], warm: Option<&[f64]>, oec: bool) -> Result<(Vec<f64>, Kinematics)> {
    let kin = kinematics(snap, density)?;
    let (rate, _) = match snap.problem.formulation {
        Formulation::Vortex => vortex_dynamics::dt_gamma_s(snap, &kin, warm)?,
        Formulation::Dipole => dipole_dynamics::dt_mu_s(snap, density, &kin, warm)?,
    };
    let rate = if oec { oec_smooth(&rate) } else { rate };
    if rate.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFinite("density rate"));
    }
    Ok((rate, kin))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn sup_diff_c(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Result of one completed step.
#[derive(Debug, Clone)]
pub struct StepReport {
    /// Time of `synced`.
    pub time: f64,
    /// Positions and density at the same integer time.
    pub synced: SheetState,
    pub kick_iterations: usize,
    pub drift_iterations: usize,
    /// CFL of the drift, min- and max-based.
    pub cfl: f64,
    pub cfl_max: f64,
}

pub struct Stepper<'p> {
    problem: &'p Problem,
    cfg: StepConfig,
    /// Positions at `time`, density at `time - dt/2`.
    state: SheetState,
    time: f64,
    t0: f64,
    steps: usize,
    min_ze0: f64,
    warm: Option<Vec<f64>>,
}

impl<'p> Stepper<'p> {
    /// Starts from a synchronized state at `t0`, bootstrapping the half-step
    /// density by one explicit Euler half step.
    pub fn new(problem: &'p Problem, cfg: StepConfig, state: SheetState, t0: f64) -> Result<Self> {
        cfg.validate()?;
        state.check()?;
        if state.mode != problem.formulation {
            return Err(SimError::Config("state and problem use different formulations".into()));
        }
        let min_ze0 = state.surface.d1().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        let snap = Snapshot::new(problem, state.surface.clone(), state.vortices.clone())?;
        let (g, kin) = density_rate(&snap, &state.density, None, cfg.oec)?;
        let mut state = state;
        state.density = state.density.iter().zip(&g).map(|(x, r)| x - 0.5 * cfg.dt * r).collect();
        state.bottom_density = kin.bottom_density;
        Ok(Stepper { problem, cfg, state, time: t0, t0, steps: 0, min_ze0, warm: Some(g) })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    /// Positions at `time()`, density half a step behind.
    pub fn staggered(&self) -> &SheetState {
        &self.state
    }

    fn tolerance(&self, x: &[f64]) -> f64 {
        self.cfg.fixed_point_tol * sup(x).max(1.0)
    }

    /// Converged, or stalled at the round-off floor of the right-hand side:
    /// no longer contracting but within `STALL_FACTOR` of the tolerance.
    fn settled(&self, inc: f64, prev: f64, tol: f64) -> bool {
        inc <= tol || (inc >= prev && inc <= STALL_FACTOR * tol)
    }

    /// `X+ = X- + dt G(Z, (X- + X+)/2)` with positions frozen. Returns `X+`,
    /// the iteration count and the kinematics at the midpoint density.
    pub(crate) fn kick(&mut self, z: &SheetState, x_minus: &[f64], dt: f64) -> Result<(Vec<f64>, usize, Kinematics)> {
        let snap = Snapshot::new(self.problem, z.surface.clone(), z.vortices.clone())?;
        let mut x_plus: Vec<f64> = match &self.warm {
            Some(g) if g.len() == x_minus.len() => x_minus.iter().zip(g).map(|(x, r)| x + dt * r).collect(),
            _ => x_minus.to_vec(),
        };
        let mut inc = f64::INFINITY;
        for it in 1..=self.cfg.fixed_point_max_iters {
            let prev = inc;
            let mid: Vec<f64> = x_minus.iter().zip(&x_plus).map(|(a, b)| 0.5 * (a + b)).collect();
            let (g, kin) = density_rate(&snap, &mid, self.warm.as_deref(), self.cfg.oec)?;
            let next: Vec<f64> = x_minus.iter().zip(&g).map(|(x, r)| x + dt * r).collect();
            inc = sup_diff(&next, &x_plus);
            x_plus = next;
            self.warm = Some(g);
            if self.settled(inc, prev, self.tolerance(&x_plus)) {
                return Ok((x_plus, it, kin));
            }
            if !inc.is_finite() {
                break;
            }
        }
        Err(SimError::FixedPoint { iterations: self.cfg.fixed_point_max_iters, increment: inc })
    }

    /// `Z+ = Z + dt F((Z + Z+)/2, X)`. Returns `Z+` and the iteration count.
    pub(crate) fn drift(&self, z: &SheetState, x: &[f64], dt: f64) -> Result<(SheetState, usize, Vec<C64>)> {
        let z0 = z.positions();
        let mut z_plus = z0.clone();
        let mut inc = f64::INFINITY;
        for it in 1..=self.cfg.fixed_point_max_iters {
            let prev = inc;
            let mid: Vec<C64> = z0.iter().zip(&z_plus).map(|(a, b)| (a + b) * 0.5).collect();
            let mut zm = z.with_positions(&mid)?;
            zm.density = x.to_vec();
            let snap = Snapshot::new(self.problem, zm.surface.clone(), zm.vortices.clone())?;
            let kin = kinematics(&snap, x)?;
            let mut v = kin.zdot.clone();
            v.extend(&kin.vdot);
            let next: Vec<C64> = z0.iter().zip(&v).map(|(p, u)| p + u * dt).collect();
            if next.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
                return Err(SimError::NonFinite("positions"));
            }
            inc = sup_diff_c(&next, &z_plus);
            let scale = z0.iter().fold(1.0f64, |m, p| m.max(p.im.abs()));
            z_plus = next;
            if self.settled(inc, prev, self.cfg.fixed_point_tol * scale) {
                let mut out = z.with_positions(&z_plus)?;
                out.density = x.to_vec();
                return Ok((out, it, kin.zdot));
            }
        }
        Err(SimError::FixedPoint { iterations: self.cfg.fixed_point_max_iters, increment: inc })
    }

    fn check_geometry(&self, s: &Curve) -> Result<()> {
        for (i, ze) in s.d1().iter().enumerate() {
            let ratio = ze.norm() / self.min_ze0;
            if !(ratio >= 1e-3) {
                return Err(SimError::Degenerate { index: i, ratio });
            }
        }
        Ok(())
    }

    /// One Verlet step. The report carries the synchronized state at the
    /// time the step started from.
    pub fn step(&mut self) -> Result<StepReport> {
        let dt = self.cfg.dt;
        let z = self.state.clone();
        let x_minus = std::mem::take(&mut self.state.density);
        let kicked = self.kick(&z, &x_minus, dt);
        self.state.density = x_minus;
        let (x_plus, kick_iterations, kin) = kicked?;
        let mut synced = z.clone();
        synced.density = self.state.density.iter().zip(&x_plus).map(|(a, b)| 0.5 * (a + b)).collect();
        synced.bottom_density = kin.bottom_density;
        let (mut next, drift_iterations, zdot) = self.drift(&z, &x_plus, dt)?;
        if let Regularizer::Filter(spec) = &self.problem.regularizer {
            next.surface = filter_curve(&next.surface, spec)?;
            next.density = fourier_filter(&next.density, spec);
        }
        self.check_geometry(&next.surface)?;
        let report = StepReport {
            time: self.time,
            synced,
            kick_iterations,
            drift_iterations,
            cfl: cfl_number(&zdot, &z.surface, dt),
            cfl_max: cfl_max(&zdot, &z.surface, dt),
        };
        self.state = next;
        self.steps += 1;
        // no accumulated round-off in the clock
        self.time = self.t0 + self.steps as f64 * dt;
        Ok(report)
    }

    /// Density at the current integer time, by an implicit half kick.
    pub fn synchronize(&mut self) -> Result<SheetState> {
        let z = self.state.clone();
        let (x, _, kin) = self.kick(&z, &z.density, 0.5 * self.cfg.dt)?;
        let mut s = z;
        s.density = x;
        s.bottom_density = kin.bottom_density;
        Ok(s)
    }
}
