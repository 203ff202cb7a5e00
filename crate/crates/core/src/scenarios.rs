//! Initial surfaces and normal-velocity data for the test cases: linear and
//! second-order Stokes waves, the periodic Green-Naghdi soliton, and the
//! large-amplitude breaking wave.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::boundary_solve::{project_compatible, solve_initial_gamma_s, solve_initial_mu_s, BackgroundField};
use crate::error::{Result, SimError};
use crate::geometry::{graph_points, Curve};
use crate::model::{Formulation, PhysParams, Problem, SheetState};
use crate::regularize::Regularizer;
use crate::specfun::{solve_cnoidal_m, Cnoidal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    LinearWave,
    Stokes2,
    Cnoidal,
    Breaking,
    /// Initial state read from a snapshot file.
    Custom,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScenarioKind::LinearWave => "linear_wave",
            ScenarioKind::Stokes2 => "stokes2",
            ScenarioKind::Cnoidal => "cnoidal",
            ScenarioKind::Breaking => "breaking",
            ScenarioKind::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawSpec")]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    #[serde(rename = "A")]
    pub a: f64,
    pub k: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub h0: f64,
    pub g: f64,
    pub n_s: usize,
    /// Bottom resolution; defaults to `n_s`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_b: Option<usize>,
    pub formulation: Formulation,
    pub deep_water: bool,
}

// the default period depends on the kind
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: ScenarioKind,
    #[serde(rename = "A")]
    a: f64,
    #[serde(default = "one")]
    k: f64,
    #[serde(rename = "L", default)]
    l: Option<f64>,
    #[serde(default = "one")]
    h0: f64,
    #[serde(default = "one")]
    g: f64,
    n_s: usize,
    #[serde(default)]
    n_b: Option<usize>,
    formulation: Formulation,
    #[serde(default)]
    deep_water: bool,
}

impl From<RawSpec> for ScenarioSpec {
    fn from(r: RawSpec) -> Self {
        let base = ScenarioSpec::new(r.kind, r.a, r.n_s, r.formulation);
        ScenarioSpec { k: r.k, l: r.l.unwrap_or(base.l), h0: r.h0, g: r.g, n_b: r.n_b, deep_water: r.deep_water, ..base }
    }
}

fn one() -> f64 {
    1.0
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, a: f64, n_s: usize, formulation: Formulation) -> Self {
        let l = if kind == ScenarioKind::Cnoidal { 40.0 * PI } else { 2.0 * PI };
        ScenarioSpec { kind, a, k: 1.0, l, h0: 1.0, g: 1.0, n_s, n_b: None, formulation, deep_water: false }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::Config(m));
        let all = [self.a, self.k, self.l, self.h0, self.g];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("scenario parameters must be finite".into());
        }
        if self.a < 0.0 || self.k <= 0.0 || self.l <= 0.0 || self.g <= 0.0 || self.h0 <= 0.0 {
            return bad("scenario needs A >= 0 and k, L, g, h0 > 0".into());
        }
        let waves = self.k * self.l / (2.0 * PI);
        if self.kind != ScenarioKind::Cnoidal && (waves - waves.round()).abs() > 1e-9 {
            return bad(format!("k L / 2pi = {waves} is not an integer"));
        }
        if self.n_s < 8 || self.n_b.is_some_and(|n| n < 8) {
            return bad("resolutions must be at least 8".into());
        }
        if self.kind == ScenarioKind::Cnoidal && (self.deep_water || self.a == 0.0) {
            return bad("the soliton needs finite depth and A > 0".into());
        }
        Ok(())
    }

    pub fn n_b(&self) -> usize {
        self.n_b.unwrap_or(self.n_s)
    }

    fn tanh_kh(&self) -> f64 {
        if self.deep_water {
            1.0
        } else {
            (self.k * self.h0).tanh()
        }
    }

    /// Linear angular frequency `sqrt(g k tanh k h0)`.
    pub fn omega(&self) -> f64 {
        (self.g * self.k * self.tanh_kh()).sqrt()
    }

    /// Natural run length: ten linear periods for the Stokes cases, one
    /// passage `L / c` for the soliton, none for breaking.
    pub fn natural_end(&self) -> Result<Option<f64>> {
        Ok(match self.kind {
            ScenarioKind::LinearWave | ScenarioKind::Stokes2 => Some(10.0 * 2.0 * PI / self.omega()),
            ScenarioKind::Cnoidal => Some(self.l / self.cnoidal()?.c),
            ScenarioKind::Breaking | ScenarioKind::Custom => None,
        })
    }

    /// Elevation `eta(x, t)` of the wave the initial data approximates,
    /// translated at its phase speed; none for breaking and custom runs.
    pub fn travelling_wave(&self) -> Result<Option<Box<dyn Fn(f64, f64) -> f64 + Send + Sync>>> {
        let (a, k, c) = (self.a, self.k, self.omega() / self.k);
        Ok(match self.kind {
            ScenarioKind::LinearWave => Some(Box::new(move |x, t| a * (k * (x - c * t)).cos())),
            ScenarioKind::Stokes2 => {
                let t3 = self.tanh_kh();
                let c2 = k * a * a * (3.0 - t3 * t3) / (4.0 * t3 * t3 * t3);
                Some(Box::new(move |x, t| {
                    let p = k * (x - c * t);
                    a * p.cos() + c2 * (2.0 * p).cos()
                }))
            }
            ScenarioKind::Cnoidal => {
                let cw = self.cnoidal()?;
                let l = self.l;
                Some(Box::new(move |x, t| cw.eta(x, t, a, l)))
            }
            ScenarioKind::Breaking | ScenarioKind::Custom => None,
        })
    }

    pub fn cnoidal(&self) -> Result<Cnoidal> {
        let p = solve_cnoidal_m(self.l, self.a, self.h0, self.g)?;
        Ok(Cnoidal::at(p, self.a, self.h0, self.g))
    }

    /// Flat bottom at `-h0`, or none in deep water.
    pub fn bottom(&self) -> Result<Option<Curve>> {
        if self.deep_water {
            return Ok(None);
        }
        Ok(Some(Curve::new(graph_points(self.n_b(), self.l, |_| -self.h0), self.l)?))
    }

    /// Surface and its compatible normal-velocity data.
    pub fn initial(&self) -> Result<(Curve, Vec<f64>)> {
        self.validate()?;
        match self.kind {
            ScenarioKind::LinearWave => linear_wave_ic(self),
            ScenarioKind::Stokes2 => stokes2_ic(self),
            ScenarioKind::Cnoidal => cnoidal_ic(self),
            ScenarioKind::Breaking => breaking_ic(self),
            ScenarioKind::Custom => Err(SimError::Config("custom scenarios start from a snapshot file".into())),
        }
    }

    /// Problem for this scenario: `g`, `L`, `h0` and the bottom come from the
    /// spec, the rest from `base`.
    pub fn problem_with(&self, base: PhysParams, regularizer: Regularizer) -> Result<Problem> {
        self.validate()?;
        let params = PhysParams { g: self.g, l: self.l, h0: self.h0, ..base };
        // the vortex form carries circulation on its sheets, the dipole form
        // in a background current (the scenario bottoms are flat)
        let background = match self.formulation {
            Formulation::Dipole if params.gamma != 0.0 => BackgroundField::Uniform { gamma: params.gamma },
            _ => BackgroundField::Zero,
        };
        Problem::new(params, self.bottom()?, background, self.formulation, regularizer)
    }

    pub fn problem(&self) -> Result<Problem> {
        self.problem_with(PhysParams::default(), Regularizer::None)
    }

    /// Initial state with densities solved from the normal-velocity data.
    pub fn initial_state(&self, problem: &Problem) -> Result<SheetState> {
        let (s, g) = self.initial()?;
        let (density, bottom_density) = match problem.formulation {
            Formulation::Vortex => solve_initial_gamma_s(problem, &s, &g, &[])?,
            Formulation::Dipole => solve_initial_mu_s(problem, &s, &g)?,
        };
        let mut state = SheetState::new(s, density, problem.formulation)?;
        state.bottom_density = bottom_density;
        Ok(state)
    }
}

fn xs(spec: &ScenarioSpec) -> Vec<f64> {
    (0..spec.n_s).map(|j| spec.l * j as f64 / spec.n_s as f64).collect()
}

fn sample(spec: &ScenarioSpec, eta: impl Fn(f64) -> f64, un: impl Fn(f64) -> f64) -> Result<(Curve, Vec<f64>)> {
    let s = Curve::new(graph_points(spec.n_s, spec.l, eta), spec.l)?;
    let g: Vec<f64> = xs(spec).into_iter().map(un).collect();
    let g = project_compatible(&s, &g);
    Ok((s, g))
}

/// `eta = A cos kx`, `u.n = A w sin kx`.
pub fn linear_wave_ic(spec: &ScenarioSpec) -> Result<(Curve, Vec<f64>)> {
    let (a, k, w) = (spec.a, spec.k, spec.omega());
    sample(spec, |x| a * (k * x).cos(), |x| a * w * (k * x).sin())
}

/// Normal velocity of the linear potential flow projected on the normal of
/// `A cos kx`.
fn full_normal(spec: &ScenarioSpec, x: f64) -> f64 {
    let (a, k, t) = (spec.a, spec.k, spec.tanh_kh());
    let w = spec.omega();
    let s = (k * x).sin();
    a * s * w / (1.0 + k * k * a * a * s * s).sqrt() * (1.0 + k * a / t * (k * x).cos())
}

/// Second-order Stokes elevation with the full-normal velocity data.
pub fn stokes2_ic(spec: &ScenarioSpec) -> Result<(Curve, Vec<f64>)> {
    let (a, k, t) = (spec.a, spec.k, spec.tanh_kh());
    let c2 = k * a * a * (3.0 - t * t) / (4.0 * t * t * t);
    sample(spec, |x| a * (k * x).cos() + c2 * (2.0 * k * x).cos(), |x| full_normal(spec, x))
}

/// Periodic Green-Naghdi soliton moving right at `c`.
pub fn cnoidal_ic(spec: &ScenarioSpec) -> Result<(Curve, Vec<f64>)> {
    let cw = spec.cnoidal()?;
    let (a, l) = (spec.a, spec.l);
    sample(
        spec,
        |x| cw.eta(x, 0.0, a, l),
        |x| {
            let ex = cw.eta_x(x, 0.0, a, l);
            -cw.c * ex / (1.0 + ex * ex).sqrt()
        },
    )
}

/// `eta = A cos kx` with the full-normal velocity data (default `A = 1/2`).
pub fn breaking_ic(spec: &ScenarioSpec) -> Result<(Curve, Vec<f64>)> {
    let (a, k) = (spec.a, spec.k);
    sample(spec, |x| a * (k * x).cos(), |x| full_normal(spec, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_solve::compatibility_mean;

    fn spec(kind: ScenarioKind, a: f64, n: usize) -> ScenarioSpec {
        ScenarioSpec::new(kind, a, n, Formulation::Dipole)
    }

    #[test]
    fn zero_amplitude_is_rest() {
        let (s, g) = spec(ScenarioKind::LinearWave, 0.0, 32).initial().unwrap();
        assert!(s.points().iter().all(|z| z.im == 0.0));
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dispersion_relation() {
        let s = spec(ScenarioKind::LinearWave, 1e-3, 32);
        assert!((s.omega() - 0.872_693_620_897_829_7).abs() < 1e-15, "{}", s.omega());
        let deep = ScenarioSpec { deep_water: true, ..s };
        assert_eq!(deep.omega(), 1.0);
    }

    #[test]
    fn data_is_compatible() {
        for kind in [ScenarioKind::LinearWave, ScenarioKind::Stokes2, ScenarioKind::Breaking] {
            let (s, g) = spec(kind, 0.5, 128).initial().unwrap();
            assert!(compatibility_mean(&s, &g).abs() < 1e-14, "{kind}");
        }
        let (s, g) = spec(ScenarioKind::Cnoidal, 0.1, 256).initial().unwrap();
        assert!(compatibility_mean(&s, &g).abs() < 1e-14);
    }

    #[test]
    fn stokes2_is_linear_at_first_order() {
        let a = 1e-3;
        let (s1, g1) = spec(ScenarioKind::LinearWave, a, 64).initial().unwrap();
        let (s2, g2) = spec(ScenarioKind::Stokes2, a, 64).initial().unwrap();
        for i in 0..64 {
            assert!((s1.points()[i].im - s2.points()[i].im).abs() < 2.0 * a * a);
            assert!((g1[i] - g2[i]).abs() < 2.0 * a * a);
        }
    }

    #[test]
    fn stokes2_second_harmonic() {
        // (3 - tanh^2 1) / (4 tanh^3 1) = 1.369556..., times k A^2
        let a = 1e-2;
        let n = 64;
        let (s, _) = spec(ScenarioKind::Stokes2, a, n).initial().unwrap();
        let c2: f64 = s.points().iter().map(|z| z.im * (2.0 * z.re).cos()).sum::<f64>() * 2.0 / n as f64;
        let t = 1f64.tanh();
        let exact = a * a * (3.0 - t * t) / (4.0 * t * t * t);
        assert!((c2 - exact).abs() < 1e-15, "{c2} {exact}");
        assert!((exact - 1.369_556_525_044_18e-4).abs() < 1e-17);
    }

    #[test]
    fn breaking_crest_and_small_limit() {
        let (s, _) = spec(ScenarioKind::Breaking, 0.5, 64).initial().unwrap();
        assert_eq!(s.points()[0].im, 0.5);
        let a = 1e-4;
        let (_, g1) = spec(ScenarioKind::LinearWave, a, 64).initial().unwrap();
        let (_, g2) = spec(ScenarioKind::Breaking, a, 64).initial().unwrap();
        assert!(g1.iter().zip(&g2).all(|(x, y)| (x - y).abs() < 2.0 * a * a));
    }

    #[test]
    fn soliton_shape_and_period() {
        let sp = spec(ScenarioKind::Cnoidal, 0.1, 1024);
        let (s, _) = sp.initial().unwrap();
        let hi = s.points().iter().map(|z| z.im).fold(f64::MIN, f64::max);
        let lo = s.points().iter().map(|z| z.im).fold(f64::MAX, f64::min);
        assert!((hi - lo - 0.1).abs() < 1e-6, "{}", hi - lo);
        let mean: f64 = s.points().iter().map(|z| z.im).sum::<f64>() / 1024.0;
        assert!(mean.abs() < 1e-10, "{mean}");
        assert!((sp.natural_end().unwrap().unwrap() - 120.8763).abs() < 1e-3);
    }

    #[test]
    fn validation() {
        assert!(ScenarioSpec { k: 1.5, ..spec(ScenarioKind::LinearWave, 0.1, 32) }.validate().is_err());
        assert!(spec(ScenarioKind::Custom, 0.1, 32).initial().is_err());
        assert!(ScenarioSpec { deep_water: true, ..spec(ScenarioKind::Cnoidal, 0.1, 32) }.validate().is_err());
    }
}
