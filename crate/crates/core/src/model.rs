//! Physical constants and the dynamic state shared by both formulations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::boundary_solve::BackgroundField;
use crate::error::{Result, SimError};
use crate::geometry::{Curve, C64};
use crate::kernels::{KernelContext, PointVortex};
use crate::operators::{assemble_astar_b, assemble_bb, neumann_rate, DenseOperator, IterOptions, LuFactor};
use crate::regularize::{OffsetSpec, Regularizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Vortex,
    Dipole,
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Formulation::Vortex => "vortex",
            Formulation::Dipole => "dipole",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysParams {
    pub g: f64,
    pub rho_f: f64,
    pub rho_a: f64,
    pub sigma: f64,
    /// Circulation along the bottom.
    pub gamma: f64,
    /// Uniform vorticity in the fluid.
    pub omega0: f64,
    /// Weight of the fluid-side velocity in the node motion.
    pub alpha: f64,
    pub l: f64,
    pub h0: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams {
            g: 1.0,
            rho_f: 1.0,
            rho_a: 0.0,
            sigma: 0.0,
            gamma: 0.0,
            omega0: 0.0,
            alpha: 1.0,
            l: 2.0 * PI,
            h0: 1.0,
        }
    }
}

impl PhysParams {
    pub fn atwood(&self) -> f64 {
        (self.rho_f - self.rho_a) / (self.rho_f + self.rho_a)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        let all = [self.g, self.rho_f, self.rho_a, self.sigma, self.gamma, self.omega0, self.alpha, self.l, self.h0];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("physical parameters must be finite");
        }
        if self.rho_f <= 0.0 {
            return bad("rho_f must be positive");
        }
        if self.rho_a < 0.0 {
            return bad("rho_a must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if self.l <= 0.0 {
            return bad("period L must be positive");
        }
        if self.sigma < 0.0 {
            return bad("surface tension must be non-negative");
        }
        Ok(())
    }

    pub fn single_fluid(&self) -> bool {
        self.rho_a == 0.0
    }
}

/// Full dynamic state: surface, its density (`gamma_S` or `mu_S`), the
/// cached bottom density and the point vortices.
#[derive(Debug, Clone, PartialEq)]
pub struct SheetState {
    pub surface: Curve,
    pub density: Vec<f64>,
    pub bottom_density: Vec<f64>,
    pub vortices: Vec<PointVortex>,
    pub mode: Formulation,
}

impl SheetState {
    pub fn new(surface: Curve, density: Vec<f64>, mode: Formulation) -> Result<Self> {
        let s = SheetState { surface, density, bottom_density: Vec::new(), vortices: Vec::new(), mode };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        if self.density.len() != self.surface.len() {
            return Err(SimError::Config(format!(
                "density has {} values for {} surface nodes",
                self.density.len(),
                self.surface.len()
            )));
        }
        if self.density.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinite("surface density"));
        }
        if self.mode == Formulation::Dipole && !self.vortices.is_empty() {
            return Err(SimError::Config("point vortices need the vortex formulation".into()));
        }
        Ok(())
    }

    /// Surface nodes followed by vortex positions.
    pub fn positions(&self) -> Vec<C64> {
        let mut z = self.surface.points().to_vec();
        z.extend(self.vortices.iter().map(|v| v.z));
        z
    }

    pub fn with_positions(&self, z: &[C64]) -> Result<SheetState> {
        let n = self.surface.len();
        let surface = Curve::with_step(z[..n].to_vec(), self.surface.period(), self.surface.de())?;
        let vortices = self
            .vortices
            .iter()
            .zip(&z[n..])
            .map(|(v, p)| PointVortex { z: *p, strength: v.strength })
            .collect();
        Ok(SheetState { surface, density: self.density.clone(), bottom_density: self.bottom_density.clone(), vortices, mode: self.mode })
    }
}

/// Velocities of one configuration, at primal surface nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    /// Node velocity (not conjugated).
    pub zdot: Vec<C64>,
    pub vdot: Vec<C64>,
    /// Conjugated one-sided traces of the sheet field, fluid and air side.
    pub u_f: Vec<C64>,
    pub u_a: Vec<C64>,
    /// Conjugated background velocity (dipole only, else empty).
    pub u_bg: Vec<C64>,
    /// `gamma_B` or `mu_B`.
    pub bottom_density: Vec<f64>,
    /// Vortex density actually carried by the surface (`gamma_S` or `d mu_S / de`).
    pub sheet: Vec<f64>,
}

/// Bottom operators, fixed for a run.
#[derive(Debug, Clone)]
pub struct OperatorCache {
    pub curve: Curve,
    pub dual: Curve,
    pub astar: DenseOperator,
    /// Estimate of `|I - 2 A*_B|`.
    pub astar_rate: f64,
    pub astar_lu: LuFactor,
    pub bb: DenseOperator,
    pub bb_lu: LuFactor,
}

impl OperatorCache {
    pub fn new(ctx: &KernelContext, bottom: Curve) -> Result<Self> {
        let dual = bottom.dual();
        let astar = assemble_astar_b(ctx, &bottom);
        let astar_rate = neumann_rate(&astar, 20);
        let astar_lu = astar.lu()?;
        let bb = assemble_bb(ctx, &bottom, &dual);
        let bb_lu = bb.lu()?;
        Ok(OperatorCache { curve: bottom, dual, astar, astar_rate, astar_lu, bb, bb_lu })
    }

    pub fn len(&self) -> usize {
        self.curve.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curve.is_empty()
    }

    pub fn is_flat(&self) -> bool {
        let y0 = self.curve.points()[0].im;
        self.curve.points().iter().all(|z| (z.im - y0).abs() <= 1e-14 * (1.0 + y0.abs()))
    }
}

/// Everything fixed over a run: physics, bottom operators, background field
/// and formulation.
#[derive(Debug, Clone)]
pub struct Problem {
    pub params: PhysParams,
    pub ctx: KernelContext,
    pub ops: Option<OperatorCache>,
    pub background: BackgroundField,
    pub formulation: Formulation,
    pub regularizer: Regularizer,
    pub solve: IterOptions,
}

impl Problem {
    pub fn new(
        params: PhysParams,
        bottom: Option<Curve>,
        background: BackgroundField,
        formulation: Formulation,
        regularizer: Regularizer,
    ) -> Result<Self> {
        params.validate()?;
        let ctx = KernelContext::new(params.l);
        let ops = match bottom {
            Some(b) => {
                if b.period() != params.l {
                    return Err(SimError::Config("bottom period differs from L".into()));
                }
                Some(OperatorCache::new(&ctx, b)?)
            }
            None => None,
        };
        let p = Problem { params, ctx, ops, background, formulation, regularizer, solve: IterOptions::default() };
        p.check_modes()?;
        Ok(p)
    }

    fn check_modes(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        let p = &self.params;
        match self.formulation {
            Formulation::Vortex => {
                if !matches!(self.background, BackgroundField::Zero) {
                    return bad("the vortex formulation carries circulation on its sheets; background must be zero");
                }
                if p.omega0 != 0.0 && self.ops.is_none() {
                    return bad("uniform vorticity needs a bottom (finite fluid area)");
                }
            }
            Formulation::Dipole => {
                if p.omega0 != 0.0 {
                    return bad("the dipole formulation supports no uniform vorticity");
                }
                if !p.single_fluid() && !matches!(self.background, BackgroundField::Zero) {
                    return bad("bi-fluid dipole supports no circulation or vorticity");
                }
                if let Regularizer::Filter(_) | Regularizer::Offset(_) = self.regularizer {
                    return bad("filter and offset baselines apply to the vortex formulation");
                }
                self.background.check(self)?;
            }
        }
        if let Regularizer::Offset(o) = &self.regularizer {
            o.validate()?;
            if p.atwood() != 1.0 || p.alpha != 1.0 {
                return bad("the offset baseline needs a single fluid and alpha = 1");
            }
            if p.omega0 != 0.0 {
                return bad("the offset baseline does not support uniform vorticity");
            }
        }
        if let Regularizer::Filter(f) = &self.regularizer {
            f.validate()?;
        }
        Ok(())
    }

    pub fn offset(&self) -> Option<&OffsetSpec> {
        match &self.regularizer {
            Regularizer::Offset(o) => Some(o),
            _ => None,
        }
    }

    pub fn deep(&self) -> bool {
        self.ops.is_none()
    }
}

/// Area between the surface and the bottom (polygon area per period), or
/// the signed area above `y = 0` minus nothing in deep water.
pub fn fluid_area(surface: &Curve, bottom: Option<&Curve>) -> f64 {
    let line = |c: &Curve| -> f64 { c.points().iter().zip(c.d1()).map(|(z, ze)| z.im * ze.re).sum::<f64>() * c.de() };
    line(surface) - bottom.map_or(0.0, line)
}
