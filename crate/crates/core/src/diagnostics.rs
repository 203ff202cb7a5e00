//! Conserved quantities, the Hausdorff error metric and the compatibility
//! residual of the dipole densities.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary_solve::{background_stream, background_velocity};
use crate::error::{Result, SimError};
use crate::geometry::{diff_periodic, Curve, C64};
use crate::kernels::{KernelContext, Side};
use crate::model::{fluid_area, Formulation, Kinematics, Problem};
use crate::snapshot::Snapshot;

/// One line of the run time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub mass: f64,
    /// Total energy minus the potential energy of the flat rest state with
    /// the same mass. `None` when no stream function is available.
    pub energy: Option<f64>,
    pub cfl: f64,
    pub circulation_total: f64,
    pub compatibility_residual: f64,
}

pub fn mass(problem: &Problem, surface: &Curve) -> f64 {
    problem.params.rho_f * fluid_area(surface, problem.ops.as_ref().map(|o| &o.curve))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub kinetic: f64,
    pub potential: f64,
    /// Potential energy of the flat surface enclosing the same mass.
    pub rest: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential
    }

    pub fn wave(&self) -> f64 {
        self.total() - self.rest
    }
}

/// Self-cell value of the periodic Green function on a sheet: the log
/// singularity integrated against the punctured trapezoid rule. With it,
/// `sum_{j != i} G_ij f_j de + f_i de * self_green(..)` is second order.
pub fn self_green(ze: C64, de: f64, l: f64) -> f64 {
    (ze.norm_sqr() * de * de / (2.0 * l * l)).ln() / (4.0 * PI)
}

/// Stream function of a vortex sheet at its own node `i`.
pub fn sheet_stream_on(ctx: &KernelContext, c: &Curve, gamma: &[f64], i: usize) -> f64 {
    let z = c.points();
    let de = c.de();
    let mut psi = 0.0;
    for j in 0..z.len() {
        if j != i {
            psi += ctx.green_unchecked(z[i] - z[j]) * gamma[j];
        }
    }
    (psi + gamma[i] * self_green(c.d1()[i], de, ctx.period())) * de
}

fn sheet_stream_off(ctx: &KernelContext, src: &[C64], de: f64, gamma: &[f64], x: C64) -> f64 {
    src.iter().zip(gamma).map(|(z, g)| ctx.green_unchecked(x - z) * g).sum::<f64>() * de
}

fn stream_available(problem: &Problem) -> Result<()> {
    if problem.params.omega0 != 0.0 {
        return Err(SimError::Config("energy is not defined with uniform vorticity".into()));
    }
    Ok(())
}

/// Energy per period from boundary integrals. `kin` must belong to the
/// state held by `snap`. With point vortices the vortex self energies are
/// left out, so the value is not conserved in that case.
pub fn energy(snap: &Snapshot<'_>, kin: &Kinematics) -> Result<Energy> {
    let problem = snap.problem;
    stream_available(problem)?;
    let ctx = &problem.ctx;
    let p = &problem.params;
    let s = &snap.surface;
    let de = s.de();
    let bottom = snap.bottom();
    // both formulations reduce to vortex sheets; for the dipole form the
    // sheet strength is d mu / de, which has the same stream function
    let gamma_s = &kin.sheet;
    let gamma_b: Vec<f64> = match (problem.formulation, bottom) {
        (_, None) => Vec::new(),
        (Formulation::Vortex, Some(_)) => kin.bottom_density.clone(),
        (Formulation::Dipole, Some(b)) => diff_periodic(&kin.bottom_density, b.de()),
    };
    let src = snap.sources.as_deref().unwrap_or(s.points());
    let extra = |x: C64| -> Result<f64> {
        let mut psi = background_stream(problem, x)?;
        for v in &snap.vortices {
            psi += ctx.green_unchecked(x - v.z) * v.strength;
        }
        Ok(psi)
    };

    let psi_s = (0..s.len())
        .into_par_iter()
        .map(|i| {
            let x = s.points()[i];
            let mut psi = if snap.sources.is_some() {
                sheet_stream_off(ctx, src, de, gamma_s, x)
            } else {
                sheet_stream_on(ctx, s, gamma_s, i)
            };
            if let Some(b) = bottom {
                psi += sheet_stream_off(ctx, b.points(), b.de(), &gamma_b, x);
            }
            Ok(psi + extra(x)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut kinetic = 0.0;
    for i in 0..s.len() {
        let u = kin.u_f[i] + kin.u_bg.get(i).copied().unwrap_or_default();
        kinetic -= (u * s.d1()[i]).re * psi_s[i];
    }
    kinetic *= 0.5 * p.rho_f * de;

    let line2 = |c: &Curve| c.points().iter().zip(c.d1()).map(|(z, ze)| z.im * z.im * ze.re).sum::<f64>() * c.de();
    let mut potential = line2(s);
    let mut bottom_line2 = 0.0;
    let mut bottom_line1 = 0.0;

    if let Some(b) = bottom {
        let db = b.de();
        let gb: Vec<C64> = gamma_b.iter().map(|g| C64::new(*g, 0.0)).collect();
        let parts = (0..b.len())
            .into_par_iter()
            .map(|k| {
                let x = b.points()[k];
                let mut psi = sheet_stream_on(ctx, b, &gamma_b, k) + sheet_stream_off(ctx, src, de, gamma_s, x);
                psi += extra(x)?;
                // fluid lies above the bottom
                let mut u = ctx.plemelj_limit(b, &gb, k, Side::Above).map_err(SimError::from)?;
                u += src.iter().zip(gamma_s).map(|(z, g)| ctx.k_unchecked(x - z) * (g * de)).sum::<C64>();
                for v in &snap.vortices {
                    u += ctx.k_unchecked(x - v.z) * v.strength;
                }
                if problem.formulation == Formulation::Dipole {
                    u += background_velocity(problem, Some(s), x)?;
                }
                Ok((u * b.d1()[k]).re * psi)
            })
            .collect::<Result<Vec<f64>>>()?;
        kinetic += 0.5 * p.rho_f * db * parts.iter().sum::<f64>();
        bottom_line2 = line2(b);
        bottom_line1 = b.points().iter().zip(b.d1()).map(|(z, ze)| z.im * ze.re).sum::<f64>() * db;
        potential -= bottom_line2;
    }
    potential *= 0.5 * p.rho_f * p.g;

    let l = p.l;
    let level = (mass(problem, s) / p.rho_f + bottom_line1) / l;
    let rest = 0.5 * p.rho_f * p.g * (level * level * l - bottom_line2);
    Ok(Energy { kinetic, potential, rest })
}

/// `|de_S sum mu_S Re z_S,e + de_B sum mu_B Re z_B,e|`
pub fn mu_compatibility_residual(surface: &Curve, mu: &[f64], bottom: Option<&Curve>, mu_b: &[f64]) -> f64 {
    let line = |c: &Curve, m: &[f64]| c.d1().iter().zip(m).map(|(ze, v)| v * ze.re).sum::<f64>() * c.de();
    let mut r = line(surface, mu);
    if let Some(b) = bottom {
        if mu_b.len() == b.len() {
            r += line(b, mu_b);
        }
    }
    r.abs()
}

/// Circulation of the sheets and vortices over one period. In the dipole
/// form the sheets carry none and the background holds it all.
pub fn circulation_total(snap: &Snapshot<'_>, kin: &Kinematics) -> f64 {
    let problem = snap.problem;
    match problem.formulation {
        Formulation::Vortex => {
            let mut c = kin.sheet.iter().sum::<f64>() * snap.surface.de();
            if let Some(b) = snap.bottom() {
                c += kin.bottom_density.iter().sum::<f64>() * b.de();
            }
            c + snap.vortices.iter().map(|v| v.strength).sum::<f64>()
        }
        Formulation::Dipole => problem.background.gamma(),
    }
}

/// Largest vertical distance from the nodes to the graph of `eta`.
pub fn graph_error(c: &Curve, eta: impl Fn(f64) -> f64) -> f64 {
    c.points().iter().map(|z| (z.im - eta(z.re)).abs()).fold(0.0, f64::max)
}

pub const HAUSDORFF_SAMPLES: usize = 1 << 17;

/// Periodic cubic (four-point Lagrange) resampling of a curve in its
/// parameter, `m` points.
pub fn resample(c: &Curve, m: usize) -> Vec<C64> {
    let n = c.len();
    let l = c.period();
    // strip the secular part so the samples are periodic
    let drift = |i: isize| C64::new(l * i as f64 / n as f64, 0.0);
    let at = |i: isize| c.point_wrapped(i) - drift(i);
    (0..m)
        .map(|k| {
            let s = k as f64 * n as f64 / m as f64;
            let i = s.floor() as isize;
            let t = s - i as f64;
            let w = [
                -t * (t - 1.0) * (t - 2.0) / 6.0,
                (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                -(t + 1.0) * t * (t - 2.0) / 2.0,
                (t + 1.0) * t * (t - 1.0) / 6.0,
            ];
            let v: C64 = (0..4).map(|q| at(i - 1 + q as isize) * w[q]).sum();
            v + C64::new(l * s / n as f64, 0.0)
        })
        .collect()
}

/// Largest distance from a point of `a` to the set `b`, horizontal
/// coordinate taken modulo `l`.
pub fn directed_hausdorff(a: &[C64], b: &[C64], l: f64) -> f64 {
    let mut sorted: Vec<C64> = b.iter().map(|z| C64::new(z.re.rem_euclid(l), z.im)).collect();
    sorted.sort_by(|p, q| p.re.total_cmp(&q.re));
    let m = sorted.len();
    let wrap = |dx: f64| dx - (dx / l).round() * l;
    a.par_iter()
        .map(|z| {
            let x = z.re.rem_euclid(l);
            let start = sorted.partition_point(|p| p.re < x);
            let mut best = f64::INFINITY;
            // walk outwards in x until the horizontal gap alone exceeds best
            for dir in [1isize, -1] {
                let mut idx = if dir == 1 { start as isize } else { start as isize - 1 };
                for _ in 0..m {
                    let p = sorted[idx.rem_euclid(m as isize) as usize];
                    let dx = wrap(p.re - x);
                    if dx.abs() >= best {
                        break;
                    }
                    best = best.min(dx.hypot(p.im - z.im));
                    idx += dir;
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

pub fn hausdorff_points(a: &[C64], b: &[C64], l: f64) -> f64 {
    directed_hausdorff(a, b, l).max(directed_hausdorff(b, a, l))
}

/// Symmetric Hausdorff distance after resampling both curves to
/// [`HAUSDORFF_SAMPLES`] points.
pub fn hausdorff(a: &Curve, b: &Curve) -> f64 {
    hausdorff_with(a, b, HAUSDORFF_SAMPLES)
}

pub fn hausdorff_with(a: &Curve, b: &Curve, samples: usize) -> f64 {
    let (ra, rb) = rayon::join(|| resample(a, samples), || resample(b, samples));
    hausdorff_points(&ra, &rb, a.period())
}
