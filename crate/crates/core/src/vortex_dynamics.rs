//! Vortex formulation: node and vortex velocities from the sheet densities,
//! and the evolution of `gamma_S` from the Euler equation on the interface.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::boundary_solve::{omega_velocity, solve_gamma_b};
use crate::error::{Result, SimError};
use crate::geometry::{diff_periodic, interp_to_primal, restrict_to_dual, C64, I};
use crate::model::Kinematics;
use crate::operators::{DenseOperator, NeumannSolveReport};
use crate::snapshot::{Matrices, Snapshot};

/// Sheet field at the dual surface nodes, without the Plemelj jump, and the
/// jump `gamma^ / z^_e` itself.
pub(crate) fn dual_fields(snap: &Snapshot<'_>, sheet: &[f64], bottom_sheet: &[f64]) -> (Vec<C64>, Vec<C64>) {
    let ctx = &snap.problem.ctx;
    let p = &snap.problem.params;
    let n = snap.n();
    let de = snap.surface.de();
    let ze = snap.surface.d1();
    let gd = restrict_to_dual(sheet);
    let t = snap.dss();
    let tb = snap.dsb();
    let bottom = snap.bottom();
    let rows: Vec<(C64, C64)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let (x, xe) = (snap.dual.points()[k], snap.dual.d1()[k]);
            let mut acc = C64::new(0.0, 0.0);
            for (j, c) in t.row(k).iter().enumerate() {
                acc += ctx.k_from_cot(*c) * (xe * sheet[j] - ze[j] * gd[k]);
            }
            let mut u = acc * de / xe;
            if let (Some(tb), Some(b)) = (tb, bottom) {
                let db = b.de();
                u += tb.row(k).iter().zip(bottom_sheet).map(|(c, g)| ctx.k_from_cot(*c) * (g * db)).sum::<C64>();
            }
            for v in &snap.vortices {
                u += ctx.k_unchecked(x - v.z) * v.strength;
            }
            u += omega_velocity(ctx, &snap.surface, bottom, p.omega0, x, None);
            (u, gd[k] / xe)
        })
        .collect();
    rows.into_iter().unzip()
}

/// Interpolates dual values to the primal nodes. The jump is projected on
/// the primal tangent so that it carries no normal velocity.
pub(crate) fn to_primal(snap: &Snapshot<'_>, fields: &[C64], jump: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let j: Vec<C64> = interp_to_primal(jump)
        .iter()
        .zip(snap.surface.d1())
        .map(|(u, ze)| u - I * (u * ze).im / ze)
        .collect();
    (interp_to_primal(fields), j)
}

/// Conjugated velocity of point vortex `i` (self term excluded), with the
/// surface sheet carried by `src`.
fn vortex_velocity(snap: &Snapshot<'_>, src: &[C64], sheet: &[f64], bottom_sheet: &[f64], i: usize) -> C64 {
    let ctx = &snap.problem.ctx;
    let x = snap.vortices[i].z;
    let de = snap.surface.de();
    let mut u: C64 = src.iter().zip(sheet).map(|(z, g)| ctx.k_unchecked(x - z) * (g * de)).sum();
    if let Some(b) = snap.bottom() {
        u += b.points().iter().zip(bottom_sheet).map(|(z, g)| ctx.k_unchecked(x - z) * (g * b.de())).sum::<C64>();
    }
    for (j, v) in snap.vortices.iter().enumerate() {
        if j != i {
            u += ctx.k_unchecked(x - v.z) * v.strength;
        }
    }
    u + omega_velocity(ctx, &snap.surface, snap.bottom(), snap.problem.params.omega0, x, None)
}

/// Node and vortex velocities for surface density `gamma`.
pub fn kinematics(snap: &Snapshot<'_>, gamma: &[f64]) -> Result<Kinematics> {
    snap.check_vortices()?;
    let gamma_b = solve_gamma_b(snap, gamma)?;
    if snap.sources.is_some() {
        return offset_kinematics(snap, gamma, gamma_b);
    }
    let alpha = snap.problem.params.alpha;
    let (fields, jump) = dual_fields(snap, gamma, &gamma_b);
    let (fields, jump) = to_primal(snap, &fields, &jump);
    let mix = |s: f64| -> Vec<C64> { fields.iter().zip(&jump).map(|(f, j)| f + j * s).collect() };
    let zdot = mix(alpha - 0.5).iter().map(|u| u.conj()).collect();
    let u_f = mix(0.5);
    let u_a = mix(-0.5);
    let src = snap.surface.points();
    let vdot = (0..snap.vortices.len()).map(|i| vortex_velocity(snap, src, gamma, &gamma_b, i).conj()).collect();
    Ok(Kinematics { zdot, vdot, u_f, u_a, u_bg: Vec::new(), bottom_density: gamma_b, sheet: gamma.to_vec() })
}

fn offset_kinematics(snap: &Snapshot<'_>, gamma: &[f64], gamma_b: Vec<f64>) -> Result<Kinematics> {
    let ctx = &snap.problem.ctx;
    let de = snap.surface.de();
    let t = snap.sw().expect("offset sources");
    let tb = snap.sb();
    let u: Vec<C64> = (0..snap.n())
        .into_par_iter()
        .map(|i| {
            let x = snap.surface.points()[i];
            let mut u: C64 = t.row(i).iter().zip(gamma).map(|(c, g)| ctx.k_from_cot(*c) * (g * de)).sum();
            if let (Some(tb), Some(b)) = (tb, snap.bottom()) {
                u += tb.row(i).iter().zip(&gamma_b).map(|(c, g)| ctx.k_from_cot(*c) * (g * b.de())).sum::<C64>();
            }
            for v in &snap.vortices {
                u += ctx.k_unchecked(x - v.z) * v.strength;
            }
            u
        })
        .collect();
    let src = snap.sources.as_deref().unwrap();
    let vdot = (0..snap.vortices.len()).map(|i| vortex_velocity(snap, src, gamma, &gamma_b, i).conj()).collect();
    Ok(Kinematics {
        zdot: u.iter().map(|v| v.conj()).collect(),
        vdot,
        u_f: u.clone(),
        u_a: u,
        u_bg: Vec::new(),
        bottom_density: gamma_b,
        sheet: gamma.to_vec(),
    })
}

/// Conjugated node velocities.
pub fn surface_velocity_vortex(snap: &Snapshot<'_>, gamma: &[f64]) -> Result<Vec<C64>> {
    Ok(kinematics(snap, gamma)?.zdot.iter().map(|z| z.conj()).collect())
}

/// Conjugated point-vortex velocities.
pub fn vortex_point_velocities(snap: &Snapshot<'_>, gamma: &[f64]) -> Result<Vec<C64>> {
    Ok(kinematics(snap, gamma)?.vdot.iter().map(|z| z.conj()).collect())
}

/// `Psi_S = (u_F + u_A) . z_e`.
pub fn compute_psi_s(snap: &Snapshot<'_>, kin: &Kinematics) -> Vec<f64> {
    snap.surface.d1().iter().zip(kin.u_f.iter().zip(&kin.u_a)).map(|(ze, (f, a))| ((f + a) * ze).re).collect()
}

fn build_matrices(snap: &Snapshot<'_>) -> Matrices {
    let ctx = &snap.problem.ctx;
    let n = snap.n();
    let atw = snap.problem.params.atwood();
    let de = snap.surface.de();
    let ze = snap.surface.d1();
    let a = if let Some(t) = snap.sw() {
        DenseOperator::from_rows(n, n, |i, row| {
            for (j, c) in t.row(i).iter().enumerate() {
                row[j] = de * (ze[i] * ctx.k_from_cot(*c)).re;
            }
        })
    } else {
        let t = snap.ss();
        DenseOperator::from_rows(n, n, |i, row| {
            let mut diag = 0.0;
            for (j, c) in t.row(i).iter().enumerate() {
                if j == i {
                    continue;
                }
                let k = ctx.k_from_cot(*c);
                row[j] = atw * de * (k * ze[i]).re;
                diag += de * (k * ze[j]).re;
            }
            row[i] = 0.5 + atw * diag;
        })
    };
    let (c, d) = match (snap.problem.ops.as_ref(), snap.sb(), snap.dbs()) {
        (Some(ops), Some(sb), Some(dbs)) => {
            let nb = ops.len();
            let db = ops.curve.de();
            let c = DenseOperator::from_rows(n, nb, |i, row| {
                for (j, cc) in sb.row(i).iter().enumerate() {
                    row[j] = atw * db * (ctx.k_from_cot(*cc) * ze[i]).re;
                }
            });
            let d = DenseOperator::from_rows(nb, n, |k, row| {
                if k + 1 == nb {
                    return;
                }
                let xe = ops.dual.d1()[k];
                for (j, cc) in dbs.row(k).iter().enumerate() {
                    row[j] = de * (ctx.k_from_cot(*cc) * xe).im;
                }
            });
            (Some(c), Some(d))
        }
        _ => (None, None),
    };
    Matrices { a, c, d }
}

/// Time derivative of the offset source positions.
fn source_velocity(snap: &Snapshot<'_>, zdot: &[C64], zdot_e: &[C64]) -> Vec<C64> {
    let spec = snap.problem.offset().expect("offset");
    let c = spec.effective_offset(snap.problem.params.l, snap.n());
    snap.surface
        .d1()
        .iter()
        .zip(zdot.iter().zip(zdot_e))
        .map(|(ze, (zd, zde))| {
            let m = ze.norm();
            let tau = ze / m;
            let dtau = (zde - tau * (zde * tau.conj()).re) / m;
            zd + I * dtau * c
        })
        .collect()
}

/// Right-hand side of the bottom equation differentiated in time, at fixed
/// `gamma_B`: `G_V2`.
fn bottom_rate_rhs(snap: &Snapshot<'_>, gamma: &[f64], src_dot: &[C64], zdot: &[C64], zdot_e: &[C64], vdot: &[C64]) -> Vec<f64> {
    let Some(ops) = snap.problem.ops.as_ref() else { return Vec::new() };
    let ctx = &snap.problem.ctx;
    let omega0 = snap.problem.params.omega0;
    let nb = ops.len();
    let de = snap.surface.de();
    let t = snap.dbs().unwrap();
    let z = snap.surface.points();
    let ze = snap.surface.d1();
    (0..nb)
        .into_par_iter()
        .map(|k| {
            if k + 1 == nb {
                return 0.0;
            }
            let (x, xe) = (ops.dual.points()[k], ops.dual.d1()[k]);
            let mut acc = 0.0;
            for (j, c) in t.row(k).iter().enumerate() {
                acc -= de * gamma[j] * (xe * ctx.s_from_cot(*c) * src_dot[j]).im;
            }
            for (v, vd) in snap.vortices.iter().zip(vdot) {
                acc -= v.strength * (xe * ctx.s_unchecked(x - v.z) * vd).im;
            }
            if omega0 != 0.0 {
                for j in 0..z.len() {
                    let d = x - z[j];
                    acc -= omega0 / (4.0 * PI) * de * ctx.log_unchecked(d) * (xe * zdot_e[j].conj()).im;
                    acc -= omega0 * de * (ctx.k_unchecked(d) * zdot[j]).im * (xe * ze[j].conj()).im;
                }
            }
            acc
        })
        .collect()
}

/// Geometric part of `d Psi_S / dt / 2` at fixed densities, all terms.
fn psi_rate_terms(snap: &Snapshot<'_>, kin: &Kinematics, zdot_e: &[C64]) -> Vec<f64> {
    let ctx = &snap.problem.ctx;
    let omega0 = snap.problem.params.omega0;
    let n = snap.n();
    let de = snap.surface.de();
    let z = snap.surface.points();
    let ze = snap.surface.d1();
    let zd = &kin.zdot;
    let gamma = &kin.sheet;
    let gd = restrict_to_dual(gamma);
    let zd_hat = restrict_to_dual(zd);
    let zde_hat = diff_periodic(&zd_hat, de);
    let t = snap.dss();
    // dual-grid surface self terms
    let dual: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let xe = snap.dual.d1()[k];
            let mut acc = 0.0;
            for (j, c) in t.row(k).iter().enumerate() {
                let w = xe * gamma[j] - ze[j] * gd[k];
                acc -= (w * ctx.s_from_cot(*c) * (zd_hat[k] - zd[j])).re;
                acc += ((zde_hat[k] * gamma[j] - zdot_e[j] * gd[k]) * ctx.k_from_cot(*c)).re;
            }
            acc * de
        })
        .collect();
    let mut out = interp_to_primal(&dual);
    let tb = snap.sb();
    let bottom = snap.bottom();
    let tss = if omega0 != 0.0 { Some(snap.ss()) } else { None };
    out.par_iter_mut().enumerate().for_each(|(i, o)| {
        let mut acc = 0.0;
        if let (Some(tb), Some(b)) = (tb, bottom) {
            let db = b.de();
            for (j, c) in tb.row(i).iter().enumerate() {
                let g = kin.bottom_density[j] * db;
                acc += g * (ctx.k_from_cot(*c) * zdot_e[i] - ctx.s_from_cot(*c) * zd[i] * ze[i]).re;
            }
        }
        for (v, vd) in snap.vortices.iter().zip(&kin.vdot) {
            let d = z[i] - v.z;
            acc += v.strength * (ctx.k_unchecked(d) * zdot_e[i] - ctx.s_unchecked(d) * ze[i] * (zd[i] - vd)).re;
        }
        if let Some(tss) = tss {
            let c4 = omega0 / (4.0 * PI);
            for (j, c) in tss.row(i).iter().enumerate() {
                if j == i {
                    continue;
                }
                let ln = ctx.log_unchecked(z[i] - z[j]);
                acc += c4 * de * ln * (zdot_e[i] * ze[j].conj() + ze[i] * zdot_e[j].conj()).re;
                acc -= omega0 * de * (ctx.k_from_cot(*c) * (zd[i] - zd[j])).im * (ze[i] * ze[j].conj()).re;
            }
            if let Some(b) = bottom {
                let db = b.de();
                for (zb, zbe) in b.points().iter().zip(b.d1()) {
                    let d = z[i] - zb;
                    acc -= c4 * db * ctx.log_unchecked(d) * (zdot_e[i] * zbe.conj()).re;
                    acc += omega0 * db * (ctx.k_unchecked(d) * zd[i]).im * (ze[i] * zbe.conj()).re;
                }
            }
        }
        *o += acc;
    });
    out
}

/// Right-hand side of the offset-baseline density equation.
fn offset_rhs(snap: &Snapshot<'_>, kin: &Kinematics, src_dot: &[C64]) -> Vec<f64> {
    let ctx = &snap.problem.ctx;
    let g = snap.problem.params.g;
    let de = snap.surface.de();
    let ze = snap.surface.d1();
    let z = snap.surface.points();
    let zd = &kin.zdot;
    let t = snap.sw().unwrap();
    let tb = snap.sb();
    (0..snap.n())
        .into_par_iter()
        .map(|i| {
            let mut acc = -g * ze[i].im;
            for (j, c) in t.row(i).iter().enumerate() {
                acc += de * kin.sheet[j] * (ze[i] * ctx.s_from_cot(*c) * (zd[i] - src_dot[j])).re;
            }
            if let (Some(tb), Some(b)) = (tb, snap.bottom()) {
                for (j, c) in tb.row(i).iter().enumerate() {
                    acc += b.de() * kin.bottom_density[j] * (ze[i] * ctx.s_from_cot(*c) * zd[i]).re;
                }
            }
            for (v, vd) in snap.vortices.iter().zip(&kin.vdot) {
                acc += v.strength * (ze[i] * ctx.s_unchecked(z[i] - v.z) * (zd[i] - vd)).re;
            }
            acc
        })
        .collect()
}

/// `G_V1`: everything in the density equation not multiplying `d gamma_S / dt`
/// or `d gamma_B / dt`.
fn surface_rhs(snap: &Snapshot<'_>, kin: &Kinematics, zdot_e: &[C64]) -> Result<Vec<f64>> {
    let p = &snap.problem.params;
    let atw = p.atwood();
    let alpha = p.alpha;
    let de = snap.surface.de();
    let ze = snap.surface.d1();
    let terms = psi_rate_terms(snap, kin, zdot_e);
    let duf = diff_periodic(&kin.u_f, de);
    let dua = diff_periodic(&kin.u_a, de);
    let dkappa = if p.sigma != 0.0 { diff_periodic(&snap.surface.curvatures()?, de) } else { vec![0.0; snap.n()] };
    let (wf, wa) = (0.5 * (1.0 + atw), 0.5 * (1.0 - atw));
    Ok((0..snap.n())
        .map(|i| {
            let m2 = ze[i].norm_sqr();
            let g = kin.sheet[i];
            let conv_f = (1.0 - alpha) * g / m2 * (duf[i] * ze[i]).re;
            let conv_a = -alpha * g / m2 * (dua[i] * ze[i]).re;
            -atw * terms[i] - wf * conv_f + wa * conv_a - p.g * atw * ze[i].im
                + ((kin.u_f[i] * wf - kin.u_a[i] * wa) * zdot_e[i]).re
                - (1.0 + atw) * p.sigma / (2.0 * p.rho_f) * dkappa[i]
        })
        .collect())
}

/// `d gamma_S / dt` for the configuration in `snap`, given its kinematics.
/// `warm` seeds the iterative solve.
pub fn dt_gamma_s(
    snap: &Snapshot<'_>,
    kin: &Kinematics,
    warm: Option<&[f64]>,
) -> Result<(Vec<f64>, NeumannSolveReport)> {
    let de = snap.surface.de();
    let zdot_e = diff_periodic(&kin.zdot, de);
    let (rhs1, src_dot) = if snap.sources.is_some() {
        let w = source_velocity(snap, &kin.zdot, &zdot_e);
        (offset_rhs(snap, kin, &w), w)
    } else {
        (surface_rhs(snap, kin, &zdot_e)?, kin.zdot.clone())
    };
    let rhs2 = bottom_rate_rhs(snap, &kin.sheet, &src_dot, &kin.zdot, &zdot_e, &kin.vdot);
    let mats = snap.matrices(build_matrices);
    let rhs = match (&mats.c, snap.problem.ops.as_ref()) {
        (Some(c), Some(ops)) => {
            let y = ops.bb_lu.solve(&rhs2);
            let cy = c.matvec(&y);
            rhs1.iter().zip(cy).map(|(a, b)| a - b).collect()
        }
        _ => rhs1,
    };
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFinite("density equation"));
    }
    let direct = snap.sources.is_some();
    snap.solve_density(&rhs, warm, None, direct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_solve::{project_compatible, solve_initial_gamma_s, BackgroundField};
    use crate::geometry::{graph_points, Curve};
    use crate::kernels::{PointVortex, Side};
    use crate::model::{Formulation, PhysParams, Problem};
    use crate::regularize::Regularizer;

    const L: f64 = 2.0 * PI;

    fn flat(n: usize, y: f64) -> Curve {
        Curve::new(graph_points(n, L, |_| y), L).unwrap()
    }

    fn problem(params: PhysParams, bottom: Option<Curve>) -> Problem {
        Problem::new(params, bottom, BackgroundField::Zero, Formulation::Vortex, Regularizer::None).unwrap()
    }

    fn wave(n: usize, a: f64) -> Curve {
        Curve::new(graph_points(n, L, |x| a * x.cos()), L).unwrap()
    }

    #[test]
    fn zero_state_zero_velocity() {
        let p = problem(PhysParams::default(), Some(flat(32, -1.0)));
        let snap = Snapshot::new(&p, flat(32, 0.0), Vec::new()).unwrap();
        let u = surface_velocity_vortex(&snap, &[0.0; 32]).unwrap();
        assert!(u.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn flat_uniform_sheet_deep() {
        // fluid-side trace of a flat sheet of density g is +g/2
        let p = problem(PhysParams::default(), None);
        let snap = Snapshot::new(&p, flat(32, 0.0), Vec::new()).unwrap();
        let u = surface_velocity_vortex(&snap, &[0.4; 32]).unwrap();
        for v in u {
            assert!((v - C64::new(0.2, 0.0)).norm() < 1e-13, "{v}");
        }
    }

    #[test]
    fn alpha_moves_along_tangent_only() {
        let n = 64;
        let s = wave(n, 0.1);
        let g: Vec<f64> = (0..n).map(|j| 0.3 * (L * j as f64 / n as f64).sin() + 0.1).collect();
        let normal = |alpha: f64| -> Vec<f64> {
            let p = problem(PhysParams { alpha, ..Default::default() }, Some(flat(n, -1.0)));
            let snap = Snapshot::new(&p, s.clone(), Vec::new()).unwrap();
            let u = surface_velocity_vortex(&snap, &g).unwrap();
            u.iter().zip(s.d1()).map(|(u, ze)| (u * ze).im / ze.norm()).collect()
        };
        let (a, b) = (normal(0.0), normal(1.0));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn psi_matches_plemelj_sum() {
        let n = 64;
        let s = wave(n, 0.1);
        let g: Vec<f64> = (0..n).map(|j| (L * j as f64 / n as f64).cos()).collect();
        let p = problem(PhysParams::default(), None);
        let snap = Snapshot::new(&p, s.clone(), Vec::new()).unwrap();
        let kin = kinematics(&snap, &g).unwrap();
        let psi = compute_psi_s(&snap, &kin);
        let cg: Vec<C64> = g.iter().map(|v| C64::new(*v, 0.0)).collect();
        // both Plemelj sides summed at primal nodes
        for i in 0..n {
            let a = p.ctx.plemelj_limit(&s, &cg, i, Side::Above).unwrap();
            let b = p.ctx.plemelj_limit(&s, &cg, i, Side::Below).unwrap();
            let direct = ((a + b) * s.d1()[i]).re;
            assert!((psi[i] - direct).abs() < 5e-3, "{i}: {} {}", psi[i], direct);
        }
    }

    #[test]
    fn flat_rest_is_equilibrium() {
        let n = 32;
        let p = problem(PhysParams::default(), Some(flat(n, -1.0)));
        let snap = Snapshot::new(&p, flat(n, 0.0), Vec::new()).unwrap();
        let kin = kinematics(&snap, &[0.0; 32]).unwrap();
        let (dg, _) = dt_gamma_s(&snap, &kin, None).unwrap();
        assert!(dg.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn single_vortex_no_self_velocity() {
        let p = problem(PhysParams::default(), None);
        let snap = Snapshot::new(&p, flat(16, 0.0), vec![PointVortex { z: C64::new(1.0, -2.0), strength: 1.0 }]).unwrap();
        let kin = kinematics(&snap, &[0.0; 16]).unwrap();
        assert!(kin.vdot[0].norm() < 1e-12);
    }

    #[test]
    fn vortex_rides_parallel_to_bottom() {
        // far surface: the bottom density is an image row of -gv plus a
        // uniform gv/L, the surface carries -gv/L, so the vortex drifts at
        // (gv / 2L) (coth(2 pi h / L) - 2)
        let n = 512;
        let h = 0.5;
        let gv = 0.2;
        let p = problem(PhysParams::default(), Some(flat(n, -1.0)));
        let surf = flat(n, 20.0);
        let vort = vec![PointVortex { z: C64::new(1.0, -1.0 + h), strength: gv }];
        let (gs, _) = solve_initial_gamma_s(&p, &surf, &vec![0.0; n], &vort).unwrap();
        let snap = Snapshot::new(&p, surf, vort).unwrap();
        let kin = kinematics(&snap, &gs).unwrap();
        let v = kin.vdot[0];
        let exact = gv / (2.0 * L) * (1.0 / (2.0 * PI * h / L).tanh() - 2.0);
        assert!(v.im.abs() < 1e-8, "{v}");
        assert!((v.re - exact).abs() < 1e-3 * exact.abs(), "{v} vs {exact}");
    }

    fn dispersion_rhs(n: usize) -> (Vec<f64>, Vec<f64>) {
        let a = 1e-3;
        let s = wave(n, a);
        let omega = 1f64.tanh().sqrt();
        let g = project_compatible(&s, &(0..n).map(|j| a * omega * (L * j as f64 / n as f64).sin()).collect::<Vec<_>>());
        let p = problem(PhysParams::default(), Some(flat(n, -1.0)));
        let (gs, _) = solve_initial_gamma_s(&p, &s, &g, &[]).unwrap();
        let snap = Snapshot::new(&p, s, Vec::new()).unwrap();
        let kin = kinematics(&snap, &gs).unwrap();
        let (dg, _) = dt_gamma_s(&snap, &kin, None).unwrap();
        (gs, dg)
    }

    #[test]
    fn linear_wave_density_rate() {
        // fluid side phi = (a w) cosh(y+1)/sinh(1) sin x, air side the decaying
        // extension of the same normal velocity; gamma = u_F - u_A and
        // d gamma/dt = a (1 + tanh 1) sin x at t = 0
        let n = 128;
        let (gs, dg) = dispersion_rhs(n);
        let t = 1f64.tanh();
        let w = t.sqrt();
        let a = 1e-3;
        for j in 0..n {
            let x = L * j as f64 / n as f64;
            let ge = a * w * (1.0 / t + 1.0) * x.cos();
            let de = a * (1.0 + t) * x.sin();
            assert!((gs[j] - ge).abs() < 2e-3 * a, "gamma {j}: {} {ge}", gs[j]);
            assert!((dg[j] - de).abs() < 5e-3 * a, "dgamma {j}: {} {de}", dg[j]);
        }
    }
}
