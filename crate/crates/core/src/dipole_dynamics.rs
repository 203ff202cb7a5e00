//! Dipole formulation: node velocities from `d mu / de`, the potential sum
//! `Phi_S`, and the evolution of `mu_S` from the Bernoulli equation.

use rayon::prelude::*;

use crate::boundary_solve::{background_velocity, solve_mu_b};
use crate::error::{Result, SimError};
use crate::geometry::{diff_periodic, C64};
use crate::model::Kinematics;
use crate::operators::{DenseOperator, NeumannSolveReport, RankOne};
use crate::snapshot::{Matrices, Snapshot};
use crate::vortex_dynamics::{dual_fields, to_primal};

/// `d mu / de` by periodic central differences.
pub fn gamma_from_mu(mu: &[f64], de: f64) -> Vec<f64> {
    if mu.is_empty() {
        return Vec::new();
    }
    diff_periodic(mu, de)
}

/// Tangential part of a conjugated velocity.
fn tangential(u: C64, ze: C64) -> C64 {
    (u * ze).re / ze
}

/// Node velocities and one-sided traces for surface dipole density `mu`.
/// `u_f`, `u_a` are the gradients of the dipole potential alone; the
/// background is kept apart in `u_bg`.
pub fn kinematics(snap: &Snapshot<'_>, mu: &[f64]) -> Result<Kinematics> {
    let (mu_b, _) = solve_mu_b(snap, mu)?;
    let gs = gamma_from_mu(mu, snap.surface.de());
    let gb = snap.bottom().map_or_else(Vec::new, |b| gamma_from_mu(&mu_b, b.de()));
    let (fields, jump) = dual_fields(snap, &gs, &gb);
    let (fields, jump) = to_primal(snap, &fields, &jump);
    let alpha = snap.problem.params.alpha;
    let ze = snap.surface.d1();
    let u_bg = snap
        .surface
        .points()
        .iter()
        .map(|x| background_velocity(snap.problem, Some(&snap.surface), *x))
        .collect::<Result<Vec<_>>>()?;
    // alpha only trades fluid for air velocity along the tangent; a
    // background that is not tangent keeps its normal part in full
    let zdot = (0..snap.n())
        .map(|i| {
            let u = fields[i] + jump[i] * (alpha - 0.5) + u_bg[i] - tangential(u_bg[i], ze[i]) * (1.0 - alpha);
            u.conj()
        })
        .collect();
    let u_f = fields.iter().zip(&jump).map(|(f, j)| f + j * 0.5).collect();
    let u_a = fields.iter().zip(&jump).map(|(f, j)| f - j * 0.5).collect();
    Ok(Kinematics { zdot, vdot: Vec::new(), u_f, u_a, u_bg, bottom_density: mu_b, sheet: gs })
}

/// Conjugated node velocities.
pub fn surface_velocity_dipole(snap: &Snapshot<'_>, mu: &[f64]) -> Result<Vec<C64>> {
    Ok(kinematics(snap, mu)?.zdot.iter().map(|z| z.conj()).collect())
}

/// `Phi_S = phi_F + phi_A` on the surface nodes.
pub fn compute_phi_s(snap: &Snapshot<'_>, mu: &[f64], mu_b: &[f64]) -> Vec<f64> {
    let ctx = &snap.problem.ctx;
    let de = snap.surface.de();
    let ze = snap.surface.d1();
    let t = snap.ss();
    let tb = snap.sb();
    let bottom = snap.bottom();
    (0..snap.n())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for (j, c) in t.row(i).iter().enumerate() {
                if j != i {
                    acc += de * (mu[j] - mu[i]) * (ctx.k_from_cot(*c) * ze[j]).re;
                }
            }
            if let (Some(tb), Some(b)) = (tb, bottom) {
                for ((c, m), zbe) in tb.row(i).iter().zip(mu_b).zip(b.d1()) {
                    acc += b.de() * m * (ctx.k_from_cot(*c) * zbe).re;
                }
            }
            2.0 * acc
        })
        .collect()
}

fn build_matrices(snap: &Snapshot<'_>) -> Matrices {
    let ctx = &snap.problem.ctx;
    let n = snap.n();
    let atw = snap.problem.params.atwood();
    let de = snap.surface.de();
    let ze = snap.surface.d1();
    let t = snap.ss();
    let a = DenseOperator::from_rows(n, n, |i, row| {
        let mut diag = 0.0;
        for (j, c) in t.row(i).iter().enumerate() {
            if j == i {
                continue;
            }
            let v = de * (ctx.k_from_cot(*c) * ze[j]).re;
            row[j] = atw * v;
            diag += v;
        }
        row[i] = 0.5 - atw * diag;
    });
    let (c, d) = match (snap.problem.ops.as_ref(), snap.sb(), snap.bs()) {
        (Some(ops), Some(sb), Some(bs)) => {
            let nb = ops.len();
            let db = ops.curve.de();
            let zbe = ops.curve.d1();
            let c = DenseOperator::from_rows(n, nb, |i, row| {
                for (j, cc) in sb.row(i).iter().enumerate() {
                    row[j] = atw * db * (ctx.k_from_cot(*cc) * zbe[j]).re;
                }
            });
            let d = DenseOperator::from_rows(nb, n, |k, row| {
                for (j, cc) in bs.row(k).iter().enumerate() {
                    row[j] = de * (ctx.k_from_cot(*cc) * ze[j]).re;
                }
            });
            (Some(c), Some(d))
        }
        _ => (None, None),
    };
    Matrices { a, c, d }
}

/// `G_D1`: the Bernoulli equation at fixed `d mu / dt`.
fn surface_rhs(snap: &Snapshot<'_>, mu: &[f64], kin: &Kinematics, zdot_e: &[C64]) -> Result<Vec<f64>> {
    let ctx = &snap.problem.ctx;
    let p = &snap.problem.params;
    let atw = p.atwood();
    let de = snap.surface.de();
    let z = snap.surface.points();
    let ze = snap.surface.d1();
    let zd = &kin.zdot;
    let t = snap.ss();
    let tb = snap.sb();
    let bottom = snap.bottom();
    let kappa = if p.sigma != 0.0 { snap.surface.curvatures()? } else { vec![0.0; snap.n()] };
    let (wf, wa) = (atw + 1.0, atw - 1.0);
    Ok((0..snap.n())
        .into_par_iter()
        .map(|i| {
            // the two e' = e extensions cancel, so both sums stay punctured
            let mut geo = 0.0;
            for (j, c) in t.row(i).iter().enumerate() {
                if j == i {
                    continue;
                }
                geo -= (mu[i] - mu[j]) * (ctx.s_from_cot(*c) * (zd[i] - zd[j]) * ze[j]).re;
                geo -= (mu[j] - mu[i]) * (ctx.k_from_cot(*c) * zdot_e[j]).re;
            }
            let mut acc = atw * de * geo;
            if let (Some(tb), Some(b)) = (tb, bottom) {
                for ((c, m), zbe) in tb.row(i).iter().zip(&kin.bottom_density).zip(b.d1()) {
                    acc += atw * b.de() * m * (ctx.s_from_cot(*c) * zd[i] * zbe).re;
                }
            }
            let uf = kin.u_f[i];
            let ua = kin.u_a[i];
            let ubg = kin.u_bg.get(i).copied().unwrap_or_default();
            acc += 0.5 * (zd[i] * (uf * wf + ua * wa)).re;
            acc -= 0.25 * (wf * (uf + ubg).norm_sqr() + wa * ua.norm_sqr());
            acc - wf * p.sigma / (2.0 * p.rho_f) * kappa[i] - p.g * atw * z[i].im
        })
        .collect())
}

/// `G_D2`: the bottom equation differentiated in time at fixed `d mu_B / dt`.
fn bottom_rhs(snap: &Snapshot<'_>, mu: &[f64], zdot: &[C64], zdot_e: &[C64]) -> Vec<f64> {
    let Some(ops) = snap.problem.ops.as_ref() else { return Vec::new() };
    let ctx = &snap.problem.ctx;
    let de = snap.surface.de();
    let ze = snap.surface.d1();
    let t = snap.bs().unwrap();
    (0..ops.len())
        .into_par_iter()
        .map(|k| {
            let mut acc = 0.0;
            for (j, c) in t.row(k).iter().enumerate() {
                acc -= mu[j] * (ctx.k_from_cot(*c) * zdot_e[j] + ctx.s_from_cot(*c) * zdot[j] * ze[j]).re;
            }
            acc * de
        })
        .collect()
}

/// Rank-one part of the density operator: `a_j = A de Re z_e(j) / L` when a
/// bottom is present, nothing in deep water.
fn preconditioner(snap: &Snapshot<'_>) -> Result<RankOne> {
    let n = snap.n();
    if snap.problem.ops.is_none() {
        return Ok(RankOne::new(vec![0.0; n])?);
    }
    let s = snap.problem.params.atwood() * snap.surface.de() / snap.problem.params.l;
    Ok(RankOne::new(snap.surface.d1().iter().map(|z| s * z.re).collect())?)
}

/// `d mu_S / dt` for the configuration in `snap`.
pub fn dt_mu_s(
    snap: &Snapshot<'_>,
    mu: &[f64],
    kin: &Kinematics,
    warm: Option<&[f64]>,
) -> Result<(Vec<f64>, NeumannSolveReport)> {
    let zdot_e = diff_periodic(&kin.zdot, snap.surface.de());
    let rhs1 = surface_rhs(snap, mu, kin, &zdot_e)?;
    let mats = snap.matrices(build_matrices);
    let rhs = match (&mats.c, snap.problem.ops.as_ref()) {
        (Some(c), Some(ops)) => {
            let rhs2 = bottom_rhs(snap, mu, &kin.zdot, &zdot_e);
            let cy = c.matvec(&ops.astar_lu.solve(&rhs2));
            rhs1.iter().zip(cy).map(|(a, b)| a - b).collect()
        }
        _ => rhs1,
    };
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFinite("dipole density equation"));
    }
    let pre = preconditioner(snap)?;
    snap.solve_density(&rhs, warm, Some(&pre), false)
}

/// `(1, 2, 1) / 4` periodic smoothing.
pub fn oec_smooth(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|k| 0.25 * (v[(k + n - 1) % n] + 2.0 * v[k] + v[(k + 1) % n])).collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::boundary_solve::{project_compatible, solve_initial_gamma_s, solve_initial_mu_s, BackgroundField};
    use crate::geometry::{graph_points, Curve};
    use crate::model::{Formulation, PhysParams, Problem};
    use crate::regularize::Regularizer;
    use crate::vortex_dynamics;

    const L: f64 = 2.0 * PI;

    fn flat(n: usize, y: f64) -> Curve {
        Curve::new(graph_points(n, L, |_| y), L).unwrap()
    }

    fn wave(n: usize, a: f64) -> Curve {
        Curve::new(graph_points(n, L, |x| a * x.cos()), L).unwrap()
    }

    fn problem(params: PhysParams, bottom: Option<Curve>, bg: BackgroundField) -> Problem {
        Problem::new(params, bottom, bg, Formulation::Dipole, Regularizer::None).unwrap()
    }

    fn xs(n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |j| L * j as f64 / n as f64)
    }

    #[test]
    fn gamma_from_mu_basics() {
        let n = 64;
        let de = L / n as f64;
        assert!(gamma_from_mu(&[2.5; 64], de).iter().all(|v| *v == 0.0));
        let mu: Vec<f64> = xs(n).map(|x| x.sin() + 0.3 * (3.0 * x).cos()).collect();
        let g = gamma_from_mu(&mu, de);
        assert!(g.iter().sum::<f64>().abs() < 1e-12);
        let err = |n: usize| {
            let de = L / n as f64;
            let mu: Vec<f64> = xs(n).map(f64::sin).collect();
            gamma_from_mu(&mu, de).iter().zip(xs(n)).map(|(g, x)| (g - x.cos()).abs()).fold(0.0, f64::max)
        };
        let order = (err(64) / err(128)).log2();
        assert!(order > 1.9, "{order}");
    }

    #[test]
    fn zero_density_zero_velocity() {
        let p = problem(PhysParams::default(), Some(flat(32, -1.0)), BackgroundField::Zero);
        let snap = Snapshot::new(&p, wave(32, 0.1), Vec::new()).unwrap();
        let u = surface_velocity_dipole(&snap, &[0.0; 32]).unwrap();
        assert!(u.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn uniform_background_drift() {
        let gamma = 0.7;
        let p = problem(PhysParams::default(), Some(flat(32, -1.0)), BackgroundField::Uniform { gamma });
        let snap = Snapshot::new(&p, flat(32, 0.0), Vec::new()).unwrap();
        let u = surface_velocity_dipole(&snap, &[0.0; 32]).unwrap();
        for v in u {
            assert!((v - C64::new(gamma / L, 0.0)).norm() < 1e-14, "{v}");
        }
    }

    #[test]
    fn alpha_moves_along_tangent_only() {
        let n = 64;
        let s = wave(n, 0.1);
        let mu: Vec<f64> = xs(n).map(|x| 0.3 * x.sin()).collect();
        let normal = |alpha: f64| -> Vec<f64> {
            let params = PhysParams { alpha, ..Default::default() };
            let p = problem(params, Some(flat(n, -1.0)), BackgroundField::Uniform { gamma: 0.5 });
            let snap = Snapshot::new(&p, s.clone(), Vec::new()).unwrap();
            let u = surface_velocity_dipole(&snap, &mu).unwrap();
            u.iter().zip(s.d1()).map(|(u, ze)| (u * ze).im / ze.norm()).collect()
        };
        let (a, b) = (normal(0.0), normal(1.0));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13, "{x} {y}");
        }
    }

    #[test]
    fn constant_mu_has_no_potential_sum() {
        let p = problem(PhysParams::default(), None, BackgroundField::Zero);
        let snap = Snapshot::new(&p, wave(32, 0.2), Vec::new()).unwrap();
        assert!(compute_phi_s(&snap, &[1.3; 32], &[]).iter().all(|v| v.abs() < 1e-13));
    }

    /// Double-layer potential at `x` off the sheets.
    fn potential(p: &Problem, s: &Curve, mu: &[f64], mu_b: &[f64], x: C64) -> f64 {
        let ctx = &p.ctx;
        let mut phi: f64 = s.points().iter().zip(s.d1()).zip(mu).map(|((z, ze), m)| m * (ctx.k_unchecked(x - z) * ze).re).sum::<f64>() * s.de();
        if let Some(o) = &p.ops {
            let b = &o.curve;
            phi += b.points().iter().zip(b.d1()).zip(mu_b).map(|((z, ze), m)| m * (ctx.k_unchecked(x - z) * ze).re).sum::<f64>() * b.de();
        }
        phi
    }

    #[test]
    fn phi_sum_matches_off_sheet_probes() {
        // phi(z + en) + phi(z - en) is even in e: two probes extrapolate to
        // the on-sheet sum with an O(e^4) error
        let n = 512;
        let s = wave(n, 0.15);
        let p = problem(PhysParams::default(), Some(flat(n, -1.0)), BackgroundField::Zero);
        let mu: Vec<f64> = xs(n).map(|x| x.sin() + 0.2 * (2.0 * x).cos()).collect();
        let snap = Snapshot::new(&p, s.clone(), Vec::new()).unwrap();
        let (mu_b, _) = solve_mu_b(&snap, &mu).unwrap();
        let phi = compute_phi_s(&snap, &mu, &mu_b);
        for i in (0..n).step_by(37) {
            let z = s.points()[i];
            let nrm = C64::new(0.0, 1.0) * s.d1()[i] / s.d1()[i].norm();
            let sum = |e: f64| potential(&p, &s, &mu, &mu_b, z + nrm * e) + potential(&p, &s, &mu, &mu_b, z - nrm * e);
            let probe = (4.0 * sum(0.1) - sum(0.2)) / 3.0;
            assert!((phi[i] - probe).abs() < 2e-4, "{i}: {} {}", phi[i], probe);
        }
    }

    #[test]
    fn phi_sum_converges_at_second_order() {
        let mu_fn = |x: f64| x.sin() + 0.2 * (2.0 * x).cos();
        let at = |n: usize| -> f64 {
            let s = Curve::new(graph_points(n, L, |x| 0.2 * x.cos()), L).unwrap();
            let p = problem(PhysParams::default(), None, BackgroundField::Zero);
            let mu: Vec<f64> = xs(n).map(mu_fn).collect();
            let snap = Snapshot::new(&p, s, Vec::new()).unwrap();
            compute_phi_s(&snap, &mu, &[])[n / 8]
        };
        let (a, b, c) = (at(64), at(128), at(256));
        let order = ((a - b).abs() / (b - c).abs()).log2();
        assert!(order >= 1.9 || (b - c).abs() < 1e-12, "{order}");
    }

    #[test]
    fn flat_rest_is_equilibrium() {
        let n = 32;
        let p = problem(PhysParams::default(), Some(flat(n, -1.0)), BackgroundField::Zero);
        let snap = Snapshot::new(&p, flat(n, 0.0), Vec::new()).unwrap();
        let mu = vec![0.0; n];
        let kin = kinematics(&snap, &mu).unwrap();
        let (dm, _) = dt_mu_s(&snap, &mu, &kin, None).unwrap();
        assert!(dm.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn linear_wave_potential_rate() {
        // mu = phi_F - phi_A = a w (coth 1 + 1) sin x and
        // d mu / dt = -a (1 + tanh 1) cos x at t = 0
        let n = 128;
        let a = 1e-3;
        let t = 1f64.tanh();
        let w = t.sqrt();
        let s = wave(n, a);
        let p = problem(PhysParams::default(), Some(flat(n, -1.0)), BackgroundField::Zero);
        let g = project_compatible(&s, &xs(n).map(|x| a * w * x.sin()).collect::<Vec<_>>());
        let (mu, _) = solve_initial_mu_s(&p, &s, &g).unwrap();
        let snap = Snapshot::new(&p, s, Vec::new()).unwrap();
        let kin = kinematics(&snap, &mu).unwrap();
        let (dm, rep) = dt_mu_s(&snap, &mu, &kin, None).unwrap();
        assert!(rep.converged);
        for (j, x) in xs(n).enumerate() {
            let me = a * w * (1.0 / t + 1.0) * x.sin();
            let de = -a * (1.0 + t) * x.cos();
            assert!((mu[j] - me).abs() < 2e-3 * a, "mu {j}: {} {me}", mu[j]);
            assert!((dm[j] - de).abs() < 5e-3 * a, "dmu {j}: {} {de}", dm[j]);
        }
    }

    /// Same smooth state in both formulations: normal velocities, and the
    /// jump densities `gamma = d mu / de` with their time derivatives.
    fn cross(n: usize) -> (f64, f64, f64) {
        let s = Curve::new(graph_points(n, L, |x| 0.1 * x.cos() + 0.03 * (2.0 * x).sin()), L).unwrap();
        let g = project_compatible(&s, &xs(n).map(|x| 0.2 * x.sin() + 0.05 * (2.0 * x).cos()).collect::<Vec<_>>());
        let bottom = Curve::new(graph_points(n, L, |x| -1.0 + 0.1 * x.sin()), L).unwrap();
        let params = PhysParams { alpha: 0.7, ..Default::default() };
        let pd = problem(params, Some(bottom.clone()), BackgroundField::Zero);
        let pv = Problem::new(params, Some(bottom), BackgroundField::Zero, Formulation::Vortex, Regularizer::None).unwrap();
        let (mu, _) = solve_initial_mu_s(&pd, &s, &g).unwrap();
        let (gs, _) = solve_initial_gamma_s(&pv, &s, &g, &[]).unwrap();
        let sd = Snapshot::new(&pd, s.clone(), Vec::new()).unwrap();
        let sv = Snapshot::new(&pv, s.clone(), Vec::new()).unwrap();
        let kd = kinematics(&sd, &mu).unwrap();
        let kv = vortex_dynamics::kinematics(&sv, &gs).unwrap();
        let (dm, _) = dt_mu_s(&sd, &mu, &kd, None).unwrap();
        let (dg, _) = vortex_dynamics::dt_gamma_s(&sv, &kv, None).unwrap();
        let dmde = gamma_from_mu(&dm, s.de());
        let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let nd: Vec<f64> = kd.zdot.iter().zip(s.d1()).map(|(u, ze)| (u.conj() * ze).im / ze.norm()).collect();
        let nv: Vec<f64> = kv.zdot.iter().zip(s.d1()).map(|(u, ze)| (u.conj() * ze).im / ze.norm()).collect();
        (sup(&nd, &nv), sup(&kd.sheet, &gs), sup(&dmde, &dg))
    }

    #[test]
    fn cross_formulation_agreement() {
        let (a1, b1, c1) = cross(64);
        let (a2, b2, c2) = cross(128);
        eprintln!("normal {a1:e} {a2:e} density {b1:e} {b2:e} rate {c1:e} {c2:e}");
        assert!(a2 < 1e-3 && a1 / a2 > 3.0, "normal velocity {a1:e} {a2:e}");
        assert!(b2 < 1e-3 && b1 / b2 > 3.0, "density {b1:e} {b2:e}");
        assert!(c2 < 1e-2 && c1 / c2 > 3.0, "rate {c1:e} {c2:e}");
    }

    #[test]
    fn oec_stencil() {
        assert_eq!(oec_smooth(&[1.5; 8]), vec![1.5; 8]);
        let alt: Vec<f64> = (0..8).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(oec_smooth(&alt).iter().all(|v| *v == 0.0));
        let n = 256;
        let v: Vec<f64> = xs(n).map(f64::sin).collect();
        let f = (PI / n as f64).cos().powi(2);
        for (a, b) in oec_smooth(&v).iter().zip(&v) {
            assert!((a - f * b).abs() < 1e-14);
        }
    }
}
