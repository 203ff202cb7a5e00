//! Boundary-data solves: initial densities from prescribed normal velocity,
//! the bottom densities slaved to the surface, and the stationary background
//! fields carrying circulation in the dipole formulation.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::geometry::{restrict_to_dual, Curve, C64};
use crate::kernels::{KernelContext, PointVortex};
use crate::model::{fluid_area, OperatorCache, Problem};
use crate::operators::{neumann_solve, DenseOperator, NeumannSolveReport};
use crate::pairs::cot_table;
use crate::snapshot::Snapshot;

#[derive(Debug, Clone, PartialEq)]
pub enum BackgroundField {
    Zero,
    /// `gamma / L`, valid over a flat bottom or in deep water.
    Uniform { gamma: f64 },
    /// Bottom sheet with total density `-2 gamma`, tangent to any bottom.
    Harmonic { gamma: f64, density: Vec<f64> },
    /// Flat bottom at `-h0`; vortices and vorticity through image terms.
    Mirror { gamma: f64, h0: f64, vortices: Vec<PointVortex>, omega0: f64 },
}

impl BackgroundField {
    pub fn gamma(&self) -> f64 {
        match self {
            BackgroundField::Zero => 0.0,
            BackgroundField::Uniform { gamma } | BackgroundField::Harmonic { gamma, .. } | BackgroundField::Mirror { gamma, .. } => {
                *gamma
            }
        }
    }

    /// Consistency with the bottom of `problem` and with the dipole dynamics,
    /// which need a stationary field.
    pub fn check(&self, problem: &Problem) -> Result<()> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        match self {
            BackgroundField::Zero => Ok(()),
            BackgroundField::Uniform { .. } => match &problem.ops {
                Some(o) if !o.is_flat() => bad("uniform background needs a flat bottom; use harmonic"),
                _ => Ok(()),
            },
            BackgroundField::Harmonic { density, .. } => match &problem.ops {
                Some(o) if o.len() == density.len() => Ok(()),
                Some(_) => bad("harmonic density does not match the bottom"),
                None => bad("harmonic background needs a bottom"),
            },
            BackgroundField::Mirror { h0, vortices, omega0, .. } => {
                let Some(o) = &problem.ops else { return bad("mirror background needs a bottom") };
                if !o.is_flat() || (o.curve.points()[0].im + h0).abs() > 1e-12 * (1.0 + h0.abs()) {
                    return bad("mirror background needs a flat bottom at -h0");
                }
                if !vortices.is_empty() || *omega0 != 0.0 {
                    return bad("mirror background with vortices or vorticity is not stationary");
                }
                Ok(())
            }
        }
    }
}

/// Bottom density of the harmonic field: tangent to the bottom, total `-2 gamma`.
pub fn harmonic_background(ops: &OperatorCache, gamma: f64) -> BackgroundField {
    let n = ops.len();
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = -2.0 * gamma;
    BackgroundField::Harmonic { gamma, density: ops.bb_lu.solve(&rhs) }
}

/// `(omega0/4pi) [ int_S ln conj(z_e) - int_B ln conj(z_B,e) ]` at `x`,
/// optionally skipping surface node `skip`.
pub fn omega_velocity(
    ctx: &KernelContext,
    surface: &Curve,
    bottom: Option<&Curve>,
    omega0: f64,
    x: C64,
    skip: Option<usize>,
) -> C64 {
    if omega0 == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let mut acc = C64::new(0.0, 0.0);
    for (j, (z, ze)) in surface.points().iter().zip(surface.d1()).enumerate() {
        if Some(j) != skip {
            acc += ze.conj() * ctx.log_unchecked(x - z) * surface.de();
        }
    }
    if let Some(b) = bottom {
        for (z, ze) in b.points().iter().zip(b.d1()) {
            acc -= ze.conj() * ctx.log_unchecked(x - z) * b.de();
        }
    }
    acc * (omega0 / (4.0 * PI))
}

pub fn background_velocity(problem: &Problem, surface: Option<&Curve>, x: C64) -> Result<C64> {
    let l = problem.params.l;
    let ctx = &problem.ctx;
    Ok(match &problem.background {
        BackgroundField::Zero => C64::new(0.0, 0.0),
        BackgroundField::Uniform { gamma } => C64::new(gamma / l, 0.0),
        BackgroundField::Harmonic { density, .. } => {
            let ops = problem.ops.as_ref().ok_or_else(|| SimError::Config("harmonic background without bottom".into()))?;
            let de = ops.curve.de();
            ops.curve.points().iter().zip(density).map(|(z, g)| ctx.k_unchecked(x - z) * (g * de)).sum()
        }
        BackgroundField::Mirror { gamma, h0, vortices, omega0 } => {
            let shift = C64::new(0.0, 2.0 * h0);
            let mut u = C64::new(gamma / l, 0.0);
            for v in vortices {
                u += (ctx.k_unchecked(x - v.z) - ctx.k_unchecked(x - v.z.conj() + shift)) * v.strength;
            }
            if *omega0 != 0.0 {
                let s = surface.ok_or_else(|| SimError::Config("mirror vorticity terms need the surface".into()))?;
                let ops = problem.ops.as_ref().ok_or_else(|| SimError::Config("mirror background without bottom".into()))?;
                let c = omega0 / (4.0 * PI);
                for (z, ze) in s.points().iter().zip(s.d1()) {
                    u += (ze.conj() * ctx.log_unchecked(x - z) + ze * ctx.log_unchecked(x - z.conj() + shift)) * (c * s.de());
                }
                let b = &ops.curve;
                for (z, ze) in b.points().iter().zip(b.d1()) {
                    u -= ze.conj() * ctx.log_unchecked(x - z) * (2.0 * c * b.de());
                }
            }
            u
        }
    })
}

/// Stream function of the background, for the energy.
pub fn background_stream(problem: &Problem, x: C64) -> Result<f64> {
    let l = problem.params.l;
    match &problem.background {
        BackgroundField::Zero => Ok(0.0),
        BackgroundField::Uniform { gamma } => Ok(-gamma / l * x.im),
        BackgroundField::Mirror { gamma, vortices, omega0, .. } if vortices.is_empty() && *omega0 == 0.0 => {
            Ok(-gamma / l * x.im)
        }
        BackgroundField::Harmonic { density, .. } => {
            let ops = problem.ops.as_ref().ok_or_else(|| SimError::Config("harmonic background without bottom".into()))?;
            let de = ops.curve.de();
            Ok(ops.curve.points().iter().zip(density).map(|(z, g)| problem.ctx.green_unchecked(x - z) * g * de).sum())
        }
        BackgroundField::Mirror { .. } => Err(SimError::Config("no stream function for this mirror background".into())),
    }
}

/// Mean of `g` weighted by arclength.
pub fn compatibility_mean(surface: &Curve, g: &[f64]) -> f64 {
    let w: Vec<f64> = surface.d1().iter().map(|z| z.norm()).collect();
    let total: f64 = w.iter().sum();
    g.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / total
}

/// Removes the weighted mean so the data is discretely compatible.
pub fn project_compatible(surface: &Curve, g: &[f64]) -> Vec<f64> {
    let m = compatibility_mean(surface, g);
    g.iter().map(|v| v - m).collect()
}

fn check_compatible(surface: &Curve, g: &[f64]) -> Result<()> {
    if g.len() != surface.len() {
        return Err(SimError::Config(format!("normal data has {} values for {} nodes", g.len(), surface.len())));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFinite("normal data"));
    }
    let m = compatibility_mean(surface, g);
    let scale = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if m.abs() > 1e-10 * scale {
        return Err(SimError::Compatibility(m));
    }
    Ok(())
}

/// Stacked collocation matrix for `(gamma_S, gamma_B)`: normal velocity at
/// the dual nodes of both sheets, one circulation row per sheet.
fn stacked_matrix(ctx: &KernelContext, surface: &Curve, ops: Option<&OperatorCache>) -> DenseOperator {
    let n = surface.len();
    let nb = ops.map_or(0, |o| o.len());
    let dual = surface.dual();
    let z = surface.points();
    let ze = surface.d1();
    let de = surface.de();
    let dss = cot_table(ctx.l, dual.points(), z);
    let dsb = ops.map(|o| cot_table(ctx.l, dual.points(), o.curve.points()));
    let dbs = ops.map(|o| cot_table(ctx.l, o.dual.points(), z));
    DenseOperator::from_rows(n + nb, n + nb, |k, row| {
        if k + 1 == n {
            row[..n].iter_mut().for_each(|r| *r = de);
            return;
        }
        if k < n {
            let zte = dual.d1()[k];
            let mut null = 0.0;
            for (j, c) in dss.row(k).iter().enumerate() {
                let kk = ctx.k_from_cot(*c);
                row[j] = de * (kk * zte).im;
                null += de * (kk * ze[j]).im;
            }
            row[k] -= 0.5 * null;
            row[(k + 1) % n] -= 0.5 * null;
            if let (Some(o), Some(t)) = (ops, &dsb) {
                let db = o.curve.de();
                for (j, c) in t.row(k).iter().enumerate() {
                    row[n + j] = db * (ctx.k_from_cot(*c) * zte).im;
                }
            }
            return;
        }
        let (o, t) = (ops.unwrap(), dbs.as_ref().unwrap());
        let kb = k - n;
        row[n..].copy_from_slice(o.bb.row(kb));
        if kb + 1 < nb {
            let zte = o.dual.d1()[kb];
            for (j, c) in t.row(kb).iter().enumerate() {
                row[j] = de * (ctx.k_from_cot(*c) * zte).im;
            }
        }
    })
}

/// Initial vortex densities for surface normal velocity `g_normal`.
pub fn solve_initial_gamma_s(
    problem: &Problem,
    surface: &Curve,
    g_normal: &[f64],
    vortices: &[PointVortex],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_compatible(surface, g_normal)?;
    let p = &problem.params;
    let ctx = &problem.ctx;
    let ops = problem.ops.as_ref();
    let n = surface.len();
    let nb = ops.map_or(0, |o| o.len());
    let bottom = ops.map(|o| &o.curve);
    let dual = surface.dual();
    let gd = restrict_to_dual(g_normal);
    let vort_sum: f64 = vortices.iter().map(|v| v.strength).sum();

    let field = |x: C64| -> C64 {
        let mut u = omega_velocity(ctx, surface, bottom, p.omega0, x, None);
        for v in vortices {
            u += ctx.k_unchecked(x - v.z) * v.strength;
        }
        u
    };
    let mut rhs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let (x, xe) = (dual.points()[k], dual.d1()[k]);
            -gd[k] * xe.norm() - (xe * field(x)).im
        })
        .collect();
    let area = if p.omega0 != 0.0 { fluid_area(surface, bottom) } else { 0.0 };
    rhs[n - 1] = if ops.is_some() { p.gamma } else { 0.0 } - p.omega0 * area - vort_sum;
    if let Some(o) = ops {
        let mut rb: Vec<f64> = (0..nb)
            .into_par_iter()
            .map(|k| {
                let (x, xe) = (o.dual.points()[k], o.dual.d1()[k]);
                -(xe * field(x)).im
            })
            .collect();
        rb[nb - 1] = -p.gamma;
        rhs.extend(rb);
    }
    let m = stacked_matrix(ctx, surface, ops);
    let sol = m.lu()?.solve(&rhs);
    Ok((sol[..n].to_vec(), sol[n..].to_vec()))
}

/// Bottom vortex density for the current surface density.
pub fn solve_gamma_b(snap: &Snapshot<'_>, gamma_s: &[f64]) -> Result<Vec<f64>> {
    let Some(ops) = snap.problem.ops.as_ref() else { return Ok(Vec::new()) };
    let p = &snap.problem.params;
    let ctx = &snap.problem.ctx;
    let nb = ops.len();
    let de = snap.surface.de();
    let t = snap.dbs().expect("bottom present");
    let mut rhs: Vec<f64> = (0..nb)
        .into_par_iter()
        .map(|k| {
            if k + 1 == nb {
                return -p.gamma;
            }
            let (x, xe) = (ops.dual.points()[k], ops.dual.d1()[k]);
            let mut u: C64 = t.row(k).iter().zip(gamma_s).map(|(c, g)| ctx.k_from_cot(*c) * (g * de)).sum();
            for v in &snap.vortices {
                u += ctx.k_unchecked(x - v.z) * v.strength;
            }
            u += omega_velocity(ctx, &snap.surface, Some(&ops.curve), p.omega0, x, None);
            -(xe * u).im
        })
        .collect();
    rhs[nb - 1] = -p.gamma;
    let g = ops.bb_lu.solve(&rhs);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFinite("bottom density"));
    }
    Ok(g)
}

/// Bottom dipole density making the potential vanish below the bottom.
pub fn solve_mu_b(snap: &Snapshot<'_>, mu_s: &[f64]) -> Result<(Vec<f64>, NeumannSolveReport)> {
    let Some(ops) = snap.problem.ops.as_ref() else {
        return Ok((Vec::new(), NeumannSolveReport { iterations: 0, residual_bound: 0.0, converged: true }));
    };
    let ctx = &snap.problem.ctx;
    let de = snap.surface.de();
    let ze = snap.surface.d1();
    let t = snap.bs().expect("bottom present");
    let rhs: Vec<f64> = (0..ops.len())
        .into_par_iter()
        .map(|i| {
            -t.row(i).iter().zip(mu_s).zip(ze).map(|((c, m), e)| m * (ctx.k_from_cot(*c) * e).re).sum::<f64>() * de
        })
        .collect();
    let (x, rep) = neumann_solve(&ops.astar, &rhs, ops.astar_rate, snap.problem.solve);
    if rep.converged {
        return Ok((x, rep));
    }
    Ok((ops.astar_lu.solve(&rhs), rep))
}

/// Trapezoid anti-derivative of `g` on the periodic grid with zero mean.
pub fn antiderivative_zero_mean(g: &[f64], de: f64) -> Vec<f64> {
    let n = g.len();
    let mut mu = vec![0.0; n];
    for k in 1..n {
        mu[k] = mu[k - 1] + 0.5 * (g[k - 1] + g[k]) * de;
    }
    let mean = mu.iter().sum::<f64>() / n as f64;
    mu.iter_mut().for_each(|m| *m -= mean);
    mu
}

/// Initial dipole densities: sheet normal velocity is `g_normal` minus the
/// background's normal velocity.
pub fn solve_initial_mu_s(problem: &Problem, surface: &Curve, g_normal: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = surface.len();
    let mut g_sheet = Vec::with_capacity(n);
    for i in 0..n {
        let ze = surface.d1()[i];
        let ub = background_velocity(problem, Some(surface), surface.points()[i])?;
        // u.n = -Im(u^ z_e)/|z_e|
        g_sheet.push(g_normal[i] + (ub * ze).im / ze.norm());
    }
    check_compatible(surface, &g_sheet)?;
    let ctx = &problem.ctx;
    let ops = problem.ops.as_ref();
    let nb = ops.map_or(0, |o| o.len());
    let dual = surface.dual();
    let gd = restrict_to_dual(g_normal);
    let mut rhs = Vec::with_capacity(n + nb);
    for k in 0..n {
        let (x, xe) = (dual.points()[k], dual.d1()[k]);
        let ub = background_velocity(problem, Some(surface), x)?;
        rhs.push(-gd[k] * xe.norm() - (xe * ub).im);
    }
    rhs[n - 1] = 0.0;
    rhs.extend(std::iter::repeat(0.0).take(nb));
    let sol = stacked_matrix(ctx, surface, ops).lu()?.solve(&rhs);
    let mu_s = antiderivative_zero_mean(&sol[..n], surface.de());
    let snap = Snapshot::new(problem, surface.clone(), Vec::new())?;
    let (mu_b, _) = solve_mu_b(&snap, &mu_s)?;
    Ok((mu_s, mu_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::graph_points;
    use crate::model::{Formulation, PhysParams};
    use crate::regularize::Regularizer;

    const L: f64 = 2.0 * PI;

    fn flat(n: usize, y: f64) -> Curve {
        Curve::new(graph_points(n, L, |_| y), L).unwrap()
    }

    fn problem(params: PhysParams, bottom: Option<Curve>, bg: BackgroundField, f: Formulation) -> Problem {
        Problem::new(params, bottom, bg, f, Regularizer::None).unwrap()
    }

    /// Normal trace `-Im(u^ z_e)/|z_e|` at primal surface nodes, one side.
    fn normal_trace(p: &Problem, s: &Curve, gs: &[f64], gb: &[f64], vort: &[PointVortex]) -> Vec<f64> {
        let ctx = &p.ctx;
        let cs: Vec<C64> = gs.iter().map(|g| C64::new(*g, 0.0)).collect();
        (0..s.len())
            .map(|i| {
                let x = s.points()[i];
                let mut u = ctx.plemelj_limit(s, &cs, i, crate::kernels::Side::Below).unwrap() / 1.0;
                if let Some(o) = &p.ops {
                    let db = o.curve.de();
                    u += o.curve.points().iter().zip(gb).map(|(z, g)| ctx.k_unchecked(x - z) * g * db).sum::<C64>();
                }
                for v in vort {
                    u += ctx.k_unchecked(x - v.z) * v.strength;
                }
                -(u * s.d1()[i]).im / s.d1()[i].norm()
            })
            .collect()
    }

    #[test]
    fn zero_data_zero_density() {
        let p = problem(PhysParams::default(), Some(flat(32, -1.0)), BackgroundField::Zero, Formulation::Vortex);
        let (gs, gb) = solve_initial_gamma_s(&p, &flat(32, 0.0), &[0.0; 32], &[]).unwrap();
        assert!(gs.iter().chain(&gb).all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn flat_circulation_uniform() {
        let params = PhysParams { gamma: 1.0, ..Default::default() };
        let p = problem(params, Some(flat(48, -1.0)), BackgroundField::Zero, Formulation::Vortex);
        let (gs, gb) = solve_initial_gamma_s(&p, &flat(32, 0.0), &[0.0; 32], &[]).unwrap();
        for g in &gs {
            assert!((g - 1.0 / L).abs() < 1e-12, "{g}");
        }
        for g in &gb {
            assert!((g + 1.0 / L).abs() < 1e-12, "{g}");
        }
    }

    #[test]
    fn rejects_incompatible_data() {
        let p = problem(PhysParams::default(), None, BackgroundField::Zero, Formulation::Vortex);
        let r = solve_initial_gamma_s(&p, &flat(16, 0.0), &[1.0; 16], &[]);
        assert!(matches!(r, Err(SimError::Compatibility(_))));
    }

    fn wave_trace_error(n: usize) -> f64 {
        let a = 0.05;
        let s = Curve::new(graph_points(n, L, |x| a * x.cos()), L).unwrap();
        let g = project_compatible(&s, &(0..n).map(|j| a * (L * j as f64 / n as f64).sin()).collect::<Vec<_>>());
        let p = problem(PhysParams::default(), Some(flat(n, -1.0)), BackgroundField::Zero, Formulation::Vortex);
        let (gs, gb) = solve_initial_gamma_s(&p, &s, &g, &[]).unwrap();
        let tr = normal_trace(&p, &s, &gs, &gb, &[]);
        tr.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn wave_trace_second_order() {
        let e1 = wave_trace_error(64);
        let e2 = wave_trace_error(128);
        assert!(e1 < 1e-3, "{e1}");
        assert!(e1 / e2 > 3.0, "{e1} {e2}");
    }

    #[test]
    fn vortex_over_bottom_trace() {
        let n = 256;
        let params = PhysParams::default();
        let p = problem(params, Some(flat(n, -1.0)), BackgroundField::Zero, Formulation::Vortex);
        let s = flat(n, 0.0);
        let vort = vec![PointVortex { z: C64::new(1.0, -0.5), strength: 0.3 }];
        let snap = Snapshot::new(&p, s.clone(), vort.clone()).unwrap();
        let gs = vec![-0.3 / L; n];
        let gb = solve_gamma_b(&snap, &gs).unwrap();
        let o = p.ops.as_ref().unwrap();
        let mut worst = 0.0f64;
        for k in 0..n - 1 {
            let x = o.dual.points()[k];
            let u = crate::kernels::field_velocity(
                &p.ctx,
                Some(crate::kernels::Sheet { curve: &s, density: &gs }),
                Some(crate::kernels::Sheet { curve: &o.curve, density: &gb }),
                &vort,
                0.0,
                x,
            );
            worst = worst.max((u * o.dual.d1()[k]).im.abs());
        }
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn mu_b_kills_potential_below() {
        let n = 128;
        let p = problem(PhysParams::default(), Some(flat(n, -1.0)), BackgroundField::Zero, Formulation::Dipole);
        let s = Curve::new(graph_points(n, L, |x| 0.1 * x.cos()), L).unwrap();
        let mu: Vec<f64> = (0..n).map(|j| 0.3 + (L * j as f64 / n as f64).sin()).collect();
        let snap = Snapshot::new(&p, s.clone(), Vec::new()).unwrap();
        let (mb, rep) = solve_mu_b(&snap, &mu).unwrap();
        assert!(rep.converged);
        let o = p.ops.as_ref().unwrap();
        let phi = |x: C64| -> f64 {
            let sheet = |c: &Curve, m: &[f64]| -> f64 {
                c.points().iter().zip(c.d1()).zip(m).map(|((z, ze), m)| m * (p.ctx.k_unchecked(x - z) * ze).re).sum::<f64>() * c.de()
            };
            sheet(&s, &mu) + sheet(&o.curve, &mb)
        };
        let v = phi(C64::new(0.7, -1.6));
        assert!(v.abs() < 1e-8, "{v}");
    }

    #[test]
    fn harmonic_flat_is_uniform() {
        let n = 64;
        let p0 = problem(PhysParams::default(), Some(flat(n, -1.0)), BackgroundField::Zero, Formulation::Dipole);
        let bg = harmonic_background(p0.ops.as_ref().unwrap(), 0.7);
        if let BackgroundField::Harmonic { density, .. } = &bg {
            let total: f64 = density.iter().sum::<f64>() * L / n as f64;
            assert!((total + 1.4).abs() < 1e-12);
        }
        let p = Problem { background: bg, ..p0 };
        let u = background_velocity(&p, None, C64::new(0.3, -0.2)).unwrap();
        assert!((u - C64::new(0.7 / L, 0.0)).norm() < 1e-10, "{u}");
    }

    #[test]
    fn uniform_value() {
        let p = problem(PhysParams::default(), None, BackgroundField::Uniform { gamma: 2.0 }, Formulation::Dipole);
        let u = background_velocity(&p, None, C64::new(0.1, -3.0)).unwrap();
        assert!((u.re - 1.0 / PI).abs() < 1e-15 && u.im == 0.0);
    }

    #[test]
    fn mirror_pair_tangent_to_bottom() {
        let bg = BackgroundField::Mirror {
            gamma: 0.2,
            h0: 1.0,
            vortices: vec![PointVortex { z: C64::new(0.5, -0.4), strength: 1.3 }],
            omega0: 0.0,
        };
        let p = Problem {
            background: bg,
            ..problem(PhysParams::default(), Some(flat(16, -1.0)), BackgroundField::Zero, Formulation::Vortex)
        };
        for x in [0.0, 0.5, 2.0] {
            let u = background_velocity(&p, None, C64::new(x, -1.0)).unwrap();
            assert!(u.im.abs() < 1e-14);
        }
    }

    #[test]
    fn antiderivative_inverts_difference() {
        let n = 128;
        let de = L / n as f64;
        let g: Vec<f64> = (0..n).map(|j| (j as f64 * de).cos()).collect();
        let mu = antiderivative_zero_mean(&g, de);
        assert!(mu.iter().sum::<f64>().abs() < 1e-12);
        let back = crate::geometry::diff_periodic(&mu, de);
        let err = back.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn dipole_initial_zero_for_background_trace() {
        let n = 32;
        let p = problem(PhysParams::default(), Some(flat(n, -1.0)), BackgroundField::Uniform { gamma: 1.0 }, Formulation::Dipole);
        let (mu, mb) = solve_initial_mu_s(&p, &flat(n, 0.0), &vec![0.0; n]).unwrap();
        assert!(mu.iter().chain(&mb).all(|v| v.abs() < 1e-13));
    }
}
