//! Dense boundary operators and their inversion.
//!
//! Operators close to `I/2` are inverted with the Neumann iteration
//! `U <- R U + 2 b`, `R = I - 2A`, stopped with the a-posteriori bound
//! `|U_{n+1} - U_n| / (1 - |R|)`. The coupled surface operators use the same
//! iteration preconditioned by the exact inverse of `I + (a_j)_{ij}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Curve, C64};
use crate::kernels::{cot, KernelContext};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("matrix is singular")]
    Singular,
    #[error("rank-one correction is near singular: 1 + sum a = {0:e}")]
    NearSingular(f64),
    #[error("fixed point did not converge after {iterations} iterations (last increment {last_increment:e}, ratio {ratio:.3})")]
    NoConvergence { iterations: usize, last_increment: f64, ratio: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseOperator {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseOperator { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Fills rows in parallel; `f(i, row)` writes row `i`.
    pub fn from_rows(rows: usize, cols: usize, f: impl Fn(usize, &mut [f64]) + Sync) -> Self {
        let mut m = Self::zeros(rows, cols);
        if cols > 0 {
            m.data.par_chunks_mut(cols).enumerate().for_each(|(i, row)| f(i, row));
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension");
        if self.cols == 0 {
            return vec![0.0; self.rows];
        }
        self.data
            .par_chunks(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        assert_eq!(self.cols, other.rows);
        let (n, k, m) = (self.rows, self.cols, other.cols);
        DenseOperator::from_rows(n, m, |i, row| {
            for p in 0..k {
                let a = self.data[i * k + p];
                if a != 0.0 {
                    let o = &other.data[p * m..(p + 1) * m];
                    for (r, b) in row.iter_mut().zip(o) {
                        *r += a * b;
                    }
                }
            }
        })
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn lu(&self) -> Result<LuFactor, SolveError> {
        LuFactor::new(self)
    }
}

/// Dense LU factorization (partial pivoting).
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl LuFactor {
    pub fn new(m: &DenseOperator) -> Result<Self, SolveError> {
        if m.rows != m.cols {
            return Err(SolveError::Dimension { expected: m.rows, got: m.cols });
        }
        let lu = m.to_dmatrix().lu();
        if !lu.is_invertible() {
            return Err(SolveError::Singular);
        }
        // Reject numerically singular pivots as well.
        let u = lu.u();
        let max = u.diagonal().iter().map(|v| v.abs()).fold(0.0, f64::max);
        let min = u.diagonal().iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        if !(min > 1e-14 * max) {
            return Err(SolveError::Singular);
        }
        Ok(LuFactor { lu, n: m.rows })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let x = self.lu.solve(&DVector::from_column_slice(b)).expect("factor checked invertible");
        x.as_slice().to_vec()
    }

    /// Solves for every column of `b` at once.
    pub fn solve_matrix(&self, b: &DenseOperator) -> DenseOperator {
        assert_eq!(b.rows, self.n);
        let x = self.lu.solve(&b.to_dmatrix()).expect("factor checked invertible");
        let mut out = DenseOperator::zeros(b.rows, b.cols);
        for i in 0..b.rows {
            for j in 0..b.cols {
                out.set(i, j, x[(i, j)]);
            }
        }
        out
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannSolveReport {
    pub iterations: usize,
    pub residual_bound: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterOptions {
    /// Relative to the sup norm of the right-hand side.
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for IterOptions {
    fn default() -> Self {
        IterOptions { rel_tol: 1e-10, max_iters: 500 }
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Power-iteration estimate of the spectral radius of `apply`.
pub fn power_norm_estimate(apply: impl Fn(&[f64]) -> Vec<f64>, n: usize, steps: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // deterministic, not aligned with any symmetry of the problem
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64 * 0.754_877_666).fract() - 0.5)).collect();
    let mut est = 0.0;
    for _ in 0..steps {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nx == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let y = apply(&x);
        est = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y;
    }
    est
}

/// `R = I - 2A` applied to `x`.
fn apply_r(a: &DenseOperator, x: &[f64]) -> Vec<f64> {
    let ax = a.matvec(x);
    x.iter().zip(ax).map(|(xi, axi)| xi - 2.0 * axi).collect()
}

/// `|I - 2A|` estimated with `steps` power iterations.
pub fn neumann_rate(a: &DenseOperator, steps: usize) -> f64 {
    power_norm_estimate(|x| apply_r(a, x), a.rows, steps)
}

/// Solves `A x = b` for `A = (I - R)/2` by the Neumann series. `rate` is an
/// estimate of `|R|`, usually from [`neumann_rate`].
pub fn neumann_solve(
    a: &DenseOperator,
    rhs: &[f64],
    rate: f64,
    opts: IterOptions,
) -> (Vec<f64>, NeumannSolveReport) {
    assert_eq!(rhs.len(), a.rows);
    let scale = sup(rhs);
    if scale == 0.0 {
        let report = NeumannSolveReport { iterations: 0, residual_bound: 0.0, converged: true };
        return (vec![0.0; rhs.len()], report);
    }
    let tol = opts.rel_tol * scale;
    let mut x: Vec<f64> = rhs.iter().map(|b| 2.0 * b).collect();
    let mut bound = f64::INFINITY;
    for it in 1..=opts.max_iters {
        let ax = a.matvec(&x);
        let mut inc = 0.0f64;
        for i in 0..x.len() {
            let d = 2.0 * (rhs[i] - ax[i]);
            x[i] += d;
            inc = inc.max(d.abs());
        }
        bound = if rate < 1.0 { inc / (1.0 - rate) } else { f64::INFINITY };
        if bound < tol {
            return (x, NeumannSolveReport { iterations: it, residual_bound: bound, converged: true });
        }
    }
    (x, NeumannSolveReport { iterations: opts.max_iters, residual_bound: bound, converged: false })
}

/// Exact inverse of `I + (a_j)_{i,j}` (every row equal to `a`).
#[derive(Debug, Clone, PartialEq)]
pub struct RankOne {
    pub a: Vec<f64>,
    denom: f64,
}

impl RankOne {
    pub fn new(a: Vec<f64>) -> Result<Self, SolveError> {
        let denom = 1.0 + a.iter().sum::<f64>();
        if denom.abs() <= 1e-8 {
            return Err(SolveError::NearSingular(denom));
        }
        Ok(RankOne { a, denom })
    }

    /// `(I + (a_j))^{-1} x = x - (a . x) / (1 + sum a) * 1`
    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        let s = self.a.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / self.denom;
        x.iter().map(|v| v - s).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let s: f64 = self.a.iter().zip(x).map(|(a, b)| a * b).sum();
        x.iter().map(|v| v + s).collect()
    }

    pub fn matrix(&self) -> DenseOperator {
        let n = self.a.len();
        DenseOperator::from_rows(n, n, |i, row| {
            for (j, r) in row.iter_mut().enumerate() {
                *r = if i == j { 1.0 } else { 0.0 } + self.a[j];
            }
        })
    }

    pub fn inverse_matrix(&self) -> DenseOperator {
        let n = self.a.len();
        DenseOperator::from_rows(n, n, |i, row| {
            for (j, r) in row.iter_mut().enumerate() {
                *r = if i == j { 1.0 } else { 0.0 } - self.a[j] / self.denom;
            }
        })
    }
}

/// `rank_one_inverse(a)`: the matrix `(I + (a_j)_{i,j})^{-1}`.
pub fn rank_one_inverse(a: &[f64]) -> Result<DenseOperator, SolveError> {
    Ok(RankOne::new(a.to_vec())?.inverse_matrix())
}

/// Solves `op(x) = rhs` where `op ~ (1/2)(I + (a_j))`, by
/// `u <- u + 2 P (rhs - op(u))` with `P = (I + (a_j))^{-1}`.
pub fn preconditioned_fixed_point(
    op: impl Fn(&[f64]) -> Vec<f64>,
    pre: &RankOne,
    rhs: &[f64],
    opts: IterOptions,
) -> Result<(Vec<f64>, NeumannSolveReport), SolveError> {
    preconditioned_fixed_point_from(op, pre, rhs, None, opts)
}

/// [`preconditioned_fixed_point`] started from `x0` instead of `2 P rhs`.
pub fn preconditioned_fixed_point_from(
    op: impl Fn(&[f64]) -> Vec<f64>,
    pre: &RankOne,
    rhs: &[f64],
    x0: Option<&[f64]>,
    opts: IterOptions,
) -> Result<(Vec<f64>, NeumannSolveReport), SolveError> {
    let scale = sup(rhs);
    if scale == 0.0 {
        let report = NeumannSolveReport { iterations: 0, residual_bound: 0.0, converged: true };
        return Ok((vec![0.0; rhs.len()], report));
    }
    let tol = opts.rel_tol * scale;
    let mut u: Vec<f64> = match x0 {
        Some(x) if x.len() == rhs.len() && x.iter().all(|v| v.is_finite()) => x.to_vec(),
        _ => pre.apply_inverse(rhs).iter().map(|v| 2.0 * v).collect(),
    };
    let mut prev_inc = f64::INFINITY;
    let mut ratio: f64 = 0.0;
    let mut rising = 0;
    for it in 1..=opts.max_iters {
        let au = op(&u);
        let r: Vec<f64> = rhs.iter().zip(&au).map(|(b, a)| b - a).collect();
        let d = pre.apply_inverse(&r);
        let mut inc = 0.0f64;
        for (ui, di) in u.iter_mut().zip(&d) {
            *ui += 2.0 * di;
            inc = inc.max((2.0 * di).abs());
        }
        if !inc.is_finite() {
            return Err(SolveError::NoConvergence { iterations: it, last_increment: inc, ratio });
        }
        if prev_inc.is_finite() && prev_inc > 0.0 {
            let q = inc / prev_inc;
            ratio = if it <= 2 { q } else { ratio.max(q).min(q.max(0.5 * ratio)) };
            rising = if q >= 1.0 { rising + 1 } else { 0 };
        }
        prev_inc = inc;
        let bound = if ratio < 1.0 { inc / (1.0 - ratio) } else { f64::INFINITY };
        if bound < tol || inc == 0.0 {
            let report = NeumannSolveReport { iterations: it, residual_bound: bound, converged: true };
            return Ok((u, report));
        }
        if rising >= 5 {
            return Err(SolveError::NoConvergence { iterations: it, last_increment: inc, ratio });
        }
    }
    Err(SolveError::NoConvergence { iterations: opts.max_iters, last_increment: prev_inc, ratio })
}

/// Matrix of a linear map given by its action, column by column.
pub fn dense_from_action(n: usize, op: impl Fn(&[f64]) -> Vec<f64> + Sync) -> DenseOperator {
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            op(&e)
        })
        .collect();
    let mut m = DenseOperator::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            m.set(i, j, c[i]);
        }
    }
    m
}

/// Double-layer matrix of the bottom: off-diagonal `de Re[K(z_i - z_j) z_e,j]`,
/// diagonal `1/2 - de Re[z_ee / (4 pi i z_e)]`.
pub fn assemble_astar_b(ctx: &KernelContext, bottom: &Curve) -> DenseOperator {
    let z = bottom.points();
    let ze = bottom.d1();
    let zee = bottom.d2();
    let de = bottom.de();
    let n = bottom.len();
    let s = PI / ctx.l;
    DenseOperator::from_rows(n, n, |i, row| {
        for j in 0..n {
            row[j] = if i == j {
                let a = zee[i] / ze[i];
                // Re[a / (4 pi i)] = Im(a) / (4 pi)
                0.5 - de * a.im / (4.0 * PI)
            } else {
                de * (ctx.k_from_cot(cot((z[i] - z[j]) * s)) * ze[j]).re
            };
        }
    })
}

/// Collocation matrix of the bottom vortex sheet: rows at the dual nodes
/// `0..N-1` enforce zero normal velocity, the last row is the circulation.
pub fn assemble_bb(ctx: &KernelContext, bottom: &Curve, dual: &Curve) -> DenseOperator {
    let z = bottom.points();
    let ze = bottom.d1();
    let zt = dual.points();
    let zte = dual.d1();
    let de = bottom.de();
    let n = bottom.len();
    let s = PI / ctx.l;
    DenseOperator::from_rows(n, n, |k, row| {
        if k + 1 == n {
            row.iter_mut().for_each(|r| *r = de);
            return;
        }
        // desingularized: subtract the dual-point null sum on the two
        // neighbouring nodes that define the midpoint density
        let mut null = C64::new(0.0, 0.0);
        for j in 0..n {
            let kk = ctx.k_from_cot(cot((zt[k] - z[j]) * s));
            row[j] = de * (zte[k] * kk).im;
            null += kk * ze[j];
        }
        let corr = 0.5 * de * null.im;
        row[k] -= corr;
        row[(k + 1) % n] -= corr;
    })
}
