//! Periodic Green function of the strip and the kernels derived from it.
//!
//! `K(x) = cot(pi x / L) / (2 L i)` is the conjugated perpendicular gradient
//! of `G`, `S(x) = pi / (2 L^2 i) / sin^2(pi x / L) = -K'(x)`.

use std::f64::consts::{LN_2, PI};

use thiserror::Error;

use crate::geometry::{Curve, C64, I};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel evaluated on a lattice point ({0})")]
    Singular(C64),
    #[error("node index {index} out of range for {len} nodes")]
    Index { index: usize, len: usize },
    #[error("density has {got} values for {expected} nodes")]
    Length { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelContext {
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Above,
    Below,
}

/// `cot(w)` for complex `w`, written so that neither large `|Im w|` nor
/// small `|w|` loses accuracy.
#[inline]
pub fn cot(w: C64) -> C64 {
    let (a, b) = (w.re, w.im);
    if b.abs() > 300.0 {
        return C64::new(0.0, -b.signum());
    }
    let (sa, ca) = a.sin_cos();
    let sb = b.sinh();
    let cb = b.cosh();
    let den = sa * sa + sb * sb;
    C64::new(sa * ca / den, -sb * cb / den)
}

/// `ln(cosh(2b) - cos(2a))` for `w = a + ib`.
#[inline]
pub fn log_cosh_cos(w: C64) -> f64 {
    let (a, b) = (w.re, w.im.abs());
    let sa = a.sin();
    if b > 20.0 {
        let q = (-2.0 * b).exp();
        2.0 * b - LN_2 + ((1.0 - q) * (1.0 - q) + 4.0 * sa * sa * q).ln()
    } else {
        let sb = b.sinh();
        (2.0 * (sb * sb + sa * sa)).ln()
    }
}

impl KernelContext {
    pub fn new(l: f64) -> Self {
        assert!(l > 0.0, "period must be positive");
        KernelContext { l }
    }

    pub fn period(&self) -> f64 {
        self.l
    }

    #[inline]
    fn arg(&self, x: C64) -> C64 {
        x * (PI / self.l)
    }

    fn on_lattice(&self, x: C64) -> bool {
        if x.im != 0.0 {
            return false;
        }
        let r = (x.re / self.l).round();
        (x.re - r * self.l).abs() <= 1e-300
    }

    fn check(&self, x: C64) -> Result<(), KernelError> {
        if self.on_lattice(x) {
            Err(KernelError::Singular(x))
        } else {
            Ok(())
        }
    }

    pub fn green(&self, x: C64) -> Result<f64, KernelError> {
        Ok(self.log_kernel(x)? / (4.0 * PI))
    }

    pub fn log_kernel(&self, x: C64) -> Result<f64, KernelError> {
        self.check(x)?;
        Ok(self.log_unchecked(x))
    }

    pub fn cot_kernel(&self, x: C64) -> Result<C64, KernelError> {
        self.check(x)?;
        Ok(self.k_unchecked(x))
    }

    pub fn sin2_kernel(&self, x: C64) -> Result<C64, KernelError> {
        self.check(x)?;
        Ok(self.s_unchecked(x))
    }

    #[inline]
    pub fn log_unchecked(&self, x: C64) -> f64 {
        log_cosh_cos(self.arg(x))
    }

    #[inline]
    pub fn green_unchecked(&self, x: C64) -> f64 {
        self.log_unchecked(x) / (4.0 * PI)
    }

    #[inline]
    pub fn k_unchecked(&self, x: C64) -> C64 {
        self.k_from_cot(cot(self.arg(x)))
    }

    #[inline]
    pub fn s_unchecked(&self, x: C64) -> C64 {
        self.s_from_cot(cot(self.arg(x)))
    }

    /// `K` from a precomputed `cot(pi x / L)`.
    #[inline]
    pub fn k_from_cot(&self, c: C64) -> C64 {
        // c / (2 L i) = -i c / (2L)
        C64::new(c.im, -c.re) / (2.0 * self.l)
    }

    /// `S` from a precomputed `cot(pi x / L)`, via `1/sin^2 = 1 + cot^2`.
    #[inline]
    pub fn s_from_cot(&self, c: C64) -> C64 {
        let s = 1.0 + c * c;
        C64::new(s.im, -s.re) * (PI / (2.0 * self.l * self.l))
    }

    /// Phase factor `exp(2 pi i z / L)`; cot of a difference of two points is
    /// `i (w1 + w2) / (w1 - w2)`.
    #[inline]
    pub fn phase(&self, z: C64) -> C64 {
        let t = 2.0 * PI / self.l;
        C64::from_polar((-t * z.im).exp(), t * z.re)
    }

    /// `pv sum_j cot(pi (z_i - z_j)/L) f_j de` in desingularized form. The
    /// removable diagonal term is filled with its continuous limit
    /// `(L/pi) (f z_ee - f_e z_e) / z_e^2` so the rule stays second order.
    pub fn desingularized_sum(&self, c: &Curve, f: &[C64], i: usize) -> Result<C64, KernelError> {
        if i >= c.len() {
            return Err(KernelError::Index { index: i, len: c.len() });
        }
        if f.len() != c.len() {
            return Err(KernelError::Length { expected: c.len(), got: f.len() });
        }
        let z = c.points();
        let ze = c.d1();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..c.len() {
            if j == i {
                continue;
            }
            let ct = cot(self.arg(z[i] - z[j]));
            acc += ct * (f[j] * ze[i] - f[i] * ze[j]);
        }
        let n = c.len();
        let fe = (f[(i + 1) % n] - f[(i + n - 1) % n]) / (2.0 * c.de());
        let diag = (f[i] * c.d2()[i] - fe * ze[i]) * (self.l / PI) / ze[i];
        Ok((acc + diag) * c.de() / ze[i])
    }

    /// One-sided conjugated-velocity trace of a sheet of density `f` at node `i`.
    pub fn plemelj_limit(
        &self,
        c: &Curve,
        f: &[C64],
        i: usize,
        side: Side,
    ) -> Result<C64, KernelError> {
        let pv = self.desingularized_sum(c, f, i)? / (2.0 * self.l * I);
        let jump = 0.5 * f[i] / c.d1()[i];
        Ok(match side {
            Side::Above => pv - jump,
            Side::Below => pv + jump,
        })
    }
}

/// A sheet: a curve carrying a real density per node.
#[derive(Debug, Clone, Copy)]
pub struct Sheet<'a> {
    pub curve: &'a Curve,
    pub density: &'a [f64],
}

/// Dirac vortex of circulation `strength`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PointVortex {
    pub z: C64,
    pub strength: f64,
}

/// Conjugated velocity at an off-sheet point: sheets, vortices, and the
/// boundary terms that replace a uniform vorticity `omega0` in the fluid.
pub fn field_velocity(
    ctx: &KernelContext,
    surface: Option<Sheet<'_>>,
    bottom: Option<Sheet<'_>>,
    vortices: &[PointVortex],
    omega0: f64,
    x: C64,
) -> C64 {
    let mut u = C64::new(0.0, 0.0);
    for (sheet, sign) in [(surface, 1.0), (bottom, -1.0)] {
        let Some(s) = sheet else { continue };
        let z = s.curve.points();
        let ze = s.curve.d1();
        let de = s.curve.de();
        for j in 0..z.len() {
            let d = x - z[j];
            u += ctx.k_unchecked(d) * (s.density[j] * de);
            if omega0 != 0.0 {
                u += ze[j].conj() * (sign * omega0 / (4.0 * PI) * ctx.log_unchecked(d) * de);
            }
        }
    }
    for v in vortices {
        u += ctx.k_unchecked(x - v.z) * v.strength;
    }
    u
}

/// Stream function matching [`field_velocity`] for the sheet and vortex parts.
pub fn field_stream(ctx: &KernelContext, sheets: &[Sheet<'_>], vortices: &[PointVortex], x: C64) -> f64 {
    let mut psi = 0.0;
    for s in sheets {
        let z = s.curve.points();
        let de = s.curve.de();
        for j in 0..z.len() {
            psi += ctx.green_unchecked(x - z[j]) * s.density[j] * de;
        }
    }
    for v in vortices {
        psi += ctx.green_unchecked(x - v.z) * v.strength;
    }
    psi
}
