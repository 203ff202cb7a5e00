//! Complete elliptic integrals, Jacobi `cn`, and the cnoidal dispersion
//! relation used to build the solitary-wave initial state.
//!
//! Everything accepts the complementary parameter `m1 = 1 - m` as well,
//! because the long-period cnoidal wave has `m1` of order `1e-14` and `1 - m`
//! cannot be formed accurately from `m`.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecfunError {
    #[error("parameter m = {0} outside [0, 1)")]
    Domain(f64),
    #[error("dispersion relation has no root in (0, 1): residuals {lo:e} and {hi:e} at the ends")]
    NoRoot { lo: f64, hi: f64 },
    #[error("invalid cnoidal input: {0}")]
    Input(&'static str),
}

/// Elliptic parameter kept with its complement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticParam {
    pub m: f64,
    pub m1: f64,
}

impl EllipticParam {
    pub fn new(m: f64) -> Result<Self, SpecfunError> {
        if !(0.0..1.0).contains(&m) {
            return Err(SpecfunError::Domain(m));
        }
        Ok(EllipticParam { m, m1: 1.0 - m })
    }

    pub fn from_complement(m1: f64) -> Result<Self, SpecfunError> {
        if !(m1 > 0.0 && m1 <= 1.0) {
            return Err(SpecfunError::Domain(1.0 - m1));
        }
        Ok(EllipticParam { m: 1.0 - m1, m1 })
    }
}

/// AGM sequence: returns `(a_N, sum_n 2^(n-1) c_n^2)`.
fn agm(p: EllipticParam) -> (f64, f64) {
    let mut a = 1.0;
    let mut b = p.m1.sqrt();
    let mut sum = 0.5 * p.m;
    let mut pow = 0.5;
    for _ in 0..64 {
        let c = 0.5 * (a - b);
        if c.abs() <= 1e-17 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        pow *= 2.0;
        sum += pow * c * c;
    }
    (a, sum)
}

pub fn elliptic_k_param(p: EllipticParam) -> f64 {
    PI / (2.0 * agm(p).0)
}

pub fn elliptic_e_param(p: EllipticParam) -> f64 {
    if p.m1 == 0.0 {
        return 1.0;
    }
    let (a, sum) = agm(p);
    PI / (2.0 * a) * (1.0 - sum)
}

pub fn elliptic_k(m: f64) -> Result<f64, SpecfunError> {
    Ok(elliptic_k_param(EllipticParam::new(m)?))
}

/// Complete integral of the second kind; `m = 1` is accepted (value 1).
pub fn elliptic_e(m: f64) -> Result<f64, SpecfunError> {
    if m == 1.0 {
        return Ok(1.0);
    }
    Ok(elliptic_e_param(EllipticParam::new(m)?))
}

/// `(sn, cn)` by the descending Landen (AGM) scheme.
pub fn jacobi_sn_cn_param(u: f64, p: EllipticParam) -> (f64, f64) {
    let mut a = vec![1.0];
    let mut c = vec![p.m.sqrt()];
    let mut b = p.m1.sqrt();
    for _ in 0..64 {
        let last = *a.last().unwrap();
        let cn = 0.5 * (last - b);
        let an = 0.5 * (last + b);
        b = (last * b).sqrt();
        a.push(an);
        c.push(cn);
        if cn.abs() <= f64::EPSILON * an {
            break;
        }
    }
    let n = a.len() - 1;
    let mut phi = 2f64.powi(n as i32) * a[n] * u;
    for k in (1..=n).rev() {
        phi = 0.5 * (phi + (c[k] / a[k] * phi.sin()).asin());
    }
    (phi.sin(), phi.cos())
}

pub fn jacobi_cn(u: f64, m: f64) -> Result<f64, SpecfunError> {
    Ok(jacobi_sn_cn_param(u, EllipticParam::new(m)?).1)
}

/// Cnoidal wave data at parameter `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cnoidal {
    pub param: EllipticParam,
    pub k: f64,
    pub e: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub c: f64,
}

impl Cnoidal {
    pub fn at(p: EllipticParam, a: f64, h0: f64, g: f64) -> Self {
        let k = elliptic_k_param(p);
        let e = elliptic_e_param(p);
        let r = e / k;
        let eta1 = -(a / p.m) * r;
        let eta2 = (a / p.m) * (p.m1 - r);
        let eta3 = (a / p.m) * (1.0 - r);
        let c2 = g * h0 * (1.0 + eta1 / h0) * (1.0 + eta2 / h0) * (1.0 + eta3 / h0);
        Cnoidal { param: p, k, e, eta1, eta2, eta3, c: c2.max(0.0).sqrt() }
    }

    /// Free-surface elevation at `x` for time `t`.
    pub fn eta(&self, x: f64, t: f64, a: f64, period: f64) -> f64 {
        let u = 2.0 * self.k * (x - self.c * t) / period;
        let (_, cn) = jacobi_sn_cn_param(u, self.param);
        self.eta2 + a * cn * cn
    }

    /// `d eta / dx` at `x` for time `t`.
    pub fn eta_x(&self, x: f64, t: f64, a: f64, period: f64) -> f64 {
        let s = 2.0 * self.k / period;
        let u = s * (x - self.c * t);
        let (sn, cn) = jacobi_sn_cn_param(u, self.param);
        let dn = (1.0 - self.param.m * sn * sn).sqrt();
        -2.0 * a * s * cn * sn * dn
    }
}

/// Relative residual of `A L^2 = (16/3) m K^2 (h0^2/g) c^2`.
fn dispersion_residual(p: EllipticParam, period: f64, a: f64, h0: f64, g: f64) -> f64 {
    let cw = Cnoidal::at(p, a, h0, g);
    let lhs = a * period * period;
    (16.0 / 3.0 * p.m * cw.k * cw.k * h0 * h0 / g * cw.c * cw.c - lhs) / lhs
}

/// Solves the cnoidal dispersion relation for `m` by bisection on `ln(1 - m)`.
pub fn solve_cnoidal_m(period: f64, a: f64, h0: f64, g: f64) -> Result<EllipticParam, SpecfunError> {
    if !(period > 0.0) || !(a > 0.0) || !(h0 > 0.0) || !(g > 0.0) {
        return Err(SpecfunError::Input("period, amplitude, depth and gravity must be positive"));
    }
    let res = |lm1: f64| -> f64 {
        let m1 = lm1.exp().min(1.0 - 1e-12);
        dispersion_residual(EllipticParam::from_complement(m1).unwrap(), period, a, h0, g)
    };
    // m from 1e-12 up to 1 - 1e-300
    let (mut lo, mut hi) = ((1e-300f64).ln(), (1.0 - 1e-12f64).ln());
    let (rlo, rhi) = (res(lo), res(hi));
    if !(rlo.is_finite() && rhi.is_finite()) || rlo.signum() == rhi.signum() {
        return Err(SpecfunError::NoRoot { lo: rhi, hi: rlo });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let r = res(mid);
        if r == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if r.signum() == rlo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() < 1e-15 * lo.abs().max(1.0) {
            break;
        }
    }
    EllipticParam::from_complement((0.5 * (lo + hi)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trapezoid rule on the periodic integrand; spectrally accurate oracle.
    fn quad(f: impl Fn(f64) -> f64) -> f64 {
        let n = 4000;
        let h = PI / n as f64;
        (0..n).map(|j| f(j as f64 * h)).sum::<f64>() * h / 2.0
    }

    #[test]
    fn endpoints() {
        assert!((elliptic_k(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((elliptic_e(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(elliptic_e(1.0).unwrap(), 1.0);
        assert!(elliptic_k(1.0).is_err());
        assert!(elliptic_k(-0.1).is_err());
    }

    #[test]
    fn frozen_half_values() {
        // oracle values from the quadrature below
        assert!((elliptic_k(0.5).unwrap() - 1.854_074_677_301_372).abs() < 1e-12);
        assert!((elliptic_e(0.5).unwrap() - 1.350_643_881_047_675).abs() < 1e-12);
    }

    #[test]
    fn agm_matches_quadrature() {
        for i in 1..=9 {
            let m = i as f64 / 10.0;
            let kq = quad(|t| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt());
            let eq = quad(|t| (1.0 - m * t.sin().powi(2)).sqrt());
            assert!((elliptic_k(m).unwrap() - kq).abs() < 1e-10, "K({m})");
            assert!((elliptic_e(m).unwrap() - eq).abs() < 1e-10, "E({m})");
        }
    }

    #[test]
    fn k_monotone() {
        let ks: Vec<f64> = (0..20).map(|i| elliptic_k(i as f64 / 20.0).unwrap()).collect();
        assert!(ks.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn cn_special_values() {
        for u in [0.0, 0.7, 2.0] {
            assert!((jacobi_cn(u, 0.0).unwrap() - u.cos()).abs() < 1e-15);
        }
        assert_eq!(jacobi_cn(0.0, 0.6).unwrap(), 1.0);
        for m in [0.3, 0.8] {
            let k = elliptic_k(m).unwrap();
            assert!(jacobi_cn(k, m).unwrap().abs() < 1e-13);
            // period 4K
            assert!((jacobi_cn(0.4 + 4.0 * k, m).unwrap() - jacobi_cn(0.4, m).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn cn_inverts_incomplete_integral() {
        // u(phi) by quadrature, then cn(u) = cos(phi)
        let m = 0.7;
        for phi in [0.3, 1.0, 1.4] {
            let n = 20000;
            let h = phi / n as f64;
            let f = |t: f64| 1.0 / (1.0 - m * t.sin().powi(2)).sqrt();
            let u: f64 = (0..n).map(|j| f((j as f64 + 0.5) * h)).sum::<f64>() * h;
            assert!((jacobi_cn(u, m).unwrap() - phi.cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn soliton_period() {
        let period = 40.0 * PI;
        let p = solve_cnoidal_m(period, 0.1, 1.0, 1.0).unwrap();
        assert!(dispersion_residual(p, period, 0.1, 1.0, 1.0).abs() < 1e-12);
        let cw = Cnoidal::at(p, 0.1, 1.0, 1.0);
        let tstar = period / cw.c;
        // independent high-precision root find of the same relation
        assert!((tstar - 120.876_341_189_352_9).abs() < 1e-8, "t* = {tstar}");
        assert!((cw.k - 16.551_674_684_525_41).abs() < 1e-8);
    }

    #[test]
    fn larger_amplitude_larger_m() {
        let ms: Vec<f64> = [0.01, 0.02, 0.05, 0.1]
            .iter()
            .map(|&a| solve_cnoidal_m(10.0, a, 1.0, 1.0).unwrap().m)
            .collect();
        assert!(ms.windows(2).all(|w| w[1] > w[0]), "{ms:?}");
    }

    #[test]
    fn bad_input() {
        assert!(solve_cnoidal_m(-1.0, 0.1, 1.0, 1.0).is_err());
    }
}
