//! Baseline regularizations: a spectral low-pass filter applied to the
//! surface and its vortex density, and the curve-offset (blob) kernel.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::geometry::{Curve, C64, I};
use crate::kernels::{KernelContext, PointVortex, Sheet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSpec {
    pub xi0: f64,
    pub d: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec { xi0: PI / 4.0, d: PI / 40.0 }
    }
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi0 > 0.0 && self.xi0 < PI && self.d > 0.0 && self.d.is_finite()) {
            return Err(SimError::Config("filter needs 0 < xi0 < pi and d > 0".into()));
        }
        Ok(())
    }

    /// Filter symbol for wavenumber index `k` on `n` points.
    pub fn symbol(&self, k: usize, n: usize) -> f64 {
        let k = k.min(n - k) as f64;
        0.5 - 0.5 * ((2.0 * k * PI / n as f64 - self.xi0) / self.d).tanh()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OffsetSpec {
    /// Offset in units of `L / N`.
    pub delta: f64,
    /// Blob scale times `N`.
    pub eps_factor: f64,
}

impl Default for OffsetSpec {
    fn default() -> Self {
        OffsetSpec { delta: 1.0, eps_factor: 0.5 }
    }
}

impl OffsetSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0 && self.eps_factor >= 0.0 && self.delta.is_finite() && self.eps_factor.is_finite()) {
            return Err(SimError::Config("offset needs delta >= 0 and eps_factor >= 0".into()));
        }
        Ok(())
    }

    /// Net displacement along the outward normal. The blob shift `eps n`
    /// sits inside `cot(pi (x - z)/L + eps n)`, i.e. it moves the source
    /// by `-(L/pi) eps n`.
    pub fn effective_offset(&self, l: f64, n: usize) -> f64 {
        let n = n as f64;
        self.delta * l / n - (l / PI) * self.eps_factor / n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Regularizer {
    #[default]
    None,
    Filter(FilterSpec),
    Offset(OffsetSpec),
}

/// Multiplies the discrete Fourier coefficients of `values` by the filter
/// symbol.
pub fn fourier_filter(values: &[f64], spec: &FilterSpec) -> Vec<f64> {
    let c: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    fourier_filter_complex(&c, spec).iter().map(|z| z.re).collect()
}

pub fn fourier_filter_complex(values: &[C64], spec: &FilterSpec) -> Vec<C64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex<f64>> = values.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        *b *= spec.symbol(k, n) / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Filters the periodic part `z_j - j L/N` of a surface.
pub fn filter_curve(c: &Curve, spec: &FilterSpec) -> Result<Curve> {
    let n = c.len();
    let step = c.period() / n as f64;
    let p: Vec<C64> = c.points().iter().enumerate().map(|(j, z)| z - step * j as f64).collect();
    let f = fourier_filter_complex(&p, spec);
    let pts = f.iter().enumerate().map(|(j, z)| z + step * j as f64).collect();
    Ok(Curve::with_step(pts, c.period(), c.de())?)
}

/// Source positions `z_j + c n_j` of the offset sheet.
pub fn offset_sources(surface: &Curve, c: f64) -> Vec<C64> {
    surface
        .points()
        .iter()
        .zip(surface.d1())
        .map(|(z, ze)| z + I * ze / ze.norm() * c)
        .collect()
}

/// Conjugated velocity at `x` with the surface sheet moved to its offset
/// sources; bottom and vortices unchanged.
pub fn offset_velocity(
    ctx: &KernelContext,
    surface: Sheet<'_>,
    bottom: Option<Sheet<'_>>,
    vortices: &[PointVortex],
    spec: &OffsetSpec,
    x: C64,
) -> C64 {
    let c = spec.effective_offset(ctx.l, surface.curve.len());
    let w = offset_sources(surface.curve, c);
    let de = surface.curve.de();
    let mut u: C64 = w.iter().zip(surface.density).map(|(wj, g)| ctx.k_unchecked(x - wj) * (g * de)).sum();
    if let Some(b) = bottom {
        let db = b.curve.de();
        u += b.curve.points().iter().zip(b.density).map(|(z, g)| ctx.k_unchecked(x - z) * (g * db)).sum::<C64>();
    }
    for v in vortices {
        u += ctx.k_unchecked(x - v.z) * v.strength;
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::graph_points;
    use crate::kernels::field_velocity;

    #[test]
    fn zero_mode_kept_nyquist_removed() {
        let f = FilterSpec::default();
        assert!((f.symbol(0, 64) - 1.0).abs() < 1e-8);
        assert!(f.symbol(32, 64) < 1e-12);
        let c = fourier_filter(&[3.0; 64], &f);
        assert!(c.iter().all(|v| (v - 3.0).abs() < 1e-8));
        let alt: Vec<f64> = (0..64).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(fourier_filter(&alt, &f).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn low_modes_pass() {
        let f = FilterSpec::default();
        let n = 128;
        let v: Vec<f64> = (0..n).map(|j| (2.0 * PI * 3.0 * j as f64 / n as f64).sin()).collect();
        let out = fourier_filter(&v, &f);
        let s = f.symbol(3, n);
        for (a, b) in out.iter().zip(&v) {
            assert!((a - s * b).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_filter_keeps_period_offset() {
        let l = 2.0 * PI;
        let c = Curve::new(graph_points(64, l, |x| 0.1 * x.cos()), l).unwrap();
        let f = filter_curve(&c, &FilterSpec::default()).unwrap();
        for (a, b) in f.points().iter().zip(c.points()) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn zero_offset_is_field_velocity() {
        let l = 2.0 * PI;
        let ctx = KernelContext::new(l);
        let c = Curve::new(graph_points(32, l, |x| 0.2 * x.sin()), l).unwrap();
        let g: Vec<f64> = (0..32).map(|j| (j as f64 * 0.3).cos()).collect();
        let sheet = Sheet { curve: &c, density: &g };
        let spec = OffsetSpec { delta: 0.0, eps_factor: 0.0 };
        let x = C64::new(0.4, 0.9);
        let a = offset_velocity(&ctx, sheet, None, &[], &spec, x);
        let b = field_velocity(&ctx, Some(sheet), None, &[], 0.0, x);
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn larger_offset_smaller_peak() {
        let l = 2.0 * PI;
        let n = 64;
        let ctx = KernelContext::new(l);
        let c = Curve::new(graph_points(n, l, |_| 0.0), l).unwrap();
        let g: Vec<f64> = (0..n).map(|j| if j == n / 2 { 1.0 } else { 0.0 }).collect();
        let sheet = Sheet { curve: &c, density: &g };
        let probe = c.points()[n / 2] + C64::new(0.0, -0.01);
        let mags: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&delta| offset_velocity(&ctx, sheet, None, &[], &OffsetSpec { delta, eps_factor: 0.0 }, probe).norm())
            .collect();
        assert!(mags[0] > mags[1] && mags[1] > mags[2], "{mags:?}");
    }
}
