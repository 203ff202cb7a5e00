//! Periodic parameterized curves and the staggered (dual) grid.
//!
//! A curve is stored by its nodes over one horizontal period. Node `i + N`
//! is node `i` shifted right by the period `L`, so the curve closes on the
//! cylinder but not in the plane.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("curve needs at least {min} nodes, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("nodes {index} and {next} coincide")]
    Degenerate { index: usize, next: usize },
    #[error("zero tangent at node {index}")]
    DegenerateFrame { index: usize },
    #[error("non-finite coordinate at node {index}")]
    NonFinite { index: usize },
    #[error("invalid parameter step {0}")]
    BadStep(f64),
}

pub const MIN_POINTS: usize = 8;

/// Discrete periodic curve with cached central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    points: Vec<C64>,
    de: f64,
    period: f64,
    d1: Vec<C64>,
    d2: Vec<C64>,
}

/// Unit tangent and normal at a node, `normal = i * tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitFrame {
    pub tau: C64,
    pub normal: C64,
}

impl Curve {
    /// Builds a curve whose parameter spans one period, `de = L / N`.
    pub fn new(points: Vec<C64>, period: f64) -> Result<Self, GeometryError> {
        let n = points.len().max(1);
        Self::with_step(points, period, period / n as f64)
    }

    pub fn with_step(points: Vec<C64>, period: f64, de: f64) -> Result<Self, GeometryError> {
        let n = points.len();
        if n < MIN_POINTS {
            return Err(GeometryError::TooFewPoints { min: MIN_POINTS, got: n });
        }
        if !(de.is_finite() && de > 0.0) {
            return Err(GeometryError::BadStep(de));
        }
        for (index, z) in points.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(GeometryError::NonFinite { index });
            }
        }
        let shift = C64::new(period, 0.0);
        for i in 0..n {
            let next = if i + 1 == n { points[0] + shift } else { points[i + 1] };
            if next == points[i] {
                return Err(GeometryError::Degenerate { index: i, next: (i + 1) % n });
            }
        }
        let mut d1 = Vec::with_capacity(n);
        let mut d2 = Vec::with_capacity(n);
        for i in 0..n {
            let prev = if i == 0 { points[n - 1] - shift } else { points[i - 1] };
            let next = if i + 1 == n { points[0] + shift } else { points[i + 1] };
            d1.push((next - prev) / (2.0 * de));
            d2.push((next - 2.0 * points[i] + prev) / (de * de));
        }
        Ok(Curve { points, de, period, d1, d2 })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn d1(&self) -> &[C64] {
        &self.d1
    }

    pub fn d2(&self) -> &[C64] {
        &self.d2
    }

    pub fn de(&self) -> f64 {
        self.de
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn param_length(&self) -> f64 {
        self.de * self.points.len() as f64
    }

    /// Node `i` for any integer index, applying the periodic offset.
    pub fn point_wrapped(&self, i: isize) -> C64 {
        let n = self.points.len() as isize;
        let k = i.rem_euclid(n);
        let shift = (i - k) / n;
        self.points[k as usize] + C64::new(self.period * shift as f64, 0.0)
    }

    /// Curve through the chord midpoints, same parameter step.
    pub fn dual(&self) -> Curve {
        let n = self.points.len();
        let pts = (0..n)
            .map(|i| 0.5 * (self.points[i] + self.point_wrapped(i as isize + 1)))
            .collect();
        // Midpoints of distinct nodes are distinct, so this cannot fail.
        Curve::with_step(pts, self.period, self.de).expect("dual of a valid curve")
    }

    pub fn frame_at(&self, i: usize) -> Result<UnitFrame, GeometryError> {
        let t = self.d1[i];
        let m = t.norm();
        if m == 0.0 || !m.is_finite() {
            return Err(GeometryError::DegenerateFrame { index: i });
        }
        let tau = t / m;
        Ok(UnitFrame { tau, normal: I * tau })
    }

    /// Signed curvature `Im(conj(z_e) z_ee) / |z_e|^3`, positive when the
    /// curve turns towards its normal.
    pub fn curvature(&self, i: usize) -> Result<f64, GeometryError> {
        let t = self.d1[i];
        let m = t.norm();
        if m == 0.0 || !m.is_finite() {
            return Err(GeometryError::DegenerateFrame { index: i });
        }
        Ok((t.conj() * self.d2[i]).im / (m * m * m))
    }

    pub fn curvatures(&self) -> Result<Vec<f64>, GeometryError> {
        (0..self.len()).map(|i| self.curvature(i)).collect()
    }

    /// Shortest chord between consecutive nodes, wrap included.
    pub fn min_spacing(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.point_wrapped(i as isize + 1) - self.points[i]).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_d1(&self) -> f64 {
        self.d1.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn translated(&self, by: C64) -> Curve {
        let pts = self.points.iter().map(|z| z + by).collect();
        Curve::with_step(pts, self.period, self.de).expect("translation keeps validity")
    }
}

/// Two-point average from dual nodes (`i + 1/2`) back to primal nodes.
pub fn interp_to_primal<T>(dual: &[T]) -> Vec<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let n = dual.len();
    (0..n)
        .map(|i| {
            let prev = if i == 0 { dual[n - 1] } else { dual[i - 1] };
            (prev + dual[i]) * 0.5
        })
        .collect()
}

/// Two-point average from primal nodes to dual nodes (`i + 1/2`).
pub fn restrict_to_dual<T>(primal: &[T]) -> Vec<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let n = primal.len();
    (0..n)
        .map(|i| (primal[i] + primal[(i + 1) % n]) * 0.5)
        .collect()
}

/// Periodic central difference of nodal values (no offset).
pub fn diff_periodic<T>(v: &[T], de: f64) -> Vec<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T>,
{
    let n = v.len();
    let s = 0.5 / de;
    (0..n)
        .map(|i| {
            let prev = if i == 0 { v[n - 1] } else { v[i - 1] };
            let next = if i + 1 == n { v[0] } else { v[i + 1] };
            next * s + prev * (-s)
        })
        .collect()
}

/// Nodes of `x -> x + i f(x)` sampled uniformly on `[0, L)`.
pub fn graph_points(n: usize, period: f64, f: impl Fn(f64) -> f64) -> Vec<C64> {
    (0..n)
        .map(|j| {
            let x = period * j as f64 / n as f64;
            C64::new(x, f(x))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cosine(n: usize, a: f64) -> Curve {
        Curve::new(graph_points(n, 2.0 * PI, |x| a * x.cos()), 2.0 * PI).unwrap()
    }

    #[test]
    fn flat_line_is_exact() {
        let c = cosine(16, 0.0);
        for i in 0..16 {
            assert!((c.d1()[i] - C64::new(1.0, 0.0)).norm() < 1e-14);
            assert!(c.d2()[i].norm() < 1e-12);
        }
    }

    #[test]
    fn second_difference_is_second_order() {
        let err = |n: usize| {
            let c = cosine(n, 0.1);
            (0..n)
                .map(|j| {
                    let e = c.de() * j as f64;
                    (c.d2()[j] - C64::new(0.0, -0.1 * e.cos())).norm()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn dual_of_flat_line_is_shifted() {
        let c = cosine(16, 0.0);
        let d = c.dual();
        for i in 0..16 {
            assert!((d.points()[i] - c.points()[i] - C64::new(c.de() / 2.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn dual_of_dual_close_to_shift() {
        let err = |n: usize| {
            let c = cosine(n, 0.3);
            let dd = c.dual().dual();
            (0..n)
                .map(|i| (dd.points()[i] - c.point_wrapped(i as isize + 1)).norm())
                .fold(0.0, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn interpolation_examples() {
        let c = interp_to_primal(&[3.0; 10]);
        assert!(c.iter().all(|&v| v == 3.0));
        let alt: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(interp_to_primal(&alt).iter().all(|&v| v == 0.0));
        let lin: Vec<f64> = (0..10).map(|i| i as f64 + 0.5).collect();
        let back = interp_to_primal(&lin);
        for (i, v) in back.iter().enumerate().skip(1) {
            assert_eq!(*v, i as f64);
        }
    }

    #[test]
    fn frames() {
        let c = cosine(16, 0.0);
        let f = c.frame_at(0).unwrap();
        assert!((f.tau - 1.0).norm() < 1e-15 && (f.normal - I).norm() < 1e-15);
        let pts: Vec<C64> = (0..8).map(|j| C64::new(j as f64, j as f64)).collect();
        let diag = Curve::with_step(pts, 8.0, 1.0).unwrap();
        let f = diag.frame_at(3).unwrap();
        let s = 0.5f64.sqrt();
        assert!((f.tau - C64::new(s, s)).norm() < 1e-15);
    }

    #[test]
    fn circle_curvature() {
        // A closed circle viewed as a curve with zero horizontal period.
        let n = 256;
        let r = 2.0;
        let pts: Vec<C64> = (0..n)
            .map(|j| C64::from_polar(r, 2.0 * PI * j as f64 / n as f64))
            .collect();
        let c = Curve::with_step(pts, 0.0, 2.0 * PI / n as f64).unwrap();
        for i in 0..n {
            let k = c.curvature(i).unwrap();
            assert!((k - 1.0 / r).abs() < 1e-3, "{k}");
        }
    }

    #[test]
    fn degenerate_nodes_rejected() {
        let mut pts = graph_points(10, 1.0, |_| 0.0);
        pts[4] = pts[3];
        assert_eq!(
            Curve::new(pts, 1.0).unwrap_err(),
            GeometryError::Degenerate { index: 3, next: 4 }
        );
    }
}
