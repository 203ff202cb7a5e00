use rayon::prelude::*;

use super::config::InstabilityConfig;
use crate::dipole_dynamics::gamma_from_mu;
use crate::error::SimError;
use crate::geometry::{Curve, C64};
use crate::model::{Formulation, SheetState};

/// Vortex strength carried by the surface: `gamma_S`, or `d mu_S / de`.
pub fn sheet_strength(state: &SheetState) -> Vec<f64> {
    match state.mode {
        Formulation::Vortex => state.density.clone(),
        Formulation::Dipole => gamma_from_mu(&state.density, state.surface.de()),
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Blow-up detector, calibrated on the initial state.
#[derive(Debug, Clone, Copy)]
pub struct InstabilityDetector {
    pub min_spacing0: f64,
    pub max_sheet0: f64,
    cfg: InstabilityConfig,
}

impl InstabilityDetector {
    pub fn new(initial: &SheetState, cfg: InstabilityConfig) -> Self {
        InstabilityDetector {
            min_spacing0: initial.surface.min_spacing(),
            max_sheet0: sup(&sheet_strength(initial)),
            cfg,
        }
    }

    /// Reason for stopping, if any.
    pub fn check(&self, state: &SheetState) -> Option<String> {
        let finite = state.surface.points().iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && state.density.iter().all(|v| v.is_finite());
        if !finite {
            return Some("non-finite state".into());
        }
        let h = state.surface.min_spacing();
        if h < self.cfg.spacing_ratio * self.min_spacing0 {
            return Some(format!("node spacing fell to {:.3e} of its initial minimum", h / self.min_spacing0));
        }
        let s = sup(&sheet_strength(state));
        if self.max_sheet0 > 0.0 && s > self.cfg.growth_ratio * self.max_sheet0 {
            return Some(format!("sheet strength grew {:.3e} times", s / self.max_sheet0));
        }
        None
    }
}

/// Step failures that mean the discrete solution broke down, as opposed to
/// a bad setup.
pub fn is_breakdown(e: &SimError) -> bool {
    !matches!(e, SimError::Config(_) | SimError::Compatibility(_) | SimError::Specfun(_))
}

fn orient(a: C64, b: C64, c: C64) -> f64 {
    ((b - a).conj() * (c - a)).im
}

fn on_segment(a: C64, b: C64, p: C64) -> bool {
    p.re >= a.re.min(b.re) && p.re <= a.re.max(b.re) && p.im >= a.im.min(b.im) && p.im <= a.im.max(b.im)
}

/// Closed segments `ab` and `cd` share a point.
pub fn segments_intersect(a: C64, b: C64, c: C64, d: C64) -> bool {
    if a.re.max(b.re) < c.re.min(d.re)
        || c.re.max(d.re) < a.re.min(b.re)
        || a.im.max(b.im) < c.im.min(d.im)
        || c.im.max(d.im) < a.im.min(b.im)
    {
        return false;
    }
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Whether the periodic polyline crosses itself. Segment `k` joins nodes
/// `k` and `k + 1` of the unwrapped curve; segments `i` and `k` with
/// `k >= i + 2` are tested for `i` in one period and `k` up to two periods
/// ahead, which covers every non-adjacent pair of a curve whose horizontal
/// extent per period is below `2 L`.
pub fn detect_splash(c: &Curve) -> bool {
    let n = c.len() as isize;
    let seg = |k: isize| (c.point_wrapped(k), c.point_wrapped(k + 1));
    (0..n).into_par_iter().any(|i| {
        let (a, b) = seg(i);
        (i + 2..i + 2 * n).any(|k| {
            let (p, q) = seg(k);
            segments_intersect(a, b, p, q)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::graph_points;
    use std::f64::consts::PI;

    const L: f64 = 2.0 * PI;

    #[test]
    fn graphs_do_not_splash() {
        for a in [0.0, 0.1, 0.5, 2.0] {
            let c = Curve::new(graph_points(64, L, |x| a * x.cos()), L).unwrap();
            assert!(!detect_splash(&c), "{a}");
        }
    }

    fn trochoid(b: f64, y: impl Fn(f64) -> f64) -> Curve {
        let n = 128;
        let pts: Vec<C64> = (0..n)
            .map(|j| {
                let t = L * j as f64 / n as f64;
                C64::new(t + b * t.sin(), y(t))
            })
            .collect();
        Curve::new(pts, L).unwrap()
    }

    #[test]
    fn self_crossing_loop_splashes() {
        // prolate trochoid: t = pi +- s with s = 1.3 sin s meet
        assert!(detect_splash(&trochoid(1.3, |t| 0.8 * t.cos())));
    }

    #[test]
    fn overturning_without_crossing() {
        // folded back (x' < 0 near t = pi) but simple
        assert!(!detect_splash(&trochoid(1.3, |t| 0.8 * t.sin())));
    }

    #[test]
    fn crossing_across_the_period_seam() {
        // the loop sits at t = 0, between the last and first nodes
        assert!(detect_splash(&trochoid(-1.3, |t| 0.8 * t.cos())));
    }

    #[test]
    fn segment_cases() {
        let z = |x: f64, y: f64| C64::new(x, y);
        assert!(segments_intersect(z(0.0, 0.0), z(1.0, 1.0), z(0.0, 1.0), z(1.0, 0.0)));
        assert!(!segments_intersect(z(0.0, 0.0), z(1.0, 0.0), z(0.0, 1.0), z(1.0, 1.0)));
        assert!(segments_intersect(z(0.0, 0.0), z(2.0, 0.0), z(1.0, 0.0), z(3.0, 0.0)));
        assert!(segments_intersect(z(0.0, 0.0), z(1.0, 0.0), z(1.0, 0.0), z(1.0, 1.0)));
    }

    #[test]
    fn detector_rules() {
        let c = Curve::new(graph_points(32, L, |x| 0.1 * x.cos()), L).unwrap();
        let d: Vec<f64> = c.points().iter().map(|z| z.re.sin()).collect();
        let s = SheetState::new(c.clone(), d.clone(), Formulation::Vortex).unwrap();
        let det = InstabilityDetector::new(&s, InstabilityConfig::default());
        assert!(det.check(&s).is_none());

        let mut nan = s.clone();
        nan.density[3] = f64::NAN;
        assert!(det.check(&nan).unwrap().contains("non-finite"));

        let mut pts = c.points().to_vec();
        pts[5] = pts[4] + C64::new(1e-6, 0.0);
        let squeezed = SheetState::new(Curve::new(pts, L).unwrap(), d.clone(), Formulation::Vortex).unwrap();
        assert!(det.check(&squeezed).unwrap().contains("spacing"));

        let big = SheetState::new(c, d.iter().map(|v| v * 2e3).collect(), Formulation::Vortex).unwrap();
        assert!(det.check(&big).unwrap().contains("strength"));
    }
}
