//! Dense tables of `cot(pi (t_k - s_j) / L)` for target/source point sets.
//!
//! Uses the phase form `cot = i (w_t + w_s) / (w_t - w_s)` with
//! `w = exp(2 pi i (z - i y0) / L)`, one complex division per pair. Falls
//! back to the direct formula when heights spread too far from `y0`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::geometry::{C64, I};
use crate::kernels::cot;

#[derive(Debug, Clone)]
pub struct CotTable {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CotTable {
    #[inline]
    pub fn row(&self, k: usize) -> &[C64] {
        &self.data[k * self.cols..(k + 1) * self.cols]
    }
}

const MAX_EXPONENT: f64 = 250.0;

fn phases(l: f64, pts: &[C64], y0: f64) -> Option<Vec<C64>> {
    let s = 2.0 * PI / l;
    let mut out = Vec::with_capacity(pts.len());
    for z in pts {
        let b = -(z.im - y0) * s;
        if b.abs() > MAX_EXPONENT {
            return None;
        }
        out.push(C64::from_polar(b.exp(), z.re * s));
    }
    Some(out)
}

pub fn cot_table(l: f64, targets: &[C64], sources: &[C64]) -> CotTable {
    let (rows, cols) = (targets.len(), sources.len());
    let mut data = vec![C64::new(0.0, 0.0); rows * cols];
    if rows == 0 || cols == 0 {
        return CotTable { rows, cols, data };
    }
    let n = (rows + cols) as f64;
    let y0 = targets.iter().chain(sources).map(|z| z.im).sum::<f64>() / n;
    match (phases(l, targets, y0), phases(l, sources, y0)) {
        (Some(wt), Some(ws)) => {
            data.par_chunks_mut(cols).enumerate().for_each(|(k, row)| {
                let a = wt[k];
                for (r, b) in row.iter_mut().zip(&ws) {
                    *r = I * (a + b) / (a - b);
                }
            });
        }
        _ => {
            let s = PI / l;
            data.par_chunks_mut(cols).enumerate().for_each(|(k, row)| {
                for (r, z) in row.iter_mut().zip(sources) {
                    *r = cot((targets[k] - z) * s);
                }
            });
        }
    }
    CotTable { rows, cols, data }
}

/// Same as [`cot_table`] but the diagonal (`k == j`) is left at zero.
pub fn cot_table_punctured(l: f64, pts: &[C64]) -> CotTable {
    let n = pts.len();
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    if n == 0 {
        return CotTable { rows: 0, cols: 0, data };
    }
    let y0 = pts.iter().map(|z| z.im).sum::<f64>() / n as f64;
    match phases(l, pts, y0) {
        Some(w) => {
            data.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
                let a = w[k];
                for (j, r) in row.iter_mut().enumerate() {
                    if j != k {
                        *r = I * (a + w[j]) / (a - w[j]);
                    }
                }
            });
        }
        None => {
            let s = PI / l;
            data.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
                for (j, r) in row.iter_mut().enumerate() {
                    if j != k {
                        *r = cot((pts[k] - pts[j]) * s);
                    }
                }
            });
        }
    }
    CotTable { rows: n, cols: n, data }
}
