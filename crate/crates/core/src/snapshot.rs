//! Everything that depends only on the node positions: cot tables between
//! the point sets and the matrices assembled from them. Built lazily, so the
//! drift iterations pay only for the velocity tables while the kick
//! iterations (positions frozen) reuse the matrices.

use std::sync::OnceLock;

use crate::error::{Result, SimError};
use crate::geometry::{Curve, C64};
use crate::kernels::PointVortex;
use crate::model::{Formulation, Problem};
use crate::operators::{
    preconditioned_fixed_point_from, DenseOperator, IterOptions, LuFactor, NeumannSolveReport, RankOne, SolveError,
};
use crate::pairs::{cot_table, cot_table_punctured, CotTable};

pub struct Snapshot<'p> {
    pub problem: &'p Problem,
    pub surface: Curve,
    pub dual: Curve,
    pub vortices: Vec<PointVortex>,
    /// Source positions used by the surface sheet (offset baseline), else
    /// the nodes themselves.
    pub sources: Option<Vec<C64>>,
    dss: OnceLock<CotTable>,
    dsb: OnceLock<CotTable>,
    ss: OnceLock<CotTable>,
    sw: OnceLock<CotTable>,
    sb: OnceLock<CotTable>,
    dbs: OnceLock<CotTable>,
    bs: OnceLock<CotTable>,
    mats: OnceLock<Matrices>,
    full_lu: OnceLock<std::result::Result<LuFactor, SolveError>>,
}

/// Z-dependent operators of the density equation.
pub(crate) struct Matrices {
    /// Surface self operator (`A_S` or `A*_S`).
    pub a: DenseOperator,
    /// Surface rows, bottom columns.
    pub c: Option<DenseOperator>,
    /// Bottom rows, surface columns.
    pub d: Option<DenseOperator>,
}

impl<'p> Snapshot<'p> {
    pub fn new(problem: &'p Problem, surface: Curve, vortices: Vec<PointVortex>) -> Result<Self> {
        if surface.period() != problem.params.l {
            return Err(SimError::Config("surface period differs from L".into()));
        }
        let dual = surface.dual();
        let sources = problem.offset().map(|spec| {
            let c = spec.effective_offset(problem.params.l, surface.len());
            crate::regularize::offset_sources(&surface, c)
        });
        Ok(Snapshot {
            problem,
            surface,
            dual,
            vortices,
            sources,
            dss: OnceLock::new(),
            dsb: OnceLock::new(),
            ss: OnceLock::new(),
            sw: OnceLock::new(),
            sb: OnceLock::new(),
            dbs: OnceLock::new(),
            bs: OnceLock::new(),
            mats: OnceLock::new(),
            full_lu: OnceLock::new(),
        })
    }

    fn l(&self) -> f64 {
        self.problem.params.l
    }

    pub fn n(&self) -> usize {
        self.surface.len()
    }

    pub fn bottom(&self) -> Option<&Curve> {
        self.problem.ops.as_ref().map(|o| &o.curve)
    }

    /// Dual surface nodes to surface nodes.
    pub fn dss(&self) -> &CotTable {
        self.dss.get_or_init(|| cot_table(self.l(), self.dual.points(), self.surface.points()))
    }

    /// Dual surface nodes to bottom nodes.
    pub fn dsb(&self) -> Option<&CotTable> {
        let b = self.bottom()?;
        Some(self.dsb.get_or_init(|| cot_table(self.l(), self.dual.points(), b.points())))
    }

    /// Surface to surface, diagonal zero.
    pub fn ss(&self) -> &CotTable {
        self.ss.get_or_init(|| cot_table_punctured(self.l(), self.surface.points()))
    }

    /// Surface nodes to offset sources (offset baseline only).
    pub fn sw(&self) -> Option<&CotTable> {
        let w = self.sources.as_ref()?;
        Some(self.sw.get_or_init(|| cot_table(self.l(), self.surface.points(), w)))
    }

    pub fn sb(&self) -> Option<&CotTable> {
        let b = self.bottom()?;
        Some(self.sb.get_or_init(|| cot_table(self.l(), self.surface.points(), b.points())))
    }

    /// Dual bottom nodes to surface sheet sources.
    pub fn dbs(&self) -> Option<&CotTable> {
        let ops = self.problem.ops.as_ref()?;
        let src = self.sources.as_deref().unwrap_or(self.surface.points());
        Some(self.dbs.get_or_init(|| cot_table(self.l(), ops.dual.points(), src)))
    }

    /// Bottom nodes to surface nodes.
    pub fn bs(&self) -> Option<&CotTable> {
        let b = self.bottom()?;
        Some(self.bs.get_or_init(|| cot_table(self.l(), b.points(), self.surface.points())))
    }

    pub(crate) fn matrices(&self, build: impl FnOnce(&Self) -> Matrices) -> &Matrices {
        self.mats.get_or_init(|| build(self))
    }

    /// Inverse of the bottom operator of the current formulation.
    fn bottom_inverse(&self, v: &[f64]) -> Vec<f64> {
        let ops = self.problem.ops.as_ref().expect("bottom present");
        match self.problem.formulation {
            Formulation::Vortex => ops.bb_lu.solve(v),
            Formulation::Dipole => ops.astar_lu.solve(v),
        }
    }

    /// `(a - c B^-1 d) x`
    fn apply_full(&self, m: &Matrices, x: &[f64]) -> Vec<f64> {
        let mut y = m.a.matvec(x);
        if let (Some(c), Some(d)) = (&m.c, &m.d) {
            let w = c.matvec(&self.bottom_inverse(&d.matvec(x)));
            y.iter_mut().zip(w).for_each(|(a, b)| *a -= b);
        }
        y
    }

    fn full_lu(&self) -> std::result::Result<&LuFactor, SolveError> {
        let m = self.mats.get().expect("matrices built before solving");
        self.full_lu
            .get_or_init(|| {
                let mut full = m.a.clone();
                if let (Some(c), Some(d), Some(ops)) = (&m.c, &m.d, self.problem.ops.as_ref()) {
                    let y = match self.problem.formulation {
                        Formulation::Vortex => ops.bb_lu.solve_matrix(d),
                        Formulation::Dipole => ops.astar_lu.solve_matrix(d),
                    };
                    let cy = c.matmul(&y);
                    full.data.iter_mut().zip(&cy.data).for_each(|(a, b)| *a -= b);
                }
                full.lu()
            })
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// Solves the density equation with the cached matrices: preconditioned
    /// Richardson from `warm`, dense LU if it stalls or if `direct`.
    pub(crate) fn solve_density(
        &self,
        rhs: &[f64],
        warm: Option<&[f64]>,
        pre: Option<&RankOne>,
        direct: bool,
    ) -> Result<(Vec<f64>, NeumannSolveReport)> {
        let m = self.mats.get().expect("matrices built before solving");
        let lu_report = NeumannSolveReport { iterations: 0, residual_bound: 0.0, converged: true };
        if !direct {
            let identity;
            let pre = match pre {
                Some(p) => p,
                None => {
                    identity = RankOne::new(vec![0.0; rhs.len()])?;
                    &identity
                }
            };
            let opts = IterOptions { rel_tol: 1e-13, max_iters: 200 };
            match preconditioned_fixed_point_from(|x| self.apply_full(m, x), pre, rhs, warm, opts) {
                Ok(r) => return Ok(r),
                Err(SolveError::NoConvergence { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let x = self.full_lu()?.solve(rhs);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinite("density solve"));
        }
        Ok((x, lu_report))
    }

    /// Smallest distance from a vortex to any sheet node, with its index.
    pub fn check_vortices(&self) -> Result<()> {
        let de = self.surface.de();
        for (i, v) in self.vortices.iter().enumerate() {
            for (j, w) in self.vortices.iter().enumerate().skip(i + 1) {
                if v.z == w.z {
                    return Err(SimError::CoincidentVortices(i, j));
                }
            }
            let near = |c: &Curve| {
                c.points()
                    .iter()
                    .map(|z| {
                        let mut d = v.z - z;
                        d.re -= (d.re / self.l()).round() * self.l();
                        d.norm()
                    })
                    .fold(f64::INFINITY, f64::min)
            };
            let mut dist = near(&self.surface);
            if let Some(b) = self.bottom() {
                dist = dist.min(near(b));
            }
            if dist < de {
                return Err(SimError::Proximity { index: i, distance: dist });
            }
        }
        Ok(())
    }
}
