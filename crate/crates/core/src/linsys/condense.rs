//! Static condensation of the Stokes-Brinkman system onto facet velocities and
//! elementwise constant pressures.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rayon::prelude::*;

use super::solver::{merge_triplets, Factorization, SparseSolver};
use crate::error::{Error, Result};
use crate::forms::Discretization;

/// Counts global factorizations performed by this process.
static FACTORIZATIONS: AtomicUsize = AtomicUsize::new(0);

pub fn factorization_count() -> usize {
    FACTORIZATIONS.load(Ordering::Relaxed)
}

/// Coupled-dof numbering: W facet dofs, facet-space dofs, one pressure per element,
/// then the optional mean-pressure multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoupledLayout {
    pub n_w_facet: usize,
    pub n_f: usize,
    pub n_elements: usize,
    pub multiplier: bool,
}

impl CoupledLayout {
    pub fn n_coupled(&self) -> usize {
        self.n_w_facet + self.n_f + self.n_elements + usize::from(self.multiplier)
    }

    pub fn f_offset(&self) -> usize {
        self.n_w_facet
    }

    pub fn p_offset(&self) -> usize {
        self.n_w_facet + self.n_f
    }
}

struct LocalElimination {
    /// Coupled global indices of the local coupled dofs.
    coupled: Vec<usize>,
    interior_w: Vec<usize>,
    interior_q: Vec<usize>,
    lu: Option<LU<f64, Dyn, Dyn>>,
    /// `K_ii⁻¹ K_ic`
    e: DMatrix<f64>,
    /// `K_ci`
    kci: DMatrix<f64>,
}

/// Solution of one Stokes-Brinkman solve.
#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub w: Vec<f64>,
    pub f: Vec<f64>,
    pub p: Vec<f64>,
    pub multiplier: f64,
}

/// Factorized condensed operator `τ⁻¹ M + A` with divergence constraint.
pub struct StokesSystem {
    pub tau_inv: f64,
    pub layout: CoupledLayout,
    n_w: usize,
    n_q: usize,
    locals: Vec<LocalElimination>,
    /// Coupled index → reduced index (None for Dirichlet dofs).
    free: Vec<Option<usize>>,
    n_free: usize,
    /// Entries of the condensed matrix in columns of Dirichlet dofs, rows reduced.
    lifting: Vec<(usize, usize, f64)>,
    /// Reduced condensed matrix, merged triplets.
    matrix: Vec<(usize, usize, f64)>,
    factor: Box<dyn Factorization>,
    border: Option<Border>,
}

/// Mean-pressure multiplier kept out of the sparse factorization.
///
/// With every boundary dof constrained, the operator `K` without the multiplier has the
/// constant pressure `z` as its kernel. `K` is factored with one element constant pinned
/// and the bordered system `[K c; cᵀ d]` is solved by `μ = zᵀb / zᵀc`, a pinned solve of
/// `K x = b − cμ`, and a shift along `z` enforcing the constraint row. This avoids the
/// dense multiplier row, which makes the symbolic LU analysis dense.
struct Border {
    /// Reduced index of the multiplier (the last one).
    mu: usize,
    /// Reduced index of the pinned element constant.
    pinned: usize,
    /// Reduced indices of all element constants (support of `z`).
    constants: Vec<usize>,
    /// Multiplier column without its diagonal, `(row, value)`.
    column: Vec<(usize, f64)>,
    diagonal: f64,
}

impl std::fmt::Debug for StokesSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StokesSystem")
            .field("tau_inv", &self.tau_inv)
            .field("layout", &self.layout)
            .field("n_free", &self.n_free)
            .field("nnz", &self.matrix.len())
            .finish()
    }
}

/// Local matrix on `[W, F, Q, μ?]` for one element.
fn local_matrix(disc: &Discretization, elem: usize, tau_inv: f64, multiplier: bool) -> DMatrix<f64> {
    let b = &disc.blocks;
    let a = &b.viscous.a[elem];
    let nu = a.nrows();
    let nw = b.viscous.n_w;
    let nq = b.div[elem].nrows();
    let n = nu + nq + usize::from(multiplier);
    let mut k = DMatrix::zeros(n, n);
    k.view_mut((0, 0), (nu, nu)).copy_from(a);
    if tau_inv != 0.0 {
        let mut kw = k.view_mut((0, 0), (nw, nw));
        kw += &b.mass[elem] * tau_inv;
    }
    k.view_mut((nu, 0), (nq, nw)).copy_from(&b.div[elem]);
    k.view_mut((0, nu), (nw, nq)).copy_from(&b.div[elem].transpose());
    if multiplier {
        for i in 0..nq {
            k[(nu + i, n - 1)] = b.pressure_mean[elem][i];
            k[(n - 1, nu + i)] = b.pressure_mean[elem][i];
        }
    }
    k
}

impl StokesSystem {
    /// Condenses and factorizes. `w_mask`/`f_mask` flag Dirichlet dofs of W and the facet space.
    pub fn new(
        disc: &Discretization,
        tau_inv: f64,
        w_mask: &[bool],
        f_mask: &[bool],
        multiplier: bool,
        solver: &dyn SparseSolver,
    ) -> Result<StokesSystem> {
        if !(tau_inv >= 0.0) {
            return Err(Error::InvalidParameter(format!("τ⁻¹ must be non-negative, got {tau_inv}")));
        }
        let sp = &disc.spaces;
        let mesh = &sp.mesh;
        let k = sp.k;
        let fs = disc.facet_space();
        let n_w_facet = sp.w.n_facet_dofs();
        let layout = CoupledLayout { n_w_facet, n_f: fs.ndof, n_elements: mesh.n_elements(), multiplier };
        if !multiplier && tau_inv == 0.0 {
            let closed = mesh
                .facets
                .iter()
                .enumerate()
                .filter(|(_, f)| f.is_boundary())
                .all(|(i, _)| (0..=k).all(|j| w_mask[i * (k + 1) + j]));
            if closed {
                return Err(Error::Factorization(
                    "pressure is only determined up to a constant; enable the mean-pressure multiplier".into(),
                ));
            }
        }
        let nwl = sp.w.dofs_per_element();
        let nfl = fs.dofs_per_element();
        let nql = sp.q.dofs_per_element();
        let nwf = 3 * (k + 1);
        let locals_and_s: Vec<(LocalElimination, DMatrix<f64>)> = (0..mesh.n_elements())
            .into_par_iter()
            .map(|elem| {
                let km = local_matrix(disc, elem, tau_inv, multiplier);
                let nu = nwl + nfl;
                let mut ci: Vec<usize> = (0..nwf).collect();
                ci.extend(nwl..nu);
                ci.push(nu);
                if multiplier {
                    ci.push(nu + nql);
                }
                let mut ii: Vec<usize> = (nwf..nwl).collect();
                ii.extend(nu + 1..nu + nql);
                let wd = sp.w.element_dofs(elem);
                let fd = fs.element_dofs(elem);
                let mut coupled: Vec<usize> = wd[..nwf].to_vec();
                coupled.extend(fd.iter().map(|g| layout.f_offset() + g));
                coupled.push(layout.p_offset() + elem);
                if multiplier {
                    coupled.push(layout.n_coupled() - 1);
                }
                let qd = sp.q.element_dofs(elem);
                let kcc = km.select_rows(&ci).select_columns(&ci);
                let (lu, e, kci, s) = if ii.is_empty() {
                    (None, DMatrix::zeros(0, ci.len()), DMatrix::zeros(ci.len(), 0), kcc)
                } else {
                    let kii = km.select_rows(&ii).select_columns(&ii);
                    let kic = km.select_rows(&ii).select_columns(&ci);
                    let kci = km.select_rows(&ci).select_columns(&ii);
                    let lu = kii.lu();
                    let e = lu.solve(&kic).ok_or(Error::SingularInteriorBlock(elem))?;
                    let mut s = kcc - &kci * &e;
                    let st = s.transpose();
                    s = (s + st) * 0.5;
                    (Some(lu), e, kci, s)
                };
                let local = LocalElimination {
                    coupled,
                    interior_w: wd[nwf..].to_vec(),
                    interior_q: qd[1..].to_vec(),
                    lu,
                    e,
                    kci,
                };
                Ok((local, s))
            })
            .collect::<Result<Vec<_>>>()?;
        let nc = layout.n_coupled();
        let mut dirichlet = vec![false; nc];
        dirichlet[..n_w_facet].copy_from_slice(&w_mask[..n_w_facet]);
        dirichlet[layout.f_offset()..layout.p_offset()].copy_from_slice(f_mask);
        let mut free = vec![None; nc];
        let mut n_free = 0;
        for (i, d) in dirichlet.iter().enumerate() {
            if !d {
                free[i] = Some(n_free);
                n_free += 1;
            }
        }
        let mut trip = Vec::new();
        let mut lifting = Vec::new();
        for (local, s) in &locals_and_s {
            for (a, &ga) in local.coupled.iter().enumerate() {
                let Some(ra) = free[ga] else { continue };
                for (b, &gb) in local.coupled.iter().enumerate() {
                    let v = s[(a, b)];
                    match free[gb] {
                        Some(rb) => trip.push((ra, rb, v)),
                        None => lifting.push((ra, gb, v)),
                    }
                }
            }
        }
        let matrix = merge_triplets(trip);
        let border = multiplier.then(|| {
            let mu = n_free - 1;
            let constants: Vec<usize> = (0..layout.n_elements).filter_map(|e| free[layout.p_offset() + e]).collect();
            let column: Vec<(usize, f64)> =
                matrix.iter().filter(|&&(i, j, _)| j == mu && i != mu).map(|&(i, _, v)| (i, v)).collect();
            let diagonal = matrix.iter().find(|&&(i, j, _)| i == mu && j == mu).map_or(0.0, |t| t.2);
            Border { mu, pinned: constants[0], constants, column, diagonal }
        });
        let factor = match &border {
            None => solver.factor(n_free, &matrix)?,
            Some(b) => {
                let mut pinned: Vec<(usize, usize, f64)> = matrix
                    .iter()
                    .copied()
                    .filter(|&(i, j, _)| i != b.mu && j != b.mu && i != b.pinned && j != b.pinned)
                    .collect();
                pinned.push((b.pinned, b.pinned, 1.0));
                pinned.push((b.mu, b.mu, 1.0));
                solver.factor(n_free, &pinned)?
            }
        };
        FACTORIZATIONS.fetch_add(1, Ordering::Relaxed);
        Ok(StokesSystem {
            tau_inv,
            layout,
            n_w: sp.w.ndof,
            n_q: sp.q.ndof,
            locals: locals_and_s.into_iter().map(|(l, _)| l).collect(),
            free,
            n_free,
            lifting: merge_triplets(lifting),
            matrix,
            factor,
            border,
        })
    }

    /// Number of coupled unknowns (including Dirichlet dofs).
    pub fn n_coupled(&self) -> usize {
        self.layout.n_coupled()
    }

    /// Merged triplets of the condensed matrix on free coupled dofs.
    pub fn matrix(&self) -> &[(usize, usize, f64)] {
        &self.matrix
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    fn base_solve(&self, b: &[f64]) -> Vec<f64> {
        let Some(bd) = &self.border else {
            return self.factor.solve(b);
        };
        let zc: f64 = bd.column.iter().filter(|(i, _)| bd.constants.binary_search(i).is_ok()).map(|(_, v)| v).sum();
        let zb: f64 = bd.constants.iter().map(|&i| b[i]).sum();
        let mu = zb / zc;
        let mut r = b.to_vec();
        for &(i, v) in &bd.column {
            r[i] -= v * mu;
        }
        r[bd.pinned] = 0.0;
        r[bd.mu] = 0.0;
        let mut x = self.factor.solve(&r);
        let cx: f64 = bd.column.iter().map(|&(i, v)| v * x[i]).sum();
        let gamma = (b[bd.mu] - bd.diagonal * mu - cx) / zc;
        for &i in &bd.constants {
            x[i] += gamma;
        }
        x[bd.mu] = mu;
        x
    }

    /// Direct solve followed by a few steps of iterative refinement, which brings the
    /// discrete flux balance down to roundoff on fine meshes.
    fn refined_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.base_solve(b);
        let mut last = f64::INFINITY;
        for _ in 0..3 {
            let mut r = b.to_vec();
            for &(i, j, v) in &self.matrix {
                r[i] -= v * x[j];
            }
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm < 0.5 * last) {
                break;
            }
            last = norm;
            let dx = self.base_solve(&r);
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
        }
        x
    }

    /// Solves with functionals `rhs_w`, `rhs_f`, `rhs_q` and Dirichlet values read at the
    /// masked positions of `dir_w`, `dir_f`.
    pub fn solve(
        &self,
        rhs_w: &[f64],
        rhs_f: &[f64],
        rhs_q: &[f64],
        dir_w: &[f64],
        dir_f: &[f64],
    ) -> Result<StokesSolution> {
        let l = self.layout;
        let nc = l.n_coupled();
        let mut bc = vec![0.0; nc];
        bc[..l.n_w_facet].copy_from_slice(&rhs_w[..l.n_w_facet]);
        bc[l.f_offset()..l.p_offset()].copy_from_slice(rhs_f);
        let interior_rhs: Vec<DVector<f64>> = self
            .locals
            .iter()
            .map(|loc| {
                DVector::from_iterator(
                    loc.interior_w.len() + loc.interior_q.len(),
                    loc.interior_w.iter().map(|&g| rhs_w[g]).chain(loc.interior_q.iter().map(|&g| rhs_q[g])),
                )
            })
            .collect();
        let y: Vec<DVector<f64>> = self
            .locals
            .par_iter()
            .zip(&interior_rhs)
            .map(|(loc, b)| match &loc.lu {
                Some(lu) => lu.solve(b).unwrap_or_else(|| DVector::zeros(b.len())),
                None => DVector::zeros(0),
            })
            .collect();
        for (elem, loc) in self.locals.iter().enumerate() {
            if y[elem].is_empty() {
                continue;
            }
            let r = &loc.kci * &y[elem];
            for (a, &g) in loc.coupled.iter().enumerate() {
                bc[g] -= r[a];
            }
        }
        let nql = self.n_q / l.n_elements;
        for elem in 0..l.n_elements {
            bc[l.p_offset() + elem] += rhs_q[elem * nql];
        }
        // Dirichlet values
        let mut xc = vec![0.0; nc];
        for g in 0..l.n_w_facet {
            if self.free[g].is_none() {
                xc[g] = dir_w[g];
            }
        }
        for g in 0..l.n_f {
            if self.free[l.f_offset() + g].is_none() {
                xc[l.f_offset() + g] = dir_f[g];
            }
        }
        let mut br = vec![0.0; self.n_free];
        for (g, r) in self.free.iter().enumerate() {
            if let Some(r) = r {
                br[*r] = bc[g];
            }
        }
        for &(r, g, v) in &self.lifting {
            br[r] -= v * xc[g];
        }
        let xr = self.refined_solve(&br);
        if xr.iter().any(|v| !v.is_finite()) {
            return Err(Error::Factorization("non-finite solution".into()));
        }
        for (g, r) in self.free.iter().enumerate() {
            if let Some(r) = r {
                xc[g] = xr[*r];
            }
        }
        // recovery
        let mut w = vec![0.0; self.n_w];
        w[..l.n_w_facet].copy_from_slice(&xc[..l.n_w_facet]);
        let f = xc[l.f_offset()..l.p_offset()].to_vec();
        let mut p = vec![0.0; self.n_q];
        let xi: Vec<DVector<f64>> = self
            .locals
            .par_iter()
            .zip(y)
            .map(|(loc, y)| {
                if y.is_empty() {
                    return y;
                }
                let x = DVector::from_iterator(loc.coupled.len(), loc.coupled.iter().map(|&g| xc[g]));
                y - &loc.e * x
            })
            .collect();
        for (elem, (loc, x)) in self.locals.iter().zip(&xi).enumerate() {
            p[elem * nql] = xc[l.p_offset() + elem];
            let nwi = loc.interior_w.len();
            for (i, &g) in loc.interior_w.iter().enumerate() {
                w[g] = x[i];
            }
            for (i, &g) in loc.interior_q.iter().enumerate() {
                p[g] = x[nwi + i];
            }
        }
        let multiplier = if l.multiplier { xc[nc - 1] } else { 0.0 };
        Ok(StokesSolution { w, f, p, multiplier })
    }
}
