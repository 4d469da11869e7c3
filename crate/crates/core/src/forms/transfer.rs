//! Mixed mass `M_UV`, broken mass `M_V` and the transfer `I = M_V⁻¹ M_UV`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use super::tables::VolumeTables;
use super::Spaces;
use crate::error::{Error, Result};
use crate::fespace::GeoPoint;
use crate::polybasis::dubiner_dim;

#[derive(Debug, Clone)]
enum MassBlock {
    /// `c I` per component (affine elements, orthogonal basis).
    Scaled(f64),
    /// Scalar Gram matrix shared by both components.
    Dense(Cholesky<f64, Dyn>),
}

#[derive(Debug, Clone)]
pub struct Transfer {
    nd: usize,
    /// Per element `2 nd × n_W` with signed W columns.
    muv: Vec<DMatrix<f64>>,
    mv: Vec<MassBlock>,
}

impl Transfer {
    pub fn new(spaces: &Spaces) -> Result<Transfer> {
        let k = spaces.k;
        let mesh = &spaces.mesh;
        let nd = dubiner_dim(k);
        let bdm = spaces.w.bdm().expect("Hdiv space");
        let affine = VolumeTables::new(bdm, k, 2 * k + 2);
        let curved = (0..mesh.n_elements())
            .any(|e| mesh.is_curved(e))
            .then(|| VolumeTables::new(bdm, k, 2 * k + 2 + 2 * mesh.geometry_order));
        let parts = (0..mesh.n_elements())
            .into_par_iter()
            .map(|elem| {
                let is_curved = mesh.is_curved(elem);
                let vt = if is_curved { curved.as_ref().expect("curved tables") } else { &affine };
                let signs = spaces.w.element_signs(elem);
                let nw = signs.len();
                let mut m = DMatrix::zeros(2 * nd, nw);
                let mut gram = DMatrix::zeros(nd, nd);
                for (q, (p, w)) in vt.rule.points.iter().zip(&vt.rule.weights).enumerate() {
                    let geo = GeoPoint::at(mesh, elem, *p);
                    let phi = &vt.phi[q];
                    for (a, v) in vt.bdm_v[q].iter().enumerate() {
                        let jv =
                            [geo.jac[0][0] * v[0] + geo.jac[0][1] * v[1], geo.jac[1][0] * v[0] + geo.jac[1][1] * v[1]];
                        for c in 0..2 {
                            for i in 0..nd {
                                m[(c * nd + i, a)] += w * phi[i] * jv[c] * signs[a];
                            }
                        }
                    }
                    if is_curved {
                        gram.ger(w * geo.det, &DVector::from_column_slice(phi), &DVector::from_column_slice(phi), 1.0);
                    }
                }
                let block = if is_curved {
                    MassBlock::Dense(gram.cholesky().ok_or(Error::SingularInteriorBlock(elem))?)
                } else {
                    MassBlock::Scaled(0.5 * mesh.geometry_map(elem, [0.0, 0.0]).2)
                };
                Ok((m, block))
            })
            .collect::<Result<Vec<_>>>()?;
        let (muv, mv) = parts.into_iter().unzip();
        Ok(Transfer { nd, muv, mv })
    }

    /// `M_UV w`: V functionals of a W field.
    pub fn apply_muv(&self, spaces: &Spaces, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; spaces.v.ndof];
        out.par_chunks_mut(2 * self.nd).enumerate().for_each(|(elem, o)| {
            let x = DVector::from_iterator(self.muv[elem].ncols(), spaces.w.element_dofs(elem).iter().map(|&i| w[i]));
            o.copy_from_slice((&self.muv[elem] * x).as_slice());
        });
        out
    }

    /// `M_UVᵀ f`: W functionals of V functionals.
    pub fn apply_muv_t(&self, spaces: &Spaces, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; spaces.w.ndof];
        for (elem, m) in self.muv.iter().enumerate() {
            let x = DVector::from_column_slice(&f[elem * 2 * self.nd..(elem + 1) * 2 * self.nd]);
            let r = m.tr_mul(&x);
            for (i, &g) in spaces.w.element_dofs(elem).iter().enumerate() {
                out[g] += r[i];
            }
        }
        out
    }

    /// `M_V v`.
    pub fn apply_mv(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        out.par_chunks_mut(2 * self.nd).enumerate().for_each(|(elem, o)| match &self.mv[elem] {
            MassBlock::Scaled(c) => o.iter_mut().for_each(|x| *x *= c),
            MassBlock::Dense(ch) => {
                let g = ch.l() * ch.l().transpose();
                for c in 0..2 {
                    let x = DVector::from_column_slice(&o[c * self.nd..(c + 1) * self.nd]);
                    o[c * self.nd..(c + 1) * self.nd].copy_from_slice((&g * x).as_slice());
                }
            }
        });
        out
    }

    /// `M_V⁻¹ f`.
    pub fn solve_mv(&self, f: &[f64]) -> Vec<f64> {
        let mut out = f.to_vec();
        out.par_chunks_mut(2 * self.nd).enumerate().for_each(|(elem, o)| match &self.mv[elem] {
            MassBlock::Scaled(c) => o.iter_mut().for_each(|x| *x /= c),
            MassBlock::Dense(ch) => {
                for c in 0..2 {
                    let x = ch.solve(&DVector::from_column_slice(&o[c * self.nd..(c + 1) * self.nd]));
                    o[c * self.nd..(c + 1) * self.nd].copy_from_slice(x.as_slice());
                }
            }
        });
        out
    }

    /// `I w = M_V⁻¹ M_UV w`.
    pub fn apply_i(&self, spaces: &Spaces, w: &[f64]) -> Vec<f64> {
        self.solve_mv(&self.apply_muv(spaces, w))
    }

    /// `Iᵀ f = M_UVᵀ M_V⁻¹ f`.
    pub fn apply_i_t(&self, spaces: &Spaces, f: &[f64]) -> Vec<f64> {
        self.apply_muv_t(spaces, &self.solve_mv(f))
    }

    /// Whether `M_V` is diagonal on element `elem`.
    pub fn is_diagonal(&self, elem: usize) -> bool {
        matches!(self.mv[elem], MassBlock::Scaled(_))
    }

    /// Dense element block of `M_V` (one component).
    pub fn mass_block(&self, elem: usize) -> DMatrix<f64> {
        match &self.mv[elem] {
            MassBlock::Scaled(c) => DMatrix::identity(self.nd, self.nd) * *c,
            MassBlock::Dense(ch) => ch.l() * ch.l().transpose(),
        }
    }
}
