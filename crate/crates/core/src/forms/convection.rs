//! Upwind DG convection on the broken vector space, applied matrix-free.
//!
//! Both terms are evaluated on the reference element: with the Piola map,
//! `u·∇φ dx = û·∇̂φ̂ dx̂` and `u·n ds = û·ν̂ dt`, so curved geometry only enters through
//! the exterior boundary data.

use rayon::prelude::*;

use super::Spaces;
use crate::polybasis::{dubiner, dubiner_dim, interval_rule, ref_edge_normal, ref_edge_point, triangle_rule};
use crate::polybasis::{IntervalRule, TriangleRule};
use crate::Vec2;

/// Exterior value used on inflow boundary points.
#[derive(Clone, Copy)]
pub enum BoundaryTrace<'a> {
    /// Zero exterior state.
    Homogeneous,
    /// Interior trace everywhere (no inflow contribution).
    Interior,
    /// `data(x, t)` on facets with the given labels, interior trace elsewhere.
    Dirichlet { labels: &'a [&'a str], data: &'a (dyn Fn(Vec2, f64) -> Vec2 + Sync), t: f64 },
}

#[derive(Debug, Clone)]
pub struct Convection {
    nd: usize,
    vol: TriangleRule,
    /// Reference BDM values and Dubiner values/gradients at volume points.
    vol_w: Vec<Vec<Vec2>>,
    vol_phi: Vec<Vec<f64>>,
    vol_dphi: Vec<Vec<Vec2>>,
    edge: IntervalRule,
    /// `[edge][point]` BDM normal fluxes `ψ̂·ν̂_e` and Dubiner values.
    edge_flux: Vec<Vec<Vec<f64>>>,
    edge_phi: Vec<Vec<Vec<f64>>>,
}

struct Traces {
    /// `[edge][point]`
    flux: [Vec<f64>; 3],
    /// `[edge][point][component]`
    value: [Vec<Vec2>; 3],
}

impl Convection {
    pub fn new(spaces: &Spaces) -> Convection {
        let k = spaces.k;
        let bdm = spaces.w.bdm().expect("Hdiv space");
        let vol = triangle_rule(3 * k + 1);
        let edge = interval_rule(3 * k + 1);
        let mut c = Convection {
            nd: dubiner_dim(k),
            vol_w: vol.points.iter().map(|p| bdm.values(*p)).collect(),
            vol_phi: Vec::new(),
            vol_dphi: Vec::new(),
            edge_flux: Vec::new(),
            edge_phi: Vec::new(),
            vol: vol.clone(),
            edge: edge.clone(),
        };
        for p in &vol.points {
            let (v, g) = dubiner(k, *p);
            c.vol_phi.push(v);
            c.vol_dphi.push(g);
        }
        for e in 0..3 {
            let nu = ref_edge_normal(e);
            let (mut fl, mut ph) = (Vec::new(), Vec::new());
            for t in &edge.points {
                let p = ref_edge_point(e, *t);
                fl.push(bdm.values(p).iter().map(|v| v[0] * nu[0] + v[1] * nu[1]).collect());
                ph.push(dubiner(k, p).0);
            }
            c.edge_flux.push(fl);
            c.edge_phi.push(ph);
        }
        c
    }

    /// Residual `z ↦ C(u; w, z)` over all V basis functions, for `u` given by W
    /// coefficients and `w` by V coefficients.
    pub fn apply(&self, spaces: &Spaces, u: &[f64], w: &[f64], bc: &BoundaryTrace) -> Vec<f64> {
        let mesh = &spaces.mesh;
        let nd = self.nd;
        let nv = 2 * nd;
        let mut out = vec![0.0; spaces.v.ndof];
        // volume terms and edge traces, element-parallel into disjoint output chunks
        let traces: Vec<Traces> = out
            .par_chunks_mut(nv)
            .enumerate()
            .map(|(elem, r)| {
                let uc = spaces.w.gather(elem, u);
                let wc = &w[elem * nv..(elem + 1) * nv];
                for q in 0..self.vol.len() {
                    let mut uh = [0.0; 2];
                    for (m, c) in uc.iter().enumerate() {
                        uh[0] += c * self.vol_w[q][m][0];
                        uh[1] += c * self.vol_w[q][m][1];
                    }
                    let phi = &self.vol_phi[q];
                    let wv = [0, 1].map(|c| (0..nd).map(|i| wc[c * nd + i] * phi[i]).sum::<f64>());
                    let wq = self.vol.weights[q];
                    for i in 0..nd {
                        let g = self.vol_dphi[q][i];
                        let a = wq * (uh[0] * g[0] + uh[1] * g[1]);
                        r[i] -= a * wv[0];
                        r[nd + i] -= a * wv[1];
                    }
                }
                let mut tr = Traces { flux: Default::default(), value: Default::default() };
                for e in 0..3 {
                    for q in 0..self.edge.len() {
                        let fl: f64 = uc.iter().zip(&self.edge_flux[e][q]).map(|(c, f)| c * f).sum();
                        let phi = &self.edge_phi[e][q];
                        let wv = [0, 1].map(|c| (0..nd).map(|i| wc[c * nd + i] * phi[i]).sum::<f64>());
                        tr.flux[e].push(fl);
                        tr.value[e].push(wv);
                    }
                }
                tr
            })
            .collect();
        // facet terms: one task per facet, merged in facet order
        let nq = self.edge.len();
        let contributions: Vec<[(usize, Vec<f64>); 2]> = (0..mesh.n_facets())
            .into_par_iter()
            .map(|f| {
                let facet = &mesh.facets[f];
                let (t1, e1) = (facet.owner, facet.local_edges[0]);
                let mut r1 = vec![0.0; nv];
                let mut r2 = vec![0.0; nv];
                let exterior = match (facet.neighbor, bc) {
                    (Some(_), _) => None,
                    (None, BoundaryTrace::Dirichlet { labels, data, t }) => {
                        let lab = facet.label.as_deref().unwrap_or("");
                        labels.contains(&lab).then_some((data, *t))
                    }
                    _ => None,
                };
                for q in 0..nq {
                    let wq = self.edge.weights[q];
                    let fl = traces[t1].flux[e1][q];
                    let w1 = traces[t1].value[e1][q];
                    let upwind = if fl >= 0.0 {
                        w1
                    } else if let Some(t2) = facet.neighbor {
                        traces[t2].value[facet.local_edges[1]][nq - 1 - q]
                    } else {
                        match bc {
                            BoundaryTrace::Homogeneous => [0.0; 2],
                            BoundaryTrace::Interior => w1,
                            BoundaryTrace::Dirichlet { .. } => match exterior {
                                Some((data, t)) => {
                                    let p = ref_edge_point(e1, self.edge.points[q]);
                                    data(mesh.geometry_map(t1, p).0, t)
                                }
                                None => w1,
                            },
                        }
                    };
                    let phi1 = &self.edge_phi[e1][q];
                    for i in 0..nd {
                        r1[i] += wq * fl * upwind[0] * phi1[i];
                        r1[nd + i] += wq * fl * upwind[1] * phi1[i];
                    }
                    if let Some(_t2) = facet.neighbor {
                        let phi2 = &self.edge_phi[facet.local_edges[1]][nq - 1 - q];
                        for i in 0..nd {
                            r2[i] -= wq * fl * upwind[0] * phi2[i];
                            r2[nd + i] -= wq * fl * upwind[1] * phi2[i];
                        }
                    }
                }
                [(t1, r1), (facet.neighbor.unwrap_or(usize::MAX), r2)]
            })
            .collect();
        for pair in &contributions {
            for (elem, r) in pair {
                if *elem == usize::MAX {
                    continue;
                }
                for (o, v) in out[elem * nv..(elem + 1) * nv].iter_mut().zip(r) {
                    *o += v;
                }
            }
        }
        out
    }
}
