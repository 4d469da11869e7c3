//! Reference-element basis tables at quadrature points.

use crate::polybasis::{dubiner, interval_rule, ref_edge_point, triangle_rule, BdmBasis, IntervalRule, TriangleRule};
use crate::{Mat2, Vec2};

/// BDM and Dubiner values at the points of a triangle rule.
#[derive(Debug, Clone)]
pub(crate) struct VolumeTables {
    pub rule: TriangleRule,
    pub bdm_v: Vec<Vec<Vec2>>,
    pub bdm_g: Vec<Vec<Mat2>>,
    /// Reference divergence of BDM members.
    pub bdm_div: Vec<Vec<f64>>,
    /// Dubiner values of degree `scalar_degree`.
    pub phi: Vec<Vec<f64>>,
    pub dphi: Vec<Vec<Vec2>>,
}

impl VolumeTables {
    pub fn new(bdm: &BdmBasis, scalar_degree: usize, degree: usize) -> Self {
        let rule = triangle_rule(degree);
        let mut t = VolumeTables {
            rule: rule.clone(),
            bdm_v: Vec::new(),
            bdm_g: Vec::new(),
            bdm_div: Vec::new(),
            phi: Vec::new(),
            dphi: Vec::new(),
        };
        for p in &rule.points {
            let (v, g) = bdm.eval(*p);
            t.bdm_div.push(g.iter().map(|g| g[0][0] + g[1][1]).collect());
            t.bdm_v.push(v);
            t.bdm_g.push(g);
            let (phi, dphi) = dubiner(scalar_degree, *p);
            t.phi.push(phi);
            t.dphi.push(dphi);
        }
        t
    }
}

/// BDM and Dubiner values along each reference edge at the points of an interval rule
/// (local edge parameter).
#[derive(Debug, Clone)]
pub(crate) struct EdgeTables {
    pub rule: IntervalRule,
    /// `[edge][point][member]`
    pub bdm_v: Vec<Vec<Vec<Vec2>>>,
    pub bdm_g: Vec<Vec<Vec<Mat2>>>,
    pub phi: Vec<Vec<Vec<f64>>>,
}

impl EdgeTables {
    pub fn new(bdm: &BdmBasis, scalar_degree: usize, degree: usize) -> Self {
        let rule = interval_rule(degree);
        let mut t = EdgeTables { rule: rule.clone(), bdm_v: Vec::new(), bdm_g: Vec::new(), phi: Vec::new() };
        for e in 0..3 {
            let (mut v, mut g, mut ph) = (Vec::new(), Vec::new(), Vec::new());
            for s in &rule.points {
                let p = ref_edge_point(e, *s);
                let (bv, bg) = bdm.eval(p);
                v.push(bv);
                g.push(bg);
                ph.push(dubiner(scalar_degree, p).0);
            }
            t.bdm_v.push(v);
            t.bdm_g.push(g);
            t.phi.push(ph);
        }
        t
    }
}
