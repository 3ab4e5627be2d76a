//! Discretization of the target measure `e^{⟨a,p⟩}dp` on `P` by hat functions.

use std::collections::BTreeMap;

use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expint::exp_dd;
use crate::polytope::{Polytope, DEFAULT_ORDER};
use crate::rational::{self, to_f64_vec, RVec, Rational};

#[derive(Debug, Clone, Serialize)]
pub struct NodeSystem {
    #[serde(skip)]
    pub polytope: Polytope,
    pub a: Vec<f64>,
    pub refinement: usize,
    /// Exact node positions, lexicographically ordered.
    #[serde(skip)]
    pub nodes_exact: Vec<RVec>,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// `W = Σ w_k = ∫_P e^{⟨a,p⟩} dp`.
    pub total: f64,
    /// Simplices of the refined triangulation, as node indices.
    pub simplices: Vec<Vec<usize>>,
}

impl NodeSystem {
    pub fn dim(&self) -> usize {
        self.polytope.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_k p_k / W`, the discrete tilted barycenter.
    pub fn barycenter(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.dim()];
        for (p, w) in self.nodes.iter().zip(&self.weights) {
            for (bi, pi) in b.iter_mut().zip(p) {
                *bi += w * pi;
            }
        }
        b.iter().map(|x| x / self.total).collect()
    }

    /// Vertices of `P` in counter-clockwise order (increasing order when `n = 1`).
    pub fn polytope_vertices_ccw(&self) -> Vec<Vec<f64>> {
        let v = self.polytope.vertices_f64();
        if self.dim() == 2 {
            let pts: Vec<RVec> = self.polytope.vertices.clone();
            crate::polytope::region::cyclic_order_2d(&pts).iter().map(|&i| v[i].clone()).collect()
        } else {
            v
        }
    }
}

fn midpoint(a: &RVec, b: &RVec) -> RVec {
    let half = Rational::one() / Rational::from_integer(2.into());
    a.iter().zip(b).map(|(x, y)| (x + y) * &half).collect()
}

fn subdivide(simplices: Vec<Vec<RVec>>) -> Result<Vec<Vec<RVec>>> {
    let mut out = Vec::with_capacity(simplices.len() * 4);
    for s in simplices {
        match s.len() {
            2 => {
                let m = midpoint(&s[0], &s[1]);
                out.push(vec![s[0].clone(), m.clone()]);
                out.push(vec![m, s[1].clone()]);
            }
            3 => {
                let ab = midpoint(&s[0], &s[1]);
                let bc = midpoint(&s[1], &s[2]);
                let ca = midpoint(&s[2], &s[0]);
                out.push(vec![s[0].clone(), ab.clone(), ca.clone()]);
                out.push(vec![ab.clone(), s[1].clone(), bc.clone()]);
                out.push(vec![ca.clone(), bc.clone(), s[2].clone()]);
                out.push(vec![ab, bc, ca]);
            }
            k => return Err(Error::Dimension(k - 1)),
        }
    }
    Ok(out)
}

/// `∫_S λ_i e^{⟨a,p⟩} dp` for every vertex `i` of the simplex `S`.
pub fn hat_integrals(s: &[Vec<f64>], vol: f64, a: &[f64]) -> Vec<f64> {
    let n = s.len() - 1;
    let f: Vec<f64> = s.iter().map(|p| p.iter().zip(a).map(|(x, y)| x * y).sum()).collect();
    let scale = vol * rational::factorial(n) as f64;
    (0..=n)
        .map(|i| {
            let mut nodes = f.clone();
            nodes.push(f[i]);
            scale * exp_dd(&nodes)
        })
        .collect()
}

pub fn assemble(p: &Polytope, a: &[f64], refinement: usize) -> Result<NodeSystem> {
    if p.dim > 2 {
        return Err(Error::Dimension(p.dim));
    }
    if a.len() != p.dim {
        return Err(Error::Invalid(format!("tilt vector has length {} but P has dimension {}", a.len(), p.dim)));
    }
    let mut simplices = p.simplex_points();
    for _ in 0..refinement {
        simplices = subdivide(simplices)?;
    }
    let mut index: BTreeMap<RVec, usize> = BTreeMap::new();
    for s in &simplices {
        for q in s {
            index.entry(q.clone()).or_insert(0);
        }
    }
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let nodes_exact: Vec<RVec> = index.keys().cloned().collect();
    let nodes: Vec<Vec<f64>> = nodes_exact.iter().map(|q| to_f64_vec(q)).collect();
    let mut weights = vec![0.0; nodes.len()];
    let mut simplex_idx = Vec::with_capacity(simplices.len());
    for s in &simplices {
        let idx: Vec<usize> = s.iter().map(|q| index[q]).collect();
        let vol = rational::to_f64(&crate::polytope::region::simplex_volume(s));
        let pts: Vec<Vec<f64>> = idx.iter().map(|&i| nodes[i].clone()).collect();
        for (k, h) in idx.iter().zip(hat_integrals(&pts, vol, a)) {
            weights[*k] += h;
        }
        simplex_idx.push(idx);
    }
    let target = if a.iter().all(|x| *x == 0.0) {
        rational::to_f64(&p.volume())
    } else {
        p.measures(Some(a), DEFAULT_ORDER).weighted.map(|m| m.v).unwrap_or(0.0)
    };
    let sum: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w *= target / sum;
    }
    Ok(NodeSystem {
        polytope: p.clone(),
        a: a.to_vec(),
        refinement,
        nodes_exact,
        nodes,
        weights,
        total: target,
        simplices: simplex_idx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn square() -> Polytope {
        let one = int(1);
        Polytope::from_hrep_i64(&[
            (&[1, 0], one.clone()),
            (&[-1, 0], one.clone()),
            (&[0, 1], one.clone()),
            (&[0, -1], one),
        ])
        .unwrap()
    }

    #[test]
    fn square_partition_of_unity() {
        let ns = assemble(&square(), &[0.0, 0.0], 0).unwrap();
        assert_eq!(ns.len(), 4);
        assert!((ns.weights.iter().sum::<f64>() - 4.0).abs() < 1e-14);
        let ns = assemble(&square(), &[0.0, 0.0], 3).unwrap();
        assert_eq!(ns.len(), 81);
        assert!((ns.total - 4.0).abs() < 1e-14);
        // interior node with six incident triangles of area 1/32 each
        let k = ns.nodes.iter().position(|p| p[0] == 0.25 && p[1] == 0.0).unwrap();
        assert!((ns.weights[k] - 6.0 / 32.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn segment_weights_and_tilt() {
        let seg = Polytope::from_hrep_i64(&[(&[1], int(1)), (&[-1], int(2))]).unwrap();
        let ns = assemble(&seg, &[0.0], 2).unwrap();
        assert_eq!(ns.len(), 5);
        assert_eq!(ns.nodes_exact[1], vec![frac(-1, 4)]);
        assert!((ns.weights[0] - 0.375).abs() < 1e-15);
        assert!((ns.weights[2] - 0.75).abs() < 1e-15);
        let ns = assemble(&seg, &[0.7], 2).unwrap();
        let exact = ((0.7f64 * 2.0).exp() - (-0.7f64).exp()) / 0.7;
        assert!((ns.total - exact).abs() < 1e-13 * exact);
        // hat integrals before rescaling already sum to the exact total
        let h = hat_integrals(&[vec![-1.0], vec![2.0]], 3.0, &[0.7]);
        assert!((h[0] + h[1] - exact).abs() < 1e-13 * exact);
    }
}
