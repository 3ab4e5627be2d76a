//! Exact convex regions cut out by rational half-spaces in dimension 1..=3.
//!
//! Vertices are found by brute-force enumeration of `n`-subsets of constraints. The
//! region also knows its facets (tight vertex sets) and can be triangulated exactly.

use num_traits::{Signed, Zero};

use crate::rational::{self, affine_rank, det, dot, lex_cmp, sub, RVec, Rational};

/// `⟨normal, p⟩ + offset ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: RVec,
    pub offset: Rational,
}

impl Halfspace {
    pub fn eval(&self, p: &[Rational]) -> Rational {
        dot(&self.normal, p) + &self.offset
    }
}

#[derive(Debug, Clone)]
pub struct RegionFacet {
    /// Index of the first constraint supporting this facet.
    pub constraint: usize,
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Region {
    pub dim: usize,
    pub vertices: Vec<RVec>,
    pub facets: Vec<RegionFacet>,
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}

/// All feasible points where `dim` linearly independent constraints are tight,
/// deduplicated and sorted lexicographically.
pub fn enumerate_vertices(dim: usize, hs: &[Halfspace]) -> Vec<RVec> {
    let mut pts: Vec<RVec> = Vec::new();
    for s in subsets(hs.len(), dim) {
        let a: Vec<RVec> = s.iter().map(|&i| hs[i].normal.clone()).collect();
        let b: RVec = s.iter().map(|&i| -hs[i].offset.clone()).collect();
        if let Some(x) = rational::solve(a, b) {
            if hs.iter().all(|h| !h.eval(&x).is_negative()) {
                pts.push(x);
            }
        }
    }
    pts.sort_by(|a, b| lex_cmp(a, b));
    pts.dedup();
    pts
}

/// True when the cone `{d : ⟨normal_i, d⟩ ≥ 0}` is `{0}`; assumes the region is nonempty.
pub fn is_bounded(dim: usize, hs: &[Halfspace]) -> bool {
    let normals: Vec<RVec> = hs.iter().map(|h| h.normal.clone()).collect();
    if rational::rank(&normals) < dim {
        return false;
    }
    // Extreme rays of a pointed cone lie on n-1 linearly independent tight constraints.
    for s in subsets(hs.len(), dim - 1) {
        let rows: Vec<RVec> = s.iter().map(|&i| hs[i].normal.clone()).collect();
        let ns = rational::nullspace(&rows, dim);
        if ns.len() != 1 {
            continue;
        }
        let d = &ns[0];
        for sign in [1i64, -1] {
            let dd: RVec = d.iter().map(|x| x * rational::int(sign)).collect();
            if normals.iter().all(|nv| !dot(nv, &dd).is_negative()) {
                return false;
            }
        }
    }
    true
}

impl Region {
    /// Builds the region; `None` when it is empty or not full-dimensional.
    /// The caller is responsible for boundedness.
    pub fn new(dim: usize, hs: &[Halfspace]) -> Option<Region> {
        let vertices = enumerate_vertices(dim, hs);
        if vertices.len() < dim + 1 || affine_rank(&vertices) < dim {
            return None;
        }
        let mut facets: Vec<RegionFacet> = Vec::new();
        for (ci, h) in hs.iter().enumerate() {
            let tight: Vec<usize> = (0..vertices.len()).filter(|&v| h.eval(&vertices[v]).is_zero()).collect();
            if tight.is_empty() {
                continue;
            }
            let pts: Vec<RVec> = tight.iter().map(|&v| vertices[v].clone()).collect();
            if affine_rank(&pts) + 1 != dim {
                continue;
            }
            if facets.iter().any(|f| f.vertices == tight) {
                continue;
            }
            facets.push(RegionFacet { constraint: ci, vertices: tight });
        }
        Some(Region { dim, vertices, facets })
    }

    pub fn centroid_of_vertices(&self) -> RVec {
        centroid(&self.vertices)
    }

    /// Triangulation into full-dimensional simplices given by point lists.
    /// Dim 1: the segment; dim 2: fan from the first vertex in cyclic order starting at
    /// the lexicographically smallest vertex; dim 3: cone from the vertex centroid over
    /// fan-triangulated facets.
    pub fn simplices(&self) -> Vec<Vec<RVec>> {
        match self.dim {
            1 => vec![vec![self.vertices[0].clone(), self.vertices[self.vertices.len() - 1].clone()]],
            2 => {
                let order = cyclic_order_2d(&self.vertices);
                let v0 = &self.vertices[order[0]];
                order
                    .windows(2)
                    .skip(1)
                    .map(|w| vec![v0.clone(), self.vertices[w[0]].clone(), self.vertices[w[1]].clone()])
                    .collect()
            }
            3 => {
                let c = self.centroid_of_vertices();
                let mut out = Vec::new();
                for f in 0..self.facets.len() {
                    for tri in self.facet_simplices(f) {
                        let mut s = vec![c.clone()];
                        s.extend(tri);
                        out.push(s);
                    }
                }
                out
            }
            d => panic!("unsupported dimension {d}"),
        }
    }

    /// Triangulation of facet `f` into (dim-1)-simplices.
    pub fn facet_simplices(&self, f: usize) -> Vec<Vec<RVec>> {
        let pts: Vec<RVec> = self.facets[f].vertices.iter().map(|&v| self.vertices[v].clone()).collect();
        face_simplices(self.dim, &pts)
    }

    pub fn volume(&self) -> Rational {
        self.simplices().iter().map(|s| simplex_volume(s)).fold(Rational::zero(), |a, b| a + b)
    }
}

/// Triangulates a (dim-1)-dimensional convex face given by its vertex set (in ℝ^dim).
pub fn face_simplices(dim: usize, pts: &[RVec]) -> Vec<Vec<RVec>> {
    match dim {
        1 => vec![vec![pts[0].clone()]],
        2 => {
            // Extreme points of a collinear set: lexicographic min and max.
            let mut s = pts.to_vec();
            s.sort_by(|a, b| lex_cmp(a, b));
            vec![vec![s[0].clone(), s[s.len() - 1].clone()]]
        }
        3 => {
            let e1 = sub(&pts[1], &pts[0]);
            let e2 = pts.iter().map(|p| sub(p, &pts[0])).find(|e| !cross3(&e1, e).iter().all(|x| x.is_zero()));
            let Some(e2) = e2 else { return Vec::new() };
            let nrm = cross3(&e1, &e2);
            let drop = (0..3).max_by(|&a, &b| nrm[a].abs().cmp(&nrm[b].abs())).unwrap_or(2);
            let proj: Vec<RVec> =
                pts.iter().map(|p| (0..3).filter(|&c| c != drop).map(|c| p[c].clone()).collect()).collect();
            let order = cyclic_order_2d(&proj);
            let v0 = &pts[order[0]];
            order.windows(2).skip(1).map(|w| vec![v0.clone(), pts[w[0]].clone(), pts[w[1]].clone()]).collect()
        }
        d => panic!("unsupported dimension {d}"),
    }
}

pub fn cross3(a: &[Rational], b: &[Rational]) -> RVec {
    vec![&a[1] * &b[2] - &a[2] * &b[1], &a[2] * &b[0] - &a[0] * &b[2], &a[0] * &b[1] - &a[1] * &b[0]]
}

pub fn centroid(pts: &[RVec]) -> RVec {
    let n = pts[0].len();
    let k = rational::int(pts.len() as i64);
    (0..n).map(|c| pts.iter().fold(Rational::zero(), |s, p| s + &p[c]) / &k).collect()
}

/// Indices of the extreme points of a planar point set, in counter-clockwise order
/// starting from the lexicographically smallest one. Non-extreme points are dropped.
pub fn cyclic_order_2d(pts: &[RVec]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| lex_cmp(&pts[a], &pts[b]));
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() <= 2 {
        return idx;
    }
    let cross = |o: usize, a: usize, b: usize| -> Rational {
        (&pts[a][0] - &pts[o][0]) * (&pts[b][1] - &pts[o][1]) - (&pts[a][1] - &pts[o][1]) * (&pts[b][0] - &pts[o][0])
    };
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && !cross(lower[lower.len() - 2], lower[lower.len() - 1], i).is_positive() {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && !cross(upper[upper.len() - 2], upper[upper.len() - 1], i).is_positive() {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Volume of the simplex spanned by `dim+1` points.
pub fn simplex_volume(s: &[RVec]) -> Rational {
    let n = s.len() - 1;
    let m: Vec<RVec> = s[1..].iter().map(|p| sub(p, &s[0])).collect();
    det(m).abs() / rational::int(rational::factorial(n) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rvec};

    fn hs(n: &[i64], a: i64) -> Halfspace {
        Halfspace { normal: rvec(n), offset: int(a) }
    }

    #[test]
    fn square_region() {
        let h = vec![hs(&[1, 0], 1), hs(&[-1, 0], 1), hs(&[0, 1], 1), hs(&[0, -1], 1)];
        assert!(is_bounded(2, &h));
        let r = Region::new(2, &h).unwrap();
        assert_eq!(r.vertices.len(), 4);
        assert_eq!(r.facets.len(), 4);
        assert_eq!(r.volume(), int(4));
    }

    #[test]
    fn unbounded_detected() {
        let h = vec![hs(&[1, 0], 1), hs(&[0, 1], 1), hs(&[-1, 1], 3)];
        assert!(!is_bounded(2, &h));
        let h3 = vec![hs(&[1, 0, 0], 1), hs(&[0, 1, 0], 1), hs(&[0, 0, 1], 1), hs(&[-1, -1, -1], 1)];
        assert!(is_bounded(3, &h3));
        let r = Region::new(3, &h3).unwrap();
        // simplex with vertices (-1,-1,-1),(3,-1,-1),(-1,3,-1),(-1,-1,3): volume 4^3/6
        assert_eq!(r.volume(), crate::rational::frac(64, 6));
    }

    #[test]
    fn hull_drops_interior_points() {
        let pts = vec![rvec(&[0, 0]), rvec(&[2, 0]), rvec(&[1, 1]), rvec(&[0, 2]), rvec(&[2, 2]), rvec(&[1, 0])];
        let o = cyclic_order_2d(&pts);
        assert_eq!(o, vec![0, 1, 4, 3]);
    }
}
