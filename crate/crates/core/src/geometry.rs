//! Planar convex polygons clipped by half-planes, with edge provenance, and exact
//! exponential integration over possibly unbounded convex regions.
//!
//! Unbounded regions are produced by clipping a large square. Edges lying on the square
//! carry [`Tag::Box`]; after clipping, the box chain is replaced by two rays whose
//! directions come from the adjacent genuine edges.

use crate::expint::{self, cross2, dot2, sub2, P2};

/// `⟨n, x⟩ ≤ c` with an identifier used for neighbour bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub n: P2,
    pub c: f64,
    pub id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Box,
    /// Index into [`TaggedPolygon::lines`].
    Line(u32),
}

/// Convex polygon in counter-clockwise order; `tags[i]` describes edge `verts[i] → verts[i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedPolygon {
    pub verts: Vec<P2>,
    pub tags: Vec<Tag>,
    pub lines: Vec<Line>,
    pub half_width: f64,
}

impl TaggedPolygon {
    pub fn square(half_width: f64) -> TaggedPolygon {
        let l = half_width;
        TaggedPolygon {
            verts: vec![[-l, -l], [l, -l], [l, l], [-l, l]],
            tags: vec![Tag::Box; 4],
            lines: Vec::new(),
            half_width,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.verts.len() < 3
    }

    pub fn area(&self) -> f64 {
        let n = self.verts.len();
        (0..n).map(|i| cross2(self.verts[i], self.verts[(i + 1) % n])).sum::<f64>() * 0.5
    }

    /// True when the width (twice the area over the perimeter) is at rounding level
    /// relative to the coordinates.
    pub fn is_sliver(&self) -> bool {
        let v = &self.verts;
        let mut perim = 0.0;
        let mut scale = 1.0f64;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            perim += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            scale = scale.max(a[0].abs()).max(a[1].abs());
        }
        perim == 0.0 || 2.0 * self.area().abs() / perim <= 1e-13 * scale
    }

    pub fn has_box_edges(&self) -> bool {
        self.tags.iter().any(|t| *t == Tag::Box)
    }

    /// Keeps the part with `⟨n,x⟩ ≤ c`.
    pub fn clip(&mut self, line: Line) {
        if self.is_empty() {
            return;
        }
        let m = self.verts.len();
        let scale = line.n[0].abs() + line.n[1].abs();
        let outside = |v: &P2| dot2(line.n, *v) - line.c > 1e-14 * (line.c.abs() + scale * (v[0].abs() + v[1].abs()));
        if !self.verts.iter().any(outside) {
            return;
        }
        let s: Vec<f64> = self.verts.iter().map(|v| dot2(line.n, *v) - line.c).collect();
        let tol: Vec<f64> =
            self.verts.iter().map(|v| 1e-14 * (line.c.abs() + scale * (v[0].abs() + v[1].abs()))).collect();
        let cls: Vec<i8> = (0..m)
            .map(|i| {
                if s[i] < -tol[i] {
                    -1
                } else if s[i] > tol[i] {
                    1
                } else {
                    0
                }
            })
            .collect();
        if cls.iter().all(|&c| c <= 0) {
            return;
        }
        if cls.iter().all(|&c| c >= 0) {
            self.verts.clear();
            self.tags.clear();
            return;
        }
        let li = self.lines.len() as u32;
        let mut used = false;
        let mut nv = Vec::with_capacity(m + 1);
        let mut nt = Vec::with_capacity(m + 1);
        for i in 0..m {
            let j = (i + 1) % m;
            let (a, b) = (self.verts[i], self.verts[j]);
            let crossing = |sa: f64, sb: f64| -> P2 {
                let t = sa / (sa - sb);
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
            };
            match cls[i] {
                -1 => {
                    nv.push(a);
                    nt.push(self.tags[i]);
                    if cls[j] == 1 {
                        nv.push(crossing(s[i], s[j]));
                        nt.push(Tag::Line(li));
                        used = true;
                    }
                }
                0 => {
                    nv.push(a);
                    if cls[j] == 1 {
                        nt.push(Tag::Line(li));
                        used = true;
                    } else {
                        nt.push(self.tags[i]);
                    }
                }
                _ => {
                    if cls[j] == -1 {
                        nv.push(crossing(s[i], s[j]));
                        nt.push(self.tags[i]);
                    }
                }
            }
        }
        if used {
            self.lines.push(line);
        }
        self.verts = nv;
        self.tags = nt;
        self.dedup();
    }

    fn dedup(&mut self) {
        let mut i = 0;
        while self.verts.len() >= 2 && i < self.verts.len() {
            let j = (i + 1) % self.verts.len();
            let (a, b) = (self.verts[i], self.verts[j]);
            let sc = 1e-15 * (1.0 + a[0].abs() + a[1].abs());
            if (a[0] - b[0]).abs() <= sc && (a[1] - b[1]).abs() <= sc {
                // Edge i has zero length: drop vertex j, keeping the tag of edge j.
                self.tags[i] = self.tags[j];
                self.verts.remove(j);
                self.tags.remove(j);
                if j < i {
                    i = i.saturating_sub(1);
                }
            } else {
                i += 1;
            }
        }
        if self.verts.len() < 3 {
            self.verts.clear();
            self.tags.clear();
        }
    }

    /// Recomputes every vertex between two genuine edges as the exact intersection of
    /// their supporting lines, removing error accumulated from far-away box corners.
    pub fn refine_vertices(&mut self) {
        let m = self.verts.len();
        for i in 0..m {
            let prev = self.tags[(i + m - 1) % m];
            let next = self.tags[i];
            if let (Tag::Line(a), Tag::Line(b)) = (prev, next) {
                let (la, lb) = (self.lines[a as usize], self.lines[b as usize]);
                let det = cross2(la.n, lb.n);
                let sc = (la.n[0].abs() + la.n[1].abs()) * (lb.n[0].abs() + lb.n[1].abs());
                if det.abs() > 1e-12 * sc {
                    self.verts[i] = [(la.c * lb.n[1] - lb.c * la.n[1]) / det, (la.n[0] * lb.c - lb.n[0] * la.c) / det];
                }
            }
        }
    }

    pub fn edge_line(&self, i: usize) -> Option<Line> {
        match self.tags[i] {
            Tag::Line(k) => Some(self.lines[k as usize]),
            Tag::Box => None,
        }
    }
}

/// Convex region: bounded polygon, or a finite chain with an incoming and an outgoing ray.
#[derive(Debug, Clone, PartialEq)]
pub enum Region2 {
    Bounded(Vec<P2>),
    /// Boundary runs in from infinity along `chain[0] + t·dir_in`, follows the chain, and
    /// leaves along `chain[last] + t·dir_out` (counter-clockwise orientation).
    Unbounded {
        chain: Vec<P2>,
        dir_in: P2,
        dir_out: P2,
        in_line: u32,
        out_line: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionError {
    /// Box edges are not contiguous or the region has no finite vertex.
    NotPointed,
    /// A ray direction is not a recession direction: the clipping box was too small.
    BoxTooSmall,
}

fn normalize(d: P2) -> P2 {
    let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
    [d[0] / n, d[1] / n]
}

impl TaggedPolygon {
    /// Converts to a [`Region2`]; `recession_ok(d)` must accept true recession directions.
    pub fn to_region<F: Fn(P2) -> bool>(&self, recession_ok: F) -> Result<Region2, RegionError> {
        let m = self.verts.len();
        if !self.has_box_edges() {
            return Ok(Region2::Bounded(self.verts.clone()));
        }
        let is_box = |i: usize| self.tags[i % m] == Tag::Box;
        let starts: Vec<usize> = (0..m).filter(|&i| is_box(i) && !is_box(i + m - 1)).collect();
        if starts.len() != 1 {
            return Err(RegionError::NotPointed);
        }
        let s = starts[0];
        let mut t = s;
        while is_box(t + 1) {
            t += 1;
        }
        let box_edges = t - s + 1;
        let finite = m - box_edges - 1;
        if finite == 0 || box_edges >= m {
            return Err(RegionError::NotPointed);
        }
        let out_edge = (s + m - 1) % m;
        let in_edge = (t + 1) % m;
        let vs = self.verts[s % m];
        let vout = self.verts[out_edge];
        let vt1 = self.verts[(t + 1) % m];
        let vin = self.verts[(t + 2) % m];
        let dir_out = normalize(sub2(vs, vout));
        let dir_in = normalize(sub2(vt1, vin));
        if !recession_ok(dir_out) || !recession_ok(dir_in) {
            return Err(RegionError::BoxTooSmall);
        }
        let limit = 0.5 * self.half_width;
        let chain: Vec<P2> = (0..finite).map(|k| self.verts[(t + 2 + k) % m]).collect();
        if chain.iter().any(|v| v[0].abs() > limit || v[1].abs() > limit) {
            return Err(RegionError::BoxTooSmall);
        }
        let line_id = |e: usize| match self.tags[e] {
            Tag::Line(k) => self.lines[k as usize].id,
            Tag::Box => u32::MAX,
        };
        Ok(Region2::Unbounded { chain, dir_in, dir_out, in_line: line_id(in_edge), out_line: line_id(out_edge) })
    }
}

impl Region2 {
    /// Finite vertices.
    pub fn vertices(&self) -> &[P2] {
        match self {
            Region2::Bounded(v) => v,
            Region2::Unbounded { chain, .. } => chain,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Region2::Bounded(_))
    }

    /// `∫ e^{⟨c,x⟩+d}` and `∫ x e^{⟨c,x⟩+d}`; infinite when the integrand does not decay.
    pub fn integrate_exp(&self, c: P2, d: f64) -> (f64, P2) {
        let mut total = 0.0;
        let mut mom = [0.0; 2];
        let mut add = |(i, m): (f64, P2)| {
            total += i;
            mom[0] += m[0];
            mom[1] += m[1];
        };
        match self {
            Region2::Bounded(v) => {
                for k in 1..v.len().saturating_sub(1) {
                    add(expint::triangle([v[0], v[k], v[k + 1]], c, d));
                }
            }
            Region2::Unbounded { chain, dir_in, dir_out, .. } => {
                let sum = [dir_in[0] + dir_out[0], dir_in[1] + dir_out[1]];
                let sn = (sum[0] * sum[0] + sum[1] * sum[1]).sqrt();
                if sn < 1e-12 {
                    return (f64::INFINITY, [f64::INFINITY; 2]);
                }
                let w = [sum[0] / sn, sum[1] / sn];
                if dot2(c, *dir_in) >= 0.0 || dot2(c, *dir_out) >= 0.0 || dot2(c, w) >= 0.0 {
                    return (f64::INFINITY, [f64::INFINITY; 2]);
                }
                let first = chain[0];
                let last = *chain.last().expect("chain is nonempty");
                add(expint::cone(first, *dir_in, w, c, d));
                for k in 0..chain.len() - 1 {
                    add(expint::strip(chain[k], sub2(chain[k + 1], chain[k]), w, c, d));
                }
                add(expint::cone(last, w, *dir_out, c, d));
            }
        }
        (total, mom)
    }

    /// Bounded part used for display: the finite chain closed up with points one unit
    /// along each ray.
    pub fn display_polygon(&self) -> Vec<P2> {
        match self {
            Region2::Bounded(v) => v.clone(),
            Region2::Unbounded { chain, dir_in, dir_out, .. } => {
                let mut out = Vec::with_capacity(chain.len() + 2);
                out.push([chain[0][0] + dir_in[0], chain[0][1] + dir_in[1]]);
                out.extend(chain.iter().copied());
                let l = chain[chain.len() - 1];
                out.push([l[0] + dir_out[0], l[1] + dir_out[1]]);
                out
            }
        }
    }
}

/// Indices of the convex hull vertices of planar points in counter-clockwise order,
/// starting from the lexicographically smallest; collinear points are dropped.
pub fn convex_hull(pts: &[P2]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0]).then(pts[a][1].total_cmp(&pts[b][1])));
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() <= 2 {
        return idx;
    }
    let scale = pts.iter().fold(0.0f64, |s, p| s.max(p[0].abs()).max(p[1].abs())).max(1e-300);
    let turn =
        |o: usize, a: usize, b: usize| cross2(sub2(pts[a], pts[o]), sub2(pts[b], pts[o])) > 1e-13 * scale * scale;
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && !turn(lower[lower.len() - 2], lower[lower.len() - 1], i) {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && !turn(upper[upper.len() - 2], upper[upper.len() - 1], i) {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn polygon_area(v: &[P2]) -> f64 {
    let n = v.len();
    (0..n).map(|i| cross2(v[i], v[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Signed distance-like test: `true` when `x` lies strictly inside the CCW convex polygon.
pub fn strictly_inside(poly: &[P2], x: P2, tol: f64) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let e = sub2(b, a);
        let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
        cross2(e, sub2(x, a)) > tol * len
    })
}
