use serde::{Deserialize, Serialize};

use crate::domain::{HolderSubgraphDomain, Point, BASE_DEPTH, BASE_HALF_WIDTH};
use crate::error::{invalid, Error, Result};

/// Conforming triangulation of a subgraph domain.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    /// `f(x) - y` at subgraph vertices, `NaN` below `y = 0`.
    pub heights: Vec<f64>,
    /// Triangle lies in the subgraph part.
    pub in_chart: Vec<bool>,
    /// x-coordinates of the column lines.
    pub columns: Vec<f64>,
    /// Longest edge.
    pub h_mesh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshOptions {
    pub target_h: f64,
    /// Layers in a column follow `1 - (1 - t)^grading`, so `grading > 1`
    /// refines toward the graph.
    pub grading: f64,
    pub max_vertices: usize,
}

impl MeshOptions {
    pub fn new(target_h: f64) -> Self {
        Self {
            target_h,
            grading: 1.0,
            max_vertices: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshStats {
    pub vertices: usize,
    pub triangles: usize,
    pub boundary_vertices: usize,
    pub h_mesh: f64,
    pub area: f64,
}

fn tri_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Triangulates the strip between two chains that share the start and end
/// sides, merging by the chain parameters `ta`, `tb` (both increasing).
fn zipper(
    a: &[usize],
    ta: &[f64],
    b: &[usize],
    tb: &[f64],
    verts: &[Point],
    out: &mut Vec<[usize; 3]>,
) {
    let (mut i, mut j) = (0, 0);
    let mut push = |t: [usize; 3]| {
        let ar = tri_area(verts[t[0]], verts[t[1]], verts[t[2]]);
        if ar > 0.0 {
            out.push(t);
        } else if ar < 0.0 {
            out.push([t[0], t[2], t[1]]);
        }
    };
    while i + 1 < a.len() || j + 1 < b.len() {
        let step_a = j + 1 >= b.len() || (i + 1 < a.len() && ta[i + 1] <= tb[j + 1]);
        if step_a {
            push([a[i], a[i + 1], b[j]]);
            i += 1;
        } else {
            push([a[i], b[j + 1], b[j]]);
            j += 1;
        }
    }
}

fn subdivide(xs: &[f64], target_h: f64) -> Vec<f64> {
    let mut out = vec![xs[0]];
    for w in xs.windows(2) {
        let n = ((w[1] - w[0]) / target_h).ceil().max(1.0) as usize;
        for k in 1..n {
            out.push(w[0] + (w[1] - w[0]) * k as f64 / n as f64);
        }
        out.push(w[1]);
    }
    out
}

fn uniform(a: f64, b: f64, target_h: f64) -> Vec<f64> {
    subdivide(&[a, b], target_h)
}

struct Builder {
    verts: Vec<Point>,
    heights: Vec<f64>,
    tris: Vec<[usize; 3]>,
    in_chart: Vec<bool>,
}

impl Builder {
    fn vertex(&mut self, p: Point, h: f64) -> usize {
        self.verts.push(p);
        self.heights.push(h);
        self.verts.len() - 1
    }
}

/// Column layers over the profile `(xs, ys)`; returns the bottom vertex of
/// each column line.
fn columns(b: &mut Builder, xs: &[f64], ys: &[f64], opts: &MeshOptions) -> Vec<usize> {
    let mut prev: Option<(Vec<usize>, Vec<f64>)> = None;
    let mut bottoms = Vec::with_capacity(xs.len());
    for (&x, &f) in xs.iter().zip(ys) {
        let n = if f > 0.0 {
            (f / opts.target_h).ceil().max(1.0) as usize
        } else {
            0
        };
        let mut ids = Vec::with_capacity(n + 1);
        let mut ts = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let s = if n == 0 { 0.0 } else { k as f64 / n as f64 };
            let t = 1.0 - (1.0 - s).powf(opts.grading);
            let y = if k == n { f } else { f * t };
            ids.push(b.vertex([x, y], f - y));
            ts.push(t);
        }
        bottoms.push(ids[0]);
        if let Some((pa, pt)) = &prev {
            zipper(pa, pt, &ids, &ts, &b.verts, &mut b.tris);
            b.in_chart.resize(b.tris.len(), true);
        }
        prev = Some((ids, ts));
    }
    bottoms
}

fn estimate(xs: &[f64], ys: &[f64], opts: &MeshOptions) -> usize {
    xs.iter()
        .zip(ys)
        .map(|(_, &f)| (f / opts.target_h).ceil() as usize + 1)
        .sum()
}

fn finish(b: Builder, columns: Vec<f64>) -> Mesh {
    let n = b.verts.len();
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(3 * b.tris.len());
    let mut h_mesh: f64 = 0.0;
    for t in &b.tris {
        for (i, j) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            edges.push((i.min(j), i.max(j)));
            let (p, q) = (b.verts[i], b.verts[j]);
            h_mesh = h_mesh.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
        }
    }
    edges.sort_unstable();
    let mut boundary = vec![false; n];
    let mut k = 0;
    while k < edges.len() {
        let mut l = k + 1;
        while l < edges.len() && edges[l] == edges[k] {
            l += 1;
        }
        if l - k == 1 {
            boundary[edges[k].0] = true;
            boundary[edges[k].1] = true;
        }
        k = l;
    }
    Mesh {
        vertices: b.verts,
        triangles: b.tris,
        boundary,
        heights: b.heights,
        in_chart: b.in_chart,
        columns,
        h_mesh,
    }
}

/// Mesh of `{x0 < x < x1, 0 < y < f(x)}` for a piecewise-linear `f` given
/// by breakpoints `(xs, ys)`.
pub fn triangulate_profile(xs: &[f64], ys: &[f64], opts: &MeshOptions) -> Result<Mesh> {
    check(opts)?;
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("profile", "need at least two breakpoints"));
    }
    let (gx, gy) = refine_profile(xs, ys, opts.target_h);
    let est = estimate(&gx, &gy, opts);
    if est > opts.max_vertices {
        return Err(Error::MeshBudget {
            vertices: est,
            limit: opts.max_vertices,
        });
    }
    let mut b = Builder {
        verts: Vec::with_capacity(est),
        heights: Vec::with_capacity(est),
        tris: Vec::new(),
        in_chart: Vec::new(),
    };
    columns(&mut b, &gx, &gy, opts);
    Ok(finish(b, gx))
}

fn check(opts: &MeshOptions) -> Result<()> {
    if !(opts.target_h > 0.0) {
        return Err(invalid("target_h", "must be positive"));
    }
    if !(opts.grading >= 1.0) {
        return Err(invalid("grading", "must be >= 1"));
    }
    Ok(())
}

fn refine_profile(xs: &[f64], ys: &[f64], target_h: f64) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![xs[0]];
    let mut gy = vec![ys[0]];
    for i in 0..xs.len() - 1 {
        let n = ((xs[i + 1] - xs[i]) / target_h).ceil().max(1.0) as usize;
        for k in 1..n {
            let t = k as f64 / n as f64;
            gx.push(xs[i] + t * (xs[i + 1] - xs[i]));
            gy.push(ys[i] + t * (ys[i + 1] - ys[i]));
        }
        gx.push(xs[i + 1]);
        gy.push(ys[i + 1]);
    }
    (gx, gy)
}

/// Conforming mesh of the domain: one column per profile piece (subdivided
/// to `target_h`), `ceil(f/target_h)` layers per column line, and a square
/// grid in the base box stitched to the column bottoms.
pub fn triangulate(dom: &HolderSubgraphDomain, opts: &MeshOptions) -> Result<Mesh> {
    check(opts)?;
    let pr = &dom.profile;
    let (gx, gy) = refine_profile(&pr.xs, &pr.ys, opts.target_h);
    let mut est = estimate(&gx, &gy, opts);
    let (left, right, rows, lower);
    if dom.base_box {
        left = uniform(-BASE_HALF_WIDTH, 0.0, opts.target_h);
        right = uniform(1.0, BASE_HALF_WIDTH, opts.target_h);
        lower = uniform(-BASE_HALF_WIDTH, BASE_HALF_WIDTH, opts.target_h);
        rows = (BASE_DEPTH / opts.target_h).ceil() as usize;
        est += left.len() + right.len() + rows * lower.len();
    } else {
        left = Vec::new();
        right = Vec::new();
        lower = Vec::new();
        rows = 0;
    }
    if est > opts.max_vertices {
        return Err(Error::MeshBudget {
            vertices: est,
            limit: opts.max_vertices,
        });
    }
    let mut b = Builder {
        verts: Vec::with_capacity(est),
        heights: Vec::with_capacity(est),
        tris: Vec::new(),
        in_chart: Vec::new(),
    };
    let bottoms = columns(&mut b, &gx, &gy, opts);
    if dom.base_box {
        // row y = 0: left part, column bottoms, right part
        let mut row0 = Vec::new();
        let mut t0 = Vec::new();
        for &x in &left[..left.len() - 1] {
            row0.push(b.vertex([x, 0.0], f64::NAN));
            t0.push(x);
        }
        for (&v, &x) in bottoms.iter().zip(&gx) {
            row0.push(v);
            t0.push(x);
        }
        for &x in &right[1..] {
            row0.push(b.vertex([x, 0.0], f64::NAN));
            t0.push(x);
        }
        let mut prev = row0;
        let mut prev_t = t0;
        for r in 1..=rows {
            let y = -BASE_DEPTH * r as f64 / rows as f64;
            let ids: Vec<usize> = lower.iter().map(|&x| b.vertex([x, y], f64::NAN)).collect();
            if r == 1 {
                zipper(&prev, &prev_t, &ids, &lower, &b.verts, &mut b.tris);
            } else {
                for k in 0..ids.len() - 1 {
                    let (p0, p1, q0, q1) = (prev[k], prev[k + 1], ids[k], ids[k + 1]);
                    b.tris.push([q0, q1, p1]);
                    b.tris.push([q0, p1, p0]);
                }
            }
            b.in_chart.resize(b.tris.len(), false);
            prev = ids;
            prev_t = lower.clone();
        }
    }
    Ok(finish(b, gx))
}

impl Mesh {
    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                tri_area(
                    self.vertices[t[0]],
                    self.vertices[t[1]],
                    self.vertices[t[2]],
                )
            })
            .sum()
    }

    pub fn stats(&self) -> MeshStats {
        MeshStats {
            vertices: self.vertices.len(),
            triangles: self.triangles.len(),
            boundary_vertices: self.boundary.iter().filter(|b| **b).count(),
            h_mesh: self.h_mesh,
            area: self.area(),
        }
    }

    /// Every interior edge is shared by exactly two triangles and every
    /// triangle is positively oriented.
    pub fn is_conforming(&self) -> bool {
        let mut half: Vec<(usize, usize)> = Vec::with_capacity(3 * self.triangles.len());
        for t in &self.triangles {
            if tri_area(
                self.vertices[t[0]],
                self.vertices[t[1]],
                self.vertices[t[2]],
            ) <= 0.0
            {
                return false;
            }
            for (i, j) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                half.push((i, j));
            }
        }
        half.sort_unstable();
        // a directed edge may appear once
        !half.windows(2).any(|w| w[0] == w[1])
    }

    /// Total length of edges used by a single triangle. Equals the perimeter
    /// of the domain exactly when there are no hanging nodes.
    pub fn boundary_length(&self) -> f64 {
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(3 * self.triangles.len());
        for t in &self.triangles {
            for (i, j) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edges.push((i.min(j), i.max(j)));
            }
        }
        edges.sort_unstable();
        let mut len = 0.0;
        let mut k = 0;
        while k < edges.len() {
            let mut l = k + 1;
            while l < edges.len() && edges[l] == edges[k] {
                l += 1;
            }
            if l - k == 1 {
                let (p, q) = (self.vertices[edges[k].0], self.vertices[edges[k].1]);
                len += ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            }
            k = l;
        }
        len
    }

    pub fn vertices_csv(&self) -> String {
        let mut s = String::from("i,x,y,boundary\n");
        for (i, p) in self.vertices.iter().enumerate() {
            s.push_str(&format!(
                "{i},{:e},{:e},{}\n",
                p[0], p[1], self.boundary[i] as u8
            ));
        }
        s
    }

    pub fn triangles_csv(&self) -> String {
        let mut s = String::from("t,a,b,c\n");
        for (i, t) in self.triangles.iter().enumerate() {
            s.push_str(&format!("{i},{},{},{}\n", t[0], t[1], t[2]));
        }
        s
    }
}
