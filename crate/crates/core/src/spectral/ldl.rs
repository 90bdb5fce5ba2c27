//! Inertia of sparse symmetric matrices by a multifrontal LDLᵀ
//! factorization with 1×1 and 2×2 pivots.
//!
//! The ordering is approximate minimum degree followed by an elimination
//! tree postorder. Columns are grouped into fundamental supernodes, each
//! processed as a dense frontal matrix. Inside a front, pivots are accepted
//! with a threshold test against the whole column; fully summed columns that
//! fail are delayed to the parent front. Root fronts fall back to
//! Bunch-Kaufman, which always finds a pivot.

use std::sync::Arc;

use serde::Serialize;

use super::sparse::{SymMatrix, SymPattern};

const NONE: usize = usize::MAX;
/// Threshold for accepting a pivot against its column.
const PIVOT_U: f64 = 0.1;
/// Bunch-Kaufman constant `(1 + sqrt 17) / 8`.
const BK_ALPHA: f64 = 0.640_388_203_202_208_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Inertia {
    pub neg: usize,
    pub zero: usize,
    pub pos: usize,
    /// Some pivot fell below the zero tolerance.
    pub degenerate: bool,
}

impl Inertia {
    pub fn triple(&self) -> (usize, usize, usize) {
        (self.neg, self.zero, self.pos)
    }
}

/// Ordering and supernodal structure for one sparsity pattern; reusable for
/// every matrix on that pattern.
#[derive(Debug, Clone)]
pub struct Symbolic {
    pattern: Arc<SymPattern>,
    /// Permuted lower entries per column: `(row, value slot)`.
    acolptr: Vec<usize>,
    aentries: Vec<(usize, usize)>,
    sn_start: Vec<usize>,
    sn_struct: Vec<Vec<usize>>,
    sn_parent: Vec<usize>,
    /// Nonzeros of the factor without delayed pivots.
    pub nnz_l: usize,
}

fn amd_order(p: &SymPattern) -> Vec<usize> {
    let n = p.n;
    // the diagonal is ignored by AMD but keeps nnz >= n, which it assumes
    let mut cols: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
    for j in 0..n {
        for k in p.colptr[j]..p.colptr[j + 1] {
            let i = p.rowidx[k];
            if i != j {
                cols[j].push(i);
                cols[i].push(j);
            }
        }
    }
    let mut ap = vec![0usize];
    let mut ai = Vec::new();
    for mut c in cols {
        c.sort_unstable();
        c.dedup();
        ai.extend_from_slice(&c);
        ap.push(ai.len());
    }
    match amd::order::<usize>(n, &ap, &ai, &amd::Control::default()) {
        Ok((perm, _, _)) => perm,
        Err(_) => (0..n).collect(),
    }
}

fn etree(n: usize, upper: &[Vec<usize>]) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for &i0 in &upper[k] {
            let mut i = i0;
            while i != NONE && i < k {
                let next = ancestor[i];
                ancestor[i] = k;
                if next == NONE {
                    parent[i] = k;
                    break;
                }
                i = next;
            }
        }
    }
    parent
}

fn postorder(parent: &[usize]) -> Vec<usize> {
    let n = parent.len();
    let mut head = vec![NONE; n];
    let mut next = vec![NONE; n];
    for j in (0..n).rev() {
        if parent[j] != NONE {
            next[j] = head[parent[j]];
            head[parent[j]] = j;
        }
    }
    let mut post = Vec::with_capacity(n);
    let mut stack = Vec::new();
    for root in 0..n {
        if parent[root] != NONE {
            continue;
        }
        stack.push(root);
        while let Some(&top) = stack.last() {
            let child = head[top];
            if child == NONE {
                stack.pop();
                post.push(top);
            } else {
                head[top] = next[child];
                stack.push(child);
            }
        }
    }
    post
}

impl Symbolic {
    pub fn analyze(pattern: Arc<SymPattern>) -> Self {
        let n = pattern.n;
        let p0 = amd_order(&pattern);
        let mut q0 = vec![0; n];
        for (k, &i) in p0.iter().enumerate() {
            q0[i] = k;
        }
        let mut upper: Vec<Vec<usize>> = vec![Vec::new(); n];
        for j in 0..n {
            for k in pattern.colptr[j]..pattern.colptr[j + 1] {
                let (a, b) = (q0[pattern.rowidx[k]], q0[j]);
                if a != b {
                    upper[a.max(b)].push(a.min(b));
                }
            }
        }
        let parent0 = etree(n, &upper);
        drop(upper);
        let post = postorder(&parent0);
        let mut inv_post = vec![0; n];
        for (k, &j) in post.iter().enumerate() {
            inv_post[j] = k;
        }
        // final numbering: old index -> position
        let q: Vec<usize> = (0..n).map(|i| inv_post[q0[i]]).collect();
        let parent: Vec<usize> = post
            .iter()
            .map(|&j| {
                if parent0[j] == NONE {
                    NONE
                } else {
                    inv_post[parent0[j]]
                }
            })
            .collect();
        let mut cols: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for j in 0..n {
            for k in pattern.colptr[j]..pattern.colptr[j + 1] {
                let (a, b) = (q[pattern.rowidx[k]], q[j]);
                cols[a.min(b)].push((a.max(b), k));
            }
        }
        let mut acolptr = vec![0];
        let mut aentries = Vec::with_capacity(pattern.nnz());
        for mut c in cols {
            c.sort_unstable();
            aentries.extend_from_slice(&c);
            acolptr.push(aentries.len());
        }
        let mut nchild = vec![0usize; n];
        for &p in &parent {
            if p != NONE {
                nchild[p] += 1;
            }
        }
        // column structures, children before parents
        let mut structs: Vec<Option<Vec<usize>>> = vec![None; n];
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (j, &p) in parent.iter().enumerate() {
            if p != NONE {
                kids[p].push(j);
            }
        }
        let mut mark = vec![NONE; n];
        let mut count = vec![0usize; n];
        let mut sn_start = Vec::new();
        let mut sn_struct = Vec::new();
        let mut nnz_l = 0;
        for j in 0..n {
            let mut s = vec![j];
            mark[j] = j;
            for &(r, _) in &aentries[acolptr[j]..acolptr[j + 1]] {
                if mark[r] != j {
                    mark[r] = j;
                    s.push(r);
                }
            }
            for &c in &kids[j] {
                let cs = structs[c].take().unwrap();
                for &r in &cs[1..] {
                    if mark[r] != j {
                        mark[r] = j;
                        s.push(r);
                    }
                }
            }
            s.sort_unstable();
            count[j] = s.len();
            nnz_l += s.len();
            let continues =
                j > 0 && parent[j - 1] == j && nchild[j] == 1 && count[j - 1] == count[j] + 1;
            if !continues {
                sn_start.push(j);
                sn_struct.push(s.clone());
            }
            if parent[j] != NONE {
                structs[j] = Some(s);
            }
        }
        sn_start.push(n);
        let nsn = sn_struct.len();
        let mut col2sn = vec![0; n];
        for s in 0..nsn {
            for c in sn_start[s]..sn_start[s + 1] {
                col2sn[c] = s;
            }
        }
        let sn_parent = (0..nsn)
            .map(|s| {
                let last = sn_start[s + 1] - 1;
                if parent[last] == NONE {
                    NONE
                } else {
                    col2sn[parent[last]]
                }
            })
            .collect();
        Self {
            pattern,
            acolptr,
            aentries,
            sn_start,
            sn_struct,
            sn_parent,
            nnz_l,
        }
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn supernodes(&self) -> usize {
        self.sn_struct.len()
    }
}

struct Contribution {
    idx: Vec<usize>,
    ndelayed: usize,
    mat: Vec<f64>,
}

/// Dense symmetric front, lower triangle, column-major.
struct Front<'a> {
    m: usize,
    a: &'a mut [f64],
    elim: Vec<bool>,
    w1: Vec<f64>,
    w2: Vec<f64>,
    thresh: f64,
    inertia: Inertia,
}

impl Front<'_> {
    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self.a[j * self.m + i]
        } else {
            self.a[i * self.m + j]
        }
    }

    /// Largest `|a_ij|` over live `i != j, i != skip`, and the argmax among
    /// live `i < limit`.
    fn col_max(&self, j: usize, skip: usize, limit: usize) -> (f64, f64, usize) {
        let mut all: f64 = 0.0;
        let mut fs: f64 = 0.0;
        let mut arg = NONE;
        for i in 0..self.m {
            if i == j || i == skip || self.elim[i] {
                continue;
            }
            let v = self.get(i, j).abs();
            all = all.max(v);
            if i < limit && v > fs {
                fs = v;
                arg = i;
            }
        }
        (all, fs, arg)
    }

    fn count(&mut self, d: f64) {
        if d.abs() < self.thresh {
            self.inertia.zero += 1;
            self.inertia.degenerate = true;
        } else if d < 0.0 {
            self.inertia.neg += 1;
        } else {
            self.inertia.pos += 1;
        }
    }

    fn drop_zero(&mut self, p: usize) {
        self.elim[p] = true;
        self.inertia.zero += 1;
        self.inertia.degenerate = true;
    }

    fn pivot1(&mut self, p: usize) {
        let m = self.m;
        let d = self.get(p, p);
        self.count(d);
        for i in 0..m {
            self.w1[i] = if i == p || self.elim[i] {
                0.0
            } else {
                self.get(i, p)
            };
        }
        self.elim[p] = true;
        for c in 0..m {
            let wc = self.w1[c];
            if wc == 0.0 {
                continue;
            }
            let s = wc / d;
            let col = &mut self.a[c * m + c..c * m + m];
            for (x, y) in col.iter_mut().zip(&self.w1[c..]) {
                *x -= s * y;
            }
        }
    }

    fn pivot2(&mut self, p: usize, q: usize) {
        let m = self.m;
        let (a, b, c) = (self.get(p, p), self.get(q, p), self.get(q, q));
        let det = a * c - b * b;
        let half = 0.5 * (a + c);
        let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        self.count(half + disc);
        self.count(half - disc);
        for i in 0..m {
            let live = i != p && i != q && !self.elim[i];
            self.w1[i] = if live { self.get(i, p) } else { 0.0 };
            self.w2[i] = if live { self.get(i, q) } else { 0.0 };
        }
        self.elim[p] = true;
        self.elim[q] = true;
        for col in 0..m {
            let (u, v) = (self.w1[col], self.w2[col]);
            if u == 0.0 && v == 0.0 {
                continue;
            }
            let l1 = (c * u - b * v) / det;
            let l2 = (a * v - b * u) / det;
            let dst = &mut self.a[col * m + col..col * m + m];
            for ((x, y1), y2) in dst.iter_mut().zip(&self.w1[col..]).zip(&self.w2[col..]) {
                *x -= y1 * l1 + y2 * l2;
            }
        }
    }

    /// Threshold pivoting over the fully summed columns `0..k`.
    fn factor_threshold(&mut self, k: usize) {
        loop {
            let mut progress = false;
            for j in 0..k {
                if self.elim[j] {
                    continue;
                }
                let ajj = self.get(j, j);
                let (gamma, fs, r) = self.col_max(j, NONE, k);
                if ajj.abs() < self.thresh && gamma < self.thresh / PIVOT_U {
                    self.drop_zero(j);
                    progress = true;
                    continue;
                }
                if ajj.abs() >= PIVOT_U * gamma {
                    self.pivot1(j);
                    progress = true;
                    continue;
                }
                if r == NONE || fs == 0.0 {
                    continue;
                }
                let (arr, ajr) = (self.get(r, r), self.get(r, j));
                let det = ajj * arr - ajr * ajr;
                if det == 0.0 {
                    continue;
                }
                let (gj, _, _) = self.col_max(j, r, 0);
                let (gr, _, _) = self.col_max(r, j, 0);
                let bound = det.abs() / PIVOT_U;
                if arr.abs() * gj + ajr.abs() * gr <= bound
                    && ajr.abs() * gj + ajj.abs() * gr <= bound
                {
                    self.pivot2(j, r);
                    progress = true;
                }
            }
            if !progress || (0..k).all(|j| self.elim[j]) {
                break;
            }
        }
    }

    /// Bunch-Kaufman on everything left; only used when nothing is delayed
    /// further.
    fn factor_bunch_kaufman(&mut self) {
        while let Some(j) = (0..self.m).find(|&j| !self.elim[j]) {
            let ajj = self.get(j, j).abs();
            let (lambda, _, r) = self.col_max(j, NONE, self.m);
            if ajj.max(lambda) < self.thresh {
                self.drop_zero(j);
                continue;
            }
            if ajj >= BK_ALPHA * lambda {
                self.pivot1(j);
                continue;
            }
            let (sigma, _, _) = self.col_max(r, NONE, 0);
            if ajj * sigma >= BK_ALPHA * lambda * lambda {
                self.pivot1(j);
            } else if self.get(r, r).abs() >= BK_ALPHA * sigma {
                self.pivot1(r);
            } else {
                self.pivot2(j, r);
            }
        }
    }
}

/// Inertia of `a`, which must live on the analyzed pattern. Pivots below
/// `tol * max|a_ij|` count as zero.
pub fn factor_inertia(sym: &Symbolic, a: &SymMatrix, tol: f64) -> Inertia {
    assert_eq!(a.n(), sym.n());
    let n = sym.n();
    let norm = a.max_abs();
    if n == 0 {
        return Inertia::default();
    }
    if norm == 0.0 {
        return Inertia {
            zero: n,
            degenerate: true,
            ..Inertia::default()
        };
    }
    let thresh = tol * norm;
    let nsn = sym.sn_struct.len();
    let mut pending: Vec<Vec<Contribution>> = (0..nsn).map(|_| Vec::new()).collect();
    let mut pos = vec![NONE; n];
    let mut buf: Vec<f64> = Vec::new();
    let mut total = Inertia::default();
    for s in 0..nsn {
        let kids = std::mem::take(&mut pending[s]);
        let mut idx: Vec<usize> = kids
            .iter()
            .flat_map(|c| c.idx[..c.ndelayed].iter().copied())
            .collect();
        idx.sort_unstable();
        let nd = idx.len();
        let (c0, c1) = (sym.sn_start[s], sym.sn_start[s + 1]);
        idx.extend_from_slice(&sym.sn_struct[s]);
        let m = idx.len();
        let k = nd + (c1 - c0);
        for (l, &g) in idx.iter().enumerate() {
            pos[g] = l;
        }
        buf.clear();
        buf.resize(m * m, 0.0);
        for c in c0..c1 {
            let pc = pos[c];
            for &(r, slot) in &sym.aentries[sym.acolptr[c]..sym.acolptr[c + 1]] {
                buf[pc * m + pos[r]] += a.values[slot];
            }
        }
        for kid in &kids {
            let mc = kid.idx.len();
            let map: Vec<usize> = kid.idx.iter().map(|g| pos[*g]).collect();
            for jj in 0..mc {
                for ii in jj..mc {
                    let v = kid.mat[jj * mc + ii];
                    if v != 0.0 {
                        let (pi, pj) = (map[ii], map[jj]);
                        let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
                        buf[c * m + r] += v;
                    }
                }
            }
        }
        drop(kids);
        let root = sym.sn_parent[s] == NONE;
        let mut front = Front {
            m,
            a: &mut buf,
            elim: vec![false; m],
            w1: vec![0.0; m],
            w2: vec![0.0; m],
            thresh,
            inertia: Inertia::default(),
        };
        front.factor_threshold(k);
        if root {
            front.factor_bunch_kaufman();
        }
        let elim = std::mem::take(&mut front.elim);
        let inc = front.inertia;
        total.neg += inc.neg;
        total.zero += inc.zero;
        total.pos += inc.pos;
        total.degenerate |= inc.degenerate;
        if !root {
            let rem: Vec<usize> = (0..m).filter(|&l| !elim[l]).collect();
            let mr = rem.len();
            let mut mat = vec![0.0; mr * mr];
            for jj in 0..mr {
                for ii in jj..mr {
                    mat[jj * mr + ii] = buf[rem[jj] * m + rem[ii]];
                }
            }
            let ndelayed = rem.iter().take_while(|&&l| l < k).count();
            pending[sym.sn_parent[s]].push(Contribution {
                idx: rem.iter().map(|&l| idx[l]).collect(),
                ndelayed,
                mat,
            });
        }
        for &g in &idx {
            pos[g] = NONE;
        }
    }
    total
}

/// One-shot inertia with the default zero tolerance `1e-12`.
pub fn inertia(a: &SymMatrix) -> Inertia {
    let sym = Symbolic::analyze(a.pattern.clone());
    factor_inertia(&sym, a, 1e-12)
}

/// Inertia from a dense eigendecomposition; eigenvalues with
/// `|lambda| <= threshold` count as zero.
pub fn dense_inertia(a: &nalgebra::DMatrix<f64>, threshold: f64) -> Inertia {
    let eig = nalgebra::SymmetricEigen::new(a.clone());
    let mut out = Inertia::default();
    for &l in eig.eigenvalues.iter() {
        if l.abs() <= threshold {
            out.zero += 1;
        } else if l < 0.0 {
            out.neg += 1;
        } else {
            out.pos += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tri(a: &DMatrix<f64>) -> (usize, usize, usize) {
        inertia(&SymMatrix::from_dense(a)).triple()
    }

    #[test]
    fn small_cases() {
        assert_eq!(
            tri(&DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 2.0])),
            (1, 0, 1)
        );
        assert_eq!(
            tri(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])),
            (1, 0, 1)
        );
        assert_eq!(tri(&DMatrix::zeros(3, 3)), (0, 3, 0));
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(tri(&a), (0, 2, 1));
    }

    #[test]
    fn random_dense_against_eigen() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for t in 0..60 {
            let n = rng.random_range(1..60);
            let mut a = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = rng.random_range(-1.0..1.0);
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            assert_eq!(tri(&a), dense_inertia(&a, 1e-9).triple(), "trial {t}");
        }
    }

    #[test]
    fn random_sparse_with_zero_diagonal() {
        // sparse indefinite matrices whose diagonal is mostly zero force
        // 2x2 pivots and delays
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for t in 0..100 {
            let n = rng.random_range(2..80);
            let mut a = DMatrix::zeros(n, n);
            for i in 0..n {
                if rng.random_bool(0.3) {
                    a[(i, i)] = rng.random_range(-1.0..1.0);
                }
                for _ in 0..3 {
                    let j = rng.random_range(0..n);
                    if j != i {
                        let v = rng.random_range(-1.0..1.0);
                        a[(i, j)] = v;
                        a[(j, i)] = v;
                    }
                }
            }
            let eig = dense_inertia(&a, 1e-9);
            assert_eq!(tri(&a), eig.triple(), "trial {t} n={n}");
        }
    }

    #[test]
    fn singular_laplacian() {
        // path-graph Laplacian: one zero eigenvalue
        let n = 50;
        let mut trip = Vec::new();
        for i in 0..n - 1 {
            trip.push((i, i, 1.0));
            trip.push((i + 1, i + 1, 1.0));
            trip.push((i + 1, i, -1.0));
        }
        let a = SymMatrix::from_triplets(n, &trip);
        assert_eq!(inertia(&a).triple(), (0, 1, n - 1));
    }
}
