use std::sync::Arc;

use nalgebra::DMatrix;

/// Sparsity pattern of the lower triangle (diagonal included), column
/// compressed with sorted row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SymPattern {
    pub n: usize,
    pub colptr: Vec<usize>,
    pub rowidx: Vec<usize>,
}

impl SymPattern {
    /// Pattern containing the full diagonal and every listed pair.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut cols: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        for (i, j) in pairs {
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            cols[c].push(r);
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowidx = Vec::new();
        colptr.push(0);
        for mut col in cols {
            col.sort_unstable();
            col.dedup();
            rowidx.extend_from_slice(&col);
            colptr.push(rowidx.len());
        }
        Self { n, colptr, rowidx }
    }

    pub fn nnz(&self) -> usize {
        self.rowidx.len()
    }

    /// Storage slot of entry `(i, j)`, either order.
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let col = &self.rowidx[self.colptr[c]..self.colptr[c + 1]];
        col.binary_search(&r).ok().map(|k| self.colptr[c] + k)
    }
}

/// Symmetric sparse matrix stored as its lower triangle.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    pub pattern: Arc<SymPattern>,
    pub values: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(pattern: Arc<SymPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    /// Sums duplicate entries; `(i, j)` and `(j, i)` address the same slot.
    pub fn from_triplets(n: usize, trip: &[(usize, usize, f64)]) -> Self {
        let pattern = Arc::new(SymPattern::from_pairs(n, trip.iter().map(|t| (t.0, t.1))));
        let mut m = Self::zeros(pattern);
        for &(i, j, v) in trip {
            m.add(i, j, v);
        }
        m
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        let mut trip = Vec::new();
        for j in 0..n {
            for i in j..n {
                if a[(i, j)] != 0.0 {
                    trip.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(n, &trip)
    }

    pub fn n(&self) -> usize {
        self.pattern.n
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.pattern.slot(i, j).expect("entry outside the pattern");
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.slot(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sum_k c_k A_k` over matrices sharing one pattern.
    pub fn combine(terms: &[(f64, &SymMatrix)]) -> SymMatrix {
        let pattern = terms[0].1.pattern.clone();
        let mut values = vec![0.0; pattern.nnz()];
        for (c, m) in terms {
            assert!(Arc::ptr_eq(&m.pattern, &pattern) || *m.pattern == *pattern);
            if *c == 0.0 {
                continue;
            }
            for (v, w) in values.iter_mut().zip(&m.values) {
                *v += c * w;
            }
        }
        SymMatrix { pattern, values }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let p = &self.pattern;
        let mut y = vec![0.0; p.n];
        for j in 0..p.n {
            for k in p.colptr[j]..p.colptr[j + 1] {
                let i = p.rowidx[k];
                let v = self.values[k];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// `x^T A x`.
    pub fn quad(&self, x: &[f64]) -> f64 {
        self.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Principal submatrix on the indices with `keep[i]`, renumbered in order.
    pub fn restrict(&self, keep: &[bool]) -> SymMatrix {
        let p = &self.pattern;
        let mut map = vec![usize::MAX; p.n];
        let mut m = 0;
        for (i, k) in keep.iter().enumerate() {
            if *k {
                map[i] = m;
                m += 1;
            }
        }
        let mut colptr = vec![0];
        let mut rowidx = Vec::new();
        let mut values = Vec::new();
        for j in 0..p.n {
            if !keep[j] {
                continue;
            }
            for k in p.colptr[j]..p.colptr[j + 1] {
                let i = p.rowidx[k];
                if keep[i] {
                    rowidx.push(map[i]);
                    values.push(self.values[k]);
                }
            }
            colptr.push(rowidx.len());
        }
        SymMatrix {
            pattern: Arc::new(SymPattern {
                n: m,
                colptr,
                rowidx,
            }),
            values,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let p = &self.pattern;
        let mut a = DMatrix::zeros(p.n, p.n);
        for j in 0..p.n {
            for k in p.colptr[j]..p.colptr[j + 1] {
                let i = p.rowidx[k];
                a[(i, j)] = self.values[k];
                a[(j, i)] = self.values[k];
            }
        }
        a
    }
}
