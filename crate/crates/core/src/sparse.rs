//! Sparse matrix helpers.
//!
//! Real matrices are faer compressed-column matrices. Incidence matrices
//! are kept as a small integer CSR type so that compositions such as
//! `curl * grad` can be checked in exact integer arithmetic.

use faer::prelude::Reborrow;
use faer::sparse::{SparseColMat, Triplet};

/// Real sparse matrix, compressed by column.
pub type SpMat = SparseColMat<usize, f64>;

/// Build a real matrix from coordinate entries; duplicates are summed and
/// explicit zeros are kept.
pub fn from_triplets(nrows: usize, ncols: usize, entries: &[(usize, usize, f64)]) -> SpMat {
    let t: Vec<Triplet<usize, usize, f64>> = entries.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    SpMat::try_new_from_triplets(nrows, ncols, &t).expect("triplet indices are in bounds")
}

pub fn zero(nrows: usize, ncols: usize) -> SpMat {
    from_triplets(nrows, ncols, &[])
}

/// Iterate stored entries as `(row, col, value)`.
pub fn entries(a: &SpMat) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    let r = a.rb();
    let cp = r.symbolic().col_ptr();
    let ri = r.symbolic().row_idx();
    let v = r.val();
    (0..a.ncols()).flat_map(move |j| (cp[j]..cp[j + 1]).map(move |k| (ri[k], j, v[k])))
}

pub fn nnz(a: &SpMat) -> usize {
    a.rb().val().len()
}

/// `y = A x`.
pub fn matvec(a: &SpMat, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len(), "matvec dimension mismatch");
    let mut y = vec![0.0; a.nrows()];
    for (i, j, v) in entries(a) {
        y[i] += v * x[j];
    }
    y
}

/// `y = A^T x`.
pub fn matvec_t(a: &SpMat, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.nrows(), x.len(), "matvec dimension mismatch");
    let r = a.rb();
    let cp = r.symbolic().col_ptr();
    let ri = r.symbolic().row_idx();
    let v = r.val();
    (0..a.ncols())
        .map(|j| (cp[j]..cp[j + 1]).map(|k| v[k] * x[ri[k]]).sum())
        .collect()
}

pub fn transpose(a: &SpMat) -> SpMat {
    let t: Vec<(usize, usize, f64)> = entries(a).map(|(i, j, v)| (j, i, v)).collect();
    from_triplets(a.ncols(), a.nrows(), &t)
}

pub fn scaled(a: &SpMat, s: f64) -> SpMat {
    let t: Vec<(usize, usize, f64)> = entries(a).map(|(i, j, v)| (i, j, s * v)).collect();
    from_triplets(a.nrows(), a.ncols(), &t)
}

pub fn product(a: &SpMat, b: &SpMat) -> SpMat {
    a.rb() * b.rb()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `a^T M b`.
pub fn bilinear(a: &[f64], m: &SpMat, b: &[f64]) -> f64 {
    dot(a, &matvec(m, b))
}

pub fn axpby(alpha: f64, x: &[f64], beta: f64, y: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| alpha * a + beta * b).collect()
}

pub fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    axpby(0.5, a, 0.5, b)
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn max_abs(a: &SpMat) -> f64 {
    norm_inf(a.rb().val())
}

/// Entrywise `max |A - B|` over the union of both patterns.
pub fn max_abs_diff(a: &SpMat, b: &SpMat) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()), "shape mismatch");
    let d: SpMat = a.rb() - b.rb();
    max_abs(&d)
}

pub fn is_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Integer matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntCsr {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<i32>,
}

impl IntCsr {
    /// Duplicates are summed; entries that sum to zero are kept.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, i32)>) -> Self {
        t.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(t.len());
        let mut vals: Vec<i32> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            assert!(i < nrows && j < ncols, "entry ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *vals.last_mut().expect("entry pushed before") += v;
            } else {
                col_idx.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[i32]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.vals[r])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, i32)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Exact integer product `self * other`.
    pub fn compose(&self, other: &IntCsr) -> IntCsr {
        assert_eq!(self.ncols, other.nrows, "inner dimensions differ");
        let mut t = Vec::new();
        for (i, k, a) in self.iter() {
            let (cols, vals) = other.row(k);
            for (&j, &b) in cols.iter().zip(vals) {
                t.push((i, j, a * b));
            }
        }
        IntCsr::from_triplets(self.nrows, other.ncols, t)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.ncols, x.len(), "incidence dimension mismatch");
        (0..self.nrows)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &v)| f64::from(v) * x[j]).sum()
            })
            .collect()
    }

    pub fn to_real(&self) -> SpMat {
        let t: Vec<(usize, usize, f64)> = self.iter().map(|(i, j, v)| (i, j, f64::from(v))).collect();
        from_triplets(self.nrows, self.ncols, &t)
    }
}
