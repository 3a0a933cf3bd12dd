//! Sparse direct solves of the block saddle-point systems.
//!
//! Systems are described as coordinate lists. The time loop rebuilds the
//! same pattern every step (only the values of the rotation block change),
//! so the column ordering and symbolic LU are computed once and reused
//! whenever the incoming pattern matches the cached one.

use faer::linalg::solvers::Solve;
use faer::prelude::Reborrow;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};
use faer::Mat;

use crate::error::{Error, Result};
use crate::sparse::{self, SpMat};

/// Coordinate-form square system assembled block by block.
#[derive(Debug, Clone)]
pub struct TripletSystem {
    size: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletSystem {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.size && col < self.size);
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    /// Add `scale * B` with its top-left corner at `(row0, col0)`.
    /// Explicitly stored zeros are kept so the pattern stays fixed.
    pub fn add_block(&mut self, row0: usize, col0: usize, b: &SpMat, scale: f64) {
        for (i, j, v) in sparse::entries(b) {
            self.push(row0 + i, col0 + j, scale * v);
        }
    }

    /// Add `scale * B^T` with its top-left corner at `(row0, col0)`.
    pub fn add_block_t(&mut self, row0: usize, col0: usize, b: &SpMat, scale: f64) {
        for (i, j, v) in sparse::entries(b) {
            self.push(row0 + j, col0 + i, scale * v);
        }
    }

    /// `y = A x` straight from the coordinate list (duplicates add up).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size];
        for ((&i, &j), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            y[i] += v * x[j];
        }
        y
    }

    fn same_pattern(&self, rows: &[usize], cols: &[usize]) -> bool {
        self.rows == rows && self.cols == cols
    }
}

struct Cached {
    rows: Vec<usize>,
    cols: Vec<usize>,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    lu: SymbolicLu<usize>,
}

/// LU solver with symbolic-factorization reuse across calls.
#[derive(Default)]
pub struct DirectSolver {
    cached: Option<Cached>,
    symbolic_builds: usize,
}

/// A factorized system ready for solves.
pub struct Factorized {
    lu: Lu<usize, f64>,
    size: usize,
}

impl DirectSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of symbolic analyses performed so far.
    pub fn symbolic_builds(&self) -> usize {
        self.symbolic_builds
    }

    pub fn factorize(&mut self, sys: &TripletSystem, context: &str) -> Result<Factorized> {
        let fail = |reason: String| Error::Factorization {
            context: context.to_string(),
            reason,
        };
        if !sys.vals.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("{context} (system matrix)"),
            });
        }
        let reuse = self.cached.as_ref().is_some_and(|c| sys.same_pattern(&c.rows, &c.cols));
        if !reuse {
            let pairs: Vec<Pair<usize, usize>> = sys
                .rows
                .iter()
                .zip(&sys.cols)
                .map(|(&row, &col)| Pair { row, col })
                .collect();
            let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(sys.size, sys.size, &pairs)
                .map_err(|e| fail(format!("{e:?}")))?;
            let lu = SymbolicLu::try_new(symbolic.rb()).map_err(|e| fail(format!("{e:?}")))?;
            self.cached = Some(Cached {
                rows: sys.rows.clone(),
                cols: sys.cols.clone(),
                symbolic,
                argsort,
                lu,
            });
            self.symbolic_builds += 1;
        }
        let c = self.cached.as_ref().expect("cache populated above");
        let mat = SparseColMat::new_from_argsort(c.symbolic.clone(), &c.argsort, &sys.vals)
            .map_err(|e| fail(format!("{e:?}")))?;
        let lu = Lu::try_new_with_symbolic(c.lu.clone(), mat.rb()).map_err(|e| fail(format!("{e:?}")))?;
        Ok(Factorized { lu, size: sys.size })
    }
}

impl Factorized {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.size, "right-hand side length");
        let mut b = Mat::<f64>::from_fn(self.size, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(b.as_mut());
        (0..self.size).map(|i| b[(i, 0)]).collect()
    }
}

/// Solve once, checking the result for NaN/inf and returning the relative
/// residual `|A x - b|_inf / max(|b|_inf, 1)`.
pub fn solve_checked(
    solver: &mut DirectSolver,
    sys: &TripletSystem,
    rhs: &[f64],
    context: &str,
) -> Result<(Vec<f64>, f64)> {
    let f = solver.factorize(sys, context)?;
    let x = f.solve(rhs);
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            context: context.to_string(),
        });
    }
    let ax = sys.apply(&x);
    let res = ax.iter().zip(rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = rhs.iter().fold(1.0f64, |m, b| m.max(b.abs()));
    Ok((x, res / scale))
}

/// Solve `A x = b` for a standalone sparse matrix (e.g. a mass matrix).
pub fn solve_matrix(a: &SpMat, rhs: &[f64], context: &str) -> Result<Vec<f64>> {
    assert_eq!(a.nrows(), a.ncols());
    let mut sys = TripletSystem::new(a.nrows());
    sys.add_block(0, 0, a, 1.0);
    let mut solver = DirectSolver::new();
    let (x, _) = solve_checked(&mut solver, &sys, rhs, context)?;
    Ok(x)
}
