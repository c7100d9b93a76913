//! Thin wrappers over the sparse direct solvers.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Triplet accumulator; duplicate entries are summed on assembly.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push(Triplet::new(row, col, value));
    }

    pub fn entries(&self) -> &[Triplet<usize, usize, f64>] {
        &self.entries
    }

    /// Removes every entry of `row`.
    pub fn clear_row(&mut self, row: usize) {
        self.entries.retain(|t| t.row != row);
    }

    fn build(&self) -> Result<SparseColMat<usize, f64>> {
        SparseColMat::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| Error::Consistency(format!("sparse assembly failed: {e:?}")))
    }
}

fn to_col(b: &[f64]) -> Mat<f64> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

fn from_col(x: &Mat<f64>) -> Vec<f64> {
    (0..x.nrows()).map(|i| x[(i, 0)]).collect()
}

/// General sparse LU factorisation.
pub struct SparseLu {
    lu: Lu<usize, f64>,
}

impl SparseLu {
    pub fn new(a: &TripletBuilder) -> Result<Self> {
        let m = a.build()?;
        let lu = m.sp_lu().map_err(|e| Error::Consistency(format!("sparse LU failed: {e:?}")))?;
        Ok(Self { lu })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        from_col(&self.lu.solve(&to_col(b)))
    }
}

/// Sparse Cholesky factorisation of a symmetric positive definite matrix;
/// only the lower triangle of the triplets is read.
pub struct SparseCholesky {
    llt: Llt<usize, f64>,
}

impl SparseCholesky {
    pub fn new(a: &TripletBuilder) -> Result<Self> {
        let m = a.build()?;
        let llt = m
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Consistency(format!("sparse Cholesky failed: {e:?}")))?;
        Ok(Self { llt })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        from_col(&self.llt.solve(&to_col(b)))
    }

    /// Solves for three right-hand sides stored as `[x, y, z]` per row.
    pub fn solve3(&self, b: &[[f64; 3]]) -> Vec<[f64; 3]> {
        let rhs = Mat::from_fn(b.len(), 3, |i, k| b[i][k]);
        let x = self.llt.solve(&rhs);
        (0..b.len()).map(|i| [x[(i, 0)], x[(i, 1)], x[(i, 2)]]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_and_cholesky_solve_small_systems() {
        let mut a = TripletBuilder::new(3);
        for i in 0..3 {
            a.push(i, i, 4.0);
        }
        a.push(0, 1, -1.0);
        a.push(1, 0, -1.0);
        a.push(1, 2, -1.0);
        a.push(2, 1, -1.0);
        a.push(2, 2, 0.5);
        a.push(2, 2, -0.5);
        let b = [3.0, 2.0, 3.0];
        let x = SparseLu::new(&a).unwrap().solve(&b);
        let y = SparseCholesky::new(&a).unwrap().solve(&b);
        for k in 0..3 {
            assert!((x[k] - 1.0).abs() < 1e-14);
            assert!((y[k] - 1.0).abs() < 1e-14);
        }
        let z = SparseCholesky::new(&a).unwrap().solve3(&[[3.0, 0.0, 6.0], [2.0, 0.0, 4.0], [3.0, 0.0, 6.0]]);
        assert!((z[1][2] - 2.0).abs() < 1e-14);
    }
}
