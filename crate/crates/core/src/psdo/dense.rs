use nalgebra::DMatrix;

use super::symbol::FullSymbol;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{GridFunction, MultiplierSymbol, TorusGrid};

/// Largest grid for which dense operator matrices are built.
pub const DENSE_LIMIT: usize = 1024;

/// Row-major real square matrix acting on grid values.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T: Real> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    /// Matrix of a linear map on grid values, built column by column.
    pub fn from_operator(grid: &TorusGrid<T>, op: impl Fn(&GridFunction<T>) -> GridFunction<T>) -> Result<Self> {
        let n = grid.n_points();
        if n > DENSE_LIMIT {
            return Err(Error::DenseTooLarge { n, limit: DENSE_LIMIT });
        }
        let mut m = Self::zeros(n);
        for col in 0..n {
            let mut e = vec![T::zero(); n];
            e[col] = T::one();
            let image = op(&GridFunction::from_values_unchecked(grid, e));
            for (row, &v) in image.values().iter().enumerate() {
                m.data[row * n + col] = v;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.n + col]
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                t.data[c * n + r] = self.data[r * n + c];
            }
        }
        t
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == T::zero() {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] = out.data[r * n + c] + a * other.data[k * n + c];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.n);
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `M + Mᵀ`.
    pub fn symmetrized(&self) -> Self {
        self.add(&self.transpose())
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |r, c| self.get(r, c).as_f64())
    }

    /// Operator 2-norm (largest singular value).
    pub fn spectral_norm(&self) -> f64 {
        self.to_nalgebra().singular_values().max()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Grid-scale matrix `M` with `M · u = OP(p) u` for every grid field `u`.
pub fn dense_matrix<T: Real>(p: &FullSymbol<T>) -> Result<DenseMatrix<T>> {
    DenseMatrix::from_operator(p.grid(), |u| p.apply(u))
}

/// L²-adjoint on the grid: the transpose of [`dense_matrix`].
pub fn adjoint_matrix<T: Real>(p: &FullSymbol<T>) -> Result<DenseMatrix<T>> {
    Ok(dense_matrix(p)?.transpose())
}

/// Projection matrix onto frequencies `|k| <= kmax`.
pub fn low_pass_matrix<T: Real>(grid: &TorusGrid<T>, kmax: i64) -> Result<DenseMatrix<T>> {
    let proj = MultiplierSymbol::low_pass(grid, kmax);
    DenseMatrix::from_operator(grid, |u| proj.apply(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn derivative_matrix_differentiates_cosine() {
        let g = TorusGrid::<f64>::new(8).unwrap();
        let p = FullSymbol::from_fn(&g, 1.0, |_, k| Complex::new(0.0, k as f64)).unwrap();
        let m = dense_matrix(&p).unwrap();
        let cos: Vec<f64> = g.points().iter().map(|x| x.cos()).collect();
        for (v, x) in m.matvec(&cos).iter().zip(g.points()) {
            assert!((v + x.sin()).abs() < 1e-12);
        }
        let skew = m.symmetrized();
        assert!(skew.max_abs() < 1e-12);
        let adj = adjoint_matrix(&p).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                assert!((adj.get(r, c) + m.get(r, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_symbol_gives_identity_matrix() {
        let g = TorusGrid::<f64>::new(8).unwrap();
        let p = FullSymbol::from_fn(&g, 0.0, |_, _| Complex::new(1.0, 0.0)).unwrap();
        let m = dense_matrix(&p).unwrap();
        let id = DenseMatrix::<f64>::identity(8);
        for r in 0..8 {
            for c in 0..8 {
                assert!((m.get(r, c) - id.get(r, c)).abs() < 1e-12);
            }
        }
        let adj = adjoint_matrix(&p).unwrap();
        assert!((adj.get(3, 3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn guard_rejects_large_grids() {
        let g = TorusGrid::<f64>::new(2048).unwrap();
        let p = FullSymbol::from_multiplier(&g, &MultiplierSymbol::identity(&g));
        assert!(matches!(dense_matrix(&p), Err(Error::DenseTooLarge { .. })));
    }
}
