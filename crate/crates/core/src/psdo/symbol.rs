use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{GridFunction, MultiplierSymbol, TorusGrid};

/// A toroidal symbol `p(x_j, k)` tabulated on grid points × frequencies.
///
/// Row `j` holds `p(x_j, ·)` in FFT order. Quantization follows
/// `(Pu)(x_j) = (1/2π) Σ_k p(x_j,k) û(k) e^{ikx_j}`; x-independent symbols
/// keep their multiplier and take the FFT fast path.
#[derive(Clone, Debug)]
pub struct FullSymbol<T: Real> {
    grid: TorusGrid<T>,
    table: Vec<Complex<T>>,
    kernel: Vec<Complex<T>>,
    order: T,
    bound: T,
    multiplier: Option<MultiplierSymbol<T>>,
}

impl<T: Real> FullSymbol<T> {
    /// Tabulates `f(x, k)`; the Nyquist column keeps only its real part.
    pub fn from_fn(grid: &TorusGrid<T>, order: T, f: impl Fn(T, i64) -> Complex<T>) -> Result<Self> {
        let n = grid.n_points();
        let mut table = Vec::with_capacity(n * n);
        for j in 0..n {
            let x = grid.point(j);
            for i in 0..n {
                let mut p = f(x, grid.wavenumber(i));
                if i == n / 2 {
                    p.im = T::zero();
                }
                table.push(p);
            }
        }
        Self::from_table(grid, order, table)
    }

    /// Validates realness `p(x,-k) = conj(p(x,k))` and the order bound.
    pub fn from_table(grid: &TorusGrid<T>, order: T, table: Vec<Complex<T>>) -> Result<Self> {
        let n = grid.n_points();
        if table.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                actual: table.len(),
            });
        }
        if let Some((index, p)) = table
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.re.is_finite() && p.im.is_finite()))
        {
            return Err(Error::NonFinite {
                index,
                value: p.norm().as_f64(),
            });
        }
        let scale = table.iter().fold(T::one(), |m, z| m.max(z.norm()));
        let tol = T::lit(64.0) * T::epsilon() * scale;
        for j in 0..n {
            let row = &table[j * n..(j + 1) * n];
            for i in 0..n {
                if (row[grid.mirror(i)] - row[i].conj()).norm() > tol {
                    return Err(Error::RealnessViolation {
                        k: grid.wavenumber(i),
                    });
                }
            }
        }
        let bound = bound_of(grid, &table, order);
        if !bound.is_finite() {
            return Err(Error::UnboundedSymbol);
        }
        let x_independent = (1..n).all(|j| {
            table[j * n..(j + 1) * n]
                .iter()
                .zip(&table[..n])
                .all(|(a, b)| a == b)
        });
        let multiplier = if x_independent {
            Some(MultiplierSymbol::from_table(grid, order, table[..n].to_vec())?)
        } else {
            None
        };
        Ok(Self::assemble(grid, table, order, bound, multiplier))
    }

    pub fn from_multiplier(grid: &TorusGrid<T>, m: &MultiplierSymbol<T>) -> Self {
        let n = grid.n_points();
        assert_eq!(m.n_points(), n, "multiplier grid mismatch");
        let mut table = Vec::with_capacity(n * n);
        for _ in 0..n {
            table.extend_from_slice(m.table());
        }
        Self::assemble(grid, table, m.order(), m.bound_constant(), Some(m.clone()))
    }

    /// Symbol of `a(x) · OP(p)`, i.e. `a(x) p(x,k)`.
    pub fn with_coefficient(&self, a: &GridFunction<T>) -> Self {
        let n = self.grid.n_points();
        assert_eq!(a.len(), n, "coefficient grid mismatch");
        let constant = a.values().iter().all(|&v| v == a.values()[0]);
        if constant {
            let c = a.values()[0];
            if let Some(m) = &self.multiplier {
                return Self::from_multiplier(&self.grid, &m.scaled(c));
            }
        }
        let table: Vec<Complex<T>> = self
            .table
            .iter()
            .enumerate()
            .map(|(idx, p)| p * a.values()[idx / n])
            .collect();
        let amax = a.max_abs();
        let multiplier = if constant {
            self.multiplier.as_ref().map(|m| m.scaled(a.values()[0]))
        } else {
            None
        };
        Self::assemble(&self.grid, table, self.order, self.bound * amax, multiplier)
    }

    fn assemble(
        grid: &TorusGrid<T>,
        table: Vec<Complex<T>>,
        order: T,
        bound: T,
        multiplier: Option<MultiplierSymbol<T>>,
    ) -> Self {
        let n = grid.n_points();
        let kernel = if multiplier.is_some() {
            Vec::new()
        } else {
            let inv = T::one() / T::TAU();
            let mut kernel = Vec::with_capacity(n * n);
            for j in 0..n {
                let x = grid.point(j);
                for i in 0..n {
                    let phase = T::from_i64_lossy(grid.wavenumber(i)) * x;
                    let e = Complex::new(phase.cos(), phase.sin());
                    kernel.push(table[j * n + i] * e * inv);
                }
            }
            kernel
        };
        Self {
            grid: grid.clone(),
            table,
            kernel,
            order,
            bound,
            multiplier,
        }
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    #[inline]
    pub fn order(&self) -> T {
        self.order
    }

    #[inline]
    pub fn bound_constant(&self) -> T {
        self.bound
    }

    #[inline]
    pub fn is_x_independent(&self) -> bool {
        self.multiplier.is_some()
    }

    pub fn multiplier(&self) -> Option<&MultiplierSymbol<T>> {
        self.multiplier.as_ref()
    }

    /// `p(x_j, k)` at grid row `j` and FFT index `i`.
    #[inline]
    pub fn at(&self, j: usize, i: usize) -> Complex<T> {
        self.table[j * self.grid.n_points() + i]
    }

    /// Applies `OP(p)`; panics on grid mismatch (see [`quantize_apply`]).
    pub fn apply(&self, u: &GridFunction<T>) -> GridFunction<T> {
        if let Some(m) = &self.multiplier {
            return m.apply(u);
        }
        let (re, _) = self.apply_direct(u);
        GridFunction::from_values_unchecked(u.grid(), re)
    }

    /// Direct `O(N²)` synthesis; also returns the largest imaginary residue.
    pub fn apply_direct(&self, u: &GridFunction<T>) -> (Vec<T>, T) {
        let n = self.grid.n_points();
        assert_eq!(u.len(), n, "symbol grid mismatch");
        let spec = u.spectrum();
        let mut imag = T::zero();
        let mut out = Vec::with_capacity(n);
        if self.kernel.is_empty() {
            let inv = T::one() / T::TAU();
            for j in 0..n {
                let x = self.grid.point(j);
                let mut acc = Complex::new(T::zero(), T::zero());
                for i in 0..n {
                    let phase = T::from_i64_lossy(self.grid.wavenumber(i)) * x;
                    acc = acc + self.table[j * n + i] * spec[i] * Complex::new(phase.cos(), phase.sin());
                }
                imag = imag.max((acc.im * inv).abs());
                out.push(acc.re * inv);
            }
        } else {
            for j in 0..n {
                let row = &self.kernel[j * n..(j + 1) * n];
                let mut re = T::zero();
                let mut im = T::zero();
                for (k, s) in row.iter().zip(spec) {
                    re = re + k.re * s.re - k.im * s.im;
                    im = im + k.re * s.im + k.im * s.re;
                }
                imag = imag.max(im.abs());
                out.push(re);
            }
        }
        (out, imag)
    }
}

/// Checked quantization `OP(p)u`.
pub fn quantize_apply<T: Real>(p: &FullSymbol<T>, u: &GridFunction<T>) -> Result<GridFunction<T>> {
    p.grid().check_same(u.grid())?;
    Ok(p.apply(u))
}

fn bound_of<T: Real>(grid: &TorusGrid<T>, table: &[Complex<T>], order: T) -> T {
    let n = grid.n_points();
    table
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            let k = T::from_i64_lossy(grid.wavenumber(idx % n).abs());
            p.norm() / (T::one() + k).powf(order)
        })
        .fold(T::zero(), T::max)
}
