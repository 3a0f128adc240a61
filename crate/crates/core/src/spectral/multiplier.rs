use num_complex::Complex;

use super::grid::{GridFunction, TorusGrid};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// An x-independent symbol `m(k)`, i.e. a Fourier multiplier.
///
/// The table is stored in FFT order. Construction enforces the realness
/// constraint `m(-k) = conj(m(k))`; the Nyquist entry must be real.
#[derive(Clone, Debug)]
pub struct MultiplierSymbol<T: Real> {
    n: usize,
    table: Vec<Complex<T>>,
    order: T,
    bound: T,
}

impl<T: Real> MultiplierSymbol<T> {
    /// Tabulates `f` on the representable frequencies. At the Nyquist slot
    /// only the real part is kept, which zeroes odd symbols such as `ik`.
    pub fn from_fn(grid: &TorusGrid<T>, order: T, f: impl Fn(i64) -> Complex<T>) -> Result<Self> {
        let n = grid.n_points();
        let mut table: Vec<Complex<T>> = (0..n).map(|i| f(grid.wavenumber(i))).collect();
        table[n / 2].im = T::zero();
        Self::from_table(grid, order, table)
    }

    /// Real-valued even or odd symbols given as `f(k)`, multiplied by `i` when `odd`.
    pub fn from_real_fn(grid: &TorusGrid<T>, order: T, odd: bool, f: impl Fn(i64) -> T) -> Result<Self> {
        Self::from_fn(grid, order, |k| {
            if odd {
                Complex::new(T::zero(), f(k))
            } else {
                Complex::new(f(k), T::zero())
            }
        })
    }

    pub fn from_table(grid: &TorusGrid<T>, order: T, table: Vec<Complex<T>>) -> Result<Self> {
        let n = grid.n_points();
        if table.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: table.len(),
            });
        }
        for (i, m) in table.iter().enumerate() {
            if !(m.re.is_finite() && m.im.is_finite()) {
                return Err(Error::NonFinite {
                    index: i,
                    value: m.norm().as_f64(),
                });
            }
        }
        check_realness(grid, &table)?;
        let bound = order_bound(grid, &table, order);
        if !bound.is_finite() {
            return Err(Error::UnboundedSymbol);
        }
        Ok(Self {
            n,
            table,
            order,
            bound,
        })
    }

    pub fn identity(grid: &TorusGrid<T>) -> Self {
        Self::from_real_fn(grid, T::zero(), false, |_| T::one()).expect("identity symbol")
    }

    /// `∂ₓ`, symbol `ik`.
    pub fn derivative(grid: &TorusGrid<T>) -> Self {
        Self::from_real_fn(grid, T::one(), true, |k| T::from_i64_lossy(k)).expect("derivative symbol")
    }

    /// `Λ^s = (-∂ₓ²)^{s/2}`, symbol `|k|^s` (zero at `k = 0` for `s > 0`).
    pub fn fractional_laplacian(grid: &TorusGrid<T>, s: T) -> Self {
        Self::from_real_fn(grid, s, false, |k| {
            if k == 0 {
                if s == T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            } else {
                T::from_i64_lossy(k.abs()).powf(s)
            }
        })
        .expect("fractional Laplacian symbol")
    }

    /// `𝒟^s = (I - ∂ₓ²)^{s/2}`, symbol `(1+k²)^{s/2}`.
    pub fn bessel(grid: &TorusGrid<T>, s: T) -> Self {
        Self::from_real_fn(grid, s, false, |k| {
            let kk = T::from_i64_lossy(k);
            (T::one() + kk * kk).powf(s * T::lit(0.5))
        })
        .expect("Bessel potential symbol")
    }

    /// `(I - ∂ₓ²)⁻¹`.
    pub fn helmholtz_inverse(grid: &TorusGrid<T>) -> Self {
        Self::bessel(grid, T::lit(-2.0))
    }

    /// The mollifier `Jₙ = OP(j(·/n))`.
    pub fn mollifier(grid: &TorusGrid<T>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "mollifier index must be at least 1"));
        }
        let scale = T::from_usize_lossy(n);
        Self::from_real_fn(grid, T::zero(), false, |k| cutoff_profile(T::from_i64_lossy(k) / scale))
    }

    /// Sharp projection onto `|k| <= kmax`.
    pub fn low_pass(grid: &TorusGrid<T>, kmax: i64) -> Self {
        Self::band(grid, -1, kmax)
    }

    /// Sharp projection onto `lo < |k| <= hi`.
    pub fn band(grid: &TorusGrid<T>, lo: i64, hi: i64) -> Self {
        Self::from_real_fn(grid, T::zero(), false, |k| {
            if k.abs() > lo && k.abs() <= hi {
                T::one()
            } else {
                T::zero()
            }
        })
        .expect("band projection")
    }

    /// Symbol of the composition `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "grid mismatch");
        let table: Vec<Complex<T>> = self.table.iter().zip(&other.table).map(|(a, b)| a * b).collect();
        let order = self.order + other.order;
        let bound = self.bound * other.bound;
        Self {
            n: self.n,
            table,
            order,
            bound,
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            n: self.n,
            table: self.table.iter().map(|m| m * c).collect(),
            order: self.order,
            bound: self.bound * c.abs(),
        }
    }

    #[inline]
    pub fn table(&self) -> &[Complex<T>] {
        &self.table
    }

    #[inline]
    pub fn order(&self) -> T {
        self.order
    }

    /// Stored constant `C` with `|m(k)| <= C (1+|k|)^order`.
    #[inline]
    pub fn bound_constant(&self) -> T {
        self.bound
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n
    }

    /// Applies the multiplier. Panics on a grid-size mismatch; see
    /// [`apply_multiplier`] for the checked form.
    pub fn apply(&self, u: &GridFunction<T>) -> GridFunction<T> {
        assert_eq!(self.n, u.len(), "multiplier grid mismatch");
        let spec: Vec<Complex<T>> = u.spectrum().iter().zip(&self.table).map(|(a, m)| a * m).collect();
        GridFunction::from_spectrum(u.grid(), spec)
    }

    /// Multiplies a raw spectrum in place.
    pub fn apply_spectrum(&self, spectrum: &mut [Complex<T>]) {
        for (a, m) in spectrum.iter_mut().zip(&self.table) {
            *a = *a * m;
        }
    }
}

/// Checked application of a multiplier.
pub fn apply_multiplier<T: Real>(m: &MultiplierSymbol<T>, u: &GridFunction<T>) -> Result<GridFunction<T>> {
    if m.n_points() != u.len() {
        return Err(Error::GridMismatch {
            left: u.len(),
            right: m.n_points(),
        });
    }
    Ok(m.apply(u))
}

/// Jₙ applied to `u`.
pub fn mollify<T: Real>(n: usize, u: &GridFunction<T>) -> Result<GridFunction<T>> {
    Ok(MultiplierSymbol::mollifier(u.grid(), n)?.apply(u))
}

/// Cutoff profile: 1 on `|y| <= 1`, 0 on `|y| >= 2`, smooth and monotone between.
pub fn cutoff_profile<T: Real>(y: T) -> T {
    let a = y.abs();
    if a <= T::one() {
        T::one()
    } else if a >= T::lit(2.0) {
        T::zero()
    } else {
        let t = a - T::one();
        (T::one() - T::one() / (T::one() - t * t)).exp()
    }
}

fn check_realness<T: Real>(grid: &TorusGrid<T>, table: &[Complex<T>]) -> Result<()> {
    let scale = table.iter().fold(T::one(), |m, z| m.max(z.norm()));
    let tol = T::lit(64.0) * T::epsilon() * scale;
    for i in 0..table.len() {
        let j = grid.mirror(i);
        if (table[j] - table[i].conj()).norm() > tol {
            return Err(Error::RealnessViolation {
                k: grid.wavenumber(i),
            });
        }
    }
    Ok(())
}

fn order_bound<T: Real>(grid: &TorusGrid<T>, table: &[Complex<T>], order: T) -> T {
    table
        .iter()
        .enumerate()
        .map(|(i, m)| m.norm() / (T::one() + T::from_i64_lossy(grid.wavenumber(i).abs())).powf(order))
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> TorusGrid<f64> {
        TorusGrid::new(n).unwrap()
    }

    fn max_err(a: &GridFunction<f64>, f: impl Fn(f64) -> f64) -> f64 {
        a.grid()
            .points()
            .iter()
            .zip(a.values())
            .map(|(&x, &v)| (v - f(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn laplacian_eigenfunction() {
        let g = grid(32);
        let u = GridFunction::from_fn(&g, |x| (3.0 * x).cos()).unwrap();
        let out = MultiplierSymbol::fractional_laplacian(&g, 2.0).apply(&u);
        assert!(max_err(&out, |x| 9.0 * (3.0 * x).cos()) < 1e-12);
    }

    #[test]
    fn helmholtz_inverse_of_cos2x() {
        let g = grid(32);
        let u = GridFunction::from_fn(&g, |x| (2.0 * x).cos()).unwrap();
        let out = MultiplierSymbol::helmholtz_inverse(&g).apply(&u);
        assert!(max_err(&out, |x| (2.0 * x).cos() / 5.0) < 1e-12);
    }

    #[test]
    fn fractional_power_at_k2() {
        let g = grid(32);
        let u = GridFunction::from_fn(&g, |x| (2.0 * x).cos()).unwrap();
        let out = MultiplierSymbol::fractional_laplacian(&g, 1.5).apply(&u);
        assert!(max_err(&out, |x| 2f64.powf(1.5) * (2.0 * x).cos()) < 1e-12);
    }

    #[test]
    fn derivative_nyquist_is_zeroed() {
        let g = grid(16);
        let d = MultiplierSymbol::derivative(&g);
        assert_eq!(d.table()[8], Complex::new(0.0, 0.0));
        assert_eq!(d.table()[3], Complex::new(0.0, 3.0));
        assert_eq!(d.table()[13], Complex::new(0.0, -3.0));
    }

    #[test]
    fn rejects_non_hermitian_table() {
        let g = grid(8);
        // real odd symbol k: m(-k) = -m(k) != conj(m(k))
        let table = (0..8).map(|i| Complex::new(g.wavenumber(i) as f64, 0.0)).collect();
        assert!(matches!(
            MultiplierSymbol::from_table(&g, 1.0, table),
            Err(Error::RealnessViolation { .. })
        ));
        let mut table: Vec<_> = (0..8).map(|_| Complex::new(1.0, 0.0)).collect();
        table[4] = Complex::new(1.0, 1.0);
        assert!(MultiplierSymbol::from_table(&g, 0.0, table).is_err());
    }

    #[test]
    fn mollifier_examples() {
        let g = grid(32);
        let c1 = GridFunction::from_fn(&g, |x| x.cos()).unwrap();
        let c3 = GridFunction::from_fn(&g, |x| (3.0 * x).cos()).unwrap();
        assert!(max_err(&mollify(1, &c1).unwrap(), |x| x.cos()) < 1e-14);
        assert!(mollify(1, &c3).unwrap().max_abs() < 1e-14);
        assert!(mollify(0, &c1).is_err());
    }

    #[test]
    fn cutoff_profile_shape() {
        assert_eq!(cutoff_profile(0.5), 1.0);
        assert_eq!(cutoff_profile(-1.0), 1.0);
        assert_eq!(cutoff_profile(2.0), 0.0);
        assert_eq!(cutoff_profile(3.0), 0.0);
        let mut prev = 1.0;
        for i in 1..100 {
            let v = cutoff_profile(1.0 + i as f64 / 100.0);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn order_bound_is_recorded() {
        let g = grid(64);
        let d = MultiplierSymbol::derivative(&g);
        assert!(d.bound_constant() <= 1.0 && d.bound_constant() > 0.9);
    }

    #[test]
    fn checked_apply_rejects_mismatch() {
        let m = MultiplierSymbol::identity(&grid(16));
        let u = GridFunction::zeros(&grid(32));
        assert!(apply_multiplier(&m, &u).is_err());
    }
}
