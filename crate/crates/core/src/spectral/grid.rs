use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform collocation grid on the torus `[0, 2π)`.
///
/// Holds the FFT plans for its size, so cloning is cheap and every field
/// built on the same grid shares them.
#[derive(Clone)]
pub struct TorusGrid<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> TorusGrid<T> {
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 8 || n_points % 2 != 0 {
            return Err(Error::InvalidGridSize(n_points));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n: n_points,
            forward: planner.plan_fft_forward(n_points),
            inverse: planner.plan_fft_inverse(n_points),
        })
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn spacing(&self) -> T {
        T::TAU() / T::from_usize_lossy(self.n)
    }

    #[inline]
    pub fn point(&self, j: usize) -> T {
        T::from_usize_lossy(j) * self.spacing()
    }

    pub fn points(&self) -> Vec<T> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Highest represented wavenumber `N/2`.
    #[inline]
    pub fn nyquist(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// Wavenumber stored at FFT index `i`; range `-N/2+1 ..= N/2`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// FFT index holding wavenumber `k`, if representable.
    #[inline]
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let half = self.nyquist();
        if k > half || k <= -half {
            return None;
        }
        Some(if k >= 0 { k as usize } else { (k + self.n as i64) as usize })
    }

    /// Index of the mirrored frequency `-k` (the Nyquist slot maps to itself).
    #[inline]
    pub fn mirror(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    /// Largest wavenumber kept by the 2/3 dealiasing rule.
    #[inline]
    pub fn dealias_cutoff(&self) -> i64 {
        ((self.n - 1) / 3) as i64
    }

    pub(crate) fn fft_forward(&self, buf: &mut [Complex<T>]) {
        self.forward.process(buf);
    }

    pub(crate) fn fft_inverse(&self, buf: &mut [Complex<T>]) {
        self.inverse.process(buf);
    }

    pub(crate) fn check_same(&self, other: &TorusGrid<T>) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                left: other.n,
                right: self.n,
            });
        }
        Ok(())
    }
}

impl<T: Real> fmt::Debug for TorusGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid").field("n", &self.n).finish()
    }
}

impl<T: Real> PartialEq for TorusGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

/// Forward transform under the integral convention
/// `û(k) = ∫ u(x) e^{-ikx} dx ≈ (2π/N) Σ_j u_j e^{-ikx_j}`.
pub fn forward_transform<T: Real>(grid: &TorusGrid<T>, values: &[T]) -> Result<Vec<Complex<T>>> {
    if values.len() != grid.n_points() {
        return Err(Error::LengthMismatch {
            expected: grid.n_points(),
            actual: values.len(),
        });
    }
    if let Some((index, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            index,
            value: v.as_f64(),
        });
    }
    Ok(forward_unchecked(grid, values))
}

fn forward_unchecked<T: Real>(grid: &TorusGrid<T>, values: &[T]) -> Vec<Complex<T>> {
    let scale = grid.spacing();
    let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
    grid.fft_forward(&mut buf);
    for c in &mut buf {
        *c = *c * scale;
    }
    buf
}

/// Inverse of [`forward_transform`]; returns the real part of the synthesis.
pub fn inverse_transform<T: Real>(grid: &TorusGrid<T>, spectrum: &[Complex<T>]) -> Vec<T> {
    assert_eq!(spectrum.len(), grid.n_points(), "spectrum length");
    let scale = T::one() / T::TAU();
    let mut buf = spectrum.to_vec();
    grid.fft_inverse(&mut buf);
    buf.iter().map(|c| c.re * scale).collect()
}

/// Projects a spectrum onto the Hermitian-symmetric subspace (real fields).
pub(crate) fn hermitianize<T: Real>(grid: &TorusGrid<T>, spectrum: &mut [Complex<T>]) {
    let n = grid.n_points();
    let half = T::lit(0.5);
    spectrum[0].im = T::zero();
    spectrum[n / 2].im = T::zero();
    for i in 1..n / 2 {
        let j = n - i;
        let avg = (spectrum[i] + spectrum[j].conj()) * half;
        spectrum[i] = avg;
        spectrum[j] = avg.conj();
    }
}

/// A real field sampled on a [`TorusGrid`], with its spectrum computed on demand.
pub struct GridFunction<T: Real> {
    grid: TorusGrid<T>,
    values: Vec<T>,
    spectrum: OnceLock<Vec<Complex<T>>>,
}

impl<T: Real> GridFunction<T> {
    /// Rejects non-finite samples with the offending index.
    pub fn new(grid: &TorusGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                actual: values.len(),
            });
        }
        if let Some((index, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                index,
                value: v.as_f64(),
            });
        }
        Ok(Self::from_values_unchecked(grid, values))
    }

    pub(crate) fn from_values_unchecked(grid: &TorusGrid<T>, values: Vec<T>) -> Self {
        Self {
            grid: grid.clone(),
            values,
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_fn(grid: &TorusGrid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(grid, grid.points().into_iter().map(f).collect())
    }

    pub fn zeros(grid: &TorusGrid<T>) -> Self {
        let n = grid.n_points();
        let out = Self::from_values_unchecked(grid, vec![T::zero(); n]);
        let _ = out.spectrum.set(vec![Complex::new(T::zero(), T::zero()); n]);
        out
    }

    pub fn constant(grid: &TorusGrid<T>, c: T) -> Self {
        Self::from_values_unchecked(grid, vec![c; grid.n_points()])
    }

    /// Builds a real field from Fourier coefficients (integral convention),
    /// symmetrizing them first so the synthesis is real.
    pub fn from_spectrum(grid: &TorusGrid<T>, mut spectrum: Vec<Complex<T>>) -> Self {
        assert_eq!(spectrum.len(), grid.n_points(), "spectrum length");
        hermitianize(grid, &mut spectrum);
        let values = inverse_transform(grid, &spectrum);
        let out = Self::from_values_unchecked(grid, values);
        let _ = out.spectrum.set(spectrum);
        out
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fourier coefficients in FFT order (see [`TorusGrid::wavenumber`]).
    pub fn spectrum(&self) -> &[Complex<T>] {
        self.spectrum
            .get_or_init(|| forward_unchecked(&self.grid, &self.values))
    }

    /// Coefficient at wavenumber `k`; zero when not representable.
    pub fn coefficient(&self, k: i64) -> Complex<T> {
        self.grid
            .index_of(k)
            .map(|i| self.spectrum()[i])
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    pub fn min(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn map_values(&self, f: impl Fn(T) -> T) -> Self {
        Self::from_values_unchecked(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: T) -> Self {
        let out = self.map_values(|v| v * c);
        if let Some(s) = self.spectrum.get() {
            let _ = out.spectrum.set(s.iter().map(|z| *z * c).collect());
        }
        out
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: T, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a + c * b)
            .collect();
        Self::from_values_unchecked(&self.grid, values)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpy(T::one(), other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-T::one(), other)
    }

    /// Pointwise product on the grid, without dealiasing.
    pub fn mul_pointwise(&self, other: &Self) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b)
            .collect();
        Self::from_values_unchecked(&self.grid, values)
    }

    /// Sum of fields sharing this grid.
    pub fn sum_of<'a>(grid: &TorusGrid<T>, parts: impl IntoIterator<Item = &'a Self>) -> Self
    where
        T: 'a,
    {
        let mut acc = vec![T::zero(); grid.n_points()];
        for p in parts {
            for (a, &v) in acc.iter_mut().zip(p.values()) {
                *a = *a + v;
            }
        }
        Self::from_values_unchecked(grid, acc)
    }
}

impl<T: Real> Clone for GridFunction<T> {
    fn clone(&self) -> Self {
        let out = Self::from_values_unchecked(&self.grid, self.values.clone());
        if let Some(s) = self.spectrum.get() {
            let _ = out.spectrum.set(s.clone());
        }
        out
    }
}

impl<T: Real> fmt::Debug for GridFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridFunction")
            .field("n", &self.grid.n_points())
            .field("values", &self.values)
            .finish()
    }
}
