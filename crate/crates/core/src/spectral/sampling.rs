use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use super::grid::{GridFunction, TorusGrid};
use crate::scalar::Real;

/// Random real field with independent standard normal Fourier coefficients
/// on `0 < |k| <= kmax` (plus the mean when `with_mean`), each scaled by
/// `(1+|k|)^{-decay}`.
pub fn random_band_limited<T: Real, R: Rng + ?Sized>(
    grid: &TorusGrid<T>,
    kmax: i64,
    decay: f64,
    with_mean: bool,
    rng: &mut R,
) -> GridFunction<T> {
    let n = grid.n_points();
    let kmax = kmax.min(grid.nyquist() - 1);
    let mut spec = vec![Complex::new(T::zero(), T::zero()); n];
    if with_mean {
        let z: f64 = rng.sample(StandardNormal);
        spec[0] = Complex::new(T::lit(z), T::zero());
    }
    for k in 1..=kmax {
        let w = (1.0 + k as f64).powf(-decay);
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let c = Complex::new(T::lit(re * w), T::lit(im * w));
        spec[k as usize] = c;
        spec[n - k as usize] = c.conj();
    }
    GridFunction::from_spectrum(grid, spec)
}
