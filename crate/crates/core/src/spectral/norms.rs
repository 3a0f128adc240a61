use num_complex::Complex;

use super::grid::GridFunction;
use super::multiplier::MultiplierSymbol;
use crate::scalar::Real;

#[inline]
fn sobolev_weight<T: Real>(s: T, k: i64) -> T {
    if s == T::zero() {
        return T::one();
    }
    let kk = T::from_i64_lossy(k);
    (T::one() + kk * kk).powf(s)
}

/// `⟨f, g⟩_{H^s} = (1/2π) Σ_k (1+k²)^s Re(f̂(k) conj(ĝ(k)))`.
pub fn sobolev_inner<T: Real>(s: T, f: &GridFunction<T>, g: &GridFunction<T>) -> T {
    let grid = f.grid();
    let sum: T = f
        .spectrum()
        .iter()
        .zip(g.spectrum())
        .enumerate()
        .map(|(i, (a, b))| sobolev_weight(s, grid.wavenumber(i)) * (a * b.conj()).re)
        .sum();
    sum / T::TAU()
}

/// `‖u‖²_{H^s}` by Parseval under the integral Fourier convention.
pub fn sobolev_norm_sq<T: Real>(s: T, u: &GridFunction<T>) -> T {
    let grid = u.grid();
    let sum: T = u
        .spectrum()
        .iter()
        .enumerate()
        .map(|(i, a)| sobolev_weight(s, grid.wavenumber(i)) * a.norm_sqr())
        .sum();
    sum / T::TAU()
}

/// Spectral derivative `∂ₓu` (Nyquist mode dropped).
pub fn derivative<T: Real>(u: &GridFunction<T>) -> GridFunction<T> {
    let grid = u.grid();
    let half = grid.nyquist();
    let spec: Vec<Complex<T>> = u
        .spectrum()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = grid.wavenumber(i);
            if k == half {
                Complex::new(T::zero(), T::zero())
            } else {
                a * Complex::new(T::zero(), T::from_i64_lossy(k))
            }
        })
        .collect();
    GridFunction::from_spectrum(grid, spec)
}

/// `‖u‖_{W^{1,∞}} = max|u| + max|∂ₓu|` on the grid.
pub fn lipschitz_norm<T: Real>(u: &GridFunction<T>) -> T {
    u.max_abs() + derivative(u).max_abs()
}

/// 2/3-rule projection onto `|k| <= (N-1)/3`.
pub fn dealias<T: Real>(u: &GridFunction<T>) -> GridFunction<T> {
    let grid = u.grid();
    let cut = grid.dealias_cutoff();
    let spec: Vec<Complex<T>> = u
        .spectrum()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if grid.wavenumber(i).abs() <= cut {
                *a
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
        .collect();
    GridFunction::from_spectrum(grid, spec)
}

/// Pointwise product, optionally with 2/3-rule truncation of inputs and output.
pub fn product<T: Real>(u: &GridFunction<T>, v: &GridFunction<T>, dealiased: bool) -> GridFunction<T> {
    if dealiased {
        dealias(&dealias(u).mul_pointwise(&dealias(v)))
    } else {
        u.mul_pointwise(v)
    }
}

/// `‖Λ^σ u‖_{H^1}`, the right-hand side of the slope bound for `1/2 < σ <= 1`.
pub fn fractional_h1_norm<T: Real>(sigma: T, u: &GridFunction<T>) -> T {
    let lam = MultiplierSymbol::fractional_laplacian(u.grid(), sigma).apply(u);
    sobolev_norm_sq(T::one(), &lam).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;
    use std::f64::consts::PI;

    #[test]
    fn cosine_norms() {
        let g = TorusGrid::<f64>::new(32).unwrap();
        let u = GridFunction::from_fn(&g, |x| x.cos()).unwrap();
        assert!((sobolev_norm_sq(1.0, &u) - 2.0 * PI).abs() < 1e-12);
        assert!((sobolev_norm_sq(0.0, &u) - PI).abs() < 1e-12);
    }

    #[test]
    fn two_mode_h2_norm_matches_direct_quadrature() {
        // oracle: ‖𝒟²u‖²_{L²} by trapezoid quadrature of (u - u'')²
        let g = TorusGrid::<f64>::new(64).unwrap();
        let u = GridFunction::from_fn(&g, |x| x.cos() + (2.0 * x).cos()).unwrap();
        let d2u = |x: f64| 2.0 * x.cos() + 5.0 * (2.0 * x).cos();
        let quad: f64 = g.points().iter().map(|&x| d2u(x).powi(2)).sum::<f64>() * g.spacing();
        assert!((quad - 29.0 * PI).abs() < 1e-10);
        assert!((sobolev_norm_sq(2.0, &u) - 29.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn lipschitz_examples() {
        let g = TorusGrid::<f64>::new(32).unwrap();
        let u = GridFunction::from_fn(&g, |x| x.cos()).unwrap();
        assert!((lipschitz_norm(&u) - 2.0).abs() < 1e-12);
        assert!((lipschitz_norm(&GridFunction::constant(&g, 5.0)) - 5.0).abs() < 1e-12);
        assert_eq!(lipschitz_norm(&GridFunction::zeros(&g)), 0.0);
    }

    #[test]
    fn lipschitz_grid_resolution_when_n_not_multiple_of_four() {
        let g = TorusGrid::<f64>::new(10).unwrap();
        let u = GridFunction::from_fn(&g, |x| x.cos()).unwrap();
        let n = g.n_points() as f64;
        assert!((lipschitz_norm(&u) - 2.0).abs() <= 2.0 * PI * PI / (n * n));
    }

    #[test]
    fn dealiased_product_is_exact_for_band_limited_inputs() {
        let g = TorusGrid::<f64>::new(48).unwrap();
        let u = GridFunction::from_fn(&g, |x| (7.0 * x).cos()).unwrap();
        let v = GridFunction::from_fn(&g, |x| (5.0 * x).sin()).unwrap();
        let w = product(&u, &v, true);
        // cos7x sin5x = (sin12x - sin2x)/2, both modes retained at cutoff 15
        for (&x, &val) in g.points().iter().zip(w.values()) {
            assert!((val - 0.5 * ((12.0 * x).sin() - (2.0 * x).sin())).abs() < 1e-12);
        }
    }
}
