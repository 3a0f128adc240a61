//! Numerical estimates of the cancellation constants and of the order of the
//! symmetrized part `Qₖ + Qₖ*`.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bank::{ChannelDescription, NoiseOperatorSpec};
use super::dense::{dense_matrix, low_pass_matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{random_band_limited, sobolev_inner, sobolev_norm_sq, GridFunction, MultiplierSymbol, TorusGrid};

/// Slopes below this mark an admissible (order-0) symmetrized part.
pub const ADMISSIBLE_SLOPE: f64 = 0.25;

/// Mollifier indices used for the sandwiched spot check.
pub const SANDWICH_INDICES: [usize; 2] = [4, 16];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizedOrder {
    pub slope: f64,
    /// `(N, ‖P(M+Mᵀ)P‖₂, ‖PMP‖₂)` per resolution.
    pub norms: Vec<(usize, f64, f64)>,
    /// Set when the symmetrized part vanishes to rounding at every resolution.
    pub zero_norm: bool,
}

impl SymmetrizedOrder {
    pub fn admissible(&self) -> bool {
        self.slope < ADMISSIBLE_SLOPE
    }
}

/// `(‖P(M+Mᵀ)P‖₂, ‖PMP‖₂)` with `P` the projection onto `|k| <= N/4`.
pub fn symmetrized_norms<T: Real>(spec: &NoiseOperatorSpec<T>) -> Result<(f64, f64)> {
    let grid = spec.symbol().grid();
    let m = dense_matrix(spec.symbol())?;
    let p = low_pass_matrix(grid, (grid.n_points() / 4) as i64)?;
    let sym = p.matmul(&m.symmetrized()).matmul(&p);
    let full = p.matmul(&m).matmul(&p);
    Ok((sym.spectral_norm(), full.spectral_norm()))
}

/// Least-squares slope of `log‖P(M_N+M_Nᵀ)P‖₂` against `log N`.
pub fn estimate_symmetrized_order(
    channel: &ChannelDescription,
    resolutions: &[usize],
    base_dir: Option<&Path>,
) -> Result<SymmetrizedOrder> {
    let mut distinct = resolutions.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 distinct resolutions, got {resolutions:?}"
        )));
    }
    let mut norms = Vec::with_capacity(distinct.len());
    for &n in &distinct {
        let grid = TorusGrid::<f64>::new(n)?;
        let spec = channel.build(&grid, base_dir)?;
        let (sym, full) = symmetrized_norms(&spec)?;
        norms.push((n, sym, full));
    }
    let zero_norm = norms.iter().all(|&(_, s, f)| s <= 1e-10 * f.max(1.0));
    let slope = if zero_norm {
        0.0
    } else {
        let pts: Vec<(f64, f64)> = norms
            .iter()
            .map(|&(n, s, _)| ((n as f64).ln(), s.max(f64::MIN_POSITIVE).ln()))
            .collect();
        least_squares_slope(&pts)
    };
    Ok(SymmetrizedOrder {
        slope,
        norms,
        zero_norm,
    })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    /// Working value: max of the sampled and eigen-candidate ratios.
    pub xi: f64,
    pub sampled: f64,
    pub eigen_candidates: f64,
    /// `Σₖ ρ(Sₖ)`, an upper bound for the restricted quadratic forms.
    pub eigen_upper: f64,
    /// `(n, ratio)` for the mollified forms, maximized over the candidates.
    pub sandwiched: Vec<(usize, f64)>,
    pub n_points: usize,
    pub basis_cutoff: i64,
    pub n_samples: usize,
}

/// H^η-orthonormal real trigonometric basis on `|k| <= kmax`.
fn sobolev_basis<T: Real>(grid: &TorusGrid<T>, eta: T, kmax: i64) -> Vec<GridFunction<T>> {
    let mut basis = Vec::with_capacity(2 * kmax as usize + 1);
    let one = GridFunction::constant(grid, T::one());
    basis.push(one.scale(T::one() / sobolev_norm_sq(eta, &one).sqrt()));
    for k in 1..=kmax {
        let kk = T::from_i64_lossy(k);
        for f in [
            GridFunction::from_values_unchecked(grid, grid.points().iter().map(|&x| (kk * x).cos()).collect()),
            GridFunction::from_values_unchecked(grid, grid.points().iter().map(|&x| (kk * x).sin()).collect()),
        ] {
            let nrm = sobolev_norm_sq(eta, &f).sqrt();
            basis.push(f.scale(T::one() / nrm));
        }
    }
    basis
}

/// Symmetric matrix of `f ↦ ⟨Q²f,f⟩_η + ‖Qf‖²_η` on the basis.
fn channel_form<T: Real>(q: &NoiseOperatorSpec<T>, eta: T, basis: &[GridFunction<T>]) -> DMatrix<f64> {
    let d = basis.len();
    let qb: Vec<GridFunction<T>> = basis.iter().map(|b| q.apply(b)).collect();
    let q2b: Vec<GridFunction<T>> = qb.iter().map(|b| q.apply(b)).collect();
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] = sobolev_inner(eta, &q2b[i], &basis[j]).as_f64();
        }
    }
    let mut s = (&a + a.transpose()) * 0.5;
    for i in 0..d {
        for j in i..d {
            let g = sobolev_inner(eta, &qb[i], &qb[j]).as_f64();
            s[(i, j)] += g;
            if i != j {
                s[(j, i)] += g;
            }
        }
    }
    s
}

fn form_ratio(forms: &[DMatrix<f64>], c: &DVector<f64>) -> f64 {
    let nrm = c.norm_squared();
    if nrm == 0.0 {
        return 0.0;
    }
    forms.iter().map(|s| c.dot(&(s * c)).abs()).sum::<f64>() / nrm
}

fn to_field<T: Real>(grid: &TorusGrid<T>, basis: &[GridFunction<T>], c: &DVector<f64>) -> GridFunction<T> {
    let mut values = vec![T::zero(); grid.n_points()];
    for (b, &ci) in basis.iter().zip(c.iter()) {
        let ci = T::lit(ci);
        for (v, &bv) in values.iter_mut().zip(b.values()) {
            *v = *v + ci * bv;
        }
    }
    GridFunction::from_values_unchecked(grid, values)
}

/// `Σₖ |⟨J³Qₖ²Jf,f⟩_η + ‖JQₖJf‖²_η|` and `Σₖ |⟨JQₖ²f,Jf⟩_η + ‖JQₖf‖²_η|`,
/// each divided by `‖f‖²_η`; returns the larger.
fn sandwiched_ratio<T: Real>(bank: &[NoiseOperatorSpec<T>], eta: T, j: &MultiplierSymbol<T>, f: &GridFunction<T>) -> f64 {
    let nrm = sobolev_norm_sq(eta, f).as_f64();
    if nrm == 0.0 {
        return 0.0;
    }
    let jf = j.apply(f);
    let mut inner = 0.0;
    let mut outer = 0.0;
    for q in bank {
        let qjf = q.apply(&jf);
        let jqjf = j.apply(&qjf);
        let j3q2jf = j.apply(&j.apply(&j.apply(&q.apply(&qjf))));
        inner += (sobolev_inner(eta, &j3q2jf, f) + sobolev_norm_sq(eta, &jqjf)).as_f64().abs();
        let qf = q.apply(f);
        let jq2f = j.apply(&q.apply(&qf));
        let jqf = j.apply(&qf);
        outer += (sobolev_inner(eta, &jq2f, &jf) + sobolev_norm_sq(eta, &jqf)).as_f64().abs();
    }
    inner.max(outer) / nrm
}

/// Working value of the cancellation constant `Ξ` for `bank` on its grid.
///
/// Uses the n-free form `Σₖ |⟨Qₖ²f,f⟩_η + ‖Qₖf‖²_η| / ‖f‖²_η`, maximized over
/// `n_samples` random fields on `|k| <= N/4` together with the extreme
/// eigenvectors of each channel's restricted quadratic form.
pub fn estimate_xi<T: Real>(bank: &[NoiseOperatorSpec<T>], eta: T, n_samples: usize, seed: u64) -> Result<XiEstimate> {
    if eta < T::one() {
        return Err(Error::param("eta", "cancellation estimates need eta >= 1"));
    }
    let active: Vec<NoiseOperatorSpec<T>> = bank.iter().filter(|q| q.is_active()).cloned().collect();
    let Some(first) = active.first() else {
        return Ok(XiEstimate {
            n_samples,
            ..XiEstimate::default()
        });
    };
    let grid = first.symbol().grid().clone();
    for q in &active[1..] {
        grid.check_same(q.symbol().grid())?;
    }
    let kmax = (grid.n_points() / 4) as i64;
    let basis = sobolev_basis(&grid, eta, kmax);
    let forms: Vec<DMatrix<f64>> = active.iter().map(|q| channel_form(q, eta, &basis)).collect();

    let mut candidates: Vec<DVector<f64>> = Vec::new();
    let mut eigen_upper = 0.0;
    let total = forms.iter().fold(DMatrix::zeros(basis.len(), basis.len()), |acc, s| acc + s);
    for (idx, s) in forms.iter().chain(std::iter::once(&total)).enumerate() {
        let eig = SymmetricEigen::new(s.clone());
        let (imin, imax) = extreme_indices(eig.eigenvalues.as_slice());
        if idx < forms.len() {
            eigen_upper += eig.eigenvalues[imin].abs().max(eig.eigenvalues[imax].abs());
        }
        candidates.push(eig.eigenvectors.column(imin).into_owned());
        candidates.push(eig.eigenvectors.column(imax).into_owned());
    }
    let eigen_candidates = candidates.iter().map(|c| form_ratio(&forms, c)).fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled = 0.0f64;
    let mut spot_fields = Vec::new();
    for i in 0..n_samples {
        let f = random_band_limited(&grid, kmax, 0.0, true, &mut rng);
        let c = DVector::from_iterator(basis.len(), basis.iter().map(|b| sobolev_inner(eta, &f, b).as_f64()));
        sampled = sampled.max(form_ratio(&forms, &c));
        if i < 16 {
            spot_fields.push(f);
        }
    }
    spot_fields.extend(candidates.iter().map(|c| to_field(&grid, &basis, c)));

    let mut sandwiched = Vec::with_capacity(SANDWICH_INDICES.len());
    for &n in &SANDWICH_INDICES {
        let j = MultiplierSymbol::mollifier(&grid, n)?;
        let worst = spot_fields
            .iter()
            .map(|f| sandwiched_ratio(&active, eta, &j, f))
            .fold(0.0, f64::max);
        sandwiched.push((n, worst));
    }

    Ok(XiEstimate {
        xi: sampled.max(eigen_candidates),
        sampled,
        eigen_candidates,
        eigen_upper,
        sandwiched,
        n_points: grid.n_points(),
        basis_cutoff: kmax,
        n_samples,
    })
}

fn extreme_indices(values: &[f64]) -> (usize, usize) {
    let mut imin = 0;
    let mut imax = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[imin] {
            imin = i;
        }
        if v > values[imax] {
            imax = i;
        }
    }
    (imin, imax)
}

/// `(Σₖ ⟨Qₖf,f⟩²_η, ‖f‖⁴_η)`.
pub fn cancellation_pair_check<T: Real>(bank: &[NoiseOperatorSpec<T>], eta: T, f: &GridFunction<T>) -> Result<(f64, f64)> {
    let mut first = 0.0;
    for q in bank {
        q.symbol().grid().check_same(f.grid())?;
        first += sobolev_inner(eta, &q.apply(f), f).as_f64().powi(2);
    }
    Ok((first, sobolev_norm_sq(eta, f).as_f64().powi(2)))
}

/// Largest ratio of [`cancellation_pair_check`] over random fields on `|k| <= N/4`.
pub fn estimate_pair_ratio<T: Real>(bank: &[NoiseOperatorSpec<T>], eta: T, n_samples: usize, seed: u64) -> Result<f64> {
    let Some(first) = bank.first() else {
        return Ok(0.0);
    };
    let grid = first.symbol().grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let f = random_band_limited(&grid, (grid.n_points() / 4) as i64, 0.0, true, &mut rng);
        let (a, b) = cancellation_pair_check(bank, eta, &f)?;
        if b > 0.0 {
            worst = worst.max(a / b);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psdo::bank::{BaseSymbolSpec, BuiltinSymbol, ChannelKind, CoefficientSpec};

    fn grid(n: usize) -> TorusGrid<f64> {
        TorusGrid::new(n).unwrap()
    }

    fn derivative_channel() -> ChannelDescription {
        ChannelDescription {
            kind: ChannelKind::A,
            order: 1.0,
            coefficient: CoefficientSpec::Scalar(1.0),
            base: BaseSymbolSpec::Builtin(BuiltinSymbol::Derivative),
        }
    }

    #[test]
    fn derivative_has_zero_symmetrized_part() {
        let r = estimate_symmetrized_order(&derivative_channel(), &[16, 32], None).unwrap();
        assert!(r.zero_norm);
        assert_eq!(r.slope, 0.0);
        assert!(r.admissible());
    }

    #[test]
    fn abs_k_has_order_one() {
        let c = ChannelDescription {
            kind: ChannelKind::B,
            order: 1.0,
            coefficient: CoefficientSpec::Scalar(1.0),
            base: BaseSymbolSpec::Builtin(BuiltinSymbol::AbsK),
        };
        let r = estimate_symmetrized_order(&c, &[16, 32, 64], None).unwrap();
        assert!((r.slope - 1.0).abs() < 0.05, "slope {}", r.slope);
        assert!(!r.admissible());
    }

    #[test]
    fn single_resolution_is_degenerate() {
        let res = estimate_symmetrized_order(&derivative_channel(), &[32, 32], None);
        assert!(matches!(res, Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn xi_vanishes_for_derivative_and_empty_bank() {
        let g = grid(32);
        let q = derivative_channel().build(&g, None).unwrap();
        let est = estimate_xi(&[q], 1.0, 50, 1).unwrap();
        assert!(est.xi <= 1e-8, "{est:?}");
        let empty: Vec<NoiseOperatorSpec<f64>> = Vec::new();
        assert_eq!(estimate_xi(&empty, 1.0, 10, 1).unwrap().xi, 0.0);
    }

    #[test]
    fn pair_check_examples() {
        let g = grid(16);
        let f = GridFunction::from_fn(&g, |x| x.cos()).unwrap();
        let d = derivative_channel().build(&g, None).unwrap();
        let (a, b) = cancellation_pair_check(&[d], 0.0, &f).unwrap();
        assert!(a < 1e-20);
        assert!((b - std::f64::consts::PI.powi(2)).abs() < 1e-10);
        let id = NoiseOperatorSpec::scaled_multiplier(1.0, &MultiplierSymbol::identity(&g), &g).unwrap();
        let (a, b) = cancellation_pair_check(&[id], 0.0, &f).unwrap();
        assert!((a / b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_is_exact_on_power_law() {
        let pts: Vec<(f64, f64)> = [8.0f64, 16.0, 32.0].iter().map(|&n| (n.ln(), 1.5 * n.ln() + 0.3)).collect();
        assert!((least_squares_slope(&pts) - 1.5).abs() < 1e-12);
    }
}
