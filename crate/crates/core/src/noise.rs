//! Brownian drivers, the Stratonovich channel bank and the nonlinear Itô channels.

use std::str::FromStr;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::TimeProfile;
use crate::error::{Error, Result};
use crate::psdo::NoiseOperatorSpec;
use crate::rng::counter_rng;
use crate::scalar::Real;
use crate::spectral::{
    derivative, lipschitz_norm, product, random_band_limited, sobolev_inner, sobolev_norm_sq, GridFunction,
    MultiplierSymbol, TorusGrid,
};

const Q_STREAM: u64 = 0;
const H_STREAM: u64 = 1;

/// Brownian increments for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct Increments {
    pub q: Vec<f64>,
    pub h: Vec<f64>,
}

impl Increments {
    pub fn zeros(q: usize, h: usize) -> Self {
        Self {
            q: vec![0.0; q],
            h: vec![0.0; h],
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            q: self.q.iter().map(|x| x * c).collect(),
            h: self.h.iter().map(|x| x * c).collect(),
        }
    }
}

/// Counter-based driver: the increment of channel `k` over step `i` is a pure
/// function of `(seed, k, i)`.
///
/// A driver with `substeps = m` sums `m` consecutive increments of the finer
/// driver with step `dt/m`, which couples paths across time-step levels.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianDriver {
    seed: u64,
    q_channels: usize,
    h_channels: usize,
    dt: f64,
    substeps: u32,
}

impl BrownianDriver {
    pub fn new(seed: u64, q_channels: usize, h_channels: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        Ok(Self {
            seed,
            q_channels,
            h_channels,
            dt,
            substeps: 1,
        })
    }

    /// Same Brownian path seen with steps `factor` times longer.
    pub fn coarsened(&self, factor: u32) -> Self {
        assert!(factor >= 1);
        Self {
            dt: self.dt * factor as f64,
            substeps: self.substeps * factor,
            ..self.clone()
        }
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn channel_count(&self) -> usize {
        self.q_channels + self.h_channels
    }

    fn fine(&self, stream: u64, count: usize, step: i64, out: &mut [f64]) {
        if count == 0 {
            return;
        }
        let sd = (self.dt / self.substeps as f64).sqrt();
        let mut rng = counter_rng(self.seed, stream, step);
        for slot in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *slot += sd * z;
        }
    }

    pub fn increments(&self, step: i64) -> Increments {
        let mut inc = Increments::zeros(self.q_channels, self.h_channels);
        let m = self.substeps as i64;
        for j in 0..m {
            self.fine(Q_STREAM, self.q_channels, step * m + j, &mut inc.q);
            self.fine(H_STREAM, self.h_channels, step * m + j, &mut inc.h);
        }
        inc
    }

    /// All `K_max` increments of step `step`, Q-channels first.
    pub fn sample_increments(&self, step: i64) -> Vec<f64> {
        let inc = self.increments(step);
        inc.q.into_iter().chain(inc.h).collect()
    }
}

/// `½ Σₖ Qₖ(Qₖu)`.
pub fn stratonovich_correction<T: Real>(bank: &[NoiseOperatorSpec<T>], u: &GridFunction<T>) -> GridFunction<T> {
    let mut out = GridFunction::zeros(u.grid());
    for q in bank.iter().filter(|q| q.is_active()) {
        out = out.add(&q.apply(&q.apply(u)));
    }
    out.scale(T::lit(0.5))
}

/// `Σₖ Qₖu ΔWₖ`.
pub fn transport_noise<T: Real>(bank: &[NoiseOperatorSpec<T>], u: &GridFunction<T>, dw: &[f64]) -> GridFunction<T> {
    assert_eq!(bank.len(), dw.len(), "increment count");
    let mut out = GridFunction::zeros(u.grid());
    for (q, &w) in bank.iter().zip(dw) {
        if w != 0.0 && q.is_active() {
            out = out.axpy(T::lit(w), &q.apply(u));
        }
    }
    out
}

/// Nonlinear Itô channel families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ItoNoiseSpec {
    Zero,
    /// `hₖ = 2^{-k} q(t) R[u² + (∂ₓu)²]`, `R = (1+k²)^{-1/2}`.
    SmoothingQuadratic { q: TimeProfile, channels: usize },
    /// `hₖ = Ψ(‖u‖_{W^{1,∞}}) P_{k-1<|ξ|<=k} u` with `Ψ(x) = sqrt(c_psi + 4·theta·x)`.
    BandProjection { c_psi: f64, theta: f64, channels: usize },
    /// `hₖ = sqrt(c_psi) P_{k-1<|ξ|<=k} φ` for a fixed field `φ = Σ c_k e^{ikx}`.
    BandAdditive {
        c_psi: f64,
        channels: usize,
        field: Vec<(i64, f64, f64)>,
    },
}

impl ItoNoiseSpec {
    pub fn channels(&self) -> usize {
        match self {
            ItoNoiseSpec::Zero => 0,
            ItoNoiseSpec::SmoothingQuadratic { channels, .. }
            | ItoNoiseSpec::BandProjection { channels, .. }
            | ItoNoiseSpec::BandAdditive { channels, .. } => *channels,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        match self {
            ItoNoiseSpec::Zero => {}
            ItoNoiseSpec::SmoothingQuadratic { q, .. } => errs.extend(q.validate("noise.ito.q")),
            ItoNoiseSpec::BandProjection { c_psi, theta, .. } => {
                if !(*c_psi > 0.0) {
                    errs.push(format!("noise.ito.c_psi = {c_psi} must be > 0 (Ψ never vanishes)"));
                }
                if !(*theta >= 0.0) {
                    errs.push(format!("noise.ito.theta = {theta} must be >= 0"));
                }
            }
            ItoNoiseSpec::BandAdditive { c_psi, field, .. } => {
                if !(*c_psi >= 0.0) {
                    errs.push(format!("noise.ito.c_psi = {c_psi} must be >= 0"));
                }
                if field.iter().any(|&(k, _, _)| k <= 0) {
                    errs.push("noise.ito.field lists modes k >= 1 only".to_string());
                }
            }
        }
        errs
    }
}

/// Resolved Itô channels on a grid.
#[derive(Clone, Debug)]
pub struct ItoNoise<T: Real> {
    spec: ItoNoiseSpec,
    smoothing: MultiplierSymbol<T>,
    dealias: bool,
    phi: Option<GridFunction<T>>,
}

impl<T: Real> ItoNoise<T> {
    pub fn new(grid: &TorusGrid<T>, spec: &ItoNoiseSpec, dealias: bool) -> Result<Self> {
        let errs = spec.validate();
        if !errs.is_empty() {
            return Err(Error::InvalidConfig(errs));
        }
        let phi = match spec {
            ItoNoiseSpec::BandAdditive { field, .. } => {
                let n = grid.n_points();
                let mut s = vec![Complex::new(T::zero(), T::zero()); n];
                for &(k, re, im) in field {
                    let i = grid
                        .index_of(k)
                        .filter(|_| k < grid.nyquist())
                        .ok_or_else(|| Error::param("noise.ito.field", format!("mode {k} not representable")))?;
                    let c = Complex::new(T::lit(re), T::lit(im)) * T::TAU();
                    s[i] = s[i] + c;
                    s[n - i] = s[n - i] + c.conj();
                }
                Some(GridFunction::from_spectrum(grid, s))
            }
            _ => None,
        };
        Ok(Self {
            spec: spec.clone(),
            smoothing: MultiplierSymbol::bessel(grid, -T::one()),
            dealias,
            phi,
        })
    }

    pub fn spec(&self) -> &ItoNoiseSpec {
        &self.spec
    }

    pub fn channels(&self) -> usize {
        self.spec.channels()
    }

    /// `Ψ(t, x)` of the band families (zero for the others).
    pub fn psi(&self, x: f64) -> f64 {
        match &self.spec {
            ItoNoiseSpec::BandProjection { c_psi, theta, .. } => (c_psi + 4.0 * theta * x).sqrt(),
            ItoNoiseSpec::BandAdditive { c_psi, .. } => c_psi.sqrt(),
            _ => 0.0,
        }
    }

    fn quadratic_source(&self, t: f64, u: &GridFunction<T>) -> Option<(T, GridFunction<T>)> {
        match &self.spec {
            ItoNoiseSpec::SmoothingQuadratic { q, .. } => {
                let ux = derivative(u);
                let src = product(u, u, self.dealias).add(&product(&ux, &ux, self.dealias));
                Some((T::lit(q.value(t)), self.smoothing.apply(&src)))
            }
            _ => None,
        }
    }

    /// Band-family spectrum of `Σₖ cₖ P_k v`, weights indexed from `k = 1`.
    fn banded(&self, v: &GridFunction<T>, weights: &[f64]) -> GridFunction<T> {
        let grid = v.grid();
        let spec: Vec<Complex<T>> = v
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let k = grid.wavenumber(i).unsigned_abs() as usize;
                match weights.get(k.wrapping_sub(1)) {
                    Some(&w) if k >= 1 => a * T::lit(w),
                    _ => Complex::new(T::zero(), T::zero()),
                }
            })
            .collect();
        GridFunction::from_spectrum(grid, spec)
    }

    /// `hₖ(t, u)` for `k >= 1`.
    pub fn channel(&self, k: usize, t: f64, u: &GridFunction<T>) -> GridFunction<T> {
        assert!(k >= 1);
        let grid = u.grid();
        if k > self.channels() {
            return GridFunction::zeros(grid);
        }
        let mut weights = vec![0.0; k];
        match &self.spec {
            ItoNoiseSpec::Zero => GridFunction::zeros(grid),
            ItoNoiseSpec::SmoothingQuadratic { .. } => {
                let (q, r) = self.quadratic_source(t, u).expect("quadratic family");
                r.scale(q * T::lit(0.5f64.powi(k as i32)))
            }
            ItoNoiseSpec::BandProjection { .. } => {
                weights[k - 1] = self.psi(lipschitz_norm(u).as_f64());
                self.banded(u, &weights)
            }
            ItoNoiseSpec::BandAdditive { .. } => {
                weights[k - 1] = self.psi(0.0);
                self.banded(self.phi.as_ref().expect("band field"), &weights)
            }
        }
    }

    /// `Σₖ hₖ(t,u) ΔW̃ₖ`.
    pub fn apply(&self, t: f64, u: &GridFunction<T>, dw: &[f64]) -> GridFunction<T> {
        assert_eq!(dw.len(), self.channels(), "increment count");
        let grid = u.grid();
        match &self.spec {
            ItoNoiseSpec::Zero => GridFunction::zeros(grid),
            ItoNoiseSpec::SmoothingQuadratic { .. } => {
                let (q, r) = self.quadratic_source(t, u).expect("quadratic family");
                let mut c = 0.0;
                let mut w = 1.0;
                for &d in dw {
                    w *= 0.5;
                    c += w * d;
                }
                r.scale(q * T::lit(c))
            }
            ItoNoiseSpec::BandProjection { .. } => {
                let psi = self.psi(lipschitz_norm(u).as_f64());
                let weights: Vec<f64> = dw.iter().map(|d| psi * d).collect();
                self.banded(u, &weights)
            }
            ItoNoiseSpec::BandAdditive { .. } => {
                let psi = self.psi(0.0);
                let weights: Vec<f64> = dw.iter().map(|d| psi * d).collect();
                self.banded(self.phi.as_ref().expect("band field"), &weights)
            }
        }
    }

    /// `(Σₖ ‖hₖ‖²_{H^s}, Σₖ ⟨hₖ,u⟩²_{H^s})`.
    pub fn quadratic_sums(&self, s: T, t: f64, u: &GridFunction<T>) -> (f64, f64) {
        let mut norms = 0.0;
        let mut pairs = 0.0;
        for k in 1..=self.channels() {
            let h = self.channel(k, t, u);
            norms += sobolev_norm_sq(s, &h).as_f64();
            pairs += sobolev_inner(s, &h, u).as_f64().powi(2);
        }
        (norms, pairs)
    }
}

/// `Σₖ hₖ(t,u)ΔW̃ₖ` for a resolved family.
pub fn ito_noise_apply<T: Real>(noise: &ItoNoise<T>, t: f64, u: &GridFunction<T>, dw: &[f64]) -> GridFunction<T> {
    noise.apply(t, u, dw)
}

/// Lyapunov functions with a closed-form derivative pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovFunction {
    /// `V(x) = log(e + x)`.
    LogEPlusX,
}

impl FromStr for LyapunovFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace(' ', "").as_str() {
            "log(e+x)" | "log_e_plus_x" => Ok(LyapunovFunction::LogEPlusX),
            _ => Err(Error::UnsupportedLyapunov(s.to_string())),
        }
    }
}

impl LyapunovFunction {
    pub fn value(self, x: f64) -> f64 {
        match self {
            LyapunovFunction::LogEPlusX => (std::f64::consts::E + x).ln(),
        }
    }

    pub fn d1(self, x: f64) -> f64 {
        match self {
            LyapunovFunction::LogEPlusX => 1.0 / (std::f64::consts::E + x),
        }
    }

    pub fn d2(self, x: f64) -> f64 {
        match self {
            LyapunovFunction::LogEPlusX => -1.0 / (std::f64::consts::E + x).powi(2),
        }
    }
}

/// Working constants entering the Lyapunov condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovConstants {
    pub xi: f64,
    pub theta: f64,
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSample {
    pub t: f64,
    pub hs_sq: f64,
    pub w1inf: f64,
    pub lhs: f64,
    pub g_v: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub lyapunov: LyapunovFunction,
    pub constants: LyapunovConstants,
    pub n_samples: usize,
    /// `max(LHS − g(t)V)` over the samples.
    pub max_margin: f64,
    pub holds: bool,
    pub worst: Option<LyapunovSample>,
    /// Smallest constant `g >= 0` for which the condition holds on the samples.
    pub required_constant_g: f64,
}

/// LHS of the Lyapunov condition at `(t, u)`.
pub fn lyapunov_lhs<T: Real>(
    noise: &ItoNoise<T>,
    damping: &TimeProfile,
    v: LyapunovFunction,
    c: &LyapunovConstants,
    t: f64,
    u: &GridFunction<T>,
) -> LyapunovSample {
    let s = T::lit(c.s);
    let x = sobolev_norm_sq(s, u).as_f64();
    let w = lipschitz_norm(u).as_f64();
    let (norms, pairs) = noise.quadratic_sums(s, t, u);
    let bracket = (c.xi + 2.0 * c.theta * w) * x - 2.0 * damping.value(t) * x + norms;
    LyapunovSample {
        t,
        hs_sq: x,
        w1inf: w,
        lhs: v.d1(x) * bracket + 2.0 * v.d2(x) * pairs,
        g_v: 0.0,
    }
}

/// Evaluates the Lyapunov condition `LHS <= g(t)V(‖u‖²_{H^s})` on `samples`.
pub fn check_lyapunov_condition<T: Real>(
    noise: &ItoNoise<T>,
    damping: &TimeProfile,
    v: LyapunovFunction,
    g: &TimeProfile,
    constants: LyapunovConstants,
    samples: &[(f64, GridFunction<T>)],
) -> LyapunovReport {
    let mut max_margin = f64::NEG_INFINITY;
    let mut worst = None;
    let mut required = 0.0f64;
    for (t, u) in samples {
        let mut smp = lyapunov_lhs(noise, damping, v, &constants, *t, u);
        let vx = v.value(smp.hs_sq);
        smp.g_v = g.value(*t) * vx;
        required = required.max(smp.lhs / vx);
        let margin = smp.lhs - smp.g_v;
        if margin > max_margin {
            max_margin = margin;
            worst = Some(smp);
        }
    }
    LyapunovReport {
        lyapunov: v,
        constants,
        n_samples: samples.len(),
        max_margin,
        holds: samples.is_empty() || max_margin <= 0.0,
        worst,
        required_constant_g: required,
    }
}

/// Random sample set for the Lyapunov check: fields with spectra decaying like
/// `(1+|k|)^{-(s+1)}` on `|k| <= N/4`, rescaled to a log-uniform `W^{1,∞}` norm in
/// `w_range`, at uniform times in `t_range`.
pub fn lyapunov_samples<T: Real>(
    grid: &TorusGrid<T>,
    s: f64,
    n: usize,
    w_range: (f64, f64),
    t_range: (f64, f64),
    seed: u64,
) -> Vec<(f64, GridFunction<T>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lw0, lw1) = (w_range.0.ln(), w_range.1.ln());
    (0..n)
        .map(|_| {
            let u = random_band_limited(grid, (grid.n_points() / 4) as i64, s + 1.0, false, &mut rng);
            let target = (lw0 + (lw1 - lw0) * rng.gen::<f64>()).exp();
            let w = lipschitz_norm(&u).as_f64();
            let t = t_range.0 + (t_range.1 - t_range.0) * rng.gen::<f64>();
            (t, u.scale(T::lit(target / w)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> TorusGrid<f64> {
        TorusGrid::new(n).unwrap()
    }

    #[test]
    fn increments_are_reproducible_and_coarsen_by_summation() {
        let d = BrownianDriver::new(9, 3, 2, 0.01).unwrap();
        assert_eq!(d.sample_increments(5), d.sample_increments(5));
        assert_ne!(d.sample_increments(5), d.sample_increments(6));
        let c = d.coarsened(4);
        let coarse = c.increments(2);
        let mut sum = Increments::zeros(3, 2);
        for i in 8..12 {
            let f = d.increments(i);
            for (a, b) in sum.q.iter_mut().zip(f.q) {
                *a += b;
            }
            for (a, b) in sum.h.iter_mut().zip(f.h) {
                *a += b;
            }
        }
        for (a, b) in coarse.q.iter().zip(&sum.q).chain(coarse.h.iter().zip(&sum.h)) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((c.dt() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn correction_of_derivative_bank() {
        let g = grid(32);
        let q = NoiseOperatorSpec::scaled_multiplier(1.0, &MultiplierSymbol::derivative(&g), &g).unwrap();
        let u = GridFunction::from_fn(&g, f64::cos).unwrap();
        let c = stratonovich_correction(&[q], &u);
        for (&x, &v) in g.points().iter().zip(c.values()) {
            assert!((v + 0.5 * x.cos()).abs() < 1e-12);
        }
        let empty: Vec<NoiseOperatorSpec<f64>> = Vec::new();
        assert_eq!(stratonovich_correction(&empty, &u).max_abs(), 0.0);
    }

    #[test]
    fn ito_family_examples() {
        let g = grid(64);
        let u = GridFunction::from_fn(&g, |x| (5.0 * x).cos()).unwrap();
        let zero = ItoNoise::new(&g, &ItoNoiseSpec::Zero, true).unwrap();
        assert_eq!(zero.apply(0.0, &u, &[]).max_abs(), 0.0);

        let sq = ItoNoise::new(
            &g,
            &ItoNoiseSpec::SmoothingQuadratic {
                q: TimeProfile::constant(1.0),
                channels: 4,
            },
            true,
        )
        .unwrap();
        assert_eq!(sq.apply(0.3, &GridFunction::zeros(&g), &[0.1, 0.2, 0.3, 0.4]).max_abs(), 0.0);

        let spec = ItoNoiseSpec::BandProjection {
            c_psi: 1.0,
            theta: 0.5,
            channels: 8,
        };
        let bp = ItoNoise::new(&g, &spec, true).unwrap();
        let dw: Vec<f64> = (1..=8).map(|k| 0.01 * k as f64).collect();
        let out = bp.apply(0.0, &u, &dw);
        let psi = (1.0 + 2.0 * lipschitz_norm(&u)).sqrt();
        for (&x, &v) in g.points().iter().zip(out.values()) {
            assert!((v - psi * (5.0 * x).cos() * dw[4]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_margin_is_minus_g_v0() {
        let g = grid(32);
        let spec = ItoNoiseSpec::BandProjection {
            c_psi: 1.0,
            theta: 0.5,
            channels: 16,
        };
        let noise = ItoNoise::new(&g, &spec, true).unwrap();
        let c = LyapunovConstants {
            xi: 0.3,
            theta: 0.5,
            s: 2.0,
        };
        let r = check_lyapunov_condition(
            &noise,
            &TimeProfile::constant(0.0),
            LyapunovFunction::LogEPlusX,
            &TimeProfile::constant(2.0),
            c,
            &[(0.0, GridFunction::zeros(&g))],
        );
        assert!((r.max_margin + 2.0).abs() < 1e-12);
        assert!(r.holds);
    }

    #[test]
    fn unsupported_lyapunov_rejected() {
        assert!(matches!(
            "x^2".parse::<LyapunovFunction>(),
            Err(Error::UnsupportedLyapunov(_))
        ));
        assert_eq!("log(e+x)".parse::<LyapunovFunction>().unwrap(), LyapunovFunction::LogEPlusX);
    }
}
