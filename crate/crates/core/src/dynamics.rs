//! The deterministic Camassa–Holm vector field and its structural identities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{
    derivative, lipschitz_norm, product, random_band_limited, sobolev_inner, GridFunction, MultiplierSymbol, TorusGrid,
};

/// Named scalar time profiles; used for the damping `λ(t)`, the noise
/// amplitude `q(t)` and the Lyapunov growth rate `g(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeProfile {
    Constant {
        value: f64,
    },
    /// `values[i]` on `[breakpoints[i-1], breakpoints[i])`, with open ends.
    Schedule {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// `value·(1 + amplitude·sin(omega·t))`, `amplitude ∈ [0,1]`.
    Sinusoid {
        value: f64,
        amplitude: f64,
        omega: f64,
    },
    /// `value/(1+|t|)^power`, `power > 1`.
    IntegrableTail {
        value: f64,
        power: f64,
    },
}

impl TimeProfile {
    pub fn constant(value: f64) -> Self {
        TimeProfile::Constant { value }
    }

    pub fn validate(&self, field: &str) -> Vec<String> {
        let mut errs = Vec::new();
        let mut nonneg = |name: &str, v: f64| {
            if !(v >= 0.0 && v.is_finite()) {
                errs.push(format!("{field}.{name} = {v} must be finite and >= 0"));
            }
        };
        match self {
            TimeProfile::Constant { value } => nonneg("value", *value),
            TimeProfile::Schedule { breakpoints, values } => {
                for v in values {
                    nonneg("values", *v);
                }
                if values.len() != breakpoints.len() + 1 {
                    errs.push(format!(
                        "{field}: schedule needs one more value than breakpoints ({} vs {})",
                        values.len(),
                        breakpoints.len()
                    ));
                }
                if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
                    errs.push(format!("{field}: schedule breakpoints must be strictly increasing"));
                }
            }
            TimeProfile::Sinusoid { value, amplitude, omega } => {
                nonneg("value", *value);
                if !(0.0..=1.0).contains(amplitude) {
                    errs.push(format!("{field}.amplitude = {amplitude} must lie in [0,1]"));
                }
                if !omega.is_finite() {
                    errs.push(format!("{field}.omega must be finite"));
                }
            }
            TimeProfile::IntegrableTail { value, power } => {
                nonneg("value", *value);
                if !(*power > 1.0) {
                    errs.push(format!("{field}.power = {power} must exceed 1"));
                }
            }
        }
        errs
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant { value } => *value,
            TimeProfile::Schedule { breakpoints, values } => {
                let idx = breakpoints.partition_point(|&b| b <= t);
                values[idx]
            }
            TimeProfile::Sinusoid { value, amplitude, omega } => value * (1.0 + amplitude * (omega * t).sin()),
            TimeProfile::IntegrableTail { value, power } => value * (1.0 + t.abs()).powf(-power),
        }
    }

    /// Exact `∫_a^b` of the profile.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if a > b {
            return -self.integral(b, a);
        }
        match self {
            TimeProfile::Constant { value } => value * (b - a),
            TimeProfile::Schedule { breakpoints, values } => {
                let mut total = 0.0;
                let mut lo = a;
                let mut idx = breakpoints.partition_point(|&x| x <= a);
                while lo < b {
                    let hi = breakpoints.get(idx).map_or(b, |&x| x.min(b));
                    total += values[idx] * (hi - lo);
                    lo = hi;
                    idx += 1;
                }
                total
            }
            TimeProfile::Sinusoid { value, amplitude, omega } => {
                if *omega == 0.0 {
                    return value * (b - a);
                }
                value * ((b - a) - amplitude * ((omega * b).cos() - (omega * a).cos()) / omega)
            }
            TimeProfile::IntegrableTail { value, power } => {
                let anti = |t: f64| t.signum() * (1.0 - (1.0 + t.abs()).powf(1.0 - power)) / (power - 1.0);
                value * (anti(b) - anti(a))
            }
        }
    }

    /// Whether `∫_ℝ` of the profile is finite.
    pub fn is_integrable(&self) -> bool {
        match self {
            TimeProfile::Constant { value } => *value == 0.0,
            TimeProfile::Schedule { values, .. } => values[0] == 0.0 && values[values.len() - 1] == 0.0,
            TimeProfile::Sinusoid { value, .. } => *value == 0.0,
            TimeProfile::IntegrableTail { .. } => true,
        }
    }

    /// Time-independent profiles make the dynamics invariant under time shifts.
    pub fn is_autonomous(&self) -> bool {
        matches!(self, TimeProfile::Constant { .. })
    }
}

fn default_true() -> bool {
    true
}

/// Diffusion, damping and product treatment of the deterministic drift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    pub epsilon: f64,
    pub theta: f64,
    pub damping: TimeProfile,
    pub dealias: bool,
    /// Keep `u∂ₓu + F(u)`; off turns the drift into the linear test problem.
    #[serde(default = "default_true")]
    pub nonlinear: bool,
    /// Apply `Jₙ` to the convection term.
    #[serde(default)]
    pub mollify_convection: Option<usize>,
}

impl DriftConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            errs.push(format!("drift.epsilon = {} must be finite and >= 0", self.epsilon));
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            errs.push(format!("drift.theta = {} must lie in (0,1]", self.theta));
        }
        errs.extend(self.damping.validate("drift.damping"));
        if self.mollify_convection == Some(0) {
            errs.push("drift.mollify_convection must be >= 1".to_string());
        }
        errs
    }
}

/// `F(u) = ∂ₓ(I-∂ₓ²)⁻¹(u² + ½(∂ₓu)²)`.
pub fn nonlocal_f<T: Real>(u: &GridFunction<T>, dealias: bool) -> GridFunction<T> {
    let ux = derivative(u);
    nonlocal_f_with(u, &ux, dealias)
}

fn nonlocal_f_with<T: Real>(u: &GridFunction<T>, ux: &GridFunction<T>, dealias: bool) -> GridFunction<T> {
    let grid = u.grid();
    let source = product(u, u, dealias).axpy(T::lit(0.5), &product(ux, ux, dealias));
    let n = grid.n_points();
    let half = grid.nyquist();
    let spec = source
        .spectrum()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = grid.wavenumber(i);
            if k == half {
                return num_complex::Complex::new(T::zero(), T::zero());
            }
            let kk = T::from_i64_lossy(k);
            a * num_complex::Complex::new(T::zero(), kk / (T::one() + kk * kk))
        })
        .collect::<Vec<_>>();
    debug_assert_eq!(spec.len(), n);
    GridFunction::from_spectrum(grid, spec)
}

/// `u ∂ₓu` with spectral derivative.
pub fn convection<T: Real>(u: &GridFunction<T>, dealias: bool) -> GridFunction<T> {
    product(u, &derivative(u), dealias)
}

/// `⟨u∂ₓu + F(u), u⟩_{H¹}`, zero in exact arithmetic.
pub fn h1_pairing_residual<T: Real>(u: &GridFunction<T>, dealias: bool) -> T {
    let ux = derivative(u);
    let n = product(u, &ux, dealias).add(&nonlocal_f_with(u, &ux, dealias));
    sobolev_inner(T::one(), &n, u)
}

/// Resolved drift `-[εΛ^{2θ}u + λ(t)u + u∂ₓu + F(u)]` on a grid.
#[derive(Clone, Debug)]
pub struct Drift<T: Real> {
    config: DriftConfig,
    diffusion: MultiplierSymbol<T>,
    mollifier: Option<MultiplierSymbol<T>>,
}

impl<T: Real> Drift<T> {
    pub fn new(grid: &TorusGrid<T>, config: &DriftConfig) -> Result<Self> {
        let errs = config.validate();
        if !errs.is_empty() {
            return Err(Error::InvalidConfig(errs));
        }
        let diffusion = MultiplierSymbol::fractional_laplacian(grid, T::lit(2.0 * config.theta))
            .scaled(T::lit(config.epsilon));
        let mollifier = config
            .mollify_convection
            .map(|n| MultiplierSymbol::mollifier(grid, n))
            .transpose()?;
        Ok(Self {
            config: config.clone(),
            diffusion,
            mollifier,
        })
    }

    pub fn config(&self) -> &DriftConfig {
        &self.config
    }

    #[inline]
    pub fn damping(&self, t: f64) -> f64 {
        self.config.damping.value(t)
    }

    /// Symbol `ε|k|^{2θ}` of the diffusion.
    pub fn diffusion_symbol(&self) -> &MultiplierSymbol<T> {
        &self.diffusion
    }

    /// `-(u∂ₓu + F(u))`, or zero when the nonlinearity is switched off.
    pub fn nonlinear(&self, u: &GridFunction<T>) -> GridFunction<T> {
        if !self.config.nonlinear {
            return GridFunction::zeros(u.grid());
        }
        let dealias = self.config.dealias;
        let ux = derivative(u);
        let mut conv = product(u, &ux, dealias);
        if let Some(j) = &self.mollifier {
            conv = j.apply(&conv);
        }
        conv.add(&nonlocal_f_with(u, &ux, dealias)).scale(-T::one())
    }

    /// Full deterministic right-hand side of `du/dt` at time `t`.
    pub fn evaluate(&self, t: f64, u: &GridFunction<T>) -> GridFunction<T> {
        let lam = T::lit(self.damping(t));
        let mut out = self.nonlinear(u).axpy(-lam, u);
        if self.config.epsilon != 0.0 {
            out = out.sub(&self.diffusion.apply(u));
        }
        out
    }
}

/// `-[εΛ^{2θ}u + λ(t)u + u∂ₓu + F(u)]`.
pub fn deterministic_drift<T: Real>(cfg: &DriftConfig, t: f64, u: &GridFunction<T>) -> Result<GridFunction<T>> {
    Ok(Drift::new(u.grid(), cfg)?.evaluate(t, u))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub theta: f64,
    /// `(n, max ratio)` with `n = None` for the unmollified pairing.
    pub per_index: Vec<(Option<usize>, f64)>,
    pub s: f64,
    pub n_points: usize,
    pub n_samples: usize,
}

/// Mollifier indices scanned by [`estimate_theta`]; `None` means no mollifier.
pub const THETA_INDICES: [Option<usize>; 3] = [Some(4), Some(16), None];

/// `(|⟨J(u∂ₓu),Ju⟩_{H^s}| + |⟨JF(u),Ju⟩_{H^s}|) / (‖u‖_{W^{1,∞}}‖u‖²_{H^s})`.
pub fn theta_ratio<T: Real>(u: &GridFunction<T>, s: T, mollifier: Option<&MultiplierSymbol<T>>, dealias: bool) -> f64 {
    let w = lipschitz_norm(u);
    let hs = crate::spectral::sobolev_norm_sq(s, u);
    if w == T::zero() || hs == T::zero() {
        return 0.0;
    }
    let ux = derivative(u);
    let conv = product(u, &ux, dealias);
    let f = nonlocal_f_with(u, &ux, dealias);
    let (conv, f, ju) = match mollifier {
        Some(j) => (j.apply(&conv), j.apply(&f), j.apply(u)),
        None => (conv, f, u.clone()),
    };
    let num = sobolev_inner(s, &conv, &ju).abs() + sobolev_inner(s, &f, &ju).abs();
    (num / (w * hs)).as_f64()
}

/// Working value of `Θ`: the largest [`theta_ratio`] over random fields and
/// over `n ∈ {4, 16, ∞}`.
///
/// Samples have Fourier coefficients on `|k| <= N/4` with standard deviation
/// `(1+|k|)^{-(s+1)}`, so every sample lies in a fixed ball of `H^s` as `N` grows.
pub fn estimate_theta<T: Real>(grid: &TorusGrid<T>, s: f64, n_samples: usize, seed: u64, dealias: bool) -> Result<ThetaEstimate> {
    if !(s > 1.5) {
        return Err(Error::param("s", format!("Θ needs s > 3/2, got {s}")));
    }
    let mollifiers: Vec<Option<MultiplierSymbol<T>>> = THETA_INDICES
        .iter()
        .map(|n| n.map(|n| MultiplierSymbol::mollifier(grid, n)).transpose())
        .collect::<Result<_>>()?;
    let mut per_index: Vec<(Option<usize>, f64)> = THETA_INDICES.iter().map(|&n| (n, 0.0)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kmax = (grid.n_points() / 4) as i64;
    for _ in 0..n_samples {
        let u = random_band_limited(grid, kmax, s + 1.0, true, &mut rng);
        for (slot, j) in per_index.iter_mut().zip(&mollifiers) {
            slot.1 = slot.1.max(theta_ratio(&u, T::lit(s), j.as_ref(), dealias));
        }
    }
    Ok(ThetaEstimate {
        theta: per_index.iter().map(|p| p.1).fold(0.0, f64::max),
        per_index,
        s,
        n_points: grid.n_points(),
        n_samples,
    })
}
