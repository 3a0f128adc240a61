//! Noise-operator channels `Qₖ = aₖ𝒜ₖ` or `Qₖ = bₖℬₖ` and the JSON bank format.

use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::symbol::FullSymbol;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{GridFunction, MultiplierSymbol, TorusGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelKind {
    /// `aₖ𝒜ₖ`: smooth (or scalar) coefficient, `𝒜ₖ` of order `α ∈ [0,1]`.
    A,
    /// `bₖℬₖ`: scalar coefficient, x-independent `ℬₖ` of order `β >= 0`.
    B,
}

/// Channel coefficient: a scalar, or a real field given by Fourier
/// coefficients `a(x) = Σ c_k e^{ikx}` (only `k >= 0` listed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Scalar(f64),
    Fourier(Vec<(i64, f64, f64)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builtin", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinSymbol {
    /// `∂ₓ`, symbol `ik`.
    Derivative,
    /// `OP(i·sign(k)·1_{|k|<=band}) ∘ (-Δ)^power`.
    HilbertBand {
        power: f64,
        #[serde(default)]
        band: Option<i64>,
    },
    /// `OP(i e(k)) ∘ (-Δ)^power` with the odd order-`beta` profile
    /// `e(k) = k (1+k²)^{(beta-1)/2}`.
    HalfmoonEK { beta: f64, power: f64 },
    /// `|k|`: self-adjoint, kept as a deliberately inadmissible reference.
    AbsK,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseSymbolSpec {
    Builtin(BuiltinSymbol),
    Table { table: PathBuf },
}

/// Explicit symbol table file: rows are grid points, columns FFT-ordered frequencies.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolTableFile {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Resolution-independent description of one channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDescription {
    pub kind: ChannelKind,
    pub order: f64,
    pub coefficient: CoefficientSpec,
    pub base: BaseSymbolSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankDescription {
    pub channels: Vec<ChannelDescription>,
}

impl BankDescription {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Resolves every channel on `grid`; table paths are relative to `base_dir`.
    pub fn build<T: Real>(&self, grid: &TorusGrid<T>, base_dir: Option<&Path>) -> Result<Vec<NoiseOperatorSpec<T>>> {
        self.channels.iter().map(|c| c.build(grid, base_dir)).collect()
    }

    /// `γ₀ = max{α·1(A active), β·1(B active)}`.
    pub fn gamma0(&self) -> f64 {
        self.channels
            .iter()
            .filter(|c| c.is_active())
            .map(|c| c.order)
            .fold(0.0, f64::max)
    }
}

impl ChannelDescription {
    pub fn is_active(&self) -> bool {
        match &self.coefficient {
            CoefficientSpec::Scalar(c) => *c != 0.0,
            CoefficientSpec::Fourier(list) => list.iter().any(|&(_, re, im)| re != 0.0 || im != 0.0),
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        match self.kind {
            ChannelKind::A => {
                if !(0.0..=1.0).contains(&self.order) {
                    errs.push(format!("A-channel order α = {} must lie in [0,1]", self.order));
                }
            }
            ChannelKind::B => {
                if !(self.order >= 0.0) {
                    errs.push(format!("B-channel order β = {} must be >= 0", self.order));
                }
                if !matches!(self.coefficient, CoefficientSpec::Scalar(_)) {
                    errs.push("B-channel coefficient must be a scalar".to_string());
                }
                if matches!(self.base, BaseSymbolSpec::Table { .. }) {
                    errs.push("B-channel base symbol must be x-independent (builtin)".to_string());
                }
            }
        }
        if let CoefficientSpec::Fourier(list) = &self.coefficient {
            if list.iter().any(|&(k, _, _)| k < 0) {
                errs.push("Fourier coefficient list takes k >= 0 only".to_string());
            }
        }
        errs
    }

    pub fn build<T: Real>(&self, grid: &TorusGrid<T>, base_dir: Option<&Path>) -> Result<NoiseOperatorSpec<T>> {
        let errs = self.validate();
        if !errs.is_empty() {
            return Err(Error::InvalidConfig(errs));
        }
        let base = self.base_symbol(grid, base_dir)?;
        let coefficient = match &self.coefficient {
            CoefficientSpec::Scalar(c) => Coefficient::Scalar(T::lit(*c)),
            CoefficientSpec::Fourier(list) => Coefficient::Field(fourier_field(grid, list)?),
        };
        NoiseOperatorSpec::new(self.kind, coefficient, base, T::lit(self.order))
    }

    fn base_symbol<T: Real>(&self, grid: &TorusGrid<T>, base_dir: Option<&Path>) -> Result<FullSymbol<T>> {
        let order = T::lit(self.order);
        match &self.base {
            BaseSymbolSpec::Builtin(b) => Ok(FullSymbol::from_multiplier(grid, &builtin_multiplier(grid, b, order)?)),
            BaseSymbolSpec::Table { table } => {
                let path = match base_dir {
                    Some(dir) if table.is_relative() => dir.join(table),
                    _ => table.clone(),
                };
                let file: SymbolTableFile = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
                symbol_from_table_file(grid, &file, order)
            }
        }
    }
}

pub fn builtin_multiplier<T: Real>(
    grid: &TorusGrid<T>,
    builtin: &BuiltinSymbol,
    order: T,
) -> Result<MultiplierSymbol<T>> {
    let sign = |k: i64| T::from_i64_lossy(k.signum());
    match *builtin {
        BuiltinSymbol::Derivative => Ok(MultiplierSymbol::derivative(grid)),
        BuiltinSymbol::AbsK => MultiplierSymbol::from_real_fn(grid, order, false, |k| T::from_i64_lossy(k.abs())),
        BuiltinSymbol::HilbertBand { power, band } => {
            let power = T::lit(power);
            MultiplierSymbol::from_real_fn(grid, order, true, |k| {
                if band.is_some_and(|b| k.abs() > b) || k == 0 {
                    return T::zero();
                }
                sign(k) * T::from_i64_lossy(k.abs()).powf(T::lit(2.0) * power)
            })
        }
        BuiltinSymbol::HalfmoonEK { beta, power } => {
            let beta = T::lit(beta);
            let power = T::lit(power);
            MultiplierSymbol::from_real_fn(grid, order, true, |k| {
                let kk = T::from_i64_lossy(k);
                let e = kk * (T::one() + kk * kk).powf((beta - T::one()) * T::lit(0.5));
                let lap = if k == 0 {
                    T::zero()
                } else {
                    kk.abs().powf(T::lit(2.0) * power)
                };
                e * lap
            })
        }
    }
}

pub fn symbol_from_table_file<T: Real>(grid: &TorusGrid<T>, file: &SymbolTableFile, order: T) -> Result<FullSymbol<T>> {
    let n = grid.n_points();
    if file.n != n || file.re.len() != n || file.im.len() != n {
        return Err(Error::GridMismatch { left: n, right: file.n });
    }
    let mut table = Vec::with_capacity(n * n);
    for (re_row, im_row) in file.re.iter().zip(&file.im) {
        if re_row.len() != n || im_row.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: re_row.len().min(im_row.len()),
            });
        }
        table.extend(re_row.iter().zip(im_row).map(|(&r, &i)| Complex::new(T::lit(r), T::lit(i))));
    }
    FullSymbol::from_table(grid, order, table)
}

fn fourier_field<T: Real>(grid: &TorusGrid<T>, list: &[(i64, f64, f64)]) -> Result<GridFunction<T>> {
    let n = grid.n_points();
    let mut spec = vec![Complex::new(T::zero(), T::zero()); n];
    for &(k, re, im) in list {
        // c_k e^{ikx} has integral-convention coefficient 2π c_k
        let c = Complex::new(T::lit(re), T::lit(im)) * T::TAU();
        if k == 0 {
            spec[0] = spec[0] + Complex::new(c.re, T::zero());
            continue;
        }
        let i = grid
            .index_of(k)
            .filter(|_| k < grid.nyquist())
            .ok_or_else(|| Error::param("coefficient", format!("mode {k} not representable on N = {n}")))?;
        spec[i] = spec[i] + c;
        spec[n - i] = spec[n - i] + c.conj();
    }
    Ok(GridFunction::from_spectrum(grid, spec))
}

#[derive(Clone, Debug)]
pub enum Coefficient<T: Real> {
    Scalar(T),
    Field(GridFunction<T>),
}

/// One resolved noise channel on a grid: `Qₖ = coefficient · base`.
#[derive(Clone, Debug)]
pub struct NoiseOperatorSpec<T: Real> {
    kind: ChannelKind,
    coefficient: Coefficient<T>,
    base: FullSymbol<T>,
    order: T,
    operator: FullSymbol<T>,
}

impl<T: Real> NoiseOperatorSpec<T> {
    pub fn new(kind: ChannelKind, coefficient: Coefficient<T>, base: FullSymbol<T>, order: T) -> Result<Self> {
        if kind == ChannelKind::B {
            if !matches!(coefficient, Coefficient::Scalar(_)) {
                return Err(Error::param("coefficient", "B-channels take a scalar coefficient"));
            }
            if !base.is_x_independent() {
                return Err(Error::param("base", "B-channels need an x-independent symbol"));
            }
        }
        let operator = match &coefficient {
            Coefficient::Scalar(c) => match base.multiplier() {
                Some(m) => FullSymbol::from_multiplier(base.grid(), &m.scaled(*c)),
                None => base.with_coefficient(&GridFunction::constant(base.grid(), *c)),
            },
            Coefficient::Field(a) => {
                base.grid().check_same(a.grid())?;
                base.with_coefficient(a)
            }
        };
        Ok(Self {
            kind,
            coefficient,
            base,
            order,
            operator,
        })
    }

    /// `a(x)∂ₓ`.
    pub fn transport(a: GridFunction<T>) -> Result<Self> {
        let grid = a.grid().clone();
        let base = FullSymbol::from_multiplier(&grid, &MultiplierSymbol::derivative(&grid));
        Self::new(ChannelKind::A, Coefficient::Field(a), base, T::one())
    }

    /// `b · m(D)` as a B-channel.
    pub fn scaled_multiplier(b: T, m: &MultiplierSymbol<T>, grid: &TorusGrid<T>) -> Result<Self> {
        let base = FullSymbol::from_multiplier(grid, m);
        Self::new(ChannelKind::B, Coefficient::Scalar(b), base, m.order())
    }

    #[inline]
    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    #[inline]
    pub fn order(&self) -> T {
        self.order
    }

    pub fn coefficient(&self) -> &Coefficient<T> {
        &self.coefficient
    }

    pub fn base(&self) -> &FullSymbol<T> {
        &self.base
    }

    /// Symbol of the full channel operator `Qₖ`.
    pub fn symbol(&self) -> &FullSymbol<T> {
        &self.operator
    }

    pub fn is_active(&self) -> bool {
        match &self.coefficient {
            Coefficient::Scalar(c) => *c != T::zero(),
            Coefficient::Field(a) => a.max_abs() > T::zero(),
        }
    }

    #[inline]
    pub fn apply(&self, u: &GridFunction<T>) -> GridFunction<T> {
        self.operator.apply(u)
    }
}
