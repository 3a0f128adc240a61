//! Time stepping of the Itô system, blow-up monitoring and trajectory recording.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::Drift;
use crate::error::{Error, Result};
use crate::noise::{stratonovich_correction, transport_noise, BrownianDriver, Increments, ItoNoise};
use crate::psdo::NoiseOperatorSpec;
use crate::rng::{counter_rng, derive_seed};
use crate::scalar::Real;
use crate::spectral::{derivative, lipschitz_norm, sobolev_norm_sq, GridFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
    /// Iterated midpoint on the Stratonovich channels, Itô channels as Euler–Maruyama.
    StratonovichHeun,
    /// Lawson–Euler: the linear part `εΛ^{2θ} + λ(t)` integrated exactly.
    ExponentialEm,
    /// Classical Runge–Kutta on the drift with Euler–Maruyama noise increments.
    Rk4,
}

fn default_cfl() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t0: f64,
    pub t_end: f64,
    pub record_every: usize,
    /// Abort (or halve) a step when `dt·max|∂ₓu|` exceeds this.
    #[serde(default = "default_cfl")]
    pub cfl_limit: f64,
    #[serde(default)]
    pub adaptive_halving: bool,
    /// Time origin of the step counter that keys the noise.
    #[serde(default)]
    pub clock_origin: f64,
}

impl SchemeConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            errs.push(format!("scheme.dt = {} must be positive", self.dt));
        }
        if !(self.t_end > self.t0) {
            errs.push(format!("scheme.t_end = {} must exceed t0 = {}", self.t_end, self.t0));
        }
        if self.record_every == 0 {
            errs.push("scheme.record_every must be >= 1".to_string());
        }
        if !(self.cfl_limit > 0.0) {
            errs.push(format!("scheme.cfl_limit = {} must be positive", self.cfl_limit));
        }
        if self.dt > 0.0 && lattice_index(self.t0, self.clock_origin, self.dt).is_none() {
            errs.push(format!(
                "scheme.t0 = {} is not on the step lattice clock_origin + i·dt",
                self.t0
            ));
        }
        errs
    }
}

/// Integer `i` with `t = origin + i·dt`, if `t` lies on that lattice.
pub fn lattice_index(t: f64, origin: f64, dt: f64) -> Option<i64> {
    let x = (t - origin) / dt;
    let i = x.round();
    ((x - i).abs() <= 1e-6).then_some(i as i64)
}

fn default_threshold() -> f64 {
    1e3
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupConfig {
    #[serde(default = "default_threshold")]
    pub w1inf_threshold: f64,
    #[serde(default = "default_threshold")]
    pub slope_integral_threshold: f64,
    /// Stop the run when the slope-integral criterion fires.
    #[serde(default = "default_true")]
    pub halt_on_slope_integral: bool,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        Self {
            w1inf_threshold: default_threshold(),
            slope_integral_threshold: default_threshold(),
            halt_on_slope_integral: true,
        }
    }
}

impl BlowupConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.w1inf_threshold > 0.0) {
            errs.push("blowup.w1inf_threshold must be > 0".to_string());
        }
        if !(self.slope_integral_threshold > 0.0) {
            errs.push("blowup.slope_integral_threshold must be > 0".to_string());
        }
        errs
    }
}

/// Which criteria fired at a detection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub kind1: bool,
    pub kind2: bool,
}

impl Detection {
    /// CSV code: 0 none, 1 or 2 for a single criterion, 3 for both.
    pub fn code(self) -> u8 {
        self.kind1 as u8 + 2 * self.kind2 as u8
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlowupMonitor {
    config: BlowupConfig,
    integral: f64,
    first_kind1: Option<f64>,
    first_kind2: Option<f64>,
}

impl BlowupMonitor {
    pub fn new(config: BlowupConfig) -> Self {
        Self {
            config,
            integral: 0.0,
            first_kind1: None,
            first_kind2: None,
        }
    }

    #[inline]
    pub fn slope_integral(&self) -> f64 {
        self.integral
    }

    pub fn first_kind1(&self) -> Option<f64> {
        self.first_kind1
    }

    pub fn first_kind2(&self) -> Option<f64> {
        self.first_kind2
    }

    /// Adds `dt·max|∂ₓu|` to the slope integral and tests both criteria at `t`.
    pub fn detect_blowup<T: Real>(&mut self, u: &GridFunction<T>, t: f64, dt: f64) -> Option<Detection> {
        let slope = derivative(u).max_abs().as_f64();
        self.observe(u.max_abs().as_f64() + slope, slope, t, dt)
    }

    fn observe(&mut self, w1inf: f64, slope: f64, t: f64, dt: f64) -> Option<Detection> {
        self.integral += dt * slope;
        let det = Detection {
            kind1: w1inf >= self.config.w1inf_threshold,
            kind2: self.integral >= self.config.slope_integral_threshold,
        };
        if det.kind1 && self.first_kind1.is_none() {
            self.first_kind1 = Some(t);
        }
        if det.kind2 && self.first_kind2.is_none() {
            self.first_kind2 = Some(t);
        }
        (det.kind1 || det.kind2).then_some(det)
    }
}

/// One diagnostic row of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub t: f64,
    pub l2_sq: f64,
    pub h1_sq: f64,
    pub hs_sq: f64,
    pub w1inf: f64,
    pub min_ux: f64,
    pub max_u: f64,
    pub slope_int: f64,
    pub blowup_kind: u8,
}

pub const CSV_HEADER: &str = "t,l2_sq,h1_sq,hs_sq,w1inf,min_ux,max_u,slope_int,blowup_kind";

impl DiagnosticRow {
    pub fn measure<T: Real>(t: f64, u: &GridFunction<T>, s: f64, slope_int: f64, blowup_kind: u8) -> Self {
        let ux = derivative(u);
        Self {
            t,
            l2_sq: sobolev_norm_sq(T::zero(), u).as_f64(),
            h1_sq: sobolev_norm_sq(T::one(), u).as_f64(),
            hs_sq: sobolev_norm_sq(T::lit(s), u).as_f64(),
            w1inf: (u.max_abs() + ux.max_abs()).as_f64(),
            min_ux: ux.min().as_f64(),
            max_u: u.max().as_f64(),
            slope_int,
            blowup_kind,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.t,
            self.l2_sq,
            self.h1_sq,
            self.hs_sq,
            self.w1inf,
            self.min_ux,
            self.max_u,
            self.slope_int,
            self.blowup_kind
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupEvent {
    pub kind: Detection,
    pub t_detect: f64,
    pub kind1_t: Option<f64>,
    pub kind2_t: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericalFailure {
    pub t: f64,
    pub reason: String,
    pub last: Option<DiagnosticRow>,
}

#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub rows: Vec<DiagnosticRow>,
    pub snapshots: Vec<GridFunction<T>>,
    pub blowup: Option<BlowupEvent>,
    pub failure: Option<NumericalFailure>,
    pub steps: u64,
    pub halvings: u64,
    pub t_final: f64,
    pub final_state: GridFunction<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }

    /// Reached `t_end` without blow-up or failure.
    pub fn completed(&self) -> bool {
        self.blowup.is_none() && self.failure.is_none()
    }
}

/// The resolved right-hand side: drift, Stratonovich bank and Itô channels.
#[derive(Clone, Debug)]
pub struct Model<T: Real> {
    pub drift: Drift<T>,
    pub bank: Vec<NoiseOperatorSpec<T>>,
    pub ito: ItoNoise<T>,
}

impl<T: Real> Model<T> {
    fn has_bank(&self) -> bool {
        self.bank.iter().any(|q| q.is_active())
    }

    fn has_ito(&self) -> bool {
        self.ito.channels() > 0 && !matches!(self.ito.spec(), crate::noise::ItoNoiseSpec::Zero)
    }

    /// Itô-form deterministic part: drift plus `½ΣQₖ²u`.
    pub fn ito_drift(&self, t: f64, u: &GridFunction<T>) -> GridFunction<T> {
        let d = self.drift.evaluate(t, u);
        if self.has_bank() {
            d.add(&stratonovich_correction(&self.bank, u))
        } else {
            d
        }
    }

    fn noise(&self, t: f64, u: &GridFunction<T>, inc: &Increments) -> Option<GridFunction<T>> {
        let mut acc: Option<GridFunction<T>> = None;
        if self.has_bank() {
            acc = Some(transport_noise(&self.bank, u, &inc.q));
        }
        if self.has_ito() {
            let h = self.ito.apply(t, u, &inc.h);
            acc = Some(match acc {
                Some(a) => a.add(&h),
                None => h,
            });
        }
        acc
    }

    /// One step of `scheme` from `(t, u)` with step `dt` and increments `inc`.
    pub fn step(&self, scheme: Scheme, u: &GridFunction<T>, t: f64, dt: f64, inc: &Increments) -> GridFunction<T> {
        let dtt = T::lit(dt);
        match scheme {
            Scheme::EulerMaruyama => {
                let mut v = u.axpy(dtt, &self.ito_drift(t, u));
                if let Some(n) = self.noise(t, u, inc) {
                    v = v.add(&n);
                }
                v
            }
            Scheme::ExponentialEm => {
                let mut rhs = self.drift.nonlinear(u);
                if self.has_bank() {
                    rhs = rhs.add(&stratonovich_correction(&self.bank, u));
                }
                let mut v = u.axpy(dtt, &rhs);
                if let Some(n) = self.noise(t, u, inc) {
                    v = v.add(&n);
                }
                self.linear_propagator(&v, t, dt)
            }
            Scheme::Rk4 => {
                let half = T::lit(0.5) * dtt;
                let k1 = self.ito_drift(t, u);
                let k2 = self.ito_drift(t + 0.5 * dt, &u.axpy(half, &k1));
                let k3 = self.ito_drift(t + 0.5 * dt, &u.axpy(half, &k2));
                let k4 = self.ito_drift(t + dt, &u.axpy(dtt, &k3));
                let incr = GridFunction::sum_of(u.grid(), [&k1, &k2.scale(T::lit(2.0)), &k3.scale(T::lit(2.0)), &k4]);
                let mut v = u.axpy(dtt / T::lit(6.0), &incr);
                if let Some(n) = self.noise(t, u, inc) {
                    v = v.add(&n);
                }
                v
            }
            Scheme::StratonovichHeun => {
                let tm = t + 0.5 * dt;
                let ito = if self.has_ito() {
                    Some(self.ito.apply(t, u, &inc.h))
                } else {
                    None
                };
                let advance = |m: &GridFunction<T>, tt: f64| {
                    let mut v = u.axpy(dtt, &self.drift.evaluate(tt, m));
                    if self.has_bank() {
                        v = v.add(&transport_noise(&self.bank, m, &inc.q));
                    }
                    if let Some(h) = &ito {
                        v = v.add(h);
                    }
                    v
                };
                let mut v = advance(u, t);
                for _ in 0..3 {
                    let mid = u.add(&v).scale(T::lit(0.5));
                    v = advance(&mid, tm);
                }
                v
            }
        }
    }

    /// `exp(-dt·ε|k|^{2θ} - ∫_t^{t+dt} λ)` applied to `v`.
    fn linear_propagator(&self, v: &GridFunction<T>, t: f64, dt: f64) -> GridFunction<T> {
        let damp = (-self.drift.config().damping.integral(t, t + dt)).exp();
        if self.drift.config().epsilon == 0.0 {
            return v.scale(T::lit(damp));
        }
        let dtt = T::lit(dt);
        let damp = T::lit(damp);
        let spec: Vec<Complex<T>> = v
            .spectrum()
            .iter()
            .zip(self.drift.diffusion_symbol().table())
            .map(|(a, m)| a * ((-dtt * m.re).exp() * damp))
            .collect();
        GridFunction::from_spectrum(v.grid(), spec)
    }
}

/// Recording options of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordOptions {
    pub diagnostic_s: f64,
    pub snapshots: bool,
}

/// A configured integrator: model, scheme and monitors.
#[derive(Clone, Debug)]
pub struct Integrator<T: Real> {
    pub model: Model<T>,
    pub scheme: SchemeConfig,
    pub blowup: BlowupConfig,
    pub record: RecordOptions,
}

const MAX_HALVINGS: u32 = 12;

impl<T: Real> Integrator<T> {
    pub fn new(model: Model<T>, scheme: SchemeConfig, blowup: BlowupConfig, record: RecordOptions) -> Result<Self> {
        let mut errs = scheme.validate();
        errs.extend(blowup.validate());
        if !errs.is_empty() {
            return Err(Error::InvalidConfig(errs));
        }
        Ok(Self {
            model,
            scheme,
            blowup,
            record,
        })
    }

    pub fn driver(&self, seed: u64) -> BrownianDriver {
        BrownianDriver::new(seed, self.model.bank.len(), self.model.ito.channels(), self.scheme.dt)
            .expect("validated dt")
    }

    /// Runs over the configured `[t0, t_end]`.
    pub fn run(&self, u0: &GridFunction<T>, seed: u64) -> Trajectory<T> {
        self.run_interval(u0, self.scheme.t0, self.scheme.t_end, &self.driver(seed))
    }

    /// Runs from `t_start` to `t_stop`; both are snapped to the step lattice
    /// `clock_origin + i·dt` of `driver`, so that running `[a,b]` then `[b,c]`
    /// reproduces `[a,c]` bitwise.
    pub fn run_interval(&self, u0: &GridFunction<T>, t_start: f64, t_stop: f64, driver: &BrownianDriver) -> Trajectory<T> {
        let dt = driver.dt();
        let origin = self.scheme.clock_origin;
        let i0 = ((t_start - origin) / dt).round() as i64;
        let i1 = ((t_stop - origin) / dt).round() as i64;
        let time = |i: i64| origin + i as f64 * dt;
        let s = self.record.diagnostic_s;
        let mut monitor = BlowupMonitor::new(self.blowup.clone());
        let mut u = u0.clone();
        let mut rows = vec![DiagnosticRow::measure(time(i0), &u, s, 0.0, 0)];
        let mut snapshots = Vec::new();
        if self.record.snapshots {
            snapshots.push(u.clone());
        }
        let mut traj_blowup = None;
        let mut failure = None;
        let mut halvings = 0u64;
        let mut i = i0;
        while i < i1 {
            let t = time(i);
            let inc = driver.increments(i);
            let next = match self.advance(&u, t, dt, &inc, driver, i) {
                Ok((v, h)) => {
                    halvings += h as u64;
                    v
                }
                Err(reason) => {
                    failure = Some(NumericalFailure {
                        t,
                        reason,
                        last: rows.last().cloned(),
                    });
                    break;
                }
            };
            i += 1;
            let t_new = time(i);
            if !next.is_finite() {
                failure = Some(NumericalFailure {
                    t: t_new,
                    reason: "non-finite state".to_string(),
                    last: rows.last().cloned(),
                });
                break;
            }
            u = next;
            let det = monitor.detect_blowup(&u, t_new, dt);
            let halt = det.is_some_and(|d| d.kind1 || (d.kind2 && self.blowup.halt_on_slope_integral));
            let code = det.map_or(0, Detection::code);
            let first_detection = det.is_some() && traj_blowup.is_none();
            if (i - i0) as usize % self.scheme.record_every == 0 || halt || i == i1 || first_detection {
                rows.push(DiagnosticRow::measure(t_new, &u, s, monitor.slope_integral(), code));
                if self.record.snapshots {
                    snapshots.push(u.clone());
                }
            }
            if let Some(d) = det {
                if traj_blowup.is_none() || halt {
                    traj_blowup = Some(BlowupEvent {
                        kind: d,
                        t_detect: t_new,
                        kind1_t: monitor.first_kind1(),
                        kind2_t: monitor.first_kind2(),
                    });
                }
            }
            if halt {
                break;
            }
        }
        if let Some(ev) = traj_blowup.as_mut() {
            ev.kind1_t = monitor.first_kind1();
            ev.kind2_t = monitor.first_kind2();
        }
        Trajectory {
            rows,
            snapshots,
            blowup: traj_blowup,
            failure,
            steps: (i - i0) as u64,
            halvings,
            t_final: time(i),
            final_state: u,
        }
    }

    /// One lattice step, split by Brownian bridges when the CFL guard trips and
    /// halving is enabled. Returns the new state and the halving depth used.
    fn advance(
        &self,
        u: &GridFunction<T>,
        t: f64,
        dt: f64,
        inc: &Increments,
        driver: &BrownianDriver,
        step: i64,
    ) -> std::result::Result<(GridFunction<T>, u32), String> {
        let slope = derivative(u).max_abs().as_f64();
        let mut level = 0u32;
        while dt / f64::from(1u32 << level) * slope > self.scheme.cfl_limit {
            if !self.scheme.adaptive_halving {
                return Err(format!("CFL guard: dt·max|u_x| = {} > {}", dt * slope, self.scheme.cfl_limit));
            }
            level += 1;
            if level > MAX_HALVINGS {
                return Err(format!("CFL guard: {MAX_HALVINGS} halvings insufficient"));
            }
        }
        if level == 0 {
            return Ok((self.model.step(self.scheme.scheme, u, t, dt, inc), 0));
        }
        let pieces = bridge_split(inc, level, dt, driver.seed(), step);
        let h = dt / pieces.len() as f64;
        let mut v = u.clone();
        for (j, piece) in pieces.iter().enumerate() {
            v = self.model.step(self.scheme.scheme, &v, t + j as f64 * h, h, piece);
        }
        Ok((v, level))
    }
}

/// Splits a step increment into `2^levels` pieces by Brownian bridge sampling
/// with draws keyed by `(seed, step, level)`.
pub fn bridge_split(inc: &Increments, levels: u32, dt: f64, seed: u64, step: i64) -> Vec<Increments> {
    let mut pieces = vec![inc.clone()];
    let mut h = dt;
    for level in 0..levels {
        let mut rng = counter_rng(derive_seed(seed, 0xb41d_6e00 + u64::from(level)), 2, step);
        let sd = (h / 4.0).sqrt();
        let mut next = Vec::with_capacity(pieces.len() * 2);
        for p in &pieces {
            let mut a = p.scaled(0.5);
            let mut b = p.scaled(0.5);
            for (x, y) in a.q.iter_mut().zip(b.q.iter_mut()).chain(a.h.iter_mut().zip(b.h.iter_mut())) {
                let z: f64 = rng.sample(StandardNormal);
                *x += sd * z;
                *y -= sd * z;
            }
            next.push(a);
            next.push(b);
        }
        pieces = next;
        h *= 0.5;
    }
    pieces
}

/// One step of `scheme`; see [`Model::step`].
pub fn step<T: Real>(model: &Model<T>, scheme: Scheme, u: &GridFunction<T>, t: f64, dt: f64, inc: &Increments) -> GridFunction<T> {
    model.step(scheme, u, t, dt, inc)
}

/// Convenience: `‖u‖_{W^{1,∞}}` as `f64`.
pub fn w1inf<T: Real>(u: &GridFunction<T>) -> f64 {
    lipschitz_norm(u).as_f64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DriftConfig, TimeProfile};
    use crate::noise::ItoNoiseSpec;
    use crate::spectral::{MultiplierSymbol, TorusGrid};

    fn model(g: &TorusGrid<f64>, eps: f64, lambda: f64, nonlinear: bool, bank: Vec<NoiseOperatorSpec<f64>>) -> Model<f64> {
        let cfg = DriftConfig {
            epsilon: eps,
            theta: 1.0,
            damping: TimeProfile::constant(lambda),
            dealias: true,
            nonlinear,
            mollify_convection: None,
        };
        Model {
            drift: Drift::new(g, &cfg).unwrap(),
            bank,
            ito: ItoNoise::new(g, &ItoNoiseSpec::Zero, true).unwrap(),
        }
    }

    #[test]
    fn constants_are_equilibria() {
        let g = TorusGrid::<f64>::new(32).unwrap();
        let m = model(&g, 0.0, 0.0, true, Vec::new());
        let u = GridFunction::constant(&g, 0.7);
        for s in [Scheme::EulerMaruyama, Scheme::ExponentialEm, Scheme::StratonovichHeun, Scheme::Rk4] {
            let v = m.step(s, &u, 0.0, 1e-2, &Increments::zeros(0, 0));
            assert!(v.values().iter().all(|&x| (x - 0.7).abs() < 1e-15), "{s:?}");
        }
    }

    #[test]
    fn exponential_step_damps_exactly() {
        let g = TorusGrid::<f64>::new(32).unwrap();
        let m = model(&g, 0.0, 2.0, false, Vec::new());
        let u = GridFunction::from_fn(&g, |x| x.sin() + 0.3).unwrap();
        let dt = 0.01;
        let v = m.step(Scheme::ExponentialEm, &u, 0.0, dt, &Increments::zeros(0, 0));
        for (a, b) in v.values().iter().zip(u.values()) {
            assert!((a - b * (-2.0 * dt).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn monitor_criteria() {
        let mut m = BlowupMonitor::new(BlowupConfig {
            w1inf_threshold: 10.0,
            slope_integral_threshold: 1.0,
            halt_on_slope_integral: true,
        });
        assert_eq!(m.observe(20.0, 20.0, 0.0, 0.0), Some(Detection { kind1: true, kind2: false }));
        let mut m = BlowupMonitor::new(BlowupConfig {
            w1inf_threshold: 10.0,
            slope_integral_threshold: 1.0,
            halt_on_slope_integral: true,
        });
        for i in 0..999 {
            assert!(m.observe(1.0, 1.0, i as f64 * 1e-3, 1e-3).is_none());
        }
        assert!(m.observe(1.0, 1.0, 0.999, 1e-3).is_some_and(|d| d.kind2));
    }

    #[test]
    fn interval_composition_is_bitwise() {
        let g = TorusGrid::<f64>::new(32).unwrap();
        let q = NoiseOperatorSpec::scaled_multiplier(0.3, &MultiplierSymbol::derivative(&g), &g).unwrap();
        let m = model(&g, 0.1, 0.5, true, vec![q]);
        let scheme = SchemeConfig {
            scheme: Scheme::ExponentialEm,
            dt: 1e-3,
            t0: -1.0,
            t_end: 0.0,
            record_every: 10,
            cfl_limit: 0.5,
            adaptive_halving: false,
            clock_origin: 0.0,
        };
        let it = Integrator::new(
            m,
            scheme,
            BlowupConfig::default(),
            RecordOptions {
                diagnostic_s: 2.0,
                snapshots: false,
            },
        )
        .unwrap();
        let d = it.driver(5);
        let u0 = GridFunction::from_fn(&g, |x| 0.5 * x.cos()).unwrap();
        let whole = it.run_interval(&u0, -1.0, 0.0, &d);
        let a = it.run_interval(&u0, -1.0, -0.37, &d);
        let b = it.run_interval(&a.final_state, -0.37, 0.0, &d);
        assert_eq!(whole.final_state.values(), b.final_state.values());
    }

    #[test]
    fn bridge_pieces_sum_to_increment() {
        let inc = Increments {
            q: vec![0.1, -0.2],
            h: vec![0.05],
        };
        let pieces = bridge_split(&inc, 3, 0.01, 1, 4);
        assert_eq!(pieces.len(), 8);
        let sum: f64 = pieces.iter().map(|p| p.q[1]).sum();
        assert!((sum + 0.2).abs() < 1e-14);
    }
}
