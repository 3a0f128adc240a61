//! Monte Carlo ensembles and the statistical experiments built on them.
//!
//! All conditional expectations given `F₀` are realized with deterministic
//! initial data, so the conditioning is vacuous.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::TimeProfile;
use crate::error::{Error, Result};
use crate::integrator::{DiagnosticRow, Integrator, Trajectory};
use crate::noise::{ItoNoiseSpec, LyapunovFunction, LyapunovReport};
use crate::rng::{counter_rng, derive_seed};
use crate::scalar::Real;
use crate::spectral::{derivative, sobolev_norm_sq, GridFunction};

pub const CONDITIONING_NOTE: &str = "conditional expectations given F_0 realized with deterministic u0";

/// Seed of path `index` under root `seed`.
#[inline]
pub fn path_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, index as u64)
}

/// Runs `paths` independent trajectories in parallel; output is ordered by path index.
pub fn run_ensemble<T: Real>(integrator: &Integrator<T>, u0: &GridFunction<T>, paths: usize, seed: u64) -> Vec<Trajectory<T>> {
    (0..paths)
        .into_par_iter()
        .map(|p| integrator.run(u0, path_seed(seed, p)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub mean: f64,
    /// Monte Carlo standard error of the mean.
    pub se: f64,
    pub count: usize,
}

/// Mean and standard error of `f(row)` at every record time shared by the paths.
pub fn series_stats<T: Real>(trajs: &[Trajectory<T>], f: impl Fn(&DiagnosticRow) -> f64) -> Vec<SeriesPoint> {
    let Some(longest) = trajs.iter().max_by_key(|t| t.rows.len()) else {
        return Vec::new();
    };
    longest
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let vals: Vec<f64> = trajs
                .iter()
                .filter_map(|tr| tr.rows.get(i).filter(|row| row.t == r.t && tr.failure.is_none()).map(&f))
                .collect();
            let (mean, se) = mean_se(&vals);
            SeriesPoint {
                t: r.t,
                mean,
                se,
                count: vals.len(),
            }
        })
        .collect()
}

pub fn mean_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    // Shifted by the first sample so identical samples give that value and zero spread.
    let shift = vals[0];
    let offset = vals.iter().map(|v| v - shift).sum::<f64>() / n as f64;
    let mean = shift + offset;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - shift - offset).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathCounts {
    pub total: usize,
    pub completed: usize,
    pub blowups: usize,
    pub failures: usize,
    /// Index, time and reason of every path that did not complete.
    #[serde(default)]
    pub excluded: Vec<ExcludedPath>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcludedPath {
    pub path: usize,
    pub t: f64,
    pub reason: String,
}

impl PathCounts {
    pub fn of<T: Real>(trajs: &[Trajectory<T>]) -> Self {
        Self {
            total: trajs.len(),
            completed: trajs.iter().filter(|t| t.completed()).count(),
            blowups: trajs.iter().filter(|t| t.blowup.is_some()).count(),
            failures: trajs.iter().filter(|t| t.failure.is_some()).count(),
            excluded: trajs
                .iter()
                .enumerate()
                .filter_map(|(path, t)| {
                    if let Some(f) = &t.failure {
                        Some(ExcludedPath {
                            path,
                            t: f.t,
                            reason: f.reason.clone(),
                        })
                    } else {
                        t.blowup.as_ref().map(|b| ExcludedPath {
                            path,
                            t: b.t_detect,
                            reason: format!("blow-up (code {})", b.kind.code()),
                        })
                    }
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub note: String,
    pub counts: PathCounts,
    pub seed: u64,
    pub h1_sq: Vec<SeriesPoint>,
    pub hs_sq: Vec<SeriesPoint>,
    pub w1inf: Vec<SeriesPoint>,
}

pub fn ensemble_experiment<T: Real>(
    integrator: &Integrator<T>,
    u0: &GridFunction<T>,
    paths: usize,
    seed: u64,
) -> (EnsembleReport, Vec<Trajectory<T>>) {
    let trajs = run_ensemble(integrator, u0, paths, seed);
    let report = EnsembleReport {
        note: CONDITIONING_NOTE.to_string(),
        counts: PathCounts::of(&trajs),
        seed,
        h1_sq: series_stats(&trajs, |r| r.h1_sq),
        hs_sq: series_stats(&trajs, |r| r.hs_sq),
        w1inf: series_stats(&trajs, |r| r.w1inf),
    };
    (report, trajs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePoint {
    pub t: f64,
    pub mean: f64,
    pub se: f64,
    pub count: usize,
    pub bound: f64,
    /// `bound − mean`; the check is `margin >= −3·se`.
    pub margin: f64,
}

impl EnvelopePoint {
    pub fn within(&self, n_se: f64) -> bool {
        self.margin >= -n_se * self.se
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub note: String,
    pub valid: bool,
    pub counts: PathCounts,
    pub seed: u64,
    pub xi_hat: f64,
    pub c0_hat: f64,
    pub h1_sq_initial: f64,
    pub points: Vec<EnvelopePoint>,
}

impl DecayReport {
    pub fn all_within(&self, n_se: f64) -> bool {
        self.valid && self.points.iter().all(|p| p.within(n_se))
    }
}

/// Linear-growth constant `c₀` of an Itô family with `Σ‖hₖ‖² <= c₀‖u‖²`, if any.
pub fn linear_growth_constant(spec: &ItoNoiseSpec) -> Option<f64> {
    match spec {
        ItoNoiseSpec::Zero => Some(0.0),
        ItoNoiseSpec::BandProjection { c_psi, theta, .. } if *theta == 0.0 => Some(*c_psi),
        _ => None,
    }
}

/// Ensemble mean of `‖u(t)‖²_{H¹}` against `‖u₀‖²_{H¹}·exp((Ξ̂+ĉ₀)(t−t₀) − 2∫λ)`.
pub fn decay_experiment<T: Real>(
    integrator: &Integrator<T>,
    u0: &GridFunction<T>,
    paths: usize,
    seed: u64,
    xi_hat: f64,
    c0_hat: f64,
) -> Result<(DecayReport, Vec<Trajectory<T>>)> {
    let drift = integrator.model.drift.config();
    if !(drift.epsilon > 0.0 && drift.theta > 0.5) {
        return Err(Error::Precondition(format!(
            "decay experiment needs epsilon > 0 and theta > 1/2 (got {}, {})",
            drift.epsilon, drift.theta
        )));
    }
    if linear_growth_constant(integrator.model.ito.spec()).is_none() {
        return Err(Error::Precondition(
            "decay experiment needs zero or constant-Ψ band_projection Itô noise".to_string(),
        ));
    }
    let t0 = integrator.scheme.t0;
    let h0 = sobolev_norm_sq(T::one(), u0).as_f64();
    let trajs = run_ensemble(integrator, u0, paths, seed);
    let counts = PathCounts::of(&trajs);
    let points = series_stats(&trajs, |r| r.h1_sq)
        .into_iter()
        .map(|p| {
            let bound = h0 * ((xi_hat + c0_hat) * (p.t - t0) - 2.0 * drift.damping.integral(t0, p.t)).exp();
            EnvelopePoint {
                t: p.t,
                mean: p.mean,
                se: p.se,
                count: p.count,
                bound,
                margin: bound - p.mean,
            }
        })
        .collect();
    Ok((
        DecayReport {
            note: CONDITIONING_NOTE.to_string(),
            valid: counts.completed == counts.total,
            counts,
            seed,
            xi_hat,
            c0_hat,
            h1_sq_initial: h0,
            points,
        },
        trajs,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovRunReport {
    pub note: String,
    pub condition: LyapunovReport,
    pub counts: PathCounts,
    pub seed: u64,
    pub v_initial: f64,
    pub points: Vec<EnvelopePoint>,
}

/// Ensemble mean of `V(‖u(t)‖²_{H^s})` against `V(‖u₀‖²_{H^s})·exp(∫g)`; refuses to
/// run when `condition` does not hold.
pub fn lyapunov_experiment<T: Real>(
    integrator: &Integrator<T>,
    u0: &GridFunction<T>,
    paths: usize,
    seed: u64,
    v: LyapunovFunction,
    g: &TimeProfile,
    condition: LyapunovReport,
) -> Result<(LyapunovRunReport, Vec<Trajectory<T>>)> {
    if !condition.holds {
        return Err(Error::Precondition(format!(
            "Lyapunov condition fails on the sample set: {}",
            serde_json::to_string(&condition)?
        )));
    }
    let t0 = integrator.scheme.t0;
    let s = integrator.record.diagnostic_s;
    let v0 = v.value(sobolev_norm_sq(T::lit(s), u0).as_f64());
    let trajs = run_ensemble(integrator, u0, paths, seed);
    let points = series_stats(&trajs, |r| v.value(r.hs_sq))
        .into_iter()
        .map(|p| {
            let bound = v0 * g.integral(t0, p.t).exp();
            EnvelopePoint {
                t: p.t,
                mean: p.mean,
                se: p.se,
                count: p.count,
                bound,
                margin: bound - p.mean,
            }
        })
        .collect();
    Ok((
        LyapunovRunReport {
            note: CONDITIONING_NOTE.to_string(),
            condition,
            counts: PathCounts::of(&trajs),
            seed,
            v_initial: v0,
            points,
        },
        trajs,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityPoint {
    pub delta: f64,
    pub mean_sq_diff: f64,
    pub se: f64,
    pub pairs: usize,
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub note: String,
    pub sigma: f64,
    pub seed: u64,
    pub t_eval: f64,
    pub points: Vec<StabilityPoint>,
    /// `max|u_δ − u|` at `δ = 0`; zero when paths are bitwise reproducible.
    pub zero_delta_max_abs: f64,
}

impl StabilityReport {
    /// Mean squared differences strictly decrease as `δ` decreases.
    pub fn monotone(&self) -> bool {
        let mut pts: Vec<&StabilityPoint> = self.points.iter().filter(|p| p.delta > 0.0).collect();
        pts.sort_by(|a, b| b.delta.total_cmp(&a.delta));
        pts.windows(2).all(|w| w[1].mean_sq_diff < w[0].mean_sq_diff)
    }
}

/// Couples `u₀ + δ·φ/‖φ‖_{H^σ}` with `u₀` on the same noise path and reports the
/// mean `‖u_δ(t_end) − u(t_end)‖²_{H^σ}` per `δ`.
pub fn stability_experiment<T: Real>(
    integrator: &Integrator<T>,
    u0: &GridFunction<T>,
    direction: &GridFunction<T>,
    deltas: &[f64],
    sigma: f64,
    paths: usize,
    seed: u64,
) -> Result<StabilityReport> {
    let sig = T::lit(sigma);
    let dn = sobolev_norm_sq(sig, direction).sqrt();
    if dn == T::zero() {
        return Err(Error::param("direction", "perturbation direction is zero"));
    }
    let unit = direction.scale(T::one() / dn);
    let base = run_ensemble(integrator, u0, paths, seed);
    let mut points = Vec::with_capacity(deltas.len());
    let mut zero_delta_max_abs = 0.0f64;
    for &delta in deltas {
        let ud = u0.axpy(T::lit(delta), &unit);
        let pert = run_ensemble(integrator, &ud, paths, seed);
        let mut diffs = Vec::with_capacity(paths);
        let mut excluded = 0;
        for (a, b) in base.iter().zip(&pert) {
            if !(a.completed() && b.completed()) {
                excluded += 1;
                continue;
            }
            let d = b.final_state.sub(&a.final_state);
            if delta == 0.0 {
                zero_delta_max_abs = zero_delta_max_abs.max(d.max_abs().as_f64());
            }
            diffs.push(sobolev_norm_sq(sig, &d).as_f64());
        }
        let (mean, se) = mean_se(&diffs);
        points.push(StabilityPoint {
            delta,
            mean_sq_diff: mean,
            se,
            pairs: diffs.len(),
            excluded,
        });
    }
    Ok(StabilityReport {
        note: CONDITIONING_NOTE.to_string(),
        sigma,
        seed,
        t_eval: integrator.scheme.t_end,
        points,
        zero_delta_max_abs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyDistance {
    pub distance: f64,
    pub bootstrap_se: f64,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn mean_pair_distance(a: &[Vec<f64>], ia: &[usize], b: &[Vec<f64>], ib: &[usize]) -> f64 {
    let mut s = 0.0;
    for &i in ia {
        for &j in ib {
            s += euclid(&a[i], &b[j]);
        }
    }
    s / (ia.len() * ib.len()) as f64
}

fn ed_indexed(a: &[Vec<f64>], ia: &[usize], b: &[Vec<f64>], ib: &[usize]) -> f64 {
    (2.0 * mean_pair_distance(a, ia, b, ib) - mean_pair_distance(a, ia, a, ia) - mean_pair_distance(b, ib, b, ib))
        .max(0.0)
}

/// Energy distance `2E‖X−Y‖ − E‖X−X′‖ − E‖Y−Y′‖` (V-statistic) with a bootstrap
/// standard error from `bootstrap` joint resamples.
pub fn energy_distance(a: &[Vec<f64>], b: &[Vec<f64>], bootstrap: usize, seed: u64) -> Result<EnergyDistance> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let dim = a[0].len();
    if let Some(bad) = a.iter().chain(b).find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch(dim, bad.len()));
    }
    let ia: Vec<usize> = (0..a.len()).collect();
    let ib: Vec<usize> = (0..b.len()).collect();
    let distance = ed_indexed(a, &ia, b, &ib);
    let reps: Vec<f64> = (0..bootstrap)
        .into_par_iter()
        .map(|r| {
            let mut rng = counter_rng(seed, 4, r as i64);
            let ra: Vec<usize> = (0..a.len()).map(|_| rng.gen_range(0..a.len())).collect();
            let rb: Vec<usize> = (0..b.len()).map(|_| rng.gen_range(0..b.len())).collect();
            ed_indexed(a, &ra, b, &rb)
        })
        .collect();
    let (_, se) = mean_se(&reps);
    let bootstrap_se = se * (bootstrap as f64).sqrt();
    Ok(EnergyDistance {
        distance,
        bootstrap_se: if bootstrap >= 2 { bootstrap_se } else { 0.0 },
    })
}

/// Summary vector `(‖u‖_{H¹}, ‖u‖_{H^s}, max u, min ∂ₓu)`.
pub fn summary_vector<T: Real>(u: &GridFunction<T>, s: f64) -> Vec<f64> {
    vec![
        sobolev_norm_sq(T::one(), u).sqrt().as_f64(),
        sobolev_norm_sq(T::lit(s), u).sqrt().as_f64(),
        u.max().as_f64(),
        derivative(u).min().as_f64(),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureCloud {
    pub start_horizon: f64,
    pub handoff: f64,
    pub points: Vec<Vec<f64>>,
    pub counts: PathCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub horizon_a: f64,
    pub horizon_b: f64,
    pub handoff: f64,
    pub distance: EnergyDistance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub note: String,
    pub valid: bool,
    pub seed: u64,
    pub t_eval: f64,
    pub clouds: Vec<MeasureCloud>,
    /// Successive-horizon distances for each handoff time.
    pub ladder: Vec<LadderStep>,
    /// Distances decrease with the smaller horizon, for every handoff.
    pub cauchy: bool,
    /// Distance between the handoff clouds at the largest horizon.
    pub n_independence: Option<LadderStep>,
    pub n_independent: bool,
    pub composition_checked: usize,
    pub composition_bitwise: bool,
}

/// Parameters of [`measure_experiment`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureParams {
    /// Horizons `T` (start window `[−T, −n]`).
    pub horizons: Vec<f64>,
    /// Handoff times `n`.
    pub handoffs: Vec<f64>,
    pub t_eval: f64,
    pub paths: usize,
    pub bootstrap: usize,
    /// Paths re-run in two legs for the propagator composition check.
    pub composition_paths: usize,
}

/// Backward Cesàro construction: each path starts from `u₀` at a uniformly
/// random lattice time in `[−T, −n]`, runs to `−n` (a draw from `ν_{T,−n}`),
/// then is pushed forward to `t_eval`.
pub fn measure_experiment<T: Real>(
    integrator: &Integrator<T>,
    u0: &GridFunction<T>,
    params: &MeasureParams,
    seed: u64,
) -> Result<MeasureReport> {
    let dt = integrator.scheme.dt;
    let origin = integrator.scheme.clock_origin;
    let s = integrator.record.diagnostic_s;
    if params.horizons.is_empty() || params.handoffs.is_empty() {
        return Err(Error::param("horizons", "need at least one horizon and one handoff"));
    }
    for &n in &params.handoffs {
        if !(n > 0.0) || params.horizons.iter().any(|&t| !(t > n)) || !(params.t_eval > -n) {
            return Err(Error::param(
                "handoffs",
                format!("need T > n > 0 and t_eval > -n (n = {n})"),
            ));
        }
    }
    let mut clouds = Vec::new();
    let mut valid = true;
    for (ni, &n) in params.handoffs.iter().enumerate() {
        for (ti, &horizon) in params.horizons.iter().enumerate() {
            let tag = derive_seed(seed, (ni * 1000 + ti) as u64);
            let lo = ((-horizon - origin) / dt).round() as i64;
            let hi = ((-n - origin) / dt).round() as i64;
            let outcomes: Vec<std::result::Result<Vec<f64>, (bool, f64, String)>> = (0..params.paths)
                .into_par_iter()
                .map(|p| {
                    let ps = path_seed(tag, p);
                    let start = lo + counter_rng(ps, 3, 0).gen_range(0..=(hi - lo));
                    let driver = integrator.driver(ps);
                    let leg1 = integrator.run_interval(u0, origin + start as f64 * dt, -n, &driver);
                    let leg2 = if leg1.completed() {
                        integrator.run_interval(&leg1.final_state, -n, params.t_eval, &driver)
                    } else {
                        leg1
                    };
                    if let Some(f) = &leg2.failure {
                        return Err((false, f.t, f.reason.clone()));
                    }
                    if let Some(b) = &leg2.blowup {
                        return Err((true, b.t_detect, format!("blow-up (code {})", b.kind.code())));
                    }
                    Ok(summary_vector(&leg2.final_state, s))
                })
                .collect();
            let counts = PathCounts {
                total: outcomes.len(),
                completed: outcomes.iter().filter(|o| o.is_ok()).count(),
                blowups: outcomes.iter().filter(|o| matches!(o, Err((true, ..)))).count(),
                failures: outcomes.iter().filter(|o| matches!(o, Err((false, ..)))).count(),
                excluded: outcomes
                    .iter()
                    .enumerate()
                    .filter_map(|(path, o)| {
                        o.as_ref().err().map(|(_, t, reason)| ExcludedPath {
                            path,
                            t: *t,
                            reason: reason.clone(),
                        })
                    })
                    .collect(),
            };
            valid &= counts.completed == counts.total;
            clouds.push(MeasureCloud {
                start_horizon: horizon,
                handoff: n,
                points: outcomes.into_iter().filter_map(|o| o.ok()).collect(),
                counts,
            });
        }
    }

    let mut ladder = Vec::new();
    let mut cauchy = true;
    for &n in &params.handoffs {
        let cs: Vec<&MeasureCloud> = clouds.iter().filter(|c| c.handoff == n).collect();
        let mut prev: Option<f64> = None;
        for (k, w) in cs.windows(2).enumerate() {
            let d = energy_distance(&w[0].points, &w[1].points, params.bootstrap, derive_seed(seed, 7000 + k as u64))?;
            if let Some(p) = prev {
                cauchy &= d.distance < p;
            }
            prev = Some(d.distance);
            ladder.push(LadderStep {
                horizon_a: w[0].start_horizon,
                horizon_b: w[1].start_horizon,
                handoff: n,
                distance: d,
            });
        }
    }

    let mut n_independence = None;
    let mut n_independent = true;
    if params.handoffs.len() >= 2 {
        let top = params.horizons.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let a = clouds
            .iter()
            .find(|c| c.start_horizon == top && c.handoff == params.handoffs[0])
            .expect("cloud");
        let b = clouds
            .iter()
            .find(|c| c.start_horizon == top && c.handoff == params.handoffs[1])
            .expect("cloud");
        let d = energy_distance(&a.points, &b.points, params.bootstrap, derive_seed(seed, 9001))?;
        n_independent = d.distance <= 3.0 * d.bootstrap_se;
        n_independence = Some(LadderStep {
            horizon_a: top,
            horizon_b: top,
            handoff: params.handoffs[1],
            distance: d,
        });
    }

    let (composition_checked, composition_bitwise) = composition_check(integrator, u0, params, seed);

    Ok(MeasureReport {
        note: CONDITIONING_NOTE.to_string(),
        valid,
        seed,
        t_eval: params.t_eval,
        clouds,
        ladder,
        cauchy,
        n_independence,
        n_independent,
        composition_checked,
        composition_bitwise,
    })
}

/// Pushes `u₀` from `−n` to `t_eval` directly and via an intermediate time,
/// on identical seeds, and compares summaries bitwise.
pub fn composition_check<T: Real>(
    integrator: &Integrator<T>,
    u0: &GridFunction<T>,
    params: &MeasureParams,
    seed: u64,
) -> (usize, bool) {
    let n = params.handoffs[0];
    let dt = integrator.scheme.dt;
    let s = integrator.record.diagnostic_s;
    let steps = ((params.t_eval + n) / dt).round() as i64;
    let results: Vec<bool> = (0..params.composition_paths)
        .into_par_iter()
        .map(|p| {
            let ps = path_seed(derive_seed(seed, 0xc0c0), p);
            let driver = integrator.driver(ps);
            let mid_steps = ChaCha8Rng::seed_from_u64(ps).gen_range(1..steps.max(2));
            let mid = -n + mid_steps as f64 * dt;
            let direct = integrator.run_interval(u0, -n, params.t_eval, &driver);
            let a = integrator.run_interval(u0, -n, mid, &driver);
            let b = integrator.run_interval(&a.final_state, mid, params.t_eval, &driver);
            let same_len = direct.steps == a.steps + b.steps;
            same_len
                && summary_vector(&direct.final_state, s)
                    .iter()
                    .zip(summary_vector(&b.final_state, s))
                    .all(|(x, y)| x.to_bits() == y.to_bits())
        })
        .collect();
    (results.len(), results.iter().all(|&b| b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuMode {
    pub k: i64,
    pub empirical: f64,
    pub theoretical: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuReport {
    pub note: String,
    pub samples: usize,
    pub modes: Vec<OuMode>,
}

impl OuReport {
    pub fn max_rel_err(&self) -> f64 {
        self.modes.iter().map(|m| m.rel_err).fold(0.0, f64::max)
    }
}

/// Per-mode stationary variance of the linear damped system driven by
/// additive band noise (`band_additive` family, nonlinearity off, constant
/// damping): `E|û(k)|² = c_psi·|φ̂(k)|²/(2λ₀)`.
///
/// Each path is sampled every `sample_every` time units after `burn_in`;
/// samples are pooled across paths and times.
pub fn ou_calibration<T: Real>(
    integrator: &Integrator<T>,
    paths: usize,
    seed: u64,
    burn_in: f64,
    sample_every: f64,
    samples_per_path: usize,
) -> Result<OuReport> {
    let model = &integrator.model;
    let cfg = model.drift.config();
    let lambda = match cfg.damping {
        TimeProfile::Constant { value } if value > 0.0 => value,
        _ => return Err(Error::Precondition("OU calibration needs constant positive damping".to_string())),
    };
    if cfg.nonlinear || cfg.epsilon != 0.0 || model.bank.iter().any(|q| q.is_active()) {
        return Err(Error::Precondition(
            "OU calibration needs the linear damped system (nonlinear off, epsilon = 0, no Q-bank)".to_string(),
        ));
    }
    let ItoNoiseSpec::BandAdditive { c_psi, field, channels } = model.ito.spec() else {
        return Err(Error::Precondition("OU calibration needs the band_additive family".to_string()));
    };
    let modes: Vec<(i64, f64)> = field
        .iter()
        .filter(|(k, _, _)| (*k as usize) <= *channels)
        .map(|&(k, re, im)| {
            let phi_hat_sq = (2.0 * std::f64::consts::PI).powi(2) * (re * re + im * im);
            (k, c_psi * phi_hat_sq / (2.0 * lambda))
        })
        .collect();
    let grid = integrator.model.drift.diffusion_symbol().n_points();
    let g = crate::spectral::TorusGrid::<T>::new(grid)?;
    let u0 = GridFunction::zeros(&g);
    let t0 = integrator.scheme.t0;
    let per_path: Vec<Vec<Vec<f64>>> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let driver = integrator.driver(path_seed(seed, p));
            let mut u = u0.clone();
            let mut t = t0;
            let mut out = Vec::with_capacity(samples_per_path);
            let mut target = t0 + burn_in;
            for _ in 0..samples_per_path {
                let tr = integrator.run_interval(&u, t, target, &driver);
                u = tr.final_state;
                t = target;
                out.push(modes.iter().map(|&(k, _)| u.coefficient(k).norm_sqr().as_f64()).collect());
                target += sample_every;
            }
            out
        })
        .collect();
    let pooled: Vec<&Vec<f64>> = per_path.iter().flatten().collect();
    let samples = pooled.len();
    let modes = modes
        .iter()
        .enumerate()
        .map(|(i, &(k, theoretical))| {
            let empirical = pooled.iter().map(|v| v[i]).sum::<f64>() / samples as f64;
            OuMode {
                k,
                empirical,
                theoretical,
                rel_err: (empirical - theoretical).abs() / theoretical,
            }
        })
        .collect();
    Ok(OuReport {
        note: CONDITIONING_NOTE.to_string(),
        samples,
        modes,
    })
}
