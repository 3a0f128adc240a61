use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use sch_core::config::{ConstantsParams, ExperimentConfig, ResolvedConfig};
use sch_core::dynamics::{estimate_theta, ThetaEstimate};
use sch_core::ensemble::{
    decay_experiment, ensemble_experiment, linear_growth_constant, lyapunov_experiment, measure_experiment,
    stability_experiment, MeasureParams, SeriesPoint,
};
use sch_core::integrator::Trajectory;
use sch_core::noise::{check_lyapunov_condition, lyapunov_samples, LyapunovConstants, LyapunovFunction};
use sch_core::psdo::{estimate_symmetrized_order, estimate_xi, XiEstimate};
use sch_core::spectral::{write_snapshot, TorusGrid};
use sch_core::Error;

use crate::output::{csv, sha256_hex, Manifest, OutputDir};
use crate::CliError;

/// Outcome reported through the exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Completed,
    NumericalFailure,
    PreconditionFailed,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::NumericalFailure => "numerical_failure",
            Status::PreconditionFailed => "precondition_failed",
        }
    }
}

/// Hash of the resolved configuration and the bank it references.
pub fn config_hash(cfg: &ResolvedConfig) -> Result<String, CliError> {
    let mut bytes = serde_json::to_vec(&cfg.config)?;
    bytes.extend(serde_json::to_vec(&cfg.bank)?);
    Ok(sha256_hex(&bytes))
}

#[derive(Serialize)]
struct Header<'a, R: Serialize> {
    experiment: &'a str,
    config_hash: &'a str,
    seed: u64,
    constants: &'a Value,
    report: R,
}

struct Ctx<'a> {
    cfg: &'a ResolvedConfig,
    out: OutputDir,
    hash: String,
    constants: Value,
    paths: usize,
    steps: u64,
}

impl Ctx<'_> {
    fn record<R: Serialize>(&mut self, file: &str, name: &str, report: R) -> Result<(), CliError> {
        let rec = Header {
            experiment: name,
            config_hash: &self.hash,
            seed: self.cfg.seed(),
            constants: &self.constants,
            report,
        };
        self.out.write_jsonl(file, &[rec])
    }
}

pub fn dispatch(cfg: &ResolvedConfig, subcommand: &str, out_dir: &Path) -> Result<Status, CliError> {
    let name = cfg.config.experiment.name();
    if name != subcommand {
        return Err(CliError::Config(vec![format!(
            "experiment.kind selects `{name}` but the subcommand is `{subcommand}`"
        )]));
    }
    let started = Instant::now();
    let mut ctx = Ctx {
        cfg,
        out: OutputDir::create(out_dir)?,
        hash: config_hash(cfg)?,
        constants: json!({"gamma0": cfg.gamma0, "s_threshold": cfg.s_threshold()}),
        paths: 0,
        steps: 0,
    };
    let status = match &cfg.config.experiment {
        ExperimentConfig::Simulate => simulate(&mut ctx)?,
        ExperimentConfig::Ensemble { paths } => ensemble(&mut ctx, *paths)?,
        ExperimentConfig::Decay { paths, constants } => decay(&mut ctx, *paths, constants)?,
        ExperimentConfig::Lyapunov {
            paths,
            constants,
            condition,
        } => {
            let v: LyapunovFunction = condition.v.parse()?;
            let grid = cfg.grid::<f64>()?;
            let integ = cfg.integrator_on(&grid)?;
            let s = cfg.config.diagnostics.s;
            let xi = xi_table(cfg, constants)?;
            let theta = theta_table(cfg, constants)?;
            let lc = LyapunovConstants {
                xi: max_of(xi.iter().map(|e| e.xi)),
                theta: max_of(theta.iter().map(|e| e.theta)),
                s,
            };
            ctx.constants["xi_hat"] = json!(lc.xi);
            ctx.constants["theta_hat"] = json!(lc.theta);
            let samples = lyapunov_samples(
                &grid,
                s,
                condition.n_samples,
                condition.w_range,
                condition.t_range,
                condition.sample_seed,
            );
            let report = check_lyapunov_condition(
                &integ.model.ito,
                &cfg.config.drift.damping,
                v,
                &condition.g,
                lc,
                &samples,
            );
            let u0 = cfg.initial(&grid)?;
            match lyapunov_experiment(&integ, &u0, *paths, cfg.seed(), v, &condition.g, report.clone()) {
                Ok((rep, trajs)) => {
                    ctx.paths = trajs.len();
                    ctx.steps = trajs.iter().map(|t| t.steps).sum();
                    ctx.out.write_text("lyapunov.csv", &envelope_csv(&rep.points))?;
                    ctx.record("lyapunov.jsonl", "lyapunov", &rep)?;
                    failure_status(&trajs)
                }
                Err(Error::Precondition(_)) => {
                    ctx.record("lyapunov_refused.jsonl", "lyapunov", &report)?;
                    Status::PreconditionFailed
                }
                Err(e) => return Err(e.into()),
            }
        }
        ExperimentConfig::Stability {
            paths,
            sigma,
            deltas,
            direction,
        } => {
            let grid = cfg.grid::<f64>()?;
            let integ = cfg.integrator_on(&grid)?;
            let u0 = cfg.initial(&grid)?;
            let dir = direction.build(&grid, cfg.base_dir.as_deref())?;
            let rep = stability_experiment(&integ, &u0, &dir, deltas, *sigma, *paths, cfg.seed())?;
            ctx.paths = *paths * (deltas.len() + 1);
            ctx.out.write_text(
                "stability.csv",
                &csv(
                    "delta,mean_sq_diff,se,pairs,excluded",
                    rep.points.iter().map(|p| {
                        [
                            p.delta.to_string(),
                            p.mean_sq_diff.to_string(),
                            p.se.to_string(),
                            p.pairs.to_string(),
                            p.excluded.to_string(),
                        ]
                    }),
                ),
            )?;
            let monotone = rep.monotone();
            ctx.record("stability.jsonl", "stability", json!({"monotone": monotone, "result": rep}))?;
            Status::Completed
        }
        ExperimentConfig::Measure {
            paths,
            horizons,
            handoffs,
            t_eval,
            bootstrap,
            composition_paths,
            ..
        } => {
            let grid = cfg.grid::<f64>()?;
            let integ = cfg.integrator_on(&grid)?;
            let u0 = cfg.initial(&grid)?;
            let params = MeasureParams {
                horizons: horizons.clone(),
                handoffs: handoffs.clone(),
                t_eval: *t_eval,
                paths: *paths,
                bootstrap: *bootstrap,
                composition_paths: *composition_paths,
            };
            let rep = measure_experiment(&integ, &u0, &params, cfg.seed())?;
            ctx.paths = rep.clouds.iter().map(|c| c.counts.total).sum();
            ctx.out.write_text(
                "ladder.csv",
                &csv(
                    "handoff,horizon_a,horizon_b,distance,bootstrap_se",
                    rep.ladder.iter().map(|l| {
                        [l.handoff, l.horizon_a, l.horizon_b, l.distance.distance, l.distance.bootstrap_se]
                    }),
                ),
            )?;
            let mut rows = Vec::new();
            for c in &rep.clouds {
                for p in &c.points {
                    let mut row = vec![c.handoff, c.start_horizon];
                    row.extend(p);
                    rows.push(row);
                }
            }
            ctx.out
                .write_text("clouds.csv", &csv("handoff,horizon,h1,hs,max_u,min_ux", rows))?;
            let valid = rep.valid;
            ctx.record("measure.jsonl", "measure", &rep)?;
            if valid {
                Status::Completed
            } else {
                Status::NumericalFailure
            }
        }
        ExperimentConfig::EstimateConstants {
            constants,
            order_resolutions,
        } => {
            let xi = xi_table(cfg, constants)?;
            let theta = theta_table(cfg, constants)?;
            let orders = if order_resolutions.is_empty() {
                Vec::new()
            } else {
                cfg.bank
                    .channels
                    .iter()
                    .enumerate()
                    .map(|(i, ch)| {
                        estimate_symmetrized_order(ch, order_resolutions, cfg.base_dir.as_deref())
                            .map(|o| json!({"channel": i, "admissible": o.admissible(), "order": o}))
                    })
                    .collect::<Result<Vec<_>, _>>()?
            };
            let xi_hat = max_of(xi.iter().map(|e| e.xi));
            let theta_hat = max_of(theta.iter().map(|e| e.theta));
            ctx.constants["xi_hat"] = json!(xi_hat);
            ctx.constants["theta_hat"] = json!(theta_hat);
            let value = json!({
                "config_hash": ctx.hash,
                "gamma0": cfg.gamma0,
                "s_threshold": cfg.s_threshold(),
                "eta": constants.eta,
                "xi_hat": xi_hat,
                "theta_hat": theta_hat,
                "stability": {
                    "xi": xi.iter().map(|e| json!({"n": e.n_points, "xi": e.xi})).collect::<Vec<_>>(),
                    "xi_relative_spread": relative_spread(xi.iter().map(|e| e.xi)),
                    "theta": theta.iter().map(|e| json!({"n": e.n_points, "theta": e.theta})).collect::<Vec<_>>(),
                    "theta_relative_spread": relative_spread(theta.iter().map(|e| e.theta)),
                },
                "xi_detail": xi,
                "theta_detail": theta,
                "symmetrized_orders": orders,
            });
            ctx.out.write_json("constants.json", &value)?;
            Status::Completed
        }
        ExperimentConfig::BlowupScan { resolutions } => blowup_scan(&mut ctx, resolutions)?,
    };
    let manifest = Manifest {
        subcommand: subcommand.to_string(),
        config_hash: ctx.hash.clone(),
        seed: cfg.seed(),
        constants: ctx.constants.clone(),
        wall_clock_s: started.elapsed().as_secs_f64(),
        paths: ctx.paths,
        steps: ctx.steps,
        status: status.label().to_string(),
    };
    ctx.out.finish(manifest)?;
    Ok(status)
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

fn relative_spread(it: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = it.collect();
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi <= 0.0 {
        0.0
    } else {
        (hi - lo) / hi
    }
}

fn xi_table(cfg: &ResolvedConfig, c: &ConstantsParams) -> Result<Vec<XiEstimate>, CliError> {
    c.resolutions
        .iter()
        .map(|&n| {
            let grid = TorusGrid::<f64>::new(n)?;
            let bank = cfg.bank.build(&grid, cfg.base_dir.as_deref())?;
            Ok(estimate_xi(&bank, c.eta, c.n_samples, c.seed)?)
        })
        .collect()
}

fn theta_table(cfg: &ResolvedConfig, c: &ConstantsParams) -> Result<Vec<ThetaEstimate>, CliError> {
    c.resolutions
        .iter()
        .map(|&n| {
            let grid = TorusGrid::<f64>::new(n)?;
            Ok(estimate_theta(
                &grid,
                cfg.config.diagnostics.s,
                c.n_samples,
                c.seed,
                cfg.config.drift.dealias,
            )?)
        })
        .collect()
}

fn failure_status<T: sch_core::Real>(trajs: &[Trajectory<T>]) -> Status {
    if trajs.iter().any(|t| t.failure.is_some()) {
        Status::NumericalFailure
    } else {
        Status::Completed
    }
}

fn series_csv(cols: &[(&str, &[SeriesPoint])]) -> String {
    let mut header = String::from("t");
    for (name, _) in cols {
        header.push_str(&format!(",{name}_mean,{name}_se,{name}_count"));
    }
    let len = cols.first().map_or(0, |c| c.1.len());
    csv(
        &header,
        (0..len).map(|i| {
            let mut row = vec![cols[0].1[i].t.to_string()];
            for (_, pts) in cols {
                let p = &pts[i];
                row.extend([p.mean.to_string(), p.se.to_string(), p.count.to_string()]);
            }
            row
        }),
    )
}

fn envelope_csv(points: &[sch_core::ensemble::EnvelopePoint]) -> String {
    csv(
        "t,mean,se,count,bound,margin",
        points.iter().map(|p| {
            [
                p.t.to_string(),
                p.mean.to_string(),
                p.se.to_string(),
                p.count.to_string(),
                p.bound.to_string(),
                p.margin.to_string(),
            ]
        }),
    )
}

fn simulate(ctx: &mut Ctx) -> Result<Status, CliError> {
    let cfg = ctx.cfg;
    let grid = cfg.grid::<f64>()?;
    let integ = cfg.integrator_on(&grid)?;
    let u0 = cfg.initial(&grid)?;
    let traj = integ.run(&u0, cfg.seed());
    ctx.paths = 1;
    ctx.steps = traj.steps;
    ctx.out.write_text("trajectory.csv", &traj.to_csv())?;
    if !traj.snapshots.is_empty() {
        let mut bytes = Vec::new();
        for s in &traj.snapshots {
            write_snapshot(&mut bytes, s)?;
        }
        ctx.out.write_bytes("snapshots.schg", &bytes)?;
    }
    ctx.record(
        "simulate.jsonl",
        "simulate",
        json!({
            "steps": traj.steps,
            "halvings": traj.halvings,
            "t_final": traj.t_final,
            "blowup": traj.blowup,
            "failure": traj.failure,
        }),
    )?;
    Ok(failure_status(std::slice::from_ref(&traj)))
}

fn ensemble(ctx: &mut Ctx, paths: usize) -> Result<Status, CliError> {
    let cfg = ctx.cfg;
    let grid = cfg.grid::<f64>()?;
    let integ = cfg.integrator_on(&grid)?;
    let u0 = cfg.initial(&grid)?;
    let (rep, trajs) = ensemble_experiment(&integ, &u0, paths, cfg.seed());
    ctx.paths = trajs.len();
    ctx.steps = trajs.iter().map(|t| t.steps).sum();
    ctx.out.write_text(
        "ensemble.csv",
        &series_csv(&[("h1_sq", &rep.h1_sq), ("hs_sq", &rep.hs_sq), ("w1inf", &rep.w1inf)]),
    )?;
    ctx.record("ensemble.jsonl", "ensemble", &rep)?;
    Ok(failure_status(&trajs))
}

fn decay(ctx: &mut Ctx, paths: usize, constants: &ConstantsParams) -> Result<Status, CliError> {
    let cfg = ctx.cfg;
    let grid = cfg.grid::<f64>()?;
    let integ = cfg.integrator_on(&grid)?;
    let u0 = cfg.initial(&grid)?;
    let xi = xi_table(cfg, constants)?;
    let xi_hat = max_of(xi.iter().map(|e| e.xi));
    let c0_hat = linear_growth_constant(&cfg.config.noise.ito)
        .ok_or_else(|| Error::Precondition("decay experiment needs a linear-growth Itô family".to_string()))?;
    ctx.constants["xi_hat"] = json!(xi_hat);
    ctx.constants["c0_hat"] = json!(c0_hat);
    let (rep, trajs) = decay_experiment(&integ, &u0, paths, cfg.seed(), xi_hat, c0_hat)?;
    ctx.paths = trajs.len();
    ctx.steps = trajs.iter().map(|t| t.steps).sum();
    ctx.out.write_text("decay.csv", &envelope_csv(&rep.points))?;
    let within = rep.all_within(3.0);
    ctx.record("decay.jsonl", "decay", json!({"within_3se": within, "result": rep}))?;
    Ok(failure_status(&trajs))
}

fn blowup_scan(ctx: &mut Ctx, resolutions: &[usize]) -> Result<Status, CliError> {
    let cfg = ctx.cfg;
    let mut rows = Vec::new();
    let mut status = Status::Completed;
    for &n in resolutions {
        let grid = TorusGrid::<f64>::new(n)?;
        let integ = cfg.integrator_on(&grid)?;
        let u0 = cfg.initial(&grid)?;
        let traj = integ.run(&u0, cfg.seed());
        ctx.paths += 1;
        ctx.steps += traj.steps;
        if traj.failure.is_some() {
            status = Status::NumericalFailure;
        }
        let at_detect = traj
            .blowup
            .as_ref()
            .and_then(|b| traj.rows.iter().find(|r| r.t == b.t_detect));
        rows.push(json!({
            "n": n,
            "blowup": traj.blowup,
            "min_ux_at_detect": at_detect.map(|r| r.min_ux),
            "max_u_at_detect": at_detect.map(|r| r.max_u),
            "failure": traj.failure,
        }));
        ctx.out.write_text(&format!("trajectory_n{n}.csv"), &traj.to_csv())?;
    }
    let finest = resolutions.iter().enumerate().max_by_key(|(_, &n)| n).map(|(i, _)| i).unwrap_or(0);
    let t_ref = rows[finest]["blowup"]["t_detect"].as_f64();
    for r in &mut rows {
        let rel = match (r["blowup"]["t_detect"].as_f64(), t_ref) {
            (Some(t), Some(tr)) if tr != 0.0 => Some((t - tr).abs() / tr),
            _ => None,
        };
        r["relative_to_finest"] = json!(rel);
    }
    ctx.record("blowup_scan.jsonl", "blowup-scan", json!({"resolutions": rows}))?;
    Ok(status)
}
