//! The experiment drivers behind each CLI subcommand. Each one validates its
//! configuration fully before computing, writes its artifacts (snapshots,
//! monitor CSVs, summary JSON) into the output directory, and reports
//! whether every requested monitor passed.

use crate::config::{Config, ConfigError};
use crate::output;
use serde_json::{json, Map, Value};
use sigmakflow_core::diagnostics::{self, MonitorSeries};
use sigmakflow_core::error::CoreError;
use sigmakflow_core::expander;
use sigmakflow_core::flow::{self, FieldData, FlowState, Formulation};
use sigmakflow_core::geometry;
use sigmakflow_core::grid::{BallField2D, BallGrid, RadialField};
use sigmakflow_core::legendre;
use sigmakflow_core::params::SpeedParams;
use sigmakflow_core::report::json_num;
use sigmakflow_core::snapshot;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration: exit 2.
    Config(String),
    /// Solver failure: exit 1, with a state dump when one could be written.
    Solver { message: String, dump: Option<PathBuf> },
    Io(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Domain(_) | CoreError::Parse(_) | CoreError::GridMismatch(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Solver { message: other.to_string(), dump: None },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub struct Outcome {
    pub pass: bool,
}

fn params_from(cfg: &mut Config) -> Result<SpeedParams, CliError> {
    let n = cfg
        .get_usize("params.n")?
        .ok_or_else(|| ConfigError("missing params.n".into()))?;
    let k = cfg
        .get_usize("params.k")?
        .ok_or_else(|| ConfigError("missing params.k".into()))?;
    let alpha = cfg.req_f64("params.alpha")?;
    Ok(SpeedParams::new(n, k, alpha).map_err(|e| ConfigError(e.to_string()))?)
}

enum GridSpec {
    Radial { rmax: f64, cells: usize },
    Ball { r: f64, h: f64 },
}

fn grid_from(cfg: &mut Config) -> Result<GridSpec, CliError> {
    let kind = cfg.req_str("grid.kind")?;
    match kind.as_str() {
        "radial" => {
            let rmax = cfg.req_f64("grid.r")?;
            let cells = match cfg.get_usize("grid.cells")? {
                Some(c) => c,
                None => {
                    let h = cfg.req_f64("grid.h")?;
                    (rmax / h).round() as usize
                }
            };
            if cells < 8 {
                return Err(ConfigError("radial grid needs at least 8 cells".into()).into());
            }
            Ok(GridSpec::Radial { rmax, cells })
        }
        "ball2d" => {
            let r = cfg.req_f64("grid.r")?;
            let h = cfg.req_f64("grid.h")?;
            Ok(GridSpec::Ball { r, h })
        }
        other => Err(ConfigError(format!("grid.kind {other:?} (radial | ball2d)")).into()),
    }
}

enum Initial {
    /// shift + sqrt(a^2 + r^2); dual form -a w* - shift.
    Hyperboloid { a: f64, shift: f64 },
    /// -a w* - shift (1 + amp cos(m theta) rho^m), dual side only.
    Anisotropic { a: f64, shift: f64, amp: f64, m: usize },
    Snapshot(FlowState),
}

fn initial_from(cfg: &mut Config, p: &SpeedParams) -> Result<Initial, CliError> {
    let kind = cfg.req_str("initial.kind")?;
    match kind.as_str() {
        "hyperboloid" | "dual-hyperboloid" => {
            let a = match cfg.get_f64("initial.a")? {
                Some(a) if a > 0.0 => a,
                Some(a) => return Err(ConfigError(format!("initial.a = {a} must be > 0")).into()),
                None => expander::hyperboloid_radius(p),
            };
            let shift = cfg.get_f64("initial.shift")?.unwrap_or(0.0);
            Ok(Initial::Hyperboloid { a, shift })
        }
        "anisotropic" => {
            let a = cfg.get_f64("initial.a")?.unwrap_or_else(|| expander::hyperboloid_radius(p));
            let shift = cfg.req_f64("initial.shift")?;
            let amp = cfg.req_f64("initial.amp")?;
            let m = cfg.get_usize("initial.m")?.unwrap_or(2);
            if amp.abs() >= 0.5 * shift.max(0.1) {
                return Err(ConfigError("initial.amp too large for convexity".into()).into());
            }
            Ok(Initial::Anisotropic { a, shift, amp, m })
        }
        "snapshot" => {
            let path = cfg.req_str("initial.path")?;
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ConfigError(format!("initial.path {path}: {e}")))?;
            Ok(Initial::Snapshot(snapshot::read_snapshot(&text)?))
        }
        other => Err(ConfigError(format!(
            "initial.kind {other:?} (hyperboloid | dual-hyperboloid | anisotropic | snapshot)"
        ))
        .into()),
    }
}

fn primal_radial_initial(init: &Initial, rmax: f64, cells: usize) -> Result<RadialField, CliError> {
    match init {
        Initial::Hyperboloid { a, shift } => {
            let (a, shift) = (*a, *shift);
            Ok(RadialField::from_fn(rmax, cells, move |r| shift + (a * a + r * r).sqrt()))
        }
        Initial::Snapshot(st) => st
            .field
            .as_radial()
            .cloned()
            .ok_or_else(|| ConfigError("snapshot is not a radial field".into()).into()),
        Initial::Anisotropic { .. } => {
            Err(ConfigError("anisotropic data is dual-side only".into()).into())
        }
    }
}

fn dual_radial_initial(init: &Initial, r: f64, cells: usize) -> Result<RadialField, CliError> {
    match init {
        Initial::Hyperboloid { a, shift } => {
            let (a, shift) = (*a, *shift);
            Ok(RadialField::from_fn(r, cells, move |rho| {
                -a * (1.0 - rho * rho).sqrt() - shift
            }))
        }
        Initial::Snapshot(st) => st
            .field
            .as_radial()
            .cloned()
            .ok_or_else(|| ConfigError("snapshot is not a radial field".into()).into()),
        Initial::Anisotropic { .. } => {
            Err(ConfigError("anisotropic data needs the ball2d grid".into()).into())
        }
    }
}

fn dual_ball_initial(init: &Initial, r: f64, h: f64) -> Result<BallField2D, CliError> {
    let grid = BallGrid::new(r, h)?;
    match init {
        Initial::Hyperboloid { a, shift } => {
            let (a, shift) = (*a, *shift);
            Ok(BallField2D::from_fn(grid, move |x, y| {
                -a * (1.0 - x * x - y * y).sqrt() - shift
            }))
        }
        Initial::Anisotropic { a, shift, amp, m } => {
            let (a, shift, amp, m) = (*a, *shift, *amp, *m as i32);
            let f = BallField2D::from_fn(grid, move |x, y| {
                let rho2 = x * x + y * y;
                let theta = y.atan2(x);
                -a * (1.0 - rho2).sqrt()
                    - shift * (1.0 + amp * (m as f64 * theta).cos() * rho2.powi(m) / rho2.max(1e-300).powi(m / 2))
            });
            // simple sanity: the perturbed field must still be convex
            let dm = geometry::dual_curvature_matrix(&f);
            if !dm.non_positive.is_empty() {
                return Err(ConfigError("anisotropic data is not convex on this grid".into()).into());
            }
            Ok(f)
        }
        Initial::Snapshot(st) => match &st.field {
            FieldData::Ball(f) => Ok(f.clone()),
            _ => Err(ConfigError("snapshot is not a ball field".into()).into()),
        },
    }
}

/// Dual of the self-expander with asymptotic constant `c`, sampled per cell
/// radius; used as the upper barrier of the comparison sandwich.
fn expander_dual_profile(
    p: &SpeedParams,
    c: f64,
    r_trunc: f64,
    tol: f64,
) -> Result<RadialField, CliError> {
    let sol = expander::solve_radial_shooting(p, c, r_trunc, tol)?;
    Ok(legendre::legendre_transform_radial(&sol.profile, 0.98, 4096)?)
}

fn verdict_entries(monitors: &[&MonitorSeries]) -> (Vec<Value>, bool) {
    let mut pass = true;
    let mut list = Vec::new();
    for m in monitors {
        pass &= m.verdict.pass;
        list.push(m.verdict_json());
    }
    (list, pass)
}

fn base_summary(subcommand: &str, p: &SpeedParams) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("subcommand".into(), json!(subcommand));
    m.insert(
        "params".into(),
        json!({"n": p.n, "k": p.k, "alpha": json_num(p.alpha)}),
    );
    m
}

pub fn run(subcommand: &str, mut cfg: Config, out_dir: &Path) -> Result<Outcome, CliError> {
    output::ensure_dir(out_dir)?;
    let started = std::time::Instant::now();
    let (mut summary, pass) = match subcommand {
        "check-condition-a" => check_condition_a(&mut cfg, out_dir),
        "flow-dual" => flow_run(&mut cfg, out_dir, false),
        "flow-normalized" => flow_run(&mut cfg, out_dir, true),
        "flow-primal-radial" => flow_primal(&mut cfg, out_dir),
        "expander-radial" => expander_radial(&mut cfg, out_dir),
        "expander-limit" => expander_limit(&mut cfg, out_dir),
        "legendre" => legendre_cmd(&mut cfg, out_dir),
        "diagnose" => diagnose(&mut cfg, out_dir),
        "compare-exact" => compare_exact(&mut cfg, out_dir),
        other => Err(CliError::Config(format!("unknown subcommand {other:?}"))),
    }?;
    // wall time is informational; reproducibility claims exclude it
    summary.insert("wall_time_s".into(), json_num(started.elapsed().as_secs_f64()));
    output::write_summary(out_dir, &Value::Object(summary))?;
    Ok(Outcome { pass })
}

fn check_condition_a(cfg: &mut Config, out_dir: &Path) -> Result<(Map<String, Value>, bool), CliError> {
    let p = params_from(cfg)?;
    let GridSpec::Radial { rmax, cells } = grid_from(cfg)? else {
        return Err(ConfigError("check-condition-a needs a radial grid".into()).into());
    };
    let init = initial_from(cfg, &p)?;
    let declared_c = cfg.req_f64("conditiona.declared-c")?;
    cfg_done(cfg)?;
    let u0 = primal_radial_initial(&init, rmax, cells)?;
    let rep = geometry::condition_a_check(&u0, &p, declared_c);
    let mut summary = base_summary("check-condition-a", &p);
    summary.insert(
        "results".into(),
        json!({
            "holds": rep.holds,
            "spacelike": rep.spacelike,
            "strictly_convex": rep.strictly_convex,
            "phi_mean": json_num(rep.phi_mean),
            "c0": json_num(rep.c0),
            "big_c": json_num(rep.big_c),
            "declared_c": json_num(rep.declared_c),
        }),
    );
    summary.insert("pass".into(), json!(rep.holds));
    Ok((summary, rep.holds))
}

fn cfg_done(cfg: &mut Config) -> Result<(), CliError> {
    let taken = std::mem::replace(cfg, Config::parse("").unwrap());
    taken.finish()?;
    Ok(())
}

fn flow_run(cfg: &mut Config, out_dir: &Path, normalized: bool) -> Result<(Map<String, Value>, bool), CliError> {
    let p = params_from(cfg)?;
    let gridspec = grid_from(cfg)?;
    let init = initial_from(cfg, &p)?;
    let t_end = cfg.req_f64("time.t-end")?;
    let snapshot_times = cfg.get_f64_list("time.snapshot-times")?.unwrap_or_default();
    let record_every = cfg.get_usize("output.record-every")?.unwrap_or(100);
    let rk2 = cfg.get_bool("time.rk2")?.unwrap_or(false);
    let barriers = cfg.get_bool("monitors.barriers")?.unwrap_or(false);
    let track_fx = cfg.get_bool("monitors.boundary-extremum")?.unwrap_or(false);
    let barrier_tol = cfg.get_f64("tolerances.barrier")?.unwrap_or(1e-8);
    let fx_tol = cfg.get_f64("tolerances.boundary-extremum")?.unwrap_or(1e-6);
    let residual_tol = cfg.get_f64("tolerances.residual-sign")?.unwrap_or(1e-8);
    let stop_residual = cfg.get_f64("tolerances.stop-residual")?;
    let shoot_r = cfg.get_f64("expander.r-trunc")?.unwrap_or(50.0);
    let shoot_tol = cfg.get_f64("expander.tol")?.unwrap_or(1e-8);
    let write_snaps = cfg.get_bool("output.snapshots")?.unwrap_or(true);
    cfg_done(cfg)?;

    // barrier bases need the expander with the matching asymptotic constant
    let barrier_c = match &init {
        Initial::Hyperboloid { shift, .. } => *shift,
        Initial::Anisotropic { shift, .. } => *shift,
        Initial::Snapshot(_) => 0.0,
    };
    let mut monitors: Vec<MonitorSeries> = Vec::new();
    let mut summary = base_summary(if normalized { "flow-normalized" } else { "flow-dual" }, &p);
    let mut results = Map::new();
    let formulation = if normalized { Formulation::Normalized } else { Formulation::Dual };
    let pass;
    match gridspec {
        GridSpec::Ball { r, h } => {
            let initial = dual_ball_initial(&init, r, h)?;
            flow::validate_dual_initial(&FieldData::Ball(initial.clone()))?;
            let (lo, hi) = if barriers {
                let exp_dual = expander_dual_profile(&p, barrier_c, shoot_r, shoot_tol)?;
                let mut hi = vec![f64::NAN; initial.values.len()];
                for idx in 0..hi.len() {
                    if initial.grid.kind[idx] != sigmakflow_core::grid::CellKind::Outside {
                        let (x, y) = initial.grid.coords(idx);
                        hi[idx] = exp_dual.interp((x * x + y * y).sqrt())?;
                    }
                }
                (Some(initial.values.clone()), Some(hi))
            } else {
                (None, None)
            };
            let cfgb = flow::BallRunConfig {
                t_end,
                snapshot_times: snapshot_times.clone(),
                record_every,
                rk2,
                stop_residual,
                lower_barrier: lo,
                upper_barrier: hi,
                barrier_uses_scale: !normalized,
                track_fx,
                ..Default::default()
            };
            let out = run_ball_dump(&initial, p, &cfgb, normalized, out_dir)?;
            finish_flow_common(
                &mut monitors,
                &mut results,
                barriers,
                track_fx,
                normalized,
                barrier_tol,
                fx_tol,
                residual_tol,
                out.barrier_series.clone(),
                out.barrier_lower_worst,
                out.barrier_upper_worst,
                out.fx_interior_max,
                out.fx_interior_min,
                out.fx_pb_max,
                out.fx_pb_min,
                out.residual_history.clone(),
                out.residual_integral,
                out.residual_min_seen,
                out.steps,
                out.t,
            );
            if write_snaps {
                let state = FlowState {
                    t: if normalized { p.time_from_tau(out.t) } else { out.t },
                    tau: if normalized { out.t } else { p.time_change(out.t) },
                    field: FieldData::Ball(out.final_field),
                    formulation,
                    params: p,
                };
                output::write_state(out_dir, "final", &state)?;
                for (i, (ts, f)) in out.snapshots.iter().enumerate() {
                    let st = FlowState {
                        t: if normalized { p.time_from_tau(*ts) } else { *ts },
                        tau: if normalized { *ts } else { p.time_change(*ts) },
                        field: FieldData::Ball(f.clone()),
                        formulation,
                        params: p,
                    };
                    output::write_state(out_dir, &format!("snap_{i:04}"), &st)?;
                }
            }
        }
        GridSpec::Radial { rmax, cells } => {
            if rmax >= 1.0 {
                return Err(ConfigError("dual-side radial grid needs r < 1".into()).into());
            }
            let initial = dual_radial_initial(&init, rmax, cells)?;
            flow::validate_dual_initial(&FieldData::Radial(initial.clone()))?;
            let (lo, hi) = if barriers {
                let exp_dual = expander_dual_profile(&p, barrier_c, shoot_r, shoot_tol)?;
                let mut hi = vec![0.0; initial.len()];
                for (i, slot) in hi.iter_mut().enumerate() {
                    *slot = exp_dual.interp(initial.radius(i))?;
                }
                (Some(initial.values.clone()), Some(hi))
            } else {
                (None, None)
            };
            let cfgr = flow::RadialRunConfig {
                t_end,
                snapshot_times: snapshot_times.clone(),
                record_every,
                rk2,
                stop_residual,
                lower_barrier: lo,
                upper_barrier: hi,
                barrier_uses_scale: !normalized,
                track_fx,
                ..Default::default()
            };
            let out = run_radial_dump(&initial, p, &cfgr, normalized, out_dir)?;
            finish_flow_common(
                &mut monitors,
                &mut results,
                barriers,
                track_fx,
                normalized,
                barrier_tol,
                fx_tol,
                residual_tol,
                out.barrier_series.clone(),
                out.barrier_lower_worst,
                out.barrier_upper_worst,
                out.fx_interior_max,
                out.fx_interior_min,
                out.fx_pb_max,
                out.fx_pb_min,
                out.residual_history.clone(),
                out.residual_integral,
                out.residual_min_seen,
                out.steps,
                out.t,
            );
            if write_snaps {
                let state = FlowState {
                    t: if normalized { p.time_from_tau(out.t) } else { out.t },
                    tau: if normalized { out.t } else { p.time_change(out.t) },
                    field: FieldData::Radial(out.final_field),
                    formulation,
                    params: p,
                };
                output::write_state(out_dir, "final", &state)?;
            }
        }
    }
    let refs: Vec<&MonitorSeries> = monitors.iter().collect();
    let (verdicts, all_pass) = verdict_entries(&refs);
    pass = all_pass;
    output::emit_plot_data(&monitors, &out_dir.join("plots"))?;
    summary.insert("results".into(), Value::Object(results));
    summary.insert("monitors".into(), Value::Array(verdicts));
    summary.insert("pass".into(), json!(pass));
    Ok((summary, pass))
}

/// Run the 2-D driver; on solver failure dump the initial state for
/// diagnosis and surface the dump path.
fn run_ball_dump(
    initial: &BallField2D,
    p: SpeedParams,
    cfgb: &flow::BallRunConfig,
    normalized: bool,
    out_dir: &Path,
) -> Result<flow::BallRunResult, CliError> {
    let go = if normalized { flow::run_normalized_ball } else { flow::run_dual_ball };
    go(initial, p, cfgb).map_err(|e| {
        let state = FlowState::new(
            FieldData::Ball(initial.clone()),
            if normalized { Formulation::Normalized } else { Formulation::Dual },
            p,
        );
        let dump = output::write_state(out_dir, "failed_initial", &state).ok();
        CliError::Solver { message: e.to_string(), dump }
    })
}

fn run_radial_dump(
    initial: &RadialField,
    p: SpeedParams,
    cfgr: &flow::RadialRunConfig,
    normalized: bool,
    out_dir: &Path,
) -> Result<flow::RadialRunResult, CliError> {
    let go = if normalized { flow::run_normalized_radial } else { flow::run_dual_radial };
    go(initial, p, cfgr).map_err(|e| {
        let state = FlowState::new(
            FieldData::Radial(initial.clone()),
            if normalized { Formulation::Normalized } else { Formulation::Dual },
            p,
        );
        let dump = output::write_state(out_dir, "failed_initial", &state).ok();
        CliError::Solver { message: e.to_string(), dump }
    })
}

#[allow(clippy::too_many_arguments)]
fn finish_flow_common(
    monitors: &mut Vec<MonitorSeries>,
    results: &mut Map<String, Value>,
    barriers: bool,
    track_fx: bool,
    normalized: bool,
    barrier_tol: f64,
    fx_tol: f64,
    residual_tol: f64,
    barrier_series: Vec<(f64, f64, f64)>,
    lower_worst: f64,
    upper_worst: f64,
    fx_imax: f64,
    fx_imin: f64,
    fx_pmax: f64,
    fx_pmin: f64,
    residual_history: Vec<(f64, f64)>,
    residual_integral: f64,
    residual_min: f64,
    steps: usize,
    t_final: f64,
) {
    results.insert("steps".into(), json!(steps));
    results.insert("t_final".into(), json_num(t_final));
    if barriers {
        let times: Vec<f64> = barrier_series.iter().map(|x| x.0).collect();
        let lows: Vec<f64> = barrier_series.iter().map(|x| x.1).collect();
        let ups: Vec<f64> = barrier_series.iter().map(|x| x.2).collect();
        monitors.push(MonitorSeries {
            name: "barrier_lower_margin".into(),
            times: times.clone(),
            values: lows,
            verdict: diagnostics::Verdict {
                pass: lower_worst >= -barrier_tol,
                predicate: format!("worst lower-barrier margin {lower_worst:.3e} >= -tol"),
                tolerance: barrier_tol,
            },
        });
        monitors.push(MonitorSeries {
            name: "barrier_upper_margin".into(),
            times,
            values: ups,
            verdict: diagnostics::Verdict {
                pass: upper_worst >= -barrier_tol,
                predicate: format!("worst upper-barrier margin {upper_worst:.3e} >= -tol"),
                tolerance: barrier_tol,
            },
        });
        results.insert("barrier_lower_worst".into(), json_num(lower_worst));
        results.insert("barrier_upper_worst".into(), json_num(upper_worst));
    }
    if track_fx && !normalized {
        let verdict = diagnostics::fx_extremum_verdict(fx_imax, fx_imin, fx_pmax, fx_pmin, fx_tol);
        monitors.push(MonitorSeries {
            name: "boundary_extremum".into(),
            times: vec![t_final],
            values: vec![fx_imax],
            verdict,
        });
        results.insert(
            "fx".into(),
            json!({
                "interior_max": json_num(fx_imax),
                "interior_min": json_num(fx_imin),
                "pb_max": json_num(fx_pmax),
                "pb_min": json_num(fx_pmin),
            }),
        );
    }
    if normalized {
        let times: Vec<f64> = residual_history.iter().map(|x| x.0).collect();
        let sups: Vec<f64> = residual_history.iter().map(|x| x.1).collect();
        monitors.push(MonitorSeries {
            name: "residual_sign".into(),
            times,
            values: sups,
            verdict: diagnostics::Verdict {
                pass: residual_min >= -residual_tol,
                predicate: format!("min H~ over run {residual_min:.3e} >= -tol"),
                tolerance: residual_tol,
            },
        });
        results.insert("residual_min".into(), json_num(residual_min));
        results.insert("residual_integral".into(), json_num(residual_integral));
    }
}

fn flow_primal(cfg: &mut Config, out_dir: &Path) -> Result<(Map<String, Value>, bool), CliError> {
    let p = params_from(cfg)?;
    let GridSpec::Radial { rmax, cells } = grid_from(cfg)? else {
        return Err(ConfigError("flow-primal-radial needs a radial grid".into()).into());
    };
    let init = initial_from(cfg, &p)?;
    let t_end = cfg.req_f64("time.t-end")?;
    let snapshot_times = cfg.get_f64_list("time.snapshot-times")?.unwrap_or_default();
    let boundary_kind = cfg
        .get_str("boundary.kind")
        .unwrap_or_else(|| "exact-self-similar".to_string());
    let kappa_ceiling = cfg.get_f64("monitors.kappa-ceiling")?;
    let write_snaps = cfg.get_bool("output.snapshots")?.unwrap_or(true);
    cfg_done(cfg)?;
    let initial = primal_radial_initial(&init, rmax, cells)?;
    let boundary: Box<dyn Fn(f64) -> f64> = match boundary_kind.as_str() {
        "exact-self-similar" => match &init {
            Initial::Hyperboloid { a, shift } if *shift == 0.0 => {
                let a_exp = expander::hyperboloid_radius(&p);
                if (a - a_exp).abs() > 1e-12 {
                    return Err(ConfigError(format!(
                        "exact-self-similar boundary needs initial.a = expander radius {a_exp}"
                    ))
                    .into());
                }
                let (a, pp) = (*a, p);
                Box::new(move |t: f64| {
                    let aa = pp.scale_factor(t);
                    (a * a * aa * aa + rmax * rmax).sqrt()
                })
            }
            _ => {
                return Err(ConfigError(
                    "exact-self-similar boundary needs hyperboloid initial data with shift 0".into(),
                )
                .into())
            }
        },
        "frozen" => {
            let val = initial.values[initial.last_index()];
            Box::new(move |_| val)
        }
        other => {
            return Err(
                ConfigError(format!("boundary.kind {other:?} (exact-self-similar | frozen)")).into()
            )
        }
    };
    let cfgr = flow::RadialRunConfig {
        t_end,
        snapshot_times: snapshot_times.clone(),
        ..Default::default()
    };
    let out = flow::run_primal_radial(&initial, p, boundary.as_ref(), &cfgr).map_err(|e| {
        let state =
            FlowState::new(FieldData::Radial(initial.clone()), Formulation::PrimalRadial, p);
        let dump = output::write_state(out_dir, "failed_initial", &state).ok();
        CliError::Solver { message: e.to_string(), dump }
    })?;
    let mut monitors = Vec::new();
    if let Some(ceiling) = kappa_ceiling {
        monitors.push(MonitorSeries {
            name: "kappa_max".into(),
            times: vec![out.t],
            values: vec![out.kappa_max_seen],
            verdict: diagnostics::Verdict {
                pass: out.kappa_max_seen <= ceiling,
                predicate: format!("max principal curvature {:.6e} <= ceiling", out.kappa_max_seen),
                tolerance: ceiling,
            },
        });
    }
    if write_snaps {
        let state = FlowState {
            t: out.t,
            tau: p.time_change(out.t),
            field: FieldData::Radial(out.final_field.clone()),
            formulation: Formulation::PrimalRadial,
            params: p,
        };
        output::write_state(out_dir, "final", &state)?;
        for (i, (ts, f)) in out.snapshots.iter().enumerate() {
            let st = FlowState {
                t: *ts,
                tau: p.time_change(*ts),
                field: FieldData::Radial(f.clone()),
                formulation: Formulation::PrimalRadial,
                params: p,
            };
            output::write_state(out_dir, &format!("snap_{i:04}"), &st)?;
        }
    }
    let refs: Vec<&MonitorSeries> = monitors.iter().collect();
    let (verdicts, pass) = verdict_entries(&refs);
    output::emit_plot_data(&monitors, &out_dir.join("plots"))?;
    let mut summary = base_summary("flow-primal-radial", &p);
    summary.insert(
        "results".into(),
        json!({
            "steps": out.steps,
            "t_final": json_num(out.t),
            "kappa_max": json_num(out.kappa_max_seen),
            "max_speed": json_num(out.max_speed_seen),
        }),
    );
    summary.insert("monitors".into(), Value::Array(verdicts));
    summary.insert("pass".into(), json!(pass));
    Ok((summary, pass))
}

fn expander_radial(cfg: &mut Config, out_dir: &Path) -> Result<(Map<String, Value>, bool), CliError> {
    let p = params_from(cfg)?;
    let c = cfg.req_f64("expander.c")?;
    let r_trunc = cfg.get_f64("expander.r-trunc")?.unwrap_or(50.0);
    let tol = cfg.get_f64("expander.tol")?.unwrap_or(1e-8);
    cfg_done(cfg)?;
    let sol = expander::solve_radial_shooting(&p, c, r_trunc, tol)?;
    let state = FlowState::new(
        FieldData::Radial(sol.profile.clone()),
        Formulation::PrimalRadial,
        p,
    );
    output::write_state(out_dir, "expander_profile", &state)?;
    let pass = sol.residual.is_finite() && sol.flat_monotone;
    let mut summary = base_summary("expander-radial", &p);
    summary.insert(
        "results".into(),
        json!({
            "mu": json_num(sol.mu),
            "c": json_num(sol.c),
            "residual": json_num(sol.residual),
            "r_trunc": json_num(sol.r_trunc),
            "grid_h": json_num(sol.profile.h),
            "tail_error": json_num(sol.tail_error),
            "flat_monotone": sol.flat_monotone,
        }),
    );
    summary.insert("pass".into(), json!(pass));
    Ok((summary, pass))
}

fn expander_limit(cfg: &mut Config, out_dir: &Path) -> Result<(Map<String, Value>, bool), CliError> {
    let p = params_from(cfg)?;
    let gridspec = grid_from(cfg)?;
    let init = initial_from(cfg, &p)?;
    let tol = cfg.get_f64("limit.tol")?.unwrap_or(1e-6);
    let max_tau = cfg.get_f64("limit.max-tau")?.unwrap_or(30.0);
    let record_every = cfg.get_usize("output.record-every")?.unwrap_or(200);
    let ring = cfg.get_str("limit.ring").unwrap_or_else(|| "own".to_string());
    let shoot_r = cfg.get_f64("expander.r-trunc")?.unwrap_or(50.0);
    let shoot_tol = cfg.get_f64("expander.tol")?.unwrap_or(1e-8);
    cfg_done(cfg)?;
    let barrier_c = match &init {
        Initial::Hyperboloid { shift, .. } | Initial::Anisotropic { shift, .. } => *shift,
        Initial::Snapshot(_) => 0.0,
    };
    let field = match gridspec {
        GridSpec::Radial { rmax, cells } => {
            let mut f = dual_radial_initial(&init, rmax, cells)?;
            if ring == "expander-trace" {
                let exp_dual = expander_dual_profile(&p, barrier_c, shoot_r, shoot_tol)?;
                let last = f.last_index();
                f.values[last] = exp_dual.interp(f.radius(last))?;
            } else if ring != "own" {
                return Err(ConfigError("limit.ring must be own | expander-trace".into()).into());
            }
            FieldData::Radial(f)
        }
        GridSpec::Ball { r, h } => {
            let mut f = dual_ball_initial(&init, r, h)?;
            if ring == "expander-trace" {
                let exp_dual = expander_dual_profile(&p, barrier_c, shoot_r, shoot_tol)?;
                for &idx in &f.grid.ring_cells.clone() {
                    let (x, y) = f.grid.coords(idx);
                    f.values[idx] = exp_dual.interp((x * x + y * y).sqrt())?;
                }
            } else if ring != "own" {
                return Err(ConfigError("limit.ring must be own | expander-trace".into()).into());
            }
            FieldData::Ball(f)
        }
    };
    let state = FlowState::new(field, Formulation::Normalized, p);
    let out = flow::run_to_stationary(state, tol, max_tau, record_every)?;
    output::write_state(out_dir, "limit", &out.state)?;
    let times: Vec<f64> = out.history.iter().map(|x| x.0).collect();
    let sups: Vec<f64> = out.history.iter().map(|x| x.1).collect();
    let summ = diagnostics::residual_summability(&out.history, out.residual_integral, 0.05);
    let hist = MonitorSeries {
        name: "residual_history".into(),
        times,
        values: sups,
        verdict: summ,
    };
    output::emit_plot_data(std::slice::from_ref(&hist), &out_dir.join("plots"))?;
    let pass = out.converged;
    let mut summary = base_summary("expander-limit", &p);
    summary.insert(
        "results".into(),
        json!({
            "converged": out.converged,
            "steps": out.steps,
            "tau_final": json_num(out.state.tau),
            "residual_integral": json_num(out.residual_integral),
            "min_residual": json_num(out.min_residual_seen),
        }),
    );
    summary.insert("monitors".into(), json!([hist.verdict_json()]));
    summary.insert("pass".into(), json!(pass));
    Ok((summary, pass))
}

fn legendre_cmd(cfg: &mut Config, out_dir: &Path) -> Result<(Map<String, Value>, bool), CliError> {
    let p = params_from(cfg)?;
    let op = cfg.req_str("legendre.op")?;
    let init = initial_from(cfg, &p)?;
    let mut summary = base_summary("legendre", &p);
    let pass;
    match op.as_str() {
        "transform" => {
            let rmax = cfg.req_f64("legendre.input-r")?;
            let cells = cfg.get_usize("legendre.input-cells")?.unwrap_or(2048);
            let rho_max = cfg.req_f64("legendre.rho-max")?;
            let out_cells = cfg.get_usize("legendre.out-cells")?.unwrap_or(1024);
            cfg_done(cfg)?;
            let u = primal_radial_initial(&init, rmax, cells)?;
            let dual = legendre::legendre_transform_radial(&u, rho_max, out_cells)?;
            let me = legendre::match_error_radial(&u, &dual)?;
            let state = FlowState::new(FieldData::Radial(dual), Formulation::Dual, p);
            output::write_state(out_dir, "dual", &state)?;
            summary.insert("results".into(), json!({"match_error": json_num(me)}));
            pass = me.is_finite();
        }
        "inverse" => {
            let r = cfg.req_f64("legendre.input-r")?;
            let cells = cfg.get_usize("legendre.input-cells")?.unwrap_or(1024);
            let x_max = cfg.req_f64("legendre.x-max")?;
            let out_cells = cfg.get_usize("legendre.out-cells")?.unwrap_or(1024);
            cfg_done(cfg)?;
            let us = dual_radial_initial(&init, r, cells)?;
            let back = legendre::legendre_inverse_radial(&us, x_max, out_cells)?;
            let state = FlowState::new(FieldData::Radial(back), Formulation::PrimalRadial, p);
            output::write_state(out_dir, "primal", &state)?;
            summary.insert("results".into(), json!({}));
            pass = true;
        }
        "trace" => {
            let r = cfg.req_f64("legendre.input-r")?;
            let cells = cfg.get_usize("legendre.input-cells")?.unwrap_or(1024);
            let a_scale = cfg.get_f64("legendre.scale")?.unwrap_or(1.0);
            let warn_tol = cfg.get_f64("tolerances.trace")?.unwrap_or(1e-3);
            cfg_done(cfg)?;
            let us = dual_radial_initial(&init, r, cells)?;
            let (phi, spread) = legendre::boundary_trace_radial(&us, a_scale)?;
            if spread > warn_tol {
                eprintln!("warning: boundary trace unstable (ring disagreement {spread:.3e})");
            }
            summary.insert(
                "results".into(),
                json!({"phi": json_num(phi), "spread": json_num(spread), "stable": spread <= warn_tol}),
            );
            pass = true;
        }
        other => return Err(ConfigError(format!("legendre.op {other:?}")).into()),
    }
    summary.insert("pass".into(), json!(pass));
    Ok((summary, pass))
}

/// Load a directory of snapshots (files named snap_*.snap plus optionally
/// final.snap), sorted by their time stamps.
fn load_series(dir: &Path) -> Result<Vec<FlowState>, CliError> {
    let mut states = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| ConfigError(format!("{dir:?}: {e}")))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().map(|e| e == "snap").unwrap_or(false) {
            let text = std::fs::read_to_string(&path)?;
            states.push(snapshot::read_snapshot(&text)?);
        }
    }
    if states.is_empty() {
        return Err(ConfigError(format!("no .snap files in {dir:?}")).into());
    }
    states.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    Ok(states)
}

fn radial_series(states: &[FlowState]) -> Result<(Vec<f64>, Vec<RadialField>), CliError> {
    let mut times = Vec::new();
    let mut fields = Vec::new();
    for s in states {
        let f = s
            .field
            .as_radial()
            .ok_or_else(|| ConfigError("diagnose expects radial snapshots here".into()))?;
        times.push(if s.formulation == Formulation::Normalized { s.tau } else { s.t });
        fields.push(f.clone());
    }
    Ok((times, fields))
}

fn diagnose(cfg: &mut Config, out_dir: &Path) -> Result<(Map<String, Value>, bool), CliError> {
    let monitor = cfg.req_str("diagnose.monitor")?;
    let mut monitors: Vec<MonitorSeries> = Vec::new();
    #[allow(unused_assignments)]
    let mut p_used: Option<SpeedParams> = None;
    match monitor.as_str() {
        "comparison" => {
            let dir_a = PathBuf::from(cfg.req_str("diagnose.dir-a")?);
            let dir_b = PathBuf::from(cfg.req_str("diagnose.dir-b")?);
            let tol = cfg.get_f64("tolerances.comparison")?.unwrap_or(1e-8);
            cfg_done(cfg)?;
            let sa = load_series(&dir_a)?;
            let sb = load_series(&dir_b)?;
            p_used = Some(sa[0].params);
            let (ta, fa) = radial_series(&sa)?;
            let (_tb, fb) = radial_series(&sb)?;
            monitors.push(diagnostics::comparison_check_radial(&ta, &fa, &fb, tol)?);
        }
        "boundary-extremum" => {
            let dir = PathBuf::from(cfg.req_str("diagnose.dir")?);
            let tol = cfg.get_f64("tolerances.boundary-extremum")?.unwrap_or(1e-6);
            cfg_done(cfg)?;
            let states = load_series(&dir)?;
            let p = states[0].params;
            p_used = Some(p);
            let (times, fields) = radial_series(&states)?;
            let (hi, lo) = diagnostics::boundary_extremum_check_radial(&times, &fields, &p, tol)?;
            monitors.push(hi);
            monitors.push(lo);
        }
        "phi-bounds" => {
            let dir = PathBuf::from(cfg.req_str("diagnose.dir")?);
            let c = cfg.req_f64("diagnose.height-cutoff")?;
            let tol = cfg.get_f64("tolerances.phi-bounds")?.unwrap_or(1e-9);
            cfg_done(cfg)?;
            let states = load_series(&dir)?;
            let p = states[0].params;
            p_used = Some(p);
            let (times, fields) = radial_series(&states)?;
            monitors.push(diagnostics::phi_bounds_check(&times, &fields, &p, c, tol)?);
        }
        "evolution-identities" => {
            let dir = PathBuf::from(cfg.req_str("diagnose.dir")?);
            let keep = cfg.get_f64("diagnose.keep-frac")?.unwrap_or(0.8);
            let ceiling = cfg.get_f64("diagnose.ceiling")?;
            cfg_done(cfg)?;
            let states = load_series(&dir)?;
            let p = states[0].params;
            p_used = Some(p);
            let (times, fields) = radial_series(&states)?;
            let series = diagnostics::evolution_identity_check(&times, &fields, &p, keep, ceiling)?;
            monitors.extend(series);
        }
        "kappa-max" => {
            let dir = PathBuf::from(cfg.req_str("diagnose.dir")?);
            let ceiling = cfg.req_f64("diagnose.ceiling")?;
            cfg_done(cfg)?;
            let states = load_series(&dir)?;
            p_used = Some(states[0].params);
            let (times, fields) = radial_series(&states)?;
            monitors.push(diagnostics::kappa_max_series(&times, &fields, ceiling)?);
        }
        "scaling-covariance" => {
            let p = params_from(cfg)?;
            let init = initial_from(cfg, &p)?;
            let rmax = cfg.req_f64("diagnose.input-r")?;
            let cells = cfg.get_usize("diagnose.input-cells")?.unwrap_or(1024);
            let beta = cfg.req_f64("diagnose.beta")?;
            let tol = cfg.get_f64("tolerances.scaling")?.unwrap_or(1e-12);
            cfg_done(cfg)?;
            p_used = Some(p);
            let u0 = primal_radial_initial(&init, rmax, cells)?;
            monitors.push(diagnostics::scaling_covariance_check(&u0, beta, &p, tol)?);
        }
        other => return Err(ConfigError(format!("diagnose.monitor {other:?}")).into()),
    }
    let refs: Vec<&MonitorSeries> = monitors.iter().collect();
    let (verdicts, pass) = verdict_entries(&refs);
    output::emit_plot_data(&monitors, &out_dir.join("plots"))?;
    let p = p_used.unwrap_or_else(|| SpeedParams::new(2, 1, 1.0).unwrap());
    let mut summary = base_summary("diagnose", &p);
    summary.insert("results".into(), json!({"monitor": monitor}));
    summary.insert("monitors".into(), Value::Array(verdicts));
    summary.insert("pass".into(), json!(pass));
    Ok((summary, pass))
}

fn compare_exact(cfg: &mut Config, out_dir: &Path) -> Result<(Map<String, Value>, bool), CliError> {
    let p = params_from(cfg)?;
    let formulation = cfg.get_str("compare.formulation").unwrap_or_else(|| "both".into());
    let t_end = cfg.req_f64("time.t-end")?;
    let tol = cfg.get_f64("tolerances.sup-error")?.unwrap_or(5e-3);
    let ball_r = cfg.get_f64("compare.ball-r")?.unwrap_or(0.9);
    let ball_h = cfg.get_f64("compare.ball-h")?.unwrap_or(1.0 / 128.0);
    let radial_r = cfg.get_f64("compare.radial-r")?.unwrap_or(10.0);
    let radial_cells = cfg.get_usize("compare.radial-cells")?.unwrap_or(512);
    cfg_done(cfg)?;
    let a = expander::hyperboloid_radius(&p);
    let mut results = Map::new();
    let mut pass = true;
    if formulation == "dual" || formulation == "both" {
        if p.n != 2 {
            return Err(ConfigError("dual compare-exact is n = 2 only".into()).into());
        }
        let grid = BallGrid::new(ball_r, ball_h)?;
        let initial = BallField2D::from_fn(grid.clone(), |x, y| {
            -a * (1.0 - x * x - y * y).sqrt()
        });
        let cfgb = flow::BallRunConfig { t_end, track_fx: true, ..Default::default() };
        let out = run_ball_dump(&initial, p, &cfgb, false, out_dir)?;
        let afin = p.scale_factor(out.t);
        let exact = BallField2D::from_fn(grid, |x, y| {
            -a * afin * (1.0 - x * x - y * y).sqrt()
        });
        let err = out.final_field.sup_distance(&exact)?;
        results.insert("dual_sup_error".into(), json_num(err));
        results.insert("dual_steps".into(), json!(out.steps));
        let fx = diagnostics::fx_extremum_verdict(
            out.fx_interior_max,
            out.fx_interior_min,
            out.fx_pb_max,
            out.fx_pb_min,
            1e-6,
        );
        results.insert(
            "fx".into(),
            json!({
                "pass": fx.pass,
                "interior_max": json_num(out.fx_interior_max),
                "interior_min": json_num(out.fx_interior_min),
                "pb_max": json_num(out.fx_pb_max),
                "pb_min": json_num(out.fx_pb_min),
            }),
        );
        pass &= err <= tol && fx.pass;
    }
    if formulation == "primal" || formulation == "both" {
        let initial = RadialField::from_fn(radial_r, radial_cells, |r| (a * a + r * r).sqrt());
        let pp = p;
        let boundary = move |t: f64| {
            let aa = pp.scale_factor(t);
            (a * a * aa * aa + radial_r * radial_r).sqrt()
        };
        let cfgr = flow::RadialRunConfig { t_end, ..Default::default() };
        let out = flow::run_primal_radial(&initial, p, &boundary, &cfgr)?;
        let afin = p.scale_factor(out.t);
        let mut err = 0.0f64;
        for i in 0..out.final_field.len() {
            let r = out.final_field.radius(i);
            err = err.max((out.final_field.values[i] - (a * a * afin * afin + r * r).sqrt()).abs());
        }
        results.insert("primal_sup_error".into(), json_num(err));
        results.insert("primal_steps".into(), json!(out.steps));
        pass &= err <= tol;
    }
    let mut summary = base_summary("compare-exact", &p);
    summary.insert("results".into(), Value::Object(results));
    summary.insert("pass".into(), json!(pass));
    Ok((summary, pass))
}
