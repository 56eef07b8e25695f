//! Time integration of the three formulations of the flow:
//!
//! * dual: `u*_t = -F_*^{-alpha}(w* gamma* u*_{kl} gamma*) w*` on `B_r`, with
//!   the boundary ring stamped analytically to `A(t~) u_0*`;
//! * normalized: `(u~*)_tau = -F_*^{-alpha}(...) w* - u~*` with fixed
//!   boundary `u_0*` (its right-hand side is exactly the residual `H~`);
//! * primal radial: `u_t = F^alpha(kappa) w` on `[0, R]` with Dirichlet data
//!   supplied by a boundary provider.
//!
//! Stepping is explicit Euler under the CFL rule
//! `dt <= 0.2 h^2 / maxDiff`, maxDiff being the largest eigenvalue of the
//! linearized diffusion coefficient `alpha F_*^{-alpha-1} (dF_*/dM) (w*)^2`,
//! recomputed periodically (a 9-point monotonicity bound is enforced on
//! top). A midpoint (RK2) variant sits behind a flag for order studies.

pub mod ball;
pub mod radial;

use crate::error::CoreError;
use crate::grid::{BallField2D, CellKind, RadialField};
use crate::params::SpeedParams;

pub use ball::{run_dual_ball, run_normalized_ball, BallRunConfig, BallRunResult};
pub use radial::{
    run_dual_radial, run_normalized_radial, run_primal_radial, RadialRunConfig, RadialRunResult,
};

/// Which equation a state is evolving under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Dual,
    Normalized,
    PrimalRadial,
}

impl Formulation {
    pub fn tag(&self) -> &'static str {
        match self {
            Formulation::Dual => "dual",
            Formulation::Normalized => "normalized",
            Formulation::PrimalRadial => "primalRadial",
        }
    }

    pub fn from_tag(s: &str) -> Result<Self, CoreError> {
        match s {
            "dual" => Ok(Formulation::Dual),
            "normalized" => Ok(Formulation::Normalized),
            "primalRadial" => Ok(Formulation::PrimalRadial),
            other => Err(CoreError::Parse(format!("unknown formulation tag {other:?}"))),
        }
    }
}

/// The evolving field, radial or on the 2-D disk.
#[derive(Debug, Clone)]
pub enum FieldData {
    Radial(RadialField),
    Ball(BallField2D),
}

impl FieldData {
    pub fn rmax(&self) -> f64 {
        match self {
            FieldData::Radial(f) => f.rmax,
            FieldData::Ball(f) => f.grid.r,
        }
    }

    pub fn h(&self) -> f64 {
        match self {
            FieldData::Radial(f) => f.h,
            FieldData::Ball(f) => f.grid.h,
        }
    }

    pub fn as_radial(&self) -> Option<&RadialField> {
        match self {
            FieldData::Radial(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_ball(&self) -> Option<&BallField2D> {
        match self {
            FieldData::Ball(f) => Some(f),
            _ => None,
        }
    }
}

/// Snapshot of an evolving solution: both clocks, the field, the
/// formulation tag and the speed parameters. The clocks satisfy
/// `tau = ln((1+alpha) t + 1)/(1+alpha)` whenever both are tracked.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub tau: f64,
    pub field: FieldData,
    pub formulation: Formulation,
    pub params: SpeedParams,
}

impl FlowState {
    pub fn new(field: FieldData, formulation: Formulation, params: SpeedParams) -> Self {
        FlowState { t: 0.0, tau: 0.0, field, formulation, params }
    }

    pub fn scale(&self) -> f64 {
        self.params.scale_factor(self.t)
    }
}

/// Per-step diagnostics of one explicit update.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub dt_used: f64,
    /// max |right-hand side| over updated nodes.
    pub max_speed: f64,
    /// dt_used / stability bound; <= 1 by construction.
    pub cfl_ratio: f64,
    /// Smallest eigenvalue of the dual matrix (or smallest principal
    /// curvature on the primal side) seen during the update.
    pub min_eigenvalue: f64,
    /// sup |H~| over interior nodes (normalized runs; RHS magnitude otherwise).
    pub residual_sup: f64,
    /// min H~ over interior nodes (normalized runs).
    pub residual_min: f64,
}

/// `A(t) = [(1+alpha) t + 1]^{1/(1+alpha)}`.
pub fn scale_factor(p: &SpeedParams, t: f64) -> f64 {
    p.scale_factor(t)
}

/// `tau = ln((1+alpha) t + 1)/(1+alpha)`.
pub fn time_change(p: &SpeedParams, t: f64) -> f64 {
    p.time_change(t)
}

/// One explicit step of the dual flow. The ring's initial data is recovered
/// from the current boundary values (they carry `A(t) u_0*`), so `dt = 0`
/// re-stamps the boundary identically and leaves the field unchanged.
/// Requesting `dt` above the stability bound is refused with the bound.
pub fn step_dual(state: &FlowState, dt: f64) -> Result<(FlowState, StepReport), CoreError> {
    if state.formulation != Formulation::Dual {
        return Err(CoreError::domain("step_dual needs a dual-formulation state"));
    }
    let a_now = state.scale();
    match &state.field {
        FieldData::Ball(f) => {
            let kern = ball::BallKernel::new(f.grid.clone(), state.params)?;
            let u0_ring: Vec<f64> =
                f.grid.ring_cells.iter().map(|&idx| f.values[idx] / a_now).collect();
            let max_dt = kern.max_dt(&f.values)?;
            if dt > max_dt {
                return Err(CoreError::Cfl { requested: dt, required: max_dt });
            }
            let mut next = f.values.clone();
            let stats = kern.apply(&f.values, &mut next, dt, false, false)?;
            let t_new = state.t + dt;
            let a_new = state.params.scale_factor(t_new);
            for (slot, &idx) in u0_ring.iter().zip(&f.grid.ring_cells) {
                next[idx] = a_new * slot;
            }
            let field = BallField2D { grid: f.grid.clone(), values: next };
            Ok((
                FlowState {
                    t: t_new,
                    tau: state.params.time_change(t_new),
                    field: FieldData::Ball(field),
                    formulation: Formulation::Dual,
                    params: state.params,
                },
                stats.report(dt, max_dt),
            ))
        }
        FieldData::Radial(f) => {
            let kern = radial::RadialDualKernel::new(f, state.params)?;
            let u0_last = f.values[f.last_index()] / a_now;
            let max_dt = kern.max_dt(&f.values)?;
            if dt > max_dt {
                return Err(CoreError::Cfl { requested: dt, required: max_dt });
            }
            let mut next = f.values.clone();
            let stats = kern.apply(&f.values, &mut next, dt, false)?;
            let t_new = state.t + dt;
            *next.last_mut().unwrap() = state.params.scale_factor(t_new) * u0_last;
            let field = RadialField { rmax: f.rmax, h: f.h, values: next };
            Ok((
                FlowState {
                    t: t_new,
                    tau: state.params.time_change(t_new),
                    field: FieldData::Radial(field),
                    formulation: Formulation::Dual,
                    params: state.params,
                },
                stats.report(dt, max_dt),
            ))
        }
    }
}

/// One explicit step of the normalized flow (boundary fixed at `u_0*`).
pub fn step_normalized(state: &FlowState, dtau: f64) -> Result<(FlowState, StepReport), CoreError> {
    if state.formulation != Formulation::Normalized {
        return Err(CoreError::domain("step_normalized needs a normalized-formulation state"));
    }
    match &state.field {
        FieldData::Ball(f) => {
            let kern = ball::BallKernel::new(f.grid.clone(), state.params)?;
            let max_dt = kern.max_dt(&f.values)?;
            if dtau > max_dt {
                return Err(CoreError::Cfl { requested: dtau, required: max_dt });
            }
            let mut next = f.values.clone();
            let stats = kern.apply(&f.values, &mut next, dtau, true, false)?;
            let tau_new = state.tau + dtau;
            let field = BallField2D { grid: f.grid.clone(), values: next };
            Ok((
                FlowState {
                    t: state.params.time_from_tau(tau_new),
                    tau: tau_new,
                    field: FieldData::Ball(field),
                    formulation: Formulation::Normalized,
                    params: state.params,
                },
                stats.report(dtau, max_dt),
            ))
        }
        FieldData::Radial(f) => {
            let kern = radial::RadialDualKernel::new(f, state.params)?;
            let max_dt = kern.max_dt(&f.values)?;
            if dtau > max_dt {
                return Err(CoreError::Cfl { requested: dtau, required: max_dt });
            }
            let mut next = f.values.clone();
            let stats = kern.apply(&f.values, &mut next, dtau, true)?;
            let tau_new = state.tau + dtau;
            let field = RadialField { rmax: f.rmax, h: f.h, values: next };
            Ok((
                FlowState {
                    t: state.params.time_from_tau(tau_new),
                    tau: tau_new,
                    field: FieldData::Radial(field),
                    formulation: Formulation::Normalized,
                    params: state.params,
                },
                stats.report(dtau, max_dt),
            ))
        }
    }
}

/// One explicit step of the primal radial flow, with `u(R, t)` supplied by
/// the boundary provider and a Neumann pole `u'(0) = 0`.
pub fn step_primal_radial(
    state: &FlowState,
    dt: f64,
    boundary: &dyn Fn(f64) -> f64,
) -> Result<(FlowState, StepReport), CoreError> {
    if state.formulation != Formulation::PrimalRadial {
        return Err(CoreError::domain("step_primal_radial needs a primal-radial state"));
    }
    let f = state
        .field
        .as_radial()
        .ok_or_else(|| CoreError::domain("primal radial flow needs a radial field"))?;
    let kern = radial::PrimalRadialKernel::new(f, state.params)?;
    let max_dt = kern.max_dt(&f.values)?;
    if dt > max_dt {
        return Err(CoreError::Cfl { requested: dt, required: max_dt });
    }
    let mut next = f.values.clone();
    let stats = kern.apply(&f.values, &mut next, dt)?;
    let t_new = state.t + dt;
    *next.last_mut().unwrap() = boundary(t_new);
    let field = RadialField { rmax: f.rmax, h: f.h, values: next };
    Ok((
        FlowState {
            t: t_new,
            tau: state.params.time_change(t_new),
            field: FieldData::Radial(field),
            formulation: Formulation::PrimalRadial,
            params: state.params,
        },
        stats.report(dt, max_dt),
    ))
}

/// The rescaling map: dual-side fields divide by `A(t)`; primal graphs map
/// `x -> u(A(t) x, t)/A(t)` by cubic interpolation in radius.
pub fn rescale(state: &FlowState) -> Result<FieldData, CoreError> {
    let a = state.scale();
    match (&state.field, state.formulation) {
        (FieldData::Ball(f), _) => {
            let mut vals = f.values.clone();
            for (idx, v) in vals.iter_mut().enumerate() {
                if f.grid.kind[idx] != CellKind::Outside {
                    *v /= a;
                }
            }
            Ok(FieldData::Ball(BallField2D { grid: f.grid.clone(), values: vals }))
        }
        (FieldData::Radial(f), Formulation::PrimalRadial) => {
            let cells = f.last_index();
            let rmax_new = f.rmax / a;
            let h_new = rmax_new / cells as f64;
            let mut values = Vec::with_capacity(cells + 1);
            for i in 0..=cells {
                let x = i as f64 * h_new;
                values.push(f.interp(a * x)? / a);
            }
            Ok(FieldData::Radial(RadialField { rmax: rmax_new, h: h_new, values }))
        }
        (FieldData::Radial(f), _) => {
            let values = f.values.iter().map(|v| v / a).collect();
            Ok(FieldData::Radial(RadialField { rmax: f.rmax, h: f.h, values }))
        }
    }
}

/// Result of driving the normalized flow to stationarity.
#[derive(Debug, Clone)]
pub struct StationaryResult {
    pub state: FlowState,
    /// Decimated residual history: (tau, sup |H~| over interior).
    pub history: Vec<(f64, f64)>,
    /// Running integral of sup|H~| d tau, accumulated every step.
    pub residual_integral: f64,
    /// Most negative H~ seen at any interior node and step.
    pub min_residual_seen: f64,
    pub converged: bool,
    pub steps: usize,
}

/// Iterate the normalized flow until `sup |H~| <= tol` or `tau > max_tau`.
/// Non-convergence is reported in the result, not as an error.
pub fn run_to_stationary(
    state: FlowState,
    tol: f64,
    max_tau: f64,
    record_every: usize,
) -> Result<StationaryResult, CoreError> {
    if state.formulation != Formulation::Normalized {
        return Err(CoreError::domain("run_to_stationary needs a normalized-formulation state"));
    }
    match state.field {
        FieldData::Radial(f) => {
            let out = radial::run_normalized_radial(
                &f,
                state.params,
                &RadialRunConfig {
                    t_end: max_tau,
                    stop_residual: Some(tol),
                    record_every,
                    ..RadialRunConfig::default()
                },
            )?;
            Ok(StationaryResult {
                state: FlowState {
                    t: state.params.time_from_tau(out.t),
                    tau: out.t,
                    field: FieldData::Radial(out.final_field),
                    formulation: Formulation::Normalized,
                    params: state.params,
                },
                history: out.residual_history,
                residual_integral: out.residual_integral,
                min_residual_seen: out.residual_min_seen,
                converged: out.stopped_by_residual,
                steps: out.steps,
            })
        }
        FieldData::Ball(f) => {
            let out = ball::run_normalized_ball(
                &f,
                state.params,
                &BallRunConfig {
                    t_end: max_tau,
                    stop_residual: Some(tol),
                    record_every,
                    ..BallRunConfig::default()
                },
            )?;
            Ok(StationaryResult {
                state: FlowState {
                    t: state.params.time_from_tau(out.t),
                    tau: out.t,
                    field: FieldData::Ball(out.final_field),
                    formulation: Formulation::Normalized,
                    params: state.params,
                },
                history: out.residual_history,
                residual_integral: out.residual_integral,
                min_residual_seen: out.residual_min_seen,
                converged: out.stopped_by_residual,
                steps: out.steps,
            })
        }
    }
}

/// Initial dual data must cover the closed ball the run lives on; fields
/// with gaps (gradient image smaller than B_r) are rejected up front.
pub fn validate_dual_initial(field: &FieldData) -> Result<(), CoreError> {
    match field {
        FieldData::Radial(f) => {
            if f.rmax >= 1.0 {
                return Err(CoreError::domain("dual field radius must be < 1"));
            }
            if f.values.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::domain(
                    "initial dual data does not cover B_r (non-finite values)",
                ));
            }
            Ok(())
        }
        FieldData::Ball(f) => {
            for idx in 0..f.values.len() {
                if f.grid.kind[idx] != CellKind::Outside && !f.values[idx].is_finite() {
                    let (x, y) = f.grid.coords(idx);
                    return Err(CoreError::domain(format!(
                        "initial dual data does not cover B_r: hole at ({x}, {y})"
                    )));
                }
            }
            Ok(())
        }
    }
}

/// Raw per-step aggregates shared by the kernels.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepStats {
    pub max_speed: f64,
    pub min_eig: f64,
    pub residual_sup: f64,
    pub residual_min: f64,
}

impl StepStats {
    pub(crate) fn new() -> Self {
        StepStats {
            max_speed: 0.0,
            min_eig: f64::INFINITY,
            residual_sup: 0.0,
            residual_min: f64::INFINITY,
        }
    }

    pub(crate) fn merge(&mut self, other: &StepStats) {
        self.max_speed = self.max_speed.max(other.max_speed);
        self.min_eig = self.min_eig.min(other.min_eig);
        self.residual_sup = self.residual_sup.max(other.residual_sup);
        self.residual_min = self.residual_min.min(other.residual_min);
    }

    pub(crate) fn report(&self, dt: f64, max_dt: f64) -> StepReport {
        StepReport {
            dt_used: dt,
            max_speed: self.max_speed,
            cfl_ratio: if max_dt > 0.0 { dt / max_dt } else { 0.0 },
            min_eigenvalue: self.min_eig,
            residual_sup: self.residual_sup,
            residual_min: self.residual_min,
        }
    }
}

/// Exponent helper with fast paths for the exponents the speeds actually use.
#[inline]
pub(crate) fn powq(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else if e == 0.5 {
        x.sqrt()
    } else if e == 3.0 {
        x * x * x
    } else if e == 1.5 {
        x * x.sqrt()
    } else {
        x.powf(e)
    }
}
