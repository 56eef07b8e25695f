//! Explicit stepping of the dual and normalized flows on the 2-D disk mask.
//!
//! The right-hand side depends only on second derivatives (no gradient
//! terms), so one update reads the 9-point stencil, assembles the dual
//! matrix `M = w* gamma* (D^2 u*) gamma*`, and evaluates `-F_*^{-alpha} w*`.
//! n = 2, where `F_*` reduces to `det/tr` (k = 1) or `sqrt(det)` (k = 2);
//! no eigendecomposition is needed in the hot loop.

use super::{powq, StepStats};
use crate::error::CoreError;
use crate::grid::{BallField2D, BallGrid};
use crate::params::SpeedParams;
use rayon::prelude::*;
use std::sync::Arc;

#[derive(Clone, Copy)]
enum SpeedMode {
    /// k = 1: F_* = det/tr.
    K1,
    /// k = 2: F_* = sqrt(det).
    K2,
}

pub(crate) struct BallKernel {
    grid: Arc<BallGrid>,
    p: SpeedParams,
    mode: SpeedMode,
    /// Interior span (i_begin, i_end) per raw row index, or None.
    row_span: Vec<Option<(i64, i64)>>,
}

/// Stats of one 2-D update; extends the shared aggregates with the
/// `F~ x_{n+1}` extrema and barrier margins when those are tracked.
pub(crate) struct BallStepStats {
    pub base: StepStats,
    pub fx_max: f64,
    pub fx_min: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

impl BallStepStats {
    pub(crate) fn report(&self, dt: f64, max_dt: f64) -> super::StepReport {
        self.base.report(dt, max_dt)
    }
}

struct RowOut {
    stats: BallStepStats,
    violation: Option<(i64, i64, f64, f64)>,
}

impl BallKernel {
    pub fn new(grid: Arc<BallGrid>, p: SpeedParams) -> Result<Self, CoreError> {
        if p.n != 2 {
            return Err(CoreError::domain("2-D ball flows support n = 2 only"));
        }
        let mode = match p.k {
            1 => SpeedMode::K1,
            2 => SpeedMode::K2,
            _ => unreachable!("k <= n = 2"),
        };
        let mut row_span = vec![None; grid.size];
        for &(j, a, b) in &grid.interior_rows {
            row_span[(j + grid.half) as usize] = Some((a, b));
        }
        Ok(BallKernel { grid, p, mode, row_span })
    }

    #[inline]
    fn f_star_neg_alpha(&self, tr: f64, det: f64) -> f64 {
        match self.mode {
            SpeedMode::K1 => powq(tr / det, self.p.alpha),
            SpeedMode::K2 => 1.0 / powq(det, 0.5 * self.p.alpha),
        }
    }

    /// One explicit Euler update of the interior cells (ring and outside
    /// cells of `next` are left untouched; callers stamp the ring).
    ///
    /// `barriers` supplies (lower base, upper base, scale at the new time):
    /// margins `next - scale*lower` and `scale*upper - next` are folded over
    /// the interior in the same pass.
    pub fn apply(
        &self,
        cur: &[f64],
        next: &mut [f64],
        dt: f64,
        normalized: bool,
        track_fx: bool,
    ) -> Result<BallStepStats, CoreError> {
        self.apply_with_barriers(cur, next, dt, normalized, track_fx, None)
    }

    pub fn apply_with_barriers(
        &self,
        cur: &[f64],
        next: &mut [f64],
        dt: f64,
        normalized: bool,
        track_fx: bool,
        barriers: Option<(&[f64], &[f64], f64)>,
    ) -> Result<BallStepStats, CoreError> {
        let g = &self.grid;
        let size = g.size;
        let h = g.h;
        let h2 = h * h;
        let half = g.half;
        let rows: Vec<RowOut> = next
            .par_chunks_mut(size)
            .enumerate()
            .map(|(jj, row)| {
                let mut st = BallStepStats {
                    base: StepStats::new(),
                    fx_max: f64::NEG_INFINITY,
                    fx_min: f64::INFINITY,
                    lower_margin: f64::INFINITY,
                    upper_margin: f64::INFINITY,
                };
                let mut violation = None;
                let span = match self.row_span[jj] {
                    Some(s) => s,
                    None => return RowOut { stats: st, violation },
                };
                let j = jj as i64 - half;
                let y = j as f64 * h;
                let base = jj * size;
                for i in span.0..=span.1 {
                    let col = (i + half) as usize;
                    let idx = base + col;
                    let c = cur[idx];
                    let hxx = (cur[idx + 1] - 2.0 * c + cur[idx - 1]) / h2;
                    let hyy = (cur[idx + size] - 2.0 * c + cur[idx - size]) / h2;
                    let hxy = (cur[idx + size + 1] + cur[idx - size - 1]
                        - cur[idx + size - 1]
                        - cur[idx - size + 1])
                        / (4.0 * h2);
                    let x = i as f64 * h;
                    let ws = g.wstar[idx];
                    let gfac = 1.0 / (1.0 + ws);
                    let g11 = 1.0 - x * x * gfac;
                    let g12 = -x * y * gfac;
                    let g22 = 1.0 - y * y * gfac;
                    let m11 = ws * (g11 * g11 * hxx + 2.0 * g11 * g12 * hxy + g12 * g12 * hyy);
                    let m12 = ws
                        * (g11 * g12 * hxx + (g11 * g22 + g12 * g12) * hxy + g12 * g22 * hyy);
                    let m22 = ws * (g12 * g12 * hxx + 2.0 * g12 * g22 * hxy + g22 * g22 * hyy);
                    let tr = m11 + m22;
                    let det = m11 * m22 - m12 * m12;
                    if tr <= 0.0 || det <= 0.0 {
                        if violation.is_none() {
                            violation = Some((i, j, tr, det));
                        }
                        continue;
                    }
                    let disc = ((m11 - m22) * (m11 - m22) + 4.0 * m12 * m12).sqrt();
                    let lam_min = 0.5 * (tr - disc);
                    st.base.min_eig = st.base.min_eig.min(lam_min);
                    let fneg = self.f_star_neg_alpha(tr, det);
                    let mut rhs = -fneg * ws;
                    if normalized {
                        rhs -= c;
                    }
                    st.base.max_speed = st.base.max_speed.max(rhs.abs());
                    st.base.residual_sup = st.base.residual_sup.max(rhs.abs());
                    st.base.residual_min = st.base.residual_min.min(rhs);
                    if track_fx {
                        let fx = 1.0 / (fneg * ws);
                        st.fx_max = st.fx_max.max(fx);
                        st.fx_min = st.fx_min.min(fx);
                    }
                    let val = c + dt * rhs;
                    row[col] = val;
                    if let Some((lo, hi, scale)) = barriers {
                        st.lower_margin = st.lower_margin.min(val - scale * lo[idx]);
                        st.upper_margin = st.upper_margin.min(scale * hi[idx] - val);
                    }
                }
                RowOut { stats: st, violation }
            })
            .collect();
        let mut stats = BallStepStats {
            base: StepStats::new(),
            fx_max: f64::NEG_INFINITY,
            fx_min: f64::INFINITY,
            lower_margin: f64::INFINITY,
            upper_margin: f64::INFINITY,
        };
        for row in &rows {
            if let Some((i, j, tr, det)) = row.violation {
                let (x, y) = (i as f64 * h, j as f64 * h);
                return Err(CoreError::Convexity {
                    location: format!("({x}, {y})"),
                    detail: format!("dual matrix lost positivity: tr = {tr:.3e}, det = {det:.3e}"),
                });
            }
            stats.base.merge(&row.stats.base);
            stats.fx_max = stats.fx_max.max(row.stats.fx_max);
            stats.fx_min = stats.fx_min.min(row.stats.fx_min);
            stats.lower_margin = stats.lower_margin.min(row.stats.lower_margin);
            stats.upper_margin = stats.upper_margin.min(row.stats.upper_margin);
        }
        Ok(stats)
    }

    /// Stability bound: `0.2 h^2 / maxDiff` with maxDiff the largest
    /// eigenvalue of `alpha F_*^{-alpha-1} (dF_*/dM) (w*)^2`, intersected
    /// with a 9-point monotonicity bound on the full coefficient matrix.
    pub fn max_dt(&self, cur: &[f64]) -> Result<f64, CoreError> {
        let g = &self.grid;
        let size = g.size;
        let h = g.h;
        let h2 = h * h;
        let half = g.half;
        let alpha = self.p.alpha;
        let mut max_diff = 0.0f64;
        let mut max_mono = 0.0f64;
        for &(j, a, b) in &g.interior_rows {
            let y = j as f64 * h;
            let base = ((j + half) as usize) * size;
            for i in a..=b {
                let col = (i + half) as usize;
                let idx = base + col;
                let c = cur[idx];
                let hxx = (cur[idx + 1] - 2.0 * c + cur[idx - 1]) / h2;
                let hyy = (cur[idx + size] - 2.0 * c + cur[idx - size]) / h2;
                let hxy = (cur[idx + size + 1] + cur[idx - size - 1]
                    - cur[idx + size - 1]
                    - cur[idx - size + 1])
                    / (4.0 * h2);
                let x = i as f64 * h;
                let ws = g.wstar[idx];
                let gfac = 1.0 / (1.0 + ws);
                let g11 = 1.0 - x * x * gfac;
                let g12 = -x * y * gfac;
                let g22 = 1.0 - y * y * gfac;
                let m11 = ws * (g11 * g11 * hxx + 2.0 * g11 * g12 * hxy + g12 * g12 * hyy);
                let m12 =
                    ws * (g11 * g12 * hxx + (g11 * g22 + g12 * g12) * hxy + g12 * g22 * hyy);
                let m22 = ws * (g12 * g12 * hxx + 2.0 * g12 * g22 * hxy + g22 * g22 * hyy);
                let tr = m11 + m22;
                let det = m11 * m22 - m12 * m12;
                if tr <= 0.0 || det <= 0.0 {
                    let (xx, yy) = (i as f64 * h, j as f64 * h);
                    return Err(CoreError::Convexity {
                        location: format!("({xx}, {yy})"),
                        detail: "dual matrix lost positivity in CFL scan".into(),
                    });
                }
                let disc = ((m11 - m22) * (m11 - m22) + 4.0 * m12 * m12).sqrt();
                let l1 = 0.5 * (tr + disc);
                let l2 = 0.5 * (tr - disc);
                let (fval, f1, f2) = match self.mode {
                    SpeedMode::K1 => {
                        let f = det / tr;
                        (f, (l2 / tr) * (l2 / tr), (l1 / tr) * (l1 / tr))
                    }
                    SpeedMode::K2 => {
                        let f = det.sqrt();
                        (f, 0.5 * f / l1, 0.5 * f / l2)
                    }
                };
                let afac = alpha * powq(1.0 / fval, alpha + 1.0) * ws * ws;
                max_diff = max_diff.max(afac * f1.max(f2));
                // rotate diag(f1, f2) back to lattice axes, then sandwich by gamma*
                let (c2t, s2t) = if disc > 1e-300 {
                    ((m11 - m22) / disc, 2.0 * m12 / disc)
                } else {
                    (1.0, 0.0)
                };
                let cc = 0.5 * (1.0 + c2t);
                let ss = 0.5 * (1.0 - c2t);
                let cs = 0.5 * s2t;
                let p11 = f1 * cc + f2 * ss;
                let p22 = f1 * ss + f2 * cc;
                let p12 = (f1 - f2) * cs;
                let a11 = afac * (g11 * g11 * p11 + 2.0 * g11 * g12 * p12 + g12 * g12 * p22);
                let a12 = afac
                    * (g11 * g12 * p11 + (g11 * g22 + g12 * g12) * p12 + g12 * g22 * p22);
                let a22 = afac * (g12 * g12 * p11 + 2.0 * g12 * g22 * p12 + g22 * g22 * p22);
                max_mono = max_mono.max((2.0 * (a11 + a22) + 4.0 * a12.abs()) / h2);
            }
        }
        if max_diff <= 0.0 {
            return Err(CoreError::domain("degenerate diffusion coefficient"));
        }
        Ok((0.2 * h2 / max_diff).min(0.95 / max_mono))
    }
}

/// Driver configuration for 2-D runs.
#[derive(Debug, Clone)]
pub struct BallRunConfig {
    /// Final time (t for dual, tau for normalized).
    pub t_end: f64,
    /// Times at which snapshots are taken exactly (steps are clipped).
    pub snapshot_times: Vec<f64>,
    /// Decimation stride for recorded series (verdinstitutions use every step).
    pub record_every: usize,
    /// Steps between CFL recomputations.
    pub cfl_every: usize,
    /// Midpoint (RK2) stepping for order studies.
    pub rk2: bool,
    pub dt_cap: Option<f64>,
    /// Stop when sup |H~| falls below this (normalized runs).
    pub stop_residual: Option<f64>,
    /// Per-cell barrier bases; margins are tracked every step.
    pub lower_barrier: Option<Vec<f64>>,
    pub upper_barrier: Option<Vec<f64>>,
    /// Multiply barrier bases by A(t) (dual runs) or keep them fixed
    /// (normalized runs).
    pub barrier_uses_scale: bool,
    /// Track the space-time extrema of F~ x_{n+1}.
    pub track_fx: bool,
}

impl Default for BallRunConfig {
    fn default() -> Self {
        BallRunConfig {
            t_end: 1.0,
            snapshot_times: Vec::new(),
            record_every: 100,
            cfl_every: 50,
            rk2: false,
            dt_cap: None,
            stop_residual: None,
            lower_barrier: None,
            upper_barrier: None,
            barrier_uses_scale: true,
            track_fx: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BallRunResult {
    pub final_field: BallField2D,
    /// Final clock (t for dual, tau for normalized).
    pub t: f64,
    pub steps: usize,
    pub snapshots: Vec<(f64, BallField2D)>,
    /// Decimated (time, lower margin, upper margin).
    pub barrier_series: Vec<(f64, f64, f64)>,
    pub barrier_lower_worst: f64,
    pub barrier_upper_worst: f64,
    /// Space-time extrema of F~ x_{n+1}: interior (t > 0) vs parabolic
    /// boundary ({t = 0} slice plus the analytic ring curve).
    pub fx_interior_max: f64,
    pub fx_interior_min: f64,
    pub fx_pb_max: f64,
    pub fx_pb_min: f64,
    /// Decimated (time, sup |H~|) for normalized runs.
    pub residual_history: Vec<(f64, f64)>,
    pub residual_integral: f64,
    pub residual_min_seen: f64,
    pub min_eig_seen: f64,
    pub max_speed_seen: f64,
    pub stopped_by_residual: bool,
}

fn run_ball(
    initial: &BallField2D,
    p: SpeedParams,
    cfg: &BallRunConfig,
    normalized: bool,
) -> Result<BallRunResult, CoreError> {
    let grid = initial.grid.clone();
    let kern = BallKernel::new(grid.clone(), p)?;
    super::validate_dual_initial(&super::FieldData::Ball(initial.clone()))?;
    let u0_ring: Vec<f64> = grid.ring_cells.iter().map(|&i| initial.values[i]).collect();
    let mut cur = initial.values.clone();
    let mut next = initial.values.clone();
    let mut time = 0.0f64;
    let mut steps = 0usize;
    let mut snap_iter = cfg.snapshot_times.iter().copied().peekable();
    let mut out = BallRunResult {
        final_field: initial.clone(),
        t: 0.0,
        steps: 0,
        snapshots: Vec::new(),
        barrier_series: Vec::new(),
        barrier_lower_worst: f64::INFINITY,
        barrier_upper_worst: f64::INFINITY,
        fx_interior_max: f64::NEG_INFINITY,
        fx_interior_min: f64::INFINITY,
        fx_pb_max: f64::NEG_INFINITY,
        fx_pb_min: f64::INFINITY,
        residual_history: Vec::new(),
        residual_integral: 0.0,
        residual_min_seen: f64::INFINITY,
        min_eig_seen: f64::INFINITY,
        max_speed_seen: 0.0,
        stopped_by_residual: false,
    };
    // ring contribution to the parabolic boundary of F~ x_{n+1}:
    // on Dirichlet cells F~ x_{n+1} = A(t~)^alpha / (-u_0*)
    let ring_inv: Option<(f64, f64)> = if cfg.track_fx && !normalized {
        if u0_ring.iter().all(|&v| v < 0.0) {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &v in &u0_ring {
                lo = lo.min(1.0 / -v);
                hi = hi.max(1.0 / -v);
            }
            Some((lo, hi))
        } else {
            None
        }
    } else {
        None
    };
    let mut dt_bound = kern.max_dt(&cur)? * 0.95;
    let mut scratch = if cfg.rk2 { Some(initial.values.clone()) } else { None };
    while time < cfg.t_end - 1e-14 {
        if steps > 0 && steps % cfg.cfl_every == 0 {
            dt_bound = kern.max_dt(&cur)? * 0.95;
        }
        let mut dt = dt_bound;
        if let Some(cap) = cfg.dt_cap {
            dt = dt.min(cap);
        }
        while let Some(&s) = snap_iter.peek() {
            if s <= time + 1e-14 {
                snap_iter.next();
            } else {
                dt = dt.min(s - time);
                break;
            }
        }
        dt = dt.min(cfg.t_end - time);
        let t_new = time + dt;
        let a_new = if normalized { 1.0 } else { p.scale_factor(t_new) };
        let barriers = match (&cfg.lower_barrier, &cfg.upper_barrier) {
            (Some(lo), Some(hi)) => {
                Some((lo.as_slice(), hi.as_slice(), if cfg.barrier_uses_scale { a_new } else { 1.0 }))
            }
            _ => None,
        };
        let stats = if let Some(mid) = scratch.as_mut() {
            // midpoint: half step into scratch, full step from its slopes
            let half_stats = kern.apply(&cur, mid, 0.5 * dt, normalized, false)?;
            let _ = half_stats;
            let a_half = if normalized { 1.0 } else { p.scale_factor(time + 0.5 * dt) };
            for (slot, &idx) in u0_ring.iter().zip(&grid.ring_cells) {
                mid[idx] = if normalized { *slot } else { a_half * slot };
            }
            // u_new = u + dt * G(mid): evaluate G on mid, write cur + dt G
            let st = kern.apply_with_barriers(mid, &mut next, dt, normalized, cfg.track_fx, None)?;
            for &(j, a, b) in &grid.interior_rows {
                let base = ((j + grid.half) as usize) * grid.size;
                for i in a..=b {
                    let col = (i + grid.half) as usize;
                    let idx = base + col;
                    // next currently holds mid + dt G(mid); rebase onto cur
                    next[idx] = cur[idx] + (next[idx] - mid[idx]);
                }
            }
            if let Some((lo, hi, scale)) = barriers {
                let mut st2 = st;
                st2.lower_margin = f64::INFINITY;
                st2.upper_margin = f64::INFINITY;
                for &(j, a, b) in &grid.interior_rows {
                    let base = ((j + grid.half) as usize) * grid.size;
                    for i in a..=b {
                        let idx = base + (i + grid.half) as usize;
                        st2.lower_margin = st2.lower_margin.min(next[idx] - scale * lo[idx]);
                        st2.upper_margin = st2.upper_margin.min(scale * hi[idx] - next[idx]);
                    }
                }
                st2
            } else {
                st
            }
        } else {
            kern.apply_with_barriers(&cur, &mut next, dt, normalized, cfg.track_fx, barriers)?
        };
        for (slot, &idx) in u0_ring.iter().zip(&grid.ring_cells) {
            next[idx] = if normalized { *slot } else { a_new * slot };
        }
        // aggregate
        out.min_eig_seen = out.min_eig_seen.min(stats.base.min_eig);
        out.max_speed_seen = out.max_speed_seen.max(stats.base.max_speed);
        if cfg.track_fx {
            if steps == 0 {
                out.fx_pb_max = out.fx_pb_max.max(stats.fx_max);
                out.fx_pb_min = out.fx_pb_min.min(stats.fx_min);
            } else {
                out.fx_interior_max = out.fx_interior_max.max(stats.fx_max);
                out.fx_interior_min = out.fx_interior_min.min(stats.fx_min);
            }
        }
        if barriers.is_some() {
            out.barrier_lower_worst = out.barrier_lower_worst.min(stats.lower_margin);
            out.barrier_upper_worst = out.barrier_upper_worst.min(stats.upper_margin);
            if steps % cfg.record_every == 0 {
                out.barrier_series.push((t_new, stats.lower_margin, stats.upper_margin));
            }
        }
        if normalized {
            out.residual_integral += stats.base.residual_sup * dt;
            out.residual_min_seen = out.residual_min_seen.min(stats.base.residual_min);
            if steps % cfg.record_every == 0 {
                out.residual_history.push((time, stats.base.residual_sup));
            }
        }
        std::mem::swap(&mut cur, &mut next);
        time = t_new;
        steps += 1;
        if !cfg.snapshot_times.is_empty()
            && cfg.snapshot_times.iter().any(|&s| (s - time).abs() < 1e-13)
        {
            out.snapshots
                .push((time, BallField2D { grid: grid.clone(), values: cur.clone() }));
        }
        if let Some(tol) = cfg.stop_residual {
            if normalized && stats.base.residual_sup <= tol {
                out.stopped_by_residual = true;
                break;
            }
        }
    }
    // final stats pass (dt = 0) to fold the last slice into interior extrema
    if cfg.track_fx {
        let stats = kern.apply(&cur, &mut next, 0.0, normalized, true)?;
        out.fx_interior_max = out.fx_interior_max.max(stats.fx_max);
        out.fx_interior_min = out.fx_interior_min.min(stats.fx_min);
    }
    // lateral (ring) part of the parabolic boundary: F~ x_{n+1} there equals
    // A(t~)^alpha / (-u_0*), increasing in t
    if let Some((lo, hi)) = ring_inv {
        out.fx_pb_min = out.fx_pb_min.min(lo);
        out.fx_pb_max = out.fx_pb_max.max(p.scale_factor(time).powf(p.alpha) * hi);
    }
    out.final_field = BallField2D { grid, values: cur };
    out.t = time;
    out.steps = steps;
    Ok(out)
}

/// Integrate the dual flow on the disk with the ring stamped to `A(t~) u_0*`.
pub fn run_dual_ball(
    initial: &BallField2D,
    p: SpeedParams,
    cfg: &BallRunConfig,
) -> Result<BallRunResult, CoreError> {
    run_ball(initial, p, cfg, false)
}

/// Integrate the normalized flow on the disk (fixed boundary `u_0*`).
pub fn run_normalized_ball(
    initial: &BallField2D,
    p: SpeedParams,
    cfg: &BallRunConfig,
) -> Result<BallRunResult, CoreError> {
    run_ball(initial, p, cfg, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BallGrid;

    fn hyper_dual(a: f64) -> impl Fn(f64, f64) -> f64 {
        move |x, y| -a * (1.0 - x * x - y * y).sqrt()
    }

    #[test]
    fn self_similar_short_run() {
        // n=2, k=1, alpha=1: u*(xi, t) = -sqrt(2) A(t) w* solves the dual flow
        let p = SpeedParams::new(2, 1, 1.0).unwrap();
        let a = 2.0f64.sqrt();
        let grid = BallGrid::new(0.9, 1.0 / 32.0).unwrap();
        let initial = BallField2D::from_fn(grid.clone(), hyper_dual(a));
        let cfg = BallRunConfig { t_end: 0.05, ..Default::default() };
        let out = run_dual_ball(&initial, p, &cfg).unwrap();
        let afin = p.scale_factor(out.t);
        let exact = BallField2D::from_fn(grid, |x, y| hyper_dual(a)(x, y) * afin);
        let err = out.final_field.sup_distance(&exact).unwrap();
        assert!(err < 2e-3, "sup error {err} after {} steps", out.steps);
    }

    #[test]
    fn normalized_stationary_at_expander() {
        let p = SpeedParams::new(2, 1, 1.0).unwrap();
        let a = 2.0f64.sqrt();
        let grid = BallGrid::new(0.9, 1.0 / 32.0).unwrap();
        let initial = BallField2D::from_fn(grid, hyper_dual(a));
        let cfg = BallRunConfig { t_end: 0.01, ..Default::default() };
        let out = run_normalized_ball(&initial, p, &cfg).unwrap();
        // discrete fixed point up to truncation of the discrete Hessian
        let err = out.final_field.sup_distance(&initial).unwrap();
        assert!(err < 5e-5, "drift {err}");
    }
}
