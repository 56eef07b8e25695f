//! Radial (1-D) kernels: the dual/normalized flows in the ball coordinate
//! `rho` and the primal graph flow in the radius `r`. The pole uses the
//! removable limit (all eigenvalues equal `u''(0)`), the outer node carries
//! Dirichlet data.

use super::{powq, StepStats};
use crate::error::CoreError;
use crate::geometry::EPS_GUARD;
use crate::grid::RadialField;
use crate::params::{binomial, SpeedParams};

pub(crate) struct RadialStats {
    pub base: StepStats,
    pub fx_max: f64,
    pub fx_min: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub kappa_max: f64,
}

impl RadialStats {
    fn new() -> Self {
        RadialStats {
            base: StepStats::new(),
            fx_max: f64::NEG_INFINITY,
            fx_min: f64::INFINITY,
            lower_margin: f64::INFINITY,
            upper_margin: f64::INFINITY,
            kappa_max: f64::NEG_INFINITY,
        }
    }

    pub(crate) fn report(&self, dt: f64, max_dt: f64) -> super::StepReport {
        self.base.report(dt, max_dt)
    }
}

/// Dual-side radial kernel: eigenvalues `w*^3 u''` (radial) and
/// `w* u'/rho` (angular, multiplicity n-1).
pub(crate) struct RadialDualKernel {
    p: SpeedParams,
    h: f64,
    cells: usize,
    rho: Vec<f64>,
    wstar: Vec<f64>,
    cb_nk: f64,   // C(n-1, n-k)
    cb_nk1: f64,  // C(n-1, n-k-1)
    ak: f64,      // alpha / k
}

impl RadialDualKernel {
    pub fn new(field: &RadialField, p: SpeedParams) -> Result<Self, CoreError> {
        if field.rmax >= 1.0 {
            return Err(CoreError::domain("dual radial field must live strictly inside B_1"));
        }
        let cells = field.last_index();
        let rho: Vec<f64> = (0..=cells).map(|i| field.radius(i)).collect();
        let wstar: Vec<f64> = rho.iter().map(|&r| (1.0 - r * r).sqrt()).collect();
        Ok(RadialDualKernel {
            p,
            h: field.h,
            cells,
            rho,
            wstar,
            cb_nk: binomial(p.n - 1, p.n - p.k),
            cb_nk1: binomial(p.n - 1, p.n - p.k - 1),
            ak: p.alpha / p.k as f64,
        })
    }

    /// `F_*^{-alpha}` from the two distinct eigenvalues: the quotient
    /// `sigma_{n-k}/sigma_n` evaluated on (lr, la x (n-1)).
    #[inline]
    fn f_neg_alpha(&self, lr: f64, la: f64) -> f64 {
        let n = self.p.n;
        let m = n - self.p.k;
        // sigma_m = C(n-1,m) la^m + lr C(n-1,m-1) la^{m-1}
        let snk = self.cb_nk * la.powi(m as i32)
            + if m >= 1 { lr * self.cb_nk1 * la.powi(m as i32 - 1) } else { 0.0 };
        let sn = lr * la.powi(n as i32 - 1);
        powq(snk / sn, self.ak)
    }

    fn eigen_at(&self, cur: &[f64], i: usize) -> Result<(f64, f64, f64), CoreError> {
        let h = self.h;
        if i == 0 {
            let d2 = 2.0 * (cur[1] - cur[0]) / (h * h);
            if d2 <= 0.0 {
                return Err(CoreError::Convexity {
                    location: "rho = 0".into(),
                    detail: format!("center eigenvalue {d2:.3e} <= 0"),
                });
            }
            return Ok((d2, d2, 1.0));
        }
        let du = (cur[i + 1] - cur[i - 1]) / (2.0 * h);
        let d2u = (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) / (h * h);
        let ws = self.wstar[i];
        let lr = ws * ws * ws * d2u;
        let la = ws * du / self.rho[i];
        if lr <= 0.0 || la <= 0.0 {
            return Err(CoreError::Convexity {
                location: format!("rho = {}", self.rho[i]),
                detail: format!("dual eigenvalues ({lr:.3e}, {la:.3e})"),
            });
        }
        Ok((lr, la, ws))
    }

    /// Update interior nodes 0..cells-1; the outer node is the caller's.
    pub fn apply(
        &self,
        cur: &[f64],
        next: &mut [f64],
        dt: f64,
        normalized: bool,
    ) -> Result<RadialStats, CoreError> {
        self.apply_with(cur, next, dt, normalized, false, None)
    }

    pub fn apply_with(
        &self,
        cur: &[f64],
        next: &mut [f64],
        dt: f64,
        normalized: bool,
        track_fx: bool,
        barriers: Option<(&[f64], &[f64], f64)>,
    ) -> Result<RadialStats, CoreError> {
        let mut st = RadialStats::new();
        for i in 0..self.cells {
            let (lr, la, ws) = self.eigen_at(cur, i)?;
            let fneg = self.f_neg_alpha(lr, la);
            let mut rhs = -fneg * ws;
            if normalized {
                rhs -= cur[i];
            }
            st.base.min_eig = st.base.min_eig.min(lr.min(la));
            st.base.max_speed = st.base.max_speed.max(rhs.abs());
            st.base.residual_sup = st.base.residual_sup.max(rhs.abs());
            st.base.residual_min = st.base.residual_min.min(rhs);
            if track_fx {
                let fx = 1.0 / (fneg * ws);
                st.fx_max = st.fx_max.max(fx);
                st.fx_min = st.fx_min.min(fx);
            }
            let val = cur[i] + dt * rhs;
            next[i] = val;
            if let Some((lo, hi, scale)) = barriers {
                st.lower_margin = st.lower_margin.min(val - scale * lo[i]);
                st.upper_margin = st.upper_margin.min(scale * hi[i] - val);
            }
        }
        Ok(st)
    }

    pub fn max_dt(&self, cur: &[f64]) -> Result<f64, CoreError> {
        let h = self.h;
        let alpha = self.p.alpha;
        let mut max_diff = 0.0f64;
        let mut max_mono = 0.0f64;
        for i in 0..self.cells {
            let (lr, la, ws) = self.eigen_at(cur, i)?;
            let f = |lr: f64, la: f64| {
                powq(1.0 / self.f_neg_alpha(lr, la), 1.0 / alpha) // F_* itself
            };
            let fval = f(lr, la);
            let d = 1e-6 * lr.max(la);
            let dfr = (f(lr + d, la) - f(lr - d, la)) / (2.0 * d);
            let dfa = (f(lr, la + d) - f(lr, la - d)) / (2.0 * d);
            let pref = alpha * (1.0 / fval).powf(alpha + 1.0);
            let d2 = pref * dfr.max(0.0) * ws * ws * ws * ws;
            let rho = self.rho[i].max(h);
            let c1 = pref * dfa.max(0.0) * ws * ws / rho;
            max_diff = max_diff.max(d2);
            max_mono = max_mono.max(2.0 * d2 / (h * h) + c1 / h);
        }
        if max_diff <= 0.0 {
            return Err(CoreError::domain("degenerate dual diffusion coefficient"));
        }
        Ok((0.2 * h * h / max_diff).min(0.95 / max_mono))
    }
}

/// Primal radial kernel: `u_t = F^alpha(kappa) w` with the curvature pair
/// `kappa_rad = u''/w^3`, `kappa_ang = u'/(r w)`.
pub(crate) struct PrimalRadialKernel {
    p: SpeedParams,
    h: f64,
    cells: usize,
    r: Vec<f64>,
    cb_k: f64,  // C(n-1, k)
    cb_k1: f64, // C(n-1, k-1)
    cb_nk: f64, // C(n, k)
    ak: f64,
}

impl PrimalRadialKernel {
    pub fn new(field: &RadialField, p: SpeedParams) -> Result<Self, CoreError> {
        let cells = field.last_index();
        Ok(PrimalRadialKernel {
            p,
            h: field.h,
            cells,
            r: (0..=cells).map(|i| field.radius(i)).collect(),
            cb_k: binomial(p.n - 1, p.k),
            cb_k1: binomial(p.n - 1, p.k - 1),
            cb_nk: binomial(p.n, p.k),
            ak: p.alpha / p.k as f64,
        })
    }

    /// (rhs, kappa_rad, kappa_ang) at node i.
    fn rhs_at(&self, cur: &[f64], i: usize) -> Result<(f64, f64, f64), CoreError> {
        let h = self.h;
        if i == 0 {
            let c = 2.0 * (cur[1] - cur[0]) / (h * h);
            if c <= 0.0 {
                return Err(CoreError::Convexity {
                    location: "r = 0".into(),
                    detail: format!("pole curvature {c:.3e} <= 0"),
                });
            }
            let sig = self.cb_nk * c.powi(self.p.k as i32);
            return Ok((powq(sig, self.ak), c, c));
        }
        let du = (cur[i + 1] - cur[i - 1]) / (2.0 * h);
        let d2u = (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) / (h * h);
        self.rhs_from(du, d2u, self.r[i])
    }

    fn rhs_from(&self, du: f64, d2u: f64, r: f64) -> Result<(f64, f64, f64), CoreError> {
        if du * du > 1.0 - EPS_GUARD {
            return Err(CoreError::Spacelike { location: format!("r = {r}"), grad_norm: du.abs() });
        }
        let w = (1.0 - du * du).sqrt();
        let kr = d2u / (w * w * w);
        let ka = du / (r * w);
        if kr <= 0.0 || ka <= 0.0 {
            return Err(CoreError::Convexity {
                location: format!("r = {r}"),
                detail: format!("principal curvatures ({kr:.3e}, {ka:.3e})"),
            });
        }
        let sig = self.cb_k * ka.powi(self.p.k as i32)
            + kr * self.cb_k1 * ka.powi(self.p.k as i32 - 1);
        Ok((powq(sig, self.ak) * w, kr, ka))
    }

    pub fn apply(
        &self,
        cur: &[f64],
        next: &mut [f64],
        dt: f64,
    ) -> Result<RadialStats, CoreError> {
        let mut st = RadialStats::new();
        for i in 0..self.cells {
            let (rhs, kr, ka) = self.rhs_at(cur, i)?;
            st.base.min_eig = st.base.min_eig.min(kr.min(ka));
            st.kappa_max = st.kappa_max.max(kr.max(ka));
            st.base.max_speed = st.base.max_speed.max(rhs.abs());
            st.base.residual_sup = st.base.residual_sup.max(rhs.abs());
            st.base.residual_min = st.base.residual_min.min(rhs);
            next[i] = cur[i] + dt * rhs;
        }
        Ok(st)
    }

    pub fn max_dt(&self, cur: &[f64]) -> Result<f64, CoreError> {
        let h = self.h;
        let mut max_diff = 0.0f64;
        let mut max_mono = 0.0f64;
        for i in 0..self.cells {
            let (du, d2u, r) = if i == 0 {
                (0.0, 2.0 * (cur[1] - cur[0]) / (h * h), 0.0)
            } else {
                (
                    (cur[i + 1] - cur[i - 1]) / (2.0 * h),
                    (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) / (h * h),
                    self.r[i],
                )
            };
            let (d2coef, c1) = if i == 0 {
                let c = d2u;
                // d rhs / d u''(0): rhs = (C(n,k) c^k)^{alpha/k}
                let sig = self.cb_nk * c.powi(self.p.k as i32);
                let dcoef = self.ak
                    * powq(sig, self.ak - 1.0)
                    * self.cb_nk
                    * self.p.k as f64
                    * c.powi(self.p.k as i32 - 1);
                (dcoef, 0.0)
            } else {
                if du <= 0.0 || d2u <= 0.0 {
                    return Err(CoreError::Convexity {
                        location: format!("r = {r}"),
                        detail: format!("du = {du:.3e}, d2u = {d2u:.3e}"),
                    });
                }
                let w = (1.0 - du * du).sqrt();
                let ka = du / (r * w);
                let sig = self.cb_k * ka.powi(self.p.k as i32)
                    + (d2u / (w * w * w)) * self.cb_k1 * ka.powi(self.p.k as i32 - 1);
                let d2coef = self.ak
                    * powq(sig, self.ak - 1.0)
                    * self.cb_k1
                    * ka.powi(self.p.k as i32 - 1)
                    / (w * w);
                // first-order sensitivity by finite differences in u'
                let d = 1e-7_f64.max(1e-7 * du.abs());
                let up = self.rhs_from(du + d, d2u, r);
                let um = self.rhs_from(du - d, d2u, r);
                let c1 = match (up, um) {
                    (Ok((a, _, _)), Ok((b, _, _))) => ((a - b) / (2.0 * d)).abs(),
                    _ => 0.0,
                };
                (d2coef, c1)
            };
            max_diff = max_diff.max(d2coef);
            max_mono = max_mono.max(2.0 * d2coef / (h * h) + c1 / h);
        }
        if max_diff <= 0.0 {
            return Err(CoreError::domain("degenerate primal diffusion coefficient"));
        }
        Ok((0.2 * h * h / max_diff).min(0.95 / max_mono))
    }
}

#[derive(Debug, Clone)]
pub struct RadialRunConfig {
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub record_every: usize,
    pub cfl_every: usize,
    pub rk2: bool,
    pub dt_cap: Option<f64>,
    pub stop_residual: Option<f64>,
    pub lower_barrier: Option<Vec<f64>>,
    pub upper_barrier: Option<Vec<f64>>,
    pub barrier_uses_scale: bool,
    pub track_fx: bool,
}

impl Default for RadialRunConfig {
    fn default() -> Self {
        RadialRunConfig {
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
pub struct RadialRunResult {
    pub final_field: RadialField,
    pub t: f64,
    pub steps: usize,
    pub snapshots: Vec<(f64, RadialField)>,
    pub barrier_series: Vec<(f64, f64, f64)>,
    pub barrier_lower_worst: f64,
    pub barrier_upper_worst: f64,
    pub fx_interior_max: f64,
    pub fx_interior_min: f64,
    pub fx_pb_max: f64,
    pub fx_pb_min: f64,
    pub residual_history: Vec<(f64, f64)>,
    pub residual_integral: f64,
    pub residual_min_seen: f64,
    pub min_eig_seen: f64,
    pub max_speed_seen: f64,
    pub kappa_max_seen: f64,
    pub stopped_by_residual: bool,
}

impl RadialRunResult {
    fn new(initial: &RadialField) -> Self {
        RadialRunResult {
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
            kappa_max_seen: f64::NEG_INFINITY,
            stopped_by_residual: false,
        }
    }
}

enum RadialMode<'a> {
    Dual,
    Normalized,
    Primal(&'a dyn Fn(f64) -> f64),
}

fn run_radial(
    initial: &RadialField,
    p: SpeedParams,
    cfg: &RadialRunConfig,
    mode: RadialMode,
) -> Result<RadialRunResult, CoreError> {
    let cells = initial.last_index();
    let dual_kernel = match mode {
        RadialMode::Primal(_) => None,
        _ => Some(RadialDualKernel::new(initial, p)?),
    };
    let primal_kernel = match mode {
        RadialMode::Primal(_) => Some(PrimalRadialKernel::new(initial, p)?),
        _ => None,
    };
    let normalized = matches!(mode, RadialMode::Normalized);
    let u0_last = initial.values[cells];
    let mut cur = initial.values.clone();
    let mut next = initial.values.clone();
    let mut time = 0.0f64;
    let mut steps = 0usize;
    let mut out = RadialRunResult::new(initial);
    let max_dt_of = |vals: &[f64]| -> Result<f64, CoreError> {
        match (&dual_kernel, &primal_kernel) {
            (Some(k), _) => k.max_dt(vals),
            (_, Some(k)) => k.max_dt(vals),
            _ => unreachable!(),
        }
    };
    let mut dt_bound = max_dt_of(&cur)? * 0.95;
    let mut snap_iter = cfg.snapshot_times.iter().copied().peekable();
    let mut scratch = if cfg.rk2 { Some(cur.clone()) } else { None };
    while time < cfg.t_end - 1e-14 {
        if steps > 0 && steps % cfg.cfl_every == 0 {
            dt_bound = max_dt_of(&cur)? * 0.95;
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
            (Some(lo), Some(hi)) => Some((
                lo.as_slice(),
                hi.as_slice(),
                if cfg.barrier_uses_scale { a_new } else { 1.0 },
            )),
            _ => None,
        };
        let stats = match (&dual_kernel, &primal_kernel) {
            (Some(k), _) => {
                if let Some(mid) = scratch.as_mut() {
                    k.apply(&cur, mid, 0.5 * dt, normalized)?;
                    let a_half = if normalized { 1.0 } else { p.scale_factor(time + 0.5 * dt) };
                    mid[cells] = if normalized { u0_last } else { a_half * u0_last };
                    let st = k.apply_with(mid, &mut next, dt, normalized, cfg.track_fx, None)?;
                    for i in 0..cells {
                        next[i] = cur[i] + (next[i] - mid[i]);
                    }
                    let mut st2 = st;
                    if let Some((lo, hi, scale)) = barriers {
                        st2.lower_margin = f64::INFINITY;
                        st2.upper_margin = f64::INFINITY;
                        for i in 0..cells {
                            st2.lower_margin = st2.lower_margin.min(next[i] - scale * lo[i]);
                            st2.upper_margin = st2.upper_margin.min(scale * hi[i] - next[i]);
                        }
                    }
                    st2
                } else {
                    k.apply_with(&cur, &mut next, dt, normalized, cfg.track_fx, barriers)?
                }
            }
            (_, Some(k)) => k.apply(&cur, &mut next, dt)?,
            _ => unreachable!(),
        };
        next[cells] = match mode {
            RadialMode::Dual => a_new * u0_last,
            RadialMode::Normalized => u0_last,
            RadialMode::Primal(boundary) => boundary(t_new),
        };
        out.min_eig_seen = out.min_eig_seen.min(stats.base.min_eig);
        out.max_speed_seen = out.max_speed_seen.max(stats.base.max_speed);
        out.kappa_max_seen = out.kappa_max_seen.max(stats.kappa_max);
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
            out.snapshots.push((
                time,
                RadialField { rmax: initial.rmax, h: initial.h, values: cur.clone() },
            ));
        }
        if let Some(tol) = cfg.stop_residual {
            if normalized && stats.base.residual_sup <= tol {
                out.stopped_by_residual = true;
                break;
            }
        }
    }
    if cfg.track_fx {
        if let Some(k) = &dual_kernel {
            let stats = k.apply_with(&cur, &mut next, 0.0, normalized, true, None)?;
            out.fx_interior_max = out.fx_interior_max.max(stats.fx_max);
            out.fx_interior_min = out.fx_interior_min.min(stats.fx_min);
        }
        if matches!(mode, RadialMode::Dual) && u0_last < 0.0 {
            let inv = 1.0 / -u0_last;
            out.fx_pb_min = out.fx_pb_min.min(inv);
            out.fx_pb_max = out.fx_pb_max.max(p.scale_factor(time).powf(p.alpha) * inv);
        }
    }
    out.final_field = RadialField { rmax: initial.rmax, h: initial.h, values: cur };
    out.t = time;
    out.steps = steps;
    Ok(out)
}

pub fn run_dual_radial(
    initial: &RadialField,
    p: SpeedParams,
    cfg: &RadialRunConfig,
) -> Result<RadialRunResult, CoreError> {
    run_radial(initial, p, cfg, RadialMode::Dual)
}

pub fn run_normalized_radial(
    initial: &RadialField,
    p: SpeedParams,
    cfg: &RadialRunConfig,
) -> Result<RadialRunResult, CoreError> {
    run_radial(initial, p, cfg, RadialMode::Normalized)
}

pub fn run_primal_radial(
    initial: &RadialField,
    p: SpeedParams,
    boundary: &dyn Fn(f64) -> f64,
    cfg: &RadialRunConfig,
) -> Result<RadialRunResult, CoreError> {
    run_radial(initial, p, cfg, RadialMode::Primal(boundary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primal_self_similar_short() {
        // u(r, t) = sqrt(2 A^2 + r^2) for n=2, k=1, alpha=1
        let p = SpeedParams::new(2, 1, 1.0).unwrap();
        let a2 = 2.0;
        let initial = RadialField::from_fn(5.0, 256, |r| (a2 + r * r).sqrt());
        let boundary = move |t: f64| {
            let a = (2.0 * t + 1.0).sqrt();
            (a2 * a * a + 25.0).sqrt()
        };
        let cfg = RadialRunConfig { t_end: 0.1, ..Default::default() };
        let out = run_primal_radial(&initial, p, &boundary, &cfg).unwrap();
        let afin = (2.0 * out.t + 1.0).sqrt();
        let mut err = 0.0f64;
        for i in 0..out.final_field.len() {
            let r = out.final_field.radius(i);
            err = err.max((out.final_field.values[i] - (a2 * afin * afin + r * r).sqrt()).abs());
        }
        assert!(err < 2e-4, "err {err} steps {}", out.steps);
    }

    #[test]
    fn dual_radial_self_similar_short() {
        let p = SpeedParams::new(2, 1, 1.0).unwrap();
        let a = 2.0f64.sqrt();
        let initial = RadialField::from_fn(0.9, 128, |rho| -a * (1.0 - rho * rho).sqrt());
        let cfg = RadialRunConfig { t_end: 0.05, ..Default::default() };
        let out = run_dual_radial(&initial, p, &cfg).unwrap();
        let afin = p.scale_factor(out.t);
        let mut err = 0.0f64;
        for i in 0..out.final_field.len() {
            let rho = out.final_field.radius(i);
            let exact = -a * afin * (1.0 - rho * rho).sqrt();
            err = err.max((out.final_field.values[i] - exact).abs());
        }
        assert!(err < 5e-4, "err {err} steps {}", out.steps);
    }

    #[test]
    fn normalized_radial_is_stationary_on_expander() {
        let p = SpeedParams::new(2, 1, 1.0).unwrap();
        let a = 2.0f64.sqrt();
        let initial = RadialField::from_fn(0.9, 128, |rho| -a * (1.0 - rho * rho).sqrt());
        let cfg = RadialRunConfig { t_end: 0.2, ..Default::default() };
        let out = run_normalized_radial(&initial, p, &cfg).unwrap();
        let drift = out.final_field.sup_distance(&initial).unwrap();
        assert!(drift < 2e-4, "drift {drift}");
        // H~ of the discrete expander is truncation-small, never very negative
        assert!(out.residual_min_seen > -1e-4);
    }

    #[test]
    fn constant_field_rejected_by_primal() {
        let p = SpeedParams::new(2, 1, 1.0).unwrap();
        let initial = RadialField::from_fn(4.0, 64, |_| 2.0);
        let cfg = RadialRunConfig { t_end: 0.01, ..Default::default() };
        let out = run_primal_radial(&initial, p, &|_| 2.0, &cfg);
        assert!(matches!(out, Err(CoreError::Convexity { .. })));
    }
}
