//! Executable forms of the structural statements the flow is supposed to
//! satisfy: order/comparison checks, bound monitors, evolution-identity
//! residuals, scaling covariance and convergence reporting.
//!
//! Every monitor's verdict is a pure function of its inputs; re-running on
//! saved snapshots reproduces it. The bounds folded into a predicate string
//! carry their concrete numbers so a verdict can be audited from the CSV.

use crate::error::CoreError;
use crate::grid::{BallField2D, CellKind, RadialField};
use crate::params::{binomial, SpeedParams};
use crate::report::json_num;
use crate::snapshot::fmt_f64;
use crate::symfunc;
use serde_json::{json, Value};

#[derive(Debug, Clone)]
pub struct Verdict {
    pub pass: bool,
    pub predicate: String,
    pub tolerance: f64,
}

/// A named time series with a reproducible pass/fail verdict.
#[derive(Debug, Clone)]
pub struct MonitorSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub verdict: Verdict,
}

impl MonitorSeries {
    pub fn csv(&self) -> String {
        crate::snapshot::series_csv(&self.times, &self.values)
    }

    pub fn verdict_json(&self) -> Value {
        json!({
            "name": self.name,
            "pass": self.verdict.pass,
            "predicate": self.verdict.predicate,
            "tolerance": json_num(self.verdict.tolerance),
            "points": self.times.len(),
        })
    }
}

fn check_increasing(times: &[f64]) -> Result<(), CoreError> {
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CoreError::domain("monitor times must be strictly increasing"));
    }
    Ok(())
}

/// Ordering monitor (maximum-principle comparisons): per time, the min over
/// points of (B - A). Passes iff the ordering holds initially and on the
/// boundary (the premise of the comparison principle) and the per-time
/// minimum never drops below -tol.
pub fn comparison_check_radial(
    times: &[f64],
    run_a: &[RadialField],
    run_b: &[RadialField],
    tol: f64,
) -> Result<MonitorSeries, CoreError> {
    check_increasing(times)?;
    if times.len() != run_a.len() || run_a.len() != run_b.len() {
        return Err(CoreError::GridMismatch("series lengths differ".into()));
    }
    let mut values = Vec::with_capacity(times.len());
    let mut premise = true;
    for (m, (a, b)) in run_a.iter().zip(run_b).enumerate() {
        if a.len() != b.len() || (a.h - b.h).abs() > 1e-14 {
            return Err(CoreError::GridMismatch("fields differ in grid".into()));
        }
        let mut minv = f64::INFINITY;
        for i in 0..a.len() {
            minv = minv.min(b.values[i] - a.values[i]);
        }
        let bdy = b.values[a.last_index()] - a.values[a.last_index()];
        if bdy < -tol {
            premise = false;
        }
        if m == 0 && minv < -tol {
            premise = false;
        }
        values.push(minv);
    }
    let worst = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = premise && worst >= -tol;
    Ok(MonitorSeries {
        name: "comparison".into(),
        times: times.to_vec(),
        values,
        verdict: Verdict {
            pass,
            predicate: format!(
                "ordering premise {} and min(B-A) = {} >= -tol",
                if premise { "holds" } else { "fails" },
                fmt_f64(worst)
            ),
            tolerance: tol,
        },
    })
}

pub fn comparison_check_ball(
    times: &[f64],
    run_a: &[BallField2D],
    run_b: &[BallField2D],
    tol: f64,
) -> Result<MonitorSeries, CoreError> {
    check_increasing(times)?;
    if times.len() != run_a.len() || run_a.len() != run_b.len() {
        return Err(CoreError::GridMismatch("series lengths differ".into()));
    }
    let mut values = Vec::with_capacity(times.len());
    let mut premise = true;
    for (m, (a, b)) in run_a.iter().zip(run_b).enumerate() {
        if !a.same_grid(b) {
            return Err(CoreError::GridMismatch("fields differ in grid".into()));
        }
        let mut minv = f64::INFINITY;
        let mut min_ring = f64::INFINITY;
        for idx in 0..a.values.len() {
            match a.grid.kind[idx] {
                CellKind::Outside => {}
                CellKind::Ring => {
                    let d = b.values[idx] - a.values[idx];
                    min_ring = min_ring.min(d);
                    minv = minv.min(d);
                }
                CellKind::Interior => minv = minv.min(b.values[idx] - a.values[idx]),
            }
        }
        if min_ring < -tol || (m == 0 && minv < -tol) {
            premise = false;
        }
        values.push(minv);
    }
    let worst = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = premise && worst >= -tol;
    Ok(MonitorSeries {
        name: "comparison".into(),
        times: times.to_vec(),
        values,
        verdict: Verdict {
            pass,
            predicate: format!(
                "ordering premise {} and min(B-A) = {} >= -tol",
                if premise { "holds" } else { "fails" },
                fmt_f64(worst)
            ),
            tolerance: tol,
        },
    })
}

/// Verdict shared by the boundary-extremum monitors: interior space-time
/// extrema of `F~ x_{n+1}` must not exceed the parabolic-boundary extrema by
/// more than `rel_tol` relative.
pub fn fx_extremum_verdict(
    interior_max: f64,
    interior_min: f64,
    pb_max: f64,
    pb_min: f64,
    rel_tol: f64,
) -> Verdict {
    let hi_ok = interior_max <= pb_max * (1.0 + rel_tol) + 1e-300;
    let lo_ok = interior_min >= pb_min - rel_tol * pb_min.abs();
    Verdict {
        pass: hi_ok && lo_ok,
        predicate: format!(
            "interior [{}, {}] within parabolic-boundary [{}, {}] (rel)",
            fmt_f64(interior_min),
            fmt_f64(interior_max),
            fmt_f64(pb_min),
            fmt_f64(pb_max)
        ),
        tolerance: rel_tol,
    }
}

/// F~ x_{n+1} = F_*^alpha(M) / w* at the interior nodes of a radial dual
/// field.
fn fx_field_radial(field: &RadialField, p: &SpeedParams) -> Result<Vec<f64>, CoreError> {
    let (lr, la) = crate::geometry::dual_eigen_radial(field)?;
    let mut out = Vec::with_capacity(field.len().saturating_sub(1));
    for i in 0..field.last_index() {
        let rho = field.radius(i);
        let ws = (1.0 - rho * rho).sqrt();
        let mut lam = vec![la[i]; p.n];
        lam[0] = lr[i];
        let fs = symfunc::speed_f_star(p, &lam)?;
        out.push(fs.powf(p.alpha) / ws);
    }
    Ok(out)
}

/// Snapshot-series boundary-extremum check for radial dual runs. The first
/// snapshot must be the initial slice (it forms the parabolic boundary
/// together with the analytic ring curve `A(t~)^alpha / (-u_0*)`).
pub fn boundary_extremum_check_radial(
    times: &[f64],
    fields: &[RadialField],
    p: &SpeedParams,
    rel_tol: f64,
) -> Result<(MonitorSeries, MonitorSeries), CoreError> {
    check_increasing(times)?;
    if times.is_empty() || times[0] != 0.0 {
        return Err(CoreError::domain("boundary extremum check needs the t = 0 snapshot first"));
    }
    let u0_last = fields[0].values[fields[0].last_index()];
    if u0_last >= 0.0 {
        return Err(CoreError::domain("ring curve needs u_0* < 0 on the boundary"));
    }
    let mut pb_max = f64::NEG_INFINITY;
    let mut pb_min = f64::INFINITY;
    let mut maxes = Vec::with_capacity(times.len());
    let mut mins = Vec::with_capacity(times.len());
    let mut interior_max = f64::NEG_INFINITY;
    let mut interior_min = f64::INFINITY;
    for (m, f) in fields.iter().enumerate() {
        let fx = fx_field_radial(f, p)?;
        let fmax = fx.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let fmin = fx.iter().cloned().fold(f64::INFINITY, f64::min);
        maxes.push(fmax);
        mins.push(fmin);
        if m == 0 {
            pb_max = pb_max.max(fmax);
            pb_min = pb_min.min(fmin);
        } else {
            interior_max = interior_max.max(fmax);
            interior_min = interior_min.min(fmin);
        }
    }
    // lateral ring curve, increasing in t
    let inv = 1.0 / -u0_last;
    pb_min = pb_min.min(inv);
    pb_max = pb_max.max(p.scale_factor(*times.last().unwrap()).powf(p.alpha) * inv);
    let verdict = fx_extremum_verdict(interior_max, interior_min, pb_max, pb_min, rel_tol);
    let hi = MonitorSeries {
        name: "fx_interior_max".into(),
        times: times.to_vec(),
        values: maxes,
        verdict: verdict.clone(),
    };
    let lo = MonitorSeries {
        name: "fx_interior_min".into(),
        times: times.to_vec(),
        values: mins,
        verdict,
    };
    Ok((hi, lo))
}

/// Local speed bounds (upper `Phi < C_2 v` pointwise, lower the barrier-type
/// estimate with gamma = 4 + 8 V_0^2) on the region K = { u + t <= c } of a
/// primal radial run. The lower bound's derivation divides by alpha - 1, so
/// for alpha = 1 it is skipped with a notice in the predicate.
pub fn phi_bounds_check(
    times: &[f64],
    fields: &[RadialField],
    p: &SpeedParams,
    c: f64,
    tol: f64,
) -> Result<MonitorSeries, CoreError> {
    check_increasing(times)?;
    if times.len() != fields.len() || fields.is_empty() {
        return Err(CoreError::GridMismatch("series lengths differ".into()));
    }
    let c2 = fields[0].values[0]; // max |u_0*| over the reachable ball = u_0(0)
    struct Node {
        phi: f64,
        v: f64,
        u: f64,
    }
    let mut k_nonempty = false;
    let mut v0 = f64::NEG_INFINITY;
    let mut k_reach: f64 = 0.0;
    let mut per_time: Vec<Vec<Node>> = Vec::with_capacity(times.len());
    for (t, f) in times.iter().zip(fields) {
        let cur = crate::geometry::primal_curvature_radial(f)?;
        let mut nodes = Vec::new();
        for i in 0..f.len() {
            if f.values[i] + t <= c {
                let mut kappa = vec![cur.kappa_ang[i]; p.n];
                kappa[0] = cur.kappa_rad[i];
                let phi = symfunc::speed_f_alpha(p, &kappa)?;
                k_nonempty = true;
                v0 = v0.max(cur.tilt[i]);
                k_reach = k_reach.max(f.radius(i));
                nodes.push(Node { phi, v: cur.tilt[i], u: f.values[i] });
            }
        }
        per_time.push(nodes);
    }
    if !k_nonempty {
        return Err(CoreError::domain(format!("K = {{u + t <= {c}}} is empty on this run")));
    }
    let gamma = 4.0 + 8.0 * v0 * v0;
    let included = k_reach <= fields[0].rmax - 5.0 * fields[0].h;
    let lower_active = p.alpha > 1.0;
    let mut values = Vec::with_capacity(times.len());
    for (t, nodes) in times.iter().zip(&per_time) {
        let mut margin = f64::INFINITY;
        for nd in nodes {
            margin = margin.min(c2 * nd.v - nd.phi);
            if lower_active {
                let lower = ((c - t - nd.u) / c).max(0.0).powf(gamma)
                    * (2.0 * (nd.v - v0)).exp()
                    / ((p.alpha - 1.0) * v0);
                margin = margin.min(nd.phi - lower);
            }
        }
        values.push(margin);
    }
    let worst = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = worst >= -tol && included;
    Ok(MonitorSeries {
        name: "phi_bounds".into(),
        times: times.to_vec(),
        values,
        verdict: Verdict {
            pass,
            predicate: format!(
                "{}; C_2 = {}, V_0 = {}, gamma = {}, K inside grid: {included}, worst margin {}",
                if lower_active {
                    "upper Phi < C_2 v and lower barrier bound"
                } else {
                    "alpha = 1: lower bound skipped, upper Phi < C_2 v only"
                },
                fmt_f64(c2),
                fmt_f64(v0),
                fmt_f64(gamma),
                fmt_f64(worst)
            ),
            tolerance: tol,
        },
    })
}

/// Residuals of the evolution identities along a primal radial run:
///   L u   = (1 - alpha) Phi v,
///   L v   = -sum_i Phi^{ii} kappa_i^2 v,
///   L Phi = -sum_i Phi^{ii} kappa_i^2 Phi,
/// with L = d/dt (along the normal-gauge particle) - Phi^{ij} nabla_ij on the
/// induced metric. Time derivatives use centered differences of consecutive
/// snapshots (uniform spacing required); the sup is taken over an interior
/// window that excludes pole/outer stencils and the outer fraction of the
/// grid.
pub fn evolution_identity_check(
    times: &[f64],
    fields: &[RadialField],
    p: &SpeedParams,
    keep_frac: f64,
    ceiling: Option<f64>,
) -> Result<[MonitorSeries; 3], CoreError> {
    check_increasing(times)?;
    if times.len() < 3 {
        return Err(CoreError::domain("need at least 3 snapshots for centered time stencils"));
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(CoreError::domain("snapshots must be uniformly spaced in time"));
        }
    }
    let n_nodes = fields[0].len();
    let margin = 3usize;
    let hi = ((keep_frac * n_nodes as f64) as usize).min(n_nodes - margin);
    if hi <= margin + 2 {
        return Err(CoreError::domain("interior window is empty"));
    }
    let beta = p.alpha / p.k as f64;
    let nn = p.n;
    let k = p.k;
    // per-snapshot derived fields
    struct Derived {
        v: Vec<f64>,
        phi: Vec<f64>,
        phi_rad: Vec<f64>,
        phi_ang: Vec<f64>,
        kr: Vec<f64>,
        ka: Vec<f64>,
        w: Vec<f64>,
        du: Vec<f64>,
        d2u: Vec<f64>,
    }
    let mut derived = Vec::with_capacity(fields.len());
    for f in fields {
        let cur = crate::geometry::primal_curvature_radial(f)?;
        let mut phi = vec![0.0; n_nodes];
        let mut phi_rad = vec![0.0; n_nodes];
        let mut phi_ang = vec![0.0; n_nodes];
        for i in 0..n_nodes {
            let (krv, kav) = (cur.kappa_rad[i], cur.kappa_ang[i]);
            let sig = binomial(nn - 1, k) * kav.powi(k as i32)
                + krv * binomial(nn - 1, k - 1) * kav.powi(k as i32 - 1);
            if sig <= 0.0 {
                return Err(CoreError::ConeViolation {
                    location: format!("node {i}"),
                    order: k,
                    value: sig,
                });
            }
            phi[i] = sig.powf(beta);
            let pref = beta * sig.powf(beta - 1.0);
            // sigma_{k-1} with the radial slot deleted / one angular slot deleted
            let del_rad = binomial(nn - 1, k - 1) * kav.powi(k as i32 - 1);
            let del_ang = binomial(nn - 2, k - 1) * kav.powi(k as i32 - 1)
                + if k >= 2 {
                    krv * binomial(nn - 2, k - 2) * kav.powi(k as i32 - 2)
                } else {
                    0.0
                };
            phi_rad[i] = pref * del_rad;
            phi_ang[i] = pref * del_ang;
        }
        derived.push(Derived {
            v: cur.tilt.clone(),
            phi,
            phi_rad,
            phi_ang,
            kr: cur.kappa_rad.clone(),
            ka: cur.kappa_ang.clone(),
            w: cur.w.clone(),
            du: cur.du.clone(),
            d2u: cur.d2u.clone(),
        });
    }
    let radial_d1 = |q: &[f64], i: usize, h: f64| (q[i + 1] - q[i - 1]) / (2.0 * h);
    let radial_d2 = |q: &[f64], i: usize, h: f64| (q[i + 1] - 2.0 * q[i] + q[i - 1]) / (h * h);
    let h = fields[0].h;
    let mut out_times = Vec::new();
    let mut res = [Vec::new(), Vec::new(), Vec::new()];
    for m in 1..fields.len() - 1 {
        let d = &derived[m];
        let mut sup = [0.0f64; 3];
        for i in margin..hi {
            let r = fields[m].radius(i);
            let drift = d.phi[i] * d.du[i] / d.w[i];
            let wprime = -d.du[i] * d.d2u[i] / d.w[i];
            let w2 = d.w[i] * d.w[i];
            let op = |q: &[f64], qm: &[f64], qp: &[f64]| -> f64 {
                let dtq = (qp[i] - qm[i]) / (2.0 * dt) + drift * radial_d1(q, i, h);
                let lap = d.phi_rad[i] * (radial_d2(q, i, h) - (wprime / d.w[i]) * radial_d1(q, i, h))
                    / w2
                    + (nn - 1) as f64 * d.phi_ang[i] * radial_d1(q, i, h) / (r * w2);
                dtq - lap
            };
            let sum_term =
                d.phi_rad[i] * d.kr[i] * d.kr[i] + (nn - 1) as f64 * d.phi_ang[i] * d.ka[i] * d.ka[i];
            let lu = op(&fields[m].values, &fields[m - 1].values, &fields[m + 1].values);
            let lv = op(&d.v, &derived[m - 1].v, &derived[m + 1].v);
            let lphi = op(&d.phi, &derived[m - 1].phi, &derived[m + 1].phi);
            sup[0] = sup[0].max((lu - (1.0 - p.alpha) * d.phi[i] * d.v[i]).abs());
            sup[1] = sup[1].max((lv + sum_term * d.v[i]).abs());
            sup[2] = sup[2].max((lphi + sum_term * d.phi[i]).abs());
        }
        out_times.push(times[m]);
        for j in 0..3 {
            res[j].push(sup[j]);
        }
    }
    let names = ["eel1_height", "eel2_tilt", "eel3_speed"];
    let mut series = Vec::new();
    for j in 0..3 {
        let worst = res[j].iter().cloned().fold(0.0f64, f64::max);
        let (pass, predicate) = match ceiling {
            Some(cl) => (worst <= cl, format!("sup residual {} <= ceiling", fmt_f64(worst))),
            None => (true, format!("sup residual {} (reported; order asserted by ladder)", fmt_f64(worst))),
        };
        series.push(MonitorSeries {
            name: names[j].into(),
            times: out_times.clone(),
            values: res[j].clone(),
            verdict: Verdict { pass, predicate, tolerance: ceiling.unwrap_or(f64::INFINITY) },
        });
    }
    Ok([series.remove(0), series.remove(0), series.remove(0)])
}

/// Minimum pairwise refinement order over a ladder of residuals (coarse to
/// fine, halving h each level).
pub fn ladder_order(residuals: &[f64]) -> f64 {
    residuals
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min)
}

/// Pointwise scaling covariance of the Appendix: for `u^(x) = beta u0(x/beta)`
/// sampled on the grid beta X, the speed scales by beta^{-alpha} and the
/// support by beta, node by node. Series index is the radius.
pub fn scaling_covariance_check(
    u0: &RadialField,
    beta: f64,
    p: &SpeedParams,
    tol: f64,
) -> Result<MonitorSeries, CoreError> {
    if beta <= 0.0 {
        return Err(CoreError::domain("beta must be positive"));
    }
    let scaled = RadialField {
        rmax: u0.rmax * beta,
        h: u0.h * beta,
        values: u0.values.iter().map(|v| v * beta).collect(),
    };
    scaling_covariance_check_pair(u0, &scaled, beta, p, tol)
}

/// Same covariance check against an explicitly supplied candidate for the
/// scaled field (negative controls feed corrupted candidates).
pub fn scaling_covariance_check_pair(
    u0: &RadialField,
    candidate: &RadialField,
    beta: f64,
    p: &SpeedParams,
    tol: f64,
) -> Result<MonitorSeries, CoreError> {
    if candidate.len() != u0.len() {
        return Err(CoreError::GridMismatch("scaled candidate grid differs".into()));
    }
    let ca = crate::geometry::primal_curvature_radial(u0)?;
    let cb = crate::geometry::primal_curvature_radial(candidate)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for i in 0..u0.len() - 1 {
        let mut kappa_a = vec![ca.kappa_ang[i]; p.n];
        kappa_a[0] = ca.kappa_rad[i];
        let mut kappa_b = vec![cb.kappa_ang[i]; p.n];
        kappa_b[0] = cb.kappa_rad[i];
        let fa = symfunc::speed_f_alpha(p, &kappa_a)?;
        let fb = symfunc::speed_f_alpha(p, &kappa_b)?;
        let dev_f = (fb - beta.powf(-p.alpha) * fa).abs() / fa.max(1e-300);
        let dev_s = (cb.support[i] - beta * ca.support[i]).abs() / (beta * ca.support[i]).abs();
        times.push(u0.radius(i) + u0.h * 1e-9);
        values.push(dev_f.max(dev_s));
    }
    let worst = values.iter().cloned().fold(0.0, f64::max);
    Ok(MonitorSeries {
        name: "scaling_covariance".into(),
        times,
        values,
        verdict: Verdict {
            pass: worst <= tol,
            predicate: format!("pointwise covariance deviation {} <= tol", fmt_f64(worst)),
            tolerance: tol,
        },
    })
}

/// Flow-orbit identity `u(x, t) = (1/beta) u^(beta x, beta^{alpha+1} t)`:
/// both runs sampled at matched snapshot times, the hat run on the grid
/// beta X so the comparison is index-aligned.
pub fn orbit_identity_check(
    snaps_u: &[(f64, RadialField)],
    snaps_uhat: &[(f64, RadialField)],
    beta: f64,
    p: &SpeedParams,
    tol: f64,
) -> Result<MonitorSeries, CoreError> {
    if snaps_u.len() != snaps_uhat.len() || snaps_u.is_empty() {
        return Err(CoreError::GridMismatch("snapshot lists differ in length".into()));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for ((t, fu), (that, fh)) in snaps_u.iter().zip(snaps_uhat) {
        if ((that - beta.powf(p.alpha + 1.0) * t) / that.max(1e-300)).abs() > 1e-10 {
            return Err(CoreError::GridMismatch(format!(
                "snapshot times not matched: {that} vs beta^(1+alpha) {t}"
            )));
        }
        if fu.len() != fh.len() {
            return Err(CoreError::GridMismatch("orbit grids not index-aligned".into()));
        }
        let mut sup = 0.0f64;
        for i in 0..fu.len() {
            sup = sup.max((fu.values[i] - fh.values[i] / beta).abs());
        }
        times.push(*t);
        values.push(sup);
    }
    let worst = values.iter().cloned().fold(0.0, f64::max);
    Ok(MonitorSeries {
        name: "orbit_identity".into(),
        times,
        values,
        verdict: Verdict {
            pass: worst <= tol,
            predicate: format!("sup deviation {} <= tol at matched times", fmt_f64(worst)),
            tolerance: tol,
        },
    })
}

/// Convergence report: sup distance to a fixed target versus tau; passes iff
/// the series is nonincreasing after the transient (its global max) and the
/// final value meets the tolerance.
pub fn convergence_report(
    name: &str,
    taus: &[f64],
    sups: &[f64],
    tol: f64,
) -> Result<MonitorSeries, CoreError> {
    check_increasing(taus)?;
    if taus.len() != sups.len() || sups.is_empty() {
        return Err(CoreError::GridMismatch("series lengths differ".into()));
    }
    let argmax = sups
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let mut monotone = true;
    for w in argmax..sups.len() - 1 {
        if sups[w + 1] > sups[w] * (1.0 + 1e-9) + 1e-15 {
            monotone = false;
        }
    }
    let last = *sups.last().unwrap();
    Ok(MonitorSeries {
        name: name.into(),
        times: taus.to_vec(),
        values: sups.to_vec(),
        verdict: Verdict {
            pass: monotone && last <= tol,
            predicate: format!(
                "nonincreasing after transient (index {argmax}): {monotone}; final sup {} <= tol",
                fmt_f64(last)
            ),
            tolerance: tol,
        },
    })
}

/// Largest principal curvature per snapshot against a user ceiling (the
/// observable conclusion of the interior curvature estimate).
pub fn kappa_max_series(
    times: &[f64],
    fields: &[RadialField],
    ceiling: f64,
) -> Result<MonitorSeries, CoreError> {
    check_increasing(times)?;
    let mut values = Vec::with_capacity(fields.len());
    for f in fields {
        let cur = crate::geometry::primal_curvature_radial(f)?;
        let mut m = f64::NEG_INFINITY;
        for i in 0..f.len() {
            m = m.max(cur.kappa_rad[i].max(cur.kappa_ang[i]));
        }
        values.push(m);
    }
    let worst = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(MonitorSeries {
        name: "kappa_max".into(),
        times: times.to_vec(),
        values,
        verdict: Verdict {
            pass: worst <= ceiling,
            predicate: format!("max principal curvature {} <= ceiling", fmt_f64(worst)),
            tolerance: ceiling,
        },
    })
}

/// Summability of a residual history: integral finite with a vanishing tail
/// (last-quarter contribution below `tail_frac` of the total) and monotone
/// after its global max.
pub fn residual_summability(
    history: &[(f64, f64)],
    integral: f64,
    tail_frac: f64,
) -> Verdict {
    if history.len() < 8 {
        return Verdict {
            pass: false,
            predicate: "history too short".into(),
            tolerance: tail_frac,
        };
    }
    let argmax = history
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let mut monotone = true;
    for w in argmax..history.len() - 1 {
        if history[w + 1].1 > history[w].1 * (1.0 + 1e-9) + 1e-15 {
            monotone = false;
        }
    }
    // tail contribution from the last quarter of the tau range
    let t_end = history.last().unwrap().0;
    let t_cut = 0.75 * t_end;
    let mut tail = 0.0;
    for w in history.windows(2) {
        if w[0].0 >= t_cut {
            tail += w[1].1.max(w[0].1) * (w[1].0 - w[0].0);
        }
    }
    let frac = tail / integral.max(1e-300);
    Verdict {
        pass: monotone && integral.is_finite() && frac <= tail_frac,
        predicate: format!(
            "monotone after index {argmax}: {monotone}; integral {} with tail fraction {}",
            fmt_f64(integral),
            fmt_f64(frac)
        ),
        tolerance: tail_frac,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SpeedParams {
        SpeedParams::new(2, 1, 1.0).unwrap()
    }

    fn hyper(a: f64, rmax: f64, cells: usize) -> RadialField {
        RadialField::from_fn(rmax, cells, move |r| (a * a + r * r).sqrt())
    }

    #[test]
    fn comparison_pass_and_swap_fails() {
        let times = [0.0, 0.5, 1.0];
        let lo: Vec<RadialField> = times.iter().map(|_| hyper(1.0, 4.0, 64)).collect();
        let hi: Vec<RadialField> = times.iter().map(|_| hyper(1.5, 4.0, 64)).collect();
        let ok = comparison_check_radial(&times, &lo, &hi, 1e-8).unwrap();
        assert!(ok.verdict.pass);
        // identical runs: margin identically zero
        let same = comparison_check_radial(&times, &lo, &lo, 1e-8).unwrap();
        assert!(same.verdict.pass);
        assert!(same.values.iter().all(|&v| v == 0.0));
        // swapped inputs: negative margin, premise broken
        let swapped = comparison_check_radial(&times, &hi, &lo, 1e-8).unwrap();
        assert!(!swapped.verdict.pass);
    }

    #[test]
    fn convergence_report_cases() {
        let taus = [0.0, 1.0, 2.0, 3.0];
        let ok = convergence_report("c", &taus, &[1.0, 0.1, 0.01, 1e-4], 1e-3).unwrap();
        assert!(ok.verdict.pass);
        let flat = convergence_report("c", &taus, &[0.0, 0.0, 0.0, 0.0], 1e-3).unwrap();
        assert!(flat.verdict.pass);
        let non_monotone =
            convergence_report("c", &taus, &[1.0, 0.01, 0.5, 1e-4], 1e-3).unwrap();
        assert!(!non_monotone.verdict.pass);
        let too_big = convergence_report("c", &taus, &[1.0, 0.5, 0.3, 0.2], 1e-3).unwrap();
        assert!(!too_big.verdict.pass);
    }

    #[test]
    fn scaling_covariance_exact_on_hyperboloid() {
        let p = params();
        let u0 = hyper(2.0f64.sqrt(), 6.0, 512);
        let m = scaling_covariance_check(&u0, 2.0, &p, 1e-12).unwrap();
        assert!(m.verdict.pass, "{}", m.verdict.predicate);
        // identity case
        let m1 = scaling_covariance_check(&u0, 1.0, &p, 1e-15).unwrap();
        assert!(m1.verdict.pass);
        // mismatched fields fail: perturb the scaled field through the orbit op
        let snaps_u = vec![(0.1, hyper(1.0, 4.0, 64))];
        let mut wrong = hyper(1.0, 4.0, 64);
        for v in wrong.values.iter_mut() {
            *v = *v * 1.5 + 0.1;
        }
        let snaps_h = vec![(0.1 * 1.5f64.powi(2), wrong)];
        let bad = orbit_identity_check(&snaps_u, &snaps_h, 1.5, &p, 1e-3).unwrap();
        assert!(!bad.verdict.pass);
    }

    #[test]
    fn phi_bounds_on_static_hyperboloid_series() {
        // alpha = 2 run surrogate: three snapshots of the exact self-similar
        // solution u = sqrt(a^2 A^2 + r^2)
        let p = SpeedParams::new(2, 1, 2.0).unwrap();
        let a = crate::expander::hyperboloid_radius(&p);
        let times = [0.0, 0.05, 0.1];
        let fields: Vec<RadialField> = times
            .iter()
            .map(|&t| {
                let aa = p.scale_factor(t);
                RadialField::from_fn(6.0, 512, move |r| (a * a * aa * aa + r * r).sqrt())
            })
            .collect();
        let m = phi_bounds_check(&times, &fields, &p, 4.0, 1e-9).unwrap();
        assert!(m.verdict.pass, "{}", m.verdict.predicate);
        // alpha = 1: upper bound only, notice recorded
        let p1 = params();
        let a1 = crate::expander::hyperboloid_radius(&p1);
        let f1: Vec<RadialField> = times
            .iter()
            .map(|&t| {
                let aa = p1.scale_factor(t);
                RadialField::from_fn(6.0, 512, move |r| (a1 * a1 * aa * aa + r * r).sqrt())
            })
            .collect();
        let m1 = phi_bounds_check(&times, &f1, &p1, 4.0, 1e-9).unwrap();
        assert!(m1.verdict.pass);
        assert!(m1.verdict.predicate.contains("skipped"));
        // violating input: steep bump has Phi far above C_2 v
        let spike: Vec<RadialField> = times
            .iter()
            .map(|_| RadialField::from_fn(0.02, 64, |r| 0.05 + 20.0 * r * r))
            .collect();
        let bad = phi_bounds_check(&times, &spike, &p1, 4.0, 1e-9).unwrap();
        assert!(!bad.verdict.pass);
    }

    #[test]
    fn ladder_order_math() {
        assert!((ladder_order(&[1.0, 0.25, 0.0625]) - 2.0).abs() < 1e-12);
        assert!(ladder_order(&[1.0, 0.9]) < 0.2);
    }

    #[test]
    fn summability_cases() {
        let hist: Vec<(f64, f64)> =
            (0..100).map(|i| (i as f64 * 0.1, 2.0 * (-0.5 * i as f64 * 0.1).exp())).collect();
        let integral: f64 = 2.0 / 0.5;
        let v = residual_summability(&hist, integral, 0.05);
        assert!(v.pass, "{}", v.predicate);
        let flat: Vec<(f64, f64)> = (0..100).map(|i| (i as f64 * 0.1, 1.0)).collect();
        let v = residual_summability(&flat, 10.0, 0.05);
        assert!(!v.pass);
    }
}
