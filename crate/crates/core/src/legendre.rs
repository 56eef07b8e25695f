//! Discrete Legendre transform between entire convex spacelike graphs and
//! their dual potentials on the unit ball, plus boundary-trace extraction.
//!
//! The conjugate `u*(xi) = sup_x (x.xi - u(x))` is computed exactly on the
//! grid and then refined by one Newton step on a local quadratic interpolant
//! of `u` around the arg-max. The refined value is never allowed below the
//! grid sup, so Young's inequality `u(x) + u*(xi) >= x.xi` holds exactly at
//! grid pairs.

use crate::error::CoreError;
use crate::grid::{BallField2D, BallGrid, CellKind, GraphPatch2D, RadialField};
use std::sync::Arc;

/// Reject inputs whose centered second difference dips below -CONVEXITY_TOL
/// (scaled), and fields with no slope range at all (zero Hessian).
const CONVEXITY_TOL: f64 = 1e-10;

fn validate_convex_radial(f: &RadialField) -> Result<(), CoreError> {
    let scale = f.values.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
    let n = f.last_index();
    for i in 1..n {
        let d2 = f.values[i + 1] - 2.0 * f.values[i] + f.values[i - 1];
        if d2 < -CONVEXITY_TOL * scale {
            return Err(CoreError::Convexity {
                location: format!("node {i}"),
                detail: format!("second difference {d2:.3e}"),
            });
        }
    }
    let smax = (f.values[n] - f.values[n - 1]) / f.h;
    let smin = (f.values[1] - f.values[0]) / f.h;
    if smax - smin < 1e-12 {
        return Err(CoreError::Convexity {
            location: "whole field".into(),
            detail: "degenerate (zero Hessian) input".into(),
        });
    }
    Ok(())
}

/// Largest forward-difference slope; the edge of the discrete gradient image.
pub fn max_slope_radial(f: &RadialField) -> f64 {
    let n = f.last_index();
    (f.values[n] - f.values[n - 1]) / f.h
}

/// Convex conjugate of an even radial field, restricted to `[0, out_max]`.
///
/// `out_max` must lie inside the closure of the discrete gradient image.
/// With `refine` the grid sup gets one Newton step on the local quadratic
/// interpolant (guarded from below by the grid sup); without it the result is
/// the exact discrete sup, on which order reversal is exact.
pub fn conjugate_radial(
    f: &RadialField,
    out_max: f64,
    out_cells: usize,
    refine: bool,
) -> Result<RadialField, CoreError> {
    validate_convex_radial(f)?;
    let slope_edge = max_slope_radial(f);
    if out_max > slope_edge + 1e-12 {
        return Err(CoreError::domain(format!(
            "requested conjugate domain [0, {out_max}] exceeds the discrete gradient image [0, {slope_edge}]"
        )));
    }
    let n = f.last_index();
    let h = f.h;
    let hd = out_max / out_cells as f64;
    let mut values = Vec::with_capacity(out_cells + 1);
    let mut arg = 0usize;
    for j in 0..=out_cells {
        let p = j as f64 * hd;
        let g = |i: usize| i as f64 * h * p - f.values[i];
        while arg < n && g(arg + 1) >= g(arg) {
            arg += 1;
        }
        let grid_val = g(arg);
        let mut val = grid_val;
        if refine {
            // quadratic model around the arg-max; even reflection at the pole
            let (um, u0, up) = if arg == 0 {
                (f.values[1], f.values[0], f.values[1])
            } else if arg == n {
                (f.values[n - 1], f.values[n], f64::NAN) // edge-limited, no model
            } else {
                (f.values[arg - 1], f.values[arg], f.values[arg + 1])
            };
            if up.is_finite() {
                let b = (up - um) / (2.0 * h);
                let a = (up - 2.0 * u0 + um) / (h * h);
                if a > 1e-14 {
                    let delta = ((p - b) / a).clamp(-h, h);
                    let x = arg as f64 * h + delta;
                    let model = u0 + b * delta + 0.5 * a * delta * delta;
                    val = val.max(x * p - model);
                }
            }
        }
        values.push(val);
    }
    Ok(RadialField { rmax: out_max, h: hd, values })
}

/// Legendre transform of a radial graph; dual field on `[0, rho_max]`.
pub fn legendre_transform_radial(
    u: &RadialField,
    rho_max: f64,
    out_cells: usize,
) -> Result<RadialField, CoreError> {
    conjugate_radial(u, rho_max, out_cells, true)
}

/// Inverse transform: primal graph on `[0, x_max]` from a radial dual field;
/// `x_max` must lie in the gradient image `Du*(B_r)`.
pub fn legendre_inverse_radial(
    ustar: &RadialField,
    x_max: f64,
    out_cells: usize,
) -> Result<RadialField, CoreError> {
    conjugate_radial(ustar, x_max, out_cells, true)
}

/// sup over grid points x of |u(x) + u*(Du(x)) - x.Du(x)|, the matched-pair
/// residual of a transform pair (dual evaluated by cubic interpolation).
pub fn match_error_radial(u: &RadialField, ustar: &RadialField) -> Result<f64, CoreError> {
    let (du, _) = u.derivatives_even();
    let mut worst = 0.0f64;
    for i in 0..u.len() {
        let xi = du[i];
        if xi < 0.0 || xi > ustar.rmax {
            continue;
        }
        let us = ustar.interp(xi)?;
        let x = u.radius(i);
        worst = worst.max((u.values[i] + us - x * xi).abs());
    }
    Ok(worst)
}

/// A primal field together with its transform and the matched-pair residual.
#[derive(Debug, Clone)]
pub struct LegendrePair {
    pub primal: RadialField,
    pub dual: RadialField,
    pub match_error: f64,
}

impl LegendrePair {
    pub fn new(
        primal: RadialField,
        rho_max: f64,
        dual_cells: usize,
        tolerance: f64,
    ) -> Result<Self, CoreError> {
        let dual = legendre_transform_radial(&primal, rho_max, dual_cells)?;
        let match_error = match_error_radial(&primal, &dual)?;
        if match_error > tolerance {
            return Err(CoreError::domain(format!(
                "match error {match_error:.3e} exceeds declared tolerance {tolerance:.3e}"
            )));
        }
        Ok(LegendrePair { primal, dual, match_error })
    }
}

/// Boundary trace of a radial dual field: `phi = -u*(|xi| = 1) / A`, with the
/// boundary value obtained by linear extrapolation in the coordinate
/// `w* = sqrt(1 - |xi|^2)` (w* vanishes at the rim, and duals of the
/// hyperboloid family are exactly linear in w*).
///
/// Returns (phi, spread) where spread is the disagreement between the two
/// outermost node pairs; callers compare it against their tolerance to decide
/// whether the trace is stable.
pub fn boundary_trace_radial(ustar: &RadialField, a_scale: f64) -> Result<(f64, f64), CoreError> {
    if ustar.rmax >= 1.0 {
        return Err(CoreError::domain("dual field must live strictly inside B_1"));
    }
    let n = ustar.last_index();
    if n < 3 {
        return Err(CoreError::domain("too few nodes for boundary extrapolation"));
    }
    let w = |i: usize| {
        let rho = ustar.radius(i);
        (1.0 - rho * rho).sqrt()
    };
    let extrap = |i1: usize, i0: usize| {
        let (w1, w0) = (w(i1), w(i0));
        let (u1, u0) = (ustar.values[i1], ustar.values[i0]);
        u1 - w1 * (u0 - u1) / (w0 - w1)
    };
    let outer = extrap(n, n - 1);
    let inner = extrap(n - 1, n - 2);
    Ok((-outer / a_scale, (outer - inner).abs()))
}

/// Boundary trace of a 2-D dual field sampled per direction. Values at two
/// radii close to the mask edge are interpolated bilinearly and extrapolated
/// linearly in w* to the rim.
pub fn boundary_trace_ball(
    ustar: &BallField2D,
    a_scale: f64,
    directions: usize,
) -> Result<(Vec<(f64, f64)>, f64), CoreError> {
    let g = &ustar.grid;
    let rho1 = g.r - 2.5 * g.h;
    let rho2 = g.r - 4.5 * g.h;
    let rho3 = g.r - 6.5 * g.h;
    if rho3 <= 0.0 {
        return Err(CoreError::domain("grid too coarse for boundary trace"));
    }
    let (w1, w2) = ((1.0 - rho1 * rho1).sqrt(), (1.0 - rho2 * rho2).sqrt());
    let w3 = (1.0 - rho3 * rho3).sqrt();
    let mut out = Vec::with_capacity(directions);
    let mut spread = 0.0f64;
    for k in 0..directions {
        let th = 2.0 * std::f64::consts::PI * k as f64 / directions as f64;
        let (c, s) = (th.cos(), th.sin());
        let u1 = ustar.interp(rho1 * c, rho1 * s)?;
        let u2 = ustar.interp(rho2 * c, rho2 * s)?;
        let u3 = ustar.interp(rho3 * c, rho3 * s)?;
        let ub = u1 - w1 * (u2 - u1) / (w2 - w1);
        let ub2 = u2 - w2 * (u3 - u2) / (w3 - w2);
        spread = spread.max((ub - ub2).abs());
        out.push((th, -ub / a_scale));
    }
    Ok((out, spread))
}

fn validate_convex_patch(f: &GraphPatch2D) -> Result<(), CoreError> {
    let s = f.side;
    let scale = f.values.iter().fold(1.0f64, |a, &v| a.max(v.abs()));
    let mut slope_range = 0.0f64;
    for j in 1..s - 1 {
        for i in 1..s - 1 {
            let c = f.at(i, j);
            let dxx = f.at(i + 1, j) - 2.0 * c + f.at(i - 1, j);
            let dyy = f.at(i, j + 1) - 2.0 * c + f.at(i, j - 1);
            if dxx < -CONVEXITY_TOL * scale || dyy < -CONVEXITY_TOL * scale {
                return Err(CoreError::Convexity {
                    location: format!("patch ({i}, {j})"),
                    detail: "negative second difference".into(),
                });
            }
            slope_range = slope_range.max(dxx.abs()).max(dyy.abs());
        }
    }
    if slope_range < 1e-12 * scale {
        return Err(CoreError::Convexity {
            location: "whole patch".into(),
            detail: "degenerate (zero Hessian) input".into(),
        });
    }
    Ok(())
}

/// 2-D Legendre transform of a graph patch onto a ball grid (full scan over
/// the patch per output point, then one guarded Newton step).
pub fn legendre_transform_patch(
    u: &GraphPatch2D,
    grid: Arc<BallGrid>,
) -> Result<BallField2D, CoreError> {
    validate_convex_patch(u)?;
    let s = u.side;
    let h = u.h;
    let mut out = BallField2D::from_fn(grid.clone(), |_, _| f64::NAN);
    for idx in 0..out.values.len() {
        if grid.kind[idx] == CellKind::Outside {
            continue;
        }
        let (xi1, xi2) = grid.coords(idx);
        let mut best = f64::NEG_INFINITY;
        let mut bi = 0usize;
        let mut bj = 0usize;
        for j in 0..s {
            let y = u.coord(j);
            for i in 0..s {
                let x = u.coord(i);
                let v = x * xi1 + y * xi2 - u.at(i, j);
                if v > best {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        let mut val = best;
        if bi > 0 && bi < s - 1 && bj > 0 && bj < s - 1 {
            let gx = (u.at(bi + 1, bj) - u.at(bi - 1, bj)) / (2.0 * h);
            let gy = (u.at(bi, bj + 1) - u.at(bi, bj - 1)) / (2.0 * h);
            let hxx = (u.at(bi + 1, bj) - 2.0 * u.at(bi, bj) + u.at(bi - 1, bj)) / (h * h);
            let hyy = (u.at(bi, bj + 1) - 2.0 * u.at(bi, bj) + u.at(bi, bj - 1)) / (h * h);
            let hxy = (u.at(bi + 1, bj + 1) + u.at(bi - 1, bj - 1)
                - u.at(bi + 1, bj - 1)
                - u.at(bi - 1, bj + 1))
                / (4.0 * h * h);
            let det = hxx * hyy - hxy * hxy;
            if det > 1e-20 && hxx > 0.0 {
                let (r1, r2) = (xi1 - gx, xi2 - gy);
                let d1 = ((hyy * r1 - hxy * r2) / det).clamp(-h, h);
                let d2 = ((-hxy * r1 + hxx * r2) / det).clamp(-h, h);
                let x = u.coord(bi) + d1;
                let y = u.coord(bj) + d2;
                let model = u.at(bi, bj)
                    + gx * d1
                    + gy * d2
                    + 0.5 * (hxx * d1 * d1 + 2.0 * hxy * d1 * d2 + hyy * d2 * d2);
                val = val.max(x * xi1 + y * xi2 - model);
            }
        }
        out.values[idx] = val;
    }
    Ok(out)
}

/// Inverse 2-D transform: graph patch from a ball dual field. Output points
/// must lie in the discrete gradient image for the values to be meaningful.
pub fn legendre_inverse_ball(
    ustar: &BallField2D,
    l: f64,
    cells_per_side: usize,
) -> Result<GraphPatch2D, CoreError> {
    let g = ustar.grid.clone();
    let mut out = GraphPatch2D::from_fn(l, cells_per_side, |_, _| 0.0);
    let side = out.side;
    for oj in 0..side {
        let y = out.coord(oj);
        for oi in 0..side {
            let x = out.coord(oi);
            let mut best = f64::NEG_INFINITY;
            let mut bidx = usize::MAX;
            for idx in 0..ustar.values.len() {
                if g.kind[idx] == CellKind::Outside {
                    continue;
                }
                let (xi1, xi2) = g.coords(idx);
                let v = x * xi1 + y * xi2 - ustar.values[idx];
                if v > best {
                    best = v;
                    bidx = idx;
                }
            }
            let mut val = best;
            if g.kind[bidx] == CellKind::Interior {
                let hh = g.h;
                let c = ustar.values[bidx];
                let jj = (bidx / g.size) as i64 - g.half;
                let ii = (bidx % g.size) as i64 - g.half;
                let vat = |di: i64, dj: i64| ustar.values[g.idx(ii + di, jj + dj)];
                let gx = (vat(1, 0) - vat(-1, 0)) / (2.0 * hh);
                let gy = (vat(0, 1) - vat(0, -1)) / (2.0 * hh);
                let hxx = (vat(1, 0) - 2.0 * c + vat(-1, 0)) / (hh * hh);
                let hyy = (vat(0, 1) - 2.0 * c + vat(0, -1)) / (hh * hh);
                let hxy = (vat(1, 1) + vat(-1, -1) - vat(1, -1) - vat(-1, 1)) / (4.0 * hh * hh);
                let det = hxx * hyy - hxy * hxy;
                if det > 1e-20 && hxx > 0.0 {
                    let (xi1, xi2) = g.coords(bidx);
                    let (r1, r2) = (x - gx, y - gy);
                    let d1 = ((hyy * r1 - hxy * r2) / det).clamp(-hh, hh);
                    let d2 = ((-hxy * r1 + hxx * r2) / det).clamp(-hh, hh);
                    let model = c
                        + gx * d1
                        + gy * d2
                        + 0.5 * (hxx * d1 * d1 + 2.0 * hxy * d1 * d2 + hyy * d2 * d2);
                    val = val.max(x * (xi1 + d1) + y * (xi2 + d2) - model);
                }
            }
            out.values[oj * side + oi] = val;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyperboloid(a: f64) -> impl Fn(f64) -> f64 {
        move |r| (a * a + r * r).sqrt()
    }

    #[test]
    fn transform_hyperboloid_closed_form() {
        let a = 2.0f64.sqrt();
        let u = RadialField::from_fn(10.0, 2048, hyperboloid(a));
        let us = legendre_transform_radial(&u, 0.9, 512).unwrap();
        // exact at the center: u*(0) = -min u = -a
        assert!((us.values[0] + a).abs() < 1e-12);
        for j in 0..us.len() {
            let rho = us.radius(j);
            let exact = -a * (1.0 - rho * rho).sqrt();
            assert!(
                (us.values[j] - exact).abs() < 2e-6,
                "rho = {rho}: {} vs {exact}",
                us.values[j]
            );
        }
    }

    #[test]
    fn shift_rule_and_min_value() {
        let a = 1.5;
        let u = RadialField::from_fn(8.0, 1024, hyperboloid(a));
        let uc = RadialField::from_fn(8.0, 1024, |r| hyperboloid(a)(r) + 0.7);
        let us = legendre_transform_radial(&u, 0.8, 256).unwrap();
        let ucs = legendre_transform_radial(&uc, 0.8, 256).unwrap();
        for j in 0..us.len() {
            assert!((ucs.values[j] - (us.values[j] - 0.7)).abs() < 1e-12);
        }
        // quadratic bowl: u*(0) = -min u
        let q = RadialField::from_fn(1.5, 256, |r| 1.0 + r * r / 4.0);
        let qs = legendre_transform_radial(&q, 0.5, 64).unwrap();
        assert!((qs.values[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn involution_on_hyperboloid() {
        let a = 2.0f64.sqrt();
        let u = RadialField::from_fn(10.0, 1024, hyperboloid(a));
        let us = legendre_transform_radial(&u, 0.92, 1024).unwrap();
        let back = legendre_inverse_radial(&us, 3.0, 512).unwrap();
        let mut worst = 0.0f64;
        for i in 0..back.len() {
            let r = back.radius(i);
            worst = worst.max((back.values[i] - hyperboloid(a)(r)).abs());
        }
        assert!(worst <= 5.0 * u.h, "involution error {worst}");
        assert!(worst < 1e-4, "expected much better than the 5h contract: {worst}");
    }

    #[test]
    fn degenerate_dual_rejected() {
        let flat = RadialField::from_fn(0.9, 64, |_| -2.0);
        assert!(matches!(
            legendre_inverse_radial(&flat, 0.5, 32),
            Err(CoreError::Convexity { .. })
        ));
        let concave = RadialField::from_fn(2.0, 64, |r| -r * r);
        assert!(legendre_transform_radial(&concave, 0.5, 32).is_err());
    }

    #[test]
    fn requested_domain_must_be_covered() {
        // slope of sqrt(2 + r^2) on [0, 2] tops out at 2/sqrt(6) ~ 0.816
        let u = RadialField::from_fn(2.0, 256, hyperboloid(2.0f64.sqrt()));
        assert!(legendre_transform_radial(&u, 0.9, 64).is_err());
        assert!(legendre_transform_radial(&u, 0.8, 64).is_ok());
    }

    #[test]
    fn order_reversal_exact_on_raw_sup() {
        let u = RadialField::from_fn(9.0, 777, hyperboloid(2.0f64.sqrt()));
        let ub = RadialField::from_fn(9.0, 777, |r| (2.5 + r * r).sqrt() + 1.0);
        for i in 0..u.len() {
            assert!(u.values[i] <= ub.values[i]);
        }
        let us = conjugate_radial(&u, 0.85, 333, false).unwrap();
        let ubs = conjugate_radial(&ub, 0.85, 333, false).unwrap();
        for j in 0..us.len() {
            assert!(us.values[j] >= ubs.values[j]);
        }
    }

    #[test]
    fn young_inequality_residual() {
        let u = RadialField::from_fn(10.0, 800, hyperboloid(1.3));
        let us = legendre_transform_radial(&u, 0.9, 400).unwrap();
        for i in 0..u.len() {
            for j in 0..us.len() {
                let res = u.values[i] + us.values[j] - u.radius(i) * us.radius(j);
                assert!(res >= -1e-12, "Young violated at ({i}, {j}): {res}");
            }
        }
        let me = match_error_radial(&u, &us).unwrap();
        assert!(me < 5e-6, "match error {me}");
    }

    #[test]
    fn scaling_covariance_exact() {
        // transform of A u(x/A) sampled on the grid A X equals A u*(xi)
        let a = 2.0f64.sqrt();
        let scale = 1.75;
        let u = RadialField::from_fn(10.0, 1024, hyperboloid(a));
        let scaled = RadialField {
            rmax: u.rmax * scale,
            h: u.h * scale,
            values: u.values.iter().map(|v| v * scale).collect(),
        };
        let us = legendre_transform_radial(&u, 0.9, 256).unwrap();
        let ss = legendre_transform_radial(&scaled, 0.9, 256).unwrap();
        for j in 0..us.len() {
            let err = (ss.values[j] - scale * us.values[j]).abs();
            assert!(err <= 1e-10, "j = {j}: {err}");
        }
    }

    #[test]
    fn boundary_trace_examples() {
        // u* = -rho w* - c: trace c; pure hyperboloid dual: trace 0
        let c = 0.8;
        let f = RadialField::from_fn(0.95, 512, |rho| -2.0 * (1.0 - rho * rho).sqrt() - c);
        let (phi, spread) = boundary_trace_radial(&f, 1.0).unwrap();
        assert!((phi - c).abs() < 1e-10, "phi = {phi}");
        assert!(spread < 1e-10);
        let g = RadialField::from_fn(0.95, 512, |rho| -2.0f64.sqrt() * (1.0 - rho * rho).sqrt());
        let (phi, _) = boundary_trace_radial(&g, 1.0).unwrap();
        assert!(phi.abs() < 1e-10);
        // scaled trace: phi = -u*/A pointwise on a ball field
        let grid = BallGrid::new(0.9, 1.0 / 64.0).unwrap();
        let anis = BallField2D::from_fn(grid, |x, y| {
            let th = y.atan2(x);
            -(1.0 + 0.3 * (2.0 * th).cos())
        });
        let (trace, _) = boundary_trace_ball(&anis, 2.0, 16).unwrap();
        for &(th, phi) in &trace {
            let expect = (1.0 + 0.3 * (2.0 * th).cos()) / 2.0;
            assert!((phi - expect).abs() < 5e-3, "theta {th}: {phi} vs {expect}");
        }
    }

    #[test]
    fn legendre_pair_constructor() {
        let u = RadialField::from_fn(10.0, 1024, hyperboloid(2.0));
        let pair = LegendrePair::new(u, 0.9, 512, 1e-5).unwrap();
        assert!(pair.match_error <= 1e-5);
    }

    #[test]
    fn patch_transform_matches_radial() {
        let a = 2.0f64.sqrt();
        let u = GraphPatch2D::from_fn(6.0, 192, |x, y| (a * a + x * x + y * y).sqrt());
        let grid = BallGrid::new(0.7, 1.0 / 24.0).unwrap();
        let us = legendre_transform_patch(&u, grid).unwrap();
        for idx in 0..us.values.len() {
            if us.grid.kind[idx] == CellKind::Outside {
                continue;
            }
            let (x, y) = us.grid.coords(idx);
            let exact = -a * (1.0 - x * x - y * y).sqrt();
            assert!(
                (us.values[idx] - exact).abs() < 3e-4,
                "({x}, {y}): {} vs {exact}",
                us.values[idx]
            );
        }
        let back = legendre_inverse_ball(&us, 1.0, 48).unwrap();
        for j in 0..back.side {
            for i in 0..back.side {
                let (x, y) = (back.coord(i), back.coord(j));
                let exact = (a * a + x * x + y * y).sqrt();
                assert!((back.at(i, j) - exact).abs() < 5e-3);
            }
        }
    }
}
