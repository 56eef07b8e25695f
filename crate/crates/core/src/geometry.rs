//! Discrete differential geometry of spacelike graphs in Minkowski space.
//!
//! For a graph `u` with `|Du| < 1` the curvature matrix is
//! `(1/w) gamma^{ik} u_{kl} gamma^{lj}` with `w = sqrt(1 - |Du|^2)` and
//! `gamma^{ik} = delta_{ik} + u_i u_k / (w (1 + w))`; its eigenvalues are the
//! principal curvatures. The support function is `s = -<X, nu> = (u - x.Du)/w`
//! and the tilt is `v = 1/w`. On the dual side the matrix
//! `w* gamma*_{ik} u*_{kl} gamma*_{lj}` (with `w* = sqrt(1-|xi|^2)`,
//! `gamma*_{ik} = delta_{ik} - xi_i xi_k / (1 + w*)`) carries the principal
//! curvature radii as eigenvalues.

use crate::error::CoreError;
use crate::grid::{BallField2D, GraphPatch2D, RadialField};
use crate::params::SpeedParams;
use crate::symfunc;

/// Discrete spacelike guard: a hard error is raised when |Du|^2 > 1 - EPS_GUARD.
/// The continuous theory guarantees spacelikeness; discrete overshoot must be
/// detected, not silently clamped.
pub const EPS_GUARD: f64 = 1e-6;

/// Off-diagonal tolerance for the cyclic Jacobi eigensolver.
pub const JACOBI_TOL: f64 = 1e-13;

/// Per-point curvature package of a spacelike graph.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub grad: Vec<f64>,
    pub w: f64,
    /// Symmetric curvature matrix (1/w) gamma D2u gamma, row-major n x n.
    pub curv_matrix: Vec<f64>,
    /// Principal curvatures, sorted descending.
    pub kappa: Vec<f64>,
    /// Support s = -<X, nu> = (u - x.Du)/w.
    pub support: f64,
    /// Tilt v = 1/w = -<nu, e_{n+1}>.
    pub tilt: f64,
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations,
/// sorted descending. `a` is row-major n x n.
pub fn jacobi_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let scale = a.iter().fold(0.0f64, |acc, &x| acc.max(x.abs())).max(1.0);
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[p * n + q].abs());
            }
        }
        if off <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= JACOBI_TOL * scale {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = m[i * n + p];
                    let aiq = m[i * n + q];
                    m[i * n + p] = c * aip - s * aiq;
                    m[i * n + q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = m[p * n + i];
                    let aqi = m[q * n + i];
                    m[p * n + i] = c * api - s * aqi;
                    m[q * n + i] = s * api + c * aqi;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eig
}

/// Assemble the full curvature package from pointwise derivatives of the
/// graph. `hess` is row-major n x n.
pub fn curvature_from_derivatives(
    x: &[f64],
    u: f64,
    grad: &[f64],
    hess: &[f64],
    location: &str,
) -> Result<CurvatureData, CoreError> {
    let n = grad.len();
    let g2: f64 = grad.iter().map(|g| g * g).sum();
    if g2 > 1.0 - EPS_GUARD {
        return Err(CoreError::Spacelike {
            location: location.to_string(),
            grad_norm: g2.sqrt(),
        });
    }
    let w = (1.0 - g2).sqrt();
    // gamma^{ik} = delta + u_i u_k / (w (1 + w))
    let gfac = 1.0 / (w * (1.0 + w));
    let mut gamma = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            gamma[i * n + k] = if i == k { 1.0 } else { 0.0 } + grad[i] * grad[k] * gfac;
        }
    }
    // (1/w) gamma H gamma
    let mut tmp = vec![0.0; n * n];
    for i in 0..n {
        for l in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += gamma[i * n + k] * hess[k * n + l];
            }
            tmp[i * n + l] = acc;
        }
    }
    let mut cm = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for l in 0..n {
                acc += tmp[i * n + l] * gamma[l * n + j];
            }
            cm[i * n + j] = acc / w;
        }
    }
    // symmetrize roundoff
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (cm[i * n + j] + cm[j * n + i]);
            cm[i * n + j] = s;
            cm[j * n + i] = s;
        }
    }
    let kappa = jacobi_eigenvalues(&cm, n);
    let xdu: f64 = x.iter().zip(grad).map(|(a, b)| a * b).sum();
    Ok(CurvatureData {
        grad: grad.to_vec(),
        w,
        curv_matrix: cm,
        kappa,
        support: (u - xdu) / w,
        tilt: 1.0 / w,
    })
}

/// Radial specialization: principal curvatures, w and support of a radial
/// graph from (u, u', u'') at radius r. The angular curvature uses the
/// removable-limit value u''/w^3 at the pole.
pub fn radial_curvature_closed_form(
    u: f64,
    du: f64,
    d2u: f64,
    r: f64,
) -> Result<(f64, f64, f64, f64), CoreError> {
    if du * du > 1.0 - EPS_GUARD {
        return Err(CoreError::Spacelike {
            location: format!("r = {r}"),
            grad_norm: du.abs(),
        });
    }
    let w = (1.0 - du * du).sqrt();
    let kappa_rad = d2u / (w * w * w);
    let kappa_ang = if r == 0.0 { kappa_rad } else { du / (r * w) };
    let support = (u - r * du) / w;
    Ok((kappa_rad, kappa_ang, w, support))
}

/// Curvature arrays of a radial graph field (central differences, even
/// reflection at the pole, one-sided stencils at the outer edge).
#[derive(Debug, Clone)]
pub struct RadialCurvature {
    pub du: Vec<f64>,
    pub d2u: Vec<f64>,
    pub w: Vec<f64>,
    pub kappa_rad: Vec<f64>,
    pub kappa_ang: Vec<f64>,
    pub support: Vec<f64>,
    pub tilt: Vec<f64>,
}

pub fn primal_curvature_radial(field: &RadialField) -> Result<RadialCurvature, CoreError> {
    let (du, d2u) = field.derivatives_even();
    let n = field.len();
    let mut out = RadialCurvature {
        du: du.clone(),
        d2u: d2u.clone(),
        w: vec![0.0; n],
        kappa_rad: vec![0.0; n],
        kappa_ang: vec![0.0; n],
        support: vec![0.0; n],
        tilt: vec![0.0; n],
    };
    for i in 0..n {
        let r = field.radius(i);
        let (kr, ka, w, s) = radial_curvature_closed_form(field.values[i], du[i], d2u[i], r)?;
        out.kappa_rad[i] = kr;
        out.kappa_ang[i] = ka;
        out.w[i] = w;
        out.support[i] = s;
        out.tilt[i] = 1.0 / w;
    }
    Ok(out)
}

/// Full curvature package at every interior node of a 2-D graph patch.
pub fn primal_curvature_patch(field: &GraphPatch2D) -> Result<Vec<CurvatureData>, CoreError> {
    let s = field.side;
    let h = field.h;
    let mut out = Vec::with_capacity((s - 2) * (s - 2));
    for j in 1..s - 1 {
        for i in 1..s - 1 {
            let u = field.at(i, j);
            let ux = (field.at(i + 1, j) - field.at(i - 1, j)) / (2.0 * h);
            let uy = (field.at(i, j + 1) - field.at(i, j - 1)) / (2.0 * h);
            let uxx = (field.at(i + 1, j) - 2.0 * u + field.at(i - 1, j)) / (h * h);
            let uyy = (field.at(i, j + 1) - 2.0 * u + field.at(i, j - 1)) / (h * h);
            let uxy = (field.at(i + 1, j + 1) + field.at(i - 1, j - 1)
                - field.at(i + 1, j - 1)
                - field.at(i - 1, j + 1))
                / (4.0 * h * h);
            let x = [field.coord(i), field.coord(j)];
            let cd = curvature_from_derivatives(
                &x,
                u,
                &[ux, uy],
                &[uxx, uxy, uxy, uyy],
                &format!("patch ({i}, {j})"),
            )?;
            out.push(cd);
        }
    }
    Ok(out)
}

/// Dual-side matrix `M = w* gamma* (D2 u*) gamma*` and its eigenvalues at one
/// point of the ball, from pointwise second derivatives.
pub fn dual_matrix_at(xi: &[f64; 2], hess: &[f64; 3]) -> ([f64; 3], [f64; 2]) {
    let rho2 = xi[0] * xi[0] + xi[1] * xi[1];
    let ws = (1.0 - rho2).sqrt();
    let gfac = 1.0 / (1.0 + ws);
    let g11 = 1.0 - xi[0] * xi[0] * gfac;
    let g12 = -xi[0] * xi[1] * gfac;
    let g22 = 1.0 - xi[1] * xi[1] * gfac;
    let (hxx, hxy, hyy) = (hess[0], hess[1], hess[2]);
    let m11 = ws * (g11 * g11 * hxx + 2.0 * g11 * g12 * hxy + g12 * g12 * hyy);
    let m12 = ws * (g11 * g12 * hxx + (g11 * g22 + g12 * g12) * hxy + g12 * g22 * hyy);
    let m22 = ws * (g12 * g12 * hxx + 2.0 * g12 * g22 * hxy + g22 * g22 * hyy);
    let tr = m11 + m22;
    let disc = ((m11 - m22) * (m11 - m22) + 4.0 * m12 * m12).sqrt();
    ([m11, m12, m22], [(tr + disc) / 2.0, (tr - disc) / 2.0])
}

/// Dual matrix field over the interior of a 2-D ball field. Points where M is
/// not positive definite are flagged (loss of strict convexity), not errors.
pub struct DualMatrixField {
    /// (cell index, [m11, m12, m22], [lambda_max, lambda_min])
    pub entries: Vec<(usize, [f64; 3], [f64; 2])>,
    pub non_positive: Vec<usize>,
}

pub fn dual_curvature_matrix(field: &BallField2D) -> DualMatrixField {
    let g = &field.grid;
    let h = g.h;
    let v = &field.values;
    let mut entries = Vec::with_capacity(g.interior_count);
    let mut non_positive = Vec::new();
    for &(j, a, b) in &g.interior_rows {
        for i in a..=b {
            let idx = g.idx(i, j);
            let c = v[idx];
            let hxx = (v[g.idx(i + 1, j)] - 2.0 * c + v[g.idx(i - 1, j)]) / (h * h);
            let hyy = (v[g.idx(i, j + 1)] - 2.0 * c + v[g.idx(i, j - 1)]) / (h * h);
            let hxy = (v[g.idx(i + 1, j + 1)] + v[g.idx(i - 1, j - 1)]
                - v[g.idx(i + 1, j - 1)]
                - v[g.idx(i - 1, j + 1)])
                / (4.0 * h * h);
            let xi = [i as f64 * h, j as f64 * h];
            let (m, eig) = dual_matrix_at(&xi, &[hxx, hxy, hyy]);
            if eig[1] <= 0.0 {
                non_positive.push(idx);
            }
            entries.push((idx, m, eig));
        }
    }
    DualMatrixField { entries, non_positive }
}

/// Eigenvalues of the dual matrix for a radial dual field: radial direction
/// `w*^3 u*''` and angular direction `w* u*'/rho` (pole limit: both equal
/// `u*''(0)`).
pub fn dual_eigen_radial(field: &RadialField) -> Result<(Vec<f64>, Vec<f64>), CoreError> {
    if field.rmax >= 1.0 {
        return Err(CoreError::domain("dual radial field must live strictly inside B_1"));
    }
    let (du, d2u) = field.derivatives_even();
    let n = field.len();
    let mut lr = vec![0.0; n];
    let mut la = vec![0.0; n];
    for i in 0..n {
        let rho = field.radius(i);
        let ws = (1.0 - rho * rho).sqrt();
        lr[i] = ws * ws * ws * d2u[i];
        la[i] = if i == 0 { d2u[0] } else { ws * du[i] / rho };
    }
    Ok((lr, la))
}

/// Klein-model scalars of a dual field: dual height `v = u*/w*` and
/// `x_{n+1} = 1/w*`. (The paper uses the letter v both for this ratio and for
/// the tilt; here they are `dual_height` and `tilt`.)
pub fn klein_scalars_radial(field: &RadialField) -> Result<(Vec<f64>, Vec<f64>), CoreError> {
    if field.rmax >= 1.0 {
        return Err(CoreError::domain("klein scalars need |xi| < 1"));
    }
    let n = field.len();
    let mut dual_height = vec![0.0; n];
    let mut xn1 = vec![0.0; n];
    for i in 0..n {
        let rho = field.radius(i);
        let ws = (1.0 - rho * rho).sqrt();
        dual_height[i] = field.values[i] / ws;
        xn1[i] = 1.0 / ws;
    }
    Ok((dual_height, xn1))
}

/// Condition A verification report for initial data.
#[derive(Debug, Clone)]
pub struct ConditionAReport {
    pub spacelike: bool,
    pub strictly_convex: bool,
    /// Sampled (r, u(r) - r) over the outermost 5% of grid radii.
    pub asymptotic_phi: Vec<(f64, f64)>,
    /// Mean of u - r over the sampled tail.
    pub phi_mean: f64,
    /// Measured inf of sigma_k^{alpha/k}.
    pub c0: f64,
    /// Measured sup of sigma_k^{alpha/k} / s.
    pub big_c: f64,
    pub declared_c: f64,
    pub holds: bool,
}

/// Check Condition A on radial initial data: spacelike, strictly convex,
/// positive asymptotic trace, and the pinching
/// `c_0 < sigma_k(kappa)^{alpha/k} < C (-<X, nu>)`.
pub fn condition_a_check(
    u0: &RadialField,
    p: &SpeedParams,
    declared_c: f64,
) -> ConditionAReport {
    let n = u0.len();
    let (du, d2u) = u0.derivatives_even();
    let mut spacelike = true;
    let mut strictly_convex = true;
    let mut c0 = f64::INFINITY;
    let mut big_c: f64 = 0.0;
    for i in 0..n {
        let r = u0.radius(i);
        match radial_curvature_closed_form(u0.values[i], du[i], d2u[i], r) {
            Err(_) => {
                spacelike = false;
                continue;
            }
            Ok((kr, ka, _w, s)) => {
                if kr <= 0.0 || ka <= 0.0 {
                    strictly_convex = false;
                }
                let mut kappa = vec![ka; p.n];
                kappa[0] = kr;
                if let Ok(f) = symfunc::speed_f_alpha(p, &kappa) {
                    c0 = c0.min(f);
                    big_c = big_c.max(if s > 0.0 { f / s } else { f64::INFINITY });
                } else {
                    strictly_convex = false;
                }
            }
        }
    }
    let tail_start = (0.95 * n as f64) as usize;
    let asymptotic_phi: Vec<(f64, f64)> = (tail_start..n)
        .map(|i| (u0.radius(i), u0.values[i] - u0.radius(i)))
        .collect();
    let phi_mean = if asymptotic_phi.is_empty() {
        f64::NAN
    } else {
        asymptotic_phi.iter().map(|&(_, p)| p).sum::<f64>() / asymptotic_phi.len() as f64
    };
    let holds = spacelike
        && strictly_convex
        && phi_mean > 0.0
        && c0 > 0.0
        && big_c.is_finite()
        && big_c < declared_c;
    ConditionAReport {
        spacelike,
        strictly_convex,
        asymptotic_phi,
        phi_mean,
        c0,
        big_c,
        declared_c,
        holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_small_matrices() {
        let eig = jacobi_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((eig[0] - 3.0).abs() < 1e-13 && (eig[1] - 1.0).abs() < 1e-13);
        // 3x3 with known spectrum {6, 3, 1} from diag(6,3,1) conjugated
        let a = [4.0, -1.0, 2.0, -1.0, 4.0, 1.0, 2.0, 1.0, 2.0];
        let eig = jacobi_eigenvalues(&a, 3);
        let tr: f64 = eig.iter().sum();
        assert!((tr - 10.0).abs() < 1e-12);
        let det = eig[0] * eig[1] * eig[2];
        // det of a = 4(8-1) +1(-2-2) +2(-1-8) = 28 - 4 - 18 = 6
        assert!((det - 6.0).abs() < 1e-10);
    }

    #[test]
    fn hyperboloid_closed_form() {
        // u = sqrt(a^2 + r^2): kappa_rad = kappa_ang = 1/a, s = a.
        let a = 2.0f64.sqrt();
        for &r in &[0.0, 0.5, 1.7, 4.0] {
            let u = (a * a + r * r).sqrt();
            let du = r / u;
            let d2u = a * a / (u * u * u);
            let (kr, ka, w, s) = radial_curvature_closed_form(u, du, d2u, r).unwrap();
            assert!((kr - 1.0 / a).abs() < 1e-14);
            assert!((ka - 1.0 / a).abs() < 1e-14);
            assert!((w - a / u).abs() < 1e-14);
            assert!((s - a).abs() < 1e-13);
        }
    }

    #[test]
    fn pole_and_cone_cases() {
        // umbilic pole: r=0, u'=0, u''=q gives kappa_rad = kappa_ang = q
        let (kr, ka, w, s) = radial_curvature_closed_form(3.0, 0.0, 0.7, 0.0).unwrap();
        assert_eq!(kr, 0.7);
        assert_eq!(ka, 0.7);
        assert_eq!(w, 1.0);
        assert_eq!(s, 3.0);
        // cone away from vertex: u = 0.6 r + 1 at r = 1
        let (kr, ka, w, s) = radial_curvature_closed_form(1.6, 0.6, 0.0, 1.0).unwrap();
        assert_eq!(kr, 0.0);
        assert!((w - 0.8).abs() < 1e-15);
        assert!((ka - 0.75).abs() < 1e-15);
        assert!((s - 1.25).abs() < 1e-15);
        // spacelike guard
        assert!(radial_curvature_closed_form(1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn radial_field_curvature_hyperboloid() {
        let a = 2.0f64.sqrt();
        let f = RadialField::from_fn(4.0, 512, |r| (a * a + r * r).sqrt());
        let c = primal_curvature_radial(&f).unwrap();
        // skip the outer one-sided stencil nodes
        for i in 0..f.len() - 3 {
            assert!((c.kappa_rad[i] - 1.0 / a).abs() < 2e-5, "kr at {i}: {}", c.kappa_rad[i]);
            assert!((c.kappa_ang[i] - 1.0 / a).abs() < 2e-5);
            assert!((c.support[i] - a).abs() < 2e-4);
        }
    }

    #[test]
    fn shifted_hyperboloid_pole_values() {
        // u = 1 + sqrt(4 + r^2), n=2, k=1, alpha=1: F^alpha = 1, s = 3 at r=0
        let f = RadialField::from_fn(8.0, 1024, |r| 1.0 + (4.0 + r * r).sqrt());
        let c = primal_curvature_radial(&f).unwrap();
        let p = SpeedParams::new(2, 1, 1.0).unwrap();
        let fal = symfunc::speed_f_alpha(&p, &[c.kappa_rad[0], c.kappa_ang[0]]).unwrap();
        assert!((fal - 1.0).abs() < 1e-5);
        assert!((c.support[0] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn flat_graph() {
        let f = RadialField::from_fn(2.0, 32, |_| 1.5);
        let c = primal_curvature_radial(&f).unwrap();
        for i in 0..f.len() {
            assert_eq!(c.kappa_rad[i], 0.0);
            assert_eq!(c.w[i], 1.0);
            assert!((c.support[i] - 1.5).abs() < 1e-15);
        }
    }

    #[test]
    fn dual_matrix_hyperboloid_eigenvalues() {
        // u* = -a w*: eigenvalues (a, a) everywhere; additive constants drop out
        let a = 1.7;
        for &(x, y) in &[(0.0, 0.0), (0.3, 0.1), (-0.5, 0.6), (0.0, 0.85)] {
            let rho2: f64 = x * x + y * y;
            let ws = (1.0 - rho2).sqrt();
            // D2(-a w*) = a/w* (I + xi xi^T / w*^2)
            let hxx = a / ws * (1.0 + x * x / (ws * ws));
            let hyy = a / ws * (1.0 + y * y / (ws * ws));
            let hxy = a * x * y / (ws * ws * ws);
            let (_m, eig) = dual_matrix_at(&[x, y], &[hxx, hxy, hyy]);
            assert!((eig[0] - a).abs() < 1e-12, "eig {eig:?} at ({x},{y})");
            assert!((eig[1] - a).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_matrix_center_is_plain_hessian() {
        let (m, _e) = dual_matrix_at(&[0.0, 0.0], &[2.0, 0.5, 3.0]);
        assert_eq!(m, [2.0, 0.5, 3.0]);
    }

    #[test]
    fn dual_matrix_field_on_grid() {
        let a = 2.0;
        let g = crate::grid::BallGrid::new(0.9, 1.0 / 64.0).unwrap();
        let f = BallField2D::from_fn(g, |x, y| -a * (1.0 - x * x - y * y).sqrt());
        let dm = dual_curvature_matrix(&f);
        assert!(dm.non_positive.is_empty());
        for &(idx, _, eig) in &dm.entries {
            let (x, y) = f.grid.coords(idx);
            let tol = 6e-3 / (1.0 - (x * x + y * y)).powi(2); // FD error grows near the rim
            assert!((eig[0] - a).abs() < tol, "({x},{y}): {eig:?}");
            assert!((eig[1] - a).abs() < tol);
        }
        // shifting by a constant changes nothing
        let f2 = BallField2D::from_fn(f.grid.clone(), |x, y| {
            -a * (1.0 - x * x - y * y).sqrt() - 3.25
        });
        let dm2 = dual_curvature_matrix(&f2);
        for (e1, e2) in dm.entries.iter().zip(&dm2.entries) {
            assert!((e1.2[0] - e2.2[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn klein_scalars_cases() {
        let a = 1.3;
        let f = RadialField::from_fn(0.9, 64, |rho| -a * (1.0 - rho * rho).sqrt());
        let (v, xn1) = klein_scalars_radial(&f).unwrap();
        for i in 0..f.len() {
            assert!((v[i] + a).abs() < 1e-13);
        }
        assert_eq!(xn1[0], 1.0);
        let f8 = RadialField::from_fn(0.8, 64, |_| 1.0);
        let (_, xn1) = klein_scalars_radial(&f8).unwrap();
        assert!((xn1[f8.last_index()] - 1.0 / 0.6).abs() < 1e-12);
    }

    #[test]
    fn condition_a_examples() {
        let p = SpeedParams::new(2, 1, 1.0).unwrap();
        // u0 = 1 + sqrt(4 + r^2): holds with C = 1; c0 ~ 1, big_c ~ 1/3
        let good = RadialField::from_fn(60.0, 4096, |r| 1.0 + (4.0 + r * r).sqrt());
        let rep = condition_a_check(&good, &p, 1.0);
        assert!(rep.holds, "{rep:?}");
        assert!((rep.c0 - 1.0).abs() < 1e-3);
        assert!((rep.big_c - 1.0 / 3.0).abs() < 1e-3);
        assert!(rep.phi_mean > 0.9);
        // u0 = sqrt(1 + r^2): F^alpha = 2 > s = 1, fails the pinching
        let bad = RadialField::from_fn(60.0, 4096, |r| (1.0 + r * r).sqrt());
        let rep = condition_a_check(&bad, &p, 1.0);
        assert!(!rep.holds);
        assert!(rep.big_c > 1.0);
        // near-lightcone cone: zero curvature, not strictly convex
        let cone = RadialField::from_fn(60.0, 4096, |r| 0.99 * r + 1.0);
        let rep = condition_a_check(&cone, &p, 1.0);
        assert!(!rep.strictly_convex);
    }

    #[test]
    fn vertical_shift_covariance() {
        let f = RadialField::from_fn(6.0, 256, |r| (2.0 + r * r).sqrt());
        let g = RadialField::from_fn(6.0, 256, |r| (2.0 + r * r).sqrt() + 0.75);
        let cf = primal_curvature_radial(&f).unwrap();
        let cg = primal_curvature_radial(&g).unwrap();
        let mut min_sf = f64::INFINITY;
        let mut min_sg = f64::INFINITY;
        for i in 0..f.len() {
            assert!((cf.kappa_rad[i] - cg.kappa_rad[i]).abs() <= 1e-10);
            assert!((cf.kappa_ang[i] - cg.kappa_ang[i]).abs() <= 1e-10);
            min_sf = min_sf.min(cf.support[i]);
            min_sg = min_sg.min(cg.support[i]);
        }
        assert!(min_sg > min_sf);
    }

    #[test]
    fn patch_curvature_matches_radial() {
        let a = 2.0f64.sqrt();
        let patch = GraphPatch2D::from_fn(1.0, 64, |x, y| (a * a + x * x + y * y).sqrt());
        let data = primal_curvature_patch(&patch).unwrap();
        for cd in &data {
            assert!((cd.kappa[0] - 1.0 / a).abs() < 1e-3);
            assert!((cd.kappa[1] - 1.0 / a).abs() < 1e-3);
            assert!(cd.tilt >= 1.0);
            // curvature matrix symmetric by construction
            assert!((cd.curv_matrix[1] - cd.curv_matrix[2]).abs() < 1e-12);
        }
    }
}
