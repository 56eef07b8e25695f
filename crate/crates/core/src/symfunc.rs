//! Elementary symmetric polynomials of principal curvatures and the speeds
//! built from them: `F = sigma_k^{1/k}` on the primal side and
//! `F_* = (sigma_n / sigma_{n-k})^{1/k}` on the dual side.
//!
//! Evaluation goes through the one-pass polynomial-coefficient recurrence
//! (expand prod (1 + kappa_i x) and read off coefficients), which is O(n k)
//! and avoids the catastrophic cancellation of the naive subset sum for
//! mixed-sign curvature vectors.

use crate::error::CoreError;
use crate::params::SpeedParams;

/// All elementary symmetric polynomials sigma_0..sigma_m of `kappa`,
/// truncated at order `m`. sigma_0 = 1 by convention.
pub fn sigma_all(m: usize, kappa: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; m + 1];
    e[0] = 1.0;
    let mut filled = 0usize;
    for &x in kappa {
        filled = (filled + 1).min(m);
        for j in (1..=filled).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// sigma_k(kappa). Accepts 0 <= k <= n; sigma_0 = 1.
pub fn sigma(k: usize, kappa: &[f64]) -> Result<f64, CoreError> {
    let n = kappa.len();
    if k > n {
        return Err(CoreError::domain(format!(
            "sigma order k = {k} exceeds dimension n = {n}"
        )));
    }
    Ok(sigma_all(k, kappa)[k])
}

/// sigma_{k-1}(kappa with entry `i` deleted); the i-th diagonal coefficient
/// of the linearized operator. `i` is zero-based.
pub fn sigma_partial(k: usize, kappa: &[f64], i: usize) -> Result<f64, CoreError> {
    let n = kappa.len();
    if i >= n {
        return Err(CoreError::domain(format!("index i = {i} out of range for n = {n}")));
    }
    if k < 1 || k > n {
        return Err(CoreError::domain(format!("sigma_partial order k = {k} out of range")));
    }
    let mut e = vec![0.0; k];
    e[0] = 1.0;
    let mut filled = 0usize;
    for (j, &x) in kappa.iter().enumerate() {
        if j == i {
            continue;
        }
        filled = (filled + 1).min(k - 1);
        for l in (1..=filled).rev() {
            e[l] += x * e[l - 1];
        }
    }
    Ok(e[k - 1])
}

/// Primal speed `F^alpha = sigma_k^{alpha/k}(kappa)`. Requires sigma_k > 0.
pub fn speed_f_alpha(p: &SpeedParams, kappa: &[f64]) -> Result<f64, CoreError> {
    let s = sigma(p.k, kappa)?;
    if s <= 0.0 {
        return Err(CoreError::ConeViolation {
            location: "speed_f_alpha".into(),
            order: p.k,
            value: s,
        });
    }
    Ok(s.powf(p.alpha / p.k as f64))
}

/// Dual speed `F_* = (sigma_n / sigma_{n-k})^{1/k}`, evaluated on principal
/// curvature radii. Requires every entry positive.
pub fn speed_f_star(p: &SpeedParams, lambda: &[f64]) -> Result<f64, CoreError> {
    if lambda.len() != p.n {
        return Err(CoreError::domain(format!(
            "F_* expects {} radii, got {}",
            p.n,
            lambda.len()
        )));
    }
    for (i, &l) in lambda.iter().enumerate() {
        if l <= 0.0 {
            return Err(CoreError::ConeViolation {
                location: format!("speed_f_star radius {i}"),
                order: 1,
                value: l,
            });
        }
    }
    let e = sigma_all(p.n, lambda);
    Ok((e[p.n] / e[p.n - p.k]).powf(1.0 / p.k as f64))
}

/// Gamma_k cone membership: sigma_j(kappa) > 0 for j = 1..k.
pub fn cone_check(p: &SpeedParams, kappa: &[f64]) -> bool {
    if kappa.len() != p.n {
        return false;
    }
    let e = sigma_all(p.k, kappa);
    e[1..=p.k].iter().all(|&s| s > 0.0)
}

/// Strict convexity: every principal curvature positive.
pub fn strictly_convex(kappa: &[f64]) -> bool {
    kappa.iter().all(|&x| x > 0.0)
}

/// d F_* / d lambda_i for all i, by the quotient rule on
/// sigma_n / sigma_{n-k}. Used for CFL bounds on the dual flow.
pub fn f_star_gradient(p: &SpeedParams, lambda: &[f64]) -> Result<Vec<f64>, CoreError> {
    let fval = speed_f_star(p, lambda)?;
    let e = sigma_all(p.n, lambda);
    let q = e[p.n] / e[p.n - p.k];
    let mut out = Vec::with_capacity(p.n);
    for i in 0..p.n {
        let dn = sigma_partial(p.n, lambda, i)?;
        let dd = if p.n - p.k >= 1 {
            sigma_partial(p.n - p.k, lambda, i)?
        } else {
            0.0
        };
        let dq = (dn * e[p.n - p.k] - e[p.n] * dd) / (e[p.n - p.k] * e[p.n - p.k]);
        // dF/dlambda_i = (1/k) q^{1/k - 1} dq = F/(k q) dq
        out.push(fval / (p.k as f64 * q) * dq);
    }
    Ok(out)
}

/// d sigma_k^{1/k} / d kappa_i; the primal analogue of [`f_star_gradient`].
pub fn f_gradient(p: &SpeedParams, kappa: &[f64]) -> Result<Vec<f64>, CoreError> {
    let s = sigma(p.k, kappa)?;
    if s <= 0.0 {
        return Err(CoreError::ConeViolation {
            location: "f_gradient".into(),
            order: p.k,
            value: s,
        });
    }
    let f = s.powf(1.0 / p.k as f64);
    let mut out = Vec::with_capacity(p.n);
    for i in 0..p.n {
        out.push(f / (p.k as f64 * s) * sigma_partial(p.k, kappa, i)?);
    }
    Ok(out)
}
