//! Flow parameters shared by every module.

use crate::error::CoreError;

/// Parameters of the speed `F^alpha = sigma_k^{alpha/k}`: graph dimension `n`,
/// symmetric-function order `k`, exponent `alpha >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedParams {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
}

impl SpeedParams {
    pub fn new(n: usize, k: usize, alpha: f64) -> Result<Self, CoreError> {
        if n < 2 {
            return Err(CoreError::domain(format!("n = {n} must be >= 2")));
        }
        if k < 1 || k > n {
            return Err(CoreError::domain(format!("k = {k} must satisfy 1 <= k <= n = {n}")));
        }
        if !(alpha >= 1.0) || !alpha.is_finite() {
            return Err(CoreError::domain(format!("alpha = {alpha} must be >= 1")));
        }
        Ok(SpeedParams { n, k, alpha })
    }

    /// Binomial coefficient C(n, k) as a float.
    pub fn binomial(&self) -> f64 {
        binomial(self.n, self.k)
    }

    /// Scale factor of the self-similar orbit, `A(t) = [(1+alpha)t + 1]^{1/(1+alpha)}`.
    pub fn scale_factor(&self, t: f64) -> f64 {
        ((1.0 + self.alpha) * t + 1.0).powf(1.0 / (1.0 + self.alpha))
    }

    /// Normalized clock, `tau = ln((1+alpha)t + 1) / (1+alpha)`; satisfies `A(t) = e^tau`.
    pub fn time_change(&self, t: f64) -> f64 {
        ((1.0 + self.alpha) * t + 1.0).ln() / (1.0 + self.alpha)
    }

    /// Inverse of [`Self::time_change`].
    pub fn time_from_tau(&self, tau: f64) -> f64 {
        (((1.0 + self.alpha) * tau).exp() - 1.0) / (1.0 + self.alpha)
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0f64;
    for j in 0..k {
        c = c * (n - j) as f64 / (j + 1) as f64;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(2, 1), 2.0);
        assert_eq!(binomial(3, 2), 3.0);
        assert_eq!(binomial(2, 2), 1.0);
        assert_eq!(binomial(5, 2), 10.0);
    }

    #[test]
    fn validation() {
        assert!(SpeedParams::new(2, 1, 1.0).is_ok());
        assert!(SpeedParams::new(2, 3, 1.0).is_err());
        assert!(SpeedParams::new(2, 0, 1.0).is_err());
        assert!(SpeedParams::new(2, 1, 0.5).is_err());
        assert!(SpeedParams::new(1, 1, 1.0).is_err());
    }

    #[test]
    fn scale_factor_examples() {
        let p = SpeedParams::new(2, 1, 1.0).unwrap();
        assert!((p.scale_factor(4.0) - 3.0).abs() < 1e-15);
        assert_eq!(p.scale_factor(0.0), 1.0);
        let p2 = SpeedParams::new(2, 1, 2.0).unwrap();
        assert!((p2.scale_factor(7.0 / 3.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn clock_consistency() {
        // A(t) = e^tau, and time_from_tau inverts time_change.
        for &alpha in &[1.0, 1.5, 2.0, 3.0] {
            let p = SpeedParams::new(3, 2, alpha).unwrap();
            for &t in &[0.0, 0.3, 1.0, 4.0, 17.5] {
                let tau = p.time_change(t);
                assert!((p.scale_factor(t) - tau.exp()).abs() <= 1e-12 * tau.exp());
                assert!((p.time_from_tau(tau) - t).abs() <= 1e-12 * (1.0 + t));
            }
        }
        let p = SpeedParams::new(2, 1, 1.0).unwrap();
        assert!((p.time_change(4.0) - 9.0f64.ln() / 2.0).abs() < 1e-15);
        assert_eq!(p.time_change(0.0), 0.0);
        let t_unit = (std::f64::consts::E.powi(2) - 1.0) / 2.0;
        assert!((p.time_change(t_unit) - 1.0).abs() < 1e-14);
    }
}
