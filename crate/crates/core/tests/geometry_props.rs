// Grid-level properties of the discrete geometry: refinement order of the
// curvature operators and primal/dual eigenvalue reciprocity across the
// Legendre transform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigmakflow_core::geometry::{dual_eigen_radial, primal_curvature_radial};
use sigmakflow_core::grid::RadialField;
use sigmakflow_core::legendre::legendre_transform_radial;

fn hyper(a: f64) -> impl Fn(f64) -> f64 {
    move |r| (a * a + r * r).sqrt()
}

#[test]
fn curvature_converges_at_second_order() {
    let a = 2.0f64.sqrt();
    let mut errs = Vec::new();
    for cells in [128usize, 256, 512] {
        let f = RadialField::from_fn(4.0, cells, hyper(a));
        let c = primal_curvature_radial(&f).unwrap();
        let mut err = 0.0f64;
        for i in 0..f.len() - 4 {
            err = err.max((c.kappa_rad[i] - 1.0 / a).abs());
            err = err.max((c.kappa_ang[i] - 1.0 / a).abs());
        }
        errs.push(err);
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.8, "measured order {order}, errors {errs:?}");
    }
}

#[test]
fn eigenvalue_reciprocity_hyperboloid_and_perturbed() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..4 {
        let a = 1.2 + rng.gen_range(0.0..0.8);
        let eps: f64 = if trial == 0 { 0.0 } else { rng.gen_range(0.005..0.02) };
        // smooth convex spacelike perturbation of the hyperboloid
        let f = RadialField::from_fn(6.0, 1024, |r| hyper(a)(r) + eps * (1.0 + r * r).ln());
        let h = f.h;
        let cur = primal_curvature_radial(&f).unwrap();
        let dual = legendre_transform_radial(&f, 0.88, 2048).unwrap();
        let (lr, la) = dual_eigen_radial(&dual).unwrap();
        let lr_field = RadialField { rmax: dual.rmax, h: dual.h, values: lr };
        let la_field = RadialField { rmax: dual.rmax, h: dual.h, values: la };
        let mut checked = 0;
        for i in 4..f.len() - 4 {
            let xi = cur.du[i];
            if !(0.05..=0.85).contains(&xi) {
                continue;
            }
            let lam_r = lr_field.interp(xi).unwrap();
            let lam_a = la_field.interp(xi).unwrap();
            // radial primal curvature pairs with the radial dual eigenvalue
            let tol = 60.0 * h;
            assert!(
                (lam_r - 1.0 / cur.kappa_rad[i]).abs() < tol,
                "trial {trial} node {i}: {lam_r} vs {}",
                1.0 / cur.kappa_rad[i]
            );
            assert!(
                (lam_a - 1.0 / cur.kappa_ang[i]).abs() < tol,
                "trial {trial} node {i} angular: {lam_a} vs {}",
                1.0 / cur.kappa_ang[i]
            );
            checked += 1;
        }
        assert!(checked > 100, "too few matched nodes ({checked})");
    }
}

#[test]
fn support_positive_under_condition_a() {
    let f = RadialField::from_fn(40.0, 2048, |r| 1.0 + (4.0 + r * r).sqrt());
    let cur = primal_curvature_radial(&f).unwrap();
    for i in 0..f.len() {
        assert!(cur.support[i] > 0.0);
    }
}
