// Contracts of the stepping operations: identity at dt = 0, CFL refusal,
// clock consistency, the one-Euler-step identity at an expander state, and
// self-similarity of the rescaled orbit.

use sigmakflow_core::expander::hyperboloid_radius;
use sigmakflow_core::flow::{
    rescale, run_dual_radial, step_dual, step_normalized, step_primal_radial, FieldData,
    FlowState, Formulation, RadialRunConfig,
};
use sigmakflow_core::grid::{BallField2D, BallGrid, RadialField};
use sigmakflow_core::params::SpeedParams;
use sigmakflow_core::CoreError;

fn p211() -> SpeedParams {
    SpeedParams::new(2, 1, 1.0).unwrap()
}

fn cfl_bound(s: &FlowState, normalized: bool) -> f64 {
    let res = if normalized { step_normalized(s, f64::MAX) } else { step_dual(s, f64::MAX) };
    match res {
        Err(CoreError::Cfl { required, .. }) => required,
        other => panic!("expected CFL refusal, got {other:?}"),
    }
}

fn dual_hyper_state(a: f64, cells: usize) -> FlowState {
    let f = RadialField::from_fn(0.9, cells, move |rho| -a * (1.0 - rho * rho).sqrt());
    FlowState::new(FieldData::Radial(f), Formulation::Dual, p211())
}

#[test]
fn dt_zero_is_identity() {
    let s = dual_hyper_state(2.0f64.sqrt(), 128);
    let (s2, rep) = step_dual(&s, 0.0).unwrap();
    assert_eq!(rep.dt_used, 0.0);
    let (a, b) = (s.field.as_radial().unwrap(), s2.field.as_radial().unwrap());
    assert_eq!(a.values, b.values);
    let sn = FlowState { formulation: Formulation::Normalized, ..s.clone() };
    let (s3, _) = step_normalized(&sn, 0.0).unwrap();
    assert_eq!(a.values, s3.field.as_radial().unwrap().values);
}

#[test]
fn cfl_violation_refused_with_required_dt() {
    let s = dual_hyper_state(2.0f64.sqrt(), 128);
    match step_dual(&s, 1.0) {
        Err(CoreError::Cfl { requested, required }) => {
            assert_eq!(requested, 1.0);
            assert!(required < 1.0 && required > 0.0);
            // the advertised bound is accepted
            assert!(step_dual(&s, required).is_ok());
        }
        other => panic!("expected CFL refusal, got {other:?}"),
    }
}

#[test]
fn expander_euler_step_scales_by_one_plus_dt() {
    // H = 0 at an expander state forces u*_t = u* d(ln A)/dt = u* at t = 0:
    // one Euler step multiplies the field by (1 + dt) up to O(dt^2) + O(h^2).
    let a = hyperboloid_radius(&p211());
    let s = dual_hyper_state(a, 256);
    let dt = 0.5 * cfl_bound(&s, false);
    let (s2, _) = step_dual(&s, dt).unwrap();
    let f0 = s.field.as_radial().unwrap();
    let f1 = s2.field.as_radial().unwrap();
    for i in 0..f0.len() {
        let expect = f0.values[i] * (1.0 + dt);
        assert!(
            (f1.values[i] - expect).abs() < 1e-2 * dt,
            "node {i}: {} vs {expect}",
            f1.values[i]
        );
    }
}

#[test]
fn clocks_stay_consistent_along_steps() {
    let mut s = dual_hyper_state(2.0f64.sqrt(), 96);
    let dt = 0.9 * cfl_bound(&s, false);
    for _ in 0..50 {
        let (s2, rep) = step_dual(&s, dt).unwrap();
        assert!(rep.cfl_ratio <= 1.0);
        s = s2;
    }
    let p = s.params;
    assert!((s.tau - p.time_change(s.t)).abs() < 1e-13);
    assert!((p.scale_factor(s.t) - s.tau.exp()).abs() < 1e-12);
}

#[test]
fn self_similar_rescale_returns_to_initial() {
    // run the dual flow from the expander, rescale, compare with t = 0 data
    let p = p211();
    let a = hyperboloid_radius(&p);
    let initial = RadialField::from_fn(0.9, 256, move |rho| -a * (1.0 - rho * rho).sqrt());
    let cfg = RadialRunConfig { t_end: 0.5, ..Default::default() };
    let out = run_dual_radial(&initial, p, &cfg).unwrap();
    let state = FlowState {
        t: out.t,
        tau: p.time_change(out.t),
        field: FieldData::Radial(out.final_field),
        formulation: Formulation::Dual,
        params: p,
    };
    match rescale(&state).unwrap() {
        FieldData::Radial(f) => {
            let err = f.sup_distance(&initial).unwrap();
            assert!(err < 5e-4, "rescaled orbit drift {err}");
        }
        _ => unreachable!(),
    }
    // primal rescale: closed-form algebra collapses the orbit exactly
    let prim = RadialField::from_fn(5.0, 200, move |r| {
        let aa = 3.0; // A(4) for alpha = 1
        (a * a * aa * aa + r * r).sqrt()
    });
    let st = FlowState {
        t: 4.0,
        tau: p.time_change(4.0),
        field: FieldData::Radial(prim),
        formulation: Formulation::PrimalRadial,
        params: p,
    };
    match rescale(&st).unwrap() {
        FieldData::Radial(f) => {
            for i in 0..f.len() {
                let r = f.radius(i);
                let expect = (a * a + r * r).sqrt();
                assert!((f.values[i] - expect).abs() < 1e-8, "node {i}");
            }
        }
        _ => unreachable!(),
    }
}

#[test]
fn primal_step_center_value_example() {
    // n=2, k=1, alpha=1, a = sqrt(2): at t = 4 the exact center height is
    // sqrt(2) * A(4) = 3 sqrt(2)
    let p = p211();
    let a = hyperboloid_radius(&p);
    assert!((a * p.scale_factor(4.0) - 4.242640687119285).abs() < 1e-12);
}

#[test]
fn normalized_increases_toward_expander_below_it() {
    // u* = -rho w* - c with rho > a: right side strictly positive
    let p = p211();
    let f = RadialField::from_fn(0.9, 128, |x| -2.0 * (1.0 - x * x).sqrt() - 1.0);
    let s = FlowState::new(FieldData::Radial(f), Formulation::Normalized, p);
    let dtau = 0.5 * cfl_bound(&s, true);
    let (s2, rep) = step_normalized(&s, dtau).unwrap();
    assert!(rep.residual_min > 0.0, "H~ min {}", rep.residual_min);
    let (f0, f1) = (s.field.as_radial().unwrap(), s2.field.as_radial().unwrap());
    for i in 0..f0.last_index() {
        assert!(f1.values[i] > f0.values[i], "node {i} did not increase");
    }
}

#[test]
fn ball_and_radial_duals_agree_on_radial_data() {
    // the 2-D stepper and the radial stepper integrate the same equation
    let p = p211();
    let a = 2.0f64.sqrt();
    let grid = BallGrid::new(0.9, 1.0 / 48.0).unwrap();
    let ball = BallField2D::from_fn(grid, |x, y| -a * (1.0 - x * x - y * y).sqrt());
    let mut sb = FlowState::new(FieldData::Ball(ball), Formulation::Dual, p);
    let radial = RadialField::from_fn(0.9, 512, |rho| -a * (1.0 - rho * rho).sqrt());
    let mut sr = FlowState::new(FieldData::Radial(radial), Formulation::Dual, p);
    let t_end = 0.02;
    let dtb = 0.9 * cfl_bound(&sb, false);
    while sb.t < t_end {
        let dt = (t_end - sb.t).min(dtb);
        sb = step_dual(&sb, dt).unwrap().0;
    }
    let dtr = 0.9 * cfl_bound(&sr, false);
    while sr.t < t_end {
        let dt = (t_end - sr.t).min(dtr);
        sr = step_dual(&sr, dt).unwrap().0;
    }
    let fb = sb.field.as_ball().unwrap();
    let fr = sr.field.as_radial().unwrap();
    let mut worst = 0.0f64;
    for idx in 0..fb.values.len() {
        if fb.grid.kind[idx] == sigmakflow_core::grid::CellKind::Interior {
            let (x, y) = fb.grid.coords(idx);
            let rho = (x * x + y * y).sqrt();
            let d = (fb.values[idx] - fr.interp(rho).unwrap()).abs();
            worst = worst.max(d);
        }
    }
    assert!(worst < 5e-4, "formulations disagree by {worst}");
}
