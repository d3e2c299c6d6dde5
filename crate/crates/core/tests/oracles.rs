//! Frozen reference values. Theta and eta values were computed independently at 30 digits;
//! the R entries are a regression snapshot of the implementation.
#![allow(clippy::excessive_precision)]

use etl_core::belavin::build_r;
use etl_core::context::DEFAULT_TRUNC;
use etl_core::theta::{dedekind_eta, theta, theta_ml};
use etl_core::{Context, C64};

fn close(got: C64, want: (f64, f64), tol: f64) {
    let w = C64::new(want.0, want.1);
    assert!((got - w).norm() <= tol * w.norm(), "got {got}, want {w}");
}

#[test]
fn odd_theta() {
    let ctx = Context::new(2).unwrap();
    for (u, want) in [
        ((0.3, 0.1), (-0.88050604899565943742, -0.27419411714491610541)),
        ((-0.17, 0.42), (1.0746871524101757917, -1.6284037169284327508)),
        ((0.05, -0.2), (-0.23460175307082076089, 0.68032888954211393992)),
    ] {
        close(theta(C64::new(u.0, u.1), &ctx), want, 1e-14);
    }
}

#[test]
fn theta_with_characteristics() {
    let tau = Context::new(2).unwrap().tau;
    for (m, l, u, want) in [
        (0.0, 3, (0.21, -0.13), (1.0011091308142187768, -0.0060584411293547970644)),
        (1.0, 3, (0.21, -0.13), (0.13894958960863980963, 0.96334318066835266344)),
        (2.0 / 3.0, 2, (-0.4, 0.05), (-0.15990730968651571699, -0.54008483627303902281)),
    ] {
        let v = theta_ml(m, l, C64::new(u.0, u.1), tau, DEFAULT_TRUNC).unwrap();
        close(v.value, want, 1e-14);
        assert!(v.tail_bound < 1e-15);
    }
}

#[test]
fn eta() {
    let tau = Context::new(2).unwrap().tau;
    close(dedekind_eta(tau, DEFAULT_TRUNC).unwrap().value, (0.80652897605137990431, 0.017957475120636134391), 1e-14);
}

#[test]
fn r_entries_rank_two() {
    let ctx = Context::new(2).unwrap();
    let r = build_r(C64::new(0.23, 0.07), &ctx).unwrap();
    close(r.get(0, 1, 0, 1), (6.95971331932266457e-1, -3.73921523456366367e-1), 1e-13);
    close(r.get(0, 1, 1, 0), (1.04400869266339269e0, 4.07592265195075368e-2), 1e-13);
    close(r.get(0, 0, 1, 1), (2.35296717185948329e-1, 2.30692637839262388e-1), 1e-13);
    assert_eq!(r.get(0, 0, 0, 1), C64::new(0.0, 0.0));
}
