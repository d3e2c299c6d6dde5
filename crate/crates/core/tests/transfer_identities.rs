use etl_core::transfer::*;
use etl_core::weight::Sampler;
use etl_core::{Context, WeightPoint, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn dirs(n: usize, seed: u64, count: usize) -> Vec<WeightPoint> {
    let mut s = Sampler::new(seed);
    (0..count).map(|_| s.direction(n, 0.5)).collect()
}

#[test]
fn rll_n3() {
    let ctx = Context::new(3).unwrap();
    let (u, v) = (c(0.27, -0.04), c(-0.11, 0.15));
    let pts = generic_samples(&ctx, &mut Sampler::new(11), 3, &[u, v]).unwrap();
    let r = verify_rll(ctx.c, u, v, &ctx, &pts, &dirs(3, 2, 2)).unwrap();
    assert!(r < 1e-9, "{r}");
}

#[test]
fn commuting_traces_n3() {
    let ctx = Context::new(3).unwrap();
    let (u, v) = (c(0.27, -0.04), c(-0.11, 0.15));
    let h = ctx.hbar;
    let pts = generic_samples(&ctx, &mut Sampler::new(12), 6, &[u, u - h, u - h * 2.0, v, v - h, v - h * 2.0]).unwrap();
    for d in 1..=3 {
        for dp in 1..=3 {
            let r = verify_commute(ctx.c, u, v, d, dp, &ctx, &pts).unwrap();
            assert!(r < 1e-9, "d={d} d'={dp} {r}");
        }
    }
}

#[test]
fn generating_function_n3() {
    let ctx = Context::new(3).unwrap();
    let u = c(0.27, -0.04);
    let pts = generic_samples(&ctx, &mut Sampler::new(13), 6, &[u]).unwrap();
    let t = c(-0.4, 0.9);
    assert!(verify_genfunc(ctx.c, u, t, &ctx, &pts).unwrap() < 1e-9);
    let coeffs = verify_genfunc_coefficients(ctx.c, u, &ctx, &pts).unwrap();
    assert!(coeffs.iter().all(|&r| r < 1e-9), "{coeffs:?}");
    assert!(verify_sekiguchi(ctx.c, u, t, &ctx, &pts).unwrap() < 1e-9);
    assert!(verify_genfunc_tilde(ctx.c, u, t, &ctx, &pts).unwrap() < 1e-9);
}

#[test]
fn differential_limit_n3() {
    let ctx = Context::new(3).unwrap();
    let pts = Sampler::new(14).generic_points(&ctx, 4).unwrap();
    assert!(verify_displayed_d(ctx.c, &ctx, &pts).unwrap() < 1e-12);
    let r = verify_d_commute(ctx.c, &ctx, &pts).unwrap();
    assert!(r < 1e-8, "{r}");
    let (a, b) = verify_d_relations(ctx.c, &ctx, &pts, &dirs(3, 3, 2)).unwrap();
    assert!(a < 1e-9 && b < 1e-9, "{a} {b}");
    let (h, shown) = verify_hamiltonian_identity(ctx.c, &ctx, &pts).unwrap();
    assert!(h < 1e-9 && shown > 1e-3, "{h} {shown}");
    let mut sm = Sampler::new(4);
    let smooth: Vec<WeightPoint> = (0..2).map(|_| sm.direction(3, 0.3)).collect();
    let cm = verify_cm_limit(ctx.c, &ctx, &pts, &smooth, 1e-3).unwrap();
    assert!(cm.residual < 1e-4, "{cm:?}");
    assert!(cm.residual_as_displayed > 1e-2, "{cm:?}");
}

#[test]
fn krichever_and_ruijsenaars_n3() {
    let ctx = Context::new(3).unwrap();
    let u = c(0.27, -0.04);
    let pts = generic_samples(&ctx, &mut Sampler::new(15), 3, &[u]).unwrap();
    let r = verify_krichever(ctx.c, u, &ctx, &pts, &dirs(3, 5, 2), 1e-3).unwrap();
    assert!(r < 1e-6, "{r}");
    for d in 0..=3 {
        let r = verify_ruijsenaars(ctx.c, u, d, &pts[0], &ctx).unwrap();
        assert!(r < 1e-9, "d={d} {r}");
    }
    assert!(verify_phi_ratio(&pts[1], ctx.c, &ctx).unwrap() < 1e-9);
}
