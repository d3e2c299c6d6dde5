//! Theta functions with characteristics, their derivatives, Dedekind eta,
//! Weierstrass' p and the determinant identities built from them.

use std::f64::consts::PI;

use crate::context::{rel_residual, Context, C64};
use crate::error::{Error, Result};
use crate::linalg;

/// Deepest derivative supported by the series evaluators.
pub const MAX_DERIV: usize = 8;

const TWO_PI_I: C64 = C64::new(0.0, 2.0 * PI);
const I: C64 = C64::new(0.0, 1.0);

/// A series value together with an estimate of the discarded tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaValue {
    pub value: C64,
    pub tail_bound: f64,
}

/// `theta_{m,l}(u, tau) = sum_{mu in m + lZ} exp 2 pi i (mu u + mu^2 tau / 2l)`.
pub fn theta_ml(m: f64, l: u32, u: C64, tau: C64, trunc: usize) -> Result<ThetaValue> {
    theta_ml_deriv(m, l, u, tau, trunc, 0)
}

/// The `order`-th `u`-derivative of [`theta_ml`], differentiated term by term.
pub fn theta_ml_deriv(m: f64, l: u32, u: C64, tau: C64, trunc: usize, order: usize) -> Result<ThetaValue> {
    if !(tau.im > 0.0) {
        return Err(Error::InvalidParameter(format!("Im tau = {} must be positive", tau.im)));
    }
    if l == 0 {
        return Err(Error::InvalidParameter("theta level must be positive".into()));
    }
    if order > MAX_DERIV {
        return Err(Error::DerivativeDepth { requested: order, supported: MAX_DERIV });
    }
    let mut out = [C64::new(0.0, 0.0); MAX_DERIV + 1];
    let tail = series_into(m, l, u, tau, trunc, order, &mut out);
    Ok(ThetaValue { value: out[order], tail_bound: tail })
}

fn term(mu: f64, l: f64, u: C64, tau: C64) -> C64 {
    (TWO_PI_I * (u * mu + tau * (mu * mu / (2.0 * l)))).exp()
}

/// Fills `out[0..=max_order]` with the series and its derivatives; returns the tail bound
/// of the highest order requested.
fn series_into(m: f64, l: u32, u: C64, tau: C64, trunc: usize, max_order: usize, out: &mut [C64]) -> f64 {
    let lf = l as f64;
    let t = trunc as i64;
    for o in out.iter_mut().take(max_order + 1) {
        *o = C64::new(0.0, 0.0);
    }
    for k in -t..=t {
        let mu = m + lf * k as f64;
        let e = term(mu, lf, u, tau);
        let f = TWO_PI_I * mu;
        let mut acc = e;
        out[0] += acc;
        for o in out.iter_mut().take(max_order + 1).skip(1) {
            acc *= f;
            *o += acc;
        }
    }
    let mut tail = 0.0;
    for side in [-1.0, 1.0] {
        let k1 = side * (t + 1) as f64;
        let k2 = side * (t + 2) as f64;
        let mu1 = m + lf * k1;
        let mu2 = m + lf * k2;
        let a1 = term(mu1, lf, u, tau).norm() * (2.0 * PI * mu1.abs()).powi(max_order as i32);
        let a2 = term(mu2, lf, u, tau).norm() * (2.0 * PI * mu2.abs()).powi(max_order as i32);
        let ratio = if a1 > 0.0 { a2 / a1 } else { 0.0 };
        tail += if ratio < 1.0 { a1 / (1.0 - ratio) } else { f64::INFINITY };
    }
    tail
}

/// Jacobi theta `theta(u) = theta_{1/2,1}(u + 1/2, tau)`: odd, zeros on `Z + Z tau`.
pub fn jacobi_theta(u: C64, ctx: &Context, order: usize) -> Result<ThetaValue> {
    theta_ml_deriv(0.5, 1, u + 0.5, ctx.tau, ctx.trunc, order)
}

/// Value of `theta^{(order)}(u)` without the tail estimate.
pub fn theta_d(u: C64, ctx: &Context, order: usize) -> C64 {
    assert!(order <= MAX_DERIV, "derivative order {order} exceeds {MAX_DERIV}");
    let mut out = [C64::new(0.0, 0.0); MAX_DERIV + 1];
    series_into(0.5, 1, u + 0.5, ctx.tau, ctx.trunc, order, &mut out);
    out[order]
}

/// `theta(u)`.
pub fn theta(u: C64, ctx: &Context) -> C64 {
    theta_d(u, ctx, 0)
}

/// `[theta(u), theta'(u), ..., theta^{(max_order)}(u)]` in one pass.
pub fn theta_derivs(u: C64, ctx: &Context, max_order: usize) -> Vec<C64> {
    assert!(max_order <= MAX_DERIV, "derivative order {max_order} exceeds {MAX_DERIV}");
    let mut out = [C64::new(0.0, 0.0); MAX_DERIV + 1];
    series_into(0.5, 1, u + 0.5, ctx.tau, ctx.trunc, max_order, &mut out);
    out[..=max_order].to_vec()
}

/// Character theta of modulus `n tau`: `theta_{1/2 - j/n, 1}(u + 1/2, n tau)`, `j` read mod `n`.
pub fn theta_char(j: i64, u: C64, ctx: &Context) -> ThetaValue {
    let n = ctx.n as i64;
    let jr = j.rem_euclid(n) as f64;
    let mut out = [C64::new(0.0, 0.0); 1];
    let tail = series_into(0.5 - jr / n as f64, 1, u + 0.5, ctx.tau * n as f64, ctx.trunc, 0, &mut out);
    ThetaValue { value: out[0], tail_bound: tail }
}

/// Level-`n` theta `theta_{n/2 - j, n}(u + 1/2, tau)` used by the intertwining vectors.
pub fn theta_level_n(j: i64, u: C64, ctx: &Context) -> ThetaValue {
    let n = ctx.n as i64;
    let jr = j.rem_euclid(n) as f64;
    let mut out = [C64::new(0.0, 0.0); 1];
    let tail = series_into(n as f64 / 2.0 - jr, ctx.n as u32, u + 0.5, ctx.tau, ctx.trunc, 0, &mut out);
    ThetaValue { value: out[0], tail_bound: tail }
}

/// Dedekind eta `p^{1/24} prod_{m >= 1} (1 - p^m)`, `p = e^{2 pi i tau}`.
pub fn dedekind_eta(tau: C64, trunc: usize) -> Result<ThetaValue> {
    if !(tau.im > 0.0) {
        return Err(Error::InvalidParameter(format!("Im tau = {} must be positive", tau.im)));
    }
    let p = (TWO_PI_I * tau).exp();
    let mut prod = (TWO_PI_I * tau / 24.0).exp();
    let mut pm = C64::new(1.0, 0.0);
    for _ in 1..=trunc {
        pm *= p;
        prod *= C64::new(1.0, 0.0) - pm;
    }
    let pa = p.norm();
    let tail = prod.norm() * pa.powi(trunc as i32 + 1) / (1.0 - pa) / (1.0 - pa);
    Ok(ThetaValue { value: prod, tail_bound: tail })
}

/// `d/dtau log eta(tau) = 2 pi i (1/24 - sum_m m p^m / (1 - p^m))`.
pub fn dlog_eta(tau: C64, trunc: usize) -> C64 {
    let p = (TWO_PI_I * tau).exp();
    let mut s = C64::new(1.0 / 24.0, 0.0);
    let mut pm = C64::new(1.0, 0.0);
    for m in 1..=(4 * trunc) {
        pm *= p;
        s -= pm * m as f64 / (C64::new(1.0, 0.0) - pm);
    }
    TWO_PI_I * s
}

/// `sqrt(-1) eta(tau)`, the normalization of the intertwining vectors.
pub fn i_eta(ctx: &Context) -> C64 {
    I * dedekind_eta(ctx.tau, ctx.trunc).map(|v| v.value).unwrap_or(C64::new(f64::NAN, f64::NAN))
}

/// Weierstrass `p(u) = -(log theta)''(u) + 4 pi i d/dtau log eta` for the lattice `Z + Z tau`.
pub fn weierstrass_p(u: C64, ctx: &Context) -> Result<C64> {
    if crate::context::lattice_distance(u, ctx.tau) < 1e-12 {
        return Err(Error::Singular(format!("u = {u} is a lattice point")));
    }
    let d = theta_derivs(u, ctx, 2);
    let log2 = (d[2] * d[0] - d[1] * d[1]) / (d[0] * d[0]);
    Ok(-log2 + weierstrass_constant(ctx))
}

/// The constant `theta'''(0) / (3 theta'(0))` making `p(u) - 1/u^2` vanish at `u = 0`.
pub fn weierstrass_constant(ctx: &Context) -> C64 {
    C64::new(0.0, 4.0 * PI) * dlog_eta(ctx.tau, ctx.trunc)
}

/// `(log theta)''(u)`.
pub fn log_theta_dd(u: C64, ctx: &Context) -> C64 {
    let d = theta_derivs(u, ctx, 2);
    (d[2] * d[0] - d[1] * d[1]) / (d[0] * d[0])
}

/// Residual of the Vandermonde-type determinant formula
/// `det[theta_j(u_k)/(i eta)] = (-1)^{n-1} theta(sum u)/(i eta) prod_{j<k} theta(u_j - u_k)/(i eta)`.
///
/// Returns `None` when both sides are below `tol_identity` (degenerate input).
pub fn verify_vandermonde(us: &[C64], ctx: &Context) -> Option<f64> {
    let n = us.len();
    let ctx = ctx.with_n(n);
    let ie = i_eta(&ctx);
    let m = linalg::from_fn(n, n, |j, k| theta_level_n(j as i64 + 1, us[k], &ctx).value / ie);
    let lhs = linalg::det(&m);
    let sum: C64 = us.iter().sum();
    let mut rhs = theta(sum, &ctx) / ie;
    for j in 0..n {
        for k in (j + 1)..n {
            rhs *= theta(us[j] - us[k], &ctx) / ie;
        }
    }
    if n.is_multiple_of(2) {
        rhs = -rhs;
    }
    if lhs.norm() < ctx.tol_identity && rhs.norm() < ctx.tol_identity {
        return None;
    }
    Some(rel_residual(lhs, rhs))
}

/// Residual of the hbar-deformed elliptic determinant identity
/// `det[prod_r theta(mu_r - lambda_{s'} + hbar [r<s] + [r=s](u - (s-1) hbar))]
///   = theta(u + sum(mu - lambda)) prod_{s<d} theta(u - s hbar) prod_{s<s'} theta(lambda_{s'} - lambda_s) theta(hbar + mu_s - mu_{s'})`.
pub fn verify_qfay(u: C64, lambdas: &[C64], mus: &[C64], ctx: &Context) -> f64 {
    let (lhs, rhs) = qfay_sides(u, lambdas, mus, ctx);
    rel_residual(lhs, rhs)
}

pub fn qfay_sides(u: C64, lambdas: &[C64], mus: &[C64], ctx: &Context) -> (C64, C64) {
    let d = lambdas.len();
    assert_eq!(d, mus.len());
    let h = ctx.hbar;
    let m = linalg::from_fn(d, d, |s, sp| {
        let mut p = C64::new(1.0, 0.0);
        for (r, mu) in mus.iter().enumerate() {
            let mut arg = mu - lambdas[sp];
            if r < s {
                arg += h;
            }
            if r == s {
                arg += u - h * s as f64;
            }
            p *= theta(arg, ctx);
        }
        p
    });
    let lhs = linalg::det(&m);
    let shift: C64 = mus.iter().zip(lambdas).map(|(m, l)| m - l).sum();
    let mut rhs = theta(u + shift, ctx);
    for s in 1..d {
        rhs *= theta(u - h * s as f64, ctx);
    }
    for s in 0..d {
        for sp in (s + 1)..d {
            rhs *= theta(lambdas[sp] - lambdas[s], ctx) * theta(h + mus[s] - mus[sp], ctx);
        }
    }
    (lhs, rhs)
}

/// Residual of the genus-one Fay (Frobenius) determinant
/// `det[theta(mu_s - lambda_{s'} + u) / (theta(mu_s - lambda_{s'}) theta(u))]`.
///
/// Fails with [`Error::Singular`] when a denominator is within `tol_identity` of zero.
pub fn verify_fay(u: C64, lambdas: &[C64], mus: &[C64], ctx: &Context) -> Result<f64> {
    let (lhs, rhs) = fay_sides(u, lambdas, mus, ctx)?;
    Ok(rel_residual(lhs, rhs))
}

pub fn fay_sides(u: C64, lambdas: &[C64], mus: &[C64], ctx: &Context) -> Result<(C64, C64)> {
    let d = lambdas.len();
    assert_eq!(d, mus.len());
    let tu = theta(u, ctx);
    if tu.norm() < ctx.tol_identity {
        return Err(Error::Singular("theta(u) vanishes".into()));
    }
    let mut cross = vec![C64::new(0.0, 0.0); d * d];
    for s in 0..d {
        for sp in 0..d {
            let t = theta(mus[s] - lambdas[sp], ctx);
            if t.norm() < ctx.tol_identity {
                return Err(Error::Singular(format!("theta(mu_{s} - lambda_{sp}) vanishes")));
            }
            cross[s * d + sp] = t;
        }
    }
    let m = linalg::from_fn(d, d, |s, sp| theta(mus[s] - lambdas[sp] + u, ctx) / (cross[s * d + sp] * tu));
    let lhs = linalg::det(&m);
    let shift: C64 = mus.iter().zip(lambdas).map(|(m, l)| m - l).sum();
    let mut rhs = theta(u + shift, ctx) / tu;
    for s in 0..d {
        for sp in (s + 1)..d {
            rhs *= theta(mus[s] - mus[sp], ctx) * theta(lambdas[sp] - lambdas[s], ctx);
        }
    }
    for c in &cross {
        rhs /= c;
    }
    Ok((lhs, rhs))
}

/// Jacobi triple product `i p^{1/8} (z^{1/2} - z^{-1/2}) prod_{m=1}^{factors} (1 - z p^m)(1 - p^m/z)(1 - p^m)`,
/// an oracle for [`theta`] independent of the series.
pub fn triple_product(u: C64, tau: C64, factors: usize) -> C64 {
    let p = (TWO_PI_I * tau).exp();
    let z = (TWO_PI_I * u).exp();
    let zh = (C64::new(0.0, PI) * u).exp();
    let mut v = I * (TWO_PI_I * tau / 8.0).exp() * (zh - 1.0 / zh);
    let mut pm = C64::new(1.0, 0.0);
    for _ in 0..factors {
        pm *= p;
        v *= (1.0 - z * pm) * (1.0 - pm / z) * (1.0 - pm);
    }
    v
}

/// `exp(2 pi i tau/24 + sum_{m <= terms} log(1 - p^m))`, an oracle for [`dedekind_eta`].
pub fn eta_log_sum(tau: C64, terms: usize) -> C64 {
    let p = (TWO_PI_I * tau).exp();
    let mut log = TWO_PI_I * tau / 24.0;
    let mut pm = C64::new(1.0, 0.0);
    for _ in 0..terms {
        pm *= p;
        log += (1.0 - pm).ln();
    }
    log.exp()
}

/// Plain summation of `theta_{m,l}` over `mu = m + l k`, `|k| <= terms`.
pub fn theta_ml_reference(m: f64, l: u32, u: C64, tau: C64, terms: i64) -> C64 {
    (-terms..=terms)
        .map(|k| {
            let mu = m + (l as i64 * k) as f64;
            (TWO_PI_I * (u * mu + tau * (mu * mu / (2.0 * l as f64)))).exp()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::DEFAULT_TAU;

    fn ctx(n: usize) -> Context {
        Context::new(n).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn theta_matches_triple_product() {
        let ctx = ctx(2);
        for u in [c(0.31, -0.12), c(-0.7, 0.33), c(0.05, 0.4)] {
            let s = theta(u, &ctx);
            let t = triple_product(u, ctx.tau, 200);
            assert!(rel_residual(s, t) < 1e-12, "{s} vs {t}");
        }
    }

    #[test]
    fn theta_is_odd_and_vanishes_at_zero() {
        let ctx = ctx(2);
        assert!(theta(c(0.0, 0.0), &ctx).norm() < 1e-14);
        let u = c(0.27, 0.11);
        assert!((theta(u, &ctx) + theta(-u, &ctx)).norm() < 1e-13);
    }

    #[test]
    fn theta_quasi_periodicity() {
        let ctx = ctx(2);
        let u = c(0.21, -0.17);
        let t = theta(u, &ctx);
        assert!(rel_residual(theta(u + 1.0, &ctx), -t) < 1e-13);
        let factor = -(-TWO_PI_I * (u + ctx.tau / 2.0)).exp();
        assert!(rel_residual(theta(u + ctx.tau, &ctx), factor * t) < 1e-12);
    }

    #[test]
    fn theta_ml_index_shift_and_period() {
        let tau = DEFAULT_TAU;
        let u = c(0.13, 0.07);
        let a = theta_ml(0.25, 3, u, tau, 24).unwrap().value;
        let b = theta_ml(3.25, 3, u, tau, 24).unwrap().value;
        assert!(rel_residual(a, b) < 1e-13);
        assert!(rel_residual(a, theta_ml_reference(0.25, 3, u, tau, 40)) < 1e-13);
        let shifted = theta_ml(0.25, 3, u + 1.0, tau, 24).unwrap().value;
        assert!(rel_residual(shifted, (TWO_PI_I * 0.25).exp() * a) < 1e-13);
    }

    #[test]
    fn theta_ml_rejects_bad_tau() {
        assert!(theta_ml(0.5, 1, c(0.1, 0.0), c(0.0, -0.5), 24).is_err());
        assert!(theta_ml_deriv(0.5, 1, c(0.1, 0.0), DEFAULT_TAU, 24, 9).is_err());
    }

    #[test]
    fn derivative_matches_central_difference() {
        let ctx = ctx(2);
        let h = 1e-5;
        for u in [c(0.3, 0.1), c(-0.45, -0.2)] {
            let fd = (theta(u + h, &ctx) - theta(u - h, &ctx)) / (2.0 * h);
            let an = jacobi_theta(u, &ctx, 1).unwrap().value;
            assert!((fd - an).norm() < 1e-7);
        }
    }

    #[test]
    fn tail_bounds_are_tiny() {
        let ctx = ctx(3);
        let v = jacobi_theta(c(0.4, 0.3), &ctx, 4).unwrap();
        assert!(v.tail_bound < ctx.tol_series, "{}", v.tail_bound);
        assert!(theta_level_n(2, c(0.1, 0.2), &ctx).tail_bound < ctx.tol_series);
        assert!(theta_char(1, c(0.1, 0.2), &ctx).tail_bound < ctx.tol_series);
    }

    #[test]
    fn char_theta_zeros_and_period() {
        let ctx = ctx(3);
        for j in 0..3i64 {
            let z = theta_char(j, ctx.tau * j as f64, &ctx).value;
            assert!(z.norm() < 1e-12, "j={j} {z}");
            let u = c(0.2, 0.05);
            assert_eq!(theta_char(j + 3, u, &ctx).value, theta_char(j, u, &ctx).value);
        }
    }

    #[test]
    fn eta_product_matches_log_sum() {
        let tau = DEFAULT_TAU;
        let eta = dedekind_eta(tau, 24).unwrap().value;
        assert!(rel_residual(eta, eta_log_sum(tau, 60)) < 1e-13);
        let far = c(0.0, 12.0);
        let e = dedekind_eta(far, 24).unwrap().value;
        assert!(rel_residual(e, (TWO_PI_I * far / 24.0).exp()) < 1e-12);
    }

    #[test]
    fn weierstrass_constant_is_laurent_constant_term() {
        let ctx = ctx(2);
        let d = theta_derivs(c(0.0, 0.0), &ctx, 3);
        assert!(rel_residual(weierstrass_constant(&ctx), d[3] / (3.0 * d[1])) < 1e-12);
        let u = c(1e-3, 0.0);
        let p = weierstrass_p(u, &ctx).unwrap();
        assert!((u * u * p - 1.0).norm() < 1e-4);
        assert!((p - 1.0 / (u * u)).norm() < 1e-4);
    }

    #[test]
    fn weierstrass_even_and_periodic() {
        let ctx = ctx(2);
        let u = c(0.33, 0.21);
        let p = weierstrass_p(u, &ctx).unwrap();
        assert!(rel_residual(p, weierstrass_p(-u, &ctx).unwrap()) < 1e-12);
        assert!(rel_residual(p, weierstrass_p(u + 1.0, &ctx).unwrap()) < 1e-12);
        assert!(rel_residual(p, weierstrass_p(u + ctx.tau, &ctx).unwrap()) < 1e-11);
        assert!(weierstrass_p(c(0.0, 0.0), &ctx).is_err());
    }

    #[test]
    fn vandermonde_small_ranks() {
        for n in 2..=4 {
            let ctx = ctx(n);
            let us: Vec<C64> = (0..n).map(|k| c(0.13 * k as f64 - 0.2, 0.07 + 0.05 * k as f64)).collect();
            let r = verify_vandermonde(&us, &ctx).unwrap();
            assert!(r < 1e-10, "n={n} r={r}");
        }
    }

    #[test]
    fn vandermonde_shared_zero_is_degenerate() {
        let ctx = ctx(2);
        let us = [c(0.3, 0.1), c(-0.3, -0.1)];
        assert_eq!(verify_vandermonde(&us, &ctx), None);
    }

    #[test]
    fn qfay_rank_one_is_exact() {
        let ctx = ctx(2);
        let r = verify_qfay(c(0.2, 0.1), &[c(0.1, 0.0)], &[c(-0.3, 0.2)], &ctx);
        assert!(r < 1e-15);
    }

    #[test]
    fn qfay_rank_three() {
        let ctx = ctx(2);
        let l = [c(0.11, 0.02), c(-0.23, 0.1), c(0.31, -0.07)];
        let m = [c(0.05, -0.12), c(0.37, 0.04), c(-0.19, 0.15)];
        assert!(verify_qfay(c(0.27, -0.09), &l, &m, &ctx) < 1e-12);
    }

    #[test]
    fn fay_rank_two_and_singular_rejection() {
        let ctx = ctx(2);
        let l = [c(0.11, 0.02), c(-0.23, 0.1)];
        let m = [c(0.05, -0.12), c(0.37, 0.04)];
        assert!(verify_fay(c(0.27, -0.09), &l, &m, &ctx).unwrap() < 1e-12);
        assert!(verify_fay(c(0.27, -0.09), &l, &[l[0], m[1]], &ctx).is_err());
    }
}
