//! Factorized L-operators, their fusion, the commuting family `M_d(c|u)`, the generating
//! function and the Ruijsenaars, Krichever, Calogero-Moser and Macdonald limits.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use crate::belavin::{build_r, intertwiners, phi_matrix};
use crate::context::{Context, C64};
use crate::error::{Error, Result};
use crate::jet::{along_linear_form, Jet};
use crate::linalg::{self, CMatrix};
use crate::opalg::{
    coefficient, constant, normal_det, operator_distance, pdo_distance, permutations, subsets, DifferenceOperator,
    DifferentialOperator, Entry, JetCoefficient,
};
use crate::theta::{theta, theta_d, theta_derivs, MAX_DERIV};
use crate::weight::{project_eps, Sampler, ShiftKey, WeightPoint};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Scalar theta function used by the closed forms; swapped for its `p -> 0` limit in the
/// Macdonald degeneration.
pub type ThetaFn = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

pub fn jacobi(ctx: &Context) -> ThetaFn {
    let ctx = ctx.clone();
    Arc::new(move |x| theta(x, &ctx))
}

/// Leading `p -> 0` term of `theta` up to a constant: `sin(pi x)`.
pub fn trigonometric() -> ThetaFn {
    Arc::new(|x: C64| (x * PI).sin())
}

fn not_finite(what: &str) -> Error {
    Error::Singular(format!("{what} evaluated to a non-finite value"))
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(not_finite(what))
    }
}

/// `e^{2 pi i <lambda, v>}`.
pub fn exp_test_function(v: WeightPoint) -> impl Fn(&WeightPoint) -> C64 + Send + Sync + Clone {
    move |p: &WeightPoint| (C64::new(0.0, 2.0 * PI) * p.pair(&v)).exp()
}

/// Generic weight points at which the intertwiners for every `u` in `spectral` are well conditioned.
pub fn generic_samples(ctx: &Context, sampler: &mut Sampler, count: usize, spectral: &[C64]) -> Result<Vec<WeightPoint>> {
    let us = spectral.to_vec();
    let c2 = ctx.clone();
    let guard = move |p: &WeightPoint| {
        us.iter().map(|&u| 1e4 / linalg::condition_number(&phi_matrix(u, p, &c2))).fold(f64::INFINITY, f64::min)
    };
    (0..count).map(|_| sampler.generic_point(ctx, &[&guard])).collect()
}

type CoefficientTensor = Arc<Vec<C64>>;

/// Memoized `lambda -> [phi(u + c hbar)[j][k] phibar(u)[k][i]]_{i,j,k}`.
struct LCoefficients {
    n: usize,
    u: C64,
    c: C64,
    ctx: Context,
    cache: Mutex<HashMap<Vec<u64>, CoefficientTensor>>,
}

impl LCoefficients {
    fn at(&self, lambda: &WeightPoint) -> CoefficientTensor {
        let key = lambda.bits();
        if let Some(v) = self.cache.lock().expect("cache poisoned").get(&key) {
            return v.clone();
        }
        let n = self.n;
        let mut out = vec![C64::new(f64::NAN, f64::NAN); n * n * n];
        if let Ok(pair) = intertwiners(self.u, lambda, &self.ctx) {
            let phi_c = phi_matrix(self.u + self.c * self.ctx.hbar, lambda, &self.ctx);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        out[(i * n + j) * n + k] = phi_c[(j, k)] * pair.phibar[(k, i)];
                    }
                }
            }
        }
        let out = Arc::new(out);
        let mut guard = self.cache.lock().expect("cache poisoned");
        if guard.len() > 1 << 15 {
            guard.clear();
        }
        guard.insert(key, out.clone());
        out
    }
}

/// `n x n` matrix of difference operators; `entries[i][j]` is `L^i_j`.
#[derive(Debug, Clone)]
pub struct LOperator {
    pub n: usize,
    pub c: C64,
    pub u: C64,
    pub entries: Vec<Vec<DifferenceOperator>>,
}

impl LOperator {
    pub fn entry(&self, i: usize, j: usize) -> &DifferenceOperator {
        &self.entries[i][j]
    }

    /// Entries as term lists for [`normal_det`].
    pub fn as_entries(&self) -> Vec<Vec<Entry>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|op| op.terms().map(|(k, c)| (k.clone(), c.clone())).collect()).collect())
            .collect()
    }
}

/// `L(c|u)^i_j = sum_k phi(u + c hbar)_{lambda, j}^{lambda + hbar eps_k} phibar(u)^{lambda + hbar eps_k, i}_lambda T_k`.
pub fn l_op(c: C64, u: C64, ctx: &Context) -> LOperator {
    let n = ctx.n;
    let coeffs = Arc::new(LCoefficients { n, u, c, ctx: ctx.clone(), cache: Mutex::new(HashMap::new()) });
    let entries = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut op = DifferenceOperator::zero(n, ctx.hbar);
                    for k in 0..n {
                        let src = coeffs.clone();
                        op.add_term(ShiftKey::unit(k, n), coefficient(move |p| src.at(p)[(i * n + j) * n + k]));
                    }
                    op
                })
                .collect()
        })
        .collect();
    LOperator { n, c, u, entries }
}

/// Residual of `sum R(u-v)^{ij}_{ab} L(v)^b_{j'} L(u)^a_{i'} = sum R(u-v)^{ab}_{i'j'} L(u)^i_a L(v)^j_b`
/// applied to each test function at each point, relative to the largest side.
pub fn verify_rll(c: C64, u: C64, v: C64, ctx: &Context, points: &[WeightPoint], directions: &[WeightPoint]) -> Result<f64> {
    let n = ctx.n;
    let r = build_r(u - v, ctx)?;
    let lu = l_op(c, u, ctx);
    let lv = l_op(c, v, ctx);
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for dir in directions {
        let f = exp_test_function(dir.clone());
        // (L(x)^a_b f) at arbitrary points, reused by both sides
        let inner = |l: &LOperator, a: usize, b: usize| {
            let op = l.entry(a, b).clone();
            let f = f.clone();
            move |q: &WeightPoint| op.apply(&f, q)
        };
        for p in points {
            for i in 0..n {
                for j in 0..n {
                    for ip in 0..n {
                        for jp in 0..n {
                            let mut lhs = ZERO;
                            let mut rhs = ZERO;
                            for a in 0..n {
                                for b in 0..n {
                                    let w = r.get(i, j, a, b);
                                    if w != ZERO {
                                        lhs += w * lv.entry(b, jp).apply(&inner(&lu, a, ip), p);
                                    }
                                    let w = r.get(a, b, ip, jp);
                                    if w != ZERO {
                                        rhs += w * lu.entry(i, a).apply(&inner(&lv, j, b), p);
                                    }
                                }
                            }
                            diff = diff.max((lhs - rhs).norm());
                            scale = scale.max(lhs.norm()).max(rhs.norm());
                        }
                    }
                }
            }
        }
    }
    finite(diff / scale.max(1e-300), "RLL residual")
}

/// Fused L-operator on `k`-subsets.
#[derive(Debug, Clone)]
pub struct FusedL {
    pub k: usize,
    pub subsets: Vec<Vec<usize>>,
    /// `entries[a][b]` is the entry `(I, I') = (subsets[a], subsets[b])`.
    pub entries: Vec<Vec<DifferenceOperator>>,
}

fn fused_entry(ls: &[LOperator], upper: &[usize], lower: &[usize], n: usize, step: C64) -> DifferenceOperator {
    let mut total = DifferenceOperator::zero(n, step);
    for (perm, sign) in permutations(upper.len()) {
        let mut acc = DifferenceOperator::identity(n, step);
        for (q, &s) in perm.iter().enumerate() {
            acc = acc.compose(ls[q].entry(upper[s], lower[q]));
        }
        total = total.add(&acc.scale(C64::new(sign, 0.0)));
    }
    total
}

/// `sum_sigma sgn(sigma) L(c|u)^{i_sigma(1)}_{i'_1} o ... o L(c|u-(k-1)hbar)^{i_sigma(k)}_{i'_k}`.
pub fn fused_l(c: C64, u: C64, k: usize, ctx: &Context) -> Result<FusedL> {
    let n = ctx.n;
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("fusion degree {k} outside 1..={n}")));
    }
    let ls: Vec<LOperator> = (0..k).map(|q| l_op(c, u - ctx.hbar * q as f64, ctx)).collect();
    let sets = subsets(n, k);
    let entries = sets.iter().map(|a| sets.iter().map(|b| fused_entry(&ls, a, b, n, ctx.hbar)).collect()).collect();
    Ok(FusedL { k, subsets: sets, entries })
}

/// `M_d(c|u)`: the trace of the fused L-operator over `d`-subsets.
pub fn m_trace(c: C64, u: C64, d: usize, ctx: &Context) -> Result<DifferenceOperator> {
    let n = ctx.n;
    if d == 0 {
        return Ok(DifferenceOperator::identity(n, ctx.hbar));
    }
    if d > n {
        return Err(Error::InvalidParameter(format!("degree {d} outside 0..={n}")));
    }
    let ls: Vec<LOperator> = (0..d).map(|q| l_op(c, u - ctx.hbar * q as f64, ctx)).collect();
    let mut total = DifferenceOperator::zero(n, ctx.hbar);
    for set in subsets(n, d) {
        total = total.add(&fused_entry(&ls, &set, &set, n, ctx.hbar));
    }
    Ok(total.memoized())
}

/// Closed form `theta(u + d c hbar/n)/theta(u) sum_{|I|=d} prod_{s notin I, t in I}
/// theta(lambda_st + c hbar/n)/theta(lambda_st) T_I` for an arbitrary theta function.
pub fn m_closed_with(c: C64, u: C64, d: usize, ctx: &Context, th: ThetaFn) -> Result<DifferenceOperator> {
    let n = ctx.n;
    if d > n {
        return Err(Error::InvalidParameter(format!("degree {d} outside 0..={n}")));
    }
    if d == 0 {
        return Ok(DifferenceOperator::identity(n, ctx.hbar));
    }
    let g = c * ctx.hbar / n as f64;
    let pref = th(u + g * d as f64) / th(u);
    let mut op = DifferenceOperator::zero(n, ctx.hbar);
    for set in subsets(n, d) {
        let th = th.clone();
        let outside: Vec<usize> = (0..n).filter(|s| !set.contains(s)).collect();
        let key = ShiftKey::subset(&set, n);
        op.add_term(
            key,
            coefficient(move |p| {
                let mut v = pref;
                for &s in &outside {
                    for &t in &set {
                        let x = p.lambda_ij(s, t);
                        v *= th(x + g) / th(x);
                    }
                }
                v
            }),
        );
    }
    Ok(op)
}

pub fn m_closed(c: C64, u: C64, d: usize, ctx: &Context) -> Result<DifferenceOperator> {
    m_closed_with(c, u, d, ctx, jacobi(ctx))
}

/// Coefficientwise distance between the fused trace and the closed form.
pub fn verify_trace_closed(c: C64, u: C64, d: usize, ctx: &Context, points: &[WeightPoint]) -> Result<f64> {
    let a = m_trace(c, u, d, ctx)?;
    let b = m_closed(c, u, d, ctx)?;
    finite(operator_distance(&a, &b, points), "trace residual")
}

/// `[M_d(c|u), M_{d'}(c|v)]` with both factors built as fused traces.
pub fn verify_commute(c: C64, u: C64, v: C64, d: usize, dp: usize, ctx: &Context, points: &[WeightPoint]) -> Result<f64> {
    let a = m_trace(c, u, d, ctx)?;
    let b = m_trace(c, v, dp, ctx)?;
    finite(crate::opalg::commutator_residual(&a, &b, points), "commutator residual")
}

/// `[M_d(c|u), T_{(1,...,1)}]`: the full shift is the identity on `h*` for any step.
pub fn verify_full_shift_commutes(c: C64, u: C64, d: usize, ctx: &Context, points: &[WeightPoint]) -> Result<f64> {
    let m = m_closed(c, u, d, ctx)?;
    let full = DifferenceOperator::monomial(ShiftKey::new(vec![1; ctx.n]), constant(ONE), ctx.hbar);
    finite(crate::opalg::commutator_residual(&m, &full, points), "full shift residual")
}

/// `M_d(c|u) theta(u)/theta(u + d c hbar/n)` compared at two spectral parameters, using the fused trace.
pub fn verify_u_independence(c: C64, u1: C64, u2: C64, d: usize, ctx: &Context, points: &[WeightPoint]) -> Result<f64> {
    let g = c * ctx.hbar / ctx.n as f64 * d as f64;
    let a = m_trace(c, u1, d, ctx)?.scale(theta(u1, ctx) / theta(u1 + g, ctx));
    let b = m_trace(c, u2, d, ctx)?.scale(theta(u2, ctx) / theta(u2 + g, ctx));
    finite(operator_distance(&a, &b, points), "u-independence residual")
}

/// `sum_{d=0}^n (-t)^{n-d} M_d(c|u)` from the closed forms.
pub fn generating_closed(c: C64, u: C64, t: C64, ctx: &Context) -> Result<DifferenceOperator> {
    let n = ctx.n;
    let mut total = DifferenceOperator::zero(n, ctx.hbar);
    for d in 0..=n {
        total = total.add(&m_closed(c, u, d, ctx)?.scale((-t).powu((n - d) as u32)));
    }
    Ok(total)
}

/// Normal-ordered `det[L(c|u) - t]` against `sum (-t)^{n-d} M_d(c|u)`.
pub fn verify_genfunc(c: C64, u: C64, t: C64, ctx: &Context, points: &[WeightPoint]) -> Result<f64> {
    let lhs = normal_det(&l_op(c, u, ctx).as_entries(), t, ctx.hbar);
    let rhs = generating_closed(c, u, t, ctx)?;
    finite(operator_distance(&lhs, &rhs, points), "generating function residual")
}

/// Coefficients of `(-t)^{n-d}` in the normal-ordered `det[L - t]`, extracted by a discrete Fourier
/// transform over `n+1` values of `t`, compared with `M_d` for every `d` (including `M_0 = id`).
pub fn verify_genfunc_coefficients(c: C64, u: C64, ctx: &Context, points: &[WeightPoint]) -> Result<Vec<f64>> {
    let n = ctx.n;
    let m = n + 1;
    let entries = l_op(c, u, ctx).as_entries();
    let nodes: Vec<C64> = (0..m).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)).collect();
    let dets: Vec<DifferenceOperator> = nodes.iter().map(|&t| normal_det(&entries, t, ctx.hbar)).collect();
    let mut out = Vec::with_capacity(n + 1);
    for d in 0..=n {
        let power = n - d;
        let mut coef = DifferenceOperator::zero(n, ctx.hbar);
        for (t, det) in nodes.iter().zip(&dets) {
            coef = coef.add(&det.scale(t.powi(-(power as i32)) / m as f64));
        }
        // coefficient of t^power equals (-1)^power times that of (-t)^power
        let want = m_closed(c, u, d, ctx)?.scale(C64::new(if power.is_multiple_of(2) { 1.0 } else { -1.0 }, 0.0));
        out.push(finite(operator_distance(&coef, &want, points), "generating coefficient residual")?);
    }
    Ok(out)
}

/// Sekiguchi form: `:det[theta_j((u + c hbar)/n - lambda_i) T_i - t theta_j(u/n - lambda_i)]:`
/// against `det[theta_j(u/n - lambda_i)] sum (-t)^{n-d} M_d`.
pub fn verify_sekiguchi(c: C64, u: C64, t: C64, ctx: &Context, points: &[WeightPoint]) -> Result<f64> {
    let n = ctx.n;
    let shifted = u + c * ctx.hbar;
    let mut entries: Vec<Vec<Entry>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = Vec::with_capacity(n);
        for k in 0..n {
            let (c1, c2) = (ctx.clone(), ctx.clone());
            let top = coefficient(move |p| phi_matrix(shifted, p, &c1)[(j, k)]);
            let bottom = coefficient(move |p| -t * phi_matrix(u, p, &c2)[(j, k)]);
            row.push(vec![(ShiftKey::unit(k, n), top), (ShiftKey::zero(n), bottom)]);
        }
        entries.push(row);
    }
    let lhs = normal_det(&entries, ZERO, ctx.hbar);
    let gen = generating_closed(c, u, t, ctx)?;
    let c3 = ctx.clone();
    let vdm = DifferenceOperator::monomial(ShiftKey::zero(n), coefficient(move |p| linalg::det(&phi_matrix(u, p, &c3))), ctx.hbar);
    let rhs = vdm.compose(&gen);
    finite(operator_distance(&lhs, &rhs, points), "Sekiguchi residual")
}

/// Closed-form conjugated L-operator: `Ltilde^i_j = [theta(c hbar/n + u + lambda_ji)/theta(u)
/// prod_{k != j} theta(c hbar/n + lambda_ki)/theta(lambda_kj)] T_i`.
pub fn l_tilde(c: C64, u: C64, ctx: &Context) -> LOperator {
    let n = ctx.n;
    let entries = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let ctx2 = ctx.clone();
                    DifferenceOperator::monomial(ShiftKey::unit(i, n), coefficient(move |p| l_tilde_coefficient(c, u, i, j, p, &ctx2)), ctx.hbar)
                })
                .collect()
        })
        .collect();
    LOperator { n, c, u, entries }
}

pub fn l_tilde_coefficient(c: C64, u: C64, i: usize, j: usize, p: &WeightPoint, ctx: &Context) -> C64 {
    let g = c * ctx.hbar / ctx.n as f64;
    let mut v = theta(g + u + p.lambda_ij(j, i), ctx) / theta(u, ctx);
    for k in (0..ctx.n).filter(|&k| k != j) {
        v *= theta(g + p.lambda_ij(k, i), ctx) / theta(p.lambda_ij(k, j), ctx);
    }
    v
}

/// `Ltilde^i_j` from its definition `sum_k phibar(u)^{lambda + hbar eps_j, k}_lambda phi(u + c hbar)^{lambda + hbar eps_i}_{lambda, k} T_i`.
pub fn l_tilde_from_intertwiners(c: C64, u: C64, ctx: &Context) -> LOperator {
    let n = ctx.n;
    let entries = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let ctx2 = ctx.clone();
                    let coef = coefficient(move |p| match intertwiners(u, p, &ctx2) {
                        Ok(pair) => {
                            let phi_c = phi_matrix(u + c * ctx2.hbar, p, &ctx2);
                            (0..ctx2.n).map(|k| pair.phibar[(j, k)] * phi_c[(k, i)]).sum()
                        }
                        Err(_) => C64::new(f64::NAN, f64::NAN),
                    });
                    DifferenceOperator::monomial(ShiftKey::unit(i, n), coef, ctx.hbar)
                })
                .collect()
        })
        .collect();
    LOperator { n, c, u, entries }
}

/// Entrywise distance between the closed form and the intertwiner definition of `Ltilde`.
pub fn verify_l_tilde(c: C64, u: C64, ctx: &Context, points: &[WeightPoint]) -> Result<f64> {
    let a = l_tilde(c, u, ctx);
    let b = l_tilde_from_intertwiners(c, u, ctx);
    let mut worst: f64 = 0.0;
    for i in 0..ctx.n {
        for j in 0..ctx.n {
            worst = worst.max(operator_distance(a.entry(i, j), b.entry(i, j), points));
        }
    }
    finite(worst, "Ltilde residual")
}

/// `:det[Ltilde - t]:` against `sum (-t)^{n-d} M_d`.
pub fn verify_genfunc_tilde(c: C64, u: C64, t: C64, ctx: &Context, points: &[WeightPoint]) -> Result<f64> {
    let lhs = normal_det(&l_tilde(c, u, ctx).as_entries(), t, ctx.hbar);
    let rhs = generating_closed(c, u, t, ctx)?;
    finite(operator_distance(&lhs, &rhs, points), "Ltilde generating function residual")
}

/// `max_{i,j} |Ltilde(c|u)^i_j coefficient - delta^i_j|` at each step in `hbars`.
pub fn l_tilde_limit_errors(c: C64, u: C64, ctx: &Context, point: &WeightPoint, hbars: &[f64]) -> Vec<f64> {
    hbars
        .iter()
        .map(|&h| {
            let c2 = ctx.with_hbar(C64::new(h, 0.0));
            let mut worst: f64 = 0.0;
            for i in 0..ctx.n {
                for j in 0..ctx.n {
                    let delta = if i == j { ONE } else { ZERO };
                    worst = worst.max((l_tilde_coefficient(c, u, i, j, point, &c2) - delta).norm());
                }
            }
            worst
        })
        .collect()
}

/// `Delta(lambda) = prod_{i<j} theta(lambda_i - lambda_j)`.
pub fn vandermonde(p: &WeightPoint, ctx: &Context) -> C64 {
    let n = p.n();
    let mut v = ONE;
    for i in 0..n {
        for j in (i + 1)..n {
            v *= theta(p.lambda_ij(i, j), ctx);
        }
    }
    v
}

/// Krichever's matrix applied to `f = e^{2 pi i <lambda, v>}`:
/// `K^i_j f = delta^i_j [(c/n) theta'(u)/theta(u) f + d_j f] + (1 - delta^i_j)(c/n) theta(u + lambda_ji) theta'(0)/(theta(u) theta(lambda_ji)) f`.
pub fn krichever_apply(c: C64, u: C64, i: usize, j: usize, dir: &WeightPoint, p: &WeightPoint, ctx: &Context) -> C64 {
    let g = c / ctx.n as f64;
    let f = exp_test_function(dir.clone())(p);
    if i == j {
        let dj = C64::new(0.0, 2.0 * PI) * project_eps(j, ctx.n).pair(dir);
        (g * theta_d(u, ctx, 1) / theta(u, ctx) + dj) * f
    } else {
        let x = p.lambda_ij(j, i);
        g * theta(u + x, ctx) * theta_d(ZERO, ctx, 1) / (theta(u, ctx) * theta(x, ctx)) * f
    }
}

/// Krichever matrix as differential operators.
pub fn krichever_k(c: C64, u: C64, ctx: &Context) -> Vec<Vec<DifferentialOperator>> {
    let n = ctx.n;
    let g = c / n as f64;
    let diag = g * theta_d(u, ctx, 1) / theta(u, ctx);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        let m = DifferentialOperator::multiplication(n, Arc::new(move |_: &WeightPoint, o| Jet::constant(n, o, diag)));
                        m.add(&DifferentialOperator::partial(j, n))
                    } else {
                        let ctx2 = ctx.clone();
                        DifferentialOperator::multiplication(
                            n,
                            Arc::new(move |p: &WeightPoint, o| {
                                let x = p.lambda_ij(j, i);
                                let mut slope = vec![ZERO; n];
                                slope[j] = ONE;
                                slope[i] = -ONE;
                                let num = along_linear_form(&theta_derivs(u + x, &ctx2, o), &slope, o);
                                let den = along_linear_form(&theta_derivs(x, &ctx2, o), &slope, o);
                                num.div(&den).scale(g * theta_d(ZERO, &ctx2, 1) / theta(u, &ctx2))
                            }),
                        )
                    }
                })
                .collect()
        })
        .collect()
}

/// Richardson-extrapolated `d/dhbar` of `Delta^{-c/n} o Ltilde(c|u)^i_j o Delta^{c/n}` applied to
/// exponential test functions, after the similarity `prod_{k != j} theta(lambda_kj)/prod_{k != i} theta(lambda_ki)`,
/// compared entrywise with [`krichever_apply`] relative to the largest entry. Steps `h` and `2h`.
pub fn verify_krichever(c: C64, u: C64, ctx: &Context, points: &[WeightPoint], directions: &[WeightPoint], h: f64) -> Result<f64> {
    let n = ctx.n;
    let g = c / n as f64;
    let mut worst: f64 = 0.0;
    for p in points {
        let base = vandermonde(p, ctx);
        for dir in directions {
            let f = exp_test_function(dir.clone());
            let mut diff: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let value = |step: f64| {
                        let c2 = ctx.with_hbar(C64::new(step, 0.0));
                        let q = p.shifted_along(i, c2.hbar);
                        let ratio = (vandermonde(&q, ctx) / base).powc(g);
                        l_tilde_coefficient(c, u, i, j, p, &c2) * ratio * f(&q)
                    };
                    let central = |s: f64| (value(s) - value(-s)) / (2.0 * s);
                    let deriv = (central(h) * 4.0 - central(2.0 * h)) / 3.0;
                    let mut sim = ONE;
                    for k in 0..n {
                        if k != j {
                            sim *= theta(p.lambda_ij(k, j), ctx);
                        }
                        if k != i {
                            sim /= theta(p.lambda_ij(k, i), ctx);
                        }
                    }
                    let want = krichever_apply(c, u, i, j, dir, p, ctx);
                    diff = diff.max((sim * deriv - want).norm());
                    scale = scale.max(want.norm());
                }
            }
            worst = worst.max(diff / scale.max(1e-300));
        }
    }
    finite(worst, "Krichever residual")
}

/// Truncation order for products in `q = e^{2 pi i hbar}`.
fn q_terms(q_abs: f64, ctx: &Context) -> usize {
    let need = (ctx.tol_series.ln() / q_abs.ln()).ceil();
    (need.max(ctx.trunc as f64) as usize).min(4000)
}

fn e2pi(x: C64) -> C64 {
    (C64::new(0.0, 2.0 * PI) * x).exp()
}

/// `log d^+(e^{2 pi i x})` from the truncated double product.
pub fn log_d_plus(x: C64, g: C64, ctx: &Context) -> Result<C64> {
    let h = ctx.hbar;
    let q_abs = e2pi(h).norm();
    if !(q_abs < 1.0) {
        return Err(Error::InvalidParameter(format!("|q| = {q_abs} must be below 1 (Im hbar > 0)")));
    }
    let p_abs = e2pi(ctx.tau).norm();
    let kmax = ((ctx.tol_series.ln() / p_abs.ln()).ceil() as usize).max(2);
    let mmax = q_terms(q_abs, ctx);
    let mut s = ZERO;
    for k in 0..kmax {
        let kt = ctx.tau * k as f64;
        for m in 0..mmax {
            let m = m as f64;
            let l1 = (ONE - e2pi(x + h * (m + 1.0) + kt)).ln() - (ONE - e2pi(x + h * (m + g + 1.0) + kt)).ln();
            let l2 = (ONE - e2pi(-x + h * (m - g) + kt + ctx.tau)).ln() - (ONE - e2pi(-x + h * m + kt + ctx.tau)).ln();
            s += l1 + l2;
        }
    }
    Ok(s)
}

/// `log Phi(lambda) = sum_{k != k'} log d^+(z_k/z_k')`.
pub fn log_phi_weight(p: &WeightPoint, g: C64, ctx: &Context) -> Result<C64> {
    let n = p.n();
    let mut s = ZERO;
    for a in 0..n {
        for b in 0..n {
            if a != b {
                s += log_d_plus(p.lambda_ij(a, b), g, ctx)?;
            }
        }
    }
    Ok(s)
}

/// `Phi(lambda)/Phi(lambda + hbar eps_i) = prod_{j != i} theta(hbar + lambda_ij) theta(g hbar + lambda_ji) /
/// (theta(g hbar + hbar + lambda_ij) theta(lambda_ji))`.
pub fn phi_shift_ratio_closed(p: &WeightPoint, i: usize, g: C64, ctx: &Context) -> C64 {
    let h = ctx.hbar;
    let mut v = ONE;
    for j in (0..p.n()).filter(|&j| j != i) {
        let x = p.lambda_ij(i, j);
        v *= theta(h + x, ctx) * theta(g * h - x, ctx) / (theta(g * h + h + x, ctx) * theta(-x, ctx));
    }
    v
}

/// Largest relative difference between the closed single-shift ratio and the ratio of truncated
/// double products.
pub fn verify_phi_ratio(p: &WeightPoint, c: C64, ctx: &Context) -> Result<f64> {
    let g = c / ctx.n as f64;
    let base = log_phi_weight(p, g, ctx)?;
    let mut worst: f64 = 0.0;
    for i in 0..ctx.n {
        let shifted = log_phi_weight(&p.shifted_along(i, ctx.hbar), g, ctx)?;
        let direct = (base - shifted).exp();
        worst = worst.max(crate::context::rel_residual(direct, phi_shift_ratio_closed(p, i, g, ctx)));
    }
    finite(worst, "Phi ratio residual")
}

/// Squared form of the conjugation identity: for each `|I| = d`,
/// `a_I(lambda)^2 Phi(lambda + hbar eps_I)/Phi(lambda) = A_I(lambda)^2 B_I(lambda + hbar eps_I)^2`,
/// with `a_I` the `T_I` coefficient of `M_d(c|u)` divided by `theta(u + d c hbar/n)/theta(u)`,
/// `A_I^2 = prod theta(g hbar + lambda_st)/theta(lambda_st)`, `B_I^2 = prod theta(g hbar + lambda_ts)/theta(lambda_ts)`.
pub fn verify_ruijsenaars(c: C64, u: C64, d: usize, p: &WeightPoint, ctx: &Context) -> Result<f64> {
    let n = ctx.n;
    let g = c / n as f64;
    let h = ctx.hbar;
    let m = m_closed(c, u, d, ctx)?;
    let pref = if d == 0 { ONE } else { theta(u + g * h * d as f64, ctx) / theta(u, ctx) };
    let coeffs = m.coefficients_at(p);
    let base = log_phi_weight(p, g, ctx)?;
    let mut worst: f64 = 0.0;
    for set in subsets(n, d) {
        let key = ShiftKey::subset(&set, n);
        let a = coeffs[&key] / pref;
        let q = p.shifted(&key, h);
        let ratio = (log_phi_weight(&q, g, ctx)? - base).exp();
        let mut a2 = ONE;
        let mut b2 = ONE;
        for s in (0..n).filter(|s| !set.contains(s)) {
            for &t in &set {
                a2 *= theta(g * h + p.lambda_ij(s, t), ctx) / theta(p.lambda_ij(s, t), ctx);
                b2 *= theta(g * h + q.lambda_ij(t, s), ctx) / theta(q.lambda_ij(t, s), ctx);
            }
        }
        worst = worst.max(crate::context::rel_residual(a * a * ratio, a2 * b2));
    }
    finite(worst, "Ruijsenaars residual")
}

/// Jet of `Delta` at `p`.
pub fn delta_jet(p: &WeightPoint, order: usize, ctx: &Context) -> Jet {
    let n = p.n();
    let mut acc = Jet::constant(n, order, ONE);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut slope = vec![ZERO; n];
            slope[i] = ONE;
            slope[j] = -ONE;
            acc = &acc * &along_linear_form(&theta_derivs(p.lambda_ij(i, j), ctx, order), &slope, order);
        }
    }
    acc
}

fn indicator(set: &[usize], n: usize) -> Vec<u32> {
    let mut a = vec![0; n];
    for &i in set {
        a[i] += 1;
    }
    a
}

/// Coefficient `d^J Delta / Delta` as a jet coefficient.
fn delta_ratio(set: Vec<usize>, ctx: &Context) -> JetCoefficient {
    let ctx = ctx.clone();
    Arc::new(move |p: &WeightPoint, o| {
        let n = p.n();
        let alpha = indicator(&set, n);
        let top = delta_jet(p, o + set.len(), &ctx).differentiate(&alpha);
        top.div(&delta_jet(p, o, &ctx))
    })
}

/// `D[m] = sum_{|I|=m} sum_{J subset I} (d^J Delta/Delta) (-n/c d)^{I \ J}` for `m = 1..=n`.
pub fn build_d_ops(c: C64, ctx: &Context) -> Result<Vec<DifferentialOperator>> {
    let n = ctx.n;
    if 2 * n > MAX_DERIV {
        return Err(Error::DerivativeDepth { requested: 2 * n, supported: MAX_DERIV });
    }
    let scale = -(n as f64) / c;
    Ok((1..=n)
        .map(|m| {
            let mut op = DifferentialOperator::zero(n);
            for set in subsets(n, m) {
                for size in 0..=m {
                    for sub in subsets(m, size) {
                        let j: Vec<usize> = sub.iter().map(|&k| set[k]).collect();
                        let rest: Vec<usize> = set.iter().copied().filter(|x| !j.contains(x)).collect();
                        let s = scale.powu(rest.len() as u32);
                        let coef = delta_ratio(j, ctx);
                        op.add_term(indicator(&rest, n), Arc::new(move |p: &WeightPoint, o| coef(p, o).scale(s)));
                    }
                }
            }
            op
        })
        .collect())
}

/// The displayed `D[1] = sum_i (-n/c d_i) + d_i Delta/Delta`.
pub fn displayed_d1(c: C64, ctx: &Context) -> DifferentialOperator {
    let n = ctx.n;
    let s = -(n as f64) / c;
    let mut op = DifferentialOperator::zero(n);
    for i in 0..n {
        op = op.add(&DifferentialOperator::partial(i, n).scale(s));
        op = op.add(&DifferentialOperator::multiplication(n, delta_ratio(vec![i], ctx)));
    }
    op
}

/// The displayed four-term `D[2]` summed over `i < j`.
pub fn displayed_d2(c: C64, ctx: &Context) -> DifferentialOperator {
    let n = ctx.n;
    let s = -(n as f64) / c;
    let mut op = DifferentialOperator::zero(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let di = DifferentialOperator::partial(i, n).scale(s);
            let dj = DifferentialOperator::partial(j, n).scale(s);
            op = op.add(&di.compose(&dj));
            op = op.add(&DifferentialOperator::multiplication(n, delta_ratio(vec![i], ctx)).compose(&dj));
            op = op.add(&DifferentialOperator::multiplication(n, delta_ratio(vec![j], ctx)).compose(&di));
            op = op.add(&DifferentialOperator::multiplication(n, delta_ratio(vec![i, j], ctx)));
        }
    }
    op
}

/// Largest distance between the general `D[1]`, `D[2]` and their displayed forms.
pub fn verify_displayed_d(c: C64, ctx: &Context, points: &[WeightPoint]) -> Result<f64> {
    let ops = build_d_ops(c, ctx)?;
    let a = pdo_distance(&ops[0], &displayed_d1(c, ctx), points);
    let b = pdo_distance(&ops[1], &displayed_d2(c, ctx), points);
    finite(a.max(b), "displayed D residual")
}

/// Largest pairwise commutator residual among `D[1..=n]`.
pub fn verify_d_commute(c: C64, ctx: &Context, points: &[WeightPoint]) -> Result<f64> {
    let ops = build_d_ops(c, ctx)?;
    let mut worst: f64 = 0.0;
    for a in 0..ops.len() {
        for b in (a + 1)..ops.len() {
            worst = worst.max(crate::opalg::pdo_commutator_residual(&ops[a], &ops[b], points));
        }
    }
    finite(worst, "D commutator residual")
}

/// `Delta^a` as a jet coefficient (principal branch of `log Delta` at the base point).
fn delta_power(a: C64, ctx: &Context) -> JetCoefficient {
    let ctx = ctx.clone();
    Arc::new(move |p: &WeightPoint, o| delta_jet(p, o, &ctx).powc(a))
}

/// `sum_{i<j} (log theta)''(lambda_ij)` as a jet coefficient.
fn pair_potential(ctx: &Context) -> JetCoefficient {
    let ctx = ctx.clone();
    Arc::new(move |p: &WeightPoint, o| {
        let n = p.n();
        let mut acc = Jet::constant(n, o, ZERO);
        for i in 0..n {
            for j in (i + 1)..n {
                let mut slope = vec![ZERO; n];
                slope[i] = ONE;
                slope[j] = -ONE;
                let mut two = vec![0; n];
                two[i] = 2;
                let lt = along_linear_form(&theta_derivs(p.lambda_ij(i, j), &ctx, o + 2), &slope, o + 2).ln();
                acc = &acc + &lt.differentiate(&two);
            }
        }
        acc
    })
}

/// `Delta^g o (sum d_i^2 + kappa sum_{i<j} (log theta)''(lambda_ij)) o Delta^{-g}` with `g = c/n`.
pub fn conjugated_hamiltonian(c: C64, kappa: C64, ctx: &Context) -> DifferentialOperator {
    let n = ctx.n;
    let g = c / n as f64;
    let mut lap = DifferentialOperator::zero(n);
    for i in 0..n {
        let d = DifferentialOperator::partial(i, n);
        lap = lap.add(&d.compose(&d));
    }
    let pot = pair_potential(ctx);
    let inner = lap.add(&DifferentialOperator::multiplication(n, Arc::new(move |p: &WeightPoint, o| pot(p, o).scale(kappa))));
    let left = DifferentialOperator::multiplication(n, delta_power(g, ctx));
    let right = DifferentialOperator::multiplication(n, delta_power(-g, ctx));
    left.compose(&inner).compose(&right)
}

/// The Calogero-Moser operator the differential limit produces:
/// `Delta^g o sum d_i^2 o Delta^{-g} + 2 g (g+1) sum_{i<j} (log theta)''(lambda_ij)`.
pub fn hamiltonian(c: C64, ctx: &Context) -> DifferentialOperator {
    let n = ctx.n;
    let g = c / n as f64;
    let kin = conjugated_hamiltonian(c, ZERO, ctx);
    let pot = pair_potential(ctx);
    let k = g * (g + 1.0) * 2.0;
    kin.add(&DifferentialOperator::multiplication(n, Arc::new(move |p: &WeightPoint, o| pot(p, o).scale(k))))
}

/// `Delta^g o (sum d_i^2 - g(g+1) sum_{i<j} (log theta)''(lambda_ij)) o Delta^{-g}` exactly as displayed.
pub fn hamiltonian_as_displayed(c: C64, ctx: &Context) -> DifferentialOperator {
    let g = c / ctx.n as f64;
    conjugated_hamiltonian(c, -g * (g + 1.0), ctx)
}

/// `(-c/n)^d D[d]`, the normalization in which `D[1] = -Mdot_1'` and `D[2] = (Mdot_2'' - (n-1) Mdot_1'')/2`.
pub fn rescaled_d_ops(c: C64, ctx: &Context) -> Result<Vec<DifferentialOperator>> {
    let s = -c / ctx.n as f64;
    Ok(build_d_ops(c, ctx)?.into_iter().enumerate().map(|(k, op)| op.scale(s.powu(k as u32 + 1))).collect())
}

/// Distance between `Dhat[1]^2 - 2 Dhat[2]` and `H`, and the same against the displayed `H`.
pub fn verify_hamiltonian_identity(c: C64, ctx: &Context, points: &[WeightPoint]) -> Result<(f64, f64)> {
    let d = rescaled_d_ops(c, ctx)?;
    let lhs = d[0].compose(&d[0]).sub(&d[1].scale(C64::new(2.0, 0.0)));
    let a = pdo_distance(&lhs, &hamiltonian(c, ctx), points);
    let b = pdo_distance(&lhs, &hamiltonian_as_displayed(c, ctx), points);
    Ok((finite(a, "Hamiltonian residual")?, b))
}

/// `Mdot_d = M_d theta(u)/theta(u + d c hbar/n)`, the `u`-free part.
pub fn m_dot(c: C64, d: usize, ctx: &Context) -> Result<DifferenceOperator> {
    let n = ctx.n;
    let u = C64::new(0.25, 0.1);
    let g = c * ctx.hbar / n as f64 * d as f64;
    let th = jacobi(ctx);
    Ok(m_closed_with(c, u, d, ctx, th.clone())?.scale(th(u) / th(u + g)))
}

/// Taylor coefficients `F^{(m)}(0)` for `m = 0..=max` of an entire function, from the trapezoid rule
/// on the circle `|h| = radius` with `nodes` points.
pub fn contour_derivatives(f: impl Fn(C64) -> C64, radius: f64, nodes: usize, max: usize) -> Vec<C64> {
    let vals: Vec<(C64, C64)> = (0..nodes)
        .map(|k| {
            let w = C64::from_polar(1.0, 2.0 * PI * k as f64 / nodes as f64);
            (w, f(w * radius))
        })
        .collect();
    (0..=max)
        .map(|m| {
            let fact: f64 = (1..=m).map(|x| x as f64).product();
            let s: C64 = vals.iter().map(|(w, v)| v * w.powi(-(m as i32))).sum();
            s * fact / (nodes as f64 * radius.powi(m as i32))
        })
        .collect()
}

fn apply_at_hbar(c: C64, d: usize, ctx: &Context, h: C64, f: &(dyn Fn(&WeightPoint) -> C64 + Sync), p: &WeightPoint) -> C64 {
    let c2 = ctx.with_hbar(h);
    match m_dot(c, d, &c2) {
        Ok(op) => op.apply(f, p),
        Err(_) => C64::new(f64::NAN, f64::NAN),
    }
}

/// Residuals of `Dhat[1] f = -Mdot_1' f` and `Dhat[2] f = (Mdot_2'' - (n-1) Mdot_1'')/2 f` with the
/// `hbar`-derivatives taken on a Cauchy contour, normalized by the size of the individual terms.
pub fn verify_d_relations(c: C64, ctx: &Context, points: &[WeightPoint], directions: &[WeightPoint]) -> Result<(f64, f64)> {
    let n = ctx.n;
    let d = rescaled_d_ops(c, ctx)?;
    let (radius, nodes) = (0.05, 32);
    let mut r1: f64 = 0.0;
    let mut r2: f64 = 0.0;
    for dir in directions {
        let f = exp_test_function(dir.clone());
        let slope: Vec<C64> = dir.coords.iter().map(|v| v * C64::new(0.0, 2.0 * PI)).collect();
        for p in points {
            let jet = Jet::linear(2, C64::new(0.0, 2.0 * PI) * p.pair(dir), &slope).exp();
            let m1 = contour_derivatives(|h| apply_at_hbar(c, 1, ctx, h, &f, p), radius, nodes, 2);
            let m2 = contour_derivatives(|h| apply_at_hbar(c, 2, ctx, h, &f, p), radius, nodes, 2);
            let fv = f(p).norm();
            let size1 = m1[1].norm() + fv * (c / n as f64).norm();
            r1 = r1.max((d[0].apply(&jet, p) + m1[1]).norm() / size1);
            let rhs = (m2[2] - m1[2] * (n as f64 - 1.0)) / 2.0;
            let size2 = m2[2].norm() + m1[2].norm() * (n as f64 - 1.0);
            r2 = r2.max((d[1].apply(&jet, p) - rhs).norm() / size2.max(1e-300));
        }
    }
    Ok((finite(r1, "D[1] relation")?, finite(r2, "D[2] relation")?))
}

/// `(1/hbar^2)(-2 Mdot_2 + Mdot_1^2 - 2 Mdot_1 + n) f` at a real step `h`.
pub fn cm_quotient(c: C64, h: f64, ctx: &Context, f: &(dyn Fn(&WeightPoint) -> C64 + Sync), p: &WeightPoint) -> Result<C64> {
    let c2 = ctx.with_hbar(C64::new(h, 0.0));
    let m1 = m_dot(c, 1, &c2)?;
    let m2 = m_dot(c, 2, &c2)?;
    let inner = |q: &WeightPoint| m1.apply(f, q);
    let v = -m2.apply(f, p) * 2.0 + m1.apply(&inner, p) - m1.apply(f, p) * 2.0 + f(p) * ctx.n as f64;
    Ok(v / (h * h))
}

/// Residuals of the Richardson-extrapolated quotient (steps `2h`, `h`) against `H f` and against the
/// displayed operator, relative to the larger of `|H f|` and the kinetic and potential parts of `H f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmLimit {
    pub residual: f64,
    pub residual_as_displayed: f64,
}

pub fn verify_cm_limit(c: C64, ctx: &Context, points: &[WeightPoint], directions: &[WeightPoint], h: f64) -> Result<CmLimit> {
    let ham = hamiltonian(c, ctx);
    let kinetic = conjugated_hamiltonian(c, ZERO, ctx);
    let shown = hamiltonian_as_displayed(c, ctx);
    let mut worst: f64 = 0.0;
    let mut worst_shown: f64 = 0.0;
    for dir in directions {
        let f = exp_test_function(dir.clone());
        let slope: Vec<C64> = dir.coords.iter().map(|v| v * C64::new(0.0, 2.0 * PI)).collect();
        for p in points {
            let e1 = cm_quotient(c, h, ctx, &f, p)?;
            let e2 = cm_quotient(c, 2.0 * h, ctx, &f, p)?;
            let extrap = e1 * 2.0 - e2;
            let jet = Jet::linear(2, C64::new(0.0, 2.0 * PI) * p.pair(dir), &slope).exp();
            let want = ham.apply(&jet, p);
            let kin = kinetic.apply(&jet, p);
            let scale = want.norm().max(kin.norm()).max((want - kin).norm());
            worst = worst.max((extrap - want).norm() / scale);
            let alt = shown.apply(&jet, p);
            worst_shown = worst_shown.max((extrap - alt).norm() / scale);
        }
    }
    Ok(CmLimit { residual: finite(worst, "CM limit residual")?, residual_as_displayed: worst_shown })
}

/// Residual between the `p = 0` closed form (sine ratios) and Macdonald's coefficients
/// `sin pi(u + d a)/sin pi u * e^{-i pi a d(n-d)} prod_{s notin I, t in I} (Q z_s - z_t)/(z_s - z_t)` with
/// `a = c hbar/n`, `Q = e^{2 pi i a}`, `z_j = e^{2 pi i lambda_j}`.
pub fn verify_macdonald_limit(c: C64, u: C64, d: usize, p: &WeightPoint, ctx: &Context) -> Result<f64> {
    let n = ctx.n;
    let op = m_closed_with(c, u, d, ctx, trigonometric())?;
    let got = op.coefficients_at(p);
    let a = c * ctx.hbar / n as f64;
    let qq = e2pi(a);
    let z: Vec<C64> = p.coords.iter().map(|&x| e2pi(x)).collect();
    let pref = (PI * (u + a * d as f64)).sin() / (PI * u).sin() * (C64::new(0.0, -PI) * a * (d * (n - d)) as f64).exp();
    let mut worst: f64 = 0.0;
    for set in subsets(n, d) {
        let mut v = if d == 0 { ONE } else { pref };
        for s in (0..n).filter(|s| !set.contains(s)) {
            for &t in &set {
                v *= (qq * z[s] - z[t]) / (z[s] - z[t]);
            }
        }
        worst = worst.max(crate::context::rel_residual(got[&ShiftKey::subset(&set, n)], v));
    }
    finite(worst, "Macdonald residual")
}

/// `max |coefficient(theta) - coefficient(sin)|` relative, probing how fast the elliptic closed form
/// approaches the trigonometric one as `p -> 0`.
pub fn elliptic_to_trigonometric_gap(c: C64, u: C64, d: usize, p: &WeightPoint, ctx: &Context) -> Result<f64> {
    let a = m_closed(c, u, d, ctx)?.coefficients_at(p);
    let b = m_closed_with(c, u, d, ctx, trigonometric())?.coefficients_at(p);
    Ok(a.iter().map(|(k, v)| crate::context::rel_residual(*v, b[k])).fold(0.0, f64::max))
}

/// Convenience: matrix of `L` coefficients `[i][j][k]` at a point.
pub fn l_coefficients_at(l: &LOperator, p: &WeightPoint) -> Vec<C64> {
    let n = l.n;
    let mut out = vec![ZERO; n * n * n];
    for i in 0..n {
        for j in 0..n {
            let coeffs = l.entry(i, j).coefficients_at(p);
            for k in 0..n {
                out[(i * n + j) * n + k] = coeffs.get(&ShiftKey::unit(k, n)).copied().unwrap_or(ZERO);
            }
        }
    }
    out
}

/// `phi(u + c hbar) T phibar(u)` acting on a vector of function values indexed by the `n` shifts: the
/// matrix `[L^i_j]` applied to `f` as an `n x n` numeric matrix at `p`.
pub fn l_matrix_on(l: &LOperator, f: &(dyn Fn(&WeightPoint) -> C64 + Sync), p: &WeightPoint) -> CMatrix {
    linalg::from_fn(l.n, l.n, |i, j| l.entry(i, j).apply(f, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn setup(n: usize, seed: u64, count: usize, us: &[C64]) -> (Context, Vec<WeightPoint>) {
        let ctx = Context::new(n).unwrap();
        let pts = generic_samples(&ctx, &mut Sampler::new(seed), count, us).unwrap();
        (ctx, pts)
    }

    #[test]
    fn c_zero_l_on_constant_is_identity() {
        let u = c(0.21, 0.13);
        let (ctx, pts) = setup(3, 1, 2, &[u]);
        let l = l_op(ZERO, u, &ctx);
        for p in &pts {
            let m = l_matrix_on(&l, &|_| ONE, p);
            assert!(linalg::rel_diff(&m, &linalg::identity(3)) < 1e-12);
        }
    }

    #[test]
    fn each_entry_has_n_single_shift_terms() {
        let ctx = Context::new(3).unwrap();
        let l = l_op(ctx.c, c(0.2, 0.1), &ctx);
        for i in 0..3 {
            for j in 0..3 {
                let mut want: Vec<ShiftKey> = (0..3).map(|k| ShiftKey::unit(k, 3)).collect();
                want.sort();
                assert_eq!(l.entry(i, j).keys(), want);
            }
        }
    }

    #[test]
    fn rll_holds_for_n2() {
        let (u, v) = (c(0.21, 0.13), c(-0.17, 0.08));
        let (ctx, pts) = setup(2, 5, 2, &[u, v]);
        let dirs = [WeightPoint::new(vec![c(0.3, 0.1), c(-0.2, 0.0)])];
        assert!(verify_rll(ctx.c, u, v, &ctx, &pts, &dirs).unwrap() < 1e-10);
        assert!(verify_rll(ctx.c, u, u, &ctx, &pts, &dirs).unwrap() < 1e-10);
    }

    #[test]
    fn trace_matches_closed_form_n2_and_n3() {
        for n in [2, 3] {
            let u = c(0.19, -0.07);
            let (ctx, pts) = setup(n, 9, 4, &[u, u - ctx_h(), u - ctx_h() * 2.0]);
            for d in 1..=n {
                assert!(verify_trace_closed(ctx.c, u, d, &ctx, &pts).unwrap() < 1e-9, "n={n} d={d}");
            }
        }
    }

    fn ctx_h() -> C64 {
        crate::context::DEFAULT_HBAR
    }

    #[test]
    fn closed_form_edge_cases() {
        let ctx = Context::new(3).unwrap();
        let p = Sampler::new(2).generic_point(&ctx, &[]).unwrap();
        let u = c(0.3, 0.05);
        let top = m_closed(ctx.c, u, 3, &ctx).unwrap();
        assert_eq!(top.keys(), vec![ShiftKey::zero(3)]);
        let want = theta(u + ctx.c * ctx.hbar, &ctx) / theta(u, &ctx);
        assert!((top.coefficients_at(&p)[&ShiftKey::zero(3)] - want).norm() < 1e-13);
        let free = m_closed(ZERO, u, 2, &ctx).unwrap();
        assert!(free.coefficients_at(&p).values().all(|v| (v - ONE).norm() < 1e-13));
        let f = exp_test_function(WeightPoint::new(vec![c(0.2, 0.0), c(0.1, 0.1), c(-0.3, 0.0)]));
        let m1 = m_closed(ctx.c, u, 1, &ctx).unwrap();
        let sum: C64 = m1.coefficients_at(&p).values().sum();
        assert!((m1.apply(&|_| ONE, &p) - sum).norm() < 1e-13);
        assert!(m1.apply(&f, &p).is_finite());
    }

    #[test]
    fn generating_function_and_sekiguchi_n2() {
        let u = c(0.23, 0.11);
        let (ctx, pts) = setup(2, 4, 4, &[u]);
        let t = c(0.7, -0.4);
        assert!(verify_genfunc(ctx.c, u, t, &ctx, &pts).unwrap() < 1e-9);
        assert!(verify_genfunc(ctx.c, u, ZERO, &ctx, &pts).unwrap() < 1e-9);
        assert!(verify_genfunc_coefficients(ctx.c, u, &ctx, &pts).unwrap().iter().all(|&r| r < 1e-9));
        assert!(verify_sekiguchi(ctx.c, u, t, &ctx, &pts).unwrap() < 1e-9);
        assert!(verify_genfunc_tilde(ctx.c, u, t, &ctx, &pts).unwrap() < 1e-9);
    }

    #[test]
    fn l_tilde_forms_agree_and_degenerate() {
        let u = c(0.23, 0.11);
        let (ctx, pts) = setup(3, 8, 3, &[u]);
        assert!(verify_l_tilde(ctx.c, u, &ctx, &pts).unwrap() < 1e-9);
        let e = l_tilde_limit_errors(ctx.c, u, &ctx, &pts[0], &[1e-4, 1e-5]);
        assert!(e[0] < 1e-2 && e[1] < 1e-3);
        assert!((e[0] / e[1] - 10.0).abs() < 0.5);
    }

    #[test]
    fn krichever_matches_finite_difference() {
        let u = c(0.23, 0.11);
        let (ctx, pts) = setup(2, 8, 2, &[u]);
        let dirs = [WeightPoint::new(vec![c(0.3, 0.1), c(-0.3, -0.1)])];
        assert!(verify_krichever(ctx.c, u, &ctx, &pts, &dirs, 1e-3).unwrap() < 1e-6);
        let r = verify_krichever(ZERO, u, &ctx, &pts, &dirs, 1e-3).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn ruijsenaars_identity_and_phi_ratio() {
        let ctx = Context::new(2).unwrap();
        let p = Sampler::new(3).generic_point(&ctx, &[]).unwrap();
        assert!(verify_phi_ratio(&p, ctx.c, &ctx).unwrap() < 1e-9);
        assert!(verify_ruijsenaars(ctx.c, c(0.2, 0.1), 1, &p, &ctx).unwrap() < 1e-9);
        assert!(verify_ruijsenaars(ZERO, c(0.2, 0.1), 1, &p, &ctx).unwrap() < 1e-12);
        let bad = ctx.with_hbar(c(0.1, -0.2));
        assert!(matches!(verify_ruijsenaars(ctx.c, c(0.2, 0.1), 1, &p, &bad), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn macdonald_limit_and_small_p() {
        let ctx = Context::new(3).unwrap();
        let p = Sampler::new(3).generic_point(&ctx, &[]).unwrap();
        for d in 0..=3 {
            assert!(verify_macdonald_limit(ctx.c, c(0.2, 0.1), d, &p, &ctx).unwrap() < 1e-12);
        }
        let flat = Context::with_params(3, c(0.1, 3.0), ctx.hbar, ctx.c).unwrap();
        assert!(elliptic_to_trigonometric_gap(ctx.c, c(0.2, 0.1), 1, &p, &flat).unwrap() < 1e-6);
    }

    #[test]
    fn contour_derivatives_of_exponential() {
        let d = contour_derivatives(|h| (h * 2.0).exp(), 0.05, 32, 3);
        for (m, v) in d.iter().enumerate() {
            assert!((v - 2f64.powi(m as i32)).norm() < 1e-10);
        }
    }

    #[test]
    fn debiard_operators_n2() {
        let ctx = Context::new(2).unwrap();
        let pts = Sampler::new(6).generic_points(&ctx, 3).unwrap();
        assert!(verify_displayed_d(ctx.c, &ctx, &pts).unwrap() < 1e-12);
        let dirs = [WeightPoint::new(vec![c(0.3, 0.1), c(-0.3, -0.1)])];
        let (a, b) = verify_d_relations(ctx.c, &ctx, &pts, &dirs).unwrap();
        assert!(a < 1e-9 && b < 1e-9, "{a} {b}");
        let (h, shown) = verify_hamiltonian_identity(ctx.c, &ctx, &pts).unwrap();
        assert!(h < 1e-9, "{h}");
        assert!(shown > 1e-3);
    }
}
