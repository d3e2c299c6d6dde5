//! Symmetric level-`l` theta functions on the `A_{n-1}` weight space, spanned by
//! products of the level-one affine characters `chi_j`, and the action of the
//! L-operators on them.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::belavin::{build_r, RTensor};
use crate::context::{Context, C64};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::opalg::DifferenceOperator;
use crate::theta::{theta, ThetaValue};
use crate::transfer::{exp_test_function, generic_samples, l_op, m_trace};
use crate::weight::{project_eps, Sampler, WeightPoint};

const ZERO: C64 = C64::new(0.0, 0.0);
const TWO_PI_I: C64 = C64::new(0.0, 2.0 * PI);

/// Lattice sums keep `|nu| <= LATTICE_RADIUS`.
pub const LATTICE_RADIUS: f64 = 6.0;
/// Relative singular-value cutoff for ranks.
pub const RANK_CUTOFF: f64 = 1e-8;
/// Relative singular-value cutoff for least-squares fits.
pub const FIT_CUTOFF: f64 = 1e-10;

/// `Lambda_j = eps_bar_0 + ... + eps_bar_{j-1}`; `Lambda_0 = 0`.
pub fn fundamental_weight(j: usize, n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for i in 0..j {
        for (k, x) in w.iter_mut().enumerate() {
            *x += if k == i { 1.0 } else { 0.0 } - 1.0 / n as f64;
        }
    }
    w
}

type CosetCache = Mutex<HashMap<(usize, usize), Arc<Vec<Vec<f64>>>>>;

fn coset_points(j: usize, n: usize) -> Arc<Vec<Vec<f64>>> {
    static CACHE: OnceLock<CosetCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("lattice cache poisoned");
    guard
        .entry((j, n))
        .or_insert_with(|| {
            let base = fundamental_weight(j, n);
            let r2 = LATTICE_RADIUS * LATTICE_RADIUS;
            let m = LATTICE_RADIUS.ceil() as i64 + 1;
            let mut out = Vec::new();
            let mut digits = vec![-m; n - 1];
            loop {
                let last = -digits.iter().sum::<i64>();
                let nu: Vec<f64> = base
                    .iter()
                    .enumerate()
                    .map(|(k, b)| b + if k + 1 < n { digits[k] } else { last } as f64)
                    .collect();
                if nu.iter().map(|x| x * x).sum::<f64>() <= r2 {
                    out.push(nu);
                }
                let Some(pos) = digits.iter().position(|&d| d < m) else { break };
                digits[pos] += 1;
                for d in &mut digits[..pos] {
                    *d = -m;
                }
            }
            Arc::new(out)
        })
        .clone()
}

fn gaussian_tail(n: usize, im_lambda: f64, ctx: &Context) -> f64 {
    let a = PI * ctx.tau.im;
    let b = 2.0 * PI * im_lambda;
    let start = LATTICE_RADIUS.floor() as i32;
    (start..start + 60)
        .map(|r| {
            let r = r as f64;
            (2.0 * r + 3.0).powi(n as i32 - 1) * (-a * r * r + b * (r + 1.0)).exp()
        })
        .sum()
}

/// `chi_j(lambda) = sum_{nu in Lambda_j + Q} exp 2 pi i (<lambda, nu> + <nu, nu> tau / 2)`.
pub fn chi_value(j: usize, lambda: &WeightPoint, ctx: &Context) -> ThetaValue {
    let n = lambda.n();
    assert!(j < n, "character index {j} out of range for rank {n}");
    let mut value = ZERO;
    for nu in coset_points(j, n).iter() {
        let lin: C64 = lambda.coords.iter().zip(nu).map(|(l, x)| l * x).sum();
        let quad: f64 = nu.iter().map(|x| x * x).sum();
        value += (TWO_PI_I * (lin + ctx.tau * (quad / 2.0))).exp();
    }
    let im = lambda.coords.iter().map(|c| c.im * c.im).sum::<f64>().sqrt();
    ThetaValue { value, tail_bound: gaussian_tail(n, im, ctx) }
}

pub fn chi(j: usize, lambda: &WeightPoint, ctx: &Context) -> C64 {
    chi_value(j, lambda, ctx).value
}

/// Character attached to the vector index `j` in the level-one module isomorphism.
pub fn character_for_index(j: usize, n: usize) -> usize {
    (n - 1 - j % n) % n
}

/// `(l + n)! / (l! n!)`, the dimension as displayed for the symmetric level-`l` space.
pub fn displayed_dimension(n: usize, l: usize) -> usize {
    binomial(l + n, n)
}

/// Number of multisets of size `l` drawn from `0..n`.
pub fn multiset_count(n: usize, l: usize) -> usize {
    binomial(n + l - 1, l)
}

fn binomial(a: usize, b: usize) -> usize {
    (0..b).fold(1usize, |acc, k| acc * (a - k) / (k + 1))
}

fn multisets(n: usize, l: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for j in start..n {
            prefix.push(j);
            rec(j, n, left - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, l, &mut Vec::new(), &mut out);
    out
}

/// Products `chi_{j_1} ... chi_{j_l}` over multisets `j_1 <= ... <= j_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterBasis {
    pub n: usize,
    pub level: usize,
    pub elements: Vec<Vec<usize>>,
}

impl CharacterBasis {
    pub fn new(n: usize, level: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("rank n = {n} must be at least 2")));
        }
        Ok(CharacterBasis { n, level, elements: multisets(n, level) })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn eval(&self, b: usize, lambda: &WeightPoint, ctx: &Context) -> C64 {
        product_of_characters(&self.elements[b], lambda, ctx)
    }

    pub fn eval_all(&self, lambda: &WeightPoint, ctx: &Context) -> Vec<C64> {
        let chis: Vec<C64> = (0..self.n).map(|j| chi(j, lambda, ctx)).collect();
        self.elements.iter().map(|m| m.iter().map(|&j| chis[j]).product()).collect()
    }

    /// Rows indexed by points, columns by basis elements.
    pub fn evaluation_matrix(&self, points: &[WeightPoint], ctx: &Context) -> CMatrix {
        let rows: Vec<Vec<C64>> = points.iter().map(|p| self.eval_all(p, ctx)).collect();
        linalg::from_fn(points.len(), self.len(), |s, b| rows[s][b])
    }
}

pub fn product_of_characters(indices: &[usize], lambda: &WeightPoint, ctx: &Context) -> C64 {
    indices.iter().map(|&j| chi(j, lambda, ctx)).product()
}

/// Image of `e^{j_1} ... e^{j_l}` under the module isomorphism.
pub fn gamma(indices: &[usize], lambda: &WeightPoint, ctx: &Context) -> C64 {
    let n = lambda.n();
    indices.iter().map(|&j| chi(character_for_index(j, n), lambda, ctx)).product()
}

/// Numerical rank of the evaluation matrix.
pub fn gram_rank(basis: &CharacterBasis, points: &[WeightPoint], ctx: &Context) -> Result<usize> {
    if points.len() < 2 * basis.len() {
        return Err(Error::InvalidParameter(format!(
            "{} sample points for a basis of size {}; need at least twice as many",
            points.len(),
            basis.len()
        )));
    }
    Ok(linalg::numerical_rank(&basis.evaluation_matrix(points, ctx), RANK_CUTOFF))
}

/// Quasi-periodicity residuals `(f(lambda + alpha) vs f, f(lambda + alpha tau) vs factor f)`
/// for a root-lattice vector `alpha` given in integer coordinates.
pub fn quasi_periodicity(basis: &CharacterBasis, b: usize, lambda: &WeightPoint, alpha: &[i32], ctx: &Context) -> (f64, f64) {
    let a = WeightPoint { coords: alpha.iter().map(|&x| C64::new(x as f64, 0.0)).collect() };
    let f = basis.eval(b, lambda, ctx);
    let plain = basis.eval(b, &lambda.add_scaled(&a, C64::new(1.0, 0.0)), ctx);
    let twisted = basis.eval(b, &lambda.add_scaled(&a, ctx.tau), ctx);
    let l = basis.level as f64;
    let factor = (-TWO_PI_I * l * (lambda.pair(&a) + a.pair(&a) * ctx.tau / 2.0)).exp();
    let want = factor * f;
    ((plain - f).norm() / f.norm(), (twisted - want).norm() / want.norm().max(twisted.norm()))
}

/// A random root `eps_i - eps_j` with `i != j`, of squared length 2.
pub fn random_root(sampler: &mut Sampler, n: usize) -> Vec<i32> {
    let pick = |s: &mut Sampler| (s.real(0.0, n as f64) as usize).min(n - 1);
    let i = pick(sampler);
    let mut j = pick(sampler);
    while j == i {
        j = pick(sampler);
    }
    let mut alpha = vec![0; n];
    alpha[i] = 1;
    alpha[j] = -1;
    alpha
}

/// Weight points where the intertwiners at `u` are well conditioned and the characters are tame.
pub fn sample_points(ctx: &Context, sampler: &mut Sampler, count: usize, u: C64) -> Result<Vec<WeightPoint>> {
    generic_samples(ctx, sampler, count, &[u])
}

/// Least-squares expansion of a function in the basis.
#[derive(Debug, Clone)]
pub struct Fit {
    pub coefficients: Vec<C64>,
    /// Relative sup-norm misfit on the held-out points.
    pub residual: f64,
}

pub fn fit_function(
    basis: &CharacterBasis,
    target: &dyn Fn(&WeightPoint) -> C64,
    fit_points: &[WeightPoint],
    holdout: &[WeightPoint],
    ctx: &Context,
) -> Result<Fit> {
    if fit_points.len() < basis.len() {
        return Err(Error::InvalidParameter("fewer fitting points than basis elements".into()));
    }
    let a = basis.evaluation_matrix(fit_points, ctx);
    let y = linalg::from_fn(fit_points.len(), 1, |s, _| target(&fit_points[s]));
    let x = linalg::lstsq(&a, &y, FIT_CUTOFF);
    let coefficients: Vec<C64> = x.iter().copied().collect();
    let mut worst = 0.0f64;
    let mut size = 0.0f64;
    for p in holdout {
        let want = target(p);
        let got: C64 = basis.eval_all(p, ctx).iter().zip(&coefficients).map(|(b, c)| b * c).sum();
        worst = worst.max((want - got).norm());
        size = size.max(want.norm());
    }
    let residual = worst / size;
    if !residual.is_finite() {
        return Err(Error::Singular("fit residual is not finite".into()));
    }
    Ok(Fit { coefficients, residual })
}

/// Expands `op` applied to each basis element; column `b` holds the coefficients of `op (basis_b)`.
#[derive(Debug, Clone)]
pub struct ActionFit {
    pub matrix: CMatrix,
    pub residual: f64,
}

pub fn fit_action(
    basis: &CharacterBasis,
    op: &DifferenceOperator,
    fit_points: &[WeightPoint],
    holdout: &[WeightPoint],
    ctx: &Context,
) -> Result<ActionFit> {
    let d = basis.len();
    let mut matrix = CMatrix::zeros(d, d);
    let mut residual = 0.0f64;
    for b in 0..d {
        let f = |p: &WeightPoint| basis.eval(b, p, ctx);
        let target = |p: &WeightPoint| op.apply(&f, p);
        let fit = fit_function(basis, &target, fit_points, holdout, ctx)?;
        for (k, c) in fit.coefficients.iter().enumerate() {
            matrix[(k, b)] = *c;
        }
        residual = residual.max(fit.residual);
    }
    Ok(ActionFit { matrix, residual })
}

/// Held-out misfit of `op` applied to `e^{2 pi i <lambda, v>}`; large when the check has power.
pub fn negative_control(
    basis: &CharacterBasis,
    op: &DifferenceOperator,
    v: WeightPoint,
    fit_points: &[WeightPoint],
    holdout: &[WeightPoint],
    ctx: &Context,
) -> Result<f64> {
    let f = exp_test_function(v);
    let target = |p: &WeightPoint| op.apply(&f, p);
    Ok(fit_function(basis, &target, fit_points, holdout, ctx)?.residual)
}

/// Worst fit residual of every `L(l|u)^i_j` on the level-`l` basis, with `c = l`.
pub fn verify_l_invariance(level: usize, u: C64, ctx: &Context, sampler: &mut Sampler) -> Result<f64> {
    let basis = CharacterBasis::new(ctx.n, level)?;
    let (fit, hold) = split_samples(&basis, u, ctx, sampler)?;
    let l = l_op(C64::new(level as f64, 0.0), u, ctx);
    let mut worst = 0.0f64;
    for i in 0..ctx.n {
        for j in 0..ctx.n {
            worst = worst.max(fit_action(&basis, l.entry(i, j), &fit, &hold, ctx)?.residual);
        }
    }
    Ok(worst)
}

/// `(M_1(l|u) fit residual, negative-control residual)` on the level-`l` basis.
pub fn verify_m1_invariance(level: usize, u: C64, ctx: &Context, sampler: &mut Sampler) -> Result<(f64, f64)> {
    let basis = CharacterBasis::new(ctx.n, level)?;
    let (fit, hold) = split_samples(&basis, u, ctx, sampler)?;
    let m1 = m_trace(C64::new(level as f64, 0.0), u, 1, ctx)?;
    let positive = fit_action(&basis, &m1, &fit, &hold, ctx)?.residual;
    let v = sampler.direction(ctx.n, 0.7);
    let negative = negative_control(&basis, &m1, v, &fit, &hold, ctx)?;
    Ok((positive, negative))
}

fn split_samples(basis: &CharacterBasis, u: C64, ctx: &Context, sampler: &mut Sampler) -> Result<(Vec<WeightPoint>, Vec<WeightPoint>)> {
    let count = 3 * basis.len().max(displayed_dimension(ctx.n, basis.level));
    let fit = sample_points(ctx, sampler, count, u)?;
    let hold = sample_points(ctx, sampler, count, u)?;
    Ok((fit, hold))
}

/// Level-one expansion: the fitted coefficient of `chi_{sigma(j')}` in `L(1|u)^i_{i'} chi_{sigma(j)}`
/// against `theta(hbar)/theta(u) R(u)^{ij}_{i'j'}`; returns the worst entry error relative to the largest entry.
pub fn verify_level_one_coefficients(u: C64, ctx: &Context, sampler: &mut Sampler) -> Result<f64> {
    let n = ctx.n;
    let basis = CharacterBasis::new(n, 1)?;
    let (fit, hold) = split_samples(&basis, u, ctx, sampler)?;
    let l = l_op(C64::new(1.0, 0.0), u, ctx);
    let r = build_r(u, ctx)?;
    let pref = theta(ctx.hbar, ctx) / theta(u, ctx);
    let mut worst = 0.0f64;
    let mut size = 0.0f64;
    for i in 0..n {
        for ip in 0..n {
            let action = fit_action(&basis, l.entry(i, ip), &fit, &hold, ctx)?;
            for j in 0..n {
                for jp in 0..n {
                    let got = action.matrix[(character_for_index(jp, n), character_for_index(j, n))];
                    let want = pref * r.get(i, j, ip, jp);
                    worst = worst.max((got - want).norm());
                    size = size.max(want.norm());
                }
            }
        }
    }
    Ok(worst / size)
}

/// `sum_{k_1..k_{l-1}} R(u)^{i j_1}_{k_1 a_1} R(u+hbar)^{k_1 j_2}_{k_2 a_2} ... R(u+(l-1)hbar)^{k_{l-1} j_l}_{i' a_l}`.
fn coproduct_coefficient(rs: &[RTensor], i: usize, js: &[usize], ip: usize, as_: &[usize]) -> C64 {
    let n = rs[0].n;
    let mut cur = vec![ZERO; n];
    cur[i] = C64::new(1.0, 0.0);
    for (s, r) in rs.iter().enumerate() {
        let mut next = vec![ZERO; n];
        for (k, &ck) in cur.iter().enumerate() {
            if ck == ZERO {
                continue;
            }
            for (kp, slot) in next.iter_mut().enumerate() {
                *slot += ck * r.get(k, js[s], kp, as_[s]);
            }
        }
        cur = next;
    }
    cur[ip]
}

fn tuples(n: usize, l: usize) -> Vec<Vec<usize>> {
    (0..n.pow(l as u32)).map(|x| crate::belavin::digits(x, n, l)).collect()
}

/// Residuals of the level-`l` module isomorphism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuleIso {
    /// `L°(l|u)^i_{i'} gamma(e^J)` against `gamma(L(u)^i_{i'} e^J)` over all ordered `J`.
    pub residual: f64,
    /// Spread of `gamma(L(u)^i_{i'} e^J)` across reorderings of `J`.
    pub ordering: f64,
}

pub fn verify_module_iso(level: usize, u: C64, ctx: &Context, points: &[WeightPoint]) -> Result<ModuleIso> {
    if level == 0 {
        return Err(Error::InvalidParameter("level must be positive".into()));
    }
    let n = ctx.n;
    let h = ctx.hbar;
    let rs: Vec<RTensor> = (0..level).map(|s| build_r(u + h * s as f64, ctx)).collect::<Result<_>>()?;
    let th = theta(h, ctx);
    let pref: C64 = (0..level).map(|s| theta(u + h * s as f64, ctx) / th).product();
    let l = l_op(C64::new(level as f64, 0.0), u, ctx);
    let all = tuples(n, level);
    let mut residual = 0.0f64;
    let mut ordering = 0.0f64;
    for p in points {
        let gammas: Vec<C64> = all.iter().map(|a| gamma(a, p, ctx)).collect();
        for i in 0..n {
            for ip in 0..n {
                let op = l.entry(i, ip);
                let mut images: HashMap<Vec<usize>, (C64, f64)> = HashMap::new();
                for js in &all {
                    let f = |q: &WeightPoint| gamma(js, q, ctx);
                    let mut lhs = ZERO;
                    let mut scale = 0.0;
                    for (key, coef) in op.terms() {
                        let t = pref * coef(p) * f(&p.shifted(key, op.step));
                        lhs += t;
                        scale += t.norm();
                    }
                    let mut rhs = ZERO;
                    for (a, g) in all.iter().zip(&gammas) {
                        let t = coproduct_coefficient(&rs, i, js, ip, a) * g;
                        rhs += t;
                        scale += t.norm();
                    }
                    residual = residual.max((lhs - rhs).norm() / scale);
                    let mut sorted = js.clone();
                    sorted.sort_unstable();
                    match images.get(&sorted) {
                        Some(&(first, s)) => ordering = ordering.max((first - rhs).norm() / s.max(scale)),
                        None => {
                            images.insert(sorted, (rhs, scale));
                        }
                    }
                }
            }
        }
    }
    Ok(ModuleIso { residual, ordering })
}

/// `theta(hbar)/theta(u) sum_i R(u)^{i0}_{i0}`.
pub fn m1_eigenvalue(u: C64, ctx: &Context) -> Result<C64> {
    let r = build_r(u, ctx)?;
    Ok(theta(ctx.hbar, ctx) / theta(u, ctx) * (0..ctx.n).map(|i| r.get(i, 0, i, 0)).sum::<C64>())
}

/// `(residual of M_1(1|u) chi_j = E chi_j, spread of M_1 chi_j / chi_j across j)`.
pub fn m1_eigen_check(u: C64, ctx: &Context, points: &[WeightPoint]) -> Result<(f64, f64)> {
    let n = ctx.n;
    let ev = m1_eigenvalue(u, ctx)?;
    let l = l_op(C64::new(1.0, 0.0), u, ctx);
    let mut residual = 0.0f64;
    let mut spread = 0.0f64;
    for p in points {
        let mut ratios = Vec::with_capacity(n);
        for j in 0..n {
            let f = |q: &WeightPoint| chi(j, q, ctx);
            let mut got = ZERO;
            let mut scale = 0.0;
            for i in 0..n {
                let op = l.entry(i, i);
                for (key, coef) in op.terms() {
                    let t = coef(p) * f(&p.shifted(key, op.step));
                    got += t;
                    scale += t.norm();
                }
            }
            let want = ev * f(p);
            residual = residual.max((got - want).norm() / scale.max(want.norm()));
            ratios.push(got / f(p));
        }
        for a in &ratios {
            for b in &ratios {
                spread = spread.max((a - b).norm() / ev.norm());
            }
        }
    }
    Ok((residual, spread))
}

/// Shifted coordinates `lambda + hbar eps_bar_k`, exposed for callers assembling their own actions.
pub fn shifted_by_eps(lambda: &WeightPoint, k: usize, ctx: &Context) -> WeightPoint {
    lambda.add_scaled(&project_eps(k, lambda.n()), ctx.hbar)
}
