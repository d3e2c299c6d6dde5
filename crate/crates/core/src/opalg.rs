//! Composition algebra of difference operators `sum_K a_K(lambda) T^hbar_K` and of
//! differential operators `sum_alpha a_alpha(lambda) d^alpha`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::context::C64;
use crate::jet::Jet;
use crate::weight::{ShiftKey, WeightPoint};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub type Coefficient = Arc<dyn Fn(&WeightPoint) -> C64 + Send + Sync>;

pub fn coefficient(f: impl Fn(&WeightPoint) -> C64 + Send + Sync + 'static) -> Coefficient {
    Arc::new(f)
}

pub fn constant(c: C64) -> Coefficient {
    Arc::new(move |_| c)
}

/// Wraps `f` with a bounded cache keyed by the exact bits of the evaluation point.
pub fn memoize(f: Coefficient) -> Coefficient {
    let cache: Mutex<HashMap<Vec<u64>, C64>> = Mutex::new(HashMap::new());
    Arc::new(move |p: &WeightPoint| {
        let key = p.bits();
        if let Some(v) = cache.lock().expect("cache poisoned").get(&key) {
            return *v;
        }
        let v = f(p);
        let mut guard = cache.lock().expect("cache poisoned");
        if guard.len() > 1 << 14 {
            guard.clear();
        }
        guard.insert(key, v);
        v
    })
}

/// Finite sum of coefficient functions times shifts, keys taken modulo `(1, ..., 1)`.
#[derive(Clone)]
pub struct DifferenceOperator {
    pub n: usize,
    /// Translation step: `T_K` moves `lambda` by `step * sum_i K_i eps_bar_i`.
    pub step: C64,
    terms: BTreeMap<ShiftKey, Coefficient>,
}

impl fmt::Debug for DifferenceOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DifferenceOperator").field("n", &self.n).field("step", &self.step).field("keys", &self.keys()).finish()
    }
}

impl DifferenceOperator {
    pub fn zero(n: usize, step: C64) -> Self {
        DifferenceOperator { n, step, terms: BTreeMap::new() }
    }

    pub fn identity(n: usize, step: C64) -> Self {
        Self::monomial(ShiftKey::zero(n), constant(ONE), step)
    }

    pub fn monomial(key: ShiftKey, coeff: Coefficient, step: C64) -> Self {
        let n = key.0.len();
        let mut op = Self::zero(n, step);
        op.add_term(key, coeff);
        op
    }

    /// Adds `coeff T_key`, accumulating onto an existing key.
    pub fn add_term(&mut self, key: ShiftKey, coeff: Coefficient) {
        let key = ShiftKey::new(key.0);
        assert_eq!(key.0.len(), self.n, "shift key rank mismatch");
        match self.terms.remove(&key) {
            Some(old) => {
                self.terms.insert(key, Arc::new(move |p: &WeightPoint| old(p) + coeff(p)));
            }
            None => {
                self.terms.insert(key, coeff);
            }
        }
    }

    pub fn keys(&self) -> Vec<ShiftKey> {
        self.terms.keys().cloned().collect()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ShiftKey, &Coefficient)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, key: &ShiftKey) -> Option<&Coefficient> {
        self.terms.get(&ShiftKey::new(key.0.clone()))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficients evaluated at `lambda`.
    pub fn coefficients_at(&self, lambda: &WeightPoint) -> BTreeMap<ShiftKey, C64> {
        self.terms.iter().map(|(k, c)| (k.clone(), c(lambda))).collect()
    }

    /// `sum_K a_K(lambda) f(lambda + step K)`.
    pub fn apply(&self, f: &dyn Fn(&WeightPoint) -> C64, lambda: &WeightPoint) -> C64 {
        self.terms.iter().map(|(k, c)| c(lambda) * f(&lambda.shifted(k, self.step))).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, c)| {
                let c = c.clone();
                (k.clone(), Arc::new(move |p: &WeightPoint| s * c(p)) as Coefficient)
            })
            .collect();
        DifferenceOperator { n: self.n, step: self.step, terms }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.step, other.step, "adding operators with different steps");
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    /// `self o other`: `(a T_K) o (b T_L) = a(lambda) b(lambda + step K) T_{K+L}`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.step, other.step, "composing operators with different steps");
        let step = self.step;
        let mut out = Self::zero(self.n, step);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let (ca, cb, ka2) = (ca.clone(), cb.clone(), ka.clone());
                out.add_term(ka.add(kb), Arc::new(move |p: &WeightPoint| ca(p) * cb(&p.shifted(&ka2, step))));
            }
        }
        out
    }

    /// Same operator with every coefficient memoized.
    pub fn memoized(&self) -> Self {
        let terms = self.terms.iter().map(|(k, c)| (k.clone(), memoize(c.clone()))).collect();
        DifferenceOperator { n: self.n, step: self.step, terms }
    }

    /// Product of `T_key` on the right: `self o T_key`.
    pub fn then_shift(&self, key: &ShiftKey) -> Self {
        self.compose(&Self::monomial(key.clone(), constant(ONE), self.step))
    }
}

/// Coefficientwise distance `max_{K, samples} |a_K - b_K| / max |a_K|, |b_K|` (0 when both vanish).
pub fn operator_distance(a: &DifferenceOperator, b: &DifferenceOperator, samples: &[WeightPoint]) -> f64 {
    let mut keys: Vec<ShiftKey> = a.keys();
    keys.extend(b.keys());
    keys.sort();
    keys.dedup();
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in samples {
        let ca = a.coefficients_at(p);
        let cb = b.coefficients_at(p);
        for k in &keys {
            let x = ca.get(k).copied().unwrap_or(ZERO);
            let y = cb.get(k).copied().unwrap_or(ZERO);
            diff = diff.max((x - y).norm());
            scale = scale.max(x.norm()).max(y.norm());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// `max |coeff_{[a,b]}| / max |coeff_{ab}|` over keys and samples.
pub fn commutator_residual(a: &DifferenceOperator, b: &DifferenceOperator, samples: &[WeightPoint]) -> f64 {
    operator_distance(&a.compose(b), &b.compose(a), samples)
}

/// A matrix entry for [`normal_det`]: a sum of coefficient-times-shift terms.
pub type Entry = Vec<(ShiftKey, Coefficient)>;

/// Normal-ordered determinant of `entries - t`: every product is taken with coefficients
/// multiplied at the same point and shift keys added.
pub fn normal_det(entries: &[Vec<Entry>], t: C64, step: C64) -> DifferenceOperator {
    let n = entries.len();
    let mut out = DifferenceOperator::zero(n, step);
    for (perm, sign) in permutations(n) {
        let mut partial: Vec<(ShiftKey, Coefficient)> = vec![(ShiftKey::zero(n), constant(C64::new(sign, 0.0)))];
        for (row, &col) in perm.iter().enumerate() {
            let mut factor: Entry = entries[row][col].clone();
            if row == col && t != ZERO {
                factor.push((ShiftKey::zero(n), constant(-t)));
            }
            let mut next = Vec::with_capacity(partial.len() * factor.len());
            for (ka, ca) in &partial {
                for (kb, cb) in &factor {
                    let (ca, cb) = (ca.clone(), cb.clone());
                    next.push((ka.add(kb), Arc::new(move |p: &WeightPoint| ca(p) * cb(p)) as Coefficient));
                }
            }
            partial = next;
        }
        for (k, c) in partial {
            out.add_term(k, c);
        }
    }
    out
}

/// All permutations of `0..n` with their signs.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out.into_iter()
        .map(|p| {
            let mut inversions = 0;
            for a in 0..n {
                for b in (a + 1)..n {
                    if p[a] > p[b] {
                        inversions += 1;
                    }
                }
            }
            let s = if inversions % 2 == 0 { 1.0 } else { -1.0 };
            (p, s)
        })
        .collect()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Multi-index `alpha` of a derivative `d^alpha = prod_i d_i^{alpha_i}`.
pub type MultiIndex = Vec<u32>;

/// Coefficient supplying its own jet of any requested order at a point.
pub type JetCoefficient = Arc<dyn Fn(&WeightPoint, usize) -> Jet + Send + Sync>;

/// Finite sum `sum_alpha a_alpha(lambda) d^alpha` with `d_i = d/d lambda_i`.
#[derive(Clone)]
pub struct DifferentialOperator {
    pub n: usize,
    terms: BTreeMap<MultiIndex, JetCoefficient>,
}

impl fmt::Debug for DifferentialOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DifferentialOperator").field("n", &self.n).field("indices", &self.terms.keys().collect::<Vec<_>>()).finish()
    }
}

fn binomial_multi(alpha: &[u32], gamma: &[u32]) -> f64 {
    alpha
        .iter()
        .zip(gamma)
        .map(|(&a, &g)| {
            let mut b = 1.0;
            for t in 0..g {
                b = b * (a - t) as f64 / (t + 1) as f64;
            }
            b
        })
        .product()
}

fn sub_indices(alpha: &[u32]) -> Vec<MultiIndex> {
    let mut out = vec![Vec::new()];
    for &a in alpha {
        out = out.into_iter().flat_map(|p: Vec<u32>| (0..=a).map(move |g| [p.clone(), vec![g]].concat())).collect();
    }
    out
}

impl DifferentialOperator {
    pub fn zero(n: usize) -> Self {
        DifferentialOperator { n, terms: BTreeMap::new() }
    }

    pub fn multiplication(n: usize, coeff: JetCoefficient) -> Self {
        let mut op = Self::zero(n);
        op.add_term(vec![0; n], coeff);
        op
    }

    pub fn partial(i: usize, n: usize) -> Self {
        let mut alpha = vec![0; n];
        alpha[i] = 1;
        let mut op = Self::zero(n);
        op.add_term(alpha, Arc::new(move |_: &WeightPoint, order| Jet::constant(n, order, ONE)));
        op
    }

    pub fn add_term(&mut self, alpha: MultiIndex, coeff: JetCoefficient) {
        assert_eq!(alpha.len(), self.n, "multi-index rank mismatch");
        match self.terms.remove(&alpha) {
            Some(old) => {
                self.terms.insert(alpha, Arc::new(move |p: &WeightPoint, o| &old(p, o) + &coeff(p, o)));
            }
            None => {
                self.terms.insert(alpha, coeff);
            }
        }
    }

    pub fn indices(&self) -> Vec<MultiIndex> {
        self.terms.keys().cloned().collect()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|a| a.iter().sum()).max().unwrap_or(0)
    }

    pub fn scale(&self, s: C64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(a, c)| {
                let c = c.clone();
                (a.clone(), Arc::new(move |p: &WeightPoint, o| c(p, o).scale(s)) as JetCoefficient)
            })
            .collect();
        DifferentialOperator { n: self.n, terms }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_term(a.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    /// Leibniz composition `self o other`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.n);
        for (alpha, ca) in &self.terms {
            for (beta, cb) in &other.terms {
                for gamma in sub_indices(alpha) {
                    let binom = binomial_multi(alpha, &gamma);
                    let key: MultiIndex = alpha.iter().zip(&gamma).zip(beta).map(|((a, g), b)| a - g + b).collect();
                    let g: usize = gamma.iter().sum::<u32>() as usize;
                    let (ca, cb) = (ca.clone(), cb.clone());
                    out.add_term(
                        key,
                        Arc::new(move |p: &WeightPoint, o| {
                            let db = cb(p, o + g).differentiate(&gamma);
                            (&ca(p, o) * &db).scale(C64::new(binom, 0.0))
                        }),
                    );
                }
            }
        }
        out
    }

    /// Rewrites the operator for functions on `h*` by eliminating `d_n = -sum_{i<n} d_i`.
    pub fn canonical(&self) -> Self {
        let n = self.n;
        let mut out = Self::zero(n);
        for (alpha, c) in &self.terms {
            let m = alpha[n - 1];
            let mut base = alpha.clone();
            base[n - 1] = 0;
            for (beta, mult) in compositions(m, n - 1) {
                let key: MultiIndex = base.iter().enumerate().map(|(i, &a)| a + if i < n - 1 { beta[i] } else { 0 }).collect();
                let s = C64::new(if m % 2 == 0 { mult } else { -mult }, 0.0);
                let c = c.clone();
                out.add_term(key, Arc::new(move |p: &WeightPoint, o| c(p, o).scale(s)));
            }
        }
        out
    }

    /// `sum_alpha a_alpha(lambda) d^alpha f(lambda)` with `f` given by its jet at `lambda`.
    pub fn apply(&self, f: &Jet, lambda: &WeightPoint) -> C64 {
        self.terms.iter().map(|(a, c)| c(lambda, 0).value() * f.derivative_value(a)).sum()
    }

    /// Coefficient values at `lambda`.
    pub fn coefficients_at(&self, lambda: &WeightPoint) -> BTreeMap<MultiIndex, C64> {
        self.terms.iter().map(|(a, c)| (a.clone(), c(lambda, 0).value())).collect()
    }
}

/// Multi-indices `beta` of length `parts` with `|beta| = m`, with multinomial weights.
fn compositions(m: u32, parts: usize) -> Vec<(Vec<u32>, f64)> {
    fn rec(left: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() + 1 == parts {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(left - k, parts, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, parts, &mut Vec::new(), &mut out);
    let fact = |k: u32| (1..=k).map(|x| x as f64).product::<f64>();
    out.into_iter().map(|b| {
        let w = fact(m) / b.iter().map(|&x| fact(x)).product::<f64>();
        (b, w)
    }).collect()
}

/// Coefficientwise distance between canonical forms of two differential operators, relative to the
/// largest coefficient of either operator before the last partial is eliminated (so that operators
/// vanishing on `h*` compare as roundoff against their own term sizes).
pub fn pdo_distance(a: &DifferentialOperator, b: &DifferentialOperator, samples: &[WeightPoint]) -> f64 {
    let (ca_op, cb_op) = (a.canonical(), b.canonical());
    let mut keys = ca_op.indices();
    keys.extend(cb_op.indices());
    keys.sort();
    keys.dedup();
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in samples {
        for raw in [a.coefficients_at(p), b.coefficients_at(p)] {
            scale = raw.values().fold(scale, |m, v| m.max(v.norm()));
        }
        let ca = ca_op.coefficients_at(p);
        let cb = cb_op.coefficients_at(p);
        for k in &keys {
            let x = ca.get(k).copied().unwrap_or(ZERO);
            let y = cb.get(k).copied().unwrap_or(ZERO);
            diff = diff.max((x - y).norm());
            scale = scale.max(x.norm()).max(y.norm());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Normalized residual of `[a, b]` on functions of `h*`.
pub fn pdo_commutator_residual(a: &DifferentialOperator, b: &DifferentialOperator, samples: &[WeightPoint]) -> f64 {
    pdo_distance(&a.compose(b), &b.compose(a), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::Context;
    use crate::weight::Sampler;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn exp_fn(v: WeightPoint) -> impl Fn(&WeightPoint) -> C64 {
        move |p: &WeightPoint| (C64::new(0.0, 2.0 * std::f64::consts::PI) * p.pair(&v)).exp()
    }

    fn samples(n: usize, k: usize) -> Vec<WeightPoint> {
        let ctx = Context::new(n).unwrap();
        Sampler::new(3).generic_points(&ctx, k).unwrap()
    }

    fn coef_a() -> Coefficient {
        coefficient(|p: &WeightPoint| C64::new(1.0, 0.0) + p.coords[0] * p.coords[1])
    }

    fn coef_b() -> Coefficient {
        coefficient(|p: &WeightPoint| (p.coords[1] - p.coords[2]).exp())
    }

    #[test]
    fn identity_and_single_term() {
        let h = c(0.1, 0.2);
        let pts = samples(3, 2);
        let f = exp_fn(WeightPoint::new(vec![c(0.3, 0.0), c(-0.1, 0.2), c(0.0, 0.0)]));
        let id = DifferenceOperator::identity(3, h);
        assert_eq!(id.apply(&f, &pts[0]), f(&pts[0]));
        let single = DifferenceOperator::monomial(ShiftKey::unit(1, 3), coef_a(), h);
        assert_eq!(single.apply(&|_| ONE, &pts[1]), coef_a()(&pts[1]));
    }

    #[test]
    fn compose_matches_double_application_and_rule() {
        let h = c(0.13, 0.07);
        let pts = samples(3, 3);
        let a = DifferenceOperator::monomial(ShiftKey::unit(0, 3), coef_a(), h).add(&DifferenceOperator::identity(3, h));
        let b = DifferenceOperator::monomial(ShiftKey::unit(2, 3), coef_b(), h);
        let ab = a.compose(&b);
        let f = exp_fn(WeightPoint::new(vec![c(0.3, 0.1), c(-0.1, 0.2), c(0.05, 0.0)]));
        for p in &pts {
            let direct = a.apply(&|q: &WeightPoint| b.apply(&f, q), p);
            assert!((ab.apply(&f, p) - direct).norm() < 1e-13);
        }
        let key = ShiftKey::unit(0, 3).add(&ShiftKey::unit(2, 3));
        let got = ab.coefficient(&key).unwrap()(&pts[0]);
        let want = coef_a()(&pts[0]) * coef_b()(&pts[0].shifted_along(0, h));
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn full_shift_is_identity_and_self_commutator_vanishes() {
        let h = c(0.13, 0.07);
        let pts = samples(3, 2);
        let all = DifferenceOperator::monomial(ShiftKey::new(vec![1, 1, 1]), constant(ONE), h);
        assert_eq!(all.keys(), vec![ShiftKey::zero(3)]);
        let a = DifferenceOperator::monomial(ShiftKey::unit(0, 3), coef_a(), h).add(&DifferenceOperator::monomial(ShiftKey::unit(1, 3), coef_b(), h));
        assert_eq!(commutator_residual(&a, &a, &pts), 0.0);
        let b = DifferenceOperator::monomial(ShiftKey::unit(2, 3), coef_b(), h);
        assert!(commutator_residual(&a, &b, &pts) > 1e-3);
    }

    #[test]
    fn composition_is_associative() {
        let h = c(0.13, 0.07);
        let pts = samples(3, 3);
        let a = DifferenceOperator::monomial(ShiftKey::unit(0, 3), coef_a(), h);
        let b = DifferenceOperator::monomial(ShiftKey::unit(1, 3), coef_b(), h).add(&a);
        let cc = DifferenceOperator::monomial(ShiftKey::unit(2, 3), coef_a(), h);
        let left = a.compose(&b).compose(&cc);
        let right = a.compose(&b.compose(&cc));
        assert!(operator_distance(&left, &right, &pts) < 1e-14);
    }

    #[test]
    fn normal_det_scalar_and_diagonal_cases() {
        let h = c(0.13, 0.07);
        let pts = samples(2, 2);
        let z = ShiftKey::zero(2);
        let entries = vec![
            vec![vec![(z.clone(), constant(c(1.0, 0.0)))], vec![(z.clone(), constant(c(2.0, 0.0)))]],
            vec![vec![(z.clone(), constant(c(3.0, 0.0)))], vec![(z.clone(), constant(c(4.0, 0.0)))]],
        ];
        let d = normal_det(&entries, c(0.5, 0.0), h);
        let v = d.coefficients_at(&pts[0]);
        assert!((v[&z] - c((1.0 - 0.5) * (4.0 - 0.5) - 6.0, 0.0)).norm() < 1e-15);
        let diag = vec![
            vec![vec![(ShiftKey::unit(0, 2), coef_a())], vec![]],
            vec![vec![], vec![(ShiftKey::unit(1, 2), constant(c(2.0, 0.0)))]],
        ];
        let d = normal_det(&diag, ZERO, h);
        assert_eq!(d.keys(), vec![ShiftKey::zero(2)]);
        let want = coef_a()(&pts[1]) * 2.0;
        assert!((d.coefficients_at(&pts[1])[&z] - want).norm() < 1e-15);
    }

    #[test]
    fn permutations_and_subsets() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p.iter().map(|(_, s)| s).sum::<f64>(), 0.0);
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(3, 3), vec![vec![0, 1, 2]]);
    }

    fn jet_coef_a() -> JetCoefficient {
        Arc::new(|p: &WeightPoint, o| {
            let s = [c(0.5, 0.0), c(-0.5, 0.0), ZERO];
            Jet::linear(o, p.coords[0] * 0.5 - p.coords[1] * 0.5, &s).exp()
        })
    }

    #[test]
    fn partials_commute_and_leibniz_base_case() {
        let pts = samples(3, 3);
        let d0 = DifferentialOperator::partial(0, 3);
        let d1 = DifferentialOperator::partial(1, 3);
        assert_eq!(pdo_commutator_residual(&d0, &d1, &pts), 0.0);
        let a = DifferentialOperator::multiplication(3, jet_coef_a());
        let comm = a.compose(&d0).sub(&d0.compose(&a));
        let got = comm.coefficients_at(&pts[0]);
        let da = jet_coef_a()(&pts[0], 1).derivative_value(&[1, 0, 0]);
        assert!((got[&vec![0, 0, 0]] + da).norm() < 1e-14);
        assert!(got[&vec![1, 0, 0]].norm() < 1e-14);
    }

    #[test]
    fn canonical_eliminates_last_partial() {
        let pts = samples(3, 2);
        let dn = DifferentialOperator::partial(2, 3);
        let sum = DifferentialOperator::partial(0, 3).add(&DifferentialOperator::partial(1, 3)).add(&dn);
        let canon = sum.canonical();
        assert!(canon.coefficients_at(&pts[0]).values().all(|v| v.norm() < 1e-15));
        let f = Jet::linear(4, ONE, &[c(0.2, 0.0), c(0.3, 0.0), c(-0.5, 0.0)]).exp();
        let sq = dn.compose(&dn);
        let a = sq.apply(&f, &pts[0]);
        let b = sq.canonical().apply(&f, &pts[0]);
        assert!((a - b).norm() < 1e-14);
    }
}
