//! Truncated multivariate Taylor series ("jets") in the `n` weight coordinates.
//!
//! A jet of order `N` at a point stores `f^{(alpha)}/alpha!` for every multi-index
//! with `|alpha| <= N`. Arithmetic is exact up to truncation, which is what the
//! Leibniz rule in differential-operator composition needs.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::context::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Monomial ordering and product table for one `(n, order)` pair.
#[derive(Debug)]
pub struct Layout {
    pub n: usize,
    pub order: usize,
    pub monomials: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
    products: Vec<(usize, usize, usize)>,
}

fn build_layout(n: usize, order: usize) -> Layout {
    let mut monomials = Vec::new();
    fn rec(prefix: &mut Vec<u32>, n: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(prefix, n, left - k, out);
            prefix.pop();
        }
    }
    rec(&mut Vec::new(), n, order as u32, &mut monomials);
    monomials.sort_by_key(|m| (m.iter().sum::<u32>(), std::cmp::Reverse(m.clone())));
    let index: HashMap<Vec<u32>, usize> = monomials.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    let mut products = Vec::new();
    for (a, ma) in monomials.iter().enumerate() {
        for (b, mb) in monomials.iter().enumerate() {
            let s: Vec<u32> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
            if let Some(&c) = index.get(&s) {
                products.push((a, b, c));
            }
        }
    }
    Layout { n, order, monomials, index, products }
}

type LayoutCache = Mutex<HashMap<(usize, usize), Arc<Layout>>>;

pub fn layout(n: usize, order: usize) -> Arc<Layout> {
    static CACHE: OnceLock<LayoutCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("layout cache poisoned");
    guard.entry((n, order)).or_insert_with(|| Arc::new(build_layout(n, order))).clone()
}

#[derive(Debug, Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    pub coeffs: Vec<C64>,
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

fn multi_factorial(m: &[u32]) -> f64 {
    m.iter().map(|&k| factorial(k)).product()
}

impl Jet {
    pub fn constant(n: usize, order: usize, value: C64) -> Jet {
        let layout = layout(n, order);
        let mut coeffs = vec![ZERO; layout.monomials.len()];
        coeffs[0] = value;
        Jet { layout, coeffs }
    }

    /// The jet of the linear function `value + sum_i slope_i (x_i - x0_i)`.
    pub fn linear(order: usize, value: C64, slope: &[C64]) -> Jet {
        let n = slope.len();
        let mut j = Jet::constant(n, order, value);
        if order >= 1 {
            for (i, &s) in slope.iter().enumerate() {
                let mut m = vec![0; n];
                m[i] = 1;
                let k = j.layout.index[&m];
                j.coeffs[k] = s;
            }
        }
        j
    }

    pub fn n(&self) -> usize {
        self.layout.n
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    /// Taylor coefficient `f^{(alpha)}/alpha!`, zero beyond the truncation order.
    pub fn coeff(&self, alpha: &[u32]) -> C64 {
        self.layout.index.get(alpha).map(|&k| self.coeffs[k]).unwrap_or(ZERO)
    }

    /// `d^alpha f` at the base point.
    pub fn derivative_value(&self, alpha: &[u32]) -> C64 {
        self.coeff(alpha) * multi_factorial(alpha)
    }

    /// Re-truncates to a lower order.
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order(), "cannot raise jet order");
        let lay = layout(self.n(), order);
        let coeffs = lay.monomials.iter().map(|m| self.coeff(m)).collect();
        Jet { layout: lay, coeffs }
    }

    /// Jet of `d^gamma f`, of order `order - |gamma|`.
    pub fn differentiate(&self, gamma: &[u32]) -> Jet {
        let g: u32 = gamma.iter().sum();
        assert!(g as usize <= self.order(), "derivative beyond jet order");
        let lay = layout(self.n(), self.order() - g as usize);
        let coeffs = lay
            .monomials
            .iter()
            .map(|m| {
                let shifted: Vec<u32> = m.iter().zip(gamma).map(|(a, b)| a + b).collect();
                let ratio: f64 = m
                    .iter()
                    .zip(gamma)
                    .map(|(&a, &b)| ((a + 1)..=(a + b)).map(|x| x as f64).product::<f64>())
                    .product();
                self.coeff(&shifted) * ratio
            })
            .collect();
        Jet { layout: lay, coeffs }
    }

    pub fn scale(&self, s: C64) -> Jet {
        Jet { layout: self.layout.clone(), coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    fn align(a: &Jet, b: &Jet) -> (Jet, Jet) {
        let o = a.order().min(b.order());
        (if a.order() == o { a.clone() } else { a.truncate(o) }, if b.order() == o { b.clone() } else { b.truncate(o) })
    }

    /// `g(f)` for a univariate `g` given by its Taylor coefficients `g_k` at `f(x0)`.
    pub fn compose_univariate(&self, taylor: &[C64]) -> Jet {
        let mut t = self.clone();
        t.coeffs[0] = ZERO;
        let mut out = Jet::constant(self.n(), self.order(), taylor.first().copied().unwrap_or(ZERO));
        let mut power = Jet::constant(self.n(), self.order(), C64::new(1.0, 0.0));
        for &gk in taylor.iter().skip(1).take(self.order()) {
            power = &power * &t;
            out = &out + &power.scale(gk);
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let f0 = self.value();
        let taylor: Vec<C64> = (0..=self.order()).map(|k| (-1.0f64).powi(k as i32) / f0.powu(k as u32 + 1)).collect();
        self.compose_univariate(&taylor)
    }

    pub fn ln(&self) -> Jet {
        let f0 = self.value();
        let mut taylor = vec![f0.ln()];
        for k in 1..=self.order() {
            taylor.push((-1.0f64).powi(k as i32 + 1) / (k as f64 * f0.powu(k as u32)));
        }
        self.compose_univariate(&taylor)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let taylor: Vec<C64> = (0..=self.order()).map(|k| e / factorial(k as u32)).collect();
        self.compose_univariate(&taylor)
    }

    /// `f^a` on the principal branch of `log f(x0)`.
    pub fn powc(&self, a: C64) -> Jet {
        self.ln().scale(a).exp()
    }

    pub fn div(&self, other: &Jet) -> Jet {
        self * &other.recip()
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let (a, b) = Jet::align(self, rhs);
        Jet { layout: a.layout.clone(), coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect() }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self + &(-rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let (a, b) = Jet::align(self, rhs);
        let mut coeffs = vec![ZERO; a.coeffs.len()];
        for &(i, j, k) in &a.layout.products {
            coeffs[k] += a.coeffs[i] * b.coeffs[j];
        }
        Jet { layout: a.layout.clone(), coeffs }
    }
}

/// Jet of `g(<slope, x> + offset)` at the base point, given `g^{(k)}` at the base value.
pub fn along_linear_form(derivs: &[C64], slope: &[C64], order: usize) -> Jet {
    let inner = Jet::linear(order, ZERO, slope);
    let taylor: Vec<C64> = derivs.iter().take(order + 1).enumerate().map(|(k, d)| d / factorial(k as u32)).collect();
    inner.compose_univariate(&taylor)
}
