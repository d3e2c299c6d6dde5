//! The `sl_n` weight space, projected basis vectors, shift keys and seeded sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::context::{Context, C64};
use crate::error::{Error, Result};
use crate::theta::theta;

/// A point of `h*` given by its `n` coordinates in the basis `eps_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPoint {
    pub coords: Vec<C64>,
}

impl WeightPoint {
    /// Projects `coords` onto the sum-zero hyperplane.
    pub fn new(coords: Vec<C64>) -> Self {
        let mut p = WeightPoint { coords };
        p.canonicalize();
        p
    }

    pub fn zero(n: usize) -> Self {
        WeightPoint { coords: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn canonicalize(&mut self) {
        let n = self.coords.len() as f64;
        let mean: C64 = self.coords.iter().sum::<C64>() / n;
        for c in &mut self.coords {
            *c -= mean;
        }
    }

    /// `lambda_ij = <lambda, eps_i - eps_j>` (0-based indices).
    pub fn lambda_ij(&self, i: usize, j: usize) -> C64 {
        self.coords[i] - self.coords[j]
    }

    /// `<lambda, mu>` with the bilinear pairing of `h*`.
    pub fn pair(&self, other: &WeightPoint) -> C64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| a * b).sum()
    }

    /// `self + scale * eps_bar_k`.
    pub fn shifted_along(&self, k: usize, scale: C64) -> WeightPoint {
        let n = self.n() as f64;
        let coords = self
            .coords
            .iter()
            .enumerate()
            .map(|(i, &c)| c + scale * (if i == k { 1.0 - 1.0 / n } else { -1.0 / n }))
            .collect();
        WeightPoint { coords }
    }

    /// `self + scale * sum_i key_i eps_bar_i`.
    pub fn shifted(&self, key: &ShiftKey, scale: C64) -> WeightPoint {
        let n = self.n();
        let mean = key.0.iter().map(|&k| k as f64).sum::<f64>() / n as f64;
        let coords = self.coords.iter().zip(&key.0).map(|(&c, &k)| c + scale * (k as f64 - mean)).collect();
        WeightPoint { coords }
    }

    pub fn add_scaled(&self, v: &WeightPoint, scale: C64) -> WeightPoint {
        WeightPoint { coords: self.coords.iter().zip(&v.coords).map(|(a, b)| a + scale * b).collect() }
    }

    /// Coordinates rounded to a hashable key.
    pub fn bits(&self) -> Vec<u64> {
        self.coords.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]).collect()
    }
}

/// `eps_bar_i = eps_i - (1/n) sum_k eps_k` (0-based `i`).
pub fn project_eps(i: usize, n: usize) -> WeightPoint {
    assert!(i < n, "index {i} out of range for rank {n}");
    let coords = (0..n).map(|k| C64::new(if k == i { 1.0 - 1.0 / n as f64 } else { -1.0 / n as f64 }, 0.0)).collect();
    WeightPoint { coords }
}

/// Integer multi-shift `sum_i k_i eps_bar_i`, canonical with `min k_i = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShiftKey(pub Vec<i32>);

impl ShiftKey {
    pub fn new(mut k: Vec<i32>) -> Self {
        let m = k.iter().copied().min().unwrap_or(0);
        for x in &mut k {
            *x -= m;
        }
        ShiftKey(k)
    }

    pub fn zero(n: usize) -> Self {
        ShiftKey(vec![0; n])
    }

    pub fn unit(i: usize, n: usize) -> Self {
        let mut k = vec![0; n];
        k[i] = 1;
        ShiftKey::new(k)
    }

    /// Indicator key of a subset.
    pub fn subset(set: &[usize], n: usize) -> Self {
        let mut k = vec![0; n];
        for &i in set {
            k[i] += 1;
        }
        ShiftKey::new(k)
    }

    pub fn add(&self, other: &ShiftKey) -> ShiftKey {
        ShiftKey::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }
}

/// Distance-from-singular-locus guard; samples are kept only when every guard exceeds `10 tol_identity`.
pub type Guard<'a> = &'a dyn Fn(&WeightPoint) -> f64;

/// Seeded source of generic parameters.
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn real(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    /// Complex number with real and imaginary parts uniform in `[-r, r]`.
    pub fn complex(&mut self, r: f64) -> C64 {
        C64::new(self.real(-r, r), self.real(-r, r))
    }

    /// A spectral parameter kept at least `margin` away from `Z + Z tau`.
    pub fn spectral(&mut self, ctx: &Context, margin: f64) -> C64 {
        loop {
            let u = self.complex(0.45);
            if crate::context::lattice_distance(u, ctx.tau) > margin {
                return u;
            }
        }
    }

    fn raw_point(&mut self, n: usize) -> WeightPoint {
        WeightPoint::new((0..n).map(|_| self.complex(0.4)).collect())
    }

    /// A generic weight point satisfying `guards` (defaults: `|theta(lambda_ij)|` away from 0).
    pub fn generic_point(&mut self, ctx: &Context, guards: &[Guard<'_>]) -> Result<WeightPoint> {
        let floor = 10.0 * ctx.tol_identity;
        let mut last = String::new();
        for _ in 0..1000 {
            let p = self.raw_point(ctx.n);
            let d = default_guard(&p, ctx);
            if d <= floor.max(0.05) {
                last = format!("default theta guard {d:.3e}");
                continue;
            }
            if let Some((k, v)) = guards.iter().enumerate().map(|(k, g)| (k, g(&p))).find(|(_, v)| !(*v > floor)) {
                last = format!("guard #{k} value {v:.3e}");
                continue;
            }
            return Ok(p);
        }
        Err(Error::SamplingExhausted(last))
    }

    pub fn generic_points(&mut self, ctx: &Context, count: usize) -> Result<Vec<WeightPoint>> {
        (0..count).map(|_| self.generic_point(ctx, &[])).collect()
    }

    /// A random vector of `h*` with entries of size `r`, used for exponential test functions.
    pub fn direction(&mut self, n: usize, r: f64) -> WeightPoint {
        WeightPoint::new((0..n).map(|_| self.complex(r)).collect())
    }
}

/// `min_{i != j} |theta(lambda_ij)|`.
pub fn default_guard(p: &WeightPoint, ctx: &Context) -> f64 {
    let n = p.n();
    let mut m = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            m = m.min(theta(p.lambda_ij(i, j), ctx).norm());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &WeightPoint, b: &WeightPoint) -> bool {
        a.coords.iter().zip(&b.coords).all(|(x, y)| (x - y).norm() < 1e-14)
    }

    #[test]
    fn projections_sum_to_zero_and_pair_correctly() {
        let n = 4;
        let mut s = WeightPoint::zero(n);
        for i in 0..n {
            s = s.add_scaled(&project_eps(i, n), C64::new(1.0, 0.0));
        }
        assert!(s.coords.iter().all(|c| c.norm() < 1e-15));
        for i in 0..n {
            for j in 0..n {
                let p = project_eps(i, n).pair(&project_eps(j, n)).re;
                let want = if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64;
                assert!((p - want).abs() < 1e-15);
            }
        }
        let root = project_eps(0, n).add_scaled(&project_eps(2, n), C64::new(-1.0, 0.0));
        assert!((root.pair(&root).re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn shifting_by_all_ones_is_identity() {
        let p = WeightPoint::new(vec![C64::new(0.1, 0.2), C64::new(-0.3, 0.0), C64::new(0.05, -0.1)]);
        let h = C64::new(0.17, 0.2);
        assert!(close(&p.shifted(&ShiftKey::new(vec![1, 1, 1]), h), &p));
        assert_eq!(ShiftKey::new(vec![2, 1, 0]), ShiftKey::new(vec![3, 2, 1]));
        let a = p.shifted(&ShiftKey::new(vec![2, 1, 0]), h);
        let b = p.shifted(&ShiftKey(vec![3, 2, 1]), h);
        assert!(close(&a, &b));
    }

    #[test]
    fn shifts_are_additive_and_move_lambda_ij() {
        let p = WeightPoint::new(vec![C64::new(0.1, 0.2), C64::new(-0.3, 0.0), C64::new(0.05, -0.1)]);
        let h = C64::new(0.17, 0.2);
        let two = p.shifted_along(0, h).shifted_along(2, h);
        let one = p.shifted(&ShiftKey::unit(0, 3).add(&ShiftKey::unit(2, 3)), h);
        assert!(close(&two, &one));
        let q = p.shifted_along(1, h);
        assert!((q.lambda_ij(1, 0) - p.lambda_ij(1, 0) - h).norm() < 1e-15);
        assert!((q.lambda_ij(0, 2) - p.lambda_ij(0, 2)).norm() < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic_and_guarded() {
        let ctx = Context::new(3).unwrap();
        let a = Sampler::new(7).generic_point(&ctx, &[]).unwrap();
        let b = Sampler::new(7).generic_point(&ctx, &[]).unwrap();
        assert_eq!(a, b);
        assert!(default_guard(&a, &ctx) > 0.05);
        assert!(a.coords.iter().sum::<C64>().norm() < 1e-15);
        let never: Guard = &|_| 0.0;
        assert!(matches!(Sampler::new(1).generic_point(&ctx, &[never]), Err(Error::SamplingExhausted(_))));
    }

    #[test]
    fn canonicalize_idempotent() {
        let mut p = WeightPoint::new(vec![C64::new(1.0, 2.0), C64::new(3.0, -1.0)]);
        let q = p.clone();
        p.canonicalize();
        assert!(close(&p, &q));
    }
}
