//! Belavin's elliptic R-matrix, the `A_{n-1}^{(1)}` face weights, intertwining
//! vectors and the fusion antisymmetrizers on both sides of the vertex-face map.

use std::f64::consts::PI;

use crate::context::{Context, C64};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::theta::{i_eta, theta, theta_char, theta_level_n};
use crate::weight::WeightPoint;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `R(u)^{ij}_{i'j'}` stored densely; `R e^i (x) e^j = sum e^{i'} (x) e^{j'} R^{ij}_{i'j'}`.
#[derive(Debug, Clone)]
pub struct RTensor {
    pub n: usize,
    pub u: C64,
    entries: Vec<C64>,
}

impl RTensor {
    #[inline]
    pub fn get(&self, i: usize, j: usize, ip: usize, jp: usize) -> C64 {
        let n = self.n;
        self.entries[((i * n + j) * n + ip) * n + jp]
    }

    /// Matrix on `V (x) V` with row `(i', j')` and column `(i, j)`.
    pub fn matrix(&self) -> CMatrix {
        let n = self.n;
        linalg::from_fn(n * n, n * n, |row, col| self.get(col / n, col % n, row / n, row % n))
    }

    /// `R_check = P R`, sending `V(u) (x) V(v)` to `V(v) (x) V(u)`.
    pub fn check_matrix(&self) -> CMatrix {
        let n = self.n;
        linalg::from_fn(n * n, n * n, |row, col| self.get(col / n, col % n, row % n, row / n))
    }
}

/// Builds `R(u)` from the explicit theta formula, normalized so that `R(0) = P`.
pub fn build_r(u: C64, ctx: &Context) -> Result<RTensor> {
    let n = ctx.n;
    let h = ctx.hbar;
    let ni = n as i64;
    let at_u_h: Vec<C64> = (0..ni).map(|m| theta_char(m, u + h, ctx).value).collect();
    let at_h: Vec<C64> = (0..ni).map(|m| theta_char(m, h, ctx).value).collect();
    let at_u: Vec<C64> = (0..ni).map(|m| theta_char(m, u, ctx).value).collect();
    if let Some(m) = at_h.iter().position(|z| z.norm() < ctx.tol_identity) {
        return Err(Error::Singular(format!("theta^({m})(hbar) vanishes")));
    }
    let norm: C64 = (1..ni).map(|k| theta_char(k, ZERO, ctx).value).product();
    let mut entries = vec![ZERO; n * n * n * n];
    let idx = |a: i64| a.rem_euclid(ni) as usize;
    for i in 0..n {
        for j in 0..n {
            for ip in 0..n {
                for jp in 0..n {
                    if (i + j) % n != (ip + jp) % n {
                        continue;
                    }
                    let skip = idx(i as i64 - jp as i64);
                    let prod: C64 = (0..n).filter(|&k| k != skip).map(|k| at_u[k]).product();
                    let v = at_u_h[idx(ip as i64 - jp as i64)] / at_h[idx(ip as i64 - i as i64)] * prod / norm;
                    entries[((i * n + j) * n + ip) * n + jp] = v;
                }
            }
        }
    }
    Ok(RTensor { n, u, entries })
}

/// Clock matrix `g = diag(omega^k)`, `omega = e^{2 pi i / n}`.
pub fn clock(n: usize) -> CMatrix {
    linalg::from_fn(n, n, |a, b| if a == b { C64::from_polar(1.0, 2.0 * PI * a as f64 / n as f64) } else { ZERO })
}

/// Shift matrix `h e^k = e^{k+1}`.
pub fn shift_matrix(n: usize) -> CMatrix {
    linalg::from_fn(n, n, |a, b| if a == (b + 1) % n { ONE } else { ZERO })
}

fn permutation(n: usize) -> CMatrix {
    linalg::from_fn(n * n, n * n, |row, col| if row == (col % n) * n + col / n { ONE } else { ZERO })
}

/// Residuals of the five characterizing properties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacterizationResiduals {
    pub at_zero: f64,
    pub symmetry_g: f64,
    pub symmetry_h: f64,
    pub shift_one: f64,
    pub shift_tau: f64,
    pub holomorphy: f64,
}

impl CharacterizationResiduals {
    pub fn max(&self) -> f64 {
        [self.at_zero, self.symmetry_g, self.symmetry_h, self.shift_one, self.shift_tau, self.holomorphy]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// `R(0) = P`, `(x (x) x) R (x (x) x)^{-1} = R`, both quasi-periodicity laws and holomorphy
/// (mean-value property on a circle of radius 0.05 around `u`).
pub fn verify_characterization(u: C64, ctx: &Context) -> Result<CharacterizationResiduals> {
    let n = ctx.n;
    let r = build_r(u, ctx)?.matrix();
    let at_zero = linalg::rel_diff(&build_r(ZERO, ctx)?.matrix(), &permutation(n));
    let g = clock(n);
    let hm = shift_matrix(n);
    let gi = linalg::inverse(&g).expect("unitary");
    let hi = linalg::inverse(&hm).expect("permutation");
    let conj = |x: &CMatrix, xi: &CMatrix| linalg::kron(x, x) * &r * linalg::kron(xi, xi);
    let symmetry_g = linalg::rel_diff(&conj(&g, &gi), &r);
    let symmetry_h = linalg::rel_diff(&conj(&hm, &hi), &r);
    let (shift_one, shift_tau) = verify_r_quasiperiodicity(u, ctx)?;
    let samples = 32;
    let radius = 0.05;
    let mut mean = CMatrix::zeros(n * n, n * n);
    for k in 0..samples {
        let z = u + C64::from_polar(radius, 2.0 * PI * k as f64 / samples as f64);
        mean += build_r(z, ctx)?.matrix();
    }
    mean /= C64::new(samples as f64, 0.0);
    let holomorphy = linalg::rel_diff(&mean, &r);
    Ok(CharacterizationResiduals { at_zero, symmetry_g, symmetry_h, shift_one, shift_tau, holomorphy })
}

/// Residuals of `R(u+1) = -(g (x) 1)^{-1} R(u) (g (x) 1)` and
/// `R(u+tau) = (h (x) 1) R(u) (h (x) 1)^{-1} / (-e^{2 pi i (u + hbar/n + tau/2)})`.
pub fn verify_r_quasiperiodicity(u: C64, ctx: &Context) -> Result<(f64, f64)> {
    let n = ctx.n;
    let r = build_r(u, ctx)?.matrix();
    let id = linalg::identity(n);
    let g1 = linalg::kron(&clock(n), &id);
    let g1i = linalg::inverse(&g1).expect("unitary");
    let h1 = linalg::kron(&shift_matrix(n), &id);
    let h1i = linalg::inverse(&h1).expect("permutation");
    let one = -(&g1i * &r * &g1);
    let shift_one = linalg::rel_diff(&build_r(u + 1.0, ctx)?.matrix(), &one);
    let factor = -(C64::new(0.0, 2.0 * PI) * (u + ctx.hbar / n as f64 + ctx.tau / 2.0)).exp();
    let tau = (&h1 * &r * &h1i) / factor;
    let shift_tau = linalg::rel_diff(&build_r(u + ctx.tau, ctx)?.matrix(), &tau);
    Ok((shift_one, shift_tau))
}

/// `I_{n^p} (x) m (x) I_{n^rest}` acting on `k` tensor factors.
fn embed(m: &CMatrix, pos: usize, k: usize, n: usize) -> CMatrix {
    let left = linalg::identity(n.pow(pos as u32));
    let right = linalg::identity(n.pow((k - pos - 2) as u32));
    linalg::kron(&linalg::kron(&left, m), &right)
}

/// Residual of the braid-form Yang-Baxter equation on `V^{(x) 3}`.
pub fn verify_ybe(u: C64, v: C64, w: C64, ctx: &Context) -> Result<f64> {
    let n = ctx.n;
    let ruv = build_r(u - v, ctx)?.check_matrix();
    let ruw = build_r(u - w, ctx)?.check_matrix();
    let rvw = build_r(v - w, ctx)?.check_matrix();
    let lhs = embed(&ruv, 1, 3, n) * embed(&ruw, 0, 3, n) * embed(&rvw, 1, 3, n);
    let rhs = embed(&rvw, 0, 3, n) * embed(&ruw, 1, 3, n) * embed(&ruv, 0, 3, n);
    Ok(linalg::rel_diff(&lhs, &rhs))
}

/// Classification of admissible faces with steps `(a, b)` replaced by `(a', b')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceType {
    /// `a = b = a' = b'`.
    Diagonal,
    /// `a != b`, `(a', b') = (a, b)`.
    Straight,
    /// `a != b`, `(a', b') = (b, a)`.
    Crossed,
}

pub fn face_type(a: usize, b: usize, ap: usize, bp: usize) -> Option<FaceType> {
    if a == b {
        (ap == a && bp == a).then_some(FaceType::Diagonal)
    } else if ap == a && bp == b {
        Some(FaceType::Straight)
    } else if ap == b && bp == a {
        Some(FaceType::Crossed)
    } else {
        None
    }
}

/// Face weight for the path `lambda -> lambda + hbar eps_a -> + hbar eps_b` replaced by
/// `lambda -> lambda + hbar eps_{a'} -> + hbar eps_{b'}`; zero when inadmissible.
pub fn face_weight(lambda: &WeightPoint, steps: (usize, usize), out: (usize, usize), u: C64, ctx: &Context) -> Result<C64> {
    let (a, b) = steps;
    let h = ctx.hbar;
    let Some(kind) = face_type(a, b, out.0, out.1) else { return Ok(ZERO) };
    let th_h = theta(h, ctx);
    let lab = lambda.lambda_ij(a, b);
    if kind != FaceType::Diagonal {
        let d = theta(lab, ctx);
        if d.norm() < ctx.tol_identity {
            return Err(Error::Singular(format!("theta(lambda_{a}{b}) vanishes")));
        }
        return Ok(match kind {
            FaceType::Straight => theta(lab - u, ctx) / d,
            _ => theta(u, ctx) / th_h * theta(h + lab, ctx) / d,
        });
    }
    Ok(theta(u + h, ctx) / th_h)
}

/// Outgoing intertwiner matrix `phi[j][k] = theta_{j+1}(u/n - lambda_k) / (i eta)` and its inverse.
#[derive(Debug, Clone)]
pub struct IntertwinerPair {
    pub u: C64,
    pub mu: WeightPoint,
    pub phi: CMatrix,
    pub phibar: CMatrix,
    pub condition: f64,
}

pub const MAX_CONDITION: f64 = 1e8;

pub fn phi_matrix(u: C64, mu: &WeightPoint, ctx: &Context) -> CMatrix {
    let n = ctx.n;
    let ie = i_eta(ctx);
    linalg::from_fn(n, n, |j, k| theta_level_n(j as i64 + 1, u / n as f64 - mu.coords[k], ctx).value / ie)
}

pub fn intertwiners(u: C64, mu: &WeightPoint, ctx: &Context) -> Result<IntertwinerPair> {
    let phi = phi_matrix(u, mu, ctx);
    let condition = linalg::condition_number(&phi);
    if !(condition < MAX_CONDITION) {
        return Err(Error::Singular(format!("intertwiner condition number {condition:.3e}")));
    }
    let phibar = linalg::inverse(&phi).ok_or_else(|| Error::Singular("intertwiner matrix not invertible".into()))?;
    Ok(IntertwinerPair { u, mu: mu.clone(), phi, phibar, condition })
}

/// Digits of `index` in base `n`, most significant first.
pub fn digits(mut index: usize, n: usize, k: usize) -> Vec<usize> {
    let mut d = vec![0; k];
    for slot in d.iter_mut().rev() {
        *slot = index % n;
        index /= n;
    }
    d
}

pub fn undigits(d: &[usize], n: usize) -> usize {
    d.iter().fold(0, |acc, &x| acc * n + x)
}

/// Path-to-vector map: rows are vector multi-indices, columns step sequences from `lambda`;
/// entry `prod_q phi_{u_q}(lambda_q)[i_q][s_q]` with `lambda_q` the weight reached after `q` steps.
pub fn path_to_vector(params: &[C64], lambda: &WeightPoint, ctx: &Context) -> Result<CMatrix> {
    let n = ctx.n;
    let k = params.len();
    let dim = n.pow(k as u32);
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let steps = digits(col, n, k);
        let mut mats = Vec::with_capacity(k);
        let mut at = lambda.clone();
        for (q, &s) in steps.iter().enumerate() {
            mats.push(phi_matrix(params[q], &at, ctx));
            at = at.shifted_along(s, ctx.hbar);
        }
        for row in 0..dim {
            let idx = digits(row, n, k);
            out[(row, col)] = (0..k).map(|q| mats[q][(idx[q], steps[q])]).product();
        }
    }
    Ok(out)
}

/// Vector-to-path map built from the inverse intertwiners: the left inverse of [`path_to_vector`].
pub fn vector_to_path(params: &[C64], lambda: &WeightPoint, ctx: &Context) -> Result<CMatrix> {
    let n = ctx.n;
    let k = params.len();
    let dim = n.pow(k as u32);
    let mut out = CMatrix::zeros(dim, dim);
    for row in 0..dim {
        let steps = digits(row, n, k);
        let mut mats = Vec::with_capacity(k);
        let mut at = lambda.clone();
        for (q, &s) in steps.iter().enumerate() {
            mats.push(intertwiners(params[q], &at, ctx)?.phibar);
            at = at.shifted_along(s, ctx.hbar);
        }
        for col in 0..dim {
            let idx = digits(col, n, k);
            out[(row, col)] = (0..k).map(|q| mats[q][(steps[q], idx[q])]).product();
        }
    }
    Ok(out)
}

/// Face operator with spectral parameter `x` acting on steps `pos, pos+1` of `k`-step paths from `lambda`.
pub fn face_operator(x: C64, pos: usize, k: usize, lambda: &WeightPoint, ctx: &Context) -> Result<CMatrix> {
    let n = ctx.n;
    let dim = n.pow(k as u32);
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let steps = digits(col, n, k);
        let mut at = lambda.clone();
        for &s in &steps[..pos] {
            at = at.shifted_along(s, ctx.hbar);
        }
        let (a, b) = (steps[pos], steps[pos + 1]);
        let targets: &[(usize, usize)] = if a == b { &[(a, a)] } else { &[(a, b), (b, a)] };
        for &(ap, bp) in targets {
            let w = face_weight(&at, (a, b), (ap, bp), x, ctx)?;
            let mut t = steps.clone();
            t[pos] = ap;
            t[pos + 1] = bp;
            out[(undigits(&t, n), col)] += w;
        }
    }
    Ok(out)
}

/// Residual of `R_check(u-v) Psi_{u,v} = Psi_{v,u} W(u-v)` (outgoing) and of the dual
/// relation `Psi^*_{v,u} R_check(u-v) = W(u-v) Psi^*_{u,v}` (incoming); returns the larger.
pub fn verify_vertex_face(u: C64, v: C64, lambda: &WeightPoint, ctx: &Context) -> Result<(f64, f64)> {
    let rc = build_r(u - v, ctx)?.check_matrix();
    let w = face_operator(u - v, 0, 2, lambda, ctx)?;
    let out_uv = path_to_vector(&[u, v], lambda, ctx)?;
    let out_vu = path_to_vector(&[v, u], lambda, ctx)?;
    let outgoing = linalg::rel_diff(&(&rc * &out_uv), &(&out_vu * &w));
    let in_uv = vector_to_path(&[u, v], lambda, ctx)?;
    let in_vu = vector_to_path(&[v, u], lambda, ctx)?;
    let incoming = linalg::rel_diff(&(&in_vu * &rc), &(&w * &in_uv));
    Ok((outgoing, incoming))
}

/// Residual of the face-type Yang-Baxter equation on 3-step paths from `lambda`.
pub fn verify_face_ybe(u: C64, v: C64, w: C64, lambda: &WeightPoint, ctx: &Context) -> Result<f64> {
    let f = |x: C64, pos: usize| face_operator(x, pos, 3, lambda, ctx);
    let lhs = f(u - v, 1)? * f(u - w, 0)? * f(v - w, 1)?;
    let rhs = f(v - w, 0)? * f(u - w, 1)? * f(u - v, 0)?;
    Ok(linalg::rel_diff(&lhs, &rhs))
}

/// Half twist of `k` factors with parameters `params`: the rightmost factor is carried to the
/// front, then the new rightmost to the second slot, and so on. `swap(x, pos)` must return the
/// exchange operator with spectral parameter `x` on factors `pos, pos+1`.
fn half_twist(params: &[C64], dim: usize, mut swap: impl FnMut(C64, usize) -> Result<CMatrix>) -> Result<CMatrix> {
    let k = params.len();
    let mut labels = params.to_vec();
    let mut acc = linalg::identity(dim);
    for target in 0..k.saturating_sub(1) {
        for pos in (target..k - 1).rev() {
            let op = swap(labels[pos] - labels[pos + 1], pos)?;
            acc = op * acc;
            labels.swap(pos, pos + 1);
        }
    }
    Ok(acc)
}

/// Spectral parameters `(u - (k-1) hbar, ..., u - hbar, u)`.
pub fn fusion_params(u: C64, k: usize, ctx: &Context) -> Vec<C64> {
    (0..k).map(|q| u - ctx.hbar * (k - 1 - q) as f64).collect()
}

/// Vertex fusion operator `pi_{1^k}` on `V^{(x) k}`; independent of `u`.
pub fn antisymmetrizer(k: usize, u: C64, ctx: &Context) -> Result<CMatrix> {
    let n = ctx.n;
    let params = fusion_params(u, k, ctx);
    half_twist(&params, n.pow(k as u32), |x, pos| Ok(embed(&build_r(x, ctx)?.check_matrix(), pos, k, n)))
}

/// Face fusion operator `Pi_{1^k}` on `k`-step paths from `lambda`.
pub fn face_antisymmetrizer(k: usize, u: C64, lambda: &WeightPoint, ctx: &Context) -> Result<CMatrix> {
    let params = fusion_params(u, k, ctx);
    half_twist(&params, ctx.n.pow(k as u32), |x, pos| face_operator(x, pos, k, lambda, ctx))
}

/// Residual of `pi_{1^k} Psi(u_1..u_k) = Psi(u_k..u_1) Pi_{1^k}`.
pub fn verify_fusion_commutation(k: usize, u: C64, lambda: &WeightPoint, ctx: &Context) -> Result<f64> {
    let params = fusion_params(u, k, ctx);
    let rev: Vec<C64> = params.iter().rev().copied().collect();
    let lhs = antisymmetrizer(k, u, ctx)? * path_to_vector(&params, lambda, ctx)?;
    let rhs = path_to_vector(&rev, lambda, ctx)? * face_antisymmetrizer(k, u, lambda, ctx)?;
    Ok(linalg::rel_diff(&lhs, &rhs))
}

/// Largest entry of the output-index symmetrization of `pi`, relative to `max|pi|`.
pub fn antisymmetry_defect(pi: &CMatrix, k: usize, n: usize) -> f64 {
    let dim = n.pow(k as u32);
    let mut worst: f64 = 0.0;
    for row in 0..dim {
        let d = digits(row, n, k);
        for a in 0..k {
            for b in (a + 1)..k {
                let mut t = d.clone();
                t.swap(a, b);
                let other = undigits(&t, n);
                for col in 0..dim {
                    worst = worst.max((pi[(row, col)] + pi[(other, col)]).norm());
                }
            }
        }
    }
    worst / linalg::max_abs(pi).max(1e-300)
}

/// `max |phibar phi - 1|` and `max |phi phibar - 1|`.
pub fn duality_residuals(pair: &IntertwinerPair) -> (f64, f64) {
    let n = pair.phi.nrows();
    let id = linalg::identity(n);
    (
        linalg::max_abs(&(&pair.phibar * &pair.phi - &id)),
        linalg::max_abs(&(&pair.phi * &pair.phibar - &id)),
    )
}

/// Largest entry violating `i + j = i' + j' mod n`.
pub fn ice_rule_violation(r: &RTensor) -> f64 {
    let n = r.n;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for ip in 0..n {
                for jp in 0..n {
                    if (i + j) % n != (ip + jp) % n {
                        worst = worst.max(r.get(i, j, ip, jp).norm());
                    }
                }
            }
        }
    }
    worst
}

/// `det phi` against the Vandermonde closed form with `u_k = u/n - lambda_k`.
pub fn intertwiner_det_residual(u: C64, mu: &WeightPoint, ctx: &Context) -> Option<f64> {
    let us: Vec<C64> = mu.coords.iter().map(|&m| u / ctx.n as f64 - m).collect();
    crate::theta::verify_vandermonde(&us, ctx)
}
