//! Named verification suites driving the module checks at seeded generic parameters.

use std::time::Instant;

use crate::belavin::{
    antisymmetrizer, antisymmetry_defect, duality_residuals, intertwiner_det_residual, intertwiners, verify_characterization,
    verify_face_ybe, verify_fusion_commutation, verify_vertex_face, verify_ybe,
};
use crate::config::Config;
use crate::context::{lattice_distance, rel_residual, Context, C64};
use crate::error::{Error, Result};
use crate::report::{Bound, Case, Params, SuiteReport};
use crate::theta::{
    dedekind_eta, eta_log_sum, jacobi_theta, qfay_sides, fay_sides, theta, theta_char, theta_ml, theta_ml_reference,
    triple_product, verify_vandermonde, weierstrass_p,
};
use crate::theta_space::{
    displayed_dimension, gram_rank, m1_eigen_check, multiset_count, quasi_periodicity, random_root, sample_points,
    verify_l_invariance, verify_level_one_coefficients, verify_m1_invariance, verify_module_iso, CharacterBasis,
};
use crate::transfer::{
    generic_samples, verify_cm_limit, verify_commute, verify_d_commute, verify_d_relations, verify_displayed_d,
    verify_full_shift_commutes, verify_genfunc, verify_genfunc_coefficients, verify_genfunc_tilde, verify_hamiltonian_identity,
    verify_krichever, verify_l_tilde, verify_macdonald_limit, verify_phi_ratio, verify_rll, verify_ruijsenaars,
    verify_sekiguchi, verify_trace_closed, verify_u_independence,
};
use crate::weight::{Sampler, WeightPoint};

pub const SUITES: [&str; 18] = [
    "theta",
    "ybe",
    "face-ybe",
    "intertwiner",
    "rll",
    "trace-closed",
    "commute",
    "qfay",
    "fay",
    "vandermonde",
    "genfunc",
    "ruijsenaars",
    "krichever",
    "cm-limit",
    "macdonald-limit",
    "debiard",
    "theta-space",
    "eigen-l1",
];

/// Ranks covered by `verify all`.
pub const ALL_RANKS: [usize; 2] = [2, 3];

const KRICHEVER_TOL: f64 = 1e-5;
const CM_LIMIT_TOL: f64 = 1e-4;
const RUIJSENAARS_TOL: f64 = 1e-6;
const CLOSED_FORM_TOL: f64 = 1e-7;
const FAY_TOL: f64 = 1e-9;
/// Minimum distance of every `lambda_ij` from the period lattice in the limit checks.
pub const LIMIT_DIVISOR_DISTANCE: f64 = 0.1;

struct Run {
    ctx: Context,
    s: Sampler,
    cases: Vec<Case>,
    notes: Vec<String>,
    u: C64,
    v: C64,
    t: C64,
}

impl Run {
    fn check(&mut self, name: impl Into<String>, r: Result<f64>, bound: Bound) {
        let name = name.into();
        let residual = match r {
            Ok(x) if x.is_nan() => {
                self.notes.push(format!("{name}: residual is NaN"));
                f64::NAN
            }
            Ok(x) => x,
            Err(e) => {
                self.notes.push(format!("{name}: {e}"));
                f64::NAN
            }
        };
        self.cases.push(Case { name, residual, absolute: None, bound });
    }

    fn below(&mut self, name: impl Into<String>, r: Result<f64>, tol: f64) {
        self.check(name, r, Bound::Below(tol));
    }

    fn above(&mut self, name: impl Into<String>, r: Result<f64>, floor: f64) {
        self.check(name, r, Bound::Above(floor));
    }

    /// Records `max rel` and `max abs` over side-by-side comparisons.
    fn sides(&mut self, name: impl Into<String>, pairs: Result<Vec<(C64, C64)>>, tol: f64) {
        let name = name.into();
        match pairs {
            Ok(p) => {
                let rel = p.iter().map(|&(a, b)| rel_residual(a, b)).fold(0.0, f64::max);
                let abs = p.iter().map(|&(a, b)| (a - b).norm()).fold(0.0, f64::max);
                self.cases.push(Case { name, residual: rel, absolute: Some(abs), bound: Bound::Below(tol) });
            }
            Err(e) => self.below(name, Err(e), tol),
        }
    }

    fn tol(&self) -> f64 {
        self.ctx.tol_identity
    }

    fn spectral(&mut self) -> C64 {
        self.s.spectral(&self.ctx, 0.1)
    }

    fn coupling(&mut self) -> C64 {
        C64::new(self.s.real(0.2, 1.2), self.s.real(-0.5, 0.5))
    }

    fn points(&mut self, count: usize, spectral: &[C64]) -> Result<Vec<WeightPoint>> {
        generic_samples(&self.ctx, &mut self.s, count, spectral)
    }

    fn directions(&mut self, count: usize, r: f64) -> Vec<WeightPoint> {
        (0..count).map(|_| self.s.direction(self.ctx.n, r)).collect()
    }
}

fn max_of(items: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut worst = 0.0f64;
    for r in items {
        let x = r?;
        worst = if x.is_nan() { f64::NAN } else { worst.max(x) };
    }
    Ok(worst)
}

fn suite_seed(seed: u64, suite: usize, n: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((suite as u64) << 32) ^ n as u64
}

/// Runs one named suite at the configured rank.
pub fn run_suite(name: &str, config: &Config) -> Result<SuiteReport> {
    run_suite_at(name, config, config.n)
}

pub fn run_suite_at(name: &str, config: &Config, n: usize) -> Result<SuiteReport> {
    let index = SUITES.iter().position(|s| *s == name).ok_or_else(|| Error::UnknownSuite(name.to_string()))?;
    let ctx = config.context_for(n)?;
    let start = Instant::now();
    let mut s = Sampler::new(suite_seed(config.seed, index, n));
    let u = s.spectral(&ctx, 0.1);
    let v = s.spectral(&ctx, 0.1);
    let t = s.complex(1.0);
    let mut run = Run { ctx: ctx.clone(), s, cases: Vec::new(), notes: Vec::new(), u, v, t };
    match name {
        "theta" => theta_suite(&mut run),
        "ybe" => ybe_suite(&mut run),
        "face-ybe" => face_ybe_suite(&mut run),
        "intertwiner" => intertwiner_suite(&mut run),
        "rll" => rll_suite(&mut run),
        "trace-closed" => trace_closed_suite(&mut run),
        "commute" => commute_suite(&mut run),
        "qfay" => qfay_suite(&mut run),
        "fay" => fay_suite(&mut run),
        "vandermonde" => vandermonde_suite(&mut run),
        "genfunc" => genfunc_suite(&mut run),
        "ruijsenaars" => ruijsenaars_suite(&mut run),
        "krichever" => krichever_suite(&mut run),
        "cm-limit" => cm_limit_suite(&mut run),
        "macdonald-limit" => macdonald_suite(&mut run),
        "debiard" => debiard_suite(&mut run),
        "theta-space" => theta_space_suite(&mut run),
        "eigen-l1" => eigen_suite(&mut run),
        _ => unreachable!("suite names are validated above"),
    }
    let params = Params { n, tau: ctx.tau, hbar: ctx.hbar, c: ctx.c, u, v, t, trunc: ctx.trunc, seed: config.seed };
    Ok(SuiteReport {
        suite: name.to_string(),
        params,
        cases: run.cases,
        notes: run.notes,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Every suite at every rank in [`ALL_RANKS`], in a fixed order.
pub fn run_all(config: &Config, parallel: bool) -> Result<Vec<SuiteReport>> {
    let jobs: Vec<(usize, &str)> = ALL_RANKS.iter().flat_map(|&n| SUITES.iter().map(move |s| (n, *s))).collect();
    for &n in &ALL_RANKS {
        config.context_for(n)?;
    }
    if parallel {
        use rayon::prelude::*;
        jobs.par_iter().map(|&(n, s)| run_suite_at(s, config, n)).collect()
    } else {
        jobs.iter().map(|&(n, s)| run_suite_at(s, config, n)).collect()
    }
}

fn theta_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let us: Vec<C64> = (0..10).map(|_| r.spectral()).collect();
    r.sides("triple product", Ok(us.iter().map(|&u| (theta(u, &ctx), triple_product(u, ctx.tau, 400))).collect()), 1e-12);
    r.sides("odd", Ok(us.iter().map(|&u| (theta(-u, &ctx), -theta(u, &ctx))).collect()), 1e-12);
    r.sides("shift by 1", Ok(us.iter().map(|&u| (theta(u + 1.0, &ctx), -theta(u, &ctx))).collect()), 1e-12);
    let shift_tau = us
        .iter()
        .map(|&u| (theta(u + ctx.tau, &ctx), -(C64::new(0.0, -2.0 * std::f64::consts::PI) * (u + ctx.tau / 2.0)).exp() * theta(u, &ctx)))
        .collect();
    r.sides("shift by tau", Ok(shift_tau), 1e-11);
    let mut refs = Vec::new();
    for &u in &us {
        let m = r.s.real(-1.0, 1.0);
        let l = 1 + (r.s.real(0.0, 3.0) as u32).min(2);
        let reference = theta_ml_reference(m, l, u, ctx.tau, ctx.trunc as i64 + 10);
        refs.push(theta_ml(m, l, u, ctx.tau, ctx.trunc).map(|v| (v.value, reference)));
    }
    r.sides("theta_ml vs plain sum", refs.into_iter().collect(), 1e-12);
    let tail = max_of(us.iter().map(|&u| jacobi_theta(u, &ctx, 2).map(|v| v.tail_bound)));
    r.below("series tail bound", tail, ctx.tol_series);
    let zeros = max_of((0..ctx.n as i64).map(|j| Ok(theta_char(j, ctx.tau * j as f64, &ctx).value.norm())));
    r.below("character zeros", zeros, ctx.tol_identity);
    r.sides("eta product vs log sum", dedekind_eta(ctx.tau, ctx.trunc).map(|e| vec![(e.value, eta_log_sum(ctx.tau, 200))]), 1e-13);
    let wp = us.iter().map(|&u| Ok((weierstrass_p(u, &ctx)?, weierstrass_p(-u, &ctx)?))).collect();
    r.sides("weierstrass even", wp, 1e-10);
    let wp = us.iter().map(|&u| Ok((weierstrass_p(u, &ctx)?, weierstrass_p(u + ctx.tau, &ctx)?))).collect();
    r.sides("weierstrass tau-periodic", wp, 1e-10);
    let small = C64::new(1e-3, 0.0);
    r.below("weierstrass Laurent u^2 p(u) - 1 at |u| = 1e-3", weierstrass_p(small, &ctx).map(|p| (small * small * p - 1.0).norm()), 1e-4);
}

fn ybe_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let us: Vec<C64> = (0..10).map(|_| r.spectral()).collect();
    let ch: Vec<_> = us.iter().map(|&u| verify_characterization(u, &ctx)).collect();
    let pick = |f: fn(&crate::belavin::CharacterizationResiduals) -> f64| max_of(ch.iter().map(|c| c.as_ref().map(f).map_err(Clone::clone)));
    r.below("R(0) = P", pick(|c| c.at_zero), r.tol());
    r.below("g (x) g symmetry", pick(|c| c.symmetry_g), r.tol());
    r.below("h (x) h symmetry", pick(|c| c.symmetry_h), r.tol());
    r.below("u + 1 quasi-periodicity", pick(|c| c.shift_one), r.tol());
    r.below("u + tau quasi-periodicity", pick(|c| c.shift_tau), r.tol());
    r.below("holomorphy (mean value)", pick(|c| c.holomorphy), r.tol());
    let triples: Vec<(C64, C64, C64)> = (0..25).map(|_| (r.spectral(), r.spectral(), r.spectral())).collect();
    r.below("vertex Yang-Baxter", max_of(triples.iter().map(|&(a, b, c)| verify_ybe(a, b, c, &ctx))), r.tol());
}

fn face_ybe_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let mut worst = Vec::new();
    let mut vf = Vec::new();
    for _ in 0..25 {
        let (a, b, c) = (r.spectral(), r.spectral(), r.spectral());
        match r.s.generic_point(&ctx, &[]) {
            Ok(lam) => {
                worst.push(verify_face_ybe(a, b, c, &lam, &ctx));
                vf.push(verify_vertex_face(a, b, &lam, &ctx).map(|(x, y)| x.max(y)));
            }
            Err(e) => worst.push(Err(e)),
        }
    }
    r.below("face Yang-Baxter", max_of(worst), r.tol());
    r.below("vertex-face correspondence", max_of(vf), r.tol());
}

fn intertwiner_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let n = ctx.n;
    let mut dual = Vec::new();
    let mut det = Vec::new();
    let mut fusion = Vec::new();
    let mut defect = Vec::new();
    for _ in 0..5 {
        let u = r.spectral();
        let lam = match r.s.generic_point(&ctx, &[]) {
            Ok(l) => l,
            Err(e) => {
                dual.push(Err(e));
                continue;
            }
        };
        dual.push(intertwiners(u, &lam, &ctx).map(|p| {
            let (a, b) = duality_residuals(&p);
            a.max(b)
        }));
        det.push(intertwiner_det_residual(u, &lam, &ctx).ok_or_else(|| Error::Singular("degenerate determinant sample".into())));
        for k in 2..=n {
            fusion.push(verify_fusion_commutation(k, u, &lam, &ctx));
            defect.push(antisymmetrizer(k, u, &ctx).map(|pi| antisymmetry_defect(&pi, k, n)));
        }
    }
    r.below("phibar phi = phi phibar = 1", max_of(dual), r.tol());
    r.below("det phi against the Vandermonde form", max_of(det), r.tol());
    r.below("fusion commutes with intertwiners", max_of(fusion), r.tol());
    r.below("antisymmetrizer image is antisymmetric", max_of(defect), r.tol());
}

fn rll_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let mut out = Vec::new();
    for _ in 0..3 {
        let (u, v, c) = (r.spectral(), r.spectral(), r.coupling());
        let pts = r.points(5, &[u, v, u - v]);
        let dirs = r.directions(5, 0.5);
        out.push(pts.and_then(|p| verify_rll(c, u, v, &ctx, &p, &dirs)));
    }
    r.below("R(u-v) L(u) L(v) = L(v) L(u) R(u-v)", max_of(out), r.tol());
}

fn shifted_params(u: C64, n: usize, h: C64) -> Vec<C64> {
    (0..n).map(|k| u - h * k as f64).collect()
}

fn trace_closed_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let n = ctx.n;
    let mut per_d: Vec<Vec<Result<f64>>> = vec![Vec::new(); n + 1];
    let mut shift = Vec::new();
    let mut indep = Vec::new();
    for _ in 0..10 {
        let (c, u, u2) = (r.coupling(), r.spectral(), r.spectral());
        let mut spectral = shifted_params(u, n, ctx.hbar);
        spectral.extend(shifted_params(u2, n, ctx.hbar));
        let pts = match r.points(3, &spectral) {
            Ok(p) => p,
            Err(e) => {
                per_d[1].push(Err(e));
                continue;
            }
        };
        for (d, slot) in per_d.iter_mut().enumerate().skip(1) {
            slot.push(verify_trace_closed(c, u, d, &ctx, &pts));
        }
        shift.push(verify_full_shift_commutes(c, u, 1, &ctx, &pts));
        indep.push(verify_u_independence(c, u, u2, n, &ctx, &pts));
    }
    for (d, results) in per_d.into_iter().enumerate().skip(1) {
        r.below(format!("fused trace = closed form, d = {d}"), max_of(results), CLOSED_FORM_TOL);
    }
    r.below("[M_1, T_(1,...,1)] = 0", max_of(shift), r.tol());
    r.below("M_n(c|u) theta(u)/theta(u + c hbar) independent of u", max_of(indep), CLOSED_FORM_TOL);
}

fn commute_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let n = ctx.n;
    let (c, u, v) = (r.coupling(), r.u, r.v);
    let mut spectral = shifted_params(u, n, ctx.hbar);
    spectral.extend(shifted_params(v, n, ctx.hbar));
    let pts = r.points(4, &spectral);
    for d in 1..=n {
        for dp in d..=n {
            let res = pts.as_ref().map_err(Clone::clone).and_then(|p| verify_commute(c, u, v, d, dp, &ctx, p));
            r.below(format!("[M_{d}(c|u), M_{dp}(c|v)]"), res, r.tol());
        }
    }
}

fn random_args(s: &mut Sampler, d: usize) -> (Vec<C64>, Vec<C64>) {
    ((0..d).map(|_| s.complex(0.45)).collect(), (0..d).map(|_| s.complex(0.45)).collect())
}

fn qfay_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    for d in 1..=4 {
        let mut pairs = Vec::new();
        for _ in 0..50 {
            let u = r.spectral();
            let (l, m) = random_args(&mut r.s, d);
            pairs.push(qfay_sides(u, &l, &m, &ctx));
        }
        r.sides(format!("hbar-deformed determinant, d = {d}"), Ok(pairs), FAY_TOL);
    }
}

fn fay_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    for d in 1..=4 {
        let mut pairs = Vec::new();
        let mut skipped = 0;
        while pairs.len() < 50 && skipped < 1000 {
            let u = r.spectral();
            let (l, m) = random_args(&mut r.s, d);
            match fay_sides(u, &l, &m, &ctx) {
                Ok(p) => pairs.push(p),
                Err(_) => skipped += 1,
            }
        }
        r.sides(format!("Cauchy-Frobenius determinant, d = {d}"), Ok(pairs), FAY_TOL);
    }
}

fn vandermonde_suite(r: &mut Run) {
    let top = r.ctx.n.max(4);
    for n in 2..=top {
        let ctx = r.ctx.with_n(n);
        let mut out = Vec::new();
        for _ in 0..10 {
            let us: Vec<C64> = (0..n).map(|_| r.s.complex(0.45)).collect();
            out.push(verify_vandermonde(&us, &ctx).ok_or_else(|| Error::Singular("degenerate sample".into())));
        }
        r.below(format!("theta Vandermonde, n = {n}"), max_of(out), FAY_TOL);
    }
}

fn genfunc_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let (c, u) = (ctx.c, r.u);
    let pts = match r.points(4, &[u]) {
        Ok(p) => p,
        Err(e) => return r.below("sampling", Err(e), CLOSED_FORM_TOL),
    };
    let ts: Vec<C64> = std::iter::once(r.t).chain((0..4).map(|_| r.s.complex(1.0))).collect();
    r.below("det[L - t] = sum (-t)^(n-d) M_d, random t", max_of(ts.iter().map(|&t| verify_genfunc(c, u, t, &ctx, &pts))), CLOSED_FORM_TOL);
    r.below("det[L - t] at t = 0", verify_genfunc(c, u, C64::new(0.0, 0.0), &ctx, &pts), CLOSED_FORM_TOL);
    match verify_genfunc_coefficients(c, u, &ctx, &pts) {
        Ok(coeffs) => {
            for (k, x) in coeffs.into_iter().enumerate() {
                r.below(format!("coefficient of t^{k}"), Ok(x), CLOSED_FORM_TOL);
            }
        }
        Err(e) => r.below("coefficients", Err(e), CLOSED_FORM_TOL),
    }
    r.below("det[Ltilde - t] generating function", max_of(ts.iter().map(|&t| verify_genfunc_tilde(c, u, t, &ctx, &pts))), CLOSED_FORM_TOL);
}

fn debiard_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let (c, u) = (ctx.c, r.u);
    let pts = match r.points(4, &[u]) {
        Ok(p) => p,
        Err(e) => return r.below("sampling", Err(e), CLOSED_FORM_TOL),
    };
    let ts: Vec<C64> = std::iter::once(r.t).chain((0..4).map(|_| r.s.complex(1.0))).collect();
    r.below("Sekiguchi-Debiard determinant form", max_of(ts.iter().map(|&t| verify_sekiguchi(c, u, t, &ctx, &pts))), CLOSED_FORM_TOL);
    r.below("Ltilde closed form vs intertwiners", verify_l_tilde(c, u, &ctx, &pts), r.tol());
}

fn ruijsenaars_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let q = (C64::new(0.0, 2.0 * std::f64::consts::PI) * ctx.hbar).exp().norm();
    r.notes.push(format!("|q| = |exp(2 pi i hbar)| = {q:.6}"));
    if q > 0.5 {
        r.notes.push("|q| exceeds 0.5; the double products converge slowly".into());
    }
    let (c, u) = (ctx.c, r.u);
    let pts = match r.points(5, &[u]) {
        Ok(p) => p,
        Err(e) => return r.below("sampling", Err(e), RUIJSENAARS_TOL),
    };
    for d in 0..=ctx.n {
        r.below(format!("squared Phi conjugation, d = {d}"), max_of(pts.iter().map(|p| verify_ruijsenaars(c, u, d, p, &ctx))), RUIJSENAARS_TOL);
    }
    r.below("Phi shift ratio closed form", max_of(pts.iter().map(|p| verify_phi_ratio(p, c, &ctx))), RUIJSENAARS_TOL);
}

fn krichever_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let u = r.u;
    let pts = r.points(3, &[u]);
    let dirs = r.directions(2, 0.3);
    r.below(
        "d/dhbar of conjugated Ltilde = Krichever Lax matrix",
        pts.and_then(|p| verify_krichever(ctx.c, u, &ctx, &p, &dirs, 1e-3)),
        KRICHEVER_TOL,
    );
}

fn cm_limit_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let c = ctx.c;
    let tau = ctx.tau;
    let away = move |p: &WeightPoint| {
        let n = p.n();
        let d = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| lattice_distance(p.lambda_ij(i, j), tau)).fold(f64::INFINITY, f64::min);
        d - LIMIT_DIVISOR_DISTANCE
    };
    let pts: Result<Vec<WeightPoint>> = (0..4).map(|_| r.s.generic_point(&ctx, &[&away])).collect();
    let pts = match pts {
        Ok(p) => p,
        Err(e) => return r.below("sampling", Err(e), CM_LIMIT_TOL),
    };
    let dirs = r.directions(2, 0.5);
    let smooth = r.directions(2, 0.3);
    r.below("D[1], D[2] against displayed forms", verify_displayed_d(c, &ctx, &pts), 1e-10);
    r.below("[D[k], D[l]] = 0", verify_d_commute(c, &ctx, &pts), 1e-7);
    let rel = verify_d_relations(c, &ctx, &pts, &dirs);
    r.below("D[1] = -M_1'", rel.as_ref().map(|x| x.0).map_err(Clone::clone), r.tol());
    r.below("D[2] = (M_2'' - (n-1) M_1'')/2", rel.map(|x| x.1), r.tol());
    let h = verify_hamiltonian_identity(c, &ctx, &pts);
    r.below("H = D[1]^2 - 2 D[2]", h.as_ref().map(|x| x.0).map_err(Clone::clone), r.tol());
    r.above("displayed H (coupling -g(g+1)) differs", h.map(|x| x.1), 1e-3);
    let cm = verify_cm_limit(c, &ctx, &pts, &smooth, 1e-3);
    let half = verify_cm_limit(c, &ctx, &pts, &smooth, 5e-4);
    let order = match (&cm, &half) {
        (Ok(a), Ok(b)) => Ok((a.residual / b.residual).log2()),
        (Err(e), _) | (_, Err(e)) => Err(e.clone()),
    };
    r.above("observed order of the extrapolation error in hbar", order, 1.5);
    r.below("(M_1^2 - 2 M_2 - 2 M_1 + n)/hbar^2 -> H", cm.as_ref().map(|x| x.residual).map_err(Clone::clone), CM_LIMIT_TOL);
    r.above("limit against displayed H differs", cm.map(|x| x.residual_as_displayed), 1e-2);
    r.notes.push("D[d] compared after rescaling by (-c/n)^d; H uses coupling +2g(g+1), g = c/n".into());
    r.notes.push(format!("limit sampled at |lambda_ij - (Z + Z tau)| >= {LIMIT_DIVISOR_DISTANCE}; extrapolation steps hbar = 1e-3, 2e-3"));
}

fn macdonald_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let (c, u) = (ctx.c, r.u);
    let pts = match r.s.generic_points(&ctx, 5) {
        Ok(p) => p,
        Err(e) => return r.below("sampling", Err(e), FAY_TOL),
    };
    for d in 0..=ctx.n {
        r.below(format!("p = 0 coefficients = Macdonald, d = {d}"), max_of(pts.iter().map(|p| verify_macdonald_limit(c, u, d, p, &ctx))), FAY_TOL);
    }
}

fn theta_space_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let n = ctx.n;
    let u = r.u;
    let levels: &[usize] = if n == 2 { &[1, 2] } else { &[1] };
    for &l in levels {
        let basis = match CharacterBasis::new(n, l) {
            Ok(b) => b,
            Err(e) => return r.below("basis", Err(e), 0.5),
        };
        let count = 2 * displayed_dimension(n, l).max(basis.len());
        let rank = r.s.generic_points(&ctx, count).and_then(|p| gram_rank(&basis, &p, &ctx));
        r.below(format!("level {l}: rank - basis size"), rank.map(|k| (k as f64 - basis.len() as f64).abs()), 0.5);
        r.notes.push(format!(
            "level {l}: basis of {} multisets (= (l+n-1)!/(l!(n-1)!)); the displayed formula (l+n)!/(l!n!) gives {}",
            multiset_count(n, l),
            displayed_dimension(n, l)
        ));
        let mut qp = Vec::new();
        for k in 0..10 {
            let p = r.s.generic_point(&ctx, &[]);
            let alpha = random_root(&mut r.s, n);
            qp.push(p.map(|p| {
                let (a, b) = quasi_periodicity(&basis, k % basis.len(), &p, &alpha, &ctx);
                a.max(b)
            }));
        }
        r.below(format!("level {l}: quasi-periodicity"), max_of(qp), 1e-9);
        let inv = verify_l_invariance(l, u, &ctx, &mut r.s);
        r.below(format!("level {l}: L(l|u) preserves the space"), inv, CLOSED_FORM_TOL);
        let m1 = verify_m1_invariance(l, u, &ctx, &mut r.s);
        r.below(format!("level {l}: M_1(l|u) preserves the space"), m1.as_ref().map(|x| x.0).map_err(Clone::clone), CLOSED_FORM_TOL);
        r.above(format!("level {l}: negative control (exponential)"), m1.map(|x| x.1), 1e-2);
        let pts = sample_points(&ctx, &mut r.s, 5, u);
        let iso = pts.and_then(|p| verify_module_iso(l, u, &ctx, &p));
        r.below(format!("level {l}: module isomorphism"), iso.as_ref().map(|x| x.residual).map_err(Clone::clone), CLOSED_FORM_TOL);
        r.below(format!("level {l}: symmetrization respected"), iso.map(|x| x.ordering), CLOSED_FORM_TOL);
    }
}

fn eigen_suite(r: &mut Run) {
    let ctx = r.ctx.clone();
    let u = r.u;
    let pts = sample_points(&ctx, &mut r.s, 15, u);
    let res = pts.and_then(|p| m1_eigen_check(u, &ctx, &p));
    r.below("M_1(1|u) chi_j = E chi_j", res.as_ref().map(|x| x.0).map_err(Clone::clone), r.tol());
    r.below("eigenvalue independent of j", res.map(|x| x.1), 1e-9);
    let coeffs = verify_level_one_coefficients(u, &ctx, &mut r.s);
    let tol = r.tol();
    r.below("L(1|u) chi expansion = theta(hbar)/theta(u) R(u)", coeffs, tol);
}
