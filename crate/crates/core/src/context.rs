//! Global numerical parameters shared by every evaluator.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const DEFAULT_TAU: C64 = C64::new(0.1, 0.8);
pub const DEFAULT_HBAR: C64 = C64::new(0.173, 0.219);
pub const DEFAULT_C: C64 = C64::new(0.61, -0.23);
pub const DEFAULT_TRUNC: usize = 24;

/// Rank, moduli and tolerances. Immutable once built; cheap to clone.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub n: usize,
    pub tau: C64,
    pub hbar: C64,
    pub c: C64,
    pub trunc: usize,
    pub tol_series: f64,
    pub tol_identity: f64,
}

impl Context {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_params(n, DEFAULT_TAU, DEFAULT_HBAR, DEFAULT_C)
    }

    pub fn with_params(n: usize, tau: C64, hbar: C64, c: C64) -> Result<Self> {
        let ctx = Context {
            n,
            tau,
            hbar,
            c,
            trunc: DEFAULT_TRUNC,
            tol_series: 1e-13,
            tol_identity: 1e-8,
        };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("rank n = {} must be at least 2", self.n)));
        }
        if !(self.tau.im > 0.0) || !self.tau.re.is_finite() {
            return Err(Error::InvalidParameter(format!("Im tau = {} must be positive", self.tau.im)));
        }
        if !self.hbar.is_finite() || !self.c.is_finite() {
            return Err(Error::InvalidParameter("hbar and c must be finite".into()));
        }
        if lattice_distance(self.hbar, self.tau) < self.tol_identity {
            return Err(Error::InvalidParameter(format!("hbar = {} lies on the period lattice", self.hbar)));
        }
        if self.trunc == 0 {
            return Err(Error::InvalidParameter("trunc must be positive".into()));
        }
        if !(self.tol_series > 0.0) || !(self.tol_identity > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn with_c(&self, c: C64) -> Self {
        Context { c, ..self.clone() }
    }

    pub fn with_hbar(&self, hbar: C64) -> Self {
        Context { hbar, ..self.clone() }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Context { n, ..self.clone() }
    }

    pub fn with_trunc(&self, trunc: usize) -> Self {
        Context { trunc, ..self.clone() }
    }

    /// The Macdonald coupling `c/n`.
    pub fn coupling(&self) -> C64 {
        self.c / self.n as f64
    }
}

/// Distance from `z` to the nearest point of `Z + Z tau`.
pub fn lattice_distance(z: C64, tau: C64) -> f64 {
    let b = z.im / tau.im;
    let a = z.re - b * tau.re;
    let mut best = f64::INFINITY;
    for db in [-1.0, 0.0, 1.0] {
        for da in [-1.0, 0.0, 1.0] {
            let p = C64::new(a.round() + da, 0.0) + tau * (b.round() + db);
            best = best.min((z - p).norm());
        }
    }
    best
}

/// `|a - b| / (|a| + |b| + 1e-300)`.
pub fn rel_residual(a: C64, b: C64) -> f64 {
    (a - b).norm() / (a.norm() + b.norm() + 1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_lower_half_plane() {
        let r = Context::with_params(2, C64::new(0.0, -1.0), DEFAULT_HBAR, DEFAULT_C);
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn rejects_lattice_hbar() {
        let tau = DEFAULT_TAU;
        assert!(Context::with_params(3, tau, DEFAULT_HBAR, DEFAULT_C).is_ok());
        let r = Context::with_params(3, tau, C64::new(2.0, 0.0) - tau, DEFAULT_C);
        assert!(r.is_err());
    }

    #[test]
    fn rank_one_rejected() {
        assert!(Context::new(1).is_err());
        assert!(Context::new(2).is_ok());
    }
}
