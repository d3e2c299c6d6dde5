//! Flat key-value run configuration, read from TOML and overridable per key.

use serde::{Deserialize, Serialize};

use crate::context::{Context, C64, DEFAULT_C, DEFAULT_HBAR, DEFAULT_TAU, DEFAULT_TRUNC};
use crate::error::{Error, Result};

/// Environment variable overriding `trunc`.
pub const TRUNC_ENV: &str = "ETL_TRUNC";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub n: usize,
    pub tau_re: f64,
    pub tau_im: f64,
    pub hbar_re: f64,
    pub hbar_im: f64,
    pub c_re: f64,
    pub c_im: f64,
    pub trunc: usize,
    pub tol_series: f64,
    pub tol_identity: f64,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            n: 2,
            tau_re: DEFAULT_TAU.re,
            tau_im: DEFAULT_TAU.im,
            hbar_re: DEFAULT_HBAR.re,
            hbar_im: DEFAULT_HBAR.im,
            c_re: DEFAULT_C.re,
            c_im: DEFAULT_C.im,
            trunc: DEFAULT_TRUNC,
            tol_series: 1e-13,
            tol_identity: 1e-8,
            seed: 42,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Config::from_toml_str(&text)
    }

    /// Applies `ETL_TRUNC` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(TRUNC_ENV) {
            self.trunc = v.trim().parse().map_err(|_| Error::Config(format!("{TRUNC_ENV}={v} is not a positive integer")))?;
        }
        Ok(())
    }

    pub fn tau(&self) -> C64 {
        C64::new(self.tau_re, self.tau_im)
    }

    pub fn hbar(&self) -> C64 {
        C64::new(self.hbar_re, self.hbar_im)
    }

    pub fn c(&self) -> C64 {
        C64::new(self.c_re, self.c_im)
    }

    pub fn context(&self) -> Result<Context> {
        self.context_for(self.n)
    }

    pub fn context_for(&self, n: usize) -> Result<Context> {
        let ctx = Context {
            n,
            tau: self.tau(),
            hbar: self.hbar(),
            c: self.c(),
            trunc: self.trunc,
            tol_series: self.tol_series,
            tol_identity: self.tol_identity,
        };
        ctx.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c = Config::from_toml_str("n = 3\ntau_im = 1.1\nseed = 7\n").unwrap();
        assert_eq!(c.n, 3);
        assert_eq!(c.seed, 7);
        assert_eq!(c.tau(), C64::new(DEFAULT_TAU.re, 1.1));
        assert_eq!(c.trunc, DEFAULT_TRUNC);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_tau() {
        assert!(matches!(Config::from_toml_str("nn = 3"), Err(Error::Config(_))));
        let c = Config { tau_im: -1.0, ..Config::default() };
        assert!(matches!(c.context(), Err(Error::Config(_))));
    }
}
