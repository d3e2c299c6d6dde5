use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use etl_core::config::Config;
use etl_core::report::{to_json, SuiteReport};
use etl_core::suites::{run_all, run_suite, SUITES};
use etl_core::Error;

/// Numerical verification of the elliptic theta, R-matrix, L-operator and
/// Macdonald-Ruijsenaars identities.
#[derive(Parser, Debug)]
#[command(name = "verify", version)]
struct Cli {
    /// Suite name, or `all` for every suite at n = 2 and n = 3.
    suite: String,
    /// Flat TOML file with any of the keys below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Run suites concurrently (`all` only); report content is unaffected.
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "tau_re", alias = "tau-re", allow_hyphen_values = true)]
    tau_re: Option<f64>,
    #[arg(long = "tau_im", alias = "tau-im", allow_hyphen_values = true)]
    tau_im: Option<f64>,
    #[arg(long = "hbar_re", alias = "hbar-re", allow_hyphen_values = true)]
    hbar_re: Option<f64>,
    #[arg(long = "hbar_im", alias = "hbar-im", allow_hyphen_values = true)]
    hbar_im: Option<f64>,
    #[arg(long = "c_re", alias = "c-re", allow_hyphen_values = true)]
    c_re: Option<f64>,
    #[arg(long = "c_im", alias = "c-im", allow_hyphen_values = true)]
    c_im: Option<f64>,
    #[arg(long)]
    trunc: Option<usize>,
    #[arg(long = "tol_series", alias = "tol-series")]
    tol_series: Option<f64>,
    #[arg(long = "tol_identity", alias = "tol-identity")]
    tol_identity: Option<f64>,
}

fn build_config(cli: &Cli) -> etl_core::Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    cfg.apply_env()?;
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = cli.$field { cfg.$field = v; })*};
    }
    set!(n, seed, tau_re, tau_im, hbar_re, hbar_im, c_re, c_im, trunc, tol_series, tol_identity);
    cfg.context()?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &Config) -> etl_core::Result<Vec<SuiteReport>> {
    if cli.suite == "all" {
        run_all(cfg, cli.parallel)
    } else {
        Ok(vec![run_suite(&cli.suite, cfg)?])
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let reports = match run(&cli, &cfg) {
        Ok(r) => r,
        Err(e @ Error::UnknownSuite(_)) => {
            eprintln!("error: {e}; known suites: all, {}", SUITES.join(", "));
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for r in &reports {
        eprintln!(
            "{:<5} {:<16} n={} worst={:.3e} ({:.2}s)",
            if r.pass() { "PASS" } else { "FAIL" },
            r.suite,
            r.params.n,
            r.worst_residual(),
            r.wall_time_s
        );
        for c in r.cases.iter().filter(|c| !c.pass()) {
            eprintln!("      failed case `{}`: residual {:e} vs {:?}", c.name, c.residual, c.bound);
        }
    }
    let json = to_json(&reports, start.elapsed().as_secs_f64());
    match &cli.json {
        Some(path) => {
            if let Err(e) = std::fs::write(path, json + "\n") {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => println!("{json}"),
    }
    if reports.iter().all(SuiteReport::pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
