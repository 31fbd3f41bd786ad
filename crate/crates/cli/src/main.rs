//! `srb-zeta`: SRB response curves of unimodal families from periodic orbits
//! and Ulam matrices.
//!
//! Exit codes: 0 success, 1 hypothesis violation, 2 numerical failure,
//! 3 configuration or usage error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use srb_core::config::{FamilySpec, RunConfig};
use srb_core::diagnostics::{check_uniformity, diagnose, UNIFORMITY_MARGIN};
use srb_core::orbits::{write_orbit_csv, OrbitTable};
use srb_core::response::{analyticity_report, response_curve, Grid, Method};
use srb_core::selftest::run_selftest;
use srb_core::ulam::{build_ulam, integrate_density, leading_eigenpair};
use srb_core::zeta::{inverse_zeta_series, leading_zero, TraceSums, FALLBACK_RADIUS};
use srb_core::{Error, ErrorClass};

#[derive(Parser)]
#[command(name = "srb-zeta", version, about = "SRB response of unimodal families via dynamical zeta functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ulam estimate of the weighted transfer operator's leading eigenpair at one (t, s).
    Density(Common),
    /// Periodic-orbit table up to period --p.
    Orbits(Common),
    /// Trace sums, inverse zeta series and leading zero at one (t, s).
    Zeta(Common),
    /// Hyperbolicity constants over a parameter grid.
    Diagnose(Common),
    /// Response curve and analyticity report.
    Sweep(Common),
    /// Closed-form oracle table.
    Selftest(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON run configuration (defaults to the Chebyshev map).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (CSV).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Truncation order, or the period bound for `orbits`.
    #[arg(long)]
    p: Option<usize>,
    /// Ulam bin count.
    #[arg(long)]
    n: Option<usize>,
    /// Parameter grid MIN:MAX:COUNT.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<Grid>,
    /// Comma-separated subset of zeta,ulam,oracle.
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<Method>>,
    /// Keep sweeping when diagnostics fail, with the fallback zeta radius.
    #[arg(long)]
    force: bool,
    /// Print a JSON report on stdout.
    #[arg(long)]
    json: bool,
    /// Single parameter value.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<f64>,
    /// Weight exponent `s`.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    s: f64,
}

impl Common {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::for_family(FamilySpec::Chebyshev),
        };
        if let Some(p) = self.p {
            cfg.truncation = p;
        }
        if let Some(n) = self.n {
            cfg.ulam_bins = n;
        }
        if let Some(g) = self.grid {
            cfg.grid = g;
        }
        if let Some(m) = &self.method {
            cfg.methods = Some(m.clone());
        }
        cfg.force |= self.force;
        Ok(cfg)
    }

    fn t(&self) -> f64 {
        self.t.unwrap_or(0.0)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, value)?;
    writeln!(lock)?;
    Ok(())
}

fn density(c: &Common) -> Result<(), Error> {
    let cfg = c.config()?;
    let family = cfg.family.build()?;
    let psi = cfg.observable.build()?;
    let t = c.t();
    let pair = leading_eigenpair(&build_ulam(&family, t, &psi, c.s, cfg.ulam_bins)?)?;
    if let Some(path) = &c.out {
        let mut w = create(path)?;
        pair.density.write_csv(&mut w)?;
        w.flush()?;
    }
    let record = pair.record();
    if c.json {
        print_json(&record)?;
    } else {
        let mean = integrate_density(&pair.density, &family.at(t)?, &psi)?;
        println!("N = {}, t = {t}, s = {}: lambda = {}, iterations = {}", record.n, c.s, record.lambda, record.iterations);
        println!("integral of psi against the normalised eigenvector: {mean}");
    }
    Ok(())
}

fn orbits(c: &Common) -> Result<(), Error> {
    let cfg = c.config()?;
    let family = cfg.family.build()?;
    let p = c.p.unwrap_or(10);
    let table = OrbitTable::enumerate(&family.at(c.t())?, p)?;
    if let Some(path) = &c.out {
        let mut w = create(path)?;
        write_orbit_csv(&mut w, &table.cycles)?;
        w.flush()?;
    }
    if c.json {
        print_json(&table)?;
    } else {
        println!("t = {}: {} primitive cycles of period <= {p}", table.t, table.cycles.len());
        for q in 1..=p {
            println!("  fixed points of f^{q}: {}", table.fixed_point_count(q));
        }
    }
    Ok(())
}

fn zeta(c: &Common) -> Result<(), Error> {
    let cfg = c.config()?;
    let family = cfg.family.build()?;
    let psi = cfg.observable.build()?;
    let map = family.at(c.t())?;
    let table = OrbitTable::enumerate(&map, cfg.truncation)?;
    let traces = TraceSums::from_table(&table, &map, &psi, c.s, cfg.truncation, true)?;
    let series = inverse_zeta_series(&traces, cfg.truncation)?;
    if let Some(path) = &c.out {
        let mut w = create(path)?;
        series.write_csv(&mut w)?;
        w.flush()?;
        let trace_path = path.with_extension("traces.csv");
        let mut w = create(&trace_path)?;
        traces.write_csv(&mut w)?;
        w.flush()?;
    }
    let zero = leading_zero(&series, FALLBACK_RADIUS, None)?;
    if c.json {
        print_json(&zero)?;
    } else {
        println!("P = {}, t = {}, s = {}", cfg.truncation, c.t(), c.s);
        println!("z0 = {}, lambda = {}, |d(z0)| = {:e}, d'(z0) = {}", zero.z0, zero.lambda, zero.residual, zero.derivative);
        if let Some(ds) = series.eval_s_derivative(zero.z0) {
            println!("d/ds log lambda = {}", ds / (zero.derivative * zero.z0));
        }
    }
    Ok(())
}

fn diagnose_cmd(c: &Common) -> Result<(), Error> {
    let cfg = c.config()?;
    let family = cfg.family.build()?;
    let window = family.window();
    let grid: Vec<f64> = if let Some(g) = c.grid {
        g.points()
    } else if let Some(t) = c.t {
        vec![t]
    } else if window.contains(cfg.grid.min) && window.contains(cfg.grid.max) {
        cfg.grid.points()
    } else {
        vec![0.0]
    };
    let report = diagnose(&family, &grid, &cfg.diagnostics_options())?;
    if let Some(path) = &c.out {
        let mut w = create(path)?;
        report.write_csv(&mut w)?;
        w.flush()?;
    }
    if c.json {
        print_json(&report)?;
    } else {
        println!("lambda_c   = {} (C = {}, window n in [{}, {}])", report.lambda_c, report.prefactor_c, report.critical_window.0, report.critical_window.1);
        println!("lambda_per = {} (periods <= {})", report.lambda_per, report.max_period);
        println!("lambda_eta = {} at n = {} (extrapolated {})", report.lambda_eta, report.lap_depth, report.lambda_eta_extrapolated);
        println!("Theta^-1   = {} (safety {})", report.theta_inv, report.safety);
    }
    if let Err(e) = check_uniformity(&report, UNIFORMITY_MARGIN) {
        eprintln!("warning: {e} (margin {UNIFORMITY_MARGIN})");
    }
    Ok(())
}

fn sweep(c: &Common) -> Result<(), Error> {
    let run = c.config()?;
    let cfg = run.sweep_config()?;
    let curve = response_curve(&cfg)?;
    let out = c.out.clone().or_else(|| run.outputs.curve.clone());
    if let Some(path) = &out {
        let mut w = create(path)?;
        curve.write_csv(&mut w)?;
        w.flush()?;
    }
    let report = analyticity_report(&curve, cfg.max_degree);
    let flagged = curve.rows.iter().filter(|r| r.flagged).count();
    let summary = serde_json::json!({
        "curve": curve,
        "analyticity": report.as_ref().ok(),
        "analyticity_error": report.as_ref().err().map(ToString::to_string),
    });
    if let Some(path) = &run.outputs.report {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &summary)?;
        w.flush()?;
    }
    if c.json {
        print_json(&summary)?;
    } else {
        if out.is_none() {
            curve.write_csv(io::stdout().lock())?;
        }
        match &report {
            Ok(r) => {
                let top = r.fits.last().expect("degree 0 is always fitted");
                println!("degree-{} fit: {:?} (rms {:e}); {}", top.degree, top.coefficients, top.residual, r.verdict);
            }
            Err(e) => println!("analyticity report unavailable: {e}"),
        }
    }
    if flagged > 0 {
        eprintln!("warning: {flagged} rows where methods disagree by more than 1e-2");
    }
    Ok(())
}

fn selftest(c: &Common) -> Result<bool, Error> {
    let rows = run_selftest();
    if c.json {
        print_json(&rows)?;
    } else {
        for r in &rows {
            let actual = r.actual.map_or_else(|| r.error.clone().unwrap_or_default(), |v| format!("{v:.12}"));
            let tol = if r.relative { format!("{:e} rel", r.tolerance) } else { format!("{:e}", r.tolerance) };
            println!("{} {:<40} expected {:<16} got {actual} (tol {tol})", if r.pass { "PASS" } else { "FAIL" }, r.name, r.expected);
        }
        let failed = rows.iter().filter(|r| !r.pass).count();
        println!("{} checks, {failed} failed", rows.len());
    }
    Ok(rows.iter().all(|r| r.pass))
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Hypothesis => 1,
        ErrorClass::Numerical => 2,
        ErrorClass::Config => 3,
    }
}

fn parse_threads(v: &str) -> Result<usize, Error> {
    v.trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("RESPONSE_THREADS must be a positive integer, got '{v}'")))
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("RESPONSE_THREADS") else {
        return Ok(());
    };
    let n = parse_threads(&v)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn dispatch(command: &Command) -> Result<bool, Error> {
    match command {
        Command::Density(c) => density(c).map(|()| true),
        Command::Orbits(c) => orbits(c).map(|()| true),
        Command::Zeta(c) => zeta(c).map(|()| true),
        Command::Diagnose(c) => diagnose_cmd(c).map(|()| true),
        Command::Sweep(c) => sweep(c).map(|()| true),
        Command::Selftest(c) => selftest(c),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    match configure_threads().and_then(|()| dispatch(&cli.command)) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn config(name: &str) -> String {
        let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
        p.to_str().unwrap().to_string()
    }

    fn cmd(args: &[&str]) -> u8 {
        run(std::iter::once("srb-zeta").chain(args.iter().copied()))
    }

    fn path(dir: &tempfile::TempDir, name: &str) -> String {
        dir.path().join(name).to_str().unwrap().to_string()
    }

    #[test]
    fn usage_errors_exit_three() {
        assert_eq!(cmd(&["--help"]), 0);
        assert_eq!(cmd(&["--version"]), 0);
        assert_eq!(cmd(&["frobnicate"]), 3);
        assert_eq!(cmd(&["orbits", "--p", "many"]), 3);
        assert_eq!(cmd(&["sweep", "--grid", "0.1:0.2"]), 3);
        assert_eq!(cmd(&["sweep", "--method", "zeta,spectral"]), 3);
    }

    #[test]
    fn config_errors_exit_three() {
        let dir = tempfile::tempdir().unwrap();
        let bad = path(&dir, "bad.json");
        std::fs::write(&bad, r#"{"family": {"kind": "chebyshev"}, "seeds": [1]}"#).unwrap();
        assert_eq!(cmd(&["diagnose", "--config", &bad]), 3);
        assert_eq!(cmd(&["zeta", "--config", "/nonexistent/config.json"]), 3);
        assert_eq!(cmd(&["density", "--n", "1"]), 3);
        assert_eq!(cmd(&["diagnose", "--t", "0.5", "--config", &config("chebyshev_motion.json")]), 3);
        assert!(parse_threads("zero").is_err());
        assert!(parse_threads("0").is_err());
        assert_eq!(parse_threads(" 2 ").unwrap(), 2);
    }

    #[test]
    fn attracting_fixture_exits_one() {
        assert_eq!(cmd(&["diagnose", "--config", &config("attracting.json")]), 1);
    }

    #[test]
    fn orbits_and_zeta_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let orbits = path(&dir, "orbits.csv");
        assert_eq!(cmd(&["orbits", "--p", "5", "--out", &orbits]), 0);
        let text = std::fs::read_to_string(&orbits).unwrap();
        // 2 + 1 + 2 + 3 + 6 primitive cycles, plus the header.
        assert_eq!(text.lines().count(), 15);

        let series = path(&dir, "series.csv");
        assert_eq!(cmd(&["zeta", "--p", "12", "--s", "-0.1", "--out", &series]), 0);
        let text = std::fs::read_to_string(&series).unwrap();
        assert!(text.starts_with("k,d_k,ds_d_k"));
        assert_eq!(text.lines().count(), 14);
        let traces = std::fs::read_to_string(dir.path().join("series.traces.csv")).unwrap();
        assert!(traces.starts_with("p,a_p,ds_a_p"));
        assert_eq!(traces.lines().count(), 13);
    }

    #[test]
    fn density_and_diagnose_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let density = path(&dir, "density.csv");
        assert_eq!(cmd(&["density", "--n", "512", "--out", &density]), 0);
        let text = std::fs::read_to_string(&density).unwrap();
        assert!(text.starts_with("bin_center,density"));
        assert_eq!(text.lines().count(), 513);

        let report = path(&dir, "ce.csv");
        let args = ["diagnose", "--config", &config("chebyshev_motion.json"), "--grid=-0.1:0.1:3", "--out", &report];
        assert_eq!(cmd(&args), 0);
        let text = std::fs::read_to_string(&report).unwrap();
        assert!(text.starts_with("t,lambda_c,lambda_per,lambda_eta,theta_inv"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn sweep_writes_curve_and_report() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = path(&dir, "run.json");
        let mut run = RunConfig::load(Path::new(&config("chebyshev_motion.json"))).unwrap();
        run.outputs.curve = Some(dir.path().join("curve.csv"));
        run.outputs.report = Some(dir.path().join("report.json"));
        std::fs::write(&cfg, serde_json::to_string(&run).unwrap()).unwrap();
        assert_eq!(cmd(&["sweep", "--config", &cfg, "--grid=-0.06:0.06:7", "--method", "zeta,oracle", "--p", "12"]), 0);

        let curve = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
        let mut lines = curve.lines();
        assert_eq!(lines.next(), Some(srb_core::response::CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 6);
        assert_eq!(row[0], "-0.06");
        assert_eq!(row[2], "");
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(report["curve"]["rows"].as_array().unwrap().len(), 7);
        assert_eq!(report["analyticity"]["verdict"], "consistent with real-analytic response");

        let out = path(&dir, "small.csv");
        assert_eq!(cmd(&["sweep", "--config", &cfg, "--grid=-0.05:0.05:5", "--method", "oracle", "--out", &out]), 0);
        assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 6);
    }

    /// Four oracle rows miss their advertised tolerance (see the core selftest).
    #[test]
    fn selftest_reports_failures_with_exit_two() {
        assert_eq!(cmd(&["selftest"]), 2);
    }
}
