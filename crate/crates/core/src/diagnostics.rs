//! Finite-`n` estimates of the hyperbolicity constants of a unimodal map:
//!
//! * `λ_c`: growth of `|(f^n)'(f(c))|` along the critical orbit;
//! * `λ_per`: `min |Λ|^{1/p}` over repelling cycles;
//! * `λ_η`: `|η_n|^{-1/n}` for the longest monotone lap `η_n` of `f^n`;
//!
//! and the radius `Θ^{-1} = safety · min{λ_η, √min(λ_c, λ_per)}` of the disc
//! searched for the leading zeta zero.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{MapAt, MapDescriptor, Side};
use crate::orbits::{pull_back, OrbitTable};

pub const MAX_CRITICAL_STEPS: usize = 60;
pub const MAX_LAP_DEPTH: usize = 24;
pub const DEFAULT_CRITICAL_STEPS: usize = 40;
pub const DEFAULT_PERIOD: usize = 12;
pub const DEFAULT_LAP_DEPTH: usize = 20;
pub const DEFAULT_SAFETY: f64 = 0.9;
/// Margin above 1 required of every estimate over a shipped parameter window.
pub const UNIFORMITY_MARGIN: f64 = 0.1;
/// Below this depth the lap search forks into parallel tasks.
const PARALLEL_DEPTH: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalGrowth {
    pub lambda_c: f64,
    /// `min_n |(f^n)'(f(c))| / λ_c^n` over the fitting window.
    pub prefactor: f64,
    /// Fitting window `[n_lo, n_hi]`.
    pub window: (usize, usize),
}

/// `log|(f^n)'(f(c))|` for `n = 1..=n_max`.
pub fn critical_log_derivatives(map: &MapAt, n_max: usize) -> Result<Vec<f64>> {
    let c = map.critical_point();
    let mut x = map.critical_value();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if x == c {
            return Err(Error::Superstable { n });
        }
        let (next, d) = map.value_and_derivative(x);
        if d == 0.0 {
            return Err(Error::Superstable { n });
        }
        acc += d.abs().ln();
        out.push(acc);
        x = next;
    }
    Ok(out)
}

pub fn lambda_c_estimate(m: &MapDescriptor, t: f64, n_max: usize) -> Result<CriticalGrowth> {
    if !(2..=MAX_CRITICAL_STEPS).contains(&n_max) {
        return Err(Error::InvalidArgument(format!("n_max {n_max} not in 2..={MAX_CRITICAL_STEPS}")));
    }
    let logs = critical_log_derivatives(&m.at(t)?, n_max)?;
    let lo = (n_max / 2).max(1);
    let rows = n_max - lo + 1;
    let a = DMatrix::from_fn(rows, 2, |i, j| if j == 0 { 1.0 } else { (lo + i) as f64 });
    let b = DVector::from_fn(rows, |i, _| logs[lo + i - 1]);
    let coef = a
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;
    let slope = coef[1];
    let prefactor = (lo..=n_max)
        .map(|n| logs[n - 1] - slope * n as f64)
        .fold(f64::INFINITY, f64::min)
        .exp();
    let lambda_c = slope.exp();
    if !lambda_c.is_finite() || !prefactor.is_finite() {
        return Err(Error::NonFinite("critical growth"));
    }
    Ok(CriticalGrowth { lambda_c, prefactor, window: (lo, n_max) })
}

/// `min |Λ|^{1/p}` over a cycle table; any cycle with `|Λ| ≤ 1` is an error.
pub fn lambda_per_from_table(table: &OrbitTable) -> Result<f64> {
    let mut best = f64::INFINITY;
    for c in &table.cycles {
        if !c.is_repelling() {
            return Err(Error::NonRepelling {
                period: c.period,
                itinerary: c.itinerary.to_string(),
                points: c.points.clone(),
                multiplier: c.multiplier,
            });
        }
        best = best.min(c.log_abs_multiplier / c.period as f64);
    }
    if best == f64::INFINITY {
        return Err(Error::InvalidArgument("no periodic orbits".into()));
    }
    Ok(best.exp())
}

pub fn lambda_per_estimate(m: &MapDescriptor, t: f64, p_max: usize) -> Result<f64> {
    lambda_per_from_table(&OrbitTable::enumerate(&m.at(t)?, p_max)?)
}

/// Longest monotone lap of `f^k` for every `k ≤ n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LapProfile {
    /// `longest[k - 1] = max |η|` over the laps of `f^k`.
    pub longest: Vec<f64>,
    /// Number of laps of `f^n`.
    pub laps: u64,
}

impl LapProfile {
    pub fn depth(&self) -> usize {
        self.longest.len()
    }

    /// `|η_n|^{-1/n}`.
    pub fn raw(&self) -> f64 {
        let n = self.depth();
        self.longest[n - 1].powf(-1.0 / n as f64)
    }

    /// Aitken extrapolation of the one-step contraction `log(|η_{k-1}|/|η_k|)`
    /// from its last three values; falls back to the last value when the
    /// second difference vanishes.
    pub fn extrapolated(&self) -> f64 {
        let n = self.depth();
        if n < 4 {
            return self.raw();
        }
        let c = |k: usize| (self.longest[k - 2] / self.longest[k - 1]).ln();
        let (a, b, d) = (c(n - 2), c(n - 1), c(n));
        let den = d - 2.0 * b + a;
        let limit = if den.abs() <= 1e-14 * d.abs().max(1e-300) {
            d
        } else {
            d - (d - b).powi(2) / den
        };
        limit.exp()
    }
}

fn merge(a: (Vec<f64>, u64), b: (Vec<f64>, u64)) -> (Vec<f64>, u64) {
    let longest = a.0.iter().zip(&b.0).map(|(x, y)| x.max(*y)).collect();
    (longest, a.1 + b.1)
}

/// Pulls `[lo, hi]` (a lap of `f^depth`) back one more step on each side.
fn descend(map: &MapAt, lo: f64, hi: f64, depth: usize, n: usize) -> Result<(Vec<f64>, u64)> {
    let mut longest = vec![0.0; n];
    longest[depth - 1] = hi - lo;
    if depth == n {
        return Ok((longest, 1));
    }
    let child = |side: Side| -> Result<(Vec<f64>, u64)> {
        match pull_back(map, side, lo, hi)? {
            Some((a, b)) if b > a => descend(map, a, b, depth + 1, n),
            _ => Ok((vec![0.0; n], 0)),
        }
    };
    let (l, r) = if depth < PARALLEL_DEPTH {
        rayon::join(|| child(Side::L), || child(Side::R))
    } else {
        (child(Side::L), child(Side::R))
    };
    let (sub, laps) = merge(l?, r?);
    for (x, y) in longest.iter_mut().zip(sub) {
        *x = x.max(y);
    }
    Ok((longest, laps))
}

pub fn lap_profile(map: &MapAt, n: usize) -> Result<LapProfile> {
    if !(1..=MAX_LAP_DEPTH).contains(&n) {
        return Err(Error::InvalidArgument(format!("lap depth {n} not in 1..={MAX_LAP_DEPTH}")));
    }
    let (l, r) = rayon::join(
        || descend(map, -1.0, map.critical_point(), 1, n),
        || descend(map, map.critical_point(), 1.0, 1, n),
    );
    let (longest, laps) = merge(l?, r?);
    Ok(LapProfile { longest, laps })
}

/// `|η_n|^{-1/n}` for the longest lap of `f_t^n`.
pub fn lambda_eta_estimate(m: &MapDescriptor, t: f64, n: usize) -> Result<f64> {
    Ok(lap_profile(&m.at(t)?, n)?.raw())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsOptions {
    pub critical_steps: usize,
    pub max_period: usize,
    pub lap_depth: usize,
    pub safety: f64,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        DiagnosticsOptions {
            critical_steps: DEFAULT_CRITICAL_STEPS,
            max_period: DEFAULT_PERIOD,
            lap_depth: DEFAULT_LAP_DEPTH,
            safety: DEFAULT_SAFETY,
        }
    }
}

/// Estimates at one parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CERow {
    pub t: f64,
    pub lambda_c: f64,
    pub prefactor_c: f64,
    pub lambda_per: f64,
    pub lambda_eta: f64,
    pub lambda_eta_extrapolated: f64,
    pub laps: u64,
    pub theta_inv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CEReport {
    /// Minima over the rows.
    pub lambda_c: f64,
    pub prefactor_c: f64,
    pub critical_window: (usize, usize),
    pub lambda_per: f64,
    pub max_period: usize,
    /// Raw finite-`n` value.
    pub lambda_eta: f64,
    pub lambda_eta_extrapolated: f64,
    pub lap_depth: usize,
    pub safety: f64,
    pub theta_inv: f64,
    pub rows: Vec<CERow>,
}

/// `safety · min{λ_η, √min(λ_c, λ_per)}`, using the raw `λ_η`.
pub fn theta_choice(report: &CEReport, safety: f64) -> Result<f64> {
    theta_from(report.lambda_c, report.lambda_per, report.lambda_eta, safety)
}

fn theta_from(lambda_c: f64, lambda_per: f64, lambda_eta: f64, safety: f64) -> Result<f64> {
    if !(safety > 0.0 && safety < 1.0) {
        return Err(Error::InvalidArgument(format!("safety {safety} not in (0, 1)")));
    }
    for (name, value) in [("lambda_c", lambda_c), ("lambda_per", lambda_per), ("lambda_eta", lambda_eta)] {
        if !(value > 1.0) {
            return Err(Error::WeakHyperbolicity { name, value });
        }
    }
    Ok(safety * lambda_eta.min(lambda_c.min(lambda_per).sqrt()))
}

pub fn diagnose_at(m: &MapDescriptor, t: f64, opts: &DiagnosticsOptions) -> Result<CERow> {
    let map = m.at(t)?;
    let per = lambda_per_from_table(&OrbitTable::enumerate(&map, opts.max_period)?)?;
    let crit = lambda_c_estimate(m, t, opts.critical_steps)?;
    let laps = lap_profile(&map, opts.lap_depth)?;
    let eta = laps.raw();
    Ok(CERow {
        t,
        lambda_c: crit.lambda_c,
        prefactor_c: crit.prefactor,
        lambda_per: per,
        lambda_eta: eta,
        lambda_eta_extrapolated: laps.extrapolated(),
        laps: laps.laps,
        theta_inv: theta_from(crit.lambda_c, per, eta, opts.safety)?,
    })
}

/// Diagnostics over a parameter grid; the headline constants are the minima.
pub fn diagnose(m: &MapDescriptor, grid: &[f64], opts: &DiagnosticsOptions) -> Result<CEReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty parameter grid".into()));
    }
    let rows: Vec<CERow> = grid.par_iter().map(|&t| diagnose_at(m, t, opts)).collect::<Result<_>>()?;
    let min = |f: fn(&CERow) -> f64| rows.iter().map(f).fold(f64::INFINITY, f64::min);
    let lambda_c = min(|r| r.lambda_c);
    let lambda_per = min(|r| r.lambda_per);
    let lambda_eta = min(|r| r.lambda_eta);
    Ok(CEReport {
        lambda_c,
        prefactor_c: min(|r| r.prefactor_c),
        critical_window: ((opts.critical_steps / 2).max(1), opts.critical_steps),
        lambda_per,
        max_period: opts.max_period,
        lambda_eta,
        lambda_eta_extrapolated: min(|r| r.lambda_eta_extrapolated),
        lap_depth: opts.lap_depth,
        safety: opts.safety,
        theta_inv: theta_from(lambda_c, lambda_per, lambda_eta, opts.safety)?,
        rows,
    })
}

/// Fails unless every row keeps each estimate above `1 + margin`.
pub fn check_uniformity(report: &CEReport, margin: f64) -> Result<()> {
    for r in &report.rows {
        for (name, value) in [("lambda_c", r.lambda_c), ("lambda_per", r.lambda_per), ("lambda_eta", r.lambda_eta)] {
            if !(value > 1.0 + margin) {
                return Err(Error::WeakHyperbolicity { name, value });
            }
        }
    }
    Ok(())
}

impl CEReport {
    /// CSV rows `t,lambda_c,lambda_per,lambda_eta,theta_inv`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,lambda_c,lambda_per,lambda_eta,theta_inv")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.t, r.lambda_c, r.lambda_per, r.lambda_eta, r.theta_inv)?;
        }
        Ok(())
    }
}
