//! Truncated dynamical zeta functions and pressure derivatives.
//!
//! With weight `g_s(x) = e^{s ψ(x)} / |f'(x)|`, the trace sums
//!
//! ```text
//! a_p(s) = (1/p) Σ_{f^p x = x} e^{s S_p ψ(x)} / |(f^p)'(x)|
//! ```
//!
//! define `1/ζ(s, z) = exp(-Σ_p a_p z^p)`. Its smallest positive zero is
//! `z_0(s) = 1/λ_s`, where `λ_s` is the leading eigenvalue of the weighted
//! transfer operator, so `∂_s log λ_s |_{s=0} = -∂_s z_0 / z_0` is the mean
//! of `ψ` under the invariant density. The `s`-derivative is carried
//! analytically through the series recurrence.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{MapAt, MapDescriptor, Observable};
use crate::orbits::{find_periodic_points, OrbitTable, DEFAULT_PERIOD_CAP, RESIDUAL_TOL};
use crate::roots::bracketed_newton;

pub const DEFAULT_TRUNCATION: usize = 16;
pub const TRUNCATION_CAP: usize = DEFAULT_PERIOD_CAP;
/// Search radius when no hyperbolicity report is available.
pub const FALLBACK_RADIUS: f64 = 1.2;
pub const ZERO_RESIDUAL_TOL: f64 = 1e-10;
pub const SIMPLICITY_TOL: f64 = 1e-4;
/// Successive-zero difference used as the truncation stopping rule.
pub const TRUNCATION_STOP: f64 = 1e-8;
const SCAN_STEPS: usize = 4000;

/// `a_p` for `p = 1..=order`, optionally with `∂_s a_p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSums {
    pub order: usize,
    pub s: f64,
    /// `values[p - 1] = a_p`.
    pub values: Vec<f64>,
    pub s_derivatives: Option<Vec<f64>>,
}

/// Per-cycle data reused for every `p` that the cycle's period divides.
struct CycleWeight {
    period: usize,
    birkhoff: f64,
    log_weight: f64,
}

fn cycle_weights(
    table: &OrbitTable,
    map: &MapAt,
    psi: &Observable,
    s: f64,
    need_birkhoff: bool,
) -> Result<Vec<CycleWeight>> {
    table
        .cycles
        .iter()
        .map(|c| {
            let birkhoff = if need_birkhoff { c.birkhoff_sum(map, psi)? } else { 0.0 };
            let log_weight = if s == 0.0 { -c.log_abs_multiplier } else { s * birkhoff - c.log_abs_multiplier };
            Ok(CycleWeight { period: c.period, birkhoff, log_weight })
        })
        .collect()
}

/// `(Σ g^(p), Σ S_p ψ · g^(p))` over all fixed points of `f^p`.
fn sum_level(weights: &[CycleWeight], p: usize) -> (f64, f64) {
    let mut value = 0.0;
    let mut deriv = 0.0;
    for w in weights.iter().filter(|w| p.is_multiple_of(w.period)) {
        let r = (p / w.period) as f64;
        let g = (r * w.log_weight).exp();
        value += w.period as f64 * g;
        deriv += p as f64 * w.birkhoff * g;
    }
    (value, deriv)
}

impl TraceSums {
    pub fn from_table(
        table: &OrbitTable,
        map: &MapAt,
        psi: &Observable,
        s: f64,
        order: usize,
        with_derivative: bool,
    ) -> Result<Self> {
        if order == 0 || order > table.max_period {
            return Err(Error::InvalidArgument(format!(
                "truncation order {order} needs orbits up to that period (table has {})",
                table.max_period
            )));
        }
        let weights = cycle_weights(table, map, psi, s, with_derivative || s != 0.0)?;
        let mut values = Vec::with_capacity(order);
        let mut derivs = Vec::with_capacity(order);
        for p in 1..=order {
            let (v, d) = sum_level(&weights, p);
            values.push(v / p as f64);
            derivs.push(d / p as f64);
        }
        if values.iter().chain(&derivs).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("trace sums"));
        }
        Ok(TraceSums { order, s, values, s_derivatives: with_derivative.then_some(derivs) })
    }

    pub fn has_derivative(&self) -> bool {
        self.s_derivatives.is_some()
    }

    /// CSV rows `p,a_p,d_s a_p`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "p,a_p,ds_a_p")?;
        for (k, a) in self.values.iter().enumerate() {
            match &self.s_derivatives {
                Some(d) => writeln!(w, "{},{},{}", k + 1, a, d[k])?,
                None => writeln!(w, "{},{},", k + 1, a)?,
            }
        }
        Ok(())
    }
}

/// Exact trace at one level, with its `s`-derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceValue {
    /// `Σ_{f^p x = x} g^(p)(x)`.
    pub value: f64,
    /// `Σ_{f^p x = x} S_p ψ(x) g^(p)(x)`.
    pub s_derivative: f64,
}

pub fn trace_sum(m: &MapDescriptor, t: f64, psi: &Observable, s: f64, p: usize) -> Result<TraceValue> {
    let map = m.at(t)?;
    let cycles = find_periodic_points(m, t, p, RESIDUAL_TOL)?;
    let table = OrbitTable { t, max_period: p, cycles };
    let weights = cycle_weights(&table, &map, psi, s, true)?;
    let (value, s_derivative) = sum_level(&weights, p);
    Ok(TraceValue { value, s_derivative })
}

/// Truncated expansion `d_0 + d_1 z + … + d_P z^P` of `1/ζ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSeries {
    pub coeffs: Vec<f64>,
    /// `∂_s d_k`, present when the trace sums carried derivatives.
    pub s_derivative: Option<Vec<f64>>,
}

impl PowerSeries {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    /// `(d(z), d'(z))`.
    pub fn eval_with_derivative(&self, z: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// `(∂_s d)(z)`.
    pub fn eval_s_derivative(&self, z: f64) -> Option<f64> {
        self.s_derivative
            .as_ref()
            .map(|c| c.iter().rev().fold(0.0, |acc, &c| acc * z + c))
    }

    /// CSV rows `k,d_k[,ds_d_k]`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,d_k,ds_d_k")?;
        for (k, d) in self.coeffs.iter().enumerate() {
            match &self.s_derivative {
                Some(ds) => writeln!(w, "{k},{d},{}", ds[k])?,
                None => writeln!(w, "{k},{d},")?,
            }
        }
        Ok(())
    }
}

/// Coefficients of `exp(-Σ_{p≤P} a_p z^p)` by `k d_k = -Σ_{p≤k} p a_p d_{k-p}`.
pub fn inverse_zeta_series(traces: &TraceSums, order: usize) -> Result<PowerSeries> {
    if order > traces.order {
        return Err(Error::InvalidArgument(format!(
            "series order {order} exceeds trace order {}",
            traces.order
        )));
    }
    let a = &traces.values;
    let mut d = vec![0.0; order + 1];
    d[0] = 1.0;
    let mut ds = traces.s_derivatives.as_ref().map(|_| vec![0.0; order + 1]);
    for k in 1..=order {
        let mut acc = 0.0;
        for p in 1..=k {
            acc += p as f64 * a[p - 1] * d[k - p];
        }
        d[k] = -acc / k as f64;
        if let (Some(ds), Some(da)) = (ds.as_mut(), traces.s_derivatives.as_ref()) {
            let mut dacc = 0.0;
            for p in 1..=k {
                dacc += p as f64 * (da[p - 1] * d[k - p] + a[p - 1] * ds[k - p]);
            }
            ds[k] = -dacc / k as f64;
        }
    }
    Ok(PowerSeries { coeffs: d, s_derivative: ds })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadingZero {
    pub z0: f64,
    /// `1/z0`.
    pub lambda: f64,
    /// `|d(z0)|`.
    pub residual: f64,
    /// `d'(z0)`.
    pub derivative: f64,
    pub simple: bool,
}

/// Smallest positive real zero of `d` in `(0, radius)`, located by a sign
/// scan from `z = 0` and polished by bracketed Newton started at `seed`
/// (default 1).
pub fn leading_zero(d: &PowerSeries, radius: f64, seed: Option<f64>) -> Result<LeadingZero> {
    if d.coeffs.first() != Some(&1.0) {
        return Err(Error::InvalidArgument("series must start with d_0 = 1".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("search radius {radius}")));
    }
    let step = radius / SCAN_STEPS as f64;
    let mut bracket = None;
    let mut z_prev = 0.0;
    for k in 1..=SCAN_STEPS {
        let z = if k == SCAN_STEPS { radius } else { k as f64 * step };
        if d.eval(z) <= 0.0 {
            bracket = Some((z_prev, z));
            break;
        }
        z_prev = z;
    }
    let (lo, hi) = bracket.ok_or(Error::NoZero { radius })?;
    let z0 = bracketed_newton(|z| d.eval_with_derivative(z), lo, hi, seed.or(Some(1.0)), 1e-15, 200)
        .ok_or(Error::NoZero { radius })?;
    let (value, derivative) = d.eval_with_derivative(z0);
    let residual = value.abs();
    let simple = derivative.abs() >= SIMPLICITY_TOL;
    if residual > ZERO_RESIDUAL_TOL || !simple {
        return Err(Error::NotSimple { z0, derivative, residual });
    }
    Ok(LeadingZero { z0, lambda: 1.0 / z0, residual, derivative, simple })
}

/// Leading zero at one `(s, order)` from a precomputed orbit table.
pub fn pressure_zero(
    table: &OrbitTable,
    map: &MapAt,
    psi: &Observable,
    s: f64,
    order: usize,
    radius: f64,
) -> Result<LeadingZero> {
    let traces = TraceSums::from_table(table, map, psi, s, order, false)?;
    leading_zero(&inverse_zeta_series(&traces, order)?, radius, None)
}

/// Zeros for truncation orders `start..=table.max_period`, stopping once two
/// successive zeros differ by less than [`TRUNCATION_STOP`].
pub fn zero_sequence(
    table: &OrbitTable,
    map: &MapAt,
    psi: &Observable,
    s: f64,
    start: usize,
    radius: f64,
) -> Result<Vec<(usize, LeadingZero)>> {
    let traces = TraceSums::from_table(table, map, psi, s, table.max_period, false)?;
    let mut out: Vec<(usize, LeadingZero)> = Vec::new();
    for order in start.max(1)..=table.max_period {
        let z = leading_zero(&inverse_zeta_series(&traces, order)?, radius, None)?;
        let done = out.last().is_some_and(|(_, prev)| (prev.z0 - z.z0).abs() < TRUNCATION_STOP);
        out.push((order, z));
        if done {
            break;
        }
    }
    Ok(out)
}

/// Linear response from the zeta side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaResponse {
    /// `∂_s log λ_s |_{s=0}`.
    pub value: f64,
    pub zero: LeadingZero,
}

/// `∂_s log λ |_{s=0} = -(∂_s z_0)/z_0` with `∂_s z_0 = -(∂_s d)(z_0) / d'(z_0)`.
pub fn zeta_response(
    table: &OrbitTable,
    map: &MapAt,
    psi: &Observable,
    order: usize,
    radius: f64,
    seed: Option<f64>,
) -> Result<ZetaResponse> {
    let traces = TraceSums::from_table(table, map, psi, 0.0, order, true)?;
    let series = inverse_zeta_series(&traces, order)?;
    let zero = leading_zero(&series, radius, seed)?;
    let ds = series.eval_s_derivative(zero.z0).ok_or(Error::NonFinite("s-derivative series"))?;
    let dz0 = -ds / zero.derivative;
    let value = -dz0 / zero.z0;
    if !value.is_finite() {
        return Err(Error::NonFinite("pressure derivative"));
    }
    Ok(ZetaResponse { value, zero })
}

/// `∫ ψ ρ_t dx` from the zeta function truncated at `order`.
pub fn pressure_s_derivative(m: &MapDescriptor, t: f64, psi: &Observable, order: usize) -> Result<f64> {
    if order == 0 || order > TRUNCATION_CAP {
        return Err(Error::InvalidArgument(format!("truncation {order} not in 1..={TRUNCATION_CAP}")));
    }
    let map = m.at(t)?;
    let table = OrbitTable::enumerate(&map, order)?;
    Ok(zeta_response(&table, &map, psi, order, FALLBACK_RADIUS, None)?.value)
}
