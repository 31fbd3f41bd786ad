//! Grid estimates of the Keller–Nowicki admissibility constants.
//!
//! Two quantities are measured:
//!
//! * `sup` and total variation over `I` of `r(x) = |x - c| / |f'(x)|`, with
//!   `r(c) = -1/f''(c)` by continuity;
//! * for `u` on a sub-grid on both sides of `c`, the total variation over
//!   `J_u` (`[u, 1]` right of `c`, `[-1, u]` left of it) of
//!   `q_u(x) = |f(x) - f(u)| / (|x - u| |f'(x)|)`, with `q_u(u) = 1`.
//!
//! Variations are plain `Σ|Δ|` sums, accepted once a grid and its doubling
//! agree to 1%.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{MapAt, MapDescriptor};

const U_PER_SIDE: usize = 32;
const MAX_DOUBLINGS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KNConstants {
    /// `sup_I |x - c| / |f'(x)|`.
    pub sup_ratio: f64,
    /// `var_I |x - c| / |f'(x)|`.
    pub var_ratio: f64,
    /// `max_u var_{J_u} |f(x) - f(u)| / (|x - u| |f'(x)|)`.
    pub max_branch_variation: f64,
    /// `max(sup_ratio, var_ratio, max_branch_variation, 1 / sup_ratio)`;
    /// both conditions hold for every constant strictly above it.
    pub m: f64,
    pub grid_size: usize,
}

pub fn kn_constants(m: &MapDescriptor, t: f64, grid_size: usize) -> Result<KNConstants> {
    if grid_size < 256 {
        return Err(Error::InvalidArgument(format!("grid_size {grid_size} < 256")));
    }
    let map = m.at(t)?;
    let c = map.critical_point();
    let curvature = map.jet(c).0[2];
    if !(curvature < 0.0) {
        return Err(Error::NonFinite("|x-c|/|f'(x)| at the critical point"));
    }

    let ratio = |x: f64| -> f64 {
        if x == c {
            -1.0 / curvature
        } else {
            (x - c).abs() / map.derivative(x).abs()
        }
    };
    let (var_ratio, values) = settled_variation("|x-c|/|f'(x)|", grid_size, |n| {
        Ok(grid_with(-1.0, 1.0, n, Some(c)).into_iter().map(ratio).collect())
    })?;
    let sup_ratio = values.iter().copied().fold(0.0, f64::max);

    let mut max_branch_variation: f64 = 0.0;
    for k in 1..=U_PER_SIDE {
        let frac = k as f64 / (U_PER_SIDE + 1) as f64;
        for (u, lo, hi) in [(c + (1.0 - c) * frac, None, Some(1.0)), (c - (c + 1.0) * frac, Some(-1.0), None)] {
            let (lo, hi) = (lo.unwrap_or(u), hi.unwrap_or(u));
            let (v, _) = settled_variation("|f(x)-f(u)|/(|x-u||f'(x)|)", grid_size, |n| {
                Ok(grid_with(lo, hi, n, None)
                    .into_iter()
                    .map(|x| branch_ratio(&map, u, x))
                    .collect())
            })?;
            max_branch_variation = max_branch_variation.max(v);
        }
    }

    let m_const = sup_ratio.max(var_ratio).max(max_branch_variation).max(1.0 / sup_ratio);
    for v in [sup_ratio, var_ratio, max_branch_variation, m_const] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::NonFinite("Keller–Nowicki constants"));
        }
    }
    Ok(KNConstants { sup_ratio, var_ratio, max_branch_variation, m: m_const, grid_size })
}

fn branch_ratio(map: &MapAt, u: f64, x: f64) -> f64 {
    if x == u {
        return 1.0;
    }
    (map.eval(x) - map.eval(u)).abs() / ((x - u).abs() * map.derivative(x).abs())
}

/// `n` uniform points on `[lo, hi]`, with `extra` merged in when it is interior.
fn grid_with(lo: f64, hi: f64, n: usize, extra: Option<f64>) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    g[n - 1] = hi;
    if let Some(e) = extra {
        if e > lo && e < hi && !g.contains(&e) {
            let pos = g.partition_point(|&x| x < e);
            g.insert(pos, e);
        }
    }
    g
}

fn total_variation(v: &[f64]) -> f64 {
    v.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Variation on successively doubled grids until two consecutive values
/// agree within 1%. Returns the finer variation and the finer samples.
fn settled_variation<F>(what: &'static str, n0: usize, sample: F) -> Result<(f64, Vec<f64>)>
where
    F: Fn(usize) -> Result<Vec<f64>>,
{
    let mut n = n0;
    let mut prev = sample(n)?;
    if prev.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    let mut coarse = total_variation(&prev);
    for _ in 0..MAX_DOUBLINGS {
        n = 2 * n - 1;
        let next = sample(n)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(what));
        }
        let fine = total_variation(&next);
        if (fine - coarse).abs() <= 0.01 * fine.max(coarse) + 1e-9 {
            return Ok((fine, next));
        }
        coarse = fine;
        prev = next;
    }
    let fine = total_variation(&prev);
    Err(Error::Variation { what, coarse, fine })
}
