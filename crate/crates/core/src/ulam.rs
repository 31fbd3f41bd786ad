//! Ulam discretisation of the weighted transfer operator
//! `𝓛_s φ(x) = Σ_{f(y)=x} e^{sψ(y)} φ(y) / |f'(y)|`.
//!
//! `[-1, 1]` is cut into `N` equal bins. Column `j` of the matrix is the image
//! of the normalised indicator of source bin `j`, recorded as the mass it puts
//! in each destination bin:
//!
//! ```text
//! M_ij = (1/|B_j|) ∫_{B_j ∩ f^{-1} B_i} e^{sψ(y)} dy
//! ```
//!
//! Preimages are exact inverse-branch pullbacks of bin edges, so at `s = 0`
//! every column sums to 1.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{MapAt, MapDescriptor, Observable, Side};
use crate::quadrature::gauss_legendre8;

pub const MIN_BINS: usize = 2;
pub const MAX_BINS: usize = 1 << 16;
pub const DEFAULT_BINS: usize = 4096;
pub const EIGEN_TOL: f64 = 1e-12;
pub const MAX_POWER_ITERATIONS: usize = 100_000;

/// Sparse `N × N` matrix in compressed-column form.
#[derive(Debug, Clone, PartialEq)]
pub struct UlamMatrix {
    pub n: usize,
    pub t: f64,
    pub s: f64,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl UlamMatrix {
    pub fn bin_width(&self) -> f64 {
        2.0 / self.n as f64
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `M_ij`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        match self.row_idx[range.clone()].binary_search(&i) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    /// `(row, value)` pairs of column `j`, by increasing row.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.column(j).map(|(_, v)| v).sum()).collect()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[k]] += self.values[k] * xj;
            }
        }
    }
}

fn check_bins(n: usize) -> Result<()> {
    if !n.is_power_of_two() || !(MIN_BINS..=MAX_BINS).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "bin count {n} must be a power of two in {MIN_BINS}..={MAX_BINS}"
        )));
    }
    Ok(())
}

fn edge(n: usize, k: usize) -> f64 {
    if k == n {
        1.0
    } else {
        -1.0 + 2.0 * k as f64 / n as f64
    }
}

/// Preimage of `y` on one lap, with the lap ends pinned so that the two laps
/// tile `[-1, 1]` exactly.
fn preimage(map: &MapAt, side: Side, y: f64) -> Result<f64> {
    let (lo, hi) = map.branch_image();
    if y >= hi {
        Ok(map.critical_point())
    } else if y <= lo {
        Ok(if side == Side::L { -1.0 } else { 1.0 })
    } else {
        map.inverse(side, y)
    }
}

/// Source-bin contributions `(j, ∫ e^{sψ})` to destination bin `i`.
fn destination_row(map: &MapAt, psi: &Observable, s: f64, n: usize, i: usize) -> Result<Vec<(usize, f64)>> {
    let (ilo, ihi) = map.branch_image();
    let a = edge(n, i).max(ilo);
    let b = edge(n, i + 1).min(ihi);
    let mut out = Vec::new();
    if a >= b {
        return Ok(out);
    }
    let h = 2.0 / n as f64;
    for side in [Side::L, Side::R] {
        let xa = preimage(map, side, a)?;
        let xb = preimage(map, side, b)?;
        let (u, v) = (xa.min(xb), xa.max(xb));
        if !(u < v) {
            continue;
        }
        let first = (((u + 1.0) / h).floor() as usize).min(n - 1);
        let last = (((v + 1.0) / h).ceil() as usize).clamp(first + 1, n);
        for j in first..last {
            let lo = u.max(edge(n, j));
            let hi = v.min(edge(n, j + 1));
            if hi <= lo {
                continue;
            }
            let mass = if s == 0.0 {
                hi - lo
            } else {
                let mut err = None;
                let v = gauss_legendre8(lo, hi, |y| match psi.eval(map, y) {
                    Ok(p) => (s * p).exp(),
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
                v
            };
            out.push((j, mass));
        }
    }
    Ok(out)
}

pub fn build_ulam(m: &MapDescriptor, t: f64, psi: &Observable, s: f64, n: usize) -> Result<UlamMatrix> {
    check_bins(n)?;
    if !s.is_finite() {
        return Err(Error::InvalidArgument(format!("s = {s}")));
    }
    let map = m.at(t)?;
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| destination_row(&map, psi, s, n, i))
        .collect::<Result<_>>()?;

    let h = 2.0 / n as f64;
    let mut counts = vec![0usize; n + 1];
    for row in &rows {
        for &(j, _) in row {
            counts[j + 1] += 1;
        }
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let col_ptr = counts.clone();
    let mut fill = counts;
    let nnz = col_ptr[n];
    let mut row_idx = vec![0usize; nnz];
    let mut values = vec![0.0; nnz];
    // Rows are visited in increasing order, so each column ends up sorted by row;
    // a destination bin reached from both laps stores the two parts separately
    // in different source columns, never twice in one.
    for (i, row) in rows.iter().enumerate() {
        for &(j, mass) in row {
            let k = fill[j];
            row_idx[k] = i;
            values[k] = mass / h;
            fill[j] += 1;
        }
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NonFinite("Ulam matrix entries"));
    }
    Ok(UlamMatrix { n, t, s, col_ptr, row_idx, values })
}

/// Bin-averaged density on the uniform partition of `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub t: f64,
    pub s: f64,
    pub values: Vec<f64>,
}

impl DensityEstimate {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn bin_width(&self) -> f64 {
        2.0 / self.values.len() as f64
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        -1.0 + (i as f64 + 0.5) * self.bin_width()
    }

    /// `Σ_i ρ_i |B_i|`.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.bin_width()
    }

    /// CSV rows `bin_center,density`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_center,density")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.bin_center(i), v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub s: f64,
    pub t: f64,
    pub lambda: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub lambda: f64,
    pub density: DensityEstimate,
    pub iterations: usize,
}

impl Eigenpair {
    pub fn record(&self) -> EigenRecord {
        EigenRecord {
            n: self.density.n(),
            s: self.density.s,
            t: self.density.t,
            lambda: self.lambda,
            iterations: self.iterations,
        }
    }
}

/// Power iteration on bin masses from the uniform vector. Stops once both the
/// eigenvalue and the L1 change of the normalised vector fall below
/// [`EIGEN_TOL`]; at `s = 0` the eigenvalue is exactly 1 from the first step,
/// so the vector test is the one that matters there.
pub fn leading_eigenpair(m: &UlamMatrix) -> Result<Eigenpair> {
    let n = m.n;
    let mut v = vec![1.0 / n as f64; n];
    let mut w = vec![0.0; n];
    let mut lambda = f64::NAN;
    let mut gap = f64::INFINITY;
    for it in 1..=MAX_POWER_ITERATIONS {
        m.mul_vec(&v, &mut w);
        let norm: f64 = w.iter().sum();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NonFinite("power iteration"));
        }
        w.iter_mut().for_each(|x| *x /= norm);
        let change: f64 = v.iter().zip(&w).map(|(a, b)| (a - b).abs()).sum();
        let dl = (norm - lambda).abs();
        lambda = norm;
        std::mem::swap(&mut v, &mut w);
        gap = dl.max(change);
        if dl < EIGEN_TOL && change < EIGEN_TOL {
            let h = m.bin_width();
            let density = DensityEstimate { t: m.t, s: m.s, values: v.iter().map(|x| x / h).collect() };
            return Ok(Eigenpair { lambda, density, iterations: it });
        }
    }
    Err(Error::NoConvergence { iterations: MAX_POWER_ITERATIONS, gap })
}

/// Midpoint rule `Σ ψ(x_i) ρ_i |B_i|`.
pub fn integrate_density(v: &DensityEstimate, map: &MapAt, psi: &Observable) -> Result<f64> {
    let h = v.bin_width();
    let mut acc = 0.0;
    for (i, rho) in v.values.iter().enumerate() {
        acc += psi.eval(map, v.bin_center(i))? * rho * h;
    }
    Ok(acc)
}

/// Density and eigenvalue at `s = 0` in one call.
pub fn srb_density(m: &MapDescriptor, t: f64, n: usize) -> Result<Eigenpair> {
    leading_eigenpair(&build_ulam(m, t, &Observable::monomial(0), 0.0, n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn cheb() -> MapDescriptor {
        MapDescriptor::chebyshev()
    }

    #[test]
    fn two_bin_matrix() {
        let m = build_ulam(&cheb(), 0.0, &Observable::monomial(2), 0.0, 2).unwrap();
        assert!((m.get(1, 0) - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((m.get(0, 0) - (1.0 - FRAC_1_SQRT_2)).abs() < 1e-15);
        for c in m.column_sums() {
            assert!((c - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn bin_count_checked() {
        for n in [0, 1, 3, 100, 1 << 17] {
            assert!(build_ulam(&cheb(), 0.0, &Observable::monomial(1), 0.0, n).is_err());
        }
    }

    #[test]
    fn arcsine_density() {
        let pair = srb_density(&cheb(), 0.0, 4096).unwrap();
        assert!((pair.lambda - 1.0).abs() < 1e-12);
        let d = &pair.density;
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
        for i in [2047, 2048] {
            let rel = (d.values[i] * PI - 1.0).abs();
            assert!(rel < 0.02, "{}", d.values[i]);
        }
        let map = cheb().at(0.0).unwrap();
        let one = integrate_density(d, &map, &Observable::monomial(0)).unwrap();
        assert!((one - 1.0).abs() < 1e-12);
        // Frozen from an independent assembly with closed-form preimages
        // ±sqrt((1 - y)/2). Ulam bins cannot resolve the inverse-square-root
        // mass next to the fixed point -1, which costs about 3e-3 here.
        let x2 = integrate_density(d, &map, &Observable::monomial(2)).unwrap();
        let x4 = integrate_density(d, &map, &Observable::monomial(4)).unwrap();
        let lyap = integrate_density(d, &map, &Observable::LogAbsDerivative).unwrap();
        assert!((x2 - 0.49668659347174626).abs() < 1e-9, "{x2}");
        assert!((x4 - 0.37085872597112624).abs() < 1e-9, "{x4}");
        assert!((lyap - 0.6881689985756073).abs() < 1e-9, "{lyap}");
        assert!((d.values[2048] - 0.3213443354955066).abs() < 1e-9);
    }

    #[test]
    fn asymmetry_shrinks_with_refinement() {
        let asym = |n: usize| {
            let d = srb_density(&cheb(), 0.0, n).unwrap().density;
            let h = d.bin_width();
            (0..n / 2).map(|i| (d.values[i] - d.values[n - 1 - i]).abs() * h).sum::<f64>()
        };
        let a: Vec<f64> = [256, 1024, 4096, 16384].into_iter().map(asym).collect();
        for w in a.windows(2) {
            assert!(w[1] < w[0], "{a:?}");
        }
    }

    #[test]
    fn weighted_columns_and_csv() {
        let m = build_ulam(&cheb(), 0.0, &Observable::monomial(2), 0.05, 64).unwrap();
        assert!(m.nnz() > 64);
        // Column sums are bin averages of e^{0.05 x^2}.
        let sums = m.column_sums();
        assert!((sums[32] - 1.0).abs() < 1e-4);
        assert!(sums[0] > 1.04 && sums[0] < 1.06);
        let pair = leading_eigenpair(&m).unwrap();
        let mut buf = Vec::new();
        pair.density.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 65);
        let json = serde_json::to_string(&pair.record()).unwrap();
        assert!(json.contains("\"N\":64"));
    }
}
