//! Response curves `t ↦ ∫ψ ρ_t dx` over a parameter grid.
//!
//! Each grid point is computed independently by up to three methods: the
//! zeta pressure derivative, the Ulam density, and for conjugated families the
//! exact pushforward `∫ψ dμ_t = ∫ψ∘h_t dμ_0`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{diagnose_at, CERow, DiagnosticsOptions};
use crate::error::{Error, Result};
use crate::family::{MapDescriptor, Observable};
use crate::orbits::OrbitTable;
use crate::quadrature::gauss_chebyshev_nodes;
use crate::ulam::{integrate_density, srb_density, DensityEstimate, MAX_BINS, MIN_BINS};
use crate::zeta::{zeta_response, FALLBACK_RADIUS, TRUNCATION_CAP};

pub const CSV_HEADER: &str = "# srb-zeta v1, t,value_zeta,value_ulam,value_oracle,lambda_zeta,lambda_ulam";
/// Agreement tolerance between methods; rows are flagged beyond ten times it.
pub const METHOD_TOL: f64 = 1e-3;
pub const ORACLE_NODES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Zeta,
    Ulam,
    Oracle,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "zeta" => Ok(Method::Zeta),
            "ulam" => Ok(Method::Ulam),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// `count` equispaced points between `min` and `max`, visited from `min`
/// towards `max` (so `min > max` gives a descending sweep over the same points).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let (lo, hi) = (self.min.min(self.max), self.min.max(self.max));
        let n = self.count;
        let mut pts: Vec<f64> = (0..n)
            .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect();
        if self.min > self.max {
            pts.reverse();
        }
        pts
    }
}

impl std::str::FromStr for Grid {
    type Err = Error;

    /// `MIN:MAX:COUNT`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("grid '{s}' is not MIN:MAX:COUNT"));
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(Grid {
            min: parts[0].trim().parse().map_err(|_| bad())?,
            max: parts[1].trim().parse().map_err(|_| bad())?,
            count: parts[2].trim().parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub family: MapDescriptor,
    pub observable: Observable,
    pub grid: Grid,
    pub methods: Vec<Method>,
    pub truncation: usize,
    pub ulam_bins: usize,
    pub max_degree: usize,
    pub diagnostics: DiagnosticsOptions,
    /// Continue with the fallback radius when diagnostics fail.
    pub force: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.count < 3 {
            return Err(Error::Config(format!("grid count {} < 3", g.count)));
        }
        if !(g.min.is_finite() && g.max.is_finite()) || g.min == g.max {
            return Err(Error::Config(format!("degenerate grid [{}, {}]", g.min, g.max)));
        }
        let w = self.family.window();
        for t in [g.min, g.max] {
            if !w.contains(t) {
                return Err(Error::Config(format!("grid end {t} outside family window [{}, {}]", w.lo, w.hi)));
            }
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.methods.contains(&Method::Oracle) && !self.family.is_conjugated() {
            return Err(Error::Config("the oracle method needs a conjugated family".into()));
        }
        if !(1..=TRUNCATION_CAP).contains(&self.truncation) {
            return Err(Error::Config(format!("truncation {} not in 1..={TRUNCATION_CAP}", self.truncation)));
        }
        if !self.ulam_bins.is_power_of_two() || !(MIN_BINS..=MAX_BINS).contains(&self.ulam_bins) {
            return Err(Error::Config(format!("ulam_bins {} must be a power of two ≤ {MAX_BINS}", self.ulam_bins)));
        }
        if !(self.diagnostics.safety > 0.0 && self.diagnostics.safety < 1.0) {
            return Err(Error::Config(format!("safety {} not in (0, 1)", self.diagnostics.safety)));
        }
        Ok(())
    }

    fn uses(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseRow {
    pub t: f64,
    pub value_zeta: Option<f64>,
    pub value_ulam: Option<f64>,
    pub value_oracle: Option<f64>,
    pub lambda_zeta: Option<f64>,
    pub lambda_ulam: Option<f64>,
    /// Search radius used for the zeta zero.
    pub radius: f64,
    /// Two methods differ by more than `10 · METHOD_TOL`.
    pub flagged: bool,
    /// `None` when diagnostics failed under `force`.
    pub diagnostics: Option<CERow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveMetadata {
    pub version: String,
    pub observable: String,
    pub truncation: usize,
    pub ulam_bins: usize,
    pub method_tolerance: f64,
    pub methods: Vec<Method>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseCurve {
    pub metadata: CurveMetadata,
    /// Ascending in `t`.
    pub rows: Vec<ResponseRow>,
}

impl ResponseCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.t,
                cell(r.value_zeta),
                cell(r.value_ulam),
                cell(r.value_oracle),
                cell(r.lambda_zeta),
                cell(r.lambda_ulam)
            )?;
        }
        Ok(())
    }

    /// The column used for fitting: zeta, else Ulam, else the oracle.
    pub fn primary_values(&self) -> Option<Vec<f64>> {
        let pick = |r: &ResponseRow| r.value_zeta.or(r.value_ulam).or(r.value_oracle);
        self.rows.iter().map(pick).collect()
    }
}

/// Base-map density used by [`exact_conjugacy_oracle`].
#[derive(Debug, Clone, PartialEq)]
pub enum BaseDensity {
    /// `1/(π√(1-x²))`, exact for the Chebyshev base.
    Arcsine,
    Estimate(DensityEstimate),
}

/// `∫ ψ∘h_t dμ_0`.
pub fn exact_conjugacy_oracle(base: &BaseDensity, family: &MapDescriptor, psi: &Observable, t: f64) -> Result<f64> {
    let motion = family.motion().ok_or(Error::NotConjugated)?;
    let map = family.at(t)?;
    let h = motion.at(t)?;
    match base {
        BaseDensity::Arcsine => {
            if !family.base().is_some_and(MapDescriptor::is_chebyshev) {
                return Err(Error::InvalidArgument("the arcsine density belongs to the Chebyshev base".into()));
            }
            let mut acc = 0.0;
            for x in gauss_chebyshev_nodes(ORACLE_NODES) {
                acc += psi.eval(&map, h.eval(x))?;
            }
            Ok(acc / ORACLE_NODES as f64)
        }
        BaseDensity::Estimate(d) => {
            let w = d.bin_width();
            let mut acc = 0.0;
            for (i, rho) in d.values.iter().enumerate() {
                acc += psi.eval(&map, h.eval(d.bin_center(i)))? * rho * w;
            }
            Ok(acc)
        }
    }
}

fn oracle_base(cfg: &SweepConfig) -> Result<Option<BaseDensity>> {
    if !cfg.uses(Method::Oracle) {
        return Ok(None);
    }
    let base = cfg.family.base().ok_or(Error::NotConjugated)?;
    if base.is_chebyshev() {
        Ok(Some(BaseDensity::Arcsine))
    } else {
        Ok(Some(BaseDensity::Estimate(srb_density(base, 0.0, cfg.ulam_bins)?.density)))
    }
}

fn sweep_row(cfg: &SweepConfig, base: Option<&BaseDensity>, t: f64) -> Result<ResponseRow> {
    let m = &cfg.family;
    let diagnostics = match diagnose_at(m, t, &cfg.diagnostics) {
        Ok(r) => Some(r),
        Err(_) if cfg.force => None,
        Err(e) => return Err(e),
    };
    let radius = diagnostics.as_ref().map_or(FALLBACK_RADIUS, |d| d.theta_inv);

    let (value_zeta, lambda_zeta) = if cfg.uses(Method::Zeta) {
        let map = m.at(t)?;
        let table = OrbitTable::enumerate(&map, cfg.truncation)?;
        let r = zeta_response(&table, &map, &cfg.observable, cfg.truncation, radius, None)?;
        (Some(r.value), Some(r.zero.lambda))
    } else {
        (None, None)
    };
    let (value_ulam, lambda_ulam) = if cfg.uses(Method::Ulam) {
        let pair = srb_density(m, t, cfg.ulam_bins)?;
        let v = integrate_density(&pair.density, &m.at(t)?, &cfg.observable)?;
        (Some(v), Some(pair.lambda))
    } else {
        (None, None)
    };
    let value_oracle = match base {
        Some(b) => Some(exact_conjugacy_oracle(b, m, &cfg.observable, t)?),
        None => None,
    };
    let values: Vec<f64> = [value_zeta, value_ulam, value_oracle].into_iter().flatten().collect();
    let spread = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(ResponseRow {
        t,
        value_zeta,
        value_ulam,
        value_oracle,
        lambda_zeta,
        lambda_ulam,
        radius,
        flagged: spread > 10.0 * METHOD_TOL,
        diagnostics,
    })
}

/// Evaluates every grid point independently (in parallel) and returns the rows
/// in ascending `t`. No state passes between grid points, so the result does
/// not depend on sweep direction or thread count.
pub fn response_curve(cfg: &SweepConfig) -> Result<ResponseCurve> {
    cfg.validate()?;
    let base = oracle_base(cfg)?;
    let pts = cfg.grid.points();
    let mut rows: Vec<ResponseRow> = pts
        .par_iter()
        .map(|&t| sweep_row(cfg, base.as_ref(), t))
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    Ok(ResponseCurve {
        metadata: CurveMetadata {
            version: env!("CARGO_PKG_VERSION").to_string(),
            observable: cfg.observable.to_string(),
            truncation: cfg.truncation,
            ulam_bins: cfg.ulam_bins,
            method_tolerance: METHOD_TOL,
            methods,
        },
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolynomialFit {
    pub degree: usize,
    /// Coefficients of `1, t, t², …`.
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticityReport {
    pub fits: Vec<PolynomialFit>,
    /// `|c_D| / max_{k<D} |c_k|` for the highest-degree fit.
    pub decay_ratio: f64,
    pub verdict: String,
}

/// Least-squares fits of degrees `0..=max_degree` in the rescaled variable
/// `u = t / max|t|`, reported in `t`.
pub fn fit_polynomials(ts: &[f64], ys: &[f64], max_degree: usize) -> Result<Vec<PolynomialFit>> {
    if ts.len() != ys.len() {
        return Err(Error::InvalidArgument("abscissae and values differ in length".into()));
    }
    if ts.len() < max_degree + 3 {
        return Err(Error::InvalidArgument(format!(
            "{} points cannot support a degree-{max_degree} fit (need {})",
            ts.len(),
            max_degree + 3
        )));
    }
    let scale = ts.iter().fold(0.0f64, |a, &t| a.max(t.abs()));
    if scale == 0.0 {
        return Err(Error::IllConditioned("all abscissae are zero".into()));
    }
    let b = DVector::from_column_slice(ys);
    let mut fits = Vec::with_capacity(max_degree + 1);
    for degree in 0..=max_degree {
        let a = DMatrix::from_fn(ts.len(), degree + 1, |i, k| (ts[i] / scale).powi(k as i32));
        let svd = a.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-10 * smax) {
            return Err(Error::IllConditioned(format!(
                "degree {degree} fit has condition number {:.3e}",
                smax / smin
            )));
        }
        let u = svd.solve(&b, 0.0).map_err(|e| Error::IllConditioned(e.to_string()))?;
        let resid = &a * &u - &b;
        let residual = (resid.norm_squared() / ts.len() as f64).sqrt();
        let coefficients = u.iter().enumerate().map(|(k, c)| c / scale.powi(k as i32)).collect();
        fits.push(PolynomialFit { degree, coefficients, residual });
    }
    Ok(fits)
}

pub fn analyticity_report(curve: &ResponseCurve, max_degree: usize) -> Result<AnalyticityReport> {
    let ys = curve
        .primary_values()
        .ok_or_else(|| Error::InvalidArgument("curve has rows without values".into()))?;
    let ts: Vec<f64> = curve.rows.iter().map(|r| r.t).collect();
    let fits = fit_polynomials(&ts, &ys, max_degree)?;
    let top = fits.last().expect("degree 0 is always fitted");
    let lead = top.coefficients[..top.degree].iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let decay_ratio = if top.degree == 0 || lead == 0.0 {
        0.0
    } else {
        top.coefficients[top.degree].abs() / lead
    };
    let verdict = if top.residual <= METHOD_TOL && decay_ratio < 1.0 {
        "consistent with real-analytic response"
    } else {
        "inconclusive"
    };
    Ok(AnalyticityReport { fits, decay_ratio, verdict: verdict.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::Window;

    fn motion() -> MapDescriptor {
        MapDescriptor::chebyshev_with_motion(vec![1.0], Window::new(-0.2, 0.2).unwrap()).unwrap()
    }

    #[test]
    fn oracle_closed_forms() {
        let m = motion();
        let x = exact_conjugacy_oracle(&BaseDensity::Arcsine, &m, &Observable::monomial(1), 0.1).unwrap();
        assert!((x - 0.05).abs() < 1e-14);
        let x2 = exact_conjugacy_oracle(&BaseDensity::Arcsine, &m, &Observable::monomial(2), 0.2).unwrap();
        assert!((x2 - 0.515).abs() < 1e-14);
        let x0 = exact_conjugacy_oracle(&BaseDensity::Arcsine, &m, &Observable::monomial(2), 0.0).unwrap();
        assert!((x0 - 0.5).abs() < 1e-14);
        let lyap = exact_conjugacy_oracle(&BaseDensity::Arcsine, &m, &Observable::LogAbsDerivative, 0.1).unwrap();
        assert!((lyap - std::f64::consts::LN_2).abs() < 1e-2);
        assert!(matches!(
            exact_conjugacy_oracle(&BaseDensity::Arcsine, &MapDescriptor::chebyshev(), &Observable::monomial(1), 0.0),
            Err(Error::NotConjugated)
        ));
    }

    #[test]
    fn grid_points_shared_by_both_directions() {
        let up = Grid { min: -0.1, max: 0.1, count: 21 }.points();
        let mut down = Grid { min: 0.1, max: -0.1, count: 21 }.points();
        down.reverse();
        assert_eq!(up, down);
        assert_eq!(up[20], 0.1);
        assert_eq!("-0.1:0.1:21".parse::<Grid>().unwrap().count, 21);
        assert!("-0.1:0.1".parse::<Grid>().is_err());
    }

    #[test]
    fn fits_recover_polynomials() {
        let ts: Vec<f64> = (0..21).map(|i| -0.1 + 0.01 * i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 0.5 + 0.375 * t * t).collect();
        let fits = fit_polynomials(&ts, &ys, 4).unwrap();
        let c = &fits[4].coefficients;
        assert!((c[0] - 0.5).abs() < 1e-12 && (c[2] - 0.375).abs() < 1e-9);
        assert!(c[1].abs() < 1e-12 && c[3].abs() < 1e-9);
        for w in fits.windows(2) {
            assert!(w[1].residual <= w[0].residual + 1e-15);
        }
        let flat = fit_polynomials(&ts, &[0.25; 21], 2).unwrap();
        assert!(flat[0].residual < 1e-15);
        assert!(fit_polynomials(&ts[..4], &ys[..4], 2).is_err());
        assert!(matches!(fit_polynomials(&[0.0; 6], &[1.0; 6], 2), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn small_sweep() {
        let cfg = SweepConfig {
            family: motion(),
            observable: Observable::monomial(2),
            grid: Grid { min: -0.1, max: 0.1, count: 5 },
            methods: vec![Method::Zeta, Method::Oracle],
            truncation: 12,
            ulam_bins: 256,
            max_degree: 2,
            diagnostics: DiagnosticsOptions { lap_depth: 12, max_period: 8, ..Default::default() },
            force: false,
        };
        let curve = response_curve(&cfg).unwrap();
        assert_eq!(curve.rows.len(), 5);
        for r in &curve.rows {
            let exact = 0.5 + 0.375 * r.t * r.t;
            assert!((r.value_oracle.unwrap() - exact).abs() < 1e-13);
            assert!((r.value_zeta.unwrap() - exact).abs() < 1e-2, "{r:?}");
            assert!((r.lambda_zeta.unwrap() - 1.0).abs() < 1e-3);
            assert!(r.value_ulam.is_none() && !r.flagged);
        }
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 6);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SweepConfig {
            family: MapDescriptor::chebyshev(),
            observable: Observable::monomial(1),
            grid: Grid { min: -0.1, max: 0.1, count: 21 },
            methods: vec![Method::Oracle],
            truncation: 16,
            ulam_bins: 4096,
            max_degree: 3,
            diagnostics: DiagnosticsOptions::default(),
            force: false,
        };
        assert!(cfg.validate().is_err());
        cfg.methods = vec![Method::Zeta];
        cfg.validate().unwrap();
        cfg.truncation = 21;
        assert!(cfg.validate().is_err());
        cfg.truncation = 16;
        cfg.grid.count = 2;
        assert!(cfg.validate().is_err());
    }
}
