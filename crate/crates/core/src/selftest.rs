//! Closed-form checks on the Chebyshev map and its conjugates.
//!
//! Tolerances are the advertised ones; a failing row is reported, not hidden.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use serde::Serialize;

use crate::diagnostics::{lambda_c_estimate, lambda_per_estimate, lap_profile, theta_choice, diagnose, DiagnosticsOptions};
use crate::error::Result;
use crate::family::{MapDescriptor, Observable, Window};
use crate::orbits::{find_periodic_points, OrbitTable};
use crate::response::{exact_conjugacy_oracle, BaseDensity};
use crate::ulam::{build_ulam, integrate_density, srb_density};
use crate::zeta::{inverse_zeta_series, pressure_zero, trace_sum, zeta_response, TraceSums, FALLBACK_RADIUS};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub expected: f64,
    pub actual: Option<f64>,
    pub tolerance: f64,
    /// Tolerance is relative to `|expected|`.
    pub relative: bool,
    pub error: Option<String>,
    pub pass: bool,
}

struct Table(Vec<OracleCheck>);

impl Table {
    fn push(&mut self, name: &str, expected: f64, tolerance: f64, actual: Result<f64>) {
        self.push_with(name, expected, tolerance, false, actual);
    }

    fn push_with(&mut self, name: &str, expected: f64, tolerance: f64, relative: bool, actual: Result<f64>) {
        let (actual, error) = match actual {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let bound = if relative { tolerance * expected.abs() } else { tolerance };
        let pass = actual.is_some_and(|v| (v - expected).abs() <= bound);
        self.0.push(OracleCheck { name: name.to_string(), expected, actual, tolerance, relative, error, pass });
    }
}

pub fn run_selftest() -> Vec<OracleCheck> {
    let cheb = MapDescriptor::chebyshev();
    let conj = MapDescriptor::chebyshev_with_motion(vec![1.0], Window { lo: -0.2, hi: 0.2 })
        .expect("the standard motion is admissible");
    let x1 = Observable::monomial(1);
    let x2 = Observable::monomial(2);
    let x4 = Observable::monomial(4);
    let lyap = Observable::LogAbsDerivative;
    let mut t = Table(Vec::new());

    t.push("fixed points of f: -1 and 1/2", 0.5, 1e-14, (|| {
        let c = find_periodic_points(&cheb, 0.0, 1, 1e-12)?;
        Ok(c.iter().map(|o| o.points[0]).fold(f64::NEG_INFINITY, f64::max))
    })());
    t.push("period-2 multiplier -4", -4.0, 1e-10, (|| {
        let c = find_periodic_points(&cheb, 0.0, 2, 1e-12)?;
        Ok(c.iter().find(|o| o.period == 2).map_or(f64::NAN, |o| o.multiplier))
    })());
    t.push("period-2 point (1+sqrt5)/4", (1.0 + 5f64.sqrt()) / 4.0, 1e-14, (|| {
        let c = find_periodic_points(&cheb, 0.0, 2, 1e-12)?;
        Ok(c.iter().find(|o| o.period == 2).map_or(f64::NAN, |o| o.points.iter().copied().fold(f64::MIN, f64::max)))
    })());

    t.push("trace sum p=1", 0.75, 1e-12, trace_sum(&cheb, 0.0, &x2, 0.0, 1).map(|v| v.value));
    t.push("trace sum p=2", 0.8125, 1e-12, trace_sum(&cheb, 0.0, &x2, 0.0, 2).map(|v| v.value));

    let map = cheb.at(0.0).expect("t = 0 is in the window");
    let table20 = OrbitTable::enumerate(&map, 20);
    let series = table20.as_ref().map_err(Clone::clone).and_then(|tab| {
        let tr = TraceSums::from_table(tab, &map, &x2, 0.0, 20, false)?;
        inverse_zeta_series(&tr, 20)
    });
    let coeff = |k: usize| series.as_ref().map(|s| s.coeffs[k]).map_err(Clone::clone);
    t.push("1/zeta coefficient d1", -0.75, 1e-12, coeff(1));
    t.push("1/zeta coefficient d2", -0.125, 1e-12, coeff(2));
    t.push("1/zeta coefficient d5 = -2^-6", -1.0 / 64.0, 1e-12, coeff(5));
    let zeta_at = |psi: &Observable, order: usize| {
        table20
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|tab| zeta_response(tab, &map, psi, order, FALLBACK_RADIUS, None))
    };
    t.push("leading zero z0 (P=20)", 1.0, 1e-6, zeta_at(&x2, 20).map(|r| r.zero.z0));
    t.push("zeta response x^2 (P=20)", 0.5, 1e-4, zeta_at(&x2, 20).map(|r| r.value));
    t.push("zeta response x (P=20)", 0.0, 1e-6, zeta_at(&x1, 20).map(|r| r.value));
    t.push("zeta response log|f'| (P=16)", LN_2, 1e-3, zeta_at(&lyap, 16).map(|r| r.value));
    t.push("conjugated lambda at t=0.1 (P=20)", 1.0, 1e-6, (|| {
        let m = conj.at(0.1)?;
        let tab = OrbitTable::enumerate(&m, 20)?;
        Ok(pressure_zero(&tab, &m, &x2, 0.0, 20, FALLBACK_RADIUS)?.lambda)
    })());

    t.push("Ulam N=2 entry 1/sqrt2", FRAC_1_SQRT_2, 1e-14, build_ulam(&cheb, 0.0, &x2, 0.0, 2).map(|m| m.get(1, 0)));
    let pair = srb_density(&cheb, 0.0, 4096);
    let on_pair = |f: &dyn Fn(&crate::ulam::Eigenpair) -> Result<f64>| pair.as_ref().map_err(Clone::clone).and_then(f);
    t.push("Ulam eigenvalue (N=4096)", 1.0, 1e-3, on_pair(&|p| Ok(p.lambda)));
    t.push_with("Ulam density at 0 = 1/pi (N=4096)", 1.0 / PI, 0.02, true, on_pair(&|p| Ok(p.density.values[2048])));
    t.push("Ulam integral x^2 (N=4096)", 0.5, 1e-3, on_pair(&|p| integrate_density(&p.density, &map, &x2)));
    t.push("Ulam integral x^4 (N=4096)", 0.375, 1e-3, on_pair(&|p| integrate_density(&p.density, &map, &x4)));

    t.push("lambda_c", 4.0, 1e-9, lambda_c_estimate(&cheb, 0.0, 40).map(|g| g.lambda_c));
    t.push("lambda_per (p<=10)", 2.0, 1e-8, lambda_per_estimate(&cheb, 0.0, 10));
    t.push("lambda_per (p=1)", 2.0, 1e-12, lambda_per_estimate(&cheb, 0.0, 1));
    let laps = lap_profile(&map, 20);
    t.push("lambda_eta (n=20)", 1.824, 0.01, laps.as_ref().map(|l| l.raw()).map_err(Clone::clone));
    t.push("lambda_eta extrapolated", 2.0, 0.05, laps.as_ref().map(|l| l.extrapolated()).map_err(Clone::clone));
    t.push("lambda_eta (n=1)", 1.0, 1e-15, lap_profile(&map, 1).map(|l| l.raw()));
    t.push("Theta^-1 (safety 0.9)", 1.2728, 1e-4, (|| {
        let r = diagnose(&cheb, &[0.0], &DiagnosticsOptions::default())?;
        theta_choice(&r, 0.9)
    })());

    t.push("oracle x at t=0.1", 0.05, 1e-12, exact_conjugacy_oracle(&BaseDensity::Arcsine, &conj, &x1, 0.1));
    t.push("oracle x^2 at t=0.2", 0.515, 1e-12, exact_conjugacy_oracle(&BaseDensity::Arcsine, &conj, &x2, 0.2));
    t.push("oracle x^2 at t=0", 0.5, 1e-12, exact_conjugacy_oracle(&BaseDensity::Arcsine, &conj, &x2, 0.0));
    t.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_expected_failures_only() {
        let rows = run_selftest();
        assert!(rows.len() > 20);
        let failing: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
        // Known gaps between the advertised tolerances and what the methods reach.
        let known = [
            "zeta response x (P=20)",
            "Ulam integral x^2 (N=4096)",
            "Ulam integral x^4 (N=4096)",
            "lambda_eta (n=20)",
        ];
        for name in &failing {
            assert!(known.contains(name), "unexpected failure: {name}");
        }
        assert!(rows.iter().all(|r| r.error.is_none()));
    }
}
