//! Analytic unimodal families on `I = [-1, 1]`, analytic motions, and
//! observables.
//!
//! A family is either *direct*, `f_t(x) = Σ c_jk t^j x^k`, or *conjugated*,
//! `f_t = h_t ∘ f_0 ∘ h_t^{-1}` for a base map `f_0` and a motion
//! `h_t(x) = x + t g(x) (1 - x²)`. Conjugated families stay in the
//! topological class of `f_0` by construction, and their periodic data and
//! invariant measures are known exactly from the base map.
//!
//! [`MapDescriptor::at`] freezes the parameter and returns a [`MapAt`], the
//! object every numerical routine works with.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Jet, PolyJet, Polynomial};
use crate::roots::bracketed_newton;

/// Tolerance for the boundary condition `f_t(±1) = -1`.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Slack allowed on `x ∈ [-1, 1]` for points produced by root finders.
pub const DOMAIN_SLACK: f64 = 1e-9;
const ROOT_XTOL: f64 = 1e-15;
const ROOT_MAX_ITER: usize = 200;

/// Lap of a unimodal map: left or right of the critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::L => "L",
            Side::R => "R",
        })
    }
}

/// Closed parameter interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::Config(format!("invalid parameter window [{lo}, {hi}]")));
        }
        Ok(Window { lo, hi })
    }

    pub fn point(t: f64) -> Self {
        Window { lo: t, hi: t }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo - 1e-12 && t <= self.hi + 1e-12
    }

    pub fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutsideWindow { t, lo: self.lo, hi: self.hi })
        }
    }

    /// `n` equispaced samples including both ends (one sample for a point window).
    pub fn samples(&self, n: usize) -> Vec<f64> {
        if self.lo == self.hi || n < 2 {
            return vec![self.lo];
        }
        (0..n)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Real analytic motion `h_t(x) = x + t g(x) (1 - x²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticMotion {
    g: Polynomial,
    window: Window,
}

impl AnalyticMotion {
    /// Validates that `h_t` is an increasing diffeomorphism of `I` for every
    /// sampled `t` in the window.
    pub fn new(g: Polynomial, window: Window) -> Result<Self> {
        if !g.is_finite() {
            return Err(Error::InvalidMotion("non-finite coefficient".into()));
        }
        let motion = AnalyticMotion { g, window };
        for t in window.samples(41) {
            let dh = motion.polynomial(t).derivative();
            for i in 0..=2000 {
                let x = -1.0 + i as f64 / 1000.0;
                let d = dh.eval(x);
                if !(d > 0.0) {
                    return Err(Error::InvalidMotion(format!(
                        "h_t'(x) = {d} <= 0 at t = {t}, x = {x}"
                    )));
                }
            }
        }
        Ok(motion)
    }

    pub fn g(&self) -> &Polynomial {
        &self.g
    }

    pub fn window(&self) -> Window {
        self.window
    }

    fn polynomial(&self, t: f64) -> Polynomial {
        let bump = Polynomial::new(vec![1.0, 0.0, -1.0]);
        Polynomial::identity().add(&self.g.mul(&bump).scale(t))
    }

    /// `h_t` as a polynomial in `x`.
    pub fn at(&self, t: f64) -> Result<Polynomial> {
        self.window.check(t)?;
        Ok(self.polynomial(t))
    }

    pub fn apply(&self, t: f64, x: f64) -> Result<f64> {
        self.window.check(t)?;
        Ok(x + t * self.g.eval(x) * (1.0 - x * x))
    }
}

/// `h_t(x)`.
pub fn apply_motion(motion: &AnalyticMotion, t: f64, x: f64) -> Result<f64> {
    motion.apply(t, x)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    /// `coefficients[j][k]` multiplies `t^j x^k`.
    Direct { coefficients: Vec<Vec<f64>> },
    Conjugated { base: Box<MapDescriptor>, motion: AnalyticMotion },
}

/// An analytic unimodal family on `[-1, 1]` with its admissible parameter window.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDescriptor {
    kind: FamilyKind,
    window: Window,
}

impl MapDescriptor {
    /// Builds a direct polynomial family and checks the boundary condition,
    /// the critical point at 0 with `f''(0) < 0`, unimodality, and `f_t(I) ⊆ I`
    /// on a sampled `(t, x)` grid.
    pub fn direct(coefficients: Vec<Vec<f64>>, window: Window) -> Result<Self> {
        if coefficients.is_empty() || coefficients.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Config("direct family needs finite coefficients".into()));
        }
        let m = MapDescriptor { kind: FamilyKind::Direct { coefficients }, window };
        for t in window.samples(21) {
            m.check_direct_slice(t)?;
        }
        Ok(m)
    }

    fn check_direct_slice(&self, t: f64) -> Result<()> {
        let f = self.direct_polynomial(t);
        let bad = |msg: String| Err(Error::InvalidFamily(format!("{msg} (t = {t})")));
        for x in [-1.0, 1.0] {
            if (f.eval(x) + 1.0).abs() > BOUNDARY_TOL {
                return bad(format!("f_t({x}) = {} != -1", f.eval(x)));
            }
        }
        let df = f.derivative();
        let d2f = df.derivative();
        if df.eval(0.0).abs() > BOUNDARY_TOL {
            return bad(format!("critical point not at 0: f_t'(0) = {}", df.eval(0.0)));
        }
        if !(d2f.eval(0.0) < 0.0) {
            return bad(format!("f_t''(0) = {} is not negative", d2f.eval(0.0)));
        }
        for i in 0..=400 {
            let x = -1.0 + i as f64 / 200.0;
            let y = f.eval(x);
            if !(-1.0 - BOUNDARY_TOL..=1.0 + BOUNDARY_TOL).contains(&y) {
                return bad(format!("f_t({x}) = {y} leaves [-1, 1]"));
            }
            let d = df.eval(x);
            if (x < 0.0 && d <= 0.0) || (x > 0.0 && d >= 0.0) {
                return bad(format!("not unimodal: f_t'({x}) = {d}"));
            }
        }
        Ok(())
    }

    /// `f_t = h_t ∘ f_0 ∘ h_t^{-1}` over the motion's window. The base is
    /// always evaluated at its own parameter 0.
    pub fn conjugated(base: MapDescriptor, motion: AnalyticMotion) -> Result<Self> {
        if !base.window.contains(0.0) {
            return Err(Error::Config("base family window must contain t = 0".into()));
        }
        let window = motion.window();
        Ok(MapDescriptor {
            kind: FamilyKind::Conjugated { base: Box::new(base), motion },
            window,
        })
    }

    /// The full Chebyshev map `1 - 2x²`, constant in `t`.
    pub fn chebyshev() -> Self {
        MapDescriptor {
            kind: FamilyKind::Direct { coefficients: vec![vec![1.0, 0.0, -2.0]] },
            window: Window { lo: -1.0, hi: 1.0 },
        }
    }

    /// Chebyshev base moved by `h_t(x) = x + t g(x)(1 - x²)`.
    pub fn chebyshev_with_motion(g: Vec<f64>, window: Window) -> Result<Self> {
        let motion = AnalyticMotion::new(Polynomial::new(g), window)?;
        Self::conjugated(Self::chebyshev(), motion)
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn motion(&self) -> Option<&AnalyticMotion> {
        match &self.kind {
            FamilyKind::Conjugated { motion, .. } => Some(motion),
            FamilyKind::Direct { .. } => None,
        }
    }

    pub fn base(&self) -> Option<&MapDescriptor> {
        match &self.kind {
            FamilyKind::Conjugated { base, .. } => Some(base),
            FamilyKind::Direct { .. } => None,
        }
    }

    pub fn is_conjugated(&self) -> bool {
        self.motion().is_some()
    }

    /// True for the direct family `1 - 2x²` (independent of `t`).
    pub fn is_chebyshev(&self) -> bool {
        match &self.kind {
            FamilyKind::Direct { coefficients } => {
                coefficients.len() == 1
                    && Polynomial::new(coefficients[0].clone()).coeffs() == [1.0, 0.0, -2.0]
            }
            FamilyKind::Conjugated { .. } => false,
        }
    }

    fn direct_polynomial(&self, t: f64) -> Polynomial {
        let FamilyKind::Direct { coefficients } = &self.kind else {
            unreachable!("direct_polynomial on a conjugated family")
        };
        let width = coefficients.iter().map(Vec::len).max().unwrap_or(0);
        let mut a = vec![0.0; width];
        let mut tj = 1.0;
        for row in coefficients {
            for (k, c) in row.iter().enumerate() {
                a[k] += c * tj;
            }
            tj *= t;
        }
        Polynomial::new(a)
    }

    /// Freezes the parameter.
    pub fn at(&self, t: f64) -> Result<MapAt> {
        self.window.check(t)?;
        match &self.kind {
            FamilyKind::Direct { .. } => {
                let f = PolyJet::new(self.direct_polynomial(t));
                let critical_value = f.value(0.0);
                Ok(MapAt { t, repr: Repr::Direct(f), critical_point: 0.0, critical_value })
            }
            FamilyKind::Conjugated { base, motion } => {
                let base = base.at(0.0)?;
                let h = PolyJet::new(motion.at(t)?);
                let critical_point = h.value(base.critical_point);
                let critical_value = h.value(base.critical_value);
                Ok(MapAt {
                    t,
                    repr: Repr::Conjugated { base: Box::new(base), motion: h },
                    critical_point,
                    critical_value,
                })
            }
        }
    }

    /// `f_t(x)`.
    pub fn eval_map(&self, t: f64, x: f64) -> Result<f64> {
        let map = self.at(t)?;
        check_domain(x)?;
        finite(map.eval(x), x)
    }

    /// `f_t^{(order)}(x)` for order 1, 2 or 3.
    pub fn eval_deriv(&self, t: f64, x: f64, order: usize) -> Result<f64> {
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidArgument(format!("derivative order {order} not in 1..=3")));
        }
        let map = self.at(t)?;
        check_domain(x)?;
        finite(map.jet(x).0[order], x)
    }

    pub fn schwarzian(&self, t: f64, x: f64) -> Result<f64> {
        let map = self.at(t)?;
        check_domain(x)?;
        map.schwarzian(x)
    }
}

fn check_domain(x: f64) -> Result<()> {
    if x.is_finite() && x.abs() <= 1.0 + DOMAIN_SLACK {
        Ok(())
    } else {
        Err(Error::OutsideInterval(x))
    }
}

fn finite(v: f64, x: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InverseMotion(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Direct(PolyJet),
    Conjugated { base: Box<MapAt>, motion: PolyJet },
}

/// A single map `f_t` of a family, with cached critical data.
#[derive(Debug, Clone, PartialEq)]
pub struct MapAt {
    t: f64,
    repr: Repr,
    critical_point: f64,
    critical_value: f64,
}

impl MapAt {
    pub fn t(&self) -> f64 {
        self.t
    }

    /// The critical point `c_t` (0 for direct families, `h_t(c_0)` for conjugated ones).
    pub fn critical_point(&self) -> f64 {
        self.critical_point
    }

    pub fn critical_value(&self) -> f64 {
        self.critical_value
    }

    /// Image of either lap: `[f(±1), f(c)] = [-1, f(c)]`.
    pub fn branch_image(&self) -> (f64, f64) {
        (-1.0, self.critical_value)
    }

    pub fn side(&self, x: f64) -> Side {
        if x < self.critical_point {
            Side::L
        } else {
            Side::R
        }
    }

    /// `h_t^{-1}(x)`; NaN only if the motion is not monotone, which
    /// construction rules out.
    fn motion_inverse(h: &PolyJet, x: f64) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        // Every admissible motion fixes both endpoints.
        if x.abs() == 1.0 {
            return x;
        }
        let guess = 2.0 * x - h.value(x);
        bracketed_newton(
            |y| {
                let (v, d) = h.value_and_derivative(y);
                (v - x, d)
            },
            -1.0,
            1.0,
            Some(guess),
            ROOT_XTOL,
            ROOT_MAX_ITER,
        )
        .unwrap_or(f64::NAN)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Direct(f) => f.value(x),
            Repr::Conjugated { base, motion } => {
                let y = Self::motion_inverse(motion, x);
                motion.value(base.eval(y))
            }
        }
    }

    pub fn value_and_derivative(&self, x: f64) -> (f64, f64) {
        match &self.repr {
            Repr::Direct(f) => f.value_and_derivative(x),
            Repr::Conjugated { base, motion } => {
                let y = Self::motion_inverse(motion, x);
                let (_, dh_y) = motion.value_and_derivative(y);
                let (b, db) = base.value_and_derivative(y);
                let (v, dh_b) = motion.value_and_derivative(b);
                (v, dh_b * db / dh_y)
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.value_and_derivative(x).1
    }

    /// Value and first three derivatives.
    pub fn jet(&self, x: f64) -> Jet {
        match &self.repr {
            Repr::Direct(f) => f.jet(x),
            Repr::Conjugated { base, motion } => {
                let y = Self::motion_inverse(motion, x);
                let inv = Jet::inverse(motion.jet(y), y);
                let inner = Jet::compose(base.jet(y), inv);
                Jet::compose(motion.jet(inner.0[0]), inner)
            }
        }
    }

    /// `f'''/f' - (3/2)(f''/f')²`; undefined where `f'` vanishes.
    pub fn schwarzian(&self, x: f64) -> Result<f64> {
        let Jet([_, d1, d2, d3]) = self.jet(x);
        if x == self.critical_point || d1 == 0.0 {
            return Err(Error::AtCriticalPoint(x));
        }
        let r = d2 / d1;
        Ok(d3 / d1 - 1.5 * r * r)
    }

    /// The unique `x` on `side` with `f(x) = y`.
    pub fn inverse(&self, side: Side, y: f64) -> Result<f64> {
        let (lo, hi) = self.branch_image();
        if !(y >= lo - BOUNDARY_TOL && y <= hi + BOUNDARY_TOL) {
            return Err(Error::OutsideBranchImage { side, y });
        }
        let y = y.clamp(lo, hi);
        match &self.repr {
            Repr::Direct(f) => {
                let c = self.critical_point;
                let (a, b) = match side {
                    Side::L => (-1.0, c),
                    Side::R => (c, 1.0),
                };
                if y == hi {
                    return Ok(c);
                }
                bracketed_newton(
                    |x| {
                        let (v, d) = f.value_and_derivative(x);
                        (v - y, d)
                    },
                    a,
                    b,
                    None,
                    ROOT_XTOL,
                    ROOT_MAX_ITER,
                )
                .or_else(|| {
                    // y within rounding of f(±1) = -1: the outer endpoint.
                    let outer = if side == Side::L { a } else { b };
                    ((f.value(outer) - y).abs() <= BOUNDARY_TOL).then_some(outer)
                })
                .ok_or(Error::OutsideBranchImage { side, y })
            }
            Repr::Conjugated { base, motion } => {
                let yb = Self::motion_inverse(motion, y);
                let xb = base.inverse(side, yb)?;
                Ok(motion.value(xb))
            }
        }
    }

    /// `h_t` when this map is a conjugate, else `None`.
    pub fn motion_value(&self, x: f64) -> Option<f64> {
        match &self.repr {
            Repr::Conjugated { motion, .. } => Some(motion.value(x)),
            Repr::Direct(_) => None,
        }
    }
}

/// Real observable `ψ : I → ℝ`.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    Polynomial(Polynomial),
    /// `log|f_t'(x)|`; its mean is the Lyapunov exponent.
    LogAbsDerivative,
}

impl Observable {
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("observable coefficients must be finite".into()));
        }
        Ok(Observable::Polynomial(Polynomial::new(coeffs)))
    }

    /// `x ↦ x^k`.
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        Observable::Polynomial(Polynomial::new(c))
    }

    pub fn eval(&self, map: &MapAt, x: f64) -> Result<f64> {
        match self {
            Observable::Polynomial(p) => Ok(p.eval(x)),
            Observable::LogAbsDerivative => {
                let d = map.derivative(x);
                if d == 0.0 {
                    Err(Error::ZeroDerivative(x))
                } else {
                    Ok(d.abs().ln())
                }
            }
        }
    }

    /// `ψ ∘ h_t` as a polynomial observable.
    pub fn compose_motion(&self, motion: &AnalyticMotion, t: f64) -> Result<Observable> {
        match self {
            Observable::Polynomial(p) => Ok(Observable::Polynomial(p.compose(&motion.at(t)?))),
            Observable::LogAbsDerivative => Err(Error::InvalidArgument(
                "log|f'| cannot be composed with a motion as a polynomial".into(),
            )),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Polynomial(p) => {
                write!(f, "polynomial[")?;
                for (k, c) in p.coeffs().iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, "]")
            }
            Observable::LogAbsDerivative => write!(f, "log_abs_derivative"),
        }
    }
}

pub fn eval_observable(psi: &Observable, m: &MapDescriptor, t: f64, x: f64) -> Result<f64> {
    let map = m.at(t)?;
    check_domain(x)?;
    psi.eval(&map, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn motion_family() -> MapDescriptor {
        MapDescriptor::chebyshev_with_motion(vec![1.0], Window::new(-0.2, 0.2).unwrap()).unwrap()
    }

    #[test]
    fn chebyshev_values() {
        let m = MapDescriptor::chebyshev();
        assert_eq!(m.eval_map(0.0, 0.5).unwrap(), 0.5);
        assert_eq!(m.eval_map(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(m.eval_map(0.3, 1.0).unwrap(), -1.0);
        assert_eq!(m.eval_map(-0.7, -1.0).unwrap(), -1.0);
    }

    #[test]
    fn chebyshev_derivatives() {
        let m = MapDescriptor::chebyshev();
        assert_eq!(m.eval_deriv(0.0, 0.5, 1).unwrap(), -2.0);
        assert_eq!(m.eval_deriv(0.0, 0.0, 1).unwrap(), 0.0);
        assert_eq!(m.eval_deriv(0.0, -1.0, 1).unwrap(), 4.0);
        assert_eq!(m.eval_deriv(0.0, 0.2, 2).unwrap(), -4.0);
        assert_eq!(m.eval_deriv(0.0, 0.2, 3).unwrap(), 0.0);
        assert!(m.eval_deriv(0.0, 0.2, 4).is_err());
    }

    #[test]
    fn chebyshev_schwarzian() {
        let m = MapDescriptor::chebyshev();
        assert!((m.schwarzian(0.0, 0.5).unwrap() + 6.0).abs() < 1e-15);
        assert!((m.schwarzian(0.0, 1.0).unwrap() + 1.5).abs() < 1e-15);
        assert!(matches!(m.schwarzian(0.0, 0.0), Err(Error::AtCriticalPoint(_))));
    }

    #[test]
    fn quadratic_schwarzian_has_no_third_derivative_term() {
        let m = MapDescriptor::direct(vec![vec![0.4, 0.0, -1.4]], Window::point(0.0)).unwrap();
        for &x in &[-0.9, -0.3, 0.2, 0.8] {
            let d1 = -2.8 * x;
            let d2: f64 = -2.8;
            assert!((m.schwarzian(0.0, x).unwrap() + 1.5 * (d2 / d1).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn window_and_domain_errors() {
        let m = motion_family();
        assert!(matches!(m.eval_map(0.3, 0.0), Err(Error::OutsideWindow { .. })));
        assert!(matches!(m.eval_map(0.0, 1.5), Err(Error::OutsideInterval(_))));
        assert!(m.eval_map(0.0, 1.0 + 5e-10).is_ok());
    }

    #[test]
    fn rejects_non_unimodal_or_bad_boundary() {
        // 0.6 - 1.4x²: f(±1) = -0.8.
        assert!(matches!(
            MapDescriptor::direct(vec![vec![0.6, 0.0, -1.4]], Window::point(0.0)),
            Err(Error::InvalidFamily(_))
        ));
        // f''(0) > 0.
        assert!(MapDescriptor::direct(vec![vec![-1.0, 0.0, 0.0]], Window::point(0.0)).is_err());
    }

    #[test]
    fn motion_examples() {
        let mo = AnalyticMotion::new(Polynomial::constant(1.0), Window::new(-0.2, 0.2).unwrap()).unwrap();
        assert!((apply_motion(&mo, 0.1, 0.5).unwrap() - 0.575).abs() < 1e-15);
        assert_eq!(apply_motion(&mo, 0.13, 1.0).unwrap(), 1.0);
        assert_eq!(apply_motion(&mo, -0.13, -1.0).unwrap(), -1.0);
        assert_eq!(apply_motion(&mo, 0.0, 0.37).unwrap(), 0.37);
        assert!(AnalyticMotion::new(Polynomial::constant(1.0), Window::new(-0.6, 0.6).unwrap()).is_err());
    }

    #[test]
    fn conjugated_critical_point_moves_with_motion() {
        let m = motion_family();
        let f = m.at(0.1).unwrap();
        assert!((f.critical_point() - 0.1).abs() < 1e-15);
        assert!(f.derivative(f.critical_point()).abs() < 1e-12);
        assert_eq!(f.critical_value(), 1.0);
        assert_eq!(f.eval(-1.0), -1.0);
        assert_eq!(f.eval(1.0), -1.0);
    }

    #[test]
    fn conjugated_jet_matches_finite_differences() {
        let m = motion_family();
        let f = m.at(0.15).unwrap();
        for &x in &[-0.8, -0.3, 0.4, 0.9] {
            let j = f.jet(x);
            let h = 1e-4;
            let fd2 = (f.eval(x + h) - 2.0 * f.eval(x) + f.eval(x - h)) / (h * h);
            let fd3 = (f.eval(x + 2.0 * h) - 2.0 * f.eval(x + h) + 2.0 * f.eval(x - h) - f.eval(x - 2.0 * h))
                / (2.0 * h * h * h);
            assert!((j.0[1] - f.derivative(x)).abs() < 1e-12);
            assert!((j.0[2] - fd2).abs() < 1e-5, "f'' {} vs {}", j.0[2], fd2);
            assert!((j.0[3] - fd3).abs() < 1e-3, "f''' {} vs {}", j.0[3], fd3);
        }
    }

    #[test]
    fn observables() {
        let m = MapDescriptor::chebyshev();
        let sq = Observable::monomial(2);
        assert_eq!(eval_observable(&sq, &m, 0.0, 0.5).unwrap(), 0.25);
        assert_eq!(eval_observable(&Observable::monomial(1), &m, 0.0, -1.0).unwrap(), -1.0);
        let lyap = eval_observable(&Observable::LogAbsDerivative, &m, 0.0, 0.5).unwrap();
        assert!((lyap - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(matches!(
            eval_observable(&Observable::LogAbsDerivative, &m, 0.0, 0.0),
            Err(Error::ZeroDerivative(_))
        ));
    }

    #[test]
    fn inverse_branches() {
        let f = MapDescriptor::chebyshev().at(0.0).unwrap();
        assert!((f.inverse(Side::R, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(f.inverse(Side::R, 1.0).unwrap(), 0.0);
        assert_eq!(f.inverse(Side::L, -1.0).unwrap(), -1.0);
        assert!(matches!(f.inverse(Side::L, 1.5), Err(Error::OutsideBranchImage { .. })));
        let g = motion_family().at(-0.12).unwrap();
        for &y in &[-0.95, -0.2, 0.4, 0.99] {
            for side in [Side::L, Side::R] {
                let x = g.inverse(side, y).unwrap();
                assert_eq!(g.side(x), side);
                assert!((g.eval(x) - y).abs() < 1e-13);
            }
        }
    }
}
