//! Periodic orbits by symbolic pullback.
//!
//! Every itinerary `w ∈ {L, R}^p` selects a monotone branch of `f^p`, whose
//! domain is obtained by pulling `[-1, 1]` back through the inverse branches
//! of `w` in reverse order. A branch holds at most one fixed point of `f^p`,
//! found by bracketed Newton on `f^p(x) - x`. Cycles are indexed by their
//! Lyndon word (least rotation), so each cycle is solved once; the remaining
//! points are recovered by walking the inverse branches backwards around the
//! cycle, which is the stable direction.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::family::{MapAt, MapDescriptor, Side};
use crate::roots::bracketed_newton;

pub const DEFAULT_PERIOD_CAP: usize = 20;
/// Hard limit imposed by the 64-bit itinerary encoding and running time.
pub const MAX_PERIOD: usize = 30;
pub const DEDUP_TOL: f64 = 1e-9;
pub const RESIDUAL_TOL: f64 = 1e-11;
const ENDPOINT_TOL: f64 = 1e-13;

/// Word over `{L, R}`; letter `k` is bit `k` of `word` (1 = R).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Itinerary {
    word: u64,
    len: usize,
}

impl Itinerary {
    pub fn new(letters: &[Side]) -> Result<Self> {
        if letters.is_empty() || letters.len() > MAX_PERIOD {
            return Err(Error::InvalidArgument(format!(
                "itinerary length {} not in 1..={MAX_PERIOD}",
                letters.len()
            )));
        }
        let word = letters
            .iter()
            .enumerate()
            .fold(0u64, |w, (k, s)| if *s == Side::R { w | (1 << k) } else { w });
        Ok(Itinerary { word, len: letters.len() })
    }

    fn from_bits(word: u64, len: usize) -> Self {
        Itinerary { word, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn letter(&self, k: usize) -> Side {
        if (self.word >> k) & 1 == 1 {
            Side::R
        } else {
            Side::L
        }
    }

    pub fn letters(&self) -> impl Iterator<Item = Side> + '_ {
        (0..self.len).map(move |k| self.letter(k))
    }

    /// Shift left by `k`: letter `j` of the result is letter `j + k` of `self`.
    pub fn rotate(&self, k: usize) -> Self {
        let k = k % self.len;
        if k == 0 {
            return *self;
        }
        let mask = if self.len == 64 { u64::MAX } else { (1u64 << self.len) - 1 };
        let w = ((self.word >> k) | (self.word << (self.len - k))) & mask;
        Itinerary { word: w, len: self.len }
    }

    fn lex_key(&self) -> Vec<Side> {
        self.letters().collect()
    }

    /// Least rotation in lexicographic order (L < R).
    pub fn canonical(&self) -> Self {
        (0..self.len)
            .map(|k| self.rotate(k))
            .min_by_key(|w| w.lex_key())
            .unwrap_or(*self)
    }

    /// Not a power of a shorter word.
    pub fn is_primitive(&self) -> bool {
        (1..self.len).filter(|d| self.len.is_multiple_of(*d)).all(|d| self.rotate(d) != *self)
    }

    /// Same cycle up to rotation.
    pub fn same_cycle(&self, other: &Itinerary) -> bool {
        self.len == other.len && self.canonical() == other.canonical()
    }
}

impl fmt::Display for Itinerary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.letters() {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Itinerary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c {
                'L' => Ok(Side::L),
                'R' => Ok(Side::R),
                other => Err(Error::InvalidArgument(format!("bad itinerary letter {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Itinerary::new(&letters)
    }
}

impl Serialize for Itinerary {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Binary Lyndon words of length `n` in lexicographic order
/// (Fredricksen–Kessler–Maiorana).
pub fn lyndon_words(n: usize) -> Vec<Itinerary> {
    fn rec(a: &mut [u8], t: usize, p: usize, n: usize, out: &mut Vec<Itinerary>) {
        if t > n {
            if p == n {
                let word = (1..=n).fold(0u64, |w, k| w | ((a[k] as u64) << (k - 1)));
                out.push(Itinerary::from_bits(word, n));
            }
            return;
        }
        a[t] = a[t - p];
        rec(a, t + 1, p, n, out);
        for j in (a[t - p] + 1)..2 {
            a[t] = j;
            rec(a, t + 1, t, n, out);
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut a = vec![0u8; n + 1];
    rec(&mut a, 1, 1, n, &mut out);
    out
}

/// Image of `[lo, hi]` under the inverse branch on `side`, after clipping to
/// the branch image. `None` when the clipped interval is empty.
pub(crate) fn pull_back(map: &MapAt, side: Side, lo: f64, hi: f64) -> Result<Option<(f64, f64)>> {
    let (ilo, ihi) = map.branch_image();
    let a = lo.max(ilo);
    let b = hi.min(ihi);
    if a > b {
        return Ok(None);
    }
    let xa = map.inverse(side, a)?;
    let xb = if b == a { xa } else { map.inverse(side, b)? };
    Ok(Some((xa.min(xb), xa.max(xb))))
}

/// Domain of the monotone branch of `f^p` with the given itinerary.
pub fn branch_domain(map: &MapAt, itinerary: &Itinerary) -> Result<Option<(f64, f64)>> {
    let (mut lo, mut hi) = (-1.0, 1.0);
    for k in (0..itinerary.len()).rev() {
        match pull_back(map, itinerary.letter(k), lo, hi)? {
            Some((a, b)) => {
                lo = a;
                hi = b;
            }
            None => return Ok(None),
        }
    }
    Ok(Some((lo, hi)))
}

/// `(f^p(x) - x, (f^p)'(x) - 1)`.
fn return_map(map: &MapAt, p: usize, x: f64) -> (f64, f64) {
    let mut y = x;
    let mut d = 1.0;
    for _ in 0..p {
        let (v, dv) = map.value_and_derivative(y);
        d *= dv;
        y = v;
    }
    (y - x, d - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    pub period: usize,
    /// `points[k+1] = f(points[k])`, cyclically.
    pub points: Vec<f64>,
    /// Signed `(f^p)'(x_0)`.
    pub multiplier: f64,
    pub log_abs_multiplier: f64,
    pub itinerary: Itinerary,
    /// `max_k |f(x_k) - x_{k+1}|`.
    pub residual: f64,
}

impl PeriodicOrbit {
    fn from_points(map: &MapAt, itinerary: Itinerary, points: Vec<f64>) -> Result<Self> {
        let p = points.len();
        let (log_abs_multiplier, negative) = log_multiplier(map, &points)?;
        let residual = (0..p)
            .map(|k| (map.eval(points[k]) - points[(k + 1) % p]).abs())
            .fold(0.0, f64::max);
        let sign = if negative { -1.0 } else { 1.0 };
        Ok(PeriodicOrbit {
            period: p,
            points,
            multiplier: sign * log_abs_multiplier.exp(),
            log_abs_multiplier,
            itinerary,
            residual,
        })
    }

    /// `Σ_k ψ(x_k)`.
    pub fn birkhoff_sum(&self, map: &MapAt, psi: &crate::family::Observable) -> Result<f64> {
        self.points.iter().map(|&x| psi.eval(map, x)).sum()
    }

    /// `|f^p(x_0) - x_0|`, evaluated forward.
    pub fn return_defect(&self, map: &MapAt) -> f64 {
        return_map(map, self.period, self.points[0]).0.abs()
    }

    pub fn is_repelling(&self) -> bool {
        self.log_abs_multiplier > 0.0
    }
}

/// `(Σ log|f'(x_k)|, odd number of negative factors)`, compensated.
fn log_multiplier(map: &MapAt, points: &[f64]) -> Result<(f64, bool)> {
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut negative = false;
    for &x in points {
        let d = map.derivative(x);
        if d == 0.0 {
            return Err(Error::ZeroDerivative(x));
        }
        negative ^= d < 0.0;
        let y = d.abs().ln() - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    Ok((sum, negative))
}

/// Signed multiplier `(f^p)'(x_0)` recomputed along the orbit in log space.
pub fn multiplier(map: &MapAt, orbit: &PeriodicOrbit) -> Result<f64> {
    if !(orbit.residual <= 1e-9) {
        return Err(Error::OrbitRefinement { itinerary: orbit.itinerary.to_string(), residual: orbit.residual });
    }
    let (l, negative) = log_multiplier(map, &orbit.points)?;
    Ok(if negative { -l.exp() } else { l.exp() })
}

/// Walks inverse branches backwards from `x0` to fill in the cycle.
fn cycle_points(map: &MapAt, itinerary: &Itinerary, x0: f64) -> Result<Vec<f64>> {
    let p = itinerary.len();
    let mut points = vec![0.0; p];
    points[0] = x0;
    let mut next = x0;
    for k in (1..p).rev() {
        next = map.inverse(itinerary.letter(k), next)?;
        points[k] = next;
    }
    Ok(points)
}

/// Fixed point of the inverse-branch composition along `itinerary`.
/// Needed when the forward return map cannot resolve a sign change, e.g.
/// for cycles that spend many steps next to a repelling boundary point.
fn backward_fixed_point(map: &MapAt, itinerary: &Itinerary, lo: f64, hi: f64) -> Option<f64> {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let mut y = x;
        for k in (0..itinerary.len()).rev() {
            y = map.inverse(itinerary.letter(k), y).ok()?;
            if !y.is_finite() {
                return None;
            }
        }
        let step = (y - x).abs();
        x = y;
        if step <= 64.0 * f64::EPSILON * x.abs().max(1.0) {
            return (x >= lo - 1e-12 && x <= hi + 1e-12).then_some(x);
        }
    }
    None
}

/// The cycle with the given (primitive) itinerary, if the branch is realised
/// and carries a fixed point of `f^p`.
pub fn solve_cycle(map: &MapAt, itinerary: &Itinerary) -> Result<Option<PeriodicOrbit>> {
    let Some((lo, hi)) = branch_domain(map, itinerary)? else {
        return Ok(None);
    };
    let p = itinerary.len();
    let (flo, _) = return_map(map, p, lo);
    let (fhi, _) = return_map(map, p, hi);
    let root = if flo.abs() <= ENDPOINT_TOL {
        lo
    } else if fhi.abs() <= ENDPOINT_TOL {
        hi
    } else if lo == hi {
        return Ok(None);
    } else {
        match bracketed_newton(|x| return_map(map, p, x), lo, hi, None, 1e-15, 200)
            .or_else(|| backward_fixed_point(map, itinerary, lo, hi))
        {
            Some(x) => x,
            None => return Ok(None),
        }
    };
    if root != map.critical_point() && map.side(root) != itinerary.letter(0) {
        return Ok(None);
    }
    let points = cycle_points(map, itinerary, root)?;
    let orbit = PeriodicOrbit::from_points(map, *itinerary, points)?;
    if !(orbit.residual <= 1e-9) {
        return Err(Error::OrbitRefinement { itinerary: itinerary.to_string(), residual: orbit.residual });
    }
    Ok(Some(orbit))
}

fn same_point_set(a: &PeriodicOrbit, b: &PeriodicOrbit) -> bool {
    if a.period != b.period {
        return false;
    }
    let mut x = a.points.clone();
    let mut y = b.points.clone();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    x.iter().zip(&y).all(|(u, v)| (u - v).abs() <= DEDUP_TOL)
}

/// Drops cycles found twice through ambiguous branch endpoints.
fn dedup_cycles(cycles: Vec<PeriodicOrbit>) -> Vec<PeriodicOrbit> {
    let key = |o: &PeriodicOrbit| o.points.iter().copied().fold(f64::INFINITY, f64::min);
    let mut order: Vec<usize> = (0..cycles.len()).collect();
    order.sort_by(|&i, &j| key(&cycles[i]).total_cmp(&key(&cycles[j])).then(i.cmp(&j)));
    let mut drop = vec![false; cycles.len()];
    for (a, &i) in order.iter().enumerate() {
        if drop[i] {
            continue;
        }
        for &j in order[a + 1..].iter() {
            if key(&cycles[j]) - key(&cycles[i]) > DEDUP_TOL {
                break;
            }
            if !drop[j] && same_point_set(&cycles[i], &cycles[j]) {
                drop[i.max(j)] = true;
            }
        }
    }
    cycles.into_iter().zip(drop).filter(|(_, d)| !d).map(|(c, _)| c).collect()
}

fn enumerate_period(map: &MapAt, q: usize) -> Result<Vec<PeriodicOrbit>> {
    let found: Vec<Option<PeriodicOrbit>> = lyndon_words(q)
        .par_iter()
        .map(|w| solve_cycle(map, w))
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// All primitive cycles of period `≤ max_period` of one map, ordered by
/// period then itinerary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitTable {
    pub t: f64,
    pub max_period: usize,
    pub cycles: Vec<PeriodicOrbit>,
}

impl OrbitTable {
    pub fn enumerate(map: &MapAt, max_period: usize) -> Result<Self> {
        if max_period == 0 || max_period > MAX_PERIOD {
            return Err(Error::InvalidArgument(format!("period bound {max_period} not in 1..={MAX_PERIOD}")));
        }
        let mut cycles = Vec::new();
        for q in 1..=max_period {
            cycles.extend(enumerate_period(map, q)?);
        }
        Ok(OrbitTable { t: map.t(), max_period, cycles: dedup_cycles(cycles) })
    }

    /// Cycles whose period divides `p`: together they carry every fixed point of `f^p`.
    pub fn cycles_dividing(&self, p: usize) -> impl Iterator<Item = &PeriodicOrbit> {
        self.cycles.iter().filter(move |c| p.is_multiple_of(c.period))
    }

    /// Number of fixed points of `f^p`.
    pub fn fixed_point_count(&self, p: usize) -> usize {
        self.cycles_dividing(p).map(|c| c.period).sum()
    }
}

/// Every cycle whose period divides `p`, i.e. all fixed points of `f_t^p`
/// grouped into cycles. Fails if any refined cycle has residual above `tol`.
pub fn find_periodic_points(m: &MapDescriptor, t: f64, p: usize, tol: f64) -> Result<Vec<PeriodicOrbit>> {
    if p == 0 || p > DEFAULT_PERIOD_CAP {
        return Err(Error::InvalidArgument(format!("period {p} not in 1..={DEFAULT_PERIOD_CAP}")));
    }
    if !(tol >= 1e-12) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} below 1e-12")));
    }
    let map = m.at(t)?;
    let mut cycles = Vec::new();
    for q in (1..=p).filter(|q| p.is_multiple_of(*q)) {
        cycles.extend(enumerate_period(&map, q)?);
    }
    let cycles = dedup_cycles(cycles);
    if let Some(bad) = cycles.iter().find(|c| c.residual > tol) {
        return Err(Error::OrbitRefinement { itinerary: bad.itinerary.to_string(), residual: bad.residual });
    }
    Ok(cycles)
}

/// Result of [`continue_orbit`]: the accepted path, and why it stopped early
/// if it did.
#[derive(Debug, Clone)]
pub struct OrbitPath {
    pub steps: Vec<(f64, PeriodicOrbit)>,
    pub halted: Option<Error>,
}

impl OrbitPath {
    pub fn completed(&self) -> bool {
        self.halted.is_none()
    }

    pub fn last(&self) -> &(f64, PeriodicOrbit) {
        self.steps.last().expect("path always holds the starting orbit")
    }
}

const CONTINUATION_MIN_STEP: f64 = 1e-6;
const CONTINUATION_MAX_NEWTON: usize = 5;
const CONTINUATION_RESIDUAL: f64 = 1e-10;
const CONTINUATION_MIN_MULTIPLIER: f64 = 1.01;

/// Newton on `f^p(x) - x`; `None` if it needs more than the budget.
fn newton_return(map: &MapAt, p: usize, mut x: f64) -> Option<f64> {
    for _ in 0..CONTINUATION_MAX_NEWTON {
        let (f, df) = return_map(map, p, x);
        if f == 0.0 {
            return Some(x);
        }
        if df == 0.0 || !df.is_finite() {
            return None;
        }
        let step = f / df;
        x -= step;
        if !(x.abs() <= 1.0 + 1e-12) {
            return None;
        }
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            return Some(x);
        }
    }
    let (f, _) = return_map(map, p, x);
    (f.abs() <= 1e-13).then_some(x)
}

/// Secant-predictor / Newton-corrector continuation of a cycle from `t_from`
/// to `t_to` in `steps` nominal steps. Steps are halved when the corrector
/// needs more than five iterations, down to `1e-6`.
pub fn continue_orbit(
    m: &MapDescriptor,
    orbit: &PeriodicOrbit,
    t_from: f64,
    t_to: f64,
    steps: usize,
) -> Result<OrbitPath> {
    if steps == 0 {
        return Err(Error::InvalidArgument("continuation needs at least one step".into()));
    }
    m.window().check(t_from)?;
    m.window().check(t_to)?;
    let p = orbit.period;
    let it = orbit.itinerary;
    let mut path = OrbitPath { steps: vec![(t_from, orbit.clone())], halted: None };
    if t_from == t_to {
        return Ok(path);
    }
    let direction = (t_to - t_from).signum();
    let mut h = (t_to - t_from).abs() / steps as f64;
    let mut t = t_from;
    let mut x = orbit.points[0];
    let mut prev: Option<(f64, f64)> = None;

    while (t_to - t) * direction > 0.0 {
        let dt = h.min((t_to - t).abs()) * direction;
        let t_new = if ((t + dt) - t_to).abs() < 1e-15 { t_to } else { t + dt };
        let predicted = match prev {
            Some((tp, xp)) if t != tp => x + (x - xp) / (t - tp) * (t_new - t),
            _ => x,
        };
        let map = m.at(t_new)?;
        let corrected = newton_return(&map, p, predicted).filter(|&xn| map.side(xn) == it.letter(0));
        let Some(x_new) = corrected else {
            h *= 0.5;
            if h < CONTINUATION_MIN_STEP {
                path.halted = Some(Error::Continuation { t, reason: "Newton corrector failed".into() });
                return Ok(path);
            }
            continue;
        };
        let next = match cycle_points(&map, &it, x_new).and_then(|pts| PeriodicOrbit::from_points(&map, it, pts)) {
            Ok(o) => o,
            Err(e) => {
                path.halted = Some(Error::Continuation { t, reason: e.to_string() });
                return Ok(path);
            }
        };
        if next.residual > CONTINUATION_RESIDUAL {
            path.halted = Some(Error::Continuation {
                t,
                reason: format!("residual {:e} above {CONTINUATION_RESIDUAL:e}", next.residual),
            });
            return Ok(path);
        }
        if next.multiplier.abs() < CONTINUATION_MIN_MULTIPLIER {
            path.halted = Some(Error::Continuation {
                t,
                reason: format!("multiplier {} approaching the unit circle", next.multiplier),
            });
            return Ok(path);
        }
        prev = Some((t, x));
        t = t_new;
        x = x_new;
        path.steps.push((t, next));
    }
    Ok(path)
}

/// CSV rows `p,itinerary,x_0,...,x_{p-1},multiplier,residual`.
pub fn write_orbit_csv<W: Write>(mut w: W, orbits: &[PeriodicOrbit]) -> Result<()> {
    writeln!(w, "# p,itinerary,x_0..x_(p-1),multiplier,residual")?;
    for o in orbits {
        write!(w, "{},{}", o.period, o.itinerary)?;
        for x in &o.points {
            write!(w, ",{x}")?;
        }
        writeln!(w, ",{},{}", o.multiplier, o.residual)?;
    }
    Ok(())
}
