//! Dense real polynomials in ascending-power storage.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// `coeffs[k]` multiplies `x^k`. Trailing zeros are trimmed.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Polynomial { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn identity() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative in one Horner pass.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * a).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
        Self::new((0..n).map(|k| get(&self.coeffs, k) + get(&other.coeffs, k)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// `self ∘ inner`, i.e. `x ↦ self(inner(x))`.
    pub fn compose(&self, inner: &Self) -> Self {
        self.coeffs
            .iter()
            .rev()
            .fold(Self::zero(), |acc, &c| acc.mul(inner).add(&Self::constant(c)))
    }
}

/// A polynomial bundled with its first three derivatives for fast 3-jets.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PolyJet {
    p: [Polynomial; 4],
}

impl PolyJet {
    pub fn new(p: Polynomial) -> Self {
        let d1 = p.derivative();
        let d2 = d1.derivative();
        let d3 = d2.derivative();
        PolyJet { p: [p, d1, d2, d3] }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.p[0].eval(x)
    }

    pub fn value_and_derivative(&self, x: f64) -> (f64, f64) {
        self.p[0].eval_with_derivative(x)
    }

    pub fn jet(&self, x: f64) -> Jet {
        Jet([self.p[0].eval(x), self.p[1].eval(x), self.p[2].eval(x), self.p[3].eval(x)])
    }
}

/// Value and first three derivatives of a function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [f64; 4]);

impl Jet {
    /// Jet of `outer ∘ inner` where `outer` is the jet of the outer function
    /// evaluated at `inner.0[0]` (Faà di Bruno to third order).
    pub fn compose(outer: Jet, inner: Jet) -> Jet {
        let [a0, a1, a2, a3] = outer.0;
        let [_, b1, b2, b3] = inner.0;
        Jet([
            a0,
            a1 * b1,
            a2 * b1 * b1 + a1 * b2,
            a3 * b1 * b1 * b1 + 3.0 * a2 * b1 * b2 + a1 * b3,
        ])
    }

    /// Jet of `k = h^{-1}` at `x = h(y)`, given the jet of `h` at `y`.
    pub fn inverse(h: Jet, y: f64) -> Jet {
        let [_, h1, h2, h3] = h.0;
        let k1 = 1.0 / h1;
        let k2 = -h2 * k1.powi(3);
        let k3 = -h3 * k1.powi(4) + 3.0 * h2 * h2 * k1.powi(5);
        Jet([y, k1, k2, k3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_and_derivative() {
        let p = Polynomial::new(vec![1.0, 0.0, -2.0]);
        assert_eq!(p.eval(0.5), 0.5);
        assert_eq!(p.eval_with_derivative(0.5), (0.5, -2.0));
        assert_eq!(p.derivative().coeffs(), &[0.0, -4.0]);
    }

    #[test]
    fn composition_matches_pointwise() {
        let p = Polynomial::new(vec![0.3, -1.0, 0.5, 2.0]);
        let q = Polynomial::new(vec![0.1, 1.0, -0.25]);
        let pq = p.compose(&q);
        for &x in &[-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert!((pq.eval(x) - p.eval(q.eval(x))).abs() < 1e-14);
        }
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let p = Polynomial::new(vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 1);
        assert_eq!(Polynomial::zero().degree(), 0);
    }

    #[test]
    fn jet_inverse_round_trip() {
        // h(y) = y + 0.1 (1 - y^2); composing h with its inverse gives the identity jet.
        let h = PolyJet::new(Polynomial::new(vec![0.1, 1.0, -0.1]));
        let y = 0.3;
        let hj = h.jet(y);
        let kj = Jet::inverse(hj, y);
        let id = Jet::compose(kj, hj);
        assert!((id.0[1] - 1.0).abs() < 1e-14);
        assert!(id.0[2].abs() < 1e-14);
        assert!(id.0[3].abs() < 1e-13);
    }
}
