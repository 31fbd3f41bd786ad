//! Fixed-order quadrature rules.

/// 8-point Gauss–Legendre nodes on [-1, 1] (positive half).
const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// ∫_a^b f with the 8-point Gauss–Legendre rule.
pub fn gauss_legendre8<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        acc += w * (f(mid - half * x) + f(mid + half * x));
    }
    acc * half
}

/// Nodes of the `n`-point Gauss–Chebyshev rule for ∫ f(x) / (π √(1-x²)) dx,
/// which is then the plain average of `f` over the nodes.
pub fn gauss_chebyshev_nodes(n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |k| ((2 * k - 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_exact_for_degree_15() {
        let v = gauss_legendre8(-0.5, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        let exact = (2f64.powi(16) - 0.5f64.powi(16)) / 16.0 - 3.0 * (2f64.powi(5) + 0.5f64.powi(5)) / 5.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn chebyshev_moments() {
        let n = 256;
        let m2: f64 = gauss_chebyshev_nodes(n).map(|x| x * x).sum::<f64>() / n as f64;
        let m4: f64 = gauss_chebyshev_nodes(n).map(|x| x.powi(4)).sum::<f64>() / n as f64;
        assert!((m2 - 0.5).abs() < 1e-14);
        assert!((m4 - 0.375).abs() < 1e-14);
    }
}
