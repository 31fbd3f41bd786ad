//! Bracketed scalar root finding.

/// Newton's method safeguarded by bisection on a sign-changing bracket.
///
/// `f` returns `(value, derivative)`. Returns `None` when the bracket does not
/// change sign or the iteration budget runs out.
pub(crate) fn bracketed_newton<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    guess: Option<f64>,
    xtol: f64,
    max_iter: usize,
) -> Option<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (flo, _) = f(lo);
    if flo == 0.0 {
        return Some(lo);
    }
    let (fhi, _) = f(hi);
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    // neg / pos track the ends where f < 0 and f > 0.
    let (mut neg, mut pos) = if flo < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut x = match guess {
        Some(g) if g > lo.min(hi) && g < lo.max(hi) => g,
        _ => 0.5 * (lo + hi),
    };
    let mut dx_old = (hi - lo).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = f(x);
    for _ in 0..max_iter {
        if fx == 0.0 {
            return Some(x);
        }
        let newton = x - fx / dfx;
        let in_bracket = dfx != 0.0 && dfx.is_finite() && (newton - neg) * (newton - pos) < 0.0;
        if in_bracket && (2.0 * fx).abs() <= (dx_old * dfx).abs() {
            dx_old = dx;
            dx = x - newton;
            x = newton;
        } else {
            dx_old = dx;
            dx = 0.5 * (pos - neg);
            x = neg + dx;
        }
        if dx.abs() <= xtol || (pos - neg).abs() <= xtol {
            return Some(x);
        }
        let (v, d) = f(x);
        fx = v;
        dfx = d;
        if fx < 0.0 {
            neg = x;
        } else {
            pos = x;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bracketed_newton(|x| (x * x - 2.0, 2.0 * x), 0.0, 2.0, None, 1e-15, 100).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn decreasing_function_and_endpoint_root() {
        let r = bracketed_newton(|x| (1.0 - x, -1.0), -3.0, 1.0, None, 1e-15, 100).unwrap();
        assert_eq!(r, 1.0);
        let r = bracketed_newton(|x| (0.5 - x * x * x, -3.0 * x * x), 0.0, 1.0, Some(0.9), 1e-15, 100).unwrap();
        assert!((r - 0.5f64.cbrt()).abs() < 1e-15);
    }

    #[test]
    fn no_sign_change() {
        assert!(bracketed_newton(|x| (x * x + 1.0, 2.0 * x), -1.0, 1.0, None, 1e-15, 100).is_none());
    }

    #[test]
    fn flat_derivative_falls_back_to_bisection() {
        // Double-root-like shape near the critical point of 1 - 2x^2 - y.
        let y = 1.0 - 1e-12;
        let r = bracketed_newton(|x| (1.0 - 2.0 * x * x - y, -4.0 * x), 0.0, 1.0, None, 1e-16, 200).unwrap();
        assert!((1.0 - 2.0 * r * r - y).abs() < 1e-15);
    }
}
