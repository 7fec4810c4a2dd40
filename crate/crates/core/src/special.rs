//! Small special-function helpers needed by the closed-form scaling laws.

/// Lanczos coefficients for g = 7, n = 9 (double precision).
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments, via the Lanczos approximation with
/// reflection for x < 0.5. Accurate to ~14 significant digits on (0, 170).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a),
/// by series expansion. Adequate for the small-x tail checks used in tests
/// and for Gamma-mixing CDF values (a, x > 0, x not much larger than a+1).
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "reg_lower_gamma needs a > 0, x >= 0");
    if x == 0.0 {
        return 0.0;
    }
    // gamma(a,x) = x^a e^{-x} sum_{n>=0} x^n / (a (a+1) ... (a+n))
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut n = 0.0;
    while term.abs() > 1e-16 * sum.abs() && n < 500.0 {
        n += 1.0;
        term *= x / (a + n);
        sum += term;
    }
    (a * x.ln() - x).exp() / gamma(a) * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_PI: f64 = 1.772_453_850_905_516;

    #[test]
    fn gamma_matches_exact_values() {
        assert!((gamma(0.5) - SQRT_PI).abs() < 1e-12, "Gamma(1/2) = sqrt(pi)");
        assert!((gamma(1.0) - 1.0).abs() < 1e-13);
        assert!((gamma(1.5) - SQRT_PI / 2.0).abs() < 1e-13, "Gamma(3/2) = sqrt(pi)/2");
        assert!((gamma(2.0) - 1.0).abs() < 1e-13);
        assert!((gamma(5.0) - 24.0).abs() < 1e-10);
    }

    #[test]
    fn gamma_satisfies_recurrence() {
        for &x in &[0.1, 0.3, 0.7, 1.3, 2.6, 7.5] {
            let lhs = gamma(x + 1.0);
            let rhs = x * gamma(x);
            assert!(
                ((lhs - rhs) / rhs).abs() < 1e-12,
                "Gamma(x+1) = x Gamma(x) failed at x = {x}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn lower_incomplete_gamma_small_x() {
        // P(a, x) ~ x^a / (a Gamma(a)) as x -> 0
        let a = 0.5;
        let x: f64 = 1e-6;
        let approx = x.powf(a) / (a * gamma(a));
        let exact = reg_lower_gamma(a, x);
        assert!(
            ((exact - approx) / approx).abs() < 1e-3,
            "P(0.5, 1e-6): {exact} vs small-x form {approx}"
        );
    }

    #[test]
    fn lower_incomplete_gamma_known_point() {
        // P(1, x) = 1 - e^{-x}
        for &x in &[0.1, 0.5, 1.0, 2.0] {
            let exact = 1.0 - (-x as f64).exp();
            let got = reg_lower_gamma(1.0, x);
            assert!((got - exact).abs() < 1e-12, "P(1,{x}): {got} vs {exact}");
        }
    }
}
