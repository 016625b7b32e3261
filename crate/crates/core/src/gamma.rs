//! Complex Gamma function (Lanczos approximation, g = 7, nine terms).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma_right_half(z: Complex64) -> Complex64 {
    // valid for Re z >= 1/2
    let z = z - 1.0;
    let mut series = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + series.ln()
}

/// `Gamma(z)`; fails at the poles `z = 0, -1, -2, ...`.
pub fn gamma(z: Complex64) -> Result<Complex64> {
    if z.nonpositive_integer().is_some() {
        return Err(Error::GammaPole(format!("{z}")));
    }
    if z.re < 0.5 {
        // reflection: Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        let s = (PI * z).sin();
        Ok(PI / (s * ln_gamma_right_half(1.0 - z).exp()))
    } else {
        Ok(ln_gamma_right_half(z).exp())
    }
}

/// `ln Gamma(x)` for real `x > 0`.
pub fn ln_gamma_real(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma_real needs a positive argument");
    if x < 0.5 {
        return ln_gamma_right_half(Complex64::new(x + 1.0, 0.0)).re - x.ln();
    }
    ln_gamma_right_half(Complex64::new(x, 0.0)).re
}

/// Euler Beta function `B(a, b)` for real positive arguments.
pub fn beta_real(a: f64, b: f64) -> f64 {
    (ln_gamma_real(a) + ln_gamma_real(b) - ln_gamma_real(a + b)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn factorials() {
        let mut fact = 1.0;
        for n in 1..20 {
            let g = gamma(c(n as f64)).unwrap();
            assert!((g.re - fact).abs() <= 1e-13 * fact, "Gamma({n})");
            fact *= n as f64;
        }
    }

    #[test]
    fn half_integer_and_negative() {
        let sqrt_pi = PI.sqrt();
        assert!((gamma(c(0.5)).unwrap().re - sqrt_pi).abs() < 1e-14);
        // Gamma(-1/2) = -2 sqrt(pi)
        assert!((gamma(c(-0.5)).unwrap().re + 2.0 * sqrt_pi).abs() < 1e-13);
    }

    #[test]
    fn reflection_and_recurrence_complex() {
        for z in [Complex64::new(0.3, 1.7), Complex64::new(-2.4, 0.6), Complex64::new(4.5, -3.0)] {
            let lhs = gamma(z).unwrap() * gamma(1.0 - z).unwrap();
            let rhs = PI / (PI * z).sin();
            assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm(), "reflection at {z}");
            let rec = gamma(z + 1.0).unwrap() - z * gamma(z).unwrap();
            assert!(rec.norm() <= 1e-12 * gamma(z + 1.0).unwrap().norm(), "recurrence at {z}");
        }
    }

    #[test]
    fn poles_are_rejected() {
        assert!(matches!(gamma(c(0.0)), Err(Error::GammaPole(_))));
        assert!(matches!(gamma(c(-3.0)), Err(Error::GammaPole(_))));
    }

    #[test]
    fn beta_values() {
        assert!((beta_real(2.0, 3.0) - 1.0 / 12.0).abs() < 1e-15);
        assert!((beta_real(0.5, 0.5) - PI).abs() < 1e-13);
        assert!((beta_real(1.3, 0.3) - 3.004_811_841_865_51).abs() < 1e-13);
        assert!((ln_gamma_real(0.01) - 4.599_479_878_042_022).abs() < 1e-13);
        assert!((ln_gamma_real(100.0) - 359.134_205_369_575_4).abs() < 1e-10);
    }
}
