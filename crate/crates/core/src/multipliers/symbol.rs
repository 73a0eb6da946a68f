use crate::{Error, Result};
use serde::Serialize;

/// `p_t(ξ) = e^{−2π t L |ξ|}`.
pub fn poisson_symbol(l: f64, t: f64, xi: &[f64]) -> Result<f64> {
    if !(t >= 0.0) || !(l > 0.0) {
        return Err(Error::invalid(format!("need t >= 0 and L > 0, got t={t}, L={l}")));
    }
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((-2.0 * std::f64::consts::PI * t * l * norm).exp())
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct SymbolSum {
    pub value: f64,
    /// Bound on the omitted terms.
    pub truncation_bound: f64,
}

const HALF_WIDTH: i32 = 60;

/// `Σ_{n∈Z} min{2^n a, (2^n a)^{−1}}`.
///
/// Writing `a = 2^e b` with `b ∈ [1, 2)` the sum depends on `b` only and is
/// evaluated over `|n + e| ≤ 60`, so `S(2a) = S(a)` bit for bit.
pub fn dyadic_symbol_sum(a: f64) -> Result<SymbolSum> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!("a must be positive and finite, got {a}")));
    }
    let b = mantissa(a);
    // n + e ≥ 0 contributes (2^m b)^{-1}, n + e < 0 contributes 2^m b
    let mut value = 0.0;
    for m in (1..=HALF_WIDTH).rev() {
        value += b * 2f64.powi(-m);
    }
    for m in (0..=HALF_WIDTH).rev() {
        value += 2f64.powi(-m) / b;
    }
    Ok(SymbolSum {
        value,
        truncation_bound: (b + 1.0 / b) * 2f64.powi(-HALF_WIDTH),
    })
}

fn mantissa(a: f64) -> f64 {
    let mut e = a.log2().floor() as i32;
    let mut b = a * 2f64.powi(-e);
    // guard rounding of log2 at exact powers of two
    while b >= 2.0 {
        e += 1;
        b = a * 2f64.powi(-e);
    }
    while b < 1.0 {
        e -= 1;
        b = a * 2f64.powi(-e);
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn poisson_examples() {
        assert_eq!(poisson_symbol(1.0, 0.0, &[3.0]).unwrap(), 1.0);
        assert_eq!(poisson_symbol(2.0, 5.0, &[0.0, 0.0]).unwrap(), 1.0);
        let v = poisson_symbol(1.0, 1.0, &[0.6, 0.8]).unwrap();
        assert!((v - 0.001_867_442_7).abs() < 1e-10);
        assert!(poisson_symbol(0.0, 1.0, &[1.0]).is_err());
        assert!(poisson_symbol(1.0, -1.0, &[1.0]).is_err());
    }

    #[test]
    fn symbol_sum_examples() {
        let s = dyadic_symbol_sum(1.0).unwrap();
        assert!((s.value - 3.0).abs() <= s.truncation_bound + 1e-15);
        for k in [-30, -3, 1, 7, 40] {
            assert_eq!(dyadic_symbol_sum(2f64.powi(k)).unwrap(), s);
        }
        let r = dyadic_symbol_sum(2f64.sqrt()).unwrap();
        assert!((r.value - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!(s.truncation_bound < 2f64.powi(-58));
        assert!(dyadic_symbol_sum(0.0).is_err());
    }

    #[test]
    fn symbol_sum_closed_form() {
        // on [1, 2) the sum is 2/b + b up to truncation
        for b in [1.0, 1.1, 1.5, 1.9, 1.999] {
            let s = dyadic_symbol_sum(b).unwrap();
            assert!((s.value - (2.0 / b + b)).abs() <= s.truncation_bound + 1e-15);
        }
    }

    proptest! {
        #[test]
        fn dilation_invariance(a in 1e-8f64..1e8, k in -20i32..20) {
            let s = dyadic_symbol_sum(a).unwrap();
            prop_assert_eq!(s, dyadic_symbol_sum(a * 2f64.powi(k)).unwrap());
            prop_assert!(s.value <= 3.0 + 1e-12);
            prop_assert!(s.value >= 2.0 * 2f64.sqrt() - 1e-12);
        }
    }
}
