use super::fft::{fft_nd, signed_bin};
use super::grid::{Boundary, GridFunction};
use crate::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// `P_t f`: DFT coefficients multiplied by `e^{−2πtL|ξ|}` over the
/// frequency lattice `Z^d / (nh)`.
pub fn poisson(f: &GridFunction, t: f64, l: f64) -> Result<GridFunction> {
    poisson_many(f, &[t], l).map(|mut v| v.pop().unwrap())
}

/// `P_t f` for several `t` sharing one forward transform.
pub fn poisson_many(f: &GridFunction, ts: &[f64], l: f64) -> Result<Vec<GridFunction>> {
    if f.boundary != Boundary::Periodic {
        return Err(Error::BoundaryMode { required: "periodic" });
    }
    if let Some(t) = ts.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::invalid(format!("Poisson time {t} must be nonnegative")));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::invalid(format!("L = {l} must be positive")));
    }
    let d = f.dim;
    let n = f.axis_len();
    let m = f.half_len();
    // Store with the origin node first so the spectrum is that of f itself.
    let mut spec = vec![Complex64::new(0.0, 0.0); f.len()];
    for (i, v) in f.values.iter().enumerate() {
        let shifted: Vec<usize> = f.unflat(i).into_iter().map(|j| (j + n - m) % n).collect();
        spec[f.flat(&shifted)] = Complex64::new(*v, 0.0);
    }
    fft_nd(&mut spec, n, d, false);
    let period = f.period();
    let radius: Vec<f64> = (0..f.len())
        .map(|i| {
            f.unflat(i)
                .into_iter()
                .map(|k| (signed_bin(k, n) as f64 / period).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let norm = f.len() as f64;
    let mut out = Vec::with_capacity(ts.len());
    for t in ts {
        if *t == 0.0 {
            out.push(f.clone());
            continue;
        }
        let mut a: Vec<Complex64> = spec
            .iter()
            .zip(&radius)
            .map(|(c, r)| c * (-2.0 * PI * t * l * r).exp())
            .collect();
        fft_nd(&mut a, n, d, true);
        let mut values = vec![0.0; f.len()];
        for (i, v) in values.iter_mut().enumerate() {
            let shifted: Vec<usize> = f.unflat(i).into_iter().map(|j| (j + n - m) % n).collect();
            *v = a[f.flat(&shifted)].re / norm;
        }
        out.push(f.with_values(values)?);
    }
    Ok(out)
}

/// `S_n f = P_{2^{n−1}} f − P_{2^n} f`.
pub fn lp_projection(f: &GridFunction, n: i32, l: f64) -> Result<GridFunction> {
    let p = poisson_many(f, &[2f64.powi(n - 1), 2f64.powi(n)], l)?;
    p[0].zip_with(&p[1], |a, b| a - b)
}

/// Mass of the Poisson kernel `K_t` (symbol `e^{−2πtL|ξ|}`) outside the
/// ball of radius `r` in `R^d`, `d ≤ 3`.
pub fn poisson_tail_mass(d: usize, t: f64, l: f64, r: f64) -> f64 {
    let s = t * l;
    if s == 0.0 {
        return 0.0;
    }
    let inside = match d {
        1 => 2.0 / PI * (r / s).atan(),
        2 => 1.0 - s / (s * s + r * r).sqrt(),
        3 => 2.0 / PI * ((r / s).atan() - r * s / (s * s + r * r)),
        _ => panic!("Poisson tail mass implemented for d ≤ 3"),
    };
    (1.0 - inside).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bump(d: usize) -> GridFunction {
        GridFunction::from_fn(d, 4.0, 0.1, Boundary::Periodic, |x| {
            (-x.iter().map(|v| v * v).sum::<f64>() * 2.0).exp() + 0.3 * (x[0] * PI / 2.0).cos()
        })
        .unwrap()
    }

    #[test]
    fn identity_constants_and_boundary() {
        let f = bump(2);
        assert_eq!(poisson(&f, 0.0, 0.3).unwrap(), f);
        let one = GridFunction::constant(2, 4.0, 0.1, Boundary::Periodic, 1.0).unwrap();
        let p = poisson(&one, 0.7, 0.3).unwrap();
        assert!(p.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let s = lp_projection(&one, 2, 0.3).unwrap();
        assert!(s.max_abs() < 1e-12);
        let z = f.clone().with_boundary(Boundary::Zero);
        assert!(matches!(poisson(&z, 1.0, 0.3), Err(Error::BoundaryMode { .. })));
        assert!(poisson(&f, -1.0, 0.3).is_err());
    }

    #[test]
    fn semigroup_and_contraction() {
        for d in 1..=2 {
            let f = bump(d);
            let ps = poisson(&poisson(&f, 0.3, 0.29).unwrap(), 0.45, 0.29).unwrap();
            let direct = poisson(&f, 0.75, 0.29).unwrap();
            assert!(ps.max_abs_diff(&direct) < 1e-12);
            assert!(direct.lp_norm(2.0) <= f.lp_norm(2.0) + 1e-12);
        }
    }

    #[test]
    fn telescoping_and_resolution() {
        let f = bump(1);
        let l = 0.29;
        let big = 6;
        let mut sum = f.map(|_| 0.0);
        for n in -big..=big {
            sum = sum.zip_with(&lp_projection(&f, n, l).unwrap(), |a, b| a + b).unwrap();
        }
        let p = poisson_many(&f, &[2f64.powi(-big - 1), 2f64.powi(big)], l).unwrap();
        let tele = p[0].zip_with(&p[1], |a, b| a - b).unwrap();
        assert!(sum.max_abs_diff(&tele) < 1e-12);
        let mean = f.values.iter().sum::<f64>() / f.len() as f64;
        let mut wide = f.map(|_| 0.0);
        for n in -20..=20 {
            wide = wide.zip_with(&lp_projection(&f, n, l).unwrap(), |a, b| a + b).unwrap();
        }
        let zero_mean = f.map(|v| v - mean);
        assert!(wide.max_abs_diff(&zero_mean) < 1e-4);
    }

    #[test]
    fn tail_mass_limits() {
        for d in 1..=3 {
            assert!(poisson_tail_mass(d, 1.0, 1.0, 0.0) > 1.0 - 1e-12);
            assert!(poisson_tail_mass(d, 1.0, 1.0, 1e9) < 1e-8);
            assert!(poisson_tail_mass(d, 1.0, 1.0, 2.0) < poisson_tail_mass(d, 1.0, 1.0, 1.0));
        }
        assert!((poisson_tail_mass(1, 1.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn mass_and_contraction(vals in proptest::collection::vec(0.0f64..3.0, 41), t in 0.01f64..2.0) {
            let f = GridFunction::new(1, 2.0, 0.1, Boundary::Periodic, vals).unwrap();
            let p = poisson(&f, t, 0.29).unwrap();
            prop_assert!((p.integral() - f.integral()).abs() < 1e-9);
            prop_assert!(p.lp_norm(2.0) <= f.lp_norm(2.0) + 1e-12);
        }
    }
}
