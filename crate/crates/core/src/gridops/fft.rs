use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place unnormalized DFT over every axis of an `n^d` row-major array.
pub(crate) fn fft_nd(data: &mut [Complex64], n: usize, d: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..d {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..data.len()).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for (j, c) in line.iter_mut().enumerate() {
                    *c = data[base + j * stride];
                }
                plan.process(&mut line);
                for (j, c) in line.iter().enumerate() {
                    data[base + j * stride] = *c;
                }
            }
        }
    }
}

/// Signed frequency index of DFT bin `k`.
pub(crate) fn signed_bin(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_impulse() {
        let n = 5;
        let mut a: Vec<Complex64> = (0..n * n).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let orig = a.clone();
        fft_nd(&mut a, n, 2, false);
        fft_nd(&mut a, n, 2, true);
        for (x, y) in a.iter().zip(&orig) {
            assert!((x / (n * n) as f64 - y).norm() < 1e-12);
        }
        let mut e = vec![Complex64::new(0.0, 0.0); n * n * n];
        e[0] = Complex64::new(1.0, 0.0);
        fft_nd(&mut e, n, 3, false);
        assert!(e.iter().all(|c| (c - 1.0).norm() < 1e-15));
        assert_eq!(signed_bin(3, 5), -2);
        assert_eq!(signed_bin(2, 5), 2);
    }
}
