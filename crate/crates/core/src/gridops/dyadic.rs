use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Samples of `𝔞` at `2^n + j 2^{n−L}`, `j = 0..=2^L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicSequence {
    pub level: u32,
    pub values: Vec<Complex64>,
}

impl DyadicSequence {
    pub fn new(level: u32, values: Vec<Complex64>) -> Result<Self> {
        if level > 30 {
            return Err(Error::invalid(format!("level {level} is too deep")));
        }
        let want = (1usize << level) + 1;
        if values.len() != want {
            return Err(Error::invalid(format!(
                "level {level} needs {want} samples, got {}",
                values.len()
            )));
        }
        Ok(DyadicSequence { level, values })
    }

    pub fn from_real(level: u32, values: &[f64]) -> Result<Self> {
        Self::new(level, values.iter().map(|v| Complex64::new(*v, 0.0)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RmBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl RmBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

/// `max_j |𝔞_j − 𝔞_0|` against `√2 Σ_l (Σ_m |𝔞_{(m+1)2^{L−l}} − 𝔞_{m2^{L−l}}|²)^{1/2}`.
/// Levels deeper than `L` vanish on mesh samples, so the sum is complete.
pub fn rademacher_menshov(seq: &DyadicSequence) -> RmBound {
    let a = &seq.values;
    let lhs = a.iter().fold(0.0f64, |m, v| m.max((v - a[0]).norm()));
    let big = seq.level;
    let mut rhs = 0.0;
    for l in 0..=big {
        let step = 1usize << (big - l);
        let level_sum: f64 = (0..(1usize << l))
            .map(|m| (a[(m + 1) * step] - a[m * step]).norm_sqr())
            .sum();
        rhs += level_sum.sqrt();
    }
    RmBound {
        lhs,
        rhs: std::f64::consts::SQRT_2 * rhs,
    }
}

/// Real-valued variant used on grid data.
pub(crate) fn rm_real(a: &[f64], level: u32) -> RmBound {
    let lhs = a.iter().fold(0.0f64, |m, v| m.max((v - a[0]).abs()));
    let mut rhs = 0.0;
    for l in 0..=level {
        let step = 1usize << (level - l);
        let s: f64 = (0..(1usize << l)).map(|m| (a[(m + 1) * step] - a[m * step]).powi(2)).sum();
        rhs += s.sqrt();
    }
    RmBound {
        lhs,
        rhs: std::f64::consts::SQRT_2 * rhs,
    }
}
