//! Exact lattice-point enumeration in weighted `ℓ^q` balls
//! `{y ∈ Z^d : Σ w_k |y_k|^q ≤ N^q}` by recursive coordinate-range descent.

use crate::special::ln_qball_volume;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

pub const DEFAULT_CAP: u64 = 1_000_000_000;

/// Relative tolerance admitting boundary points lost to rounding of `N^q`.
pub const BOUNDARY_RTOL: f64 = 1e-12;

fn ser_q<S: Serializer>(q: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if q.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*q)
    }
}

/// `|B^q_N ∩ Z^d|` alongside `|B^q_N|`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BallCount {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(serialize_with = "ser_q")]
    pub q: f64,
    pub count: u64,
    pub volume: f64,
    pub ratio: f64,
}

/// A weighted ball `{y : Σ w_k |y_k|^q ≤ radius^q}`; for `q = ∞` the
/// condition is `max w_k |y_k| ≤ radius`.
#[derive(Clone, Debug)]
pub struct WeightedBall {
    pub weights: Vec<f64>,
    pub q: f64,
    pub radius: f64,
}

impl WeightedBall {
    pub fn qball(d: usize, q: f64, radius: f64) -> Self {
        WeightedBall {
            weights: vec![1.0; d],
            q,
            radius,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn budget(&self) -> f64 {
        if self.q.is_infinite() {
            self.radius * (1.0 + BOUNDARY_RTOL)
        } else {
            self.radius.powf(self.q) * (1.0 + BOUNDARY_RTOL)
        }
    }

    fn cost(&self, k: usize, y: i64) -> f64 {
        let a = y.unsigned_abs() as f64;
        if self.q.is_infinite() {
            self.weights[k] * a
        } else if self.q == 2.0 {
            self.weights[k] * a * a
        } else if self.q == 1.0 {
            self.weights[k] * a
        } else {
            self.weights[k] * a.powf(self.q)
        }
    }

    /// Largest `m ≥ 0` with `cost(k, m) ≤ remaining`, or `None` if even 0 fails.
    fn max_coord(&self, k: usize, remaining: f64) -> Option<i64> {
        if remaining < 0.0 {
            return None;
        }
        let w = self.weights[k];
        let guess = if self.q.is_infinite() {
            remaining / w
        } else {
            (remaining / w).powf(1.0 / self.q)
        };
        let mut m = guess.floor().max(0.0) as i64;
        while self.cost(k, m + 1) <= remaining {
            m += 1;
        }
        while m > 0 && self.cost(k, m) > remaining {
            m -= 1;
        }
        Some(m)
    }

    fn combine(&self, used: f64, c: f64) -> f64 {
        if self.q.is_infinite() {
            used.max(c)
        } else {
            used + c
        }
    }

    fn remaining(&self, used: f64) -> f64 {
        if self.q.is_infinite() {
            // any coordinate is allowed up to the full budget
            if used <= self.budget() {
                self.budget()
            } else {
                -1.0
            }
        } else {
            self.budget() - used
        }
    }

    /// Volume-based estimate of the count, from the body dilated by half a cell diagonal.
    pub fn estimated_count(&self) -> f64 {
        let d = self.dim();
        let pad = if self.q.is_infinite() {
            0.5
        } else {
            0.5 * (d as f64).powf(1.0 / self.q.max(1.0))
        };
        let wmin = self.weights.iter().cloned().fold(f64::INFINITY, f64::min);
        let scale = |w: f64| if self.q.is_infinite() { w } else { w.powf(1.0 / self.q) };
        let ln_w: f64 = self.weights.iter().map(|w| scale(*w).ln()).sum();
        let r = self.radius + pad * scale(wmin);
        (ln_qball_volume(d, self.q) + d as f64 * r.ln() - ln_w).exp()
    }

    fn check_cap(&self, cap: u64) -> Result<()> {
        let est = self.estimated_count();
        if est > cap as f64 {
            return Err(Error::CapExceeded { cap, estimate: est });
        }
        Ok(())
    }

    pub fn count(&self, cap: u64) -> Result<u64> {
        if !(self.radius >= 0.0) {
            return Err(Error::invalid("radius must be nonnegative"));
        }
        self.check_cap(cap)?;
        let d = self.dim();
        let m0 = self.max_coord(0, self.remaining(0.0)).unwrap_or(0);
        if d == 1 {
            return Ok(2 * m0 as u64 + 1);
        }
        let total = (-m0..=m0)
            .into_par_iter()
            .map(|y0| self.count_rec(1, self.combine(0.0, self.cost(0, y0))))
            .collect::<Vec<u64>>()
            .into_iter()
            .sum();
        Ok(total)
    }

    fn count_rec(&self, k: usize, used: f64) -> u64 {
        let Some(m) = self.max_coord(k, self.remaining(used)) else {
            return 0;
        };
        if k + 1 == self.dim() {
            return 2 * m as u64 + 1;
        }
        (-m..=m)
            .map(|y| self.count_rec(k + 1, self.combine(used, self.cost(k, y))))
            .sum()
    }

    /// All lattice points, in lexicographic order.
    pub fn points(&self, cap: u64) -> Result<Vec<Vec<i64>>> {
        self.check_cap(cap)?;
        let mut out = Vec::new();
        let mut cur = vec![0i64; self.dim()];
        self.points_rec(0, 0.0, &mut cur, &mut out, cap)?;
        Ok(out)
    }

    fn points_rec(
        &self,
        k: usize,
        used: f64,
        cur: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
        cap: u64,
    ) -> Result<()> {
        let Some(m) = self.max_coord(k, self.remaining(used)) else {
            return Ok(());
        };
        for y in -m..=m {
            cur[k] = y;
            if k + 1 == self.dim() {
                if out.len() as u64 >= cap {
                    return Err(Error::CapExceeded {
                        cap,
                        estimate: self.estimated_count(),
                    });
                }
                out.push(cur.clone());
            } else {
                self.points_rec(k + 1, self.combine(used, self.cost(k, y)), cur, out, cap)?;
            }
        }
        Ok(())
    }
}

pub fn enumerate_ball(d: usize, n: f64, q: f64) -> Result<BallCount> {
    enumerate_ball_with_cap(d, n, q, DEFAULT_CAP)
}

/// Exact `|B^q_N ∩ Z^d|`; `q = ∞` short-circuits to `(2⌊N⌋+1)^d`.
pub fn enumerate_ball_with_cap(d: usize, n: f64, q: f64, cap: u64) -> Result<BallCount> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    if !(n >= 0.0) || q.is_nan() || q < 1.0 {
        return Err(Error::invalid(format!("need N >= 0 and q >= 1, got N={n}, q={q}")));
    }
    let volume = (ln_qball_volume(d, q) + d as f64 * n.ln()).exp();
    let count = if q.is_infinite() {
        let side = 2 * (n * (1.0 + BOUNDARY_RTOL)).floor() as u64 + 1;
        let est = (side as f64).powi(d as i32);
        if est > cap as f64 {
            return Err(Error::CapExceeded { cap, estimate: est });
        }
        side.pow(d as u32)
    } else {
        WeightedBall::qball(d, q, n).count(cap)?
    };
    Ok(BallCount {
        d,
        n,
        q,
        count,
        volume,
        ratio: count as f64 / volume,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::qnorm;
    use proptest::prelude::*;

    fn brute(d: usize, n: f64, q: f64) -> u64 {
        let m = n.floor() as i64;
        let mut count = 0;
        let total = (2 * m + 1).pow(d as u32);
        for idx in 0..total {
            let mut rest = idx;
            let mut y = vec![0i64; d];
            for v in y.iter_mut() {
                *v = rest % (2 * m + 1) - m;
                rest /= 2 * m + 1;
            }
            let yf: Vec<f64> = y.iter().map(|v| *v as f64).collect();
            if qnorm(&yf, q) <= n * (1.0 + 1e-12) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn small_cases() {
        assert_eq!(enumerate_ball(2, 2.0, 2.0).unwrap().count, 13);
        assert_eq!(enumerate_ball(2, 2.0, f64::INFINITY).unwrap().count, 25);
        assert_eq!(enumerate_ball(1, 3.5, 2.0).unwrap().count, 7);
        assert_eq!(enumerate_ball(3, 0.5, 2.0).unwrap().count, 1);
        assert_eq!(enumerate_ball(2, 2f64.sqrt(), 2.0).unwrap().count, 9);
    }

    #[test]
    fn matches_brute_force() {
        for d in 1..=3 {
            for &q in &[1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
                for &n in &[0.7, 1.0, 2.0, 2.5, 3.3, 4.0] {
                    let c = enumerate_ball(d, n, q).unwrap().count;
                    assert_eq!(c, brute(d, n, q), "d={d} q={q} n={n}");
                }
            }
        }
    }

    #[test]
    fn points_agree_with_count() {
        let b = WeightedBall::qball(3, 2.0, 3.7);
        let pts = b.points(DEFAULT_CAP).unwrap();
        assert_eq!(pts.len() as u64, b.count(DEFAULT_CAP).unwrap());
        assert!(pts.iter().all(|p| p.iter().map(|v| v * v).sum::<i64>() as f64 <= 3.7 * 3.7));
    }

    #[test]
    fn ellipsoid_weights() {
        // Σ λ_k² y_k² ≤ 1.2² with λ = (1, 1.1, 1.3): only 0 and ±e_1, ±e_2
        let b = WeightedBall {
            weights: vec![1.0, 1.21, 1.69],
            q: 2.0,
            radius: 1.2,
        };
        assert_eq!(b.count(DEFAULT_CAP).unwrap(), 5);
    }

    #[test]
    fn cap_enforced() {
        assert!(matches!(
            enumerate_ball_with_cap(4, 100.0, 2.0, 1000),
            Err(Error::CapExceeded { .. })
        ));
        assert!(matches!(
            WeightedBall::qball(2, 2.0, 50.0).points(100),
            Err(Error::CapExceeded { .. })
        ));
    }

    proptest! {
        #[test]
        fn cube_count_closed_form(d in 1usize..5, n in 0u32..12) {
            let c = enumerate_ball(d, n as f64, f64::INFINITY).unwrap().count;
            prop_assert_eq!(c, (2 * n as u64 + 1).pow(d as u32));
            let via_rec = WeightedBall::qball(d, f64::INFINITY, n as f64).count(DEFAULT_CAP).unwrap();
            prop_assert_eq!(c, via_rec);
        }

        #[test]
        fn count_monotone_and_sandwiched(d in 1usize..4, n in 1.0f64..15.0) {
            let c = enumerate_ball(d, n, 2.0).unwrap();
            let c2 = enumerate_ball(d, n + 0.37, 2.0).unwrap();
            prop_assert!(c.count <= c2.count);
            let s = (d as f64).sqrt();
            let vol = |r: f64| if r <= 0.0 { 0.0 } else { crate::special::unit_ball_volume(d) * r.powi(d as i32) };
            prop_assert!(vol(n - s) <= c.count as f64);
            prop_assert!(c.count as f64 <= vol(n + s));
        }

        #[test]
        fn permuted_weights_same_count(a in 1.0f64..2.0, b in 1.0f64..2.0, r in 0.5f64..6.0) {
            let x = WeightedBall { weights: vec![a, b, 1.0], q: 2.0, radius: r }.count(DEFAULT_CAP).unwrap();
            let y = WeightedBall { weights: vec![1.0, b, a], q: 2.0, radius: r }.count(DEFAULT_CAP).unwrap();
            prop_assert_eq!(x, y);
        }
    }
}
