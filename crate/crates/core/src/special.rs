//! Closed-form volumes and moments of q-balls.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

/// `|B^2|` in dimension `d` (unit Euclidean ball).
pub fn unit_ball_volume(d: usize) -> f64 {
    let d = d as f64;
    (0.5 * d * PI.ln() - ln_gamma(1.0 + 0.5 * d)).exp()
}

/// `|B^q|` for the unit `ℓ^q` ball; `q = ∞` gives `2^d`.
pub fn qball_volume(d: usize, q: f64) -> f64 {
    ln_qball_volume(d, q).exp()
}

pub fn ln_qball_volume(d: usize, q: f64) -> f64 {
    let df = d as f64;
    if q.is_infinite() {
        return df * 2f64.ln();
    }
    df * (2f64.ln() + ln_gamma(1.0 + 1.0 / q)) - ln_gamma(1.0 + df / q)
}

/// `r_d = |B^2|^{-1/d}`, the radius of the unit-volume Euclidean ball.
pub fn unit_volume_ball_radius(d: usize) -> f64 {
    (-(ln_qball_volume(d, 2.0)) / d as f64).exp()
}

/// `∫_{B^q} x_1^2 dx` for the unit `ℓ^q` ball.
///
/// Obtained by integrating `x_1^2 e^{-‖x‖_q^q}` over `R^d` in two ways.
pub fn qball_second_moment(d: usize, q: f64) -> f64 {
    let df = d as f64;
    if q.is_infinite() {
        return 2f64.powi(d as i32) / 3.0;
    }
    let ln = (df - 1.0) * (2f64.ln() + ln_gamma(1.0 + 1.0 / q)) + (2.0 / q).ln() + ln_gamma(3.0 / q)
        - ln_gamma(1.0 + (df + 2.0) / q);
    ln.exp()
}

/// Isotropic constant of the unit-volume dilate of `B^q`.
pub fn qball_isotropic_constant(d: usize, q: f64) -> f64 {
    // L^2 = s^{d+2} ∫ x_1^2 with s = |B^q|^{-1/d}
    let ln_s = -ln_qball_volume(d, q) / d as f64;
    let ln_l2 = (d as f64 + 2.0) * ln_s + qball_second_moment(d, q).ln();
    (0.5 * ln_l2).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volumes() {
        assert!((qball_volume(2, 2.0) - PI).abs() < 1e-12);
        assert!((qball_volume(3, 1.0) - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(qball_volume(2, f64::INFINITY), 4.0);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn isotropic_constants() {
        // cube: 1/sqrt(12) in every dimension
        for d in 1..10 {
            let l = qball_isotropic_constant(d, f64::INFINITY);
            assert!((l - 12f64.powf(-0.5)).abs() < 1e-12);
        }
        // ball: r_d^2 / (d + 2)
        for d in 1..12 {
            let r = unit_volume_ball_radius(d);
            let l = qball_isotropic_constant(d, 2.0);
            assert!((l * l - r * r / (d as f64 + 2.0)).abs() < 1e-12);
        }
        // d = 1, any q: the interval [-1/2, 1/2]
        assert!((qball_isotropic_constant(1, 3.0) - 12f64.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn second_moment_interval() {
        assert!((qball_second_moment(1, 2.0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((qball_second_moment(1, 1.0) - 2.0 / 3.0).abs() < 1e-12);
    }
}
