use nalgebra::DMatrix;
use std::fmt;
use std::sync::Arc;

/// Minkowski gauge `x ↦ ‖x‖_G` of a convex symmetric body.
pub trait Gauge: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
}

/// `ℓ^q` norm, `q ∈ [1, ∞]`.
#[derive(Clone, Debug)]
pub struct QNorm {
    pub dim: usize,
    pub q: f64,
}

impl Gauge for QNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        qnorm(x, self.q)
    }
}

pub(crate) fn qnorm(x: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if q == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if q == 2.0 {
        return x.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
}

/// `(Σ λ_k² x_k²)^{1/2}`.
#[derive(Clone, Debug)]
pub struct EllipsoidNorm {
    pub lambdas: Vec<f64>,
}

impl Gauge for EllipsoidNorm {
    fn dim(&self) -> usize {
        self.lambdas.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.lambdas
            .iter()
            .zip(x)
            .map(|(l, v)| (l * v) * (l * v))
            .sum::<f64>()
            .sqrt()
    }
}

/// Gauge of `A(G)`: `x ↦ ‖A^{-1} x‖_G`.
#[derive(Clone, Debug)]
pub struct LinearGauge {
    pub base: Arc<dyn Gauge>,
    pub inverse: DMatrix<f64>,
}

impl Gauge for LinearGauge {
    fn dim(&self) -> usize {
        self.inverse.nrows()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut y = vec![0.0; d];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (0..d).map(|j| self.inverse[(i, j)] * x[j]).sum();
        }
        self.base.eval(&y)
    }
}

type GaugeFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Gauge given by an arbitrary closure.
#[derive(Clone)]
pub struct FnGauge {
    pub dim: usize,
    pub name: String,
    pub f: Arc<GaugeFn>,
}

impl fmt::Debug for FnGauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnGauge")
            .field("dim", &self.dim)
            .field("name", &self.name)
            .finish()
    }
}

impl Gauge for FnGauge {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qnorm_matches_direct_formula() {
        let x = [3.0, -4.0];
        assert_eq!(qnorm(&x, 2.0), 5.0);
        assert_eq!(qnorm(&x, 1.0), 7.0);
        assert_eq!(qnorm(&x, f64::INFINITY), 4.0);
        let direct = (3f64.powi(3) + 4f64.powi(3)).powf(1.0 / 3.0);
        assert!((qnorm(&x, 3.0) - direct).abs() < 1e-12);
    }

    #[test]
    fn linear_gauge_inverts() {
        let g = LinearGauge {
            base: Arc::new(QNorm { dim: 2, q: 2.0 }),
            inverse: DMatrix::from_diagonal_element(2, 2, 0.5),
        };
        assert!((g.eval(&[2.0, 0.0]) - 1.0).abs() < 1e-15);
    }
}
