//! Uniform samplers for bodies.
//!
//! Dedicated exact samplers exist for cubes, Euclidean balls, cross-polytopes,
//! general q-balls and linear images of those; anything else falls back to box
//! rejection, which degrades quickly with dimension on round bodies.

use super::gauge::Gauge;
use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use std::fmt;
use std::sync::Arc;

pub trait Sampler: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Writes one uniform point into `out` and returns the number of proposals used.
    fn draw(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> u64;

    /// Half-width of the proposal box, for rejection samplers.
    fn proposal_box(&self) -> Option<f64> {
        None
    }
}

/// `[-1, 1]^d` as a product of uniforms.
#[derive(Debug, Clone)]
pub struct CubeSampler;

impl Sampler for CubeSampler {
    fn name(&self) -> &'static str {
        "cube-product"
    }

    fn draw(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> u64 {
        for v in out.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        1
    }
}

/// Gaussian direction times `U^{1/d}` radius.
#[derive(Debug, Clone)]
pub struct BallSampler;

impl Sampler for BallSampler {
    fn name(&self) -> &'static str {
        "ball-gaussian"
    }

    fn draw(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> u64 {
        let d = out.len();
        let mut norm2 = 0.0;
        while norm2 == 0.0 {
            norm2 = 0.0;
            for v in out.iter_mut() {
                *v = StandardNormal.sample(rng);
                norm2 += *v * *v;
            }
        }
        let u: f64 = rng.random();
        let scale = u.powf(1.0 / d as f64) / norm2.sqrt();
        out.iter_mut().for_each(|v| *v *= scale);
        1
    }
}

/// `B^1` via normalized exponential spacings with random signs.
#[derive(Debug, Clone)]
pub struct CrossPolytopeSampler;

impl Sampler for CrossPolytopeSampler {
    fn name(&self) -> &'static str {
        "simplex-exponential"
    }

    fn draw(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> u64 {
        let slack: f64 = Exp1.sample(rng);
        let mut total = slack;
        for v in out.iter_mut() {
            *v = Exp1.sample(rng);
            total += *v;
        }
        for v in out.iter_mut() {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            *v = sign * *v / total;
        }
        1
    }
}

/// Uniform on `B^q` for finite `q`: generalized Gaussian coordinates with
/// density `∝ e^{-|t|^q}`, normalized by `(Σ|g_i|^q + W)^{1/q}` with `W ~ Exp(1)`.
#[derive(Debug, Clone)]
pub struct GeneralizedGaussianSampler {
    pub q: f64,
    gamma: Gamma<f64>,
}

impl GeneralizedGaussianSampler {
    pub fn new(q: f64) -> Self {
        GeneralizedGaussianSampler {
            q,
            gamma: Gamma::new(1.0 / q, 1.0).expect("q >= 1"),
        }
    }
}

impl Sampler for GeneralizedGaussianSampler {
    fn name(&self) -> &'static str {
        "qball-generalized-gaussian"
    }

    fn draw(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> u64 {
        let w: f64 = Exp1.sample(rng);
        let mut total = w;
        for v in out.iter_mut() {
            let g: f64 = self.gamma.sample(rng);
            total += g;
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            *v = sign * g.powf(1.0 / self.q);
        }
        let scale = total.powf(-1.0 / self.q);
        out.iter_mut().for_each(|v| *v *= scale);
        1
    }
}

/// Pushes a base sampler through `x ↦ A x`.
#[derive(Debug, Clone)]
pub struct LinearSampler {
    pub base: Arc<dyn Sampler>,
    pub matrix: DMatrix<f64>,
}

impl Sampler for LinearSampler {
    fn name(&self) -> &'static str {
        "linear-image"
    }

    fn draw(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> u64 {
        let d = out.len();
        let mut tmp = vec![0.0; d];
        let proposals = self.base.draw(rng, &mut tmp);
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..d).map(|j| self.matrix[(i, j)] * tmp[j]).sum();
        }
        proposals
    }

    fn proposal_box(&self) -> Option<f64> {
        self.base.proposal_box()
    }
}

/// Box rejection from `[-R, R]^d`.
#[derive(Debug, Clone)]
pub struct RejectionSampler {
    pub gauge: Arc<dyn Gauge>,
    pub radius: f64,
}

impl Sampler for RejectionSampler {
    fn name(&self) -> &'static str {
        "box-rejection"
    }

    fn draw(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> u64 {
        let mut proposals = 0;
        loop {
            proposals += 1;
            for v in out.iter_mut() {
                *v = rng.random_range(-self.radius..self.radius);
            }
            if self.gauge.eval(out) <= 1.0 {
                return proposals;
            }
        }
    }

    fn proposal_box(&self) -> Option<f64> {
        Some(self.radius)
    }
}
