use super::Body;
use crate::rng::{derive_seed, shards, substream};
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

/// Rejection samplers abort when the pilot acceptance rate falls below this.
pub const DEFAULT_ACCEPTANCE_FLOOR: f64 = 1e-4;

const PILOT_PROPOSALS: usize = 20_000;
const PILOT_STREAM: u64 = 1 << 40;

/// `n` points stored row-major.
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub proposals: u64,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.len() as f64 / self.proposals as f64
    }

    /// Applies `x ↦ A x` to every point.
    pub fn transformed(&self, matrix: &DMatrix<f64>) -> SampleSet {
        let d = self.dim;
        let mut coords = vec![0.0; self.coords.len()];
        coords
            .par_chunks_mut(d)
            .zip(self.coords.par_chunks(d))
            .for_each(|(out, x)| {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..d).map(|j| matrix[(i, j)] * x[j]).sum();
                }
            });
        SampleSet {
            dim: d,
            coords,
            proposals: self.proposals,
        }
    }

    /// Projections `⟨x, ζ⟩` of every point.
    pub fn project(&self, zeta: &[f64]) -> Vec<f64> {
        self.coords
            .par_chunks(self.dim)
            .map(|x| x.iter().zip(zeta).map(|(a, b)| a * b).sum())
            .collect()
    }
}

pub fn sample_uniform(body: &Body, seed: u64, n: usize) -> Result<SampleSet> {
    sample_uniform_with_floor(body, seed, n, DEFAULT_ACCEPTANCE_FLOOR)
}

/// `n` independent uniform points of `body`, reproducible for a fixed seed.
pub fn sample_uniform_with_floor(body: &Body, seed: u64, n: usize, floor: f64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let d = body.dim();
    if let Some(radius) = body.sampler().proposal_box() {
        let rate = pilot_acceptance(body, seed, radius);
        if rate < floor {
            return Err(Error::AcceptanceTooLow { rate, floor });
        }
    }
    let sampler = body.sampler();
    let parts: Vec<(Vec<f64>, u64)> = shards(n)
        .into_par_iter()
        .map(|(idx, len)| {
            let mut rng = substream(seed, idx);
            let mut coords = vec![0.0; len * d];
            let mut proposals = 0;
            for x in coords.chunks_exact_mut(d) {
                proposals += sampler.draw(&mut rng, x);
            }
            (coords, proposals)
        })
        .collect();
    let mut coords = Vec::with_capacity(n * d);
    let mut proposals = 0;
    for (c, p) in parts {
        coords.extend_from_slice(&c);
        proposals += p;
    }
    Ok(SampleSet {
        dim: d,
        coords,
        proposals,
    })
}

fn pilot_acceptance(body: &Body, seed: u64, radius: f64) -> f64 {
    let mut rng = substream(seed, PILOT_STREAM);
    let mut x = vec![0.0; body.dim()];
    let hits = (0..PILOT_PROPOSALS)
        .filter(|_| {
            x.iter_mut().for_each(|v| *v = rng.random_range(-radius..radius));
            body.contains(&x)
        })
        .count();
    hits as f64 / PILOT_PROPOSALS as f64
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct VolumeEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub exact: bool,
}

/// `|G|`: the closed form when known, otherwise a box hit-or-miss estimate.
pub fn volume(body: &Body, seed: u64, n: usize) -> Result<VolumeEstimate> {
    match body.closed_form_volume() {
        Some(v) => Ok(VolumeEstimate {
            estimate: v,
            std_error: 0.0,
            exact: true,
        }),
        None => volume_mc(body, seed, n),
    }
}

/// Hit-or-miss estimate `(2R)^d · p̂` from `[-R, R]^d`, ignoring any closed form.
pub fn volume_mc(body: &Body, seed: u64, n: usize) -> Result<VolumeEstimate> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let r = body.bounding_radius();
    if !r.is_finite() {
        return Err(Error::invalid("bounding radius must be finite"));
    }
    let d = body.dim();
    let hits: usize = shards(n)
        .into_par_iter()
        .map(|(idx, len)| {
            let mut rng = substream(derive_seed(seed, 0x766f6c), idx);
            let mut x = vec![0.0; d];
            (0..len)
                .filter(|_| {
                    x.iter_mut().for_each(|v| *v = rng.random_range(-r..r));
                    body.contains(&x)
                })
                .count()
        })
        .sum();
    let p = hits as f64 / n as f64;
    let box_vol = (2.0 * r).powi(d as i32);
    Ok(VolumeEstimate {
        estimate: box_vol * p,
        std_error: box_vol * (p * (1.0 - p) / n as f64).sqrt(),
        exact: false,
    })
}

#[derive(Clone, Debug)]
pub struct CovarianceEstimate {
    /// `M = ∫_G x xᵀ dx`, symmetrized.
    pub matrix: DMatrix<f64>,
    pub std_errors: DMatrix<f64>,
    pub volume: VolumeEstimate,
}

/// Second-moment matrix `∫_G x xᵀ dx` of a symmetric body.
pub fn covariance_matrix(body: &Body, seed: u64, n: usize) -> Result<CovarianceEstimate> {
    let vol = volume(body, derive_seed(seed, 1), n)?;
    let samples = sample_uniform(body, seed, n)?;
    let (mean, se) = second_moments(&samples);
    let matrix = mean * vol.estimate;
    let rel = if vol.exact { 0.0 } else { vol.std_error / vol.estimate };
    let std_errors = DMatrix::from_fn(matrix.nrows(), matrix.ncols(), |i, j| {
        let m = matrix[(i, j)];
        ((se[(i, j)] * vol.estimate).powi(2) + (m * rel).powi(2)).sqrt()
    });
    let eig = matrix.clone().symmetric_eigen();
    let min_eigenvalue = eig.eigenvalues.min();
    if !(min_eigenvalue > 0.0) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue });
    }
    Ok(CovarianceEstimate {
        matrix,
        std_errors,
        volume: vol,
    })
}

/// Symmetrized `E[x xᵀ]` over the samples and the per-entry standard errors.
pub(crate) fn second_moments(samples: &SampleSet) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = samples.dim;
    let n = samples.len() as f64;
    let sums = crate::rng::stable_sums(samples.len(), 2 * d * d, |k, acc| {
        let x = samples.point(k);
        for i in 0..d {
            for j in 0..d {
                let v = x[i] * x[j];
                acc[i * d + j] += v;
                acc[d * d + i * d + j] += v * v;
            }
        }
    });
    let sum = DMatrix::from_fn(d, d, |i, j| sums[i * d + j]);
    let sum_sq = DMatrix::from_fn(d, d, |i, j| sums[d * d + i * d + j]);
    let mean = &sum / n;
    let mean = (&mean + mean.transpose()) * 0.5;
    let se = DMatrix::from_fn(d, d, |i, j| {
        let m = mean[(i, j)];
        ((sum_sq[(i, j)] / n - m * m).max(0.0) / n).sqrt()
    });
    (mean, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{gauge::QNorm, make_ellipsoid, make_qball, unit_cube};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn deterministic_given_seed() {
        let b = make_qball(3, 2.0).unwrap();
        let a = sample_uniform(&b, 11, 20_000).unwrap();
        let c = sample_uniform(&b, 11, 20_000).unwrap();
        assert_eq!(a.coords, c.coords);
        assert!(a.iter().all(|x| b.contains(x)));
    }

    #[test]
    fn acceptance_rates() {
        let cube = make_qball(4, f64::INFINITY).unwrap();
        assert_eq!(sample_uniform(&cube, 1, 1000).unwrap().acceptance_rate(), 1.0);
        let cross = make_qball(10, 1.0).unwrap();
        assert_eq!(sample_uniform(&cross, 1, 1000).unwrap().acceptance_rate(), 1.0);

        // a disc sampled by box rejection accepts about π/4 of proposals
        let disc = crate::bodies::Body::custom("disc", Arc::new(QNorm { dim: 2, q: 2.0 }), 1.0, None).unwrap();
        let s = sample_uniform(&disc, 3, 100_000).unwrap();
        let p = PI / 4.0;
        let se = (p * (1.0 - p) / s.proposals as f64).sqrt();
        assert!((s.acceptance_rate() - p).abs() < 4.0 * se);
    }

    #[test]
    fn thin_body_rejected() {
        let thin = crate::bodies::Body::custom("ball10", Arc::new(QNorm { dim: 20, q: 2.0 }), 1.0, None).unwrap();
        assert!(matches!(sample_uniform(&thin, 1, 10), Err(Error::AcceptanceTooLow { .. })));
    }

    #[test]
    fn volumes() {
        let cube = make_qball(5, f64::INFINITY).unwrap();
        let v = volume(&cube, 0, 10).unwrap();
        assert_eq!(v.estimate, 32.0);
        assert!(v.exact);
        let ball = make_qball(4, 2.0).unwrap();
        let v = volume_mc(&ball, 5, 400_000).unwrap();
        assert!((v.estimate - PI * PI / 2.0).abs() < 3.0 * v.std_error);
        let e = make_ellipsoid(&[1.0, 2.0]).unwrap();
        let v = volume_mc(&e, 6, 200_000).unwrap();
        assert!((v.estimate - PI / 2.0).abs() < 3.0 * v.std_error);
    }

    #[test]
    fn covariance_cases() {
        let c = covariance_matrix(&unit_cube(3).unwrap(), 4, 200_000).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 / 12.0 } else { 0.0 };
                assert!((c.matrix[(i, j)] - target).abs() < 5.0 * c.std_errors[(i, j)]);
            }
        }
        let e = covariance_matrix(&make_ellipsoid(&[1.0, 2.0]).unwrap(), 4, 200_000).unwrap();
        let ratio = e.matrix[(0, 0)] / e.matrix[(1, 1)];
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        assert!(e.matrix[(0, 1)].abs() < 5.0 * e.std_errors[(0, 1)]);
        assert_eq!(e.matrix[(0, 1)], e.matrix[(1, 0)]);
    }
}
