use super::estimate::{second_moments, SampleSet};
use super::{make_linear_image, make_qball, sample_uniform, Body, BodyKind};
use crate::report::ExperimentReport;
use crate::rng::{derive_seed, substream};
use crate::special::{
    qball_isotropic_constant, qball_volume, unit_ball_volume, unit_volume_ball_radius,
};
use crate::{Error, Result};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

/// Smallest eigenvalue admitted when taking matrix square roots.
const EIGEN_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct NormalizationCertificate {
    pub volume_estimate: f64,
    pub volume_std_error: f64,
    /// `max_ij |E[y_i y_j] − L² δ_ij|` on fresh samples of `U(G)`.
    pub covariance_residual: f64,
    /// Five times the largest per-entry standard error.
    pub residual_tolerance: f64,
    pub samples: usize,
}

impl NormalizationCertificate {
    pub fn within_tolerance(&self) -> bool {
        self.covariance_residual <= self.residual_tolerance
    }
}

/// A body together with a linear map `U` putting it in isotropic position.
#[derive(Clone, Debug)]
pub struct IsotropicBody {
    pub base: Body,
    pub transform: DMatrix<f64>,
    pub inverse_transform: DMatrix<f64>,
    pub l: f64,
    pub l_std_error: f64,
    pub certificate: NormalizationCertificate,
    normalized: Body,
}

impl IsotropicBody {
    /// `U(G)`, which has unit volume and scalar second moments.
    pub fn body(&self) -> &Body {
        &self.normalized
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Unit-volume dilate of `B^q`, normalized in closed form.
    pub fn qball(d: usize, q: f64) -> Result<IsotropicBody> {
        let base = make_qball(d, q)?;
        let s = qball_volume(d, q).powf(-1.0 / d as f64);
        let transform = DMatrix::from_diagonal_element(d, d, s);
        let normalized = make_linear_image(&base, &transform)?;
        Ok(IsotropicBody {
            inverse_transform: DMatrix::from_diagonal_element(d, d, 1.0 / s),
            transform,
            l: qball_isotropic_constant(d, q),
            l_std_error: 0.0,
            certificate: exact_certificate(),
            base,
            normalized,
        })
    }

    /// Wraps a body already known to be isotropic with unit volume.
    pub fn from_known(body: Body, l: f64) -> Result<IsotropicBody> {
        let v = body
            .closed_form_volume()
            .ok_or_else(|| Error::invalid("known-isotropic body needs a closed-form volume"))?;
        if (v - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("volume {v} is not 1")));
        }
        let d = body.dim();
        Ok(IsotropicBody {
            transform: DMatrix::identity(d, d),
            inverse_transform: DMatrix::identity(d, d),
            l,
            l_std_error: 0.0,
            certificate: exact_certificate(),
            normalized: body.clone(),
            base: body,
        })
    }
}

fn exact_certificate() -> NormalizationCertificate {
    NormalizationCertificate {
        volume_estimate: 1.0,
        volume_std_error: 0.0,
        covariance_residual: 0.0,
        residual_tolerance: 0.0,
        samples: 0,
    }
}

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// Whitening `U = c S^{-1}` with `S = M^{1/2}` and `c = |det S|^{1/d} |G|^{-1/d}`,
/// so that `|U(G)| = 1` and `∫_{U(G)} y yᵀ dy = L² I`.
pub fn isotropic_position(body: &Body, seed: u64, n: usize) -> Result<IsotropicBody> {
    let d = body.dim();
    let cov = super::covariance_matrix(body, seed, n)?;
    let s = sym_sqrt(&cov.matrix);
    let det_s = s.determinant().abs();
    let c = (det_s / cov.volume.estimate).powf(1.0 / d as f64);
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMatrix { determinant: det_s })?;
    let transform = s_inv * c;
    let inverse_transform = &s / c;
    let normalized = make_linear_image(body, &transform)?;

    // verification on an independent sample set
    let fresh = sample_uniform(body, derive_seed(seed, 0x69736f), n)?.transformed(&transform);
    let det_u = transform.determinant().abs();
    let vol_u = det_u * cov.volume.estimate;
    let (second, se) = second_moments(&fresh);
    let (l, l_se) = isotropic_constant_from(&fresh);
    let mut residual = 0.0f64;
    let mut max_se = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { l * l } else { 0.0 };
            residual = residual.max((second[(i, j)] - target).abs());
            max_se = max_se.max(se[(i, j)]);
        }
    }
    Ok(IsotropicBody {
        base: body.clone(),
        transform,
        inverse_transform,
        l,
        l_std_error: l_se,
        certificate: NormalizationCertificate {
            volume_estimate: vol_u,
            volume_std_error: det_u * cov.volume.std_error,
            covariance_residual: residual,
            residual_tolerance: 5.0 * max_se,
            samples: n,
        },
        normalized,
    })
}

/// `L² = (1/d) E|y|²` for uniform samples of a unit-volume body, with the
/// delta-method standard error of `L`.
pub(crate) fn isotropic_constant_from(samples: &SampleSet) -> (f64, f64) {
    let d = samples.dim as f64;
    let n = samples.len() as f64;
    let sums = crate::rng::stable_sums(samples.len(), 2, |i, acc| {
        let r2: f64 = samples.point(i).iter().map(|v| v * v).sum();
        acc[0] += r2;
        acc[1] += r2 * r2;
    });
    let (s, s2) = (sums[0], sums[1]);
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0);
    let l2 = mean / d;
    let l = l2.sqrt();
    let se_l2 = (var / n).sqrt() / d;
    (l, se_l2 / (2.0 * l))
}

/// Closed-form normalization for dilated q-balls, sampled whitening otherwise.
pub fn isotropic_auto(body: &Body, seed: u64, n: usize) -> Result<IsotropicBody> {
    match body.as_scaled_qball() {
        Some((q, _)) => IsotropicBody::qball(body.dim(), q),
        None => isotropic_position(body, seed, n),
    }
}

/// `L(r_d B^2) ≤ L(G) ≤ C d^{1/2}`.
pub fn isotropic_constant_bounds_check(iso: &IsotropicBody, upper_c: f64) -> ExperimentReport {
    let d = iso.dim();
    let r = unit_volume_ball_radius(d);
    let l_ball = r / (d as f64 + 2.0).sqrt();
    let mut rep = ExperimentReport::new(
        "isotropic_constant_bounds_check",
        json!({ "body": iso.base.describe(), "dim": d, "upper_c": upper_c }),
        0,
    );
    rep.measure("L", iso.l, iso.l_std_error);
    rep.measure("L_ball", l_ball, 0.0);
    let slack = 3.0 * iso.l_std_error + 1e-12;
    rep.check("lower:L_ball<=L", l_ball, iso.l, slack);
    rep.check("upper:L<=C*sqrt(d)", iso.l, upper_c * (d as f64).sqrt(), slack);
    rep
}

fn random_unit(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaEstimate {
    pub sigma: f64,
    pub max_phi0: f64,
    pub max_phi0_std_error: f64,
    pub direction: Vec<f64>,
    /// `L/8 ≤ σ ≤ 8L`.
    pub consistent: bool,
}

/// `σ(G) = 1 / max_ζ φ_ζ(0)` over coordinate axes, the main diagonal and
/// `n_directions` random directions.
pub fn sigma_invariant(
    iso: &IsotropicBody,
    n_directions: usize,
    seed: u64,
    n: usize,
) -> Result<SigmaEstimate> {
    let d = iso.dim();
    let samples = sample_uniform(iso.body(), seed, n)?;
    let mut dirs: Vec<Vec<f64>> = (0..d)
        .map(|k| (0..d).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
        .collect();
    dirs.push(vec![1.0 / (d as f64).sqrt(); d]);
    let mut rng = substream(derive_seed(seed, 0x736967), 0);
    dirs.extend((0..n_directions).map(|_| random_unit(&mut rng, d)));

    let nf = samples.len() as f64;
    let best = dirs
        .into_par_iter()
        .map(|z| {
            let proj = samples.project(&z);
            let support = proj.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let h = support / 64.0;
            let hits = proj.iter().filter(|u| u.abs() <= h / 2.0).count() as f64;
            let p = hits / nf;
            (p / h, (p * (1.0 - p) / nf).sqrt() / h, z)
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one direction");
    let (phi0, phi0_se, direction) = best;
    if !(phi0 > 0.0) {
        return Err(Error::invalid("degenerate section at the origin; sampler failure"));
    }
    let sigma = 1.0 / phi0;
    Ok(SigmaEstimate {
        sigma,
        max_phi0: phi0,
        max_phi0_std_error: phi0_se,
        direction,
        consistent: iso.l / 8.0 <= sigma && sigma <= 8.0 * iso.l,
    })
}

/// `Vol_{d-1}` of the projection of `[-1/2, 1/2]^d` onto `ξ^⊥`: `Σ|ξ_j| / |ξ|`.
pub fn q_invariant_cube(xi: &[f64]) -> Result<f64> {
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::invalid("direction must be nonzero"));
    }
    Ok(xi.iter().map(|v| v.abs()).sum::<f64>() / norm)
}

/// Shadow volume `Vol_{d-1}(π_{ξ^⊥}(G))` for cubes, Euclidean balls,
/// ellipsoids and linear images of those.
pub fn shadow_volume(body: &Body, xi: &[f64]) -> Result<f64> {
    shadow_of_kind(body.kind(), xi)
}

fn shadow_of_kind(kind: &BodyKind, xi: &[f64]) -> Result<f64> {
    let d = xi.len();
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::invalid("direction must be nonzero"));
    }
    match kind {
        BodyKind::QBall { q } if q.is_infinite() => {
            Ok(2f64.powi(d as i32 - 1) * xi.iter().map(|v| v.abs()).sum::<f64>() / norm)
        }
        BodyKind::QBall { q } if *q == 2.0 => Ok(if d == 1 { 1.0 } else { unit_ball_volume(d - 1) }),
        BodyKind::Ellipsoid { lambdas } => {
            let a = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                d,
                lambdas.iter().map(|l| 1.0 / l),
            ));
            linear_shadow(&BodyKind::QBall { q: 2.0 }, &a, xi)
        }
        BodyKind::LinearImage { base, matrix, .. } => linear_shadow(base, matrix, xi),
        other => Err(Error::Unsupported(format!("shadow volume of {other:?}"))),
    }
}

// Vol(π_ξ(A K)) = |det A| · |A^{-T} ξ| / |ξ| · Vol(π_η(K)),  η = A^{-T} ξ
fn linear_shadow(base: &BodyKind, a: &DMatrix<f64>, xi: &[f64]) -> Result<f64> {
    let d = xi.len();
    let det = a.determinant();
    let inv_t = a
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMatrix { determinant: det })?
        .transpose();
    let x = nalgebra::DVector::from_column_slice(xi);
    let eta = &inv_t * &x;
    let ratio = eta.norm() / x.norm();
    let eta: Vec<f64> = eta.iter().copied().collect();
    debug_assert_eq!(eta.len(), d);
    Ok(det.abs() * ratio * shadow_of_kind(base, &eta)?)
}

/// Maximizes `objective` over the unit sphere by random restarts and
/// shrinking-step hill climbing. Returns the best value and its argument.
pub fn sphere_search<F>(dim: usize, objective: F, restarts: usize, seed: u64) -> (f64, Vec<f64>)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let results: Vec<(f64, Vec<f64>)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r as u64);
            let mut x = random_unit(&mut rng, dim);
            let mut fx = objective(&x);
            let mut step = 0.5;
            while step > 1e-7 {
                let mut improved = false;
                for _ in 0..4 * dim {
                    let dir = random_unit(&mut rng, dim);
                    let mut y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
                    let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                    y.iter_mut().for_each(|v| *v /= n);
                    let fy = objective(&y);
                    if fy > fx {
                        x = y;
                        fx = fy;
                        improved = true;
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            (fx, x)
        })
        .collect();
    results
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one restart")
}
