//! Convex symmetric bodies: gauges, samplers, volume and covariance
//! estimation, and the isotropic-position transform.

mod estimate;
mod gauge;
mod isotropic;
mod registry;
mod sampler;

pub use estimate::{
    covariance_matrix, sample_uniform, sample_uniform_with_floor, volume, volume_mc,
    CovarianceEstimate, SampleSet, VolumeEstimate, DEFAULT_ACCEPTANCE_FLOOR,
};
#[cfg(test)]
pub(crate) use gauge::qnorm;
pub use gauge::{EllipsoidNorm, FnGauge, Gauge, LinearGauge, QNorm};
pub use isotropic::{
    isotropic_auto, isotropic_constant_bounds_check, isotropic_position, q_invariant_cube, shadow_volume,
    sigma_invariant, sphere_search, IsotropicBody, NormalizationCertificate, SigmaEstimate,
};
pub use registry::{BodyFactory, BodyRegistry};
pub use sampler::{
    BallSampler, CrossPolytopeSampler, CubeSampler, GeneralizedGaussianSampler, LinearSampler,
    RejectionSampler, Sampler,
};

use crate::special::{qball_volume, unit_ball_volume};
use crate::{Error, Result};
use nalgebra::DMatrix;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub enum BodyKind {
    QBall { q: f64 },
    Ellipsoid { lambdas: Vec<f64> },
    LinearImage {
        base: Box<BodyKind>,
        matrix: DMatrix<f64>,
        condition_number: f64,
    },
    Custom { name: String },
}

impl Serialize for BodyKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BodyKind::QBall { q } => {
                let mut st = s.serialize_struct("qball", 2)?;
                st.serialize_field("kind", "qball")?;
                if q.is_infinite() {
                    st.serialize_field("q", "inf")?;
                } else {
                    st.serialize_field("q", q)?;
                }
                st.end()
            }
            BodyKind::Ellipsoid { lambdas } => {
                let mut st = s.serialize_struct("ellipsoid", 2)?;
                st.serialize_field("kind", "ellipsoid")?;
                st.serialize_field("lambdas", lambdas)?;
                st.end()
            }
            BodyKind::LinearImage {
                base,
                matrix,
                condition_number,
            } => {
                let rows: Vec<Vec<f64>> = matrix
                    .row_iter()
                    .map(|r| r.iter().copied().collect())
                    .collect();
                let mut st = s.serialize_struct("linear_image", 4)?;
                st.serialize_field("kind", "linear_image")?;
                st.serialize_field("base", base)?;
                st.serialize_field("matrix", &rows)?;
                st.serialize_field("condition_number", condition_number)?;
                st.end()
            }
            BodyKind::Custom { name } => {
                let mut st = s.serialize_struct("custom", 2)?;
                st.serialize_field("kind", "custom")?;
                st.serialize_field("name", name)?;
                st.end()
            }
        }
    }
}

/// A convex symmetric body in `R^d`, described by its gauge.
#[derive(Clone)]
pub struct Body {
    dim: usize,
    gauge: Arc<dyn Gauge>,
    sampler: Arc<dyn Sampler>,
    bounding_radius: f64,
    closed_form_volume: Option<f64>,
    kind: BodyKind,
}

impl fmt::Debug for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Body")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("sampler", &self.sampler.name())
            .field("bounding_radius", &self.bounding_radius)
            .field("closed_form_volume", &self.closed_form_volume)
            .finish()
    }
}

impl Body {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gauge(&self, x: &[f64]) -> f64 {
        self.gauge.eval(x)
    }

    pub fn gauge_fn(&self) -> &Arc<dyn Gauge> {
        &self.gauge
    }

    pub fn sampler(&self) -> &Arc<dyn Sampler> {
        &self.sampler
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    pub fn closed_form_volume(&self) -> Option<f64> {
        self.closed_form_volume
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.gauge(x) <= 1.0
    }

    /// `(q, scale)` when the body is `scale · B^q`, possibly through a
    /// scalar linear image.
    pub fn as_scaled_qball(&self) -> Option<(f64, f64)> {
        match &self.kind {
            BodyKind::QBall { q } => Some((*q, 1.0)),
            BodyKind::LinearImage { base, matrix, .. } => {
                let BodyKind::QBall { q } = base.as_ref() else {
                    return None;
                };
                let s = matrix[(0, 0)];
                let scalar = matrix
                    .iter()
                    .enumerate()
                    .all(|(k, v)| if k % (self.dim + 1) == 0 { *v == s } else { *v == 0.0 });
                (scalar && s > 0.0).then_some((*q, s))
            }
            _ => None,
        }
    }

    /// Axis weights `w` and exponent `q` when the body is
    /// `{x : Σ w_k |x_k|^q ≤ 1}` (q-balls and axis-aligned ellipsoids).
    pub fn as_weighted_qball(&self) -> Option<(Vec<f64>, f64)> {
        match &self.kind {
            BodyKind::Ellipsoid { lambdas } => Some((lambdas.iter().map(|l| l * l).collect(), 2.0)),
            _ => {
                let (q, s) = self.as_scaled_qball()?;
                let w = if q.is_infinite() { 1.0 / s } else { s.powf(-q) };
                Some((vec![w; self.dim], q))
            }
        }
    }

    /// A body given by an arbitrary gauge, sampled by box rejection.
    pub fn custom(
        name: impl Into<String>,
        gauge: Arc<dyn Gauge>,
        bounding_radius: f64,
        closed_form_volume: Option<f64>,
    ) -> Result<Body> {
        if !(bounding_radius > 0.0 && bounding_radius.is_finite()) {
            return Err(Error::invalid("bounding radius must be positive and finite"));
        }
        let dim = gauge.dim();
        Ok(Body {
            dim,
            sampler: Arc::new(RejectionSampler {
                gauge: gauge.clone(),
                radius: bounding_radius,
            }),
            gauge,
            bounding_radius,
            closed_form_volume,
            kind: BodyKind::Custom { name: name.into() },
        })
    }

    /// Short spec-like description, e.g. `qball:2`.
    pub fn describe(&self) -> String {
        fn go(k: &BodyKind) -> String {
            match k {
                BodyKind::QBall { q } if q.is_infinite() => "qball:inf".into(),
                BodyKind::QBall { q } => format!("qball:{q}"),
                BodyKind::Ellipsoid { lambdas } => format!(
                    "ellipsoid:{}",
                    lambdas.iter().map(|l| format!("{l:.6}")).collect::<Vec<_>>().join(",")
                ),
                BodyKind::LinearImage { base, .. } => format!("linear({})", go(base)),
                BodyKind::Custom { name } => format!("custom:{name}"),
            }
        }
        go(&self.kind)
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(())
}

/// The unit `ℓ^q` ball `B^q ⊂ R^d`, `q ∈ [1, ∞]`.
pub fn make_qball(d: usize, q: f64) -> Result<Body> {
    check_dim(d)?;
    if q.is_nan() || q < 1.0 {
        return Err(Error::invalid(format!("q = {q} < 1 does not give a convex body")));
    }
    let sampler: Arc<dyn Sampler> = if q.is_infinite() {
        Arc::new(CubeSampler)
    } else if q == 1.0 {
        Arc::new(CrossPolytopeSampler)
    } else if q == 2.0 {
        Arc::new(BallSampler)
    } else {
        Arc::new(GeneralizedGaussianSampler::new(q))
    };
    let exponent = if q.is_infinite() { 0.5 } else { (0.5 - 1.0 / q).max(0.0) };
    Ok(Body {
        dim: d,
        gauge: Arc::new(QNorm { dim: d, q }),
        sampler,
        bounding_radius: (d as f64).powf(exponent),
        closed_form_volume: Some(qball_volume(d, q)),
        kind: BodyKind::QBall { q },
    })
}

/// `E = {x : Σ λ_k² x_k² ≤ 1}`.
pub fn make_ellipsoid(lambdas: &[f64]) -> Result<Body> {
    check_dim(lambdas.len())?;
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::invalid(format!("ellipsoid semi-axis weight {bad} must be positive")));
    }
    let d = lambdas.len();
    let inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        lambdas.iter().map(|l| 1.0 / l),
    ));
    Ok(Body {
        dim: d,
        gauge: Arc::new(EllipsoidNorm {
            lambdas: lambdas.to_vec(),
        }),
        sampler: Arc::new(LinearSampler {
            base: Arc::new(BallSampler),
            matrix: inv,
        }),
        bounding_radius: 1.0 / lambdas.iter().cloned().fold(f64::INFINITY, f64::min),
        closed_form_volume: Some(unit_ball_volume(d) / lambdas.iter().product::<f64>()),
        kind: BodyKind::Ellipsoid {
            lambdas: lambdas.to_vec(),
        },
    })
}

/// The default monotone spectrum `λ_k = √2 (1 − 2^{-k-1})`, `k = 1..=d`,
/// which lies in `[1, √2)`.
pub fn ellipsoid_schedule(d: usize) -> Vec<f64> {
    (1..=d)
        .map(|k| std::f64::consts::SQRT_2 * (1.0 - 2f64.powi(-(k as i32) - 1)))
        .collect()
}

/// `A(G)` for invertible `A`.
pub fn make_linear_image(body: &Body, matrix: &DMatrix<f64>) -> Result<Body> {
    let d = body.dim;
    if matrix.nrows() != d || matrix.ncols() != d {
        return Err(Error::invalid(format!(
            "matrix is {}x{}, body dimension {d}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let det = matrix.determinant();
    let svd = matrix.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !det.is_finite() || smin <= 1e-12 * smax.max(1e-300) {
        return Err(Error::SingularMatrix { determinant: det });
    }
    let inverse = matrix
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMatrix { determinant: det })?;
    Ok(Body {
        dim: d,
        gauge: Arc::new(LinearGauge {
            base: body.gauge.clone(),
            inverse,
        }),
        sampler: Arc::new(LinearSampler {
            base: body.sampler.clone(),
            matrix: matrix.clone(),
        }),
        bounding_radius: smax * body.bounding_radius,
        closed_form_volume: body.closed_form_volume.map(|v| v * det.abs()),
        kind: BodyKind::LinearImage {
            base: Box::new(body.kind.clone()),
            matrix: matrix.clone(),
            condition_number: smax / smin,
        },
    })
}

/// `[-1/2, 1/2]^d`, the unit-volume cube.
pub fn unit_cube(d: usize) -> Result<Body> {
    make_linear_image(&make_qball(d, f64::INFINITY)?, &DMatrix::from_diagonal_element(d, d, 0.5))
}

/// `r_d B^2`, the unit-volume Euclidean ball.
pub fn unit_volume_ball(d: usize) -> Result<Body> {
    let r = crate::special::unit_volume_ball_radius(d);
    make_linear_image(&make_qball(d, 2.0)?, &DMatrix::from_diagonal_element(d, d, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn qball_closed_forms() {
        assert_eq!(make_qball(2, f64::INFINITY).unwrap().closed_form_volume(), Some(4.0));
        let b = make_qball(2, 2.0).unwrap();
        assert!((b.closed_form_volume().unwrap() - PI).abs() < 1e-12);
        let c = make_qball(3, 1.0).unwrap();
        assert!((c.closed_form_volume().unwrap() - 4.0 / 3.0).abs() < 1e-12);
        assert!((make_qball(9, f64::INFINITY).unwrap().bounding_radius() - 3.0).abs() < 1e-12);
        assert_eq!(make_qball(9, 1.0).unwrap().bounding_radius(), 1.0);
    }

    #[test]
    fn q_below_one_rejected() {
        assert!(matches!(make_qball(2, 0.5), Err(Error::InvalidParameter(_))));
        assert!(make_qball(0, 2.0).is_err());
    }

    #[test]
    fn ellipsoid_cases() {
        let e = make_ellipsoid(&[1.0, 1.0]).unwrap();
        assert!((e.gauge(&[3.0, 4.0]) - 5.0).abs() < 1e-12);
        assert!((e.closed_form_volume().unwrap() - PI).abs() < 1e-12);
        let e = make_ellipsoid(&[1.0, 2.0]).unwrap();
        assert!((e.closed_form_volume().unwrap() - PI / 2.0).abs() < 1e-12);
        assert!(make_ellipsoid(&[1.0, 0.0]).is_err());
        assert!(make_ellipsoid(&[-1.0]).is_err());
    }

    #[test]
    fn schedule_is_monotone_in_range() {
        let l = ellipsoid_schedule(30);
        assert!(l[0] >= 1.0);
        assert!(l.windows(2).all(|w| w[0] < w[1]));
        assert!(*l.last().unwrap() < std::f64::consts::SQRT_2);
        assert!(make_ellipsoid(&l).is_ok());
    }

    #[test]
    fn linear_images() {
        let b = make_qball(2, 2.0).unwrap();
        let id = make_linear_image(&b, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(id.gauge(&[0.3, 0.4]), b.gauge(&[0.3, 0.4]));
        let big = make_linear_image(&b, &DMatrix::from_diagonal_element(2, 2, 2.0)).unwrap();
        assert!((big.closed_form_volume().unwrap() - 4.0 * PI).abs() < 1e-12);
        let (s, c) = (0.3f64.sin(), 0.3f64.cos());
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let r = make_linear_image(&b, &rot).unwrap();
        for x in [[0.1, 0.7], [-0.5, 0.2], [2.0, -3.0]] {
            assert!((r.gauge(&x) - b.gauge(&x)).abs() < 1e-14);
        }
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(make_linear_image(&b, &sing), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn scaled_qball_detection() {
        let c = unit_cube(3).unwrap();
        assert_eq!(c.as_scaled_qball(), Some((f64::INFINITY, 0.5)));
        let (w, q) = c.as_weighted_qball().unwrap();
        assert_eq!(q, f64::INFINITY);
        assert_eq!(w, vec![2.0; 3]);
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let r = make_linear_image(&make_qball(2, 2.0).unwrap(), &rot).unwrap();
        assert_eq!(r.as_scaled_qball(), None);
    }
}
