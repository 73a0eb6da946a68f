use crate::bodies::Body;
use crate::lattice::{Stencil, DEFAULT_CAP};
use crate::report::{ExperimentReport, SeriesPoint};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// `𝔪_N(ξ) = |G_N ∩ Z^d|^{−1} Σ_{y ∈ G_N ∩ Z^d} e^{2πi⟨ξ,y⟩}` for a fixed `N`.
#[derive(Clone, Debug)]
pub struct DiscreteMultiplier {
    pub n: f64,
    pub points: Vec<Vec<i64>>,
}

impl DiscreteMultiplier {
    pub fn new(body: &Body, n: f64, cap: u64) -> Result<Self> {
        let s = Stencil::for_body_with_cap(body, n, cap)?;
        Ok(DiscreteMultiplier { n, points: s.points })
    }

    pub fn count(&self) -> usize {
        self.points.len()
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for y in &self.points {
            let p: f64 = y.iter().zip(xi).map(|(a, b)| *a as f64 * b).sum();
            let (s, c) = (2.0 * PI * p).sin_cos();
            acc += Complex64::new(c, s);
        }
        acc / self.points.len() as f64
    }
}

pub fn discrete_multiplier(body: &Body, n: f64, xi: &[f64]) -> Result<Complex64> {
    discrete_multiplier_with_cap(body, n, xi, DEFAULT_CAP)
}

pub fn discrete_multiplier_with_cap(body: &Body, n: f64, xi: &[f64], cap: u64) -> Result<Complex64> {
    if xi.len() != body.dim() {
        return Err(Error::invalid(format!("xi has length {}, expected {}", xi.len(), body.dim())));
    }
    Ok(DiscreteMultiplier::new(body, n, cap)?.eval(xi))
}

/// Normalized Dirichlet kernel `(2⌊N⌋+1)^{−1} Σ_{|k|≤N} e^{2πikξ}`.
pub fn dirichlet_kernel(n: f64, xi: f64) -> f64 {
    let m = n.floor() as i64;
    let mut s = 1.0;
    for k in 1..=m {
        s += 2.0 * (2.0 * PI * k as f64 * xi).cos();
    }
    s / (2 * m + 1) as f64
}

/// `Π_j D_N(ξ_j)`, the multiplier of the discrete cube average.
pub fn dirichlet_product(n: f64, xi: &[f64]) -> f64 {
    xi.iter().map(|x| dirichlet_kernel(n, *x)).product()
}

/// `κ_q(d, N) = N d^{−1/q}`.
pub fn kappa(q: f64, d: usize, n: f64) -> f64 {
    if q.is_infinite() {
        n
    } else {
        n * (d as f64).powf(-1.0 / q)
    }
}

/// Coordinates reduced to `[−1/2, 1/2)`.
pub fn to_torus(xi: &[f64]) -> Vec<f64> {
    xi.iter().map(|x| x - (x + 0.5).floor()).collect()
}

/// Empirical best constants in the three conjectured discrete bounds
/// `|𝔪_N − 1| ≤ C κ|ξ|`, `|𝔪_N| ≤ C (κ|ξ|)^{−1}`, `|𝔪_{N+1} − 𝔪_N| ≤ C/N`
/// over `N ∈ n_range` and frequencies reduced to the torus. Never gating.
pub fn explore_conjectural_bounds(
    body: &Body,
    n_range: &[f64],
    xi_samples: &[Vec<f64>],
    cap: u64,
) -> Result<ExperimentReport> {
    let d = body.dim();
    let (q, scale) = body
        .as_scaled_qball()
        .ok_or_else(|| Error::Unsupported("conjectural bounds are defined for q-balls".into()))?;
    if scale != 1.0 {
        return Err(Error::Unsupported("conjectural bounds need the unit q-ball".into()));
    }
    if n_range.is_empty() {
        return Err(Error::invalid("N range must be nonempty"));
    }
    let mut rep = ExperimentReport::new(
        "explore_conjectural_bounds",
        json!({"body": body.describe(), "dim": d, "N": n_range, "xi_count": xi_samples.len()}),
        0,
    )
    .non_gating();
    let xis: Vec<Vec<f64>> = xi_samples.iter().map(|x| to_torus(x)).collect();
    let mut needed: Vec<f64> = n_range.iter().flat_map(|n| [*n, n + 1.0]).collect();
    needed.sort_by(f64::total_cmp);
    needed.dedup();
    let mut values: BTreeMap<u64, Vec<Complex64>> = BTreeMap::new();
    for n in &needed {
        let dm = DiscreteMultiplier::new(body, *n, cap)?;
        values.insert(n.to_bits(), xis.par_iter().map(|x| dm.eval(x)).collect());
    }
    let zero_rows = xis.iter().filter(|x| x.iter().all(|v| *v == 0.0)).count();
    let mut best = [0.0f64; 3];
    let label = body.describe();
    for n in n_range {
        let k = kappa(q, d, *n);
        let cur = &values[&n.to_bits()];
        let next = &values[&(n + 1.0).to_bits()];
        let mut c = [0.0f64; 3];
        for (i, xi) in xis.iter().enumerate() {
            let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > 0.0 {
                c[0] = c[0].max((cur[i] - 1.0).norm() / (k * r));
                c[1] = c[1].max(cur[i].norm() * k * r);
            } else {
                debug_assert!((cur[i] - 1.0).norm() < 1e-12);
            }
            c[2] = c[2].max((next[i] - cur[i]).norm() * n);
        }
        for (j, name) in ["conjectural-c1", "conjectural-c2", "conjectural-c3"].iter().enumerate() {
            best[j] = best[j].max(c[j]);
            rep.push_series(
                name,
                SeriesPoint {
                    x: *n,
                    y: c[j],
                    std_error: 0.0,
                    label: label.clone(),
                },
            );
        }
    }
    rep.measure("empirical_constant:c1", best[0], 0.0);
    rep.measure("empirical_constant:c2", best[1], 0.0);
    rep.measure("empirical_constant:c3", best[2], 0.0);
    rep.measure("zero_rows", zero_rows as f64, 0.0);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{make_ellipsoid, make_qball};
    use crate::multipliers::random_xi;
    use crate::rng::substream;
    use rand::Rng;

    #[test]
    fn small_examples() {
        let c1 = make_qball(1, f64::INFINITY).unwrap();
        let m = discrete_multiplier(&c1, 1.0, &[0.5]).unwrap();
        assert!((m.re + 1.0 / 3.0).abs() < 1e-15 && m.im.abs() < 1e-15);
        let b2 = make_qball(2, 2.0).unwrap();
        let m = discrete_multiplier(&b2, 1.0, &[0.5, 0.0]).unwrap();
        assert!((m.re - 0.2).abs() < 1e-15);
        assert_eq!(discrete_multiplier(&b2, 3.3, &[0.0, 0.0]).unwrap(), Complex64::new(1.0, 0.0));
        assert!(matches!(
            discrete_multiplier_with_cap(&b2, 100.0, &[0.1, 0.1], 1000),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn dirichlet_oracle() {
        let mut rng = substream(3, 0);
        for d in 1..=3 {
            let cube = make_qball(d, f64::INFINITY).unwrap();
            for n in [1.0, 2.5, 7.0, 20.0] {
                let dm = DiscreteMultiplier::new(&cube, n, DEFAULT_CAP).unwrap();
                for _ in 0..10 {
                    let xi: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
                    let a = dm.eval(&xi);
                    let b = dirichlet_product(n, &xi);
                    assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12, "d={d} n={n}");
                }
            }
        }
    }

    #[test]
    fn torus_reduction() {
        assert_eq!(to_torus(&[0.5, -0.5, 1.25, 0.0]), vec![-0.5, -0.5, 0.25, 0.0]);
    }

    #[test]
    fn exploration_runs() {
        let cube = make_qball(2, f64::INFINITY).unwrap();
        let mut xis = random_xi(2, 30, 0.01, 0.7, 1);
        xis.push(vec![0.0, 0.0]);
        let ns: Vec<f64> = (1..=10).map(|n| n as f64).collect();
        let rep = explore_conjectural_bounds(&cube, &ns, &xis, DEFAULT_CAP).unwrap();
        assert!(!rep.gating);
        for c in ["c1", "c2", "c3"] {
            let v = rep.measurement(&format!("empirical_constant:{c}")).unwrap().value;
            assert!(v.is_finite() && v > 0.0);
        }
        assert_eq!(rep.measurement("zero_rows").unwrap().value, 1.0);
        assert_eq!(rep.series["conjectural-c2"].len(), 10);
        assert!(explore_conjectural_bounds(&make_ellipsoid(&[1.0, 2.0]).unwrap(), &ns, &xis, 100).is_err());
    }
}
