use super::{check_seed, exact, mc, FnCheck, SuiteConfig};
use crate::bodies::{
    isotropic_constant_bounds_check, isotropic_position, q_invariant_cube, sigma_invariant, sphere_search,
    isotropic_auto, unit_cube, unit_volume_ball, volume_mc, BodyRegistry,
};
use crate::report::ExperimentReport;
use crate::rng::{derive_seed, substream};
use crate::special::qball_isotropic_constant;
use crate::Result;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

pub(super) fn checks() -> Vec<FnCheck> {
    vec![
        exact("gauge-axioms", "bodies", gauge_axioms),
        mc("volume", "bodies", volume),
        mc("isotropic-ball", "bodies", isotropic_ball),
        mc("isotropic-cube", "bodies", isotropic_cube),
        exact("q-invariant-cube", "bodies", q_invariant),
        mc("isotropic-constant-bounds", "bodies", isotropic_bounds),
        mc("sigma-invariant", "bodies", sigma),
    ]
}

fn random_point(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    (0..d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

fn gauge_axioms(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.bodies;
    let seed = check_seed(cfg.seed, "gauge-axioms");
    let mut rep = ExperimentReport::new(
        "gauge-axioms",
        json!({"bodies": c.bodies, "dims": c.axiom_dims, "points": c.axiom_points}),
        seed,
    );
    let tol = cfg.tolerance.exact;
    let reg = BodyRegistry::default();
    for (bi, spec) in c.bodies.iter().enumerate() {
        for &d in &c.axiom_dims {
            let body = reg.parse(spec, d)?;
            let mut rng = substream(derive_seed(seed, bi as u64), d as u64);
            let (mut sym, mut hom, mut tri, mut nonpos) = (0.0f64, 0.0f64, f64::NEG_INFINITY, 0usize);
            for _ in 0..c.axiom_points {
                let x = random_point(&mut rng, d);
                let y = random_point(&mut rng, d);
                let z: f64 = StandardNormal.sample(&mut rng);
                let lambda = 3.0 * z;
                let gx = body.gauge(&x);
                let gy = body.gauge(&y);
                if !(gx > 0.0) {
                    nonpos += 1;
                    continue;
                }
                let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                sym = sym.max((body.gauge(&neg) - gx).abs() / gx);
                let lx: Vec<f64> = x.iter().map(|v| lambda * v).collect();
                if lambda != 0.0 {
                    hom = hom.max((body.gauge(&lx) - lambda.abs() * gx).abs() / (lambda.abs() * gx));
                }
                let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
                tri = tri.max((body.gauge(&s) - gx - gy) / (gx + gy));
            }
            let tag = format!("{spec}:d{d}");
            rep.check(format!("gauge-positive:{tag}"), nonpos as f64, 0.0, 0.0);
            rep.check(format!("gauge-symmetric:{tag}"), sym, tol, 0.0);
            rep.check(format!("gauge-homogeneous:{tag}"), hom, tol, 0.0);
            rep.check(format!("gauge-triangle:{tag}"), tri, tol, 0.0);
        }
    }
    Ok(rep)
}

fn volume(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.bodies;
    let seed = check_seed(cfg.seed, "volume");
    let mut rep = ExperimentReport::new(
        "volume",
        json!({"bodies": c.bodies, "dims": c.volume_dims, "samples": c.volume_samples}),
        seed,
    );
    let reg = BodyRegistry::default();
    for (bi, spec) in c.bodies.iter().enumerate() {
        for &d in &c.volume_dims {
            let body = reg.parse(spec, d)?;
            let Some(exact) = body.closed_form_volume() else {
                rep.note(format!("{spec}:d{d}: no closed-form volume"));
                continue;
            };
            let expected_hits = c.volume_samples as f64 * exact / (2.0 * body.bounding_radius()).powi(d as i32);
            let tag = format!("{spec}:d{d}");
            if expected_hits < c.volume_min_expected_hits {
                rep.note(format!("{tag}: skipped, {expected_hits:.3e} expected hits"));
                continue;
            }
            let est = volume_mc(&body, derive_seed(seed, (bi * 100 + d) as u64), c.volume_samples)?;
            rep.measure(format!("volume:{tag}"), est.estimate, est.std_error);
            rep.check(format!("volume:{tag}"), (est.estimate - exact).abs(), cfg.tolerance.exact * exact, 3.0 * est.std_error);
        }
    }
    Ok(rep)
}

fn isotropic_ball(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.bodies;
    let seed = check_seed(cfg.seed, "isotropic-ball");
    let mut rep = ExperimentReport::new(
        "isotropic-ball",
        json!({"dims": c.isotropic_dims, "samples": c.isotropic_samples}),
        seed,
    );
    for &d in &c.isotropic_dims {
        let iso = isotropic_position(&unit_volume_ball(d)?, derive_seed(seed, d as u64), c.isotropic_samples)?;
        let target = qball_isotropic_constant(d, 2.0);
        rep.measure(format!("L:d{d}"), iso.l, iso.l_std_error);
        rep.check(format!("ball-L:d{d}"), (iso.l - target).abs(), 0.0, 3.0 * iso.l_std_error);
        let cert = &iso.certificate;
        rep.check(format!("covariance-residual:d{d}"), cert.covariance_residual, cert.residual_tolerance, 0.0);
        let again = isotropic_position(iso.body(), derive_seed(seed, 1000 + d as u64), c.isotropic_samples)?;
        let dev = (&again.transform - DMatrix::<f64>::identity(d, d)).amax();
        rep.measure(format!("idempotence:d{d}"), dev, 0.0);
        rep.check(format!("idempotence:d{d}"), dev, c.idempotence_tolerance, 0.0);
    }
    Ok(rep)
}

fn isotropic_cube(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.bodies;
    let seed = check_seed(cfg.seed, "isotropic-cube");
    let mut rep = ExperimentReport::new(
        "isotropic-cube",
        json!({"dims": c.isotropic_dims, "samples": c.isotropic_samples}),
        seed,
    );
    let target = 12f64.sqrt().recip();
    for &d in &c.isotropic_dims {
        let iso = isotropic_position(&unit_cube(d)?, derive_seed(seed, d as u64), c.isotropic_samples)?;
        rep.measure(format!("L:d{d}"), iso.l, iso.l_std_error);
        rep.check(format!("cube-L:d{d}"), (iso.l - target).abs(), 0.0, 3.0 * iso.l_std_error);
    }
    Ok(rep)
}

fn q_invariant(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.bodies;
    let seed = check_seed(cfg.seed, "q-invariant-cube");
    let mut rep = ExperimentReport::new(
        "q-invariant-cube",
        json!({"dims": c.q_invariant_dims, "restarts": c.q_invariant_restarts}),
        seed,
    );
    for &d in &c.q_invariant_dims {
        let (best, _) = sphere_search(
            d,
            |z| q_invariant_cube(z).unwrap_or(0.0),
            c.q_invariant_restarts,
            derive_seed(seed, d as u64),
        );
        let root = (d as f64).sqrt();
        rep.measure(format!("q_max:d{d}"), best, 0.0);
        rep.check(format!("q-attained:d{d}"), root - best, c.q_invariant_rtol * root, 0.0);
        rep.check(format!("q-bounded:d{d}"), best, root, cfg.tolerance.exact * root);
    }
    Ok(rep)
}

fn isotropic_bounds(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.bodies;
    let seed = check_seed(cfg.seed, "isotropic-constant-bounds");
    let mut rep = ExperimentReport::new(
        "isotropic-constant-bounds",
        json!({"bodies": c.bodies, "dims": c.isotropic_dims, "upper_c": c.upper_constant}),
        seed,
    );
    let reg = BodyRegistry::default();
    for (bi, spec) in c.bodies.iter().enumerate() {
        for &d in &c.isotropic_dims {
            let body = reg.parse(spec, d)?;
            let iso = isotropic_auto(&body, derive_seed(seed, (bi * 100 + d) as u64), c.isotropic_samples)?;
            super::absorb(&mut rep, isotropic_constant_bounds_check(&iso, c.upper_constant), &format!("{spec}:d{d}:"));
        }
    }
    Ok(rep)
}

fn sigma(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.bodies;
    let seed = check_seed(cfg.seed, "sigma-invariant");
    let mut rep = ExperimentReport::new(
        "sigma-invariant",
        json!({"bodies": c.bodies, "dims": c.sigma_dims, "directions": c.sigma_directions}),
        seed,
    );
    let reg = BodyRegistry::default();
    for (bi, spec) in c.bodies.iter().enumerate() {
        for &d in &c.sigma_dims {
            let body = reg.parse(spec, d)?;
            let s = derive_seed(seed, (bi * 100 + d) as u64);
            let iso = isotropic_auto(&body, s, c.isotropic_samples)?;
            let est = sigma_invariant(&iso, c.sigma_directions, derive_seed(s, 1), c.sigma_samples)?;
            let se = est.max_phi0_std_error / (est.max_phi0 * est.max_phi0);
            let tag = format!("{spec}:d{d}");
            rep.measure(format!("sigma:{tag}"), est.sigma, se);
            rep.check(format!("sigma-lower:{tag}"), iso.l / 8.0, est.sigma, 3.0 * se);
            rep.check(format!("sigma-upper:{tag}"), est.sigma, 8.0 * iso.l, 3.0 * se);
        }
    }
    Ok(rep)
}
