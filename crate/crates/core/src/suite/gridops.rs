use super::{absorb, check_seed, exact, FnCheck, SuiteConfig};
use crate::bodies::{make_qball, unit_volume_ball, Body};
use crate::gridops::{
    average, decomposition_check, lp_projection, maximal, poisson, poisson_domination_check, rademacher_menshov,
    spherical_domination_check, Boundary, DyadicSequence, GridFunction,
};
use crate::report::ExperimentReport;
use crate::rng::{derive_seed, substream};
use crate::special::qball_isotropic_constant;
use crate::Result;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

pub(super) fn checks() -> Vec<FnCheck> {
    vec![
        exact("rademacher-menshov", "gridops", rm),
        exact("grid-operator-axioms", "gridops", axioms),
        exact("poisson-domination", "gridops", poisson_domination),
        exact("spherical-domination", "gridops", spherical_domination),
        exact("block-decomposition", "gridops", decomposition),
    ]
}

fn rm(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.gridops;
    let seed = check_seed(cfg.seed, "rademacher-menshov");
    let mut rep = ExperimentReport::new(
        "rademacher-menshov",
        json!({"levels": c.rm_levels, "trials": c.rm_trials}),
        seed,
    );
    for &level in &c.rm_levels {
        let mut rng = substream(seed, level as u64);
        let len = (1usize << level) + 1;
        let (mut worst, mut worst_ratio, mut violations) = (None::<(f64, f64)>, 0.0f64, 0usize);
        for _ in 0..c.rm_trials {
            let values: Vec<Complex64> = (0..len)
                .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            let b = rademacher_menshov(&DyadicSequence::new(level, values)?);
            let tol = cfg.tolerance.exact * (1.0 + b.rhs);
            if b.lhs > b.rhs + tol {
                violations += 1;
            }
            worst_ratio = worst_ratio.max(b.lhs / b.rhs);
            if worst.is_none_or(|(l, r)| b.rhs - b.lhs < r - l) {
                worst = Some((b.lhs, b.rhs));
            }
        }
        rep.measure(format!("max_ratio:L{level}"), worst_ratio, 0.0);
        rep.measure(format!("violations:L{level}"), violations as f64, 0.0);
        if let Some((l, r)) = worst {
            rep.check(format!("rm:L{level}"), l, r, cfg.tolerance.exact * (1.0 + r));
        }
    }
    Ok(rep)
}

fn random_nonnegative(d: usize, b: f64, h: f64, seed: u64) -> Result<GridFunction> {
    let probe = GridFunction::constant(d, b, h, Boundary::Periodic, 0.0)?;
    let mut rng = substream(seed, 0);
    let values = (0..probe.len()).map(|_| rng.random::<f64>()).collect();
    probe.with_values(values)
}

fn normalized_l(cfg: &SuiteConfig, d: usize) -> f64 {
    cfg.gridops.poisson_l.unwrap_or_else(|| qball_isotropic_constant(d, 2.0))
}

fn axioms(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.gridops;
    let seed = check_seed(cfg.seed, "grid-operator-axioms");
    let mut rep = ExperimentReport::new("grid-operator-axioms", json!({"spacing": c.axiom_spacing}), seed);
    let tol = cfg.tolerance.exact;
    let b = 4.0;
    for d in [1usize, 2] {
        let h = c.axiom_spacing[d - 1];
        let f = random_nonnegative(d, b, h, derive_seed(seed, d as u64))?;
        let one = GridFunction::constant(d, b, h, Boundary::Periodic, 1.0)?;
        let mass: f64 = f.values.iter().sum();
        let fmax = f.max_abs();
        let bodies: Vec<(&str, Body)> = vec![("ball", unit_volume_ball(d)?), ("cube", make_qball(d, f64::INFINITY)?)];
        let ts: Vec<f64> = [2.5, 10.0, 40.0].iter().map(|k| k * h).filter(|t| 4.0 * t <= b).collect();
        for (name, body) in &bodies {
            for &t in &ts {
                let tag = format!("{name}:d{d}:t{t}");
                let a1 = average(&one, body, t)?;
                let af = average(&f, body, t)?;
                let amin = af.values.iter().cloned().fold(f64::INFINITY, f64::min);
                let amax = af.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let amass: f64 = af.values.iter().sum();
                rep.check(format!("average-constant:{tag}"), a1.max_abs_diff(&one), tol, 0.0);
                rep.check(format!("average-positive:{tag}"), -amin, tol, 0.0);
                rep.check(format!("average-mass:{tag}"), (amass - mass).abs(), tol * mass, 0.0);
                rep.check(format!("average-contraction:{tag}"), amax, fmax, tol);
            }
            let m = maximal(&f, body, &ts)?;
            let mut worst = f64::NEG_INFINITY;
            for &t in &ts {
                let af = average(&f, body, t)?;
                worst = worst.max(af.values.iter().zip(&m.values).map(|(a, mv)| a - mv).fold(f64::NEG_INFINITY, f64::max));
            }
            rep.check(format!("maximal-dominates:{name}:d{d}"), worst, 0.0, tol);
        }

        let l = normalized_l(cfg, d);
        let (s, t) = (0.05, 0.2);
        let ps = poisson(&f, s, l)?;
        let pst = poisson(&ps, t, l)?;
        let direct = poisson(&f, s + t, l)?;
        rep.check(format!("poisson-semigroup:d{d}"), pst.max_abs_diff(&direct), c.semigroup_tolerance, 0.0);
        rep.check(format!("poisson-constant:d{d}"), poisson(&one, t, l)?.max_abs_diff(&one), tol, 0.0);
        let pmass: f64 = ps.values.iter().sum();
        rep.check(format!("poisson-mass:d{d}"), (pmass - mass).abs(), tol * mass, 0.0);
        let n = 4;
        let mut sum = GridFunction::constant(d, b, h, Boundary::Periodic, 0.0)?;
        for k in -n..=n {
            sum = sum.zip_with(&lp_projection(&f, k, l)?, |a, v| a + v)?;
        }
        let lo = poisson(&f, 2f64.powi(-n - 1), l)?;
        let hi = poisson(&f, 2f64.powi(n), l)?;
        let tele = lo.zip_with(&hi, |a, v| a - v)?;
        rep.check(format!("lp-telescoping:d{d}"), sum.max_abs_diff(&tele), c.telescoping_tolerance, 0.0);
    }
    Ok(rep)
}

fn bump(d: usize, b: f64, h: f64, boundary: Boundary) -> Result<GridFunction> {
    GridFunction::from_fn(d, b, h, boundary, |x| (-4.0 * x.iter().map(|v| v * v).sum::<f64>()).exp())
}

fn spike(d: usize, b: f64, h: f64, boundary: Boundary) -> Result<GridFunction> {
    GridFunction::from_fn(d, b, h, boundary, |x| (-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * h * h)).exp())
}

fn two_bumps(d: usize, b: f64, h: f64, boundary: Boundary) -> Result<GridFunction> {
    GridFunction::from_fn(d, b, h, boundary, |x| {
        let r1: f64 = x.iter().enumerate().map(|(k, v)| (v - if k == 0 { 1.0 } else { 0.0 }).powi(2)).sum();
        let r2: f64 = x.iter().enumerate().map(|(k, v)| (v + if k == 0 { 0.7 } else { 0.3 }).powi(2)).sum();
        (-8.0 * r1).exp() + 0.5 * (-3.0 * r2).exp()
    })
}

type Builder = fn(usize, f64, f64, Boundary) -> Result<GridFunction>;

const INPUTS: [(&str, Builder); 3] = [("bump", bump), ("spike", spike), ("two-bumps", two_bumps)];

fn poisson_domination(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.gridops;
    let seed = check_seed(cfg.seed, "poisson-domination");
    let mut rep = ExperimentReport::new(
        "poisson-domination",
        json!({"spacing": c.domination_spacing, "subdivisions": c.domination_subdivisions}),
        seed,
    );
    for d in [1usize, 2] {
        let h = c.domination_spacing[d - 1];
        let b = if d == 1 { 8.0 } else { 4.0 };
        let ts: Vec<f64> = (0..10).map(|k| 0.05 * 1.6f64.powi(k)).collect();
        for (name, build) in INPUTS {
            let f = build(d, b, h, Boundary::Periodic)?;
            let child = poisson_domination_check(&f, &ts, normalized_l(cfg, d), c.domination_subdivisions)?;
            absorb(&mut rep, child, &format!("{name}:d{d}:"));
        }
    }
    Ok(rep)
}

fn spherical_domination(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.gridops;
    let seed = check_seed(cfg.seed, "spherical-domination");
    let mut rep = ExperimentReport::new(
        "spherical-domination",
        json!({"spacing": c.domination_spacing, "directions": c.spherical_directions}),
        seed,
    );
    for d in [1usize, 2] {
        let h = c.domination_spacing[d - 1] / 2.0;
        let b = if d == 1 { 6.0 } else { 3.0 };
        for (i, (name, build)) in INPUTS.iter().enumerate() {
            let f = build(d, b, h, Boundary::Zero)?;
            let child = spherical_domination_check(&f, &[0.25, 0.5, 1.0], c.spherical_directions, derive_seed(seed, (d * 10 + i) as u64))?;
            absorb(&mut rep, child, &format!("{name}:d{d}:"));
        }
    }
    Ok(rep)
}

fn decomposition(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.gridops;
    let seed = check_seed(cfg.seed, "block-decomposition");
    let mut rep = ExperimentReport::new(
        "block-decomposition",
        json!({"spacing": c.domination_spacing, "subdivisions": c.decomposition_subdivisions}),
        seed,
    );
    for d in [1usize, 2] {
        let h = c.domination_spacing[d - 1];
        let b = if d == 1 { 10.0 } else { 4.0 };
        let bodies: Vec<(&str, Body)> = vec![("ball", unit_volume_ball(d)?), ("cube", make_qball(d, f64::INFINITY)?)];
        for (bname, body) in &bodies {
            for (name, build) in INPUTS {
                let f = build(d, b, h, Boundary::Zero)?;
                let child = decomposition_check(&f, body, -2, 0, c.decomposition_subdivisions)?;
                absorb(&mut rep, child, &format!("{bname}:{name}:d{d}:"));
            }
        }
    }
    Ok(rep)
}
