use super::{absorb, check_seed, exact, mc, trend, FnCheck, SuiteConfig};
use crate::bodies::{isotropic_auto, make_qball, BodyRegistry, IsotropicBody};
use crate::lattice::tail_directions;
use crate::multipliers::{
    check_multiplier_bounds, check_section_bounds, dirichlet_product, dyadic_symbol_sum,
    explore_conjectural_bounds, random_xi, section_profile_auto, to_torus, DiscreteMultiplier,
    MultiplierEstimator,
};
use crate::report::{ExperimentReport, SeriesPoint};
use crate::rng::{derive_seed, substream};
use crate::Result;
use rand::Rng;
use serde_json::json;
use std::f64::consts::PI;

pub(super) fn checks() -> Vec<FnCheck> {
    vec![
        mc("multiplier-oracle", "multipliers", oracle),
        mc("multiplier-bounds", "multipliers", bounds),
        mc("section-bounds", "multipliers", sections),
        exact("symbol-sum", "multipliers", symbol_sum),
        exact("dirichlet-oracle", "multipliers", dirichlet),
        trend("conjectural-constants", "multipliers", conjectural),
    ]
}

fn sinc_product(xi: &[f64]) -> f64 {
    xi.iter()
        .map(|x| if *x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) })
        .product()
}

fn oracle(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.multipliers;
    let seed = check_seed(cfg.seed, "multiplier-oracle");
    let mut rep = ExperimentReport::new(
        "multiplier-oracle",
        json!({"dims": c.oracle_dims, "xi_per_dim": c.oracle_xi_per_dim, "samples": c.oracle_samples}),
        seed,
    );
    for &d in &c.oracle_dims {
        let iso = IsotropicBody::qball(d, f64::INFINITY)?;
        let est = MultiplierEstimator::new(&iso, derive_seed(seed, d as u64), c.oracle_samples)?;
        let xis = random_xi(d, c.oracle_xi_per_dim, c.oracle_xi_range[0], c.oracle_xi_range[1], derive_seed(seed, 100 + d as u64));
        let mut worst_z = 0.0f64;
        for (i, xi) in xis.iter().enumerate() {
            let s = est.estimate(xi);
            let err = (s.m - sinc_product(xi)).norm();
            let se = s.std_error_re.hypot(s.std_error_im);
            if se > 0.0 {
                worst_z = worst_z.max(err / se);
            }
            rep.check(format!("oracle:d{d}:{i}"), err, 0.0, 3.0 * se);
        }
        rep.measure(format!("max_z:d{d}"), worst_z, 0.0);
    }
    Ok(rep)
}

fn bounds(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.multipliers;
    let seed = check_seed(cfg.seed, "multiplier-bounds");
    let mut rep = ExperimentReport::new(
        "multiplier-bounds",
        json!({"bodies": c.bound_bodies, "dims": c.bound_dims, "xi": c.bound_xi, "samples": c.bound_samples}),
        seed,
    );
    let reg = BodyRegistry::default();
    for (bi, spec) in c.bound_bodies.iter().enumerate() {
        for &d in &c.bound_dims {
            let s = derive_seed(seed, (bi * 100 + d) as u64);
            let iso = isotropic_auto(&reg.parse(spec, d)?, s, cfg.bodies.isotropic_samples)?;
            let xis = random_xi(d, c.bound_xi, c.bound_xi_range[0], c.bound_xi_range[1], derive_seed(s, 1));
            let child = check_multiplier_bounds(&iso, &xis, derive_seed(s, 2), c.bound_samples)?;
            absorb(&mut rep, child, &format!("{spec}:d{d}:"));
        }
    }
    Ok(rep)
}

fn sections(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.multipliers;
    let seed = check_seed(cfg.seed, "section-bounds");
    let mut rep = ExperimentReport::new(
        "section-bounds",
        json!({"bodies": c.section_bodies, "dims": c.section_dims, "directions": c.section_directions,
               "points": c.section_points, "samples": c.section_samples}),
        seed,
    );
    let reg = BodyRegistry::default();
    for (bi, spec) in c.section_bodies.iter().enumerate() {
        for &d in &c.section_dims {
            let s = derive_seed(seed, (bi * 100 + d) as u64);
            let iso = isotropic_auto(&reg.parse(spec, d)?, s, cfg.bodies.isotropic_samples)?;
            let dirs = tail_directions(d, c.section_directions.saturating_sub(2), derive_seed(s, 1));
            for (k, zeta) in dirs.iter().take(c.section_directions.max(1)).enumerate() {
                let profile = section_profile_auto(&iso, zeta, c.section_points, derive_seed(s, 10 + k as u64), c.section_samples)?;
                let child = check_section_bounds(&profile, iso.l, iso.l_std_error);
                absorb(&mut rep, child, &format!("{spec}:d{d}:dir{k}:"));
            }
        }
    }
    Ok(rep)
}

fn symbol_sum(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.multipliers;
    let seed = check_seed(cfg.seed, "symbol-sum");
    let mut rep = ExperimentReport::new(
        "symbol-sum",
        json!({"points": c.symbol_points, "log2_range": c.symbol_log2_range}),
        seed,
    );
    let [lo, hi] = c.symbol_log2_range;
    let n = c.symbol_points.max(2);
    let stride = (n / 200).max(1);
    let (mut sup, mut trunc) = (0.0f64, 0.0f64);
    for k in 0..n {
        let a = 2f64.powf(lo + (hi - lo) * k as f64 / (n - 1) as f64);
        let s = dyadic_symbol_sum(a)?;
        sup = sup.max(s.value);
        trunc = trunc.max(s.truncation_bound);
        if k % stride == 0 {
            rep.push_series("symbol-sum", SeriesPoint { x: a, y: s.value, std_error: 0.0, label: String::new() });
        }
    }
    let mut rng = substream(seed, 0);
    let mut dilation = 0.0f64;
    for _ in 0..1000 {
        let a = 2f64.powf(rng.random_range(lo..hi));
        dilation = dilation.max((dyadic_symbol_sum(a)?.value - dyadic_symbol_sum(2.0 * a)?.value).abs());
    }
    rep.measure("sup", sup, 0.0);
    rep.check("symbol-sup:|sup-3|", (sup - 3.0).abs(), c.symbol_tolerance, 0.0);
    rep.check("symbol-sup:sup<=3", sup, 3.0, cfg.tolerance.exact);
    rep.check("symbol-truncation", trunc, cfg.tolerance.exact, 0.0);
    rep.check("symbol-dilation", dilation, cfg.tolerance.exact, 0.0);
    Ok(rep)
}

fn dirichlet(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.multipliers;
    let seed = check_seed(cfg.seed, "dirichlet-oracle");
    let mut rep = ExperimentReport::new(
        "dirichlet-oracle",
        json!({"dims": c.dirichlet_dims, "n_max": c.dirichlet_n_max, "xi": c.dirichlet_xi}),
        seed,
    );
    for &d in &c.dirichlet_dims {
        let cube = make_qball(d, f64::INFINITY)?;
        let mut rng = substream(seed, d as u64);
        let xis: Vec<Vec<f64>> = (0..c.dirichlet_xi)
            .map(|_| (0..d).map(|_| rng.random_range(-0.5..0.5)).collect())
            .collect();
        for n in 1..=c.dirichlet_n_max {
            let m = DiscreteMultiplier::new(&cube, n as f64, cfg.lattice.cap)?;
            let worst = xis
                .iter()
                .map(|xi| (m.eval(xi) - dirichlet_product(n as f64, xi)).norm())
                .fold(0.0f64, f64::max);
            rep.check(format!("dirichlet:d{d}:N{n}"), worst, c.dirichlet_tolerance, 0.0);
        }
    }
    Ok(rep)
}

fn conjectural(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.trends;
    let seed = check_seed(cfg.seed, "conjectural-constants");
    let mut rep = ExperimentReport::new(
        "conjectural-constants",
        json!({"bodies": c.conjectural_bodies, "dims": c.conjectural_dims, "n_max": c.conjectural_n_max}),
        seed,
    );
    let reg = BodyRegistry::default();
    let ns: Vec<f64> = (1..=c.conjectural_n_max).map(|n| n as f64).collect();
    for (bi, spec) in c.conjectural_bodies.iter().enumerate() {
        for &d in &c.conjectural_dims {
            let body = reg.parse(spec, d)?;
            let xis: Vec<Vec<f64>> = random_xi(d, c.conjectural_xi, 0.01, 0.5, derive_seed(seed, (bi * 100 + d) as u64))
                .iter()
                .map(|x| to_torus(x))
                .collect();
            let mut child = explore_conjectural_bounds(&body, &ns, &xis, cfg.lattice.cap)?;
            for points in child.series.values_mut() {
                for p in points {
                    p.label = format!("{spec} d={d}");
                }
            }
            absorb(&mut rep, child, &format!("{spec}:d{d}:"));
        }
    }
    Ok(rep.non_gating())
}
