use super::{absorb, check_seed, exact, mc, trend, FnCheck, SuiteConfig};
use crate::bodies::make_qball;
use crate::lattice::{
    comparison_chain_check, cube_halfspace_measure, cube_tail_check, discrete_average, enumerate_ball, lemma61_check,
    lemma62_check, lemma63_check, lemma63_constants, random_sparse_input, tail_directions, ChainRegime,
    LatticeFunction,
};
use crate::report::{ExperimentReport, SeriesPoint};
use crate::rng::derive_seed;
use crate::search::{ellipsoid_trend, weak11_cube_trend};
use crate::special::unit_ball_volume;
use crate::Result;
use serde_json::json;

pub(super) fn checks() -> Vec<FnCheck> {
    vec![
        exact("lattice-count", "lattice", lemma61),
        mc("cube-tail", "lattice", cube_tail),
        mc("lattice-shell", "lattice", lemma62),
        exact("lattice-volume", "lattice", lemma63),
        mc("comparison-chain", "lattice", chain),
        exact("lattice-axioms", "lattice", axioms),
        trend("ellipsoid-trend", "lattice", ellipsoid),
        trend("weak11-trend", "lattice", weak11),
    ]
}

fn lemma61(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.lattice;
    let mut rep = ExperimentReport::new(
        "lattice-count",
        json!({"dims": c.lemma61_dims, "n_max": c.lemma61_n_max, "low_dims": c.lemma61_low_dims,
               "low_n_max": c.lemma61_low_n_max, "C": c.lemma61_c}),
        cfg.seed,
    );
    let mut cases: Vec<(usize, usize)> = Vec::new();
    for &d in &c.lemma61_dims {
        cases.extend((1..=c.lemma61_n_max).map(|n| (d, n)));
    }
    for &d in &c.lemma61_low_dims {
        cases.extend((c.lemma61_n_max + 1..=c.lemma61_low_n_max).map(|n| (d, n)));
    }
    for (d, n) in cases {
        let child = lemma61_check(d, n as f64, c.lemma61_c)?;
        let count = child.measurement("count").map_or(0.0, |m| m.value);
        rep.push_series(
            "lattice-ratio",
            SeriesPoint {
                x: n as f64,
                y: count / (unit_ball_volume(d) * (n as f64).powi(d as i32)),
                std_error: 0.0,
                label: format!("d={d}"),
            },
        );
        let mut child = child;
        child.measurements.clear();
        absorb(&mut rep, child, &format!("d{d}:N{n}:"));
    }
    let disc = enumerate_ball(2, 2.0, 2.0)?.count;
    let square = enumerate_ball(2, 2.0, f64::INFINITY)?.count;
    rep.check("count-example:B2_2", (disc as f64 - 13.0).abs(), 0.0, 0.0);
    rep.check("count-example:Binf_2", (square as f64 - 25.0).abs(), 0.0, 0.0);
    Ok(rep)
}

fn cube_tail(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.lattice;
    let seed = check_seed(cfg.seed, "cube-tail");
    let mut rep = ExperimentReport::new(
        "cube-tail",
        json!({"dims": c.tail_dims, "directions": c.tail_directions, "s": c.tail_s, "samples": c.tail_samples}),
        seed,
    );
    let z = [std::f64::consts::FRAC_1_SQRT_2; 2];
    let v = cube_halfspace_measure(&z, 0.5)?;
    let closed = (1.0 - std::f64::consts::FRAC_1_SQRT_2).powi(2) / 2.0;
    rep.measure("diagonal_2d_s0.5", v, 0.0);
    rep.check("cube-tail:diagonal-2d-closed-form", (v - closed).abs(), cfg.tolerance.exact, 0.0);
    rep.check("cube-tail:diagonal-2d-bound", v, (-7.0f64 / 32.0).exp(), 0.0);
    for &d in &c.tail_dims {
        let s = derive_seed(seed, d as u64);
        let dirs = tail_directions(d, c.tail_directions, s);
        absorb(&mut rep, cube_tail_check(d, &dirs, &c.tail_s, derive_seed(s, 1), c.tail_samples), &format!("d{d}:"));
    }
    Ok(rep)
}

fn lemma62(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.lattice;
    let seed = check_seed(cfg.seed, "lattice-shell");
    let mut rep = ExperimentReport::new(
        "lattice-shell",
        json!({"cases": c.lemma62_cases, "samples": c.lemma62_samples}),
        seed,
    );
    for (i, [d, n, t, k]) in c.lemma62_cases.iter().enumerate() {
        let child = lemma62_check(*d as usize, *n, *t, *k, derive_seed(seed, i as u64), c.lemma62_samples)?;
        absorb(&mut rep, child, &format!("d{d}:N{n}:t{t}:"));
    }
    Ok(rep)
}

fn lemma63(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.lattice;
    let mut rep = ExperimentReport::new(
        "lattice-volume",
        json!({"dims": c.lemma63_dims, "multiples": c.lemma63_multiples}),
        cfg.seed,
    );
    let k = lemma63_constants();
    rep.measure("J", k.j as f64, 0.0);
    rep.measure("C1", k.c1, 0.0);
    rep.measure("C2", k.c2, 0.0);
    rep.check("constants:tail(J)<=threshold", k.tail_at_j, k.threshold, 0.0);
    rep.check("constants:threshold<tail(J-1)", k.threshold, k.tail_at_j_minus_1, 0.0);
    let c1 = 2.0 * (1.0 + k.j as f64);
    let c2 = 2.0 * (k.j as f64).exp();
    rep.check("constants:C1", (k.c1 - c1).abs(), 0.0, 0.0);
    rep.check("constants:C2", (k.c2 - c2).abs(), cfg.tolerance.exact * c2, 0.0);
    for &d in &c.lemma63_dims {
        for &m in &c.lemma63_multiples {
            let n = m * k.c1 * d as f64;
            absorb(&mut rep, lemma63_check(d, n)?, &format!("d{d}:N{n}:"));
        }
    }
    Ok(rep)
}

fn chain(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.lattice;
    let seed = check_seed(cfg.seed, "comparison-chain");
    let mut rep = ExperimentReport::new(
        "comparison-chain",
        json!({"dims": c.chain_dims, "inputs": c.chain_inputs, "atoms": c.chain_atoms, "window": c.chain_window}),
        seed,
    );
    let c1 = lemma63_constants().c1;
    for &d in &c.chain_dims {
        let n = c1 * d as f64;
        for i in 0..c.chain_inputs {
            let s = derive_seed(seed, (d * 10_000 + i) as u64);
            let f = random_sparse_input(d, c.chain_atoms, c.chain_window, s);
            let mut child = comparison_chain_check(&f, d, n, ChainRegime::LargeN, derive_seed(s, 1))?;
            child.measurements.retain(|m| m.name.starts_with("violations") || m.name.starts_with("empirical"));
            absorb(&mut rep, child, &format!("d{d}:input{i}:"));
        }
    }
    Ok(rep)
}

fn axioms(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.lattice;
    let seed = check_seed(cfg.seed, "lattice-axioms");
    let mut rep = ExperimentReport::new("lattice-axioms", json!({"inputs": c.axiom_inputs}), seed);
    let tol = cfg.tolerance.exact;
    for d in 1..=4usize {
        let n_max = if d == 4 { 6 } else { 10 };
        for n in 1..=n_max {
            let count = enumerate_ball(d, n as f64, f64::INFINITY)?.count;
            rep.check(format!("cube-count:d{d}:N{n}"), (count as f64 - ((2 * n + 1) as f64).powi(d as i32)).abs(), 0.0, 0.0);
        }
        let half = (d as f64).sqrt() / 2.0;
        let mut prev = 0u64;
        for n in 1..=25usize {
            let nf = n as f64;
            let count = enumerate_ball(d, nf, 2.0)?.count;
            rep.check(format!("count-monotone:d{d}:N{n}"), prev as f64, count as f64, 0.0);
            prev = count;
            let v = unit_ball_volume(d);
            if nf >= half {
                rep.check(format!("count-sandwich-lower:d{d}:N{n}"), v * (nf - half).powi(d as i32), count as f64, tol * count as f64);
            }
            rep.check(format!("count-sandwich-upper:d{d}:N{n}"), count as f64, v * (nf + half).powi(d as i32), tol * count as f64);
        }
    }
    let disc = make_qball(2, 2.0)?;
    let out = discrete_average(&LatticeFunction::delta(&[0, 0]), &disc, 1.0)?;
    let dev = out.iter().map(|(_, v)| (v - 0.2).abs()).fold(0.0f64, f64::max);
    rep.check("delta-average:support", (out.support_len() as f64 - 5.0).abs(), 0.0, 0.0);
    rep.check("delta-average:values", dev, tol, 0.0);
    for i in 0..c.axiom_inputs {
        let d = 1 + i % 3;
        let s = derive_seed(seed, i as u64);
        let f = random_sparse_input(d, 5, 10, s);
        let t = [1.0, 2.5, 4.0][i % 3];
        let body = make_qball(d, [1.0, 2.0, f64::INFINITY][(i / 3) % 3])?;
        let a = discrete_average(&f, &body, t)?;
        let fmax = f.lp_norm(f64::INFINITY);
        let amin = a.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
        rep.check(format!("lattice-mass:{i}"), (a.sum() - f.sum()).abs(), tol * f.sum(), 0.0);
        rep.check(format!("lattice-positive:{i}"), -amin, tol, 0.0);
        rep.check(format!("lattice-contraction:{i}"), a.lp_norm(f64::INFINITY), fmax, tol);
    }
    Ok(rep)
}

fn ellipsoid(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.trends;
    ellipsoid_trend(&c.ellipsoid_dims, c.ellipsoid_p, &c.ellipsoid_t, c.ellipsoid_budget, check_seed(cfg.seed, "ellipsoid-trend"))
}

fn weak11(cfg: &SuiteConfig) -> Result<ExperimentReport> {
    let c = &cfg.trends;
    weak11_cube_trend(&c.weak11_dims, &c.weak11_t, c.weak11_budget, check_seed(cfg.seed, "weak11-trend"))
}
