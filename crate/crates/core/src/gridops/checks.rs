use super::average::{average, averages, spherical_average};
use super::dyadic::rm_real;
use super::grid::{Boundary, GridFunction};
use super::poisson::{poisson_many, poisson_tail_mass};
use crate::bodies::{make_qball, Body};
use crate::report::{ExperimentReport, SeriesPoint};
use crate::{Error, Result};
use serde_json::json;

/// Multiple of `h · Lip(f)` allowed for cell-centre stencils versus the
/// continuum average; calibrated on indicator and linear inputs.
pub const DISCRETIZATION_C: f64 = 2.0;

/// Tracks the smallest margin of a pointwise inequality.
struct Worst {
    id: &'static str,
    lhs: f64,
    rhs: f64,
    slack: f64,
    violations: usize,
    seen: bool,
}

impl Worst {
    fn new(id: &'static str) -> Self {
        Worst {
            id,
            lhs: 0.0,
            rhs: 0.0,
            slack: 0.0,
            violations: 0,
            seen: false,
        }
    }

    fn push(&mut self, lhs: f64, rhs: f64, slack: f64) {
        if lhs > rhs + slack {
            self.violations += 1;
        }
        if !self.seen || rhs + slack - lhs < self.rhs + self.slack - self.lhs {
            (self.lhs, self.rhs, self.slack, self.seen) = (lhs, rhs, slack, true);
        }
    }

    fn record(&self, rep: &mut ExperimentReport) {
        rep.check(self.id, self.lhs, self.rhs, self.slack);
        rep.measure(format!("violations:{}", self.id), self.violations as f64, 0.0);
    }
}

fn require_nonnegative(f: &GridFunction) -> Result<()> {
    match f.values.iter().position(|v| *v < 0.0) {
        Some(i) => Err(Error::invalid(format!("input must be nonnegative (value {} at node {i})", f.values[i]))),
        None => Ok(()),
    }
}

fn grid_inputs(f: &GridFunction) -> serde_json::Value {
    json!({"dim": f.dim, "box": f.box_half_width, "spacing": f.spacing, "boundary": f.boundary})
}

/// Ball radii `2h · 2^{k/s}` up to `B/4`.
fn radius_grid(f: &GridFunction, subdivisions: usize) -> Vec<f64> {
    let r_min = 2.0 * f.spacing;
    let r_max = f.box_half_width / 4.0;
    let ratio = 2f64.powf(1.0 / subdivisions.max(1) as f64);
    let mut out = Vec::new();
    let mut r = r_min;
    while r < r_max * (1.0 - 1e-12) {
        out.push(r);
        r *= ratio;
    }
    out.push(r_max);
    out
}

/// `max_t P_t f ≤ M_*^{B^2} f` pointwise. The right side is the maximum of
/// `f` and the ball averages over radii `2h·2^{k/s} ≤ B/4`. Slack:
/// `‖f‖_∞ · tail(B/4) + (2^{d/s} − 1)·rhs + (C + 2) h Lip(f)`, covering kernel
/// mass beyond the largest ball, the radius mesh, the stencil and radii
/// below `2h`.
pub fn poisson_domination_check(f: &GridFunction, t_set: &[f64], l: f64, subdivisions: usize) -> Result<ExperimentReport> {
    if f.boundary != Boundary::Periodic {
        return Err(Error::BoundaryMode { required: "periodic" });
    }
    require_nonnegative(f)?;
    if t_set.is_empty() {
        return Err(Error::invalid("t set must be nonempty"));
    }
    let d = f.dim;
    let mut inputs = grid_inputs(f);
    inputs["t_set"] = json!(t_set);
    inputs["L"] = json!(l);
    inputs["subdivisions"] = json!(subdivisions);
    let mut rep = ExperimentReport::new("poisson_domination_check", inputs, 0);
    let ball = make_qball(d, 2.0)?;
    let radii = radius_grid(f, subdivisions);
    let r_max = *radii.last().unwrap();
    let mut rhs = f.values.clone();
    for a in averages(f, &ball, &radii)? {
        rhs.iter_mut().zip(&a.values).for_each(|(r, v)| *r = r.max(*v));
    }
    let mut lhs = vec![f64::NEG_INFINITY; f.len()];
    for p in poisson_many(f, t_set, l)? {
        lhs.iter_mut().zip(&p.values).for_each(|(a, v)| *a = a.max(*v));
    }
    let tail = t_set.iter().map(|t| poisson_tail_mass(d, *t, l, r_max)).fold(0.0, f64::max);
    let tail_slack = f.max_abs() * tail;
    let mesh = 2f64.powf(d as f64 / subdivisions.max(1) as f64) - 1.0;
    let lip_slack = (DISCRETIZATION_C + 2.0) * f.spacing * f.lipschitz_estimate();
    let mut worst = Worst::new("poisson-domination");
    for i in 0..f.len() {
        worst.push(lhs[i], rhs[i], tail_slack + mesh * rhs[i] + lip_slack);
    }
    worst.record(&mut rep);
    rep.measure("slack:tail", tail_slack, 0.0);
    rep.measure("slack:radius_mesh_factor", mesh, 0.0);
    rep.measure("slack:lipschitz", lip_slack, 0.0);
    rep.measure("max_radius", r_max, 0.0);
    rep.note("slack = |f|_inf * Poisson tail beyond the largest radius + (2^{d/s}-1) * rhs + (C+2) h Lip(f)");
    Ok(rep)
}

/// `|M_t^{B^2} f| ≤ sup_{0 ≤ r ≤ t} |A_r f|` pointwise for `t ∈ t_set`, with
/// spheres on the radius mesh `0, h, 2h, …`. Slack: `C h Lip(f)` for the
/// stencil and interpolation, `h Lip(f) / 2` for the radius mesh, and three
/// standard errors of the spherical estimate at its maximizing radius.
pub fn spherical_domination_check(f: &GridFunction, t_set: &[f64], n_dirs: usize, seed: u64) -> Result<ExperimentReport> {
    if t_set.is_empty() {
        return Err(Error::invalid("t set must be nonempty"));
    }
    let mut inputs = grid_inputs(f);
    inputs["t_set"] = json!(t_set);
    inputs["n_dirs"] = json!(n_dirs);
    let mut rep = ExperimentReport::new("spherical_domination_check", inputs, seed);
    let ball = make_qball(f.dim, 2.0)?;
    let h = f.spacing;
    let t_max = t_set.iter().cloned().fold(0.0, f64::max);
    let steps = (t_max / h).ceil() as usize;
    // Running sup over r ≤ current radius, with the standard error at the argmax.
    let mut sup = f.values.iter().map(|v| v.abs()).collect::<Vec<_>>();
    let mut sup_se = vec![0.0; f.len()];
    let mut sorted: Vec<f64> = t_set.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lip = f.lipschitz_estimate();
    let slack_base = DISCRETIZATION_C * h * lip + 0.5 * h * lip;
    let mut worst = Worst::new("spherical-domination");
    let mut next = 0;
    let mut flagged = 0usize;
    for k in 1..=steps + 1 {
        let r = k as f64 * h;
        while next < sorted.len() && sorted[next] < r {
            let m = average(f, &ball, sorted[next])?;
            for i in 0..f.len() {
                worst.push(m.values[i].abs(), sup[i], slack_base + 3.0 * sup_se[i]);
            }
            next += 1;
        }
        if next == sorted.len() {
            break;
        }
        let s = spherical_average(f, r, n_dirs, crate::rng::derive_seed(seed, k as u64))?;
        flagged += s.flagged.iter().filter(|b| **b).count();
        for i in 0..f.len() {
            let v = s.values.values[i].abs();
            if v > sup[i] {
                sup[i] = v;
                sup_se[i] = s.std_error[i];
            }
        }
    }
    worst.record(&mut rep);
    rep.measure("slack:base", slack_base, 0.0);
    rep.measure("flagged_nodes", flagged as f64, 0.0);
    Ok(rep)
}

/// Pointwise check of the block decomposition
/// `sup_t |M_t f| ≤ sup_n |M_{2^n} f| + (Σ_n sup_{t∈[2^n,2^{n+1}]} |M_t f − M_{2^n} f|²)^{1/2}`
/// on the mesh `2^n(1 + j/s)`, `s = 2^L`, together with the
/// Rademacher–Menshov bound for each block. Both are exact on the mesh;
/// slack is rounding only.
pub fn decomposition_check(f: &GridFunction, body: &Body, nmin: i32, nmax: i32, subdivisions: usize) -> Result<ExperimentReport> {
    if !subdivisions.is_power_of_two() {
        return Err(Error::invalid(format!("subdivisions {subdivisions} must be a power of two")));
    }
    if nmin > nmax {
        return Err(Error::invalid("empty n range"));
    }
    let level = subdivisions.trailing_zeros();
    let s = subdivisions;
    let mut inputs = grid_inputs(f);
    inputs["body"] = json!(body.describe());
    inputs["n_range"] = json!([nmin, nmax]);
    inputs["subdivisions"] = json!(s);
    let mut rep = ExperimentReport::new("decomposition_check", inputs, 0);
    let blocks = (nmax - nmin + 1) as usize;
    let mesh: Vec<f64> = (0..blocks)
        .flat_map(|b| {
            let base = 2f64.powi(nmin + b as i32);
            (0..s).map(move |j| base * (1.0 + j as f64 / s as f64))
        })
        .chain(std::iter::once(2f64.powi(nmax + 1)))
        .collect();
    let avgs = averages(f, body, &mesh)?;
    let at = |b: usize, j: usize| &avgs[b * s + j].values;
    let round = 1e-12 * (1.0 + f.max_abs());
    let mut worst = Worst::new("block-decomposition");
    let mut worst_rm = Worst::new("rm-block");
    let (mut max_lhs, mut max_dyadic, mut max_block) = (0.0f64, 0.0f64, 0.0f64);
    let mut refine = vec![0.0f64; level as usize + 1];
    let mut seq = vec![0.0; s + 1];
    for i in 0..f.len() {
        let lhs = avgs.iter().fold(0.0f64, |m, a| m.max(a.values[i].abs()));
        let dyadic = (0..=blocks).fold(0.0f64, |m, b| m.max(at(b.min(blocks - 1), if b == blocks { s } else { 0 })[i].abs()));
        let mut sq = 0.0;
        for b in 0..blocks {
            for (j, v) in seq.iter_mut().enumerate() {
                *v = at(b, j)[i];
            }
            let rm = rm_real(&seq, level);
            worst_rm.push(rm.lhs, rm.rhs, round);
            sq += rm.lhs * rm.lhs;
        }
        let block = sq.sqrt();
        worst.push(lhs, dyadic + block, round);
        max_lhs = max_lhs.max(lhs);
        max_dyadic = max_dyadic.max(dyadic);
        max_block = max_block.max(block);
        for (lv, r) in refine.iter_mut().enumerate() {
            let stride = s >> lv;
            let m = (0..mesh.len()).step_by(stride).fold(0.0f64, |m, k| m.max(avgs[k].values[i].abs()));
            *r = r.max(m);
        }
    }
    worst.record(&mut rep);
    worst_rm.record(&mut rep);
    rep.measure("max_lhs", max_lhs, 0.0);
    rep.measure("max_dyadic", max_dyadic, 0.0);
    rep.measure("max_block", max_block, 0.0);
    for (lv, r) in refine.iter().enumerate() {
        rep.push_series(
            "decomposition-refinement",
            SeriesPoint {
                x: (1usize << lv) as f64,
                y: *r,
                std_error: 0.0,
                label: "max_x sup over mesh".into(),
            },
        );
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::unit_volume_ball;
    use crate::special::unit_volume_ball_radius;

    fn normalized_l(d: usize) -> f64 {
        unit_volume_ball_radius(d) / ((d + 2) as f64).sqrt()
    }

    #[test]
    fn poisson_domination_constant_and_bump() {
        let one = GridFunction::constant(1, 8.0, 0.05, Boundary::Periodic, 1.0).unwrap();
        let rep = poisson_domination_check(&one, &[0.1, 0.5, 1.0], normalized_l(1), 4).unwrap();
        assert!(rep.pass());
        let m = &rep.margins[0];
        assert!((m.lhs - 1.0).abs() < 1e-12 && (m.rhs - 1.0).abs() < 1e-12);
        let bump = GridFunction::from_fn(1, 8.0, 0.02, Boundary::Periodic, |x| (-4.0 * x[0] * x[0]).exp()).unwrap();
        let ts: Vec<f64> = (0..12).map(|k| 0.05 * 1.5f64.powi(k)).collect();
        let rep = poisson_domination_check(&bump, &ts, normalized_l(1), 4).unwrap();
        assert!(rep.pass(), "{:?}", rep.margins);
        assert!(rep.margins[0].raw_margin() > 0.0);
        assert!(poisson_domination_check(&bump.map(|v| v - 0.5), &ts, 0.3, 4).is_err());
    }

    #[test]
    fn poisson_domination_spike_2d() {
        let h = 0.1;
        let spike = GridFunction::from_fn(2, 4.0, h, Boundary::Periodic, |x| {
            (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * h * h)).exp()
        })
        .unwrap();
        let ts: Vec<f64> = (0..8).map(|k| 0.05 * 2f64.powi(k)).collect();
        let rep = poisson_domination_check(&spike, &ts, normalized_l(2), 2).unwrap();
        assert!(rep.pass(), "{:?}", rep.margins);
    }

    #[test]
    fn spherical_domination_cases() {
        let f1 = GridFunction::from_fn(1, 6.0, 0.02, Boundary::Zero, |x| (-x[0] * x[0]).exp() * (1.0 + (3.0 * x[0]).sin())).unwrap();
        let rep = spherical_domination_check(&f1, &[0.25, 0.5, 1.0], 0, 1).unwrap();
        assert!(rep.pass(), "{:?}", rep.margins);
        let f2 = GridFunction::from_fn(2, 3.0, 0.05, Boundary::Zero, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp()).unwrap();
        let rep = spherical_domination_check(&f2, &[0.25, 0.5], 64, 1).unwrap();
        assert!(rep.pass(), "{:?}", rep.margins);
    }

    #[test]
    fn decomposition_cases() {
        let b = unit_volume_ball(1).unwrap();
        let one = GridFunction::constant(1, 10.0, 0.05, Boundary::Zero, 1.0).unwrap();
        let rep = decomposition_check(&one.clone().with_boundary(Boundary::Periodic), &b, -2, 0, 8).unwrap();
        assert!(rep.pass());
        assert!((rep.measurement("max_lhs").unwrap().value - 1.0).abs() < 1e-12);
        assert!(rep.measurement("max_block").unwrap().value < 1e-12);
        let bump = GridFunction::from_fn(1, 10.0, 0.02, Boundary::Zero, |x| (-x[0] * x[0] * 4.0).exp()).unwrap();
        let rep = decomposition_check(&bump, &b, -2, 0, 8).unwrap();
        assert!(rep.pass(), "{:?}", rep.margins);
        assert_eq!(rep.series["decomposition-refinement"].len(), 4);
        let spike = GridFunction::delta(1, 10.0, 0.02, Boundary::Zero, 50.0).unwrap();
        assert!(decomposition_check(&spike, &b, -2, 1, 4).unwrap().pass());
        assert!(decomposition_check(&bump, &b, -2, 0, 6).is_err());
        let _ = one;
    }
}
