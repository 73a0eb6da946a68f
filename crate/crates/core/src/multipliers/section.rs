use crate::bodies::{sample_uniform, IsotropicBody, SampleSet};
use crate::report::ExperimentReport;
use crate::{Error, Result};
use serde::Serialize;
use serde_json::json;

/// Slabs holding fewer samples are widened, then flagged.
pub const MIN_SLAB_COUNT: usize = 50;
const MAX_WIDENINGS: usize = 2;
const STRUCTURAL_SIGMAS: f64 = 5.0;
const BOUND_SIGMAS: f64 = 3.0;

/// Slab-counting estimate of `φ_ζ(u) = Vol_{d−1}{x ∈ G : ⟨x, ζ⟩ = u}` for a
/// unit-volume body.
#[derive(Clone, Debug, Serialize)]
pub struct SectionProfile {
    pub zeta: Vec<f64>,
    pub u_grid: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_std_error: Vec<f64>,
    pub counts: Vec<usize>,
    /// Slab width actually used at each point (after widening).
    pub slab_widths: Vec<f64>,
    pub flagged: Vec<bool>,
    pub slab_width: f64,
    pub support_radius: f64,
    pub samples: usize,
}

impl SectionProfile {
    /// Unflagged entries measured at the base slab width.
    pub fn is_regular(&self, i: usize) -> bool {
        !self.flagged[i] && self.slab_widths[i] == self.slab_width
    }

    /// Trapezoid estimate of `∫ φ du` over the grid.
    pub fn integral(&self) -> f64 {
        self.u_grid
            .windows(2)
            .zip(self.phi.windows(2))
            .map(|(u, p)| 0.5 * (u[1] - u[0]) * (p[0] + p[1]))
            .sum()
    }

    /// Index of the grid point closest to `u = 0`.
    pub fn origin_index(&self) -> usize {
        (0..self.u_grid.len())
            .min_by(|a, b| self.u_grid[*a].abs().total_cmp(&self.u_grid[*b].abs()))
            .expect("nonempty grid")
    }
}

fn unit(zeta: &[f64]) -> Result<()> {
    let n = zeta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("zeta must be a unit vector (norm {n})")));
    }
    Ok(())
}

pub fn section_profile(
    iso: &IsotropicBody,
    zeta: &[f64],
    u_grid: &[f64],
    slab_width: f64,
    seed: u64,
    n: usize,
) -> Result<SectionProfile> {
    unit(zeta)?;
    if !(slab_width > 0.0) {
        return Err(Error::invalid("slab width must be positive"));
    }
    if u_grid.is_empty() {
        return Err(Error::invalid("u grid must be nonempty"));
    }
    let samples = sample_uniform(iso.body(), seed, n)?;
    Ok(profile_from_samples(&samples, zeta, u_grid, slab_width))
}

/// Symmetric grid of `2k + 1` points over `[−u_ζ, u_ζ]` with slab width `u_ζ/64`.
pub fn section_profile_auto(
    iso: &IsotropicBody,
    zeta: &[f64],
    k: usize,
    seed: u64,
    n: usize,
) -> Result<SectionProfile> {
    unit(zeta)?;
    let samples = sample_uniform(iso.body(), seed, n)?;
    Ok(profile_auto_from_samples(&samples, zeta, k))
}

pub(crate) fn profile_auto_from_samples(samples: &SampleSet, zeta: &[f64], k: usize) -> SectionProfile {
    let support = samples.project(zeta).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let k = k.max(1);
    let grid: Vec<f64> = (-(k as i64)..=k as i64)
        .map(|i| support * i as f64 / k as f64)
        .collect();
    profile_from_samples(samples, zeta, &grid, support / 64.0)
}

pub(crate) fn profile_from_samples(samples: &SampleSet, zeta: &[f64], u_grid: &[f64], h: f64) -> SectionProfile {
    let mut proj = samples.project(zeta);
    proj.sort_by(f64::total_cmp);
    let support = proj.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let nf = proj.len() as f64;
    let count_in = |lo: f64, hi: f64| {
        proj.partition_point(|v| *v <= hi) - proj.partition_point(|v| *v < lo)
    };
    let mut out = SectionProfile {
        zeta: zeta.to_vec(),
        u_grid: u_grid.to_vec(),
        phi: Vec::with_capacity(u_grid.len()),
        phi_std_error: Vec::with_capacity(u_grid.len()),
        counts: Vec::with_capacity(u_grid.len()),
        slab_widths: Vec::with_capacity(u_grid.len()),
        flagged: Vec::with_capacity(u_grid.len()),
        slab_width: h,
        support_radius: support,
        samples: proj.len(),
    };
    for &u in u_grid {
        let mut w = h;
        let mut c = count_in(u - w / 2.0, u + w / 2.0);
        let mut tries = 0;
        while c < MIN_SLAB_COUNT && tries < MAX_WIDENINGS {
            w *= 2.0;
            c = count_in(u - w / 2.0, u + w / 2.0);
            tries += 1;
        }
        let p = c as f64 / nf;
        out.phi.push(p / w);
        out.phi_std_error.push((p * (1.0 - p) / nf).sqrt() / w);
        out.counts.push(c);
        out.slab_widths.push(w);
        out.flagged.push(c < MIN_SLAB_COUNT);
    }
    out
}

/// Envelope `φ(u) ≤ 2φ(0)e^{−φ(0)|u|}`, bracket `3/16 ≤ Lφ(0) ≤ 3`, and the
/// structural properties (evenness, monotonicity on `u ≥ 0`, log-concavity)
/// of a profile of an isotropic body. Bounds carry 3σ slack, structural
/// checks 5σ.
pub fn check_section_bounds(profile: &SectionProfile, l: f64, l_std_error: f64) -> ExperimentReport {
    let mut rep = ExperimentReport::new(
        "check_section_bounds",
        json!({
            "zeta": profile.zeta, "L": l, "points": profile.u_grid.len(),
            "slab_width": profile.slab_width, "samples": profile.samples,
        }),
        0,
    );
    let i0 = profile.origin_index();
    if profile.u_grid[i0].abs() > 1e-12 {
        rep.note(format!("grid lacks u = 0; using u = {}", profile.u_grid[i0]));
    }
    let phi0 = profile.phi[i0];
    let se0 = profile.phi_std_error[i0];
    rep.measure("phi(0)", phi0, se0);
    rep.measure("L*phi(0)", l * phi0, (l * se0).hypot(phi0 * l_std_error));
    rep.measure("support_radius", profile.support_radius, 0.0);
    rep.measure("integral", profile.integral(), 0.0);
    rep.measure("flagged", profile.flagged.iter().filter(|f| **f).count() as f64, 0.0);

    let lphi_se = (l * se0).hypot(phi0 * l_std_error);
    rep.check("section-L:lower", 3.0 / 16.0, l * phi0, BOUND_SIGMAS * lphi_se);
    rep.check("section-L:upper", l * phi0, 3.0, BOUND_SIGMAS * lphi_se);

    for (i, &u) in profile.u_grid.iter().enumerate() {
        let decay = (-phi0 * u.abs()).exp();
        let env = 2.0 * phi0 * decay;
        let d_env = 2.0 * decay * (1.0 - phi0 * u.abs());
        let se = profile.phi_std_error[i].hypot(d_env * se0);
        rep.check(format!("section-sup:u={u:.5}"), profile.phi[i], env, BOUND_SIGMAS * se);
    }

    let n = profile.u_grid.len();
    let tol = 1e-9 * profile.support_radius.max(1e-300);
    for i in 0..n {
        let u = profile.u_grid[i];
        if u <= 0.0 || !profile.is_regular(i) {
            continue;
        }
        if let Some(j) = (0..n).find(|&j| (profile.u_grid[j] + u).abs() <= tol) {
            if profile.is_regular(j) {
                let diff = (profile.phi[i] - profile.phi[j]).abs();
                let se = profile.phi_std_error[i].hypot(profile.phi_std_error[j]);
                rep.check(format!("even:u={u:.5}"), diff, 0.0, STRUCTURAL_SIGMAS * se);
            }
        }
    }
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (i, i + 1);
        if !(profile.is_regular(a) && profile.is_regular(b)) {
            continue;
        }
        let (ua, ub) = (profile.u_grid[a], profile.u_grid[b]);
        let se = profile.phi_std_error[a].hypot(profile.phi_std_error[b]);
        if ua >= -tol && ub > ua {
            rep.check(format!("monotone:u={ub:.5}"), profile.phi[b], profile.phi[a], STRUCTURAL_SIGMAS * se);
        } else if ub <= tol && ub > ua {
            rep.check(format!("monotone:u={ua:.5}"), profile.phi[a], profile.phi[b], STRUCTURAL_SIGMAS * se);
        }
    }
    for i in 1..n.saturating_sub(1) {
        let (a, b, c) = (i - 1, i, i + 1);
        if !(profile.is_regular(a) && profile.is_regular(b) && profile.is_regular(c)) {
            continue;
        }
        let (ua, ub, uc) = (profile.u_grid[a], profile.u_grid[b], profile.u_grid[c]);
        if ((ub - ua) - (uc - ub)).abs() > tol {
            continue;
        }
        let (pa, pb, pc) = (profile.phi[a], profile.phi[b], profile.phi[c]);
        let (sa, sb, sc) = (profile.phi_std_error[a], profile.phi_std_error[b], profile.phi_std_error[c]);
        let se = ((pc * sa).powi(2) + (pa * sc).powi(2) + (2.0 * pb * sb).powi(2)).sqrt();
        rep.check(format!("logconcave:u={ub:.5}"), pa * pc, pb * pb, STRUCTURAL_SIGMAS * se);
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::IsotropicBody;

    #[test]
    fn cube_axis_profile() {
        let iso = IsotropicBody::qball(5, f64::INFINITY).unwrap();
        let mut e1 = vec![0.0; 5];
        e1[0] = 1.0;
        let p = section_profile_auto(&iso, &e1, 16, 1, 200_000).unwrap();
        let i0 = p.origin_index();
        assert!((p.phi[i0] - 1.0).abs() < 4.0 * p.phi_std_error[i0]);
        assert!((p.support_radius - 0.5).abs() < 1e-3);
        let rep = check_section_bounds(&p, iso.l, 0.0);
        assert!(rep.pass(), "{:?}", rep.failures().collect::<Vec<_>>());
        assert!((rep.measurement("integral").unwrap().value - 1.0).abs() < 0.05);
    }

    #[test]
    fn interval_profile() {
        let iso = IsotropicBody::qball(1, f64::INFINITY).unwrap();
        let grid = [-0.75, -0.25, 0.0, 0.25, 0.75];
        let p = section_profile(&iso, &[1.0], &grid, 0.02, 2, 100_000).unwrap();
        assert!((p.phi[2] - 1.0).abs() < 4.0 * p.phi_std_error[2]);
        assert!((p.phi[1] - 1.0).abs() < 4.0 * p.phi_std_error[1]);
        assert_eq!(p.phi[0], 0.0);
        assert!(p.flagged[0] && p.flagged[4]);
        let rep = check_section_bounds(&p, iso.l, 0.0);
        assert!(rep.pass());
        let lphi = rep.measurement("L*phi(0)").unwrap().value;
        assert!((lphi - 12f64.powf(-0.5)).abs() < 0.02);
    }

    #[test]
    fn disc_center_chord() {
        let iso = IsotropicBody::qball(2, 2.0).unwrap();
        let z = [0.6, 0.8];
        let p = section_profile(&iso, &z, &[0.0], 0.01, 3, 400_000).unwrap();
        let chord = 2.0 / std::f64::consts::PI.sqrt();
        assert!((p.phi[0] - chord).abs() < 4.0 * p.phi_std_error[0] + 0.002);
    }

    #[test]
    fn structural_checks_catch_a_broken_profile() {
        let iso = IsotropicBody::qball(3, 2.0).unwrap();
        let mut p = section_profile_auto(&iso, &[0.0, 0.0, 1.0], 8, 4, 100_000).unwrap();
        let i = p.origin_index() + 3;
        p.phi[i] *= 3.0;
        let rep = check_section_bounds(&p, iso.l, 0.0);
        assert!(rep.failures().any(|m| m.inequality_id.starts_with("monotone")));
        assert!(rep.failures().any(|m| m.inequality_id.starts_with("even")));
        assert!(rep.failures().any(|m| m.inequality_id.starts_with("logconcave")));
    }

    #[test]
    fn rejects_bad_inputs() {
        let iso = IsotropicBody::qball(2, 2.0).unwrap();
        assert!(section_profile(&iso, &[1.0, 1.0], &[0.0], 0.1, 0, 10).is_err());
        assert!(section_profile(&iso, &[1.0, 0.0], &[0.0], 0.0, 0, 10).is_err());
    }
}
