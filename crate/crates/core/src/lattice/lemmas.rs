use super::enumerate::enumerate_ball;
use crate::report::ExperimentReport;
use crate::rng::{derive_seed, stable_sums, substream};
use crate::special::unit_ball_volume;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::json;

fn ball_volume(d: usize, r: f64) -> f64 {
    unit_ball_volume(d) * r.powi(d as i32)
}

/// `|B_N ∩ Z^d| ≤ 2|B_{N_1}|` with `N_1 = (N² + d/4)^{1/2}`, and for
/// `N ≥ C d` also `|B_N ∩ Z^d| ≤ 2 e^{1/(8C²)} |B_N|`. Exact, no slack.
pub fn lemma61_check(d: usize, n: f64, c: f64) -> Result<ExperimentReport> {
    let count = enumerate_ball(d, n, 2.0)?;
    let n1 = (n * n + d as f64 / 4.0).sqrt();
    let mut rep = ExperimentReport::new("lemma61_check", json!({"d": d, "N": n, "C": c}), 0);
    let c_f = count.count as f64;
    rep.measure("count", c_f, 0.0);
    rep.measure("N1", n1, 0.0);
    rep.measure("count/|B_N1|", c_f / ball_volume(d, n1), 0.0);
    rep.check("count:count<=2|B_N1|", c_f, 2.0 * ball_volume(d, n1), 0.0);
    if n >= c * d as f64 {
        let bound = 2.0 * (1.0 / (8.0 * c * c)).exp() * count.volume;
        rep.measure("count/|B_N|", count.ratio, 0.0);
        rep.check("count-large-N:count<=2exp(1/8C^2)|B_N|", c_f, bound, 0.0);
    } else {
        rep.note(format!("large-N bound not applicable: N = {n} < C d = {}", c * d as f64));
    }
    Ok(rep)
}

/// Exact `|{y ∈ [−1/2, 1/2]^d : ⟨z, y⟩ ≥ s}|` by inclusion–exclusion over the
/// vertices of the cube. Limited to at most 12 active coordinates, each with
/// `|z_j| ≥ 10^{-3}` (smaller entries are treated as zero).
pub fn cube_halfspace_measure(z: &[f64], s: f64) -> Result<f64> {
    let a: Vec<f64> = z.iter().map(|v| v.abs()).filter(|v| *v >= 1e-3).collect();
    let k = a.len();
    if k == 0 {
        return Ok(if s <= 0.0 { 1.0 } else { 0.0 });
    }
    if k > 12 {
        return Err(Error::Unsupported(format!("{k} active coordinates (at most 12)")));
    }
    let tau = s + a.iter().sum::<f64>() / 2.0;
    let mut acc = 0.0;
    for mask in 0u32..(1 << k) {
        let shift: f64 = (0..k).filter(|j| mask >> j & 1 == 1).map(|j| a[j]).sum();
        let r = tau - shift;
        if r > 0.0 {
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * r.powi(k as i32);
        }
    }
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    let cdf = acc / (fact * a.iter().product::<f64>());
    Ok((1.0 - cdf).clamp(0.0, 1.0))
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

/// Monte Carlo probability that a uniform point `y` of the unit cube
/// satisfies `pred(y)`, with its standard error.
fn cube_probability<F>(d: usize, seed: u64, n: usize, pred: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let hits = stable_sums(n, 1, |i, acc| {
        // one substream per point keeps the draw independent of sharding
        let mut rng = substream(seed, i as u64);
        let y: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
        if pred(&y) {
            acc[0] += 1.0;
        }
    })[0];
    let p = hits / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Directions used for the cube tail bound: the main diagonal, `e_1`, and
/// `n_random` random unit vectors.
pub fn tail_directions(d: usize, n_random: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut dirs = vec![vec![1.0 / (d as f64).sqrt(); d]];
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    dirs.push(e1);
    let mut rng = substream(derive_seed(seed, 0x7a), 0);
    dirs.extend((0..n_random).map(|_| random_unit(&mut rng, d)));
    dirs
}

/// `|{y ∈ Q : ⟨z, y⟩ ≥ s}| ≤ e^{−7s²/8}` by Monte Carlo with 3σ slack; the
/// inclusion–exclusion value is checked exactly where it applies.
pub fn cube_tail_check(d: usize, dirs: &[Vec<f64>], s_values: &[f64], seed: u64, n: usize) -> ExperimentReport {
    let mut rep = ExperimentReport::new(
        "cube_tail_check",
        json!({"d": d, "directions": dirs.len(), "s": s_values, "samples": n}),
        seed,
    );
    for (i, z) in dirs.iter().enumerate() {
        for (k, &s) in s_values.iter().enumerate() {
            let bound = (-7.0 * s * s / 8.0).exp();
            let sub = derive_seed(seed, (i * 1000 + k) as u64);
            let (p, se) = cube_probability(d, sub, n, |y| {
                y.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() >= s
            });
            rep.check(format!("cube-tail:mc:z{i}:s={s}"), p, bound, 3.0 * se);
            if let Ok(exact) = cube_halfspace_measure(z, s) {
                let active = z.iter().filter(|v| v.abs() >= 1e-3).count();
                if z.iter().all(|v| v.abs() >= 1e-3 || *v == 0.0) && active <= 8 {
                    rep.check(format!("cube-tail:exact:z{i}:s={s}"), exact, bound, 0.0);
                }
            }
        }
    }
    rep
}

/// For `N ≥ C d` and `|x| ≥ N(1 + t/N)^{1/2}`,
/// `|Q ∩ (B_N − x)| ≤ 2e^{−ct²}` with `c = (7/32) C²/(C+1)²`, checked at
/// points on and just outside the threshold shell; plus the cube tail bound.
pub fn lemma62_check(d: usize, n: f64, t: f64, c: f64, seed: u64, mc: usize) -> Result<ExperimentReport> {
    if n < c * d as f64 {
        return Err(Error::invalid(format!("need N >= C d, got N = {n}, C d = {}", c * d as f64)));
    }
    if !(t > 0.0) {
        return Err(Error::invalid("t must be positive"));
    }
    let cc = 7.0 / 32.0 * c * c / ((c + 1.0) * (c + 1.0));
    let bound = 2.0 * (-cc * t * t).exp();
    let rho = (n * n + n * t).sqrt();
    let mut rep = ExperimentReport::new(
        "lemma62_check",
        json!({"d": d, "N": n, "t": t, "C": c, "samples": mc}),
        seed,
    );
    rep.measure("c", cc, 0.0);
    rep.measure("threshold_radius", rho, 0.0);
    let dirs = tail_directions(d, 6, seed);
    let mut worst = 0.0f64;
    for (i, z) in dirs.iter().enumerate() {
        for k in 0..4 {
            let r = rho * (1.0 + 0.02 * k as f64);
            let x: Vec<f64> = z.iter().map(|v| v * r).collect();
            let sub = derive_seed(seed, (i * 16 + k) as u64);
            let (p, se) = cube_probability(d, sub, mc, |y| {
                x.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum::<f64>() <= n * n
            });
            worst = worst.max(p);
            rep.check(format!("shell:z{i}:r={r:.4}"), p, bound, 3.0 * se);
        }
    }
    rep.measure("max_measure", worst, 0.0);
    let tail = cube_tail_check(d, &dirs, &[0.0, 0.25, 0.5, 1.0, 1.5], derive_seed(seed, 12), mc);
    rep.margins.extend(tail.margins);
    Ok(rep)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Lemma63Constants {
    #[serde(rename = "J")]
    pub j: u32,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub tail_at_j: f64,
    pub tail_at_j_minus_1: f64,
    pub threshold: f64,
}

/// `Σ_{j ≥ start} e^{−j²/32 + j}` summed until terms are negligible, plus a
/// geometric bound on the remainder (term ratios `e^{1 − (2j+1)/32}` decrease).
fn tail_sum(start: u32) -> (f64, f64) {
    let term = |j: f64| (-j * j / 32.0 + j).exp();
    let mut sum = 0.0;
    let mut j = start as f64;
    loop {
        let t = term(j);
        sum += t;
        let r = (1.0 - (2.0 * j + 3.0) / 32.0).exp();
        if j > 16.0 && r < 1.0 && t * r / (1.0 - r) < 1e-17 * sum {
            return (sum, t * r / (1.0 - r));
        }
        j += 1.0;
    }
}

/// Smallest `J` with `Σ_{j≥J} e^{−j²/32} e^j ≤ 1/(8e)`, `C1 = 2(1+J)`, `C2 = 2e^J`.
pub fn lemma63_constants() -> Lemma63Constants {
    let threshold = 1.0 / (8.0 * std::f64::consts::E);
    let mut j = 0u32;
    loop {
        let (s, err) = tail_sum(j);
        if s + err <= threshold {
            let prev = if j > 0 { tail_sum(j - 1).0 } else { f64::INFINITY };
            return Lemma63Constants {
                j,
                c1: 2.0 * (1.0 + j as f64),
                c2: 2.0 * (j as f64).exp(),
                tail_at_j: s,
                tail_at_j_minus_1: prev,
                threshold,
            };
        }
        j += 1;
    }
}

/// For `N ≥ C1 d` asserts `|B_N| ≤ C2 |B_N ∩ Z^d|` and the
/// intermediate `|B_M| ≤ 2|B_N ∩ Z^d|` with `N = M(1 + J/M)^{1/2}`. Below the
/// threshold the ratio is only logged and the report is non-gating.
pub fn lemma63_check(d: usize, n: f64) -> Result<ExperimentReport> {
    let k = lemma63_constants();
    let mut rep = ExperimentReport::new("lemma63_check", json!({"d": d, "N": n}), 0);
    rep.measure("J", k.j as f64, 0.0);
    rep.measure("C1", k.c1, 0.0);
    rep.measure("C2", k.c2, 0.0);
    let count = enumerate_ball(d, n, 2.0)?;
    let ratio = count.volume / count.count as f64;
    rep.measure("|B_N|/count", ratio, 0.0);
    if n >= k.c1 * d as f64 {
        rep.check("volume:|B_N|<=C2*count", count.volume, k.c2 * count.count as f64, 0.0);
        let jf = k.j as f64;
        let m = (-jf + (jf * jf + 4.0 * n * n).sqrt()) / 2.0;
        rep.measure("M", m, 0.0);
        if m >= d as f64 {
            rep.check("inner-volume:|B_M|<=2*count", ball_volume(d, m), 2.0 * count.count as f64, 0.0);
        }
        Ok(rep)
    } else {
        rep.note(format!("empirical regime: N = {n} < C1 d = {}", k.c1 * d as f64));
        Ok(rep.non_gating())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma61_examples() {
        let r = lemma61_check(2, 2.0, 1.0).unwrap();
        assert!(r.pass());
        assert_eq!(r.measurement("count").unwrap().value, 13.0);
        let m = &r.margins[0];
        assert!((m.rhs - 2.0 * std::f64::consts::PI * 4.5).abs() < 1e-9);
        assert!(lemma61_check(3, 10.0, 1.0).unwrap().pass());
        let r = lemma61_check(1, 0.9, 1.0).unwrap();
        assert!(r.pass());
        assert!((r.margins[0].rhs - 4.0 * 1.06f64.sqrt()).abs() < 1e-12);
        assert!(r.notes[0].contains("not applicable"));
    }

    #[test]
    fn halfspace_exact_cases() {
        let z = [0.5f64.sqrt(), 0.5f64.sqrt()];
        let v = cube_halfspace_measure(&z, 0.5).unwrap();
        let corner = (1.0 - 0.5f64.sqrt()).powi(2) / 2.0;
        assert!((v - corner).abs() < 1e-12);
        assert!((v - 0.042_893).abs() < 1e-6);
        assert!((cube_halfspace_measure(&[1.0, 0.0], 0.2).unwrap() - 0.3).abs() < 1e-12);
        assert!((cube_halfspace_measure(&[0.6, 0.8, 0.0], 0.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(cube_halfspace_measure(&[0.0], 0.1).unwrap(), 0.0);
    }

    #[test]
    fn halfspace_matches_monte_carlo() {
        let z = [0.2, -0.5, 0.4, 0.7];
        let norm = z.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        let z: Vec<f64> = z.iter().map(|v| v / norm).collect();
        for s in [0.1, 0.3, 0.6] {
            let exact = cube_halfspace_measure(&z, s).unwrap();
            let (p, se) = cube_probability(4, 9, 200_000, |y| {
                y.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() >= s
            });
            assert!((p - exact).abs() < 4.0 * se + 1e-9, "s={s} exact={exact} mc={p}");
        }
    }

    #[test]
    fn tail_bound_cases() {
        let r = cube_tail_check(2, &[vec![0.5f64.sqrt(); 2]], &[0.0, 0.5], 1, 20_000);
        assert!(r.pass());
        let exact = r.margins.iter().find(|m| m.inequality_id == "cube-tail:exact:z0:s=0.5").unwrap();
        assert!((exact.rhs - 0.803_522_6).abs() < 1e-6);
    }

    #[test]
    fn lemma62_example() {
        let r = lemma62_check(2, 2.0, 1.0, 1.0, 4, 20_000).unwrap();
        assert!(r.pass());
        assert!((r.measurement("c").unwrap().value - 7.0 / 128.0).abs() < 1e-15);
        assert!(lemma62_check(3, 2.0, 1.0, 1.0, 4, 100).is_err());
    }

    #[test]
    fn lemma63_constants_are_minimal() {
        let k = lemma63_constants();
        assert_eq!(k.j, 36);
        assert!(k.tail_at_j <= k.threshold);
        assert!(k.tail_at_j_minus_1 > k.threshold);
        assert_eq!(k.c1, 74.0);
        assert!((k.c2 - 2.0 * 36f64.exp()).abs() < 1e-3 * k.c2);
        // independent direct summation
        let direct: f64 = (36..400).map(|j| (-(j * j) as f64 / 32.0 + j as f64).exp()).sum();
        assert!((direct - k.tail_at_j).abs() < 1e-12);
    }

    #[test]
    fn lemma63_regimes() {
        let r = lemma63_check(1, 80.0).unwrap();
        assert!(r.gating && r.pass());
        assert!(r.margins.iter().any(|m| m.inequality_id.starts_with("inner-volume")));
        let r = lemma63_check(2, 148.0).unwrap();
        assert!(r.gating && r.pass());
        let r = lemma63_check(3, 10.0).unwrap();
        assert!(!r.gating);
        let ratio = r.measurement("|B_N|/count").unwrap().value;
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }
}
