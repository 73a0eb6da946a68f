use super::enumerate::{WeightedBall, DEFAULT_CAP};
use crate::bodies::Body;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

/// A finitely supported function `Z^d → R`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LatticeFunction {
    pub dim: usize,
    pub values: BTreeMap<Vec<i64>, f64>,
}

impl LatticeFunction {
    pub fn new(dim: usize) -> Self {
        LatticeFunction {
            dim,
            values: BTreeMap::new(),
        }
    }

    pub fn delta(at: &[i64]) -> Self {
        let mut f = LatticeFunction::new(at.len());
        f.values.insert(at.to_vec(), 1.0);
        f
    }

    /// Adds `value` at `at`.
    pub fn add(&mut self, at: &[i64], value: f64) {
        debug_assert_eq!(at.len(), self.dim);
        *self.values.entry(at.to_vec()).or_insert(0.0) += value;
    }

    pub fn set(&mut self, at: &[i64], value: f64) {
        self.values.insert(at.to_vec(), value);
    }

    pub fn get(&self, at: &[i64]) -> f64 {
        self.values.get(at).copied().unwrap_or(0.0)
    }

    pub fn support_len(&self) -> usize {
        self.values.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<i64>, &f64)> {
        self.values.iter()
    }

    pub fn sum(&self) -> f64 {
        self.values.values().sum()
    }

    /// `ℓ^p` norm; `p = ∞` gives the sup norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.values().fold(0.0, |m, v| m.max(v.abs()));
        }
        self.values.values().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }

    pub fn shifted(&self, by: &[i64]) -> Self {
        LatticeFunction {
            dim: self.dim,
            values: self
                .values
                .iter()
                .map(|(k, v)| (k.iter().zip(by).map(|(a, b)| a + b).collect(), *v))
                .collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        LatticeFunction {
            dim: self.dim,
            values: self.values.iter().map(|(k, v)| (k.clone(), c * v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.values().all(|v| v.is_finite())
    }

    /// Rows `[coords..., value]`.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values
            .iter()
            .map(|(k, v)| k.iter().map(|c| *c as f64).chain(std::iter::once(*v)).collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::invalid("lattice function needs at least one row"));
        };
        if first.len() < 2 {
            return Err(Error::invalid("rows are [coords..., value] with at least one coordinate"));
        }
        let dim = first.len() - 1;
        let mut f = LatticeFunction::new(dim);
        for row in rows {
            if row.len() != dim + 1 {
                return Err(Error::invalid(format!("row {row:?} does not have {} entries", dim + 1)));
            }
            let coords: Vec<i64> = row[..dim]
                .iter()
                .map(|c| {
                    if c.fract() == 0.0 && c.is_finite() {
                        Ok(*c as i64)
                    } else {
                        Err(Error::invalid(format!("non-integer coordinate {c}")))
                    }
                })
                .collect::<Result<_>>()?;
            if !row[dim].is_finite() {
                return Err(Error::invalid("non-finite value"));
            }
            f.add(&coords, row[dim]);
        }
        Ok(f)
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let rows: Vec<Vec<f64>> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_rows(&rows)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(&self.to_rows())?)?;
        Ok(())
    }
}

impl Serialize for LatticeFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticeFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        LatticeFunction::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// The lattice points of a dilate `G_t`.
#[derive(Clone, Debug)]
pub struct Stencil {
    pub t: f64,
    pub points: Vec<Vec<i64>>,
}

impl Stencil {
    pub fn for_body(body: &Body, t: f64) -> Result<Self> {
        Self::for_body_with_cap(body, t, DEFAULT_CAP)
    }

    pub fn for_body_with_cap(body: &Body, t: f64, cap: u64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("radius t must be positive, got {t}")));
        }
        let points = match body.as_weighted_qball() {
            Some((weights, q)) => WeightedBall { weights, q, radius: t }.points(cap)?,
            None => box_scan(body, t, cap)?,
        };
        assert!(
            points.iter().any(|p| p.iter().all(|c| *c == 0)),
            "origin must lie in every dilate"
        );
        Ok(Stencil { t, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn box_scan(body: &Body, t: f64, cap: u64) -> Result<Vec<Vec<i64>>> {
    let d = body.dim();
    let m = (body.bounding_radius() * t).floor() as i64;
    let side = (2 * m + 1) as f64;
    let est = side.powi(d as i32);
    if est > cap as f64 {
        return Err(Error::CapExceeded { cap, estimate: est });
    }
    let total = (2 * m + 1).pow(d as u32);
    let mut out = Vec::new();
    let mut y = vec![0i64; d];
    let mut x = vec![0.0; d];
    for idx in 0..total {
        let mut rest = idx;
        for k in (0..d).rev() {
            y[k] = rest % (2 * m + 1) - m;
            rest /= 2 * m + 1;
        }
        x.iter_mut().zip(&y).for_each(|(a, b)| *a = *b as f64 / t);
        if body.gauge(&x) <= 1.0 + 1e-12 {
            out.push(y.clone());
        }
    }
    Ok(out)
}

/// `(1/|S|) Σ_{y∈S} f(x − y)` at a single point.
pub fn discrete_average_at(f: &LatticeFunction, stencil: &Stencil, x: &[i64]) -> f64 {
    let mut z = vec![0i64; x.len()];
    let mut s = 0.0;
    for y in &stencil.points {
        z.iter_mut().zip(x.iter().zip(y)).for_each(|(o, (a, b))| *o = a - b);
        s += f.get(&z);
    }
    s / stencil.len() as f64
}

/// `𝓜_t^G f`, supported on `supp f + G_t ∩ Z^d`.
pub fn discrete_average(f: &LatticeFunction, body: &Body, t: f64) -> Result<LatticeFunction> {
    Ok(average_with(f, &Stencil::for_body(body, t)?))
}

pub(crate) fn average_with(f: &LatticeFunction, stencil: &Stencil) -> LatticeFunction {
    let w = 1.0 / stencil.len() as f64;
    let mut acc: HashMap<Vec<i64>, f64> = HashMap::new();
    for (a, v) in f.iter() {
        for y in &stencil.points {
            let key: Vec<i64> = a.iter().zip(y).map(|(p, q)| p + q).collect();
            *acc.entry(key).or_insert(0.0) += v * w;
        }
    }
    LatticeFunction {
        dim: f.dim,
        values: acc.into_iter().collect(),
    }
}

/// `max_{t ∈ t_set} |𝓜_t^G f|` pointwise.
pub fn discrete_maximal(f: &LatticeFunction, body: &Body, t_set: &[f64]) -> Result<LatticeFunction> {
    if t_set.is_empty() {
        return Err(Error::invalid("t_set must be nonempty"));
    }
    let stencils = t_set
        .iter()
        .map(|t| Stencil::for_body(body, *t))
        .collect::<Result<Vec<_>>>()?;
    Ok(maximal_with(f, &stencils))
}

pub(crate) fn maximal_with(f: &LatticeFunction, stencils: &[Stencil]) -> LatticeFunction {
    let mut out = LatticeFunction::new(f.dim);
    for s in stencils {
        for (k, v) in average_with(f, s).values {
            let e = out.values.entry(k).or_insert(0.0);
            *e = e.max(v.abs());
        }
    }
    out
}

fn is_sum_of_squares(k: u64, d: usize) -> bool {
    match d {
        1 => {
            let r = (k as f64).sqrt().round() as u64;
            r * r == k
        }
        2 => {
            let mut a = 0u64;
            while a * a <= k {
                if is_sum_of_squares(k - a * a, 1) {
                    return true;
                }
                a += 1;
            }
            false
        }
        3 => {
            let mut m = k;
            while m > 0 && m % 4 == 0 {
                m /= 4;
            }
            m % 8 != 7
        }
        _ => true,
    }
}

/// Radii `√k`, `1 ≤ k ≤ t_max²`, at which the `B^2` stencil in `Z^d` changes.
pub fn distinct_b2_radii(d: usize, t_max: f64) -> Vec<f64> {
    let kmax = (t_max * t_max * (1.0 + 1e-12)).floor() as u64;
    (1..=kmax)
        .filter(|k| is_sum_of_squares(*k, d))
        .map(|k| (k as f64).sqrt())
        .collect()
}

/// `{2^n : n_min ≤ n ≤ n_max}`.
pub fn dyadic_radii(n_min: i32, n_max: i32) -> Vec<f64> {
    (n_min..=n_max).map(|n| 2f64.powi(n)).collect()
}

/// The extension `F = Σ_y f(y) 1_{y+Q}`, `Q = [−1/2, 1/2)^d`.
#[derive(Clone, Debug)]
pub struct CellExtension {
    pub f: LatticeFunction,
}

pub fn extend_to_grid(f: &LatticeFunction) -> CellExtension {
    CellExtension { f: f.clone() }
}

impl CellExtension {
    pub fn cell_of(x: &[f64]) -> Vec<i64> {
        x.iter().map(|v| (v + 0.5).floor() as i64).collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.f.get(&Self::cell_of(x))
    }

    /// `‖F‖_{L^p} = ‖f‖_{ℓ^p}` since cells have unit volume.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.f.lp_norm(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::make_qball;
    use proptest::prelude::*;

    #[test]
    fn delta_average_on_disc() {
        let b2 = make_qball(2, 2.0).unwrap();
        let out = discrete_average(&LatticeFunction::delta(&[0, 0]), &b2, 1.0).unwrap();
        assert_eq!(out.support_len(), 5);
        for p in [[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1]] {
            assert!((out.get(&p) - 0.2).abs() < 1e-15);
        }
        let cube = make_qball(1, f64::INFINITY).unwrap();
        let out = discrete_average(&LatticeFunction::delta(&[0]), &cube, 2.0).unwrap();
        assert_eq!(out.support_len(), 5);
        assert!((out.get(&[-2]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn maximal_of_delta() {
        let b2 = make_qball(2, 2.0).unwrap();
        let f = LatticeFunction::delta(&[0, 0]);
        let m = discrete_maximal(&f, &b2, &[1.0, 2f64.sqrt(), 2.0]).unwrap();
        assert!((m.get(&[0, 0]) - 0.2).abs() < 1e-15);
        assert!((m.get(&[1, 1]) - 1.0 / 9.0).abs() < 1e-15);
        assert!((m.get(&[2, 0]) - 1.0 / 13.0).abs() < 1e-15);
        let single = discrete_maximal(&f, &b2, &[2.0]).unwrap();
        let avg = discrete_average(&f, &b2, 2.0).unwrap();
        assert_eq!(single, avg);
    }

    #[test]
    fn constant_deep_inside() {
        let cube = make_qball(2, f64::INFINITY).unwrap();
        let mut f = LatticeFunction::new(2);
        for i in -20..=20 {
            for j in -20..=20 {
                f.set(&[i, j], 3.0);
            }
        }
        let s = Stencil::for_body(&make_qball(2, 2.0).unwrap(), 4.5).unwrap();
        assert!((discrete_average_at(&f, &s, &[1, -2]) - 3.0).abs() < 1e-14);
        let s = Stencil::for_body(&cube, 3.0).unwrap();
        assert!((discrete_average_at(&f, &s, &[0, 0]) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn generic_body_uses_box_scan() {
        use crate::bodies::{make_linear_image, Body};
        let b = make_qball(2, 2.0).unwrap();
        let rot = nalgebra::DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
        let r: Body = make_linear_image(&b, &rot).unwrap();
        let s = Stencil::for_body(&r, 2.0).unwrap();
        assert_eq!(s.len(), 13);
    }

    #[test]
    fn rows_round_trip() {
        let mut f = LatticeFunction::new(2);
        f.set(&[1, -3], 0.5);
        f.set(&[0, 0], 2.0);
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, "[[0.0,0.0,2.0],[1.0,-3.0,0.5]]");
        let back: LatticeFunction = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        assert!(LatticeFunction::from_rows(&[vec![0.5, 1.0]]).is_err());
    }

    #[test]
    fn radii_sets() {
        assert_eq!(distinct_b2_radii(2, 2.0), vec![1.0, 2f64.sqrt(), 2.0]);
        assert_eq!(distinct_b2_radii(1, 3.0), vec![1.0, 2.0, 3.0]);
        // 7 is not a sum of three squares
        assert_eq!(distinct_b2_radii(3, 7f64.sqrt()).len(), 6);
        assert_eq!(dyadic_radii(0, 2), vec![1.0, 2.0, 4.0]);
    }

    #[test]
    fn extension_norms() {
        let e = extend_to_grid(&LatticeFunction::delta(&[0]));
        assert_eq!(e.eval(&[0.49]), 1.0);
        assert_eq!(e.eval(&[-0.5]), 1.0);
        assert_eq!(e.eval(&[0.5]), 0.0);
        let f = LatticeFunction::from_rows(&[vec![0.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!((extend_to_grid(&f).lp_norm(2.0).powi(2) - 5.0).abs() < 1e-14);
    }

    fn arb_function(d: usize) -> impl Strategy<Value = LatticeFunction> {
        prop::collection::vec((prop::collection::vec(-6i64..6, d), 0.0f64..5.0), 1..12).prop_map(
            move |pts| {
                let mut f = LatticeFunction::new(d);
                for (p, v) in pts {
                    f.add(&p, v);
                }
                f
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn average_preserves_mass(f in arb_function(2), t in 0.5f64..4.0) {
            let b = make_qball(2, 2.0).unwrap();
            let out = discrete_average(&f, &b, t).unwrap();
            prop_assert!((out.sum() - f.sum()).abs() <= 1e-12 * f.sum().max(1.0));
            prop_assert!(out.values.values().all(|v| *v >= 0.0));
            prop_assert!(out.lp_norm(f64::INFINITY) <= f.lp_norm(f64::INFINITY) + 1e-12);
        }

        #[test]
        fn maximal_dominates_each_average(f in arb_function(1), ts in prop::collection::vec(0.5f64..6.0, 1..4)) {
            let b = make_qball(1, 2.0).unwrap();
            let m = discrete_maximal(&f, &b, &ts).unwrap();
            for t in &ts {
                let a = discrete_average(&f, &b, *t).unwrap();
                for (k, v) in a.iter() {
                    prop_assert!(m.get(k) >= *v - 1e-15);
                }
            }
        }

        #[test]
        fn extension_isometry(f in arb_function(2), shift in prop::collection::vec(-3i64..3, 2)) {
            let e = extend_to_grid(&f);
            for p in [1.0, 2.0, f64::INFINITY] {
                prop_assert_eq!(e.lp_norm(p), f.lp_norm(p));
            }
            let g = extend_to_grid(&f.shifted(&shift));
            let x = [0.3, -1.2];
            let xs: Vec<f64> = x.iter().zip(&shift).map(|(a, b)| a + *b as f64).collect();
            prop_assert_eq!(g.eval(&xs), e.eval(&x));
        }
    }
}
