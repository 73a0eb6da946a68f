use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MAX_GRID_DIM: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[serde(alias = "zero-pad")]
    Zero,
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" | "zero-pad" => Ok(Boundary::Zero),
            "periodic" => Ok(Boundary::Periodic),
            _ => Err(Error::invalid(format!("unknown boundary mode {s:?}"))),
        }
    }
}

/// Samples on the grid `hZ^d ∩ [−B, B]^d`, stored row-major with the last
/// axis fastest. Node `i` on an axis sits at `(i − m)h`, `m = ⌊B/h⌋`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridFunction {
    pub dim: usize,
    #[serde(rename = "box")]
    pub box_half_width: f64,
    pub spacing: f64,
    pub boundary: Boundary,
    pub values: Vec<f64>,
    #[serde(skip)]
    n: usize,
}

#[derive(Deserialize)]
struct GridFile {
    dim: usize,
    #[serde(rename = "box")]
    box_half_width: f64,
    spacing: f64,
    boundary: Boundary,
    values: Vec<f64>,
}

impl<'de> Deserialize<'de> for GridFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let g = GridFile::deserialize(d)?;
        GridFunction::new(g.dim, g.box_half_width, g.spacing, g.boundary, g.values)
            .map_err(serde::de::Error::custom)
    }
}

/// Nodes per axis, `2⌊B/h⌋ + 1`.
pub fn axis_len(box_half_width: f64, spacing: f64) -> usize {
    2 * half_len(box_half_width, spacing) + 1
}

fn half_len(b: f64, h: f64) -> usize {
    (b / h * (1.0 + 1e-12)).floor() as usize
}

impl GridFunction {
    pub fn new(dim: usize, box_half_width: f64, spacing: f64, boundary: Boundary, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > MAX_GRID_DIM {
            return Err(Error::invalid(format!("grid dimension {dim} outside 1..={MAX_GRID_DIM}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::invalid(format!("spacing {spacing} must be positive")));
        }
        if !(box_half_width >= spacing && box_half_width.is_finite()) {
            return Err(Error::invalid(format!("box half-width {box_half_width} must be at least the spacing")));
        }
        let n = axis_len(box_half_width, spacing);
        let expected = n.checked_pow(dim as u32).ok_or_else(|| Error::invalid("grid too large"))?;
        if values.len() != expected {
            return Err(Error::invalid(format!(
                "grid has {} values, expected {n}^{dim} = {expected}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite grid value at index {i}")));
        }
        Ok(GridFunction {
            dim,
            box_half_width,
            spacing,
            boundary,
            values,
            n,
        })
    }

    pub fn from_fn<F>(dim: usize, box_half_width: f64, spacing: f64, boundary: Boundary, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let n = axis_len(box_half_width, spacing);
        let m = (n / 2) as f64;
        let total = n.pow(dim as u32);
        let mut x = vec![0.0; dim];
        let mut values = Vec::with_capacity(total);
        for i in 0..total {
            let mut r = i;
            for k in (0..dim).rev() {
                x[k] = ((r % n) as f64 - m) * spacing;
                r /= n;
            }
            values.push(f(&x));
        }
        GridFunction::new(dim, box_half_width, spacing, boundary, values)
    }

    pub fn constant(dim: usize, box_half_width: f64, spacing: f64, boundary: Boundary, c: f64) -> Result<Self> {
        Self::from_fn(dim, box_half_width, spacing, boundary, |_| c)
    }

    /// `value` at the origin node, zero elsewhere.
    pub fn delta(dim: usize, box_half_width: f64, spacing: f64, boundary: Boundary, value: f64) -> Result<Self> {
        let mut g = Self::constant(dim, box_half_width, spacing, boundary, 0.0)?;
        let c = g.center_index();
        g.values[c] = value;
        Ok(g)
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        GridFunction::new(self.dim, self.box_half_width, self.spacing, self.boundary, values)
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn axis_len(&self) -> usize {
        self.n
    }

    /// `⌊B/h⌋`, the index of the origin on each axis.
    pub fn half_len(&self) -> usize {
        self.n / 2
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    pub fn center_index(&self) -> usize {
        self.flat(&vec![self.half_len(); self.dim])
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, i| acc * self.n + i)
    }

    pub fn unflat(&self, mut i: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for k in (0..self.dim).rev() {
            out[k] = i % self.n;
            i /= self.n;
        }
        out
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        let m = self.half_len() as f64;
        self.unflat(i).into_iter().map(|j| (j as f64 - m) * self.spacing).collect()
    }

    /// Value at the node with signed offset `k` from the origin, applying
    /// the boundary mode outside the box.
    pub fn at_offset(&self, k: &[i64]) -> f64 {
        let n = self.n as i64;
        let m = self.half_len() as i64;
        let mut flat = 0usize;
        for &kj in k {
            let mut j = kj + m;
            if !(0..n).contains(&j) {
                match self.boundary {
                    Boundary::Zero => return 0.0,
                    Boundary::Periodic => j = j.rem_euclid(n),
                }
            }
            flat = flat * self.n + j as usize;
        }
        self.values[flat]
    }

    /// Multilinear interpolation at `x`.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let mut base = vec![0i64; d];
        let mut frac = vec![0.0; d];
        for k in 0..d {
            let s = x[k] / self.spacing;
            let f = s.floor();
            base[k] = f as i64;
            frac[k] = s - f;
        }
        let mut acc = 0.0;
        let mut idx = vec![0i64; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for k in 0..d {
                let bit = (corner >> k) & 1;
                idx[k] = base[k] + bit as i64;
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
            }
            if w != 0.0 {
                acc += w * self.at_offset(&idx);
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Riemann sum `h^d Σ f`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing.powi(self.dim as i32)
    }

    /// Discrete `L^p` norm `(h^d Σ |f|^p)^{1/p}`; `p = ∞` gives the max.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * self.spacing.powi(self.dim as i32)).powf(1.0 / p)
    }

    /// Largest one-step difference quotient along any axis (wrapping in
    /// periodic mode), times `√d`.
    pub fn lipschitz_estimate(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let n = self.n;
        for i in 0..self.len() {
            let idx = self.unflat(i);
            for k in 0..self.dim {
                let mut j = idx.clone();
                if idx[k] + 1 < n {
                    j[k] += 1;
                } else if self.boundary == Boundary::Periodic {
                    j[k] = 0;
                } else {
                    worst = worst.max(self.values[i].abs());
                    continue;
                }
                worst = worst.max((self.values[self.flat(&j)] - self.values[i]).abs());
            }
        }
        worst / self.spacing * (self.dim as f64).sqrt()
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.dim == other.dim && self.n == other.n && self.spacing == other.spacing && self.boundary == other.boundary
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        GridFunction {
            values: self.values.iter().map(|v| f(*v)).collect(),
            ..self.clone()
        }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &GridFunction, f: F) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::invalid("grid functions live on different grids"));
        }
        Ok(GridFunction {
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
            ..self.clone()
        })
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    /// One-dimensional grid from `x,value` rows with uniform, symmetric nodes.
    pub fn read_csv(path: &Path, boundary: Boundary) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::invalid("CSV rows need two columns"))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad CSV number: {e}")))
            };
            let x = match parse(0) {
                Ok(x) => x,
                Err(_) if xs.is_empty() && vs.is_empty() => continue,
                Err(e) => return Err(e),
            };
            xs.push(x);
            vs.push(parse(1)?);
        }
        if xs.len() < 3 {
            return Err(Error::invalid("CSV grid needs at least three rows"));
        }
        let h = xs[1] - xs[0];
        let b = -xs[0];
        for (i, x) in xs.iter().enumerate() {
            if (x - (-b + i as f64 * h)).abs() > 1e-9 * b.max(1.0) {
                return Err(Error::invalid(format!("CSV node {i} at x = {x} is off the uniform grid")));
            }
        }
        GridFunction::new(1, b, h, boundary, vs)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        if self.dim != 1 {
            return Err(Error::Unsupported("CSV grid output is one-dimensional".into()));
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([self.coords(i)[0].to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_coords() {
        let g = GridFunction::from_fn(2, 1.0, 0.25, Boundary::Zero, |x| x[0] + 10.0 * x[1]).unwrap();
        assert_eq!(g.axis_len(), 9);
        assert_eq!(g.len(), 81);
        assert_eq!(g.coords(0), vec![-1.0, -1.0]);
        assert_eq!(g.values[g.center_index()], 0.0);
        assert_eq!(g.at_offset(&[1, 2]), 0.25 + 5.0);
        assert_eq!(g.at_offset(&[5, 0]), 0.0);
        let p = g.clone().with_boundary(Boundary::Periodic);
        assert_eq!(p.at_offset(&[5, 0]), p.at_offset(&[-4, 0]));
        assert!((g.interpolate(&[0.1, -0.3]) - (0.1 - 3.0)).abs() < 1e-12);
        assert!(GridFunction::new(2, 1.0, 0.25, Boundary::Zero, vec![0.0; 80]).is_err());
        assert!(GridFunction::new(4, 1.0, 0.5, Boundary::Zero, vec![0.0; 625]).is_err());
        let mut v = vec![0.0; 9];
        v[3] = f64::NAN;
        assert!(GridFunction::new(1, 1.0, 0.25, Boundary::Zero, v).is_err());
    }

    #[test]
    fn json_and_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridFunction::from_fn(1, 2.0, 0.5, Boundary::Periodic, |x| x[0] * x[0]).unwrap();
        let p = dir.path().join("g.json");
        g.write_json(&p).unwrap();
        assert_eq!(GridFunction::read_json(&p).unwrap(), g);
        let c = dir.path().join("g.csv");
        g.write_csv(&c).unwrap();
        assert_eq!(GridFunction::read_csv(&c, Boundary::Periodic).unwrap(), g);
        let bad = r#"{"dim":1,"box":1.0,"spacing":0.5,"boundary":"zero","values":[1,2]}"#;
        assert!(serde_json::from_str::<GridFunction>(bad).is_err());
    }

    #[test]
    fn lipschitz_of_linear() {
        let g = GridFunction::from_fn(1, 1.0, 0.1, Boundary::Zero, |x| 3.0 * x[0] + 5.0).unwrap();
        assert!(g.lipschitz_estimate() >= 3.0);
        let p = GridFunction::from_fn(1, 1.0, 0.1, Boundary::Periodic, |x| (x[0] * std::f64::consts::PI).sin()).unwrap();
        assert!(p.lipschitz_estimate() <= std::f64::consts::PI + 1e-9);
    }
}
