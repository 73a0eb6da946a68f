use super::fft::fft_nd;
use super::grid::{Boundary, GridFunction};
use crate::bodies::Body;
use crate::rng::substream;
use crate::{Error, Result};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Stencils larger than this are applied by FFT convolution.
pub const DIRECT_STENCIL_LIMIT: usize = 256;

/// Box half-width must be at least this multiple of the largest radius in
/// periodic mode.
pub const PERIODIC_BOX_FACTOR: f64 = 4.0;

/// Grid offsets `k` with `‖kh/t‖_G ≤ 1` (cell-centre membership).
#[derive(Clone, Debug)]
pub struct GridStencil {
    pub t: f64,
    pub offsets: Vec<Vec<i64>>,
    pub extent: i64,
}

impl GridStencil {
    pub fn new(body: &Body, t: f64, h: f64) -> Result<Self> {
        if !(t >= 2.0 * h) || !t.is_finite() {
            return Err(Error::EmptyStencil { t, h });
        }
        let d = body.dim();
        let extent = (body.bounding_radius() * t / h).ceil() as i64;
        let side = (2 * extent + 1) as usize;
        let total = side.pow(d as u32);
        let mut offsets = Vec::new();
        let mut y = vec![0.0; d];
        let mut k = vec![0i64; d];
        for i in 0..total {
            let mut r = i;
            for j in (0..d).rev() {
                k[j] = (r % side) as i64 - extent;
                y[j] = k[j] as f64 * h / t;
                r /= side;
            }
            if body.gauge(&y) <= 1.0 + 1e-12 {
                offsets.push(k.clone());
            }
        }
        Ok(GridStencil { t, offsets, extent })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

fn check_grid(f: &GridFunction, body: &Body, t: f64) -> Result<()> {
    if body.dim() != f.dim {
        return Err(Error::invalid(format!("body dimension {} differs from grid dimension {}", body.dim(), f.dim)));
    }
    if f.boundary == Boundary::Periodic && f.box_half_width < PERIODIC_BOX_FACTOR * t * (1.0 - 1e-12) {
        return Err(Error::invalid(format!(
            "periodic box half-width {} is below {PERIODIC_BOX_FACTOR} t = {}",
            f.box_half_width,
            PERIODIC_BOX_FACTOR * t
        )));
    }
    Ok(())
}

/// Normalized stencil average `Σ_k f(x − kh) / #stencil`.
pub fn apply_stencil(f: &GridFunction, s: &GridStencil) -> Result<GridFunction> {
    let n = f.axis_len() as i64;
    if f.boundary == Boundary::Periodic && 2 * s.extent + 1 > n {
        return Err(Error::invalid(format!(
            "stencil of extent {} wraps the periodic grid of {n} nodes",
            s.extent
        )));
    }
    let values = if s.len() <= DIRECT_STENCIL_LIMIT {
        direct(f, s)
    } else {
        by_fft(f, s)
    };
    f.with_values(values)
}

fn direct(f: &GridFunction, s: &GridStencil) -> Vec<f64> {
    let m = f.half_len() as i64;
    let count = s.len() as f64;
    (0..f.len())
        .into_par_iter()
        .map(|i| {
            let x: Vec<i64> = f.unflat(i).into_iter().map(|j| j as i64 - m).collect();
            let mut y = x.clone();
            let mut acc = 0.0;
            for o in &s.offsets {
                for k in 0..x.len() {
                    y[k] = x[k] - o[k];
                }
                acc += f.at_offset(&y);
            }
            acc / count
        })
        .collect()
}

fn by_fft(f: &GridFunction, s: &GridStencil) -> Vec<f64> {
    let d = f.dim;
    let n = f.axis_len();
    let size = match f.boundary {
        Boundary::Periodic => n,
        Boundary::Zero => n + 2 * s.extent as usize,
    };
    let total = size.pow(d as u32);
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![zero; total];
    for (i, v) in f.values.iter().enumerate() {
        let idx = f.unflat(i);
        a[idx.iter().fold(0, |acc, j| acc * size + j)] = Complex64::new(*v, 0.0);
    }
    let mut k = vec![zero; total];
    let w = 1.0 / s.len() as f64;
    for o in &s.offsets {
        let flat = o.iter().fold(0, |acc, j| acc * size + j.rem_euclid(size as i64) as usize);
        k[flat] += w;
    }
    fft_nd(&mut a, size, d, false);
    fft_nd(&mut k, size, d, false);
    a.iter_mut().zip(&k).for_each(|(x, y)| *x *= y);
    fft_nd(&mut a, size, d, true);
    let norm = total as f64;
    (0..f.len())
        .map(|i| {
            let idx = f.unflat(i);
            a[idx.iter().fold(0, |acc, j| acc * size + j)].re / norm
        })
        .collect()
}

/// `M_t^G f` on the grid.
pub fn average(f: &GridFunction, body: &Body, t: f64) -> Result<GridFunction> {
    check_grid(f, body, t)?;
    apply_stencil(f, &GridStencil::new(body, t, f.spacing)?)
}

/// `M_t^G f` for every `t` in `t_set`, in order.
pub fn averages(f: &GridFunction, body: &Body, t_set: &[f64]) -> Result<Vec<GridFunction>> {
    t_set.iter().map(|t| average(f, body, *t)).collect()
}

/// Pointwise `max_{t ∈ t_set} |M_t^G f|`.
pub fn maximal(f: &GridFunction, body: &Body, t_set: &[f64]) -> Result<GridFunction> {
    if t_set.is_empty() {
        return Err(Error::invalid("t set must be nonempty"));
    }
    let mut out = vec![0.0f64; f.len()];
    for t in t_set {
        let a = average(f, body, *t)?;
        out.iter_mut().zip(&a.values).for_each(|(o, v)| *o = o.max(v.abs()));
    }
    f.with_values(out)
}

/// `{2^n : nmin ≤ n ≤ nmax}`.
pub fn dyadic_t_set(nmin: i32, nmax: i32) -> Vec<f64> {
    (nmin..=nmax).map(|n| 2f64.powi(n)).collect()
}

/// `{2^{n + k/s}}` from `2^nmin` to `2^nmax` with ratio `2^{1/s}`.
pub fn geometric_t_set(nmin: i32, nmax: i32, subdivisions: usize) -> Vec<f64> {
    let s = subdivisions.max(1);
    let mut out = Vec::new();
    for n in nmin..nmax {
        for k in 0..s {
            out.push(2f64.powf(n as f64 + k as f64 / s as f64));
        }
    }
    out.push(2f64.powi(nmax));
    out
}

/// Parses `dyadic:<nmin>:<nmax>[:subdiv]`.
pub fn parse_t_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::invalid(format!("t grid {spec:?} is not dyadic:<nmin>:<nmax>[:subdiv]"));
    if parts[0] != "dyadic" || !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let nmin: i32 = parts[1].parse().map_err(|_| bad())?;
    let nmax: i32 = parts[2].parse().map_err(|_| bad())?;
    if nmin > nmax {
        return Err(bad());
    }
    match parts.get(3) {
        None => Ok(dyadic_t_set(nmin, nmax)),
        Some(s) => {
            let s: usize = s.parse().map_err(|_| bad())?;
            if s == 0 {
                return Err(bad());
            }
            Ok(geometric_t_set(nmin, nmax, s))
        }
    }
}

#[derive(Clone, Debug)]
pub struct SphericalAverage {
    pub values: GridFunction,
    pub std_error: Vec<f64>,
    /// Nodes whose sphere leaves the box in zero-pad mode.
    pub flagged: Vec<bool>,
    pub warning: Option<String>,
}

/// `∫_{S^{d−1}} f(x − rθ) dσ(θ)` by Monte Carlo over `n_dirs` shared
/// directions with multilinear interpolation. In `d = 1` the sphere is
/// `{±1}` and the average is exact.
pub fn spherical_average(f: &GridFunction, r: f64, n_dirs: usize, seed: u64) -> Result<SphericalAverage> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("radius {r} must be nonnegative")));
    }
    let d = f.dim;
    let dirs: Vec<Vec<f64>> = if d == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        if n_dirs < 2 {
            return Err(Error::invalid("need at least two directions"));
        }
        let mut rng = substream(seed, 0);
        (0..n_dirs)
            .map(|_| loop {
                let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-12 {
                    break v.into_iter().map(|x| x / norm).collect();
                }
            })
            .collect()
    };
    let exact = d == 1;
    let rows: Vec<(f64, f64)> = (0..f.len())
        .into_par_iter()
        .map(|i| {
            let x = f.coords(i);
            let mut y = vec![0.0; d];
            let (mut s, mut s2) = (0.0, 0.0);
            for th in &dirs {
                for k in 0..d {
                    y[k] = x[k] - r * th[k];
                }
                let v = f.interpolate(&y);
                s += v;
                s2 += v * v;
            }
            let m = dirs.len() as f64;
            let mean = s / m;
            let se = if exact {
                0.0
            } else {
                ((s2 / m - mean * mean).max(0.0) / (m - 1.0)).sqrt()
            };
            (mean, se)
        })
        .collect();
    let b = f.box_half_width;
    let flagged: Vec<bool> = (0..f.len())
        .map(|i| f.boundary == Boundary::Zero && f.coords(i).iter().any(|x| x.abs() + r > b))
        .collect();
    let warning = (f.boundary == Boundary::Zero && r > b)
        .then(|| format!("radius {r} exceeds the zero-padded box half-width {b}"));
    Ok(SphericalAverage {
        values: f.with_values(rows.iter().map(|r| r.0).collect())?,
        std_error: rows.iter().map(|r| r.1).collect(),
        flagged,
        warning,
    })
}
