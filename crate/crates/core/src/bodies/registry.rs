//! Body specification strings, resolved through a registry of named factories.
//!
//! A spec is `<name>` or `<name>:<argument>`: `qball:<q>`, `cube`, `ball`,
//! `unit-cube`, `ellipsoid:<λ1,λ2,...>` (or `ellipsoid:schedule`) and
//! `linear:<file>`, where the file holds either a bare JSON matrix (applied to
//! the Euclidean ball) or `{"base": "<spec>", "matrix": [[...], ...]}`.

use super::{ellipsoid_schedule, make_ellipsoid, make_linear_image, make_qball, unit_cube, Body};
use crate::{Error, Result};
use nalgebra::DMatrix;
use std::collections::BTreeMap;

pub trait BodyFactory: Send + Sync {
    fn name(&self) -> &'static str;
    fn build(&self, arg: Option<&str>, dim: usize, registry: &BodyRegistry) -> Result<Body>;
}

pub struct BodyRegistry {
    factories: BTreeMap<&'static str, Box<dyn BodyFactory>>,
}

impl Default for BodyRegistry {
    fn default() -> Self {
        let mut r = BodyRegistry {
            factories: BTreeMap::new(),
        };
        r.register(Box::new(QBallFactory));
        r.register(Box::new(CubeFactory));
        r.register(Box::new(BallFactory));
        r.register(Box::new(UnitCubeFactory));
        r.register(Box::new(EllipsoidFactory));
        r.register(Box::new(LinearFactory));
        r
    }
}

impl BodyRegistry {
    pub fn register(&mut self, factory: Box<dyn BodyFactory>) {
        self.factories.insert(factory.name(), factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn parse(&self, spec: &str, dim: usize) -> Result<Body> {
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (spec.trim(), None),
        };
        let factory = self.factories.get(name).ok_or_else(|| {
            Error::invalid(format!("unknown body {name:?}; known: {:?}", self.names()))
        })?;
        factory.build(arg, dim, self)
    }
}

fn parse_q(s: &str) -> Result<f64> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("bad exponent {s:?}"))),
    }
}

struct QBallFactory;

impl BodyFactory for QBallFactory {
    fn name(&self) -> &'static str {
        "qball"
    }

    fn build(&self, arg: Option<&str>, dim: usize, _: &BodyRegistry) -> Result<Body> {
        let q = parse_q(arg.ok_or_else(|| Error::invalid("qball needs an exponent, e.g. qball:3"))?)?;
        make_qball(dim, q)
    }
}

struct CubeFactory;

impl BodyFactory for CubeFactory {
    fn name(&self) -> &'static str {
        "cube"
    }

    fn build(&self, _: Option<&str>, dim: usize, _: &BodyRegistry) -> Result<Body> {
        make_qball(dim, f64::INFINITY)
    }
}

struct UnitCubeFactory;

impl BodyFactory for UnitCubeFactory {
    fn name(&self) -> &'static str {
        "unit-cube"
    }

    fn build(&self, _: Option<&str>, dim: usize, _: &BodyRegistry) -> Result<Body> {
        unit_cube(dim)
    }
}

struct BallFactory;

impl BodyFactory for BallFactory {
    fn name(&self) -> &'static str {
        "ball"
    }

    fn build(&self, _: Option<&str>, dim: usize, _: &BodyRegistry) -> Result<Body> {
        make_qball(dim, 2.0)
    }
}

struct EllipsoidFactory;

impl BodyFactory for EllipsoidFactory {
    fn name(&self) -> &'static str {
        "ellipsoid"
    }

    fn build(&self, arg: Option<&str>, dim: usize, _: &BodyRegistry) -> Result<Body> {
        let lambdas = match arg {
            None | Some("schedule") => ellipsoid_schedule(dim),
            Some(list) => list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid(format!("bad ellipsoid weight {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        if lambdas.len() != dim {
            return Err(Error::invalid(format!(
                "ellipsoid has {} weights but dimension is {dim}",
                lambdas.len()
            )));
        }
        make_ellipsoid(&lambdas)
    }
}

struct LinearFactory;

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum LinearFile {
    Matrix(Vec<Vec<f64>>),
    WithBase { base: String, matrix: Vec<Vec<f64>> },
}

impl BodyFactory for LinearFactory {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn build(&self, arg: Option<&str>, dim: usize, registry: &BodyRegistry) -> Result<Body> {
        let path = arg.ok_or_else(|| Error::invalid("linear needs a matrix file, e.g. linear:m.json"))?;
        let text = std::fs::read_to_string(path)?;
        let (base, rows) = match serde_json::from_str::<LinearFile>(&text)? {
            LinearFile::Matrix(rows) => ("ball".to_string(), rows),
            LinearFile::WithBase { base, matrix } => (base, matrix),
        };
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid(format!("matrix in {path} is not {dim}x{dim}")));
        }
        let m = DMatrix::from_row_iterator(dim, dim, rows.into_iter().flatten());
        let base = registry.parse(&base, dim)?;
        make_linear_image(&base, &m)
    }
}
