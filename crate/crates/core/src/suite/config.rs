use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Every budget, seed and gating tolerance used by the suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    pub tolerance: Tolerance,
    pub bodies: BodiesConfig,
    pub multipliers: MultipliersConfig,
    pub gridops: GridopsConfig,
    pub lattice: LatticeConfig,
    pub trends: TrendsConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerance {
    /// Standard errors allowed on every Monte Carlo comparison.
    pub mc_sigmas: f64,
    /// Absolute tolerance of identities that hold up to rounding.
    pub exact: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodiesConfig {
    pub bodies: Vec<String>,
    pub axiom_dims: Vec<usize>,
    pub axiom_points: usize,
    pub volume_dims: Vec<usize>,
    pub volume_samples: usize,
    /// Hit-or-miss volumes are asserted only when this many hits are expected.
    pub volume_min_expected_hits: f64,
    pub isotropic_dims: Vec<usize>,
    pub isotropic_samples: usize,
    pub idempotence_tolerance: f64,
    pub upper_constant: f64,
    pub q_invariant_dims: Vec<usize>,
    pub q_invariant_restarts: usize,
    pub q_invariant_rtol: f64,
    pub sigma_dims: Vec<usize>,
    pub sigma_directions: usize,
    pub sigma_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultipliersConfig {
    pub oracle_dims: Vec<usize>,
    pub oracle_xi_per_dim: usize,
    pub oracle_samples: usize,
    pub oracle_xi_range: [f64; 2],
    pub bound_bodies: Vec<String>,
    pub bound_dims: Vec<usize>,
    pub bound_xi: usize,
    pub bound_samples: usize,
    pub bound_xi_range: [f64; 2],
    pub section_bodies: Vec<String>,
    pub section_dims: Vec<usize>,
    pub section_directions: usize,
    pub section_points: usize,
    pub section_samples: usize,
    pub symbol_points: usize,
    pub symbol_log2_range: [f64; 2],
    pub symbol_tolerance: f64,
    pub dirichlet_dims: Vec<usize>,
    pub dirichlet_n_max: usize,
    pub dirichlet_xi: usize,
    pub dirichlet_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridopsConfig {
    pub rm_trials: usize,
    pub rm_levels: Vec<u32>,
    pub axiom_spacing: [f64; 2],
    pub semigroup_tolerance: f64,
    pub telescoping_tolerance: f64,
    pub poisson_l: Option<f64>,
    pub domination_spacing: [f64; 2],
    pub domination_subdivisions: usize,
    pub spherical_directions: usize,
    pub decomposition_subdivisions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub cap: u64,
    pub lemma61_dims: Vec<usize>,
    pub lemma61_n_max: usize,
    pub lemma61_low_dims: Vec<usize>,
    pub lemma61_low_n_max: usize,
    pub lemma61_c: f64,
    pub tail_dims: Vec<usize>,
    pub tail_directions: usize,
    pub tail_s: Vec<f64>,
    pub tail_samples: usize,
    pub lemma62_cases: Vec<[f64; 4]>,
    pub lemma62_samples: usize,
    pub lemma63_dims: Vec<usize>,
    pub lemma63_multiples: Vec<f64>,
    pub chain_dims: Vec<usize>,
    pub chain_inputs: usize,
    pub chain_atoms: usize,
    pub chain_window: i64,
    pub axiom_inputs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendsConfig {
    pub ellipsoid_dims: Vec<usize>,
    pub ellipsoid_p: f64,
    pub ellipsoid_t: Vec<f64>,
    pub ellipsoid_budget: usize,
    pub weak11_dims: Vec<usize>,
    pub weak11_t: Vec<f64>,
    pub weak11_budget: usize,
    pub conjectural_bodies: Vec<String>,
    pub conjectural_dims: Vec<usize>,
    pub conjectural_n_max: usize,
    pub conjectural_xi: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 20210601,
            tolerance: Tolerance::default(),
            bodies: BodiesConfig::default(),
            multipliers: MultipliersConfig::default(),
            gridops: GridopsConfig::default(),
            lattice: LatticeConfig::default(),
            trends: TrendsConfig::default(),
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            mc_sigmas: 3.0,
            exact: 1e-12,
        }
    }
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl Default for BodiesConfig {
    fn default() -> Self {
        BodiesConfig {
            bodies: strings(&["qball:1", "qball:2", "qball:inf", "qball:3", "ellipsoid:schedule"]),
            axiom_dims: vec![1, 2, 5, 10],
            axiom_points: 10_000,
            volume_dims: (1..=10).collect(),
            volume_samples: 400_000,
            volume_min_expected_hits: 200.0,
            isotropic_dims: (2..=10).collect(),
            isotropic_samples: 100_000,
            idempotence_tolerance: 0.05,
            upper_constant: 1.0,
            q_invariant_dims: (2..=9).collect(),
            q_invariant_restarts: 8,
            q_invariant_rtol: 0.01,
            sigma_dims: vec![2, 4, 8],
            sigma_directions: 8,
            sigma_samples: 100_000,
        }
    }
}

impl Default for MultipliersConfig {
    fn default() -> Self {
        MultipliersConfig {
            oracle_dims: (1..=8).collect(),
            oracle_xi_per_dim: 25,
            oracle_samples: 1_000_000,
            oracle_xi_range: [0.1, 10.0],
            bound_bodies: strings(&["qball:1", "qball:2", "qball:inf", "ellipsoid:schedule"]),
            bound_dims: (2..=8).collect(),
            bound_xi: 1000,
            bound_samples: 20_000,
            bound_xi_range: [0.01, 100.0],
            section_bodies: strings(&["qball:1", "qball:2", "qball:inf", "ellipsoid:schedule"]),
            section_dims: vec![2, 4, 8],
            section_directions: 3,
            section_points: 8,
            section_samples: 200_000,
            symbol_points: 10_000,
            symbol_log2_range: [-10.0, 10.0],
            symbol_tolerance: 1e-9,
            dirichlet_dims: vec![1, 2, 3],
            dirichlet_n_max: 20,
            dirichlet_xi: 100,
            dirichlet_tolerance: 1e-12,
        }
    }
}

impl Default for GridopsConfig {
    fn default() -> Self {
        GridopsConfig {
            rm_trials: 10_000,
            rm_levels: (1..=10).collect(),
            axiom_spacing: [0.01, 0.1],
            semigroup_tolerance: 1e-12,
            telescoping_tolerance: 1e-12,
            poisson_l: None,
            domination_spacing: [0.02, 0.1],
            domination_subdivisions: 4,
            spherical_directions: 64,
            decomposition_subdivisions: 8,
        }
    }
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig {
            cap: crate::lattice::DEFAULT_CAP,
            lemma61_dims: vec![1, 2, 3, 4],
            lemma61_n_max: 25,
            lemma61_low_dims: vec![1, 2],
            lemma61_low_n_max: 200,
            lemma61_c: 1.0,
            tail_dims: (2..=10).collect(),
            tail_directions: 4,
            tail_s: vec![0.0, 0.25, 0.5, 1.0, 1.5],
            tail_samples: 100_000,
            lemma62_cases: vec![[2.0, 2.0, 1.0, 1.0], [2.0, 8.0, 2.0, 1.0], [3.0, 6.0, 1.0, 1.0]],
            lemma62_samples: 50_000,
            lemma63_dims: vec![1, 2],
            lemma63_multiples: vec![1.0, 1.5, 2.0],
            chain_dims: vec![1, 2],
            chain_inputs: 20,
            chain_atoms: 6,
            chain_window: 40,
            axiom_inputs: 100,
        }
    }
}

impl Default for TrendsConfig {
    fn default() -> Self {
        TrendsConfig {
            ellipsoid_dims: vec![2, 4, 8, 16],
            ellipsoid_p: 2.0,
            ellipsoid_t: vec![1.0, 2.0],
            ellipsoid_budget: 150,
            weak11_dims: vec![1, 2, 3],
            weak11_t: vec![1.0, 2.0, 4.0],
            weak11_budget: 10_000,
            conjectural_bodies: strings(&["qball:inf", "qball:2"]),
            conjectural_dims: vec![1, 2, 3],
            conjectural_n_max: 16,
            conjectural_xi: 40,
        }
    }
}

impl SuiteConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SuiteConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        let t = &self.tolerance;
        if !(t.mc_sigmas >= 0.0 && t.mc_sigmas.is_finite()) {
            return bad("tolerance.mc_sigmas must be a nonnegative number");
        }
        if !(t.exact >= 0.0) {
            return bad("tolerance.exact must be nonnegative");
        }
        if self.multipliers.oracle_samples < 2 || self.multipliers.bound_samples < 2 {
            return bad("multiplier sample counts must be at least 2");
        }
        for r in [self.multipliers.oracle_xi_range, self.multipliers.bound_xi_range] {
            if !(r[0] > 0.0 && r[1] >= r[0]) {
                return bad("xi ranges must satisfy 0 < lo <= hi");
            }
        }
        if self.gridops.decomposition_subdivisions == 0 || !self.gridops.decomposition_subdivisions.is_power_of_two() {
            return bad("gridops.decomposition_subdivisions must be a power of two");
        }
        if self.gridops.rm_levels.iter().any(|l| *l > 20) {
            return bad("gridops.rm_levels must be at most 20");
        }
        if self.trends.ellipsoid_p <= 1.0 {
            return bad("trends.ellipsoid_p must exceed 1");
        }
        Ok(())
    }

    /// Factor applied to Monte Carlo slack computed at three standard errors.
    pub fn mc_factor(&self) -> f64 {
        self.tolerance.mc_sigmas / 3.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let c = SuiteConfig::default();
        assert_eq!(SuiteConfig::from_toml(&c.to_toml()).unwrap(), c);
        let partial = SuiteConfig::from_toml("seed = 5\n[tolerance]\nmc_sigmas = 0.0\n").unwrap();
        assert_eq!(partial.seed, 5);
        assert_eq!(partial.mc_factor(), 0.0);
        assert_eq!(partial.lattice, LatticeConfig::default());
    }

    #[test]
    fn errors() {
        assert!(matches!(SuiteConfig::from_toml("seed = "), Err(Error::Config(_))));
        assert!(matches!(SuiteConfig::from_toml("sed = 1"), Err(Error::Config(_))));
        assert!(SuiteConfig::from_toml("[tolerance]\nmc_sigmas = -1.0").is_err());
        assert!(SuiteConfig::from_toml("[gridops]\ndecomposition_subdivisions = 6").is_err());
    }
}
