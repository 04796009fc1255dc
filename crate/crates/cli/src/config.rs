//! Experiment configuration. Unknown keys are rejected at every level.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Identity,
    ManufacturedUnipotent,
    ScalarExponential,
    MatrixExponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Factorization,
    Schlesinger,
    Integrability,
    Bridge,
}

/// A scalar or a list; lists drive convergence sweeps.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v.clone()],
            Self::Many(v) => v.clone(),
        }
    }
}

/// One Fourier mode `Q_k ξ^k` of the exponent of a matrix-exponential loop.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: i64,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    /// Coefficient of `ξ^{-1}` in the scalar exponent.
    pub alpha: Option<f64>,
    /// Coefficient of `ξ` in the scalar exponent.
    pub beta: Option<f64>,
    #[serde(default)]
    pub modes: Vec<Mode>,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDiffeo {
    pub amplitude: f64,
    pub modes: usize,
}

/// Displacement `d(θ) = Σ cos[k] cos kθ + sin[k] sin kθ`, or a seeded random one.
#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DiffeoSpec {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
    pub random: Option<RandomDiffeo>,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub factorization: f64,
    pub jump: f64,
    pub schlesinger: f64,
    pub isomonodromy: f64,
    pub integrability: f64,
    pub virasoro: f64,
    pub bridge: f64,
    /// Allowed deviation of a fitted convergence order from 2.
    pub order: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            factorization: 1e-10,
            jump: 1e-8,
            schlesinger: 1e-6,
            isomonodromy: 1e-7,
            integrability: 1e-6,
            virasoro: 1e-5,
            bridge: 1e-12,
            order: 0.3,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            factorization: self.factorization * s,
            jump: self.jump * s,
            schlesinger: self.schlesinger * s,
            isomonodromy: self.isomonodromy * s,
            integrability: self.integrability * s,
            virasoro: self.virasoro * s,
            bridge: self.bridge * s,
            order: self.order,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    #[serde(default)]
    pub family_params: FamilyParams,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: OneOrMany<usize>,
    #[serde(rename = "N_B")]
    pub n_b: usize,
    pub h: OneOrMany<f64>,
    pub m_max: usize,
    pub n_max: usize,
    #[serde(default)]
    pub probes: Vec<[f64; 2]>,
    #[serde(default)]
    pub diffeo: DiffeoSpec,
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn cutoffs(&self) -> Vec<usize> {
        self.m.values()
    }

    pub fn steps(&self) -> Vec<f64> {
        self.h.values()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n == 0 {
            return bad("N must be positive".into());
        }
        let ms = self.cutoffs();
        if ms.is_empty() || ms.contains(&0) {
            return bad("M must be a nonempty list of positive cutoffs".into());
        }
        if let Some(m) = ms.iter().find(|&&m| self.n_b + 1 > m) {
            return bad(format!("N_B = {} needs M >= N_B + 1, got M = {m}", self.n_b));
        }
        let hs = self.steps();
        if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return bad("h must be a nonempty list of positive steps".into());
        }
        if 2 * self.m_max > self.n_b || 2 * self.n_max > self.n_b {
            return bad(format!("index window (m_max, n_max) = ({}, {}) exceeds N_B/2", self.m_max, self.n_max));
        }
        if self.suites.is_empty() {
            return bad("no suites selected".into());
        }
        for p in &self.probes {
            let r = p[0].hypot(p[1]);
            if !r.is_finite() || (0.9..=1.1).contains(&r) {
                return bad(format!("probe ({}, {}) is within 0.1 of the unit circle", p[0], p[1]));
            }
        }
        match self.family {
            Family::ManufacturedUnipotent if self.n != 2 => return bad("manufactured-unipotent needs N = 2".into()),
            Family::ScalarExponential if self.n != 1 => return bad("scalar-exponential needs N = 1".into()),
            Family::ScalarExponential if self.family_params.alpha.is_none() || self.family_params.beta.is_none() => {
                return bad("scalar-exponential needs family_params.alpha and family_params.beta".into())
            }
            Family::MatrixExponential if self.family_params.modes.is_empty() => {
                return bad("matrix-exponential needs family_params.modes".into())
            }
            _ => {}
        }
        for mode in &self.family_params.modes {
            let square = |rows: &Vec<Vec<f64>>| rows.len() == self.n && rows.iter().all(|r| r.len() == self.n);
            if !square(&mode.re) || mode.im.as_ref().is_some_and(|im| !square(im)) {
                return bad(format!("mode {} is not an N×N matrix", mode.k));
            }
        }
        if let Some(r) = &self.diffeo.random {
            if r.modes == 0 || !(r.amplitude >= 0.0) {
                return bad("diffeo.random needs modes >= 1 and amplitude >= 0".into());
            }
        }
        if !self.diffeo.sin.is_empty() && self.diffeo.sin[0] != 0.0 {
            return bad("diffeo.sin[0] must be 0".into());
        }
        Ok(())
    }
}
