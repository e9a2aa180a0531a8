//! Run configuration. One flat JSON file; command-line flags override keys.

use std::path::Path;

use gdrb::analysis::FitOptions;
use gdrb::chanalg::OperatorVec;
use gdrb::groups::GroupKind;
use gdrb::noise::NoiseSpec;
use gdrb::rbsim::default_m_list;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_group")]
    pub group: GroupKind,
    #[serde(default = "default_noise")]
    pub noise: NoiseSpec,
    #[serde(default = "default_m_list")]
    pub m_list: Vec<usize>,
    #[serde(default = "default_n_seq")]
    pub n_seq: usize,
    #[serde(default)]
    pub seed: u64,
    /// Bloch vector of the prepared state.
    #[serde(default = "ground_bloch")]
    pub rho: [f64; 3],
    /// Bloch vector of the measured projector.
    #[serde(default = "ground_bloch")]
    pub q: [f64; 3],
    #[serde(default)]
    pub fit: FitOptions,
    /// Lengths enumerated by `bruteforce`.
    #[serde(default = "default_bruteforce_m")]
    pub bruteforce_m: Vec<usize>,
    #[serde(default = "default_experiments")]
    pub experiments: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Lengths with `0.5 p^m` below this are dropped per experiment; `null`
    /// keeps the whole grid.
    #[serde(default = "default_tail_cap")]
    pub tail_cap: Option<f64>,
    #[serde(default = "default_r_grid")]
    pub r_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn default_group() -> GroupKind {
    GroupKind::TPauli
}

/// Unseeded: the noise seed is then derived from the run seed.
fn default_noise() -> NoiseSpec {
    NoiseSpec { seed: None, ..NoiseSpec::random_unitary(1e-3, 0) }
}

fn default_n_seq() -> usize {
    100
}

fn ground_bloch() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_bruteforce_m() -> Vec<usize> {
    vec![1, 2, 3]
}

fn default_experiments() -> usize {
    20
}

fn default_level() -> f64 {
    0.9
}

fn default_tail_cap() -> Option<f64> {
    Some(1e-3)
}

fn default_r_grid() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2]
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all keys have defaults")
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg: RunConfig = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("reading config {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Validation(format!("config {}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Validation(format!("config: {msg}")));
        if self.group == GroupKind::Custom {
            return bad("group must be \"t_pauli\" or \"clifford\"".into());
        }
        if self.m_list.is_empty() || self.m_list.contains(&0) {
            return bad("m_list must be non-empty with positive entries".into());
        }
        if self.n_seq < 2 {
            return bad(format!("n_seq = {} (need at least 2)", self.n_seq));
        }
        for (name, n) in [("rho", self.rho), ("q", self.q)] {
            let len = n.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !n.iter().all(|x| x.is_finite()) || len > 1.0 + 1e-12 {
                return bad(format!("{name} Bloch vector {n:?} is not a valid state"));
            }
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level = {} outside (0, 1)", self.level));
        }
        if self.r_grid.iter().any(|r| !(*r > 0.0 && *r <= 2.0 / 3.0)) {
            return bad("r_grid entries must lie in (0, 2/3]".into());
        }
        Ok(())
    }

    pub fn rho_vec(&self) -> OperatorVec {
        bloch_state(self.rho)
    }

    pub fn q_vec(&self) -> OperatorVec {
        bloch_state(self.q)
    }
}

/// `(I + n.sigma)/2`; mixed when `|n| < 1`.
fn bloch_state(n: [f64; 3]) -> OperatorVec {
    OperatorVec::qubit_pure_state(n)
}
