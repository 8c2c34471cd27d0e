use serde::{Deserialize, Serialize};

use crate::feasible::{DEFAULT_EPSILON, DEFAULT_GAMMA};
use crate::numkit::SylvesterOptions;
use crate::{Error, Result};

/// Settings of the block projected gradient iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgoConfig {
    /// Step-size safety factor, `> 1`.
    pub c: f64,
    /// Constants of the `A_r`-block step bound.
    pub c1: f64,
    pub c2: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub max_iters: usize,
    /// Stop once the projected-gradient residual is at most this.
    pub stat_tol: f64,
    /// Keep per-iteration trace records.
    pub trace: bool,
    /// Double `c1`, `c2` and retry a cycle once when it increases `f`.
    pub adaptive: bool,
    /// Keep every cycle's reduced model in the outcome.
    pub keep_iterates: bool,
    #[serde(skip)]
    pub sylvester: SylvesterOptions,
}

impl Default for AlgoConfig {
    fn default() -> Self {
        Self {
            c: 1.1,
            c1: 1.0,
            c2: 1.0,
            epsilon: DEFAULT_EPSILON,
            gamma: DEFAULT_GAMMA,
            max_iters: 100,
            stat_tol: 1e-8,
            trace: true,
            adaptive: false,
            keep_iterates: false,
            sylvester: SylvesterOptions::default(),
        }
    }
}

impl AlgoConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if !(self.c > 1.0) || !self.c.is_finite() {
            return Err(Error::InvalidParameter(format!("c must exceed 1, got {}", self.c)));
        }
        positive("c1", self.c1)?;
        positive("c2", self.c2)?;
        positive("epsilon", self.epsilon)?;
        positive("gamma", self.gamma)?;
        positive("stat_tol", self.stat_tol)?;
        Ok(())
    }
}
