//! Maximum over a set of mechanisms evaluated on the same expectation
//! bounds.
//!
//! The bounds are shared by every constituent, so no extra confidence
//! budget is spent: each mechanism is a deterministic function of the same
//! worst-case expectations.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::domain::{CertificationOutcome, ExpectationBounds, ExpectationMode, NoiseConfig};
use crate::error::{Error, Result};
use crate::mechanisms::{certify, MechanismId, OptimizerSettings};

/// Which mechanisms take part, for which expectation mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleConfig {
    enabled: BTreeSet<MechanismId>,
    mode: ExpectationMode,
}

impl EnsembleConfig {
    pub fn new(mode: ExpectationMode, enabled: impl IntoIterator<Item = MechanismId>) -> Result<Self> {
        let enabled: BTreeSet<MechanismId> = enabled.into_iter().collect();
        if enabled.is_empty() {
            return Err(Error::invalid("ensemble", "no mechanisms enabled"));
        }
        if let Some(bad) = enabled.iter().find(|m| !m.supports(mode)) {
            return Err(Error::invalid(
                "ensemble",
                format!("{bad} cannot certify {mode} expectations"),
            ));
        }
        Ok(EnsembleConfig { enabled, mode })
    }

    /// Every mechanism applicable to `mode`.
    pub fn all(mode: ExpectationMode) -> Self {
        EnsembleConfig {
            enabled: MechanismId::all_for(mode).into_iter().collect(),
            mode,
        }
    }

    pub fn mode(&self) -> ExpectationMode {
        self.mode
    }

    pub fn enabled(&self) -> impl Iterator<Item = MechanismId> + '_ {
        self.enabled.iter().copied()
    }

    pub fn contains(&self, id: MechanismId) -> bool {
        self.enabled.contains(&id)
    }
}

/// Certify one set of bounds with every enabled mechanism.
pub fn certify_ensemble(
    bounds: &ExpectationBounds,
    noise: &NoiseConfig,
    cfg: &EnsembleConfig,
    opt: &OptimizerSettings,
) -> Result<CertificationOutcome> {
    if bounds.mode() != cfg.mode() {
        return Err(Error::ModeMismatch {
            expected: cfg.mode(),
            found: bounds.mode(),
        });
    }
    let ids: Vec<MechanismId> = cfg.enabled().collect();
    let radii: Vec<(MechanismId, f64)> = ids
        .par_iter()
        .map(|&id| certify(id, bounds, noise, opt).map(|r| (id, r)))
        .collect::<Result<_>>()?;
    let mut slots = [None; 4];
    for (id, r) in radii {
        slots[id.index()] = Some(r);
    }
    CertificationOutcome::new(bounds.predicted_class(), slots)
}
