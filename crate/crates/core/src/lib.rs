//! Certified ℓ2 robustness radii for randomized smoothing.
//!
//! Bounds on the top two smoothed class expectations go in; radii from four
//! mechanisms and their maximum come out. Around that core sit confidence
//! bounds for counts and softmax scores, seeded simulation, simplex sweeps
//! and dataset-level metrics.
//!
//! ```
//! use smoothcert::ensemble::{certify_ensemble, EnsembleConfig};
//! use smoothcert::{make_bounds, ExpectationMode, NoiseConfig, OptimizerSettings};
//!
//! let bounds = make_bounds(0.9, 0.05, ExpectationMode::Multinomial)?;
//! let cfg = EnsembleConfig::all(ExpectationMode::Multinomial);
//! let out = certify_ensemble(&bounds, &NoiseConfig::new(1.0)?, &cfg, &OptimizerSettings::default())?;
//! assert!(out.radius_ensemble() > 1.28);
//! # Ok::<(), smoothcert::Error>(())
//! ```

pub mod analysis;
pub mod cli;
pub mod confidence;
pub mod domain;
pub mod ensemble;
pub mod error;
pub mod mechanisms;
pub mod simulate;

pub use domain::{make_bounds, CertificationOutcome, ExpectationBounds, ExpectationMode, NoiseConfig, SimplexPoint};
pub use error::{Error, Result};
pub use mechanisms::{MechanismId, OptimizerSettings};
