use crate::domain::{ExpectationBounds, NoiseConfig};
use crate::error::Result;

use super::normal::std_normal_quantile;
use super::require_multinomial;

/// `σ·Φ⁻¹(e0)` when the top-class lower bound exceeds one half, else 0.
///
/// Only the lower bound on the top class enters; the runner-up bound is
/// ignored. Defined for multinomial expectations only.
pub fn certify_cohen(bounds: &ExpectationBounds, noise: &NoiseConfig) -> Result<f64> {
    require_multinomial(bounds)?;
    let e0 = bounds.e0();
    if e0 <= 0.5 {
        return Ok(0.0);
    }
    Ok(noise.sigma() * std_normal_quantile(e0)?)
}
