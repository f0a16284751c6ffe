use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic plane-stress material with Rayleigh damping `C = alpha M + beta K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Young's modulus, N/m^2.
    pub e: f64,
    pub nu: f64,
    /// Density, kg/m^3.
    pub rho: f64,
    /// Thickness, m.
    pub t: f64,
    /// Mass-proportional damping, 1/s.
    pub alpha: f64,
    /// Stiffness-proportional damping, s.
    pub beta: f64,
}

impl Material {
    /// Steel plate used in all experiments.
    pub fn steel_plate() -> Self {
        Material {
            e: 2.1e11,
            nu: 0.3,
            rho: 7860.0,
            t: 0.01,
            alpha: 8.0,
            beta: 8e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.e > 0.0
            && (0.0..0.5).contains(&self.nu)
            && self.rho > 0.0
            && self.t > 0.0
            && self.alpha >= 0.0
            && self.beta >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid material {self:?}")))
        }
    }
}

impl Default for Material {
    fn default() -> Self {
        Self::steel_plate()
    }
}
