use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialKind {
    /// Small-strain isotropic linear elasticity.
    Linear,
    /// St. Venant–Kirchhoff hyperelasticity (Green–Lagrange strain).
    StVenantKirchhoff,
}

/// Isotropic elastic constitutive law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialModel {
    pub kind: MaterialKind,
    /// Young modulus in Pa.
    pub young_modulus: f64,
    pub poisson_ratio: f64,
}

impl MaterialModel {
    pub fn new(kind: MaterialKind, young_modulus: f64, poisson_ratio: f64) -> Result<Self> {
        let m = MaterialModel {
            kind,
            young_modulus,
            poisson_ratio,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn linear(young_modulus: f64, poisson_ratio: f64) -> Result<Self> {
        Self::new(MaterialKind::Linear, young_modulus, poisson_ratio)
    }

    pub fn st_venant_kirchhoff(young_modulus: f64, poisson_ratio: f64) -> Result<Self> {
        Self::new(MaterialKind::StVenantKirchhoff, young_modulus, poisson_ratio)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.young_modulus > 0.0 && self.young_modulus.is_finite()) {
            return Err(Error::Config(format!(
                "Young modulus must be positive, got {}",
                self.young_modulus
            )));
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return Err(Error::Config(format!(
                "Poisson ratio must lie in (0, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        Ok(())
    }

    /// Lamé parameters `(lambda, mu)`.
    pub fn lame_parameters(&self) -> (f64, f64) {
        lame_parameters(self.young_modulus, self.poisson_ratio)
    }
}

/// `(lambda, mu)` from Young modulus and Poisson ratio.
pub fn lame_parameters(young_modulus: f64, poisson_ratio: f64) -> (f64, f64) {
    let (e, nu) = (young_modulus, poisson_ratio);
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    (lambda, mu)
}
