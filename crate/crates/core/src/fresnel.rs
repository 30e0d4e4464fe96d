//! Normal-incidence amplitude coefficients for plane EM waves at a planar
//! interface between lossless isotropic dielectrics.
//!
//! Sign convention: `r = (n1 - n2) / (n1 + n2)`, so a wave entering a denser
//! medium reflects with negative `r`. At normal incidence TE and TM
//! coefficients coincide.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FresnelError {
    #[error("refractive index must be positive and finite, got {0}")]
    NonPositiveIndex(f64),
    #[error("{name} must be positive and finite, got {value}")]
    NonPositiveMaterial { name: &'static str, value: f64 },
}

/// Isotropic dielectric. Permittivity and permeability are informational;
/// the coefficients use the refractive index only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmMedium {
    pub index: f64,
    pub permittivity: Option<f64>,
    pub permeability: Option<f64>,
}

impl EmMedium {
    pub fn new(index: f64) -> Result<Self, FresnelError> {
        check_index(index)?;
        Ok(Self {
            index,
            permittivity: None,
            permeability: None,
        })
    }

    pub fn with_material(
        index: f64,
        permittivity: f64,
        permeability: f64,
    ) -> Result<Self, FresnelError> {
        check_index(index)?;
        for (name, value) in [
            ("permittivity", permittivity),
            ("permeability", permeability),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(FresnelError::NonPositiveMaterial { name, value });
            }
        }
        Ok(Self {
            index,
            permittivity: Some(permittivity),
            permeability: Some(permeability),
        })
    }
}

/// Amplitude ratios `r = E_reflected / E_incident`, `t = E_transmitted / E_incident`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceCoefficients {
    pub r: f64,
    pub t: f64,
}

fn check_index(n: f64) -> Result<(), FresnelError> {
    if n > 0.0 && n.is_finite() {
        Ok(())
    } else {
        Err(FresnelError::NonPositiveIndex(n))
    }
}

/// Normal-incidence coefficients, identical for both polarizations.
///
/// `t` is formed as `1 + r`, which equals `2 n1 / (n1 + n2)` and makes the
/// field-continuity identity hold bit-for-bit.
pub fn amplitude_coefficients_normal(
    n1: f64,
    n2: f64,
) -> Result<InterfaceCoefficients, FresnelError> {
    check_index(n1)?;
    check_index(n2)?;
    let r = (n1 - n2) / (n1 + n2);
    Ok(InterfaceCoefficients { r, t: 1.0 + r })
}

/// Splits an incident amplitude into `(transmitted, reflected)`.
pub fn apply_interface(
    incident: Complex64,
    n1: f64,
    n2: f64,
) -> Result<(Complex64, Complex64), FresnelError> {
    let c = amplitude_coefficients_normal(n1, n2)?;
    Ok((incident * c.t, incident * c.r))
}

/// `r^2 + (n2/n1) t^2 - 1`; zero for a physical lossless pair.
pub fn energy_residual(c: &InterfaceCoefficients, n1: f64, n2: f64) -> f64 {
    c.r * c.r + (n2 / n1) * c.t * c.t - 1.0
}
