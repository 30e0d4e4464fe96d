//! Plane acoustic waves in lossless fluids: transmission-line state and
//! intensity coefficients at a fluid-fluid interface.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcousticError {
    #[error("impedance must be positive, got {0}")]
    NonPositiveImpedance(f64),
    #[error("sound speed must be positive, got {0}")]
    NonPositiveSpeed(f64),
    #[error(
        "density {density} and sound speed {speed} give impedance {expected}, not {impedance}"
    )]
    InconsistentDensity {
        impedance: f64,
        density: f64,
        speed: f64,
        expected: f64,
    },
    #[error("printed transmission formula is singular for equal impedances")]
    PaperExactSingularity,
    #[error("incident intensity must be non-negative, got {0}")]
    NegativeIntensity(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticMedium {
    /// Characteristic impedance, Pa s/m.
    pub impedance: f64,
    /// m/s.
    pub sound_speed: f64,
    /// kg/m^3.
    pub density: Option<f64>,
}

impl AcousticMedium {
    pub fn new(impedance: f64, sound_speed: f64) -> Result<Self, AcousticError> {
        if !(impedance > 0.0 && impedance.is_finite()) {
            return Err(AcousticError::NonPositiveImpedance(impedance));
        }
        if !(sound_speed > 0.0 && sound_speed.is_finite()) {
            return Err(AcousticError::NonPositiveSpeed(sound_speed));
        }
        Ok(Self {
            impedance,
            sound_speed,
            density: None,
        })
    }

    /// Requires `impedance = density * sound_speed` to 1e-9 relative.
    pub fn with_density(
        impedance: f64,
        sound_speed: f64,
        density: f64,
    ) -> Result<Self, AcousticError> {
        let mut m = Self::new(impedance, sound_speed)?;
        let expected = density * sound_speed;
        if !((expected - impedance).abs() <= 1e-9 * impedance) {
            return Err(AcousticError::InconsistentDensity {
                impedance,
                density,
                speed: sound_speed,
                expected,
            });
        }
        m.density = Some(density);
        Ok(m)
    }

    /// Fluid given by density and sound speed.
    pub fn fluid(density: f64, sound_speed: f64) -> Result<Self, AcousticError> {
        Self::with_density(density * sound_speed, sound_speed, density)
    }
}

/// Forward/backward pressure amplitudes at complex frequency `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineState {
    pub p_plus: Complex64,
    pub p_minus: Complex64,
    pub s: Complex64,
}

/// Pressure and particle velocity at `(x, t)`.
pub fn line_state(st: &LineState, m: &AcousticMedium, x: f64, t: f64) -> (f64, f64) {
    let fwd = st.p_plus * (-st.s * x / m.sound_speed).exp();
    let bwd = st.p_minus * (st.s * x / m.sound_speed).exp();
    let time = (st.s * t).exp();
    let p = ((fwd + bwd) * time).re;
    let u = ((fwd - bwd) / m.impedance * time).re;
    (p, u)
}

/// Which transmission formula to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoefficientVariant {
    /// `T = 4 z / (z + 1)^2`, so that `T + R = 1`.
    #[default]
    EnergyConserving,
    /// The printed `T = 4 z / (z - 1)^2`, singular at `z = 1`.
    PaperExact,
}

impl CoefficientVariant {
    pub fn from_flag(paper_exact: bool) -> Self {
        if paper_exact {
            Self::PaperExact
        } else {
            Self::EnergyConserving
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::EnergyConserving => "energy_conserving",
            Self::PaperExact => "paper_exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityCoefficients {
    pub transmission: f64,
    pub reflection: f64,
}

/// Intensity coefficients for a wave passing from impedance `z1` into `z2`.
pub fn intensity_coefficients(
    z1: f64,
    z2: f64,
    variant: CoefficientVariant,
) -> Result<IntensityCoefficients, AcousticError> {
    for z in [z1, z2] {
        if !(z > 0.0 && z.is_finite()) {
            return Err(AcousticError::NonPositiveImpedance(z));
        }
    }
    let ratio = z2 / z1;
    let reflection = ((ratio - 1.0) / (ratio + 1.0)).powi(2);
    let transmission = match variant {
        CoefficientVariant::EnergyConserving => 4.0 * ratio / (ratio + 1.0).powi(2),
        CoefficientVariant::PaperExact => {
            if ratio == 1.0 {
                return Err(AcousticError::PaperExactSingularity);
            }
            4.0 * ratio / (ratio - 1.0).powi(2)
        }
    };
    Ok(IntensityCoefficients {
        transmission,
        reflection,
    })
}

/// Splits an incident intensity into `(transmitted, reflected)` with the
/// energy-conserving coefficients.
pub fn apply_acoustic_interface(
    intensity: f64,
    z1: f64,
    z2: f64,
) -> Result<(f64, f64), AcousticError> {
    if !(intensity >= 0.0) {
        return Err(AcousticError::NegativeIntensity(intensity));
    }
    let c = intensity_coefficients(z1, z2, CoefficientVariant::EnergyConserving)?;
    Ok((c.transmission * intensity, c.reflection * intensity))
}
