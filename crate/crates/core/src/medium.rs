//! Per-compartment physical parameters.

use crate::acoustic::AcousticMedium;
use crate::fresnel::EmMedium;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaveKind {
    Em,
    Acoustic,
}

impl WaveKind {
    pub fn name(&self) -> &'static str {
        match self {
            WaveKind::Em => "em",
            WaveKind::Acoustic => "acoustic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "em" => Some(WaveKind::Em),
            "acoustic" => Some(WaveKind::Acoustic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Medium {
    /// Dielectric, optionally with a third-order susceptibility (m^2/V^2).
    Em {
        medium: EmMedium,
        chi3: Option<f64>,
    },
    Acoustic(AcousticMedium),
}

impl Medium {
    pub fn wave_kind(&self) -> WaveKind {
        match self {
            Medium::Em { .. } => WaveKind::Em,
            Medium::Acoustic(_) => WaveKind::Acoustic,
        }
    }

    /// Refractive index for EM media, characteristic impedance for acoustic ones.
    pub fn contrast_parameter(&self) -> f64 {
        match self {
            Medium::Em { medium, .. } => medium.index,
            Medium::Acoustic(m) => m.impedance,
        }
    }
}
