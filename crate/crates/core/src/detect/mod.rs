//! Forward synthesis of field traces along rays and the detection criteria
//! that locate interfaces and vertices from them.
//!
//! Interface detection compares amplitude (EM) or intensity (acoustic) ratios
//! across adjacent samples with the coefficients of candidate media pairs.
//! Vertex detection fits coupled-mode, coupler-cascade or exponential-gain
//! models to traces gathered near a candidate corner.

mod interface;
mod synth;
mod vertex;

pub use interface::{detect_interfaces_acoustic, detect_interfaces_em, InterfaceHit};
pub use synth::synthesize_ray_trace;

pub use vertex::{
    detect_vertex_cascade, detect_vertex_coupled_mode, detect_vertex_fwm, fit_coupled_modes,
    fit_stage, CascadeFit, CoupledModeFit, StageFit, VertexCriterion, VertexVerdict,
    COUPLED_MODE_EVAL_BUDGET,
};

use num_complex::Complex64;
use thiserror::Error;

use crate::acoustic::{AcousticError, CoefficientVariant};
use crate::coupled_mode::CoupledModeError;
use crate::fresnel::FresnelError;
use crate::fwm::FwmError;
use crate::geometry::MediumId;
use crate::medium::WaveKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("invalid ray: {0}")]
    InvalidRay(String),
    #[error("ray leaves the complex near z = {0}")]
    RayOutsideComplex(f64),
    #[error(
        "ray crosses facet {facet:?} at z = {z} with |cos| = {cosine}, not at normal incidence"
    )]
    ObliqueCrossing {
        facet: Vec<usize>,
        z: f64,
        cosine: f64,
    },
    #[error("ray passes through a lower-dimensional face near z = {0}")]
    DegenerateCrossing(f64),
    #[error("simplex {0} has no medium")]
    MissingMedium(usize),
    #[error("medium {0} is not defined")]
    UnknownMedium(usize),
    #[error("scenario mixes EM and acoustic media")]
    MixedWaveKinds,
    #[error("expected a {expected} trace, got {got}")]
    WrongWaveKind {
        expected: &'static str,
        got: &'static str,
    },
    #[error("window holds {got} samples, need at least {min}")]
    WindowTooSmall { got: usize, min: usize },
    #[error("traces do not share a sample grid")]
    GridMismatch,
    #[error("need at least 2 traces, got {0}")]
    TooFewTraces(usize),
    #[error("amplitude at sample {0} is not positive")]
    NonPositiveAmplitude(usize),
    #[error(transparent)]
    Fresnel(#[from] FresnelError),
    #[error(transparent)]
    Acoustic(#[from] AcousticError),
    #[error(transparent)]
    Cascade(#[from] CoupledModeError),
    #[error(transparent)]
    Fwm(#[from] FwmError),
}

/// Straight probe ray with a uniform sample grid `z_k = k * grid_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    origin: Vec<f64>,
    direction: Vec<f64>,
    length: f64,
    grid_step: f64,
}

impl Ray {
    /// The direction is normalized; it only has to be non-zero.
    pub fn new(
        origin: Vec<f64>,
        direction: Vec<f64>,
        length: f64,
        grid_step: f64,
    ) -> Result<Self, DetectError> {
        if origin.len() != direction.len() || origin.is_empty() {
            return Err(DetectError::InvalidRay(
                "origin and direction must have the same non-zero dimension".into(),
            ));
        }
        let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(DetectError::InvalidRay("direction must be non-zero".into()));
        }
        if !(grid_step > 0.0 && grid_step.is_finite()) {
            return Err(DetectError::InvalidRay("grid_step must be positive".into()));
        }
        if !(length >= grid_step && length.is_finite()) {
            return Err(DetectError::InvalidRay(
                "length must be at least grid_step".into(),
            ));
        }
        // already-unit directions pass through untouched so that a ray
        // rebuilt from its own accessors compares equal
        let direction = if (norm - 1.0).abs() <= 1e-12 {
            direction
        } else {
            direction.into_iter().map(|d| d / norm).collect()
        };
        Ok(Self {
            origin,
            direction,
            length,
            grid_step,
        })
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn sample_count(&self) -> usize {
        (self.length / self.grid_step + 1e-9).floor() as usize + 1
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.sample_count())
            .map(|k| k as f64 * self.grid_step)
            .collect()
    }

    pub fn point_at(&self, z: f64) -> Vec<f64> {
        self.origin
            .iter()
            .zip(&self.direction)
            .map(|(o, d)| o + z * d)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub z: f64,
    pub incident: Complex64,
    pub reflected: Complex64,
    pub medium: MediumId,
}

/// Sampled wave values along one ray.
///
/// For interface detection the two channels are the incident and reflected
/// field amplitudes (EM) or intensities (acoustic). Vertex detectors read the
/// same channels as mode amplitudes: `a(z)` from `incident` for coupled-mode
/// fits, and the two-mode port state `(incident, reflected)` for cascades.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrace {
    pub ray_id: usize,
    pub ray: Ray,
    pub wave_kind: WaveKind,
    pub samples: Vec<TraceSample>,
}

impl FieldTrace {
    /// Wraps externally computed values on the grid `z` as a trace along the
    /// first coordinate axis. `z` must be uniformly spaced from its first value.
    pub fn from_values(
        ray_id: usize,
        wave_kind: WaveKind,
        z: &[f64],
        incident: &[Complex64],
        reflected: &[Complex64],
    ) -> Result<Self, DetectError> {
        if z.len() < 2 || incident.len() != z.len() || reflected.len() != z.len() {
            return Err(DetectError::InvalidRay(
                "need at least two samples with matching channel lengths".into(),
            ));
        }
        let step = z[1] - z[0];
        let ray = Ray::new(vec![z[0]], vec![1.0], z[z.len() - 1] - z[0], step)?;
        let samples = z
            .iter()
            .zip(incident.iter().zip(reflected))
            .map(|(&z, (&incident, &reflected))| TraceSample {
                z,
                incident,
                reflected,
                medium: MediumId(0),
            })
            .collect();
        Ok(Self {
            ray_id,
            ray,
            wave_kind,
            samples,
        })
    }

    fn expect_kind(&self, kind: WaveKind) -> Result<(), DetectError> {
        if self.wave_kind == kind {
            Ok(())
        } else {
            Err(DetectError::WrongWaveKind {
                expected: kind.name(),
                got: self.wave_kind.name(),
            })
        }
    }
}

/// Knobs shared by the detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionParams {
    /// Relative tolerance for coefficient matches and fit residuals.
    pub tol: f64,
    /// Lower bound on `|r|` when scaling the reflection tolerance.
    pub tol_floor: f64,
    /// Multiplicative noise level used when the traces were synthesized.
    pub noise_sigma: f64,
    pub seed: u64,
    pub variant: CoefficientVariant,
    /// Coupling magnitude below which a coupled-mode fit counts as decoupled.
    pub kappa_min: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            tol_floor: 1e-3,
            noise_sigma: 0.0,
            seed: 0,
            variant: CoefficientVariant::EnergyConserving,
            kappa_min: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexHit {
    pub position: Vec<f64>,
    pub criterion: VertexCriterion,
    pub residual: f64,
    pub degenerate: bool,
    /// Fitted values, laid out as in [`VertexVerdict::parameters`].
    pub parameters: Vec<f64>,
}

/// Everything a detection run found, plus the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub interface_hits: Vec<InterfaceHit>,
    pub vertex_hits: Vec<VertexHit>,
    pub params: DetectionParams,
}

impl DetectionReport {
    pub fn new(params: DetectionParams) -> Self {
        Self {
            interface_hits: Vec::new(),
            vertex_hits: Vec::new(),
            params,
        }
    }

    /// Orders hits by ray id, then position along the ray.
    pub fn sort(&mut self) {
        self.interface_hits
            .sort_by(|a, b| a.ray_id.cmp(&b.ray_id).then(a.z.total_cmp(&b.z)));
    }
}
