//! Scenario files.
//!
//! A scenario is TOML with a `[geometry]` table, one `[[media]]` entry per
//! material (its position in the list is its medium id), any number of
//! `[[rays]]`, an optional `[detection]` table and optional
//! `[[vertex_probes]]`:
//!
//! ```toml
//! [geometry]
//! dimension = 1
//! vertices = [[0.0], [1.0], [2.0]]
//! simplices = [[0, 1], [1, 2]]
//!
//! [[media]]
//! kind = "em"
//! index = 1.0
//! simplices = [0]
//!
//! [[media]]
//! kind = "em"
//! index = 1.5
//! simplices = [1]
//!
//! [[rays]]
//! origin = [0.0]
//! direction = [1.0]
//! length = 1.99
//! grid_step = 0.01
//!
//! [detection]
//! tol = 1e-6
//! candidates = [[1.0, 1.5]]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::acoustic::{AcousticError, AcousticMedium, CoefficientVariant};
use crate::detect::{DetectionParams, Ray, VertexCriterion};
use crate::fresnel::{EmMedium, FresnelError};
use crate::geometry::{GeometryError, MediumId, SimplicialComplex};
use crate::medium::{Medium, WaveKind};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("geometry: {0}")]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    geometry: RawGeometry,
    #[serde(default)]
    media: Vec<RawMedium>,
    #[serde(default)]
    rays: Vec<RawRay>,
    #[serde(default)]
    detection: RawDetection,
    #[serde(default)]
    vertex_probes: Vec<RawProbe>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    dimension: usize,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMedium {
    kind: String,
    index: Option<f64>,
    chi3: Option<f64>,
    impedance: Option<f64>,
    density: Option<f64>,
    sound_speed: Option<f64>,
    simplices: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRay {
    origin: Vec<f64>,
    direction: Vec<f64>,
    length: f64,
    grid_step: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetection {
    tol: Option<f64>,
    tol_floor: Option<f64>,
    noise: Option<f64>,
    seed: Option<u64>,
    paper_exact: Option<bool>,
    kappa_min: Option<f64>,
    candidates: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbe {
    criterion: String,
    vertex: usize,
    rays: Vec<usize>,
    window: Option<f64>,
}

/// A vertex test to run on already synthesized traces.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexProbe {
    pub criterion: VertexCriterion,
    pub vertex: usize,
    /// Trace ids, in the order the criterion consumes them.
    pub rays: Vec<usize>,
    /// Window length from the start of each trace; whole trace when absent.
    pub window: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub complex: SimplicialComplex,
    /// Indexed by `MediumId`.
    pub media: Vec<Medium>,
    pub wave_kind: WaveKind,
    pub rays: Vec<Ray>,
    pub params: DetectionParams,
    /// `(n1, n2)` or `(Z1, Z2)` pairs tested at every sample pair.
    pub candidates: Vec<(f64, f64)>,
    pub probes: Vec<VertexProbe>,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawScenario =
            toml::from_str(text).map_err(|e| ConfigError::Parse(locate(text, &e)))?;
        let invalid = |m: String| ConfigError::Invalid(m);

        let mut assignment = BTreeMap::new();
        let mut media = Vec::with_capacity(raw.media.len());
        for (id, m) in raw.media.iter().enumerate() {
            media.push(build_medium(m).map_err(|e| invalid(format!("media[{id}]: {e}")))?);
            for &s in &m.simplices {
                if assignment.insert(s, MediumId(id)).is_some() {
                    return Err(invalid(format!(
                        "simplex {s} is assigned more than one medium"
                    )));
                }
            }
        }
        let wave_kind = match media.first() {
            Some(m) => m.wave_kind(),
            None => return Err(invalid("at least one medium is required".into())),
        };
        if media.iter().any(|m| m.wave_kind() != wave_kind) {
            return Err(invalid("media mix em and acoustic kinds".into()));
        }

        let g = raw.geometry;
        let complex = SimplicialComplex::build(g.dimension, g.vertices, g.simplices, assignment)?;

        let rays = raw
            .rays
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                Ray::new(r.origin, r.direction, r.length, r.grid_step)
                    .map_err(|e| invalid(format!("rays[{i}]: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let d = raw.detection;
        let defaults = DetectionParams::default();
        let params = DetectionParams {
            tol: d.tol.unwrap_or(defaults.tol),
            tol_floor: d.tol_floor.unwrap_or(defaults.tol_floor),
            noise_sigma: d.noise.unwrap_or(defaults.noise_sigma),
            seed: d.seed.unwrap_or(defaults.seed),
            variant: CoefficientVariant::from_flag(d.paper_exact.unwrap_or(false)),
            kappa_min: d.kappa_min.unwrap_or(defaults.kappa_min),
        };
        validate_params(&params).map_err(invalid)?;
        let candidates = match d.candidates {
            Some(list) => list.into_iter().map(|[a, b]| (a, b)).collect(),
            None => default_candidates(&media),
        };

        let probes = raw
            .vertex_probes
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let criterion = VertexCriterion::parse(&p.criterion).ok_or_else(|| {
                    invalid(format!(
                        "vertex_probes[{i}]: unknown criterion {:?}; expected coupled_mode, cascade or fwm",
                        p.criterion
                    ))
                })?;
                if p.vertex >= complex.vertices().len() {
                    return Err(invalid(format!("vertex_probes[{i}]: vertex {} does not exist", p.vertex)));
                }
                let want = match criterion {
                    VertexCriterion::CoupledMode => Some(2),
                    VertexCriterion::Fwm => Some(1),
                    VertexCriterion::Cascade => None,
                };
                let count_ok = match want {
                    Some(n) => p.rays.len() == n,
                    None => p.rays.len() >= 2,
                };
                if !count_ok {
                    return Err(invalid(format!(
                        "vertex_probes[{i}]: {} takes {} rays, got {}",
                        criterion.name(),
                        want.map_or("at least 2".to_string(), |n| n.to_string()),
                        p.rays.len()
                    )));
                }
                Ok(VertexProbe {
                    criterion,
                    vertex: p.vertex,
                    rays: p.rays,
                    window: p.window,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Self {
            complex,
            media,
            wave_kind,
            rays,
            params,
            candidates,
            probes,
        })
    }
}

fn build_medium(m: &RawMedium) -> Result<Medium, String> {
    let kind = WaveKind::parse(&m.kind)
        .ok_or_else(|| format!("unknown kind {:?}; expected em or acoustic", m.kind))?;
    match kind {
        WaveKind::Em => {
            if m.impedance.is_some() || m.density.is_some() || m.sound_speed.is_some() {
                return Err("em media take index and chi3 only".into());
            }
            let n = m.index.ok_or("em media need an index")?;
            let medium = EmMedium::new(n).map_err(|e: FresnelError| e.to_string())?;
            Ok(Medium::Em {
                medium,
                chi3: m.chi3,
            })
        }
        WaveKind::Acoustic => {
            if m.index.is_some() || m.chi3.is_some() {
                return Err("acoustic media take impedance, density and sound_speed only".into());
            }
            let speed = m.sound_speed.ok_or("acoustic media need a sound_speed")?;
            let built = match (m.impedance, m.density) {
                (Some(z), None) => AcousticMedium::new(z, speed),
                (None, Some(rho)) => AcousticMedium::fluid(rho, speed),
                (Some(z), Some(rho)) => AcousticMedium::with_density(z, speed, rho),
                (None, None) => return Err("acoustic media need an impedance or a density".into()),
            };
            built
                .map(Medium::Acoustic)
                .map_err(|e: AcousticError| e.to_string())
        }
    }
}

fn validate_params(p: &DetectionParams) -> Result<(), String> {
    if !(p.tol > 0.0 && p.tol.is_finite()) {
        return Err("detection.tol must be positive".into());
    }
    if !(p.tol_floor > 0.0 && p.tol_floor.is_finite()) {
        return Err("detection.tol_floor must be positive".into());
    }
    if !(p.noise_sigma >= 0.0 && p.noise_sigma.is_finite()) {
        return Err("detection.noise must be non-negative".into());
    }
    if !(p.kappa_min >= 0.0 && p.kappa_min.is_finite()) {
        return Err("detection.kappa_min must be non-negative".into());
    }
    Ok(())
}

/// Every ordered pair of distinct contrast parameters present in the scenario.
pub fn default_candidates(media: &[Medium]) -> Vec<(f64, f64)> {
    let mut values: Vec<f64> = media.iter().map(Medium::contrast_parameter).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut out = Vec::new();
    for &a in &values {
        for &b in &values {
            if a != b {
                out.push((a, b));
            }
        }
    }
    out
}

/// `line L, column C: message` for a TOML error.
fn locate(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message().trim();
    match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            format!("line {line}, column {column}: {msg}")
        }
        None => msg.to_string(),
    }
}
