//! Trace and report files: CSV with a one-line header plus a `.meta.json`
//! sidecar. Floats are written with 17 significant digits so every value
//! reads back bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acoustic::CoefficientVariant;
use crate::detect::{
    DetectionParams, DetectionReport, FieldTrace, InterfaceHit, Ray, TraceSample, VertexCriterion,
    VertexHit,
};
use crate::geometry::MediumId;
use crate::medium::WaveKind;

pub const TRACE_SCHEMA: &str = "wavedetect-traces/1";
pub const REPORT_SCHEMA: &str = "wavedetect-report/1";

const TRACE_HEADER: [&str; 8] = [
    "ray_id",
    "sample",
    "z",
    "medium_id",
    "incident_re",
    "incident_im",
    "reflected_re",
    "reflected_im",
];

const REPORT_HEADER: [&str; 14] = [
    "kind",
    "ray_id",
    "z",
    "position",
    "t_hat_re",
    "t_hat_im",
    "r_hat_re",
    "r_hat_im",
    "medium_a",
    "medium_b",
    "criterion",
    "residual",
    "degenerate",
    "parameters",
];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{path}: schema mismatch: {message}")]
    Schema { path: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn schema(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Schema {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// `<path>.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_num(path: &Path, field: &str, s: &str) -> Result<f64, IoError> {
    s.trim()
        .parse()
        .map_err(|_| schema(path, format!("{field}: not a number: {s:?}")))
}

fn parse_usize(path: &Path, field: &str, s: &str) -> Result<usize, IoError> {
    s.trim()
        .parse()
        .map_err(|_| schema(path, format!("{field}: not an index: {s:?}")))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| schema(path, e.to_string()))
}

fn check_header(path: &Path, got: &csv::StringRecord, want: &[&str]) -> Result<(), IoError> {
    if got.iter().eq(want.iter().copied()) {
        Ok(())
    } else {
        Err(schema(
            path,
            format!(
                "header {:?}, expected {:?}",
                got.iter().collect::<Vec<_>>(),
                want
            ),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayMeta {
    pub ray_id: usize,
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
    pub length: f64,
    pub grid_step: f64,
}

/// Sidecar of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub schema: String,
    pub wave_kind: String,
    pub noise: f64,
    pub seed: u64,
    pub variant: String,
    pub rays: Vec<RayMeta>,
}

impl TraceMeta {
    pub fn new(wave_kind: WaveKind, traces: &[FieldTrace], params: &DetectionParams) -> Self {
        Self {
            schema: TRACE_SCHEMA.into(),
            wave_kind: wave_kind.name().into(),
            noise: params.noise_sigma,
            seed: params.seed,
            variant: params.variant.name().into(),
            rays: traces
                .iter()
                .map(|t| RayMeta {
                    ray_id: t.ray_id,
                    origin: t.ray.origin().to_vec(),
                    direction: t.ray.direction().to_vec(),
                    length: t.ray.length(),
                    grid_step: t.ray.grid_step(),
                })
                .collect(),
        }
    }
}

pub fn write_traces(path: &Path, traces: &[FieldTrace], meta: &TraceMeta) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(TRACE_HEADER).map_err(csv_err(path))?;
    for t in traces {
        for (k, s) in t.samples.iter().enumerate() {
            w.write_record([
                t.ray_id.to_string(),
                k.to_string(),
                num(s.z),
                s.medium.0.to_string(),
                num(s.incident.re),
                num(s.incident.im),
                num(s.reflected.re),
                num(s.reflected.im),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))?;
    write_json(&sidecar_path(path), meta)
}

pub fn read_traces(path: &Path) -> Result<(Vec<FieldTrace>, TraceMeta), IoError> {
    let meta_path = sidecar_path(path);
    if !meta_path.exists() {
        return Err(schema(
            path,
            format!("missing sidecar {}", meta_path.display()),
        ));
    }
    let meta: TraceMeta = read_json(&meta_path)?;
    if meta.schema != TRACE_SCHEMA {
        return Err(schema(
            &meta_path,
            format!("schema {:?}, expected {TRACE_SCHEMA:?}", meta.schema),
        ));
    }
    let wave_kind = WaveKind::parse(&meta.wave_kind).ok_or_else(|| {
        schema(
            &meta_path,
            format!("unknown wave_kind {:?}", meta.wave_kind),
        )
    })?;

    let mut rays = BTreeMap::new();
    for r in &meta.rays {
        let ray = Ray::new(r.origin.clone(), r.direction.clone(), r.length, r.grid_step)
            .map_err(|e| schema(&meta_path, format!("ray {}: {e}", r.ray_id)))?;
        if rays.insert(r.ray_id, ray).is_some() {
            return Err(schema(&meta_path, format!("ray {} listed twice", r.ray_id)));
        }
    }

    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::Reader::from_reader(file);
    check_header(
        path,
        reader.headers().map_err(csv_err(path))?,
        &TRACE_HEADER,
    )?;
    let mut samples: BTreeMap<usize, Vec<TraceSample>> = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let r = record.map_err(csv_err(path))?;
        if r.len() != TRACE_HEADER.len() {
            return Err(schema(
                path,
                format!("row {} has {} fields", line + 2, r.len()),
            ));
        }
        let ray_id = parse_usize(path, "ray_id", &r[0])?;
        let k = parse_usize(path, "sample", &r[1])?;
        let list = samples.entry(ray_id).or_default();
        if k != list.len() {
            return Err(schema(
                path,
                format!("ray {ray_id}: sample {k} out of order"),
            ));
        }
        list.push(TraceSample {
            z: parse_num(path, "z", &r[2])?,
            medium: MediumId(parse_usize(path, "medium_id", &r[3])?),
            incident: Complex64::new(
                parse_num(path, "incident_re", &r[4])?,
                parse_num(path, "incident_im", &r[5])?,
            ),
            reflected: Complex64::new(
                parse_num(path, "reflected_re", &r[6])?,
                parse_num(path, "reflected_im", &r[7])?,
            ),
        });
    }

    let mut traces = Vec::with_capacity(rays.len());
    if let Some(ray_id) = samples.keys().find(|id| !rays.contains_key(id)) {
        return Err(schema(
            path,
            format!("ray {ray_id} is not described in the sidecar"),
        ));
    }
    for (ray_id, ray) in rays {
        let list = samples.remove(&ray_id).unwrap_or_default();
        if list.len() != ray.sample_count() {
            return Err(schema(
                path,
                format!(
                    "ray {ray_id}: {} samples, grid has {}",
                    list.len(),
                    ray.sample_count()
                ),
            ));
        }
        let z0 = list[0].z;
        for (k, s) in list.iter().enumerate() {
            let expect = z0 + k as f64 * ray.grid_step();
            if (s.z - expect).abs() > 1e-9 * expect.abs().max(1.0) {
                return Err(schema(
                    path,
                    format!("ray {ray_id}: sample {k} is off the grid"),
                ));
            }
        }
        traces.push(FieldTrace {
            ray_id,
            ray,
            wave_kind,
            samples: list,
        });
    }
    Ok((traces, meta))
}

/// Sidecar of a report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub schema: String,
    pub wave_kind: String,
    pub variant: String,
    pub tol: f64,
    pub tol_floor: f64,
    pub noise: f64,
    pub seed: u64,
    pub kappa_min: f64,
    pub interface_hits: usize,
    pub vertex_hits: usize,
}

impl ReportMeta {
    pub fn new(wave_kind: WaveKind, report: &DetectionReport) -> Self {
        let p = &report.params;
        Self {
            schema: REPORT_SCHEMA.into(),
            wave_kind: wave_kind.name().into(),
            variant: p.variant.name().into(),
            tol: p.tol,
            tol_floor: p.tol_floor,
            noise: p.noise_sigma,
            seed: p.seed,
            kappa_min: p.kappa_min,
            interface_hits: report.interface_hits.len(),
            vertex_hits: report.vertex_hits.len(),
        }
    }

    pub fn params(&self) -> Option<DetectionParams> {
        let variant = match self.variant.as_str() {
            "energy_conserving" => CoefficientVariant::EnergyConserving,
            "paper_exact" => CoefficientVariant::PaperExact,
            _ => return None,
        };
        Some(DetectionParams {
            tol: self.tol,
            tol_floor: self.tol_floor,
            noise_sigma: self.noise,
            seed: self.seed,
            variant,
            kappa_min: self.kappa_min,
        })
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(";")
}

fn split(path: &Path, field: &str, s: &str) -> Result<Vec<f64>, IoError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';').map(|v| parse_num(path, field, v)).collect()
}

pub fn write_report(
    path: &Path,
    report: &DetectionReport,
    meta: &ReportMeta,
) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(REPORT_HEADER).map_err(csv_err(path))?;
    for h in &report.interface_hits {
        w.write_record([
            "interface".to_string(),
            h.ray_id.to_string(),
            num(h.z),
            join(&h.position),
            num(h.t_hat.re),
            num(h.t_hat.im),
            num(h.r_hat.re),
            num(h.r_hat.im),
            num(h.media_pair.0),
            num(h.media_pair.1),
            String::new(),
            num(h.residual),
            String::new(),
            String::new(),
        ])
        .map_err(csv_err(path))?;
    }
    for v in &report.vertex_hits {
        let mut row = vec![String::new(); REPORT_HEADER.len()];
        row[0] = "vertex".into();
        row[3] = join(&v.position);
        row[10] = v.criterion.name().into();
        row[11] = num(v.residual);
        row[12] = v.degenerate.to_string();
        row[13] = join(&v.parameters);
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    write_json(&sidecar_path(path), meta)
}

pub fn read_report(path: &Path) -> Result<(DetectionReport, ReportMeta), IoError> {
    let meta_path = sidecar_path(path);
    let meta: ReportMeta = read_json(&meta_path)?;
    if meta.schema != REPORT_SCHEMA {
        return Err(schema(
            &meta_path,
            format!("schema {:?}, expected {REPORT_SCHEMA:?}", meta.schema),
        ));
    }
    let params = meta
        .params()
        .ok_or_else(|| schema(&meta_path, format!("unknown variant {:?}", meta.variant)))?;
    let mut report = DetectionReport::new(params);

    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::Reader::from_reader(file);
    check_header(
        path,
        reader.headers().map_err(csv_err(path))?,
        &REPORT_HEADER,
    )?;
    for record in reader.records() {
        let r = record.map_err(csv_err(path))?;
        if r.len() != REPORT_HEADER.len() {
            return Err(schema(path, format!("row has {} fields", r.len())));
        }
        let f = |i: usize, name: &str| parse_num(path, name, &r[i]);
        match &r[0] {
            "interface" => report.interface_hits.push(InterfaceHit {
                ray_id: parse_usize(path, "ray_id", &r[1])?,
                z: f(2, "z")?,
                position: split(path, "position", &r[3])?,
                t_hat: Complex64::new(f(4, "t_hat_re")?, f(5, "t_hat_im")?),
                r_hat: Complex64::new(f(6, "r_hat_re")?, f(7, "r_hat_im")?),
                media_pair: (f(8, "medium_a")?, f(9, "medium_b")?),
                residual: f(11, "residual")?,
            }),
            "vertex" => report.vertex_hits.push(VertexHit {
                position: split(path, "position", &r[3])?,
                criterion: VertexCriterion::parse(&r[10])
                    .ok_or_else(|| schema(path, format!("unknown criterion {:?}", &r[10])))?,
                residual: f(11, "residual")?,
                degenerate: r[12]
                    .parse()
                    .map_err(|_| schema(path, format!("degenerate: {:?}", &r[12])))?,
                parameters: split(path, "parameters", &r[13])?,
            }),
            other => return Err(schema(path, format!("unknown row kind {other:?}"))),
        }
    }
    if report.interface_hits.len() != meta.interface_hits
        || report.vertex_hits.len() != meta.vertex_hits
    {
        return Err(schema(path, "hit counts disagree with the sidecar"));
    }
    Ok((report, meta))
}
