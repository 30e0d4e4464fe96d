//! Command-line front end. [`run`] returns the process exit code; every
//! diagnostic goes to standard error.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use thiserror::Error;

use crate::acoustic::CoefficientVariant;
use crate::config::{ConfigError, Scenario};
use crate::coupled_mode::{cascade_transfer, CascadeSpec, Stage};
use crate::detect::{
    detect_interfaces_acoustic, detect_interfaces_em, detect_vertex_cascade,
    detect_vertex_coupled_mode, detect_vertex_fwm, synthesize_ray_trace, DetectError,
    DetectionReport, FieldTrace, VertexCriterion, VertexHit,
};
use crate::fwm::{closed_form_signal_paper, integrate_signal, FwmParams};
use crate::io::{read_traces, write_report, write_traces, IoError, ReportMeta, TraceMeta};
use crate::medium::WaveKind;
use crate::waveguide::{solve_te_slab_modes, Parity, SlabSpec};

#[derive(Debug, Parser)]
#[command(
    name = "wavedetect",
    version,
    about = "Interface and vertex detection from synthesized wave traces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a trace along every ray of a scenario.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `detection.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `detection.noise`.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Scan traces for interfaces and run the scenario's vertex probes.
    Detect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `detection.tol`.
        #[arg(long)]
        tol: Option<f64>,
        /// Use the printed acoustic coefficients instead of the energy-conserving ones.
        #[arg(long)]
        paper_exact: bool,
    },
    /// Transfer matrix and output powers of a coupler cascade.
    ///
    /// Stages are `c:KAPPA[:LENGTH]` (length defaults to 1) and
    /// `d:BETA:L1:L2`, in order of traversal.
    Coupler {
        #[arg(allow_hyphen_values = true)]
        stages: Vec<String>,
        /// Input amplitude of port 1, `RE` or `RE,IM`.
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        x1: String,
        /// Input amplitude of port 2, `RE` or `RE,IM`.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        x2: String,
    },
    /// Guided TE modes of a symmetric slab.
    SlabModes {
        #[arg(long)]
        n_core: f64,
        #[arg(long)]
        n_clad: f64,
        /// Core thickness, m.
        #[arg(long)]
        thickness: f64,
        /// Vacuum wavelength, m.
        #[arg(long)]
        wavelength: f64,
        #[arg(long, default_value_t = 64)]
        max_modes: usize,
    },
    /// Integrate the four-wave-mixing signal equation.
    Fwm {
        /// Signal angular frequency, rad/s.
        #[arg(long)]
        omega_s: f64,
        /// Signal wavenumber, rad/m.
        #[arg(long)]
        k_s: f64,
        /// Effective third-order susceptibility, m^2/V^2.
        #[arg(long, allow_hyphen_values = true)]
        chi3: f64,
        /// Three real pump amplitudes, V/m, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        pumps: Vec<f64>,
        /// Phase mismatch, rad/m.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        delta_k: f64,
        /// Propagation length, m.
        #[arg(long)]
        length: f64,
        /// Integration step, m; defaults to length / 1000.
        #[arg(long)]
        step: Option<f64>,
        /// Optional CSV of the integrated signal.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Geometry(String),
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    MalformedSpec(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Geometry(_)) | CliError::Geometry(_) => 3,
            CliError::Config(_) => 2,
            CliError::Schema(_) => 4,
            CliError::MalformedSpec(_) => 5,
            CliError::Other(_) => 1,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io { .. } => CliError::Other(e.to_string()),
            _ => CliError::Schema(e.to_string()),
        }
    }
}

impl From<DetectError> for CliError {
    fn from(e: DetectError) -> Self {
        CliError::Other(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate {
            config,
            out,
            seed,
            noise,
        } => simulate(&config, &out, seed, noise),
        Command::Detect {
            config,
            traces,
            out,
            tol,
            paper_exact,
        } => detect(&config, &traces, &out, tol, paper_exact),
        Command::Coupler { stages, x1, x2 } => coupler(&stages, &x1, &x2),
        Command::SlabModes {
            n_core,
            n_clad,
            thickness,
            wavelength,
            max_modes,
        } => slab_modes(n_core, n_clad, thickness, wavelength, max_modes),
        Command::Fwm {
            omega_s,
            k_s,
            chi3,
            pumps,
            delta_k,
            length,
            step,
            out,
        } => fwm(omega_s, k_s, chi3, &pumps, delta_k, length, step, out),
    }
}

fn simulate(
    config: &std::path::Path,
    out: &std::path::Path,
    seed: Option<u64>,
    noise: Option<f64>,
) -> Result<(), CliError> {
    let mut scenario = Scenario::from_path(config)?;
    if let Some(seed) = seed {
        scenario.params.seed = seed;
    }
    if let Some(noise) = noise {
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(CliError::Other(format!(
                "--noise must be non-negative, got {noise}"
            )));
        }
        scenario.params.noise_sigma = noise;
    }
    let p = scenario.params;
    let traces = scenario
        .rays
        .iter()
        .enumerate()
        .map(|(id, ray)| {
            synthesize_ray_trace(
                &scenario.complex,
                &scenario.media,
                ray,
                id,
                p.noise_sigma,
                p.seed,
            )
            .map_err(|e| CliError::Geometry(format!("ray {id}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let meta = TraceMeta::new(scenario.wave_kind, &traces, &p);
    write_traces(out, &traces, &meta)?;
    Ok(())
}

fn detect(
    config: &std::path::Path,
    traces_path: &std::path::Path,
    out: &std::path::Path,
    tol: Option<f64>,
    paper_exact: bool,
) -> Result<(), CliError> {
    let scenario = Scenario::from_path(config)?;
    let (traces, meta) = read_traces(traces_path)?;
    if meta.wave_kind != scenario.wave_kind.name() {
        return Err(CliError::Schema(format!(
            "traces are {}, scenario is {}",
            meta.wave_kind,
            scenario.wave_kind.name()
        )));
    }
    let mut params = scenario.params;
    if let Some(tol) = tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Other(format!(
                "--tol must be positive, got {tol}"
            )));
        }
        params.tol = tol;
    }
    if paper_exact {
        params.variant = CoefficientVariant::PaperExact;
    }
    params.noise_sigma = meta.noise;
    params.seed = meta.seed;

    let mut report = DetectionReport::new(params);
    for trace in &traces {
        let hits = match scenario.wave_kind {
            WaveKind::Em => detect_interfaces_em(trace, &scenario.candidates, &params)?,
            WaveKind::Acoustic => detect_interfaces_acoustic(trace, &scenario.candidates, &params)?,
        };
        report.interface_hits.extend(hits);
    }

    let by_id: BTreeMap<usize, &FieldTrace> = traces.iter().map(|t| (t.ray_id, t)).collect();
    for (i, probe) in scenario.probes.iter().enumerate() {
        let picked = probe
            .rays
            .iter()
            .map(|id| {
                by_id.get(id).copied().ok_or_else(|| {
                    CliError::Schema(format!("vertex probe {i}: no trace for ray {id}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let window = probe.window.unwrap_or(f64::INFINITY);
        let verdict = match probe.criterion {
            VertexCriterion::CoupledMode => {
                detect_vertex_coupled_mode(picked[0], picked[1], window, &params)
            }
            VertexCriterion::Cascade => {
                let owned: Vec<FieldTrace> = picked.iter().map(|t| (*t).clone()).collect();
                detect_vertex_cascade(&owned, &params)
            }
            VertexCriterion::Fwm => detect_vertex_fwm(picked[0], window, &params),
        }
        .map_err(|e| CliError::Other(format!("vertex probe {i}: {e}")))?;
        if verdict.is_vertex {
            report.vertex_hits.push(VertexHit {
                position: scenario.complex.vertices()[probe.vertex].clone(),
                criterion: verdict.criterion,
                residual: verdict.residual,
                degenerate: verdict.degenerate,
                parameters: verdict.parameters,
            });
        }
    }
    report.sort();

    let meta = ReportMeta::new(scenario.wave_kind, &report);
    write_report(out, &report, &meta)?;
    println!(
        "interface_hits={} vertex_hits={} variant={}",
        report.interface_hits.len(),
        report.vertex_hits.len(),
        params.variant.name()
    );
    Ok(())
}

fn parse_stage(token: &str) -> Result<Stage, CliError> {
    let bad = || {
        CliError::MalformedSpec(format!(
            "bad stage {token:?}; expected c:KAPPA[:LENGTH] or d:BETA:L1:L2"
        ))
    };
    let parts: Vec<&str> = token.split(':').collect();
    let nums = parts[1..]
        .iter()
        .map(|p| p.parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    if nums.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    match (parts[0], nums.as_slice()) {
        ("c", [kappa]) => Ok(Stage::Coupler {
            kappa: *kappa,
            length: 1.0,
        }),
        ("c", [kappa, length]) => Ok(Stage::Coupler {
            kappa: *kappa,
            length: *length,
        }),
        ("d", [beta, l1, l2]) => Ok(Stage::Delay {
            beta: *beta,
            l1: *l1,
            l2: *l2,
        }),
        _ => Err(bad()),
    }
}

fn parse_amplitude(name: &str, s: &str) -> Result<Complex64, CliError> {
    let bad = || CliError::Other(format!("--{name}: expected RE or RE,IM, got {s:?}"));
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        [re] => Ok(Complex64::new(*re, 0.0)),
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => Err(bad()),
    }
}

fn coupler(stages: &[String], x1: &str, x2: &str) -> Result<(), CliError> {
    if stages.is_empty() {
        return Err(CliError::MalformedSpec(
            "no stages given; usage: wavedetect coupler c:KAPPA[:LENGTH] [d:BETA:L1:L2 c:KAPPA[:LENGTH] ...]".into(),
        ));
    }
    let parsed = stages
        .iter()
        .map(|t| parse_stage(t))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = CascadeSpec::new(parsed).map_err(|e| CliError::MalformedSpec(e.to_string()))?;
    let t = cascade_transfer(&spec).map_err(|e| CliError::MalformedSpec(e.to_string()))?;
    let x = nalgebra::Vector2::new(parse_amplitude("x1", x1)?, parse_amplitude("x2", x2)?);
    let y = t * x;
    for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let v = t[(r, c)];
        println!("T{}{} = {:.12} {:+.12}i", r + 1, c + 1, v.re, v.im);
    }
    println!("P1 = {:.12}", y[0].norm_sqr());
    println!("P2 = {:.12}", y[1].norm_sqr());
    Ok(())
}

fn slab_modes(
    n_core: f64,
    n_clad: f64,
    thickness: f64,
    wavelength: f64,
    max_modes: usize,
) -> Result<(), CliError> {
    let slab = SlabSpec::from_wavelength(n_core, n_clad, thickness, wavelength)
        .map_err(|e| CliError::Other(e.to_string()))?;
    let modes = solve_te_slab_modes(&slab, max_modes);
    println!("V = {:.12}", slab.v_number());
    println!("order,parity,beta,n_eff,kappa_t,gamma");
    for m in &modes {
        let parity = match m.parity {
            Parity::Even => "even",
            Parity::Odd => "odd",
        };
        println!(
            "{},{},{:.12e},{:.12},{:.12e},{:.12e}",
            m.order,
            parity,
            m.beta,
            m.beta / slab.k0,
            m.kappa_t,
            m.gamma
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn fwm(
    omega_s: f64,
    k_s: f64,
    chi3: f64,
    pumps: &[f64],
    delta_k: f64,
    length: f64,
    step: Option<f64>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let [p1, p2, p3] = pumps else {
        return Err(CliError::Other("--pumps takes three values".into()));
    };
    let params = FwmParams {
        omega_s,
        k_s,
        chi3_eff: chi3,
        pumps: [p1, p2, p3].map(|&p| Complex64::new(p, 0.0)),
        delta_k_z: delta_k,
    };
    let step = step.unwrap_or(length / 1000.0);
    let trace =
        integrate_signal(&params, length, step).map_err(|e| CliError::Other(e.to_string()))?;
    let (z_end, e_end) = *trace.last().expect("integrator returns at least z = 0");
    println!("growth_rate = {:.12e}", params.growth_rate());
    println!("E_s({z_end}) = {:.12e} {:+.12e}i", e_end.re, e_end.im);
    if delta_k != 0.0 {
        let printed =
            closed_form_signal_paper(&params, z_end).map_err(|e| CliError::Other(e.to_string()))?;
        println!(
            "closed_form({z_end}) = {:.12e} {:+.12e}i",
            printed.re, printed.im
        );
    }
    if let Some(path) = out {
        let io = |e: std::io::Error| CliError::Other(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Other(e.to_string()))?;
        w.write_record(["z", "signal_re", "signal_im", "signal_abs"])
            .map_err(|e| CliError::Other(e.to_string()))?;
        for (z, e) in &trace {
            w.write_record([
                format!("{z:.16e}"),
                format!("{:.16e}", e.re),
                format!("{:.16e}", e.im),
                format!("{:.16e}", e.norm()),
            ])
            .map_err(|e| CliError::Other(e.to_string()))?;
        }
        w.flush().map_err(io)?;
    }
    Ok(())
}
