use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use super::{DetectError, DetectionParams, FieldTrace};
use crate::coupled_mode::{
    cascade_transfer, propagator, CascadeSpec, CoupledModeParams, Mat2, Stage,
};
use crate::fwm::{fit_gain, FwmError};
use crate::medium::WaveKind;

/// Objective evaluations allowed for one coupled-mode fit.
pub const COUPLED_MODE_EVAL_BUDGET: usize = 10_000;
/// Fewest windowed samples a coupled-mode fit accepts.
const MIN_WINDOW: usize = 8;
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexCriterion {
    CoupledMode,
    Cascade,
    Fwm,
}

impl VertexCriterion {
    pub fn name(&self) -> &'static str {
        match self {
            VertexCriterion::CoupledMode => "coupled_mode",
            VertexCriterion::Cascade => "cascade",
            VertexCriterion::Fwm => "fwm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "coupled_mode" => Some(VertexCriterion::CoupledMode),
            "cascade" => Some(VertexCriterion::Cascade),
            "fwm" => Some(VertexCriterion::Fwm),
            _ => None,
        }
    }
}

/// Outcome of one vertex test.
///
/// `parameters` holds the fitted values: `[beta1, beta2, kappa12, kappa21]`
/// for coupled modes, `[theta_1, delta_1, theta_2, delta_2, ...]` for
/// cascades, `[g_s, |E_s0|]` for FWM.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexVerdict {
    pub criterion: VertexCriterion,
    pub is_vertex: bool,
    pub residual: f64,
    pub degenerate: bool,
    pub parameters: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledModeFit {
    pub params: CoupledModeParams,
    /// `sqrt(sum |model - data|^2 / sum |data|^2)` over both modes.
    pub residual: f64,
    pub evaluations: usize,
    /// The data never leaves its first sample, so nothing is identifiable.
    pub degenerate: bool,
}

fn params_from(x: &[f64; 4]) -> CoupledModeParams {
    let zero = Complex64::new(0.0, 0.0);
    CoupledModeParams {
        beta1: x[0],
        beta2: x[1],
        kappa11: zero,
        kappa22: zero,
        kappa12: Complex64::new(x[2], 0.0),
        kappa21: Complex64::new(x[3], 0.0),
    }
}

/// Fits `(beta1, beta2, kappa12, kappa21)` so that the exact propagator
/// carries the first sample onto the rest.
///
/// A linear least-squares fit of the equations to central differences gives
/// the starting point; a pattern search with halving steps refines it.
pub fn fit_coupled_modes(
    z: &[f64],
    a: &[Complex64],
    b: &[Complex64],
) -> Result<CoupledModeFit, DetectError> {
    let n = z.len();
    if n < MIN_WINDOW || a.len() != n || b.len() != n {
        return Err(DetectError::WindowTooSmall {
            got: n.min(a.len()).min(b.len()),
            min: MIN_WINDOW,
        });
    }
    let scale: f64 = a.iter().chain(b).map(|v| v.norm_sqr()).sum();
    let spread = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - a[0]).norm().max((y - b[0]).norm()))
        .fold(0.0, f64::max);
    let degenerate = scale == 0.0 || spread <= 1e-12 * scale.sqrt();

    let objective = |x: &[f64; 4]| -> f64 {
        if scale == 0.0 {
            return 0.0;
        }
        let p = params_from(x);
        let y0 = Vector2::new(a[0], b[0]);
        let mut err = 0.0;
        for k in 1..n {
            let y = propagator(&p, z[k] - z[0]) * y0;
            err += (y[0] - a[k]).norm_sqr() + (y[1] - b[k]).norm_sqr();
        }
        (err / scale).sqrt()
    };

    let start = if degenerate {
        [0.0; 4]
    } else {
        transfer_guess(z, a, b).unwrap_or_else(|| difference_guess(z, a, b))
    };
    let span = z[n - 1] - z[0];
    let (x, residual, evaluations) = pattern_search(objective, start, 1.0 / span);
    Ok(CoupledModeFit {
        params: params_from(&x),
        residual,
        evaluations,
        degenerate,
    })
}

/// On a uniform grid the samples obey `y_{k+1} = P y_k` with
/// `P = exp(-i M h)`. A least-squares `P` and its matrix logarithm give `M`;
/// this needs the trajectory to span both modes and `h` to resolve the
/// exchange period.
fn transfer_guess(z: &[f64], a: &[Complex64], b: &[Complex64]) -> Option<[f64; 4]> {
    let h = z[1] - z[0];
    if !(h > 0.0) || z.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return None;
    }
    let x: Vec<Vector2<Complex64>> = a.iter().zip(b).map(|(&p, &q)| Vector2::new(p, q)).collect();
    let (mut xx, mut yx) = (Mat2::zeros(), Mat2::zeros());
    for w in x.windows(2) {
        xx += w[0] * w[0].adjoint();
        yx += w[1] * w[0].adjoint();
    }
    let tr = (xx[(0, 0)] + xx[(1, 1)]).norm();
    if !(xx.determinant().norm() > 1e-10 * tr * tr) {
        return None;
    }
    let p = yx * xx.try_inverse()?;
    // eigenvalues of the 2x2 transfer matrix
    let half_tr = (p[(0, 0)] + p[(1, 1)]) * 0.5;
    let disc = (half_tr * half_tr - p.determinant()).sqrt();
    let (l1, l2) = (half_tr + disc, half_tr - disc);
    if l1.norm() == 0.0 || l2.norm() == 0.0 {
        return None;
    }
    let id = Mat2::identity();
    let log_p = if (l1 - l2).norm() > 1e-8 * l1.norm() {
        ((p - id * l2) * l1.ln() - (p - id * l1) * l2.ln()) / (l1 - l2)
    } else {
        id * half_tr.ln() + (p - id * half_tr) / half_tr
    };
    let m = log_p * (I / h);
    let guess = [m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)].re, m[(1, 0)].re];
    guess.iter().all(|v| v.is_finite()).then_some(guess)
}

/// Solves `i a' = beta1 a + kappa12 b` and `i b' = kappa21 a + beta2 b`
/// for real coefficients on interior central differences.
fn difference_guess(z: &[f64], a: &[Complex64], b: &[Complex64]) -> [f64; 4] {
    let fit = |lhs: &dyn Fn(usize) -> Complex64, u: &[Complex64], v: &[Complex64]| -> (f64, f64) {
        // real unknowns (p, q) with lhs = p u + q v, stacked over re and im
        let (mut uu, mut uv, mut vv, mut ul, mut vl) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 1..z.len() - 1 {
            let l = lhs(k);
            let (uk, vk) = (u[k], v[k]);
            uu += uk.norm_sqr();
            vv += vk.norm_sqr();
            uv += (uk.conj() * vk).re;
            ul += (uk.conj() * l).re;
            vl += (vk.conj() * l).re;
        }
        let det = uu * vv - uv * uv;
        if det.abs() <= 1e-14 * (uu * vv).max(f64::MIN_POSITIVE) {
            let p = if uu > 0.0 { ul / uu } else { 0.0 };
            return (p, 0.0);
        }
        ((ul * vv - vl * uv) / det, (vl * uu - ul * uv) / det)
    };
    let deriv = |s: &[Complex64], k: usize| I * (s[k + 1] - s[k - 1]) / (z[k + 1] - z[k - 1]);
    let (beta1, kappa12) = fit(&|k| deriv(a, k), a, b);
    let (beta2, kappa21) = fit(&|k| deriv(b, k), b, a);
    [beta1, beta2, kappa12, kappa21]
}

/// Hooke-Jeeves search; returns the best point, its value and the number of
/// objective evaluations used.
fn pattern_search(
    f: impl Fn(&[f64; 4]) -> f64,
    start: [f64; 4],
    rate_scale: f64,
) -> ([f64; 4], f64, usize) {
    let mut evals = 1;
    let mut base = start;
    let mut f_base = f(&base);
    let inf_norm = |x: &[f64; 4]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut step = 0.05 * inf_norm(&start).max(rate_scale);

    let explore = |x: [f64; 4], fx: f64, step: f64, evals: &mut usize| -> ([f64; 4], f64) {
        let (mut x, mut fx) = (x, fx);
        for i in 0..4 {
            for sign in [1.0, -1.0] {
                if *evals >= COUPLED_MODE_EVAL_BUDGET {
                    return (x, fx);
                }
                let mut trial = x;
                trial[i] += sign * step;
                let ft = f(&trial);
                *evals += 1;
                if ft < fx {
                    x = trial;
                    fx = ft;
                    break;
                }
            }
        }
        (x, fx)
    };

    while evals < COUPLED_MODE_EVAL_BUDGET && step >= 1e-9 * inf_norm(&base).max(1.0) {
        let (x, fx) = explore(base, f_base, step, &mut evals);
        if fx < f_base {
            // keep moving along the improving direction while it pays
            let (mut prev, mut cur, mut f_cur) = (base, x, fx);
            loop {
                let mut pattern = cur;
                for i in 0..4 {
                    pattern[i] += cur[i] - prev[i];
                }
                if evals >= COUPLED_MODE_EVAL_BUDGET {
                    break;
                }
                let f_pattern = f(&pattern);
                evals += 1;
                let (y, fy) = explore(pattern, f_pattern, step, &mut evals);
                if fy < f_cur {
                    prev = cur;
                    cur = y;
                    f_cur = fy;
                } else {
                    break;
                }
            }
            base = cur;
            f_base = f_cur;
        } else {
            step *= 0.5;
        }
    }
    (base, f_base, evals)
}

/// Samples of a trace whose distance from the first sample is within `window`.
fn windowed(trace: &FieldTrace, window: f64) -> &[super::TraceSample] {
    let z0 = trace.samples.first().map_or(0.0, |s| s.z);
    let end = trace
        .samples
        .iter()
        .take_while(|s| s.z - z0 <= window * (1.0 + 1e-12))
        .count();
    &trace.samples[..end]
}

fn same_grid(a: &[super::TraceSample], b: &[super::TraceSample]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x.z - y.z).abs() <= 1e-12 * x.z.abs().max(y.z.abs()).max(1.0))
}

/// Reads `a(z)` from the incident channel of `trace_a` and `b(z)` from the
/// incident channel of `trace_b`, both over the first `window` meters.
pub fn detect_vertex_coupled_mode(
    trace_a: &FieldTrace,
    trace_b: &FieldTrace,
    window: f64,
    params: &DetectionParams,
) -> Result<VertexVerdict, DetectError> {
    let (wa, wb) = (windowed(trace_a, window), windowed(trace_b, window));
    let got = wa.len().min(wb.len());
    if got < MIN_WINDOW {
        return Err(DetectError::WindowTooSmall {
            got,
            min: MIN_WINDOW,
        });
    }
    if !same_grid(wa, wb) {
        return Err(DetectError::GridMismatch);
    }
    let z: Vec<f64> = wa.iter().map(|s| s.z).collect();
    let a: Vec<Complex64> = wa.iter().map(|s| s.incident).collect();
    let b: Vec<Complex64> = wb.iter().map(|s| s.incident).collect();
    let fit = fit_coupled_modes(&z, &a, &b)?;
    let kappa = fit.params.kappa12.norm().max(fit.params.kappa21.norm());
    Ok(VertexVerdict {
        criterion: VertexCriterion::CoupledMode,
        is_vertex: !fit.degenerate && fit.residual <= params.tol && kappa > params.kappa_min,
        residual: fit.residual,
        degenerate: fit.degenerate,
        parameters: vec![
            fit.params.beta1,
            fit.params.beta2,
            fit.params.kappa12.re,
            fit.params.kappa21.re,
        ],
    })
}

/// One stage projected onto `gain * T_c(theta) * diag(1, exp(-i delta))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageFit {
    /// Coupling strength `kappa L`.
    pub theta: f64,
    /// Differential phase in `[0, 2 pi)`.
    pub delta: f64,
    pub gain: Complex64,
    /// Worst relative misfit of the projected stage on its own samples.
    pub residual: f64,
}

impl StageFit {
    pub fn matrix(&self) -> Mat2 {
        let (s, c) = self.theta.sin_cos();
        let e = Complex64::from_polar(1.0, -self.delta);
        Mat2::new(Complex64::new(c, 0.0), -I * s * e, -I * s, c * e) * self.gain
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeFit {
    pub stages: Vec<StageFit>,
    pub spec: CascadeSpec,
    /// Worst relative error predicting the last port from the first.
    pub prediction_error: f64,
}

fn rel_err(pred: &Vector2<Complex64>, actual: &Vector2<Complex64>) -> f64 {
    let scale = actual.norm().max(pred.norm());
    if scale == 0.0 {
        0.0
    } else {
        (pred - actual).norm() / scale
    }
}

/// Least-squares `M = Y X^H (X X^H)^-1`, projected onto the coupler form.
/// `None` when the inputs do not span both ports.
pub fn fit_stage(x: &[Vector2<Complex64>], y: &[Vector2<Complex64>]) -> Option<StageFit> {
    let mut xx = Mat2::zeros();
    let mut yx = Mat2::zeros();
    for (xi, yi) in x.iter().zip(y) {
        xx += xi * xi.adjoint();
        yx += yi * xi.adjoint();
    }
    let det = xx.determinant().norm();
    let tr = (xx[(0, 0)] + xx[(1, 1)]).norm();
    if !(det > 1e-12 * tr * tr) {
        return None;
    }
    let m: Matrix2<Complex64> = yx * xx.try_inverse()?;
    let theta = (m[(1, 0)].norm() + m[(0, 1)].norm()).atan2(m[(0, 0)].norm() + m[(1, 1)].norm());
    let (s, c) = theta.sin_cos();
    let gain = m[(0, 0)] * c + I * s * m[(1, 0)];
    let e = gain.conj() * (m[(1, 1)] * c + I * s * m[(0, 1)]);
    let delta = if e.norm() > 0.0 {
        (-e.arg()).rem_euclid(std::f64::consts::TAU)
    } else {
        0.0
    };
    let mut fit = StageFit {
        theta,
        delta,
        gain,
        residual: 0.0,
    };
    let projected = fit.matrix();
    fit.residual = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| rel_err(&(projected * xi), yi))
        .fold(0.0, f64::max);
    Some(fit)
}

/// Chains per-stage fits of consecutive traces into a cascade and predicts
/// the last trace from the first.
///
/// Trace `k` holds the two-mode port state `(incident, reflected)` after
/// `k` stages; every trace must share the first trace's sample grid.
pub fn detect_vertex_cascade(
    traces: &[FieldTrace],
    params: &DetectionParams,
) -> Result<VertexVerdict, DetectError> {
    if traces.len() < 2 {
        return Err(DetectError::TooFewTraces(traces.len()));
    }
    for t in &traces[1..] {
        t.expect_kind(traces[0].wave_kind)?;
        if !same_grid(&t.samples, &traces[0].samples) {
            return Err(DetectError::GridMismatch);
        }
    }
    let got = traces[0].samples.len();
    if got < 3 {
        return Err(DetectError::WindowTooSmall { got, min: 3 });
    }
    let ports: Vec<Vec<Vector2<Complex64>>> = traces
        .iter()
        .map(|t| {
            t.samples
                .iter()
                .map(|s| Vector2::new(s.incident, s.reflected))
                .collect()
        })
        .collect();

    let mut stages = Vec::with_capacity(traces.len() - 1);
    for w in ports.windows(2) {
        match fit_stage(&w[0], &w[1]) {
            Some(fit) => stages.push(fit),
            None => {
                return Ok(VertexVerdict {
                    criterion: VertexCriterion::Cascade,
                    is_vertex: false,
                    residual: f64::INFINITY,
                    degenerate: true,
                    parameters: Vec::new(),
                })
            }
        }
    }
    let fit = cascade_from_stages(stages, &ports[0], &ports[ports.len() - 1])?;
    let residual = fit
        .stages
        .iter()
        .map(|s| s.residual)
        .fold(fit.prediction_error, f64::max);
    Ok(VertexVerdict {
        criterion: VertexCriterion::Cascade,
        is_vertex: residual <= params.tol,
        residual,
        degenerate: false,
        parameters: fit.stages.iter().flat_map(|s| [s.theta, s.delta]).collect(),
    })
}

fn cascade_from_stages(
    stages: Vec<StageFit>,
    first: &[Vector2<Complex64>],
    last: &[Vector2<Complex64>],
) -> Result<CascadeFit, DetectError> {
    // stage k is gain_k C(theta_k) D(delta_k); the first delay stays outside
    // the spec so it starts and ends on a coupler
    let mut spec_stages = Vec::with_capacity(2 * stages.len() - 1);
    for (k, s) in stages.iter().enumerate() {
        if k > 0 {
            spec_stages.push(Stage::Delay {
                beta: 1.0,
                l1: 0.0,
                l2: s.delta,
            });
        }
        spec_stages.push(Stage::Coupler {
            kappa: s.theta,
            length: 1.0,
        });
    }
    let spec = CascadeSpec::new(spec_stages)?;
    let gain: Complex64 = stages.iter().map(|s| s.gain).product();
    let lead = Mat2::new(
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, -stages[0].delta),
    );
    let total = cascade_transfer(&spec)? * lead * gain;
    let prediction_error = first
        .iter()
        .zip(last)
        .map(|(x, y)| rel_err(&(total * x), y))
        .fold(0.0, f64::max);
    Ok(CascadeFit {
        stages,
        spec,
        prediction_error,
    })
}

/// Log-linear gain fit to `|incident|` over the first `window` meters.
pub fn detect_vertex_fwm(
    trace: &FieldTrace,
    window: f64,
    params: &DetectionParams,
) -> Result<VertexVerdict, DetectError> {
    trace.expect_kind(WaveKind::Em)?;
    let w = windowed(trace, window);
    let data: Vec<(f64, f64)> = w.iter().map(|s| (s.z, s.incident.norm())).collect();
    let fit = fit_gain(&data).map_err(|e| match e {
        FwmError::NonPositiveAmplitude(i) => DetectError::NonPositiveAmplitude(i),
        FwmError::TooFewSamples { got, min } => DetectError::WindowTooSmall { got, min },
        other => DetectError::Fwm(other),
    })?;
    Ok(VertexVerdict {
        criterion: VertexCriterion::Fwm,
        is_vertex: fit.residual <= params.tol,
        residual: fit.residual,
        degenerate: fit.model.g_s.abs() <= 1e-12,
        parameters: vec![fit.model.g_s, fit.model.e_s0.norm()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled_mode::{coupler_matrix, delay_matrix, integrate_coupled_modes};
    use crate::fwm::{degenerate_gain, GainModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn mode_traces(
        p: &CoupledModeParams,
        z_max: f64,
        a0: Complex64,
        b0: Complex64,
    ) -> (FieldTrace, FieldTrace) {
        let tr = integrate_coupled_modes(p, z_max, 1e-3, a0, b0).unwrap();
        // keep every 10th RK4 point as a sample
        let idx: Vec<usize> = (0..tr.len()).step_by(10).collect();
        let z: Vec<f64> = idx.iter().map(|&i| tr.z[i]).collect();
        let a: Vec<Complex64> = idx.iter().map(|&i| tr.a[i]).collect();
        let b: Vec<Complex64> = idx.iter().map(|&i| tr.b[i]).collect();
        let zeros = vec![c(0.0); z.len()];
        (
            FieldTrace::from_values(0, WaveKind::Em, &z, &a, &zeros).unwrap(),
            FieldTrace::from_values(1, WaveKind::Em, &z, &b, &zeros).unwrap(),
        )
    }

    #[test]
    fn coupled_mode_self_consistency() {
        let p = CoupledModeParams::symmetric(2.0, 2.0, 0.7);
        let (ta, tb) = mode_traces(&p, 2.0, c(1.0), c(0.0));
        let v = detect_vertex_coupled_mode(&ta, &tb, 2.0, &DetectionParams::default()).unwrap();
        assert!(v.is_vertex);
        assert!(v.residual < 1e-8, "residual {}", v.residual);
        for (got, want) in v.parameters.iter().zip([2.0, 2.0, 0.7, 0.7]) {
            assert!((got - want).abs() <= 1e-6 * want, "{:?}", v.parameters);
        }
    }

    #[test]
    fn coupled_mode_recovers_asymmetric_parameters() {
        let mut p = CoupledModeParams::symmetric(1.2, 0.4, 0.5);
        p.kappa21 = c(0.3);
        let (ta, tb) = mode_traces(&p, 3.0, c(0.6), c(0.8));
        let fit = {
            let z: Vec<f64> = ta.samples.iter().map(|s| s.z).collect();
            let a: Vec<Complex64> = ta.samples.iter().map(|s| s.incident).collect();
            let b: Vec<Complex64> = tb.samples.iter().map(|s| s.incident).collect();
            fit_coupled_modes(&z, &a, &b).unwrap()
        };
        assert!(fit.evaluations <= COUPLED_MODE_EVAL_BUDGET);
        let got = [
            fit.params.beta1,
            fit.params.beta2,
            fit.params.kappa12.re,
            fit.params.kappa21.re,
        ];
        for (g, w) in got.iter().zip([1.2, 0.4, 0.5, 0.3]) {
            assert!((g - w).abs() <= 1e-6 * w, "{got:?}");
        }
    }

    #[test]
    fn coarse_sampling_still_converges() {
        let p = CoupledModeParams::symmetric(2.0, 2.0, 0.7);
        let tr = integrate_coupled_modes(&p, 2.0, 1e-3, c(1.0), c(0.0)).unwrap();
        let idx: Vec<usize> = (0..tr.len()).step_by(100).collect();
        let z: Vec<f64> = idx.iter().map(|&i| tr.z[i]).collect();
        let a: Vec<Complex64> = idx.iter().map(|&i| tr.a[i]).collect();
        let b: Vec<Complex64> = idx.iter().map(|&i| tr.b[i]).collect();
        let fit = fit_coupled_modes(&z, &a, &b).unwrap();
        assert!(fit.residual < 1e-8, "{}", fit.residual);
        assert!((fit.params.kappa21.re - 0.7).abs() < 1e-6);
    }

    #[test]
    fn decoupled_traces_are_not_a_vertex() {
        let p = CoupledModeParams::symmetric(1.5, 0.5, 0.0);
        let (ta, tb) = mode_traces(&p, 2.0, c(1.0), c(1.0));
        let v = detect_vertex_coupled_mode(&ta, &tb, 2.0, &DetectionParams::default()).unwrap();
        assert!(
            v.parameters[2].abs() < 1e-6 && v.parameters[3].abs() < 1e-6,
            "{:?}",
            v.parameters
        );
        assert!(!v.is_vertex);
    }

    #[test]
    fn constant_traces_are_degenerate() {
        let z: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let ones = vec![c(1.0); 20];
        let ta = FieldTrace::from_values(0, WaveKind::Em, &z, &ones, &ones).unwrap();
        let v = detect_vertex_coupled_mode(&ta, &ta, 2.0, &DetectionParams::default()).unwrap();
        assert!(v.degenerate);
        assert!(!v.is_vertex);
        assert!(v.residual.is_finite());
    }

    #[test]
    fn short_window_rejected() {
        let p = CoupledModeParams::symmetric(1.0, 1.0, 0.7);
        let (ta, tb) = mode_traces(&p, 2.0, c(1.0), c(0.0));
        assert_eq!(
            detect_vertex_coupled_mode(&ta, &tb, 0.05, &DetectionParams::default()),
            Err(DetectError::WindowTooSmall { got: 6, min: 8 })
        );
    }

    fn random_inputs(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vector2<Complex64>> {
        (0..n)
            .map(|_| {
                Vector2::new(
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                )
            })
            .collect()
    }

    fn port_trace(id: usize, x: &[Vector2<Complex64>]) -> FieldTrace {
        let z: Vec<f64> = (0..x.len()).map(|k| k as f64 * 0.01).collect();
        let inc: Vec<Complex64> = x.iter().map(|v| v[0]).collect();
        let refl: Vec<Complex64> = x.iter().map(|v| v[1]).collect();
        FieldTrace::from_values(id, WaveKind::Em, &z, &inc, &refl).unwrap()
    }

    #[test]
    fn two_stage_cascade_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x0 = random_inputs(&mut rng, 16);
        let s1 = coupler_matrix(0.9, 0.5).unwrap() * delay_matrix(2.0, 0.0, 0.4).unwrap();
        let s2 = coupler_matrix(0.3, 1.0).unwrap() * delay_matrix(2.0, 0.1, 0.7).unwrap();
        let x1: Vec<_> = x0.iter().map(|v| s1 * v).collect();
        let x2: Vec<_> = x1.iter().map(|v| s2 * v).collect();
        let traces = [port_trace(0, &x0), port_trace(1, &x1), port_trace(2, &x2)];
        let v = detect_vertex_cascade(&traces, &DetectionParams::default()).unwrap();
        assert!(v.is_vertex);
        assert!(v.residual < 1e-8, "{}", v.residual);
        assert!((v.parameters[0] - 0.45).abs() < 1e-10);
        assert!((v.parameters[2] - 0.3).abs() < 1e-10);
    }

    #[test]
    fn single_stage_matches_coupled_mode_verdict() {
        let kappa = 0.7;
        let length = 1.1;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x0 = random_inputs(&mut rng, 12);
        let t = coupler_matrix(kappa, length).unwrap();
        let x1: Vec<_> = x0.iter().map(|v| t * v).collect();
        let cascade = detect_vertex_cascade(
            &[port_trace(0, &x0), port_trace(1, &x1)],
            &DetectionParams::default(),
        )
        .unwrap();
        let p = CoupledModeParams::symmetric(0.0, 0.0, kappa);
        let (ta, tb) = mode_traces(&p, length, c(1.0), c(0.0));
        let modes =
            detect_vertex_coupled_mode(&ta, &tb, length, &DetectionParams::default()).unwrap();
        assert_eq!(cascade.is_vertex, modes.is_vertex);
        assert!(cascade.is_vertex);
        assert!((cascade.parameters[0] - kappa * length).abs() < 1e-12);
    }

    #[test]
    fn unrelated_traces_rejected() {
        let params = DetectionParams {
            tol: 1e-3,
            ..Default::default()
        };
        let mut accepted = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let traces: Vec<FieldTrace> = (0..3)
                .map(|k| port_trace(k, &random_inputs(&mut rng, 16)))
                .collect();
            let v = detect_vertex_cascade(&traces, &params).unwrap();
            if v.is_vertex {
                accepted += 1;
            }
        }
        assert!(accepted < 1, "{accepted} false accepts");
    }

    #[test]
    fn cascade_needs_two_traces() {
        let x = vec![Vector2::new(c(1.0), c(0.0)); 4];
        assert_eq!(
            detect_vertex_cascade(&[port_trace(0, &x)], &DetectionParams::default()),
            Err(DetectError::TooFewTraces(1))
        );
        // identical inputs never excite the second port direction
        let v = detect_vertex_cascade(
            &[port_trace(0, &x), port_trace(1, &x)],
            &DetectionParams::default(),
        )
        .unwrap();
        assert!(v.degenerate && !v.is_vertex);
    }

    fn amplitude_trace(z: &[f64], amp: impl Fn(f64) -> f64) -> FieldTrace {
        let inc: Vec<Complex64> = z.iter().map(|&z| c(amp(z))).collect();
        let zeros = vec![c(0.0); z.len()];
        FieldTrace::from_values(0, WaveKind::Em, z, &inc, &zeros).unwrap()
    }

    #[test]
    fn fwm_exponential_gain_accepted() {
        let z: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let model = GainModel {
            e_s0: c(1e-3),
            g_s: 0.4,
        };
        let tr = amplitude_trace(&z, |z| degenerate_gain(&model, z).norm());
        let v = detect_vertex_fwm(&tr, 10.0, &DetectionParams::default()).unwrap();
        assert!(v.is_vertex && !v.degenerate);
        assert!((v.parameters[0] - 0.4).abs() <= 1e-10);
    }

    #[test]
    fn fwm_linear_growth_rejected() {
        let z: Vec<f64> = (0..50).map(|k| k as f64 * 0.04).collect();
        let tr = amplitude_trace(&z, |z| 1.0 + z);
        let params = DetectionParams {
            tol: 1e-4,
            ..Default::default()
        };
        let v = detect_vertex_fwm(&tr, 10.0, &params).unwrap();
        assert!(v.residual > 1e-4 && !v.is_vertex);
    }

    #[test]
    fn fwm_constant_is_degenerate_vertex() {
        let z: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let v = detect_vertex_fwm(
            &amplitude_trace(&z, |_| 2.0),
            100.0,
            &DetectionParams::default(),
        )
        .unwrap();
        assert!(v.is_vertex && v.degenerate);
        assert_eq!(v.parameters[0], 0.0);
    }

    #[test]
    fn fwm_zero_amplitude_reported() {
        let z: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let tr = amplitude_trace(&z, |z| if z == 3.0 { 0.0 } else { 1.0 });
        assert_eq!(
            detect_vertex_fwm(&tr, 100.0, &DetectionParams::default()),
            Err(DetectError::NonPositiveAmplitude(3))
        );
    }
}
