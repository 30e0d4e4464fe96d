//! Four-wave mixing with undepleted pumps.
//!
//! The signal envelope obeys
//! `dE_s/dz = -i (omega_s^2 / (2 k_s c^2)) chi3 E1 E2 E3 exp(-i dk z)`.
//! [`integrate_signal`] integrates that equation; [`closed_form_signal_paper`]
//! evaluates the published closed form, which squares the sinc bracket and
//! therefore does not agree with the integral (see the module tests for the
//! exact ratio). [`degenerate_gain`] and [`fit_gain`] handle the degenerate
//! exponential-gain regime.

use num_complex::Complex64;
use thiserror::Error;

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// `mu0 * eps0 = 1 / c^2`.
pub const MU0_EPS0: f64 = 1.0 / (SPEED_OF_LIGHT * SPEED_OF_LIGHT);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FwmError {
    #[error("integration step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("phase mismatch is zero; the closed form is singular")]
    ZeroMismatch,
    #[error("amplitude at sample {0} is not positive")]
    NonPositiveAmplitude(usize),
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("sample positions must be strictly increasing (sample {0})")]
    NonIncreasingZ(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwmParams {
    /// Signal angular frequency, rad/s.
    pub omega_s: f64,
    /// Signal wavenumber, rad/m.
    pub k_s: f64,
    /// Effective third-order susceptibility, m^2/V^2.
    pub chi3_eff: f64,
    /// Pump amplitudes at `z = 0`, V/m.
    pub pumps: [Complex64; 3],
    /// Phase mismatch projected on the propagation axis, rad/m.
    pub delta_k_z: f64,
}

impl FwmParams {
    pub fn validate(&self) -> Result<(), FwmError> {
        if !(self.omega_s > 0.0 && self.omega_s.is_finite()) {
            return Err(FwmError::InvalidParams("omega_s must be positive"));
        }
        if !(self.k_s > 0.0 && self.k_s.is_finite()) {
            return Err(FwmError::InvalidParams("k_s must be positive"));
        }
        if !self.chi3_eff.is_finite() || !self.delta_k_z.is_finite() {
            return Err(FwmError::InvalidParams("chi3 and mismatch must be finite"));
        }
        Ok(())
    }

    /// `omega_s^2 mu0 eps0 / (2 k_s)`.
    pub fn coupling(&self) -> f64 {
        self.omega_s * self.omega_s * MU0_EPS0 / (2.0 * self.k_s)
    }

    pub fn pump_product(&self) -> Complex64 {
        self.pumps[0] * self.pumps[1] * self.pumps[2]
    }

    /// Magnitude of the phase-matched growth rate, `|dE_s/dz|`.
    pub fn growth_rate(&self) -> f64 {
        self.coupling() * (self.chi3_eff * self.pump_product()).norm()
    }
}

/// Integrates the signal equation from `E_s(0) = 0` with classical RK4.
/// The right-hand side does not depend on `E_s`, so each step reduces to
/// Simpson's rule on the source term.
pub fn integrate_signal(
    p: &FwmParams,
    z_max: f64,
    step: f64,
) -> Result<Vec<(f64, Complex64)>, FwmError> {
    p.validate()?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(FwmError::NonPositiveStep(step));
    }
    let source = Complex64::new(0.0, -p.coupling()) * p.chi3_eff * p.pump_product();
    let rhs = |z: f64, _e: Complex64| source * Complex64::from_polar(1.0, -p.delta_k_z * z);

    let full = (z_max / step).floor().max(0.0) as usize;
    let mut grid: Vec<f64> = (0..=full).map(|k| k as f64 * step).collect();
    if z_max - full as f64 * step > step * 1e-9 {
        grid.push(z_max);
    }

    let mut e = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(grid.len());
    out.push((0.0, e));
    for w in grid.windows(2) {
        let (z, h) = (w[0], w[1] - w[0]);
        let k1 = rhs(z, e);
        let k2 = rhs(z + h / 2.0, e + k1 * (h / 2.0));
        let k3 = rhs(z + h / 2.0, e + k2 * (h / 2.0));
        let k4 = rhs(z + h, e + k3 * h);
        e += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        out.push((w[1], e));
    }
    Ok(out)
}

/// The published closed form
/// `E_s = (omega_s^2 mu0 eps0 / (2 k_s dk)) chi3 E1 E2 E3 [sin(dk z/2) / (dk z/2)]^2`,
/// evaluated as printed.
pub fn closed_form_signal_paper(p: &FwmParams, z: f64) -> Result<Complex64, FwmError> {
    p.validate()?;
    if p.delta_k_z == 0.0 {
        return Err(FwmError::ZeroMismatch);
    }
    let bracket = sinc(0.5 * p.delta_k_z * z);
    Ok(p.pump_product() * (p.coupling() / p.delta_k_z * p.chi3_eff * bracket * bracket))
}

/// `sin x / x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Degenerate-signal exponential law `E_s(z) = E_s(0) exp(g_s z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainModel {
    pub e_s0: Complex64,
    /// Gain (positive) or loss (negative) coefficient, 1/m.
    pub g_s: f64,
}

pub fn degenerate_gain(m: &GainModel, z: f64) -> Complex64 {
    m.e_s0 * (m.g_s * z).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainFit {
    pub model: GainModel,
    /// RMS of the line-fit error in `ln |E_s|`.
    pub residual: f64,
}

/// Least-squares line through `(z, ln |E_s|)`.
pub fn fit_gain(trace: &[(f64, f64)]) -> Result<GainFit, FwmError> {
    if trace.len() < 3 {
        return Err(FwmError::TooFewSamples {
            got: trace.len(),
            min: 3,
        });
    }
    for (i, &(z, amp)) in trace.iter().enumerate() {
        if !(amp > 0.0 && amp.is_finite()) {
            return Err(FwmError::NonPositiveAmplitude(i));
        }
        if i > 0 && !(z > trace[i - 1].0) {
            return Err(FwmError::NonIncreasingZ(i));
        }
    }
    let n = trace.len() as f64;
    let z_mean = trace.iter().map(|s| s.0).sum::<f64>() / n;
    let logs: Vec<f64> = trace.iter().map(|s| s.1.ln()).collect();
    let l_mean = logs.iter().sum::<f64>() / n;
    let (mut szz, mut szl) = (0.0, 0.0);
    for (&(z, _), &l) in trace.iter().zip(&logs) {
        szz += (z - z_mean) * (z - z_mean);
        szl += (z - z_mean) * (l - l_mean);
    }
    let g_s = szl / szz;
    let intercept = l_mean - g_s * z_mean;
    let sq: f64 = trace
        .iter()
        .zip(&logs)
        .map(|(&(z, _), &l)| (l - (intercept + g_s * z)).powi(2))
        .sum();
    Ok(GainFit {
        model: GainModel {
            e_s0: Complex64::new(intercept.exp(), 0.0),
            g_s,
        },
        residual: (sq / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn params(delta_k_z: f64) -> FwmParams {
        FwmParams {
            omega_s: 1.2e15,
            k_s: 6.0e6,
            chi3_eff: 2.5e-20,
            pumps: [
                Complex64::new(1.0e8, 0.0),
                Complex64::from_polar(2.0e8, 0.3),
                Complex64::from_polar(1.5e8, -1.1),
            ],
            delta_k_z,
        }
    }

    #[test]
    fn zero_susceptibility_gives_no_signal() {
        let mut p = params(3.0);
        p.chi3_eff = 0.0;
        for (_, e) in integrate_signal(&p, 2.0, 0.01).unwrap() {
            assert_eq!(e.norm(), 0.0);
        }
    }

    #[test]
    fn phase_matched_growth_is_linear() {
        let p = params(0.0);
        let rate = p.growth_rate();
        for (z, e) in integrate_signal(&p, 3.0, 0.01).unwrap().into_iter().skip(1) {
            assert_relative_eq!(e.norm(), rate * z, max_relative = 1e-10);
        }
    }

    #[test]
    fn mismatched_signal_follows_sinc_envelope() {
        let dk = 7.0;
        let p = params(dk);
        let rate = p.growth_rate();
        let trace = integrate_signal(&p, 3.0, 1e-3).unwrap();
        for &(z, e) in trace.iter().skip(1) {
            // |integral_0^z exp(-i dk u) du| = |sin(dk z / 2) / (dk / 2)|
            let oracle = rate * ((dk * z / 2.0).sin() / (dk / 2.0)).abs();
            assert!((e.norm() - oracle).abs() <= 1e-10 * rate);
        }
        let period = 2.0 * PI / dk;
        let on_period = integrate_signal(&p, 2.0 * period, period / 1000.0).unwrap();
        assert!(on_period[1000].1.norm() < 1e-9 * rate);
        assert!(on_period[2000].1.norm() < 1e-9 * rate);
        for k in 1..1000 {
            let diff = on_period[k].1.norm() - on_period[k + 1000].1.norm();
            assert!(diff.abs() < 1e-9 * rate);
        }
    }

    #[test]
    fn integrate_rejects_bad_step() {
        assert_eq!(
            integrate_signal(&params(1.0), 1.0, 0.0),
            Err(FwmError::NonPositiveStep(0.0))
        );
        assert!(integrate_signal(&params(1.0), 1.0, -1.0).is_err());
    }

    #[test]
    fn pump_phase_rotation_invariance() {
        let p = params(4.0);
        let mut q = p;
        q.pumps[0] *= Complex64::from_polar(1.0, 0.7);
        q.pumps[1] *= Complex64::from_polar(1.0, -0.2);
        q.pumps[2] *= Complex64::from_polar(1.0, -0.5);
        let a = integrate_signal(&p, 1.0, 1e-3).unwrap();
        let b = integrate_signal(&q, 1.0, 1e-3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(
                x.1.norm(),
                y.1.norm(),
                max_relative = 1e-12,
                epsilon = 1e-30
            );
        }
    }

    #[test]
    fn paper_closed_form_bracket() {
        let p = params(5.0);
        let peak = p.coupling() / p.delta_k_z * p.chi3_eff * p.pump_product().norm();
        let near_zero = closed_form_signal_paper(&p, 1e-12).unwrap();
        assert_relative_eq!(near_zero.norm(), peak, max_relative = 1e-12);
        let null = closed_form_signal_paper(&p, 2.0 * PI / p.delta_k_z).unwrap();
        assert!(null.norm() < 1e-15 * peak);
        let mut doubled = p;
        for pump in doubled.pumps.iter_mut() {
            *pump *= 2.0;
        }
        let z = 0.37;
        let ratio = closed_form_signal_paper(&doubled, z).unwrap()
            / closed_form_signal_paper(&p, z).unwrap();
        assert_relative_eq!(ratio.re, 8.0, max_relative = 1e-12);
        assert!(ratio.im.abs() < 1e-12);
        assert_eq!(
            closed_form_signal_paper(&params(0.0), 1.0),
            Err(FwmError::ZeroMismatch)
        );
    }

    #[test]
    fn integrator_and_paper_form_disagree_by_known_factor() {
        // at dk z = pi: |paper| / |integral| = sinc(pi/2) / pi = 2 / pi^2
        let dk = 2.0;
        let p = params(dk);
        let z = PI / dk;
        let step = z / 2000.0;
        let numeric = integrate_signal(&p, z, step).unwrap().last().unwrap().1;
        let printed = closed_form_signal_paper(&p, z).unwrap();
        assert_relative_eq!(
            printed.norm() / numeric.norm(),
            2.0 / (PI * PI),
            max_relative = 1e-10
        );
    }

    #[test]
    fn gain_law() {
        let m = GainModel {
            e_s0: Complex64::new(0.3, -0.4),
            g_s: 0.0,
        };
        assert_eq!(degenerate_gain(&m, 12.0), m.e_s0);
        let m = GainModel {
            e_s0: Complex64::new(1.0, 0.0),
            g_s: 0.5,
        };
        assert_relative_eq!(
            degenerate_gain(&m, 2.0).re,
            std::f64::consts::E,
            max_relative = 1e-15
        );
        let loss = GainModel {
            e_s0: Complex64::new(2.0, 1.0),
            g_s: -0.8,
        };
        let mags: Vec<f64> = (0..50)
            .map(|i| degenerate_gain(&loss, i as f64 * 0.1).norm())
            .collect();
        assert!(mags.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn gain_semigroup() {
        let m = GainModel {
            e_s0: Complex64::new(0.7, 0.2),
            g_s: 0.37,
        };
        for (z1, z2) in [(0.5, 1.25), (3.0, 0.1), (0.0, 2.0)] {
            let once = degenerate_gain(&m, z1 + z2);
            let twice = degenerate_gain(
                &GainModel {
                    e_s0: degenerate_gain(&m, z1),
                    g_s: m.g_s,
                },
                z2,
            );
            assert!((once - twice).norm() <= 1e-15 * once.norm());
        }
    }

    #[test]
    fn fit_recovers_exponential() {
        let m = GainModel {
            e_s0: Complex64::new(1.7, 0.0),
            g_s: 0.3,
        };
        let trace: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let z = 0.1 * i as f64;
                (z, degenerate_gain(&m, z).norm())
            })
            .collect();
        let fit = fit_gain(&trace).unwrap();
        assert!((fit.model.g_s - 0.3).abs() < 1e-10);
        assert_relative_eq!(fit.model.e_s0.re, 1.7, max_relative = 1e-10);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn fit_constant_and_sinc_traces() {
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.5)).collect();
        let fit = fit_gain(&flat).unwrap();
        assert_eq!(fit.model.g_s, 0.0);

        let p = params(3.0);
        let sincsq: Vec<(f64, f64)> = (1..60)
            .map(|i| {
                let z = 0.03 * i as f64;
                (z, closed_form_signal_paper(&p, z).unwrap().norm())
            })
            .collect();
        assert!(fit_gain(&sincsq).unwrap().residual > 0.1);
    }

    #[test]
    fn fit_input_validation() {
        assert_eq!(
            fit_gain(&[(0.0, 1.0), (1.0, 2.0)]),
            Err(FwmError::TooFewSamples { got: 2, min: 3 })
        );
        assert_eq!(
            fit_gain(&[(0.0, 1.0), (1.0, 0.0), (2.0, 1.0)]),
            Err(FwmError::NonPositiveAmplitude(1))
        );
        assert_eq!(
            fit_gain(&[(0.0, 1.0), (0.0, 1.0), (2.0, 1.0)]),
            Err(FwmError::NonIncreasingZ(1))
        );
    }
}
