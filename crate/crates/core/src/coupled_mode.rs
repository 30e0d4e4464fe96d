//! Coupled-mode propagation in a pair of waveguides and 2x2 coupler cascades.
//!
//! Amplitudes follow
//!
//! ```text
//! da/dz = -i (beta1 + kappa11) a - i kappa12 b
//! db/dz = -i (beta2 + kappa22) b - i kappa21 a
//! ```
//!
//! Cascades multiply coupler and delay-line matrices right to left, the
//! first stage acting first on the input pair `(X1, X2)`.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use thiserror::Error;

pub type Mat2 = Matrix2<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoupledModeError {
    #[error("integration step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("z_max ({z_max}) must be at least one step ({step})")]
    RangeTooShort { z_max: f64, step: f64 },
    #[error("delta_beta and kappa are both zero")]
    BothZero,
    #[error("section length must be non-negative, got {0}")]
    NegativeLength(f64),
    #[error("malformed cascade: {0}")]
    MalformedSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledModeParams {
    pub beta1: f64,
    pub beta2: f64,
    pub kappa11: Complex64,
    pub kappa22: Complex64,
    pub kappa12: Complex64,
    pub kappa21: Complex64,
}

impl CoupledModeParams {
    /// Lossless symmetric coupling `kappa12 = kappa21 = kappa`, no self-coupling.
    pub fn symmetric(beta1: f64, beta2: f64, kappa: f64) -> Self {
        Self {
            beta1,
            beta2,
            kappa11: Complex64::new(0.0, 0.0),
            kappa22: Complex64::new(0.0, 0.0),
            kappa12: Complex64::new(kappa, 0.0),
            kappa21: Complex64::new(kappa, 0.0),
        }
    }

    /// Coefficient matrix `M` in `d(a,b)/dz = -i M (a,b)`.
    pub fn generator(&self) -> Mat2 {
        Mat2::new(
            self.kappa11 + self.beta1,
            self.kappa12,
            self.kappa21,
            self.kappa22 + self.beta2,
        )
    }

    /// Default integration step, `1e-3` of the shortest propagation period.
    pub fn default_step(&self) -> f64 {
        let rate = [self.beta1.abs(), self.beta2.abs()]
            .into_iter()
            .fold(0.0, f64::max);
        let rate = if rate > 0.0 {
            rate
        } else {
            self.kappa12.norm().max(self.kappa21.norm()).max(1.0)
        };
        1e-3 * 2.0 * std::f64::consts::PI / rate
    }
}

/// Sampled amplitudes; `z` strictly increasing and starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTrajectory {
    pub z: Vec<f64>,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

impl ModeTrajectory {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn total_power(&self) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect()
    }
}

/// Classical RK4 at fixed `step` from `z = 0` to `z_max`; the last step is
/// shortened to land on `z_max`.
///
/// The mean diagonal coefficient is factored out as an exact phase
/// `exp(-i m z)`; RK4 then only resolves the exchange dynamics, whose rate is
/// set by the mismatch and the couplings rather than by `beta` itself.
pub fn integrate_coupled_modes(
    p: &CoupledModeParams,
    z_max: f64,
    step: f64,
    a0: Complex64,
    b0: Complex64,
) -> Result<ModeTrajectory, CoupledModeError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(CoupledModeError::NonPositiveStep(step));
    }
    if !(z_max >= step) {
        return Err(CoupledModeError::RangeTooShort { z_max, step });
    }
    let m = p.generator();
    let mean = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let reduced = m - Mat2::identity() * mean;
    let rhs = |y: &Vector2<Complex64>| -(reduced * y) * I;

    let full = (z_max / step).floor() as usize;
    let mut z_grid: Vec<f64> = (0..=full).map(|k| k as f64 * step).collect();
    let tail = z_max - full as f64 * step;
    if tail > step * 1e-9 {
        z_grid.push(z_max);
    }

    let mut y = Vector2::new(a0, b0);
    let mut a = Vec::with_capacity(z_grid.len());
    let mut b = Vec::with_capacity(z_grid.len());
    a.push(a0);
    b.push(b0);
    for w in z_grid.windows(2) {
        let h = w[1] - w[0];
        let half = Complex64::new(h / 2.0, 0.0);
        let k1 = rhs(&y);
        let k2 = rhs(&(y + k1 * half));
        let k3 = rhs(&(y + k2 * half));
        let k4 = rhs(&(y + k3 * Complex64::new(h, 0.0)));
        y += (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0);
        let phase = (-I * mean * w[1]).exp();
        a.push(y[0] * phase);
        b.push(y[1] * phase);
    }
    Ok(ModeTrajectory { z: z_grid, a, b })
}

/// Exact propagator `exp(-i M z)` for constant coefficients.
pub fn propagator(p: &CoupledModeParams, z: f64) -> Mat2 {
    let m = p.generator();
    let mean = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let n = m - Mat2::identity() * mean;
    // n is traceless, so n^2 = q^2 I with q^2 = -det(n)
    let q = (-(n[(0, 0)] * n[(1, 1)] - n[(0, 1)] * n[(1, 0)])).sqrt();
    let qz = q * z;
    let sinc = if qz.norm() < 1e-8 {
        Complex64::new(z, 0.0) * (Complex64::new(1.0, 0.0) - qz * qz / 6.0)
    } else {
        qz.sin() / q
    };
    (Mat2::identity() * qz.cos() - n * (I * sinc)) * (-I * mean * z).exp()
}

/// Power in each guide for unit input in guide `a`:
/// `Pb = kappa^2 / (dbeta^2/4 + kappa^2) sin^2(sqrt(dbeta^2/4 + kappa^2) z)`.
pub fn closed_form_power(
    delta_beta: f64,
    kappa: f64,
    z: f64,
) -> Result<(f64, f64), CoupledModeError> {
    if delta_beta == 0.0 && kappa == 0.0 {
        return Err(CoupledModeError::BothZero);
    }
    let omega_sq = 0.25 * delta_beta * delta_beta + kappa * kappa;
    let pb = kappa * kappa / omega_sq * (omega_sq.sqrt() * z).sin().powi(2);
    Ok((1.0 - pb, pb))
}

/// Lossless directional coupler of strength `kappa` over `length`.
pub fn coupler_matrix(kappa: f64, length: f64) -> Result<Mat2, CoupledModeError> {
    if !(length >= 0.0) {
        return Err(CoupledModeError::NegativeLength(length));
    }
    let (s, c) = (kappa * length).sin_cos();
    let c = Complex64::new(c, 0.0);
    let off = Complex64::new(0.0, -s);
    Ok(Mat2::new(c, off, off, c))
}

/// Differential delay line: arm lengths `l1`, `l2` at propagation constant `beta`.
pub fn delay_matrix(beta: f64, l1: f64, l2: f64) -> Result<Mat2, CoupledModeError> {
    for l in [l1, l2] {
        if !(l >= 0.0) {
            return Err(CoupledModeError::NegativeLength(l));
        }
    }
    let zero = Complex64::new(0.0, 0.0);
    Ok(Mat2::new(
        Complex64::from_polar(1.0, -beta * l1),
        zero,
        zero,
        Complex64::from_polar(1.0, -beta * l2),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stage {
    Coupler { kappa: f64, length: f64 },
    Delay { beta: f64, l1: f64, l2: f64 },
}

impl Stage {
    pub fn matrix(&self) -> Result<Mat2, CoupledModeError> {
        match *self {
            Stage::Coupler { kappa, length } => coupler_matrix(kappa, length),
            Stage::Delay { beta, l1, l2 } => delay_matrix(beta, l1, l2),
        }
    }
}

/// Coupler, delay, coupler, ..., coupler, in order of traversal.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSpec {
    stages: Vec<Stage>,
}

impl CascadeSpec {
    pub fn new(stages: Vec<Stage>) -> Result<Self, CoupledModeError> {
        if stages.is_empty() {
            return Err(CoupledModeError::MalformedSpec("no stages".into()));
        }
        for (i, stage) in stages.iter().enumerate() {
            let want_coupler = i % 2 == 0;
            let is_coupler = matches!(stage, Stage::Coupler { .. });
            if want_coupler != is_coupler {
                return Err(CoupledModeError::MalformedSpec(format!(
                    "stage {i} should be a {}",
                    if want_coupler { "coupler" } else { "delay" }
                )));
            }
        }
        if stages.len().is_multiple_of(2) {
            return Err(CoupledModeError::MalformedSpec(
                "cascade must end with a coupler".into(),
            ));
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn coupler_count(&self) -> usize {
        self.stages.len() / 2 + 1
    }
}

/// `T_c(L_{N+1}) ... T_MZ T_c(L_1)`.
pub fn cascade_transfer(spec: &CascadeSpec) -> Result<Mat2, CoupledModeError> {
    spec.stages
        .iter()
        .try_fold(Mat2::identity(), |acc, stage| Ok(stage.matrix()? * acc))
}

/// `max |(T^H T - I)_ij|`.
pub fn unitarity_defect(t: &Mat2) -> f64 {
    (t.adjoint() * t - Mat2::identity())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}
