//! Total internal reflection and guided TE modes of a symmetric step-index slab.
//!
//! The slab occupies `|x| <= d/2` with index `n_core`, surrounded by `n_clad`.
//! With `u = kappa_t d / 2`, `w = gamma d / 2` and `V = k0 d / 2 sqrt(n_core^2 - n_clad^2)`,
//! the TE dispersion relations are `u tan u = w` (even) and `-u cot u = w` (odd),
//! with `u^2 + w^2 = V^2`. Mode `m` lives in `u in (m pi/2, (m+1) pi/2)` and
//! satisfies `u - m pi/2 = atan(w/u)`, which is strictly increasing in `u`, so
//! each mode is bracketed and bisected without crossing a tangent pole.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveguideError {
    #[error("incidence angle {0} rad outside [0, pi/2)")]
    AngleOutOfRange(f64),
    #[error("refractive index must be positive, got {0}")]
    NonPositiveIndex(f64),
    #[error("invalid slab: {0}")]
    InvalidSlab(&'static str),
    #[error("mode does not belong to this slab (relative mismatch {0:e})")]
    ModeSlabMismatch(f64),
}

/// Transmitted-angle cosine for TE incidence from `n1` into `n2`.
///
/// Below the critical angle the result is real. Beyond it the cosine is
/// `-i sqrt(n1^2 sin^2 theta1 / n2^2 - 1)`.
pub fn tir_cos_theta2(n1: f64, n2: f64, theta1: f64) -> Result<Complex64, WaveguideError> {
    for n in [n1, n2] {
        if !(n > 0.0 && n.is_finite()) {
            return Err(WaveguideError::NonPositiveIndex(n));
        }
    }
    if !(0.0..FRAC_PI_2).contains(&theta1) {
        return Err(WaveguideError::AngleOutOfRange(theta1));
    }
    let s = n1 * theta1.sin() / n2;
    let q = s * s;
    if q > 1.0 {
        Ok(Complex64::new(0.0, -(q - 1.0).sqrt()))
    } else {
        Ok(Complex64::new((1.0 - q).sqrt(), 0.0))
    }
}

/// Symmetric three-layer slab. Lengths in meters, `k0` in rad/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabSpec {
    pub n_core: f64,
    pub n_clad: f64,
    pub thickness: f64,
    pub k0: f64,
}

impl SlabSpec {
    pub fn new(n_core: f64, n_clad: f64, thickness: f64, k0: f64) -> Result<Self, WaveguideError> {
        if !(n_clad > 0.0 && n_core > 0.0) {
            return Err(WaveguideError::InvalidSlab("indices must be positive"));
        }
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(WaveguideError::InvalidSlab("thickness must be positive"));
        }
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(WaveguideError::InvalidSlab("k0 must be positive"));
        }
        Ok(Self {
            n_core,
            n_clad,
            thickness,
            k0,
        })
    }

    /// Builds the slab from a vacuum wavelength.
    pub fn from_wavelength(
        n_core: f64,
        n_clad: f64,
        thickness: f64,
        wavelength: f64,
    ) -> Result<Self, WaveguideError> {
        Self::new(
            n_core,
            n_clad,
            thickness,
            2.0 * std::f64::consts::PI / wavelength,
        )
    }

    /// Normalized frequency `V = k0 d/2 sqrt(n_core^2 - n_clad^2)`; zero
    /// without index contrast.
    pub fn v_number(&self) -> f64 {
        let contrast = self.n_core * self.n_core - self.n_clad * self.n_clad;
        if contrast <= 0.0 {
            0.0
        } else {
            0.5 * self.k0 * self.thickness * contrast.sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidedMode {
    pub beta: f64,
    pub kappa_t: f64,
    pub gamma: f64,
    pub parity: Parity,
    pub order: usize,
}

/// Pole-free dispersion residual, normalized to `[-1, 1]`:
/// `(u sin u - w cos u)/V` for even modes and `(u cos u + w sin u)/V` for odd.
/// Zero exactly where the tangent form of the relation holds.
pub fn dispersion_residual(mode: &GuidedMode, slab: &SlabSpec) -> f64 {
    let u = 0.5 * mode.kappa_t * slab.thickness;
    let w = 0.5 * mode.gamma * slab.thickness;
    let v = u.hypot(w);
    match mode.parity {
        Parity::Even => (u * u.sin() - w * u.cos()) / v,
        Parity::Odd => (u * u.cos() + w * u.sin()) / v,
    }
}

/// All guided TE modes with `order < max_modes`, sorted by decreasing `beta`.
pub fn solve_te_slab_modes(slab: &SlabSpec, max_modes: usize) -> Vec<GuidedMode> {
    let v = slab.v_number();
    if v <= 0.0 {
        return Vec::new();
    }
    let half_d = 0.5 * slab.thickness;
    let k_core = slab.n_core * slab.k0;
    let k_clad = slab.n_clad * slab.k0;

    let mut modes = Vec::new();
    for order in 0..max_modes {
        let lo = order as f64 * FRAC_PI_2;
        if lo >= v {
            break;
        }
        let hi = ((order + 1) as f64 * FRAC_PI_2).min(v);
        let phase = |u: f64| u - lo - ((v * v - u * u).max(0.0).sqrt()).atan2(u);
        let u = bisect(phase, lo, hi);
        let w = (v * v - u * u).max(0.0).sqrt();
        let kappa_t = u / half_d;
        let gamma = w / half_d;
        let beta = (k_core * k_core - kappa_t * kappa_t).max(0.0).sqrt();
        // at float resolution a mode sitting on cutoff is not guided
        if !(gamma > 0.0 && beta > k_clad && beta < k_core) {
            continue;
        }
        modes.push(GuidedMode {
            beta,
            kappa_t,
            gamma,
            parity: if order % 2 == 0 {
                Parity::Even
            } else {
                Parity::Odd
            },
            order,
        });
    }
    modes
}

/// Bisection for an increasing function with `f(lo) <= 0 <= f(hi)`, run
/// until the bracket stops shrinking.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Transverse field `E_y(x)` with unit amplitude in the core.
pub fn mode_profile(mode: &GuidedMode, slab: &SlabSpec, x: f64) -> Result<f64, WaveguideError> {
    let k_sq = slab.k0 * slab.k0 * (slab.n_core * slab.n_core - slab.n_clad * slab.n_clad);
    let mismatch = ((mode.kappa_t * mode.kappa_t + mode.gamma * mode.gamma) - k_sq).abs() / k_sq;
    if !(mismatch <= 1e-9) {
        return Err(WaveguideError::ModeSlabMismatch(mismatch));
    }
    let half_d = 0.5 * slab.thickness;
    let inside = |x: f64| match mode.parity {
        Parity::Even => (mode.kappa_t * x).cos(),
        Parity::Odd => (mode.kappa_t * x).sin(),
    };
    if x.abs() <= half_d {
        return Ok(inside(x));
    }
    let edge = inside(half_d.copysign(x));
    Ok(edge * (-mode.gamma * (x.abs() - half_d)).exp())
}
