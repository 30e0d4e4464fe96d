use num_complex::Complex64;

use super::{DetectError, DetectionParams, FieldTrace};
use crate::acoustic::intensity_coefficients;
use crate::fresnel::amplitude_coefficients_normal;
use crate::medium::WaveKind;

/// One flagged interface crossing.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceHit {
    pub ray_id: usize,
    /// Ray parameter of the last sample before the crossing.
    pub z: f64,
    pub position: Vec<f64>,
    pub t_hat: Complex64,
    pub r_hat: Complex64,
    /// Matched `(n1, n2)` or `(Z1, Z2)`.
    pub media_pair: (f64, f64),
    pub residual: f64,
}

/// Scans an EM trace for adjacent sample pairs whose amplitude ratios match
/// `t(n1, n2)` and `r(n1, n2)` of some candidate pair.
pub fn detect_interfaces_em(
    trace: &FieldTrace,
    candidates: &[(f64, f64)],
    params: &DetectionParams,
) -> Result<Vec<InterfaceHit>, DetectError> {
    trace.expect_kind(WaveKind::Em)?;
    let table = candidates
        .iter()
        .map(|&(n1, n2)| {
            let c = amplitude_coefficients_normal(n1, n2)?;
            Ok(((n1, n2), c.t, c.r))
        })
        .collect::<Result<Vec<_>, DetectError>>()?;
    Ok(scan(trace, &table, params))
}

/// Same scan on intensity ratios against `T_I`, `R_I` of the configured
/// coefficient variant.
pub fn detect_interfaces_acoustic(
    trace: &FieldTrace,
    candidates: &[(f64, f64)],
    params: &DetectionParams,
) -> Result<Vec<InterfaceHit>, DetectError> {
    trace.expect_kind(WaveKind::Acoustic)?;
    let table = candidates
        .iter()
        .map(|&(z1, z2)| {
            let c = intensity_coefficients(z1, z2, params.variant)?;
            Ok(((z1, z2), c.transmission, c.reflection))
        })
        .collect::<Result<Vec<_>, DetectError>>()?;
    Ok(scan(trace, &table, params))
}

type Candidate = ((f64, f64), f64, f64);

fn scan(trace: &FieldTrace, table: &[Candidate], params: &DetectionParams) -> Vec<InterfaceHit> {
    let mut hits = Vec::new();
    let mut previous_flagged = false;
    for pair in trace.samples.windows(2) {
        let (before, after) = (&pair[0], &pair[1]);
        let matched = if before.incident.norm() > 0.0 {
            let t_hat = after.incident / before.incident;
            let r_hat = before.reflected / before.incident;
            best_match(t_hat, r_hat, table, params).map(|m| (t_hat, r_hat, m))
        } else {
            None
        };
        match matched {
            Some((t_hat, r_hat, (media_pair, residual))) => {
                if !previous_flagged {
                    hits.push(InterfaceHit {
                        ray_id: trace.ray_id,
                        z: before.z,
                        position: trace.ray.point_at(before.z - trace.samples[0].z),
                        t_hat,
                        r_hat,
                        media_pair,
                        residual,
                    });
                }
                previous_flagged = true;
            }
            None => previous_flagged = false,
        }
    }
    hits
}

/// Residual is the larger of the two scaled errors, so `residual <= tol`
/// is exactly the pair of acceptance inequalities.
fn best_match(
    t_hat: Complex64,
    r_hat: Complex64,
    table: &[Candidate],
    params: &DetectionParams,
) -> Option<((f64, f64), f64)> {
    let mut best: Option<((f64, f64), f64)> = None;
    for &(pair, t, r) in table {
        let et = (t_hat - t).norm() / t.abs();
        let er = (r_hat - r).norm() / r.abs().max(params.tol_floor);
        let residual = et.max(er);
        if !(residual <= params.tol) {
            continue;
        }
        let better = match best {
            None => true,
            Some((bp, br)) => {
                residual < br
                    || (residual == br
                        && pair
                            .0
                            .total_cmp(&bp.0)
                            .then(pair.1.total_cmp(&bp.1))
                            .is_lt())
            }
        };
        if better {
            best = Some((pair, residual));
        }
    }
    best
}
