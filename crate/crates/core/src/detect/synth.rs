use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DetectError, FieldTrace, Ray, TraceSample};
use crate::acoustic::{intensity_coefficients, CoefficientVariant};
use crate::fresnel::amplitude_coefficients_normal;
use crate::geometry::{Face, MediumId, SimplicialComplex};
use crate::medium::Medium;

/// Barycentric slack when clipping the ray against a simplex.
const BARY_EPS: f64 = 1e-9;
/// `|cos|` a crossing must reach to count as normal incidence.
const NORMAL_COS: f64 = 1.0 - 1e-9;

/// Stretch of the ray inside one simplex.
#[derive(Debug, Clone)]
struct Segment {
    simplex: usize,
    enter: f64,
    exit: f64,
}

/// Synthesizes the plane-wave trace along `ray`.
///
/// The incident wave starts with unit amplitude (EM) or unit intensity
/// (acoustic) in the first compartment and is multiplied by `t` (or `T_I`)
/// at each crossing between different media. Every sample of a compartment
/// also carries the wave reflected by the next interface ahead, `r` (or
/// `R_I`) times the local incident value; the last compartment reflects
/// nothing. With `noise_sigma > 0` each channel of each sample is scaled by
/// `1 + sigma N(0,1)`, drawn from a ChaCha stream keyed by `(seed, ray_id)`.
pub fn synthesize_ray_trace(
    complex: &SimplicialComplex,
    media: &[Medium],
    ray: &Ray,
    ray_id: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<FieldTrace, DetectError> {
    if ray.dim() != complex.dim() {
        return Err(DetectError::InvalidRay(format!(
            "ray has dimension {}, complex has {}",
            ray.dim(),
            complex.dim()
        )));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(DetectError::InvalidRay(
            "noise sigma must be non-negative".into(),
        ));
    }
    let medium_at = |s: usize| -> Result<(MediumId, &Medium), DetectError> {
        let id = complex.medium_of(s).ok_or(DetectError::MissingMedium(s))?;
        let m = media.get(id.0).ok_or(DetectError::UnknownMedium(id.0))?;
        Ok((id, m))
    };

    let segments = clip_ray(complex, ray)?;
    let wave_kind = medium_at(segments[0].simplex)?.1.wave_kind();

    // compartments: (medium id, medium, start z); consecutive same-medium
    // segments merge because no wave sees the seam between them
    let mut compartments: Vec<(MediumId, Medium, f64)> = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        let (id, m) = medium_at(seg.simplex)?;
        if m.wave_kind() != wave_kind {
            return Err(DetectError::MixedWaveKinds);
        }
        if i > 0 {
            let prev = &segments[i - 1];
            let z = 0.5 * (prev.exit + seg.enter);
            let facet = shared_facet(complex, prev.simplex, seg.simplex)
                .ok_or(DetectError::DegenerateCrossing(z))?;
            let (prev_id, _) = medium_at(prev.simplex)?;
            if prev_id != id {
                check_normal(complex, prev.simplex, &facet, ray, z)?;
            }
        }
        match compartments.last() {
            Some((last, _, _)) if *last == id => {}
            _ => compartments.push((
                id,
                *m,
                if i == 0 {
                    0.0
                } else {
                    0.5 * (segments[i - 1].exit + seg.enter)
                },
            )),
        }
    }

    let mut incident = Vec::with_capacity(compartments.len());
    let mut reflected = Vec::with_capacity(compartments.len());
    let mut current = 1.0;
    for (j, (_, m, _)) in compartments.iter().enumerate() {
        incident.push(current);
        match compartments.get(j + 1) {
            Some((_, next, _)) => {
                let (t, r) = coefficients(m, next)?;
                reflected.push(r * current);
                current *= t;
            }
            None => reflected.push(0.0),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ray_id as u64);
    let mut jitter = || -> f64 {
        if noise_sigma > 0.0 {
            let n: f64 = StandardNormal.sample(&mut rng);
            1.0 + noise_sigma * n
        } else {
            1.0
        }
    };

    let mut samples = Vec::with_capacity(ray.sample_count());
    let mut j = 0;
    for z in ray.grid() {
        while j + 1 < compartments.len() && compartments[j + 1].2 <= z {
            j += 1;
        }
        let inc = incident[j] * jitter();
        let refl = reflected[j] * jitter();
        samples.push(TraceSample {
            z,
            incident: Complex64::new(inc, 0.0),
            reflected: Complex64::new(refl, 0.0),
            medium: compartments[j].0,
        });
    }

    Ok(FieldTrace {
        ray_id,
        ray: ray.clone(),
        wave_kind,
        samples,
    })
}

/// `(t, r)` for EM field amplitudes or `(T_I, R_I)` for acoustic intensity.
fn coefficients(from: &Medium, to: &Medium) -> Result<(f64, f64), DetectError> {
    match (from, to) {
        (Medium::Em { medium: a, .. }, Medium::Em { medium: b, .. }) => {
            let c = amplitude_coefficients_normal(a.index, b.index)?;
            Ok((c.t, c.r))
        }
        (Medium::Acoustic(a), Medium::Acoustic(b)) => {
            let c = intensity_coefficients(
                a.impedance,
                b.impedance,
                CoefficientVariant::EnergyConserving,
            )?;
            Ok((c.transmission, c.reflection))
        }
        _ => Err(DetectError::MixedWaveKinds),
    }
}

/// Ray parameter intervals inside each simplex, sorted and checked to tile
/// `[0, length]`.
fn clip_ray(complex: &SimplicialComplex, ray: &Ray) -> Result<Vec<Segment>, DetectError> {
    let length = ray.length();
    let gap_tol = 1e-9 * length.max(1.0);
    let mut segments = Vec::new();
    for s in 0..complex.simplices().len() {
        let (inv, base) = complex.barycentric_frame(s);
        let n = complex.dim();
        // lambda_i(t) = a_i + b_i t
        let mut a = vec![0.0; n + 1];
        let mut b = vec![0.0; n + 1];
        for i in 0..n {
            let row = inv.row(i);
            a[i + 1] = (0..n).map(|c| row[c] * (ray.origin()[c] - base[c])).sum();
            b[i + 1] = (0..n).map(|c| row[c] * ray.direction()[c]).sum();
        }
        a[0] = 1.0 - a[1..].iter().sum::<f64>();
        b[0] = -b[1..].iter().sum::<f64>();

        let (mut lo, mut hi) = (0.0f64, length);
        let mut empty = false;
        for i in 0..=n {
            if b[i].abs() < 1e-15 {
                if a[i] < -BARY_EPS {
                    empty = true;
                }
                continue;
            }
            let t = (-BARY_EPS - a[i]) / b[i];
            if b[i] > 0.0 {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
        }
        if !empty && hi - lo > gap_tol {
            segments.push(Segment {
                simplex: s,
                enter: lo,
                exit: hi,
            });
        }
    }
    segments.sort_by(|x, y| x.enter.total_cmp(&y.enter));

    let Some(first) = segments.first() else {
        return Err(DetectError::RayOutsideComplex(0.0));
    };
    if first.enter > gap_tol {
        return Err(DetectError::RayOutsideComplex(0.0));
    }
    for w in segments.windows(2) {
        // slack of BARY_EPS makes neighbours overlap slightly; anything
        // beyond that is a ray running inside a shared face
        let overlap_tol = gap_tol + 4.0 * BARY_EPS * length.max(1.0);
        if w[1].enter > w[0].exit + gap_tol {
            return Err(DetectError::RayOutsideComplex(w[0].exit));
        }
        if w[0].exit - w[1].enter > overlap_tol {
            return Err(DetectError::DegenerateCrossing(w[1].enter));
        }
    }
    let last = segments.last().expect("non-empty");
    if last.exit < length - gap_tol {
        return Err(DetectError::RayOutsideComplex(last.exit));
    }
    Ok(segments)
}

fn shared_facet(complex: &SimplicialComplex, a: usize, b: usize) -> Option<Face> {
    let sb = &complex.simplices()[b];
    let common: Vec<usize> = complex.simplices()[a]
        .iter()
        .copied()
        .filter(|v| sb.contains(v))
        .collect();
    (common.len() == complex.dim()).then(|| Face::new(common))
}

/// The facet normal is the gradient of the barycentric coordinate of the
/// vertex opposite the facet.
fn check_normal(
    complex: &SimplicialComplex,
    simplex: usize,
    facet: &Face,
    ray: &Ray,
    z: f64,
) -> Result<(), DetectError> {
    debug_assert!(complex
        .facet_owners(facet)
        .is_some_and(|o| o.contains(&simplex)));
    let local = complex.simplices()[simplex]
        .iter()
        .position(|v| !facet.contains(*v))
        .expect("facet omits one vertex");
    debug_assert_eq!(&complex.facet_opposite(simplex, local), facet);
    let (inv, _) = complex.barycentric_frame(simplex);
    let n = complex.dim();
    let grad: Vec<f64> = if local == 0 {
        (0..n)
            .map(|c| -(0..n).map(|r| inv[(r, c)]).sum::<f64>())
            .collect()
    } else {
        (0..n).map(|c| inv[(local - 1, c)]).collect()
    };
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let cosine = grad
        .iter()
        .zip(ray.direction())
        .map(|(g, d)| g * d)
        .sum::<f64>()
        .abs()
        / norm;
    if cosine > NORMAL_COS {
        Ok(())
    } else {
        Err(DetectError::ObliqueCrossing {
            facet: facet.vertices().to_vec(),
            z,
            cosine,
        })
    }
}
