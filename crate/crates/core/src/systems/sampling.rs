//! Seeded sampling of energy surfaces `H = E`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Hamiltonian;
use crate::error::{Error, Result};
use crate::phase::PhasePoint;

/// Failed draws allowed per requested point.
pub const REDRAW_BUDGET: usize = 1000;

/// Absolute on-surface tolerance for energy `E`.
pub fn surface_tolerance(energy: f64) -> f64 {
    1e-10 * energy.abs().max(1.0)
}

/// Per-sample generator: `seed ⊕ index`.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index as u64)
}

/// Draws `count` points on `H = E`. Point `i` depends only on `(seed, i)`, so
/// the result is reproducible bit-for-bit and independent of evaluation order.
pub fn sample_energy_surface(
    sys: &dyn Hamiltonian,
    energy: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<PhasePoint>> {
    let budget = REDRAW_BUDGET * count.max(1);
    let mut failures = 0usize;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = sample_rng(seed, i);
        loop {
            match sys.sample_point(energy, &mut rng)? {
                Some(pt) => {
                    out.push(pt);
                    break;
                }
                None => {
                    failures += 1;
                    if failures >= budget {
                        return Err(Error::SurfaceUnreachable { attempts: failures });
                    }
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn unit_vector(n: usize, rng: &mut dyn RngCore) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Generic draw: `q` uniform in `bounds`, rejected unless `potential(q) < E`;
/// random momentum direction `u`; bracket and bisect `r` so that
/// `H(q, r u) = E`.
pub(crate) fn ray_sample(
    sys: &dyn Hamiltonian,
    energy: f64,
    bounds: &[(f64, f64)],
    potential: impl Fn(&[f64]) -> f64,
    rng: &mut dyn RngCore,
) -> Result<Option<PhasePoint>> {
    if bounds.iter().all(|(lo, hi)| hi - lo <= 0.0) {
        return Err(Error::DegenerateSurface {
            energy,
            reason: "admissible configuration box has zero volume".into(),
        });
    }
    let q: Vec<f64> = bounds
        .iter()
        .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo })
        .collect();
    if !(potential(&q) < energy) {
        return Ok(None);
    }
    let u = unit_vector(q.len(), rng);
    let at = |r: f64| -> Result<f64> {
        let pt = PhasePoint {
            q: q.clone(),
            p: u.iter().map(|x| r * x).collect(),
        };
        Ok(sys.energy(&pt)? - energy)
    };
    let mut lo = 0.0;
    if at(lo)? >= 0.0 {
        return Ok(None);
    }
    let mut hi = 1.0;
    let mut grown = 0;
    while at(hi)? <= 0.0 {
        lo = hi;
        hi *= 2.0;
        grown += 1;
        if grown > 200 {
            return Ok(None);
        }
    }
    let tol = surface_tolerance(energy);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (r, f) = {
        let (flo, fhi) = (at(lo)?, at(hi)?);
        if flo.abs() <= fhi.abs() {
            (lo, flo)
        } else {
            (hi, fhi)
        }
    };
    if f.abs() > tol {
        return Ok(None);
    }
    Ok(Some(PhasePoint {
        p: u.iter().map(|x| r * x).collect(),
        q,
    }))
}
