use std::f64::consts::PI;
use std::sync::Arc;

use rand::RngCore;
use serde_json::json;

use super::sampling::ray_sample;
use super::{check_dims, require_positive, Convention, Hamiltonian, Params, SystemSpec};
use crate::error::{Error, Result};
use crate::phase::PhasePoint;

/// One-body Kepler problem `H = |p|²/(2m) − G M m / |q|`.
///
/// The flow is `q'' = −G M q/|q|³`, so bound orbits of energy `E < 0` have
/// semi-major axis `a = −G M m/(2E)` and period `2π √(a³/(G M))`.
#[derive(Debug, Clone)]
pub struct Kepler {
    pub g: f64,
    pub central_mass: f64,
    pub mass: f64,
    pub dim: usize,
    /// Trajectories entering `|q| < r_min` are truncated.
    pub r_min: f64,
    /// Sampler rejects orbits with perihelion below this fraction of `a`.
    pub min_perihelion_frac: f64,
    pub convention: Convention,
}

impl Kepler {
    pub const KIND: &'static str = "kepler";

    pub fn new(g: f64, central_mass: f64, mass: f64) -> Result<Self> {
        require_positive(Self::KIND, "G", g)?;
        require_positive(Self::KIND, "M", central_mass)?;
        require_positive(Self::KIND, "m", mass)?;
        Ok(Self {
            g,
            central_mass,
            mass,
            dim: 2,
            r_min: 1e-3,
            min_perihelion_frac: 0.1,
            convention: Convention::Canonical,
        })
    }

    pub(crate) fn from_spec(spec: &SystemSpec) -> Result<Arc<dyn Hamiltonian>> {
        let p = Params::new(spec);
        let mut k = Self::new(p.f64_or("G", 1.0)?, p.f64_or("M", 1.0)?, p.f64_or("m", 1.0)?)?;
        k.dim = p.usize_or("dim", 2)?;
        if !(2..=3).contains(&k.dim) {
            return Err(Error::Parameter("kepler: dim must be 2 or 3".into()));
        }
        k.r_min = p.f64_or("r_min", 1e-3)?;
        require_positive(Self::KIND, "r_min", k.r_min)?;
        k.min_perihelion_frac = p.f64_or("min_perihelion_frac", 0.1)?;
        if !(0.0..1.0).contains(&k.min_perihelion_frac) {
            return Err(Error::Parameter(
                "kepler: min_perihelion_frac must lie in [0, 1)".into(),
            ));
        }
        k.convention = spec.convention.unwrap_or(Convention::Canonical);
        Ok(Arc::new(k))
    }

    fn gmm(&self) -> f64 {
        self.g * self.central_mass * self.mass
    }

    /// `a = −G M m / (2E)`; `None` for unbound energies.
    pub fn semi_major_axis(&self, energy: f64) -> Option<f64> {
        (energy < 0.0).then(|| -self.gmm() / (2.0 * energy))
    }

    /// `2π √(a³/(G M))`.
    pub fn period_for_energy(&self, energy: f64) -> Option<f64> {
        self.semi_major_axis(energy)
            .map(|a| 2.0 * PI * (a.powi(3) / (self.g * self.central_mass)).sqrt())
    }

    /// Perihelion state of the bound orbit with eccentricity `e` and energy `E`.
    pub fn orbit_at_perihelion(&self, eccentricity: f64, energy: f64) -> Result<PhasePoint> {
        let a = self
            .semi_major_axis(energy)
            .ok_or_else(|| Error::Parameter(format!("kepler: E={energy} is not bound")))?;
        if !(0.0..1.0).contains(&eccentricity) {
            return Err(Error::Parameter(format!(
                "kepler: eccentricity {eccentricity} outside [0, 1)"
            )));
        }
        let rp = a * (1.0 - eccentricity);
        let vp = (self.g * self.central_mass * (1.0 + eccentricity) / rp).sqrt();
        let mut q = vec![0.0; self.dim];
        let mut p = vec![0.0; self.dim];
        q[0] = rp;
        p[1] = self.mass * vp;
        PhasePoint::new(q, p)
    }

    pub fn eccentricity(&self, pt: &PhasePoint) -> Result<f64> {
        let e = self.energy(pt)?;
        let l2 = angular_momentum_sq(pt);
        let k = self.gmm();
        Ok((1.0 + 2.0 * e * l2 / (self.mass * k * k)).max(0.0).sqrt())
    }
}

fn radius(q: &[f64]) -> f64 {
    q.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn angular_momentum_sq(pt: &PhasePoint) -> f64 {
    let (q, p) = (&pt.q, &pt.p);
    if q.len() == 2 {
        let l = q[0] * p[1] - q[1] * p[0];
        l * l
    } else {
        let l = [
            q[1] * p[2] - q[2] * p[1],
            q[2] * p[0] - q[0] * p[2],
            q[0] * p[1] - q[1] * p[0],
        ];
        l.iter().map(|v| v * v).sum()
    }
}

impl Hamiltonian for Kepler {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    fn dof(&self) -> usize {
        self.dim
    }

    fn convention(&self) -> Convention {
        self.convention
    }

    fn check_domain(&self, pt: &PhasePoint) -> Result<()> {
        check_dims(Self::KIND, self.dim, pt)?;
        if radius(&pt.q) == 0.0 {
            return Err(Error::domain("kepler", "q = 0 (collision singularity)"));
        }
        Ok(())
    }

    fn energy(&self, pt: &PhasePoint) -> Result<f64> {
        self.check_domain(pt)?;
        let p2: f64 = pt.p.iter().map(|v| v * v).sum();
        Ok(p2 / (2.0 * self.mass) - self.gmm() / radius(&pt.q))
    }

    fn gradient(&self, pt: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_domain(pt)?;
        let r = radius(&pt.q);
        let c = self.gmm() / (r * r * r);
        Ok((
            pt.q.iter().map(|v| c * v).collect(),
            pt.p.iter().map(|v| v / self.mass).collect(),
        ))
    }

    fn is_separable(&self) -> bool {
        true
    }

    fn domain_exit(&self, pt: &PhasePoint) -> Option<String> {
        let r = radius(&pt.q);
        (r < self.r_min || !r.is_finite())
            .then(|| format!("near-collision: |q| = {r:e} < r_min = {:e}", self.r_min))
    }

    fn reference_period(&self, pt: &PhasePoint) -> Option<f64> {
        self.energy(pt).ok().and_then(|e| self.period_for_energy(e))
    }

    fn sample_point(&self, energy: f64, rng: &mut dyn RngCore) -> Result<Option<PhasePoint>> {
        let a = self.semi_major_axis(energy).ok_or_else(|| Error::DegenerateSurface {
            energy,
            reason: "E >= 0: energy surface is not compact".into(),
        })?;
        // V(q) < E  <=>  |q| < 2a
        let bounds = vec![(-2.0 * a, 2.0 * a); self.dim];
        let k = self.gmm();
        let r_min = self.r_min;
        let pt = ray_sample(
            self,
            energy,
            &bounds,
            |q| {
                let r = radius(q);
                if r < r_min {
                    f64::INFINITY
                } else {
                    -k / r
                }
            },
            rng,
        )?;
        let Some(pt) = pt else { return Ok(None) };
        if self.eccentricity(&pt)? > 1.0 - self.min_perihelion_frac {
            return Ok(None);
        }
        Ok(Some(pt))
    }

    fn spec(&self) -> SystemSpec {
        SystemSpec::new(
            Self::KIND,
            json!({
                "G": self.g, "M": self.central_mass, "m": self.mass, "dim": self.dim,
                "r_min": self.r_min, "min_perihelion_frac": self.min_perihelion_frac,
            }),
        )
        .with_convention(self.convention)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::sample_energy_surface;

    fn unit() -> Kepler {
        Kepler::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn gradient_at_unit_radius() {
        let pt = PhasePoint::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let (dq, dp) = unit().gradient(&pt).unwrap();
        assert_eq!(dq, vec![1.0, 0.0]);
        assert_eq!(dp, vec![0.0, 1.0]);
    }

    #[test]
    fn origin_is_domain_error() {
        let pt = PhasePoint::zeros(2);
        let err = unit().energy(&pt).unwrap_err();
        match err {
            Error::Domain { component, message } => {
                assert_eq!(component, "kepler");
                assert!(message.contains("q = 0"));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn perihelion_state_matches_energy_and_eccentricity() {
        let k = unit();
        let pt = k.orbit_at_perihelion(0.5, -0.5).unwrap();
        assert!((pt.q[0] - 0.5).abs() < 1e-15);
        assert!((pt.p[1] - 3f64.sqrt()).abs() < 1e-15);
        assert!((k.energy(&pt).unwrap() + 0.5).abs() < 1e-14);
        assert!((k.eccentricity(&pt).unwrap() - 0.5).abs() < 1e-12);
        assert!((k.period_for_energy(-0.5).unwrap() - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn sampled_bound_states_stay_inside_apocentre_limit() {
        let k = unit();
        let pts = sample_energy_surface(&k, -0.5, 8, 11).unwrap();
        for pt in &pts {
            assert!(radius(&pt.q) < 2.0);
            assert!((k.energy(pt).unwrap() + 0.5).abs() <= 1e-10);
            assert!(k.eccentricity(pt).unwrap() <= 0.9 + 1e-12);
        }
    }

    #[test]
    fn unbound_energy_cannot_be_sampled() {
        assert!(sample_energy_surface(&unit(), 0.1, 1, 0).is_err());
    }
}
