use std::f64::consts::PI;
use std::sync::Arc;

use rand::RngCore;
use serde_json::json;

use super::sampling::ray_sample;
use super::{check_dims, require_positive, Convention, Hamiltonian, Params, SystemSpec};
use crate::error::{Error, Result};
use crate::phase::PhasePoint;

/// `H = |p|²/(2m) + ½ k |q|²` on `T*ℝⁿ`.
#[derive(Debug, Clone)]
pub struct HarmonicOscillator {
    pub m: f64,
    pub k: f64,
    pub n: usize,
    pub convention: Convention,
}

impl HarmonicOscillator {
    pub const KIND: &'static str = "harmonic-oscillator";

    pub fn new(m: f64, k: f64, n: usize) -> Result<Self> {
        require_positive(Self::KIND, "m", m)?;
        require_positive(Self::KIND, "k", k)?;
        if n == 0 {
            return Err(Error::Parameter("harmonic-oscillator: dof must be >= 1".into()));
        }
        Ok(Self {
            m,
            k,
            n,
            convention: Convention::Canonical,
        })
    }

    /// `2π √(m/k)`, the same for every orbit.
    pub fn period(&self) -> f64 {
        2.0 * PI * (self.m / self.k).sqrt()
    }

    pub(crate) fn from_spec(spec: &SystemSpec) -> Result<Arc<dyn Hamiltonian>> {
        let p = Params::new(spec);
        let mut ho = Self::new(p.f64_or("m", 1.0)?, p.f64_or("k", 1.0)?, p.usize_or("dof", 1)?)?;
        ho.convention = spec.convention.unwrap_or(Convention::Canonical);
        Ok(Arc::new(ho))
    }
}

impl Hamiltonian for HarmonicOscillator {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    fn dof(&self) -> usize {
        self.n
    }

    fn convention(&self) -> Convention {
        self.convention
    }

    fn energy(&self, pt: &PhasePoint) -> Result<f64> {
        check_dims(Self::KIND, self.n, pt)?;
        let p2: f64 = pt.p.iter().map(|v| v * v).sum();
        let q2: f64 = pt.q.iter().map(|v| v * v).sum();
        Ok(p2 / (2.0 * self.m) + 0.5 * self.k * q2)
    }

    fn gradient(&self, pt: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
        check_dims(Self::KIND, self.n, pt)?;
        Ok((
            pt.q.iter().map(|v| self.k * v).collect(),
            pt.p.iter().map(|v| v / self.m).collect(),
        ))
    }

    fn is_separable(&self) -> bool {
        true
    }

    fn reference_period(&self, _pt: &PhasePoint) -> Option<f64> {
        Some(self.period())
    }

    fn sample_point(&self, energy: f64, rng: &mut dyn RngCore) -> Result<Option<PhasePoint>> {
        if energy <= 0.0 {
            return Err(Error::DegenerateSurface {
                energy,
                reason: "E <= 0 is the critical value (origin) or below the minimum".into(),
            });
        }
        // |q_i| <= sqrt(2E/k)
        let r = (2.0 * energy / self.k).sqrt();
        let bounds = vec![(-r, r); self.n];
        let k = self.k;
        ray_sample(
            self,
            energy,
            &bounds,
            |q| 0.5 * k * q.iter().map(|v| v * v).sum::<f64>(),
            rng,
        )
    }

    fn spec(&self) -> SystemSpec {
        SystemSpec::new(Self::KIND, json!({"m": self.m, "k": self.k, "dof": self.n}))
            .with_convention(self.convention)
    }
}

/// `H = ½ Σ (p_i² + ω_i² q_i²)` in two degrees of freedom.
#[derive(Debug, Clone)]
pub struct AnisotropicOscillator2D {
    pub omega: [f64; 2],
    pub convention: Convention,
}

impl AnisotropicOscillator2D {
    pub const KIND: &'static str = "anisotropic-oscillator-2d";

    pub fn new(omega1: f64, omega2: f64) -> Result<Self> {
        require_positive(Self::KIND, "omega1", omega1)?;
        require_positive(Self::KIND, "omega2", omega2)?;
        Ok(Self {
            omega: [omega1, omega2],
            convention: Convention::Canonical,
        })
    }

    pub(crate) fn from_spec(spec: &SystemSpec) -> Result<Arc<dyn Hamiltonian>> {
        let p = Params::new(spec);
        let mut s = Self::new(p.f64_or("omega1", 1.0)?, p.f64_or("omega2", 2f64.sqrt())?)?;
        s.convention = spec.convention.unwrap_or(Convention::Canonical);
        Ok(Arc::new(s))
    }
}

impl Hamiltonian for AnisotropicOscillator2D {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    fn dof(&self) -> usize {
        2
    }

    fn convention(&self) -> Convention {
        self.convention
    }

    fn energy(&self, pt: &PhasePoint) -> Result<f64> {
        check_dims(Self::KIND, 2, pt)?;
        Ok((0..2)
            .map(|i| 0.5 * (pt.p[i] * pt.p[i] + self.omega[i].powi(2) * pt.q[i] * pt.q[i]))
            .sum())
    }

    fn gradient(&self, pt: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
        check_dims(Self::KIND, 2, pt)?;
        Ok((
            (0..2).map(|i| self.omega[i].powi(2) * pt.q[i]).collect(),
            pt.p.clone(),
        ))
    }

    fn is_separable(&self) -> bool {
        true
    }

    /// Longest linear period, `2π / min ω`.
    fn reference_period(&self, _pt: &PhasePoint) -> Option<f64> {
        Some(2.0 * PI / self.omega[0].min(self.omega[1]))
    }

    fn sample_point(&self, energy: f64, rng: &mut dyn RngCore) -> Result<Option<PhasePoint>> {
        if energy <= 0.0 {
            return Err(Error::DegenerateSurface {
                energy,
                reason: "E <= 0 is the critical value (origin) or below the minimum".into(),
            });
        }
        let bounds: Vec<(f64, f64)> = self
            .omega
            .iter()
            .map(|w| {
                let r = (2.0 * energy).sqrt() / w;
                (-r, r)
            })
            .collect();
        let w = self.omega;
        ray_sample(
            self,
            energy,
            &bounds,
            |q| 0.5 * (w[0] * w[0] * q[0] * q[0] + w[1] * w[1] * q[1] * q[1]),
            rng,
        )
    }

    fn spec(&self) -> SystemSpec {
        SystemSpec::new(
            Self::KIND,
            json!({"omega1": self.omega[0], "omega2": self.omega[1]}),
        )
        .with_convention(self.convention)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{eval_gradient, eval_hamiltonian, sample_energy_surface, vector_field};

    fn ho(n: usize) -> HarmonicOscillator {
        HarmonicOscillator::new(1.0, 1.0, n).unwrap()
    }

    #[test]
    fn energy_examples() {
        let pt = PhasePoint::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(eval_hamiltonian(&ho(2), &pt).unwrap(), 0.5);
        assert_eq!(eval_hamiltonian(&ho(2), &PhasePoint::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn gradient_and_field_examples() {
        let pt = PhasePoint::new(vec![1.0, 0.0], vec![0.0, 2.0]).unwrap();
        let (dq, dp) = eval_gradient(&ho(2), &pt).unwrap();
        assert_eq!(dq, vec![1.0, 0.0]);
        assert_eq!(dp, vec![0.0, 2.0]);

        let pt = PhasePoint::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let v = vector_field(&ho(2), &pt).unwrap();
        assert_eq!(v.q, vec![0.0, 0.0]);
        assert_eq!(v.p, vec![-1.0, 0.0]);
    }

    #[test]
    fn wrong_dimension_is_domain_error() {
        let pt = PhasePoint::new(vec![1.0], vec![0.0]).unwrap();
        assert!(matches!(ho(2).energy(&pt), Err(Error::Domain { .. })));
    }

    #[test]
    fn sampler_hits_surface() {
        let pts = sample_energy_surface(&ho(1), 0.5, 4, 0).unwrap();
        assert_eq!(pts.len(), 4);
        for pt in &pts {
            assert!((ho(1).energy(pt).unwrap() - 0.5).abs() <= 1e-10);
        }
        let aniso = AnisotropicOscillator2D::new(1.0, 2f64.sqrt()).unwrap();
        for pt in sample_energy_surface(&aniso, 1.0, 16, 3).unwrap() {
            assert!((aniso.energy(&pt).unwrap() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn critical_value_is_rejected() {
        let err = sample_energy_surface(&ho(1), 0.0, 1, 0).unwrap_err();
        assert!(matches!(err, Error::DegenerateSurface { .. }));
    }

    #[test]
    fn invalid_parameters() {
        assert!(HarmonicOscillator::new(0.0, 1.0, 1).is_err());
        assert!(HarmonicOscillator::new(1.0, -1.0, 1).is_err());
        assert!(HarmonicOscillator::new(1.0, 1.0, 0).is_err());
        assert!(AnisotropicOscillator2D::new(1.0, 0.0).is_err());
    }
}
