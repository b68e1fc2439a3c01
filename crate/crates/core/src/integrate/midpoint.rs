use nalgebra::{DMatrix, DVector};

use super::Stepper;
use crate::error::{Error, Result};
use crate::phase::PhasePoint;
use crate::systems::{vector_field, Hamiltonian};

/// Implicit midpoint rule `z₁ = z₀ + h f((z₀ + z₁)/2)`.
///
/// Symplectic for any Hamiltonian and exact on quadratic invariants. The
/// implicit equation is solved by Newton iteration with the analytic vector
/// field and a forward-difference Jacobian, frozen at the predictor.
#[derive(Debug, Clone)]
pub struct ImplicitMidpoint {
    pub tol: f64,
    pub max_iter: usize,
}

impl ImplicitMidpoint {
    pub const NAME: &'static str = "implicit-midpoint";

    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter }
    }
}

fn field(sys: &dyn Hamiltonian, z: &[f64]) -> Result<Vec<f64>> {
    Ok(vector_field(sys, &PhasePoint::from_slice(z))?.to_vec())
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl Stepper for ImplicitMidpoint {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn step(&self, sys: &dyn Hamiltonian, pt: &PhasePoint, h: f64) -> Result<PhasePoint> {
        let z0 = pt.to_vec();
        let dim = z0.len();
        let f0 = field(sys, &z0)?;
        // explicit Euler predictor
        let mut z1: Vec<f64> = z0.iter().zip(&f0).map(|(z, f)| z + h * f).collect();

        let mid = |z1: &[f64]| -> Vec<f64> { z0.iter().zip(z1).map(|(a, b)| 0.5 * (a + b)).collect() };
        let residual = |z1: &[f64], fm: &[f64]| -> Vec<f64> {
            (0..dim).map(|i| z1[i] - z0[i] - h * fm[i]).collect()
        };

        // J_G = I − (h/2) J_f(mid), J_f by forward differences
        let m0 = mid(&z1);
        let fm0 = field(sys, &m0)?;
        let mut jac = DMatrix::<f64>::identity(dim, dim);
        for j in 0..dim {
            let dz = 1e-7 * (1.0 + m0[j].abs());
            let mut shifted = m0.clone();
            shifted[j] += dz;
            let fj = field(sys, &shifted)?;
            for i in 0..dim {
                jac[(i, j)] -= 0.5 * h * (fj[i] - fm0[i]) / dz;
            }
        }
        let lu = jac.lu();

        let mut fm = fm0;
        let mut last_residual = inf_norm(&residual(&z1, &fm));
        for _ in 0..self.max_iter {
            let g = DVector::from_vec(residual(&z1, &fm));
            let delta = lu.solve(&g).ok_or(Error::StepFailure {
                time: f64::NAN,
                residual: last_residual,
                iterations: 0,
            })?;
            for i in 0..dim {
                z1[i] -= delta[i];
            }
            fm = field(sys, &mid(&z1))?;
            last_residual = inf_norm(&residual(&z1, &fm));
            if inf_norm(delta.as_slice()) <= self.tol * (1.0 + inf_norm(&z1)) {
                return Ok(PhasePoint::from_slice(&z1));
            }
        }
        Err(Error::StepFailure {
            time: f64::NAN,
            residual: last_residual,
            iterations: self.max_iter,
        })
    }
}

/// Fourth-order symplectic composition of [`ImplicitMidpoint`]
/// (Yoshida triple jump): substeps `γ₁h, γ₂h, γ₁h` with
/// `γ₁ = 1/(2 − 2^{1/3})`, `γ₂ = 1 − 2γ₁`.
#[derive(Debug, Clone)]
pub struct TripleJumpMidpoint {
    pub inner: ImplicitMidpoint,
}

impl TripleJumpMidpoint {
    pub const NAME: &'static str = "implicit-midpoint-4";

    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self {
            inner: ImplicitMidpoint::new(tol, max_iter),
        }
    }

    fn gammas() -> (f64, f64) {
        let g1 = 1.0 / (2.0 - 2f64.cbrt());
        (g1, 1.0 - 2.0 * g1)
    }
}

impl Stepper for TripleJumpMidpoint {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn step(&self, sys: &dyn Hamiltonian, pt: &PhasePoint, h: f64) -> Result<PhasePoint> {
        let (g1, g2) = Self::gammas();
        let a = self.inner.step(sys, pt, g1 * h)?;
        let b = self.inner.step(sys, &a, g2 * h)?;
        self.inner.step(sys, &b, g1 * h)
    }
}
