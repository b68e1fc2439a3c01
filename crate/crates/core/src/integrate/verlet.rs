use super::Stepper;
use crate::error::{Error, Result};
use crate::phase::PhasePoint;
use crate::systems::Hamiltonian;

/// Störmer–Verlet (kick–drift–kick) for separable `H = T(p) + V(q)`.
///
/// Second order, symplectic and symmetric: `step(h) ∘ step(−h)` is the
/// identity up to rounding.
#[derive(Debug, Clone, Copy, Default)]
pub struct StormerVerlet;

impl StormerVerlet {
    pub const NAME: &'static str = "verlet";
}

impl Stepper for StormerVerlet {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn admits(&self, sys: &dyn Hamiltonian) -> Result<()> {
        if sys.is_separable() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "verlet requires a separable Hamiltonian; `{}` is not (use implicit-midpoint)",
                sys.kind()
            )))
        }
    }

    fn step(&self, sys: &dyn Hamiltonian, pt: &PhasePoint, h: f64) -> Result<PhasePoint> {
        self.admits(sys)?;
        let s = sys.convention().sign();
        // dH/dq depends on q only and dH/dp on p only, so each half uses the
        // matching component of a full gradient evaluation.
        let (dq0, _) = sys.gradient(pt)?;
        let p_half: Vec<f64> = pt.p.iter().zip(&dq0).map(|(p, g)| p - s * 0.5 * h * g).collect();
        let mid = PhasePoint {
            q: pt.q.clone(),
            p: p_half,
        };
        let (_, dp) = sys.gradient(&mid)?;
        let q1: Vec<f64> = pt.q.iter().zip(&dp).map(|(q, g)| q + s * h * g).collect();
        let drifted = PhasePoint { q: q1, p: mid.p };
        let (dq1, _) = sys.gradient(&drifted)?;
        let p1 = drifted
            .p
            .iter()
            .zip(&dq1)
            .map(|(p, g)| p - s * 0.5 * h * g)
            .collect();
        Ok(PhasePoint { q: drifted.q, p: p1 })
    }
}
