//! Fixed-step symplectic integration.
//!
//! Steppers are trait objects looked up by name in a [`StepperRegistry`];
//! they consume [`vector_field`](crate::systems::vector_field) semantics
//! through the system's gradient and sign convention and never re-derive signs.

pub mod csv;
mod midpoint;
mod verlet;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::PhasePoint;
use crate::systems::Hamiltonian;

pub use midpoint::{ImplicitMidpoint, TripleJumpMidpoint};
pub use verlet::StormerVerlet;

/// Integrator selection and tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    /// `verlet`, `implicit-midpoint` or `implicit-midpoint-4`.
    pub method: String,
    pub h: f64,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
}

fn default_newton_tol() -> f64 {
    1e-14
}

fn default_newton_max_iter() -> usize {
    50
}

impl StepperConfig {
    pub fn verlet(h: f64) -> Self {
        Self {
            method: StormerVerlet::NAME.into(),
            h,
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
        }
    }

    pub fn implicit_midpoint(h: f64) -> Self {
        Self {
            method: ImplicitMidpoint::NAME.into(),
            ..Self::verlet(h)
        }
    }

    /// Verlet when the system is separable, implicit midpoint otherwise.
    pub fn default_for(sys: &dyn Hamiltonian, h: f64) -> Self {
        if sys.is_separable() {
            Self::verlet(h)
        } else {
            Self::implicit_midpoint(h)
        }
    }

    pub fn with_h(&self, h: f64) -> Self {
        Self { h, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!("step h must be > 0 (got {})", self.h)));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol <= 1e-4) {
            return Err(Error::Config(format!(
                "newton_tol must lie in (0, 1e-4] (got {})",
                self.newton_tol
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Config("newton_max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// One-step map of a fixed-step integrator.
pub trait Stepper: Send + Sync {
    fn name(&self) -> &'static str;

    /// Advances `pt` by `h` (negative `h` integrates backwards).
    fn step(&self, sys: &dyn Hamiltonian, pt: &PhasePoint, h: f64) -> Result<PhasePoint>;

    /// Checks that the stepper may be used on `sys`.
    fn admits(&self, _sys: &dyn Hamiltonian) -> Result<()> {
        Ok(())
    }
}

pub type StepperFactory = fn(&StepperConfig) -> Box<dyn Stepper>;

/// Name → stepper factory.
#[derive(Clone)]
pub struct StepperRegistry {
    factories: BTreeMap<String, StepperFactory>,
}

impl StepperRegistry {
    pub fn builtin() -> Self {
        let mut r = Self {
            factories: BTreeMap::new(),
        };
        r.register(StormerVerlet::NAME, |_| Box::new(StormerVerlet));
        r.register(ImplicitMidpoint::NAME, |cfg| {
            Box::new(ImplicitMidpoint::new(cfg.newton_tol, cfg.newton_max_iter))
        });
        r.register(TripleJumpMidpoint::NAME, |cfg| {
            Box::new(TripleJumpMidpoint::new(cfg.newton_tol, cfg.newton_max_iter))
        });
        r
    }

    pub fn register(&mut self, name: &str, f: StepperFactory) {
        self.factories.insert(name.to_string(), f);
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn create(&self, cfg: &StepperConfig) -> Result<Box<dyn Stepper>> {
        cfg.validate()?;
        let f = self.factories.get(&cfg.method).ok_or_else(|| Error::Unknown {
            kind: "integrator",
            name: cfg.method.clone(),
        })?;
        Ok(f(cfg))
    }
}

impl Default for StepperRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Builtin stepper for `cfg`, checked against `sys`.
pub fn stepper_for(sys: &dyn Hamiltonian, cfg: &StepperConfig) -> Result<Box<dyn Stepper>> {
    let s = StepperRegistry::builtin().create(cfg)?;
    s.admits(sys)?;
    Ok(s)
}

/// One step of size `cfg.h`.
pub fn step(sys: &dyn Hamiltonian, pt: &PhasePoint, cfg: &StepperConfig) -> Result<PhasePoint> {
    sys.check_domain(pt)?;
    stepper_for(sys, cfg)?.step(sys, pt, cfg.h)
}

/// Time-stamped states on the uniform grid `0, h, 2h, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub energy0: f64,
    /// `max |H(state) − energy0|` over stored states.
    pub max_drift: f64,
    /// Set when integration stopped early on leaving the domain.
    pub exit_reason: Option<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Checks the stored invariants against `sys`.
    pub fn validate(&self, sys: &dyn Hamiltonian) -> Result<()> {
        if self.times.len() != self.states.len() || self.states.is_empty() {
            return Err(Error::Parameter("trajectory: times/states length mismatch".into()));
        }
        if self.times.len() > 1 {
            let h = self.times[1] - self.times[0];
            for w in self.times.windows(2) {
                let d = w[1] - w[0];
                if !(d > 0.0) || (d - h).abs() > 1e-12 * (1.0 + w[1].abs()) {
                    return Err(Error::Parameter("trajectory: non-uniform time grid".into()));
                }
            }
        }
        let drift = energy_drift(sys, self);
        if (drift - self.max_drift).abs() > 1e-15 * (1.0 + drift) {
            return Err(Error::Parameter(format!(
                "trajectory: stored max_drift {} != recomputed {drift}",
                self.max_drift
            )));
        }
        Ok(())
    }
}

/// Integrates from `pt0` to `t_max` and stores every state. `observer` is
/// called for each stored state, including the initial one.
pub fn integrate(
    sys: &dyn Hamiltonian,
    pt0: &PhasePoint,
    cfg: &StepperConfig,
    t_max: f64,
    mut observer: Option<&mut dyn FnMut(f64, &PhasePoint)>,
) -> Result<Trajectory> {
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::Parameter(format!("t_max must be >= 0 (got {t_max})")));
    }
    let stepper = stepper_for(sys, cfg)?;
    let energy0 = sys.energy(pt0)?;
    let n = steps_for(t_max, cfg.h);
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(0.0);
    states.push(pt0.clone());
    if let Some(obs) = observer.as_mut() {
        obs(0.0, pt0);
    }
    let mut max_drift = 0.0f64;
    let mut exit_reason = None;
    let mut current = pt0.clone();
    for i in 1..=n {
        let t = i as f64 * cfg.h;
        let next = stepper
            .step(sys, &current, cfg.h)
            .map_err(|e| attach_time(e, t))?;
        if let Some(reason) = sys.domain_exit(&next) {
            exit_reason = Some(format!("t={t}: {reason}"));
            break;
        }
        let e = match sys.energy(&next) {
            Ok(e) => e,
            Err(err) => {
                exit_reason = Some(format!("t={t}: {err}"));
                break;
            }
        };
        max_drift = max_drift.max((e - energy0).abs());
        if let Some(obs) = observer.as_mut() {
            obs(t, &next);
        }
        times.push(t);
        states.push(next.clone());
        current = next;
    }
    Ok(Trajectory {
        times,
        states,
        energy0,
        max_drift,
        exit_reason,
    })
}

/// Max energy deviation along an integration without storing states.
pub fn drift_monitor(
    sys: &dyn Hamiltonian,
    pt0: &PhasePoint,
    cfg: &StepperConfig,
    t_max: f64,
) -> Result<f64> {
    let stepper = stepper_for(sys, cfg)?;
    let energy0 = sys.energy(pt0)?;
    let mut current = pt0.clone();
    let mut max_drift = 0.0f64;
    for i in 1..=steps_for(t_max, cfg.h) {
        current = stepper
            .step(sys, &current, cfg.h)
            .map_err(|e| attach_time(e, i as f64 * cfg.h))?;
        max_drift = max_drift.max((sys.energy(&current)? - energy0).abs());
    }
    Ok(max_drift)
}

/// `max |H(state) − H(state₀)|`; infinite if a stored state is inadmissible.
pub fn energy_drift(sys: &dyn Hamiltonian, traj: &Trajectory) -> f64 {
    let Some(first) = traj.states.first() else { return 0.0 };
    let Ok(e0) = sys.energy(first) else { return f64::INFINITY };
    traj.states
        .iter()
        .map(|s| sys.energy(s).map(|e| (e - e0).abs()).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

pub(crate) fn steps_for(t_max: f64, h: f64) -> usize {
    (t_max / h + 1e-9).floor() as usize
}

fn attach_time(e: Error, t: f64) -> Error {
    match e {
        Error::StepFailure {
            residual,
            iterations,
            ..
        } => Error::StepFailure {
            time: t,
            residual,
            iterations,
        },
        other => other.with_context(format!("step ending at t={t}")),
    }
}
