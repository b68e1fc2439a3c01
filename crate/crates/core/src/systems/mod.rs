//! Catalog of Hamiltonian systems.
//!
//! Every system implements [`Hamiltonian`] and is constructed from a
//! serializable [`SystemSpec`] through the [`SystemRegistry`], which maps a
//! `kind` string to a constructor. Integrators and period detection only ever
//! see `Arc<dyn Hamiltonian>`.

mod kepler;
pub mod lotka_volterra;
mod oscillator;
pub mod potential;
pub mod sampling;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::phase::PhasePoint;

pub use kepler::Kepler;
pub use lotka_volterra::{
    lv_drift_removal, lv_embed, lv_equilibrium, lv_extract, LotkaVolterra, LvEquilibrium,
    VolterraState,
};
pub use oscillator::{AnisotropicOscillator2D, HarmonicOscillator};
pub use potential::{Potential1D, Polynomial};
pub use sampling::sample_energy_surface;

/// Sign convention of Hamilton's equations.
///
/// `Canonical`: `q' = dH/dp`, `p' = -dH/dq`.
/// `Volterra`: `Q' = -dH/dP`, `P' = dH/dQ`. Serialized as `"paper-lv"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    Canonical,
    #[serde(rename = "paper-lv", alias = "volterra")]
    Volterra,
}

impl Convention {
    /// `+1` for canonical, `-1` for the flipped Volterra form.
    pub fn sign(self) -> f64 {
        match self {
            Convention::Canonical => 1.0,
            Convention::Volterra => -1.0,
        }
    }
}

/// A Hamiltonian system: symbol, analytic gradient, sign convention and
/// domain guard.
pub trait Hamiltonian: Send + Sync + fmt::Debug {
    /// Registry name of the system family.
    fn kind(&self) -> &'static str;

    fn dof(&self) -> usize;

    fn convention(&self) -> Convention;

    /// Domain guard. The default only checks the dimension.
    fn check_domain(&self, pt: &PhasePoint) -> Result<()> {
        check_dims(self.kind(), self.dof(), pt)
    }

    /// `H(q, p)`. Implementations run [`Hamiltonian::check_domain`] first.
    fn energy(&self, pt: &PhasePoint) -> Result<f64>;

    /// `(dH/dq, dH/dp)`.
    fn gradient(&self, pt: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)>;

    /// `H = T(p) + V(q)`; Verlet is only admissible for separable systems.
    fn is_separable(&self) -> bool;

    /// Reason to stop integrating (collision, leaving the admissible region).
    fn domain_exit(&self, _pt: &PhasePoint) -> Option<String> {
        None
    }

    /// Characteristic period of the orbit through `pt`, when known in closed
    /// form or from linearization. Used for default horizons.
    fn reference_period(&self, _pt: &PhasePoint) -> Option<f64> {
        None
    }

    /// One draw of the energy-surface sampler. `Ok(None)` asks for a redraw.
    fn sample_point(&self, energy: f64, rng: &mut dyn RngCore) -> Result<Option<PhasePoint>>;

    /// Serializable description that rebuilds this system.
    fn spec(&self) -> SystemSpec;
}

pub(crate) fn check_dims(kind: &str, dof: usize, pt: &PhasePoint) -> Result<()> {
    if pt.q.len() != dof || pt.p.len() != dof {
        return Err(Error::domain(
            kind,
            format!(
                "expected {dof} degrees of freedom, got q:{} p:{}",
                pt.q.len(),
                pt.p.len()
            ),
        ));
    }
    Ok(())
}

/// `H(q, p)` for any catalog system.
pub fn eval_hamiltonian(sys: &dyn Hamiltonian, pt: &PhasePoint) -> Result<f64> {
    sys.energy(pt)
}

/// Closed-form `(dH/dq, dH/dp)`.
pub fn eval_gradient(sys: &dyn Hamiltonian, pt: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
    sys.gradient(pt)
}

/// Phase-space velocity under the system's declared sign convention.
pub fn vector_field(sys: &dyn Hamiltonian, pt: &PhasePoint) -> Result<PhasePoint> {
    let (dq, dp) = sys.gradient(pt)?;
    let s = sys.convention().sign();
    Ok(PhasePoint {
        q: dp.iter().map(|v| s * v).collect(),
        p: dq.iter().map(|v| -s * v).collect(),
    })
}

/// JSON description of a system:
/// `{"kind": "...", "params": {...}, "convention": "canonical" | "paper-lv"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<Convention>,
}

impl SystemSpec {
    pub fn new(kind: &str, params: Value) -> Self {
        let params = match params {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        Self {
            kind: kind.to_string(),
            params,
            convention: None,
        }
    }

    pub fn with_convention(mut self, c: Convention) -> Self {
        self.convention = Some(c);
        self
    }

    pub fn build(&self) -> Result<Arc<dyn Hamiltonian>> {
        SystemRegistry::builtin().build(self)
    }
}

pub type SystemConstructor = fn(&SystemSpec) -> Result<Arc<dyn Hamiltonian>>;

/// Name → constructor table for system families.
#[derive(Clone)]
pub struct SystemRegistry {
    constructors: BTreeMap<String, SystemConstructor>,
    aliases: BTreeMap<String, String>,
}

impl SystemRegistry {
    pub fn empty() -> Self {
        Self {
            constructors: BTreeMap::new(),
            aliases: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(HarmonicOscillator::KIND, HarmonicOscillator::from_spec);
        r.register(Kepler::KIND, Kepler::from_spec);
        r.register(LotkaVolterra::KIND, LotkaVolterra::from_spec);
        r.register(Potential1D::KIND, Potential1D::from_spec);
        r.register(AnisotropicOscillator2D::KIND, AnisotropicOscillator2D::from_spec);
        r.alias("ho", HarmonicOscillator::KIND);
        r.alias("lv", LotkaVolterra::KIND);
        r.alias("potential", Potential1D::KIND);
        r.alias("aniso", AnisotropicOscillator2D::KIND);
        r
    }

    pub fn register(&mut self, kind: &str, ctor: SystemConstructor) {
        self.constructors.insert(kind.to_string(), ctor);
    }

    pub fn alias(&mut self, alias: &str, kind: &str) {
        self.aliases.insert(alias.to_string(), kind.to_string());
    }

    pub fn names(&self) -> Vec<&str> {
        self.constructors.keys().map(String::as_str).collect()
    }

    pub fn resolve<'a>(&'a self, kind: &'a str) -> &'a str {
        self.aliases.get(kind).map(String::as_str).unwrap_or(kind)
    }

    pub fn build(&self, spec: &SystemSpec) -> Result<Arc<dyn Hamiltonian>> {
        let kind = self.resolve(&spec.kind);
        let ctor = self.constructors.get(kind).ok_or_else(|| Error::Unknown {
            kind: "system",
            name: spec.kind.clone(),
        })?;
        if kind != spec.kind {
            let mut canonical = spec.clone();
            canonical.kind = kind.to_string();
            return ctor(&canonical);
        }
        ctor(spec)
    }
}

impl Default for SystemRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Typed access to a `params` object.
pub(crate) struct Params<'a> {
    kind: &'a str,
    map: &'a Map<String, Value>,
}

impl<'a> Params<'a> {
    pub fn new(spec: &'a SystemSpec) -> Self {
        Self {
            kind: &spec.kind,
            map: &spec.params,
        }
    }

    fn err(&self, name: &str, what: &str) -> Error {
        Error::Parameter(format!("{}: parameter `{name}` {what}", self.kind))
    }

    pub fn f64_or(&self, name: &str, default: f64) -> Result<f64> {
        match self.map.get(name) {
            None | Some(Value::Null) => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| self.err(name, "must be a number")),
        }
    }

    pub fn usize_or(&self, name: &str, default: usize) -> Result<usize> {
        match self.map.get(name) {
            None | Some(Value::Null) => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|u| u as usize)
                .ok_or_else(|| self.err(name, "must be a non-negative integer")),
        }
    }

    pub fn vec_req(&self, name: &str) -> Result<Vec<f64>> {
        let arr = self
            .map
            .get(name)
            .ok_or_else(|| self.err(name, "is required"))?
            .as_array()
            .ok_or_else(|| self.err(name, "must be an array"))?;
        arr.iter()
            .map(|v| v.as_f64().ok_or_else(|| self.err(name, "must hold numbers")))
            .collect()
    }

    pub fn opt_vec(&self, name: &str) -> Result<Option<Vec<f64>>> {
        if self.map.contains_key(name) {
            self.vec_req(name).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn matrix_req(&self, name: &str) -> Result<Vec<Vec<f64>>> {
        let rows = self
            .map
            .get(name)
            .ok_or_else(|| self.err(name, "is required"))?
            .as_array()
            .ok_or_else(|| self.err(name, "must be an array of rows"))?;
        rows.iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| self.err(name, "must be an array of rows"))?
                    .iter()
                    .map(|v| v.as_f64().ok_or_else(|| self.err(name, "must hold numbers")))
                    .collect()
            })
            .collect()
    }

    pub fn str_req(&self, name: &str) -> Result<&'a str> {
        self.map
            .get(name)
            .ok_or_else(|| self.err(name, "is required"))?
            .as_str()
            .ok_or_else(|| self.err(name, "must be a string"))
    }
}

pub(crate) fn require_positive(kind: &str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{kind}: `{name}` must be > 0 (got {v})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn registry_resolves_aliases_and_rejects_unknown() {
        let r = SystemRegistry::builtin();
        let sys = r
            .build(&SystemSpec::new("ho", json!({"m": 1.0, "k": 1.0, "dof": 2})))
            .unwrap();
        assert_eq!(sys.kind(), "harmonic-oscillator");
        assert_eq!(sys.dof(), 2);
        let err = r.build(&SystemSpec::new("pendulum", json!({}))).unwrap_err();
        assert!(matches!(err, Error::Unknown { .. }));
        assert!(r.names().contains(&"kepler"));
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{"kind":"lotka-volterra","params":{"eps":[1,-1],"A":[[0,-1],[1,0]]},"convention":"paper-lv"}"#;
        let spec: SystemSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.convention, Some(Convention::Volterra));
        let sys = spec.build().unwrap();
        let again: SystemSpec = serde_json::from_str(&serde_json::to_string(&sys.spec()).unwrap()).unwrap();
        assert_eq!(again.build().unwrap().spec(), sys.spec());
    }

    #[test]
    fn vector_field_honours_convention() {
        let canon = SystemSpec::new("ho", json!({"m": 1.0, "k": 1.0, "dof": 1}))
            .build()
            .unwrap();
        let flipped = SystemSpec::new("ho", json!({"m": 1.0, "k": 1.0, "dof": 1}))
            .with_convention(Convention::Volterra)
            .build()
            .unwrap();
        let pt = PhasePoint::new(vec![1.0], vec![0.5]).unwrap();
        let a = vector_field(canon.as_ref(), &pt).unwrap();
        let b = vector_field(flipped.as_ref(), &pt).unwrap();
        assert_eq!(a.q, vec![0.5]);
        assert_eq!(a.p, vec![-1.0]);
        assert_eq!(b.q, vec![-0.5]);
        assert_eq!(b.p, vec![1.0]);
    }
}
