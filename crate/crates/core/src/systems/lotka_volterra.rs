//! Lotka–Volterra systems in Volterra's Hamiltonian coordinates.
//!
//! The population dynamics `x_j' = ε_j x_j + Σ_k a_jk x_j x_k` on the positive
//! cone are lifted to `(Q, P)` with `Q_j = ∫₀ᵗ x_j` and
//! `P_j = log Q_j' − ½ Σ_k a_jk Q_k`. With `A` skew-symmetric,
//!
//! ```text
//! H(Q, P) = Σ ε_j Q_j − Σ_j exp(P_j + ½ Σ_k a_jk Q_k)
//! Q_j' = −∂H/∂P_j = x_j,     P_j' = ∂H/∂Q_j = ε_j − ½ Σ_i a_ij x_i
//! ```
//!
//! reproduces the population flow through `x_j = exp(P_j + ½ Σ_k a_jk Q_k)`.
//!
//! Classical predator–prey `x' = αx − βxy`, `y' = δxy − γy` is brought into
//! this normal form by rescaling the predator, see
//! [`LotkaVolterra::from_predator_prey`].

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{check_dims, Convention, Hamiltonian, Params, SystemSpec};
use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::phase::PhasePoint;

/// Largest admissible exponent in `exp(P_j + ½ Σ a_jk Q_k)`.
pub const MAX_EXPONENT: f64 = 700.0;

pub const SKEW_TOL: f64 = 1e-12;

/// Interior equilibrium `q` solving `ε + A q = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LvEquilibrium {
    pub q: Vec<f64>,
    /// Whether `q` lies in the open positive cone. When false the system is
    /// still usable but positivity arguments around `q` do not apply.
    pub positive: bool,
}

/// Solves `ε + A q = 0`.
pub fn lv_equilibrium(eps: &[f64], a: &[Vec<f64>]) -> Result<LvEquilibrium> {
    let n = eps.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::Parameter(format!(
            "lotka-volterra: A must be {n}x{n} to match eps"
        )));
    }
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let lu = m.clone().full_piv_lu();
    let det = lu.determinant();
    if !det.is_finite() || det.abs() <= 1e-12 * scale.powi(n as i32) {
        return Err(Error::NoUniqueEquilibrium);
    }
    let rhs = DVector::from_iterator(n, eps.iter().map(|e| -e));
    let q = lu.solve(&rhs).ok_or(Error::NoUniqueEquilibrium)?;
    let q: Vec<f64> = q.iter().copied().collect();
    let positive = q.iter().all(|v| *v > 0.0);
    Ok(LvEquilibrium { q, positive })
}

/// State in Volterra coordinates plus elapsed time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolterraState {
    /// Quantity of life `Q_j = ∫ x_j`.
    pub q: Vec<f64>,
    /// Volterra momenta `P_j`.
    pub p: Vec<f64>,
    pub t: f64,
}

impl VolterraState {
    pub fn phase_point(&self) -> PhasePoint {
        PhasePoint {
            q: self.q.clone(),
            p: self.p.clone(),
        }
    }

    pub fn from_phase_point(pt: &PhasePoint, t: f64) -> Self {
        Self {
            q: pt.q.clone(),
            p: pt.p.clone(),
            t,
        }
    }
}

/// `Q = 0`, `P = log x0`, `t = 0`.
pub fn lv_embed(x0: &[f64], sys: &LotkaVolterra) -> Result<VolterraState> {
    if x0.len() != sys.n() {
        return Err(Error::domain(
            "lotka-volterra",
            format!("x0 has {} species, system has {}", x0.len(), sys.n()),
        ));
    }
    if let Some(j) = x0.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::domain(
            "lotka-volterra",
            format!("x0[{j}] = {} is not in the positive cone", x0[j]),
        ));
    }
    Ok(VolterraState {
        q: vec![0.0; x0.len()],
        p: x0.iter().map(|v| v.ln()).collect(),
        t: 0.0,
    })
}

/// `x_j = exp(P_j + ½ Σ_k a_jk Q_k)`.
pub fn lv_extract(state: &VolterraState, sys: &LotkaVolterra) -> Result<Vec<f64>> {
    sys.populations(&state.q, &state.p)
}

/// Removes the linear drift: `Q̃ = Q − q t`, `P̃ = P + t (½ A q)`.
pub fn lv_drift_removal(traj: &Trajectory, q_eq: &[f64], a: &[Vec<f64>]) -> Result<Trajectory> {
    let n = q_eq.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::Parameter("drift removal: A and q differ in size".into()));
    }
    let half_aq: Vec<f64> = (0..n)
        .map(|j| 0.5 * (0..n).map(|k| a[j][k] * q_eq[k]).sum::<f64>())
        .collect();
    let mut states = Vec::with_capacity(traj.states.len());
    for (t, s) in traj.times.iter().zip(&traj.states) {
        if s.dof() != n {
            return Err(Error::Parameter(format!(
                "drift removal: state has {} dof, equilibrium has {n}",
                s.dof()
            )));
        }
        states.push(PhasePoint {
            q: (0..n).map(|j| s.q[j] - q_eq[j] * t).collect(),
            p: (0..n).map(|j| s.p[j] + t * half_aq[j]).collect(),
        });
    }
    Ok(Trajectory {
        times: traj.times.clone(),
        states,
        energy0: traj.energy0,
        max_drift: traj.max_drift,
        exit_reason: traj.exit_reason.clone(),
    })
}

/// Lotka–Volterra flow with skew-symmetric interaction matrix in Volterra
/// coordinates. Default convention is [`Convention::Volterra`].
#[derive(Debug, Clone)]
pub struct LotkaVolterra {
    pub eps: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub equilibrium: LvEquilibrium,
    pub convention: Convention,
    /// Half-width of the `Q` box used by the energy-surface sampler.
    pub sample_box: f64,
}

impl LotkaVolterra {
    pub const KIND: &'static str = "lotka-volterra";

    pub fn new(eps: Vec<f64>, a: Vec<Vec<f64>>) -> Result<Self> {
        let n = eps.len();
        if n == 0 {
            return Err(Error::Parameter("lotka-volterra: need at least one species".into()));
        }
        if a.len() != n || a.iter().any(|r| r.len() != n) {
            return Err(Error::Parameter(format!(
                "lotka-volterra: A must be {n}x{n} to match eps"
            )));
        }
        for j in 0..n {
            for k in 0..n {
                if (a[j][k] + a[k][j]).abs() > SKEW_TOL {
                    return Err(Error::Parameter(format!(
                        "lotka-volterra: A is not skew-symmetric at ({j},{k}): {} vs {}",
                        a[j][k], a[k][j]
                    )));
                }
            }
        }
        let equilibrium = lv_equilibrium(&eps, &a)?;
        Ok(Self {
            eps,
            a,
            equilibrium,
            convention: Convention::Volterra,
            sample_box: 1.0,
        })
    }

    /// Normal form of `x' = αx − βxy`, `y' = δxy − γy`.
    ///
    /// With `y = (δ/β) v` the pair `(x, v)` obeys the skew system with
    /// `ε = (α, −γ)` and `A = [[0, −δ], [δ, 0]]`. Returns the system and the
    /// population scales `c` such that original populations are `c_j · x_j`.
    pub fn from_predator_prey(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<(Self, [f64; 2])> {
        if !(beta > 0.0 && delta > 0.0) {
            return Err(Error::Parameter("predator-prey: beta and delta must be > 0".into()));
        }
        let sys = Self::new(vec![alpha, -gamma], vec![vec![0.0, -delta], vec![delta, 0.0]])?;
        Ok((sys, [1.0, delta / beta]))
    }

    pub fn from_system_spec(spec: &SystemSpec) -> Result<Self> {
        let p = Params::new(spec);
        let mut s = Self::new(p.vec_req("eps")?, p.matrix_req("A")?)?;
        s.sample_box = p.f64_or("sample_box", 1.0)?;
        s.convention = spec.convention.unwrap_or(Convention::Volterra);
        Ok(s)
    }

    pub(crate) fn from_spec(spec: &SystemSpec) -> Result<Arc<dyn Hamiltonian>> {
        Ok(Arc::new(Self::from_system_spec(spec)?))
    }

    pub fn n(&self) -> usize {
        self.eps.len()
    }

    fn exponents(&self, q: &[f64], p: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|j| p[j] + 0.5 * (0..n).map(|k| self.a[j][k] * q[k]).sum::<f64>())
            .collect()
    }

    /// Populations `x_j` for the Volterra point `(Q, P)`.
    pub fn populations(&self, q: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        if q.len() != self.n() || p.len() != self.n() {
            return Err(Error::domain("lotka-volterra", "state dimension mismatch"));
        }
        let ex = self.exponents(q, p);
        if let Some(j) = ex.iter().position(|e| !e.is_finite() || e.abs() > MAX_EXPONENT) {
            return Err(Error::Range(format!(
                "exponent for species {j} is {} (|.| > {MAX_EXPONENT})",
                ex[j]
            )));
        }
        Ok(ex.into_iter().map(f64::exp).collect())
    }

    /// Right-hand side `ε_j x_j + Σ_k a_jk x_j x_k` of the population ODE.
    pub fn population_rhs(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|j| x[j] * (self.eps[j] + (0..n).map(|k| self.a[j][k] * x[k]).sum::<f64>()))
            .collect()
    }

    /// `½ A q`, the constant drift rate of `−P` along the flow average.
    pub fn half_a_q(&self) -> Vec<f64> {
        let n = self.n();
        let q = &self.equilibrium.q;
        (0..n)
            .map(|j| 0.5 * (0..n).map(|k| self.a[j][k] * q[k]).sum::<f64>())
            .collect()
    }
}

impl Hamiltonian for LotkaVolterra {
    fn kind(&self) -> &'static str {
        Self::KIND
    }

    fn dof(&self) -> usize {
        self.n()
    }

    fn convention(&self) -> Convention {
        self.convention
    }

    fn energy(&self, pt: &PhasePoint) -> Result<f64> {
        check_dims(Self::KIND, self.n(), pt)?;
        let x = self.populations(&pt.q, &pt.p)?;
        let linear: f64 = self.eps.iter().zip(&pt.q).map(|(e, q)| e * q).sum();
        Ok(linear - x.iter().sum::<f64>())
    }

    fn gradient(&self, pt: &PhasePoint) -> Result<(Vec<f64>, Vec<f64>)> {
        check_dims(Self::KIND, self.n(), pt)?;
        let n = self.n();
        let x = self.populations(&pt.q, &pt.p)?;
        let dq = (0..n)
            .map(|j| self.eps[j] - 0.5 * (0..n).map(|i| self.a[i][j] * x[i]).sum::<f64>())
            .collect();
        let dp = x.iter().map(|v| -v).collect();
        Ok((dq, dp))
    }

    fn is_separable(&self) -> bool {
        false
    }

    fn domain_exit(&self, pt: &PhasePoint) -> Option<String> {
        self.populations(&pt.q, &pt.p).err().map(|e| e.to_string())
    }

    /// Linearized period `2π/ω` at the equilibrium, `ω` the smallest nonzero
    /// frequency of `diag(q) A`.
    fn reference_period(&self, _pt: &PhasePoint) -> Option<f64> {
        if !self.equilibrium.positive {
            return None;
        }
        let n = self.n();
        let d: Vec<f64> = self.equilibrium.q.iter().map(|v| v.sqrt()).collect();
        // D^{1/2} A D^{1/2} is skew; its singular values are the frequencies.
        let s = DMatrix::from_fn(n, n, |i, j| d[i] * self.a[i][j] * d[j]);
        let sts = s.transpose() * &s;
        let eig = sts.symmetric_eigen();
        let tol = 1e-12 * eig.eigenvalues.amax().max(1.0);
        eig.eigenvalues
            .iter()
            .filter(|v| **v > tol)
            .map(|v| v.sqrt())
            .fold(None, |acc: Option<f64>, w| Some(acc.map_or(w, |a| a.min(w))))
            .map(|w| 2.0 * PI / w)
    }

    /// `Q` uniform in a box, `x` uniform on the simplex `Σ x_j = ε·Q − E`,
    /// then `P = log x − ½ A Q`.
    fn sample_point(&self, energy: f64, rng: &mut dyn RngCore) -> Result<Option<PhasePoint>> {
        let n = self.n();
        let b = self.sample_box;
        let q: Vec<f64> = (0..n)
            .map(|_| if b > 0.0 { rng.random_range(-b..b) } else { 0.0 })
            .collect();
        let total = self.eps.iter().zip(&q).map(|(e, v)| e * v).sum::<f64>() - energy;
        if !(total > 0.0) {
            return Ok(None);
        }
        let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let ws: f64 = w.iter().sum();
        let x: Vec<f64> = w.iter().map(|v| total * v / ws).collect();
        if x.iter().any(|v| !(*v > 0.0)) {
            return Ok(None);
        }
        let half_aq: Vec<f64> = (0..n)
            .map(|j| 0.5 * (0..n).map(|k| self.a[j][k] * q[k]).sum::<f64>())
            .collect();
        let p: Vec<f64> = (0..n).map(|j| x[j].ln() - half_aq[j]).collect();
        let pt = PhasePoint { q, p };
        let h = self.energy(&pt)?;
        if (h - energy).abs() > super::sampling::surface_tolerance(energy) {
            return Ok(None);
        }
        Ok(Some(pt))
    }

    fn spec(&self) -> SystemSpec {
        SystemSpec::new(
            Self::KIND,
            json!({"eps": self.eps, "A": self.a, "sample_box": self.sample_box}),
        )
        .with_convention(self.convention)
    }
}
