use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point `(q, p)` of a `2n`-dimensional phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    /// Checked constructor: equal lengths, `n >= 1`, all components finite.
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.is_empty() || q.len() != p.len() {
            return Err(Error::Parameter(format!(
                "phase point needs q and p of equal length >= 1 (got {} and {})",
                q.len(),
                p.len()
            )));
        }
        if let Some(i) = q.iter().chain(p.iter()).position(|v| !v.is_finite()) {
            let (name, idx) = if i < q.len() { ("q", i) } else { ("p", i - q.len()) };
            return Err(Error::Parameter(format!("non-finite component {name}[{idx}]")));
        }
        Ok(Self { q, p })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            q: vec![0.0; n],
            p: vec![0.0; n],
        }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    /// Flattened `[q.., p..]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.dof());
        v.extend_from_slice(&self.q);
        v.extend_from_slice(&self.p);
        v
    }

    pub fn from_slice(z: &[f64]) -> Self {
        let n = z.len() / 2;
        Self {
            q: z[..n].to_vec(),
            p: z[n..2 * n].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.q
            .iter()
            .chain(self.p.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Euclidean distance in phase space.
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .chain(self.p.iter().zip(&other.p))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `self + scale * dir`
    pub fn axpy(&self, scale: f64, dir: &PhasePoint) -> PhasePoint {
        PhasePoint {
            q: self.q.iter().zip(&dir.q).map(|(a, b)| a + scale * b).collect(),
            p: self.p.iter().zip(&dir.p).map(|(a, b)| a + scale * b).collect(),
        }
    }
}

/// Formats a float with 17 significant digits, enough for an exact round trip.
pub fn fmt17(v: f64) -> String {
    if v == 0.0 {
        // keep the sign of negative zero
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    format!("{:.16e}", v)
}
