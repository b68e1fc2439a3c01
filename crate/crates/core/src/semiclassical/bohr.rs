use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SpectralWindow;
use crate::error::Result;
use crate::period::{action_1d, period_oracle_1d};
use crate::systems::Potential1D;

/// Bohr–Sommerfeld check of a 1D window with Maslov index 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohrSommerfeld {
    pub hbar: f64,
    pub eigenvalues: Vec<f64>,
    /// Nearest quantum numbers `k*`.
    pub labels: Vec<i64>,
    /// `S(E_k)/(2πℏ) − (k* + ½)`.
    pub residuals: Vec<f64>,
    /// `(E_{k+1} − E_k) / (2πℏ/T)` with `T` at the midpoint of the gap.
    pub gap_ratios: Vec<f64>,
}

impl BohrSommerfeld {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn max_gap_deviation(&self) -> f64 {
        self.gap_ratios.iter().fold(0.0, |m, r| m.max((r - 1.0).abs()))
    }
}

pub fn bohr_sommerfeld_residuals(sys: &Potential1D, hbar: f64, win: &SpectralWindow) -> Result<BohrSommerfeld> {
    let mut labels = Vec::with_capacity(win.len());
    let mut residuals = Vec::with_capacity(win.len());
    for &e in &win.eigenvalues {
        let n = action_1d(sys, e)? / (2.0 * PI * hbar);
        let k = (n - 0.5).round();
        labels.push(k as i64);
        residuals.push(n - (k + 0.5));
    }
    let mut gap_ratios = Vec::new();
    for w in win.eigenvalues.windows(2) {
        let t = period_oracle_1d(sys, 0.5 * (w[0] + w[1]))?;
        gap_ratios.push((w[1] - w[0]) / (2.0 * PI * hbar / t));
    }
    Ok(BohrSommerfeld {
        hbar,
        eigenvalues: win.eigenvalues.clone(),
        labels,
        residuals,
        gap_ratios,
    })
}
