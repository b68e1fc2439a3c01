use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues `E_k` with `|E − E_k| < c ℏ^(1−δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralWindow {
    pub hbar: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub c: f64,
    pub delta: f64,
    pub eigenvalues: Vec<f64>,
}

impl SpectralWindow {
    pub fn half_width(&self) -> f64 {
        half_width(self.c, self.delta, self.hbar)
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }
}

pub(crate) fn half_width(c: f64, delta: f64, hbar: f64) -> f64 {
    c * hbar.powf(1.0 - delta)
}

pub(crate) fn check_window_params(c: f64, delta: f64, hbar: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::Parameter(format!("delta must lie in (0, 0.5) (got {delta})")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Parameter(format!("c must be > 0 (got {c})")));
    }
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::Parameter(format!("hbar must be > 0 (got {hbar})")));
    }
    Ok(())
}

/// Filters sorted `eigs` down to the window around `E`.
pub fn window(eigs: &[f64], energy: f64, c: f64, delta: f64, hbar: f64) -> Result<SpectralWindow> {
    check_window_params(c, delta, hbar)?;
    let w = half_width(c, delta, hbar);
    Ok(SpectralWindow {
        hbar,
        energy,
        c,
        delta,
        eigenvalues: eigs.iter().copied().filter(|e| (energy - e).abs() < w).collect(),
    })
}

/// Sorted sums `x + y` lying in `[E − margin, E + margin]`. Only the slice of
/// `ys` that can land in range is visited for each `x`.
pub fn tensor_sum_spectrum(xs: &[f64], ys: &[f64], energy: f64, margin: f64) -> Result<Vec<f64>> {
    if !(margin > 0.0) {
        return Err(Error::Parameter(format!("margin must be > 0 (got {margin})")));
    }
    let (lo, hi) = (energy - margin, energy + margin);
    let mut out = Vec::new();
    for &x in xs {
        let start = ys.partition_point(|y| x + y < lo);
        for &y in &ys[start..] {
            let s = x + y;
            if s > hi {
                break;
            }
            out.push(s);
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// `(E_k − E_l)/ℏ` over all ordered pairs `k ≠ l`.
pub fn difference_spectrum(win: &SpectralWindow) -> Vec<f64> {
    let e = &win.eigenvalues;
    let mut out = Vec::with_capacity(e.len() * e.len().saturating_sub(1));
    for (k, a) in e.iter().enumerate() {
        for (l, b) in e.iter().enumerate() {
            if k != l {
                out.push((a - b) / win.hbar);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator_levels(hbar: f64, top: f64) -> Vec<f64> {
        (0..).map(|k| (2 * k + 1) as f64 * hbar).take_while(|e| *e < top).collect()
    }

    #[test]
    fn closed_form_window() {
        let w = window(&oscillator_levels(0.01, 3.0), 1.0, 1.0, 0.25, 0.01).unwrap();
        assert!((w.half_width() - 0.01f64.powf(0.75)).abs() < 1e-15);
        let odd: Vec<i64> = w.eigenvalues.iter().map(|e| (e / 0.01).round() as i64).collect();
        assert_eq!(odd, vec![97, 99, 101, 103]);
    }

    #[test]
    fn window_contract() {
        let eigs = oscillator_levels(0.01, 3.0);
        assert!(window(&eigs, 1.0, 1e-9, 0.25, 0.01).unwrap().is_empty());
        assert!(window(&eigs, 1.0, 1.0, 0.5, 0.01).is_err());
        assert!(window(&eigs, 1.0, 1.0, 0.0, 0.01).is_err());
        assert!(window(&eigs, 1.0, 0.0, 0.25, 0.01).is_err());
    }

    #[test]
    fn tensor_sums() {
        let s = tensor_sum_spectrum(&[1.0, 2.0], &[10.0, 20.0], 50.0, 50.0).unwrap();
        assert_eq!(s, vec![11.0, 12.0, 21.0, 22.0]);
        assert!(tensor_sum_spectrum(&[1.0], &[1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn isotropic_degeneracies() {
        let h = 0.1;
        let lv = oscillator_levels(h, 10.0);
        let s = tensor_sum_spectrum(&lv, &lv, 0.9, 0.85).unwrap();
        // levels 2ℏ(n+1) with multiplicity n+1
        let mut counts = std::collections::BTreeMap::new();
        for e in s {
            *counts.entry((e / h).round() as i64).or_insert(0) += 1;
        }
        for (n, (level, mult)) in counts.into_iter().enumerate() {
            assert_eq!(level, 2 * (n as i64 + 1));
            assert_eq!(mult, n + 1);
        }
    }

    #[test]
    fn anisotropic_sums_match_formula() {
        let h = 0.05;
        let r2 = 2f64.sqrt();
        let xs = oscillator_levels(h, 20.0);
        let ys = oscillator_levels(h * r2, 20.0 * r2);
        let s = tensor_sum_spectrum(&xs, &ys, 3.0, 0.2).unwrap();
        let mut direct = Vec::new();
        for m in 0..200 {
            for n in 0..200 {
                let e = h * (2 * m + 1) as f64 + h * r2 * (2 * n + 1) as f64;
                if (e - 3.0).abs() <= 0.2 {
                    direct.push(e);
                }
            }
        }
        direct.sort_by(f64::total_cmp);
        assert_eq!(s.len(), direct.len());
        for (a, b) in s.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn differences() {
        let w = SpectralWindow {
            hbar: 0.01,
            energy: 1.0,
            c: 1.0,
            delta: 0.25,
            eigenvalues: vec![0.97, 0.99, 1.01, 1.03],
        };
        let mut d: Vec<i64> = difference_spectrum(&w).iter().map(|v| v.round() as i64).collect();
        d.sort();
        assert_eq!(d, vec![-6, -4, -4, -2, -2, -2, 2, 2, 2, 4, 4, 6]);
        let single = SpectralWindow { eigenvalues: vec![1.0], ..w };
        assert!(difference_spectrum(&single).is_empty());
    }
}
