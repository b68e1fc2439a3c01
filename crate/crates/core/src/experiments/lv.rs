//! Lotka–Volterra H-level sampling and per-orbit consistency checks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{drift_monitor, StepperConfig};
use crate::period::{detect_period_lv, lv_time_average, PeriodVerdict};
use crate::systems::sampling::sample_rng;
use crate::systems::{eval_hamiltonian, lv_embed, LotkaVolterra};

/// Initial populations with `Σ x0 = −H_target`, uniform on the simplex slice.
/// The embedding `Q = 0, P = log x0` then has `H = −Σ x0 = H_target`.
pub fn lv_hlevel_sampler(sys: &LotkaVolterra, h_target: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if !(h_target < 0.0) || !h_target.is_finite() {
        return Err(Error::DegenerateSurface {
            energy: h_target,
            reason: "H level unreachable: embedded states have H = -Σx0 < 0".into(),
        });
    }
    let n = sys.n();
    let total = -h_target;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = sample_rng(seed, i);
        loop {
            let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let s: f64 = w.iter().sum();
            let mut x: Vec<f64> = w.iter().map(|v| total * v / s).collect();
            if x.iter().all(|v| *v > 0.0) {
                // put the rounding error of the sum on the largest component
                let err = total - x.iter().sum::<f64>();
                let j = (0..n).max_by(|a, b| x[*a].total_cmp(&x[*b])).unwrap();
                x[j] += err;
                out.push(x);
                break;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LvTolerances {
    pub h_drift: f64,
    pub period_agreement: f64,
    pub time_average: f64,
}

impl Default for LvTolerances {
    fn default() -> Self {
        Self {
            h_drift: 1e-8,
            period_agreement: 1e-6,
            time_average: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LvOrbitCheck {
    pub x0: Vec<f64>,
    #[serde(rename = "H")]
    pub h: f64,
    pub x_verdict: PeriodVerdict,
    pub drift_removed_verdict: PeriodVerdict,
    #[serde(rename = "T_x")]
    pub t_x: Option<f64>,
    #[serde(rename = "T_drift_removed")]
    pub t_drift_removed: Option<f64>,
    pub period_rel_diff: Option<f64>,
    /// `max |H − H0|` over `drift_periods` periods.
    pub h_drift: Option<f64>,
    pub time_average: Option<Vec<f64>>,
    pub time_average_err: Option<f64>,
    pub consistent: bool,
}

/// Runs both period detectors, the drift monitor and the time-average law on
/// one orbit.
pub fn check_lv_orbit(
    sys: &LotkaVolterra,
    x0: &[f64],
    cfg: &StepperConfig,
    drift_periods: f64,
    tol: &LvTolerances,
) -> Result<LvOrbitCheck> {
    let pt0 = lv_embed(x0, sys)?.phase_point();
    let h = eval_hamiltonian(sys, &pt0)?;
    let (x, d) = detect_period_lv(sys, x0, cfg, None, None)?;
    let mut out = LvOrbitCheck {
        x0: x0.to_vec(),
        h,
        x_verdict: x.verdict,
        drift_removed_verdict: d.verdict,
        t_x: x.period,
        t_drift_removed: d.period,
        period_rel_diff: None,
        h_drift: None,
        time_average: None,
        time_average_err: None,
        consistent: false,
    };
    let (Some(tx), Some(td)) = (x.period, d.period) else {
        return Ok(out);
    };
    out.period_rel_diff = Some((tx - td).abs() / tx);
    out.h_drift = Some(drift_monitor(sys, &pt0, cfg, drift_periods * tx)?);
    let avg = lv_time_average(sys, x0, tx, cfg)?;
    let err = avg
        .iter()
        .zip(&sys.equilibrium.q)
        .fold(0.0f64, |m, (a, q)| m.max((a - q).abs()));
    out.time_average = Some(avg);
    out.time_average_err = Some(err);
    out.consistent = out.period_rel_diff.unwrap() < tol.period_agreement
        && out.h_drift.unwrap() < tol.h_drift
        && err < tol.time_average;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv() -> LotkaVolterra {
        LotkaVolterra::new(vec![1.0, -1.0], vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn samples_lie_on_level() {
        let sys = lv();
        let xs = lv_hlevel_sampler(&sys, -3.0, 25, 5).unwrap();
        assert_eq!(xs.len(), 25);
        for x in &xs {
            assert!(x.iter().all(|v| *v > 0.0));
            assert!((x.iter().sum::<f64>() - 3.0).abs() < 1e-14);
            let h = eval_hamiltonian(&sys, &lv_embed(x, &sys).unwrap().phase_point()).unwrap();
            assert!((h + 3.0).abs() < 1e-12);
        }
        assert_eq!(lv_hlevel_sampler(&sys, -3.0, 1, 9).unwrap(), lv_hlevel_sampler(&sys, -3.0, 1, 9).unwrap());
    }

    #[test]
    fn nonnegative_level_is_unreachable() {
        assert!(lv_hlevel_sampler(&lv(), 0.0, 1, 0).is_err());
        assert!(lv_hlevel_sampler(&lv(), 1.5, 1, 0).is_err());
    }

    #[test]
    fn reference_orbit_is_consistent() {
        let sys = lv();
        let c = check_lv_orbit(&sys, &[1.2, 1.0], &StepperConfig::implicit_midpoint(1e-3), 5.0, &LvTolerances::default())
            .unwrap();
        assert!(c.consistent, "{c:?}");
        assert!((c.h + 2.2).abs() < 1e-15);
    }
}
