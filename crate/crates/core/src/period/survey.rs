//! Period surveys over sampled energy surfaces.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{detect_period, PeriodEstimate, PeriodVerdict};
use crate::error::{Error, Result};
use crate::integrate::StepperConfig;
use crate::phase::{fmt17, PhasePoint};
use crate::systems::{sample_energy_surface, Hamiltonian};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum SurveyVerdict {
    SamePeriod,
    Mixed,
    SpreadExceeded,
}

impl SurveyVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SamePeriod => "SAME-PERIOD",
            Self::Mixed => "MIXED",
            Self::SpreadExceeded => "SPREAD-EXCEEDED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyParams {
    pub count: usize,
    pub seed: u64,
    pub tol_rel: f64,
    pub horizon: Option<f64>,
    pub return_tol: Option<f64>,
}

impl SurveyParams {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            tol_rel: 1e-6,
            horizon: None,
            return_tol: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyEntry {
    pub sample: usize,
    pub start: PhasePoint,
    #[serde(flatten)]
    pub estimate: PeriodEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    #[serde(rename = "E")]
    pub energy: f64,
    pub samples: usize,
    /// Periods of the periodic samples, in sample order.
    pub periods: Vec<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub spread_rel: Option<f64>,
    pub verdicts: BTreeMap<String, usize>,
    pub excluded_degenerate: usize,
    pub verdict: SurveyVerdict,
    pub entries: Vec<SurveyEntry>,
}

impl SurveyReport {
    /// `sample,verdict,T,residual`, one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,verdict,T,residual\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                e.sample,
                e.estimate.verdict.as_str(),
                e.estimate.period.map(fmt17).unwrap_or_default(),
                fmt17(e.estimate.residual)
            );
        }
        out
    }
}

/// Samples `Σ_E` and detects the period of every sample in parallel. Results
/// are aggregated in sample order, so the report does not depend on the
/// worker count.
pub fn survey_periods(
    sys: &dyn Hamiltonian,
    energy: f64,
    params: &SurveyParams,
    cfg: &StepperConfig,
) -> Result<SurveyReport> {
    if !(params.tol_rel > 0.0) {
        return Err(Error::Parameter(format!("tol_rel must be > 0 (got {})", params.tol_rel)));
    }
    cfg.validate()?;
    let points = sample_energy_surface(sys, energy, params.count, params.seed)?;
    let estimates = points
        .par_iter()
        .map(|pt| detect_period(sys, pt, cfg, params.horizon, params.return_tol))
        .collect::<Result<Vec<_>>>()?;
    let entries: Vec<SurveyEntry> = points
        .into_iter()
        .zip(estimates)
        .enumerate()
        .map(|(sample, (start, estimate))| SurveyEntry { sample, start, estimate })
        .collect();
    Ok(aggregate(energy, entries, params.tol_rel))
}

pub(crate) fn aggregate(energy: f64, entries: Vec<SurveyEntry>, tol_rel: f64) -> SurveyReport {
    let mut verdicts = BTreeMap::new();
    for v in [
        PeriodVerdict::Periodic,
        PeriodVerdict::NotPeriodicWithinHorizon,
        PeriodVerdict::DegenerateFixedPoint,
    ] {
        verdicts.insert(v.as_str().to_string(), 0);
    }
    for e in &entries {
        *verdicts.entry(e.estimate.verdict.as_str().to_string()).or_default() += 1;
    }
    let periods: Vec<f64> = entries.iter().filter_map(|e| e.estimate.period).collect();
    let excluded_degenerate = verdicts["degenerate-fixed-point"];
    let not_periodic = verdicts["not-periodic-within-horizon"];
    let (min, max, mean, spread) = if periods.is_empty() {
        (None, None, None, None)
    } else {
        let min = periods.iter().copied().fold(f64::INFINITY, f64::min);
        let max = periods.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = periods.iter().sum::<f64>() / periods.len() as f64;
        (Some(min), Some(max), Some(mean), Some((max - min) / mean))
    };
    let verdict = if not_periodic > 0 {
        SurveyVerdict::Mixed
    } else if spread.is_some_and(|s| s <= tol_rel) {
        SurveyVerdict::SamePeriod
    } else {
        SurveyVerdict::SpreadExceeded
    };
    SurveyReport {
        energy,
        samples: entries.len(),
        periods,
        min,
        max,
        mean,
        spread_rel: spread,
        verdicts,
        excluded_degenerate,
        verdict,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{AnisotropicOscillator2D, HarmonicOscillator};
    use std::f64::consts::PI;

    #[test]
    fn oscillator_survey_is_same_period() {
        let ho = HarmonicOscillator::new(1.0, 1.0, 2).unwrap();
        let rep = survey_periods(&ho, 1.0, &SurveyParams::new(16, 7), &StepperConfig::verlet(1e-3)).unwrap();
        assert_eq!(rep.verdict, SurveyVerdict::SamePeriod);
        assert!(rep.spread_rel.unwrap() < 1e-6);
        assert!((rep.mean.unwrap() - 2.0 * PI).abs() < 1e-6);
        assert_eq!(rep.entries.len(), 16);
        let csv = rep.to_csv();
        assert!(csv.starts_with("sample,verdict,T,residual\n0,periodic,6.28"));
    }

    #[test]
    fn irrational_torus_is_mixed() {
        let sys = AnisotropicOscillator2D::new(1.0, 2f64.sqrt()).unwrap();
        let mut params = SurveyParams::new(4, 3);
        params.horizon = Some(100.0);
        let rep = survey_periods(&sys, 1.0, &params, &StepperConfig::verlet(1e-2)).unwrap();
        assert_eq!(rep.verdict, SurveyVerdict::Mixed);
        assert!(rep.verdicts["not-periodic-within-horizon"] > 0);
    }

    fn entry(i: usize, period: Option<f64>, verdict: PeriodVerdict) -> SurveyEntry {
        SurveyEntry {
            sample: i,
            start: PhasePoint::zeros(1),
            estimate: PeriodEstimate { period, residual: 0.0, returns_used: 1, verdict },
        }
    }

    #[test]
    fn aggregation_rules() {
        let rep = aggregate(
            1.0,
            vec![
                entry(0, Some(1.0), PeriodVerdict::Periodic),
                entry(1, Some(1.1), PeriodVerdict::Periodic),
                entry(2, None, PeriodVerdict::DegenerateFixedPoint),
            ],
            1e-6,
        );
        assert_eq!(rep.verdict, SurveyVerdict::SpreadExceeded);
        assert_eq!(rep.excluded_degenerate, 1);
        assert_eq!(rep.periods, vec![1.0, 1.1]);
        let rep = aggregate(1.0, vec![entry(0, Some(1.0), PeriodVerdict::Periodic)], 1e-6);
        assert_eq!(rep.verdict, SurveyVerdict::SamePeriod);
        assert_eq!(serde_json::to_value(rep.verdict).unwrap(), "SAME-PERIOD");
    }
}
