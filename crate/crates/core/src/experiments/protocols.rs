use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::lv::{check_lv_orbit, lv_hlevel_sampler, LvOrbitCheck, LvTolerances};
use super::{ExperimentRecipe, Protocol, ProtocolOutput};
use crate::error::{Error, Result};
use crate::integrate::StepperConfig;
use crate::period::{survey_periods, SurveyParams};
use crate::phase::fmt17;
use crate::semiclassical::{
    bohr_sommerfeld_residuals, confining_half_width, discretize_1d, eig_tridiagonal, histogram_csv,
    run_diffspec, window, ClusterConfig, ClusterVerdict, DiffSpecConfig, Grid1D, SpectrumSource,
};
use crate::systems::{LotkaVolterra, Potential1D, SystemRegistry};

fn opt_fmt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

fn stepper(sys: &dyn crate::systems::Hamiltonian, method: &Option<String>, h: f64) -> Result<StepperConfig> {
    let cfg = match method {
        Some(m) => StepperConfig {
            method: m.clone(),
            ..StepperConfig::verlet(h)
        },
        None => StepperConfig::default_for(sys, h),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn default_h() -> f64 {
    1e-3
}

fn default_tol_rel() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyProtocolParams {
    pub energy: f64,
    pub count: usize,
    #[serde(default = "default_tol_rel")]
    pub tol_rel: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default)]
    pub method: Option<String>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub return_tol: Option<f64>,
}

/// Iso-energetic period survey on a sampled energy surface.
pub struct SurveyProtocol;

impl Protocol for SurveyProtocol {
    fn name(&self) -> &'static str {
        "survey"
    }

    fn validate(&self, recipe: &ExperimentRecipe) -> Result<()> {
        let p: SurveyProtocolParams = recipe.params()?;
        let sys = recipe.require_system()?.build()?;
        stepper(sys.as_ref(), &p.method, p.h)?;
        if p.count == 0 {
            return Err(Error::Config("survey: count must be >= 1".into()));
        }
        Ok(())
    }

    fn run(&self, recipe: &ExperimentRecipe) -> Result<ProtocolOutput> {
        let p: SurveyProtocolParams = recipe.params()?;
        let sys = recipe.require_system()?.build()?;
        let cfg = stepper(sys.as_ref(), &p.method, p.h)?;
        let params = SurveyParams {
            count: p.count,
            seed: recipe.seed,
            tol_rel: p.tol_rel,
            horizon: p.horizon,
            return_tol: p.return_tol,
        };
        let report = survey_periods(sys.as_ref(), p.energy, &params, &cfg)?;
        let reference = report.entries.first().and_then(|e| sys.reference_period(&e.start));
        let max_err = match reference {
            Some(t) if !report.periods.is_empty() => Some(
                report
                    .periods
                    .iter()
                    .fold(0.0f64, |m, x| m.max((x - t).abs() / t)),
            ),
            _ => None,
        };
        Ok(ProtocolOutput {
            verdict: report.verdict.as_str().to_string(),
            tolerances: json!({
                "tol_rel": p.tol_rel,
                "return_tol": p.return_tol.map_or(json!("1e-6*(|pt0|+1)"), |v| json!(v)),
                "horizon": p.horizon.map_or(json!("50*reference period, else 1000"), |v| json!(v)),
                "stepper": cfg,
            }),
            summary_csv: report.to_csv(),
            results: json!({
                "survey": report,
                "reference_period": reference,
                "max_rel_error_vs_reference": max_err,
            }),
        })
    }
}

fn default_levels() -> Vec<f64> {
    vec![-2.5, -3.0, -4.0]
}

fn default_count_per_level() -> usize {
    20
}

fn default_lv_method() -> String {
    crate::integrate::TripleJumpMidpoint::NAME.into()
}

fn default_lv_h() -> f64 {
    2e-3
}

fn default_drift_periods() -> f64 {
    100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LvHLevelParams {
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default = "default_count_per_level")]
    pub count_per_level: usize,
    #[serde(default = "default_lv_method")]
    pub method: String,
    #[serde(default = "default_lv_h")]
    pub h: f64,
    /// Length of the energy-drift run in detected periods.
    #[serde(default = "default_drift_periods")]
    pub drift_periods: f64,
    #[serde(default)]
    pub tolerances: LvTolerances,
}

/// Period vs. H scatter for LV orbits sampled on several H-levels. Only the
/// per-orbit consistencies are judged; no claim about T(H) is asserted.
pub struct LvHLevelProtocol;

impl LvHLevelProtocol {
    fn system(recipe: &ExperimentRecipe) -> Result<LotkaVolterra> {
        let spec = recipe.require_system()?;
        let reg = SystemRegistry::builtin();
        if reg.resolve(&spec.kind) != LotkaVolterra::KIND {
            return Err(Error::Config(format!(
                "lv-hlevel needs a lotka-volterra system, got `{}`",
                spec.kind
            )));
        }
        let mut spec = spec.clone();
        spec.kind = LotkaVolterra::KIND.into();
        LotkaVolterra::from_system_spec(&spec)
    }
}

impl LvHLevelProtocol {
    fn stepper(p: &LvHLevelParams) -> StepperConfig {
        StepperConfig {
            method: p.method.clone(),
            ..StepperConfig::implicit_midpoint(p.h)
        }
    }
}

impl Protocol for LvHLevelProtocol {
    fn name(&self) -> &'static str {
        "lv-hlevel"
    }

    fn validate(&self, recipe: &ExperimentRecipe) -> Result<()> {
        let p: LvHLevelParams = recipe.params()?;
        Self::system(recipe)?;
        crate::integrate::stepper_for(&Self::system(recipe)?, &Self::stepper(&p))?;
        if p.levels.is_empty() || p.count_per_level == 0 {
            return Err(Error::Config("lv-hlevel: need at least one level and one sample".into()));
        }
        if let Some(l) = p.levels.iter().find(|l| !(**l < 0.0)) {
            return Err(Error::Config(format!("lv-hlevel: level {l} is unreachable (must be < 0)")));
        }
        if !(p.drift_periods > 0.0) {
            return Err(Error::Config("lv-hlevel: drift_periods must be > 0".into()));
        }
        Ok(())
    }

    fn run(&self, recipe: &ExperimentRecipe) -> Result<ProtocolOutput> {
        let p: LvHLevelParams = recipe.params()?;
        let sys = Self::system(recipe)?;
        let cfg = Self::stepper(&p);
        let mut jobs = Vec::new();
        for (li, &level) in p.levels.iter().enumerate() {
            // distinct stream per level
            let seed = recipe.seed.wrapping_add((li as u64) << 32);
            for (i, x0) in lv_hlevel_sampler(&sys, level, p.count_per_level, seed)?.into_iter().enumerate() {
                jobs.push((level, i, x0));
            }
        }
        let checks = jobs
            .par_iter()
            .map(|(_, _, x0)| check_lv_orbit(&sys, x0, &cfg, p.drift_periods, &p.tolerances))
            .collect::<Result<Vec<LvOrbitCheck>>>()?;

        let mut csv = String::from("level,sample,x0,H,T_x,T_drift_removed,period_rel_diff,h_drift,time_average_err,consistent\n");
        let mut per_level = Vec::new();
        for &level in &p.levels {
            let periods: Vec<f64> = jobs
                .iter()
                .zip(&checks)
                .filter(|((l, _, _), _)| *l == level)
                .filter_map(|(_, c)| c.t_x)
                .collect();
            let (lo, hi) = periods
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(*t), b.max(*t)));
            per_level.push(json!({
                "H": level,
                "samples": jobs.iter().filter(|j| j.0 == level).count(),
                "periodic": periods.len(),
                "T_min": (!periods.is_empty()).then_some(lo),
                "T_max": (!periods.is_empty()).then_some(hi),
                "spread_rel": (!periods.is_empty()).then(|| (hi - lo) / (periods.iter().sum::<f64>() / periods.len() as f64)),
            }));
        }
        for ((level, i, x0), c) in jobs.iter().zip(&checks) {
            let xs: Vec<String> = x0.iter().map(|v| fmt17(*v)).collect();
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{}",
                fmt17(*level),
                i,
                xs.join(";"),
                fmt17(c.h),
                opt_fmt(c.t_x),
                opt_fmt(c.t_drift_removed),
                opt_fmt(c.period_rel_diff),
                opt_fmt(c.h_drift),
                opt_fmt(c.time_average_err),
                c.consistent
            );
        }
        let all = checks.iter().all(|c| c.consistent);
        Ok(ProtocolOutput {
            verdict: if all { "CONSISTENT" } else { "INCONSISTENT" }.into(),
            tolerances: json!({
                "checks": p.tolerances,
                "stepper": cfg,
                "drift_periods": p.drift_periods,
                "return_tol": "1e-6*(|y0|+1)",
            }),
            summary_csv: csv,
            results: json!({
                "levels": per_level,
                "orbits": jobs.iter().zip(&checks).map(|((level, i, _), c)| json!({
                    "level": level, "sample": i, "check": c,
                })).collect::<Vec<_>>(),
            }),
        })
    }
}

fn default_c() -> f64 {
    2.0
}

fn default_delta() -> f64 {
    0.25
}

fn default_grid_n() -> usize {
    4000
}

fn default_true() -> bool {
    true
}

fn default_bin_width() -> f64 {
    0.1
}

fn default_range() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffSpecParams {
    #[serde(default)]
    pub potential: Option<String>,
    #[serde(default)]
    pub separable: Option<Vec<String>>,
    pub energy: f64,
    pub hbars: Vec<f64>,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default = "default_true")]
    pub richardson: bool,
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    #[serde(default = "default_range")]
    pub range: f64,
    #[serde(default)]
    pub persist_tol: Option<f64>,
    #[serde(default)]
    pub expect: Option<ClusterVerdict>,
}

/// Symbol `p² + V` with the wide default interval used by the oracles.
pub(crate) fn symbol(expr: &str) -> Result<Potential1D> {
    Potential1D::parse(expr, 1.0, (-1e3, 1e3))
}

impl DiffSpecParams {
    pub fn source(&self) -> Result<SpectrumSource> {
        match (&self.potential, &self.separable) {
            (Some(v), None) => Ok(SpectrumSource::OneD(symbol(v)?)),
            (None, Some(parts)) if parts.len() == 2 => {
                Ok(SpectrumSource::Separable(symbol(&parts[0])?, symbol(&parts[1])?))
            }
            _ => Err(Error::Config(
                "diffspec: give exactly one of `potential` or `separable` (two parts)".into(),
            )),
        }
    }

    pub fn config(&self) -> DiffSpecConfig {
        DiffSpecConfig {
            energy: self.energy,
            c: self.c,
            delta: self.delta,
            hbars: self.hbars.clone(),
            grid_n: self.grid_n,
            half_width: self.half_width,
            richardson: self.richardson,
            cluster: ClusterConfig {
                bin_width: self.bin_width,
                range: self.range,
                persist_tol: self.persist_tol,
                ..ClusterConfig::default()
            },
        }
    }
}

/// Difference-spectrum classification over an ℏ schedule.
pub struct DiffSpecProtocol;

impl Protocol for DiffSpecProtocol {
    fn name(&self) -> &'static str {
        "diffspec"
    }

    fn validate(&self, recipe: &ExperimentRecipe) -> Result<()> {
        let p: DiffSpecParams = recipe.params()?;
        p.source()?;
        if p.hbars.len() < 3 || p.hbars.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Config(
                "diffspec: hbars must hold at least 3 strictly decreasing values".into(),
            ));
        }
        if !(p.delta > 0.0 && p.delta < 0.5) {
            return Err(Error::Config(format!("diffspec: delta must lie in (0, 0.5) (got {})", p.delta)));
        }
        Ok(())
    }

    fn run(&self, recipe: &ExperimentRecipe) -> Result<ProtocolOutput> {
        let p: DiffSpecParams = recipe.params()?;
        let report = run_diffspec(&p.source()?, &p.config())?;
        let met = p.expect.map(|e| e == report.verdict);
        Ok(ProtocolOutput {
            verdict: report.verdict.as_str().into(),
            tolerances: json!({
                "lattice_tol": report.config.cluster.lattice_tol,
                "dense_fill": report.config.cluster.dense_fill,
                "bin_width": p.bin_width,
                "range": p.range,
                "persist_tol": p.persist_tol.unwrap_or(p.bin_width),
            }),
            summary_csv: histogram_csv(&report),
            results: json!({"report": report, "expectation_met": met}),
        })
    }
}

fn default_residual_tol() -> f64 {
    0.05
}

fn default_gap_tol() -> f64 {
    0.02
}

fn default_bs_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BohrSommerfeldParams {
    pub energy: f64,
    pub hbar: f64,
    #[serde(default = "default_bs_c")]
    pub c: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
}

/// Bohr–Sommerfeld residuals and gap ratios of a 1D window.
pub struct BohrSommerfeldProtocol;

impl BohrSommerfeldProtocol {
    fn system(recipe: &ExperimentRecipe) -> Result<Potential1D> {
        let spec = recipe.require_system()?;
        if SystemRegistry::builtin().resolve(&spec.kind) != Potential1D::KIND {
            return Err(Error::Config(format!(
                "bohr-sommerfeld needs a potential-1d system, got `{}`",
                spec.kind
            )));
        }
        let mut spec = spec.clone();
        spec.kind = Potential1D::KIND.into();
        Potential1D::from_system_spec(&spec)
    }
}

impl Protocol for BohrSommerfeldProtocol {
    fn name(&self) -> &'static str {
        "bohr-sommerfeld"
    }

    fn validate(&self, recipe: &ExperimentRecipe) -> Result<()> {
        let p: BohrSommerfeldParams = recipe.params()?;
        Self::system(recipe)?;
        window(&[], p.energy, p.c, p.delta, p.hbar)?;
        Ok(())
    }

    fn run(&self, recipe: &ExperimentRecipe) -> Result<ProtocolOutput> {
        let p: BohrSommerfeldParams = recipe.params()?;
        let sys = Self::system(recipe)?;
        let w = p.c * p.hbar.powf(1.0 - p.delta);
        let ceiling = p.energy + 10.0 * w;
        let l = match p.half_width {
            Some(l) => l,
            None => confining_half_width(&sys, ceiling)?,
        };
        let mut warnings = Vec::new();
        if sys.v(l) < ceiling || sys.v(-l) < ceiling {
            warnings.push(format!("V(±{l}) is below E + 10·c·hbar^(1-delta) = {ceiling}"));
        }
        let grid = Grid1D::new(l, p.grid_n)?;
        let op = discretize_1d(&sys, p.hbar, &grid)?;
        let eigs = eig_tridiagonal(&op, (p.energy - w, p.energy + w));
        let win = window(&eigs, p.energy, p.c, p.delta, p.hbar)?;
        let bs = bohr_sommerfeld_residuals(&sys, p.hbar, &win)?;
        if win.len() < 2 {
            warnings.push(format!("window holds {} eigenvalue(s); no gaps to compare", win.len()));
        }
        let pass = win.len() >= 2
            && bs.max_abs_residual() <= p.residual_tol
            && bs.max_gap_deviation() <= p.gap_tol;
        let mut csv = String::from("k,E,residual,gap_ratio\n");
        for (i, (k, e)) in bs.labels.iter().zip(&bs.eigenvalues).enumerate() {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                k,
                fmt17(*e),
                fmt17(bs.residuals[i]),
                opt_fmt(bs.gap_ratios.get(i).copied())
            );
        }
        Ok(ProtocolOutput {
            verdict: if pass { "PASS" } else { "FAIL" }.into(),
            tolerances: json!({"residual_tol": p.residual_tol, "gap_tol": p.gap_tol}),
            summary_csv: csv,
            results: json!({
                "grid": grid,
                "window_half_width": w,
                "bohr_sommerfeld": bs,
                "max_abs_residual": bs.max_abs_residual(),
                "max_gap_deviation": bs.max_gap_deviation(),
                "warnings": warnings,
            }),
        })
    }
}
