//! Minimal-period detection by Poincaré return, plus quadrature oracles for
//! one-dimensional wells.

pub mod quadrature;
pub mod survey;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{stepper_for, Stepper, StepperConfig};
use crate::phase::PhasePoint;
use crate::systems::{lv_embed, vector_field, Hamiltonian, LotkaVolterra};

pub use quadrature::{action_1d, period_oracle_1d};
pub use survey::{survey_periods, SurveyParams, SurveyReport, SurveyVerdict};

/// Flow speed below which the start point is treated as an equilibrium.
pub const DEGENERATE_SPEED: f64 = 1e-12;

/// Crossing times are refined until the bracket is below this fraction of `h`.
pub const REFINE_TOL: f64 = 1e-12;

const FALLBACK_HORIZON: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodVerdict {
    Periodic,
    NotPeriodicWithinHorizon,
    DegenerateFixedPoint,
}

impl PeriodVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Periodic => "periodic",
            Self::NotPeriodicWithinHorizon => "not-periodic-within-horizon",
            Self::DegenerateFixedPoint => "degenerate-fixed-point",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    #[serde(rename = "T")]
    pub period: Option<f64>,
    /// Distance to the start point at the reported return, or the closest
    /// section return seen when no return qualified.
    pub residual: f64,
    /// Positive section crossings up to and including the reported one.
    pub returns_used: usize,
    pub verdict: PeriodVerdict,
}

impl PeriodEstimate {
    fn degenerate() -> Self {
        Self {
            period: None,
            residual: 0.0,
            returns_used: 0,
            verdict: PeriodVerdict::DegenerateFixedPoint,
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.verdict == PeriodVerdict::Periodic
    }
}

/// Coordinates in which the section is placed and returns are measured.
pub trait SectionSpace {
    fn coords(&self, pt: &PhasePoint, t: f64) -> Result<Vec<f64>>;
    /// Time derivative of [`SectionSpace::coords`] along the flow.
    fn velocity(&self, pt: &PhasePoint, t: f64) -> Result<Vec<f64>>;
}

/// Canonical phase-space coordinates.
pub struct PhaseSpace<'a>(pub &'a dyn Hamiltonian);

impl SectionSpace for PhaseSpace<'_> {
    fn coords(&self, pt: &PhasePoint, _t: f64) -> Result<Vec<f64>> {
        Ok(pt.to_vec())
    }

    fn velocity(&self, pt: &PhasePoint, _t: f64) -> Result<Vec<f64>> {
        Ok(vector_field(self.0, pt)?.to_vec())
    }
}

/// LV populations `x = exp(P + ½ A Q)`.
pub struct Populations<'a>(pub &'a LotkaVolterra);

impl SectionSpace for Populations<'_> {
    fn coords(&self, pt: &PhasePoint, _t: f64) -> Result<Vec<f64>> {
        self.0.populations(&pt.q, &pt.p)
    }

    fn velocity(&self, pt: &PhasePoint, _t: f64) -> Result<Vec<f64>> {
        let x = self.0.populations(&pt.q, &pt.p)?;
        Ok(self.0.population_rhs(&x))
    }
}

/// Drift-removed Volterra coordinates `(Q − q t, P + ½ A q t)`.
pub struct DriftRemoved<'a> {
    sys: &'a LotkaVolterra,
    half_aq: Vec<f64>,
}

impl<'a> DriftRemoved<'a> {
    pub fn new(sys: &'a LotkaVolterra) -> Self {
        Self {
            half_aq: sys.half_a_q(),
            sys,
        }
    }
}

impl SectionSpace for DriftRemoved<'_> {
    fn coords(&self, pt: &PhasePoint, t: f64) -> Result<Vec<f64>> {
        let q = &self.sys.equilibrium.q;
        let mut out: Vec<f64> = pt.q.iter().zip(q).map(|(a, b)| a - b * t).collect();
        out.extend(pt.p.iter().zip(&self.half_aq).map(|(a, b)| a + b * t));
        Ok(out)
    }

    fn velocity(&self, pt: &PhasePoint, _t: f64) -> Result<Vec<f64>> {
        let v = vector_field(self.sys, pt)?;
        let q = &self.sys.equilibrium.q;
        let mut out: Vec<f64> = v.q.iter().zip(q).map(|(a, b)| a - b).collect();
        out.extend(v.p.iter().zip(&self.half_aq).map(|(a, b)| a + b));
        Ok(out)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Default return tolerance `1e−6 (|y0| + 1)`.
pub fn default_return_tol(y0: &[f64]) -> f64 {
    1e-6 * (norm(y0) + 1.0)
}

/// Default horizon: 50 reference periods, else 1000.
pub fn default_horizon(sys: &dyn Hamiltonian, pt0: &PhasePoint) -> f64 {
    sys.reference_period(pt0)
        .filter(|t| t.is_finite() && *t > 0.0)
        .map_or(FALLBACK_HORIZON, |t| 50.0 * t)
}

/// State reached from `pt0` after time `t`: whole steps of `h`, then one
/// partial step. Matches the states visited by the detector.
pub fn flow_to(
    sys: &dyn Hamiltonian,
    stepper: &dyn Stepper,
    pt0: &PhasePoint,
    t: f64,
    h: f64,
) -> Result<PhasePoint> {
    let n = (t / h).floor() as usize;
    let mut pt = pt0.clone();
    for _ in 0..n {
        pt = stepper.step(sys, &pt, h)?;
    }
    let rest = t - n as f64 * h;
    if rest > 0.0 {
        pt = stepper.step(sys, &pt, rest)?;
    }
    Ok(pt)
}

/// Minimal period of the orbit through `pt0` in canonical coordinates.
pub fn detect_period(
    sys: &dyn Hamiltonian,
    pt0: &PhasePoint,
    cfg: &StepperConfig,
    horizon: Option<f64>,
    return_tol: Option<f64>,
) -> Result<PeriodEstimate> {
    detect_period_in(sys, &PhaseSpace(sys), pt0, cfg, horizon, return_tol)
}

/// Minimal period with the section and return distance taken in `space`.
pub fn detect_period_in(
    sys: &dyn Hamiltonian,
    space: &dyn SectionSpace,
    pt0: &PhasePoint,
    cfg: &StepperConfig,
    horizon: Option<f64>,
    return_tol: Option<f64>,
) -> Result<PeriodEstimate> {
    cfg.validate()?;
    sys.check_domain(pt0)?;
    let stepper = stepper_for(sys, cfg)?;
    let y0 = space.coords(pt0, 0.0)?;
    let v0 = space.velocity(pt0, 0.0)?;
    if norm(&v0) < DEGENERATE_SPEED {
        return Ok(PeriodEstimate::degenerate());
    }
    let horizon = horizon.unwrap_or_else(|| default_horizon(sys, pt0));
    if !(horizon > 0.0) {
        return Err(Error::Parameter(format!("horizon must be > 0 (got {horizon})")));
    }
    let tol = return_tol.unwrap_or_else(|| default_return_tol(&y0));
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("return_tol must be > 0 (got {tol})")));
    }
    let h = cfg.h;
    let section = |pt: &PhasePoint, t: f64| -> Result<(f64, Vec<f64>)> {
        let y = space.coords(pt, t)?;
        let s = y.iter().zip(&y0).zip(&v0).map(|((a, b), v)| (a - b) * v).sum();
        Ok((s, y))
    };

    let n = (horizon / h).ceil() as usize;
    let mut state = pt0.clone();
    let mut s_prev = 0.0;
    let mut crossings = 0;
    let mut closest = f64::INFINITY;
    for i in 1..=n {
        let t0 = (i - 1) as f64 * h;
        let next = stepper.step(sys, &state, h)?;
        if sys.domain_exit(&next).is_some() {
            break;
        }
        let (s_cur, _) = match section(&next, i as f64 * h) {
            Ok(v) => v,
            Err(Error::Range(_)) => break,
            Err(e) => return Err(e),
        };
        if s_prev < 0.0 && s_cur >= 0.0 {
            crossings += 1;
            let tau = refine_crossing(s_prev, s_cur, h, |tau| {
                let pt = stepper.step(sys, &state, tau)?;
                Ok(section(&pt, t0 + tau)?.0)
            })?;
            let t_cross = t0 + tau;
            let pt = if tau == h { next.clone() } else { stepper.step(sys, &state, tau)? };
            let d = dist(&space.coords(&pt, t_cross)?, &y0);
            closest = closest.min(d);
            if d <= tol {
                return confirm(sys, space, stepper.as_ref(), pt0, &y0, t_cross, d, tol, h, crossings);
            }
        }
        s_prev = s_cur;
        state = next;
    }
    Ok(PeriodEstimate {
        period: None,
        residual: closest,
        returns_used: crossings,
        verdict: PeriodVerdict::NotPeriodicWithinHorizon,
    })
}

#[allow(clippy::too_many_arguments)]
fn confirm(
    sys: &dyn Hamiltonian,
    space: &dyn SectionSpace,
    stepper: &dyn Stepper,
    pt0: &PhasePoint,
    y0: &[f64],
    t: f64,
    d: f64,
    tol: f64,
    h: f64,
    crossings: usize,
) -> Result<PeriodEstimate> {
    let at = |time: f64| -> Result<f64> {
        let pt = flow_to(sys, stepper, pt0, time, h)?;
        Ok(dist(&space.coords(&pt, time)?, y0))
    };
    let full = at(t)?;
    if full > tol {
        return Ok(PeriodEstimate {
            period: None,
            residual: full,
            returns_used: crossings,
            verdict: PeriodVerdict::NotPeriodicWithinHorizon,
        });
    }
    let half = at(0.5 * t)?;
    let (period, residual) = if half <= tol { (0.5 * t, half) } else { (t, d) };
    Ok(PeriodEstimate {
        period: Some(period),
        residual,
        returns_used: crossings,
        verdict: PeriodVerdict::Periodic,
    })
}

/// Root of `g` on `[0, h]` given `g(0) < 0 <= g(h)`: Illinois false position
/// with a bisection fallback when the bracket stalls.
fn refine_crossing(
    g0: f64,
    gh: f64,
    h: f64,
    mut g: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    if gh == 0.0 {
        return Ok(h);
    }
    let (mut a, mut b) = (0.0, h);
    let (mut ga, mut gb) = (g0, gh);
    let mut side = 0i8;
    for _ in 0..200 {
        if b - a <= REFINE_TOL * h {
            break;
        }
        let width = b - a;
        let mut x = (a * gb - b * ga) / (gb - ga);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let gx = g(x)?;
        if gx == 0.0 {
            return Ok(x);
        }
        if gx < 0.0 {
            a = x;
            ga = gx;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            gb = gx;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
        if b - a > 0.5 * width {
            let m = 0.5 * (a + b);
            let gm = g(m)?;
            if gm < 0.0 {
                a = m;
                ga = gm;
            } else {
                b = m;
                gb = gm;
            }
            side = 0;
        }
    }
    Ok(if -ga < gb { a } else { b })
}

/// Periods of an LV orbit from the population dynamics and from the
/// drift-removed Volterra trajectory.
pub fn detect_period_lv(
    sys: &LotkaVolterra,
    x0: &[f64],
    cfg: &StepperConfig,
    horizon: Option<f64>,
    return_tol: Option<f64>,
) -> Result<(PeriodEstimate, PeriodEstimate)> {
    let pt0 = lv_embed(x0, sys)?.phase_point();
    let x = detect_period_in(sys, &Populations(sys), &pt0, cfg, horizon, return_tol)?;
    let drift = detect_period_in(sys, &DriftRemoved::new(sys), &pt0, cfg, horizon, return_tol)?;
    Ok((x, drift))
}

/// Time average of the populations over `[0, T]`, equal to `(Q(T) − Q(0))/T`.
pub fn lv_time_average(
    sys: &LotkaVolterra,
    x0: &[f64],
    period: f64,
    cfg: &StepperConfig,
) -> Result<Vec<f64>> {
    if !(period > 0.0) {
        return Err(Error::Parameter(format!("period must be > 0 (got {period})")));
    }
    let pt0 = lv_embed(x0, sys)?.phase_point();
    let stepper = stepper_for(sys, cfg)?;
    let pt = flow_to(sys, stepper.as_ref(), &pt0, period, cfg.h)?;
    Ok(pt.q.iter().zip(&pt0.q).map(|(a, b)| (a - b) / period).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{HarmonicOscillator, Kepler, Potential1D};
    use std::f64::consts::PI;

    fn lv() -> LotkaVolterra {
        LotkaVolterra::new(vec![1.0, -1.0], vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn oscillator_period() {
        let ho = HarmonicOscillator::new(1.0, 1.0, 1).unwrap();
        let pt = PhasePoint::new(vec![1.0], vec![0.0]).unwrap();
        let est = detect_period(&ho, &pt, &StepperConfig::verlet(1e-3), None, None).unwrap();
        assert!(est.is_periodic());
        assert!((est.period.unwrap() - 2.0 * PI).abs() < 1e-6);
        assert_eq!(est.returns_used, 1);
    }

    #[test]
    fn kepler_eccentric_orbit() {
        let k = Kepler::new(1.0, 1.0, 1.0).unwrap();
        let pt = k.orbit_at_perihelion(0.5, -0.5).unwrap();
        let est = detect_period(&k, &pt, &StepperConfig::verlet(1e-4), None, None).unwrap();
        assert!(est.is_periodic(), "{est:?}");
        assert!((est.period.unwrap() - 2.0 * PI).abs() < 1e-6, "{est:?}");
    }

    #[test]
    fn equilibrium_is_degenerate() {
        let sys = lv();
        let (x, d) = detect_period_lv(&sys, &[1.0, 1.0], &StepperConfig::implicit_midpoint(1e-3), None, None)
            .unwrap();
        assert_eq!(x.verdict, PeriodVerdict::DegenerateFixedPoint);
        assert_eq!(d.verdict, PeriodVerdict::DegenerateFixedPoint);
        assert!(x.period.is_none());
    }

    #[test]
    fn short_horizon_is_not_periodic() {
        let ho = HarmonicOscillator::new(1.0, 1.0, 1).unwrap();
        let pt = PhasePoint::new(vec![1.0], vec![0.0]).unwrap();
        let est = detect_period(&ho, &pt, &StepperConfig::verlet(1e-3), Some(3.0), None).unwrap();
        assert_eq!(est.verdict, PeriodVerdict::NotPeriodicWithinHorizon);
        assert!(est.period.is_none());
        assert!(detect_period(&ho, &pt, &StepperConfig::verlet(1e-3), Some(0.0), None).is_err());
    }

    #[test]
    fn matches_quadrature_on_quartic() {
        let sys = Potential1D::parse("x^4", 1.0, (-10.0, 10.0)).unwrap();
        let pt = PhasePoint::new(vec![1.0], vec![0.0]).unwrap();
        let est = detect_period(&sys, &pt, &StepperConfig::verlet(2e-4), None, None).unwrap();
        let t = period_oracle_1d(&sys, 1.0).unwrap();
        assert!((est.period.unwrap() - t).abs() < 1e-6 * t, "{est:?} vs {t}");
    }

    #[test]
    fn lv_periods_and_time_average() {
        let sys = lv();
        let cfg = StepperConfig::implicit_midpoint(1e-3);
        let x0 = [1.2, 1.0];
        let (x, d) = detect_period_lv(&sys, &x0, &cfg, None, None).unwrap();
        let (tx, td) = (x.period.unwrap(), d.period.unwrap());
        assert!((tx - td).abs() < 1e-6 * tx, "{tx} {td}");
        assert!(tx > 2.0 * PI);
        let avg = lv_time_average(&sys, &x0, tx, &cfg).unwrap();
        assert!((avg[0] - 1.0).abs() < 1e-6 && (avg[1] - 1.0).abs() < 1e-6, "{avg:?}");
    }

    #[test]
    fn lv_amplitude_sweep_against_oracle() {
        // scipy DOP853 at rtol 1e-13
        let oracle = [(0.05, 6.284_452_308_155_698), (0.1, 6.288_097_434_574_372), (0.2, 6.301_711_738_490_52)];
        let sys = lv();
        let cfg = StepperConfig::implicit_midpoint(1e-3);
        let mut last = 0.0;
        for (a, t_ref) in oracle {
            let (x, _) = detect_period_lv(&sys, &[1.0 + a, 1.0], &cfg, None, None).unwrap();
            let t = x.period.unwrap();
            assert!((t - t_ref).abs() < 1e-5 * t_ref, "a={a}: {t} vs {t_ref}");
            assert!(t >= last);
            last = t;
        }
    }

    #[test]
    fn refine_finds_linear_root() {
        let r = refine_crossing(-1.0, 3.0, 1.0, |x| Ok(4.0 * x - 1.0)).unwrap();
        assert!((r - 0.25).abs() < 1e-12);
        let r = refine_crossing(-1.0, 7.0, 2.0, |x| Ok(x * x * x - 1.0)).unwrap();
        assert!((r - 1.0).abs() < 1e-11);
    }
}
