//! Period and action of one-dimensional wells by quadrature.
//!
//! With turning points `q± ` and `q = m + w u`, both integrals are written as
//! `∫ F(u) du / √(1 − u²)` and evaluated by Gauss–Chebyshev. The square-root
//! endpoint behaviour of `p(q)` cancels against `√(1 − u²)`, leaving a smooth
//! `F` for analytic potentials.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::systems::Potential1D;

/// Gauss–Chebyshev nodes used by the oracles.
pub const NODES: usize = 2000;

const SCAN_POINTS: usize = 4000;

/// Location and value of the minimum of `V` on the configured interval.
pub fn potential_minimum(sys: &Potential1D) -> (f64, f64) {
    let (lo, hi) = sys.interval;
    let dx = (hi - lo) / SCAN_POINTS as f64;
    let mut best = (lo, sys.v(lo));
    for i in 1..=SCAN_POINTS {
        let x = lo + i as f64 * dx;
        let v = sys.v(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    // golden-section polish inside the neighbouring cells
    let (mut a, mut b) = ((best.0 - dx).max(lo), (best.0 + dx).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        if b - a <= 4.0 * f64::EPSILON * (1.0 + best.0.abs()) {
            break;
        }
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if sys.v(c) < sys.v(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    if sys.v(x) < best.1 {
        (x, sys.v(x))
    } else {
        best
    }
}

/// Classical turning points of the well around the minimum at energy `E`.
pub fn turning_points(sys: &Potential1D, energy: f64) -> Result<(f64, f64)> {
    let (qmin, vmin) = potential_minimum(sys);
    if !(energy > vmin) {
        return Err(Error::NotConfining {
            energy,
            reason: format!("E is not above min V = {vmin}"),
        });
    }
    let (lo, hi) = sys.interval;
    let dx = (hi - lo) / SCAN_POINTS as f64;
    let find = |dir: f64| -> Result<f64> {
        let mut inside = qmin;
        loop {
            let next = inside + dir * dx;
            if next < lo || next > hi {
                return Err(Error::NotConfining {
                    energy,
                    reason: format!(
                        "no turning point on the {} side within [{lo}, {hi}]",
                        if dir < 0.0 { "left" } else { "right" }
                    ),
                });
            }
            if sys.v(next) >= energy {
                return Ok(bisect_level(sys, energy, inside, next));
            }
            inside = next;
        }
    };
    Ok((find(-1.0)?, find(1.0)?))
}

/// Bisects `V(x) = E` between `inside` (`V < E`) and `outside` (`V >= E`)
/// down to adjacent floats; returns the inside end.
fn bisect_level(sys: &Potential1D, energy: f64, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if sys.v(mid) < energy {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

fn chebyshev_sum(sys: &Potential1D, energy: f64, f: impl Fn(f64, f64) -> f64) -> Result<(f64, f64)> {
    let (a, b) = turning_points(sys, energy)?;
    let (m, w) = (0.5 * (a + b), 0.5 * (b - a));
    let mut sum = 0.0;
    for k in 1..=NODES {
        let u = ((2 * k - 1) as f64 * PI / (2 * NODES) as f64).cos();
        let q = m + w * u;
        let p = ((energy - sys.v(q)).max(0.0) / sys.kinetic).sqrt();
        let s = (1.0 - u * u).sqrt();
        sum += f(s, p);
    }
    Ok((sum * PI / NODES as f64, w))
}

/// Period `T(E) = 2 ∫ dq / q'` with `q' = 2 c p`, `p = √((E − V)/c)`.
pub fn period_oracle_1d(sys: &Potential1D, energy: f64) -> Result<f64> {
    let c = sys.kinetic;
    let (sum, w) = chebyshev_sum(sys, energy, |s, p| if p > 0.0 { s / (2.0 * c * p) } else { 0.0 })?;
    Ok(2.0 * w * sum)
}

/// Action `S(E) = ∮ p dq = 2 ∫ √((E − V)/c) dq`.
pub fn action_1d(sys: &Potential1D, energy: f64) -> Result<f64> {
    let (sum, w) = chebyshev_sum(sys, energy, |s, p| s * p)?;
    Ok(2.0 * w * sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well(expr: &str, c: f64) -> Potential1D {
        Potential1D::parse(expr, c, (-10.0, 10.0)).unwrap()
    }

    #[test]
    fn quadratic_symbol_has_period_pi() {
        for e in [0.1, 1.0, 7.0] {
            let t = period_oracle_1d(&well("x^2", 1.0), e).unwrap();
            assert!((t - PI).abs() < 1e-9 * PI, "{t}");
        }
    }

    #[test]
    fn classical_oscillator_period_two_pi() {
        let t = period_oracle_1d(&well("0.5*x^2", 0.5), 1.3).unwrap();
        assert!((t - 2.0 * PI).abs() < 1e-9 * 2.0 * PI);
    }

    #[test]
    fn quartic_scaling_law() {
        let s = well("x^4", 1.0);
        let t1 = period_oracle_1d(&s, 1.0).unwrap();
        // B(1/4, 1/2)/2 from an arbitrary-precision evaluation
        assert!((t1 - 2.622_057_554_292_12).abs() < 1e-9);
        for e in [0.5, 2.0] {
            let t = period_oracle_1d(&s, e).unwrap();
            assert!((t - t1 * e.powf(-0.25)).abs() < 1e-6 * t);
        }
    }

    #[test]
    fn actions() {
        // ellipse areas: p² + q² <= E has area πE; ½p² + ½q² <= E has 2πE
        let s = action_1d(&well("x^2", 1.0), 1.0).unwrap();
        assert!((s - PI).abs() < 1e-9);
        let t = period_oracle_1d(&well("x^2", 1.0), 1.0).unwrap();
        assert!((s - 1.0 * t).abs() < 1e-9);
        let s = action_1d(&well("0.5*x^2", 0.5), 1.0).unwrap();
        assert!((s - 2.0 * PI).abs() < 1e-9);
        // mpmath: 2∫√(1−q⁴) = 3.4960767390561597
        let s = action_1d(&well("x^4", 1.0), 1.0).unwrap();
        assert!((s - 3.496_076_739_056_16).abs() < 1e-9);
    }

    #[test]
    fn action_derivative_is_period() {
        let s = well("x^4", 1.0);
        let e = 1.0;
        let d = 1e-4 * e;
        let ds = (action_1d(&s, e + d).unwrap() - action_1d(&s, e - d).unwrap()) / (2.0 * d);
        let t = period_oracle_1d(&s, e).unwrap();
        assert!((ds - t).abs() < 1e-5, "{ds} vs {t}");
    }

    #[test]
    fn asymmetric_well() {
        // V = (x-1)^2 + 3 behaves like x^2 shifted
        let t = period_oracle_1d(&well("(x-1)^2 + 3", 1.0), 5.0).unwrap();
        assert!((t - PI).abs() < 1e-9);
    }

    #[test]
    fn not_confining() {
        let s = Potential1D::parse("x^2", 1.0, (-1.0, 1.0)).unwrap();
        assert!(matches!(period_oracle_1d(&s, 4.0), Err(Error::NotConfining { .. })));
        assert!(matches!(period_oracle_1d(&s, -1.0), Err(Error::NotConfining { .. })));
        let lin = Potential1D::parse("x", 1.0, (-5.0, 5.0)).unwrap();
        assert!(action_1d(&lin, 0.0).is_err());
    }
}
