//! Finite-difference Schrödinger operators `−c ℏ² ∂² + V` at small ℏ,
//! eigenvalue windows and scaled difference spectra.

mod bohr;
mod cluster;
mod window;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::Potential1D;

pub use bohr::{bohr_sommerfeld_residuals, BohrSommerfeld};
pub use cluster::{
    cluster_verdict, histogram_csv, plot_script, run_diffspec, ClusterConfig, ClusterVerdict,
    DiffSpecConfig, DiffSpectrumReport, SpectrumSource,
};
pub use window::{difference_spectrum, tensor_sum_spectrum, window, SpectralWindow};

pub const MIN_GRID: usize = 16;

/// Uniform Dirichlet grid on `(−L, L)`; the endpoints are not nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl Grid1D {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Parameter(format!("grid: L must be > 0 (got {half_width})")));
        }
        if n < MIN_GRID {
            return Err(Error::Parameter(format!("grid: N must be >= {MIN_GRID} (got {n})")));
        }
        Ok(Self { half_width, n })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n + 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + (i + 1) as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Parameter(format!(
                "tridiagonal: {} diagonal and {} off-diagonal entries",
                diag.len(),
                off.len()
            )));
        }
        if diag.iter().chain(&off).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("tridiagonal: non-finite entry".into()));
        }
        Ok(Self { diag, off })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.diag.len(), self.diag.len())
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Infinity-norm bound `max |λ|`.
    pub fn norm(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    /// Number of eigenvalues strictly below `x` (Sylvester inertia of
    /// `T − x I` from the LDLᵀ pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + self.norm());
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.diag.len() {
            if i > 0 {
                let e = self.off[i - 1];
                q = self.diag[i] - x - e * e / q;
            }
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }
}

/// 3-point Dirichlet discretization of `−c ℏ² ∂² + V` on `grid`.
pub fn discretize_1d(sys: &Potential1D, hbar: f64, grid: &Grid1D) -> Result<Tridiagonal> {
    if !(hbar > 0.0) {
        return Err(Error::Parameter(format!("hbar must be > 0 (got {hbar})")));
    }
    let d = grid.spacing();
    let kin = sys.kinetic * hbar * hbar / (d * d);
    let diag: Vec<f64> = grid.nodes().into_iter().map(|x| 2.0 * kin + sys.v(x)).collect();
    if let Some(i) = diag.iter().position(|v| !v.is_finite()) {
        return Err(Error::domain("semiclassical", format!("V is not finite at x = {}", grid.node(i))));
    }
    Tridiagonal::new(diag, vec![-kin; grid.n - 1])
}

/// All eigenvalues in `[a, b)`, sorted, by Sturm bisection to an absolute
/// accuracy of `1e−12 · ‖T‖`.
pub fn eig_tridiagonal(op: &Tridiagonal, range: (f64, f64)) -> Vec<f64> {
    let (g_lo, g_hi) = op.gershgorin();
    let a = range.0.max(g_lo - 1.0);
    let b = range.1.min(g_hi + 1.0);
    if !(a < b) {
        return Vec::new();
    }
    eig_by_index(op, op.count_below(a), op.count_below(b))
}

/// Eigenvalues `λ_k` for `k` in `k0..k1` (0-based, ascending), by bisection.
pub fn eig_by_index(op: &Tridiagonal, k0: usize, k1: usize) -> Vec<f64> {
    let k1 = k1.min(op.diag.len());
    let (g_lo, g_hi) = op.gershgorin();
    let tol = 1e-12 * op.norm().max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(k1.saturating_sub(k0));
    // brackets shrink as eigenvalues are found in increasing order
    let mut lo = g_lo - 1.0;
    for k in k0..k1 {
        let mut l = lo;
        let mut h = g_hi + 1.0;
        while h - l > tol {
            let m = 0.5 * (l + h);
            if m <= l || m >= h {
                break;
            }
            if op.count_below(m) > k {
                h = m;
            } else {
                l = m;
            }
        }
        out.push(0.5 * (l + h));
        lo = l;
    }
    out
}

/// Eigenvalues of `−c ℏ² ∂² + V` in `[a, b)` with the `O(Δx²)` error of the
/// 3-point stencil removed: levels on `grid` and on the grid of half the
/// spacing are matched by index and combined as `(4 λ_fine − λ_coarse) / 3`.
/// Returns the index of the first level found and the levels.
pub fn eig_richardson(
    sys: &Potential1D,
    hbar: f64,
    grid: &Grid1D,
    range: (f64, f64),
) -> Result<(usize, Vec<f64>)> {
    let (a, b) = range;
    if !(a < b) {
        return Ok((0, Vec::new()));
    }
    let coarse = discretize_1d(sys, hbar, grid)?;
    let fine = discretize_1d(sys, hbar, &Grid1D::new(grid.half_width, 2 * grid.n + 1)?)?;
    // levels near the ends may cross them after extrapolation
    let pad = 0.5 * (b - a);
    let (k0, k1) = (coarse.count_below(a - pad), coarse.count_below(b + pad));
    let lc = eig_by_index(&coarse, k0, k1);
    let lf = eig_by_index(&fine, k0, k1);
    let mut first = k0;
    let mut out = Vec::with_capacity(lc.len());
    for (c, f) in lc.iter().zip(&lf) {
        let e = (4.0 * f - c) / 3.0;
        if e < a {
            first += 1;
        } else if e < b {
            out.push(e);
        }
    }
    Ok((first, out))
}

/// Half-width `L` of a box where `V(±L) ≥ level`, grown by `1.5` to leave room
/// for the evanescent tails.
pub fn confining_half_width(sys: &Potential1D, level: f64) -> Result<f64> {
    let mut l = 0.25f64;
    for _ in 0..200 {
        if sys.v(l) >= level && sys.v(-l) >= level {
            return Ok(1.5 * l);
        }
        l *= 1.05;
        if l > 1e6 {
            break;
        }
    }
    Err(Error::NotConfining {
        energy: level,
        reason: "V stays below the window ceiling on every box up to |x| = 1e6".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pot(expr: &str) -> Potential1D {
        Potential1D::parse(expr, 1.0, (-10.0, 10.0)).unwrap()
    }

    #[test]
    fn grid_contract() {
        let g = Grid1D::new(1.0, 16).unwrap();
        assert!((g.spacing() - 2.0 / 17.0).abs() < 1e-15);
        assert!(g.node(0) > -1.0 && g.node(15) < 1.0);
        assert!(Grid1D::new(1.0, 15).is_err());
        assert!(Grid1D::new(0.0, 100).is_err());
        let op = discretize_1d(&pot("x^2"), 1.0, &g).unwrap();
        assert_eq!(op.shape(), (16, 16));
        assert_eq!(op.off.len(), 15);
    }

    #[test]
    fn diagonal_and_two_by_two() {
        let op = Tridiagonal::new(vec![1.0, 2.0, 3.0], vec![0.0, 0.0]).unwrap();
        let e = eig_tridiagonal(&op, (0.0, 10.0));
        assert_eq!(e.len(), 3);
        for (x, y) in e.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - y).abs() < 1e-11);
        }
        let op = Tridiagonal::new(vec![2.0, 2.0], vec![-0.5]).unwrap();
        let e = eig_tridiagonal(&op, (-10.0, 10.0));
        assert!((e[0] - 1.5).abs() < 1e-11 && (e[1] - 2.5).abs() < 1e-11);
        assert!(eig_tridiagonal(&op, (3.0, 4.0)).is_empty());
    }

    #[test]
    fn particle_in_a_box() {
        let g = Grid1D::new(std::f64::consts::FRAC_PI_2, 1000).unwrap();
        let op = discretize_1d(&pot("0"), 1.0, &g).unwrap();
        let e = eig_tridiagonal(&op, (0.0, 30.0));
        // ℏ²(πj/2L)² = j²
        for (j, x) in e.iter().enumerate().take(5) {
            let exact = ((j + 1) * (j + 1)) as f64;
            assert!((x - exact).abs() < 1e-4 * exact, "{x} vs {exact}");
        }
    }

    #[test]
    fn oscillator_levels() {
        let g = Grid1D::new(3.0, 2000).unwrap();
        let op = discretize_1d(&pot("x^2"), 0.1, &g).unwrap();
        let e = eig_tridiagonal(&op, (0.0, 2.05));
        assert!(e.len() >= 10);
        assert!((e[0] - 0.1).abs() < 1e-4);
        for (k, x) in e.iter().take(10).enumerate() {
            assert!((x - (2 * k + 1) as f64 * 0.1).abs() < 5e-4);
        }
    }

    #[test]
    fn richardson_removes_grid_error() {
        let hbar = 0.02;
        let g = Grid1D::new(3.7, 1000).unwrap();
        let plain = eig_tridiagonal(&discretize_1d(&pot("x^2"), hbar, &g).unwrap(), (4.9, 5.1));
        let (first, rich) = eig_richardson(&pot("x^2"), hbar, &g, (4.9, 5.1)).unwrap();
        // levels 4.94 .. 5.06; 5.10 sits on the open end
        assert_eq!(rich.len(), 4);
        assert_eq!(first, 123);
        for (i, e) in rich.iter().enumerate() {
            let exact = (2 * (first + i) + 1) as f64 * hbar;
            assert!((e - exact).abs() < 0.05 * hbar, "{e} vs {exact}");
        }
        // the plain levels are off by several hbar here and mislabelled
        let k = op_index(&pot("x^2"), hbar, &g, plain[0]);
        assert!(((plain[0] - (2 * k + 1) as f64 * hbar) / hbar).abs() > 1.0);
    }

    fn op_index(p: &Potential1D, hbar: f64, g: &Grid1D, e: f64) -> usize {
        discretize_1d(p, hbar, g).unwrap().count_below(e)
    }

    #[test]
    fn eigenvalues_by_index() {
        let g = Grid1D::new(3.0, 400).unwrap();
        let op = discretize_1d(&pot("x^4 - x^2"), 0.05, &g).unwrap();
        let all = eig_tridiagonal(&op, (-1.0, 1.0));
        let k0 = op.count_below(-1.0);
        let tol = 1e-11 * op.norm();
        let picked = eig_by_index(&op, k0 + 2, k0 + 5);
        assert!(picked.iter().zip(&all[2..5]).all(|(a, b)| (a - b).abs() < tol));
        assert!(eig_by_index(&op, 3, 3).is_empty());
        assert_eq!(eig_by_index(&op, 398, 1000).len(), 2);
    }

    #[test]
    fn count_matches_result_length() {
        let g = Grid1D::new(3.0, 500).unwrap();
        let op = discretize_1d(&pot("x^4 - x^2"), 0.05, &g).unwrap();
        for (a, b) in [(-1.0, 0.0), (0.0, 0.7), (0.3, 0.31), (2.0, 1.0)] {
            let e = eig_tridiagonal(&op, (a, b));
            let expect = if a < b { op.count_below(b) - op.count_below(a) } else { 0 };
            assert_eq!(e.len(), expect);
            assert!(e.windows(2).all(|w| w[0] <= w[1]));
            assert!(e.iter().all(|x| *x >= a && *x < b));
        }
    }
}
