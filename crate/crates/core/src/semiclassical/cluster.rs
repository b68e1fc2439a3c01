//! Persistence of scaled eigenvalue differences across an ℏ schedule and the
//! lattice/dense verdict.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::window::{check_window_params, half_width};
use super::{
    confining_half_width, difference_spectrum, discretize_1d, eig_by_index, eig_richardson,
    eig_tridiagonal, tensor_sum_spectrum, window, Grid1D,
};
use crate::error::{Error, Result};
use crate::phase::fmt17;
use crate::systems::Potential1D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClusterVerdict {
    Lattice,
    Dense,
    Inconclusive,
}

impl ClusterVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lattice => "LATTICE",
            Self::Dense => "DENSE",
            Self::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub bin_width: f64,
    /// Histogram covers `[0, range)`.
    pub range: f64,
    /// Max distance between bin centres counted as the same cluster at
    /// another ℏ; defaults to one bin width.
    pub persist_tol: Option<f64>,
    pub lattice_tol: f64,
    pub dense_fill: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            bin_width: 0.1,
            range: 10.0,
            persist_tol: None,
            lattice_tol: 0.02,
            dense_fill: 0.9,
        }
    }
}

impl ClusterConfig {
    fn bins(&self) -> usize {
        (self.range / self.bin_width).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.bin_width > 0.0 && self.range > self.bin_width) {
            return Err(Error::Parameter(format!(
                "histogram needs 0 < bin_width < range (got {} and {})",
                self.bin_width, self.range
            )));
        }
        if self.persist_tol.is_some_and(|t| !(t >= 0.0)) {
            return Err(Error::Parameter("persist_tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// Verdict fields computed from the difference spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutcome {
    /// Per ℏ, counts of `|diff|` in each bin of `[0, range)`.
    pub histograms: Vec<Vec<usize>>,
    pub fill_fractions: Vec<f64>,
    pub cluster_points: Vec<f64>,
    /// Persistent runs wider than [`MAX_POINT_BINS`], as `[lo, hi)`.
    pub bands: Vec<(f64, f64)>,
    pub fitted_spacing: Option<f64>,
    pub lattice_residual: Option<f64>,
    pub verdict: ClusterVerdict,
}

/// Widest run of persistent bins still read as one cluster point.
pub const MAX_POINT_BINS: usize = 3;

fn histogram(diffs: &[f64], cfg: &ClusterConfig) -> Vec<usize> {
    let nb = cfg.bins();
    let mut h = vec![0; nb];
    for &d in diffs {
        if d >= 0.0 && d < cfg.range {
            let i = ((d / cfg.bin_width) as usize).min(nb - 1);
            h[i] += 1;
        }
    }
    h
}

/// Lattice, dense or inconclusive, from difference spectra for a strictly
/// decreasing ℏ schedule (at least three values).
pub fn cluster_verdict(hbars: &[f64], diffs: &[Vec<f64>], cfg: &ClusterConfig) -> Result<ClusterOutcome> {
    cfg.validate()?;
    if hbars.len() < 3 || hbars.len() != diffs.len() {
        return Err(Error::Parameter(format!(
            "need at least 3 hbar values with one spectrum each (got {} and {})",
            hbars.len(),
            diffs.len()
        )));
    }
    if hbars.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Parameter("hbar schedule must be strictly decreasing".into()));
    }
    let bw = cfg.bin_width;
    let center = |i: usize| (i as f64 + 0.5) * bw;
    let histograms: Vec<Vec<usize>> = diffs.iter().map(|d| histogram(d, cfg)).collect();
    let fill_fractions: Vec<f64> = histograms
        .iter()
        .map(|h| h.iter().filter(|c| **c > 0).count() as f64 / h.len() as f64)
        .collect();
    let fill = *fill_fractions.last().unwrap();

    let tol = cfg.persist_tol.unwrap_or(bw) + 1e-9 * bw;
    let last = histograms.last().unwrap();
    let persists = |i: usize| {
        histograms[..histograms.len() - 1].iter().all(|h| {
            h.iter()
                .enumerate()
                .any(|(j, c)| *c > 0 && (center(j) - center(i)).abs() <= tol)
        })
    };
    let keep: Vec<bool> = (0..last.len()).map(|i| last[i] > 0 && persists(i)).collect();

    // merge contiguous persistent bins; centroid from the raw values
    let smallest = diffs.last().unwrap();
    let mut cluster_points = Vec::new();
    let mut bands = Vec::new();
    let mut i = 0;
    while i < keep.len() {
        if !keep[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < keep.len() && keep[i] {
            i += 1;
        }
        let (lo, hi) = (start as f64 * bw, i as f64 * bw);
        if i - start > MAX_POINT_BINS {
            bands.push((lo, hi));
            continue;
        }
        let vals: Vec<f64> = smallest.iter().copied().filter(|d| *d >= lo && *d < hi).collect();
        let c = vals.iter().sum::<f64>() / vals.len() as f64;
        // differences between degenerate levels are not lattice points
        if c >= bw {
            cluster_points.push(c);
        }
    }

    let mut out = ClusterOutcome {
        histograms,
        fill_fractions,
        cluster_points,
        bands,
        fitted_spacing: None,
        lattice_residual: None,
        verdict: ClusterVerdict::Inconclusive,
    };
    // a dense spectrum persists in every bin too, so fill is checked first;
    // a persistent band rules out a lattice
    if fill > cfg.dense_fill {
        out.verdict = ClusterVerdict::Dense;
    } else if out.bands.is_empty() {
        if let Some((s, r)) = fit_lattice(&out.cluster_points) {
            out.lattice_residual = Some(r);
            if r < cfg.lattice_tol {
                out.fitted_spacing = Some(s);
                out.verdict = ClusterVerdict::Lattice;
            }
        }
    }
    Ok(out)
}

/// Least-squares spacing `s` for points labelled `round(p / p₁)`, with the
/// max relative residual. `None` when labels collide.
fn fit_lattice(points: &[f64]) -> Option<(f64, f64)> {
    let first = *points.first()?;
    let labels: Vec<f64> = points.iter().map(|p| (p / first).round()).collect();
    if labels[0] != 1.0 || labels.windows(2).any(|w| w[1] <= w[0]) {
        return None;
    }
    let num: f64 = points.iter().zip(&labels).map(|(p, n)| p * n).sum();
    let den: f64 = labels.iter().map(|n| n * n).sum();
    let s = num / den;
    let r = points
        .iter()
        .zip(&labels)
        .map(|(p, n)| (p - n * s).abs() / (n * s))
        .fold(0.0, f64::max);
    Some((s, r))
}

/// What is diagonalized at each ℏ.
#[derive(Debug, Clone)]
pub enum SpectrumSource {
    OneD(Potential1D),
    /// `V(x, y) = Vx(x) + Vy(y)`, spectrum by tensor sums.
    Separable(Potential1D, Potential1D),
}

impl SpectrumSource {
    pub fn describe(&self) -> String {
        match self {
            Self::OneD(p) => p.potential.source.clone(),
            Self::Separable(x, y) => format!("{}:{}", x.potential.source, y.potential.source),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffSpecConfig {
    #[serde(rename = "E")]
    pub energy: f64,
    pub c: f64,
    pub delta: f64,
    pub hbars: Vec<f64>,
    /// Interior grid points per axis.
    pub grid_n: usize,
    /// Box half-width; chosen from the confinement margin when absent.
    pub half_width: Option<f64>,
    /// Extrapolate eigenvalues from `grid_n` and the grid of half the spacing.
    #[serde(default = "default_richardson")]
    pub richardson: bool,
    pub cluster: ClusterConfig,
}

fn default_richardson() -> bool {
    true
}

impl DiffSpecConfig {
    pub fn new(energy: f64, hbars: Vec<f64>) -> Self {
        Self {
            energy,
            c: 2.0,
            delta: 0.25,
            hbars,
            grid_n: 4000,
            half_width: None,
            richardson: true,
            cluster: ClusterConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffSpectrumReport {
    pub source: String,
    pub config: DiffSpecConfig,
    pub hbars: Vec<f64>,
    pub window_sizes: Vec<usize>,
    pub windows: Vec<Vec<f64>>,
    /// Scaled differences per ℏ; large, so left out of the JSON form.
    #[serde(skip)]
    pub diffs_per_hbar: Vec<Vec<f64>>,
    pub diff_counts: Vec<usize>,
    pub cluster_points: Vec<f64>,
    pub bands: Vec<(f64, f64)>,
    pub fitted_spacing: Option<f64>,
    #[serde(rename = "T_hat")]
    pub t_hat: Option<f64>,
    pub lattice_residual: Option<f64>,
    pub fill_fractions: Vec<f64>,
    pub fill_fraction: f64,
    pub verdict: ClusterVerdict,
    pub histograms: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

fn axis_grid(
    pot: &Potential1D,
    hbar: f64,
    ceiling: f64,
    cfg: &DiffSpecConfig,
    warnings: &mut Vec<String>,
) -> Result<Grid1D> {
    let l = match cfg.half_width {
        Some(l) => l,
        None => confining_half_width(pot, ceiling)?,
    };
    if pot.v(l) < ceiling || pot.v(-l) < ceiling {
        warnings.push(format!(
            "hbar={hbar}: V(±{l}) is below E + 10·c·hbar^(1-delta) = {ceiling}; window levels may feel the box"
        ));
    }
    Grid1D::new(l, cfg.grid_n)
}

fn axis_eigs(pot: &Potential1D, hbar: f64, grid: &Grid1D, range: (f64, f64), richardson: bool) -> Result<Vec<f64>> {
    if richardson {
        Ok(eig_richardson(pot, hbar, grid, range)?.1)
    } else {
        Ok(eig_tridiagonal(&discretize_1d(pot, hbar, grid)?, range))
    }
}

fn window_at(
    source: &SpectrumSource,
    hbar: f64,
    cfg: &DiffSpecConfig,
) -> Result<(Vec<f64>, Vec<String>)> {
    let e = cfg.energy;
    let w = half_width(cfg.c, cfg.delta, hbar);
    let ceiling = e + 10.0 * w;
    let mut warnings = Vec::new();
    let eigs = match source {
        SpectrumSource::OneD(p) => {
            let grid = axis_grid(p, hbar, ceiling, cfg, &mut warnings)?;
            axis_eigs(p, hbar, &grid, (e - w, e + w), cfg.richardson)?
        }
        SpectrumSource::Separable(px, py) => {
            let gx = axis_grid(px, hbar, ceiling, cfg, &mut warnings)?;
            let gy = axis_grid(py, hbar, ceiling, cfg, &mut warnings)?;
            // the ground levels bound how much energy the other axis can take
            let x0 = eig_by_index(&discretize_1d(px, hbar, &gx)?, 0, 1)[0];
            let y0 = eig_by_index(&discretize_1d(py, hbar, &gy)?, 0, 1)[0];
            let xs = axis_eigs(px, hbar, &gx, (x0 - 1.0, e + w - y0 + 1.0), cfg.richardson)?;
            let ys = axis_eigs(py, hbar, &gy, (y0 - 1.0, e + w - x0 + 1.0), cfg.richardson)?;
            tensor_sum_spectrum(&xs, &ys, e, w)?
        }
    };
    let win = window(&eigs, e, cfg.c, cfg.delta, hbar)?;
    if win.is_empty() {
        warnings.push(format!("hbar={hbar}: empty window"));
    }
    Ok((win.eigenvalues, warnings))
}

/// Diagonalizes at every ℏ of the schedule (in parallel, assembled in
/// schedule order) and classifies the difference spectra.
pub fn run_diffspec(source: &SpectrumSource, cfg: &DiffSpecConfig) -> Result<DiffSpectrumReport> {
    for &h in &cfg.hbars {
        check_window_params(cfg.c, cfg.delta, h)?;
    }
    cfg.cluster.validate()?;
    if cfg.hbars.len() < 3 || cfg.hbars.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Parameter(
            "hbar schedule must hold at least 3 strictly decreasing values".into(),
        ));
    }
    let per_hbar = cfg
        .hbars
        .par_iter()
        .map(|&h| window_at(source, h, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut windows = Vec::new();
    let mut warnings = Vec::new();
    for (w, warn) in per_hbar {
        windows.push(w);
        warnings.extend(warn);
    }
    let diffs: Vec<Vec<f64>> = windows
        .iter()
        .zip(&cfg.hbars)
        .map(|(w, &h)| {
            difference_spectrum(&super::SpectralWindow {
                hbar: h,
                energy: cfg.energy,
                c: cfg.c,
                delta: cfg.delta,
                eigenvalues: w.clone(),
            })
        })
        .collect();
    let outcome = cluster_verdict(&cfg.hbars, &diffs, &cfg.cluster)?;
    Ok(DiffSpectrumReport {
        source: source.describe(),
        config: cfg.clone(),
        hbars: cfg.hbars.clone(),
        window_sizes: windows.iter().map(Vec::len).collect(),
        windows,
        diff_counts: diffs.iter().map(Vec::len).collect(),
        diffs_per_hbar: diffs,
        cluster_points: outcome.cluster_points,
        bands: outcome.bands,
        t_hat: outcome.fitted_spacing.map(|s| 2.0 * PI / s),
        fitted_spacing: outcome.fitted_spacing,
        lattice_residual: outcome.lattice_residual,
        fill_fraction: *outcome.fill_fractions.last().unwrap(),
        fill_fractions: outcome.fill_fractions,
        verdict: outcome.verdict,
        histograms: outcome.histograms,
        warnings,
    })
}

/// `hbar,bin_center,count` for every ℏ and bin.
pub fn histogram_csv(report: &DiffSpectrumReport) -> String {
    let bw = report.config.cluster.bin_width;
    let mut out = String::from("hbar,bin_center,count\n");
    for (h, hist) in report.hbars.iter().zip(&report.histograms) {
        for (i, c) in hist.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", fmt17(*h), fmt17((i as f64 + 0.5) * bw), c);
        }
    }
    out
}

/// Matplotlib script that stacks the histograms in `csv_name`, one panel per ℏ.
pub fn plot_script(csv_name: &str, title: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

src = sys.argv[1] if len(sys.argv) > 1 else "{csv_name}"
rows = defaultdict(list)
with open(src) as f:
    for r in csv.DictReader(f):
        rows[float(r["hbar"])].append((float(r["bin_center"]), int(r["count"])))

hbars = sorted(rows, reverse=True)
fig, axes = plt.subplots(len(hbars), 1, sharex=True, figsize=(8, 2.2 * len(hbars)))
if len(hbars) == 1:
    axes = [axes]
for ax, h in zip(axes, hbars):
    xs, cs = zip(*rows[h])
    width = xs[1] - xs[0] if len(xs) > 1 else 0.1
    ax.bar(xs, cs, width=width)
    ax.set_ylabel(f"hbar={{h:g}}")
axes[-1].set_xlabel("(E_k - E_l) / hbar")
fig.suptitle("{title}")
fig.tight_layout()
fig.savefig(src.rsplit(".", 1)[0] + ".png", dpi=120)
"#
    )
}
