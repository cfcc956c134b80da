//! From finite-`n` data to `σ^ρ`, and from `σ^ρ` to
//! `𝔡 = ∫_{−1}^{1} σ^{Ω′(x)} dx`.
//!
//! `σₙ^ρ/n` increases to `σ^ρ`, so the best exact ratio is a certified lower
//! bound. Upper values come from fitting `σ − b/log n` and carry no
//! guarantee.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local_gas::{sigma_exact_table, SigmaKind, SigmaRecord};
use crate::maxdim::MaxDimRecord;
use crate::special::ln_factorial;

/// `[2(π−2)/π², π/√6]`, the interval known to contain `𝔡`.
pub fn sandwich() -> (f64, f64) {
    (2.0 * (PI - 2.0) / (PI * PI), PI / 6f64.sqrt())
}

/// Nodes with fewer expected down-steps than this at the largest exact `n`
/// are closed with the tail bound.
const TAIL_DOWN_STEPS: f64 = 4.0;

/// Smallest `N` used when fitting `s_N`.
pub const FIT_FROM_N: u32 = 20;

/// Bounds on `σ^ρ` for one slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaBracket {
    pub rho: f64,
    /// Largest exact `σₙ^ρ/n`.
    pub lower: f64,
    /// Intercept of the `σ − b/log n` fit, raised to `lower` if below it.
    pub upper: f64,
    pub n_used: Vec<usize>,
    pub fit_slope: f64,
    /// Root-mean-square residual of the fit.
    pub fit_residual: f64,
    /// Intercept of the `σ − b/n` fit; diagnostic only.
    pub power_fit: f64,
    /// Upper value replaced by the tail bound.
    pub tail: bool,
}

impl SigmaBracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Least squares `y ≈ a − b·t`; returns `(a, b, rms)`.
fn line_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let k = points.len() as f64;
    let (st, sy) = points.iter().fold((0.0, 0.0), |(a, b), &(t, y)| (a + t, b + y));
    let (mt, my) = (st / k, sy / k);
    let (mut stt, mut sty) = (0.0, 0.0);
    for &(t, y) in points {
        stt += (t - mt) * (t - mt);
        sty += (t - mt) * (y - my);
    }
    let b = if stt > 0.0 { -sty / stt } else { 0.0 };
    let a = my + b * mt;
    let rms = (points.iter().map(|&(t, y)| (a - b * t - y).powi(2)).sum::<f64>() / k).sqrt();
    (a, b, rms)
}

/// Fits `a − b·t` with `b ≥ 0`. With the slope clamped the intercept is the
/// largest observation, which keeps it above the data.
fn monotone_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let (a, b, rms) = line_fit(points);
    if b >= 0.0 {
        return (a, b, rms);
    }
    let top = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let rms = (points.iter().map(|&(_, y)| (top - y).powi(2)).sum::<f64>() / points.len() as f64).sqrt();
    (top, 0.0, rms)
}

/// Exact ratios `σₙ^ρ/n` for slope `±rho`, one per `n`, sorted by `n`.
fn exact_ratios(rho: f64, records: &[SigmaRecord]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = records
        .iter()
        .filter(|r| r.kind == SigmaKind::Exact && r.n > 0 && (r.rho == rho || r.rho == -rho))
        .map(|r| (r.n, r.value / r.n as f64))
        .collect();
    out.sort_by_key(|a| a.0);
    out.dedup_by_key(|p| p.0);
    out
}

/// Bracket for `σ^ρ` from the exact records at `±rho`.
pub fn sigma_limit(rho: f64, records: &[SigmaRecord]) -> Result<SigmaBracket> {
    let ratios = exact_ratios(rho, records);
    if ratios.len() < 3 {
        return Err(Error::Data(format!("need exact σₙ at three lengths for ρ = {rho}, have {}", ratios.len())));
    }
    let lower = ratios.iter().map(|p| p.1).fold(0.0, f64::max);
    let n_max = ratios.last().unwrap().0;
    let mut used: Vec<(usize, f64)> = ratios.iter().copied().filter(|&(n, _)| n >= 2 && 2 * n >= n_max).collect();
    if used.len() < 3 {
        used = ratios.iter().copied().filter(|&(n, _)| n >= 2).rev().take(3).collect();
        used.reverse();
    }
    let log_points: Vec<(f64, f64)> = used.iter().map(|&(n, y)| (1.0 / (n as f64).ln(), y)).collect();
    let (a, b, rms) = monotone_fit(&log_points);
    let power_points: Vec<(f64, f64)> = used.iter().map(|&(n, y)| (1.0 / n as f64, y)).collect();
    let (power_fit, _, _) = monotone_fit(&power_points);
    Ok(SigmaBracket {
        rho,
        lower,
        upper: a.max(lower),
        n_used: used.iter().map(|p| p.0).collect(),
        fit_slope: b,
        fit_residual: rms,
        power_fit,
        tail: false,
    })
}

/// `(1 − ρ)·log(2/(1 − ρ))`, the shape of the bound on `σ^ρ` near `ρ = 1`.
pub fn tail_profile(rho: f64) -> f64 {
    let gap = 1.0 - rho.abs();
    if gap <= 0.0 {
        0.0
    } else {
        gap * (2.0 / gap).ln()
    }
}

/// One quadrature node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridNode {
    pub x: f64,
    #[serde(flatten)]
    pub bracket: SigmaBracket,
}

/// The estimate `𝔡̂` with its bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub grid: Vec<GridNode>,
    pub quadrature_error: f64,
    /// `C` in the tail bound `σ^ρ ≤ C(1−ρ)log(2/(1−ρ))`, fitted from the data.
    pub tail_constant: f64,
}

/// Slopes `ρ_j = j/(G−1)`. Their abscissae `x_j = sin(πρ_j/2)` are the
/// Chebyshev points of `[−1, 1]` that fall in `[0, 1]`.
pub fn grid_slopes(grid_size: usize) -> Vec<f64> {
    let last = grid_size.saturating_sub(1).max(1);
    (0..grid_size).map(|j| j as f64 / last as f64).collect()
}

/// Exact tables `σ_m^ρ`, `m ≤ n_max`, at every grid slope.
pub fn grid_records(grid_size: usize, n_max: usize) -> Result<Vec<SigmaRecord>> {
    let tables: Vec<Vec<SigmaRecord>> =
        grid_slopes(grid_size).into_par_iter().map(|rho| sigma_exact_table(n_max, rho)).collect::<Result<_>>()?;
    Ok(tables.into_iter().flatten().collect())
}

/// Trapezoid rule in `θ = πρ/2` for `2∫₀¹ g(x) dx = 2∫ g(sin θ) cos θ dθ`.
fn integrate(values: &[f64], stride: usize) -> f64 {
    let last = values.len() - 1;
    let h = FRAC_PI_2 * stride as f64 / last as f64;
    let mut sum = 0.0;
    for j in (0..=last).step_by(stride) {
        let w = if j == 0 || j == last { 0.5 } else { 1.0 };
        sum += w * values[j] * (FRAC_PI_2 * j as f64 / last as f64).cos();
    }
    2.0 * h * sum
}

/// `𝔡̂` from exact records at the slopes of [`grid_slopes`]`(grid_size)`.
pub fn estimate_d(grid_size: usize, records: &[SigmaRecord]) -> Result<DEstimate> {
    if grid_size < 8 {
        return Err(Error::Validation(format!("grid size must be at least 8, got {grid_size}")));
    }
    let slopes = grid_slopes(grid_size);
    let mut brackets = slopes.par_iter().map(|&rho| sigma_limit(rho, records)).collect::<Result<Vec<_>>>()?;

    let informative = |b: &SigmaBracket| {
        let n_max = *b.n_used.last().unwrap() as f64;
        (1.0 - b.rho) * n_max / 2.0 >= TAIL_DOWN_STEPS
    };
    let ratio = |b: &SigmaBracket| b.upper / tail_profile(b.rho);
    let upper_half: Vec<f64> =
        brackets.iter().filter(|b| informative(b) && b.rho >= 0.5 && b.rho < 1.0).map(ratio).collect();
    let tail_constant = if upper_half.is_empty() {
        brackets.iter().filter(|b| informative(b) && b.rho > 0.0 && b.rho < 1.0).map(ratio).fold(0.0, f64::max)
    } else {
        upper_half.into_iter().fold(0.0, f64::max)
    };
    for b in &mut brackets {
        if !informative(b) {
            b.tail = true;
            b.upper = (tail_constant * tail_profile(b.rho)).max(b.lower);
        }
    }

    let lows: Vec<f64> = brackets.iter().map(|b| b.lower).collect();
    let highs: Vec<f64> = brackets.iter().map(|b| b.upper).collect();
    let mids: Vec<f64> = brackets.iter().map(SigmaBracket::mid).collect();
    let value = integrate(&mids, 1);
    let quadrature_error = if (grid_size - 1).is_multiple_of(2) { (value - integrate(&mids, 2)).abs() / 3.0 } else { 0.0 };
    let grid = brackets
        .into_iter()
        .map(|bracket| GridNode { x: (FRAC_PI_2 * bracket.rho).sin(), bracket })
        .collect();
    Ok(DEstimate { value, lower: integrate(&lows, 1), upper: integrate(&highs, 1), grid, quadrature_error, tail_constant })
}

/// `s_N = −log(d_N/√N!)/√N` against the estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactComparison {
    pub s: Vec<(u32, f64)>,
    /// Intercept of `s_N ≈ 𝔡 − b/log N` over `N ≥ fit_from`.
    pub fitted_d: f64,
    pub fitted_b: f64,
    pub fit_from: u32,
    pub fit_residual: f64,
    pub d_hat: f64,
    pub discrepancy: f64,
}

/// `s_N` for one record.
pub fn normalized_deficit(record: &MaxDimRecord) -> f64 {
    if record.n == 0 {
        return 0.0;
    }
    (0.5 * ln_factorial(record.n as u64) - record.log_d) / (record.n as f64).sqrt()
}

/// Fits `s_N ≈ 𝔡 − b/log N` to the table and compares with `d_hat`.
pub fn compare_with_exact(table: &[MaxDimRecord], d_hat: &DEstimate) -> Result<ExactComparison> {
    if table.is_empty() {
        return Err(Error::Data("empty d_N table".into()));
    }
    let s: Vec<(u32, f64)> = table.iter().map(|r| (r.n, normalized_deficit(r))).collect();
    let largest = s.iter().map(|p| p.0).max().unwrap();
    let fit_from = if largest >= FIT_FROM_N + 10 { FIT_FROM_N } else { 2 };
    let points: Vec<(f64, f64)> =
        s.iter().filter(|p| p.0 >= fit_from).map(|&(n, v)| (1.0 / (n as f64).ln(), v)).collect();
    if points.len() < 2 {
        return Err(Error::Data("need s_N at two N ≥ 2 to fit".into()));
    }
    let (fitted_d, fitted_b, fit_residual) = line_fit(&points);
    Ok(ExactComparison {
        s,
        fitted_d,
        fitted_b,
        fit_from,
        fit_residual,
        d_hat: d_hat.value,
        discrepancy: fitted_d - d_hat.value,
    })
}

/// Writes `x, rho, sigma_lower, sigma_mid, sigma_upper`.
pub fn write_grid_csv<W: std::io::Write>(estimate: &DEstimate, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(["x", "rho", "sigma_lower", "sigma_mid", "sigma_upper"]).map_err(csv_err)?;
    for node in &estimate.grid {
        let b = &node.bracket;
        w.write_record([node.x, b.rho, b.lower, b.mid(), b.upper].map(|v| format!("{v:.11e}"))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
