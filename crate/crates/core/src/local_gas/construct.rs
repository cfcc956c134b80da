//! Explicit path constructions: the staircase under `y = ρx`, endpoint
//! surgery, and block concatenation.

use serde::{Deserialize, Serialize};

use super::{check_rho, LocalPath};
use crate::error::{Error, Result};

/// The maximal path with `f(x) ≤ ρx`; it satisfies `f(x) ∈ [ρx − 2, ρx]`.
pub fn staircase_path(n: usize, rho: f64) -> Result<LocalPath> {
    check_rho(rho)?;
    let mut f = 0i64;
    let steps = (0..n)
        .map(|k| {
            // The slack keeps rational slopes such as 1/3 exact at lattice points.
            if (f + 1) as f64 <= rho * (k + 1) as f64 + 1e-12 {
                f += 1;
                1
            } else {
                f -= 1;
                -1
            }
        })
        .collect();
    Ok(LocalPath::from_steps_unchecked(steps))
}

/// Retargets the endpoint of `p` to `a` by flipping `|p(n) − a|/2` steps in
/// the middle third, spaced at least `⌈n/(10s)⌉` apart.
pub fn adjust_endpoint(p: &LocalPath, a: i64) -> Result<LocalPath> {
    let n = p.len();
    let end = p.endpoint();
    if a == end {
        return Ok(p.clone());
    }
    if (a - end).rem_euclid(2) != 0 {
        return Err(Error::Construction(format!("endpoint {a} has the wrong parity for a path of length {n}")));
    }
    if 3 * (a - end).unsigned_abs() > n as u64 {
        return Err(Error::Construction(format!(
            "moving the endpoint from {end} to {a} needs more than n/3 = {} of height",
            n / 3
        )));
    }
    let s = ((a - end).unsigned_abs() / 2) as usize;
    let from: i8 = if a < end { 1 } else { -1 };
    let lo = n.div_ceil(3);
    let hi = (2 * n) / 3;
    let gap = n.div_ceil(10 * s).max(1);
    // Greedy left-to-right gives a largest well-spaced set; then spread.
    let mut spaced: Vec<usize> = Vec::new();
    for k in lo..hi {
        if p.steps()[k] == from && spaced.last().is_none_or(|&last| k >= last + gap) {
            spaced.push(k);
        }
    }
    if spaced.len() < s {
        return Err(Error::Construction(format!(
            "only {} flippable steps spaced {gap} apart in [{lo}, {hi}), need {s}",
            spaced.len()
        )));
    }
    let mut steps = p.steps().to_vec();
    for i in 0..s {
        let idx = if s == 1 { (spaced.len() - 1) / 2 } else { i * (spaced.len() - 1) / (s - 1) };
        steps[spaced[idx]] = -from;
    }
    Ok(LocalPath::from_steps_unchecked(steps))
}

/// `ell` copies of `g`, each endpoint-adjusted so the running height stays
/// within 2 of `ρx` at every block boundary.
pub fn concatenate(g: &LocalPath, ell: usize, rho: f64) -> Result<LocalPath> {
    check_rho(rho)?;
    let m = g.len() as i64;
    let end = g.endpoint();
    let target = rho * m as f64;
    if (end as f64 - target).abs() > 10.0 {
        return Err(Error::Construction(format!("block endpoint {end} is more than 10 away from ρm = {target}")));
    }
    let mut steps = Vec::with_capacity(ell * g.len());
    let mut height = 0i64;
    for i in 0..ell {
        let excess = height as f64 - rho * (i as i64 * m) as f64;
        let (lo, hi) = if excess >= 0.0 { (target - 2.0, target) } else { (target, target + 2.0) };
        // Admissible endpoints: parity of m, inside [lo, hi] and [-m, m];
        // prefer the one nearest to g's own endpoint.
        let first = (lo - 1e-9).ceil() as i64;
        let a = (first..=(hi + 1e-9).floor() as i64)
            .filter(|a| (a - m).rem_euclid(2) == 0 && a.abs() <= m)
            .min_by_key(|a| ((a - end).abs(), *a))
            .ok_or_else(|| Error::Construction(format!("no admissible endpoint for block {i}")))?;
        let block = adjust_endpoint(g, a)
            .map_err(|e| Error::Construction(format!("block {i}: {e}")))?;
        steps.extend_from_slice(block.steps());
        height += a;
    }
    Ok(LocalPath::from_steps_unchecked(steps))
}

/// Deviation of a path from the line `y = ρx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessProfile {
    pub max_dev: f64,
    pub location: usize,
    /// `f(k) − ρk` at every vertex.
    pub deviations: Vec<f64>,
}

/// `max_x |f(x) − ρx|`; attained at a vertex since both are piecewise linear.
pub fn flatness_profile(p: &LocalPath, rho: f64) -> FlatnessProfile {
    let deviations: Vec<f64> = p.values().iter().enumerate().map(|(k, &v)| v as f64 - rho * k as f64).collect();
    let (location, max_dev) = deviations
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (k, d)| if d.abs() > acc.1 { (k, d.abs()) } else { acc });
    FlatnessProfile { max_dev, location, deviations }
}
