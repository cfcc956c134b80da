//! The local slope-`ρ` problem on `[0, n]`.
//!
//! A path of `n` unit steps is scored by
//! `Θₙ^ρ = θₙ^ρ/8 + θ̃ₙ`, where `θₙ^ρ` is the double integral of
//! `((f(x) − f(y))/(x − y) − ρ)²` over `[0, n]²` and `θ̃ₙ` sums `φ` over the
//! cells trapped under the path. `σₙ^ρ` is the minimum over all `2ⁿ` paths.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::functionals::{dyadic_energy, QuadratureConfig};

mod anneal;
pub mod cache;
mod construct;
pub(crate) mod kernel;
mod search;

pub use anneal::{sigma_heuristic, DEFAULT_BUDGET};
pub use construct::{adjust_endpoint, concatenate, flatness_profile, staircase_path, FlatnessProfile};
pub use kernel::{tilde_local, trapped_hook_counts, LocalKernel};
pub use search::{sigma_exact, sigma_exact_table, sigma_exact_table_with_ceiling, EXACT_CEILING};

/// A sequence of `±1` steps starting from height 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalPath {
    steps: Vec<i8>,
}

impl LocalPath {
    pub fn new(steps: Vec<i8>) -> Result<Self> {
        if let Some(bad) = steps.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::Validation(format!("path steps must be ±1, found {bad}")));
        }
        Ok(LocalPath { steps })
    }

    pub(crate) fn from_steps_unchecked(steps: Vec<i8>) -> Self {
        debug_assert!(steps.iter().all(|&s| s == 1 || s == -1));
        LocalPath { steps }
    }

    /// `n` up-steps.
    pub fn all_up(n: usize) -> Self {
        LocalPath { steps: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[i8] {
        &self.steps
    }

    /// `f(n)`.
    pub fn endpoint(&self) -> i64 {
        self.steps.iter().map(|&s| s as i64).sum()
    }

    /// Heights `f(0), …, f(n)`.
    pub fn values(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut v = 0;
        out.push(v);
        for &s in &self.steps {
            v += s as i64;
            out.push(v);
        }
        out
    }

    /// The point reflection `f(x) ↦ f(n − x) − f(n)`: reversed, negated steps.
    /// Maps slope `ρ` to `−ρ` and keeps the trapped cells.
    pub fn mirror(&self) -> Self {
        LocalPath { steps: self.steps.iter().rev().map(|&s| -s).collect() }
    }
}

impl fmt::Display for LocalPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.steps {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for LocalPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let steps = s
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(Error::Validation(format!("bad step character {c:?}"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Ok(LocalPath { steps })
    }
}

impl Serialize for LocalPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LocalPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// `θₙ^ρ`, `θ̃ₙ` and `Θₙ^ρ = θ/8 + θ̃` of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalEnergy {
    pub theta: f64,
    pub tilde: f64,
    pub total: f64,
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if !(rho.abs() <= 1.0) {
        return Err(Error::Validation(format!("slope must lie in [-1, 1], got {rho}")));
    }
    Ok(())
}

/// Shared kernel for length `n`, built once per process.
pub(crate) fn kernel(n: usize) -> Arc<LocalKernel<f64>> {
    static KERNELS: RwLock<Option<HashMap<usize, Arc<LocalKernel<f64>>>>> = RwLock::new(None);
    if let Some(k) = KERNELS.read().unwrap().as_ref().and_then(|m| m.get(&n)) {
        return Arc::clone(k);
    }
    let built = Arc::new(LocalKernel::new(n));
    let mut guard = KERNELS.write().unwrap();
    let map = guard.get_or_insert_with(HashMap::new);
    if map.len() > 512 {
        map.clear();
    }
    Arc::clone(map.entry(n).or_insert(built))
}

pub(crate) fn energy_with(kernel: &LocalKernel<f64>, path: &LocalPath, rho: f64) -> LocalEnergy {
    let theta = kernel.theta(path, rho);
    let tilde = tilde_local::<f64>(path);
    LocalEnergy { theta, tilde, total: theta / 8.0 + tilde }
}

/// `θₙ^ρ(p)` in closed form.
pub fn theta_local(path: &LocalPath, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(kernel(path.len()).theta(path, rho))
}

/// All three local energies of `path`.
pub fn local_energy(path: &LocalPath, rho: f64) -> Result<LocalEnergy> {
    check_rho(rho)?;
    Ok(energy_with(&kernel(path.len()), path, rho))
}

/// A separation band of the double integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    /// `|x − y| ≤ 1`.
    Diagonal,
    /// `2^k < |x − y| ≤ 2^{k+1}`.
    Dyadic(u32),
}

/// The part of `θₙ^ρ(p)` coming from one separation band.
pub fn theta_local_band(path: &LocalPath, rho: f64, band: Band) -> Result<f64> {
    check_rho(rho)?;
    let split = dyadic_energy(path, rho, &QuadratureConfig::default())?;
    Ok(match band {
        Band::Diagonal => split.diagonal,
        Band::Dyadic(k) => split.bands.iter().find(|b| b.0 == k).map_or(0.0, |b| b.1),
    })
}

/// Whether a record is a proven minimum or an upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaKind {
    Exact,
    HeuristicUpper,
}

/// A value of `σₙ^ρ` (or an upper bound on it) with its witness path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaRecord {
    pub n: usize,
    pub rho: f64,
    pub value: f64,
    pub witness: LocalPath,
    pub kind: SigmaKind,
    pub seed: u64,
}

impl SigmaRecord {
    /// Re-evaluates the witness and compares with the stored value.
    pub fn verify(&self) -> Result<()> {
        if self.witness.len() != self.n {
            return Err(Error::Data(format!("witness has length {} for n = {}", self.witness.len(), self.n)));
        }
        let recomputed = local_energy(&self.witness, self.rho)?.total;
        if (recomputed - self.value).abs() > 1e-12 * self.value.abs().max(1.0) {
            return Err(Error::Data(format!(
                "stored value {} disagrees with witness energy {recomputed} (n = {}, ρ = {})",
                self.value, self.n, self.rho
            )));
        }
        Ok(())
    }

    /// The record for `−ρ`, carried by the mirrored witness.
    pub fn mirrored(&self) -> SigmaRecord {
        SigmaRecord { rho: -self.rho, witness: self.witness.mirror(), ..self.clone() }
    }
}
