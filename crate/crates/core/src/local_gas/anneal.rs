//! Simulated annealing upper bounds on `σₙ^ρ`.
//!
//! Moves are single flips (which shift the endpoint) and swaps of two
//! opposite steps (which keep it). The energy change of a move is read off
//! the field `h = Mc`, so a proposal costs `O(n)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_rho, energy_with, kernel, staircase_path, LocalKernel, LocalPath, SigmaKind, SigmaRecord};
use crate::error::{Error, Result};
use crate::functionals::phi;

/// Default number of proposals, shared among the chains.
pub const DEFAULT_BUDGET: u64 = 200_000;

const CHAINS: u64 = 4;
const PERIOD: u64 = 25_000;
const T_HOT: f64 = 0.4;
const T_COLD: f64 = 2e-4;

struct Chain<'a> {
    kernel: &'a LocalKernel<f64>,
    phi: &'a [f64],
    rho: f64,
    steps: Vec<i8>,
    c: Vec<f64>,
    field: Vec<f64>,
    theta: f64,
    tilde: f64,
}

impl<'a> Chain<'a> {
    fn new(kernel: &'a LocalKernel<f64>, phi: &'a [f64], rho: f64, start: &LocalPath) -> Self {
        let steps = start.steps().to_vec();
        let c: Vec<f64> = steps.iter().map(|&s| s as f64 - rho).collect();
        let mut chain = Chain { kernel, phi, rho, steps, c, field: Vec::new(), theta: 0.0, tilde: 0.0 };
        chain.resync();
        chain
    }

    fn resync(&mut self) {
        let n = self.c.len();
        self.field = (0..n).map(|a| self.kernel.row(a).iter().zip(&self.c).map(|(m, c)| m * c).sum()).collect();
        self.theta = self.c.iter().zip(&self.field).map(|(c, h)| c * h).sum();
        self.tilde = super::tilde_local::<f64>(&LocalPath::from_steps_unchecked(self.steps.clone()));
    }

    fn energy(&self) -> f64 {
        self.theta / 8.0 + self.tilde
    }

    /// Change in `θ̃` from flipping step `k` of the current state.
    fn tilde_delta(&self, k: usize) -> f64 {
        let mut before = 0.0;
        let mut after = 0.0;
        for (i, &s) in self.steps[..k].iter().enumerate() {
            if s > 0 {
                after += self.phi[k - i];
            }
        }
        for (j, &s) in self.steps.iter().enumerate().skip(k + 1) {
            if s < 0 {
                before += self.phi[j - k];
            }
        }
        // An up-step pairs with later downs; a down-step with earlier ups.
        if self.steps[k] > 0 {
            after - before
        } else {
            before - after
        }
    }

    fn flip(&mut self, k: usize) {
        let delta = -2.0 * self.steps[k] as f64;
        self.theta += 2.0 * delta * self.field[k] + delta * delta * self.kernel.entry(k, k);
        self.tilde += self.tilde_delta(k);
        for (h, m) in self.field.iter_mut().zip(self.kernel.row(k)) {
            *h += delta * m;
        }
        self.steps[k] = -self.steps[k];
        self.c[k] = self.steps[k] as f64 - self.rho;
    }

    /// Energy change of flipping the steps in `ks` (distinct indices).
    fn proposal_delta(&mut self, ks: &[usize]) -> f64 {
        let mut dtheta = 0.0;
        for (idx, &k) in ks.iter().enumerate() {
            let dk = -2.0 * self.steps[k] as f64;
            dtheta += 2.0 * dk * self.field[k] + dk * dk * self.kernel.entry(k, k);
            for &j in &ks[..idx] {
                let dj = -2.0 * self.steps[j] as f64;
                dtheta += 2.0 * dk * dj * self.kernel.entry(j, k);
            }
        }
        let mut dtilde = 0.0;
        for &k in ks {
            dtilde += self.tilde_delta(k);
            self.steps[k] = -self.steps[k];
        }
        for &k in ks {
            self.steps[k] = -self.steps[k];
        }
        dtheta / 8.0 + dtilde
    }
}

fn run_chain(
    kernel: &LocalKernel<f64>,
    phi: &[f64],
    rho: f64,
    start: &LocalPath,
    iterations: u64,
    seed: u64,
    stream: u64,
) -> (f64, LocalPath) {
    let n = start.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut chain = Chain::new(kernel, phi, rho, start);
    let mut best_value = energy_with(kernel, start, rho).total;
    let mut best = start.clone();
    let mut best_running = chain.energy();
    let decay = (T_COLD / T_HOT).powf(1.0 / PERIOD as f64);
    let mut temperature = T_HOT;
    for t in 0..iterations {
        if t % PERIOD == 0 {
            temperature = T_HOT;
            chain.resync();
        }
        let i = rng.gen_range(0..n);
        let move_kind = rng.gen_range(0..3u8);
        let ks: Vec<usize> = match move_kind {
            0 => vec![i],
            _ => {
                let j = if move_kind == 1 {
                    if i + 1 < n { i + 1 } else { i.saturating_sub(1) }
                } else {
                    rng.gen_range(0..n)
                };
                if j == i || chain.steps[i] == chain.steps[j] {
                    vec![i]
                } else {
                    vec![i.min(j), i.max(j)]
                }
            }
        };
        let delta = chain.proposal_delta(&ks);
        if delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp() {
            for &k in &ks {
                chain.flip(k);
            }
            let running = chain.energy();
            if running < best_running - 1e-12 {
                best_running = running;
                let candidate = LocalPath::from_steps_unchecked(chain.steps.clone());
                let value = energy_with(kernel, &candidate, rho).total;
                if value < best_value {
                    best_value = value;
                    best = candidate;
                }
            }
        }
        temperature *= decay;
    }
    (best_value, best)
}

/// Best `Θₙ^ρ` found by annealing from the staircase; deterministic in
/// `seed`. Chains run in parallel and split `budget` between them.
pub fn sigma_heuristic(n: usize, rho: f64, budget: u64, seed: u64) -> Result<SigmaRecord> {
    check_rho(rho)?;
    if n == 0 {
        return Err(Error::Validation("σₙ needs n ≥ 1".into()));
    }
    let k = kernel(n);
    let start = staircase_path(n, rho)?;
    let phi_table: Vec<f64> = (0..=n as u64).map(|h| if h == 0 { 0.0 } else { phi(h).unwrap() }).collect();
    let start_value = energy_with(&k, &start, rho).total;
    let results: Vec<(f64, LocalPath)> = (0..CHAINS)
        .into_par_iter()
        .map(|chain| {
            let iterations = budget / CHAINS + u64::from(chain < budget % CHAINS);
            if start_value == 0.0 {
                return (0.0, start.clone());
            }
            run_chain(&k, &phi_table, rho, &start, iterations, seed, chain)
        })
        .collect();
    let (value, witness) = results
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .expect("at least one chain");
    Ok(SigmaRecord { n, rho, value, witness, kind: SigmaKind::HeuristicUpper, seed })
}
