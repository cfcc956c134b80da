//! Exact `σₙ^ρ` by branch and bound over step prefixes.
//!
//! A prefix of length `k` costs at least `Θ_k(prefix) + σ_{n−k}`: dropping the
//! pairs that straddle `k` only removes non-negative terms. The `σ_m` are
//! computed in increasing `m`, so each length bounds the next.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;

use super::kernel::{log_cell, log_ramp, pair_core};
use super::{check_rho, energy_with, kernel, staircase_path, LocalPath, SigmaKind, SigmaRecord};
use crate::error::{Error, Result};
use crate::functionals::phi;

/// Largest `n` accepted by [`sigma_exact`].
pub const EXACT_CEILING: usize = 64;

const SPLIT_DEPTH: usize = 7;

fn prune_margin(incumbent: f64) -> f64 {
    1e-9 * incumbent.max(1.0)
}

/// Tables shared by every node of one search.
struct Tables {
    rho: f64,
    /// `pair_core(a, b)`, row-major.
    core: Vec<f64>,
    /// `2∫_j^{j+1} ln t dt` and `2·log_ramp(j)`, indexed by `k − a − 1`.
    cell2: Vec<f64>,
    ramp2: Vec<f64>,
    ln2: Vec<f64>,
    phi: Vec<f64>,
    width: usize,
}

impl Tables {
    fn new(n: usize, rho: f64) -> Self {
        let mut core = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                core[a * n + b] = pair_core::<f64>(a, b);
            }
        }
        Tables {
            rho,
            core,
            cell2: (0..n as u64).map(|j| 2.0 * log_cell::<f64>(j)).collect(),
            ramp2: (0..n as u64).map(|j| 2.0 * log_ramp::<f64>(j)).collect(),
            ln2: (0..=n).map(|k| if k == 0 { 0.0 } else { 2.0 * (k as f64).ln() }).collect(),
            phi: (0..=n as u64).map(|h| if h == 0 { 0.0 } else { phi(h).unwrap() }).collect(),
            width: n,
        }
    }
}

/// Incremental state of a prefix.
#[derive(Clone)]
struct Prefix {
    steps: Vec<i8>,
    c: Vec<f64>,
    core: Vec<f64>,
    tilde: Vec<f64>,
}

impl Prefix {
    fn new(capacity: usize) -> Self {
        let mut core = Vec::with_capacity(capacity + 1);
        core.push(0.0);
        let mut tilde = Vec::with_capacity(capacity + 1);
        tilde.push(0.0);
        Prefix { steps: Vec::with_capacity(capacity), c: Vec::with_capacity(capacity), core, tilde }
    }

    fn push(&mut self, t: &Tables, s: i8) {
        let k = self.c.len();
        let ck = s as f64 - t.rho;
        let row = &t.core[k * t.width..k * t.width + k];
        let cross: f64 = self.c.iter().zip(row).map(|(a, p)| a * p).sum();
        let core = self.core[k] + ck * ck * t.core[k * t.width + k] + 2.0 * ck * cross;
        let mut tilde = self.tilde[k];
        if s < 0 {
            for (i, &si) in self.steps.iter().enumerate() {
                if si > 0 {
                    tilde += t.phi[k - i];
                }
            }
        }
        self.steps.push(s);
        self.c.push(ck);
        self.core.push(core);
        self.tilde.push(tilde);
    }

    fn pop(&mut self) {
        self.steps.pop();
        self.c.pop();
        self.core.pop();
        self.tilde.pop();
    }

    /// `Θ_k` of the current prefix as a path of its own length.
    fn energy(&self, t: &Tables) -> f64 {
        let k = self.c.len();
        if k == 0 {
            return 0.0;
        }
        let ln2k = t.ln2[k];
        let mut boundary = 0.0;
        let mut suffix = 0.0;
        for a in (0..k).rev() {
            let j = k - a - 1;
            let ca = self.c[a];
            boundary += ca * (ca * (t.ramp2[j] - ln2k) + 2.0 * (t.cell2[j] - ln2k) * suffix);
            suffix += ca;
        }
        ((self.core[k] + boundary) / 8.0).max(0.0) + self.tilde[k]
    }
}

#[derive(Clone)]
struct Best {
    value: f64,
    steps: Vec<i8>,
}

impl Best {
    fn none() -> Self {
        Best { value: f64::INFINITY, steps: Vec::new() }
    }

    fn offer(&mut self, value: f64, steps: &[i8]) {
        if value < self.value || (value == self.value && steps < self.steps.as_slice()) {
            self.value = value;
            self.steps = steps.to_vec();
        }
    }

    fn merge(mut self, other: Best) -> Best {
        self.offer(other.value, &other.steps);
        self
    }
}

struct Search<'a> {
    n: usize,
    tables: &'a Tables,
    /// `σ_m` for `m < n`.
    lower: &'a [f64],
    order: [i8; 2],
    incumbent: &'a AtomicU64,
    kernel: &'a super::LocalKernel<f64>,
}

impl Search<'_> {
    fn incumbent(&self) -> f64 {
        f64::from_bits(self.incumbent.load(Ordering::Relaxed))
    }

    fn improve(&self, value: f64) {
        // Non-negative floats order like their bit patterns.
        self.incumbent.fetch_min(value.to_bits(), Ordering::Relaxed);
    }

    fn descend(&self, prefix: &mut Prefix, best: &mut Best) {
        let k = prefix.c.len();
        if k == self.n {
            let path = LocalPath::from_steps_unchecked(prefix.steps.clone());
            let value = energy_with(self.kernel, &path, self.tables.rho).total;
            best.offer(value, &prefix.steps);
            self.improve(value);
            return;
        }
        if k > 0 {
            let bound = prefix.energy(self.tables) + self.lower[self.n - k];
            let inc = self.incumbent();
            if bound > inc + prune_margin(inc) {
                return;
            }
        }
        for &s in &self.order {
            prefix.push(self.tables, s);
            self.descend(prefix, best);
            prefix.pop();
        }
    }
}

fn cache() -> &'static Mutex<HashMap<u64, Vec<SigmaRecord>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Vec<SigmaRecord>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn validate(n: usize, rho: f64, ceiling: usize) -> Result<()> {
    check_rho(rho)?;
    if n == 0 {
        return Err(Error::Validation("σₙ needs n ≥ 1".into()));
    }
    if n > ceiling {
        return Err(Error::ResourceLimit { what: "exact search length", value: n as u64, ceiling: ceiling as u64 });
    }
    Ok(())
}

fn solve_one(n: usize, rho: f64, previous: &[SigmaRecord]) -> SigmaRecord {
    let k = kernel(n);
    let tables = Tables::new(n, rho);
    let mut lower = vec![0.0];
    lower.extend(previous.iter().map(|r| r.value));

    // Seed the incumbent with the staircase and one-step extensions of the
    // previous minimiser.
    let mut seed = Best::none();
    let mut candidates = vec![staircase_path(n, rho).expect("ρ checked").steps().to_vec()];
    if let Some(prev) = previous.last() {
        for s in [1i8, -1] {
            let mut tail = prev.witness.steps().to_vec();
            tail.push(s);
            candidates.push(tail);
            let mut head = vec![s];
            head.extend_from_slice(prev.witness.steps());
            candidates.push(head);
        }
    }
    for steps in candidates {
        let p = LocalPath::from_steps_unchecked(steps);
        seed.offer(energy_with(&k, &p, rho).total, p.steps());
    }
    let incumbent = AtomicU64::new(seed.value.to_bits());
    let order = if rho >= 0.0 { [1, -1] } else { [-1, 1] };
    let search = Search { n, tables: &tables, lower: &lower, order, incumbent: &incumbent, kernel: &k };

    let depth = SPLIT_DEPTH.min(n.saturating_sub(4));
    let best = if depth == 0 {
        let mut best = Best::none();
        search.descend(&mut Prefix::new(n), &mut best);
        best
    } else {
        (0..1usize << depth)
            .into_par_iter()
            .map(|mask| {
                let mut prefix = Prefix::new(n);
                for bit in (0..depth).rev() {
                    let choice = order[(mask >> bit) & 1];
                    prefix.push(&tables, choice);
                }
                let mut best = Best::none();
                let bound = prefix.energy(&tables) + lower[n - depth];
                let inc = search.incumbent();
                if bound <= inc + prune_margin(inc) {
                    search.descend(&mut prefix, &mut best);
                }
                best
            })
            .reduce(Best::none, Best::merge)
    };
    // The seeds are ordinary paths; they compete on equal terms.
    let best = best.merge(seed);
    SigmaRecord {
        n,
        rho,
        value: best.value,
        witness: LocalPath::from_steps_unchecked(best.steps),
        kind: SigmaKind::Exact,
        seed: 0,
    }
}

/// Exact `σ_m^ρ` for `m = 1..=n`, each with the lexicographically smallest
/// minimiser (`−` before `+`).
pub fn sigma_exact_table(n: usize, rho: f64) -> Result<Vec<SigmaRecord>> {
    sigma_exact_table_with_ceiling(n, rho, EXACT_CEILING)
}

/// [`sigma_exact_table`] with a caller-chosen length ceiling. The search is
/// exponential in the worst case; its cost depends strongly on `ρ`.
pub fn sigma_exact_table_with_ceiling(n: usize, rho: f64, ceiling: usize) -> Result<Vec<SigmaRecord>> {
    validate(n, rho, ceiling)?;
    // 0.0 and -0.0 share an entry.
    let key = (rho + 0.0).to_bits();
    let mut have = cache().lock().unwrap().get(&key).cloned().unwrap_or_default();
    while have.len() < n {
        let m = have.len() + 1;
        let rec = solve_one(m, rho, &have);
        have.push(rec);
        let mut guard = cache().lock().unwrap();
        let entry = guard.entry(key).or_default();
        if entry.len() < have.len() {
            *entry = have.clone();
        }
    }
    have.truncate(n);
    Ok(have)
}

/// Exact `σₙ^ρ` with a witness.
pub fn sigma_exact(n: usize, rho: f64) -> Result<SigmaRecord> {
    Ok(sigma_exact_table(n, rho)?.pop().expect("n ≥ 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_gas::local_energy;

    fn brute(n: usize, rho: f64) -> (f64, Vec<i8>) {
        let mut best = Best::none();
        for mask in 0..1u32 << n {
            let steps: Vec<i8> = (0..n).map(|i| if mask >> (n - 1 - i) & 1 == 1 { 1 } else { -1 }).collect();
            let p = LocalPath::new(steps).unwrap();
            best.offer(local_energy(&p, rho).unwrap().total, p.steps());
        }
        (best.value, best.steps)
    }

    #[test]
    fn single_step() {
        let r = sigma_exact(1, 0.0).unwrap();
        assert!((r.value - 0.125).abs() < 1e-15);
        // Both steps tie; the smaller sequence wins.
        assert_eq!(r.witness.to_string(), "-");
    }

    #[test]
    fn monotone_slope_is_free() {
        for n in [1, 5, 13] {
            let r = sigma_exact(n, 1.0).unwrap();
            assert_eq!(r.value, 0.0);
            assert_eq!(r.witness, LocalPath::all_up(n));
        }
    }

    #[test]
    fn matches_enumeration() {
        for &rho in &[0.5, -0.3, 0.0, 0.9] {
            for n in [3, 8, 12] {
                let (value, steps) = brute(n, rho);
                let r = sigma_exact(n, rho).unwrap();
                assert_eq!(r.value, value, "n = {n}, ρ = {rho}");
                assert_eq!(r.witness.steps(), steps.as_slice());
            }
        }
    }

    #[test]
    fn prefix_energy_matches_direct_evaluation() {
        let t = Tables::new(9, 0.35);
        let mut prefix = Prefix::new(9);
        for (i, &s) in [1i8, -1, -1, 1, 1, 1, -1, 1, -1].iter().enumerate() {
            prefix.push(&t, s);
            let p = LocalPath::new(prefix.steps.clone()).unwrap();
            let direct = local_energy(&p, 0.35).unwrap().total;
            assert!((prefix.energy(&t) - direct).abs() < 1e-12, "k = {}", i + 1);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(sigma_exact(0, 0.0), Err(Error::Validation(_))));
        assert!(matches!(sigma_exact(65, 0.0), Err(Error::ResourceLimit { .. })));
        assert!(matches!(sigma_exact(4, 1.01), Err(Error::Validation(_))));
    }
}
