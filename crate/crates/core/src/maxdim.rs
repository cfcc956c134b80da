//! Exact `d_N = max_{λ ⊢ N} dim λ` by exhaustive enumeration.
//!
//! Partitions are grown from the bottom row upward. Putting a new top row of
//! length `a` on `μ` leaves every existing hook unchanged and gives the new
//! cells the hooks `a − c + μ′_c + 1`, so each partition costs `O(λ₁)` on top
//! of its parent. One depth-first pass with size budget `N_max` visits every
//! partition of every `m ≤ N_max` exactly once and yields the whole table.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::{big_ln, hook_lengths, hook_product, Partition, ENUMERATION_CEILING};
use crate::special::{ln_factorial, ln_int};

/// Default largest `N` for the exact scan.
pub const MAXDIM_CEILING: u32 = ENUMERATION_CEILING;

/// Log-domain gap below which two candidates are compared exactly.
const EXACT_COMPARE_GAP: f64 = 1e-6;

/// One row of the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxDimRecord {
    pub n: u32,
    pub argmax: Partition,
    /// Present when the argmax is not self-conjugate; attains the same value.
    pub conjugate_argmax: Option<Partition>,
    pub log_d: f64,
    #[serde(with = "decimal")]
    pub d_exact: BigUint,
    pub partitions_scanned: u64,
    pub wall_seconds: f64,
}

impl MaxDimRecord {
    /// `(log d_N − ½ log N!)/√N`.
    pub fn normalized_log_gap(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.log_d - 0.5 * ln_factorial(self.n as u64)) / (self.n as f64).sqrt()
    }
}

mod decimal {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Scan settings.
#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    /// Progress file; completed shards are skipped on restart.
    pub checkpoint: Option<PathBuf>,
    /// Heuristic mode: skip partitions with `max(λ₁, ℓ) > 2√N + k·N^{2/3}`.
    /// Not exact; records produced this way are flagged by the caller.
    pub prune_multiplier: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Candidate {
    log_hooks: f64,
    /// Parts, largest first.
    parts: Vec<u32>,
}

fn exact_product(parts: &[u32]) -> BigUint {
    let lambda = Partition::new(parts.to_vec()).expect("scan produces partitions");
    hook_product(&hook_lengths(&lambda))
}

/// `Greater` when `a` has the larger dimension; equal dimensions go to the
/// lexicographically larger partition, the one met first in reverse-lex order.
fn compare(a: &Candidate, b: &Candidate) -> Ordering {
    if a.log_hooks < b.log_hooks - EXACT_COMPARE_GAP {
        return Ordering::Greater;
    }
    if a.log_hooks > b.log_hooks + EXACT_COMPARE_GAP {
        return Ordering::Less;
    }
    exact_product(&b.parts).cmp(&exact_product(&a.parts)).then_with(|| a.parts.cmp(&b.parts))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Partial {
    best: Vec<Option<Candidate>>,
    counts: Vec<u64>,
}

impl Partial {
    fn new(n_max: u32) -> Self {
        Partial { best: vec![None; n_max as usize + 1], counts: vec![0; n_max as usize + 1] }
    }

    fn offer(&mut self, m: usize, cand: Candidate) {
        match &self.best[m] {
            Some(cur) if compare(&cand, cur) != Ordering::Greater => {}
            _ => self.best[m] = Some(cand),
        }
    }

    fn merge(&mut self, other: Partial) {
        for (m, cand) in other.best.into_iter().enumerate() {
            if let Some(c) = cand {
                self.offer(m, c);
            }
        }
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }
}

struct Walker<'a> {
    n_max: u32,
    ln: &'a [f64],
    /// Column heights of the current partition.
    cols: Vec<u32>,
    /// Rows, bottom first.
    rows: Vec<u32>,
    radius_cap: Option<Vec<f64>>,
    out: Partial,
}

impl Walker<'_> {
    fn push_row(&mut self, a: u32, log_hooks: f64) -> f64 {
        let mut add = 0.0;
        for c in 0..a as usize {
            add += self.ln[a as usize - c + self.cols[c] as usize];
        }
        for h in &mut self.cols[..a as usize] {
            *h += 1;
        }
        self.rows.push(a);
        log_hooks + add
    }

    fn pop_row(&mut self) {
        let a = self.rows.pop().expect("row to pop");
        for h in &mut self.cols[..a as usize] {
            *h -= 1;
        }
    }

    fn record(&mut self, size: u32, log_hooks: f64) {
        let m = size as usize;
        if let Some(caps) = &self.radius_cap {
            let radius = (*self.rows.last().unwrap()).max(self.rows.len() as u32) as f64;
            if radius > caps[m] {
                return;
            }
        }
        self.out.counts[m] += 1;
        let improves = match &self.out.best[m] {
            None => true,
            Some(cur) => log_hooks <= cur.log_hooks + EXACT_COMPARE_GAP,
        };
        if improves {
            let parts: Vec<u32> = self.rows.iter().rev().copied().collect();
            self.out.offer(m, Candidate { log_hooks, parts });
        }
    }

    fn grow(&mut self, size: u32, log_hooks: f64) {
        let top = *self.rows.last().expect("shards start with a row");
        if let Some(caps) = &self.radius_cap {
            if (top.max(self.rows.len() as u32) as f64) > caps[self.n_max as usize] {
                return;
            }
        }
        for a in top..=self.n_max - size {
            let lh = self.push_row(a, log_hooks);
            self.record(size + a, lh);
            self.grow(size + a, lh);
            self.pop_row();
        }
    }
}

/// Shards: a lone row `(b)` when `c = 0`, otherwise every partition whose two
/// bottom rows are `b ≤ c`.
fn shards(n_max: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for b in 1..=n_max {
        out.push((b, 0));
        for c in b..=n_max - b {
            out.push((b, c));
        }
    }
    out
}

fn run_shard(n_max: u32, ln: &[f64], caps: &Option<Vec<f64>>, (b, c): (u32, u32)) -> Partial {
    let mut w = Walker {
        n_max,
        ln,
        cols: vec![0; n_max as usize + 1],
        rows: Vec::new(),
        radius_cap: caps.clone(),
        out: Partial::new(n_max),
    };
    let lh = w.push_row(b, 0.0);
    if c == 0 {
        w.record(b, lh);
    } else {
        let lh = w.push_row(c, lh);
        w.record(b + c, lh);
        w.grow(b + c, lh);
    }
    w.out
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    n_max: u32,
    prune_multiplier: Option<f64>,
    completed: BTreeSet<(u32, u32)>,
    partial: Partial,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn load_checkpoint(path: &Path, n_max: u32, prune: Option<f64>) -> Option<Checkpoint> {
    let text = std::fs::read_to_string(path).ok()?;
    match serde_json::from_str::<Checkpoint>(&text) {
        Ok(cp) if cp.n_max == n_max && cp.prune_multiplier == prune => Some(cp),
        Ok(_) => {
            log::info!("{}: checkpoint is for a different scan; starting over", path.display());
            None
        }
        Err(e) => {
            log::warn!("{}: unreadable checkpoint ({e}); starting over", path.display());
            None
        }
    }
}

fn check_ceiling(n: u32) -> Result<()> {
    if n > MAXDIM_CEILING {
        return Err(Error::ResourceLimit { what: "N", value: n as u64, ceiling: MAXDIM_CEILING as u64 });
    }
    Ok(())
}

/// Records for `N = 1..=n_max`.
pub fn d_table(n_max: u32) -> Result<Vec<MaxDimRecord>> {
    d_table_with(n_max, &ScanOptions::default())
}

/// [`d_table`] with checkpointing and the optional heuristic cut.
pub fn d_table_with(n_max: u32, options: &ScanOptions) -> Result<Vec<MaxDimRecord>> {
    check_ceiling(n_max)?;
    if n_max == 0 {
        return Ok(Vec::new());
    }
    let start = Instant::now();
    let ln: Vec<f64> = (0..=2 * n_max as u64 + 2).map(|k| if k == 0 { 0.0 } else { ln_int(k) }).collect();
    let caps = options.prune_multiplier.map(|k| {
        (0..=n_max).map(|m| 2.0 * (m as f64).sqrt() + k * (m as f64).powf(2.0 / 3.0)).collect::<Vec<f64>>()
    });

    let resumed = options.checkpoint.as_deref().and_then(|p| load_checkpoint(p, n_max, options.prune_multiplier));
    let (completed, partial) = match resumed {
        Some(cp) => (cp.completed, cp.partial),
        None => (BTreeSet::new(), Partial::new(n_max)),
    };
    let pending: Vec<(u32, u32)> = shards(n_max).into_iter().filter(|s| !completed.contains(s)).collect();
    let state = Mutex::new((completed, partial, Instant::now()));

    pending.par_iter().try_for_each(|&shard| -> Result<()> {
        let part = run_shard(n_max, &ln, &caps, shard);
        let mut guard = state.lock().unwrap();
        let (done, acc, last_save) = &mut *guard;
        acc.merge(part);
        done.insert(shard);
        if let Some(path) = &options.checkpoint {
            if last_save.elapsed().as_secs_f64() > 5.0 {
                let cp = Checkpoint {
                    n_max,
                    prune_multiplier: options.prune_multiplier,
                    completed: done.clone(),
                    partial: acc.clone(),
                };
                write_atomic(path, &serde_json::to_vec(&cp)?)?;
                *last_save = Instant::now();
            }
        }
        Ok(())
    })?;

    let (completed, partial, _) = state.into_inner().unwrap();
    if let Some(path) = &options.checkpoint {
        let cp = Checkpoint { n_max, prune_multiplier: options.prune_multiplier, completed, partial: partial.clone() };
        write_atomic(path, &serde_json::to_vec(&cp)?)?;
    }
    let wall = start.elapsed().as_secs_f64();
    (1..=n_max as usize)
        .map(|m| {
            let best = partial.best[m].clone().ok_or_else(|| Error::Invariant(format!("no partition of {m} seen")))?;
            let argmax = Partition::new(best.parts)?;
            let product = hook_product(&hook_lengths(&argmax));
            let d_exact = crate::partitions::factorial(m as u64) / &product;
            let conjugate = argmax.conjugate();
            Ok(MaxDimRecord {
                n: m as u32,
                conjugate_argmax: (!argmax.is_self_conjugate()).then_some(conjugate),
                argmax,
                log_d: big_ln(&d_exact),
                d_exact,
                partitions_scanned: partial.counts[m],
                wall_seconds: wall,
            })
        })
        .collect()
}

/// The record for a single `N`.
pub fn d_exact(n: u32) -> Result<MaxDimRecord> {
    check_ceiling(n)?;
    if n == 0 {
        return Err(Error::Validation("d_N is tabulated from N = 1".into()));
    }
    Ok(d_table(n)?.pop().expect("n ≥ 1"))
}

/// Whether `d_N ≥ √(N!)/N`, decided in integers, and the signed log margin
/// `log d_N − (½ log N! − log N)`.
pub fn mckay_from_record(record: &MaxDimRecord) -> (bool, f64) {
    let n = record.n as u64;
    let lhs = &record.d_exact * &record.d_exact * BigUint::from(n * n);
    let holds = lhs >= crate::partitions::factorial(n);
    let margin = record.log_d - (0.5 * ln_factorial(n) - ln_int(n.max(1)));
    (holds, margin)
}

/// McKay's bound `d_N ≥ √(N!)/N` at `N`.
pub fn check_mckay(n: u32) -> Result<(bool, f64)> {
    Ok(mckay_from_record(&d_exact(n)?))
}

/// Writes the table as CSV.
pub fn write_csv<W: std::io::Write>(records: &[MaxDimRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "log_d", "log_d_minus_half_log_Nfactorial_over_sqrtN", "argmax", "scanned", "wall_seconds"])
        .map_err(|e| Error::Data(e.to_string()))?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            format!("{:.11e}", r.log_d),
            format!("{:.11e}", r.normalized_log_gap()),
            r.argmax.run_length(),
            r.partitions_scanned.to_string(),
            format!("{:.3}", r.wall_seconds),
        ])
        .map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::{dim_exact, enumerate_partitions};

    fn brute(n: u32) -> (BigUint, Vec<u32>) {
        let mut best: Option<(BigUint, Vec<u32>)> = None;
        enumerate_partitions(n, 200, |parts| {
            let d = dim_exact(&Partition::new(parts.to_vec()).unwrap()).exact.unwrap();
            let better = match &best {
                None => true,
                Some((bd, bp)) => d > *bd || (d == *bd && parts > bp.as_slice()),
            };
            if better {
                best = Some((d, parts.to_vec()));
            }
        })
        .unwrap();
        best.unwrap()
    }

    #[test]
    fn small_examples() {
        let t = d_table(6).unwrap();
        assert_eq!(t[0].d_exact, BigUint::from(1u32));
        assert_eq!(t[4].d_exact, BigUint::from(6u32));
        assert_eq!(t[4].argmax.parts(), &[3, 1, 1]);
        assert_eq!(t[5].d_exact, BigUint::from(16u32));
        assert_eq!(t[5].argmax.parts(), &[3, 2, 1]);
        assert!(d_table(0).unwrap().is_empty());
    }

    #[test]
    fn matches_brute_force_and_counts() {
        let t = d_table(22).unwrap();
        let mut p = vec![1u64];
        for r in &t {
            let (d, parts) = brute(r.n);
            assert_eq!(r.d_exact, d, "N = {}", r.n);
            assert_eq!(r.argmax.parts(), parts.as_slice(), "N = {}", r.n);
            let count = enumerate_partitions(r.n, 200, |_| {}).unwrap();
            assert_eq!(r.partitions_scanned, count);
            p.push(count);
            assert!((r.log_d - big_ln(&r.d_exact)).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_reported() {
        for r in d_table(20).unwrap() {
            match &r.conjugate_argmax {
                Some(c) => assert_eq!(dim_exact(c).exact.unwrap(), r.d_exact),
                None => assert!(r.argmax.is_self_conjugate()),
            }
        }
    }

    #[test]
    fn checkpoint_resume_gives_identical_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.json");
        let opts = ScanOptions { checkpoint: Some(path.clone()), prune_multiplier: None };
        let first = d_table_with(18, &opts).unwrap();
        assert!(path.exists());
        let second = d_table_with(18, &opts).unwrap();
        for (a, b) in first.iter().zip(&second) {
            assert_eq!((a.n, &a.argmax, &a.d_exact, a.partitions_scanned), (b.n, &b.argmax, &b.d_exact, b.partitions_scanned));
        }
    }

    #[test]
    fn heuristic_cut_keeps_the_maximum() {
        let exact = d_table(40).unwrap();
        let opts = ScanOptions { checkpoint: None, prune_multiplier: Some(1.0) };
        let cut = d_table_with(40, &opts).unwrap();
        for (a, b) in exact.iter().zip(&cut) {
            assert_eq!(a.d_exact, b.d_exact);
            assert!(b.partitions_scanned <= a.partitions_scanned);
        }
    }

    #[test]
    fn mckay_small() {
        let (holds, margin) = check_mckay(2).unwrap();
        assert!(holds && margin > 0.0);
        assert!(check_mckay(MAXDIM_CEILING + 1).is_err());
    }

    #[test]
    fn csv_has_expected_columns() {
        let mut buf = Vec::new();
        write_csv(&d_table(10).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 11);
        assert!(text.starts_with("N,log_d,"));
    }
}
