//! Partition combinatorics: enumeration, hook lengths, exact dimensions and the
//! bijection with lattice step functions.
//!
//! A partition is drawn in Russian convention: cell `(i, j)` (row `i`, column
//! `j`, both 1-based) is the unit diamond centred at `x = j - i`. The upper
//! boundary of the diagram is a function with slopes `±1` that agrees with
//! `|x|` outside the diagram. Row `i` ends with a down-step on
//! `[λᵢ - i, λᵢ - i + 1]`, column `j` ends with an up-step on
//! `[j - λ'ⱼ - 1, j - λ'ⱼ]`, and the hook of `(i, j)` is the distance between
//! the two.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_factorial, ln_int, NeumaierSum};

/// Default ceiling for exhaustive enumeration.
pub const ENUMERATION_CEILING: u32 = 120;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::Validation("partition parts must be positive".into()));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Validation(format!("parts {parts:?} are not weakly decreasing")));
        }
        Ok(Partition { parts })
    }

    pub fn empty() -> Self {
        Partition { parts: Vec::new() }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn size(&self) -> u64 {
        self.parts.iter().map(|&p| p as u64).sum()
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn first_part(&self) -> u32 {
        self.parts.first().copied().unwrap_or(0)
    }

    pub fn conjugate(&self) -> Partition {
        Partition { parts: conjugate_parts(&self.parts) }
    }

    pub fn is_self_conjugate(&self) -> bool {
        self.conjugate() == *self
    }

    /// Run-length form such as `5^2 3 1^4`.
    pub fn run_length(&self) -> String {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.parts.len() {
            let p = self.parts[i];
            let mut j = i;
            while j < self.parts.len() && self.parts[j] == p {
                j += 1;
            }
            out.push(if j - i == 1 { p.to_string() } else { format!("{p}^{}", j - i) });
            i = j;
        }
        out.join(" ")
    }
}

impl TryFrom<Vec<u32>> for Partition {
    type Error = Error;

    fn try_from(parts: Vec<u32>) -> Result<Self> {
        Partition::new(parts)
    }
}

impl From<Partition> for Vec<u32> {
    fn from(p: Partition) -> Self {
        p.parts
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text: Vec<String> = self.parts.iter().map(u32::to_string).collect();
        f.write_str(&text.join(","))
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Partition::empty());
        }
        let parts = s
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| Error::Validation(format!("bad part {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Partition::new(parts)
    }
}

pub(crate) fn conjugate_parts(parts: &[u32]) -> Vec<u32> {
    let width = parts.first().copied().unwrap_or(0) as usize;
    let mut conj = vec![0u32; width];
    for &p in parts {
        for c in conj.iter_mut().take(p as usize) {
            *c += 1;
        }
    }
    conj
}

/// Visits every partition of `n` in reverse-lexicographic order.
pub fn enumerate_partitions<F>(n: u32, ceiling: u32, visitor: F) -> Result<u64>
where
    F: FnMut(&[u32]),
{
    if n > ceiling {
        return Err(Error::ResourceLimit { what: "N", value: n as u64, ceiling: ceiling as u64 });
    }
    let mut visitor = visitor;
    if n == 0 {
        return Ok(enumerate_with_first_part(0, 0, &mut visitor));
    }
    Ok((1..=n).rev().map(|first| enumerate_with_first_part(n, first, &mut visitor)).sum())
}

/// Visits, in reverse-lexicographic order, the partitions of `n` whose first
/// part equals `first`. Running this for every `first` in `1..=n` partitions
/// the full enumeration into independent shards.
pub fn enumerate_with_first_part<F>(n: u32, first: u32, mut visitor: F) -> u64
where
    F: FnMut(&[u32]),
{
    if n == 0 {
        visitor(&[]);
        return 1;
    }
    if first == 0 || first > n {
        return 0;
    }
    let mut parts: Vec<u32> = Vec::with_capacity(n as usize);
    let mut rem = n;
    while rem > 0 {
        let p = rem.min(first);
        parts.push(p);
        rem -= p;
    }
    let mut count = 0u64;
    loop {
        visitor(&parts);
        count += 1;
        let mut spare = 0u32;
        while parts.last() == Some(&1) {
            parts.pop();
            spare += 1;
        }
        // Only the leading part is left and it may not move inside this shard.
        if parts.len() <= 1 {
            break;
        }
        let x = parts.pop().unwrap() - 1;
        spare += 1;
        parts.push(x);
        while spare > x {
            parts.push(x);
            spare -= x;
        }
        if spare > 0 {
            parts.push(spare);
        }
    }
    count
}

/// Hook lengths, row by row, via the arm + leg + 1 scan.
pub fn hook_lengths(lambda: &Partition) -> Vec<u32> {
    let conj = conjugate_parts(&lambda.parts);
    let mut hooks = Vec::with_capacity(lambda.size() as usize);
    for (i, &row) in lambda.parts.iter().enumerate() {
        for j in 0..row as usize {
            let arm = row - j as u32 - 1;
            let leg = conj[j] - i as u32 - 1;
            hooks.push(arm + leg + 1);
        }
    }
    hooks
}

/// Dimension of an irreducible representation, exactly and in the log domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BigDim {
    pub exact: Option<BigUint>,
    pub log_value: Option<f64>,
}

impl BigDim {
    pub fn is_consistent(&self) -> bool {
        match (&self.exact, self.log_value) {
            (Some(e), Some(l)) => {
                let le = big_ln(e);
                (le - l).abs() <= 1e-12 * le.abs().max(1.0)
            }
            _ => true,
        }
    }
}

/// Natural log of a big unsigned integer, to double precision.
pub fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Exact product of all hook lengths.
pub fn hook_product(hooks: &[u32]) -> BigUint {
    let mut acc = BigUint::one();
    let mut small: u64 = 1;
    for &h in hooks {
        match small.checked_mul(h as u64) {
            Some(v) => small = v,
            None => {
                acc *= small;
                small = h as u64;
            }
        }
    }
    acc * small
}

/// Compensated `Σ ln h`.
pub fn log_hook_sum(hooks: impl IntoIterator<Item = u32>) -> f64 {
    hooks.into_iter().map(|h| ln_int(h as u64)).collect::<NeumaierSum>().value()
}

/// `N! / ∏ h` exactly, together with its natural log.
pub fn dim_exact(lambda: &Partition) -> BigDim {
    let hooks = hook_lengths(lambda);
    let n = lambda.size();
    let product = hook_product(&hooks);
    let numerator = factorial(n);
    debug_assert!((&numerator % &product).is_zero());
    let exact = numerator / product;
    let log_value = ln_factorial(n) - log_hook_sum(hooks.iter().copied());
    BigDim { exact: Some(exact), log_value: Some(log_value) }
}

/// Log-dimension only, without big-integer arithmetic.
pub fn log_dim(lambda: &Partition) -> f64 {
    ln_factorial(lambda.size()) - log_hook_sum(hook_lengths(lambda))
}

/// A lattice path with slopes `±1` that equals `|x|` outside `[-L, L]`.
///
/// Only the `2L` steps over the deviation window are stored; `f(-L) = L`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StepFunction {
    offset: u32,
    steps: Vec<i8>,
}

impl StepFunction {
    /// Checks the shape invariants: `2L` steps in `{-1, +1}`, net displacement
    /// zero, and `f ≥ |x|` at every vertex.
    pub fn new(offset: u32, steps: Vec<i8>) -> Result<Self> {
        if steps.len() != 2 * offset as usize {
            return Err(Error::Invariant(format!(
                "step window of length {} does not match offset {offset}",
                steps.len()
            )));
        }
        if steps.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Invariant("steps must be ±1".into()));
        }
        let f = StepFunction { offset, steps };
        let values = f.vertex_values();
        let l = offset as i64;
        for (k, &v) in values.iter().enumerate() {
            let x = k as i64 - l;
            if v < x.abs() {
                return Err(Error::Invariant(format!("f({x}) = {v} lies below |x|")));
            }
        }
        if values[values.len() - 1] != l {
            return Err(Error::Invariant("step function does not return to |x| at +L".into()));
        }
        Ok(f)
    }

    /// `f(x) = |x|`.
    pub fn identity() -> Self {
        StepFunction { offset: 0, steps: Vec::new() }
    }

    pub fn offset(&self) -> u32 {
        self.offset
    }

    pub fn steps(&self) -> &[i8] {
        &self.steps
    }

    /// Left end of the stored window.
    pub fn left(&self) -> i64 {
        -(self.offset as i64)
    }

    /// Value at the integer `x`.
    pub fn at(&self, x: i64) -> i64 {
        let l = self.offset as i64;
        if x <= -l || x >= l {
            return x.abs();
        }
        let mut v = l;
        for &s in &self.steps[..(x + l) as usize] {
            v += s as i64;
        }
        v
    }

    /// Values at the integers `-L..=L`.
    pub fn vertex_values(&self) -> Vec<i64> {
        let mut v = self.offset as i64;
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(v);
        for &s in &self.steps {
            v += s as i64;
            out.push(v);
        }
        out
    }

    /// Evaluates the piecewise-linear function at a real abscissa.
    pub fn eval(&self, x: f64) -> f64 {
        let l = self.offset as f64;
        if x <= -l || x >= l {
            return x.abs();
        }
        let k = (x + l).floor() as usize;
        let base = self.at(k as i64 - self.offset as i64) as f64;
        base + (x + l - k as f64) * self.steps[k] as f64
    }

    /// Slope on `[x, x + 1]` for integer `x`.
    pub fn slope(&self, x: i64) -> i8 {
        let l = self.offset as i64;
        if x < -l {
            -1
        } else if x >= l {
            1
        } else {
            self.steps[(x + l) as usize]
        }
    }

    /// Re-expresses the function over a wider window `[-L', L']`.
    pub fn widened(&self, offset: u32) -> StepFunction {
        if offset <= self.offset {
            return self.clone();
        }
        let pad = (offset - self.offset) as usize;
        let mut steps = Vec::with_capacity(2 * offset as usize);
        steps.extend(std::iter::repeat_n(-1, pad));
        steps.extend_from_slice(&self.steps);
        steps.extend(std::iter::repeat_n(1, pad));
        StepFunction { offset, steps }
    }

    /// Smallest window carrying the same function.
    pub fn trimmed(&self) -> StepFunction {
        let values = self.vertex_values();
        let l = self.offset as i64;
        let mut radius = 0i64;
        for (k, &v) in values.iter().enumerate() {
            let x = k as i64 - l;
            if v != x.abs() {
                radius = radius.max(x.abs() + 1);
            }
        }
        let radius = radius.min(l);
        let start = (l - radius) as usize;
        let end = (l + radius) as usize;
        StepFunction { offset: radius as u32, steps: self.steps[start..end].to_vec() }
    }

    /// Builds a step function from vertex values at `-L..=L`.
    pub fn from_values(offset: u32, values: &[i64]) -> Result<Self> {
        if values.len() != 2 * offset as usize + 1 || values[0] != offset as i64 {
            return Err(Error::Invariant("vertex values do not match the window".into()));
        }
        let steps = values
            .windows(2)
            .map(|w| match w[1] - w[0] {
                1 => Ok(1),
                -1 => Ok(-1),
                d => Err(Error::Invariant(format!("vertex jump {d} is not ±1"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        StepFunction::new(offset, steps)
    }

    /// The reflection `x ↦ -x`; corresponds to conjugating the partition.
    pub fn reflected(&self) -> StepFunction {
        StepFunction { offset: self.offset, steps: self.steps.iter().rev().map(|&s| -s).collect() }
    }

    /// Deviation part `f' - sign(x)` on each unit cell of the window, as
    /// `(x, value)` for the cells where it is non-zero.
    pub(crate) fn slope_defects(&self) -> Vec<(i64, f64)> {
        let l = self.offset as i64;
        self.steps
            .iter()
            .enumerate()
            .filter_map(|(k, &s)| {
                let x = k as i64 - l;
                let sign = if x >= 0 { 1 } else { -1 };
                (s != sign).then(|| (x, (s - sign) as f64))
            })
            .collect()
    }
}

impl fmt::Display for StepFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.offset)?;
        for &s in &self.steps {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for StepFunction {
    type Err = Error;

    /// Parses `L:<signs>` where `<signs>` has `2L` characters from `+-`.
    fn from_str(s: &str) -> Result<Self> {
        let (offset, body) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Validation(format!("step function {s:?} lacks an offset")))?;
        let offset: u32 =
            offset.trim().parse().map_err(|_| Error::Validation(format!("bad offset {offset:?}")))?;
        let steps = body
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(Error::Validation(format!("bad step character {c:?}"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        StepFunction::new(offset, steps)
    }
}

/// The boundary of the Young diagram of `lambda`, on the window
/// `L = max(λ₁, ℓ(λ))`.
pub fn to_step_function(lambda: &Partition) -> StepFunction {
    let l = (lambda.first_part() as usize).max(lambda.len());
    let mut steps = vec![1i8; 2 * l];
    for i in 1..=l {
        let part = lambda.parts.get(i - 1).copied().unwrap_or(0) as i64;
        let pos = part - i as i64 + l as i64;
        steps[pos as usize] = -1;
    }
    StepFunction { offset: l as u32, steps }
}

/// Inverse of [`to_step_function`]. Reads row lengths off the down-steps.
pub fn from_step_function(f: &StepFunction) -> Result<Partition> {
    // Revalidate: the struct may have been built through `from_values`.
    let f = StepFunction::new(f.offset, f.steps.clone())?;
    let l = f.offset as i64;
    let mut parts = Vec::new();
    let mut row = 0i64;
    for k in (0..f.steps.len()).rev() {
        if f.steps[k] < 0 {
            row += 1;
            let x = k as i64 - l;
            let part = x + row;
            if part <= 0 {
                break;
            }
            parts.push(part as u32);
        }
    }
    Partition::new(parts)
}

/// Hook lengths read from the boundary: `j - i` for every up-step at `i`
/// preceding a down-step at `j`.
pub fn hooks_from_steps(f: &StepFunction) -> Vec<u32> {
    let mut ups: Vec<usize> = Vec::new();
    let mut hooks = Vec::new();
    for (k, &s) in f.steps.iter().enumerate() {
        if s > 0 {
            ups.push(k);
        } else {
            hooks.extend(ups.iter().map(|&i| (k - i) as u32));
        }
    }
    hooks
}

/// `N(f) = ½∫(f - |x|)`, counted as up/down inversions.
pub fn area(f: &StepFunction) -> u64 {
    let mut ups = 0u64;
    let mut cells = 0u64;
    for &s in &f.steps {
        if s > 0 {
            ups += 1;
        } else {
            cells += ups;
        }
    }
    cells
}

/// Largest `N` accepted by [`random_partition`]; `p(N)` must fit in `u128`.
pub const SAMPLE_CEILING: u32 = 1000;

/// `q[m][k]`: partitions of `m` with all parts at most `k`.
fn restricted_counts(n: usize) -> Vec<Vec<u128>> {
    let mut q = vec![vec![0u128; n + 1]; n + 1];
    for k in 0..=n {
        q[0][k] = 1;
    }
    for m in 1..=n {
        for k in 1..=n {
            q[m][k] = q[m][k - 1] + if k <= m { q[m - k][k] } else { 0 };
        }
    }
    q
}

/// A partition of `n` drawn uniformly from all `p(n)`.
pub fn random_partition<R: rand::Rng + ?Sized>(n: u32, rng: &mut R) -> Result<Partition> {
    if n > SAMPLE_CEILING {
        return Err(Error::ResourceLimit { what: "N", value: n as u64, ceiling: SAMPLE_CEILING as u64 });
    }
    let q = restricted_counts(n as usize);
    let mut parts = Vec::new();
    let (mut m, mut k) = (n as usize, n as usize);
    while m > 0 {
        // Largest part j is taken with weight q(m − j, j).
        let mut u = rng.gen_range(0..q[m][k]);
        let mut j = k.min(m);
        loop {
            let w = q[m - j][j];
            if u < w {
                break;
            }
            u -= w;
            j -= 1;
        }
        parts.push(j as u32);
        m -= j;
        k = j;
    }
    Partition::new(parts)
}
