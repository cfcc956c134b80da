//! Closed-form evaluation of the local energies.
//!
//! Writing `c_k = s_k − ρ` for the slope defect on cell `[k, k+1]`, the double
//! integral of squared difference quotients over `[0, n]²` is the quadratic
//! form `cᵀMc` with
//!
//! ```text
//! M_ab = ∫_a^{a+1}∫_b^{b+1} 2·log( max(s,t)·(n − min(s,t)) / (|s − t|·n) ) ds dt,
//! ```
//!
//! a kernel that depends on `n` only. Every entry reduces to second
//! differences of `x² log x` and first differences of `x log x`.

use crate::scalar::Real;

use super::LocalPath;
use crate::functionals::phi;

/// `∫_b^{b+1} ln t dt` for integer `b ≥ 0`.
pub(crate) fn log_cell<T: Real>(b: u64) -> T {
    if b == 0 {
        return -T::one();
    }
    let bt = T::from_u64(b).unwrap();
    (bt + T::one()).ln() + bt * (T::one() / bt).ln_1p() - T::one()
}

/// `∫_0^1∫_0^1 ln|d + v − u| du dv` for integer `d ≥ 0`.
pub(crate) fn log_pair<T: Real>(d: u64) -> T {
    if d >= 4 {
        let dt = T::from_u64(d).unwrap();
        let inv2 = T::one() / (dt * dt);
        let mut term = T::one();
        let mut sum = T::zero();
        for j in 1..=24u32 {
            term = term * inv2;
            let jt = T::from_u32(j).unwrap();
            let two = T::lit(2.0);
            let contrib = term / (jt * (two * jt + T::one()) * (two * jt + two));
            sum = sum + contrib;
            if contrib < T::epsilon() * T::lit(1e-3) {
                break;
            }
        }
        return dt.ln() - sum;
    }
    let l2 = |x: i64| -> T {
        if x == 0 {
            T::zero()
        } else {
            let xt = T::from_int(x);
            xt * xt * (xt.abs().ln() * T::lit(0.5) - T::lit(0.75))
        }
    };
    let d = d as i64;
    l2(d + 1) - l2(d) * T::lit(2.0) + l2(d - 1)
}

/// `2∫_m^{m+1} (u − m) ln u du` for integer `m ≥ 0`.
pub(crate) fn log_ramp<T: Real>(m: u64) -> T {
    let two = T::lit(2.0);
    if m >= 4 {
        // ½ ln m + Σ (−1)^{k+1} / (k(k+2) m^k)
        let mt = T::from_u64(m).unwrap();
        let mut pow = T::one();
        let mut sum = T::zero();
        for k in 1..=60u32 {
            pow = pow / mt;
            let kt = T::from_u32(k).unwrap();
            let term = pow / (kt * (kt + two));
            sum = if k % 2 == 1 { sum + term } else { sum - term };
            if term < T::epsilon() * T::lit(1e-3) {
                break;
            }
        }
        return two * (mt.ln() * T::lit(0.5) + sum);
    }
    let mt = T::from_u64(m).unwrap();
    let anti = |u: T| -> T {
        if u == T::zero() {
            T::zero()
        } else {
            u * u * (u.ln() * T::lit(0.5) - T::lit(0.25)) - mt * (u * u.ln() - u)
        }
    };
    two * (anti(mt + T::one()) - anti(mt))
}

/// The `n`-independent part of the kernel: `2∫∫ log(max/|s−t|)`.
pub(crate) fn pair_core<T: Real>(a: usize, b: usize) -> T {
    let two = T::lit(2.0);
    if a == b {
        two * (log_ramp::<T>(a as u64) - log_pair::<T>(0))
    } else {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        two * (log_cell::<T>(hi as u64) - log_pair::<T>((hi - lo) as u64))
    }
}

/// The boundary part for a domain of length `n`, off the diagonal:
/// `2∫∫ log((n − min)/n)` with `a` the lower cell.
pub(crate) fn boundary_off<T: Real>(n: usize, a: usize) -> T {
    T::lit(2.0) * (log_cell::<T>((n - a - 1) as u64) - T::from_usize(n).unwrap().ln())
}

/// Diagonal boundary part for cell `a` of a domain of length `n`.
pub(crate) fn boundary_diag<T: Real>(n: usize, a: usize) -> T {
    T::lit(2.0) * (log_ramp::<T>((n - a - 1) as u64) - T::from_usize(n).unwrap().ln())
}

/// Precomputed kernel matrix for paths of length `n`.
#[derive(Debug, Clone)]
pub struct LocalKernel<T> {
    n: usize,
    matrix: Vec<T>,
}

impl<T: Real> LocalKernel<T> {
    pub fn new(n: usize) -> Self {
        let mut matrix = vec![T::zero(); n * n];
        let core_diag: Vec<T> = (0..n).map(|a| pair_core::<T>(a, a)).collect();
        for a in 0..n {
            matrix[a * n + a] = core_diag[a] + boundary_diag::<T>(n, a);
            for b in a + 1..n {
                let v = pair_core::<T>(a, b) + boundary_off::<T>(n, a);
                matrix[a * n + b] = v;
                matrix[b * n + a] = v;
            }
        }
        LocalKernel { n, matrix }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn entry(&self, a: usize, b: usize) -> T {
        self.matrix[a * self.n + b]
    }

    pub(crate) fn row(&self, a: usize) -> &[T] {
        &self.matrix[a * self.n..(a + 1) * self.n]
    }

    fn quadratic_form(&self, c: &[T]) -> T {
        let mut total = T::zero();
        for (a, &ca) in c.iter().enumerate() {
            let row = self.row(a);
            let mut acc = T::zero();
            for (m, &cb) in row.iter().zip(c) {
                acc = acc + *m * cb;
            }
            total = total + ca * acc;
        }
        total
    }

    /// `θₙ^ρ(p)`, symmetrised over the reversal `c ↦ (c_{n−1}, …, c_0)` so that
    /// the mirror image at slope `−ρ` evaluates to the identical float.
    pub fn theta(&self, path: &LocalPath, rho: T) -> T {
        assert_eq!(path.len(), self.n, "kernel built for a different length");
        let c: Vec<T> = path.steps().iter().map(|&s| T::from_int(s as i64) - rho).collect();
        let rev: Vec<T> = c.iter().rev().copied().collect();
        let forward = self.quadratic_form(&c);
        let backward = self.quadratic_form(&rev);
        ((forward + backward) * T::lit(0.5)).max(T::zero())
    }
}

/// Hook-length histogram of the cells trapped between the path and the
/// V-shape through its endpoints: index `h` counts pairs `i < j` with an
/// up-step at `i`, a down-step at `j` and `j − i = h`.
pub fn trapped_hook_counts(path: &LocalPath) -> Vec<u64> {
    let n = path.len();
    let mut counts = vec![0u64; n + 1];
    let mut ups: Vec<usize> = Vec::new();
    for (j, &s) in path.steps().iter().enumerate() {
        if s > 0 {
            ups.push(j);
        } else {
            for &i in &ups {
                counts[j - i] += 1;
            }
        }
    }
    counts
}

/// `θ̃ₙ(p) = Σ φ(h)` over trapped cells, summed in increasing `h`.
pub fn tilde_local<T: Real>(path: &LocalPath) -> T {
    trapped_hook_counts(path)
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c > 0)
        .fold(T::zero(), |acc, (h, &c)| acc + T::from_u64(c).unwrap() * T::lit(phi(h as u64).expect("h ≥ 1")))
}

/// Squared increments `∫_0^{n−w} (ḡ(x+w) − ḡ(x))² dx` of `ḡ(x) = f(x) − ρx`,
/// integrated exactly (Simpson on each linear piece).
pub(crate) fn increment_energy(values: &[f64], rho: f64, w: f64) -> f64 {
    let n = values.len() - 1;
    let upper = n as f64 - w;
    if upper <= 0.0 {
        return 0.0;
    }
    let g = |x: f64| -> f64 {
        let k = (x.floor() as usize).min(n - 1);
        let t = x - k as f64;
        values[k] + t * (values[k + 1] - values[k]) - rho * x
    };
    let frac = w - w.floor();
    let mut cuts: Vec<f64> = Vec::with_capacity(2 * n + 2);
    cuts.push(0.0);
    for k in 1..=n {
        let a = k as f64;
        if a < upper {
            cuts.push(a);
        }
        let b = a - frac;
        if b > 0.0 && b < upper {
            cuts.push(b);
        }
    }
    cuts.push(upper);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let d = |x: f64| g(x + w) - g(x);
    cuts.windows(2)
        .map(|win| {
            let (a, b) = (win[0], win[1]);
            let (da, dm, db) = (d(a), d(0.5 * (a + b)), d(b));
            (b - a) / 6.0 * (da * da + 4.0 * dm * dm + db * db)
        })
        .sum()
}

/// Contribution to `θₙ^ρ` from pairs with `|x − y| ≤ 1`.
pub(crate) fn near_diagonal_energy(path: &LocalPath, rho: f64) -> f64 {
    let c: Vec<f64> = path.steps().iter().map(|&s| s as f64 - rho).collect();
    let squares: f64 = c.iter().map(|x| x * x).sum();
    let links: f64 = c.windows(2).map(|w| w[0] * w[0] + w[0] * w[1] + w[1] * w[1]).sum();
    squares + links / 3.0
}
