//! Log-factorials and compensated summation.

use std::sync::OnceLock;

const TABLE_LEN: usize = 4096;

fn ln_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| (0..TABLE_LEN).map(|k| if k == 0 { 0.0 } else { (k as f64).ln() }).collect())
}

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let logs = ln_table();
        let mut acc = NeumaierSum::default();
        let mut out = Vec::with_capacity(TABLE_LEN);
        out.push(0.0);
        for &l in &logs[1..] {
            acc.add(l);
            out.push(acc.value());
        }
        out
    })
}

/// Natural log of a positive integer, from a table for small arguments.
#[inline]
pub fn ln_int(k: u64) -> f64 {
    match ln_table().get(k as usize) {
        Some(&v) => v,
        None => (k as f64).ln(),
    }
}

/// `ln(n!)`. Exact-summed table below 4096, Stirling series above.
pub fn ln_factorial(n: u64) -> f64 {
    if let Some(&v) = ln_factorial_table().get(n as usize) {
        return v;
    }
    let x = (n + 1) as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // ln Γ(x) with x = n + 1
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}
