//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15) with a global
//! error budget, fixed-order Gauss–Legendre, and a nested 2-D driver.

use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// 7-point Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

/// One Gauss–Kronrod 15-point panel: `(kronrod, |kronrod − gauss|)`.
pub fn gauss_kronrod_15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = (b - a) * T::lit(0.5);
    let center = (a + b) * T::lit(0.5);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let sum = f(center - dx) + f(center + dx);
        kronrod = kronrod + T::lit(WGK[j]) * sum;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl<T: Real> Eq for Panel<T> {}

impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(std::cmp::Ordering::Equal)
    }
}

/// Adaptive integration over `[a, b]`, bisecting the worst panel until the
/// summed error estimate falls below `abs_tol`.
pub fn adaptive<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    abs_tol: T,
    max_subdivisions: usize,
) -> Result<Estimate<T>> {
    if a == b {
        return Ok(Estimate { value: T::zero(), error: T::zero(), evaluations: 0 });
    }
    let (value, error) = gauss_kronrod_15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut evaluations = 15;
    let mut splits = 0;
    while total_err > abs_tol {
        if splits >= max_subdivisions {
            return Err(Error::Convergence {
                estimate: total.to_f64().unwrap_or(f64::NAN),
                error: total_err.to_f64().unwrap_or(f64::NAN),
                tolerance: abs_tol.to_f64().unwrap_or(f64::NAN),
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = (worst.a + worst.b) * T::lit(0.5);
        let (v1, e1) = gauss_kronrod_15(&mut f, worst.a, mid);
        let (v2, e2) = gauss_kronrod_15(&mut f, mid, worst.b);
        evaluations += 30;
        splits += 1;
        total = total - worst.value + v1 + v2;
        total_err = total_err - worst.error + e1 + e2;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        // Re-sum occasionally so cancellation in the running totals cannot drift.
        if splits % 64 == 0 {
            total = heap.iter().map(|p| p.value).fold(T::zero(), |s, v| s + v);
            total_err = heap.iter().map(|p| p.error).fold(T::zero(), |s, v| s + v);
        }
    }
    let value = heap.iter().map(|p| p.value).fold(T::zero(), |s, v| s + v);
    Ok(Estimate { value, error: total_err, evaluations })
}

/// Iterated adaptive integration over a rectangle.
pub fn adaptive_2d<T: Real, F: FnMut(T, T) -> T>(
    mut f: F,
    (x0, x1): (T, T),
    (y0, y1): (T, T),
    abs_tol: T,
    max_subdivisions: usize,
) -> Result<Estimate<T>> {
    let width = (x1 - x0).abs().max(T::min_positive_value());
    let inner_tol = abs_tol / (T::lit(4.0) * width.max(T::one()));
    let mut inner_err = T::zero();
    let mut failure = None;
    let outer = adaptive(
        |x| match adaptive(|y| f(x, y), y0, y1, inner_tol, max_subdivisions) {
            Ok(e) => {
                inner_err = inner_err.max(e.error);
                e.value
            }
            Err(err) => {
                failure.get_or_insert(err);
                T::zero()
            }
        },
        x0,
        x1,
        abs_tol / T::lit(2.0),
        max_subdivisions,
    )?;
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(Estimate { value: outer.value, error: outer.error + inner_err * width, evaluations: outer.evaluations })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration.
pub fn gauss_legendre_nodes(order: usize) -> Vec<(f64, f64)> {
    let n = order;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

pub(crate) fn gl20() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre_nodes(20))
}

/// Fixed 20-point Gauss–Legendre on `[a, b]`.
pub fn gauss_legendre<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T) -> T {
    let half = (b - a) * T::lit(0.5);
    let center = (a + b) * T::lit(0.5);
    gl20().iter().fold(T::zero(), |s, &(x, w)| s + T::lit(w) * f(center + half * T::lit(x))) * half
}

/// 20-point Gauss–Legendre on `panels` equal sub-intervals.
pub fn gauss_legendre_composite<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, panels: usize) -> T {
    let h = (b - a) / T::from_usize(panels).unwrap();
    (0..panels).fold(T::zero(), |s, k| {
        let lo = a + h * T::from_usize(k).unwrap();
        s + gauss_legendre(&mut f, lo, lo + h)
    })
}
