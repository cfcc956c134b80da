//! The Logan–Shepp / Vershik–Kerov limit shape `Ω`, its derivative, the
//! `√(4N)` rescaling `Ω_N`, and the maximal lattice path below `Ω_N`.

use crate::error::{Error, Result};
use crate::partitions::StepFunction;
use crate::scalar::Real;

/// A point evaluation of the limit shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeEval<T> {
    pub x: T,
    pub value: T,
    pub derivative: T,
}

impl<T: Real> ShapeEval<T> {
    pub fn at(x: T) -> Self {
        let one = T::one();
        let derivative = if x.abs() >= one { x.signum() } else { omega_prime(x).expect("|x| < 1") };
        ShapeEval { x, value: omega(x), derivative }
    }
}

/// `Ω(x) = (2/π)(x·arcsin x + √(1−x²))` on `[-1, 1]`, `|x|` outside.
pub fn omega<T: Real>(x: T) -> T {
    let ax = x.abs();
    let one = T::one();
    if ax >= one {
        return ax;
    }
    // Ω(x) − |x| = (2/π)(sin a − a cos a) with a = arccos|x|.
    let t = one - ax;
    let two = T::lit(2.0);
    let a = two * (t / two).sqrt().asin();
    let excess = if a < T::lit(0.15) {
        // a³/3 − a⁵/30 + a⁷/840 − a⁹/45360 + a¹¹/3991680
        let a2 = a * a;
        a * a2
            * (T::lit(1.0 / 3.0)
                - a2 * (T::lit(1.0 / 30.0)
                    - a2 * (T::lit(1.0 / 840.0) - a2 * (T::lit(1.0 / 45360.0) - a2 / T::lit(3991680.0)))))
    } else {
        a.sin() - a * a.cos()
    };
    ax + T::FRAC_2_PI() * excess
}

/// `Ω'(x) = (2/π)·arcsin x` on `[-1, 1]`.
pub fn omega_prime<T: Real>(x: T) -> Result<T> {
    if !(x.abs() <= T::one()) {
        return Err(Error::Validation(format!("Ω' is defined on [-1, 1], got {x}")));
    }
    Ok(T::FRAC_2_PI() * x.asin())
}

/// Half-width `2√N` of the support of `Ω_N`.
pub fn support_radius<T: Real>(n: u64) -> T {
    T::lit(2.0) * T::from_u64(n).unwrap().sqrt()
}

/// `Ω_N(x) = √(4N)·Ω(x/√(4N))`.
pub fn omega_n<T: Real>(x: T, n: u64) -> T {
    let r = support_radius::<T>(n);
    r * omega(x / r)
}

/// Derivative of `Ω_N`; `±1` outside the support.
pub fn omega_n_prime<T: Real>(x: T, n: u64) -> T {
    let u = x / support_radius::<T>(n);
    if u.abs() >= T::one() {
        u.signum()
    } else {
        T::FRAC_2_PI() * u.asin()
    }
}

/// The pointwise-maximal step function lying below `Ω_N`.
///
/// Built greedily from the left: an up-step is taken whenever the new vertex
/// stays below `Ω_N`. Checking vertices suffices because `|Ω_N'| ≤ 1`.
pub fn staircase_below(n: u64) -> StepFunction {
    assert!(n >= 1, "staircase_below needs N ≥ 1");
    let radius: f64 = support_radius(n);
    let l = radius.ceil() as i64 + 1;
    let mut values = Vec::with_capacity(2 * l as usize + 1);
    let mut v = l;
    values.push(v);
    for x in -l..l {
        let cap = omega_n((x + 1) as f64, n) + 1e-9;
        v = if (v + 1) as f64 <= cap { v + 1 } else { v - 1 };
        values.push(v);
    }
    StepFunction::from_values(l as u32, &values)
        .expect("the greedy path below Ω_N returns to |x|")
        .trimmed()
}
