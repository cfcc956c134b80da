//! The exact decomposition of `log ∏h²` around the rescaled limit shape:
//!
//! ```text
//! 2 Σ log h − N log N + N = θ_N(f)/8 + θ̃(f) + θ̄_N(f).
//! ```
//!
//! `θ_N` is evaluated in closed form. With `g = f − Ω_N`,
//! `θ_N = −2∫∫ g′(x) g′(y) log|x − y|`, and `g′` splits into a lattice part
//! (`f′ − sgn x`, constant on unit cells) and the fixed profile
//! `sgn x − Ω_N′(x)`. Lattice–lattice pairs reduce to second differences of
//! `x² log x`, lattice–profile pairs to an explicit antiderivative of the
//! profile's logarithmic potential, and the profile self-energy is `−4N`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local_gas::kernel::{increment_energy, log_pair, near_diagonal_energy};
use crate::local_gas::LocalPath;
use crate::partitions::{hooks_from_steps, to_step_function, Partition, StepFunction};
use crate::quadrature::adaptive;
use crate::scalar::Real;
use crate::shape::support_radius;
use crate::special::{ln_int, NeumaierSum};

/// Tolerances for the energy evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig<T> {
    /// Bound on the reported error of each functional.
    pub abs_tol: T,
    /// Panel budget for adaptive integration.
    pub max_subdivisions: usize,
    /// Cell separation beyond which pair integrals switch to their
    /// far-field expansion.
    pub tail_radius: T,
}

impl<T: Real> Default for QuadratureConfig<T> {
    fn default() -> Self {
        QuadratureConfig { abs_tol: T::lit(1e-8), max_subdivisions: 2000, tail_radius: T::lit(4.0) }
    }
}

impl<T: Real> QuadratureConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > T::zero()) {
            return Err(Error::Validation(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        if !(self.tail_radius >= T::lit(2.0)) {
            return Err(Error::Validation(format!("tail_radius must be at least 2, got {}", self.tail_radius)));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Validation("max_subdivisions must be positive".into()));
        }
        Ok(())
    }
}

/// The three energy terms for one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub theta: f64,
    pub tilde_theta: f64,
    pub bar_theta: f64,
    /// `θ/8 + θ̃`; `θ̄` is reported separately.
    pub total: f64,
    pub quad_error: f64,
}

const PHI_TABLE: usize = 1 << 14;

fn phi_series(h: u64) -> f64 {
    if h == 1 {
        return 3.0 - 4.0 * std::f64::consts::LN_2;
    }
    let inv2 = 1.0 / (h as f64 * h as f64);
    let mut pow = 1.0;
    let mut sum = 0.0;
    for k in 1..200u32 {
        pow *= inv2;
        let k = k as f64;
        let term = pow / (k * (k + 1.0) * (2.0 * k + 1.0));
        if term < 1e-18 * sum {
            break;
        }
        sum += term;
    }
    sum
}

/// `φ(h) = Σ_{k≥1} 1/(k(k+1)(2k+1)h^{2k})`.
pub fn phi(h: u64) -> Result<f64> {
    if h == 0 {
        return Err(Error::Validation("φ is defined for h ≥ 1".into()));
    }
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| (0..PHI_TABLE as u64).map(|h| if h == 0 { 0.0 } else { phi_series(h) }).collect());
    Ok(table.get(h as usize).copied().unwrap_or_else(|| phi_series(h)))
}

/// Sums `φ` over a hook multiset, grouped by hook length in increasing order
/// so equal multisets give identical floats.
pub fn phi_sum(hooks: impl IntoIterator<Item = u32>) -> f64 {
    let mut hooks: Vec<u32> = hooks.into_iter().collect();
    hooks.sort_unstable();
    let mut total = 0.0;
    let mut i = 0;
    while i < hooks.len() {
        let h = hooks[i];
        let j = i + hooks[i..].iter().take_while(|&&x| x == h).count();
        total += (j - i) as f64 * phi(h as u64).expect("hooks are positive");
        i = j;
    }
    total
}

/// `θ̃(f) = Σ φ(h)` over the cells of the diagram.
pub fn tilde_theta(f: &StepFunction) -> f64 {
    phi_sum(hooks_from_steps(f))
}

/// Antiderivative of the profile's logarithmic potential on the unit scale.
fn profile_potential_integral(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        return 0.0;
    }
    if x <= 1.0 {
        return x * x * (1.5 - (2.0 * x).ln());
    }
    let outer = |y: f64| {
        let s = (y * y - 1.0).sqrt();
        (0.5 * y * y + 0.25) * y.acosh() - 0.75 * y * s - 0.5 * y * y * (2.0 * y).ln() + 0.75 * y * y
    };
    (1.5 - std::f64::consts::LN_2) + 2.0 * (outer(x) - outer(1.0))
}

/// The profile's logarithmic potential on the unit scale (odd in `y`).
fn profile_potential(y: f64) -> f64 {
    let a = y.abs();
    let v = if a == 0.0 {
        0.0
    } else if a <= 1.0 {
        2.0 * a * (1.0 - (2.0 * a).ln())
    } else {
        // 2a[(arccosh a − ln 2a) + (1 − √(1 − a⁻²))], both brackets rewritten
        // without cancellation.
        let z = 1.0 / (a * a);
        let q = z / (1.0 + (1.0 - z).sqrt());
        2.0 * a * ((-0.5 * q).ln_1p() + q)
    };
    v.copysign(y)
}

/// `P((x + 1)/R) − P(x/R)` for the unit cell at `x`.
fn cell_potential(x: i64, r: f64) -> f64 {
    let (lo, hi) = (x as f64, (x + 1) as f64);
    if lo <= 0.0 && hi >= 0.0 || lo.abs() < r && hi.abs() > r || lo.abs() > r && hi.abs() < r {
        return profile_potential_integral(hi / r) - profile_potential_integral(lo / r);
    }
    crate::quadrature::gauss_legendre(|t: f64| profile_potential(t / r), lo, hi) / r
}

fn pair_table(max_gap: usize, tail_radius: f64) -> Vec<f64> {
    let cutoff = tail_radius.ceil().max(2.0) as usize;
    (0..=max_gap)
        .map(|d| if d >= cutoff { far_log_pair(d as f64) } else { log_pair::<f64>(d as u64) })
        .collect()
}

fn far_log_pair(d: f64) -> f64 {
    let inv2 = 1.0 / (d * d);
    let mut pow = 1.0;
    let mut sum = 0.0;
    for j in 1..=40 {
        pow *= inv2;
        let j = j as f64;
        let term = pow / (j * (2.0 * j + 1.0) * (2.0 * j + 2.0));
        sum += term;
        if term < 1e-19 {
            break;
        }
    }
    d.ln() - sum
}

/// `θ_N(f) = ∫∫ ((g(x) − g(y))/(x − y))² dx dy` with `g = f − Ω_N`.
///
/// Returns the value and a bound on accumulated rounding.
pub fn theta_n(f: &StepFunction, n: u64, cfg: &QuadratureConfig<f64>) -> Result<(f64, f64)> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Validation("θ_N needs N ≥ 1".into()));
    }
    let r: f64 = support_radius(n);
    let scale = 4.0 * n as f64;
    let defects = f.slope_defects();
    let max_gap = defects.last().map_or(0, |last| (last.0 - defects[0].0) as usize);
    let table = pair_table(max_gap, cfg.tail_radius);

    let mut lattice = NeumaierSum::default();
    let mut lattice_size = 0.0;
    for (i, &(xi, ai)) in defects.iter().enumerate() {
        lattice.add(ai * ai * table[0]);
        lattice_size += (ai * ai * table[0]).abs();
        let mut row = NeumaierSum::default();
        let mut row_size = 0.0;
        for &(xj, aj) in &defects[i + 1..] {
            let term = aj * table[(xj - xi) as usize];
            row.add(term);
            row_size += term.abs();
        }
        lattice.add(2.0 * ai * row.value());
        lattice_size += 2.0 * ai.abs() * row_size;
    }
    let mut cross = NeumaierSum::default();
    let mut cross_size = 0.0;
    for &(x, a) in &defects {
        let term = a * scale * cell_potential(x, r);
        cross.add(term);
        cross_size += term.abs();
    }
    let theta = -2.0 * lattice.value() + 4.0 * cross.value() + 2.0 * scale;
    let error = 4.0 * f64::EPSILON * (2.0 * lattice_size + 4.0 * cross_size + 2.0 * scale);
    if error > cfg.abs_tol {
        return Err(Error::Convergence { estimate: theta, error, tolerance: cfg.abs_tol });
    }
    Ok((theta.max(0.0), error))
}

/// `∫ (α + βt)·arccosh(t/R) dt` over `[t0, t1] ⊂ [R, ∞)`, where the linear
/// integrand takes the values `e0`, `e1` at the ends.
fn arccosh_moment(t0: f64, t1: f64, e0: f64, e1: f64, r: f64) -> f64 {
    let beta = (e1 - e0) / (t1 - t0);
    let alpha = e0 - beta * t0;
    let a0 = |y: f64| y * y.acosh() - (y * y - 1.0).max(0.0).sqrt();
    let a1 = |y: f64| (0.5 * y * y - 0.25) * y.acosh() - 0.25 * y * (y * y - 1.0).max(0.0).sqrt();
    let (y0, y1) = (t0 / r, t1 / r);
    r * alpha * (a0(y1) - a0(y0)) + r * r * beta * (a1(y1) - a1(y0))
}

/// `θ̄_N(f) = ∫_{|x| ≥ 2√N} (f(x) − |x|)·arccosh(|x|/2√N) dx`.
pub fn bar_theta_n(f: &StepFunction, n: u64, cfg: &QuadratureConfig<f64>) -> Result<(f64, f64)> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Validation("θ̄_N needs N ≥ 1".into()));
    }
    let r: f64 = support_radius(n);
    let values = f.vertex_values();
    let l = f.offset() as i64;
    let mut total = NeumaierSum::default();
    let mut magnitude = 0.0;
    for k in 0..f.steps().len() {
        let x0 = (k as i64 - l) as f64;
        let x1 = x0 + 1.0;
        let e0 = values[k] as f64 - x0.abs();
        let e1 = values[k + 1] as f64 - x1.abs();
        if e0 == 0.0 && e1 == 0.0 {
            continue;
        }
        // Map to t = |x| ≥ 0 so the weight is arccosh(t/R).
        let (t0, t1, v0, v1) = if x0 >= 0.0 { (x0, x1, e0, e1) } else { (-x1, -x0, e1, e0) };
        if t1 <= r {
            continue;
        }
        let (s0, w0) = if t0 < r { (r, v0 + (v1 - v0) * (r - t0)) } else { (t0, v0) };
        let piece = arccosh_moment(s0, t1, w0, v1, r);
        magnitude += piece.abs() + (t1 - s0) * (w0.abs() + v1.abs()) * (t1 / r).acosh();
        total.add(piece);
    }
    let value = total.value();
    let error = 64.0 * f64::EPSILON * magnitude * (1.0 + (2.0 * (l as f64 + 1.0)).ln());
    if error > cfg.abs_tol {
        return Err(Error::Convergence { estimate: value, error, tolerance: cfg.abs_tol });
    }
    Ok((value.max(0.0), error))
}

/// All three terms for `f` against `Ω_N`.
pub fn energy_breakdown(f: &StepFunction, n: u64, cfg: &QuadratureConfig<f64>) -> Result<EnergyBreakdown> {
    let (theta, e1) = theta_n(f, n, cfg)?;
    let (bar_theta, e2) = bar_theta_n(f, n, cfg)?;
    let tilde_theta = tilde_theta(f);
    Ok(EnergyBreakdown { theta, tilde_theta, bar_theta, total: theta / 8.0 + tilde_theta, quad_error: e1 + e2 })
}

/// `log(∏h² / (N/e)^N) − (θ_N/8 + θ̃ + θ̄_N)` for the diagram of `lambda`.
pub fn vk_residual(lambda: &Partition, cfg: &QuadratureConfig<f64>) -> Result<f64> {
    if lambda.is_empty() {
        return Err(Error::Validation("the identity needs a non-empty partition".into()));
    }
    let n = lambda.size();
    let f = to_step_function(lambda);
    let e = energy_breakdown(&f, n, cfg)?;
    let mut lhs: NeumaierSum = hooks_from_steps(&f).into_iter().map(|h| 2.0 * ln_int(h as u64)).collect();
    lhs.add(-(n as f64) * ln_int(n));
    lhs.add(n as f64);
    lhs.add(-e.theta / 8.0);
    lhs.add(-e.tilde_theta);
    lhs.add(-e.bar_theta);
    Ok(lhs.value())
}

/// Band decomposition of the double integral by separation `|x − y|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicEnergy {
    /// Pairs with `|x − y| ≤ 1`.
    pub diagonal: f64,
    /// `(k, I_k)` for pairs with `2^k < |x − y| ≤ 2^{k+1}`.
    pub bands: Vec<(u32, f64)>,
    pub error: f64,
}

impl DyadicEnergy {
    pub fn total(&self) -> f64 {
        self.diagonal + self.bands.iter().map(|b| b.1).sum::<f64>()
    }
}

/// Anything that is a finite run of `±1` steps.
pub trait StepSequence {
    fn step_slice(&self) -> &[i8];
}

impl StepSequence for LocalPath {
    fn step_slice(&self) -> &[i8] {
        self.steps()
    }
}

impl StepSequence for StepFunction {
    fn step_slice(&self) -> &[i8] {
        self.steps()
    }
}

/// Splits `∫∫ ((ḡ(x) − ḡ(y))/(x − y))²`, `ḡ(x) = f(x) − ρx` over the stored
/// window, into dyadic bands of the separation.
///
/// Uses `θ = 2∫ Q(w)/w² dw` with `Q(w) = ∫ (ḡ(x + w) − ḡ(x))² dx`: exact for
/// `w ≤ 1`, and `Q` is evaluated exactly and integrated adaptively beyond.
pub fn dyadic_energy<S: StepSequence + ?Sized>(
    path: &S,
    rho: f64,
    cfg: &QuadratureConfig<f64>,
) -> Result<DyadicEnergy> {
    cfg.validate()?;
    let steps = path.step_slice();
    let n = steps.len();
    let as_path = LocalPath::new(steps.to_vec())?;
    let diagonal = near_diagonal_energy(&as_path, rho);
    let mut values = Vec::with_capacity(n + 1);
    let mut v = 0.0;
    values.push(v);
    for &s in steps {
        v += s as f64;
        values.push(v);
    }
    let mut bands = Vec::new();
    let mut error = 0.0;
    let per_unit_tol = cfg.abs_tol / (n.max(1) as f64);
    let mut k = 0u32;
    while n > 1 && (1usize << k) < n {
        let lo = 1usize << k;
        let hi = (lo << 1).min(n);
        let mut band = NeumaierSum::default();
        for d in lo..hi {
            let est = adaptive(
                |w: f64| 2.0 * increment_energy(&values, rho, w) / (w * w),
                d as f64,
                d as f64 + 1.0,
                per_unit_tol,
                cfg.max_subdivisions,
            )?;
            band.add(est.value);
            error += est.error;
        }
        bands.push((k, band.value()));
        k += 1;
    }
    Ok(DyadicEnergy { diagonal, bands, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn cfg() -> QuadratureConfig<f64> {
        QuadratureConfig::default()
    }

    fn part(p: &[u32]) -> Partition {
        Partition::new(p.to_vec()).unwrap()
    }

    #[test]
    fn phi_values() {
        assert!((phi(1).unwrap() - (3.0 - 4.0 * LN_2)).abs() < 1e-15);
        // Partial sums, directly.
        let direct: f64 = (1..40).map(|k| {
            let k = k as f64;
            1.0 / (k * (k + 1.0) * (2.0 * k + 1.0) * 4f64.powf(k))
        }).sum();
        assert!((phi(2).unwrap() - direct).abs() < 1e-15);
        assert!((phi(2).unwrap() - 0.043_961_207_586_465_87).abs() < 1e-15);
        let big = phi(1_000_000).unwrap();
        assert!((big / (1e-12 / 6.0) - 1.0).abs() < 1e-11);
        assert!(phi(0).is_err());
    }

    #[test]
    fn phi_is_decreasing_and_dominated() {
        let p1 = phi(1).unwrap();
        let mut prev = f64::INFINITY;
        for h in 1..3000u64 {
            let v = phi(h).unwrap();
            assert!(v < prev);
            assert!(v <= p1 / (h * h) as f64 * (1.0 + 1e-15));
            prev = v;
        }
        // Table and direct series agree across the table boundary.
        for h in [PHI_TABLE as u64 - 1, PHI_TABLE as u64, PHI_TABLE as u64 + 1] {
            assert_eq!(phi(h).unwrap(), phi_series(h));
        }
    }

    #[test]
    fn tilde_theta_examples() {
        assert_eq!(tilde_theta(&StepFunction::identity()), 0.0);
        let one = to_step_function(&part(&[1]));
        assert!((tilde_theta(&one) - phi(1).unwrap()).abs() < 1e-16);
        let square = to_step_function(&part(&[2, 2]));
        let expected = phi(1).unwrap() + 2.0 * phi(2).unwrap() + phi(3).unwrap();
        assert!((tilde_theta(&square) - expected).abs() < 1e-15);
    }

    #[test]
    fn single_cell_theta() {
        let f = to_step_function(&part(&[1]));
        let (theta, _) = theta_n(&f, 1, &cfg()).unwrap();
        assert!((theta - (32.0 * LN_2 - 16.0)).abs() < 1e-12, "{theta}");
        let (bar, _) = bar_theta_n(&f, 1, &cfg()).unwrap();
        assert_eq!(bar, 0.0);
    }

    #[test]
    fn identity_holds_on_small_shapes() {
        for p in [&[1][..], &[2, 2], &[2, 1], &[5], &[3, 1, 1], &[6, 1], &[1, 1, 1, 1, 1, 1, 1]] {
            let r = vk_residual(&part(p), &cfg()).unwrap();
            assert!(r.abs() < 1e-10, "{p:?}: {r}");
        }
    }

    #[test]
    fn bar_theta_of_a_row_matches_quadrature() {
        // A row of 4 ends exactly at 2√4; one more cell pokes out.
        let f = to_step_function(&part(&[4]));
        assert_eq!(bar_theta_n(&f, 4, &cfg()).unwrap().0, 0.0);
        let f = to_step_function(&part(&[5]));
        let (bar, _) = bar_theta_n(&f, 5, &cfg()).unwrap();
        assert!(bar > 0.0);
        let r = 2.0 * 5f64.sqrt();
        let oracle = adaptive(|x: f64| (f.eval(x) - x.abs()) * (x.abs() / r).acosh(), r, 5.0, 1e-13, 500)
            .unwrap()
            .value;
        assert!((bar - oracle).abs() < 1e-10, "{bar} vs {oracle}");
    }

    #[test]
    fn bar_theta_vanishes_inside_the_support() {
        let f = to_step_function(&part(&[3, 2, 1]));
        assert_eq!(bar_theta_n(&f, 6, &cfg()).unwrap().0, 0.0);
    }

    #[test]
    fn theta_matches_direct_quadrature() {
        // Independent route: the H^{1/2} form −2∫∫ g′g′ log|x−y| with g′
        // integrated numerically for a mid-sized shape.
        let lambda = part(&[4, 2, 1]);
        let n = lambda.size();
        let f = to_step_function(&lambda);
        let r: f64 = support_radius(n);
        let span = (f.offset() as f64).max(r.ceil()) + 1.0;
        let g = |x: f64| f.eval(x) - crate::shape::omega_n(x, n);
        // θ = 2∫ Q(w)/w², Q(w) = ∫ (g(x+w) − g(x))², plus a tail where one
        // side leaves the support: g(x+w) − g(x) → −g(x) once x + w > span.
        let q = |w: f64| {
            crate::quadrature::gauss_legendre_composite(|x: f64| (g(x + w) - g(x)).powi(2), -span - w, span, 64)
        };
        let near = crate::quadrature::gauss_legendre_composite(|w: f64| 2.0 * q(w) / (w * w), 1e-9, 2.0 * span, 64);
        let mass = crate::quadrature::gauss_legendre_composite(|x: f64| g(x).powi(2), -span, span, 64);
        let tail = 2.0 * 2.0 * mass / (2.0 * span);
        let oracle = near + tail;
        let (theta, _) = theta_n(&f, n, &cfg()).unwrap();
        assert!((theta - oracle).abs() < 2e-3 * oracle, "{theta} vs {oracle}");
    }

    #[test]
    fn theta_is_reflection_invariant() {
        let f = to_step_function(&part(&[5, 3, 3, 1]));
        let a = theta_n(&f, 12, &cfg()).unwrap().0;
        let b = theta_n(&f.reflected(), 12, &cfg()).unwrap().0;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn breakdown_serialises_with_named_fields() {
        let e = energy_breakdown(&to_step_function(&part(&[2, 1])), 3, &cfg()).unwrap();
        let json = serde_json::to_value(e).unwrap();
        for key in ["theta", "tilde_theta", "bar_theta", "total", "quad_error"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!((e.total - (e.theta / 8.0 + e.tilde_theta)).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut c = cfg();
        c.abs_tol = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.tail_radius = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn dyadic_bands_of_monotone_path_vanish() {
        let p = LocalPath::new(vec![1; 20]).unwrap();
        let d = dyadic_energy(&p, 1.0, &cfg()).unwrap();
        assert_eq!(d.diagonal, 0.0);
        assert!(d.bands.iter().all(|b| b.1.abs() < 1e-14));
    }
}
