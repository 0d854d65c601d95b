//! Special functions used by the outage analysis: the gamma function at
//! positive integers, integer-order modified Bessel functions of the second
//! kind, and the principal branch of the Lambert-W function.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest `n` accepted by [`gamma_int`]; `Γ(171)` overflows an `f64`.
pub const GAMMA_INT_MAX: u32 = 170;

/// Tolerance and iteration cap for iterative evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecFunAccuracy {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SpecFunAccuracy {
    fn default() -> Self {
        SpecFunAccuracy {
            rel_tol: 1e-12,
            max_iter: 200,
        }
    }
}

impl SpecFunAccuracy {
    pub fn new(rel_tol: f64, max_iter: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol < 1e-3) {
            return Err(Error::invalid(
                "rel_tol",
                format!("{rel_tol} not in (0, 1e-3)"),
            ));
        }
        if max_iter < 10 {
            return Err(Error::invalid("max_iter", format!("{max_iter} < 10")));
        }
        Ok(SpecFunAccuracy { rel_tol, max_iter })
    }
}

/// `Γ(n) = (n-1)!` for `1 <= n <= 170`.
pub fn gamma_int(n: u32) -> Result<f64> {
    if n == 0 || n > GAMMA_INT_MAX {
        return Err(Error::domain(
            "gamma_int",
            format!("n = {n} outside [1, {GAMMA_INT_MAX}]"),
        ));
    }
    Ok((1..n).fold(1.0_f64, |acc, k| acc * f64::from(k)))
}

/// `ln(n!)`, finite for every `n`.
pub(crate) fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).ln()).sum()
}

/// `e^x K_0(x)` and `e^x K_1(x)` for `x > 0`.
fn bessel_k01_scaled(x: f64, acc: &SpecFunAccuracy) -> Result<(f64, f64)> {
    if x <= 2.0 {
        let (k0, k1) = bessel_k01_series(x, acc)?;
        let ex = x.exp();
        Ok((k0 * ex, k1 * ex))
    } else {
        bessel_k01_steed(x, acc)
    }
}

// Ascending series, valid for small x where the logarithmic terms dominate.
fn bessel_k01_series(x: f64, acc: &SpecFunAccuracy) -> Result<(f64, f64)> {
    let y = 0.25 * x * x;
    let log_half = (0.5 * x).ln();
    let eps = f64::EPSILON * 0.5;

    // K0 = -(ln(x/2) + γ) I0(x) + Σ_{k≥1} H_k y^k / (k!)^2
    let mut term = 1.0;
    let mut i0 = 1.0;
    let mut harmonic_sum = 0.0;
    let mut h = 0.0;
    let mut converged = false;
    for k in 1..=acc.max_iter {
        let kf = k as f64;
        term *= y / (kf * kf);
        h += 1.0 / kf;
        i0 += term;
        harmonic_sum += term * h;
        if term < eps * i0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "K0 series did not converge at x = {x}"
        )));
    }
    let k0 = -(log_half + EULER_GAMMA) * i0 + harmonic_sum;

    // K1 = 1/x + ln(x/2) I1(x) - (x/4) Σ_{k≥0} (ψ(k+1) + ψ(k+2)) y^k / (k!(k+1)!)
    let mut term = 1.0;
    let mut sum_i = 0.0;
    let mut sum_psi = 0.0;
    let mut h_k = 0.0;
    converged = false;
    for k in 0..=acc.max_iter {
        let kf = k as f64;
        let h_k1 = h_k + 1.0 / (kf + 1.0);
        sum_i += term;
        sum_psi += (h_k + h_k1 - 2.0 * EULER_GAMMA) * term;
        if term < eps * sum_i {
            converged = true;
            break;
        }
        term *= y / ((kf + 1.0) * (kf + 2.0));
        h_k = h_k1;
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "K1 series did not converge at x = {x}"
        )));
    }
    let i1 = 0.5 * x * sum_i;
    let k1 = 1.0 / x + log_half * i1 - 0.25 * x * sum_psi;
    Ok((k0, k1))
}

// Steed's continued fraction (Temme's normalisation) for order 0, giving
// exponentially scaled K0 and K1. Converges quickly for x >= 2.
fn bessel_k01_steed(x: f64, acc: &SpecFunAccuracy) -> Result<(f64, f64)> {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    let mut converged = false;
    for i in 1..acc.max_iter.max(10) {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < f64::EPSILON * 0.5 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "Steed continued fraction did not converge at x = {x}"
        )));
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    Ok((k0, k1))
}

/// `ln K_n(x)` for every order `0..=max_order`.
///
/// Built from `K_0`, `K_1` and the forward recurrence on the ratio
/// `K_{n+1}/K_n = K_{n-1}/K_n + 2n/x`, which is stable for `K` and never
/// overflows even when `K_n(x)` itself would.
pub fn ln_bessel_k_sequence(max_order: usize, x: f64) -> Result<Vec<f64>> {
    ln_bessel_k_sequence_with(max_order, x, &SpecFunAccuracy::default())
}

pub fn ln_bessel_k_sequence_with(
    max_order: usize,
    x: f64,
    acc: &SpecFunAccuracy,
) -> Result<Vec<f64>> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "bessel_k",
            format!("x = {x} must be positive and finite"),
        ));
    }
    let (k0s, k1s) = bessel_k01_scaled(x, acc)?;
    let mut out = Vec::with_capacity(max_order + 1);
    let mut ln_k = k0s.ln() - x;
    out.push(ln_k);
    let mut ratio = k1s / k0s;
    for n in 1..=max_order {
        ln_k += ratio.ln();
        out.push(ln_k);
        ratio = 1.0 / ratio + 2.0 * n as f64 / x;
    }
    Ok(out)
}

/// `ln K_n(x)` for a single integer order; negative orders use `K_{-n} = K_n`.
pub fn ln_bessel_k_int(order: i32, x: f64) -> Result<f64> {
    let n = order.unsigned_abs() as usize;
    Ok(ln_bessel_k_sequence(n, x)?[n])
}

/// Modified Bessel function of the second kind `K_n(x)` for integer `n >= 0`
/// and `x > 0`.
///
/// Where the true value exceeds the `f64` range (tiny `x`, large `n`) the
/// result saturates at `f64::MAX`; [`ln_bessel_k_int`] stays finite there.
pub fn bessel_k_int(order: i32, x: f64) -> Result<f64> {
    if order < 0 {
        return Err(Error::domain(
            "bessel_k_int",
            format!("order {order} is negative; use K_-n = K_n"),
        ));
    }
    let v = ln_bessel_k_int(order, x)?.exp();
    Ok(if v.is_infinite() { f64::MAX } else { v })
}

/// Exponentially scaled `e^x K_n(x)`.
pub fn bessel_k_int_scaled(order: i32, x: f64) -> Result<f64> {
    if order < 0 {
        return Err(Error::domain(
            "bessel_k_int_scaled",
            format!("order {order} is negative"),
        ));
    }
    let v = (ln_bessel_k_int(order, x)? + x).exp();
    Ok(if v.is_infinite() { f64::MAX } else { v })
}

/// Branch point of the Lambert-W function, `-1/e`.
pub const LAMBERT_BRANCH_POINT: f64 = -1.0 / E;

/// Principal branch `W_0(x)` of the Lambert-W function, `x >= -1/e`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    lambert_w0_with(x, &SpecFunAccuracy::default())
}

pub fn lambert_w0_with(x: f64, acc: &SpecFunAccuracy) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("lambert_w0", "x is NaN"));
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    // Allow a few ulps of slack so that a rounded -1/e maps to the branch point.
    let slack = 4.0 * f64::EPSILON;
    if x < LAMBERT_BRANCH_POINT - slack {
        return Err(Error::domain(
            "lambert_w0",
            format!("x = {x} is below the branch point -1/e"),
        ));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let p2 = 2.0 * (E * x + 1.0);
    if p2 <= 0.0 {
        return Ok(-1.0);
    }

    let mut w = if p2 < 0.25 {
        let p = p2.sqrt();
        let series = -1.0
            + p * (1.0
                + p * (-1.0 / 3.0
                    + p * (11.0 / 72.0
                        + p * (-43.0 / 540.0 + p * (769.0 / 17280.0 + p * (-221.0 / 8505.0))))));
        if p < 1e-3 {
            return Ok(series);
        }
        series
    } else if x < 3.0 {
        let l = x.ln_1p();
        l * (1.0 - (l.ln_1p()) / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };

    // Halley iteration on f(w) = w e^w - x.
    for _ in 0..acc.max_iter {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let dw = f / denom;
        w -= dw;
        if dw.abs() <= acc.rel_tol * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_small_values() {
        assert_eq!(gamma_int(1).unwrap(), 1.0);
        assert_eq!(gamma_int(5).unwrap(), 24.0);
        let direct: u64 = (1..=12u64).product();
        assert_eq!(gamma_int(13).unwrap(), direct as f64);
        assert_eq!(direct, 479_001_600);
    }

    #[test]
    fn gamma_out_of_range() {
        assert!(matches!(gamma_int(0), Err(Error::Domain { .. })));
        let err = gamma_int(171).unwrap_err().to_string();
        assert!(err.contains("170"), "{err}");
        assert!(gamma_int(170).unwrap().is_finite());
    }

    #[test]
    fn gamma_recurrence() {
        for n in 1..170u32 {
            let lhs = gamma_int(n + 1).unwrap();
            let rhs = f64::from(n) * gamma_int(n).unwrap();
            assert!(((lhs - rhs) / lhs).abs() < 1e-15, "n = {n}");
        }
    }

    #[test]
    fn ln_factorial_matches_gamma() {
        for n in 0..60u32 {
            let g = gamma_int(n + 1).unwrap().ln();
            assert!((ln_factorial(n) - g).abs() < 1e-12 * g.abs().max(1.0));
        }
    }

    #[test]
    fn bessel_reference_points() {
        // Reference values of K0(1), K1(1).
        assert!((bessel_k_int(0, 1.0).unwrap() - 0.421_024_438_240_708_3).abs() < 1e-14);
        assert!((bessel_k_int(1, 1.0).unwrap() - 0.601_907_230_197_234_6).abs() < 1e-14);
    }

    #[test]
    fn bessel_regimes_meet_at_crossover() {
        let acc = SpecFunAccuracy::default();
        let (a0, a1) = bessel_k01_series(2.0, &acc).unwrap();
        let (b0, b1) = bessel_k01_steed(2.0, &acc).unwrap();
        let e2 = (-2.0f64).exp();
        assert!((a0 - b0 * e2).abs() / a0 < 1e-13);
        assert!((a1 - b1 * e2).abs() / a1 < 1e-13);
    }

    #[test]
    fn bessel_domain_errors() {
        assert!(bessel_k_int(0, 0.0).is_err());
        assert!(bessel_k_int(0, -1.0).is_err());
        assert!(bessel_k_int(-3, 1.0).is_err());
    }

    #[test]
    fn bessel_negative_order_symmetry() {
        for &x in &[0.05, 0.7, 3.0, 25.0] {
            assert_eq!(
                ln_bessel_k_int(-3, x).unwrap(),
                ln_bessel_k_int(3, x).unwrap()
            );
        }
    }

    #[test]
    fn bessel_saturates_instead_of_overflowing() {
        let v = bessel_k_int(60, 1e-6).unwrap();
        assert_eq!(v, f64::MAX);
        assert!(ln_bessel_k_int(60, 1e-6).unwrap().is_finite());
    }

    #[test]
    fn lambert_trivial_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(lambert_w0(LAMBERT_BRANCH_POINT).unwrap(), -1.0);
        assert!(lambert_w0(-0.4).is_err());
    }

    #[test]
    fn accuracy_invariants() {
        assert!(SpecFunAccuracy::new(1e-12, 200).is_ok());
        assert!(SpecFunAccuracy::new(0.0, 200).is_err());
        assert!(SpecFunAccuracy::new(1e-2, 200).is_err());
        assert!(SpecFunAccuracy::new(1e-12, 5).is_err());
    }
}
