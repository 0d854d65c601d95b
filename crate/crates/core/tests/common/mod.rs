//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use ehuav_core::channel::{make_link_budgets, LinkBudget, NetworkConfig};
use ehuav_core::experiments::place_nodes;

/// `K_n(x) = ∫_0^∞ exp(-x cosh t) cosh(n t) dt` by the trapezoid rule,
/// which converges geometrically for this analytic, rapidly decaying integrand.
pub fn bessel_k_quad(n: u32, x: f64) -> f64 {
    let h = 2e-3;
    let nf = n as f64;
    let mut sum = 0.5 * (-x).exp();
    let mut t: f64 = h;
    loop {
        let log_term = -x * t.cosh() + nf * t + (0.5 + 0.5 * (-2.0 * nf * t).exp()).ln();
        let term = log_term.exp();
        sum += term;
        // past the peak and negligible
        if x * t.sinh() > nf && term < sum * 1e-18 {
            break;
        }
        t += h;
    }
    sum * h
}

/// `Pr[Gamma(shape, 1) <= z]` for integer shape.
pub fn erlang_cdf(shape: u32, z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    // 1 - e^{-z} Σ_{j<shape} z^j / j!
    let mut term = 1.0;
    let mut acc = 1.0;
    for j in 1..shape {
        term *= z / j as f64;
        acc += term;
    }
    let tail = (-z).exp() * acc;
    if tail < 0.5 {
        1.0 - tail
    } else {
        // lower incomplete series: e^{-z} Σ_{j>=shape} z^j / j!
        let mut term = (-z + shape as f64 * z.ln() - ln_gamma_int(shape + 1)).exp();
        let mut s = term;
        let mut j = shape + 1;
        while term > s * 1e-17 {
            term *= z / j as f64;
            s += term;
            j += 1;
        }
        s
    }
}

pub fn ln_gamma_int(n: u32) -> f64 {
    (1..n).map(|i| (i as f64).ln()).sum()
}

/// CDF of `ρ G_h G_g` by quadrature over `G_h` of the Erlang CDF of `G_g`.
pub fn gamma_product_cdf_quad(x: f64, scale: f64, a: u32, b: u32) -> f64 {
    // s = e^t, G_h / λ = s, density s^{a-1} e^{-s} / Γ(a); ds = s dt
    let y = x / scale;
    let h = 2e-3;
    let lg = ln_gamma_int(a);
    let mut sum = 0.0;
    let mut t: f64 = -60.0;
    while t < 6.0 {
        let s = t.exp();
        let w = (a as f64 * t - s - lg).exp();
        sum += w * erlang_cdf(b, y / s);
        t += h;
    }
    sum * h
}

pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Fourth-order central difference.
pub fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 99% critical value of the two-sided KS statistic.
pub fn ks_critical_99(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Reference scenario with `pairs` UAVs and maximum altitude `altitude`.
pub fn scenario(pairs: usize, altitude: f64) -> (NetworkConfig, Vec<LinkBudget>) {
    let mut c = NetworkConfig::reference(pairs);
    c.max_altitude_m = altitude;
    let b = make_link_budgets(&c, &place_nodes(&c));
    (c, b)
}

/// `Pr[Gamma(shape, 1) > z]` for integer shape, accurate in the far tail.
pub fn erlang_sf(shape: u32, z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    (0..shape)
        .map(|j| (-z + j as f64 * z.ln() - ln_gamma_int(j + 1)).exp())
        .sum()
}

/// Survival function of `ρ G_h G_g` by the same quadrature as
/// [`gamma_product_cdf_quad`].
pub fn gamma_product_sf_quad(x: f64, scale: f64, a: u32, b: u32) -> f64 {
    let y = x / scale;
    let h = 1e-3;
    let lg = ln_gamma_int(a);
    let mut sum = 0.0;
    let mut t: f64 = -60.0;
    while t < 8.0 {
        let s = t.exp();
        let w = (a as f64 * t - s - lg).exp();
        sum += w * erlang_sf(b, y / s);
        t += h;
    }
    sum * h
}

fn bisect(mut lo: f64, mut hi: f64, increasing: impl Fn(f64) -> f64, target: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if increasing(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Best common rate at time split `tau`: nested bisection on the rate and
/// on each UAV's share.
pub fn common_rate_at(gamma: &[f64], tau: f64) -> f64 {
    use ehuav_core::outage::rate;
    let total_share = |r: f64| -> f64 {
        gamma
            .iter()
            .map(|&g| bisect(0.0, 1.0, |b| rate(b, tau, g, 1.0), r))
            .sum()
    };
    let r_max = gamma
        .iter()
        .map(|&g| rate(1.0, tau, g, 1.0))
        .fold(f64::INFINITY, f64::min);
    bisect(0.0, r_max, total_share, 1.0)
}

/// Max-min rate over all `(τ, β)` at `ν_c = 1`.
pub fn max_min_rate(gamma: &[f64]) -> f64 {
    let tau = golden_section_min(|t| -common_rate_at(gamma, t), 1e-9, 1.0 - 1e-9, 1e-10);
    common_rate_at(gamma, tau)
}

/// Reference draws: `n` channel realizations from the reference scenario.
pub fn draws(pairs: usize, altitude: f64, n: u64, seed: u64) -> Vec<Vec<f64>> {
    use ehuav_core::channel::{sample_realization, trial_rng};
    let (c, b) = scenario(pairs, altitude);
    (0..n)
        .map(|t| sample_realization(&b, &c, &mut trial_rng(seed, t)).gamma)
        .collect()
}
