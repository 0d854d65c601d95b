//! Time and bandwidth allocators for the max-min rate problem.
//!
//! Four strategies share the same objective, the smallest per-UAV rate:
//!
//! * [`equal_bandwidth_allocate`]: equal shares with the closed-form time split
//!   that minimises the per-UAV SNR threshold;
//! * [`proposed_allocate`]: derivative bisection on `τ` at equal shares, then
//!   pairwise bandwidth transfers from the fastest to the slowest UAV;
//! * [`conventional_allocate`]: nested bisection, the baseline;
//! * [`exhaustive_optimal`] / [`reference_optimal`]: the global optimum, by
//!   grid search (small `K`) or by exploiting joint concavity.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::outage::{min_rate_parts, rate, Allocation};
use crate::specfun::lambert_w0;

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub tau: f64,
    pub beta: Vec<f64>,
    /// Iterations spent on the time split (`I_τ`).
    pub iters_tau: usize,
    /// Iterations spent on the bandwidth split (`I_β`).
    pub iters_beta: usize,
    /// Per-UAV inner iterations summed over the run (conventional baseline only).
    pub inner_iters_beta: usize,
    /// Abstract operation tally used to size the resource-allocation phase.
    pub op_count: usize,
}

impl AllocationResult {
    pub fn total_iterations(&self) -> usize {
        self.iters_tau + self.iters_beta + self.inner_iters_beta
    }

    pub fn allocation(&self, nu_r: f64) -> Result<Allocation> {
        Allocation::new(self.tau, self.beta.clone(), nu_r)
    }

    pub fn min_rate(&self, gamma: &[f64], nu_c: f64) -> f64 {
        min_rate_parts(&self.beta, self.tau, gamma, nu_c).0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Proposed,
    Conventional,
    EqualBandwidth,
    Optimal,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Proposed,
        Algorithm::Conventional,
        Algorithm::EqualBandwidth,
        Algorithm::Optimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::Conventional => "conventional",
            Algorithm::EqualBandwidth => "equal_bandwidth",
            Algorithm::Optimal => "optimal",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::invalid(
                    "algorithm",
                    format!("unknown algorithm {s:?} (expected proposed, conventional, equal_bandwidth or optimal)"),
                )
            })
    }
}

fn check_inputs(gamma: &[f64], nu_c: f64, epsilon: f64) -> Result<()> {
    if gamma.is_empty() {
        return Err(Error::invalid("gamma", "no UAVs"));
    }
    if let Some(g) = gamma.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
        return Err(Error::invalid(
            "gamma",
            format!("{g} must be positive and finite"),
        ));
    }
    if !(nu_c > 0.0 && nu_c <= 1.0) {
        return Err(Error::invalid("nu_c", format!("{nu_c} not in (0, 1]")));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::invalid(
            "epsilon",
            format!("{epsilon} not in (0, 0.5)"),
        ));
    }
    Ok(())
}

/// Time split minimising the SNR threshold under equal bandwidth shares
/// (`ν_c = 1`):
/// `τ* = 1 - K R ln2 / (1 + K R ln2 + W0(-e^{-1} 2^{-K R}))`.
pub fn equal_bandwidth_taf(pairs: usize, required_rate: f64) -> Result<f64> {
    if pairs == 0 {
        return Err(Error::invalid("pairs", "K must be >= 1"));
    }
    if !(required_rate > 0.0 && required_rate.is_finite()) {
        return Err(Error::invalid(
            "required_rate",
            format!("{required_rate} must be > 0"),
        ));
    }
    let c = pairs as f64 * required_rate * LN_2;
    // -e^{-1} 2^{-KR} = -exp(-1 - c)
    let w = lambert_w0(-(-1.0 - c).exp())?;
    Ok(1.0 - c / (1.0 + c + w))
}

pub fn equal_bandwidth_allocate(pairs: usize, required_rate: f64) -> Result<AllocationResult> {
    Ok(AllocationResult {
        tau: equal_bandwidth_taf(pairs, required_rate)?,
        beta: vec![1.0 / pairs as f64; pairs],
        iters_tau: 0,
        iters_beta: 0,
        inner_iters_beta: 0,
        op_count: 0,
    })
}

/// Slope in `τ` of the minimum-rate UAV's rate, evaluated for whichever UAV
/// is slowest at `tau`.
pub fn min_rate_tau_derivative(beta: &[f64], gamma: &[f64], tau: f64, nu_c: f64) -> f64 {
    let (_, k) = min_rate_parts(beta, tau, gamma, nu_c);
    let (b, g) = (beta[k], gamma[k]);
    let s = b * (1.0 - tau);
    -b * nu_c * (tau * g / s).ln_1p() / LN_2 + nu_c * b * g / (LN_2 * (s + tau * g))
}

/// Bisection on the sign of [`min_rate_tau_derivative`] over `[ε, 1-ε]`,
/// stopping once the bracket is no wider than `ε`. Returns the last midpoint
/// and the iteration count.
pub fn phase1_taf(beta: &[f64], gamma: &[f64], nu_c: f64, epsilon: f64) -> Result<(f64, usize)> {
    check_inputs(gamma, nu_c, epsilon)?;
    if beta.len() != gamma.len() {
        return Err(Error::invalid("beta", "length differs from gamma"));
    }
    let mut lo = epsilon;
    let mut hi = 1.0 - epsilon;
    let d_lo = min_rate_tau_derivative(beta, gamma, lo, nu_c);
    let d_hi = min_rate_tau_derivative(beta, gamma, hi, nu_c);
    if !(d_lo > 0.0 && d_hi < 0.0) {
        return Err(Error::Bracket {
            lo,
            hi,
            lower: d_lo,
            upper: d_hi,
        });
    }
    let mut n = 0;
    let mut tau_n = 0.5 * (lo + hi);
    while hi - lo > epsilon {
        n += 1;
        tau_n = 0.5 * (lo + hi);
        if min_rate_tau_derivative(beta, gamma, tau_n, nu_c) > 0.0 {
            lo = tau_n;
        } else {
            hi = tau_n;
        }
    }
    Ok((tau_n, n))
}

/// Default cap on bandwidth-transfer iterations: `10 K ceil(log10(1/ε))`.
pub fn default_phase2_cap(pairs: usize, epsilon: f64) -> usize {
    10 * pairs * ((1.0 / epsilon).log10().ceil().max(1.0) as usize)
}

/// Indices and values of the slowest and fastest UAV, lowest index on ties.
fn extreme_rates(rates: &[f64]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (k, &r) in rates.iter().enumerate() {
        if r < rates[lo] {
            lo = k;
        }
        if r > rates[hi] {
            hi = k;
        }
    }
    (lo, hi)
}

/// One bandwidth transfer: move `Δ = β_max (R_max - R_min) / (2 R_max)` from
/// the fastest UAV to the slowest. Returns the rate gap before the update.
pub fn phase2_step(beta: &mut [f64], tau: f64, gamma: &[f64], nu_c: f64) -> f64 {
    let rates: Vec<f64> = beta
        .iter()
        .zip(gamma)
        .map(|(&b, &g)| rate(b, tau, g, nu_c))
        .collect();
    let (lo, hi) = extreme_rates(&rates);
    let gap = rates[hi] - rates[lo];
    if gap > 0.0 {
        let delta = beta[hi] * gap / (2.0 * rates[hi]);
        beta[lo] += delta;
        beta[hi] -= delta;
    }
    gap
}

/// Pairwise bandwidth equalisation at a fixed time split. Stops when the
/// spread between the fastest and slowest rate is at most `ε`.
pub fn phase2_baf(
    tau: f64,
    gamma: &[f64],
    nu_c: f64,
    epsilon: f64,
    beta_init: &[f64],
) -> Result<(Vec<f64>, usize)> {
    let cap = default_phase2_cap(gamma.len(), epsilon);
    phase2_baf_traced(tau, gamma, nu_c, epsilon, beta_init, cap, None)
}

/// [`phase2_baf`] with an explicit iteration cap; when `gaps` is given, the
/// rate spread before every update (and the final one) is appended to it.
pub fn phase2_baf_traced(
    tau: f64,
    gamma: &[f64],
    nu_c: f64,
    epsilon: f64,
    beta_init: &[f64],
    cap: usize,
    mut gaps: Option<&mut Vec<f64>>,
) -> Result<(Vec<f64>, usize)> {
    check_inputs(gamma, nu_c, epsilon)?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid("tau", format!("{tau} not in (0, 1)")));
    }
    Allocation::new(tau, beta_init.to_vec(), 0.0)?;
    if beta_init.len() != gamma.len() {
        return Err(Error::invalid("beta", "length differs from gamma"));
    }

    let mut beta = beta_init.to_vec();
    let mut rates: Vec<f64> = beta
        .iter()
        .zip(gamma)
        .map(|(&b, &g)| rate(b, tau, g, nu_c))
        .collect();
    let mut updates = 0;
    loop {
        let (lo, hi) = extreme_rates(&rates);
        let gap = rates[hi] - rates[lo];
        if let Some(g) = gaps.as_deref_mut() {
            g.push(gap);
        }
        if gap <= epsilon {
            break;
        }
        if updates == cap {
            return Err(Error::NonConvergence {
                algorithm: "bandwidth transfer",
                cap,
                gap,
                threshold: epsilon,
            });
        }
        let delta = beta[hi] * gap / (2.0 * rates[hi]);
        beta[lo] += delta;
        beta[hi] -= delta;
        rates[lo] = rate(beta[lo], tau, gamma[lo], nu_c);
        rates[hi] = rate(beta[hi], tau, gamma[hi], nu_c);
        updates += 1;
    }
    Ok((beta, updates))
}

/// The two-phase allocator: time split at equal shares, then bandwidth
/// transfers at that split. Cost tally `K + I_τ + I_β K`.
pub fn proposed_allocate(gamma: &[f64], nu_c: f64, epsilon: f64) -> Result<AllocationResult> {
    check_inputs(gamma, nu_c, epsilon)?;
    let k = gamma.len();
    let equal = vec![1.0 / k as f64; k];
    let (tau, iters_tau) = phase1_taf(&equal, gamma, nu_c, epsilon)?;
    let (beta, iters_beta) = phase2_baf(tau, gamma, nu_c, epsilon, &equal)?;
    Ok(AllocationResult {
        tau,
        beta,
        iters_tau,
        iters_beta,
        inner_iters_beta: 0,
        op_count: k + iters_tau + iters_beta * k,
    })
}

// Smallest share in [ε, 1-ε] (to within ε) at which UAV k reaches `target`.
fn share_for_rate(target: f64, tau: f64, gamma_k: f64, nu_c: f64, epsilon: f64) -> (f64, usize) {
    let mut lo = epsilon;
    let mut hi = 1.0 - epsilon;
    let mut n = 0;
    while hi - lo > epsilon {
        n += 1;
        let mid = 0.5 * (lo + hi);
        if rate(mid, tau, gamma_k, nu_c) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (0.5 * (lo + hi), n)
}

/// Nested-bisection baseline.
///
/// The time split comes from the same derivative bisection as
/// [`phase1_taf`], charged `K` operations per step because every rate is
/// re-evaluated. The bandwidth split bisects a common target rate `R`; for
/// each candidate every UAV's share `β_k(R)` is itself found by bisection,
/// and `R` is feasible when `Σ β_k(R) <= 1`. The shares at the final
/// feasible target are normalised to sum to one. Cost tally
/// `I_τ K + Σ I_{β_k}`.
pub fn conventional_allocate(gamma: &[f64], nu_c: f64, epsilon: f64) -> Result<AllocationResult> {
    check_inputs(gamma, nu_c, epsilon)?;
    let k = gamma.len();
    let equal = vec![1.0 / k as f64; k];
    let (tau, iters_tau) = phase1_taf(&equal, gamma, nu_c, epsilon)?;
    if k == 1 {
        return Ok(AllocationResult {
            tau,
            beta: vec![1.0],
            iters_tau,
            iters_beta: 0,
            inner_iters_beta: 0,
            op_count: iters_tau,
        });
    }

    let mut inner = 0;
    let shares = |target: f64, inner: &mut usize| -> Vec<f64> {
        gamma
            .iter()
            .map(|&g| {
                let (b, n) = share_for_rate(target, tau, g, nu_c, epsilon);
                *inner += n;
                b
            })
            .collect()
    };

    let mut r_lo = 0.0;
    let mut r_hi = gamma
        .iter()
        .map(|&g| rate(1.0 - epsilon, tau, g, nu_c))
        .fold(f64::INFINITY, f64::min);
    let cap = 64 + default_phase2_cap(k, epsilon);
    let mut iters_beta = 0;
    while r_hi - r_lo > epsilon {
        if iters_beta == cap {
            return Err(Error::NonConvergence {
                algorithm: "rate bisection",
                cap,
                gap: r_hi - r_lo,
                threshold: epsilon,
            });
        }
        iters_beta += 1;
        let target = 0.5 * (r_lo + r_hi);
        let total: f64 = shares(target, &mut inner).iter().sum();
        if total <= 1.0 {
            r_lo = target;
        } else {
            r_hi = target;
        }
    }
    let mut beta = shares(r_lo, &mut inner);
    let total: f64 = beta.iter().sum();
    beta.iter_mut().for_each(|b| *b /= total);
    Ok(AllocationResult {
        tau,
        beta,
        iters_tau,
        iters_beta,
        inner_iters_beta: inner,
        op_count: iters_tau * k + inner,
    })
}

/// Largest `K` accepted by [`exhaustive_optimal`].
pub const EXHAUSTIVE_MAX_PAIRS: usize = 3;

/// Grid search over `τ_i = i/(grid_tau+1)` and all shares that are positive
/// multiples of `1/grid_beta`. Ties keep the first point visited.
pub fn exhaustive_optimal(
    gamma: &[f64],
    nu_c: f64,
    grid_tau: usize,
    grid_beta: usize,
) -> Result<AllocationResult> {
    let k = gamma.len();
    if k > EXHAUSTIVE_MAX_PAIRS {
        return Err(Error::Capability(format!(
            "exhaustive search supports K <= {EXHAUSTIVE_MAX_PAIRS}, got K = {k}"
        )));
    }
    check_inputs(gamma, nu_c, 0.25)?;
    if grid_tau == 0 || grid_beta < k {
        return Err(Error::invalid(
            "grid",
            format!("need grid_tau >= 1 and grid_beta >= K (got {grid_tau}, {grid_beta})"),
        ));
    }
    let n = grid_beta;
    let step = 1.0 / n as f64;
    // Largest share index any UAV can hold when the others keep one step each.
    let top = n - (k - 1);
    let compositions = match k {
        1 => 1,
        2 => n - 1,
        _ => (n - 1) * (n - 2) / 2,
    };

    let mut best = (f64::NEG_INFINITY, 0.0, vec![0usize; k]);
    let mut table = vec![vec![0.0; top + 1]; k];
    for i in 1..=grid_tau {
        let tau = i as f64 / (grid_tau + 1) as f64;
        for (row, &g) in table.iter_mut().zip(gamma) {
            for (j, slot) in row.iter_mut().enumerate().skip(1) {
                *slot = rate(j as f64 * step, tau, g, nu_c);
            }
        }
        match k {
            1 => {
                let v = table[0][n];
                if v > best.0 {
                    best = (v, tau, vec![n]);
                }
            }
            2 => {
                for a in 1..n {
                    let v = table[0][a].min(table[1][n - a]);
                    if v > best.0 {
                        best = (v, tau, vec![a, n - a]);
                    }
                }
            }
            _ => {
                for a in 1..n - 1 {
                    let ra = table[0][a];
                    if ra <= best.0 {
                        // min(...) cannot beat the incumbent for this a.
                        continue;
                    }
                    for b in 1..n - a {
                        let v = ra.min(table[1][b]).min(table[2][n - a - b]);
                        if v > best.0 {
                            best = (v, tau, vec![a, b, n - a - b]);
                        }
                    }
                }
            }
        }
    }
    let (_, tau, parts) = best;
    Ok(AllocationResult {
        tau,
        beta: parts.iter().map(|&p| p as f64 * step).collect(),
        iters_tau: grid_tau,
        iters_beta: compositions,
        inner_iters_beta: 0,
        op_count: grid_tau * compositions * k,
    })
}

// d R_k / d β_k
fn rate_beta_slope(beta_k: f64, tau: f64, gamma_k: f64, nu_c: f64) -> f64 {
    let u = tau * gamma_k / (beta_k * (1.0 - tau));
    (1.0 - tau) * nu_c * (u.ln_1p() - u / (1.0 + u)) / LN_2
}

// Share at which UAV k attains `target` (bracketed Newton; the rate is
// concave and increasing in its share). Returns (share, iterations).
fn invert_rate(target: f64, tau: f64, gamma_k: f64, nu_c: f64) -> (f64, usize) {
    let f = |b: f64| rate(b, tau, gamma_k, nu_c) - target;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    if f(hi) <= 0.0 {
        return (1.0, 0);
    }
    let mut b = hi;
    let mut fb = f(b);
    for it in 1..=200 {
        let slope = rate_beta_slope(b, tau, gamma_k, nu_c);
        let mut next = b - fb / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - b).abs() <= 1e-15 * b {
            return (next, it);
        }
        b = next;
        fb = f(b);
        if fb > 0.0 {
            hi = b;
        } else {
            lo = b;
        }
        if fb == 0.0 || hi - lo <= 1e-16 * hi {
            return (b, it);
        }
    }
    (b, 200)
}

// Equal-rate shares at a fixed split: the common rate R with Σ β_k(R) = 1.
// Σ β_k(R) is convex and increasing in R, so Newton started at the largest
// admissible R decreases monotonically onto the root.
fn equal_rate_shares(
    tau: f64,
    gamma: &[f64],
    nu_c: f64,
    counts: &mut (usize, usize),
) -> (f64, Vec<f64>) {
    if gamma.len() == 1 {
        return (rate(1.0, tau, gamma[0], nu_c), vec![1.0]);
    }
    let mut r = gamma
        .iter()
        .map(|&g| rate(1.0, tau, g, nu_c))
        .fold(f64::INFINITY, f64::min);
    let mut shares = vec![0.0; gamma.len()];
    for _ in 0..100 {
        counts.0 += 1;
        let mut total = 0.0;
        let mut slope = 0.0;
        for (s, &g) in shares.iter_mut().zip(gamma) {
            let (b, it) = invert_rate(r, tau, g, nu_c);
            counts.1 += it;
            *s = b;
            total += b;
            slope += 1.0 / rate_beta_slope(b, tau, g, nu_c);
        }
        let step = (total - 1.0) / slope;
        if step.abs() <= 1e-15 * r || step <= 0.0 {
            break;
        }
        r -= step;
    }
    let total: f64 = shares.iter().sum();
    shares.iter_mut().for_each(|b| *b /= total);
    let common = min_rate_parts(&shares, tau, gamma, nu_c).0;
    (common, shares)
}

/// Global max-min optimum for any `K`.
///
/// With `b_k = β_k (1-τ)` the rates are perspectives of `log(1 + τγ_k)`,
/// hence jointly concave, and `Σ b_k = 1 - τ` is affine; the best common
/// rate is therefore concave in `τ`. A golden-section search over `τ`
/// (to width `tol`) wraps an exact equal-rate solve for the shares.
pub fn reference_optimal(gamma: &[f64], nu_c: f64, tol: f64) -> Result<AllocationResult> {
    check_inputs(gamma, nu_c, 0.25)?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("{tol} must be > 0")));
    }
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut counts = (0usize, 0usize);
    let value =
        |tau: f64, counts: &mut (usize, usize)| equal_rate_shares(tau, gamma, nu_c, counts).0;

    let (mut a, mut b) = (1e-12, 1.0 - 1e-12);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = value(x1, &mut counts);
    let mut f2 = value(x2, &mut counts);
    let mut iters = 0;
    while b - a > tol && iters < 200 {
        iters += 1;
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = value(x2, &mut counts);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = value(x1, &mut counts);
        }
    }
    let tau = if f1 >= f2 { x1 } else { x2 };
    let (_, beta) = equal_rate_shares(tau, gamma, nu_c, &mut counts);
    Ok(AllocationResult {
        tau,
        beta,
        iters_tau: iters,
        iters_beta: counts.0,
        inner_iters_beta: counts.1,
        op_count: iters + counts.1,
    })
}

/// Dispatch by name. `Optimal` is the grid search here (`K <= 3`) with
/// a 1000-point `τ` grid and shares in steps of 1/500.
pub fn allocate(
    algorithm: Algorithm,
    gamma: &[f64],
    nu_c: f64,
    epsilon: f64,
    required_rate: f64,
) -> Result<AllocationResult> {
    match algorithm {
        Algorithm::Proposed => proposed_allocate(gamma, nu_c, epsilon),
        Algorithm::Conventional => conventional_allocate(gamma, nu_c, epsilon),
        Algorithm::EqualBandwidth => equal_bandwidth_allocate(gamma.len(), required_rate),
        Algorithm::Optimal => exhaustive_optimal(gamma, nu_c, 1000, 500),
    }
}
