//! Per-UAV rate, SNR threshold, closed-form outage probability and a
//! Monte-Carlo outage estimator.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::channel::{sample_realization, trial_rng, LinkBudget, NetworkConfig};
use crate::error::{Error, Result};
use crate::specfun::{ln_bessel_k_sequence, ln_factorial};

/// Tolerance on `Σ β_k = 1`.
pub const BETA_SUM_TOL: f64 = 1e-12;

/// A time split `τ`, per-UAV bandwidth shares `β` and the block fraction
/// `ν_r` spent in the resource-allocation phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub tau: f64,
    pub beta: Vec<f64>,
    pub nu_r: f64,
    pub nu_c: f64,
}

impl Allocation {
    pub fn new(tau: f64, beta: Vec<f64>, nu_r: f64) -> Result<Self> {
        let alloc = Allocation {
            tau,
            beta,
            nu_r,
            nu_c: 1.0 - nu_r,
        };
        alloc.validate()?;
        Ok(alloc)
    }

    /// Equal shares `1/K`.
    pub fn equal(pairs: usize, tau: f64, nu_r: f64) -> Result<Self> {
        if pairs == 0 {
            return Err(Error::invalid("beta", "K must be >= 1"));
        }
        Allocation::new(tau, vec![1.0 / pairs as f64; pairs], nu_r)
    }

    pub fn with_nu_r(&self, nu_r: f64) -> Result<Self> {
        Allocation::new(self.tau, self.beta.clone(), nu_r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::invalid("tau", format!("{} not in (0, 1)", self.tau)));
        }
        if !(self.nu_r >= 0.0 && self.nu_r < 1.0) {
            return Err(Error::invalid(
                "nu_r",
                format!("{} not in [0, 1)", self.nu_r),
            ));
        }
        if self.nu_c != 1.0 - self.nu_r {
            return Err(Error::invalid("nu_c", "must equal 1 - nu_r"));
        }
        if self.beta.is_empty() {
            return Err(Error::invalid("beta", "empty bandwidth vector"));
        }
        for (k, b) in self.beta.iter().enumerate() {
            // β_k = 1 is only reachable with K = 1, where it is forced by the sum.
            if !(*b > 0.0 && *b <= 1.0) {
                return Err(Error::invalid(
                    "beta",
                    format!("entry {} = {b} not in (0, 1)", k + 1),
                ));
            }
        }
        let sum: f64 = self.beta.iter().sum();
        if (sum - 1.0).abs() > BETA_SUM_TOL {
            return Err(Error::invalid(
                "beta",
                format!("entries sum to {sum}, not 1"),
            ));
        }
        Ok(())
    }

    pub fn pairs(&self) -> usize {
        self.beta.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub p_out: f64,
    pub std_err: f64,
    pub trials: u64,
}

impl OutageEstimate {
    pub fn from_count(outages: u64, trials: u64) -> Self {
        let p = outages as f64 / trials as f64;
        OutageEstimate {
            p_out: p,
            std_err: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
        }
    }
}

/// Achievable rate of one UAV in bps/Hz.
pub fn rate(beta_k: f64, tau: f64, gamma_k: f64, nu_c: f64) -> f64 {
    let s = beta_k * (1.0 - tau);
    s * nu_c * (tau * gamma_k / s).ln_1p() / LN_2
}

/// Smallest per-UAV rate and its (zero-based) index; ties go to the lowest index.
pub fn min_rate(alloc: &Allocation, gamma: &[f64]) -> (f64, usize) {
    min_rate_parts(&alloc.beta, alloc.tau, gamma, alloc.nu_c)
}

pub(crate) fn min_rate_parts(beta: &[f64], tau: f64, gamma: &[f64], nu_c: f64) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (k, (&b, &g)) in beta.iter().zip(gamma).enumerate() {
        let r = rate(b, tau, g, nu_c);
        if r < best.0 {
            best = (r, k);
        }
    }
    best
}

/// Composite gain below which UAV `k` misses rate `R_a` under `(β_k, τ)`.
pub fn snr_threshold(beta_k: f64, tau: f64, required_rate: f64, nu_c: f64) -> f64 {
    let s = beta_k * (1.0 - tau);
    s / tau * (required_rate * LN_2 / (s * nu_c)).exp_m1()
}

// Neumaier's compensated sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// CDF of `γ = ρ G_h G_g` with `G_h ~ Gamma(m_h N_c, λ)` and
/// `G_g ~ Gamma(m_g N_r, μ)`, as a finite sum of Bessel-K terms.
pub fn gamma_product_cdf(
    x: f64,
    budget: &LinkBudget,
    m_h: u32,
    n_c: u32,
    m_g: u32,
    n_r: u32,
) -> Result<f64> {
    let tail = gamma_product_sf(x, budget, m_h, n_c, m_g, n_r)?;
    let f = 1.0 - tail;
    if !(-1e-9..=1.0 + 1e-9).contains(&f) {
        return Err(Error::Numeric(format!(
            "gamma-product CDF evaluated to {f} at x = {x}"
        )));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// Survival function `1 - F_γ(x)`: the Bessel-K sum itself, evaluated
/// term by term in log space and accumulated in ascending order with
/// compensation. Keeps full relative accuracy deep in the upper tail where
/// the CDF rounds to one.
pub fn gamma_product_sf(
    x: f64,
    budget: &LinkBudget,
    m_h: u32,
    n_c: u32,
    m_g: u32,
    n_r: u32,
) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(
            "gamma_product_cdf",
            format!("x = {x} must be >= 0"),
        ));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let shape_h = m_h * n_c;
    let shape_g = m_g * n_r;
    if shape_h == 0 || shape_g == 0 {
        return Err(Error::domain(
            "gamma_product_cdf",
            "gamma shapes must be >= 1",
        ));
    }
    let y = x / (budget.rho * budget.lambda * budget.mu);
    let z = 2.0 * y.sqrt();
    if !(z > 0.0) {
        return Ok(1.0);
    }
    if z.is_infinite() {
        return Ok(0.0);
    }
    let ln_y = y.ln();
    let top = shape_g as i64;
    let lowest = top - (shape_h as i64 - 1);
    let max_order = top.max(lowest.abs()) as usize;
    let ln_k = ln_bessel_k_sequence(max_order, z)?;
    let ln_prefix = 2f64.ln() - ln_factorial(shape_g - 1);

    let mut acc = CompensatedSum::default();
    for m in 0..shape_h {
        let order = (top - m as i64).unsigned_abs() as usize;
        let ln_term = ln_prefix - ln_factorial(m) + 0.5 * (m + shape_g) as f64 * ln_y + ln_k[order];
        acc.add(ln_term.exp());
    }
    let tail = acc.total();
    if !(-1e-9..=1.0 + 1e-9).contains(&tail) {
        return Err(Error::Numeric(format!(
            "gamma-product CDF evaluated to {} at x = {x}",
            1.0 - tail
        )));
    }
    Ok(tail.clamp(0.0, 1.0))
}

/// Per-UAV probabilities `Pr[R_k < R_a]` for a channel-independent allocation.
pub fn per_uav_outage(
    alloc: &Allocation,
    budgets: &[LinkBudget],
    config: &NetworkConfig,
) -> Result<Vec<f64>> {
    if budgets.len() != alloc.pairs() {
        return Err(Error::invalid(
            "budgets",
            format!("{} budgets for {} UAVs", budgets.len(), alloc.pairs()),
        ));
    }
    budgets
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let x = snr_threshold(alloc.beta[k], alloc.tau, config.required_rate, alloc.nu_c);
            gamma_product_cdf(
                x,
                b,
                config.m_h[k],
                config.gcs_antennas,
                config.m_g[k],
                config.grs_antennas,
            )
        })
        .collect()
}

/// Per-UAV probabilities `Pr[R_k >= R_a]`, accurate when they are tiny.
pub fn per_uav_success(
    alloc: &Allocation,
    budgets: &[LinkBudget],
    config: &NetworkConfig,
) -> Result<Vec<f64>> {
    if budgets.len() != alloc.pairs() {
        return Err(Error::invalid(
            "budgets",
            format!("{} budgets for {} UAVs", budgets.len(), alloc.pairs()),
        ));
    }
    budgets
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let x = snr_threshold(alloc.beta[k], alloc.tau, config.required_rate, alloc.nu_c);
            gamma_product_sf(
                x,
                b,
                config.m_h[k],
                config.gcs_antennas,
                config.m_g[k],
                config.grs_antennas,
            )
        })
        .collect()
}

/// `ln(1 - P_out)`, the log-probability that every UAV meets `R_a`.
///
/// Orders allocations or scenarios correctly even when the outage itself
/// rounds to one.
pub fn ln_success_closed_form(
    alloc: &Allocation,
    budgets: &[LinkBudget],
    config: &NetworkConfig,
) -> Result<f64> {
    Ok(per_uav_success(alloc, budgets, config)?
        .iter()
        .map(|s| s.ln())
        .sum())
}

/// Closed-form network outage `1 - Π_k (1 - F_{γ_k}(X_k))`.
pub fn outage_closed_form(
    alloc: &Allocation,
    budgets: &[LinkBudget],
    config: &NetworkConfig,
) -> Result<f64> {
    let survive: f64 = per_uav_outage(alloc, budgets, config)?
        .iter()
        .map(|p| 1.0 - p)
        .product();
    Ok(1.0 - survive)
}

/// Fraction of `trials` independent blocks whose minimum rate falls strictly
/// below `R_a`. Trial `t` draws from `trial_rng(seed, t)`, so the estimate
/// does not depend on how trials are scheduled.
pub fn outage_monte_carlo(
    alloc: &Allocation,
    budgets: &[LinkBudget],
    config: &NetworkConfig,
    trials: u64,
    seed: u64,
) -> Result<OutageEstimate> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be >= 1"));
    }
    if budgets.len() != alloc.pairs() {
        return Err(Error::invalid(
            "budgets",
            format!("{} budgets for {} UAVs", budgets.len(), alloc.pairs()),
        ));
    }
    let required = config.required_rate;
    let outages = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = trial_rng(seed, t);
            let real = sample_realization(budgets, config, &mut rng);
            min_rate(alloc, &real.gamma).0 < required
        })
        .count() as u64;
    Ok(OutageEstimate::from_count(outages, trials))
}
