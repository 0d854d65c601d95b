//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

mod common;

use std::time::Instant;

use ehuav_core::allocation::*;
use ehuav_core::channel::{make_link_budgets, sample_realization, trial_rng, NetworkConfig};
use ehuav_core::experiments::*;
use ehuav_core::outage::*;
use ehuav_core::specfun::{bessel_k_int, lambert_w0, LAMBERT_BRANCH_POINT};
use rayon::prelude::*;

type Verdict = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn reference(pairs: usize, altitude: f64) -> NetworkConfig {
    let mut c = NetworkConfig::reference(pairs);
    c.max_altitude_m = altitude;
    c
}

fn draws(config: &NetworkConfig, n: u64, seed: u64) -> Vec<Vec<f64>> {
    let budgets = make_link_budgets(config, &place_nodes(config));
    (0..n)
        .map(|t| sample_realization(&budgets, config, &mut trial_rng(seed, t)).gamma)
        .collect()
}

/// Closed form against 10^6 simulated blocks, equal bandwidth, six pairs.
fn analysis_matches_simulation() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for alt in [30.0, 60.0, 90.0, 120.0, 150.0] {
        let c = reference(6, alt);
        let budgets = make_link_budgets(&c, &place_nodes(&c));
        let alloc = equal_bandwidth_allocation(&c).map_err(err)?;
        let analytic = outage_closed_form(&alloc, &budgets, &c).map_err(err)?;
        let mc = outage_monte_carlo(&alloc, &budgets, &c, 1_000_000, 2024).map_err(err)?;
        let diff = (analytic - mc.p_out).abs();
        let pass = diff <= 3.0 * mc.std_err;
        ok &= pass;
        // diagnostic only: the binomial SE implied by the closed form itself
        let null_se = (analytic * (1.0 - analytic) / mc.trials as f64).sqrt();
        parts.push(format!(
            "{alt} m: analytic {analytic:.17} sim {} se {:.2e} |d| {diff:.2e} {} (null-se {null_se:.1e})",
            mc.p_out,
            mc.std_err,
            if pass { "ok" } else { "X" }
        ));
    }
    Ok((ok, parts.join("; ")))
}

/// Lambert-W time split against a golden-section minimiser of the threshold.
fn closed_form_split_is_optimal() -> Verdict {
    let mut worst = 0.0f64;
    for k in 1..=10usize {
        for ra in [0.5, 1.0, 2.0] {
            let beta = 1.0 / k as f64;
            let oracle = common::golden_section_min(
                |t| snr_threshold(beta, t, ra, 1.0).ln(),
                1e-9,
                1.0 - 1e-9,
                1e-12,
            );
            let closed = equal_bandwidth_taf(k, ra).map_err(err)?;
            worst = worst.max((closed - oracle).abs());
        }
    }
    Ok((
        worst <= 1e-6,
        format!("max |tau* - argmin| = {worst:.2e} (limit 1e-6)"),
    ))
}

/// Iteration and min-rate orderings over K = 2..10 (shared sweep).
fn pair_sweep() -> Result<Vec<ExperimentRow>, String> {
    let mut spec = ExperimentSpec::iterations_default(&NetworkConfig::reference(2));
    spec.trials = 200;
    spec.seed = 7;
    run_iterations_and_minrate_sweep(&spec).map_err(err)
}

fn row<'a>(
    rows: &'a [ExperimentRow],
    k: usize,
    alg: Algorithm,
) -> Result<&'a ExperimentRow, String> {
    rows.iter()
        .find(|r| r.sweep_value == k as f64 && r.algorithm == alg.name())
        .ok_or_else(|| format!("missing row K={k} {alg}"))
}

fn fewer_iterations(rows: &[ExperimentRow]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 2..=10 {
        let p = row(rows, k, Algorithm::Proposed)?.mean_iters;
        let c = row(rows, k, Algorithm::Conventional)?.mean_iters;
        ok &= p < c;
        parts.push(format!("K={k} {p:.1}<{c:.1}"));
    }
    Ok((ok, parts.join(" ")))
}

fn min_rate_ordering(rows: &[ExperimentRow]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 2..=10 {
        let p = row(rows, k, Algorithm::Proposed)?.mean_min_rate_bpshz;
        let c = row(rows, k, Algorithm::Conventional)?.mean_min_rate_bpshz;
        let e = row(rows, k, Algorithm::EqualBandwidth)?.mean_min_rate_bpshz;
        ok &= p >= c && c >= e;
        parts.push(format!("K={k} {p:.3}/{c:.3}/{e:.3}"));
    }
    // per-draw dominance at ν_r = 0 on the same draws
    let mut violations = 0usize;
    let mut total = 0usize;
    for k in 2..=10 {
        let c = reference(k, 120.0);
        let eb = equal_bandwidth_allocate(k, c.required_rate).map_err(err)?;
        for gamma in draws(&c, 200, 7) {
            let p = proposed_allocate(&gamma, 1.0, c.epsilon).map_err(err)?;
            total += 1;
            if p.min_rate(&gamma, 1.0) < eb.min_rate(&gamma, 1.0) {
                violations += 1;
            }
        }
    }
    ok &= violations == 0;
    Ok((
        ok,
        format!(
            "{}; per-draw dominance violations {violations}/{total}",
            parts.join(" ")
        ),
    ))
}

// Largest min-rate drop from the grid argmax to a neighbouring grid point.
fn grid_slack(gamma: &[f64], tau: f64, beta: &[f64], grid_tau: usize, grid_beta: usize) -> f64 {
    let i = (tau * (grid_tau + 1) as f64).round() as usize;
    let units: Vec<usize> = beta
        .iter()
        .map(|b| (b * grid_beta as f64).round() as usize)
        .collect();
    let value = |i: usize, u: &[usize]| {
        let t = i as f64 / (grid_tau + 1) as f64;
        u.iter()
            .zip(gamma)
            .map(|(&a, &g)| rate(a as f64 / grid_beta as f64, t, g, 1.0))
            .fold(f64::INFINITY, f64::min)
    };
    let best = value(i, &units);
    let mut slack = 0.0f64;
    for j in [i - 1, i + 1] {
        if (1..=grid_tau).contains(&j) {
            slack = slack.max(best - value(j, &units));
        }
    }
    for from in 0..units.len() {
        for to in 0..units.len() {
            if from != to && units[from] > 1 {
                let mut u = units.clone();
                u[from] -= 1;
                u[to] += 1;
                slack = slack.max(best - value(i, &u));
            }
        }
    }
    slack
}

fn near_optimal() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [2usize, 3] {
        let c = reference(k, 120.0);
        let results: Vec<Result<(f64, f64, f64), String>> = draws(&c, 100, 11)
            .par_iter()
            .map(|gamma| {
                let p = proposed_allocate(gamma, 1.0, c.epsilon).map_err(err)?;
                let g = exhaustive_optimal(gamma, 1.0, 1000, 500).map_err(err)?;
                let rp = p.min_rate(gamma, 1.0);
                let rg = g.min_rate(gamma, 1.0);
                Ok((rp, rg, grid_slack(gamma, g.tau, &g.beta, 1000, 500)))
            })
            .collect();
        let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        let below = results.iter().filter(|(rp, rg, s)| *rp < rg - s).count();
        let shortfalls: Vec<f64> = results
            .iter()
            .map(|(rp, rg, _)| ((rg - rp) / rg).max(0.0))
            .collect();
        let mean = shortfalls.iter().sum::<f64>() / shortfalls.len() as f64;
        let worst = shortfalls.iter().cloned().fold(0.0, f64::max);
        ok &= below == 0 && mean <= 1e-3;
        parts.push(format!(
            "K={k}: below grid-slack {below}/100, mean shortfall {mean:.2e}, worst {worst:.2e}"
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn altitude_minimum() -> Verdict {
    let alts: Vec<f64> = (3..=15).map(|i| 10.0 * i as f64).collect();
    let curve = equal_bandwidth_altitude_curve(&reference(6, 120.0), &alts).map_err(err)?;
    let (ok, detail) = interior_minimum(&curve, (70.0, 110.0));
    let trace: Vec<String> = curve
        .iter()
        .map(|p| format!("{}:{:.1}", p.0, p.2 / std::f64::consts::LN_10))
        .collect();
    Ok((ok, format!("{detail}; log10 success {}", trace.join(" "))))
}

fn velocity_gap() -> Verdict {
    let mut spec = ExperimentSpec::outage_default(&NetworkConfig::reference(6));
    spec.sweep = Sweep::Altitude {
        altitudes_m: vec![90.0],
        velocities_mps: vec![10.0, 20.0, 40.0],
    };
    spec.algorithms = vec![Algorithm::Proposed, Algorithm::Conventional];
    spec.trials = 2000;
    let rows = run_outage_altitude_sweep(&spec).map_err(err)?;
    let mut gaps = Vec::new();
    for v in [10.0, 20.0, 40.0] {
        let get = |a: Algorithm| {
            rows.iter()
                .find(|r| r.sweep_param == altitude_param(v) && r.algorithm == a.name())
                .map(|r| r.outage_empirical)
                .ok_or_else(|| format!("missing {a} at {v} m/s"))
        };
        gaps.push((v, get(Algorithm::Proposed)?, get(Algorithm::Conventional)?));
    }
    let ok = gaps.windows(2).all(|w| w[1].2 - w[1].1 >= w[0].2 - w[0].1);
    let detail: Vec<String> = gaps
        .iter()
        .map(|(v, p, c)| format!("v={v}: proposed {p} conventional {c} gap {}", c - p))
        .collect();
    Ok((ok, detail.join("; ")))
}

fn property_suites() -> Verdict {
    let mut failures = Vec::new();
    let mut notes = Vec::new();

    // Lambert-W identity
    let mut xs: Vec<f64> = (0..=2000)
        .map(|i| LAMBERT_BRANCH_POINT * (1.0 - i as f64 / 2000.0))
        .collect();
    xs.extend((0..=2000).map(|i| 10f64.powf(-12.0 + 24.0 * i as f64 / 2000.0)));
    let mut worst = 0.0f64;
    for x in xs {
        let w = lambert_w0(x).map_err(err)?;
        let r = if x == 0.0 {
            w.abs()
        } else {
            ((w * w.exp() - x) / x).abs()
        };
        worst = worst.max(r);
    }
    notes.push(format!("lambert {worst:.1e}"));
    if worst > 1e-12 {
        failures.push("lambert identity");
    }

    // Bessel K against quadrature
    let mut worst = 0.0f64;
    for i in 0..=60 {
        let x = (0.01f64.ln() + (50f64.ln() - 0.01f64.ln()) * i as f64 / 60.0).exp();
        for n in 0..=24u32 {
            let q = common::bessel_k_quad(n, x);
            let k = bessel_k_int(n as i32, x).map_err(err)?;
            worst = worst.max(((k - q) / q).abs());
        }
    }
    notes.push(format!("bessel {worst:.1e}"));
    if worst > 1e-9 {
        failures.push("bessel vs quadrature");
    }

    // share conservation and terminal spread
    let c6 = reference(6, 120.0);
    let mut drift = 0.0f64;
    let mut spread = 0.0f64;
    for gamma in draws(&c6, 50, 3) {
        let mut beta = vec![1.0 / 6.0; 6];
        for _ in 0..10_000 {
            phase2_step(&mut beta, 0.3, &gamma, 1.0);
        }
        drift = drift.max((beta.iter().sum::<f64>() - 1.0).abs());
        let mut gaps = Vec::new();
        let (_, _) = phase2_baf_traced(
            0.3,
            &gamma,
            1.0,
            1e-4,
            &[1.0 / 6.0; 6],
            default_phase2_cap(6, 1e-4),
            Some(&mut gaps),
        )
        .map_err(err)?;
        spread = spread.max(*gaps.last().unwrap());
    }
    notes.push(format!(
        "share drift {drift:.1e}, terminal spread {spread:.1e}"
    ));
    if drift > 1e-12 {
        failures.push("share conservation");
    }
    if spread > 1e-4 {
        failures.push("terminal spread");
    }

    // tau-derivative against finite differences
    let mut worst = 0.0f64;
    for gamma in draws(&reference(5, 100.0), 50, 4) {
        let beta = vec![0.2; 5];
        let alloc = |t: f64| Allocation {
            tau: t,
            beta: beta.clone(),
            nu_r: 0.0,
            nu_c: 1.0,
        };
        for tau in [0.05, 0.2, 0.4, 0.6, 0.8, 0.95] {
            let h = 1e-5;
            if min_rate(&alloc(tau - 2.0 * h), &gamma).1
                != min_rate(&alloc(tau + 2.0 * h), &gamma).1
            {
                continue;
            }
            let fd = common::derivative(|t| min_rate(&alloc(t), &gamma).0, tau, h);
            let an = min_rate_tau_derivative(&beta, &gamma, tau, 1.0);
            worst = worst.max((an - fd).abs() / an.abs().max(1e-3));
        }
    }
    notes.push(format!("derivative {worst:.1e}"));
    if worst > 1e-4 {
        failures.push("derivative vs finite differences");
    }

    // sampled gain against the closed-form CDF
    let budgets = make_link_budgets(&c6, &place_nodes(&c6));
    let n = 1_000_000u64;
    for k in [0usize, 5] {
        let b = budgets[k];
        let mut xs: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|t| sample_realization(&budgets, &c6, &mut trial_rng(99, t)).gamma[k])
            .collect();
        let d = common::ks_statistic(&mut xs, |x| {
            gamma_product_cdf(
                x,
                &b,
                c6.m_h[k],
                c6.gcs_antennas,
                c6.m_g[k],
                c6.grs_antennas,
            )
            .unwrap_or(f64::NAN)
        });
        notes.push(format!("KS uav{} D={d:.2e}", k + 1));
        if !(d < common::ks_critical_99(n as usize)) {
            failures.push("KS test");
        }
    }

    let ok = failures.is_empty();
    let mut detail = notes.join(", ");
    if !ok {
        detail = format!("failed: {}; {detail}", failures.join(", "));
    }
    Ok((ok, detail))
}

fn report(n: usize, name: &str, verdict: Verdict, started: Instant) -> bool {
    let (ok, detail) = verdict.unwrap_or_else(|e| (false, format!("error: {e}")));
    println!(
        "[{}] criterion {n}: {name} ({:.1}s) -- {detail}",
        if ok { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    ok
}

fn main() {
    let mut all = true;

    let t = Instant::now();
    all &= report(
        1,
        "closed-form outage matches simulation",
        analysis_matches_simulation(),
        t,
    );

    let t = Instant::now();
    all &= report(
        2,
        "Lambert-W time split minimises the threshold",
        closed_form_split_is_optimal(),
        t,
    );

    let t = Instant::now();
    match pair_sweep() {
        Ok(rows) => {
            all &= report(
                3,
                "proposed needs fewer iterations",
                fewer_iterations(&rows),
                t,
            );
            let t = Instant::now();
            all &= report(
                4,
                "min-rate ordering and per-draw dominance",
                min_rate_ordering(&rows),
                t,
            );
        }
        Err(e) => {
            all &= report(3, "proposed needs fewer iterations", Err(e.clone()), t);
            all &= report(4, "min-rate ordering and per-draw dominance", Err(e), t);
        }
    }

    let t = Instant::now();
    all &= report(5, "proposed is near the grid optimum", near_optimal(), t);

    let t = Instant::now();
    all &= report(
        6,
        "outage has an interior minimum in altitude",
        altitude_minimum(),
        t,
    );

    let t = Instant::now();
    all &= report(7, "outage gap widens with velocity", velocity_gap(), t);

    let t = Instant::now();
    all &= report(8, "property suites", property_suites(), t);

    if !all {
        std::process::exit(1);
    }
}
