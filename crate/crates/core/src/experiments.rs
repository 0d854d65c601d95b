//! Monte-Carlo sweeps behind the iteration/min-rate and outage/altitude studies.
//!
//! Every allocator runs once per channel draw at `ν_c = 1`; the RAP penalty
//! is applied afterwards, which is exact because rates scale linearly with
//! `ν_c`. All algorithms at a sweep point see the same draws, and trial `t`
//! always uses `trial_rng(seed, t)`, so results do not depend on the thread
//! count.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::allocation::{
    conventional_allocate, equal_bandwidth_allocate, proposed_allocate, reference_optimal,
    Algorithm, AllocationResult,
};
use crate::channel::{
    make_link_budgets, sample_realization, trial_rng, LinkGeometry, NetworkConfig,
};
use crate::outage::{ln_success_closed_form, outage_closed_form, Allocation, OutageEstimate};
use crate::{Error, Result};

/// Upper guard keeping `ν_r` strictly below one.
pub const RAP_GUARD: f64 = 1e-6;

/// Default cost of one allocation operation, in seconds.
///
/// Chosen so that at 20 m/s and six pairs the conventional allocator spends
/// roughly a tenth of the block in the RAP.
pub const DEFAULT_T_OP: f64 = 0.5e-6;

/// Golden-section width used for the `optimal` curves.
const OPTIMAL_TOL: f64 = 1e-9;

/// Channel coherence time `T = c / (V f_c)`.
pub fn block_time(max_velocity: f64, carrier_hz: f64, speed_of_light: f64) -> f64 {
    speed_of_light / (max_velocity * carrier_hz)
}

/// Normalized RAP duration `min(op_count t_op / T, 1 - δ)`.
pub fn rap_fraction(op_count: usize, t_op: f64, block_time: f64) -> f64 {
    (op_count as f64 * t_op / block_time).min(1.0 - RAP_GUARD)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingModel {
    /// Seconds per abstract allocation operation.
    pub t_op: f64,
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel { t_op: DEFAULT_T_OP }
    }
}

impl TimingModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_op >= 0.0 && self.t_op.is_finite()) {
            return Err(Error::invalid(
                "t_op",
                format!("{} must be finite and >= 0", self.t_op),
            ));
        }
        Ok(())
    }

    pub fn block_time(&self, config: &NetworkConfig) -> f64 {
        block_time(
            config.max_velocity_mps,
            config.carrier_hz,
            config.speed_of_light,
        )
    }

    /// `ν_r` charged to an algorithm; `optimal` is free by convention.
    pub fn nu_r(&self, algorithm: Algorithm, op_count: usize, config: &NetworkConfig) -> f64 {
        match algorithm {
            Algorithm::Optimal => 0.0,
            _ => rap_fraction(op_count, self.t_op, self.block_time(config)),
        }
    }
}

/// Evenly spaced deployment: UAV `k` sits `d̂ k/K` from its GCS and
/// `d̂ (1 - k/K)` from the GRS, at altitude `Â k/K`.
pub fn place_nodes(config: &NetworkConfig) -> Vec<LinkGeometry> {
    let k_total = config.pairs as f64;
    (1..=config.pairs)
        .map(|k| {
            let frac = k as f64 / k_total;
            let d_h = config.max_horizontal_m * frac;
            LinkGeometry {
                d_h,
                d_g: config.max_horizontal_m - d_h,
                altitude: config.max_altitude_m * frac,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Number of GCS-UAV pairs.
    Pairs(Vec<usize>),
    /// Maximum altitude, repeated for each maximum velocity.
    Altitude {
        altitudes_m: Vec<f64>,
        velocities_mps: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: NetworkConfig,
    pub sweep: Sweep,
    pub trials: u64,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub timing: TimingModel,
}

impl ExperimentSpec {
    /// Pairs 2..=10 at 120 m and 20 m/s.
    pub fn iterations_default(base: &NetworkConfig) -> Self {
        let mut scenario = base.clone();
        scenario.max_altitude_m = 120.0;
        scenario.max_velocity_mps = 20.0;
        ExperimentSpec {
            scenario,
            sweep: Sweep::Pairs((2..=10).collect()),
            trials: 200,
            seed: 1,
            algorithms: vec![
                Algorithm::Proposed,
                Algorithm::Conventional,
                Algorithm::EqualBandwidth,
            ],
            timing: TimingModel::default(),
        }
    }

    /// Six pairs, altitude 30..=150 m in steps of 10, velocities 10/20/40 m/s.
    pub fn outage_default(base: &NetworkConfig) -> Self {
        ExperimentSpec {
            scenario: base.with_pairs(6),
            sweep: Sweep::Altitude {
                altitudes_m: (3..=15).map(|i| 10.0 * i as f64).collect(),
                velocities_mps: vec![10.0, 20.0, 40.0],
            },
            trials: 10_000,
            seed: 1,
            algorithms: Algorithm::ALL.to_vec(),
            timing: TimingModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.timing.validate()?;
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be >= 1"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::invalid(
                "algorithms",
                "at least one algorithm is required",
            ));
        }
        match &self.sweep {
            Sweep::Pairs(ks) => {
                if ks.is_empty() || ks.contains(&0) {
                    return Err(Error::invalid(
                        "sweep",
                        "pair counts must be a non-empty list of values >= 1",
                    ));
                }
                for &k in ks {
                    self.scenario.with_pairs(k).validate()?;
                }
            }
            Sweep::Altitude {
                altitudes_m,
                velocities_mps,
            } => {
                if altitudes_m.is_empty() || velocities_mps.is_empty() {
                    return Err(Error::invalid(
                        "sweep",
                        "altitude and velocity lists must be non-empty",
                    ));
                }
                if altitudes_m
                    .iter()
                    .chain(velocities_mps)
                    .any(|v| !(*v > 0.0 && v.is_finite()))
                {
                    return Err(Error::invalid(
                        "sweep",
                        "altitudes and velocities must be positive",
                    ));
                }
                self.scenario.validate()?;
            }
        }
        Ok(())
    }
}

/// One CSV line: a sweep point and an algorithm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub algorithm: String,
    pub mean_iters: f64,
    pub mean_min_rate_bpshz: f64,
    pub outage_analytic: Option<f64>,
    pub outage_empirical: f64,
    pub std_err: f64,
    pub trials: u64,
    pub seed: u64,
}

impl ExperimentRow {
    fn failed(
        sweep_param: String,
        sweep_value: f64,
        algorithm: Algorithm,
        trials: u64,
        seed: u64,
    ) -> Self {
        ExperimentRow {
            sweep_param,
            sweep_value,
            algorithm: algorithm.name().to_string(),
            mean_iters: f64::NAN,
            mean_min_rate_bpshz: f64::NAN,
            outage_analytic: None,
            outage_empirical: f64::NAN,
            std_err: f64::NAN,
            trials,
            seed,
        }
    }
}

// What one allocator produced on one draw, before the RAP penalty.
#[derive(Debug, Clone, Copy)]
struct Outcome {
    iterations: usize,
    op_count: usize,
    unit_min_rate: f64,
}

fn run_allocator(
    algorithm: Algorithm,
    gamma: &[f64],
    config: &NetworkConfig,
) -> Result<AllocationResult> {
    match algorithm {
        Algorithm::Proposed => proposed_allocate(gamma, 1.0, config.epsilon),
        Algorithm::Conventional => conventional_allocate(gamma, 1.0, config.epsilon),
        Algorithm::EqualBandwidth => equal_bandwidth_allocate(gamma.len(), config.required_rate),
        Algorithm::Optimal => reference_optimal(gamma, 1.0, OPTIMAL_TOL),
    }
}

// outcomes[trial][algorithm], or the first error per algorithm.
fn simulate_point(spec: &ExperimentSpec, config: &NetworkConfig) -> Vec<Result<Vec<Outcome>>> {
    let budgets = make_link_budgets(config, &place_nodes(config));
    let per_trial: Vec<Vec<Result<Outcome>>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(spec.seed, t);
            let gamma = sample_realization(&budgets, config, &mut rng).gamma;
            spec.algorithms
                .iter()
                .map(|&alg| {
                    let res = run_allocator(alg, &gamma, config)?;
                    Ok(Outcome {
                        iterations: res.total_iterations(),
                        op_count: res.op_count,
                        unit_min_rate: res.min_rate(&gamma, 1.0),
                    })
                })
                .collect()
        })
        .collect();

    (0..spec.algorithms.len())
        .map(|a| per_trial.iter().map(|trial| trial[a].clone()).collect())
        .collect()
}

fn summarize(
    outcomes: &[Outcome],
    algorithm: Algorithm,
    spec: &ExperimentSpec,
    config: &NetworkConfig,
    sweep_param: String,
    sweep_value: f64,
) -> ExperimentRow {
    let n = outcomes.len() as f64;
    let mut iters = 0.0;
    let mut rate = 0.0;
    let mut outages = 0u64;
    for o in outcomes {
        let nu_c = 1.0 - spec.timing.nu_r(algorithm, o.op_count, config);
        let r = nu_c * o.unit_min_rate;
        iters += o.iterations as f64;
        rate += r;
        if r < config.required_rate {
            outages += 1;
        }
    }
    let est = OutageEstimate::from_count(outages, spec.trials);
    ExperimentRow {
        sweep_param,
        sweep_value,
        algorithm: algorithm.name().to_string(),
        mean_iters: iters / n,
        mean_min_rate_bpshz: rate / n,
        outage_analytic: None,
        outage_empirical: est.p_out,
        std_err: est.std_err,
        trials: spec.trials,
        seed: spec.seed,
    }
}

/// Equal-bandwidth allocation (`ν_r = 0`) for the scenario's pair count.
pub fn equal_bandwidth_allocation(config: &NetworkConfig) -> Result<Allocation> {
    equal_bandwidth_allocate(config.pairs, config.required_rate)?.allocation(0.0)
}

/// Average iterations and minimum rate over a sweep of pair counts.
pub fn run_iterations_and_minrate_sweep(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>> {
    spec.validate()?;
    let Sweep::Pairs(ks) = &spec.sweep else {
        return Err(Error::invalid(
            "sweep",
            "expected a sweep over the number of pairs",
        ));
    };
    let mut rows = Vec::new();
    for &k in ks {
        let config = spec.scenario.with_pairs(k);
        log::info!("pairs = {k}: {} draws", spec.trials);
        let results = simulate_point(spec, &config);
        for (&alg, outcomes) in spec.algorithms.iter().zip(results) {
            match outcomes {
                Ok(o) => rows.push(summarize(&o, alg, spec, &config, "pairs".into(), k as f64)),
                Err(e) => {
                    log::error!("pairs = {k}, {alg}: {e}");
                    rows.push(ExperimentRow::failed(
                        "pairs".into(),
                        k as f64,
                        alg,
                        spec.trials,
                        spec.seed,
                    ));
                }
            }
        }
    }
    Ok(rows)
}

/// Label used in the `sweep_param` column of the altitude sweep.
pub fn altitude_param(velocity: f64) -> String {
    format!("max_altitude_m@v={velocity}")
}

/// Outage versus maximum altitude, for each maximum velocity.
///
/// Allocations do not depend on the velocity, so each altitude is simulated
/// once and the velocity only changes the RAP penalty. The equal-bandwidth
/// rows also carry the closed-form outage.
pub fn run_outage_altitude_sweep(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>> {
    spec.validate()?;
    let Sweep::Altitude {
        altitudes_m,
        velocities_mps,
    } = &spec.sweep
    else {
        return Err(Error::invalid("sweep", "expected a sweep over altitude"));
    };
    let mut by_altitude = Vec::with_capacity(altitudes_m.len());
    for &alt in altitudes_m {
        let mut config = spec.scenario.clone();
        config.max_altitude_m = alt;
        log::info!("altitude = {alt} m: {} draws", spec.trials);
        let analytic = if spec.algorithms.contains(&Algorithm::EqualBandwidth) {
            let budgets = make_link_budgets(&config, &place_nodes(&config));
            Some(outage_closed_form(
                &equal_bandwidth_allocation(&config)?,
                &budgets,
                &config,
            )?)
        } else {
            None
        };
        let results = simulate_point(spec, &config);
        by_altitude.push((alt, config, analytic, results));
    }

    let mut rows = Vec::new();
    for &v in velocities_mps {
        let param = altitude_param(v);
        for (alt, config, analytic, results) in &by_altitude {
            let mut config = config.clone();
            config.max_velocity_mps = v;
            for (&alg, res) in spec.algorithms.iter().zip(results) {
                match res {
                    Ok(o) => {
                        let mut row = summarize(o, alg, spec, &config, param.clone(), *alt);
                        if alg == Algorithm::EqualBandwidth {
                            row.outage_analytic = *analytic;
                        }
                        rows.push(row);
                    }
                    Err(e) => {
                        log::error!("altitude = {alt} m, v = {v}, {alg}: {e}");
                        rows.push(ExperimentRow::failed(
                            param.clone(),
                            *alt,
                            alg,
                            spec.trials,
                            spec.seed,
                        ));
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Closed-form equal-bandwidth outage and its log-success over altitudes.
///
/// The log-success `ln(1 - P_out)` stays informative where the outage
/// itself rounds to one.
pub fn equal_bandwidth_altitude_curve(
    config: &NetworkConfig,
    altitudes_m: &[f64],
) -> Result<Vec<(f64, f64, f64)>> {
    altitudes_m
        .iter()
        .map(|&alt| {
            let mut c = config.clone();
            c.max_altitude_m = alt;
            let budgets = make_link_budgets(&c, &place_nodes(&c));
            let alloc = equal_bandwidth_allocation(&c)?;
            Ok((
                alt,
                outage_closed_form(&alloc, &budgets, &c)?,
                ln_success_closed_form(&alloc, &budgets, &c)?,
            ))
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Output(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl TrendCheck {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        TrendCheck {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

fn find<'a>(
    rows: &'a [ExperimentRow],
    param: &str,
    value: f64,
    alg: Algorithm,
) -> Option<&'a ExperimentRow> {
    rows.iter()
        .find(|r| r.sweep_param == param && r.sweep_value == value && r.algorithm == alg.name())
}

fn sweep_values(rows: &[ExperimentRow], param: &str) -> Vec<f64> {
    let mut vs: Vec<f64> = Vec::new();
    for r in rows.iter().filter(|r| r.sweep_param == param) {
        if !vs.contains(&r.sweep_value) {
            vs.push(r.sweep_value);
        }
    }
    vs
}

/// Orderings expected of the pair-count sweep.
pub fn iteration_sweep_trends(rows: &[ExperimentRow]) -> Vec<TrendCheck> {
    use Algorithm::*;
    let mut checks = Vec::new();
    let ks = sweep_values(rows, "pairs");

    let mut iter_ok = true;
    let mut rate_ok = true;
    let mut zero_ok = true;
    let mut detail_iter = Vec::new();
    let mut detail_rate = Vec::new();
    for &k in &ks {
        let p = find(rows, "pairs", k, Proposed);
        let c = find(rows, "pairs", k, Conventional);
        let e = find(rows, "pairs", k, EqualBandwidth);
        if let (Some(p), Some(c)) = (p, c) {
            if !(p.mean_iters < c.mean_iters) {
                iter_ok = false;
                detail_iter.push(format!("K={k}: {:.1} vs {:.1}", p.mean_iters, c.mean_iters));
            }
        }
        if let (Some(p), Some(c), Some(e)) = (p, c, e) {
            let (rp, rc, re) = (
                p.mean_min_rate_bpshz,
                c.mean_min_rate_bpshz,
                e.mean_min_rate_bpshz,
            );
            if !(rp >= rc && rc >= re) {
                rate_ok = false;
                detail_rate.push(format!("K={k}: {rp:.4} / {rc:.4} / {re:.4}"));
            }
        }
        if let Some(e) = e {
            zero_ok &= e.mean_iters == 0.0;
        }
    }
    checks.push(TrendCheck::new(
        "proposed needs fewer iterations than conventional",
        iter_ok,
        detail_iter.join("; "),
    ));
    checks.push(TrendCheck::new(
        "mean min-rate proposed >= conventional >= equal_bandwidth",
        rate_ok,
        detail_rate.join("; "),
    ));
    checks.push(TrendCheck::new(
        "equal_bandwidth uses no iterations",
        zero_ok,
        String::new(),
    ));
    checks
}

/// Consistency and shape checks for the altitude sweep.
///
/// `curve` is the closed-form equal-bandwidth curve from
/// [`equal_bandwidth_altitude_curve`]; its minimum is located on the
/// log-success scale.
pub fn outage_sweep_trends(
    rows: &[ExperimentRow],
    velocities_mps: &[f64],
    curve: &[(f64, f64, f64)],
    gap_altitude_m: f64,
    minimum_window_m: (f64, f64),
) -> Vec<TrendCheck> {
    use Algorithm::*;
    let mut checks = Vec::new();

    let mut agree = true;
    let mut worst = 0.0f64;
    for r in rows.iter().filter(|r| r.algorithm == EqualBandwidth.name()) {
        if let Some(a) = r.outage_analytic {
            let diff = (a - r.outage_empirical).abs();
            worst = worst.max(diff);
            if !(diff <= 3.0 * r.std_err) {
                agree = false;
            }
        }
    }
    checks.push(TrendCheck::new(
        "closed form within 3 standard errors of simulation",
        agree,
        format!("largest |difference| {worst:.3e}"),
    ));

    let mut same = true;
    if let Some((&v0, rest)) = velocities_mps.split_first() {
        let p0 = altitude_param(v0);
        for &v in rest {
            let pv = altitude_param(v);
            for alg in [EqualBandwidth, Optimal] {
                for alt in sweep_values(rows, &p0) {
                    if let (Some(a), Some(b)) =
                        (find(rows, &p0, alt, alg), find(rows, &pv, alt, alg))
                    {
                        same &= a.outage_empirical == b.outage_empirical;
                    }
                }
            }
        }
    }
    checks.push(TrendCheck::new(
        "equal_bandwidth and optimal do not depend on velocity",
        same,
        String::new(),
    ));

    let gaps: Vec<f64> = velocities_mps
        .iter()
        .filter_map(|&v| {
            let p = altitude_param(v);
            let prop = find(rows, &p, gap_altitude_m, Proposed)?;
            let conv = find(rows, &p, gap_altitude_m, Conventional)?;
            Some(conv.outage_empirical - prop.outage_empirical)
        })
        .collect();
    let monotone = gaps.windows(2).all(|w| w[1] >= w[0]);
    checks.push(TrendCheck::new(
        "conventional-minus-proposed outage gap grows with velocity",
        monotone,
        format!("gaps at {gap_altitude_m} m: {gaps:?}"),
    ));

    let (ok, detail) = interior_minimum(curve, minimum_window_m);
    checks.push(TrendCheck::new(
        "closed-form outage has an interior minimum",
        ok,
        detail,
    ));
    checks
}

/// Does the curve have a unique interior minimum inside `window`?
///
/// Points are ordered by log-success (higher is better), which resolves
/// outages that round to one.
pub fn interior_minimum(curve: &[(f64, f64, f64)], window: (f64, f64)) -> (bool, String) {
    if curve.len() < 3 {
        return (false, "fewer than three altitudes".into());
    }
    let best = curve
        .iter()
        .enumerate()
        .fold(0, |b, (i, p)| if p.2 > curve[b].2 { i } else { b });
    let ties = curve.iter().filter(|p| p.2 == curve[best].2).count();
    let alt = curve[best].0;
    let interior = best > 0 && best + 1 < curve.len();
    let ok = ties == 1 && interior && alt >= window.0 && alt <= window.1;
    (
        ok,
        format!(
            "minimum at {alt} m (outage {:.6e}, ln success {:.4}), window [{}, {}]",
            curve[best].1, curve[best].2, window.0, window.1
        ),
    )
}
