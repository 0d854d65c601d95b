//! Scenario geometry, air-to-ground path loss, per-link budgets and
//! channel-gain sampling.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Environment constants of the sigmoid LoS/NLoS excess-loss model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentParams {
    pub a: f64,
    pub b: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
}

impl EnvironmentParams {
    /// Suburban constants used throughout the reference scenario.
    pub fn suburban() -> Self {
        EnvironmentParams {
            a: 9.61,
            b: 0.16,
            eta_los_db: 1.0,
            eta_nlos_db: 20.0,
        }
    }

    pub fn violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        if !(self.a > 0.0) {
            out.push(Error::invalid("env.a", format!("{} must be > 0", self.a)));
        }
        if !(self.b > 0.0) {
            out.push(Error::invalid("env.b", format!("{} must be > 0", self.b)));
        }
        if !(self.eta_los_db >= 0.0) {
            out.push(Error::invalid(
                "env.eta_los_db",
                format!("{} must be >= 0", self.eta_los_db),
            ));
        }
        if !(self.eta_nlos_db >= self.eta_los_db) {
            out.push(Error::invalid(
                "env.eta_nlos_db",
                format!(
                    "{} must be >= eta_los_db ({})",
                    self.eta_nlos_db, self.eta_los_db
                ),
            ));
        }
        out
    }
}

/// Static scenario parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Number of GCS-UAV pairs `K`.
    pub pairs: usize,
    pub gcs_antennas: u32,
    pub grs_antennas: u32,
    /// Frequency-hopping sub-bands used in the power-transfer phase.
    pub subbands: u32,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub speed_of_light: f64,
    /// Noise power `σ²` in watts.
    pub noise_power_w: f64,
    /// Energy conversion efficiency `ζ`.
    pub zeta: f64,
    /// Per-GCS transmit power in watts.
    pub gcs_power_w: Vec<f64>,
    /// Nakagami shape of each GCS→UAV element.
    pub m_h: Vec<u32>,
    /// Nakagami shape of each UAV→GRS element.
    pub m_g: Vec<u32>,
    pub max_horizontal_m: f64,
    pub max_altitude_m: f64,
    pub max_velocity_mps: f64,
    /// Required identification rate `R_a` in bps/Hz.
    pub required_rate: f64,
    /// Convergence threshold `ε` shared by every iterative allocator.
    pub epsilon: f64,
    pub env: EnvironmentParams,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl NetworkConfig {
    /// The reference scenario: 2.4 GHz, 1 MHz, -114 dBm noise, 10 sub-bands,
    /// 4x4 antennas, ζ = 0.7, 100 mW GCS power, m = 3 on both hops,
    /// 100 m horizontal span, R_a = 1 bps/Hz, ε = 1e-4, suburban environment,
    /// 120 m maximum altitude and 20 m/s maximum velocity.
    pub fn reference(pairs: usize) -> Self {
        NetworkConfig {
            pairs,
            gcs_antennas: 4,
            grs_antennas: 4,
            subbands: 10,
            bandwidth_hz: 1e6,
            carrier_hz: 2.4e9,
            speed_of_light: 3e8,
            noise_power_w: dbm_to_watts(-114.0),
            zeta: 0.7,
            gcs_power_w: vec![0.1; pairs],
            m_h: vec![3; pairs],
            m_g: vec![3; pairs],
            max_horizontal_m: 100.0,
            max_altitude_m: 120.0,
            max_velocity_mps: 20.0,
            required_rate: 1.0,
            epsilon: 1e-4,
            env: EnvironmentParams::suburban(),
        }
    }

    /// Same scenario with a different pair count; per-UAV vectors are
    /// resized by repeating their first entry.
    pub fn with_pairs(&self, pairs: usize) -> Self {
        let mut c = self.clone();
        c.pairs = pairs;
        let first_f = |v: &Vec<f64>| v.first().copied().unwrap_or(0.0);
        let first_u = |v: &Vec<u32>| v.first().copied().unwrap_or(1);
        if c.gcs_power_w.len() != pairs {
            c.gcs_power_w = vec![first_f(&self.gcs_power_w); pairs];
        }
        if c.m_h.len() != pairs {
            c.m_h = vec![first_u(&self.m_h); pairs];
        }
        if c.m_g.len() != pairs {
            c.m_g = vec![first_u(&self.m_g); pairs];
        }
        c
    }

    /// Every violated invariant, in field order.
    pub fn violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        let mut bad = |field: &str, detail: String| out.push(Error::invalid(field, detail));
        let k = self.pairs;
        if k < 1 {
            bad("pairs", "K must be >= 1".into());
        }
        for (name, v) in [
            ("gcs_antennas", self.gcs_antennas),
            ("grs_antennas", self.grs_antennas),
            ("subbands", self.subbands),
        ] {
            if v < 1 {
                bad(name, format!("{v} must be >= 1"));
            }
        }
        for (name, v) in [
            ("bandwidth_hz", self.bandwidth_hz),
            ("carrier_hz", self.carrier_hz),
            ("speed_of_light", self.speed_of_light),
            ("noise_power_w", self.noise_power_w),
            ("max_horizontal_m", self.max_horizontal_m),
            ("max_altitude_m", self.max_altitude_m),
            ("max_velocity_mps", self.max_velocity_mps),
            ("epsilon", self.epsilon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bad(name, format!("{v} must be positive and finite"));
            }
        }
        if !(self.required_rate >= 0.0 && self.required_rate.is_finite()) {
            bad(
                "required_rate",
                format!("{} must be >= 0 and finite", self.required_rate),
            );
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            bad("zeta", format!("{} must lie in (0, 1]", self.zeta));
        }
        if self.gcs_power_w.len() != k {
            bad(
                "gcs_power_w",
                format!("expected {k} entries, got {}", self.gcs_power_w.len()),
            );
        }
        for (i, p) in self.gcs_power_w.iter().enumerate() {
            if !(*p > 0.0 && p.is_finite()) {
                bad(
                    "gcs_power_w",
                    format!("entry {} = {p} must be positive", i + 1),
                );
            }
        }
        for (name, v) in [("m_h", &self.m_h), ("m_g", &self.m_g)] {
            if v.len() != k {
                bad(name, format!("expected {k} entries, got {}", v.len()));
            }
            for (i, m) in v.iter().enumerate() {
                if *m < 1 {
                    bad(
                        name,
                        format!("entry {} = {m}: Nakagami parameter must be >= 1", i + 1),
                    );
                }
            }
        }
        for e in self.env.violations() {
            out.push(e);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Gamma shape of `‖h_k‖²`.
    pub fn shape_h(&self, k: usize) -> u32 {
        self.m_h[k] * self.gcs_antennas
    }

    /// Gamma shape of `‖g_k‖²`.
    pub fn shape_g(&self, k: usize) -> u32 {
        self.m_g[k] * self.grs_antennas
    }
}

/// Horizontal distances and altitude of one GCS-UAV-GRS chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub d_h: f64,
    pub d_g: f64,
    pub altitude: f64,
}

/// Derived per-UAV constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub lambda: f64,
    pub mu: f64,
    pub rho: f64,
    pub pl_h_db: f64,
    pub pl_g_db: f64,
    pub gcs_power_w: f64,
}

/// One block's composite gains `γ_k = ρ_k ‖g_k‖² ‖h_k‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub gamma: Vec<f64>,
}

/// Elevation angle in degrees of a point at altitude `a` seen from
/// horizontal distance `d`.
pub fn elevation_angle_deg(d: f64, a: f64) -> f64 {
    a.atan2(d).to_degrees()
}

/// Air-to-ground path loss in dB.
///
/// The distance term is `10 log10(sqrt(d² + A²))` as in the reference model.
pub fn a2g_path_loss_db(
    d: f64,
    altitude: f64,
    env: &EnvironmentParams,
    carrier_hz: f64,
    speed_of_light: f64,
) -> f64 {
    let theta = elevation_angle_deg(d, altitude);
    let excess =
        (env.eta_los_db - env.eta_nlos_db) / (1.0 + env.a * (-env.b * (theta - env.a)).exp());
    let distance = 10.0 * d.hypot(altitude).log10();
    let free_space = 20.0 * (4.0 * PI * carrier_hz / speed_of_light).log10();
    excess + distance + free_space + env.eta_nlos_db
}

pub fn db_to_linear_gain(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

pub fn make_link_budget(k: usize, config: &NetworkConfig, geom: &LinkGeometry) -> LinkBudget {
    let pl = |d| {
        a2g_path_loss_db(
            d,
            geom.altitude,
            &config.env,
            config.carrier_hz,
            config.speed_of_light,
        )
    };
    let pl_h_db = pl(geom.d_h);
    let pl_g_db = pl(geom.d_g);
    let p_c = config.gcs_power_w[k];
    LinkBudget {
        lambda: db_to_linear_gain(pl_h_db),
        mu: db_to_linear_gain(pl_g_db),
        rho: config.zeta * p_c / (f64::from(config.subbands) * config.noise_power_w),
        pl_h_db,
        pl_g_db,
        gcs_power_w: p_c,
    }
}

pub fn make_link_budgets(config: &NetworkConfig, geoms: &[LinkGeometry]) -> Vec<LinkBudget> {
    geoms
        .iter()
        .enumerate()
        .map(|(k, g)| make_link_budget(k, config, g))
        .collect()
}

/// Energy harvested during a power-transfer phase of length `t_p` seconds.
pub fn harvested_energy(
    budget: &LinkBudget,
    h_norm_sq: f64,
    config: &NetworkConfig,
    t_p: f64,
) -> f64 {
    config.zeta
        * budget.gcs_power_w
        * h_norm_sq
        * (config.bandwidth_hz / f64::from(config.subbands))
        * t_p
}

/// Average UAV transmit power over its data-transmission phase.
pub fn uav_tx_power(
    budget: &LinkBudget,
    h_norm_sq: f64,
    config: &NetworkConfig,
    tau: f64,
    beta_k: f64,
) -> f64 {
    tau / (beta_k * (1.0 - tau) * f64::from(config.subbands))
        * config.zeta
        * budget.gcs_power_w
        * h_norm_sq
}

/// Random stream for Monte-Carlo trial `trial` under master seed `seed`.
///
/// Each trial owns a distinct ChaCha stream, so trials may be evaluated in
/// any order or in parallel without changing their draws.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Unit-scale gamma variate with integer shape, as a sum of `shape`
/// exponentials. Consumes exactly `shape` uniforms.
pub fn erlang_unit<R: Rng + ?Sized>(shape: u32, rng: &mut R) -> f64 {
    let mut ln_sum = 0.0;
    let mut prod = 1.0;
    for _ in 0..shape {
        // 1 - U lies in (0, 1], so the log is finite.
        prod *= 1.0 - rng.random::<f64>();
        if prod < 1e-280 {
            ln_sum += prod.ln();
            prod = 1.0;
        }
    }
    -(ln_sum + prod.ln())
}

/// Draw `(‖h_k‖², ‖g_k‖²)` for UAV `k`: gamma with shape `m N` and scale
/// `λ_k` (resp. `μ_k`). Draws `shape_h + shape_g` uniforms, `h` first.
pub fn sample_norms<R: Rng + ?Sized>(
    k: usize,
    budget: &LinkBudget,
    config: &NetworkConfig,
    rng: &mut R,
) -> (f64, f64) {
    let h = budget.lambda * erlang_unit(config.shape_h(k), rng);
    let g = budget.mu * erlang_unit(config.shape_g(k), rng);
    (h, g)
}

/// One block of composite gains. UAVs are drawn in index order from `rng`.
pub fn sample_realization<R: Rng + ?Sized>(
    budgets: &[LinkBudget],
    config: &NetworkConfig,
    rng: &mut R,
) -> ChannelRealization {
    let gamma = budgets
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let (h, g) = sample_norms(k, b, config, rng);
            b.rho * h * g
        })
        .collect();
    ChannelRealization { gamma }
}
