//! Scenario files: a TOML document mirroring the library's configuration types.

use std::path::Path;

use ehuav_core::allocation::Algorithm;
use ehuav_core::channel::{dbm_to_watts, EnvironmentParams, NetworkConfig};
use ehuav_core::experiments::{ExperimentSpec, Sweep, TimingModel, DEFAULT_T_OP};
use serde::Deserialize;

use crate::Failure;

/// A value given once for all UAVs or once per UAV.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PerUav {
    One(f64),
    Each(Vec<f64>),
}

impl PerUav {
    fn expand(&self, pairs: usize) -> Vec<f64> {
        match self {
            PerUav::One(v) => vec![*v; pairs],
            PerUav::Each(v) => v.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub pairs: usize,
    pub gcs_antennas: u32,
    pub grs_antennas: u32,
    pub subbands: u32,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub speed_of_light_mps: f64,
    pub noise_dbm: f64,
    pub zeta: f64,
    pub gcs_power_mw: PerUav,
    pub m_h: PerUav,
    pub m_g: PerUav,
    pub max_horizontal_m: f64,
    pub max_altitude_m: f64,
    pub max_velocity_mps: f64,
    pub required_rate_bpshz: f64,
    pub epsilon: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    pub a: f64,
    pub b: f64,
    pub eta_los_db: f64,
    pub eta_nlos_db: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    pub t_op_s: f64,
}

impl Default for TimingSection {
    fn default() -> Self {
        TimingSection {
            t_op_s: DEFAULT_T_OP,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub algorithms: Option<Vec<String>>,
    #[serde(default)]
    pub pairs: Option<Vec<usize>>,
    #[serde(default)]
    pub altitudes_m: Option<Vec<f64>>,
    #[serde(default)]
    pub velocities_mps: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub network: NetworkSection,
    pub environment: EnvironmentSection,
    #[serde(default)]
    pub timing: TimingSection,
    #[serde(default)]
    pub iterations_sweep: Option<SweepSection>,
    #[serde(default)]
    pub outage_sweep: Option<SweepSection>,
}

/// A loaded and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub network: NetworkConfig,
    pub timing: TimingModel,
    pub iterations: ExperimentSpec,
    pub outage: ExperimentSpec,
}

const ENV_FIELDS: [&str; 4] = ["a", "b", "eta_los_db", "eta_nlos_db"];

fn key_path(field: &str) -> String {
    let section = if ENV_FIELDS.contains(&field) {
        "environment"
    } else {
        "network"
    };
    let key = match field {
        "gcs_power_w" => "gcs_power_mw",
        "noise_power_w" => "noise_dbm",
        "speed_of_light" => "speed_of_light_mps",
        "required_rate" => "required_rate_bpshz",
        other => other,
    };
    format!("{section}.{key}")
}

fn nakagami(name: &str, v: &PerUav, pairs: usize, problems: &mut Vec<String>) -> Vec<u32> {
    let check = |m: f64, what: String, problems: &mut Vec<String>| {
        if m.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&m) {
            problems.push(format!(
                "{what} = {m}: Nakagami parameter must be integer and >= 1"
            ));
            1
        } else {
            m as u32
        }
    };
    match v {
        PerUav::One(m) => vec![check(*m, format!("network.{name}"), problems); pairs],
        PerUav::Each(ms) => ms
            .iter()
            .enumerate()
            .map(|(i, &m)| check(m, format!("network.{name}[{}]", i + 1), problems))
            .collect(),
    }
}

fn algorithms(
    list: &Option<Vec<String>>,
    default: &[Algorithm],
    section: &str,
) -> Result<Vec<Algorithm>, String> {
    match list {
        None => Ok(default.to_vec()),
        Some(names) => names
            .iter()
            .map(|n| {
                n.parse::<Algorithm>()
                    .map_err(|e| format!("{section}.algorithms: {e}"))
            })
            .collect(),
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Config(format!("invalid configuration: {e}")))
    }

    /// Converts to library types, reporting every violated invariant.
    pub fn into_scenario(self) -> Result<Scenario, Failure> {
        let n = &self.network;
        let mut problems = Vec::new();
        let m_h = nakagami("m_h", &n.m_h, n.pairs, &mut problems);
        let m_g = nakagami("m_g", &n.m_g, n.pairs, &mut problems);
        let network = NetworkConfig {
            pairs: n.pairs,
            gcs_antennas: n.gcs_antennas,
            grs_antennas: n.grs_antennas,
            subbands: n.subbands,
            bandwidth_hz: n.bandwidth_hz,
            carrier_hz: n.carrier_hz,
            speed_of_light: n.speed_of_light_mps,
            noise_power_w: dbm_to_watts(n.noise_dbm),
            zeta: n.zeta,
            gcs_power_w: n
                .gcs_power_mw
                .expand(n.pairs)
                .iter()
                .map(|p| p * 1e-3)
                .collect(),
            m_h,
            m_g,
            max_horizontal_m: n.max_horizontal_m,
            max_altitude_m: n.max_altitude_m,
            max_velocity_mps: n.max_velocity_mps,
            required_rate: n.required_rate_bpshz,
            epsilon: n.epsilon,
            env: EnvironmentParams {
                a: self.environment.a,
                b: self.environment.b,
                eta_los_db: self.environment.eta_los_db,
                eta_nlos_db: self.environment.eta_nlos_db,
            },
        };
        for e in network.violations() {
            match e {
                ehuav_core::Error::Invalid { field, detail } => {
                    problems.push(format!("{}: {detail}", key_path(&field)))
                }
                other => problems.push(other.to_string()),
            }
        }
        let timing = TimingModel {
            t_op: self.timing.t_op_s,
        };
        if let Err(e) = timing.validate() {
            problems.push(format!("timing.t_op_s: {e}"));
        }

        let mut iterations = ExperimentSpec::iterations_default(&network);
        iterations.scenario = network.clone();
        iterations.timing = timing;
        if let Some(s) = &self.iterations_sweep {
            iterations.trials = s.trials;
            iterations.seed = s.seed;
            if let Some(ks) = &s.pairs {
                iterations.sweep = Sweep::Pairs(ks.clone());
            }
            if s.altitudes_m.is_some() || s.velocities_mps.is_some() {
                problems.push("iterations_sweep: only `pairs` can be swept here".into());
            }
            match algorithms(&s.algorithms, &iterations.algorithms, "iterations_sweep") {
                Ok(a) => iterations.algorithms = a,
                Err(e) => problems.push(e),
            }
        }

        let mut outage = ExperimentSpec::outage_default(&network);
        outage.scenario = network.clone();
        outage.timing = timing;
        if let Some(s) = &self.outage_sweep {
            outage.trials = s.trials;
            outage.seed = s.seed;
            if let Sweep::Altitude {
                altitudes_m,
                velocities_mps,
            } = &mut outage.sweep
            {
                if let Some(a) = &s.altitudes_m {
                    *altitudes_m = a.clone();
                }
                if let Some(v) = &s.velocities_mps {
                    *velocities_mps = v.clone();
                }
            }
            if s.pairs.is_some() {
                problems.push("outage_sweep: the pair count comes from network.pairs".into());
            }
            match algorithms(&s.algorithms, &outage.algorithms, "outage_sweep") {
                Ok(a) => outage.algorithms = a,
                Err(e) => problems.push(e),
            }
        }
        if problems.is_empty() {
            for (name, spec) in [("iterations_sweep", &iterations), ("outage_sweep", &outage)] {
                if let Err(e) = spec.validate() {
                    problems.push(format!("{name}: {e}"));
                }
            }
        }

        if problems.is_empty() {
            Ok(Scenario {
                network,
                timing,
                iterations,
                outage,
            })
        } else {
            Err(Failure::Config(problems.join("\n")))
        }
    }
}

pub fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    ConfigFile::parse(&text)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        .into_scenario()
        .map_err(|e| match e {
            Failure::Config(m) => {
                Failure::Config(format!("invalid configuration in {}:\n{m}", path.display()))
            }
            other => other,
        })
}
