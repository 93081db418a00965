//! Experiment configuration: TOML sections plus environment overrides.
//!
//! Powers are given in mW and frequencies in GHz; everything is converted to
//! SI when the [`Scenario`] is built. Any key can be overridden through an
//! environment variable `UAVFOG__<SECTION>__<KEY>`, whose value is parsed as a
//! TOML value (falling back to a plain string).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aco::AcoParams;
use crate::assign::PsoParams;
use crate::baselines::GaParams;
use crate::channel::GammaWeighting;
use crate::cost::{db_to_linear, dbm_to_watts, ComputeParams, DataCenterParams, RadioParams};
use crate::error::{Error, Result};
use crate::experiment::Policy;
use crate::model::{Bounds, Position, Scenario, UavConfig, EPSILON_MAX, EPSILON_MIN};
use crate::workload::WorkloadParams;

pub const ENV_PREFIX: &str = "UAVFOG__";

const MW: f64 = 1e-3;
const GHZ: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub runs: usize,
    pub base_seed: u64,
    pub policies: Vec<String>,
    pub output_dir: PathBuf,
    pub plots: bool,
    /// Warm-start each slot's swarm from the previous slot.
    pub warm_start: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            runs: 50,
            base_seed: 1,
            policies: Policy::ALL.iter().map(|p| p.label().to_string()).collect(),
            output_dir: PathBuf::from("results"),
            plots: false,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub side_m: f64,
    pub md_count: usize,
    /// Fixed MD positions in meters; drawn per run when absent.
    pub md_positions: Option<Vec<[f64; 2]>>,
    pub channels: u32,
    pub slot_length_s: f64,
    /// Fixed weighting factor; drawn per run from `epsilon_range` when absent.
    pub epsilon: Option<f64>,
    pub epsilon_range: [f64; 2],
    pub md_power_mw: [f64; 2],
    pub md_freq_ghz: [f64; 2],
    pub uav_power_mw: [f64; 2],
    pub uav_freq_ghz: [f64; 2],
    pub uav_mass_kg: f64,
    pub uav_altitude_m: f64,
    pub uav_v_max: f64,
    pub bandwidth_hz: f64,
    pub noise_dbm: f64,
    pub reference_gain_db: f64,
    pub path_loss_exponent: f64,
    pub backhaul_rate_bps: f64,
    pub backhaul_latency_s: f64,
    pub dc_freq_ghz: f64,
    pub dc_energy_per_cycle_j: f64,
    pub kappa_md: f64,
    pub kappa_uav: f64,
    pub gamma_shape: f64,
    pub gamma_rate: f64,
    pub gamma_size_unit_bits: f64,
    /// Cells per side of the planning grid.
    pub grid_cells: usize,
    /// Inclusive obstacle count range.
    pub obstacle_count: [usize; 2],
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let radio = RadioParams::default();
        let dc = DataCenterParams::default();
        let compute = ComputeParams::default();
        let gamma = GammaWeighting::default();
        let uav = UavConfig::default();
        Self {
            side_m: 10_000.0,
            md_count: 10,
            md_positions: None,
            channels: 40,
            slot_length_s: 0.1,
            epsilon: None,
            epsilon_range: [EPSILON_MIN, EPSILON_MAX],
            md_power_mw: [30.0, 70.0],
            md_freq_ghz: [0.5, 2.0],
            uav_power_mw: [40.0, 80.0],
            uav_freq_ghz: [1.0, 2.0],
            uav_mass_kg: uav.mass,
            uav_altitude_m: uav.altitude,
            uav_v_max: uav.v_max,
            bandwidth_hz: radio.bandwidth,
            noise_dbm: -100.0,
            reference_gain_db: -40.0,
            path_loss_exponent: radio.path_loss_exponent,
            backhaul_rate_bps: dc.backhaul_rate,
            backhaul_latency_s: dc.backhaul_latency,
            dc_freq_ghz: dc.freq / GHZ,
            dc_energy_per_cycle_j: dc.energy_per_cycle,
            kappa_md: compute.kappa_md,
            kappa_uav: compute.kappa_uav,
            gamma_shape: gamma.shape,
            gamma_rate: gamma.rate,
            gamma_size_unit_bits: gamma.size_unit,
            grid_cells: 20,
            obstacle_count: [80, 120],
        }
    }
}

fn bounds(pair: [f64; 2], scale: f64) -> Bounds {
    Bounds::new(pair[0] * scale, pair[1] * scale)
}

impl ScenarioSection {
    /// Scenario with the given MD layout and weighting factor, in SI units.
    pub fn build(&self, md_positions: Vec<Position>, epsilon: f64) -> Result<Scenario> {
        let s = Scenario {
            side: self.side_m,
            md_positions,
            channels: self.channels,
            slot_length: self.slot_length_s,
            epsilon,
            md_power: bounds(self.md_power_mw, MW),
            md_freq: bounds(self.md_freq_ghz, GHZ),
            uav: UavConfig {
                mass: self.uav_mass_kg,
                altitude: self.uav_altitude_m,
                v_max: self.uav_v_max,
                power: bounds(self.uav_power_mw, MW),
                freq: bounds(self.uav_freq_ghz, GHZ),
            },
            radio: RadioParams {
                bandwidth: self.bandwidth_hz,
                noise_power: dbm_to_watts(self.noise_dbm),
                reference_gain: db_to_linear(self.reference_gain_db),
                path_loss_exponent: self.path_loss_exponent,
            },
            dc: DataCenterParams {
                backhaul_rate: self.backhaul_rate_bps,
                backhaul_latency: self.backhaul_latency_s,
                freq: self.dc_freq_ghz * GHZ,
                energy_per_cycle: self.dc_energy_per_cycle_j,
            },
            compute: ComputeParams { kappa_md: self.kappa_md, kappa_uav: self.kappa_uav },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn fixed_positions(&self) -> Option<Vec<Position>> {
        self.md_positions.as_ref().map(|v| v.iter().map(|p| Position::new(p[0], p[1])).collect())
    }

    pub fn gamma(&self) -> GammaWeighting {
        GammaWeighting::new(self.gamma_shape, self.gamma_rate, self.gamma_size_unit_bits)
    }

    pub fn cell_size(&self) -> f64 {
        self.side_m / self.grid_cells as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSection {
    /// Tasks per slot per MD, unless `arrival_rates` lists one rate per MD.
    pub arrival_rate: f64,
    pub arrival_rates: Option<Vec<f64>>,
    pub mean_input_bits: f64,
    pub mean_output_bits: f64,
    pub cycles_per_bit: f64,
    /// Slots scanned for the first non-empty batch.
    pub max_slots: usize,
}

impl Default for WorkloadSection {
    fn default() -> Self {
        let w = WorkloadParams::uniform(1, 0.5);
        Self {
            arrival_rate: 0.5,
            arrival_rates: None,
            mean_input_bits: w.mean_input_bits,
            mean_output_bits: w.mean_output_bits,
            cycles_per_bit: w.cycles_per_bit,
            max_slots: 1000,
        }
    }
}

impl WorkloadSection {
    pub fn params(&self, md_count: usize, seed: u64) -> Result<WorkloadParams> {
        let rates = self.arrival_rates.clone().unwrap_or_else(|| vec![self.arrival_rate; md_count]);
        if rates.len() != md_count {
            return Err(Error::Config(format!("{} arrival rates for {md_count} MDs", rates.len())));
        }
        let p = WorkloadParams {
            arrival_rates: rates,
            mean_input_bits: self.mean_input_bits,
            mean_output_bits: self.mean_output_bits,
            cycles_per_bit: self.cycles_per_bit,
            rng_seed: seed,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Everything an experiment needs. The `rng_seed` fields of the algorithm
/// sections are used by the single-shot `plan`/`assign` commands; experiment
/// runs derive their own seeds from `experiment.base_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub scenario: ScenarioSection,
    pub workload: WorkloadSection,
    pub pso: PsoParams,
    pub ga: GaParams,
    pub aco: AcoParams,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Self = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (defaults when `None`) and applies overrides from the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        Self::load_with_env(path, std::env::vars())
    }

    pub fn load_with_env(path: Option<&Path>, vars: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse::<toml::Table>().map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        apply_env_overrides(&mut table, vars)?;
        Self::from_table(table)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Switch to the full parameter scale: 50 MDs and a 100 x 100 grid with
    /// 2000 to 3000 obstacles.
    pub fn full_scale(mut self) -> Self {
        self.scenario.md_count = 50;
        self.scenario.md_positions = None;
        self.scenario.grid_cells = 100;
        self.scenario.obstacle_count = [2000, 3000];
        self.workload.arrival_rates = None;
        self
    }

    pub fn policies(&self) -> Result<Vec<Policy>> {
        self.experiment.policies.iter().map(|p| p.parse()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.runs == 0 {
            return Err(Error::Config("experiment.runs must be >= 1".into()));
        }
        if e.policies.is_empty() {
            return Err(Error::Config("experiment.policies is empty".into()));
        }
        self.policies()?;
        let s = &self.scenario;
        if s.md_count == 0 || s.grid_cells == 0 {
            return Err(Error::Config("md_count and grid_cells must be >= 1".into()));
        }
        if let Some(p) = &s.md_positions {
            if p.len() != s.md_count {
                return Err(Error::Config(format!("{} MD positions for md_count = {}", p.len(), s.md_count)));
            }
        }
        let [lo, hi] = s.epsilon_range;
        if !(EPSILON_MIN <= lo && lo <= hi && hi <= EPSILON_MAX) {
            return Err(Error::Config(format!("epsilon_range [{lo}, {hi}] outside [{EPSILON_MIN}, {EPSILON_MAX}]")));
        }
        if s.obstacle_count[0] > s.obstacle_count[1] {
            return Err(Error::Config("obstacle_count must be [min, max]".into()));
        }
        // Build once with placeholder positions so unit and range errors surface early.
        let probe = vec![Position::new(0.0, 0.0); s.md_count];
        s.build(probe, s.epsilon.unwrap_or(lo))?;
        self.workload.params(s.md_count, 0)?;
        self.pso.validate()?;
        self.ga.validate()?;
        self.aco.validate()
    }
}

/// Applies `UAVFOG__SECTION__KEY=value` pairs to a config table.
pub fn apply_env_overrides(table: &mut toml::Table, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    let mut pairs: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
    pairs.sort();
    for (key, raw) in pairs {
        let rest = &key[ENV_PREFIX.len()..];
        let Some((section, field)) = rest.split_once("__") else {
            return Err(Error::Config(format!("{key}: expected {ENV_PREFIX}<SECTION>__<KEY>")));
        };
        let value = parse_value(&raw);
        let entry = table
            .entry(section.to_ascii_lowercase())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let toml::Value::Table(sec) = entry else {
            return Err(Error::Config(format!("{key}: [{section}] is not a table")));
        };
        sec.insert(field.to_ascii_lowercase(), value);
    }
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
