//! Per-task delay and energy for the three execution sites, the per-MD
//! utility, the aggregate utility and the slot objective.
//!
//! Link model: `channels * B * log2(1 + p * g(d) / N0)` with the line-of-sight
//! gain `g(d) = g0 * d^-n` over the 3-D MD-UAV distance. Compute model: delay
//! `c / f`, energy `kappa * c * f^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Bounds, Position};
use crate::workload::Task;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Bandwidth of one channel, hertz.
    pub bandwidth: f64,
    /// Noise power, watts.
    pub noise_power: f64,
    /// Linear channel gain at 1 m.
    pub reference_gain: f64,
    pub path_loss_exponent: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            bandwidth: 1.0e6,
            noise_power: dbm_to_watts(-100.0),
            reference_gain: db_to_linear(-40.0),
            path_loss_exponent: 2.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.noise_power > 0.0 && self.reference_gain > 0.0) {
            return Err(Error::InvalidParameter("radio parameters must be positive".into()));
        }
        if !(self.path_loss_exponent >= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "path-loss exponent {} must be >= 2",
                self.path_loss_exponent
            )));
        }
        Ok(())
    }

    pub fn gain(&self, distance: f64) -> f64 {
        self.reference_gain * distance.powf(-self.path_loss_exponent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataCenterParams {
    /// UAV-to-DC backhaul rate, bits per second.
    pub backhaul_rate: f64,
    /// One-way backhaul latency, seconds.
    pub backhaul_latency: f64,
    /// DC processing frequency, hertz.
    pub freq: f64,
    pub energy_per_cycle: f64,
}

impl Default for DataCenterParams {
    fn default() -> Self {
        Self { backhaul_rate: 100.0e6, backhaul_latency: 0.020, freq: 10.0e9, energy_per_cycle: 1.0e-9 }
    }
}

impl DataCenterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.backhaul_rate > 0.0 && self.backhaul_latency > 0.0 && self.freq > 0.0 && self.energy_per_cycle > 0.0) {
            return Err(Error::InvalidParameter("data-center parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Effective switched capacitance of the MD and UAV processors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputeParams {
    pub kappa_md: f64,
    pub kappa_uav: f64,
}

impl Default for ComputeParams {
    fn default() -> Self {
        Self { kappa_md: 1e-28, kappa_uav: 1e-28 }
    }
}

impl ComputeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_md > 0.0 && self.kappa_uav > 0.0) {
            return Err(Error::InvalidParameter("kappa values must be positive".into()));
        }
        Ok(())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Execution site of a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Site {
    Md,
    Uav,
    Dc,
}

impl Site {
    pub const ALL: [Site; 3] = [Site::Md, Site::Uav, Site::Dc];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Site> {
        Self::ALL.get(i).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Site::Md => "MD",
            Site::Uav => "UAV",
            Site::Dc => "DC",
        }
    }

    pub fn needs_link(self) -> bool {
        self != Site::Md
    }
}

/// Binary site indicators `(x_md, x_uav, x_dc)` of one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Assignment {
    pub x_md: bool,
    pub x_uav: bool,
    pub x_dc: bool,
}

impl Assignment {
    pub fn to(site: Site) -> Self {
        Self { x_md: site == Site::Md, x_uav: site == Site::Uav, x_dc: site == Site::Dc }
    }

    /// The chosen site, or an error unless exactly one indicator is set.
    pub fn site(&self) -> Result<Site> {
        match (self.x_md, self.x_uav, self.x_dc) {
            (true, false, false) => Ok(Site::Md),
            (false, true, false) => Ok(Site::Uav),
            (false, false, true) => Ok(Site::Dc),
            other => Err(Error::InvariantViolation(format!("assignment {other:?} is not one-hot"))),
        }
    }
}

/// Powers (W) and frequencies (Hz) of every MD plus the UAV VM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceSetting {
    pub md_power: Vec<f64>,
    pub md_freq: Vec<f64>,
    pub uav_power: f64,
    pub uav_freq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub delay: f64,
    pub energy: f64,
}

impl CostBreakdown {
    pub fn weighted(&self, epsilon: f64) -> f64 {
        self.delay + epsilon * self.energy
    }
}

/// 3-D distance between a ground MD and the UAV at altitude `altitude`.
pub fn distance_3d(md: Position, uav: Position, altitude: f64) -> f64 {
    md.planar_distance(&uav).hypot(altitude)
}

pub fn transmission_rate(channels: u32, tx_power: f64, distance: f64, radio: &RadioParams) -> Result<f64> {
    if channels == 0 {
        return Err(Error::NoLink);
    }
    if !(distance > 0.0) {
        return Err(Error::Domain(format!("link distance must be positive, got {distance}")));
    }
    let snr = tx_power * radio.gain(distance) / radio.noise_power;
    Ok(channels as f64 * radio.bandwidth * (1.0 + snr).log2())
}

fn check_in(bounds: Bounds, v: f64, what: &str) -> Result<()> {
    if bounds.contains(v) {
        Ok(())
    } else {
        Err(Error::ConstraintViolation(format!("{what} {v} outside [{}, {}]", bounds.min, bounds.max)))
    }
}

pub fn exec_cost_local(task: &Task, freq: f64, freq_bounds: Bounds, kappa_md: f64) -> Result<CostBreakdown> {
    check_in(freq_bounds, freq, "MD frequency")?;
    Ok(local_cost(task, freq, kappa_md))
}

pub(crate) fn local_cost(task: &Task, freq: f64, kappa: f64) -> CostBreakdown {
    CostBreakdown { delay: task.cycles / freq, energy: kappa * task.cycles * freq * freq }
}

/// Radio link of one MD towards the UAV: allocated channels and 3-D distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub channels: u32,
    pub distance: f64,
}

/// Uplink/downlink rates for given MD and UAV transmit powers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Rates {
    pub up: f64,
    pub down: f64,
}

impl Rates {
    pub(crate) fn new(link: Link, md_power: f64, uav_power: f64, radio: &RadioParams) -> Result<Self> {
        Ok(Self {
            up: transmission_rate(link.channels, md_power, link.distance, radio)?,
            down: transmission_rate(link.channels, uav_power, link.distance, radio)?,
        })
    }
}

// Transfer time and transmitter energy; a zero-bit transfer is free even
// over a zero-rate link.
fn transfer(bits: f64, rate: f64, power: f64) -> (f64, f64) {
    if bits == 0.0 {
        (0.0, 0.0)
    } else {
        let t = bits / rate;
        (t, power * t)
    }
}

pub(crate) fn uav_cost(task: &Task, rates: Rates, md_power: f64, uav_power: f64, uav_freq: f64, kappa_uav: f64) -> CostBreakdown {
    let (t_up, e_up) = transfer(task.input_bits, rates.up, md_power);
    let (t_down, e_down) = transfer(task.output_bits, rates.down, uav_power);
    CostBreakdown {
        delay: t_up + task.cycles / uav_freq + t_down,
        energy: e_up + kappa_uav * task.cycles * uav_freq * uav_freq + e_down,
    }
}

pub(crate) fn dc_cost(task: &Task, rates: Rates, md_power: f64, uav_power: f64, dc: &DataCenterParams) -> CostBreakdown {
    let (t_up, e_up) = transfer(task.input_bits, rates.up, md_power);
    let (t_down, e_down) = transfer(task.output_bits, rates.down, uav_power);
    let backhaul = (task.input_bits + task.output_bits) / dc.backhaul_rate;
    CostBreakdown {
        delay: t_up + backhaul + dc.backhaul_latency + task.cycles / dc.freq + t_down,
        energy: e_up + e_down + dc.energy_per_cycle * task.cycles,
    }
}

/// Settings that shape an offloaded task's cost, each with the range it must lie in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffloadSetting {
    pub md_power: f64,
    pub uav_power: f64,
    pub uav_freq: f64,
}

pub struct OffloadBounds {
    pub md_power: Bounds,
    pub uav_power: Bounds,
    pub uav_freq: Bounds,
}

impl OffloadSetting {
    fn check(&self, b: &OffloadBounds) -> Result<()> {
        check_in(b.md_power, self.md_power, "MD power")?;
        check_in(b.uav_power, self.uav_power, "UAV power")?;
        check_in(b.uav_freq, self.uav_freq, "UAV frequency")
    }
}

pub fn exec_cost_uav(
    task: &Task,
    setting: OffloadSetting,
    bounds: &OffloadBounds,
    link: Link,
    radio: &RadioParams,
    kappa_uav: f64,
) -> Result<CostBreakdown> {
    setting.check(bounds)?;
    let rates = Rates::new(link, setting.md_power, setting.uav_power, radio)?;
    Ok(uav_cost(task, rates, setting.md_power, setting.uav_power, setting.uav_freq, kappa_uav))
}

pub fn exec_cost_dc(
    task: &Task,
    setting: OffloadSetting,
    bounds: &OffloadBounds,
    link: Link,
    radio: &RadioParams,
    dc: &DataCenterParams,
) -> Result<CostBreakdown> {
    setting.check(bounds)?;
    let rates = Rates::new(link, setting.md_power, setting.uav_power, radio)?;
    Ok(dc_cost(task, rates, setting.md_power, setting.uav_power, dc))
}

/// Costs of one task at each site, indexed by [`Site::index`].
pub type SiteCosts = [CostBreakdown; 3];

/// `D_j(t)`: chosen-site delay plus `epsilon` times chosen-site energy, summed
/// over the MD's tasks.
pub fn utility_md(assignments: &[Assignment], costs: &[SiteCosts], epsilon: f64) -> Result<f64> {
    if assignments.len() != costs.len() {
        return Err(Error::InvariantViolation(format!(
            "{} assignments for {} cost rows",
            assignments.len(),
            costs.len()
        )));
    }
    let mut total = 0.0;
    for (a, c) in assignments.iter().zip(costs) {
        total += c[a.site()?.index()].weighted(epsilon);
    }
    Ok(total)
}

/// `S(t)`: sum of per-MD utilities.
pub fn total_utility(per_md: &[f64]) -> f64 {
    per_md.iter().sum()
}

/// `L(t) = S(t) + epsilon * E_u(t)`.
pub fn objective(utility: f64, movement_energy: f64, epsilon: f64) -> f64 {
    utility + epsilon * movement_energy
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn task(cycles: f64, input: f64, output: f64) -> Task {
        Task { md: 0, index: 0, cycles, input_bits: input, output_bits: output, arrival_slot: 0 }
    }

    fn offload_bounds() -> OffloadBounds {
        OffloadBounds {
            md_power: Bounds::new(30e-3, 70e-3),
            uav_power: Bounds::new(40e-3, 80e-3),
            uav_freq: Bounds::new(1e9, 2e9),
        }
    }

    fn midpoint() -> OffloadSetting {
        OffloadSetting { md_power: 50e-3, uav_power: 60e-3, uav_freq: 1.5e9 }
    }

    #[test]
    fn rate_edge_cases() {
        let radio = RadioParams::default();
        assert_eq!(transmission_rate(3, 0.0, 100.0, &radio).unwrap(), 0.0);
        let one = transmission_rate(1, 0.05, 100.0, &radio).unwrap();
        let two = transmission_rate(2, 0.05, 100.0, &radio).unwrap();
        assert_relative_eq!(two, 2.0 * one, max_relative = 1e-15);
        assert!(matches!(transmission_rate(0, 0.05, 100.0, &radio), Err(Error::NoLink)));
    }

    #[test]
    fn unit_snr_gives_one_bit_per_hertz() {
        let radio = RadioParams { bandwidth: 1e6, noise_power: 1e-7, reference_gain: 1e-3, path_loss_exponent: 2.0 };
        // p * g0 / d^2 / N0 = 1e-2 * 1e-3 / 100 / 1e-7 = 1
        let r = transmission_rate(1, 1e-2, 10.0, &radio).unwrap();
        assert_relative_eq!(r, 1e6, max_relative = 1e-12);
    }

    #[test]
    fn rate_monotonicity() {
        let radio = RadioParams::default();
        let r = |c, p, d| transmission_rate(c, p, d, &radio).unwrap();
        assert!(r(2, 0.05, 100.0) > r(1, 0.05, 100.0));
        assert!(r(1, 0.06, 100.0) > r(1, 0.05, 100.0));
        assert!(r(1, 0.05, 200.0) < r(1, 0.05, 100.0));
    }

    #[test]
    fn local_examples() {
        let b = Bounds::new(0.5e9, 2e9);
        let c = exec_cost_local(&task(1e9, 1.0, 1.0), 1e9, b, 1e-28).unwrap();
        assert_relative_eq!(c.delay, 1.0);
        assert_relative_eq!(c.energy, 0.1, max_relative = 1e-12);
        let d = exec_cost_local(&task(1e9, 1.0, 1.0), 2e9, b, 1e-28).unwrap();
        assert_relative_eq!(d.delay, c.delay / 2.0);
        assert_relative_eq!(d.energy, c.energy * 4.0, max_relative = 1e-12);
        assert!(matches!(
            exec_cost_local(&task(1e9, 1.0, 1.0), 3e9, b, 1e-28),
            Err(Error::ConstraintViolation(_))
        ));
    }

    #[test]
    fn zero_output_drops_downlink() {
        let radio = RadioParams::default();
        let link = Link { channels: 4, distance: 60.0 };
        let t = task(1e9, 1e6, 0.0);
        let c = exec_cost_uav(&t, midpoint(), &offload_bounds(), link, &radio, 1e-28).unwrap();
        let up = transmission_rate(4, 50e-3, 60.0, &radio).unwrap();
        assert_relative_eq!(c.delay, 1e6 / up + 1e9 / 1.5e9, max_relative = 1e-12);
        assert_relative_eq!(c.energy, 50e-3 * 1e6 / up + 1e-28 * 1e9 * 2.25e18, max_relative = 1e-12);
    }

    #[test]
    fn overhead_beats_offset() {
        let radio = RadioParams::default();
        let md = Position::new(100.0, 100.0);
        let t = task(1e9, 1e6, 1e5);
        let cost = |uav: Position| {
            let link = Link { channels: 4, distance: distance_3d(md, uav, 50.0) };
            exec_cost_uav(&t, midpoint(), &offload_bounds(), link, &radio, 1e-28).unwrap()
        };
        let over = cost(md);
        let off = cost(Position::new(220.0, 100.0));
        assert!(over.delay < off.delay && over.energy < off.energy);
    }

    #[test]
    fn no_channels_means_no_offloading() {
        let radio = RadioParams::default();
        let link = Link { channels: 0, distance: 60.0 };
        let t = task(1e9, 1e6, 1e5);
        assert!(matches!(exec_cost_uav(&t, midpoint(), &offload_bounds(), link, &radio, 1e-28), Err(Error::NoLink)));
        assert!(matches!(
            exec_cost_dc(&t, midpoint(), &offload_bounds(), link, &radio, &DataCenterParams::default()),
            Err(Error::NoLink)
        ));
    }

    #[test]
    fn dc_limits() {
        let radio = RadioParams::default();
        let link = Link { channels: 4, distance: 60.0 };
        let dc = DataCenterParams::default();
        let tiny = task(1e-9, 1e-9, 1e-9);
        let c = exec_cost_dc(&tiny, midpoint(), &offload_bounds(), link, &radio, &dc).unwrap();
        assert_relative_eq!(c.delay, dc.backhaul_latency, max_relative = 1e-9);
        let fast = DataCenterParams { freq: f64::INFINITY, ..dc.clone() };
        let t = task(1e9, 1e6, 1e5);
        let slow = exec_cost_dc(&t, midpoint(), &offload_bounds(), link, &radio, &dc).unwrap();
        let quick = exec_cost_dc(&t, midpoint(), &offload_bounds(), link, &radio, &fast).unwrap();
        assert_relative_eq!(slow.delay - quick.delay, 1e9 / dc.freq, max_relative = 1e-9);
    }

    #[test]
    fn out_of_range_settings_are_rejected() {
        let radio = RadioParams::default();
        let link = Link { channels: 4, distance: 60.0 };
        let bad = OffloadSetting { uav_freq: 2.5e9, ..midpoint() };
        assert!(matches!(
            exec_cost_uav(&task(1.0, 1.0, 1.0), bad, &offload_bounds(), link, &radio, 1e-28),
            Err(Error::ConstraintViolation(_))
        ));
    }

    #[test]
    fn utility_examples() {
        let md = CostBreakdown { delay: 1.0, energy: 2.0 };
        let other = CostBreakdown { delay: 9.0, energy: 9.0 };
        let costs = [[md, other, other]];
        assert_relative_eq!(utility_md(&[Assignment::to(Site::Md)], &costs, 0.5).unwrap(), 2.0);
        assert_relative_eq!(utility_md(&[Assignment::to(Site::Md)], &costs, 0.0).unwrap(), 1.0);
        let bad = Assignment { x_md: true, x_uav: true, x_dc: false };
        assert!(matches!(utility_md(&[bad], &costs, 0.5), Err(Error::InvariantViolation(_))));
        assert!(matches!(utility_md(&[Assignment::default()], &costs, 0.5), Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn three_tasks_mixed_sites_against_enumeration() {
        let c = |d: f64, e: f64| CostBreakdown { delay: d, energy: e };
        let costs = [
            [c(1.0, 0.2), c(0.4, 0.9), c(0.3, 1.5)],
            [c(2.0, 0.1), c(0.7, 0.3), c(0.5, 2.0)],
            [c(0.3, 0.05), c(0.6, 0.4), c(0.2, 1.1)],
        ];
        let eps = 0.35;
        // Enumerate all 27 assignments with an independent evaluator.
        let mut table = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                for d in 0..3 {
                    let direct = costs[0][a].delay + costs[1][b].delay + costs[2][d].delay
                        + eps * (costs[0][a].energy + costs[1][b].energy + costs[2][d].energy);
                    table.push(((a, b, d), direct));
                }
            }
        }
        assert_eq!(table.len(), 27);
        for &((a, b, d), direct) in &table {
            let asg = [a, b, d].map(|i| Assignment::to(Site::from_index(i).unwrap()));
            let got = utility_md(&asg, &costs, eps).unwrap();
            assert!((got - direct).abs() <= 1e-12 * direct);
        }
        // Spot check (MD, UAV, DC): 1.0 + 0.7 + 0.2 + 0.35 * (0.2 + 0.3 + 1.1) = 2.46
        let spot = [Site::Md, Site::Uav, Site::Dc].map(Assignment::to);
        assert_relative_eq!(utility_md(&spot, &costs, eps).unwrap(), 2.46, max_relative = 1e-12);
    }

    #[test]
    fn aggregate_and_objective() {
        assert_eq!(total_utility(&[3.5]), 3.5);
        assert_eq!(total_utility(&[]), 0.0);
        assert_eq!(total_utility(&[1.5, 2.0]), 3.5);
        assert_eq!(objective(10.0, 10.0, 0.5), 15.0);
        assert_eq!(objective(7.0, 0.0, 0.8), 7.0);
        assert!(objective(7.0, 3.0, 0.8) >= objective(7.0, 3.0, 0.4));
    }

    #[test]
    fn full_numeric_case_matches_hand_calculator() {
        // Hand calculation at the default midpoints written out term by term:
        // d = sqrt(120^2 + 50^2) = 130 m, g = 1e-4 / 130^2, N0 = 1e-13 W, B = 1 MHz, 5 channels.
        let radio = RadioParams::default();
        let dc = DataCenterParams::default();
        let t = task(1.2e9, 1.2e6, 0.2e6);
        let d = 130.0_f64;
        let snr_up = 0.05 * 1e-4 / (d * d) / 1e-13;
        let snr_down = 0.06 * 1e-4 / (d * d) / 1e-13;
        let r_up = 5.0 * 1e6 * (1.0 + snr_up).ln() / std::f64::consts::LN_2;
        let r_down = 5.0 * 1e6 * (1.0 + snr_down).ln() / std::f64::consts::LN_2;
        let uav_delay = 1.2e6 / r_up + 1.2e9 / 1.5e9 + 0.2e6 / r_down;
        let uav_energy = 0.05 * 1.2e6 / r_up + 1e-28 * 1.2e9 * 1.5e9 * 1.5e9 + 0.06 * 0.2e6 / r_down;
        let dc_delay = 1.2e6 / r_up + 1.2e6 / 1e8 + 0.02 + 1.2e9 / 1e10 + 0.2e6 / 1e8 + 0.2e6 / r_down;
        let dc_energy = 0.05 * 1.2e6 / r_up + 0.06 * 0.2e6 / r_down + 1e-9 * 1.2e9;

        let md = Position::new(0.0, 0.0);
        let uav = Position::new(120.0, 0.0);
        let link = Link { channels: 5, distance: distance_3d(md, uav, 50.0) };
        assert_relative_eq!(link.distance, 130.0, max_relative = 1e-12);
        let u = exec_cost_uav(&t, midpoint(), &offload_bounds(), link, &radio, 1e-28).unwrap();
        let v = exec_cost_dc(&t, midpoint(), &offload_bounds(), link, &radio, &dc).unwrap();
        assert_relative_eq!(u.delay, uav_delay, max_relative = 1e-12);
        assert_relative_eq!(u.energy, uav_energy, max_relative = 1e-12);
        assert_relative_eq!(v.delay, dc_delay, max_relative = 1e-12);
        assert_relative_eq!(v.energy, dc_energy, max_relative = 1e-12);
    }
}
