//! Task-assignment problems for one slot and their solutions.
//!
//! A candidate is encoded as a flat real vector:
//!
//! ```text
//! [ t0_md, t0_uav, t0_dc,  t1_md, ...,   p_0, f_0,  p_1, f_1, ...,   p_uav, f_uav ]
//!   \____ 3 per task ____/                \____ 2 per MD ____/        \_ UAV VM _/
//! ```
//!
//! The argmax of each task triple selects the execution site (lowest index
//! wins ties, and sites without a radio link are masked out), so decoded
//! candidates are one-hot by construction. Power and frequency coordinates are
//! clamped into their boxes.

pub mod brute;
pub mod pso;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelAllocation;
use crate::cost::{
    self, distance_3d, utility_md, Assignment, CostBreakdown, Link, OffloadBounds, OffloadSetting, Rates,
    ResourceSetting, Site, SiteCosts,
};
use crate::error::{Error, Result};
use crate::model::{Bounds, Position, Scenario};
use crate::workload::Task;

pub use brute::brute_force_assign;
pub use pso::{pso_optimize, pso_optimize_with, PsoParams};

const SITE_BOX: Bounds = Bounds { min: 0.0, max: 1.0 };

/// One slot's assignment problem: who has which tasks, how many channels each
/// MD holds and where the UAV is.
#[derive(Debug, Clone)]
pub struct Instance<'a> {
    pub scenario: &'a Scenario,
    pub tasks: &'a [Task],
    pub channels: &'a ChannelAllocation,
    pub uav_pos: Position,
    links: Vec<Link>,
}

/// A decoded candidate: one site per task plus every power/frequency value.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub sites: Vec<Site>,
    pub resources: ResourceSetting,
}

/// Cost summary of a [`Decision`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Evaluation {
    /// `S(t)`.
    pub utility: f64,
    pub delay_sum: f64,
    pub energy_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub assignments: Vec<Assignment>,
    pub resources: ResourceSetting,
    pub channels: ChannelAllocation,
    /// `S*(t)` of this solution.
    pub fitness: f64,
    pub delay_sum: f64,
    pub energy_sum: f64,
}

impl Solution {
    pub fn sites(&self) -> Result<Vec<Site>> {
        self.assignments.iter().map(Assignment::site).collect()
    }
}

/// Result of an iterative optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOutcome {
    pub solution: Solution,
    /// Best-so-far fitness, index 0 being the initial population.
    pub trace: Vec<f64>,
    /// Encoded best candidate, usable as a warm start.
    pub best_position: Vec<f64>,
    pub iterations: usize,
    /// Last iteration whose best-so-far improvement was at least the threshold.
    pub converged_at: usize,
}

impl<'a> Instance<'a> {
    pub fn new(
        scenario: &'a Scenario,
        tasks: &'a [Task],
        channels: &'a ChannelAllocation,
        uav_pos: Position,
    ) -> Result<Self> {
        let k = scenario.md_count();
        if channels.md_count() != k {
            return Err(Error::InvalidParameter(format!(
                "channel allocation covers {} MDs, scenario has {k}",
                channels.md_count()
            )));
        }
        if channels.total() > scenario.channels as u64 {
            return Err(Error::ConstraintViolation(format!(
                "{} channels allocated, only {} exist",
                channels.total(),
                scenario.channels
            )));
        }
        if let Some(t) = tasks.iter().find(|t| t.md >= k) {
            return Err(Error::InvalidParameter(format!("task owner {} out of range", t.md)));
        }
        let links = scenario
            .md_positions
            .iter()
            .zip(&channels.channels)
            .map(|(&md, &c)| Link { channels: c, distance: distance_3d(md, uav_pos, scenario.uav.altitude) })
            .collect();
        Ok(Self { scenario, tasks, channels, uav_pos, links })
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn md_count(&self) -> usize {
        self.scenario.md_count()
    }

    pub fn link(&self, md: usize) -> Link {
        self.links[md]
    }

    /// Whether MD `md` can offload at all (it holds at least one channel).
    pub fn can_offload(&self, md: usize) -> bool {
        self.links[md].channels > 0
    }

    pub fn site_available(&self, md: usize, site: Site) -> bool {
        !site.needs_link() || self.can_offload(md)
    }

    pub fn dimension(&self) -> usize {
        3 * self.task_count() + 2 * self.md_count() + 2
    }

    fn resource_offset(&self) -> usize {
        3 * self.task_count()
    }

    /// Box of every coordinate of the encoding.
    pub fn bounds(&self) -> Vec<Bounds> {
        let s = self.scenario;
        let mut b = vec![SITE_BOX; 3 * self.task_count()];
        for _ in 0..self.md_count() {
            b.push(s.md_power);
            b.push(s.md_freq);
        }
        b.push(s.uav.power);
        b.push(s.uav.freq);
        b
    }

    pub fn decode(&self, x: &[f64]) -> Result<Decision> {
        if x.len() != self.dimension() {
            return Err(Error::Encoding { expected: self.dimension(), got: x.len() });
        }
        let sites = self
            .tasks
            .iter()
            .enumerate()
            .map(|(i, t)| self.pick_site(t.md, &x[3 * i..3 * i + 3]))
            .collect();
        let s = self.scenario;
        let off = self.resource_offset();
        let k = self.md_count();
        let md_power = (0..k).map(|j| s.md_power.clamp(x[off + 2 * j])).collect();
        let md_freq = (0..k).map(|j| s.md_freq.clamp(x[off + 2 * j + 1])).collect();
        let resources = ResourceSetting {
            md_power,
            md_freq,
            uav_power: s.uav.power.clamp(x[off + 2 * k]),
            uav_freq: s.uav.freq.clamp(x[off + 2 * k + 1]),
        };
        Ok(Decision { sites, resources })
    }

    fn pick_site(&self, md: usize, triple: &[f64]) -> Site {
        let mut best = Site::Md;
        let mut best_v = triple[0];
        for site in [Site::Uav, Site::Dc] {
            let v = triple[site.index()];
            if self.site_available(md, site) && v > best_v {
                best = site;
                best_v = v;
            }
        }
        best
    }

    /// Inverse of [`Instance::decode`] up to clamping: one-hot triples.
    pub fn encode(&self, d: &Decision) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dimension());
        for site in &d.sites {
            let mut triple = [0.0; 3];
            triple[site.index()] = 1.0;
            x.extend_from_slice(&triple);
        }
        for j in 0..self.md_count() {
            x.push(d.resources.md_power[j]);
            x.push(d.resources.md_freq[j]);
        }
        x.push(d.resources.uav_power);
        x.push(d.resources.uav_freq);
        x
    }

    /// Unchecked per-task cost at a chosen site. `rates` must belong to the task's MD.
    fn chosen_cost(&self, task: &Task, site: Site, r: &ResourceSetting, rates: Option<Rates>) -> CostBreakdown {
        let c = &self.scenario.compute;
        let j = task.md;
        match (site, rates) {
            (Site::Md, _) => cost::local_cost(task, r.md_freq[j], c.kappa_md),
            (Site::Uav, Some(rates)) => cost::uav_cost(task, rates, r.md_power[j], r.uav_power, r.uav_freq, c.kappa_uav),
            (Site::Dc, Some(rates)) => cost::dc_cost(task, rates, r.md_power[j], r.uav_power, &self.scenario.dc),
            (_, None) => CostBreakdown { delay: f64::INFINITY, energy: f64::INFINITY },
        }
    }

    fn md_rates(&self, r: &ResourceSetting) -> Vec<Option<Rates>> {
        (0..self.md_count())
            .map(|j| Rates::new(self.links[j], r.md_power[j], r.uav_power, &self.scenario.radio).ok())
            .collect()
    }

    /// Fast evaluation used inside the optimizers. Offloading without a link
    /// evaluates to infinity.
    pub fn evaluate(&self, d: &Decision) -> Evaluation {
        let eps = self.scenario.epsilon;
        let rates = self.md_rates(&d.resources);
        let mut e = Evaluation::default();
        for (task, &site) in self.tasks.iter().zip(&d.sites) {
            let c = self.chosen_cost(task, site, &d.resources, rates[task.md]);
            e.delay_sum += c.delay;
            e.energy_sum += c.energy;
            e.utility += c.weighted(eps);
        }
        e
    }

    pub fn fitness(&self, d: &Decision) -> f64 {
        self.evaluate(d).utility
    }

    /// Checked costs of every task at every site (unavailable sites are infinite).
    pub fn site_costs(&self, r: &ResourceSetting) -> Result<Vec<SiteCosts>> {
        let s = self.scenario;
        let bounds = OffloadBounds { md_power: s.md_power, uav_power: s.uav.power, uav_freq: s.uav.freq };
        let inf = CostBreakdown { delay: f64::INFINITY, energy: f64::INFINITY };
        self.tasks
            .iter()
            .map(|t| {
                let j = t.md;
                let local = cost::exec_cost_local(t, r.md_freq[j], s.md_freq, s.compute.kappa_md)?;
                if !self.can_offload(j) {
                    return Ok([local, inf, inf]);
                }
                let setting = OffloadSetting { md_power: r.md_power[j], uav_power: r.uav_power, uav_freq: r.uav_freq };
                let uav = cost::exec_cost_uav(t, setting, &bounds, self.links[j], &s.radio, s.compute.kappa_uav)?;
                let dc = cost::exec_cost_dc(t, setting, &bounds, self.links[j], &s.radio, &s.dc)?;
                Ok([local, uav, dc])
            })
            .collect()
    }

    /// `S(t)` through the checked path: per-MD utilities summed.
    pub fn utility_checked(&self, assignments: &[Assignment], r: &ResourceSetting) -> Result<f64> {
        let costs = self.site_costs(r)?;
        let mut per_md = vec![0.0; self.md_count()];
        for j in 0..self.md_count() {
            let idx: Vec<usize> = (0..self.task_count()).filter(|&i| self.tasks[i].md == j).collect();
            let a: Vec<Assignment> = idx.iter().map(|&i| assignments[i]).collect();
            let c: Vec<SiteCosts> = idx.iter().map(|&i| costs[i]).collect();
            per_md[j] = utility_md(&a, &c, self.scenario.epsilon)?;
        }
        Ok(cost::total_utility(&per_md))
    }

    pub fn solution(&self, d: &Decision) -> Solution {
        let e = self.evaluate(d);
        Solution {
            assignments: d.sites.iter().map(|&s| Assignment::to(s)).collect(),
            resources: d.resources.clone(),
            channels: self.channels.clone(),
            fitness: e.utility,
            delay_sum: e.delay_sum,
            energy_sum: e.energy_sum,
        }
    }

    pub fn decision_of(&self, sol: &Solution) -> Result<Decision> {
        Ok(Decision { sites: sol.sites()?, resources: sol.resources.clone() })
    }
}

fn check_box(b: Bounds, v: f64, what: &str) -> Result<()> {
    if b.contains(v) {
        Ok(())
    } else {
        Err(Error::ConstraintViolation(format!("{what} = {v} outside [{}, {}]", b.min, b.max)))
    }
}

/// Checks every constraint of the joint problem on `sol`: one-hot sites, all
/// power/frequency boxes, the channel budget, offloading only over an existing
/// link, and that the stored fitness equals a fresh evaluation.
pub fn validate(sol: &Solution, inst: &Instance<'_>) -> Result<()> {
    let s = inst.scenario;
    let k = inst.md_count();
    if sol.assignments.len() != inst.task_count() {
        return Err(Error::InvariantViolation(format!(
            "{} assignments for {} tasks",
            sol.assignments.len(),
            inst.task_count()
        )));
    }
    let r = &sol.resources;
    if r.md_power.len() != k || r.md_freq.len() != k {
        return Err(Error::InvariantViolation("resource vectors do not cover every MD".into()));
    }
    for j in 0..k {
        check_box(s.md_power, r.md_power[j], "MD power")?;
        check_box(s.md_freq, r.md_freq[j], "MD frequency")?;
    }
    check_box(s.uav.power, r.uav_power, "UAV power")?;
    check_box(s.uav.freq, r.uav_freq, "UAV frequency")?;
    if sol.channels.total() > s.channels as u64 {
        return Err(Error::ConstraintViolation(format!(
            "channel budget exceeded: {} > {}",
            sol.channels.total(),
            s.channels
        )));
    }
    if sol.channels.channels != inst.channels.channels {
        return Err(Error::InvariantViolation("solution channels differ from the instance's".into()));
    }
    for (a, t) in sol.assignments.iter().zip(inst.tasks) {
        let site = a.site()?;
        if !inst.site_available(t.md, site) {
            return Err(Error::ConstraintViolation(format!(
                "task {}-{} offloaded to {} without a channel",
                t.md,
                t.index,
                site.label()
            )));
        }
    }
    if !(sol.fitness.is_finite() && sol.fitness >= 0.0) {
        return Err(Error::InvariantViolation(format!("fitness {} not finite and nonnegative", sol.fitness)));
    }
    let again = inst.utility_checked(&sol.assignments, r)?;
    if (again - sol.fitness).abs() > 1e-9 * again.abs().max(1e-12) {
        return Err(Error::InvariantViolation(format!(
            "stored fitness {} differs from re-evaluation {again}",
            sol.fitness
        )));
    }
    Ok(())
}

/// Index of the last step whose improvement was at least `threshold`.
pub fn converged_at(trace: &[f64], threshold: f64) -> usize {
    trace.windows(2).rposition(|w| w[0] - w[1] >= threshold).map_or(0, |i| i + 1)
}

/// Shared stopping rule: stop once the best-so-far value has improved by less
/// than `threshold` for `patience` consecutive iterations, or at the cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    pub threshold: f64,
    pub patience: usize,
    pub max_iterations: usize,
}

impl StopRule {
    pub(crate) fn tracker(&self) -> StallTracker {
        StallTracker { rule: *self, stalled: 0 }
    }
}

pub(crate) struct StallTracker {
    rule: StopRule,
    stalled: usize,
}

impl StallTracker {
    /// Record one iteration; returns true when the loop should stop.
    pub(crate) fn step(&mut self, iteration: usize, previous: f64, current: f64) -> bool {
        if previous - current < self.rule.threshold {
            self.stalled += 1;
        } else {
            self.stalled = 0;
        }
        self.stalled >= self.rule.patience.max(1) || iteration >= self.rule.max_iterations
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::channel::{allocate_channels, GammaWeighting};
    use crate::workload::{generate_slot, pending_input_per_md, WorkloadParams};

    pub fn task(md: usize, index: usize, bits: f64) -> Task {
        Task { md, index, cycles: 1000.0 * bits, input_bits: bits, output_bits: bits / 10.0, arrival_slot: 0 }
    }

    pub fn scenario(md_count: usize, seed: u64) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Scenario::with_random_layout(1000.0, md_count, &mut rng)
    }

    /// A seeded instance owning its data.
    pub struct Owned {
        pub scenario: Scenario,
        pub tasks: Vec<Task>,
        pub channels: ChannelAllocation,
        pub uav: Position,
    }

    impl Owned {
        pub fn instance(&self) -> Instance<'_> {
            Instance::new(&self.scenario, &self.tasks, &self.channels, self.uav).unwrap()
        }
    }

    pub fn random_owned(md_count: usize, max_tasks: usize, seed: u64) -> Owned {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scenario = Scenario::with_random_layout(1000.0, md_count, &mut rng);
        scenario.epsilon = rand::Rng::random_range(&mut rng, 0.05..=1.0);
        let params = WorkloadParams::uniform(md_count, 0.6);
        let mut tasks = Vec::new();
        while tasks.is_empty() {
            tasks = generate_slot(&params, 0, &mut rng);
            tasks.truncate(max_tasks);
        }
        let channels = allocate_channels(&pending_input_per_md(&tasks, md_count), scenario.channels, &GammaWeighting::default()).unwrap();
        let uav = Position::new(rand::Rng::random_range(&mut rng, 0.0..1000.0), rand::Rng::random_range(&mut rng, 0.0..1000.0));
        Owned { scenario, tasks, channels, uav }
    }
}
