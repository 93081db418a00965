//! Seeded multi-run experiments over the six policies.
//!
//! Every run draws one world (MD layout, weighting factor, task batch, UAV
//! start, obstacles) from its own sub-seeds, and all policies are evaluated on
//! that same draw. The target MD is the one with the most pending input. All
//! policies except ACO fly the straight line from the start cell to the target
//! MD's cell, one cell per slot; ACO flies its obstacle-avoiding path.
//!
//! * `RAN`: random channels, random decisions.
//! * `GA`, `PSO`: random channels, optimized decisions at every slot.
//! * `CA`: Gamma-weighted channels plus PSO at every slot.
//! * `TDO`: `CA`, stopping at the slot with the lowest `L`.
//! * `ACO`: `TDO` along the ACO trajectory through the obstacle world.
//!
//! Rows are emitted for every slot of the flown path. After a policy stops it
//! hovers, so later rows repeat the values at the stopping slot.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aco::{aco_plan, AcoParams};
use crate::assign::PsoParams;
use crate::baselines::{ga_optimize, random_policy, GaParams};
use crate::channel::{allocate_channels, random_channels, ChannelAllocation};
use crate::config::ExperimentConfig;
use crate::cost::Site;
use crate::error::{Error, Result};
use crate::grid::{generate_obstacles, straight_line, Cell, GridWorld};
use crate::model::{random_layout, Position, Scenario};
use crate::report::{ConvergenceTrace, Manifest, ReportRow, RunSummary};
use crate::seeds::{derive, RunSeeds};
use crate::tdo::{tdo_optimize, tdo_optimize_with, SlotSolve, TransmissionPlan};
use crate::trajectory::Trajectory;
use crate::workload::{first_nonempty_batch, pending_input_per_md, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Policy {
    Ran,
    Ga,
    Pso,
    Ca,
    Tdo,
    Aco,
}

impl Policy {
    pub const ALL: [Policy; 6] = [Policy::Ran, Policy::Ga, Policy::Pso, Policy::Ca, Policy::Tdo, Policy::Aco];

    pub fn label(self) -> &'static str {
        match self {
            Policy::Ran => "RAN",
            Policy::Ga => "GA",
            Policy::Pso => "PSO",
            Policy::Ca => "CA",
            Policy::Tdo => "TDO",
            Policy::Aco => "ACO",
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 100
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown policy {s:?} (known: RAN, GA, PSO, CA, TDO, ACO)")))
    }
}

/// Everything drawn for one run, shared by all policies.
#[derive(Debug, Clone, PartialEq)]
pub struct RunWorld {
    pub seeds: RunSeeds,
    pub scenario: Scenario,
    pub tasks: Vec<Task>,
    pub pending: Vec<f64>,
    pub target_md: usize,
    pub start: Cell,
    pub goal: Cell,
    /// Obstacle-free grid the straight-line policies fly over.
    pub open_world: GridWorld,
    pub obstacle_world: GridWorld,
    pub straight: Trajectory,
    pub gamma_channels: ChannelAllocation,
    pub random_channels: ChannelAllocation,
}

/// Index of the MD with the most pending input, lowest index on ties.
pub fn target_md(pending: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in pending.iter().enumerate() {
        if v > pending[best] {
            best = j;
        }
    }
    best
}

pub fn build_run_world(cfg: &ExperimentConfig, run: usize) -> Result<RunWorld> {
    let seeds = RunSeeds::new(cfg.experiment.base_seed, run);
    let sc = &cfg.scenario;
    let k = sc.md_count;
    let positions = match sc.fixed_positions() {
        Some(p) => p,
        None => random_layout(sc.side_m, k, &mut ChaCha8Rng::seed_from_u64(seeds.layout)),
    };
    let epsilon = match sc.epsilon {
        Some(e) => e,
        None => ChaCha8Rng::seed_from_u64(seeds.epsilon).random_range(sc.epsilon_range[0]..=sc.epsilon_range[1]),
    };
    let scenario = sc.build(positions, epsilon)?;
    let workload = cfg.workload.params(k, seeds.workload)?;
    let tasks = first_nonempty_batch(
        &workload,
        cfg.workload.max_slots,
        &mut ChaCha8Rng::seed_from_u64(seeds.workload),
    )?;
    let pending = pending_input_per_md(&tasks, k);
    let target = target_md(&pending);

    let open_world = GridWorld::new(sc.grid_cells, sc.cell_size())?;
    let mut srng = ChaCha8Rng::seed_from_u64(seeds.start);
    let half = sc.side_m / 2.0;
    let start_pos = Position::new(srng.random_range(0.0..=half), srng.random_range(0.0..=half));
    let start = open_world.cell_of(start_pos);
    let goal = open_world.cell_of(scenario.md_positions[target]);
    let obstacle_world = generate_obstacles(
        sc.grid_cells,
        sc.cell_size(),
        (sc.obstacle_count[0], sc.obstacle_count[1]),
        start,
        goal,
        &mut ChaCha8Rng::seed_from_u64(seeds.obstacles),
    )?;
    let straight = Trajectory::from_cells(&open_world, straight_line(start, goal), cfg.aco.turn_exponent)?;
    let gamma_channels = allocate_channels(&pending, scenario.channels, &sc.gamma())?;
    let random_channels =
        random_channels(k, scenario.channels, &mut ChaCha8Rng::seed_from_u64(seeds.channels));
    Ok(RunWorld {
        seeds,
        scenario,
        tasks,
        pending,
        target_md: target,
        start,
        goal,
        open_world,
        obstacle_world,
        straight,
        gamma_channels,
        random_channels,
    })
}

/// One policy's outcome in one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutcome {
    pub policy: Policy,
    pub plan: TransmissionPlan,
    pub trajectory: Trajectory,
    /// Whether the policy stops at `t*` (otherwise it flies the whole path).
    pub stops: bool,
    pub path_energy: f64,
}

impl PolicyOutcome {
    pub fn stop_slot(&self) -> usize {
        if self.stops {
            self.plan.t_star
        } else {
            self.plan.per_slot_trace.len()
        }
    }

    /// Site counts `[MD, UAV, DC]` of the solution in force when transmitting.
    pub fn site_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for a in &self.plan.slot_solutions[self.stop_slot() - 1].assignments {
            if let Ok(s) = a.site() {
                counts[s.index()] += 1;
            }
        }
        counts
    }

    pub fn rows(&self, run: usize, seed: u64, epsilon: f64) -> Vec<ReportRow> {
        let stop = self.stop_slot();
        self.plan
            .per_slot_trace
            .iter()
            .map(|r| {
                let (src, iters) = if r.t > stop {
                    (self.plan.record(stop), 0)
                } else {
                    (r, r.iterations_to_converge)
                };
                ReportRow {
                    policy: self.policy.label().to_string(),
                    run,
                    seed,
                    epsilon,
                    timeslot: r.t,
                    s: src.utility,
                    e_u_cum: src.energy_cum,
                    l: src.objective,
                    delay_sum: src.delay_sum,
                    energy_sum: src.energy_sum,
                    iterations_to_converge: iters,
                }
            })
            .collect()
    }

    pub fn summary(&self, run: usize, epsilon: f64) -> RunSummary {
        let rec = self.plan.record(self.stop_slot());
        RunSummary {
            policy: self.policy.label().to_string(),
            run,
            epsilon,
            path_slots: self.plan.per_slot_trace.len(),
            t_stop: self.stop_slot(),
            s: rec.utility,
            e_u_cum: rec.energy_cum,
            l: rec.objective,
            path_energy: self.path_energy,
            delay_sum: rec.delay_sum,
            energy_sum: rec.energy_sum,
            first_slot_iterations: self.plan.record(1).iterations_to_converge,
        }
    }
}

/// Seeded algorithm parameters for one run.
fn pso_for(cfg: &ExperimentConfig, seeds: &RunSeeds) -> PsoParams {
    // PSO and CA share optimizer seeds so they differ only in channels.
    PsoParams { rng_seed: derive(seeds.optimizer, &[Policy::Pso.tag()]), ..cfg.pso.clone() }
}

fn aco_for(cfg: &ExperimentConfig, seeds: &RunSeeds) -> AcoParams {
    AcoParams { rng_seed: derive(seeds.optimizer, &[Policy::Aco.tag()]), ..cfg.aco.clone() }
}

fn path_energy(plan: &TransmissionPlan) -> f64 {
    plan.per_slot_trace.last().map_or(0.0, |r| r.energy_cum)
}

/// Runs the requested policies on one run's world.
pub fn run_policies(cfg: &ExperimentConfig, w: &RunWorld, policies: &[Policy]) -> Result<Vec<PolicyOutcome>> {
    let s = &w.scenario;
    let warm = cfg.experiment.warm_start;
    let outcome = |policy, plan: TransmissionPlan, trajectory: &Trajectory, stops| PolicyOutcome {
        policy,
        path_energy: path_energy(&plan),
        plan,
        trajectory: trajectory.clone(),
        stops,
    };
    let mut ca_plan: Option<TransmissionPlan> = None;
    let mut out = Vec::with_capacity(policies.len());
    for &policy in policies {
        let o = match policy {
            Policy::Ran => {
                let plan = tdo_optimize_with(&w.straight, &w.open_world, s, &w.tasks, &w.random_channels, |t, inst, _| {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive(w.seeds.random, &[t as u64]));
                    Ok(SlotSolve {
                        solution: random_policy(inst, &mut rng)?,
                        warm: None,
                        iterations_to_converge: 0,
                        trace: Vec::new(),
                    })
                })?;
                outcome(policy, plan, &w.straight, false)
            }
            Policy::Ga => {
                let base = derive(w.seeds.optimizer, &[Policy::Ga.tag()]);
                let plan = tdo_optimize_with(&w.straight, &w.open_world, s, &w.tasks, &w.random_channels, |t, inst, _| {
                    let params = GaParams { rng_seed: derive(base, &[t as u64]), ..cfg.ga.clone() };
                    let r = ga_optimize(inst, &params)?;
                    Ok(SlotSolve { solution: r.solution, warm: None, iterations_to_converge: r.converged_at, trace: r.trace })
                })?;
                outcome(policy, plan, &w.straight, false)
            }
            Policy::Pso => {
                let plan =
                    tdo_optimize(&w.straight, &w.open_world, s, &w.tasks, &w.random_channels, &pso_for(cfg, &w.seeds), warm)?;
                outcome(policy, plan, &w.straight, false)
            }
            Policy::Ca | Policy::Tdo => {
                if ca_plan.is_none() {
                    ca_plan = Some(tdo_optimize(
                        &w.straight,
                        &w.open_world,
                        s,
                        &w.tasks,
                        &w.gamma_channels,
                        &pso_for(cfg, &w.seeds),
                        warm,
                    )?);
                }
                let plan = ca_plan.clone().expect("computed above");
                outcome(policy, plan, &w.straight, policy == Policy::Tdo)
            }
            Policy::Aco => {
                let traj = aco_plan(&w.obstacle_world, w.start, w.goal, &aco_for(cfg, &w.seeds))?;
                let plan =
                    tdo_optimize(&traj, &w.obstacle_world, s, &w.tasks, &w.gamma_channels, &pso_for(cfg, &w.seeds), warm)?;
                outcome(policy, plan, &traj, true)
            }
        };
        out.push(o);
    }
    Ok(out)
}

/// Per-run details kept for plots and auxiliary files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunDetails {
    pub world: RunWorld,
    pub outcomes: Vec<PolicyOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<ReportRow>,
    pub summaries: Vec<RunSummary>,
    /// Slot-1 optimizer traces of the iterative policies.
    pub convergence: Vec<ConvergenceTrace>,
    pub manifest: Manifest,
    pub runs: Vec<RunDetails>,
}

pub const EPSILON_BINNING: &str = "10 equal-width bins over [0.05, 1.00] (width 0.095), lower edge inclusive";

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let policies = cfg.policies()?;
    let runs: Vec<RunDetails> = (0..cfg.experiment.runs)
        .into_par_iter()
        .map(|run| {
            let world = build_run_world(cfg, run)?;
            let outcomes = run_policies(cfg, &world, &policies)?;
            Ok(RunDetails { world, outcomes })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut convergence = Vec::new();
    for d in &runs {
        let run = d.world.seeds.run;
        let eps = d.world.scenario.epsilon;
        for o in &d.outcomes {
            rows.extend(o.rows(run, d.world.seeds.workload, eps));
            summaries.push(o.summary(run, eps));
            if matches!(o.policy, Policy::Ga | Policy::Pso) {
                convergence.push(ConvergenceTrace {
                    policy: o.policy.label().to_string(),
                    run,
                    trace: o.plan.slot_traces[0].clone(),
                });
            }
        }
    }
    let manifest = Manifest {
        base_seed: cfg.experiment.base_seed,
        runs: cfg.experiment.runs,
        policies: policies.iter().map(|p| p.label().to_string()).collect(),
        epsilon_binning: EPSILON_BINNING.to_string(),
        run: runs.iter().map(|d| d.world.seeds).collect(),
    };
    Ok(ExperimentResult { rows, summaries, convergence, manifest, runs })
}

/// Mean relative reduction of one weighting-factor bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionBucket {
    pub lo: f64,
    pub hi: f64,
    pub runs: usize,
    pub mean: Option<f64>,
}

pub const EPSILON_BINS: usize = 10;

fn bucket_of(eps: f64) -> usize {
    let width = (crate::model::EPSILON_MAX - crate::model::EPSILON_MIN) / EPSILON_BINS as f64;
    (((eps - crate::model::EPSILON_MIN) / width).floor().max(0.0) as usize).min(EPSILON_BINS - 1)
}

/// Per run: (epsilon, final L), keyed by run index.
fn final_l(rows: &[ReportRow], policy: &str) -> std::collections::BTreeMap<usize, (f64, f64)> {
    let mut last: std::collections::BTreeMap<usize, (usize, f64, f64)> = Default::default();
    for r in rows.iter().filter(|r| r.policy == policy) {
        let e = last.entry(r.run).or_insert((0, r.epsilon, r.l));
        if r.timeslot >= e.0 {
            *e = (r.timeslot, r.epsilon, r.l);
        }
    }
    last.into_iter().map(|(k, (_, e, l))| (k, (e, l))).collect()
}

/// `(L_base - L_policy) / L_base` per run, from each run's last row.
pub fn per_run_reduction(rows: &[ReportRow], policy: &str, baseline: &str) -> Result<Vec<(f64, f64)>> {
    let p = final_l(rows, policy);
    let b = final_l(rows, baseline);
    if p.is_empty() {
        return Err(Error::MissingPolicy(policy.to_string()));
    }
    if b.is_empty() {
        return Err(Error::MissingPolicy(baseline.to_string()));
    }
    Ok(p.iter()
        .filter_map(|(run, &(eps, lp))| b.get(run).map(|&(_, lb)| (eps, (lb - lp) / lb)))
        .collect())
}

/// Mean relative reduction of `policy` against `baseline`, bucketed by epsilon.
pub fn relative_reduction(rows: &[ReportRow], policy: &str, baseline: &str) -> Result<Vec<ReductionBucket>> {
    let per_run = per_run_reduction(rows, policy, baseline)?;
    let width = (crate::model::EPSILON_MAX - crate::model::EPSILON_MIN) / EPSILON_BINS as f64;
    let mut sums = [(0usize, 0.0f64); EPSILON_BINS];
    for (eps, red) in per_run {
        let b = bucket_of(eps);
        sums[b].0 += 1;
        sums[b].1 += red;
    }
    Ok(sums
        .iter()
        .enumerate()
        .map(|(i, &(n, sum))| ReductionBucket {
            lo: crate::model::EPSILON_MIN + i as f64 * width,
            hi: crate::model::EPSILON_MIN + (i + 1) as f64 * width,
            runs: n,
            mean: (n > 0).then(|| sum / n as f64),
        })
        .collect())
}

/// Mean over runs of the relative reduction, ignoring epsilon.
pub fn mean_relative_reduction(rows: &[ReportRow], policy: &str, baseline: &str) -> Result<f64> {
    let per_run = per_run_reduction(rows, policy, baseline)?;
    if per_run.is_empty() {
        return Err(Error::MissingPolicy(format!("no paired runs for {policy} and {baseline}")));
    }
    Ok(per_run.iter().map(|p| p.1).sum::<f64>() / per_run.len() as f64)
}

/// Writes CSVs, the manifest, run-0 artifacts and (optionally) SVG plots into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path, plots: bool) -> Result<()> {
    use crate::report::*;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_report_csv(&result.rows, &dir.join("report.csv"))?;
    write_summary_csv(&result.summaries, &dir.join("summary.csv"))?;
    write_convergence_csv(&result.convergence, &dir.join("convergence.csv"))?;
    write_manifest(&result.manifest, &dir.join("manifest.toml"))?;
    write_reduction_csv(&result.rows, &dir.join("reduction.csv"))?;
    if let Some(first) = result.runs.first() {
        crate::workload::write_tasks_csv(&first.world.tasks, &dir.join("tasks.csv"))?;
        write_channels_csv(&result.runs, &dir.join("channels.csv"))?;
        write_slot_trace_csv(&result.runs, &dir.join("slot_trace.csv"))?;
        if let Some(aco) = first.outcomes.iter().find(|o| o.policy == Policy::Aco) {
            let map = first.world.obstacle_world.render_text(&aco.trajectory.cells);
            std::fs::write(dir.join("aco_map.txt"), map).map_err(|e| Error::io(dir.join("aco_map.txt"), e))?;
            write_cells_csv(&aco.trajectory.cells, &dir.join("aco_path.csv"))?;
        }
    }
    if plots {
        crate::plot::write_all(result, &dir.join("plots"))?;
    }
    Ok(())
}

pub fn write_reduction_csv(rows: &[ReportRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_of(path, e))?;
    w.write_record(["policy", "epsilon_lo", "epsilon_hi", "runs", "mean_reduction"])?;
    let present: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.policy.as_str()).collect();
    if present.contains("RAN") {
        for p in Policy::ALL.iter().skip(1).filter(|p| present.contains(p.label())) {
            for b in relative_reduction(rows, p.label(), "RAN")? {
                w.write_record([
                    p.label().to_string(),
                    crate::report::sig9(b.lo),
                    crate::report::sig9(b.hi),
                    b.runs.to_string(),
                    b.mean.map(crate::report::sig9).unwrap_or_default(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn io_of(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    }
}

fn write_channels_csv(runs: &[RunDetails], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_of(path, e))?;
    w.write_record(["run", "md", "pending_bits", "gamma_channels", "random_channels"])?;
    for d in runs {
        for j in 0..d.world.pending.len() {
            w.write_record([
                d.world.seeds.run.to_string(),
                j.to_string(),
                crate::report::sig9(d.world.pending[j]),
                d.world.gamma_channels.channels[j].to_string(),
                d.world.random_channels.channels[j].to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_slot_trace_csv(runs: &[RunDetails], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_of(path, e))?;
    w.write_record(["policy", "run", "t", "S", "E_u_cum", "L", "t_star"])?;
    for d in runs {
        for o in d.outcomes.iter().filter(|o| o.stops) {
            for r in &o.plan.per_slot_trace {
                w.write_record([
                    o.policy.label().to_string(),
                    d.world.seeds.run.to_string(),
                    r.t.to_string(),
                    crate::report::sig9(r.utility),
                    crate::report::sig9(r.energy_cum),
                    crate::report::sig9(r.objective),
                    o.plan.t_star.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_cells_csv(cells: &[Cell], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_of(path, e))?;
    w.write_record(["step", "x", "y"])?;
    for (i, c) in cells.iter().enumerate() {
        w.write_record([i.to_string(), c.x.to_string(), c.y.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Site label helper for plots.
pub fn site_labels() -> [&'static str; 3] {
    Site::ALL.map(Site::label)
}
