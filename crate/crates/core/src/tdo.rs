//! Travel distance optimization: score every slot along a trajectory and stop
//! where the objective `L` is lowest.

use serde::{Deserialize, Serialize};

use crate::aco::{aco_plan, AcoParams};
use crate::assign::{pso_optimize_with, validate, Instance, PsoParams, Solution};
use crate::channel::ChannelAllocation;
use crate::cost::objective;
use crate::error::{Error, Result};
use crate::grid::{Cell, GridWorld};
use crate::model::{movement_energy, Position, Scenario};
use crate::seeds::derive;
use crate::trajectory::Trajectory;
use crate::workload::Task;

/// One slot of the scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    /// 1-based slot index.
    pub t: usize,
    pub position: Position,
    /// `S*(t)`.
    pub utility: f64,
    /// Cumulative movement energy up to and including slot `t`, joules.
    pub energy_cum: f64,
    /// `L*(t)`.
    pub objective: f64,
    pub delay_sum: f64,
    pub energy_sum: f64,
    pub iterations_to_converge: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionPlan {
    pub t_star: usize,
    pub position: Position,
    /// `L*(t*)`.
    pub objective: f64,
    pub per_slot_trace: Vec<SlotRecord>,
    /// Assignment at `t*`.
    pub solution: Solution,
    /// Assignment found at every slot.
    pub slot_solutions: Vec<Solution>,
    /// Optimizer best-so-far trace at every slot (empty for non-iterative solvers).
    pub slot_traces: Vec<Vec<f64>>,
}

impl TransmissionPlan {
    pub fn record(&self, t: usize) -> &SlotRecord {
        &self.per_slot_trace[t - 1]
    }
}

/// What a per-slot solver returns: the solution, an encoded best candidate
/// for warm-starting the next slot, and iterations to converge.
pub struct SlotSolve {
    pub solution: Solution,
    pub warm: Option<Vec<f64>>,
    pub iterations_to_converge: usize,
    pub trace: Vec<f64>,
}

/// 1-based argmin, earliest slot on ties.
pub fn select_transmission_slot(objectives: &[f64]) -> Result<usize> {
    if objectives.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut best = 0;
    for (i, &v) in objectives.iter().enumerate().skip(1) {
        if v < objectives[best] {
            best = i;
        }
    }
    Ok(best + 1)
}

/// Cumulative movement energy per slot along `traj`.
pub fn cumulative_movement_energy(traj: &Trajectory, world: &GridWorld, scenario: &Scenario) -> Result<Vec<f64>> {
    let mut acc = 0.0;
    traj.velocities(world, scenario.uav.v_max, scenario.slot_length)
        .into_iter()
        .map(|v| {
            acc += movement_energy(v, &scenario.uav, scenario.slot_length)?;
            Ok(acc)
        })
        .collect()
}

/// PSO at every slot, warm-started from the previous slot when `warm_start`.
pub fn tdo_optimize(
    traj: &Trajectory,
    world: &GridWorld,
    scenario: &Scenario,
    tasks: &[Task],
    channels: &ChannelAllocation,
    pso: &PsoParams,
    warm_start: bool,
) -> Result<TransmissionPlan> {
    tdo_optimize_with(traj, world, scenario, tasks, channels, |t, inst, warm| {
        let params = PsoParams { rng_seed: derive(pso.rng_seed, &[t as u64]), ..pso.clone() };
        let seed = if warm_start { warm } else { None };
        let out = pso_optimize_with(inst, &params, seed, |_| {})?;
        Ok(SlotSolve {
            solution: out.solution,
            warm: Some(out.best_position),
            iterations_to_converge: out.converged_at,
            trace: out.trace,
        })
    })
}

/// The scan with a caller-supplied slot solver `(t, instance, warm) -> SlotSolve`.
/// The channel split depends only on pending sizes, so it is the same in
/// every slot.
pub fn tdo_optimize_with(
    traj: &Trajectory,
    world: &GridWorld,
    scenario: &Scenario,
    tasks: &[Task],
    channels: &ChannelAllocation,
    mut solve: impl FnMut(usize, &Instance<'_>, Option<&[f64]>) -> Result<SlotSolve>,
) -> Result<TransmissionPlan> {
    if traj.cells.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let energy = cumulative_movement_energy(traj, world, scenario)?;
    let mut trace = Vec::with_capacity(traj.slots());
    let mut solutions = Vec::with_capacity(traj.slots());
    let mut traces = Vec::with_capacity(traj.slots());
    let mut warm: Option<Vec<f64>> = None;
    for (i, pos) in traj.positions(world).into_iter().enumerate() {
        let t = i + 1;
        let inst = Instance::new(scenario, tasks, channels, pos)?;
        let out = solve(t, &inst, warm.as_deref())?;
        validate(&out.solution, &inst)?;
        let s = &out.solution;
        trace.push(SlotRecord {
            t,
            position: pos,
            utility: s.fitness,
            energy_cum: energy[i],
            objective: objective(s.fitness, energy[i], scenario.epsilon),
            delay_sum: s.delay_sum,
            energy_sum: s.energy_sum,
            iterations_to_converge: out.iterations_to_converge,
        });
        warm = out.warm;
        traces.push(out.trace);
        solutions.push(out.solution);
    }
    let objectives: Vec<f64> = trace.iter().map(|r| r.objective).collect();
    let t_star = select_transmission_slot(&objectives)?;
    let rec = &trace[t_star - 1];
    Ok(TransmissionPlan {
        t_star,
        position: rec.position,
        objective: rec.objective,
        solution: solutions[t_star - 1].clone(),
        per_slot_trace: trace,
        slot_solutions: solutions,
        slot_traces: traces,
    })
}

/// Plan with ACO, then scan the planned path with [`tdo_optimize`].
#[allow(clippy::too_many_arguments)]
pub fn run_pipeline(
    scenario: &Scenario,
    world: &GridWorld,
    start: Cell,
    goal: Cell,
    tasks: &[Task],
    channels: &ChannelAllocation,
    aco: &AcoParams,
    pso: &PsoParams,
) -> Result<(Trajectory, TransmissionPlan, Solution)> {
    let traj = aco_plan(world, start, goal, aco)?;
    let plan = tdo_optimize(&traj, world, scenario, tasks, channels, pso, true)?;
    let sol = plan.solution.clone();
    Ok((traj, plan, sol))
}
