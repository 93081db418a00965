//! Shared builders for integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uavfog::channel::{allocate_channels, ChannelAllocation, GammaWeighting};
use uavfog::model::{Position, Scenario};
use uavfog::workload::{pending_input_per_md, Task};

/// A self-contained assignment problem.
pub struct Problem {
    pub scenario: Scenario,
    pub tasks: Vec<Task>,
    pub channels: ChannelAllocation,
    pub uav: Position,
}

impl Problem {
    pub fn instance(&self) -> uavfog::assign::Instance<'_> {
        uavfog::assign::Instance::new(&self.scenario, &self.tasks, &self.channels, self.uav).unwrap()
    }
}

/// `md_count` MDs on a side-`side` square, `task_count` tasks spread over
/// them, Gamma channels, random epsilon and UAV position.
pub fn problem(md_count: usize, task_count: usize, side: f64, seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenario = Scenario::with_random_layout(side, md_count, &mut rng);
    scenario.epsilon = rng.random_range(0.05..=1.0);
    let tasks: Vec<Task> = (0..task_count)
        .map(|i| {
            let bits = rng.random_range(0.1e6..3.0e6);
            Task {
                md: i % md_count,
                index: i / md_count,
                cycles: 1000.0 * bits,
                input_bits: bits,
                output_bits: 0.1 * bits,
                arrival_slot: 0,
            }
        })
        .collect();
    let pending = pending_input_per_md(&tasks, md_count);
    let channels = allocate_channels(&pending, scenario.channels, &GammaWeighting::default()).unwrap();
    let uav = Position::new(rng.random_range(0.0..side), rng.random_range(0.0..side));
    Problem { scenario, tasks, channels, uav }
}
