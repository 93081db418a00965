//! Flight paths over the grid and their planning value `R`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{direction_of, step_length, Cell, GridWorld};
use crate::model::{Position, VelocityVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub cells: Vec<Cell>,
    /// Length of each step, meters.
    pub step_distances: Vec<f64>,
    /// Absolute heading change at each turn, degrees.
    pub turn_angles: Vec<f64>,
    pub turn_count: usize,
    /// Planning value `R`, with distances in grid units.
    pub value: f64,
}

/// Heading indices of consecutive steps; errors on a non-neighbor step.
fn headings(cells: &[Cell]) -> Result<Vec<usize>> {
    cells
        .windows(2)
        .map(|w| {
            direction_of(w[0], w[1]).ok_or_else(|| {
                Error::InvariantViolation(format!(
                    "({}, {}) -> ({}, {}) is not a single step",
                    w[0].x, w[0].y, w[1].x, w[1].y
                ))
            })
        })
        .collect()
}

/// Absolute heading change between two of the eight headings, degrees.
pub fn turn_angle(from_dir: usize, to_dir: usize) -> f64 {
    let diff = (to_dir as i64 - from_dir as i64).rem_euclid(8);
    45.0 * diff.min(8 - diff) as f64
}

/// `R`: total step length (grid units) plus `(theta / 180)^phi` per turn.
pub fn trajectory_value(cells: &[Cell], phi: f64) -> Result<f64> {
    let dirs = headings(cells)?;
    let dist: f64 = dirs.iter().map(|&d| step_length(d)).sum();
    let turns: f64 = dirs
        .windows(2)
        .map(|w| turn_angle(w[0], w[1]))
        .filter(|&a| a > 0.0)
        .map(|a| (a / 180.0).powf(phi))
        .sum();
    Ok(dist + turns)
}

impl Trajectory {
    /// Builds and checks a trajectory: non-empty, in bounds, obstacle-free,
    /// neighbor steps only.
    pub fn from_cells(world: &GridWorld, cells: Vec<Cell>, phi: f64) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        if let Some(c) = cells.iter().find(|&&c| !world.is_free(c)) {
            return Err(Error::InvariantViolation(format!("trajectory enters blocked cell ({}, {})", c.x, c.y)));
        }
        Self::unchecked_obstacles(world, cells, phi)
    }

    /// As [`Trajectory::from_cells`] but allows obstacle cells, for the
    /// straight-line reference path that ignores obstacles.
    pub fn unchecked_obstacles(world: &GridWorld, cells: Vec<Cell>, phi: f64) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        if let Some(c) = cells.iter().find(|&&c| !world.in_bounds(c)) {
            return Err(Error::BoundaryViolation {
                x: c.x as f64,
                y: c.y as f64,
                side: world.side_cells as f64,
            });
        }
        let dirs = headings(&cells)?;
        let step_distances = dirs.iter().map(|&d| step_length(d) * world.cell_size).collect();
        let turn_angles: Vec<f64> =
            dirs.windows(2).map(|w| turn_angle(w[0], w[1])).filter(|&a| a > 0.0).collect();
        let value = trajectory_value(&cells, phi)?;
        Ok(Self { turn_count: turn_angles.len(), cells, step_distances, turn_angles, value })
    }

    /// Number of timeslots `T` (one per cell).
    pub fn slots(&self) -> usize {
        self.cells.len()
    }

    /// Total flown distance, meters.
    pub fn length(&self) -> f64 {
        self.step_distances.iter().sum()
    }

    pub fn positions(&self, world: &GridWorld) -> Vec<Position> {
        self.cells.iter().map(|&c| world.center(c)).collect()
    }

    /// UAV velocity during each slot. Slot 1 is spent at the start cell; in
    /// every later slot the UAV flies one step at `min(v_max, cell_size / L)`.
    pub fn velocities(&self, world: &GridWorld, v_max: f64, slot_length: f64) -> Vec<VelocityVector> {
        let speed = v_max.min(world.cell_size / slot_length);
        let pos = self.positions(world);
        std::iter::once(VelocityVector::ZERO)
            .chain(pos.windows(2).map(|w| VelocityVector::toward(w[0], w[1], speed)))
            .collect()
    }

    pub fn avoids_obstacles(&self, world: &GridWorld) -> bool {
        self.cells.iter().all(|&c| world.is_free(c))
    }

    pub fn is_connected(&self) -> bool {
        headings(&self.cells).is_ok()
    }
}
