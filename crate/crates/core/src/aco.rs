//! Ant colony trajectory planning on the obstacle grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{reachable, Cell, GridWorld};
use crate::seeds::derive;
use crate::trajectory::Trajectory;

/// Pheromone never falls below this.
pub const MIN_PHEROMONE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcoParams {
    pub ants: usize,
    pub iterations: usize,
    /// `PH_0`.
    pub initial_pheromone: f64,
    /// `rho`.
    pub evaporation: f64,
    pub pheromone_exponent: f64,
    pub heuristic_exponent: f64,
    /// `HV`.
    pub heuristic_scale: f64,
    /// `Q`.
    pub deposit: f64,
    /// `phi`.
    pub turn_exponent: f64,
    pub rng_seed: u64,
}

impl Default for AcoParams {
    fn default() -> Self {
        Self {
            ants: 20,
            iterations: 200,
            initial_pheromone: 3.8,
            evaporation: 0.25,
            pheromone_exponent: 1.0,
            heuristic_exponent: 2.0,
            heuristic_scale: 2.5,
            deposit: 1.0,
            turn_exponent: 2.0,
            rng_seed: 0,
        }
    }
}

impl AcoParams {
    pub fn validate(&self) -> Result<()> {
        if self.ants == 0 || self.iterations == 0 {
            return Err(Error::InvalidParameter("ants and iterations must be >= 1".into()));
        }
        if !(self.evaporation > 0.0 && self.evaporation < 1.0) {
            return Err(Error::InvalidParameter(format!("evaporation {} outside (0, 1)", self.evaporation)));
        }
        for (name, v) in [
            ("initial pheromone", self.initial_pheromone),
            ("heuristic scale", self.heuristic_scale),
            ("deposit", self.deposit),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.pheromone_exponent >= 0.0 && self.heuristic_exponent >= 0.0 && self.turn_exponent > 0.0) {
            return Err(Error::InvalidParameter("exponents must be nonnegative and phi positive".into()));
        }
        Ok(())
    }
}

/// Pheromone on directed edges: one value per cell and heading.
#[derive(Debug, Clone, PartialEq)]
pub struct Pheromone {
    side: usize,
    values: Vec<[f64; 8]>,
}

impl Pheromone {
    pub fn new(side: usize, initial: f64) -> Self {
        Self { side, values: vec![[initial; 8]; side * side] }
    }

    pub fn get(&self, c: Cell, dir: usize) -> f64 {
        self.values[c.y * self.side + c.x][dir]
    }

    /// `PH <- (1 - rho) PH + sum of deposits`, floored at [`MIN_PHEROMONE`].
    pub fn update(&mut self, rho: f64, deposits: &[(Cell, usize, f64)]) {
        for v in self.values.iter_mut().flatten() {
            *v *= 1.0 - rho;
        }
        for &(c, d, amount) in deposits {
            self.values[c.y * self.side + c.x][d] += amount;
        }
        for v in self.values.iter_mut().flatten() {
            *v = v.max(MIN_PHEROMONE);
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcoOutcome {
    pub trajectory: Trajectory,
    /// Best `R` found so far after each iteration.
    pub trace: Vec<f64>,
    pub pheromone: Pheromone,
    /// Ants that hit a dead end, summed over all iterations.
    pub dead_ends: usize,
}

pub fn aco_plan(world: &GridWorld, start: Cell, goal: Cell, params: &AcoParams) -> Result<Trajectory> {
    aco_plan_detailed(world, start, goal, params).map(|o| o.trajectory)
}

pub fn aco_plan_detailed(world: &GridWorld, start: Cell, goal: Cell, params: &AcoParams) -> Result<AcoOutcome> {
    params.validate()?;
    if !reachable(world, start, goal) {
        return Err(Error::PlanningFailure(format!(
            "goal ({}, {}) not reachable from ({}, {})",
            goal.x, goal.y, start.x, start.y
        )));
    }
    let mut pheromone = Pheromone::new(world.side_cells, params.initial_pheromone);
    if start == goal {
        let trajectory = Trajectory::from_cells(world, vec![start], params.turn_exponent)?;
        return Ok(AcoOutcome { trace: vec![0.0], trajectory, pheromone, dead_ends: 0 });
    }
    let heuristic: Vec<f64> = (0..world.cell_count())
        .map(|i| {
            let (x, y) = ((i % world.side_cells) as f64, (i / world.side_cells) as f64);
            let d = (x - goal.x as f64).hypot(y - goal.y as f64);
            (params.heuristic_scale / (1.0 + d)).powf(params.heuristic_exponent)
        })
        .collect();

    let mut best: Option<Trajectory> = None;
    let mut trace = Vec::with_capacity(params.iterations);
    let mut dead_ends = 0;
    for iter in 0..params.iterations {
        let mut deposits = Vec::new();
        for ant in 0..params.ants {
            let mut rng = ChaCha8Rng::seed_from_u64(derive(params.rng_seed, &[iter as u64, ant as u64]));
            let Some(steps) = walk(world, start, goal, &pheromone, &heuristic, params, &mut rng) else {
                dead_ends += 1;
                continue;
            };
            let cells: Vec<Cell> = steps.iter().map(|s| s.1).collect();
            let t = Trajectory::from_cells(world, cells, params.turn_exponent)?;
            let amount = params.deposit / t.value;
            deposits.extend(steps.windows(2).map(|w| (w[0].1, w[1].0, amount)));
            if best.as_ref().is_none_or(|b| t.value < b.value) {
                best = Some(t);
            }
        }
        pheromone.update(params.evaporation, &deposits);
        trace.push(best.as_ref().map_or(f64::INFINITY, |b| b.value));
    }
    let trajectory = best.ok_or_else(|| Error::PlanningFailure("every ant hit a dead end".into()))?;
    Ok(AcoOutcome { trajectory, trace, pheromone, dead_ends })
}

/// One ant's walk as (heading taken into the cell, cell); the first heading is
/// unused. `None` on a dead end.
fn walk<R: Rng + ?Sized>(
    world: &GridWorld,
    start: Cell,
    goal: Cell,
    pheromone: &Pheromone,
    heuristic: &[f64],
    params: &AcoParams,
    rng: &mut R,
) -> Option<Vec<(usize, Cell)>> {
    let side = world.side_cells;
    let mut visited = vec![false; world.cell_count()];
    visited[start.y * side + start.x] = true;
    let mut steps = vec![(0, start)];
    let mut cur = start;
    let mut options: Vec<(usize, Cell, f64)> = Vec::with_capacity(8);
    while cur != goal {
        options.clear();
        for (d, n) in world.free_neighbors(cur) {
            let i = n.y * side + n.x;
            if visited[i] {
                continue;
            }
            let w = pheromone.get(cur, d).powf(params.pheromone_exponent) * heuristic[i];
            options.push((d, n, w));
        }
        let total: f64 = options.iter().map(|o| o.2).sum();
        if options.is_empty() || !(total > 0.0) {
            return None;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = options[options.len() - 1];
        for &o in &options {
            if u < o.2 {
                pick = o;
                break;
            }
            u -= o.2;
        }
        let (d, n, _) = pick;
        visited[n.y * side + n.x] = true;
        steps.push((d, n));
        cur = n;
    }
    Some(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::shortest_path_oracle;
    use proptest::prelude::*;

    fn quick() -> AcoParams {
        AcoParams { iterations: 60, ..AcoParams::default() }
    }

    #[test]
    fn straight_corridor() {
        // A 1-cell-wide corridor along y = 2 of a 7x5 world.
        let mut walls = Vec::new();
        for x in 0..7 {
            for y in [0, 1, 3, 4] {
                walls.push(Cell::new(x, y));
            }
        }
        let w = GridWorld::with_obstacles(7, 1.0, &walls).unwrap();
        let (oracle, _) = shortest_path_oracle(&w, Cell::new(0, 2), Cell::new(5, 2)).unwrap();
        assert_eq!(oracle, 5.0);
        let t = aco_plan(&w, Cell::new(0, 2), Cell::new(5, 2), &quick()).unwrap();
        assert_eq!(t.value, 5.0);
        assert_eq!(t.turn_count, 0);
    }

    #[test]
    fn passes_through_the_only_gap() {
        let gap = Cell::new(5, 7);
        let wall: Vec<Cell> = (0..10).map(|y| Cell::new(5, y)).filter(|&c| c != gap).collect();
        let w = GridWorld::with_obstacles(10, 1.0, &wall).unwrap();
        let (_, oracle_path) = shortest_path_oracle(&w, Cell::new(0, 0), Cell::new(9, 0)).unwrap();
        assert!(oracle_path.contains(&gap));
        let t = aco_plan(&w, Cell::new(0, 0), Cell::new(9, 0), &quick()).unwrap();
        assert!(t.cells.contains(&gap));
        assert!(t.avoids_obstacles(&w) && t.is_connected());
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = crate::grid::generate_obstacles(15, 1.0, (40, 60), Cell::new(0, 0), Cell::new(14, 10), &mut rng).unwrap();
        let p = AcoParams { rng_seed: 9, ..quick() };
        let a = aco_plan_detailed(&w, Cell::new(0, 0), Cell::new(14, 10), &p).unwrap();
        let b = aco_plan_detailed(&w, Cell::new(0, 0), Cell::new(14, 10), &p).unwrap();
        assert_eq!(a, b);
        assert!(a.trace.windows(2).all(|x| x[1] <= x[0]));
        let again = crate::trajectory::trajectory_value(&a.trajectory.cells, p.turn_exponent).unwrap();
        assert!((again - a.trajectory.value).abs() < 1e-9);
    }

    #[test]
    fn unreachable_goal_fails() {
        let wall: Vec<Cell> = (0..6).map(|y| Cell::new(3, y)).collect();
        let w = GridWorld::with_obstacles(6, 1.0, &wall).unwrap();
        assert!(matches!(aco_plan(&w, Cell::new(0, 0), Cell::new(5, 5), &quick()), Err(Error::PlanningFailure(_))));
    }

    #[test]
    fn start_equal_goal_is_a_single_cell() {
        let w = GridWorld::new(4, 1.0).unwrap();
        let t = aco_plan(&w, Cell::new(1, 1), Cell::new(1, 1), &quick()).unwrap();
        assert_eq!(t.cells, vec![Cell::new(1, 1)]);
        assert_eq!(t.value, 0.0);
    }

    #[test]
    fn pheromone_stays_positive_after_a_long_run() {
        let w = GridWorld::new(8, 1.0).unwrap();
        let p = AcoParams { iterations: 300, evaporation: 0.9, ..AcoParams::default() };
        let o = aco_plan_detailed(&w, Cell::new(0, 0), Cell::new(7, 7), &p).unwrap();
        assert!(o.pheromone.min() >= MIN_PHEROMONE);
        assert!(o.pheromone.max().is_finite());
    }

    proptest! {
        #[test]
        fn pheromone_update_keeps_values_positive_and_finite(
            rho in 0.01..0.99f64,
            rounds in 1usize..200,
            amounts in prop::collection::vec(0.0..10.0f64, 0..20),
        ) {
            let mut ph = Pheromone::new(4, 3.8);
            for r in 0..rounds {
                let deposits: Vec<(Cell, usize, f64)> = amounts
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| (Cell::new(i % 4, (i / 4) % 4), (i + r) % 8, a))
                    .collect();
                ph.update(rho, &deposits);
            }
            prop_assert!(ph.min() > 0.0);
            prop_assert!(ph.max().is_finite());
        }
    }
}
