//! Discretized flight area with single-cell obstacles.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Position;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

/// The eight headings, counter-clockwise from east in 45 degree steps.
pub const DIRECTIONS: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

/// Heading index of the step `from -> to`, if they are distinct neighbors.
pub fn direction_of(from: Cell, to: Cell) -> Option<usize> {
    let d = (to.x as i64 - from.x as i64, to.y as i64 - from.y as i64);
    DIRECTIONS.iter().position(|&dir| dir == d)
}

/// Length of one step in grid units.
pub fn step_length(dir: usize) -> f64 {
    if dir.is_multiple_of(2) {
        1.0
    } else {
        std::f64::consts::SQRT_2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorld {
    pub side_cells: usize,
    /// Edge length of one cell, meters.
    pub cell_size: f64,
    blocked: Vec<bool>,
}

impl GridWorld {
    pub fn new(side_cells: usize, cell_size: f64) -> Result<Self> {
        if side_cells == 0 || !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid needs >= 1 cell per side and a positive cell size, got {side_cells} x {cell_size}"
            )));
        }
        Ok(Self { side_cells, cell_size, blocked: vec![false; side_cells * side_cells] })
    }

    pub fn with_obstacles(side_cells: usize, cell_size: f64, obstacles: &[Cell]) -> Result<Self> {
        let mut w = Self::new(side_cells, cell_size)?;
        for &c in obstacles {
            if !w.in_bounds(c) {
                return Err(Error::InvalidParameter(format!("obstacle ({}, {}) outside the grid", c.x, c.y)));
            }
            let i = w.idx(c);
            w.blocked[i] = true;
        }
        Ok(w)
    }

    fn idx(&self, c: Cell) -> usize {
        c.y * self.side_cells + c.x
    }

    pub fn cell_count(&self) -> usize {
        self.side_cells * self.side_cells
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x < self.side_cells && c.y < self.side_cells
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        self.blocked[self.idx(c)]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.is_blocked(c)
    }

    pub fn obstacles(&self) -> Vec<Cell> {
        (0..self.cell_count())
            .filter(|&i| self.blocked[i])
            .map(|i| Cell::new(i % self.side_cells, i / self.side_cells))
            .collect()
    }

    pub fn obstacle_count(&self) -> usize {
        self.blocked.iter().filter(|&&b| b).count()
    }

    /// In-bounds neighbor reached by heading `dir`, blocked or not.
    pub fn neighbor(&self, c: Cell, dir: usize) -> Option<Cell> {
        let (dx, dy) = DIRECTIONS[dir];
        let x = c.x as i64 + dx;
        let y = c.y as i64 + dy;
        let n = self.side_cells as i64;
        ((0..n).contains(&x) && (0..n).contains(&y)).then(|| Cell::new(x as usize, y as usize))
    }

    /// Free neighbors with their heading index.
    pub fn free_neighbors(&self, c: Cell) -> impl Iterator<Item = (usize, Cell)> + '_ {
        (0..8).filter_map(move |d| self.neighbor(c, d).filter(|&n| !self.is_blocked(n)).map(|n| (d, n)))
    }

    /// Center of `c` in meters.
    pub fn center(&self, c: Cell) -> Position {
        Position::new((c.x as f64 + 0.5) * self.cell_size, (c.y as f64 + 0.5) * self.cell_size)
    }

    /// Cell containing `p`; points on the far edge map to the last cell.
    pub fn cell_of(&self, p: Position) -> Cell {
        let max = self.side_cells - 1;
        let f = |v: f64| ((v / self.cell_size).floor().max(0.0) as usize).min(max);
        Cell::new(f(p.x), f(p.y))
    }

    /// Plain-text map: `#` obstacle, `.` free, `*` path, `S`/`G` endpoints.
    /// Row 0 of the output is the top (largest y).
    pub fn render_text(&self, path: &[Cell]) -> String {
        let mut marks: Vec<char> = self.blocked.iter().map(|&b| if b { '#' } else { '.' }).collect();
        for &c in path {
            marks[self.idx(c)] = '*';
        }
        if let (Some(&s), Some(&g)) = (path.first(), path.last()) {
            marks[self.idx(s)] = 'S';
            marks[self.idx(g)] = 'G';
        }
        let mut out = String::new();
        for y in (0..self.side_cells).rev() {
            for x in 0..self.side_cells {
                out.push(marks[self.idx(Cell::new(x, y))]);
            }
            let _ = writeln!(out);
        }
        out
    }
}

/// Breadth-first reachability over free cells with 8-connected moves.
pub fn reachable(world: &GridWorld, start: Cell, goal: Cell) -> bool {
    if !world.is_free(start) || !world.is_free(goal) {
        return false;
    }
    let mut seen = vec![false; world.cell_count()];
    let mut queue = VecDeque::from([start]);
    seen[world.idx(start)] = true;
    while let Some(c) = queue.pop_front() {
        if c == goal {
            return true;
        }
        for (_, n) in world.free_neighbors(c) {
            let i = world.idx(n);
            if !seen[i] {
                seen[i] = true;
                queue.push_back(n);
            }
        }
    }
    false
}

/// Attempts at drawing a connected obstacle layout before giving up.
pub const OBSTACLE_RETRIES: usize = 200;

/// Random obstacle layout with a count uniform in `count_range` (inclusive),
/// never covering `start` or `goal`, redrawn until `goal` is reachable.
pub fn generate_obstacles<R: Rng + ?Sized>(
    side_cells: usize,
    cell_size: f64,
    count_range: (usize, usize),
    start: Cell,
    goal: Cell,
    rng: &mut R,
) -> Result<GridWorld> {
    let empty = GridWorld::new(side_cells, cell_size)?;
    if !empty.in_bounds(start) || !empty.in_bounds(goal) {
        return Err(Error::InvalidParameter("start or goal outside the grid".into()));
    }
    let (lo, hi) = count_range;
    let reserved = if start == goal { 1 } else { 2 };
    let candidates: Vec<Cell> = (0..empty.cell_count())
        .map(|i| Cell::new(i % side_cells, i / side_cells))
        .filter(|&c| c != start && c != goal)
        .collect();
    if lo > hi || hi > empty.cell_count() - reserved {
        return Err(Error::GenerationFailure(format!(
            "obstacle range [{lo}, {hi}] does not fit {} free cells",
            empty.cell_count() - reserved
        )));
    }
    for _ in 0..OBSTACLE_RETRIES {
        let n = rng.random_range(lo..=hi);
        let picked: Vec<Cell> = index::sample(rng, candidates.len(), n).into_iter().map(|i| candidates[i]).collect();
        let world = GridWorld::with_obstacles(side_cells, cell_size, &picked)?;
        if reachable(&world, start, goal) {
            return Ok(world);
        }
    }
    Err(Error::GenerationFailure(format!(
        "no connected layout with [{lo}, {hi}] obstacles after {OBSTACLE_RETRIES} attempts"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier {
    cost: f64,
    cell: Cell,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost, then on cell for a deterministic order.
        other.cost.total_cmp(&self.cost).then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest 8-connected path with Euclidean step costs. Returns the length in
/// meters and the cells, or `None` when the goal cannot be reached.
pub fn shortest_path_oracle(world: &GridWorld, start: Cell, goal: Cell) -> Option<(f64, Vec<Cell>)> {
    if !world.is_free(start) || !world.is_free(goal) {
        return None;
    }
    let n = world.cell_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev: Vec<Option<Cell>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[world.idx(start)] = 0.0;
    heap.push(Frontier { cost: 0.0, cell: start });
    while let Some(Frontier { cost, cell }) = heap.pop() {
        if cell == goal {
            break;
        }
        if cost > dist[world.idx(cell)] {
            continue;
        }
        for (d, nb) in world.free_neighbors(cell) {
            let c = cost + step_length(d);
            let i = world.idx(nb);
            if c < dist[i] {
                dist[i] = c;
                prev[i] = Some(cell);
                heap.push(Frontier { cost: c, cell: nb });
            }
        }
    }
    let gi = world.idx(goal);
    if !dist[gi].is_finite() {
        return None;
    }
    let mut path = vec![goal];
    let mut cur = goal;
    while let Some(p) = prev[world.idx(cur)] {
        path.push(p);
        cur = p;
    }
    path.reverse();
    Some((dist[gi] * world.cell_size, path))
}

/// Straight line between two cells (Bresenham, 8-connected), ignoring obstacles.
pub fn straight_line(start: Cell, goal: Cell) -> Vec<Cell> {
    let (mut x, mut y) = (start.x as i64, start.y as i64);
    let (x1, y1) = (goal.x as i64, goal.y as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut cells = vec![start];
    while (x, y) != (x1, y1) {
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
        cells.push(Cell::new(x as usize, y as usize));
    }
    cells
}
