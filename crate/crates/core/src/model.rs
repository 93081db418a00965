//! World geometry, UAV kinematics and the movement-energy term.
//!
//! Everything here is SI: meters, seconds, kilograms, watts, hertz, joules.
//! Conversion from milliwatts and gigahertz happens in [`crate::config`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{ComputeParams, DataCenterParams, RadioParams};
use crate::error::{Error, Result};

/// Lowest weighting factor accepted by a [`Scenario`].
pub const EPSILON_MIN: f64 = 0.05;
/// Highest weighting factor accepted by a [`Scenario`].
pub const EPSILON_MAX: f64 = 1.00;

/// Planar position in meters. MDs sit on the ground; the UAV at altitude `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_inside(&self, side: f64) -> bool {
        (0.0..=side).contains(&self.x) && (0.0..=side).contains(&self.y)
    }

    pub fn planar_distance(&self, other: &Position) -> f64 {
        travel_distance(*self, *other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VelocityVector {
    pub vx: f64,
    pub vy: f64,
}

impl VelocityVector {
    pub const ZERO: VelocityVector = VelocityVector { vx: 0.0, vy: 0.0 };

    pub const fn new(vx: f64, vy: f64) -> Self {
        Self { vx, vy }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn speed_squared(&self) -> f64 {
        self.vx * self.vx + self.vy * self.vy
    }

    /// Velocity of magnitude `speed` pointing from `from` to `to`; zero when
    /// the two points coincide.
    pub fn toward(from: Position, to: Position, speed: f64) -> Self {
        let (dx, dy) = (to.x - from.x, to.y - from.y);
        let len = dx.hypot(dy);
        if len == 0.0 {
            Self::ZERO
        } else {
            Self::new(speed * dx / len, speed * dy / len)
        }
    }
}

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    /// Point at fraction `u` of the interval (`u = 0` is `min`).
    pub fn lerp(&self, u: f64) -> f64 {
        self.min + u * self.width()
    }

    pub fn midpoint(&self) -> f64 {
        self.lerp(0.5)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.width() == 0.0 {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }

    fn check(&self, what: &str) -> Result<()> {
        if !(self.min > 0.0 && self.min <= self.max && self.max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{what} range [{}, {}] must be positive with min <= max",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavConfig {
    /// Mass `M` in kilograms.
    pub mass: f64,
    /// Constant flight altitude in meters.
    pub altitude: f64,
    pub v_max: f64,
    /// VM transmit power range, watts.
    pub power: Bounds,
    /// VM processing frequency range, hertz.
    pub freq: Bounds,
}

impl Default for UavConfig {
    fn default() -> Self {
        Self {
            mass: 2.0,
            altitude: 50.0,
            v_max: 10.0,
            power: Bounds::new(40e-3, 80e-3),
            freq: Bounds::new(1.0e9, 2.0e9),
        }
    }
}

impl UavConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mass", self.mass), ("altitude", self.altitude), ("v_max", self.v_max)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("UAV {name} must be positive, got {v}")));
            }
        }
        self.power.check("UAV power")?;
        self.freq.check("UAV frequency")
    }
}

/// The simulated world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Side `S` of the square area, meters.
    pub side: f64,
    pub md_positions: Vec<Position>,
    /// Total channel count `N_c`.
    pub channels: u32,
    /// Timeslot length `L`, seconds.
    pub slot_length: f64,
    /// Energy-vs-delay weighting factor.
    pub epsilon: f64,
    pub md_power: Bounds,
    pub md_freq: Bounds,
    pub uav: UavConfig,
    pub radio: RadioParams,
    pub dc: DataCenterParams,
    pub compute: ComputeParams,
}

impl Scenario {
    /// Default ranges with MDs placed uniformly at random over the area.
    pub fn with_random_layout<R: Rng + ?Sized>(side: f64, md_count: usize, rng: &mut R) -> Self {
        let md_positions = random_layout(side, md_count, rng);
        Self {
            side,
            md_positions,
            channels: 40,
            slot_length: 0.1,
            epsilon: 0.5,
            md_power: Bounds::new(30e-3, 70e-3),
            md_freq: Bounds::new(0.5e9, 2.0e9),
            uav: UavConfig::default(),
            radio: RadioParams::default(),
            dc: DataCenterParams::default(),
            compute: ComputeParams::default(),
        }
    }

    pub fn md_count(&self) -> usize {
        self.md_positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.md_positions.is_empty() {
            return Err(Error::InvalidParameter("scenario needs at least one MD".into()));
        }
        if self.channels == 0 {
            return Err(Error::InvalidParameter("scenario needs at least one channel".into()));
        }
        if !(self.side > 0.0 && self.slot_length > 0.0) {
            return Err(Error::InvalidParameter("area side and slot length must be positive".into()));
        }
        if !(EPSILON_MIN..=EPSILON_MAX).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {} outside [{EPSILON_MIN}, {EPSILON_MAX}]",
                self.epsilon
            )));
        }
        if let Some(p) = self.md_positions.iter().find(|p| !p.is_inside(self.side)) {
            return Err(Error::BoundaryViolation { x: p.x, y: p.y, side: self.side });
        }
        self.md_power.check("MD power")?;
        self.md_freq.check("MD frequency")?;
        self.uav.validate()?;
        self.radio.validate()?;
        self.dc.validate()?;
        self.compute.validate()
    }
}

pub fn random_layout<R: Rng + ?Sized>(side: f64, count: usize, rng: &mut R) -> Vec<Position> {
    (0..count)
        .map(|_| Position::new(rng.random_range(0.0..side), rng.random_range(0.0..side)))
        .collect()
}

/// Advance `pos` by `v` for one slot of length `slot`.
pub fn step_position(pos: Position, v: VelocityVector, slot: f64, side: f64) -> Result<Position> {
    let next = Position::new(pos.x + v.vx * slot, pos.y + v.vy * slot);
    if next.is_inside(side) {
        Ok(next)
    } else {
        Err(Error::BoundaryViolation { x: next.x, y: next.y, side })
    }
}

/// Planar distance flown between two consecutive positions.
pub fn travel_distance(prev: Position, cur: Position) -> f64 {
    (cur.x - prev.x).hypot(cur.y - prev.y)
}

/// Kinetic-form movement energy `0.5 * M * L * |v|^2` for one slot.
pub fn movement_energy(v: VelocityVector, cfg: &UavConfig, slot: f64) -> Result<f64> {
    // Small slack so a speed computed as exactly v_max is not rejected by rounding.
    if v.speed() > cfg.v_max * (1.0 + 1e-12) {
        return Err(Error::ConstraintViolation(format!(
            "speed {:.6} m/s exceeds v_max {} m/s",
            v.speed(),
            cfg.v_max
        )));
    }
    Ok(0.5 * cfg.mass * slot * v.speed_squared())
}
