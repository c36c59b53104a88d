//! Service area geometry and ground-user mobility.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::math;

/// A point on the ground plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Position) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// The rectangular service area `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn of(config: &SimConfig) -> Self {
        Self { width: config.area_width, height: config.area_height }
    }

    pub fn contains(&self, p: Position) -> bool {
        p.is_finite() && p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    pub fn size(&self) -> f64 {
        self.width * self.height
    }
}

/// Time-indexed positions of one ground user; `positions[t]` is its
/// location at step `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GueTrace {
    pub gue_id: usize,
    pub positions: Vec<Position>,
}

impl GueTrace {
    /// Checks coverage of steps `0..=T`, area bounds and the per-step
    /// displacement limit.
    pub fn validate(&self, config: &SimConfig) -> Result<()> {
        let err = |reason| Err(Error::Trace { gue_id: self.gue_id, reason });
        if self.positions.len() < config.episode_len + 1 {
            return err(format!(
                "covers {} steps, expected at least {}",
                self.positions.len(),
                config.episode_len + 1
            ));
        }
        let area = Area::of(config);
        let max_step = config.max_vehicle_speed * config.timestep;
        for (t, p) in self.positions.iter().enumerate() {
            if !area.contains(*p) {
                return err(format!("position ({}, {}) at t = {t} lies outside the area", p.x, p.y));
            }
            if t > 0 {
                let d = p.distance(self.positions[t - 1]);
                if d > max_step + 1e-9 {
                    return err(format!("moves {d} m at t = {t}, limit is {max_step} m"));
                }
            }
        }
        Ok(())
    }
}

/// Positions of every GUE at step `t`, in trace order.
pub fn gue_positions_at(traces: &[GueTrace], t: usize) -> Result<Vec<Position>> {
    traces
        .iter()
        .map(|tr| {
            tr.positions
                .get(t)
                .copied()
                .ok_or(Error::StepOutOfRange { t, max: tr.positions.len().saturating_sub(1) })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Heading {
    East,
    North,
    West,
    South,
}

impl Heading {
    fn reverse(self) -> Self {
        match self {
            Heading::East => Heading::West,
            Heading::West => Heading::East,
            Heading::North => Heading::South,
            Heading::South => Heading::North,
        }
    }

    fn left(self) -> Self {
        match self {
            Heading::East => Heading::North,
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
        }
    }

    fn right(self) -> Self {
        self.left().reverse()
    }

    fn horizontal(self) -> bool {
        matches!(self, Heading::East | Heading::West)
    }
}

/// Street grid with lines at every multiple of `block` inside the area.
struct Grid {
    block: f64,
    area: Area,
}

impl Grid {
    fn on_line(&self, c: f64) -> bool {
        let k = math::floor(c / self.block + 0.5);
        (c - k * self.block).abs() < 1e-9
    }

    fn is_intersection(&self, p: Position) -> bool {
        self.on_line(p.x) && self.on_line(p.y)
    }

    /// Next stopping coordinate (cross street or area edge) ahead of `c`.
    fn next_stop(&self, c: f64, forward: bool, limit: f64) -> f64 {
        let b = self.block;
        if forward {
            let next = (math::floor(c / b + 1e-9) + 1.0) * b;
            next.min(limit)
        } else {
            let next = (math::ceil(c / b - 1e-9) - 1.0) * b;
            next.max(0.0)
        }
    }

    /// Whether a vehicle at `p` can travel at all in direction `h`.
    fn open(&self, p: Position, h: Heading) -> bool {
        match h {
            Heading::East => p.x < self.area.width,
            Heading::West => p.x > 0.0,
            Heading::North => p.y < self.area.height,
            Heading::South => p.y > 0.0,
        }
    }
}

struct Vehicle {
    pos: Position,
    heading: Heading,
}

impl Vehicle {
    fn advance<R: Rng + ?Sized>(&mut self, grid: &Grid, dist: f64, turn_prob: f64, rng: &mut R) {
        let mut remaining = dist;
        // Bounded: each iteration either finishes or reaches a stop at least
        // min(block, edge gap) away.
        while remaining > 1e-12 {
            let (c, forward, limit) = match self.heading {
                Heading::East => (self.pos.x, true, grid.area.width),
                Heading::West => (self.pos.x, false, 0.0),
                Heading::North => (self.pos.y, true, grid.area.height),
                Heading::South => (self.pos.y, false, 0.0),
            };
            let stop = grid.next_stop(c, forward, limit);
            let gap = (stop - c).abs();
            if remaining < gap {
                let moved = if forward { c + remaining } else { c - remaining };
                self.set_along(moved);
                return;
            }
            self.set_along(stop);
            remaining -= gap;
            self.choose_heading(grid, turn_prob, rng);
        }
    }

    fn set_along(&mut self, c: f64) {
        if self.heading.horizontal() {
            self.pos.x = c;
        } else {
            self.pos.y = c;
        }
    }

    fn choose_heading<R: Rng + ?Sized>(&mut self, grid: &Grid, turn_prob: f64, rng: &mut R) {
        let straight = grid.open(self.pos, self.heading);
        if !grid.is_intersection(self.pos) {
            if !straight {
                self.heading = self.heading.reverse();
            }
            return;
        }
        let left = self.heading.left();
        let right = self.heading.right();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for turn in [left, right] {
            if grid.open(self.pos, turn) {
                acc += turn_prob;
                if u < acc {
                    self.heading = turn;
                    return;
                }
            }
        }
        if !straight {
            self.heading = self.heading.reverse();
        }
    }
}

/// Synthetic Manhattan mobility: `num_gues` vehicles on an axis-aligned
/// street grid with `block_size` spacing, moving `vehicle_speed * timestep`
/// per step, turning at intersections with `config.turn_prob` per available
/// turn and reversing at the area edge.
pub fn generate_manhattan_traces<R: Rng + ?Sized>(
    config: &SimConfig,
    block_size: f64,
    vehicle_speed: f64,
    rng: &mut R,
) -> Result<Vec<GueTrace>> {
    if !(vehicle_speed > 0.0) {
        return Err(Error::Config(format!("vehicle_speed must be positive, got {vehicle_speed}")));
    }
    let area = Area::of(config);
    if !(block_size > 0.0) || area.width / block_size < 2.0 || area.height / block_size < 2.0 {
        return Err(Error::Config(format!(
            "block_size {block_size} m must fit at least twice into the {} x {} m area",
            area.width, area.height
        )));
    }
    let grid = Grid { block: block_size, area };
    let vertical = math::floor(area.width / block_size) as usize + 1;
    let horizontal = math::floor(area.height / block_size) as usize + 1;
    let total_len = vertical as f64 * area.height + horizontal as f64 * area.width;
    let step = vehicle_speed * config.timestep;

    let mut traces = Vec::with_capacity(config.num_gues);
    for gue_id in 0..config.num_gues {
        let s = rng.random::<f64>() * total_len;
        let forward: bool = rng.random();
        let vertical_len = vertical as f64 * area.height;
        let mut vehicle = if s < vertical_len {
            let i = ((s / area.height) as usize).min(vertical - 1);
            let y = (s - i as f64 * area.height).min(area.height);
            let heading = if forward { Heading::North } else { Heading::South };
            Vehicle { pos: Position::new(i as f64 * block_size, y), heading }
        } else {
            let r = s - vertical_len;
            let j = ((r / area.width) as usize).min(horizontal - 1);
            let x = (r - j as f64 * area.width).min(area.width);
            let heading = if forward { Heading::East } else { Heading::West };
            Vehicle { pos: Position::new(x, j as f64 * block_size), heading }
        };
        let mut positions = Vec::with_capacity(config.episode_len + 1);
        positions.push(vehicle.pos);
        for _ in 0..config.episode_len {
            vehicle.advance(&grid, step, config.turn_prob, rng);
            positions.push(vehicle.pos);
        }
        traces.push(GueTrace { gue_id, positions });
    }
    Ok(traces)
}
