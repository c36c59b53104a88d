//! mmWave link model: beam geometry, ideal beam gain, 3GPP TR 38.901 Urban
//! Macro LoS probability and path loss, and the uplink SNR budget.
//!
//! Shadow fading is not modelled; path loss is deterministic given the LoS
//! state.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use crate::config::{LosMode, SimConfig};
use crate::error::{Error, Result};
use crate::math;
use crate::scenario::Position;

/// Propagation speed used by TR 38.901 for the breakpoint distance.
const C_LIGHT: f64 = 3.0e8;

/// Solid angle of one of `beams` equal beams partitioning a cone with full
/// apex angle `fov_deg`: `2 pi (1 - cos(fov / 2)) / beams`.
pub fn beam_solid_angle(fov_deg: f64, beams: usize) -> f64 {
    2.0 * PI * (1.0 - math::cos(math::to_radians(fov_deg) / 2.0)) / beams as f64
}

/// Peak gain in dB of an ideal beam with the given solid angle (steradians),
/// from the `41000 / theta^2` square-degree approximation.
pub fn beam_gain_db(solid_angle: f64) -> f64 {
    let sq_deg = solid_angle * 360.0 / (2.0 * PI);
    10.0 * math::log10(41_000.0 / (sq_deg * sq_deg))
}

/// UMa line-of-sight probability for a ground user at 1.5 m.
pub fn los_probability(d2d: f64) -> f64 {
    if d2d <= 18.0 {
        1.0
    } else {
        18.0 / d2d + math::exp(-d2d / 63.0) * (1.0 - 18.0 / d2d)
    }
}

/// Antenna heights entering the UMa formulas, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Heights {
    pub bs: f64,
    pub ut: f64,
}

impl Heights {
    /// Breakpoint distance with 1 m effective environment height.
    pub fn breakpoint(&self, fc_ghz: f64) -> f64 {
        4.0 * (self.bs - 1.0) * (self.ut - 1.0) * fc_ghz * 1e9 / C_LIGHT
    }
}

/// UMa path loss in dB. Below the breakpoint the LoS loss is
/// `28 + 22 log10(d3D) + 20 log10(fc)`, above it the two-slope form; NLoS
/// takes the max of the LoS loss and
/// `13.54 + 39.08 log10(d3D) + 20 log10(fc) - 0.6 (h_UT - 1.5)`.
pub fn path_loss_db(d2d: f64, d3d: f64, fc_ghz: f64, heights: Heights, los: bool) -> Result<f64> {
    if !(d3d >= 1.0) {
        return Err(Error::PathLossDomain(d3d));
    }
    let f = 20.0 * math::log10(fc_ghz);
    let bp = heights.breakpoint(fc_ghz);
    let pl_los = if d2d <= bp {
        28.0 + 22.0 * math::log10(d3d) + f
    } else {
        let dh = heights.bs - heights.ut;
        28.0 + 40.0 * math::log10(d3d) + f - 9.0 * math::log10(bp * bp + dh * dh)
    };
    if los {
        return Ok(pl_los);
    }
    let pl_nlos = 13.54 + 39.08 * math::log10(d3d) + f - 0.6 * (heights.ut - 1.5);
    Ok(pl_los.max(pl_nlos))
}

/// Ground footprints of a UABS's beams: a `k x k` grid of circles, tangent
/// to their neighbours, tiling the field-of-view disk.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamLayout {
    /// Footprint centers relative to the UABS ground projection, row-major
    /// with rows ordered by ascending y and columns by ascending x.
    pub centers: Vec<Position>,
    pub footprint_radius: f64,
    pub coverage_radius: f64,
    pub solid_angle: f64,
    pub gain_db: f64,
}

impl BeamLayout {
    pub fn new(altitude: f64, fov_deg: f64, beams: usize) -> Self {
        let side = (1..=beams).find(|k| k * k >= beams).unwrap_or(1);
        let coverage_radius = altitude * math::tan(math::to_radians(fov_deg) / 2.0);
        let footprint_radius = coverage_radius / side as f64;
        let spacing = 2.0 * footprint_radius;
        let mid = (side as f64 - 1.0) / 2.0;
        let mut centers = Vec::with_capacity(side * side);
        for row in 0..side {
            for col in 0..side {
                centers.push(Position::new((col as f64 - mid) * spacing, (row as f64 - mid) * spacing));
            }
        }
        let solid_angle = beam_solid_angle(fov_deg, beams);
        Self { centers, footprint_radius, coverage_radius, solid_angle, gain_db: beam_gain_db(solid_angle) }
    }

    pub fn from_config(config: &SimConfig) -> Self {
        Self::new(config.altitude, config.fov_deg, config.num_beams)
    }

    pub fn num_beams(&self) -> usize {
        self.centers.len()
    }

    /// Beam whose footprint center is nearest to `gue`, if the user lies
    /// within that footprint. Ties go to the lower index.
    pub fn beam_index_of(&self, gue: Position, uabs: Position) -> Option<usize> {
        let dx = gue.x - uabs.x;
        let dy = gue.y - uabs.y;
        // Cheap reject before scanning centers.
        let reach = self.coverage_radius * core::f64::consts::SQRT_2 + self.footprint_radius;
        if dx.abs() > reach || dy.abs() > reach {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.centers.iter().enumerate() {
            let d = math::hypot(dx - c.x, dy - c.y);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.filter(|&(_, d)| d <= self.footprint_radius).map(|(i, _)| i)
    }
}

/// Uplink power budget terms, dB / dBm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub ptx_dbm: f64,
    pub gtx_db: f64,
    /// Receive gain inside a beam; outside every beam it is 0 dB.
    pub grx_db: f64,
    pub pn_dbm: f64,
    pub fc_ghz: f64,
}

/// Everything needed to evaluate the SNR of a GUE-UABS link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    pub layout: BeamLayout,
    pub budget: LinkBudget,
    pub heights: Heights,
    pub snr_th_db: f64,
}

impl LinkModel {
    pub fn from_config(config: &SimConfig) -> Self {
        let layout = BeamLayout::from_config(config);
        let budget = LinkBudget {
            ptx_dbm: config.ptx_dbm,
            gtx_db: config.gtx_db,
            grx_db: config.grx_db.unwrap_or(layout.gain_db),
            pn_dbm: config.pn_dbm,
            fc_ghz: config.carrier_ghz,
        };
        Self {
            layout,
            budget,
            heights: Heights { bs: config.altitude, ut: config.ue_height },
            snr_th_db: config.snr_th_db,
        }
    }

    /// `P_tx + G_tx + G_rx - PL - P_n`, with `d3D = sqrt(d2D^2 + h^2)`.
    pub fn snr_db(&self, gue: Position, uabs: Position, los: bool) -> Result<f64> {
        let d2d = gue.distance(uabs);
        let d3d = math::hypot(d2d, self.heights.bs);
        let pl = path_loss_db(d2d, d3d, self.budget.fc_ghz, self.heights, los)?;
        let grx = if self.layout.beam_index_of(gue, uabs).is_some() { self.budget.grx_db } else { 0.0 };
        Ok(self.budget.ptx_dbm + self.budget.gtx_db + grx - pl - self.budget.pn_dbm)
    }
}

/// LoS state of every (GUE, UABS) link for one step, row-major by GUE.
#[derive(Debug, Clone, PartialEq)]
pub struct LosState {
    agents: usize,
    los: Vec<bool>,
}

impl LosState {
    pub fn new(gues: usize, agents: usize, value: bool) -> Self {
        Self { agents, los: alloc::vec![value; gues * agents] }
    }

    pub fn get(&self, gue: usize, agent: usize) -> bool {
        self.los[gue * self.agents + agent]
    }

    pub fn set(&mut self, gue: usize, agent: usize, value: bool) {
        self.los[gue * self.agents + agent] = value;
    }

    /// Draws a fresh state for the given geometry. Stochastic mode consumes
    /// one uniform per link, GUE-major.
    pub fn draw<R: Rng + ?Sized>(
        mode: LosMode,
        gues: &[Position],
        agents: &[Position],
        rng: &mut R,
    ) -> Self {
        let mut state = Self::new(gues.len(), agents.len(), false);
        for (g, gp) in gues.iter().enumerate() {
            for (u, up) in agents.iter().enumerate() {
                let p = los_probability(gp.distance(*up));
                let los = match mode {
                    LosMode::Stochastic => rng.random::<f64>() < p,
                    LosMode::Expected => p >= 0.5,
                };
                state.set(g, u, los);
            }
        }
        state
    }
}
