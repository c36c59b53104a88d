//! Per-user service bookkeeping: served flags, priorities, service windows
//! and the satisfaction metric.
//!
//! Windows are back-to-back and aligned for every user, starting at steps
//! `0, N, 2N, ...`. At a window start the priority resets to 1; the served
//! flag of that step still counts toward the window's served steps but does
//! not raise the priority.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::{BeamLayout, LinkModel, LosState};
use crate::error::{Error, Result};
use crate::scenario::Position;

/// Window length and satisfaction threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub len: usize,
    pub sat_threshold: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GueServiceState {
    pub priority: u32,
    pub window_start: usize,
    pub served_in_window: u32,
    pub windows_total: u32,
    pub windows_satisfied: u32,
    /// Whether a window has been opened yet.
    pub open: bool,
}

impl GueServiceState {
    fn close_window(&mut self, spec: WindowSpec) -> u32 {
        let served = self.served_in_window;
        self.windows_total += 1;
        if served as usize >= spec.sat_threshold {
            self.windows_satisfied += 1;
        }
        served
    }

    /// Advances the state to step `t`. Returns the served count of the
    /// window closed by this step, if any.
    pub fn advance(&mut self, t: usize, served: bool, spec: WindowSpec) -> Option<u32> {
        let mut closed = None;
        if t % spec.len == 0 {
            if self.open {
                closed = Some(self.close_window(spec));
            }
            self.open = true;
            self.priority = 1;
            self.window_start = t;
            self.served_in_window = served as u32;
        } else if served {
            self.priority += 1;
            self.served_in_window += 1;
        }
        closed
    }

    /// Closes the running window if it has reached full length by step `t`.
    pub fn finish(&mut self, t: usize, spec: WindowSpec) -> Option<u32> {
        if self.open && t + 1 - self.window_start == spec.len {
            self.open = false;
            Some(self.close_window(spec))
        } else {
            None
        }
    }
}

/// Functional form of [`GueServiceState::advance`].
pub fn update_priority(state: GueServiceState, t: usize, served: bool, spec: WindowSpec) -> GueServiceState {
    let mut next = state;
    next.advance(t, served, spec);
    next
}

/// Summed priorities of the users under each beam of one UABS.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BeamPriorityVector(pub Vec<u32>);

impl BeamPriorityVector {
    pub fn zeros(beams: usize) -> Self {
        Self(alloc::vec![0; beams])
    }

    pub fn l1(&self) -> u64 {
        self.0.iter().map(|&v| v as u64).sum()
    }
}

/// Served iff some UABS link reaches the SNR threshold.
pub fn is_served(
    gue_index: usize,
    gue: Position,
    uabs: &[Position],
    link: &LinkModel,
    los: &LosState,
) -> Result<bool> {
    for (u, p) in uabs.iter().enumerate() {
        if link.snr_db(gue, *p, los.get(gue_index, u))? >= link.snr_th_db {
            return Ok(true);
        }
    }
    Ok(false)
}

pub fn per_beam_info(
    uabs: Position,
    layout: &BeamLayout,
    gues: impl IntoIterator<Item = (Position, u32)>,
) -> BeamPriorityVector {
    let mut b = BeamPriorityVector::zeros(layout.num_beams());
    for (pos, priority) in gues {
        if let Some(i) = layout.beam_index_of(pos, uabs) {
            b.0[i] += priority;
        }
    }
    b
}

/// Mean over users of satisfied windows over closed windows.
pub fn satisfaction_metric(states: &[GueServiceState]) -> Result<f64> {
    if states.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (g, s) in states.iter().enumerate() {
        if s.windows_total == 0 {
            return Err(Error::NoClosedWindow(g));
        }
        sum += s.windows_satisfied as f64 / s.windows_total as f64;
    }
    Ok(sum / states.len() as f64)
}

/// Service state of every user for one episode plus the served-step count
/// of each closed window, so satisfaction can be recomputed for any
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceTracker {
    pub spec: WindowSpec,
    pub states: Vec<GueServiceState>,
    /// `log[g]` holds served counts of user `g`'s closed windows, in order.
    pub log: Vec<Vec<u32>>,
}

impl ServiceTracker {
    pub fn new(gues: usize, spec: WindowSpec) -> Self {
        Self {
            spec,
            states: alloc::vec![GueServiceState::default(); gues],
            log: alloc::vec![Vec::new(); gues],
        }
    }

    pub fn record_step(&mut self, t: usize, served: &[bool]) {
        for ((state, log), &s) in self.states.iter_mut().zip(&mut self.log).zip(served) {
            if let Some(n) = state.advance(t, s, self.spec) {
                log.push(n);
            }
        }
    }

    pub fn finish(&mut self, t: usize) {
        for (state, log) in self.states.iter_mut().zip(&mut self.log) {
            if let Some(n) = state.finish(t, self.spec) {
                log.push(n);
            }
        }
    }

    pub fn priorities(&self) -> impl Iterator<Item = u32> + '_ {
        self.states.iter().map(|s| s.priority)
    }

    /// Satisfaction for an arbitrary threshold, from the window log.
    pub fn satisfaction_at(&self, threshold: usize) -> Result<f64> {
        pg_from_log(&self.log, threshold)
    }
}

pub fn pg_from_log(log: &[Vec<u32>], threshold: usize) -> Result<f64> {
    if log.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (g, windows) in log.iter().enumerate() {
        if windows.is_empty() {
            return Err(Error::NoClosedWindow(g));
        }
        let sat = windows.iter().filter(|&&n| n as usize >= threshold).count();
        sum += sat as f64 / windows.len() as f64;
    }
    Ok(sum / log.len() as f64)
}
