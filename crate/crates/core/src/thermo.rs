//! Shared thermal zone: a discretized temperature/humidity grid, exponential
//! relaxation of the ambient toward setpoints, and Magnus coupling between
//! temperature and relative humidity at a fixed dew point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGNUS_A: f64 = 17.625;
const MAGNUS_B: f64 = 243.04;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub t_step: f64,
    pub rh_min: f64,
    pub rh_max: f64,
    pub rh_step: f64,
    pub dew_point: f64,
    pub decay_k: f64,
    /// Shift the other setpoint through the Magnus relation when one changes.
    pub coupling: bool,
}

impl Default for ThermalGrid {
    fn default() -> Self {
        ThermalGrid {
            t_min: 15.0,
            t_max: 30.0,
            t_step: 1.0,
            rh_min: 30.0,
            rh_max: 70.0,
            rh_step: 5.0,
            dew_point: 4.0,
            decay_k: 0.8,
            coupling: true,
        }
    }
}

fn divides(lo: f64, hi: f64, step: f64) -> Option<usize> {
    if !(step > 0.0) || !(lo < hi) {
        return None;
    }
    let n = (hi - lo) / step;
    let r = n.round();
    ((n - r).abs() < 1e-9).then_some(r as usize + 1)
}

impl ThermalGrid {
    pub fn validate(&self) -> Result<()> {
        if divides(self.t_min, self.t_max, self.t_step).is_none() {
            return Err(Error::Config(format!(
                "temperature range [{}, {}] is not divided by step {}",
                self.t_min, self.t_max, self.t_step
            )));
        }
        if divides(self.rh_min, self.rh_max, self.rh_step).is_none() {
            return Err(Error::Config(format!(
                "humidity range [{}, {}] is not divided by step {}",
                self.rh_min, self.rh_max, self.rh_step
            )));
        }
        if !(self.decay_k > 0.0) {
            return Err(Error::Config(format!("decay_k must be positive, got {}", self.decay_k)));
        }
        if self.rh_min <= 0.0 || self.rh_max > 100.0 {
            return Err(Error::Config("humidity range must lie in (0, 100]".into()));
        }
        Ok(())
    }

    pub fn n_temp(&self) -> usize {
        divides(self.t_min, self.t_max, self.t_step).unwrap_or(1)
    }

    pub fn n_rh(&self) -> usize {
        divides(self.rh_min, self.rh_max, self.rh_step).unwrap_or(1)
    }

    pub fn temp_at(&self, idx: usize) -> f64 {
        self.t_min + idx as f64 * self.t_step
    }

    pub fn rh_at(&self, idx: usize) -> f64 {
        self.rh_min + idx as f64 * self.rh_step
    }

    /// Nearest grid index, ties rounding up, clamped to the grid.
    pub fn temp_index(&self, t: f64) -> usize {
        nearest_index(t, self.t_min, self.t_step, self.n_temp())
    }

    pub fn rh_index(&self, rh: f64) -> usize {
        nearest_index(rh, self.rh_min, self.rh_step, self.n_rh())
    }

    pub fn snap_temp(&self, t: f64) -> f64 {
        self.temp_at(self.temp_index(t))
    }

    pub fn snap_rh(&self, rh: f64) -> f64 {
        self.rh_at(self.rh_index(rh))
    }

    pub fn clamp_temp(&self, t: f64) -> f64 {
        t.clamp(self.t_min, self.t_max)
    }

    pub fn clamp_rh(&self, rh: f64) -> f64 {
        rh.clamp(self.rh_min, self.rh_max)
    }

    /// Every grid point, ordered by temperature then humidity.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.n_temp())
            .flat_map(move |i| (0..self.n_rh()).map(move |j| (self.temp_at(i), self.rh_at(j))))
    }
}

fn nearest_index(x: f64, lo: f64, step: f64, n: usize) -> usize {
    // Small epsilon so that values a hair under a .5 tie still round up
    // after floating-point noise from the relaxation.
    let pos = ((x - lo) / step + 0.5 + 1e-12).floor();
    if pos <= 0.0 {
        0
    } else {
        (pos as usize).min(n - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientState {
    pub temp: f64,
    pub rh: f64,
    pub temp_setpoint: f64,
    pub rh_setpoint: f64,
    pub t_idx: usize,
    pub rh_idx: usize,
}

impl AmbientState {
    /// Ambient sitting exactly on a grid point, with setpoints equal to it.
    pub fn at_grid_point(grid: &ThermalGrid, t_idx: usize, rh_idx: usize) -> Self {
        let temp = grid.temp_at(t_idx);
        let rh = grid.rh_at(rh_idx);
        AmbientState {
            temp,
            rh,
            temp_setpoint: temp,
            rh_setpoint: rh,
            t_idx,
            rh_idx,
        }
    }

    fn reindex(mut self, grid: &ThermalGrid) -> Self {
        self.t_idx = grid.temp_index(self.temp);
        self.rh_idx = grid.rh_index(self.rh);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ThAction {
    TempUp,
    TempDown,
    HumUp,
    HumDown,
}

impl ThAction {
    pub const ALL: [ThAction; 4] = [
        ThAction::TempUp,
        ThAction::TempDown,
        ThAction::HumUp,
        ThAction::HumDown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ThAction::TempUp => "temp_up",
            ThAction::TempDown => "temp_down",
            ThAction::HumUp => "hum_up",
            ThAction::HumDown => "hum_down",
        }
    }
}

/// One step of Newton's law of cooling toward `t_target`.
pub fn newton_step(t_current: f64, t_target: f64, k: f64) -> f64 {
    t_target + (t_current - t_target) * (-k).exp()
}

fn magnus_exponent(t: f64, what: &'static str) -> Result<f64> {
    let denom = MAGNUS_B + t;
    if !(denom > 0.0) {
        return Err(Error::domain(what, format!("temperature {t} is at or below -243.04")));
    }
    Ok(MAGNUS_A * t / denom)
}

/// Relative humidity (%) of air at `t` whose dew point is `t_dew`.
pub fn rh_from_temp(t: f64, t_dew: f64) -> Result<f64> {
    let dew = magnus_exponent(t_dew, "rh_from_temp")?;
    let dry = magnus_exponent(t, "rh_from_temp")?;
    Ok(100.0 * dew.exp() / dry.exp())
}

/// Temperature at which air with dew point `t_dew` has relative humidity `rh`.
pub fn temp_from_rh(rh: f64, t_dew: f64) -> Result<f64> {
    if !(rh > 0.0) {
        return Err(Error::domain("temp_from_rh", format!("relative humidity {rh} must be positive")));
    }
    let dew = magnus_exponent(t_dew, "temp_from_rh")?;
    let ln_rh = (rh / 100.0).ln();
    let denom = MAGNUS_A + ln_rh - dew;
    if !(denom > 0.0) {
        return Err(Error::domain("temp_from_rh", format!("no temperature for rh {rh} at dew point {t_dew}")));
    }
    Ok(MAGNUS_B * (dew - ln_rh) / denom)
}

/// Moves one setpoint a grid step; the other setpoint follows the
/// differential Magnus shift when coupling is enabled. A move past the
/// grid edge is a no-op.
pub fn apply_th_action(state: AmbientState, action: ThAction, grid: &ThermalGrid) -> AmbientState {
    let mut next = state;
    match action {
        ThAction::TempUp | ThAction::TempDown => {
            let dir = if action == ThAction::TempUp { 1.0 } else { -1.0 };
            let old = state.temp_setpoint;
            let new = grid.snap_temp(grid.clamp_temp(old + dir * grid.t_step));
            if new == old {
                return state;
            }
            next.temp_setpoint = new;
            if grid.coupling {
                // The Magnus terms are finite on any validated grid.
                if let (Ok(a), Ok(b)) = (rh_from_temp(new, grid.dew_point), rh_from_temp(old, grid.dew_point)) {
                    next.rh_setpoint = grid.snap_rh(grid.clamp_rh(state.rh_setpoint + (a - b)));
                }
            }
        }
        ThAction::HumUp | ThAction::HumDown => {
            let dir = if action == ThAction::HumUp { 1.0 } else { -1.0 };
            let old = state.rh_setpoint;
            let new = grid.snap_rh(grid.clamp_rh(old + dir * grid.rh_step));
            if new == old {
                return state;
            }
            next.rh_setpoint = new;
            if grid.coupling {
                if let (Ok(a), Ok(b)) = (temp_from_rh(new, grid.dew_point), temp_from_rh(old, grid.dew_point)) {
                    next.temp_setpoint = grid.snap_temp(grid.clamp_temp(state.temp_setpoint + (a - b)));
                }
            }
        }
    }
    next
}

/// Relaxes temperature and humidity toward their setpoints by one time step.
pub fn tick(state: AmbientState, grid: &ThermalGrid) -> AmbientState {
    AmbientState {
        temp: newton_step(state.temp, state.temp_setpoint, grid.decay_k),
        rh: newton_step(state.rh, state.rh_setpoint, grid.decay_k),
        ..state
    }
    .reindex(grid)
}
