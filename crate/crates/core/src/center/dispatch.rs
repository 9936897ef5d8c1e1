//! Unit setpoints from the demand command and the store's sensors.

use serde::{Deserialize, Serialize};

use super::{ChpUnit, PeakBoiler, Season};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankSensors {
    pub upper: f64,
    pub lower: f64,
}

/// Hysteresis state for low-load cycling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleState {
    pub on: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Setpoints {
    pub chp: f64,
    pub boiler: f64,
    pub hp: f64,
    /// Generator outlet temperature into the store top.
    pub t_out: f64,
    /// Outlet temperature of the heat-pump stage.
    pub hp_sink: f64,
    pub cycling: bool,
    pub capacity_exceeded: bool,
}

impl Setpoints {
    pub fn total(&self) -> f64 {
        self.chp + self.boiler + self.hp
    }
}

/// Cycling thresholds around the outlet setpoint: switch on when the upper
/// sensor falls `band` below it, off once the lower sensor is within
/// `off_offset` of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleBand {
    pub band: f64,
    pub off_offset: f64,
}

impl Default for CycleBand {
    fn default() -> Self {
        Self {
            band: 2.0,
            off_offset: 5.0,
        }
    }
}

fn cycle(state: &mut CycleState, sensors: &TankSensors, t_set: f64, band: &CycleBand) -> bool {
    if sensors.upper < t_set - band.band {
        state.on = true;
    } else if sensors.lower >= t_set - band.off_offset {
        state.on = false;
    }
    state.on
}

/// Base unit with min part load plus an optional peak unit.
/// Returns (base, peak, capacity exceeded).
#[allow(clippy::too_many_arguments)]
pub fn dispatch_base(
    q: f64,
    base_max: f64,
    base_min: f64,
    peak_max: f64,
    t_set: f64,
    band: &CycleBand,
    sensors: &TankSensors,
    state: &mut CycleState,
) -> (f64, f64, bool) {
    let q = q.max(0.0);
    if q < base_min {
        let on = cycle(state, sensors, t_set, band);
        return (if on { base_min } else { 0.0 }, 0.0, false);
    }
    state.on = false;
    if q <= base_max {
        return (q, 0.0, false);
    }
    let residual = q - base_max;
    (base_max, residual.min(peak_max), residual > peak_max)
}

pub fn dispatch_v1(
    q: f64,
    chp: &ChpUnit,
    boiler: &PeakBoiler,
    t_set: f64,
    band: &CycleBand,
    sensors: &TankSensors,
    state: &mut CycleState,
) -> Setpoints {
    let (base, peak, exceeded) = dispatch_base(q, chp.q_max, chp.q_min(), boiler.q_max, t_set, band, sensors, state);
    Setpoints {
        chp: base,
        boiler: peak,
        t_out: t_set,
        hp_sink: t_set,
        cycling: q < chp.q_min(),
        capacity_exceeded: exceeded,
        ..Default::default()
    }
}

/// `hp_capacity` is the heat pump's available output at current conditions.
#[allow(clippy::too_many_arguments)]
pub fn dispatch_v3(
    q: f64,
    hp_capacity: f64,
    hp_min: f64,
    boiler: &PeakBoiler,
    t_set: f64,
    band: &CycleBand,
    sensors: &TankSensors,
    state: &mut CycleState,
) -> Setpoints {
    let hp_min = hp_min.min(hp_capacity);
    let (base, peak, exceeded) = dispatch_base(q, hp_capacity, hp_min, boiler.q_max, t_set, band, sensors, state);
    Setpoints {
        hp: base,
        boiler: peak,
        t_out: t_set,
        hp_sink: t_set,
        cycling: q < hp_min,
        capacity_exceeded: exceeded,
        ..Default::default()
    }
}

/// Air-source heat pump with hydrogen CHP.
///
/// Winter: the heat pump lifts the store bottom to `stage_temp`, the CHP
/// finishes to `t_set`, so the split follows the two temperature lifts. A
/// saturated CHP hands the remainder back to the heat pump. Below the CHP's
/// minimum stage output the pair cycles at that level.
/// Summer: the heat pump alone heats to `t_set`; the CHP only covers what
/// exceeds the heat pump.
#[allow(clippy::too_many_arguments)]
pub fn dispatch_v4(
    q: f64,
    season: Season,
    t_return: f64,
    chp: &ChpUnit,
    hp_capacity: f64,
    hp_min: f64,
    stage_temp: f64,
    t_set: f64,
    band: &CycleBand,
    sensors: &TankSensors,
    state: &mut CycleState,
) -> Setpoints {
    let q = q.max(0.0);
    let mut sp = Setpoints {
        t_out: t_set,
        hp_sink: t_set,
        ..Default::default()
    };
    match season {
        Season::Winter => {
            let hp_share = if t_set > t_return {
                ((stage_temp - t_return) / (t_set - t_return)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let chp_share = 1.0 - hp_share;
            let min_total = if chp_share > 0.0 { chp.q_min() / chp_share } else { hp_min };
            let total = if q < min_total {
                sp.cycling = true;
                if cycle(state, sensors, t_set, band) {
                    min_total
                } else {
                    0.0
                }
            } else {
                state.on = false;
                q
            };
            sp.chp = (total * chp_share).min(chp.q_max);
            sp.hp = total - sp.chp;
            if sp.hp > hp_capacity {
                sp.hp = hp_capacity;
                sp.capacity_exceeded = true;
            }
            if sp.total() > 0.0 {
                sp.hp_sink = t_return + (t_set - t_return) * sp.hp / sp.total();
            }
        }
        Season::Summer => {
            let hp_min = hp_min.min(hp_capacity);
            let (base, peak, exceeded) = dispatch_base(q, hp_capacity, hp_min, chp.q_max, t_set, band, sensors, state);
            sp.hp = base;
            sp.chp = if peak > 0.0 { peak.max(chp.q_min()) } else { 0.0 };
            sp.cycling = q < hp_min;
            sp.capacity_exceeded = exceeded;
        }
    }
    sp
}
