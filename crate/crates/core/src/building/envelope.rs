//! Two-node room/wall thermal model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lumped envelope. Per-area defaults follow a tight post-2016 single-family
/// house and are scaled by [`EnvelopeParams::for_area`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeParams {
    pub area: f64,
    /// Wall to ambient [W/K].
    pub ua_env: f64,
    /// Room air and furniture [J/K].
    pub c_int: f64,
    pub c_wall: f64,
    /// Room to wall [W/K].
    pub ua_iw: f64,
    /// Room to ambient by air exchange [W/K].
    pub vent_loss: f64,
    /// Effective solar aperture [m2].
    pub g_solar: f64,
}

pub(crate) const UA_ENV_PER_M2: f64 = 0.42;
pub(crate) const VENT_PER_M2: f64 = 0.17;
const UA_IW_PER_M2: f64 = 7.5;
const C_INT_PER_M2: f64 = 13e3;
const C_WALL_PER_M2: f64 = 110e3;
const G_SOLAR_PER_M2: f64 = 0.04;

impl EnvelopeParams {
    pub fn for_area(area: f64) -> Self {
        Self {
            area,
            ua_env: UA_ENV_PER_M2 * area,
            c_int: C_INT_PER_M2 * area,
            c_wall: C_WALL_PER_M2 * area,
            ua_iw: UA_IW_PER_M2 * area,
            vent_loss: VENT_PER_M2 * area,
            g_solar: G_SOLAR_PER_M2 * area,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = [self.area, self.ua_env, self.c_int, self.c_wall, self.ua_iw, self.vent_loss];
        if v.iter().all(|&x| x > 0.0 && x.is_finite()) && self.g_solar >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("envelope parameters must be positive: {self:?}")))
        }
    }

    /// Steady-state loss coefficient room to ambient [W/K].
    pub fn total_ua(&self) -> f64 {
        self.vent_loss + 1.0 / (1.0 / self.ua_env + 1.0 / self.ua_iw)
    }

    /// Largest stable explicit step [s].
    fn max_step(&self) -> f64 {
        let room = self.c_int / (self.ua_iw + self.vent_loss);
        let wall = self.c_wall / (self.ua_iw + self.ua_env);
        0.5 * room.min(wall)
    }
}

/// Heat flows of one envelope step, integrated [J].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnvelopeBalance {
    pub heat_in: f64,
    pub vent: f64,
    pub transmission: f64,
    pub stored_before: f64,
    pub stored_after: f64,
}

impl EnvelopeBalance {
    pub fn residual(&self) -> f64 {
        (self.stored_after - self.stored_before) - (self.heat_in - self.vent - self.transmission)
    }
}

/// Explicit Euler update of (room, wall) with constant gains [W] to the room
/// over `dt`, sub-stepped for stability.
pub fn envelope_step(p: &EnvelopeParams, t_room: &mut f64, t_wall: &mut f64, t_amb: f64, gains: f64, dt: f64) -> EnvelopeBalance {
    let stored = |r: f64, w: f64| p.c_int * r + p.c_wall * w;
    let mut bal = EnvelopeBalance {
        stored_before: stored(*t_room, *t_wall),
        ..Default::default()
    };
    let n = ((dt / p.max_step()).ceil() as usize).max(1);
    let h = dt / n as f64;
    for _ in 0..n {
        let q_vent = p.vent_loss * (*t_room - t_amb);
        let q_iw = p.ua_iw * (*t_room - *t_wall);
        let q_env = p.ua_env * (*t_wall - t_amb);
        *t_room += h * (gains - q_vent - q_iw) / p.c_int;
        *t_wall += h * (q_iw - q_env) / p.c_wall;
        bal.heat_in += gains * h;
        bal.vent += q_vent * h;
        bal.transmission += q_env * h;
    }
    bal.stored_after = stored(*t_room, *t_wall);
    bal
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_is_fixed_point() {
        let p = EnvelopeParams::for_area(150.0);
        let (mut r, mut w) = (20.0, 20.0);
        envelope_step(&p, &mut r, &mut w, 20.0, 0.0, 3600.0);
        assert_eq!((r, w), (20.0, 20.0));
    }

    #[test]
    fn free_cooling_is_monotone() {
        let p = EnvelopeParams::for_area(150.0);
        let (mut r, mut w) = (20.0, 20.0);
        let mut last = r;
        for _ in 0..500 {
            let bal = envelope_step(&p, &mut r, &mut w, 0.0, 0.0, 600.0);
            assert!(r <= last && r > 0.0);
            assert!(bal.residual().abs() < 1e-6 * bal.stored_before.abs().max(1.0));
            last = r;
        }
        assert!(r < 10.0);
    }

    #[test]
    fn steady_state_matches_series_conductance() {
        let p = EnvelopeParams::for_area(100.0);
        let (mut r, mut w) = (20.0, 15.0);
        let q = 1000.0;
        for _ in 0..2000 {
            envelope_step(&p, &mut r, &mut w, 0.0, q, 3600.0);
        }
        assert!((r - q / p.total_ua()).abs() < 1e-6);
    }
}
