//! Stratified hot-water store with perfectly mixed layers.
//!
//! Layer 0 is the top. Two hydraulic loops connect to the store: a charge loop
//! entering at the top and leaving at the bottom, and a discharge loop leaving
//! at the top and returning to the bottom. A direct heat draw can be taken
//! from the top layer. Advection is first-order upwind with sub-steps keeping
//! the layer Courant number at or below one; buoyancy mixing restores a
//! monotone profile after every sub-step.

use serde::{Deserialize, Serialize};

use crate::common::FluidProps;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedTank {
    fluid: FluidProps,
    layer_mass: f64,
    ua_loss: f64,
    temps: Vec<f64>,
}

/// Boundary conditions for one tank step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TankPorts {
    /// Charge loop flow [kg/s], enters the top layer at `charge_temp`.
    pub charge_flow: f64,
    pub charge_temp: f64,
    /// Discharge loop flow [kg/s], leaves the top layer and returns to the
    /// bottom layer at `discharge_return_temp`.
    pub discharge_flow: f64,
    pub discharge_return_temp: f64,
    /// Heat drawn directly from the top layer [W].
    pub top_draw: f64,
    /// The top layer is never drawn below this temperature.
    pub draw_floor: f64,
    /// Surroundings for the standing loss [degC].
    pub ambient: f64,
}

/// Energy bookkeeping of one step, all in J except the mean temperatures.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TankBalance {
    /// Enthalpy brought in by the charge loop net of its bottom outflow.
    pub charge_in: f64,
    /// Enthalpy carried away by the discharge loop net of its return.
    pub discharge_out: f64,
    pub draw: f64,
    pub unmet_draw: f64,
    pub standing_loss: f64,
    pub stored_before: f64,
    pub stored_after: f64,
    /// Flow-weighted mean temperature leaving the top (discharge loop).
    pub top_outlet_temp: f64,
    /// Flow-weighted mean temperature leaving the bottom (charge loop).
    pub bottom_outlet_temp: f64,
}

impl TankBalance {
    /// First-law residual: stored change minus net heat in [J].
    pub fn residual(&self) -> f64 {
        (self.stored_after - self.stored_before)
            - (self.charge_in - self.discharge_out - self.draw - self.standing_loss)
    }
}

impl StratifiedTank {
    pub fn new(fluid: FluidProps, volume: f64, layers: usize, ua_loss: f64, initial: f64) -> Result<Self> {
        if !(volume > 0.0) || layers < 2 || !(ua_loss >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tank needs volume > 0, >= 2 layers and non-negative loss (got {volume} m3, {layers}, {ua_loss} W/K)"
            )));
        }
        Ok(Self {
            fluid,
            layer_mass: volume * fluid.rho / layers as f64,
            ua_loss,
            temps: vec![initial; layers],
        })
    }

    pub fn temps(&self) -> &[f64] {
        &self.temps
    }

    pub fn set_temps(&mut self, temps: &[f64]) {
        assert_eq!(temps.len(), self.temps.len());
        self.temps.copy_from_slice(temps);
        mix_buoyant(&mut self.temps);
    }

    pub fn layers(&self) -> usize {
        self.temps.len()
    }

    pub fn top(&self) -> f64 {
        self.temps[0]
    }

    pub fn bottom(&self) -> f64 {
        self.temps[self.temps.len() - 1]
    }

    pub fn layer_mass(&self) -> f64 {
        self.layer_mass
    }

    pub fn total_mass(&self) -> f64 {
        self.layer_mass * self.temps.len() as f64
    }

    /// Stored enthalpy relative to 0 degC [J].
    pub fn stored_energy(&self) -> f64 {
        self.layer_mass * self.fluid.cp * self.temps.iter().sum::<f64>()
    }

    /// Temperature at a relative depth in [0, 1] (0 = top).
    pub fn sensor(&self, depth: f64) -> f64 {
        let n = self.temps.len();
        let idx = ((depth.clamp(0.0, 1.0) * n as f64).floor() as usize).min(n - 1);
        self.temps[idx]
    }

    pub fn is_stratified(&self) -> bool {
        self.temps.windows(2).all(|w| w[0] >= w[1])
    }

    pub fn step(&mut self, ports: &TankPorts, dt: f64) -> TankBalance {
        let cp = self.fluid.cp;
        let m = self.layer_mass;
        let n = self.temps.len();
        let mut bal = TankBalance {
            stored_before: self.stored_energy(),
            ..Default::default()
        };

        let charge = ports.charge_flow.max(0.0);
        let discharge = ports.discharge_flow.max(0.0);
        let throughput = charge + discharge;
        let n_sub = ((throughput * dt / m).ceil() as usize).max(1);
        let h = dt / n_sub as f64;
        let net_down = charge - discharge;
        let layer_ua = self.ua_loss / n as f64;
        let loss_decay = (-layer_ua * h / (m * cp)).exp();

        let mut top_out_sum = 0.0;
        let mut bottom_out_sum = 0.0;
        let mut next = vec![0.0; n];
        for _ in 0..n_sub {
            let t = &self.temps;
            bal.charge_in += charge * cp * (ports.charge_temp - t[n - 1]) * h;
            bal.discharge_out += discharge * cp * (t[0] - ports.discharge_return_temp) * h;
            top_out_sum += discharge * t[0] * h;
            bottom_out_sum += charge * t[n - 1] * h;

            for i in 0..n {
                let mut inflow = 0.0;
                if i == 0 {
                    inflow += charge * (ports.charge_temp - t[0]);
                }
                if i == n - 1 {
                    inflow += discharge * (ports.discharge_return_temp - t[n - 1]);
                }
                if net_down > 0.0 && i > 0 {
                    inflow += net_down * (t[i - 1] - t[i]);
                } else if net_down < 0.0 && i + 1 < n {
                    inflow += -net_down * (t[i + 1] - t[i]);
                }
                next[i] = t[i] + h / m * inflow;
            }
            self.temps.copy_from_slice(&next);

            if layer_ua > 0.0 {
                for t in self.temps.iter_mut() {
                    let after = ports.ambient + (*t - ports.ambient) * loss_decay;
                    bal.standing_loss += m * cp * (*t - after);
                    *t = after;
                }
            }

            if ports.top_draw > 0.0 {
                let wanted = ports.top_draw * h;
                let available = (m * cp * (self.temps[0] - ports.draw_floor)).max(0.0);
                let taken = wanted.min(available);
                self.temps[0] -= taken / (m * cp);
                bal.draw += taken;
                bal.unmet_draw += wanted - taken;
            }

            mix_buoyant(&mut self.temps);
        }

        bal.top_outlet_temp = if discharge > 0.0 {
            top_out_sum / (discharge * dt)
        } else {
            self.temps[0]
        };
        bal.bottom_outlet_temp = if charge > 0.0 {
            bottom_out_sum / (charge * dt)
        } else {
            self.temps[n - 1]
        };
        bal.stored_after = self.stored_energy();
        bal
    }
}

/// Merges adjacent layers until temperatures are non-increasing from the top
/// (pool-adjacent-violators on equal masses; conserves energy).
fn mix_buoyant(temps: &mut [f64]) {
    if temps.windows(2).all(|w| w[0] >= w[1]) {
        return;
    }
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(temps.len());
    for &t in temps.iter() {
        blocks.push((t, 1));
        while blocks.len() >= 2 {
            let (s1, c1) = blocks[blocks.len() - 2];
            let (s2, c2) = blocks[blocks.len() - 1];
            if s1 / c1 as f64 >= s2 / c2 as f64 {
                break;
            }
            blocks.pop();
            let last = blocks.len() - 1;
            blocks[last] = (s1 + s2, c1 + c2);
        }
    }
    let mut i = 0;
    for (s, c) in blocks {
        let mean = s / c as f64;
        for t in &mut temps[i..i + c] {
            *t = mean;
        }
        i += c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tank() -> StratifiedTank {
        let mut t = StratifiedTank::new(FluidProps::default(), 1.0, 5, 2.0, 60.0).unwrap();
        t.set_temps(&[75.0, 70.0, 60.0, 50.0, 40.0]);
        t
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(StratifiedTank::new(FluidProps::default(), 0.0, 3, 1.0, 50.0).is_err());
        assert!(StratifiedTank::new(FluidProps::default(), 1.0, 1, 1.0, 50.0).is_err());
    }

    #[test]
    fn buoyancy_mixing_conserves_energy() {
        let mut t = vec![50.0, 60.0, 40.0, 45.0];
        let before: f64 = t.iter().sum();
        mix_buoyant(&mut t);
        assert!(t.windows(2).all(|w| w[0] >= w[1]));
        assert!((t.iter().sum::<f64>() - before).abs() < 1e-12);
        assert_eq!(t, vec![55.0, 55.0, 42.5, 42.5]);
    }

    #[test]
    fn idle_tank_only_loses_heat() {
        let mut t = tank();
        let bal = t.step(
            &TankPorts {
                ambient: 20.0,
                ..Default::default()
            },
            600.0,
        );
        assert!(bal.standing_loss > 0.0);
        assert!(bal.residual().abs() < 1e-4, "residual {}", bal.residual());
    }

    #[test]
    fn charge_raises_energy_and_keeps_order() {
        let mut t = tank();
        let bal = t.step(
            &TankPorts {
                charge_flow: 0.2,
                charge_temp: 80.0,
                discharge_flow: 0.05,
                discharge_return_temp: 40.0,
                top_draw: 3000.0,
                draw_floor: 45.0,
                ambient: 20.0,
            },
            300.0,
        );
        assert!(t.is_stratified());
        assert!(bal.charge_in > 0.0);
        assert!(bal.residual().abs() < 1e-3, "residual {}", bal.residual());
        assert!(bal.bottom_outlet_temp < 50.0 + 1e-9);
    }

    #[test]
    fn draw_respects_floor() {
        let mut t = StratifiedTank::new(FluidProps::default(), 0.1, 3, 0.0, 46.0).unwrap();
        let bal = t.step(
            &TankPorts {
                top_draw: 1e6,
                draw_floor: 45.0,
                ..Default::default()
            },
            60.0,
        );
        assert!(bal.unmet_draw > 0.0);
        assert!(t.temps().iter().all(|&x| x >= 45.0 - 1e-9));
    }

    proptest::proptest! {
        #[test]
        fn first_law_holds(cf in 0.0f64..3.0, df in 0.0f64..3.0, tc in 30.0f64..90.0,
                           tr in 20.0f64..60.0, draw in 0.0f64..2e4, dt in 1.0f64..900.0) {
            let mut t = tank();
            let bal = t.step(&TankPorts {
                charge_flow: cf, charge_temp: tc, discharge_flow: df,
                discharge_return_temp: tr, top_draw: draw, draw_floor: 10.0, ambient: 15.0,
            }, dt);
            let scale = bal.stored_before.abs();
            proptest::prop_assert!(bal.residual().abs() <= 1e-12 * scale * 100.0);
            proptest::prop_assert!(t.is_stratified());
        }
    }
}
