use serde::{Deserialize, Serialize};

use super::EmissionFactors;
use crate::common::J_PER_KWH;
use crate::cosim::Archive;
use crate::error::{Error, Result};

/// Archive columns the ledger is built from (mean powers in W).
pub mod columns {
    pub const Q_CHP: &str = "center.q_chp";
    pub const Q_BOILER: &str = "center.q_boiler";
    pub const Q_HP: &str = "center.q_hp";
    pub const FUEL_NG: &str = "center.fuel_ng";
    pub const FUEL_BM: &str = "center.fuel_bm";
    pub const FUEL_H2: &str = "center.fuel_h2";
    pub const ELEC_GEN: &str = "center.elec_gen";
    pub const ELEC_CONS: &str = "center.elec_cons";
    pub const ELEC_SOLD: &str = "center.elec_sold";
    pub const ELEC_BOUGHT: &str = "center.elec_bought";
    pub const HP_COVERED: &str = "center.hp_heat_covered";
    pub const DELIVERED: &str = "sum(b_*.q_hiu)";
    pub const LOSS_SUPPLY: &str = "supply.q_loss";
    pub const LOSS_RETURN: &str = "return.q_loss";

    pub const ALL: [&str; 14] = [
        Q_CHP, Q_BOILER, Q_HP, FUEL_NG, FUEL_BM, FUEL_H2, ELEC_GEN, ELEC_CONS, ELEC_SOLD, ELEC_BOUGHT, HP_COVERED, DELIVERED,
        LOSS_SUPPLY, LOSS_RETURN,
    ];
}

/// Energy totals [kWh].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyLedger {
    pub fuel_ng: f64,
    pub fuel_bm: f64,
    pub fuel_h2: f64,
    pub heat_chp: f64,
    pub heat_boiler: f64,
    pub heat_hp: f64,
    /// Heat-pump heat produced while CHP electricity covered its drive.
    pub heat_hp_covered: f64,
    pub heat_delivered: f64,
    pub network_loss: f64,
    pub elec_gen: f64,
    pub elec_cons: f64,
    pub elec_sold: f64,
    pub elec_bought: f64,
}

impl EnergyLedger {
    pub fn from_archive(archive: &Archive) -> Result<Self> {
        let energy = |name: &str| -> Result<f64> {
            let col = archive
                .column(name)
                .ok_or_else(|| Error::Schema(format!("archive lacks ledger column `{name}`")))?;
            Ok(col.iter().sum::<f64>() * archive.dt / J_PER_KWH)
        };
        use columns::*;
        Ok(Self {
            fuel_ng: energy(FUEL_NG)?,
            fuel_bm: energy(FUEL_BM)?,
            fuel_h2: energy(FUEL_H2)?,
            heat_chp: energy(Q_CHP)?,
            heat_boiler: energy(Q_BOILER)?,
            heat_hp: energy(Q_HP)?,
            heat_hp_covered: energy(HP_COVERED)?,
            heat_delivered: energy(DELIVERED)?,
            network_loss: energy(LOSS_SUPPLY)? + energy(LOSS_RETURN)?,
            elec_gen: energy(ELEC_GEN)?,
            elec_cons: energy(ELEC_CONS)?,
            elec_sold: energy(ELEC_SOLD)?,
            elec_bought: energy(ELEC_BOUGHT)?,
        })
    }

    fn fields(&self) -> [f64; 13] {
        [
            self.fuel_ng,
            self.fuel_bm,
            self.fuel_h2,
            self.heat_chp,
            self.heat_boiler,
            self.heat_hp,
            self.heat_hp_covered,
            self.heat_delivered,
            self.network_loss,
            self.elec_gen,
            self.elec_cons,
            self.elec_sold,
            self.elec_bought,
        ]
    }

    fn from_fields(f: [f64; 13]) -> Self {
        Self {
            fuel_ng: f[0],
            fuel_bm: f[1],
            fuel_h2: f[2],
            heat_chp: f[3],
            heat_boiler: f[4],
            heat_hp: f[5],
            heat_hp_covered: f[6],
            heat_delivered: f[7],
            network_loss: f[8],
            elec_gen: f[9],
            elec_cons: f[10],
            elec_sold: f[11],
            elec_bought: f[12],
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::from_fields(self.fields().map(|v| v * k))
    }

    pub fn plus(&self, other: &Self) -> Self {
        let (a, b) = (self.fields(), other.fields());
        Self::from_fields(std::array::from_fn(|i| a[i] + b[i]))
    }

    pub fn heat_produced(&self) -> f64 {
        self.heat_chp + self.heat_boiler + self.heat_hp
    }

    pub fn fuel_total(&self) -> f64 {
        self.fuel_ng + self.fuel_bm + self.fuel_h2
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = self.fields().iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Validation(format!("ledger entry {v} is negative or not finite")));
        }
        if self.elec_sold > self.elec_gen * (1.0 + 1e-12) {
            return Err(Error::Validation("more electricity sold than generated".into()));
        }
        Ok(())
    }
}

/// Annual total from representative months: January stands for two months,
/// April for four, August for six.
pub fn seasonal_extrapolate(jan: f64, apr: f64, aug: f64) -> f64 {
    2.0 * jan + 4.0 * apr + 6.0 * aug
}

impl EnergyLedger {
    pub fn extrapolate(jan: &Self, apr: &Self, aug: &Self) -> Self {
        let (a, b, c) = (jan.fields(), apr.fields(), aug.fields());
        Self::from_fields(std::array::from_fn(|i| seasonal_extrapolate(a[i], b[i], c[i])))
    }
}

/// CO2 equivalent [t]: fuel by carrier plus the per-kWh heat-pump factor on
/// heat-pump output not driven by concurrent CHP electricity.
pub fn emissions(ledger: &EnergyLedger, factors: &EmissionFactors) -> f64 {
    let fuel_kg = (ledger.fuel_ng * factors.ng + ledger.fuel_bm * factors.bm + ledger.fuel_h2 * factors.h2) / 1000.0;
    let hp_kg = factors.hp_heat * (ledger.heat_hp - ledger.heat_hp_covered).max(0.0);
    (fuel_kg + hp_kg) / 1000.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cosim::{ColumnMeta, Unit};
    use proptest::prelude::*;

    #[test]
    fn extrapolation_examples() {
        assert!((seasonal_extrapolate(22.94, 12.04, 7.0) - 136.04).abs() < 1e-9);
        assert!(((seasonal_extrapolate(22.94, 12.04, 7.0) - 136.0) / 136.0).abs() < 1e-3);
        assert_eq!(seasonal_extrapolate(86.0, 47.0, 29.0), 534.0);
        assert_eq!(seasonal_extrapolate(0.0, 0.0, 0.0), 0.0);
    }

    fn factors() -> EmissionFactors {
        EmissionFactors {
            ng: 200.0,
            bm: 60.0,
            h2: 80.0,
            grid: 400.0,
            hp_heat: 0.028,
        }
    }

    #[test]
    fn hp_term_and_coverage() {
        let aug = EnergyLedger {
            heat_hp: 29_000.0,
            ..Default::default()
        };
        assert!((emissions(&aug, &factors()) - 0.812).abs() < 1e-12);
        let jan = EnergyLedger {
            heat_hp: 30_000.0,
            heat_hp_covered: 30_000.0,
            fuel_h2: 80_000.0,
            ..Default::default()
        };
        assert!((emissions(&jan, &factors()) - 6.4).abs() < 1e-12);
        assert_eq!(emissions(&EnergyLedger::default(), &factors()), 0.0);
    }

    #[test]
    fn ledger_integrates_archive_columns() {
        let metas = columns::ALL
            .iter()
            .map(|c| ColumnMeta {
                name: c.to_string(),
                unit: Unit::Watt,
                block: "center".into(),
            })
            .collect();
        let mut a = Archive::new(0.0, 3600.0, metas);
        let mut row = vec![0.0; columns::ALL.len()];
        row[0] = 108e3;
        a.push_row(&row).unwrap();
        a.push_row(&row).unwrap();
        let l = EnergyLedger::from_archive(&a).unwrap();
        assert!((l.heat_chp - 216.0).abs() < 1e-12);
        assert_eq!(l.heat_boiler, 0.0);
    }

    fn ledger() -> impl Strategy<Value = EnergyLedger> {
        proptest::array::uniform13(0.0f64..1e6).prop_map(EnergyLedger::from_fields)
    }

    proptest! {
        #[test]
        fn extrapolation_is_linear(a in ledger(), b in ledger(), c in ledger(), d in ledger(), e in ledger(), f in ledger()) {
            let lhs = EnergyLedger::extrapolate(&a.plus(&d), &b.plus(&e), &c.plus(&f));
            let rhs = EnergyLedger::extrapolate(&a, &b, &c).plus(&EnergyLedger::extrapolate(&d, &e, &f));
            for (x, y) in lhs.fields().iter().zip(rhs.fields()) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
            }
        }

        #[test]
        fn emissions_monotone(l in ledger(), field in 0usize..13, bump in 0.0f64..1e5) {
            let mut f = l.fields();
            f[field] += bump;
            // raising covered heat only moves heat into the exempt share; keep heat_hp in step
            if field == 6 {
                f[5] += bump;
            }
            let after = EnergyLedger::from_fields(f);
            prop_assert!(emissions(&after, &factors()) >= emissions(&l, &factors()) - 1e-12);
        }
    }
}
