use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EnergyLedger;
use crate::center::Variant;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnuityParams {
    /// Discount factor per year (1 + interest rate).
    pub q: f64,
    /// Observation period [a].
    pub lifetime: u32,
}

impl Default for AnnuityParams {
    fn default() -> Self {
        Self { q: 1.0303, lifetime: 15 }
    }
}

/// Capital recovery factor (q-1) q^T / (q^T - 1).
pub fn annuity_factor(q: f64, lifetime: u32) -> f64 {
    let qt = q.powi(lifetime as i32);
    (q - 1.0) * qt / (qt - 1.0)
}

/// Prices and unit investments. All money in EUR, energy prices per kWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CostBook {
    pub invest_chp_ng: f64,
    pub invest_chp_bm: f64,
    pub invest_chp_h2: f64,
    pub invest_boiler: f64,
    pub invest_gshp: f64,
    pub invest_ashp: f64,
    pub invest_storage: f64,
    /// Operation and maintenance [% of investment per year].
    pub om_percent: f64,
    pub price_ng: f64,
    pub price_bm: f64,
    pub price_h2: f64,
    pub elec_buy: f64,
    pub elec_sell: f64,
}

impl Default for CostBook {
    fn default() -> Self {
        Self {
            invest_chp_ng: 0.0,
            invest_chp_bm: 0.0,
            invest_chp_h2: 0.0,
            invest_boiler: 0.0,
            invest_gshp: 0.0,
            invest_ashp: 0.0,
            invest_storage: 0.0,
            om_percent: 0.0,
            price_ng: 0.0,
            price_bm: 0.0,
            price_h2: 0.0,
            elec_buy: 0.0,
            elec_sell: 0.3986,
        }
    }
}

impl CostBook {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let book: Self = toml::from_str(&text).map_err(|e| Error::parse(path, toml_line(&e, &text), e.message()))?;
        book.validate()?;
        Ok(book)
    }

    pub fn validate(&self) -> Result<()> {
        let v = [
            self.invest_chp_ng,
            self.invest_chp_bm,
            self.invest_chp_h2,
            self.invest_boiler,
            self.invest_gshp,
            self.invest_ashp,
            self.invest_storage,
            self.om_percent,
            self.price_ng,
            self.price_bm,
            self.price_h2,
            self.elec_buy,
            self.elec_sell,
        ];
        if v.iter().all(|x| *x >= 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("cost book entries must be non-negative".into()))
        }
    }

    /// Total investment of the variant's plant.
    pub fn investment(&self, variant: Variant) -> f64 {
        self.invest_storage
            + match variant {
                Variant::V1 => self.invest_chp_ng + self.invest_boiler,
                Variant::V2 => self.invest_chp_bm + self.invest_boiler,
                Variant::V3 => self.invest_gshp + self.invest_boiler,
                Variant::V4 => self.invest_ashp + self.invest_chp_h2,
            }
    }
}

pub(crate) fn toml_line(err: &toml::de::Error, text: &str) -> usize {
    err.span().map_or(1, |s| text.as_bytes()[..s.start.min(text.len())].iter().filter(|&&b| b == b'\n').count() + 1)
}

/// Annual cost [EUR/a]: capital recovery, O&M, fuel and bought electricity,
/// minus sales revenue when `with_sale`.
pub fn annuity(book: &CostBook, investment: f64, ledger: &EnergyLedger, params: &AnnuityParams, with_sale: bool) -> f64 {
    let capital = investment * annuity_factor(params.q, params.lifetime);
    let om = investment * book.om_percent / 100.0;
    let fuel = ledger.fuel_ng * book.price_ng + ledger.fuel_bm * book.price_bm + ledger.fuel_h2 * book.price_h2;
    let revenue = if with_sale { ledger.elec_sold * book.elec_sell } else { 0.0 };
    capital + om + fuel + ledger.elec_bought * book.elec_buy - revenue
}

/// [EUR/kWh]
pub fn heat_production_cost(annuity: f64, heat_used: f64) -> Result<f64> {
    if !(heat_used > 0.0) {
        return Err(Error::ZeroHeat);
    }
    Ok(annuity.abs() / heat_used)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn factor_examples() {
        let a = annuity_factor(1.0303, 15);
        // payment that amortises a unit loan, rate 3.03 %, 15 periods
        let r: f64 = 0.0303;
        let pmt = r / (1.0 - (1.0 + r).powi(-15));
        assert!((a - pmt).abs() < 1e-12);
        assert!((a - 0.08396).abs() < 1e-4, "{a}");
        assert!((annuity_factor(1.07, 1) - 1.07).abs() < 1e-12);
        assert!((annuity_factor(1.0001, 15) - 1.0 / 15.0).abs() < 1e-3);
    }

    #[test]
    fn annuity_examples() {
        let zero = CostBook {
            elec_sell: 0.0,
            ..CostBook::default()
        };
        let p = AnnuityParams::default();
        assert_eq!(annuity(&zero, 0.0, &EnergyLedger::default(), &p, true), 0.0);
        let a = annuity(&zero, 100_000.0, &EnergyLedger::default(), &p, true);
        assert!((a - 100_000.0 * annuity_factor(1.0303, 15)).abs() < 1e-9);
        assert!((a - 8396.0).abs() < 5.0);
        let book = CostBook::default();
        let sold = EnergyLedger {
            elec_sold: 10_000.0,
            elec_gen: 10_000.0,
            ..Default::default()
        };
        let drop = annuity(&book, 0.0, &EnergyLedger::default(), &p, true) - annuity(&book, 0.0, &sold, &p, true);
        assert!((drop - 3986.0).abs() < 1e-9);
        assert_eq!(annuity(&book, 0.0, &sold, &p, false), 0.0);
    }

    #[test]
    fn cost_examples() {
        assert!((heat_production_cost(53_400.0, 534_000.0).unwrap() - 0.10).abs() < 1e-15);
        assert_eq!(heat_production_cost(0.0, 100.0).unwrap(), 0.0);
        assert!(matches!(heat_production_cost(1.0, 0.0), Err(Error::ZeroHeat)));
    }

    #[test]
    fn cost_book_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.cfg");
        std::fs::write(&p, "price_ng = 0.08\nprice_oil = 1.0\n").unwrap();
        assert!(matches!(CostBook::read(&p), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&p, "price_ng = 0.08\n").unwrap();
        assert_eq!(CostBook::read(&p).unwrap().price_ng, 0.08);
    }

    proptest! {
        #[test]
        fn present_value_identity(q in 1.001f64..1.2, t in 1u32..60) {
            let a = annuity_factor(q, t);
            let pv: f64 = (1..=t).map(|i| q.powi(-(i as i32))).sum();
            prop_assert!((a * pv - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn sale_slope_is_the_tariff(sold in 0.0f64..1e6, extra in 1.0f64..1e5, tariff in 0.0f64..1.0) {
            let book = CostBook { elec_sell: tariff, ..CostBook::default() };
            let p = AnnuityParams::default();
            let base = EnergyLedger { elec_sold: sold, elec_gen: sold + extra, ..Default::default() };
            let more = EnergyLedger { elec_sold: sold + extra, ..base };
            let slope = (annuity(&book, 5e4, &base, &p, true) - annuity(&book, 5e4, &more, &p, true)) / extra;
            prop_assert!((slope - tariff).abs() <= 1e-9 * (1.0 + sold / extra));
        }
    }
}
