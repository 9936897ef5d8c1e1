use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{annuity, emissions, heat_production_cost, AnnuityParams, CostBook, EmissionFactors, EnergyLedger};
use crate::center::Variant;
use crate::cosim::RunStats;
use crate::error::Result;
use crate::scenario::Month;

/// Everything a report is computed from: month ledgers plus the factors and
/// prices in force when they were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerBook {
    pub scenario: String,
    pub reference: Variant,
    pub factors: EmissionFactors,
    pub costs: CostBook,
    pub annuity: AnnuityParams,
    pub runs: Vec<MonthEntry>,
    #[serde(default)]
    pub failed: Vec<FailedJob>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonthEntry {
    pub variant: Variant,
    pub month: Month,
    pub ledger: EnergyLedger,
    pub stats: RunStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailedJob {
    pub variant: Variant,
    pub month: Month,
    pub error: String,
}

impl LedgerBook {
    pub fn ledger(&self, variant: Variant, month: Month) -> Option<&EnergyLedger> {
        self.runs.iter().find(|r| r.variant == variant && r.month == month).map(|r| &r.ledger)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthKpi {
    pub variant: Variant,
    pub month: Month,
    pub heat_mwh: f64,
    pub fuel_mwh: f64,
    pub elec_gen_mwh: f64,
    pub elec_cons_mwh: f64,
    pub chp_share: f64,
    pub emissions_t: f64,
}

/// Annual key figures of one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantKpi {
    pub variant: Variant,
    /// January, April, August ledgers [kWh].
    pub months: [EnergyLedger; 3],
    pub annual: EnergyLedger,
    pub emissions_monthly_t: [f64; 3],
    pub emissions_t: f64,
    /// Relative reduction against the reference variant.
    pub reduction: Option<f64>,
    pub investment_eur: f64,
    pub annuity_with_sale: f64,
    pub annuity_without_sale: f64,
    pub cost_with_sale: f64,
    pub cost_without_sale: f64,
    pub chp_share: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub variant: Variant,
    pub emissions: u32,
    pub cost_without_sale: u32,
    pub cost_with_sale: u32,
    pub fuel: u32,
    pub total: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub scenario: String,
    pub reference: Option<Variant>,
    pub monthly: Vec<MonthKpi>,
    /// Variants with all three representative months.
    pub variants: Vec<VariantKpi>,
    pub scores: Vec<ScoreRow>,
    pub failed: Vec<FailedJob>,
}

fn share(part: f64, whole: f64) -> f64 {
    if whole > 0.0 {
        part / whole
    } else {
        0.0
    }
}

/// Scores where lower values are better: 4 for the best, one less per
/// strictly better competitor, never below 1. Ties share the higher score.
pub fn score_column(values: &[f64]) -> Vec<u32> {
    values
        .iter()
        .map(|&v| {
            let better = values.iter().filter(|&&o| o < v).count() as u32;
            4u32.saturating_sub(better).max(1)
        })
        .collect()
}

pub fn score_variants(rows: &[VariantKpi]) -> Vec<ScoreRow> {
    let col = |f: fn(&VariantKpi) -> f64| score_column(&rows.iter().map(f).collect::<Vec<_>>());
    let e = col(|r| r.emissions_t);
    let kn = col(|r| r.cost_without_sale);
    let ks = col(|r| r.cost_with_sale);
    let fu = col(|r| r.annual.fuel_total());
    rows.iter()
        .enumerate()
        .map(|(i, r)| ScoreRow {
            variant: r.variant,
            emissions: e[i],
            cost_without_sale: kn[i],
            cost_with_sale: ks[i],
            fuel: fu[i],
            total: e[i] + kn[i] + ks[i] + fu[i],
        })
        .collect()
}

impl KpiReport {
    pub fn build(book: &LedgerBook) -> Result<Self> {
        let f = &book.factors;
        let monthly = book
            .runs
            .iter()
            .map(|r| MonthKpi {
                variant: r.variant,
                month: r.month,
                heat_mwh: r.ledger.heat_produced() / 1e3,
                fuel_mwh: r.ledger.fuel_total() / 1e3,
                elec_gen_mwh: r.ledger.elec_gen / 1e3,
                elec_cons_mwh: r.ledger.elec_cons / 1e3,
                chp_share: share(r.ledger.heat_chp, r.ledger.heat_produced()),
                emissions_t: emissions(&r.ledger, f),
            })
            .collect();

        let mut variants = Vec::new();
        for v in Variant::ALL {
            let months = [Month::Jan, Month::Apr, Month::Aug].map(|m| book.ledger(v, m).copied());
            let [Some(jan), Some(apr), Some(aug)] = months else { continue };
            let annual = EnergyLedger::extrapolate(&jan, &apr, &aug);
            let monthly_t = [jan, apr, aug].map(|l| emissions(&l, f));
            let investment = book.costs.investment(v);
            let a_with = annuity(&book.costs, investment, &annual, &book.annuity, true);
            let a_without = annuity(&book.costs, investment, &annual, &book.annuity, false);
            variants.push(VariantKpi {
                variant: v,
                months: [jan, apr, aug],
                annual,
                emissions_monthly_t: monthly_t,
                emissions_t: super::seasonal_extrapolate(monthly_t[0], monthly_t[1], monthly_t[2]),
                reduction: None,
                investment_eur: investment,
                annuity_with_sale: a_with,
                annuity_without_sale: a_without,
                cost_with_sale: heat_production_cost(a_with, annual.heat_delivered)?,
                cost_without_sale: heat_production_cost(a_without, annual.heat_delivered)?,
                chp_share: share(annual.heat_chp, annual.heat_produced()),
            });
        }
        let reference = variants.iter().find(|k| k.variant == book.reference).map(|k| k.emissions_t);
        if let Some(e_ref) = reference.filter(|e| *e > 0.0) {
            for k in variants.iter_mut().filter(|k| k.variant != book.reference) {
                k.reduction = Some(1.0 - k.emissions_t / e_ref);
            }
        }
        let scores = if variants.len() >= 2 { score_variants(&variants) } else { Vec::new() };
        Ok(Self {
            scenario: book.scenario.clone(),
            reference: reference.map(|_| book.reference),
            monthly,
            variants,
            scores,
            failed: book.failed.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario {}", self.scenario);
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<8}{:<6}{:>12}{:>12}{:>12}{:>12}{:>10}{:>12}",
            "variant", "month", "heat_MWh", "fuel_MWh", "el_gen_MWh", "el_use_MWh", "chp_%", "CO2_t"
        );
        for m in &self.monthly {
            let _ = writeln!(
                s,
                "{:<8}{:<6}{:>12.2}{:>12.2}{:>12.2}{:>12.2}{:>10.1}{:>12.3}",
                m.variant.label(),
                m.month.label(),
                m.heat_mwh,
                m.fuel_mwh,
                m.elec_gen_mwh,
                m.elec_cons_mwh,
                m.chp_share * 100.0,
                m.emissions_t
            );
        }
        if !self.variants.is_empty() {
            let _ = writeln!(s);
            s.push_str(&self.annual_table());
        }
        for f in &self.failed {
            let _ = writeln!(s);
            let _ = writeln!(s, "failed {} {}: {}", f.variant.label(), f.month.label(), f.error);
        }
        s
    }

    fn annual_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<8}{:>12}{:>12}{:>12}{:>12}{:>10}{:>12}{:>12}{:>12}{:>14}{:>14}",
            "variant",
            "heat_MWh",
            "fuel_MWh",
            "el_gen_MWh",
            "el_use_MWh",
            "chp_%",
            "CO2_t",
            "reduct_%",
            "An_EUR",
            "k_nosale_ct",
            "k_sale_ct"
        );
        for v in &self.variants {
            let a = &v.annual;
            let red = v.reduction.map_or("-".to_string(), |r| format!("{:.1}", r * 100.0));
            let _ = writeln!(
                s,
                "{:<8}{:>12.1}{:>12.1}{:>12.1}{:>12.1}{:>10.1}{:>12.2}{:>12}{:>12.0}{:>14.2}{:>14.2}",
                v.variant.label(),
                a.heat_produced() / 1e3,
                a.fuel_total() / 1e3,
                a.elec_gen / 1e3,
                a.elec_cons / 1e3,
                v.chp_share * 100.0,
                v.emissions_t,
                red,
                v.annuity_without_sale,
                v.cost_without_sale * 100.0,
                v.cost_with_sale * 100.0
            );
        }
        if !self.scores.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(
                s,
                "{:<8}{:>8}{:>12}{:>10}{:>8}{:>8}",
                "scores", "CO2", "k_nosale", "k_sale", "fuel", "total"
            );
            for r in &self.scores {
                let _ = writeln!(
                    s,
                    "{:<8}{:>8}{:>12}{:>10}{:>8}{:>8}",
                    r.variant.label(),
                    r.emissions,
                    r.cost_without_sale,
                    r.cost_with_sale,
                    r.fuel,
                    r.total
                );
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn score_examples() {
        assert_eq!(score_column(&[136.0, 41.0, 30.0, 31.0]), vec![1, 2, 4, 3]);
        assert_eq!(score_column(&[5.0, 5.0, 5.0, 5.0]), vec![4, 4, 4, 4]);
        assert_eq!(score_column(&[1.0, 2.0]), vec![4, 3]);
        assert_eq!(score_column(&[1.0, 2.0, 2.0, 3.0, 4.0, 5.0]), vec![4, 3, 3, 1, 1, 1]);
    }

    proptest! {
        #[test]
        fn scores_survive_monotone_rescaling(v in proptest::collection::vec(0.0f64..1e3, 2..6), k in 0.01f64..100.0, c in 0.0f64..10.0) {
            let scaled: Vec<f64> = v.iter().map(|x| k * x + c).collect();
            let cubed: Vec<f64> = v.iter().map(|x| x.powi(3)).collect();
            prop_assert_eq!(score_column(&v), score_column(&scaled));
            prop_assert_eq!(score_column(&v), score_column(&cubed));
        }
    }
}
