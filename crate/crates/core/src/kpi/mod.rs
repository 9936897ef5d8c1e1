//! Energy ledgers, CO2-equivalent accounting, annuity economics and variant
//! scoring.

mod econ;
mod factors;
mod ledger;
mod report;

pub(crate) use econ::toml_line;
pub use econ::{annuity, annuity_factor, heat_production_cost, AnnuityParams, CostBook};
pub use factors::{derive_reference_factors, EmissionFactors, FactorDerivation};
pub use ledger::{columns, emissions, seasonal_extrapolate, EnergyLedger};
pub use report::{score_column, score_variants, FailedJob, KpiReport, LedgerBook, MonthEntry, MonthKpi, ScoreRow, VariantKpi};
