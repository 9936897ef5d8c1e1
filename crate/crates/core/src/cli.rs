//! Commands behind the `heatgrid` executable. Each writes a self-contained
//! artifact directory: archives, `ledger.json` (everything the KPI report is
//! computed from), `kpi.json`, `kpi.txt`, `effective.toml` and `run.log`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::center::Variant;
use crate::cosim::Archive;
use crate::error::{Error, Result};
use crate::kpi::{columns, derive_reference_factors, CostBook, EmissionFactors, FactorDerivation, FailedJob, KpiReport, LedgerBook, MonthEntry};
use crate::loads::specific_demand;
use crate::scenario::{Month, Scenario};
use crate::sim::{Model, MonthRun};

pub const LEDGER_FILE: &str = "ledger.json";
pub const KPI_JSON: &str = "kpi.json";
pub const KPI_TABLE: &str = "kpi.txt";

/// Months every comparison simulates.
pub const COMPARE_MONTHS: [Month; 3] = [Month::Jan, Month::Apr, Month::Aug];

pub fn archive_name(variant: Variant, month: Month) -> String {
    format!("archive_{}_{}.csv", variant.label(), month.label())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandLine {
    pub id: String,
    pub annual_kwh: f64,
    pub area: f64,
    pub specific: f64,
    pub in_band: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandReport {
    pub lines: Vec<DemandLine>,
    pub band: [f64; 2],
}

impl DemandReport {
    pub fn all_in_band(&self) -> bool {
        self.lines.iter().all(|l| l.in_band)
    }

    pub fn total_kwh(&self) -> f64 {
        self.lines.iter().map(|l| l.annual_kwh).sum()
    }

    pub fn total_area(&self) -> f64 {
        self.lines.iter().map(|l| l.area).sum()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            let _ = write!(s, "{} {:.1} kWh/a {:.1} kWh/m2a", l.id, l.annual_kwh, l.specific);
            if !l.in_band {
                let _ = write!(s, "  outside {}-{}", self.band[0], self.band[1]);
            }
            s.push('\n');
        }
        let _ = writeln!(
            s,
            "total {} buildings {:.1} kWh/a {:.1} m2 {:.1} kWh/m2a",
            self.lines.len(),
            self.total_kwh(),
            self.total_area(),
            specific_demand(self.total_kwh(), self.total_area())
        );
        s
    }
}

/// Annual demand and specific demand of every building record.
pub fn validate_demand(sc: &Scenario) -> Result<DemandReport> {
    if sc.buildings.records.is_empty() {
        return Err(Error::Schema("scenario lists no buildings".into()));
    }
    let band = sc.buildings.band;
    let lines = sc
        .buildings
        .records
        .iter()
        .map(|r| {
            let a = sc.archetype(r)?;
            let annual = a.annual_demand();
            let specific = specific_demand(annual, a.area);
            Ok(DemandLine {
                id: r.id.clone(),
                annual_kwh: annual,
                area: a.area,
                specific,
                in_band: specific >= band[0] && specific <= band[1],
            })
        })
        .collect::<Result<_>>()?;
    Ok(DemandReport { lines, band })
}

/// Factors and prices named by the scenario, or the built-in defaults.
pub fn kpi_inputs(sc: &Scenario) -> Result<(EmissionFactors, CostBook)> {
    let factors = match &sc.kpi.factors {
        Some(p) => EmissionFactors::read(p)?,
        None => derive_reference_factors(&FactorDerivation::default()),
    };
    let costs = match &sc.kpi.costs {
        Some(p) => CostBook::read(p)?,
        None => CostBook::default(),
    };
    Ok((factors, costs))
}

/// Result of a command that simulated something. `error` holds the first
/// failed job; the artifacts of the completed ones are written regardless.
#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub report: KpiReport,
    pub error: Option<Error>,
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn simulate(sc: &Scenario, jobs: &[(Variant, Month)], dir: &Path) -> Result<Outcome> {
    create_dir(dir)?;
    write(&dir.join("effective.toml"), &sc.effective_toml())?;
    let mut log = String::new();
    let _ = writeln!(log, "heatgrid {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(log, "scenario {}", sc.name);
    let (factors, costs) = kpi_inputs(sc)?;
    let model = match Model::prepare(sc) {
        Ok(m) => m,
        Err(e) => {
            let _ = writeln!(log, "preparation failed: {e}");
            write(&dir.join("run.log"), &log)?;
            return Err(e);
        }
    };
    for c in &model.calibration {
        let _ = writeln!(
            log,
            "calibration {}: target {:.3} MWh, losses {:.3} MWh, shape gain {:.4}, base load {:.1} W",
            c.month, c.target_mwh, c.loss_mwh, c.shape_gain, c.base_load
        );
    }

    let results: Vec<Result<MonthRun>> = jobs.par_iter().map(|&(v, m)| model.run_month(v, m)).collect();

    let mut book = LedgerBook {
        scenario: sc.name.clone(),
        reference: sc.kpi.reference,
        factors,
        costs,
        annuity: sc.kpi.annuity,
        runs: Vec::new(),
        failed: Vec::new(),
    };
    let mut first_error = None;
    for (&(variant, month), result) in jobs.iter().zip(results) {
        match result {
            Ok(run) => {
                run.archive.write(&dir.join(archive_name(variant, month)))?;
                let s = run.stats;
                let _ = writeln!(
                    log,
                    "{variant} {month}: {} steps, {} iterations, at most {} per step, {} not converged",
                    s.steps, s.iterations, s.max_iterations_used, s.nonconverged_steps
                );
                book.runs.push(MonthEntry {
                    variant,
                    month,
                    ledger: run.ledger,
                    stats: run.stats,
                });
            }
            Err(e) => {
                let _ = writeln!(log, "{variant} {month}: failed: {e}");
                book.failed.push(FailedJob {
                    variant,
                    month,
                    error: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
        }
    }
    let report = KpiReport::build(&book)?;
    write(&dir.join(LEDGER_FILE), &(serde_json::to_string_pretty(&book).expect("ledger serializes") + "\n"))?;
    write(&dir.join(KPI_JSON), &report.to_json())?;
    write(&dir.join(KPI_TABLE), &report.to_table())?;
    write(&dir.join("run.log"), &log)?;
    Ok(Outcome {
        dir: dir.to_path_buf(),
        report,
        error: first_error,
    })
}

/// One variant over one month.
pub fn run(sc: &Scenario, variant: Variant, month: Month, dir: &Path) -> Result<Outcome> {
    info!("running {variant} {month} of {}", sc.name);
    simulate(sc, &[(variant, month)], dir)
}

/// Representative months of every listed variant, annualized and scored.
pub fn compare(sc: &Scenario, variants: &[Variant], dir: &Path) -> Result<Outcome> {
    let mut vs = variants.to_vec();
    vs.sort();
    vs.dedup();
    if vs.len() < 2 {
        return Err(Error::Schema("compare needs at least two distinct variants".into()));
    }
    let jobs: Vec<(Variant, Month)> = vs.iter().flat_map(|&v| COMPARE_MONTHS.map(|m| (v, m))).collect();
    info!("comparing {} jobs of {}", jobs.len(), sc.name);
    simulate(sc, &jobs, dir)
}

/// One line of `monthly.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MonthlyRow {
    variant: Variant,
    month: Month,
    heat_chp_mwh: f64,
    heat_boiler_mwh: f64,
    heat_hp_mwh: f64,
    heat_delivered_mwh: f64,
    network_loss_mwh: f64,
    fuel_mwh: f64,
    elec_gen_mwh: f64,
    elec_cons_mwh: f64,
    emissions_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Structured,
}

/// Re-renders an artifact directory without simulating. Writes the KPI file
/// of the requested format, `monthly.csv` and hourly unit powers into
/// `<dir>/report/` and returns the rendered KPI text.
pub fn report(dir: &Path, format: Format) -> Result<String> {
    let ledger_path = dir.join(LEDGER_FILE);
    let text = std::fs::read_to_string(&ledger_path).map_err(|e| Error::io(&ledger_path, e))?;
    let book: LedgerBook = serde_json::from_str(&text)
        .map_err(|e| Error::parse(&ledger_path, e.line(), e.to_string()))?;
    let report = KpiReport::build(&book)?;

    let out = dir.join("report");
    create_dir(&out)?;
    let mut monthly = csv::Writer::from_writer(Vec::new());
    for (entry, m) in book.runs.iter().zip(&report.monthly) {
        let l = &entry.ledger;
        monthly
            .serialize(MonthlyRow {
                variant: entry.variant,
                month: entry.month,
                heat_chp_mwh: l.heat_chp / 1e3,
                heat_boiler_mwh: l.heat_boiler / 1e3,
                heat_hp_mwh: l.heat_hp / 1e3,
                heat_delivered_mwh: l.heat_delivered / 1e3,
                network_loss_mwh: l.network_loss / 1e3,
                fuel_mwh: m.fuel_mwh,
                elec_gen_mwh: m.elec_gen_mwh,
                elec_cons_mwh: m.elec_cons_mwh,
                emissions_t: m.emissions_t,
            })
            .map_err(|e| Error::Schema(e.to_string()))?;

        let archive = Archive::read(&dir.join(archive_name(entry.variant, entry.month)))?;
        let name = format!("power_{}_{}.csv", entry.variant.label(), entry.month.label());
        write(&out.join(name), &hourly_power(&archive)?)?;
    }
    let bytes = monthly.into_inner().map_err(|e| Error::Schema(e.to_string()))?;
    write(&out.join("monthly.csv"), &String::from_utf8(bytes).expect("csv is utf-8"))?;

    let rendered = match format {
        Format::Structured => report.to_json(),
        Format::Table => report.to_table(),
    };
    let file = match format {
        Format::Structured => KPI_JSON,
        Format::Table => KPI_TABLE,
    };
    write(&out.join(file), &rendered)?;
    Ok(rendered)
}

/// Hourly mean unit outputs [kW] for plotting.
fn hourly_power(archive: &Archive) -> Result<String> {
    let names = [
        ("chp_kw", columns::Q_CHP),
        ("boiler_kw", columns::Q_BOILER),
        ("hp_kw", columns::Q_HP),
        ("delivered_kw", columns::DELIVERED),
    ];
    let cols: Vec<&[f64]> = names
        .iter()
        .map(|(_, c)| archive.column(c).ok_or_else(|| Error::Schema(format!("archive lacks column `{c}`"))))
        .collect::<Result<_>>()?;
    let per_hour = ((3600.0 / archive.dt).round() as usize).max(1);
    let mut s = String::from("timestamp");
    for (n, _) in &names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for start in (0..archive.len()).step_by(per_hour) {
        let end = (start + per_hour).min(archive.len());
        s.push_str(&crate::common::format_timestamp(archive.time_at(start)));
        for c in &cols {
            let mean = c[start..end].iter().sum::<f64>() / (end - start) as f64;
            let _ = write!(s, ",{:.3}", mean / 1e3);
        }
        s.push('\n');
    }
    Ok(s)
}

/// Writes the fitted emission factors file.
pub fn derive_factors(path: &Path) -> Result<EmissionFactors> {
    let d = FactorDerivation::default();
    let f = derive_reference_factors(&d);
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write(path, &f.to_cfg(&d))?;
    Ok(f)
}
