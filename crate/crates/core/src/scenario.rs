//! Scenario files: TOML with `grid`, `buildings`, `center`, `loads`,
//! `master`, `kpi` and `run` sections. Relative paths resolve against the
//! scenario's directory. Unknown keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::building::{BuildingParams, RadiatorParams};
use crate::center::{ChpUnit, CycleBand, HeatPumpUnit, PeakBoiler, CenterParams, TankParams, Variant};
use crate::common::FluidProps;
use crate::cosim::MasterConfig;
use crate::error::{Error, Result};
use crate::kpi::AnnuityParams;
use crate::loads::{BuildingArchetype, SynthParams};
use crate::network::SegmentSpec;

/// Area of the reference single-family house; per-building equipment
/// defaults scale with `area / REFERENCE_AREA`.
pub const REFERENCE_AREA: f64 = 186.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub fluid: FluidProps,
    pub grid: GridSection,
    pub buildings: BuildingsSection,
    #[serde(default)]
    pub center: CenterSection,
    #[serde(default)]
    pub loads: LoadsSection,
    #[serde(default)]
    pub master: MasterConfig,
    #[serde(default)]
    pub kpi: KpiSection,
    #[serde(default)]
    pub run: RunSection,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub pipe_catalog: PathBuf,
    #[serde(default = "default_root")]
    pub root: String,
    #[serde(default = "default_cell")]
    pub max_cell_length: f64,
    #[serde(default = "default_ground")]
    pub ground_temp: f64,
    #[serde(default = "default_htc")]
    pub fluid_wall_htc: f64,
    pub segments: Vec<SegmentSpec>,
}

fn default_root() -> String {
    "center".into()
}
fn default_cell() -> f64 {
    10.0
}
fn default_ground() -> f64 {
    10.0
}
fn default_htc() -> f64 {
    crate::network::DEFAULT_FLUID_WALL_HTC
}

/// One building row. Empty fields fall back to the archetype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingRecord {
    pub id: String,
    #[serde(default)]
    pub archetype: Option<String>,
    #[serde(rename = "A_C_m2", default)]
    pub area: Option<f64>,
    #[serde(rename = "q_H_w_per_m2", default)]
    pub q_h: Option<f64>,
    #[serde(rename = "radiator_Q_nom_W", default)]
    pub radiator_q_nom: Option<f64>,
    #[serde(default)]
    pub buffer_m3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingsSection {
    /// Delimited building file; rows are appended to `records`.
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub records: Vec<BuildingRecord>,
    #[serde(default = "default_archetypes")]
    pub archetypes: BTreeMap<String, BuildingArchetype>,
    /// Accepted specific demand [kWh/(m2 a)].
    #[serde(default = "default_band")]
    pub band: [f64; 2],
    #[serde(default = "default_room")]
    pub initial_room_temp: f64,
}

fn default_archetypes() -> BTreeMap<String, BuildingArchetype> {
    BTreeMap::from([("sfh".to_string(), BuildingArchetype::default())])
}
fn default_band() -> [f64; 2] {
    [40.0, 44.0]
}
fn default_room() -> f64 {
    21.0
}

/// Sizing shared by all variants; the fuels follow the variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CenterSection {
    pub variant: Variant,
    pub tank: TankParams,
    pub chp_q_max: f64,
    pub chp_sigma: f64,
    pub chp_eta_total: f64,
    pub chp_min_part_load: f64,
    pub boiler_q_max: f64,
    pub boiler_eta: f64,
    pub hp_q_max: f64,
    pub hp_carnot_eta: f64,
    pub hp_min_part_load: f64,
    pub hp_ground_temp: f64,
    pub hp_probes: u32,
    pub hp_probe_spacing: f64,
    pub hp_extraction_per_probe: f64,
    pub t_supply: f64,
    pub t_supply_summer: f64,
    pub hp_stage_temp: f64,
    pub cycle: CycleBand,
    pub demand_tau: f64,
    pub soc_target: f64,
    pub soc_tau: f64,
    pub soc_ref_temp: f64,
    pub max_charge_flow: f64,
}

impl Default for CenterSection {
    fn default() -> Self {
        let p = CenterParams::for_variant(Variant::V1);
        let chp = ChpUnit::default();
        let boiler = PeakBoiler::default();
        let hp = HeatPumpUnit::default();
        Self {
            variant: Variant::V1,
            tank: p.tank,
            chp_q_max: chp.q_max,
            chp_sigma: chp.sigma,
            chp_eta_total: chp.eta_total,
            chp_min_part_load: chp.min_part_load,
            boiler_q_max: boiler.q_max,
            boiler_eta: boiler.eta,
            hp_q_max: hp.q_max,
            hp_carnot_eta: hp.carnot_eta,
            hp_min_part_load: hp.min_part_load,
            hp_ground_temp: hp.ground_temp,
            hp_probes: hp.probes,
            hp_probe_spacing: hp.probe_spacing,
            hp_extraction_per_probe: hp.extraction_per_probe,
            t_supply: p.t_supply,
            t_supply_summer: p.t_supply_summer,
            hp_stage_temp: p.hp_stage_temp,
            cycle: p.cycle,
            demand_tau: p.demand_tau,
            soc_target: p.soc_target,
            soc_tau: p.soc_tau,
            soc_ref_temp: p.soc_ref_temp,
            max_charge_flow: p.max_charge_flow,
        }
    }
}

impl CenterSection {
    pub fn params(&self, variant: Variant) -> Result<CenterParams> {
        let mut p = CenterParams::for_variant(variant);
        if let Some(c) = p.chp.as_mut() {
            c.q_max = self.chp_q_max;
            c.sigma = self.chp_sigma;
            c.eta_total = self.chp_eta_total;
            c.min_part_load = self.chp_min_part_load;
        }
        if let Some(b) = p.boiler.as_mut() {
            b.q_max = self.boiler_q_max;
            b.eta = self.boiler_eta;
        }
        if let Some(h) = p.hp.as_mut() {
            h.q_max = self.hp_q_max;
            h.carnot_eta = self.hp_carnot_eta;
            h.min_part_load = self.hp_min_part_load;
            h.ground_temp = self.hp_ground_temp;
            h.probes = self.hp_probes;
            h.probe_spacing = self.hp_probe_spacing;
            h.extraction_per_probe = self.hp_extraction_per_probe;
        }
        p.tank = self.tank;
        p.t_supply = self.t_supply;
        p.t_supply_summer = self.t_supply_summer;
        p.hp_stage_temp = self.hp_stage_temp;
        p.cycle = self.cycle;
        p.demand_tau = self.demand_tau;
        p.soc_target = self.soc_target;
        p.soc_tau = self.soc_tau;
        p.soc_ref_temp = self.soc_ref_temp;
        p.max_charge_flow = self.max_charge_flow;
        p.validate()?;
        Ok(p)
    }
}

/// How buildings obtain their space-heating load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatingMode {
    /// The space-heat series is drawn from the buffer as given.
    Profile,
    /// Thermostat, radiator and envelope model the room.
    Envelope,
}

/// Monthly heat targets at the center [MWh]; the space-heat series of the
/// matching months is rescaled to meet them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub targets_mwh: BTreeMap<Month, f64>,
    /// Largest factor applied to the synthesized space-heat shape; the rest
    /// of the target becomes a flat base load shared by area.
    #[serde(default = "default_gain")]
    pub max_shape_gain: f64,
    /// Supply temperature assumed for the loss estimate [degC].
    #[serde(default = "default_cal_supply")]
    pub supply_temp: f64,
    /// Correct the loss estimate with one simulated month of `reference`.
    #[serde(default)]
    pub refine: bool,
    #[serde(default = "default_reference")]
    pub reference: Variant,
}

fn default_gain() -> f64 {
    3.0
}

fn default_cal_supply() -> f64 {
    80.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadsSection {
    pub mode: HeatingMode,
    /// Annual profile file; synthesized from the weather when absent.
    pub profiles: Option<PathBuf>,
    /// Annual weather file; the built-in reference year when absent.
    pub weather: Option<PathBuf>,
    pub year: i32,
    pub seed: u64,
    pub synth: SynthParams,
    pub calibration: Option<Calibration>,
}

impl Default for LoadsSection {
    fn default() -> Self {
        Self {
            mode: HeatingMode::Profile,
            profiles: None,
            weather: None,
            year: 2021,
            seed: 1,
            synth: SynthParams::default(),
            calibration: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpiSection {
    pub factors: Option<PathBuf>,
    pub costs: Option<PathBuf>,
    #[serde(default)]
    pub annuity: AnnuityParams,
    #[serde(default = "default_reference")]
    pub reference: Variant,
}

fn default_reference() -> Variant {
    Variant::V1
}

impl Default for KpiSection {
    fn default() -> Self {
        Self {
            factors: None,
            costs: None,
            annuity: AnnuityParams::default(),
            reference: Variant::V1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub months: Vec<Month>,
    pub variants: Vec<Variant>,
    pub spin_up_hours: f64,
    /// Simulate only the first days of each month.
    pub days: Option<u32>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            months: vec![Month::Jan, Month::Apr, Month::Aug],
            variants: Variant::ALL.to_vec(),
            spin_up_hours: 48.0,
            days: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Month {
    Jan,
    Feb,
    Mar,
    Apr,
    May,
    Jun,
    Jul,
    Aug,
    Sep,
    Oct,
    Nov,
    Dec,
}

impl Month {
    pub const ALL: [Month; 12] = [
        Month::Jan,
        Month::Feb,
        Month::Mar,
        Month::Apr,
        Month::May,
        Month::Jun,
        Month::Jul,
        Month::Aug,
        Month::Sep,
        Month::Oct,
        Month::Nov,
        Month::Dec,
    ];

    pub fn number(self) -> u32 {
        self as u32 + 1
    }

    pub fn label(self) -> &'static str {
        ["jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"][self as usize]
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Month::ALL
            .into_iter()
            .find(|m| m.label() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Schema(format!("unknown month `{s}` (expected jan..dec)")))
    }
}

impl Scenario {
    /// Reads and validates a scenario; relative paths become absolute and the
    /// building file is merged into `buildings.records`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut sc: Scenario = toml::from_str(&text)
            .map_err(|e| Error::parse(path, crate::kpi::toml_line(&e, &text), e.message()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        sc.resolve_paths(base);
        if let Some(file) = sc.buildings.file.take() {
            let mut rows = read_building_file(&file)?;
            rows.append(&mut sc.buildings.records);
            sc.buildings.records = rows;
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut sc: Scenario = toml::from_str(text).map_err(|e| Error::Schema(e.message().to_string()))?;
        sc.resolve_paths(base);
        if let Some(file) = sc.buildings.file.take() {
            let mut rows = read_building_file(&file)?;
            rows.append(&mut sc.buildings.records);
            sc.buildings.records = rows;
        }
        sc.validate()?;
        Ok(sc)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.grid.pipe_catalog);
        if let Some(p) = self.buildings.file.as_mut() {
            fix(p);
        }
        for p in [&mut self.loads.profiles, &mut self.loads.weather, &mut self.kpi.factors, &mut self.kpi.costs]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.buildings.records.is_empty() {
            return Err(Error::Schema("scenario lists no buildings".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for r in &self.buildings.records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateLabel(r.id.clone()));
            }
            self.archetype(r)?;
        }
        let [lo, hi] = self.buildings.band;
        if !(lo <= hi) {
            return Err(Error::Schema(format!("demand band [{lo}, {hi}] is empty")));
        }
        self.master.validate()?;
        self.center.params(self.center.variant)?;
        if self.run.months.is_empty() {
            return Err(Error::Schema("run.months is empty".into()));
        }
        if !(self.run.spin_up_hours >= 0.0) {
            return Err(Error::Schema("run.spin_up_hours must be non-negative".into()));
        }
        Ok(())
    }

    /// Archetype with the record's overrides applied.
    pub fn archetype(&self, r: &BuildingRecord) -> Result<BuildingArchetype> {
        let name = r.archetype.as_deref().unwrap_or("sfh");
        let mut a = *self
            .buildings
            .archetypes
            .get(name)
            .ok_or_else(|| Error::Schema(format!("building `{}` uses unknown archetype `{name}`", r.id)))?;
        if let Some(v) = r.area {
            a.area = v;
        }
        if let Some(v) = r.q_h {
            a.q_h = v;
        }
        a.validate()?;
        Ok(a)
    }

    /// Building model parameters; equipment scales with floor area.
    pub fn building_params(&self, r: &BuildingRecord) -> Result<BuildingParams> {
        let a = self.archetype(r)?;
        let s = a.area / REFERENCE_AREA;
        let mut p = BuildingParams::new(r.id.clone(), a.area);
        p.radiator = RadiatorParams {
            q_nom: r.radiator_q_nom.unwrap_or(p.radiator.q_nom * s),
            ..p.radiator
        };
        p.hiu.buffer_volume = r.buffer_m3.unwrap_or(p.hiu.buffer_volume * s.max(1.0));
        p.hiu.buffer_ua *= (p.hiu.buffer_volume / 0.5).powf(2.0 / 3.0);
        p.hiu.max_flow *= s.max(1.0);
        p.validate()?;
        Ok(p)
    }

    /// TOML dump with every default resolved.
    pub fn effective_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }
}

/// `id,archetype,A_C_m2,q_H_w_per_m2,radiator_Q_nom_W,buffer_m3`; `#` lines
/// are comments, empty cells take archetype defaults.
pub fn read_building_file(path: &Path) -> Result<Vec<BuildingRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let rec: BuildingRecord = row.map_err(|e| {
            let line = e.position().map_or(1, |p| p.line() as usize);
            Error::parse(path, line, e.to_string())
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
pipe_catalog = "pipes.csv"
segments = [{ from = "center", to = "b_ref", dn = "DN50", length_m = 50.0 }]

[buildings]
records = [{ id = "b_ref" }]
"#;

    #[test]
    fn defaults_resolve() {
        let sc = Scenario::from_toml(MINIMAL, Path::new("/data")).unwrap();
        assert_eq!(sc.grid.pipe_catalog, Path::new("/data/pipes.csv"));
        assert_eq!(sc.master, MasterConfig::default());
        assert_eq!(sc.run.months, vec![Month::Jan, Month::Apr, Month::Aug]);
        let a = sc.archetype(&sc.buildings.records[0]).unwrap();
        assert_eq!(a, BuildingArchetype::default());
        let back = Scenario::from_toml(&sc.effective_toml(), Path::new("/elsewhere")).unwrap();
        assert_eq!(back, sc);
    }

    #[test]
    fn unknown_keys_and_empty_lists_are_rejected() {
        let bad = MINIMAL.replace("[buildings]", "[buildings]\ncolour = 3");
        assert!(matches!(Scenario::from_toml(&bad, Path::new(".")), Err(Error::Schema(_))));
        let empty = MINIMAL.replace(r#"records = [{ id = "b_ref" }]"#, "records = []");
        assert!(matches!(Scenario::from_toml(&empty, Path::new(".")), Err(Error::Schema(_))));
    }

    #[test]
    fn center_overrides_keep_variant_fuels() {
        let sc = CenterSection {
            chp_q_max: 90e3,
            ..CenterSection::default()
        };
        let v2 = sc.params(Variant::V2).unwrap();
        assert_eq!(v2.chp.unwrap().q_max, 90e3);
        assert_eq!(v2.chp.unwrap().fuel, crate::center::Fuel::Bm);
        let mut v1 = CenterParams::for_variant(Variant::V1);
        v1.chp.as_mut().unwrap().q_max = 90e3;
        assert_eq!(sc.params(Variant::V1).unwrap(), v1);
    }

    #[test]
    fn building_file_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        std::fs::write(
            &p,
            "# test\nid,archetype,A_C_m2,q_H_w_per_m2,radiator_Q_nom_W,buffer_m3\nb_1,sfh,,,,\nb_2,sfh,373.6,40,,0.8\n",
        )
        .unwrap();
        let rows = read_building_file(&p).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].area, None);
        assert_eq!(rows[1].area, Some(373.6));
        assert_eq!(rows[1].buffer_m3, Some(0.8));
        std::fs::write(&p, "id,archetype,A_C_m2,q_H_w_per_m2,radiator_Q_nom_W,buffer_m3\nb_1,sfh,abc,,,\n").unwrap();
        assert!(matches!(read_building_file(&p), Err(Error::Parse { line: 2, .. })));
    }
}
