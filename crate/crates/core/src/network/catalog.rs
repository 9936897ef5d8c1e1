use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Per-meter properties of one nominal pipe size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipeType {
    pub inner_diameter: f64,
    /// Heat-loss coefficient to the ground [W/(m K)].
    pub u_per_m: f64,
    /// Lumped wall + insulation capacity [J/(m K)].
    pub wall_cap_per_m: f64,
}

/// Pipe catalog keyed by DN label.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PipeCatalog {
    entries: BTreeMap<String, PipeType>,
}

impl PipeCatalog {
    pub fn get(&self, label: &str) -> Option<&PipeType> {
        self.entries.get(label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &PipeType)> {
        self.entries.iter()
    }

    pub fn insert(&mut self, label: &str, pipe: PipeType) -> Result<()> {
        if self.entries.contains_key(label) {
            return Err(Error::DuplicateLabel(label.to_string()));
        }
        self.entries.insert(label.to_string(), pipe);
        Ok(())
    }

    /// Parses `DN,inner_diameter_m,u_w_per_mk,wall_cap_j_per_mk` rows. An
    /// optional header row and `#` comments are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut catalog = PipeCatalog::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::parse(path, i + 1, format!("expected 4 fields, found {}", fields.len())));
            }
            if catalog.is_empty() && fields[1].parse::<f64>().is_err() && fields[0].eq_ignore_ascii_case("dn") {
                continue;
            }
            let mut nums = [0.0; 3];
            for (slot, raw) in nums.iter_mut().zip(&fields[1..]) {
                *slot = raw
                    .parse()
                    .map_err(|_| Error::parse(path, i + 1, format!("bad number `{raw}`")))?;
                if !(*slot > 0.0) {
                    return Err(Error::parse(path, i + 1, format!("value `{raw}` must be positive")));
                }
            }
            let pipe = PipeType {
                inner_diameter: nums[0],
                u_per_m: nums[1],
                wall_cap_per_m: nums[2],
            };
            catalog.insert(fields[0], pipe)?;
        }
        if catalog.is_empty() {
            return Err(Error::parse(path, 1, "pipe catalog has no entries"));
        }
        Ok(catalog)
    }
}

pub fn load_pipe_catalog(path: &Path) -> Result<PipeCatalog> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PipeCatalog::parse(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PipeCatalog> {
        PipeCatalog::parse(text, Path::new("catalog.csv"))
    }

    #[test]
    fn single_row() {
        let c = parse("DN50,0.0545,0.17,950\n").unwrap();
        let p = c.get("DN50").unwrap();
        assert_eq!(p.u_per_m, 0.17);
        assert_eq!(p.inner_diameter, 0.0545);
        assert_eq!(p.wall_cap_per_m, 950.0);
    }

    #[test]
    fn header_and_comments_are_skipped() {
        let c = parse("# representative\nDN,inner_diameter_m,u_w_per_mk,wall_cap_j_per_mk\nDN25,0.0285,0.1,600\n").unwrap();
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        assert!(matches!(parse(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn duplicate_label() {
        let err = parse("DN50,0.0545,0.17,950\nDN50,0.0545,0.17,950\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel(ref l) if l == "DN50"));
    }

    #[test]
    fn parse_error_reports_line() {
        match parse("DN50,0.0545,0.17,950\nDN65,x,0.2,1000\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("DN50,0.0545,-0.17,950\n").is_err());
    }
}
