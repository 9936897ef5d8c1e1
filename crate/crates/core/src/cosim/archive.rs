//! Recorded port trajectories as self-describing delimited text.
//!
//! Layout: `#`-prefixed header lines (`grid`, then one `column` line per
//! value column with unit and source block), a `timestamp,...` name row, and
//! one row per macro step. Values use the shortest round-tripping decimal
//! form, so reading an archive back reproduces it bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::master::CouplingGraph;
use super::Unit;
use crate::common::{format_timestamp, parse_timestamp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMeta {
    pub name: String,
    pub unit: Unit,
    /// Source block id, or `*` for aggregates.
    pub block: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub t0: f64,
    pub dt: f64,
    columns: Vec<ColumnMeta>,
    data: Vec<Vec<f64>>,
}

impl Archive {
    pub fn new(t0: f64, dt: f64, columns: Vec<ColumnMeta>) -> Self {
        let data = vec![Vec::new(); columns.len()];
        Self { t0, dt, columns, data }
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time_at(&self, row: usize) -> f64 {
        self.t0 + row as f64 * self.dt
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidParameter(format!(
                "archive row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        for (col, &v) in self.data.iter_mut().zip(row) {
            col.push(v);
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .map(|i| self.data[i].as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# heatgrid archive");
        let _ = writeln!(s, "# grid,{},{},{}", format_timestamp(self.t0), self.dt, self.len());
        for c in &self.columns {
            let _ = writeln!(s, "# column,{},{},{}", c.name, c.unit, c.block);
        }
        s.push_str("timestamp");
        for c in &self.columns {
            s.push(',');
            s.push_str(&c.name);
        }
        s.push('\n');
        for r in 0..self.len() {
            s.push_str(&format_timestamp(self.time_at(r)));
            for col in &self.data {
                let _ = write!(s, ",{}", col[r]);
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_at(&text, path)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_at(text, Path::new("<archive>"))
    }

    fn parse_at(text: &str, path: &Path) -> Result<Self> {
        let mut grid = None;
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let bad = |msg: String| Error::parse(path, line_no, msg);
            if let Some(meta) = line.strip_prefix('#') {
                let fields: Vec<&str> = meta.trim().split(',').collect();
                match fields[0] {
                    "grid" if fields.len() == 4 => {
                        let t0 = parse_timestamp(fields[1]).ok_or_else(|| bad(format!("bad timestamp `{}`", fields[1])))?;
                        let dt: f64 = fields[2].parse().map_err(|_| bad("bad dt".into()))?;
                        let n: usize = fields[3].parse().map_err(|_| bad("bad row count".into()))?;
                        grid = Some((t0, dt, n));
                    }
                    "column" if fields.len() == 4 => columns.push(ColumnMeta {
                        name: fields[1].to_string(),
                        unit: fields[2].parse()?,
                        block: fields[3].to_string(),
                    }),
                    _ => {}
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !header_seen {
                let names: Vec<&str> = line.split(',').collect();
                let expected: Vec<&str> = std::iter::once("timestamp").chain(columns.iter().map(|c| c.name.as_str())).collect();
                if names != expected {
                    return Err(bad("column row does not match the header".into()));
                }
                header_seen = true;
                continue;
            }
            let mut fields = line.split(',');
            fields.next();
            let row: Vec<f64> = fields
                .map(|f| f.parse::<f64>().map_err(|_| bad(format!("bad number `{f}`"))))
                .collect::<Result<_>>()?;
            if row.len() != columns.len() {
                return Err(bad(format!("expected {} values, found {}", columns.len(), row.len())));
            }
            rows.push(row);
        }
        let (t0, dt, n) = grid.ok_or_else(|| Error::parse(path, 1, "missing grid header"))?;
        if n != rows.len() {
            return Err(Error::parse(path, 1, format!("grid declares {n} rows, found {}", rows.len())));
        }
        let mut archive = Archive::new(t0, dt, columns);
        for r in rows {
            archive.push_row(&r)?;
        }
        Ok(archive)
    }
}

/// Which ports to record. Entries are `block.port`, a glob such as
/// `b_*.t_room` (one column per match), or `sum(glob)` / `mean(glob)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Recorder {
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Aggregate {
    None,
    Sum,
    Mean,
}

pub(crate) struct ResolvedColumn {
    pub meta: ColumnMeta,
    sources: Vec<(usize, usize)>,
    agg: Aggregate,
}

impl ResolvedColumn {
    pub fn evaluate(&self, graph: &CouplingGraph) -> f64 {
        let blocks = graph.blocks();
        let sum: f64 = self.sources.iter().map(|&(b, p)| blocks[b].output(p)).sum();
        match self.agg {
            Aggregate::Mean => sum / self.sources.len() as f64,
            _ => sum,
        }
    }
}

fn glob_match(pattern: &str, text: &str) -> bool {
    match pattern.split_once('*') {
        None => pattern == text,
        Some((head, rest)) => {
            let Some(tail) = text.strip_prefix(head) else { return false };
            (0..=tail.len()).filter(|&i| tail.is_char_boundary(i)).any(|i| glob_match(rest, &tail[i..]))
        }
    }
}

impl Recorder {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
        }
    }

    pub(crate) fn resolve(&self, graph: &CouplingGraph) -> Result<Vec<ResolvedColumn>> {
        let mut out = Vec::new();
        for spec in &self.columns {
            let (agg, pattern) = if let Some(p) = spec.strip_prefix("sum(").and_then(|p| p.strip_suffix(')')) {
                (Aggregate::Sum, p)
            } else if let Some(p) = spec.strip_prefix("mean(").and_then(|p| p.strip_suffix(')')) {
                (Aggregate::Mean, p)
            } else {
                (Aggregate::None, spec.as_str())
            };
            let mut matches = Vec::new();
            for (bi, b) in graph.blocks().iter().enumerate() {
                for (pi, p) in b.outputs().iter().enumerate() {
                    if glob_match(pattern, &format!("{}.{}", b.id(), p.name)) {
                        matches.push((bi, pi, p.unit));
                    }
                }
            }
            if matches.is_empty() {
                return Err(Error::UnknownPort(spec.clone()));
            }
            let blocks = graph.blocks();
            if agg == Aggregate::None {
                for (b, p, unit) in matches {
                    out.push(ResolvedColumn {
                        meta: ColumnMeta {
                            name: format!("{}.{}", blocks[b].id(), blocks[b].outputs()[p].name),
                            unit,
                            block: blocks[b].id().to_string(),
                        },
                        sources: vec![(b, p)],
                        agg,
                    });
                }
                continue;
            }
            let unit = matches[0].2;
            if let Some(&(b, p, u)) = matches.iter().find(|m| m.2 != unit) {
                return Err(Error::UnitMismatch {
                    from: spec.clone(),
                    from_unit: unit.to_string(),
                    to: format!("{}.{}", blocks[b].id(), blocks[b].outputs()[p].name),
                    to_unit: u.to_string(),
                });
            }
            out.push(ResolvedColumn {
                meta: ColumnMeta {
                    name: spec.clone(),
                    unit,
                    block: "*".into(),
                },
                sources: matches.iter().map(|&(b, p, _)| (b, p)).collect(),
                agg,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glob() {
        assert!(glob_match("b_*.q", "b_12.q"));
        assert!(glob_match("*.q", "center.q"));
        assert!(!glob_match("b_*.q", "center.q"));
        assert!(glob_match("a.b", "a.b"));
        assert!(!glob_match("a.b", "a.bc"));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut a = Archive::new(
            1_609_459_200.0,
            60.0,
            vec![ColumnMeta {
                name: "c.t".into(),
                unit: Unit::Celsius,
                block: "c".into(),
            }],
        );
        for v in [0.1 + 0.2, 1e-300, -3.5, 79.99999999999999] {
            a.push_row(&[v]).unwrap();
        }
        let text = a.to_csv();
        let b = Archive::parse(&text).unwrap();
        assert_eq!(a, b);
        assert_eq!(b.to_csv(), text);
    }

    #[test]
    fn rejects_truncated_archive() {
        let mut a = Archive::new(0.0, 60.0, vec![ColumnMeta { name: "x.y".into(), unit: Unit::Watt, block: "x".into() }]);
        a.push_row(&[1.0]).unwrap();
        a.push_row(&[2.0]).unwrap();
        let text = a.to_csv();
        let cut: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
        assert!(Archive::parse(&cut).is_err());
    }
}
