use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::catalog::PipeCatalog;
use crate::common::{interp_hold, TimeSeries};
use crate::error::{Error, Result};

/// One supply-tree edge as written in a scenario: `(from, to, DN, length_m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub from: String,
    pub to: String,
    pub dn: String,
    pub length_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipeSegment {
    pub id: String,
    pub length: f64,
    pub inner_diameter: f64,
    pub u_per_m: f64,
    pub wall_cap_per_m: f64,
    pub n_cells: usize,
}

impl PipeSegment {
    pub fn validate(&self) -> Result<()> {
        let ok = self.length > 0.0
            && self.inner_diameter > 0.0
            && self.u_per_m >= 0.0
            && self.wall_cap_per_m > 0.0
            && self.n_cells >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("pipe segment `{}` has invalid geometry", self.id)))
        }
    }

    pub fn cell_length(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.inner_diameter * self.inner_diameter / 4.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundTemp {
    Constant(f64),
    Series(TimeSeries),
}

impl Default for GroundTemp {
    fn default() -> Self {
        GroundTemp::Constant(10.0)
    }
}

impl GroundTemp {
    pub fn at(&self, t: f64) -> Result<f64> {
        match self {
            GroundTemp::Constant(v) => Ok(*v),
            GroundTemp::Series(s) => interp_hold(s, t),
        }
    }
}

/// Supply tree rooted at the heating center. The return tree is its mirror:
/// same segments, flow reversed.
///
/// Segments are stored in topological order, so every segment's upstream
/// (supply-side) parent segment precedes it.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<String>,
    segments: Vec<PipeSegment>,
    /// (from node, to node) per segment
    ends: Vec<(usize, usize)>,
    /// Segment feeding each node; `None` for the root.
    feeder: Vec<Option<usize>>,
    /// Segments leaving each node.
    children: Vec<Vec<usize>>,
    leaves: Vec<usize>,
    ground: GroundTemp,
}

impl Topology {
    pub const ROOT: usize = 0;

    /// Builds the tree from edge specs. Cells are sized so no cell exceeds
    /// `max_cell_length`.
    pub fn build(
        root: &str,
        specs: &[SegmentSpec],
        catalog: &PipeCatalog,
        max_cell_length: f64,
        ground: GroundTemp,
    ) -> Result<Self> {
        if !(max_cell_length > 0.0) {
            return Err(Error::InvalidParameter("max cell length must be positive".into()));
        }
        let segments = specs
            .iter()
            .map(|s| {
                let pipe = catalog
                    .get(&s.dn)
                    .ok_or_else(|| Error::Schema(format!("segment {}->{} uses unknown pipe `{}`", s.from, s.to, s.dn)))?;
                Ok(PipeSegment {
                    id: format!("{}->{}", s.from, s.to),
                    length: s.length_m,
                    inner_diameter: pipe.inner_diameter,
                    u_per_m: pipe.u_per_m,
                    wall_cap_per_m: pipe.wall_cap_per_m,
                    n_cells: ((s.length_m / max_cell_length).ceil() as usize).max(1),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ends: Vec<(String, String)> = specs.iter().map(|s| (s.from.clone(), s.to.clone())).collect();
        Self::from_segments(root, segments, &ends, ground)
    }

    /// Builds the tree from explicit segments; `ends[i]` names the supply-side
    /// from/to nodes of `segments[i]`.
    pub fn from_segments(
        root: &str,
        segments: Vec<PipeSegment>,
        ends: &[(String, String)],
        ground: GroundTemp,
    ) -> Result<Self> {
        if segments.is_empty() || segments.len() != ends.len() {
            return Err(Error::Schema("topology needs at least one segment".into()));
        }
        for s in &segments {
            s.validate()?;
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut nodes = vec![root.to_string()];
        index.insert(root, 0);
        for (a, b) in ends {
            for name in [a, b] {
                if !index.contains_key(name.as_str()) {
                    index.insert(name.as_str(), nodes.len());
                    nodes.push(name.clone());
                }
            }
        }
        let raw_ends: Vec<(usize, usize)> = ends.iter().map(|(a, b)| (index[a.as_str()], index[b.as_str()])).collect();

        let mut feeder = vec![None; nodes.len()];
        for (si, &(_, to)) in raw_ends.iter().enumerate() {
            if to == Self::ROOT {
                return Err(Error::Schema("a segment flows into the heating center".into()));
            }
            if feeder[to].replace(si).is_some() {
                return Err(Error::Schema(format!("node `{}` is fed by more than one segment", nodes[to])));
            }
        }

        // Breadth-first from the root gives the topological order and
        // detects unreachable nodes (which also covers cycles).
        let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for (si, &(from, _)) in raw_ends.iter().enumerate() {
            out_edges[from].push(si);
        }
        let mut order = Vec::with_capacity(segments.len());
        let mut queue = std::collections::VecDeque::from([Self::ROOT]);
        let mut seen = vec![false; nodes.len()];
        seen[Self::ROOT] = true;
        while let Some(n) = queue.pop_front() {
            for &si in &out_edges[n] {
                let to = raw_ends[si].1;
                if !seen[to] {
                    seen[to] = true;
                    order.push(si);
                    queue.push_back(to);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Schema(format!("node `{}` is not reachable from the heating center", nodes[i])));
        }

        let mut remap = vec![0; segments.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let mut slots: Vec<Option<PipeSegment>> = segments.into_iter().map(Some).collect();
        let segments: Vec<PipeSegment> = order.iter().map(|&old| slots[old].take().unwrap()).collect();
        let ends: Vec<(usize, usize)> = order.iter().map(|&old| raw_ends[old]).collect();
        let feeder: Vec<Option<usize>> = feeder.into_iter().map(|f| f.map(|old| remap[old])).collect();
        let mut children = vec![Vec::new(); nodes.len()];
        for (si, &(from, _)) in ends.iter().enumerate() {
            children[from].push(si);
        }
        let leaves = (1..nodes.len()).filter(|&n| children[n].is_empty()).collect();

        Ok(Self {
            nodes,
            segments,
            ends,
            feeder,
            children,
            leaves,
            ground,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn segments(&self) -> &[PipeSegment] {
        &self.segments
    }

    pub fn ends(&self) -> &[(usize, usize)] {
        &self.ends
    }

    pub fn feeder(&self, node: usize) -> Option<usize> {
        self.feeder[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Building leaves in node order.
    pub fn leaves(&self) -> &[usize] {
        &self.leaves
    }

    pub fn leaf_names(&self) -> Vec<&str> {
        self.leaves.iter().map(|&n| self.nodes[n].as_str()).collect()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn ground(&self) -> &GroundTemp {
        &self.ground
    }

    /// Sum of U*L over the tree for one direction [W/K].
    pub fn total_ua(&self) -> f64 {
        self.segments.iter().map(|s| s.u_per_m * s.length).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::catalog::PipeType;

    fn catalog() -> PipeCatalog {
        let mut c = PipeCatalog::default();
        c.insert(
            "DN50",
            PipeType {
                inner_diameter: 0.0545,
                u_per_m: 0.17,
                wall_cap_per_m: 950.0,
            },
        )
        .unwrap();
        c
    }

    fn spec(from: &str, to: &str, len: f64) -> SegmentSpec {
        SegmentSpec {
            from: from.into(),
            to: to.into(),
            dn: "DN50".into(),
            length_m: len,
        }
    }

    #[test]
    fn builds_tree_in_topological_order() {
        // deliberately listed child-first
        let specs = [spec("j1", "b2", 15.0), spec("center", "j1", 95.0), spec("j1", "b1", 5.0)];
        let t = Topology::build("center", &specs, &catalog(), 10.0, GroundTemp::default()).unwrap();
        assert_eq!(t.segments()[0].id, "center->j1");
        assert_eq!(t.segments()[0].n_cells, 10);
        assert_eq!(t.leaf_names(), vec!["b2", "b1"]);
        for (si, &(from, _)) in t.ends().iter().enumerate() {
            if let Some(parent) = t.feeder(from) {
                assert!(parent < si);
            }
        }
        assert!(t.segments().iter().all(|s| s.cell_length() <= 10.0));
    }

    #[test]
    fn rejects_non_trees() {
        let c = catalog();
        let g = GroundTemp::default();
        let two_feeders = [spec("center", "a", 10.0), spec("center", "b", 10.0), spec("a", "c", 1.0), spec("b", "c", 1.0)];
        assert!(Topology::build("center", &two_feeders, &c, 10.0, g.clone()).is_err());
        let island = [spec("center", "a", 10.0), spec("x", "y", 10.0)];
        assert!(Topology::build("center", &island, &c, 10.0, g.clone()).is_err());
        let cycle = [spec("center", "a", 10.0), spec("b", "c", 1.0), spec("c", "b", 1.0)];
        assert!(Topology::build("center", &cycle, &c, 10.0, g.clone()).is_err());
        let unknown = [SegmentSpec {
            dn: "DN999".into(),
            ..spec("center", "a", 10.0)
        }];
        assert!(Topology::build("center", &unknown, &c, 10.0, g).is_err());
    }
}
