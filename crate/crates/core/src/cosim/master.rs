use std::collections::HashMap;

use log::warn;
use serde::{Deserialize, Serialize};

use super::archive::{Archive, Recorder};
use super::{Block, Unit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    GaussSeidel,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonConvergencePolicy {
    Warn,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MasterConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub max_iterations: usize,
    pub relaxation: f64,
    pub tol_temperature: f64,
    pub tol_mass_flow: f64,
    pub on_nonconvergence: NonConvergencePolicy,
}

impl Default for MasterConfig {
    fn default() -> Self {
        Self {
            dt: 60.0,
            scheme: Scheme::GaussSeidel,
            max_iterations: 5,
            relaxation: 1.0,
            tol_temperature: 0.01,
            tol_mass_flow: 1e-4,
            on_nonconvergence: NonConvergencePolicy::Warn,
        }
    }
}

impl MasterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || self.max_iterations == 0 || !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "master needs dt > 0, max_iterations >= 1 and relaxation in (0, 1] (got {self:?})"
            )));
        }
        Ok(())
    }

    fn tolerance(&self, unit: Unit) -> Option<f64> {
        match unit {
            Unit::Celsius => Some(self.tol_temperature),
            Unit::KgPerS => Some(self.tol_mass_flow),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    from: (usize, usize),
    to: (usize, usize),
    unit: Unit,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    pub converged: bool,
    /// Largest residual relative to its tolerance, with the port.
    pub worst: f64,
    pub worst_port: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: usize,
    pub iterations: usize,
    pub max_iterations_used: usize,
    pub nonconverged_steps: usize,
}

/// Blocks and their port connections, stepped in insertion order.
pub struct CouplingGraph {
    blocks: Vec<Box<dyn Block>>,
    edges: Vec<Edge>,
    bound: HashMap<(usize, usize), usize>,
    /// Input values used in the latest sweep, per edge.
    used: Vec<f64>,
    /// Source outputs from each block's most recent step, per edge.
    latest: Vec<f64>,
    primed: bool,
}

impl Default for CouplingGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl CouplingGraph {
    pub fn new() -> Self {
        Self {
            blocks: Vec::new(),
            edges: Vec::new(),
            bound: HashMap::new(),
            used: Vec::new(),
            latest: Vec::new(),
            primed: false,
        }
    }

    pub fn add_block(&mut self, block: Box<dyn Block>) -> Result<usize> {
        if self.blocks.iter().any(|b| b.id() == block.id()) {
            return Err(Error::DuplicateLabel(block.id().to_string()));
        }
        self.blocks.push(block);
        Ok(self.blocks.len() - 1)
    }

    pub fn blocks(&self) -> &[Box<dyn Block>] {
        &self.blocks
    }

    pub fn block(&self, id: &str) -> Option<&dyn Block> {
        self.blocks.iter().find(|b| b.id() == id).map(|b| b.as_ref())
    }

    fn resolve(&self, address: &str, output: bool) -> Result<(usize, usize, Unit)> {
        let (block, port) = address
            .split_once('.')
            .ok_or_else(|| Error::UnknownPort(address.to_string()))?;
        let bi = self
            .blocks
            .iter()
            .position(|b| b.id() == block)
            .ok_or_else(|| Error::UnknownPort(address.to_string()))?;
        let ports = if output {
            self.blocks[bi].outputs()
        } else {
            self.blocks[bi].inputs()
        };
        let pi = ports
            .iter()
            .position(|p| p.name == port)
            .ok_or_else(|| Error::UnknownPort(address.to_string()))?;
        Ok((bi, pi, ports[pi].unit))
    }

    /// Binds `block.port` output `from` to input `to`.
    pub fn connect(&mut self, from: &str, to: &str) -> Result<()> {
        let (fb, fp, fu) = self.resolve(from, true)?;
        let (tb, tp, tu) = self.resolve(to, false)?;
        if fu != tu {
            return Err(Error::UnitMismatch {
                from: from.to_string(),
                from_unit: fu.to_string(),
                to: to.to_string(),
                to_unit: tu.to_string(),
            });
        }
        if self.bound.contains_key(&(tb, tp)) {
            return Err(Error::AlreadyBound(to.to_string()));
        }
        self.bound.insert((tb, tp), self.edges.len());
        self.edges.push(Edge {
            from: (fb, fp),
            to: (tb, tp),
            unit: fu,
        });
        Ok(())
    }

    pub fn init(&mut self, t0: f64) -> Result<()> {
        for b in &mut self.blocks {
            b.init(t0)?;
        }
        self.used = vec![0.0; self.edges.len()];
        self.latest = self.edges.iter().map(|e| self.blocks[e.from.0].output(e.from.1)).collect();
        self.primed = false;
        Ok(())
    }

    fn refresh_from(&mut self, block: usize) {
        for (k, e) in self.edges.iter().enumerate() {
            if e.from.0 == block {
                self.latest[k] = self.blocks[block].output(e.from.1);
            }
        }
    }

    fn edges_into(&self, block: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().enumerate().filter(move |(_, e)| e.to.0 == block).map(|(i, _)| i)
    }

    fn apply_input(&mut self, k: usize, fresh: f64, iteration: usize, relaxation: f64) {
        let v = if iteration > 1 && self.primed {
            self.used[k] + relaxation * (fresh - self.used[k])
        } else {
            fresh
        };
        self.used[k] = v;
        let (b, p) = self.edges[k].to;
        self.blocks[b].set_input(p, v);
    }

    /// One macro step from `t` to `t + dt`.
    ///
    /// Inputs fed by blocks later in the sweep see their previous values;
    /// repeating the step re-runs every block from its saved state until the
    /// inputs stop changing.
    pub fn do_macro_step(&mut self, cfg: &MasterConfig, t: f64, dt: f64) -> Result<StepReport> {
        if self.latest.len() != self.edges.len() {
            self.init(t)?;
        }
        for b in &mut self.blocks {
            b.save();
        }
        let mut report = StepReport::default();
        for it in 1..=cfg.max_iterations {
            if it > 1 {
                for b in &mut self.blocks {
                    b.restore();
                }
            }
            match cfg.scheme {
                Scheme::GaussSeidel => {
                    for bi in 0..self.blocks.len() {
                        let incoming: Vec<usize> = self.edges_into(bi).collect();
                        for k in incoming {
                            self.apply_input(k, self.latest[k], it, cfg.relaxation);
                        }
                        self.blocks[bi].do_step(t, dt)?;
                        self.refresh_from(bi);
                    }
                }
                Scheme::Jacobi => {
                    for k in 0..self.edges.len() {
                        self.apply_input(k, self.latest[k], it, cfg.relaxation);
                    }
                    for bi in 0..self.blocks.len() {
                        self.blocks[bi].do_step(t, dt)?;
                        self.refresh_from(bi);
                    }
                }
            }
            self.primed = true;
            report.iterations = it;
            // a zero tolerance can never be certified
            let mut worst: Option<(f64, usize)> = None;
            for (k, e) in self.edges.iter().enumerate() {
                let Some(tol) = cfg.tolerance(e.unit) else { continue };
                let r = (self.latest[k] - self.used[k]).abs();
                let scaled = if tol > 0.0 { r / tol } else { f64::INFINITY };
                if worst.is_none_or(|(w, _)| scaled > w) {
                    worst = Some((scaled, k));
                }
            }
            report.worst = worst.map_or(0.0, |(w, _)| w);
            report.worst_port = worst.map_or(String::new(), |(_, k)| {
                let (b, p) = self.edges[k].to;
                format!("{}.{}", self.blocks[b].id(), self.blocks[b].inputs()[p].name)
            });
            if report.worst < 1.0 {
                report.converged = true;
                break;
            }
        }
        Ok(report)
    }

    /// Runs `[t0, t1)` and records every step from `record_from` on.
    pub fn run(&mut self, cfg: &MasterConfig, t0: f64, t1: f64, record_from: f64, recorder: &Recorder) -> Result<(Archive, RunStats)> {
        cfg.validate()?;
        let span = t1 - t0;
        let n = (span / cfg.dt).round();
        if span < 0.0 || (n * cfg.dt - span).abs() > 1e-6 * cfg.dt {
            return Err(Error::InvalidParameter(format!(
                "run length {span} s is not a non-negative multiple of dt = {} s",
                cfg.dt
            )));
        }
        let n = n as usize;
        let skip = (((record_from - t0) / cfg.dt).round().max(0.0) as usize).min(n);
        let columns = recorder.resolve(self)?;
        let mut archive = Archive::new(t0 + skip as f64 * cfg.dt, cfg.dt, columns.iter().map(|c| c.meta.clone()).collect());
        let mut stats = RunStats::default();
        self.init(t0)?;
        for k in 0..n {
            let t = t0 + k as f64 * cfg.dt;
            let rep = self.do_macro_step(cfg, t, cfg.dt)?;
            stats.steps += 1;
            stats.iterations += rep.iterations;
            stats.max_iterations_used = stats.max_iterations_used.max(rep.iterations);
            if !rep.converged {
                stats.nonconverged_steps += 1;
                match cfg.on_nonconvergence {
                    NonConvergencePolicy::Abort => {
                        return Err(Error::NonConvergence {
                            t,
                            iterations: rep.iterations,
                            residual: rep.worst,
                            port: rep.worst_port,
                        })
                    }
                    NonConvergencePolicy::Warn => {
                        if stats.nonconverged_steps <= 10 {
                            warn!(
                                "t = {t} s: no convergence after {} iterations ({} at {:.3} x tol)",
                                rep.iterations, rep.worst_port, rep.worst
                            );
                        }
                    }
                }
            }
            if k >= skip {
                let row: Vec<f64> = columns.iter().map(|c| c.evaluate(self)).collect();
                archive.push_row(&row)?;
            }
        }
        Ok((archive, stats))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{PortSpec, Recorder};
    use super::*;

    /// First-order lag y' = (u - y)/tau, exact update.
    struct Lag {
        id: String,
        tau: f64,
        y: f64,
        u: f64,
        saved: f64,
        ins: Vec<PortSpec>,
        outs: Vec<PortSpec>,
    }

    impl Lag {
        fn new(id: &str, tau: f64, y0: f64) -> Box<Self> {
            Box::new(Self {
                id: id.into(),
                tau,
                y: y0,
                u: 0.0,
                saved: y0,
                ins: vec![PortSpec::new("u", Unit::Celsius), PortSpec::new("m", Unit::KgPerS)],
                outs: vec![PortSpec::new("y", Unit::Celsius), PortSpec::new("q", Unit::Watt)],
            })
        }
    }

    impl Block for Lag {
        fn id(&self) -> &str {
            &self.id
        }
        fn inputs(&self) -> &[PortSpec] {
            &self.ins
        }
        fn outputs(&self) -> &[PortSpec] {
            &self.outs
        }
        fn init(&mut self, _t0: f64) -> Result<()> {
            Ok(())
        }
        fn set_input(&mut self, port: usize, value: f64) {
            if port == 0 {
                self.u = value;
            }
        }
        fn do_step(&mut self, _t: f64, dt: f64) -> Result<()> {
            self.y = self.u + (self.y - self.u) * (-dt / self.tau).exp();
            Ok(())
        }
        fn output(&self, port: usize) -> f64 {
            if port == 0 {
                self.y
            } else {
                2.0 * self.y
            }
        }
        fn save(&mut self) {
            self.saved = self.y;
        }
        fn restore(&mut self) {
            self.y = self.saved;
        }
    }

    #[test]
    fn connect_checks_ports() {
        let mut g = CouplingGraph::new();
        g.add_block(Lag::new("a", 100.0, 0.0)).unwrap();
        g.add_block(Lag::new("b", 100.0, 0.0)).unwrap();
        g.connect("a.y", "b.u").unwrap();
        assert!(matches!(g.connect("a.y", "b.m"), Err(Error::UnitMismatch { .. })));
        assert!(matches!(g.connect("b.y", "b.u"), Err(Error::AlreadyBound(_))));
        assert!(matches!(g.connect("a.z", "b.u"), Err(Error::UnknownPort(_))));
        assert!(matches!(g.connect("c.y", "a.u"), Err(Error::UnknownPort(_))));
    }

    #[test]
    fn single_block_is_plain_stepping() {
        let mut g = CouplingGraph::new();
        g.add_block(Lag::new("a", 100.0, 5.0)).unwrap();
        let cfg = MasterConfig::default();
        g.init(0.0).unwrap();
        let rep = g.do_macro_step(&cfg, 0.0, 60.0).unwrap();
        assert!(rep.converged && rep.iterations == 1);
        let mut direct = Lag::new("x", 100.0, 5.0);
        direct.do_step(0.0, 60.0).unwrap();
        assert_eq!(g.blocks()[0].output(0), direct.y);
    }

    fn loop_graph() -> CouplingGraph {
        // a follows b plus nothing, b follows a: both relax to a common value
        let mut g = CouplingGraph::new();
        g.add_block(Lag::new("a", 300.0, 60.0)).unwrap();
        g.add_block(Lag::new("b", 300.0, 40.0)).unwrap();
        g.connect("b.y", "a.u").unwrap();
        g.connect("a.y", "b.u").unwrap();
        g
    }

    #[test]
    fn loop_converges_quickly() {
        let mut g = loop_graph();
        let cfg = MasterConfig::default();
        g.init(0.0).unwrap();
        for k in 0..60 {
            let rep = g.do_macro_step(&cfg, k as f64 * 60.0, 60.0).unwrap();
            assert!(rep.converged && rep.iterations <= 3, "{rep:?}");
        }
    }

    #[test]
    fn zero_tolerance_never_converges() {
        let mut g = loop_graph();
        let cfg = MasterConfig {
            tol_temperature: 0.0,
            max_iterations: 1,
            on_nonconvergence: NonConvergencePolicy::Abort,
            ..MasterConfig::default()
        };
        let err = g.run(&cfg, 0.0, 600.0, 0.0, &Recorder::default()).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
        let mut g = loop_graph();
        let warn = MasterConfig {
            on_nonconvergence: NonConvergencePolicy::Warn,
            ..cfg
        };
        let (_, stats) = g.run(&warn, 0.0, 600.0, 0.0, &Recorder::default()).unwrap();
        assert_eq!(stats.nonconverged_steps, 10);
    }

    #[test]
    fn run_records_and_is_deterministic() {
        let rec = Recorder::new(["a.y", "sum(*.q)"]);
        let cfg = MasterConfig::default();
        let (a1, s) = loop_graph().run(&cfg, 0.0, 3600.0, 600.0, &rec).unwrap();
        let (a2, _) = loop_graph().run(&cfg, 0.0, 3600.0, 600.0, &rec).unwrap();
        assert_eq!(s.steps, 60);
        assert_eq!(a1.len(), 50);
        assert_eq!(a1.to_csv(), a2.to_csv());
        let sum = a1.column("sum(*.q)").unwrap();
        let y = a1.column("a.y").unwrap();
        assert!(sum[0] > 2.0 * y[0]);
        let (empty, _) = loop_graph().run(&cfg, 0.0, 0.0, 0.0, &rec).unwrap();
        assert_eq!(empty.len(), 0);
        assert!(Archive::parse(&empty.to_csv()).unwrap().is_empty());
    }

    #[test]
    fn month_step_count() {
        let cfg = MasterConfig::default();
        let (_, s) = loop_graph()
            .run(&cfg, 0.0, 31.0 * 86400.0, 31.0 * 86400.0, &Recorder::default())
            .unwrap();
        assert_eq!(s.steps, 44_640);
    }

    #[test]
    fn rejects_ragged_run_length() {
        let cfg = MasterConfig::default();
        assert!(loop_graph().run(&cfg, 0.0, 90.0, 0.0, &Recorder::default()).is_err());
    }
}
