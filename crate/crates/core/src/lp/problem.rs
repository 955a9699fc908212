use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{FlowId, Job};
use crate::net::ArcId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// What a column stands for in the scheduling formulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    /// Fraction of a flow's volume finished in an interval.
    Progress { flow: FlowId, interval: usize },
    /// Completion time of a flow or of a coflow's dummy.
    Completion(Job),
    /// Per-arc flow of a flow inside an interval, in fractions of its volume.
    ArcRate { flow: FlowId, interval: usize, arc: ArcId },
    /// Flow on an arc of the time-expanded graph for a packet arriving at `arrival`.
    PacketArc { flow: FlowId, arrival: usize, arc: usize },
    /// Fraction of a packet arriving inside an interval.
    Arrival { flow: FlowId, interval: usize },
    /// Fraction of a packet arriving exactly at step `arrival`.
    Demand { flow: FlowId, arrival: usize },
    /// Any other column, identified by its position among such columns.
    Other(usize),
}

impl Symbol {
    pub fn name(&self) -> String {
        match *self {
            Symbol::Progress { flow, interval } => format!("x_{}_{}_{}", flow.coflow, flow.flow, interval),
            Symbol::Completion(Job::Flow(f)) => format!("c_{}_{}", f.coflow, f.flow),
            Symbol::Completion(Job::Dummy(i)) => format!("c_{i}_d"),
            Symbol::ArcRate { flow, interval, arc } => {
                format!("xe_{}_{}_{}_{}", flow.coflow, flow.flow, interval, arc.0)
            }
            Symbol::PacketArc { flow, arrival, arc } => format!("xp_{}_{}_{}_{}", flow.coflow, flow.flow, arrival, arc),
            Symbol::Arrival { flow, interval } => format!("f_{}_{}_{}", flow.coflow, flow.flow, interval),
            Symbol::Demand { flow, arrival } => format!("bt_{}_{}_{}", flow.coflow, flow.flow, arrival),
            Symbol::Other(k) => format!("v{k}"),
        }
    }

    /// Inverse of [`Symbol::name`].
    pub fn parse(name: &str) -> Option<Symbol> {
        let mut parts = name.split('_');
        let head = parts.next()?;
        let rest: Vec<&str> = parts.collect();
        let num = |i: usize| -> Option<usize> { rest.get(i)?.parse().ok() };
        let flow = || Some(FlowId::new(num(0)?, num(1)?));
        let sym = match (head, rest.len()) {
            ("x", 3) => Symbol::Progress { flow: flow()?, interval: num(2)? },
            ("c", 2) if rest[1] == "d" => Symbol::Completion(Job::Dummy(num(0)?)),
            ("c", 2) => Symbol::Completion(Job::Flow(flow()?)),
            ("xe", 4) => Symbol::ArcRate { flow: flow()?, interval: num(2)?, arc: ArcId(num(3)?) },
            ("xp", 4) => Symbol::PacketArc { flow: flow()?, arrival: num(2)?, arc: num(3)? },
            ("f", 3) => Symbol::Arrival { flow: flow()?, interval: num(2)? },
            ("bt", 3) => Symbol::Demand { flow: flow()?, arrival: num(2)? },
            (h, 0) if h.len() > 1 && h.starts_with('v') => Symbol::Other(h[1..].parse().ok()?),
            _ => return None,
        };
        (sym.name() == name).then_some(sym)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub symbol: Symbol,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear program with bounded columns and named rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub sense: Sense,
    pub variables: Vec<Variable>,
    /// Objective coefficient per column.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    directory: BTreeMap<Symbol, VarId>,
    others: usize,
}

impl LpProblem {
    pub fn new(sense: Sense) -> Self {
        LpProblem { sense, variables: Vec::new(), objective: Vec::new(), constraints: Vec::new(), directory: BTreeMap::new(), others: 0 }
    }

    /// Adds a column. Panics if the symbol is already present.
    pub fn add_var(&mut self, symbol: Symbol, lower: f64, upper: f64, cost: f64) -> VarId {
        let id = VarId(self.variables.len());
        if let Symbol::Other(k) = symbol {
            self.others = self.others.max(k + 1);
        }
        let previous = self.directory.insert(symbol, id);
        assert!(previous.is_none(), "duplicate column {symbol}");
        self.variables.push(Variable { name: symbol.name(), lower, upper, symbol });
        self.objective.push(cost);
        id
    }

    /// Adds a column identified only by position.
    pub fn add_other(&mut self, lower: f64, upper: f64, cost: f64) -> VarId {
        self.others += 1;
        self.add_var(Symbol::Other(self.others - 1), lower, upper, cost)
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(terms.iter().all(|(v, _)| v.0 < self.variables.len()));
        self.constraints.push(Constraint { name: name.into(), terms, relation, rhs });
    }

    pub fn var(&self, symbol: &Symbol) -> Option<VarId> {
        self.directory.get(symbol).copied()
    }

    pub fn directory(&self) -> &BTreeMap<Symbol, VarId> {
        &self.directory
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn nonzeros(&self) -> usize {
        self.constraints.iter().map(|c| c.terms.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Largest violation of a row or bound at `values`, each scaled by
    /// `max(1, |rhs|, sum |a_j x_j|)` (bounds by `max(1, |bound|)`), together
    /// with the name of the offending row or column.
    pub fn max_violation(&self, values: &[f64]) -> (f64, Option<String>) {
        let mut worst = (0.0, None);
        for c in &self.constraints {
            let mut lhs = 0.0;
            let mut scale = c.rhs.abs().max(1.0);
            let mut mag = 0.0;
            for &(v, a) in &c.terms {
                lhs += a * values[v.0];
                mag += (a * values[v.0]).abs();
            }
            scale = scale.max(mag);
            let excess = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            let r = excess / scale;
            if r > worst.0 {
                worst = (r, Some(c.name.clone()));
            }
        }
        for (v, x) in self.variables.iter().zip(values) {
            let lo = (v.lower - x) / v.lower.abs().max(1.0);
            let hi = (x - v.upper) / v.upper.abs().max(1.0);
            let r = lo.max(hi);
            if r > worst.0 {
                worst = (r, Some(v.name.clone()));
            }
        }
        worst
    }
}
