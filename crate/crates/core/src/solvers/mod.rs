//! Four exact maximum-clique solvers from distinct strategy families and a
//! budgeted portfolio runner whose outcomes become selection labels.
//!
//! Every solver checks its budget once per search-tree node expansion, so a
//! node limit reproduces the same truncated search on every run.

mod bitset;
mod color_bb;
mod degen_bb;
mod dynorder_bb;
mod partition_bb;
mod search;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{core_decomposition, Graph};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("time limit must be positive and finite, got {0}")]
    InvalidBudget(f64),
    #[error("unknown solver {0:?}")]
    UnknownSolver(String),
    #[error("unknown status {0:?}")]
    UnknownStatus(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SolverId {
    ColorBB,
    DegenBB,
    DynOrderBB,
    PartitionBoundBB,
}

impl SolverId {
    pub const ALL: [SolverId; 4] = [
        SolverId::ColorBB,
        SolverId::DegenBB,
        SolverId::DynOrderBB,
        SolverId::PartitionBoundBB,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SolverId::ColorBB => "ColorBB",
            SolverId::DegenBB => "DegenBB",
            SolverId::DynOrderBB => "DynOrderBB",
            SolverId::PartitionBoundBB => "PartitionBoundBB",
        }
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverId {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| SolverError::UnknownSolver(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Exact,
    TimedOut,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Exact => "Exact",
            SolveStatus::TimedOut => "TimedOut",
        }
    }
}

impl FromStr for SolveStatus {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Exact" => Ok(SolveStatus::Exact),
            "TimedOut" => Ok(SolveStatus::TimedOut),
            _ => Err(SolverError::UnknownStatus(s.to_owned())),
        }
    }
}

/// Per-solver resource limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub time_limit: Duration,
    /// Maximum number of search-tree nodes.
    pub node_limit: Option<u64>,
}

impl Budget {
    pub fn seconds(secs: f64) -> Result<Self, SolverError> {
        if !(secs.is_finite() && secs > 0.0) {
            return Err(SolverError::InvalidBudget(secs));
        }
        Ok(Self {
            time_limit: Duration::from_secs_f64(secs),
            node_limit: None,
        })
    }

    pub fn with_node_limit(mut self, nodes: u64) -> Self {
        self.node_limit = Some(nodes);
        self
    }
}

/// One solver's result on one graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub solver: SolverId,
    /// Original node ids, ascending.
    pub clique: Vec<usize>,
    pub size: usize,
    pub wall_time: f64,
    pub status: SolveStatus,
    pub nodes: u64,
}

pub(crate) struct RawOutcome {
    clique: Vec<usize>,
    exhausted: bool,
    nodes: u64,
}

/// Runs one solver. Wall time covers the solver's own preprocessing and
/// search, not parsing or feature extraction.
pub fn solve(id: SolverId, g: &Graph, budget: &Budget) -> Result<SolveOutcome, SolverError> {
    if g.is_empty() {
        return Err(SolverError::EmptyGraph);
    }
    let start = Instant::now();
    let raw = match id {
        SolverId::ColorBB => color_bb::run(g, budget, start),
        SolverId::DegenBB => degen_bb::run(g, budget, start),
        SolverId::DynOrderBB => dynorder_bb::run(g, budget, start),
        SolverId::PartitionBoundBB => partition_bb::run(g, budget, start),
    };
    let wall_time = start.elapsed().as_secs_f64();
    Ok(SolveOutcome {
        solver: id,
        size: raw.clique.len(),
        clique: raw.clique,
        wall_time,
        status: if raw.exhausted {
            SolveStatus::TimedOut
        } else {
            SolveStatus::Exact
        },
        nodes: raw.nodes,
    })
}

pub fn solve_color_bb(g: &Graph, b: &Budget) -> Result<SolveOutcome, SolverError> {
    solve(SolverId::ColorBB, g, b)
}

pub fn solve_degen_bb(g: &Graph, b: &Budget) -> Result<SolveOutcome, SolverError> {
    solve(SolverId::DegenBB, g, b)
}

pub fn solve_dynorder_bb(g: &Graph, b: &Budget) -> Result<SolveOutcome, SolverError> {
    solve(SolverId::DynOrderBB, g, b)
}

pub fn solve_partition_bound_bb(g: &Graph, b: &Budget) -> Result<SolveOutcome, SolverError> {
    solve(SolverId::PartitionBoundBB, g, b)
}

/// Runs all four solvers one after another, each with its own budget.
/// Outcomes are returned in [`SolverId::ALL`] order.
pub fn run_portfolio(g: &Graph, b: &Budget) -> Result<Vec<SolveOutcome>, SolverError> {
    SolverId::ALL.iter().map(|&id| solve(id, g, b)).collect()
}

/// `(degeneracy + 1) − ω`; non-negative whenever `omega` is the clique number.
pub fn clique_core_gap(g: &Graph, omega: usize) -> i64 {
    core_decomposition(g).degeneracy as i64 + 1 - omega as i64
}

/// One row of the outcome table.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRow {
    pub instance: String,
    pub outcome: SolveOutcome,
}

pub const OUTCOME_HEADER: [&str; 5] = ["instance", "solver", "size", "wall_time_s", "status"];

pub fn write_outcomes<W: Write>(w: W, rows: &[OutcomeRow]) -> Result<(), SolverError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(OUTCOME_HEADER)?;
    for r in rows {
        out.write_record([
            r.instance.as_str(),
            r.outcome.solver.name(),
            &r.outcome.size.to_string(),
            &format!("{:.6}", r.outcome.wall_time),
            r.outcome.status.name(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads an outcome table. Cliques are not stored, so `clique` is empty and
/// `nodes` is 0 on the returned outcomes.
pub fn read_outcomes<R: Read>(r: R) -> Result<Vec<OutcomeRow>, SolverError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |what: &str| {
            SolverError::Csv(csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("bad {what} in row {:?}", rec),
            )))
        };
        rows.push(OutcomeRow {
            instance: field(0).to_owned(),
            outcome: SolveOutcome {
                solver: field(1).parse()?,
                clique: Vec::new(),
                size: field(2).parse().map_err(|_| bad("size"))?,
                wall_time: field(3).parse().map_err(|_| bad("wall_time_s"))?,
                status: field(4).parse()?,
                nodes: 0,
            },
        });
    }
    Ok(rows)
}
