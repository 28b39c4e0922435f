//! Model construction from instances, solving, reporting and fixpoint checks.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::decompose::{
    build_atleast_pyramid, build_atmost_pyramid, build_nvalue, build_occs, AtMostVariant,
    DecompositionPlan, Relation,
};
use crate::domain::Value;
use crate::engine::{Engine, EngineError, Limits, SearchStats, SolveOutcome, Status, VarId};
use crate::instance::{Instance, Kind};
use crate::oracle::{self, OracleError};
use crate::propagators::{Consistency, SupportMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// Value-used flags plus a sum.
    Occs,
    PyramidBc,
    PyramidFast,
    PyramidRc,
    /// Pyramid pair for NValue; only accepts NValue instances.
    NvalueBc,
    NvalueRc,
}

impl Model {
    pub const ALL: [Model; 6] = [
        Model::Occs,
        Model::PyramidBc,
        Model::PyramidFast,
        Model::PyramidRc,
        Model::NvalueBc,
        Model::NvalueRc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::Occs => "occs",
            Model::PyramidBc => "pyramid-bc",
            Model::PyramidFast => "pyramid-fast",
            Model::PyramidRc => "pyramid-rc",
            Model::NvalueBc => "nvalue-bc",
            Model::NvalueRc => "nvalue-rc",
        }
    }

    /// Whether the model can be built for instances of `kind`.
    pub fn accepts(self, kind: Kind) -> bool {
        !matches!(self, Model::NvalueBc | Model::NvalueRc) || kind == Kind::NValue
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| BenchError::UnknownModel(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("model {model} does not apply to {kind} instances")]
    KindMismatch { model: Model, kind: Kind },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("solver returned an assignment that violates the instance: {0:?}")]
    InvalidSolution(Vec<Value>),
}

/// An engine holding a posted model.
pub struct Built {
    pub engine: Engine,
    pub xs: Vec<VarId>,
    pub n: VarId,
    pub plan: DecompositionPlan,
}

pub fn build_model(model: Model, inst: &Instance) -> Result<Built, BenchError> {
    if !model.accepts(inst.kind) {
        return Err(BenchError::KindMismatch {
            model,
            kind: inst.kind,
        });
    }
    let mut engine = Engine::new();
    let xs = inst
        .vars
        .iter()
        .map(|v| engine.new_var(1, inst.d, &v.dom))
        .collect::<Result<Vec<_>, _>>()?;
    let n_top = inst.d.max(inst.n() as Value);
    let n = engine.new_var(1, n_top, &inst.n_dom)?;
    let e = &mut engine;
    let plan = match (model, inst.kind) {
        (Model::Occs, kind) => {
            let relation = match kind {
                Kind::NValue => Relation::Eq,
                Kind::AtMost => Relation::Leq,
                Kind::AtLeast => Relation::Geq,
            };
            build_occs(e, &xs, n, relation, SupportMode::Domain)?
        }
        (Model::PyramidBc | Model::NvalueBc, Kind::NValue) => {
            build_nvalue(e, &xs, n, Consistency::Bound)?
        }
        (Model::PyramidRc | Model::NvalueRc, Kind::NValue) => {
            build_nvalue(e, &xs, n, Consistency::Range)?
        }
        (Model::PyramidFast, Kind::NValue) => {
            let mut plan = build_atmost_pyramid(e, &xs, n, AtMostVariant::FastBC, true)?;
            plan.merge(build_atleast_pyramid(e, &xs, n, Consistency::Bound)?);
            plan
        }
        (Model::PyramidBc, Kind::AtMost) => {
            build_atmost_pyramid(e, &xs, n, AtMostVariant::BasicBC, true)?
        }
        (Model::PyramidFast, Kind::AtMost) => {
            build_atmost_pyramid(e, &xs, n, AtMostVariant::FastBC, true)?
        }
        (Model::PyramidRc, Kind::AtMost) => {
            build_atmost_pyramid(e, &xs, n, AtMostVariant::RC, true)?
        }
        (Model::PyramidBc | Model::PyramidFast, Kind::AtLeast) => {
            build_atleast_pyramid(e, &xs, n, Consistency::Bound)?
        }
        (Model::PyramidRc, Kind::AtLeast) => build_atleast_pyramid(e, &xs, n, Consistency::Range)?,
        (Model::NvalueBc | Model::NvalueRc, _) => unreachable!("rejected above"),
    };
    Ok(Built {
        engine,
        xs,
        n,
        plan,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Sat,
    Unsat,
    Limit,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Sat => 0,
            Outcome::Unsat => 1,
            Outcome::Limit => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub outcome: Outcome,
    pub backtracks: u64,
    pub nodes: u64,
    pub failures: u64,
    pub time_ms: u64,
    pub solution: Option<Vec<Value>>,
    #[serde(rename = "N")]
    pub n_value: Option<Value>,
    pub model: String,
    pub digest: String,
    #[serde(skip)]
    pub stats: SearchStats,
}

impl RunReport {
    pub fn summary(&self) -> String {
        let outcome = match self.outcome {
            Outcome::Sat => "SAT",
            Outcome::Unsat => "UNSAT",
            Outcome::Limit => "LIMIT",
        };
        let mut line = format!(
            "{outcome} model={} nodes={} backtracks={} failures={} propagations={} time_ms={}",
            self.model,
            self.nodes,
            self.backtracks,
            self.failures,
            self.stats.propagations,
            self.time_ms
        );
        if let (Some(sol), Some(n)) = (&self.solution, self.n_value) {
            let used = crate::instance::distinct(sol);
            line.push_str(&format!(" N={n} distinct={used}"));
        }
        line
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialises")
    }
}

/// Builds `model`, searches over the X variables and N, and revalidates any
/// solution directly against the instance.
pub fn run_bench(model: Model, inst: &Instance, limits: Limits) -> Result<RunReport, BenchError> {
    let mut built = build_model(model, inst)?;
    let mut branch = built.xs.clone();
    branch.push(built.n);
    let (outcome, stats) = built.engine.solve(&branch, limits)?;
    let (outcome, solution, n_value) = match outcome {
        SolveOutcome::Sat(mut values) => {
            let n = values.pop().expect("N is a branching variable");
            if !inst.satisfied_by(&values, n) {
                return Err(BenchError::InvalidSolution(values));
            }
            (Outcome::Sat, Some(values), Some(n))
        }
        SolveOutcome::Unsat => (Outcome::Unsat, None, None),
        SolveOutcome::LimitReached => (Outcome::Limit, None, None),
    };
    Ok(RunReport {
        outcome,
        backtracks: stats.backtracks,
        nodes: stats.nodes,
        failures: stats.failures,
        time_ms: stats.time_ms,
        solution,
        n_value,
        model: model.name().to_string(),
        digest: inst.digest(),
        stats,
    })
}

/// Domains of X and N after root propagation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixpoint {
    pub domains: Vec<Vec<Value>>,
    pub n_domain: Vec<Value>,
    pub failed: bool,
}

pub fn root_fixpoint(model: Model, inst: &Instance) -> Result<Fixpoint, BenchError> {
    let mut built = build_model(model, inst)?;
    let failed = built.engine.propagate() == Status::Conflict;
    let e = &built.engine;
    Ok(Fixpoint {
        domains: built.xs.iter().map(|&x| e.domain(x).values()).collect(),
        n_domain: e.domain(built.n).values(),
        failed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Bound,
    Range,
}

/// Differences between a model's root fixpoint and the oracle closure at
/// `level`. Bound level compares bounds only; range level compares sets.
/// Empty means they agree, including on disentailment.
pub fn check_against_oracle(
    model: Model,
    inst: &Instance,
    level: Level,
) -> Result<Vec<String>, BenchError> {
    let fix = root_fixpoint(model, inst)?;
    let closed = match level {
        Level::Bound => oracle::bc_closure(inst, inst.kind)?,
        Level::Range => oracle::rc_closure(inst, inst.kind)?,
    };
    let mut diffs = Vec::new();
    if fix.failed != closed.disentailed {
        diffs.push(format!(
            "disentailment: model {} oracle {}",
            fix.failed, closed.disentailed
        ));
        return Ok(diffs);
    }
    if fix.failed {
        return Ok(diffs);
    }
    let project = |d: &[Value]| match level {
        Level::Bound => vec![d[0], *d.last().unwrap()],
        Level::Range => d.to_vec(),
    };
    for (i, (got, want)) in fix.domains.iter().zip(&closed.domains).enumerate() {
        if project(got) != project(want) {
            diffs.push(format!(
                "{}: model {:?} oracle {:?}",
                inst.vars[i].name,
                project(got),
                project(want)
            ));
        }
    }
    if project(&fix.n_domain) != project(&closed.n_domain) {
        diffs.push(format!(
            "N: model {:?} oracle {:?}",
            project(&fix.n_domain),
            project(&closed.n_domain)
        ));
    }
    Ok(diffs)
}
