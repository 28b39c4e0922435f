//! Decompositions of the NValue, AtMostNValue and AtLeastNValue constraints
//! into small propagators, with exhaustive oracles to check them against.

pub mod bench;
pub mod decompose;
pub mod domain;
pub mod engine;
pub mod fuzz;
pub mod instance;
pub mod lp;
pub mod oracle;
pub mod propagators;

pub use domain::{Domain, Value};
pub use engine::{
    Action, Engine, EngineError, Limits, SearchStats, SolveOutcome, Status, Tightened, VarId,
};
pub use instance::{Instance, Kind};
