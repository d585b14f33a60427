//! Engine for normative practical reasoning over durative actions.
//!
//! A problem couples a STRIPS-style planning domain (fluents, an initial
//! state, durative actions with invariant preconditions) with valued goals
//! and conditional norms: executing a norm's condition action obliges the
//! agent to start, or forbids it from starting, the norm's subject action
//! within a relative deadline, on pain of a violation cost. Plans are timed
//! schedules that respect concurrency conflicts and preconditions and
//! satisfy at least one goal; they are ranked by utility (goal value gained
//! minus violation cost incurred) and the utility-maximal set is computed
//! exactly.
//!
//! The crate is organised around four modules:
//!
//! * [`model`] — domain types, the `.nprp` problem file format, validation;
//! * [`semantics`] — deterministic trace engine: state sequences, goal
//!   satisfaction, the norm-instance lifecycle, plan utility;
//! * [`planner`] — exhaustive plan enumeration up to a horizon and
//!   branch-and-bound search for the optimal set, plus a naive
//!   brute-force enumerator used as a test oracle;
//! * [`aspgen`] — emission of the equivalent AnsProlog program and
//!   cross-validation of solver answer sets against the native engine.

pub mod aspgen;
pub mod model;
pub mod planner;
pub mod semantics;

pub use model::{parse_problem, serialize_problem, validate_document, Problem, ValidationReport};
pub use planner::{enumerate_naive, enumerate_plans, optimal_plans, PlanReport, SearchConfig};
pub use semantics::{
    conflicting_actions, instantiate_norms, makespan, resolve_norms, satisfied_goals, simulate,
    utility, ComplianceMode, NormInstance, PendingPolicy, Schedule, Trace,
};
