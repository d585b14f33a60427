//! Deterministic trace engine: executes a timed schedule, derives the state
//! sequence, evaluates goals and runs the norm-instance lifecycle.
//!
//! Everything here is a pure function of its arguments; traces and
//! instances are plain value objects, freely shareable across threads.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DurativeAction, FluentSet, Goal, Norm, NormKind, Problem};

/// One timed action start.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub action: String,
    pub start: u64,
}

impl ScheduleEntry {
    pub fn new(action: impl Into<String>, start: u64) -> Self {
        ScheduleEntry {
            action: action.into(),
            start,
        }
    }
}

// Entries order by start time first; action name only breaks ties (which
// a valid schedule never has).
impl Ord for ScheduleEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.start, &self.action).cmp(&(other.start, &other.action))
    }
}

impl PartialOrd for ScheduleEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ScheduleEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.action, self.start)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    /// Two entries share a start time. A single agent cannot begin two
    /// actions in the same instant.
    #[error("two actions start at time {0}")]
    SameStart(u64),
}

/// A candidate course of action: starts sorted ascending, all distinct.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Serialize)]
#[serde(transparent)]
pub struct Schedule {
    entries: Vec<ScheduleEntry>,
}

impl Schedule {
    pub fn new(mut entries: Vec<ScheduleEntry>) -> Result<Schedule, ScheduleError> {
        entries.sort();
        for w in entries.windows(2) {
            if w[0].start == w[1].start {
                return Err(ScheduleError::SameStart(w[0].start));
            }
        }
        Ok(Schedule { entries })
    }

    pub fn empty() -> Schedule {
        Schedule::default()
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Occurrence test: is `(action, start)` part of this schedule?
    pub fn contains(&self, action: &str, start: u64) -> bool {
        self.entries
            .iter()
            .any(|e| e.start == start && e.action == action)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "⟩")
    }
}

// ---------------------------------------------------------------------------
// Concurrency conflicts
// ---------------------------------------------------------------------------

/// Unordered action pairs that may not execute in overlapping intervals.
/// May contain `(a, a)` when an action contradicts itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictSet {
    pairs: BTreeSet<(String, String)>,
}

impl ConflictSet {
    pub fn contains(&self, a: &str, b: &str) -> bool {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.pairs
            .contains(&(key.0.to_owned(), key.1.to_owned()))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Compute the conflicting-action relation: `a` and `b` conflict when some
/// fluent is required or produced positively by one and required or
/// produced negatively by the other. Symmetric; self-pairs possible.
pub fn conflicting_actions(actions: &[DurativeAction]) -> ConflictSet {
    fn positives(a: &DurativeAction) -> impl Iterator<Item = &String> {
        a.pre.pos().iter().chain(a.post.pos().iter())
    }
    fn negatives(a: &DurativeAction) -> impl Iterator<Item = &String> {
        a.pre.neg().iter().chain(a.post.neg().iter())
    }

    let mut pairs = BTreeSet::new();
    for (i, a) in actions.iter().enumerate() {
        for b in &actions[i..] {
            let clash = positives(a).any(|r| negatives(b).any(|s| s == r))
                || negatives(a).any(|r| positives(b).any(|s| s == r));
            if clash {
                let key = if a.name <= b.name {
                    (a.name.clone(), b.name.clone())
                } else {
                    (b.name.clone(), a.name.clone())
                };
                pairs.insert(key);
            }
        }
    }
    ConflictSet { pairs }
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimulationError {
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("horizon {horizon} is below the schedule makespan {makespan}")]
    HorizonExceeded { makespan: u64, horizon: u64 },
    #[error("ConflictOverlap({first}, {second}, {at}): conflicting actions overlap")]
    ConflictOverlap {
        first: String,
        second: String,
        at: u64,
    },
    #[error("PreconditionFailure({action}, {at}): precondition does not hold")]
    PreconditionFailure { action: String, at: u64 },
}

/// Latest end time over the schedule; 0 for the empty schedule.
pub fn makespan(schedule: &Schedule, problem: &Problem) -> Result<u64, SimulationError> {
    let mut span = 0;
    for e in schedule.entries() {
        let action = problem
            .action(&e.action)
            .ok_or_else(|| SimulationError::UnknownAction(e.action.clone()))?;
        span = span.max(e.start + action.duration);
    }
    Ok(span)
}

/// The state sequence induced by a schedule, with per-time bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    states: Vec<FluentSet>,
    ending_at: Vec<Vec<ScheduleEntry>>,
    in_progress_at: Vec<Vec<ScheduleEntry>>,
    horizon: u64,
}

impl Trace {
    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// States `s_0 ..= s_q`, indexed by time.
    pub fn states(&self) -> &[FluentSet] {
        &self.states
    }

    pub fn state(&self, k: u64) -> &FluentSet {
        &self.states[k as usize]
    }

    /// Entries whose execution ends exactly at time `k`.
    pub fn ending_at(&self, k: u64) -> &[ScheduleEntry] {
        &self.ending_at[k as usize]
    }

    /// Entries in progress at time `k`: started at `t ≤ k` with `k < t + d`.
    pub fn in_progress_at(&self, k: u64) -> &[ScheduleEntry] {
        &self.in_progress_at[k as usize]
    }
}

/// Execute `schedule` against `problem` for states `0 ..= horizon`.
///
/// Checks, in order: action names, horizon vs makespan, concurrency
/// conflicts (earliest overlap first), then precondition invariance while
/// stepping the transition relation. State `k` results from state `k-1` by
/// removing the delete postconditions and adding the add postconditions of
/// every action ending at `k`; with no ending action the state is carried
/// over unchanged.
pub fn simulate(
    problem: &Problem,
    schedule: &Schedule,
    horizon: u64,
) -> Result<Trace, SimulationError> {
    let span = makespan(schedule, problem)?;
    if span > horizon {
        return Err(SimulationError::HorizonExceeded {
            makespan: span,
            horizon,
        });
    }

    let conflicts = conflicting_actions(problem.actions());
    check_conflicts(problem, schedule, &conflicts)?;

    let n = horizon as usize + 1;
    let mut ending_at: Vec<Vec<ScheduleEntry>> = vec![Vec::new(); n];
    let mut in_progress_at: Vec<Vec<ScheduleEntry>> = vec![Vec::new(); n];
    for e in schedule.entries() {
        let d = problem.action(&e.action).expect("checked").duration;
        ending_at[(e.start + d) as usize].push(e.clone());
        for k in e.start..(e.start + d).min(horizon) {
            in_progress_at[k as usize].push(e.clone());
        }
    }

    let mut states: Vec<FluentSet> = Vec::with_capacity(n);
    states.push(problem.initial().clone());
    for k in 1..=horizon {
        let mut state = states[k as usize - 1].clone();
        for e in &ending_at[k as usize] {
            let action = problem.action(&e.action).expect("checked");
            for f in action.post.neg() {
                state.remove(f);
            }
        }
        for e in &ending_at[k as usize] {
            let action = problem.action(&e.action).expect("checked");
            for f in action.post.pos() {
                state.insert(f.clone());
            }
        }
        states.push(state);
    }

    // Precondition invariance: pr(a) must hold at every state the action is
    // in progress in. Report the earliest failure, ties broken by name.
    for k in 0..=horizon {
        let mut offenders: Vec<&ScheduleEntry> = in_progress_at[k as usize]
            .iter()
            .filter(|e| {
                let action = problem.action(&e.action).expect("checked");
                !action.pre.holds_in(&states[k as usize])
            })
            .collect();
        offenders.sort_by(|a, b| a.action.cmp(&b.action));
        if let Some(e) = offenders.first() {
            return Err(SimulationError::PreconditionFailure {
                action: e.action.clone(),
                at: k,
            });
        }
    }

    Ok(Trace {
        states,
        ending_at,
        in_progress_at,
        horizon,
    })
}

fn check_conflicts(
    problem: &Problem,
    schedule: &Schedule,
    conflicts: &ConflictSet,
) -> Result<(), SimulationError> {
    let entries = schedule.entries();
    let mut earliest: Option<(u64, &ScheduleEntry, &ScheduleEntry)> = None;
    for (i, a) in entries.iter().enumerate() {
        let da = problem.action(&a.action).expect("checked").duration;
        for b in &entries[i + 1..] {
            // Entries are sorted by start, so overlap means b starts
            // before a ends.
            if b.start >= a.start + da {
                break;
            }
            if conflicts.contains(&a.action, &b.action) {
                let at = b.start;
                if earliest.is_none_or(|(t, ..)| at < t) {
                    earliest = Some((at, a, b));
                }
            }
        }
    }
    if let Some((at, a, b)) = earliest {
        return Err(SimulationError::ConflictOverlap {
            first: a.action.clone(),
            second: b.action.clone(),
            at,
        });
    }
    Ok(())
}

/// Names of goals satisfied somewhere along the trace.
pub fn satisfied_goals(trace: &Trace, goals: &[Goal]) -> BTreeSet<String> {
    goals
        .iter()
        .filter(|g| trace.states().iter().any(|s| g.requirements.holds_in(s)))
        .map(|g| g.name.clone())
        .collect()
}

// ---------------------------------------------------------------------------
// Norm instances
// ---------------------------------------------------------------------------

/// Which executions of the subject action discharge a norm instance:
/// its start alone, or its whole execution, inside the compliance window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplianceMode {
    #[default]
    StartOnly,
    StartAndEnd,
}

impl std::str::FromStr for ComplianceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "start" => Ok(ComplianceMode::StartOnly),
            "start-end" => Ok(ComplianceMode::StartAndEnd),
            other => Err(format!("unknown mode `{other}` (expected start|start-end)")),
        }
    }
}

/// How instances still pending at the horizon are accounted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PendingPolicy {
    /// Pending instances contribute neither cost nor compliance credit.
    #[default]
    Ignore,
    /// Pending instances are treated as violated at the horizon.
    Violate,
    /// Pending instances are treated as complied with at the horizon.
    Comply,
}

impl std::str::FromStr for PendingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ignore" => Ok(PendingPolicy::Ignore),
            "violate" => Ok(PendingPolicy::Violate),
            "comply" => Ok(PendingPolicy::Comply),
            other => Err(format!(
                "unknown pending policy `{other}` (expected ignore|violate|comply)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceStatus {
    Pending,
    Complied { at: u64 },
    Violated { at: u64 },
}

impl InstanceStatus {
    pub fn is_violated(&self) -> bool {
        matches!(self, InstanceStatus::Violated { .. })
    }

    pub fn is_complied(&self) -> bool {
        matches!(self, InstanceStatus::Complied { .. })
    }

    pub fn is_pending(&self) -> bool {
        matches!(self, InstanceStatus::Pending)
    }
}

/// One activation of a norm, uniquely keyed by (norm name, activation time).
///
/// The compliance window is the half-open interval
/// `[activation_end, deadline_abs)` with
/// `deadline_abs = deadline + activation_time + duration(condition)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NormInstance {
    pub norm: Norm,
    pub activation_time: u64,
    pub activation_end: u64,
    pub deadline_abs: u64,
    pub status: InstanceStatus,
}

impl NormInstance {
    fn new(norm: &Norm, activation_time: u64, condition_duration: u64) -> NormInstance {
        let activation_end = activation_time + condition_duration;
        NormInstance {
            norm: norm.clone(),
            activation_time,
            activation_end,
            deadline_abs: norm.deadline + activation_end,
            status: InstanceStatus::Pending,
        }
    }

    /// Does an execution of the subject starting at `start` (duration
    /// `subject_duration`) fall inside the compliance window under `mode`?
    pub fn discharged_by(&self, start: u64, subject_duration: u64, mode: ComplianceMode) -> bool {
        match mode {
            ComplianceMode::StartOnly => {
                start >= self.activation_end && start < self.deadline_abs
            }
            ComplianceMode::StartAndEnd => {
                start >= self.activation_end && start + subject_duration < self.deadline_abs
            }
        }
    }
}

/// One pending instance per (norm, execution of its condition action).
/// Multiple activations of the same norm yield distinct instances.
pub fn instantiate_norms(problem: &Problem, schedule: &Schedule) -> Vec<NormInstance> {
    let mut instances = Vec::new();
    for norm in problem.norms() {
        let Some(condition) = problem.action(&norm.condition) else {
            continue;
        };
        for e in schedule.entries() {
            if e.action == norm.condition {
                instances.push(NormInstance::new(norm, e.start, condition.duration));
            }
        }
    }
    instances.sort_by(|a, b| {
        (&a.norm.name, a.activation_time).cmp(&(&b.norm.name, b.activation_time))
    });
    instances
}

/// Resolve instance statuses against the schedule, up to `horizon`.
///
/// Obligations comply at the earliest qualifying subject execution and are
/// violated when their deadline falls within the horizon with none;
/// prohibitions violate at the earliest qualifying subject execution and
/// comply when the deadline passes without one. A subject start exactly at
/// the deadline is outside the (half-open) window: expiry wins. Instances
/// whose deadline lies beyond the horizon and that no execution discharged
/// stay pending.
pub fn resolve_norms(
    problem: &Problem,
    schedule: &Schedule,
    instances: Vec<NormInstance>,
    mode: ComplianceMode,
    horizon: u64,
) -> Vec<NormInstance> {
    instances
        .into_iter()
        .map(|mut ins| {
            let subject_duration = problem
                .action(&ins.norm.subject)
                .map(|a| a.duration)
                .unwrap_or(0);
            let hit = schedule
                .entries()
                .iter()
                .filter(|e| e.action == ins.norm.subject)
                .map(|e| e.start)
                .filter(|&t| ins.discharged_by(t, subject_duration, mode))
                .min();
            ins.status = match (ins.norm.kind, hit) {
                (NormKind::Obligation, Some(at)) => InstanceStatus::Complied { at },
                (NormKind::Prohibition, Some(at)) => InstanceStatus::Violated { at },
                (kind, None) if ins.deadline_abs <= horizon => match kind {
                    NormKind::Obligation => InstanceStatus::Violated {
                        at: ins.deadline_abs,
                    },
                    NormKind::Prohibition => InstanceStatus::Complied {
                        at: ins.deadline_abs,
                    },
                },
                (_, None) => InstanceStatus::Pending,
            };
            ins
        })
        .collect()
}

/// Reclassify pending instances per the configured policy.
pub fn apply_pending_policy(
    instances: Vec<NormInstance>,
    policy: PendingPolicy,
    horizon: u64,
) -> Vec<NormInstance> {
    match policy {
        PendingPolicy::Ignore => instances,
        PendingPolicy::Violate | PendingPolicy::Comply => instances
            .into_iter()
            .map(|mut ins| {
                if ins.status.is_pending() {
                    ins.status = match policy {
                        PendingPolicy::Violate => InstanceStatus::Violated { at: horizon },
                        _ => InstanceStatus::Complied { at: horizon },
                    };
                }
                ins
            })
            .collect(),
    }
}

/// Plan utility: total value of satisfied goals minus total cost of
/// violated instances. Pending instances contribute nothing.
pub fn utility(problem: &Problem, satisfied: &BTreeSet<String>, instances: &[NormInstance]) -> i64 {
    let gained: i64 = satisfied
        .iter()
        .filter_map(|name| problem.goal(name))
        .map(|g| g.value as i64)
        .sum();
    let lost: i64 = instances
        .iter()
        .filter(|ins| ins.status.is_violated())
        .map(|ins| ins.norm.cost as i64)
        .sum();
    gained - lost
}
