//! AnsProlog emission and answer-set cross-validation.
//!
//! [`emit_base_program`] writes the computational counterpart of a problem
//! for a fixed horizon: state and initial-fluent facts, fluent inertia,
//! action/precondition rules, the execution choice rule, in-progress
//! bookkeeping, postcondition add/terminate rules, goal satisfaction, the
//! norm-instance lifecycle as normative fluents with `cmp`/`vol` outcomes,
//! the at-least-one-goal constraint and one concurrency-conflict
//! constraint per conflicting pair. [`emit_optimization`] appends the
//! utility-maximisation block. Output targets the clingo-family dialect,
//! one rule per line, deterministic and byte-stable for a fixed input.
//!
//! [`parse_answer_set`] extracts the schedule a solver model encodes and
//! [`cross_check`] replays it on the native engine, confirming plan
//! validity and utility agreement — the executable form of the program's
//! soundness/completeness correspondence.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::model::{FluentSet, NormKind, Problem};
use crate::semantics::{
    apply_pending_policy, conflicting_actions, resolve_norms, ComplianceMode, NormInstance,
    PendingPolicy, Schedule, ScheduleEntry,
};

const GENERATOR: &str = concat!("nplan-core ", env!("CARGO_PKG_VERSION"));

// ---------------------------------------------------------------------------
// Identifier mangling
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmitError {
    #[error("identifier `{0}` cannot be represented as a logic-program constant")]
    Unrepresentable(String),
    #[error("horizon must be ≥ 1")]
    HorizonZero,
}

/// Reversible lower-casing of model identifiers. The target syntax
/// reserves capitalised tokens for variables, so every name is folded to
/// lower case; names that collide after folding get numeric suffixes.
#[derive(Debug, Clone)]
pub struct Mangler {
    forward: BTreeMap<String, String>,
    reverse: BTreeMap<String, String>,
}

impl Mangler {
    pub fn new(problem: &Problem) -> Result<Mangler, EmitError> {
        let mut names: BTreeSet<&str> = BTreeSet::new();
        names.extend(problem.fluents().iter().map(String::as_str));
        names.extend(problem.actions().iter().map(|a| a.name.as_str()));
        names.extend(problem.goals().iter().map(|g| g.name.as_str()));
        names.extend(problem.norms().iter().map(|n| n.name.as_str()));

        let mut forward = BTreeMap::new();
        let mut reverse: BTreeMap<String, String> = BTreeMap::new();
        for name in names {
            let mut base = name.to_ascii_lowercase();
            if !base
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
            {
                return Err(EmitError::Unrepresentable(name.to_owned()));
            }
            if !base.starts_with(|c: char| c.is_ascii_lowercase()) {
                base.insert(0, 'u');
            }
            let mut candidate = base.clone();
            let mut suffix = 2;
            while reverse.contains_key(&candidate) {
                candidate = format!("{base}_{suffix}");
                suffix += 1;
            }
            reverse.insert(candidate.clone(), name.to_owned());
            forward.insert(name.to_owned(), candidate);
        }
        Ok(Mangler { forward, reverse })
    }

    pub fn mangle<'a>(&'a self, name: &'a str) -> &'a str {
        self.forward
            .get(name)
            .map(String::as_str)
            .unwrap_or(name)
    }

    pub fn unmangle(&self, mangled: &str) -> Option<&str> {
        self.reverse.get(mangled).map(String::as_str)
    }

    /// Entries whose mangled form differs from the original name.
    pub fn renames(&self) -> impl Iterator<Item = (&str, &str)> {
        self.forward
            .iter()
            .filter(|(k, v)| k.as_str() != v.as_str())
            .map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

/// An emitted program: comment header, base rules and (optionally) the
/// optimisation block.
#[derive(Debug, Clone)]
pub struct AspProgram {
    pub header: Vec<String>,
    pub base_rules: Vec<String>,
    pub optimization_rules: Vec<String>,
    pub horizon: u64,
}

impl AspProgram {
    pub fn with_optimization(mut self, rules: Vec<String>) -> AspProgram {
        self.optimization_rules = rules;
        self
    }

    /// Full program text, one rule per line, trailing newline.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for line in self
            .header
            .iter()
            .chain(self.base_rules.iter())
            .chain(self.optimization_rules.iter())
        {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

/// `EX(X,S)` expansion: positive literals become `holdsat(x,S)`, negative
/// ones `not holdsat(x,S)`.
fn ex_body(set: &crate::model::LiteralSet, mangler: &Mangler) -> String {
    let mut parts = Vec::new();
    for f in set.pos() {
        parts.push(format!("holdsat({},S)", mangler.mangle(f)));
    }
    for f in set.neg() {
        parts.push(format!("not holdsat({},S)", mangler.mangle(f)));
    }
    parts.join(", ")
}

/// Emit the base program for `problem` over states `0..=horizon`.
/// `label` is recorded in the comment header as the problem name.
pub fn emit_base_program(
    problem: &Problem,
    horizon: u64,
    label: &str,
) -> Result<AspProgram, EmitError> {
    if horizon == 0 {
        return Err(EmitError::HorizonZero);
    }
    let mangler = Mangler::new(problem)?;
    let mut header = vec![
        "% answer-set program for a normative practical reasoning problem".to_string(),
        format!("% problem: {label}"),
        format!("% horizon: {horizon}"),
        format!("% generator: {GENERATOR}"),
    ];
    for (original, mangled) in mangler.renames() {
        header.push(format!("% mangle: {original} -> {mangled}"));
    }

    let mut rules = Vec::new();

    // States and the initial situation.
    for k in 0..=horizon {
        rules.push(format!("state({k})."));
    }
    for f in problem.initial() {
        rules.push(format!("holdsat({},0).", mangler.mangle(f)));
    }

    // Fluents are inertial unless terminated.
    rules.push(
        "holdsat(X,S2) :- holdsat(X,S1), not terminated(X,S1), state(S1), state(S2), S2=S1+1."
            .to_string(),
    );

    // Actions and their preconditions.
    for a in problem.actions() {
        let name = mangler.mangle(&a.name);
        rules.push(format!("action({},{}).", name, a.duration));
        let body = ex_body(&a.pre, &mangler);
        if body.is_empty() {
            rules.push(format!("pre({name},S) :- state(S)."));
        } else {
            rules.push(format!("pre({name},S) :- {body}, state(S)."));
        }
    }

    // Execution choice, in-progress bookkeeping, precondition invariance,
    // and the single-agent same-start ban.
    rules.push("{executed(A,S)} :- action(A,D), state(S).".to_string());
    rules.push(
        "inprog(A,S2) :- executed(A,S1), action(A,D), state(S1), state(S2), S1<=S2, S2<S1+D."
            .to_string(),
    );
    rules.push(":- inprog(A,S), action(A,D), state(S), not pre(A,S).".to_string());
    rules.push(
        ":- executed(A1,S), executed(A2,S), A1!=A2, action(A1,D1), action(A2,D2), state(S)."
            .to_string(),
    );

    // Postconditions: adds land in the end state, deletes are terminated
    // in the state before the end state so inertia drops them at the end.
    for a in problem.actions() {
        let name = mangler.mangle(&a.name);
        let d = a.duration;
        for f in a.post.pos() {
            rules.push(format!(
                "holdsat({},S2) :- executed({name},S1), action({name},{d}), state(S1), state(S2), S2=S1+{d}.",
                mangler.mangle(f)
            ));
        }
        for f in a.post.neg() {
            rules.push(format!(
                "terminated({},S2) :- executed({name},S1), action({name},{d}), state(S1), state(S2), S2=S1+{d}-1.",
                mangler.mangle(f)
            ));
        }
    }

    // Goals.
    for g in problem.goals() {
        let name = mangler.mangle(&g.name);
        rules.push(format!("goal({},{}).", name, g.value));
        let body = ex_body(&g.requirements, &mangler);
        if body.is_empty() {
            rules.push(format!("satisfied({name},S) :- state(S)."));
        } else {
            rules.push(format!("satisfied({name},S) :- {body}, state(S)."));
        }
    }

    // Norms: one fact each, then the lifecycle blocks. The normative
    // fluent holds over the compliance window; cmp/vol terminate it.
    for n in problem.norms() {
        rules.push(format!("norm({},{}).", mangler.mangle(&n.name), n.cost));
    }
    for n in problem.norms() {
        let name = mangler.mangle(&n.name);
        let con = mangler.mangle(&n.condition);
        let sub = mangler.mangle(&n.subject);
        let dc = problem.action(&n.condition).expect("validated").duration;
        let ds = problem.action(&n.subject).expect("validated").duration;
        let dl = n.deadline;
        match n.kind {
            NormKind::Obligation => {
                rules.push(format!(
                    "holdsat(o({name},S1,{sub},{dl}+S2),S2) :- executed({con},S1), action({con},{dc}), S2=S1+{dc}, state(S1), state(S2)."
                ));
                rules.push(format!(
                    "cmp(o({name},S1,{sub},DL),S2) :- holdsat(o({name},S1,{sub},DL),S2), executed({sub},S2), action({sub},{ds}), state(S1), state(S2), S2!=DL."
                ));
                rules.push(format!(
                    "terminated(o({name},S1,{sub},DL),S2) :- cmp(o({name},S1,{sub},DL),S2), state(S1), state(S2)."
                ));
                rules.push(format!(
                    "vol(o({name},S1,{sub},DL),S2) :- holdsat(o({name},S1,{sub},DL),S2), DL=S2, state(S1), state(S2)."
                ));
                rules.push(format!(
                    "terminated(o({name},S1,{sub},DL),S2) :- vol(o({name},S1,{sub},DL),S2), state(S1), state(S2)."
                ));
            }
            NormKind::Prohibition => {
                rules.push(format!(
                    "holdsat(f({name},S1,{sub},{dl}+S2),S2) :- executed({con},S1), action({con},{dc}), S2=S1+{dc}, state(S1), state(S2)."
                ));
                rules.push(format!(
                    "cmp(f({name},S1,{sub},DL),S2) :- holdsat(f({name},S1,{sub},DL),S2), action({sub},{ds}), DL=S2, state(S1), state(S2)."
                ));
                rules.push(format!(
                    "terminated(f({name},S1,{sub},DL),S2) :- cmp(f({name},S1,{sub},DL),S2), state(S1), state(S2)."
                ));
                rules.push(format!(
                    "vol(f({name},S1,{sub},DL),S2) :- holdsat(f({name},S1,{sub},DL),S2), executed({sub},S2), state(S1), state(S2), S2!=DL."
                ));
                rules.push(format!(
                    "terminated(f({name},S1,{sub},DL),S2) :- vol(f({name},S1,{sub},DL),S2), state(S1), state(S2)."
                ));
            }
        }
    }

    // Plans must satisfy at least one goal.
    for g in problem.goals() {
        let name = mangler.mangle(&g.name);
        rules.push(format!("satisfied({name}) :- satisfied({name},S), state(S)."));
    }
    if problem.goals().is_empty() {
        rules.push("#false.".to_string());
    } else {
        let body: Vec<String> = problem
            .goals()
            .iter()
            .map(|g| format!("not satisfied({})", mangler.mangle(&g.name)))
            .collect();
        rules.push(format!(":- {}.", body.join(", ")));
    }

    // Concurrency conflicts. The in-progress pattern degenerates for a
    // self-conflicting action (inprog carries no multiplicity), so self
    // pairs ban overlapping starts instead.
    let conflicts = conflicting_actions(problem.actions());
    for (a, b) in conflicts.pairs() {
        if a == b {
            let d = problem.action(a).expect("validated").duration;
            let a = mangler.mangle(a);
            rules.push(format!(
                ":- executed({a},S1), executed({a},S2), action({a},{d}), S1<S2, S2<S1+{d}, state(S1), state(S2)."
            ));
        } else {
            let da = problem.action(a).expect("validated").duration;
            let db = problem.action(b).expect("validated").duration;
            let (a, b) = (mangler.mangle(a), mangler.mangle(b));
            rules.push(format!(
                ":- inprog({a},S), inprog({b},S), action({a},{da}), action({b},{db}), state(S)."
            ));
        }
    }

    Ok(AspProgram {
        header,
        base_rules: rules,
        optimization_rules: Vec::new(),
        horizon,
    })
}

/// The utility-maximisation block: summed goal values, violated-instance
/// projections for both norm kinds, summed costs, the utility difference
/// and the maximisation directive.
///
/// The sum aggregates carry the goal (respectively norm and activation
/// state) in their weighted tuples. Bare-weight tuples would collapse
/// under set semantics whenever two satisfied goals share a value or two
/// violated instances share a cost, under-counting the plan utility.
pub fn emit_optimization(_problem: &Problem) -> Vec<String> {
    vec![
        "value(TV) :- TV = #sum {V,G: goal(G,V), satisfied(G)}.".to_string(),
        "violated(N,S1) :- vol(o(N,S1,A,DL),S2), state(S1), state(S2).".to_string(),
        "violated(N,S1) :- vol(f(N,S1,A,DL),S2), state(S1), state(S2).".to_string(),
        "cost(TC) :- TC = #sum{C,N,S:violated(N,S),norm(N,C)}.".to_string(),
        "utility(TV-TC) :- value(TV), cost(TC).".to_string(),
        "#maximize {U:utility(U)}.".to_string(),
    ]
}

// ---------------------------------------------------------------------------
// Answer-set parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnswerSetError {
    #[error("malformed atom `{0}`")]
    Malformed(String),
    #[error("unknown action `{0}` in answer set")]
    UnknownAction(String),
    #[error(transparent)]
    Schedule(#[from] crate::semantics::ScheduleError),
}

/// One solver model: its raw atoms, the schedule encoded by `executed`
/// atoms and the reported utility, when present.
#[derive(Debug, Clone)]
pub struct AnswerSet {
    pub atoms: Vec<String>,
    pub schedule: Schedule,
    pub reported_utility: Option<i64>,
}

/// Parse one whitespace-separated atom list (the standard answer-set
/// print form). Action names are un-mangled back to model identifiers.
pub fn parse_answer_set(problem: &Problem, text: &str) -> Result<AnswerSet, AnswerSetError> {
    let mangler = Mangler::new(problem).expect("validated problems mangle cleanly");
    // Atom lists are sets; a repeated executed atom is one entry.
    let mut entries = BTreeSet::new();
    let mut reported_utility = None;
    let atoms: Vec<String> = text.split_whitespace().map(str::to_owned).collect();
    for atom in &atoms {
        if let Some(rest) = atom.strip_prefix("executed(") {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| AnswerSetError::Malformed(atom.clone()))?;
            let (name, time) = inner
                .split_once(',')
                .ok_or_else(|| AnswerSetError::Malformed(atom.clone()))?;
            let start: u64 = time
                .trim()
                .parse()
                .map_err(|_| AnswerSetError::Malformed(atom.clone()))?;
            let action = mangler
                .unmangle(name.trim())
                .ok_or_else(|| AnswerSetError::UnknownAction(name.trim().to_owned()))?;
            if problem.action(action).is_none() {
                return Err(AnswerSetError::UnknownAction(name.trim().to_owned()));
            }
            entries.insert(ScheduleEntry::new(action, start));
        } else if let Some(rest) = atom.strip_prefix("utility(") {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| AnswerSetError::Malformed(atom.clone()))?;
            let value: i64 = inner
                .trim()
                .parse()
                .map_err(|_| AnswerSetError::Malformed(atom.clone()))?;
            reported_utility = Some(value);
        }
    }
    Ok(AnswerSet {
        atoms,
        schedule: Schedule::new(entries.into_iter().collect())?,
        reported_utility,
    })
}

// ---------------------------------------------------------------------------
// Cross-checking
// ---------------------------------------------------------------------------

/// Outcome of replaying an answer set's schedule on the native engine.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub schedule: Schedule,
    pub valid: bool,
    pub issues: Vec<String>,
    pub satisfied: BTreeSet<String>,
    pub native_utility: Option<i64>,
    pub reported_utility: Option<i64>,
    pub utilities_match: Option<bool>,
}

/// Re-evaluate an extracted schedule natively and compare against the
/// reported utility. Mismatches and validity failures are report findings,
/// not errors.
///
/// Evaluation mirrors the emitted program at horizon `q` exactly: effects
/// of actions ending beyond `q` never materialise, preconditions and
/// conflicts are checked at states up to `q`, and only activations ending
/// by `q` instantiate norms. For schedules that finish within the horizon
/// this coincides with the plain plan semantics.
pub fn cross_check(
    problem: &Problem,
    horizon: u64,
    answer: &AnswerSet,
    mode: ComplianceMode,
    pending_policy: PendingPolicy,
) -> CheckReport {
    let schedule = &answer.schedule;
    let mut issues = Vec::new();

    for e in schedule.entries() {
        if e.start > horizon {
            issues.push(format!(
                "HorizonExceeded({}, {}): start lies beyond the final state",
                e.action, e.start
            ));
        }
    }

    // Concurrency conflicts: the earliest overlap of a conflicting pair is
    // always at the later start, which is itself within the horizon.
    let conflicts = conflicting_actions(problem.actions());
    let entries = schedule.entries();
    'outer: for (i, a) in entries.iter().enumerate() {
        let da = problem.action(&a.action).map(|x| x.duration).unwrap_or(1);
        for b in &entries[i + 1..] {
            if b.start >= a.start + da {
                break;
            }
            if conflicts.contains(&a.action, &b.action) {
                issues.push(format!(
                    "ConflictOverlap({}, {}, {}): conflicting actions overlap",
                    a.action, b.action, b.start
                ));
                break 'outer;
            }
        }
    }

    // Clamped trace.
    let states = clamped_states(problem, schedule, horizon);

    // Precondition invariance at states within the horizon.
    'pre: for k in 0..=horizon {
        for e in entries {
            let Some(action) = problem.action(&e.action) else {
                continue;
            };
            if e.start <= k && k < e.start + action.duration && k <= horizon
                && !action.pre.holds_in(&states[k as usize]) {
                    issues.push(format!(
                        "PreconditionFailure({}, {k}): precondition does not hold",
                        e.action
                    ));
                    break 'pre;
                }
        }
    }

    let satisfied: BTreeSet<String> = problem
        .goals()
        .iter()
        .filter(|g| states.iter().any(|s| g.requirements.holds_in(s)))
        .map(|g| g.name.clone())
        .collect();
    if satisfied.is_empty() {
        issues.push("NoGoalSatisfied: the schedule satisfies no goal".to_string());
    }

    // Norm instances: only activations whose window opens within the
    // horizon exist in the program.
    let instances: Vec<NormInstance> = crate::semantics::instantiate_norms(problem, schedule)
        .into_iter()
        .filter(|ins| ins.activation_end <= horizon)
        .collect();
    let instances = resolve_norms(problem, schedule, instances, mode, horizon);
    let instances = apply_pending_policy(instances, pending_policy, horizon);

    let valid = issues.is_empty();
    let native_utility = if valid {
        Some(crate::semantics::utility(problem, &satisfied, &instances))
    } else {
        None
    };
    let utilities_match = match (native_utility, answer.reported_utility) {
        (Some(n), Some(r)) => Some(n == r),
        _ => None,
    };

    CheckReport {
        schedule: schedule.clone(),
        valid,
        issues,
        satisfied,
        native_utility,
        reported_utility: answer.reported_utility,
        utilities_match,
    }
}

/// States `0..=horizon` with effects of actions ending past the horizon
/// dropped, mirroring the emitted program.
fn clamped_states(problem: &Problem, schedule: &Schedule, horizon: u64) -> Vec<FluentSet> {
    let mut ending_at: BTreeMap<u64, Vec<&ScheduleEntry>> = BTreeMap::new();
    for e in schedule.entries() {
        if let Some(action) = problem.action(&e.action) {
            let end = e.start + action.duration;
            if end <= horizon {
                ending_at.entry(end).or_default().push(e);
            }
        }
    }
    let mut states = Vec::with_capacity(horizon as usize + 1);
    states.push(problem.initial().clone());
    for k in 1..=horizon {
        let mut state = states[k as usize - 1].clone();
        if let Some(ending) = ending_at.get(&k) {
            for e in ending {
                let action = problem.action(&e.action).expect("known");
                for f in action.post.neg() {
                    state.remove(f);
                }
            }
            for e in ending {
                let action = problem.action(&e.action).expect("known");
                for f in action.post.pos() {
                    state.insert(f.clone());
                }
            }
        }
        states.push(state);
    }
    states
}

/// Convenience: check a natively produced plan schedule (not an answer
/// set) against the program semantics; used by the round-trip paths.
pub fn check_schedule(
    problem: &Problem,
    horizon: u64,
    schedule: Schedule,
    mode: ComplianceMode,
    pending_policy: PendingPolicy,
) -> CheckReport {
    let answer = AnswerSet {
        atoms: Vec::new(),
        schedule,
        reported_utility: None,
    };
    cross_check(problem, horizon, &answer, mode, pending_policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_problem;
    use crate::planner::{plan_report, SearchConfig};

    fn disaster() -> Problem {
        parse_problem(include_str!("../../../scenarios/disaster.nprp"))
            .unwrap()
            .0
    }

    #[test]
    fn state_facts_cover_horizon_inclusive() {
        let p = disaster();
        let prog = emit_base_program(&p, 2, "disaster").unwrap();
        let states: Vec<&String> = prog
            .base_rules
            .iter()
            .filter(|r| r.starts_with("state("))
            .collect();
        assert_eq!(states, vec!["state(0).", "state(1).", "state(2)."]);
    }

    #[test]
    fn norm_facts_present() {
        let p = disaster();
        let prog = emit_base_program(&p, 13, "disaster").unwrap();
        assert!(prog.base_rules.contains(&"norm(n1,5).".to_string()));
        assert!(prog.base_rules.contains(&"norm(n2,10).".to_string()));
    }

    #[test]
    fn conflict_constraint_for_evacuate_buildshelter() {
        let p = disaster();
        let prog = emit_base_program(&p, 13, "disaster").unwrap();
        assert!(prog
            .base_rules
            .iter()
            .any(|r| r.starts_with(":- inprog(buildshelter,S), inprog(evacuate,S)")));
    }

    #[test]
    fn one_conflict_constraint_per_pair() {
        let p = disaster();
        let prog = emit_base_program(&p, 4, "disaster").unwrap();
        let cf = conflicting_actions(p.actions());
        let constraints = prog
            .base_rules
            .iter()
            .filter(|r| r.starts_with(":- inprog(") || r.starts_with(":- executed("))
            .filter(|r| !r.contains("A1!=A2") && !r.contains("not pre(A,S)"))
            .count();
        assert_eq!(constraints, cf.len());
    }

    #[test]
    fn optimization_block_shape() {
        let p = disaster();
        let rules = emit_optimization(&p);
        assert_eq!(rules.last().unwrap(), "#maximize {U:utility(U)}.");
        assert!(rules.contains(&"utility(TV-TC) :- value(TV), cost(TC).".to_string()));
        let prog = emit_base_program(&p, 13, "disaster")
            .unwrap()
            .with_optimization(rules);
        assert!(prog.text().ends_with("#maximize {U:utility(U)}.\n"));
    }

    #[test]
    fn emission_is_byte_stable() {
        let p = disaster();
        let a = emit_base_program(&p, 13, "disaster").unwrap().text();
        let b = emit_base_program(&p, 13, "disaster").unwrap().text();
        assert_eq!(a, b);
    }

    #[test]
    fn mangling_collisions_get_suffixes() {
        let (p, _) = parse_problem(
            "
fluents: [theFlag, theflag]
initial: [theflag]
actions:
  - {name: set, duration: 1, pre: [], post: [theFlag]}
goals:
  - {name: g, value: 1, requirements: [theFlag]}
norms: []
",
        )
        .unwrap();
        let m = Mangler::new(&p).unwrap();
        let a = m.mangle("theFlag");
        let b = m.mangle("theflag");
        assert_ne!(a, b);
        assert_eq!(m.unmangle(a), Some("theFlag"));
        assert_eq!(m.unmangle(b), Some("theflag"));
        let prog = emit_base_program(&p, 2, "t").unwrap();
        assert!(prog.header.iter().any(|h| h.starts_with("% mangle: ")));
    }

    #[test]
    fn parse_answer_set_extracts_schedule_and_utility() {
        let p = disaster();
        let ans =
            parse_answer_set(&p, "executed(detectpoison,5) state(5) holdsat(wounded,0)").unwrap();
        assert_eq!(ans.schedule.entries().len(), 1);
        assert_eq!(ans.schedule.entries()[0].action, "detectPoison");
        assert_eq!(ans.schedule.entries()[0].start, 5);
        assert_eq!(ans.reported_utility, None);

        let ans = parse_answer_set(&p, "utility(43)").unwrap();
        assert_eq!(ans.reported_utility, Some(43));
        let ans = parse_answer_set(&p, "utility(-7)").unwrap();
        assert_eq!(ans.reported_utility, Some(-7));

        let err = parse_answer_set(&p, "executed(bogus,1)").unwrap_err();
        assert_eq!(err, AnswerSetError::UnknownAction("bogus".into()));
        let err = parse_answer_set(&p, "executed(detectpoison").unwrap_err();
        assert!(matches!(err, AnswerSetError::Malformed(_)));
    }

    #[test]
    fn cross_check_accepts_native_plan() {
        let p = disaster();
        let cfg = SearchConfig::new(13).unwrap();
        let schedule = Schedule::new(vec![
            ScheduleEntry::new("detectShock", 0),
            ScheduleEntry::new("evacuate", 1),
            ScheduleEntry::new("getMedicine", 2),
            ScheduleEntry::new("secure", 6),
            ScheduleEntry::new("buildShelter", 9),
        ])
        .unwrap();
        let report = plan_report(&p, &schedule, &cfg).unwrap();
        assert_eq!(report.utility, 43);

        let atoms: Vec<String> = schedule
            .entries()
            .iter()
            .map(|e| format!("executed({},{})", e.action.to_ascii_lowercase(), e.start))
            .chain(std::iter::once("utility(43)".to_string()))
            .collect();
        let ans = parse_answer_set(&p, &atoms.join(" ")).unwrap();
        let check = cross_check(&p, 13, &ans, ComplianceMode::StartOnly, PendingPolicy::Ignore);
        assert!(check.valid, "issues: {:?}", check.issues);
        assert_eq!(check.native_utility, Some(43));
        assert_eq!(check.utilities_match, Some(true));
    }

    #[test]
    fn cross_check_flags_conflict_overlap() {
        let p = disaster();
        let ans = parse_answer_set(
            &p,
            "executed(detectshock,0) executed(evacuate,1) executed(buildshelter,3)",
        )
        .unwrap();
        let check = cross_check(&p, 13, &ans, ComplianceMode::StartOnly, PendingPolicy::Ignore);
        assert!(!check.valid);
        assert!(check
            .issues
            .iter()
            .any(|i| i.starts_with("ConflictOverlap")));
    }

    #[test]
    fn cross_check_flags_empty_answer_set() {
        let p = disaster();
        let ans = parse_answer_set(&p, "").unwrap();
        let check = cross_check(&p, 13, &ans, ComplianceMode::StartOnly, PendingPolicy::Ignore);
        assert!(!check.valid);
        assert!(check.issues.iter().any(|i| i.contains("NoGoalSatisfied")));
    }

    #[test]
    fn cross_check_mirrors_horizon_clamping() {
        let p = disaster();
        // getMedicine at 0 satisfies a goal; a dangling detectShock at 13
        // (ends at 14) has no effect within the horizon and activates no
        // instance, exactly as in the program.
        let ans = parse_answer_set(&p, "executed(getmedicine,0) executed(detectshock,13)").unwrap();
        let check = cross_check(&p, 13, &ans, ComplianceMode::StartOnly, PendingPolicy::Ignore);
        assert!(check.valid, "issues: {:?}", check.issues);
        assert_eq!(check.native_utility, Some(25));
    }

    #[test]
    fn utility_mismatch_reported() {
        let p = disaster();
        let ans = parse_answer_set(&p, "executed(getmedicine,0) utility(99)").unwrap();
        let check = cross_check(&p, 13, &ans, ComplianceMode::StartOnly, PendingPolicy::Ignore);
        assert!(check.valid);
        assert_eq!(check.utilities_match, Some(false));
    }
}
