//! Domain types for normative planning problems and the `.nprp` file format.
//!
//! A problem document is a YAML mapping with top-level keys `fluents`,
//! `initial`, `actions`, `goals` and `norms`. Literals are fluent names,
//! optionally prefixed with `!` for negation. Parsing goes through two
//! layers: [`ProblemDoc`] mirrors the file verbatim, [`Problem`] is the
//! validated, immutable form the rest of the crate works with.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A state: the set of fluents true at a time point (closed world).
pub type FluentSet = BTreeSet<String>;

/// A fluent or its negation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Literal {
    pub fluent: String,
    pub positive: bool,
}

impl Literal {
    pub fn parse(text: &str) -> Result<Literal, String> {
        let (positive, name) = match text.strip_prefix('!') {
            Some(rest) => (false, rest),
            None => (true, text),
        };
        if !is_identifier(name) {
            return Err(format!("invalid identifier `{name}`"));
        }
        Ok(Literal {
            fluent: name.to_owned(),
            positive,
        })
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            write!(f, "!")?;
        }
        write!(f, "{}", self.fluent)
    }
}

/// A well-defined set of literals: no fluent occurs in both polarities.
///
/// Duplicate literals collapse silently; a contradiction is a hard error.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LiteralSet {
    pos: BTreeSet<String>,
    neg: BTreeSet<String>,
}

impl LiteralSet {
    pub fn from_literals<I: IntoIterator<Item = Literal>>(items: I) -> Result<Self, String> {
        let mut set = LiteralSet::default();
        for lit in items {
            let (target, other) = if lit.positive {
                (&mut set.pos, &set.neg)
            } else {
                (&mut set.neg, &set.pos)
            };
            if other.contains(&lit.fluent) {
                return Err(format!(
                    "ill-defined literal set: fluent `{}` appears both positively and negatively",
                    lit.fluent
                ));
            }
            target.insert(lit.fluent);
        }
        Ok(set)
    }

    /// Positive fluents in the set.
    pub fn pos(&self) -> &BTreeSet<String> {
        &self.pos
    }

    /// Fluents that occur negated in the set.
    pub fn neg(&self) -> &BTreeSet<String> {
        &self.neg
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty() && self.neg.is_empty()
    }

    /// All fluent names mentioned, either polarity.
    pub fn fluents(&self) -> impl Iterator<Item = &String> {
        self.pos.iter().chain(self.neg.iter())
    }

    /// Literals in a canonical order: positives first, each group sorted.
    pub fn literals(&self) -> Vec<Literal> {
        self.pos
            .iter()
            .map(|f| Literal {
                fluent: f.clone(),
                positive: true,
            })
            .chain(self.neg.iter().map(|f| Literal {
                fluent: f.clone(),
                positive: false,
            }))
            .collect()
    }

    /// `s ⊨ L`: every positive fluent present, no negated fluent present.
    pub fn holds_in(&self, state: &FluentSet) -> bool {
        self.pos.iter().all(|f| state.contains(f)) && self.neg.iter().all(|f| !state.contains(f))
    }
}

/// An action with invariant preconditions, end-applied postconditions and a
/// positive integer duration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DurativeAction {
    pub name: String,
    pub pre: LiteralSet,
    pub post: LiteralSet,
    pub duration: u64,
}

/// A valued achievement goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goal {
    pub name: String,
    pub requirements: LiteralSet,
    pub value: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Obligation,
    Prohibition,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::Obligation => write!(f, "obligation"),
            NormKind::Prohibition => write!(f, "prohibition"),
        }
    }
}

/// A conditional norm: executing `condition` opens a duty on `subject`
/// with a deadline relative to the end of the condition action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Norm {
    pub name: String,
    pub kind: NormKind,
    pub condition: String,
    pub subject: String,
    pub deadline: u64,
    pub cost: u64,
}

/// A validated planning problem. Immutable after construction; build one
/// with [`parse_problem`] or [`Problem::from_document`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    fluents: BTreeSet<String>,
    initial: FluentSet,
    actions: Vec<DurativeAction>,
    goals: Vec<Goal>,
    norms: Vec<Norm>,
}

impl Problem {
    pub fn fluents(&self) -> &BTreeSet<String> {
        &self.fluents
    }

    /// The initial state: fluents true at time 0, all others false.
    pub fn initial(&self) -> &FluentSet {
        &self.initial
    }

    /// Actions, sorted by name.
    pub fn actions(&self) -> &[DurativeAction] {
        &self.actions
    }

    /// Goals, sorted by name.
    pub fn goals(&self) -> &[Goal] {
        &self.goals
    }

    /// Norms, sorted by name.
    pub fn norms(&self) -> &[Norm] {
        &self.norms
    }

    pub fn action(&self, name: &str) -> Option<&DurativeAction> {
        self.actions
            .binary_search_by(|a| a.name.as_str().cmp(name))
            .ok()
            .map(|i| &self.actions[i])
    }

    pub fn goal(&self, name: &str) -> Option<&Goal> {
        self.goals
            .binary_search_by(|g| g.name.as_str().cmp(name))
            .ok()
            .map(|i| &self.goals[i])
    }

    /// Validate and freeze a raw document. Errors come back as the full
    /// validation report.
    pub fn from_document(doc: &ProblemDoc) -> Result<Problem, ValidationReport> {
        let report = validate_document(doc);
        if report.has_errors() {
            return Err(report);
        }
        let mut actions: Vec<DurativeAction> = doc
            .actions
            .iter()
            .map(|a| DurativeAction {
                name: a.name.clone(),
                pre: parse_literals(&a.pre).expect("validated"),
                post: parse_literals(&a.post).expect("validated"),
                duration: a.duration,
            })
            .collect();
        actions.sort_by(|x, y| x.name.cmp(&y.name));
        let mut goals: Vec<Goal> = doc
            .goals
            .iter()
            .map(|g| Goal {
                name: g.name.clone(),
                requirements: parse_literals(&g.requirements).expect("validated"),
                value: g.value,
            })
            .collect();
        goals.sort_by(|x, y| x.name.cmp(&y.name));
        let mut norms: Vec<Norm> = doc
            .norms
            .iter()
            .map(|n| Norm {
                name: n.name.clone(),
                kind: n.kind,
                condition: n.condition.clone(),
                subject: n.subject.clone(),
                deadline: n.deadline,
                cost: n.cost,
            })
            .collect();
        norms.sort_by(|x, y| x.name.cmp(&y.name));
        Ok(Problem {
            fluents: doc.fluents.iter().cloned().collect(),
            initial: doc.initial.iter().cloned().collect(),
            actions,
            goals,
            norms,
        })
    }

    /// The raw-document form of this problem, canonically ordered.
    pub fn to_document(&self) -> ProblemDoc {
        ProblemDoc {
            fluents: self.fluents.iter().cloned().collect(),
            initial: self.initial.iter().cloned().collect(),
            actions: self
                .actions
                .iter()
                .map(|a| ActionDoc {
                    name: a.name.clone(),
                    duration: a.duration,
                    pre: a.pre.literals().iter().map(Literal::to_string).collect(),
                    post: a.post.literals().iter().map(Literal::to_string).collect(),
                })
                .collect(),
            goals: self
                .goals
                .iter()
                .map(|g| GoalDoc {
                    name: g.name.clone(),
                    value: g.value,
                    requirements: g
                        .requirements
                        .literals()
                        .iter()
                        .map(Literal::to_string)
                        .collect(),
                })
                .collect(),
            norms: self
                .norms
                .iter()
                .map(|n| NormDoc {
                    name: n.name.clone(),
                    kind: n.kind,
                    condition: n.condition.clone(),
                    subject: n.subject.clone(),
                    deadline: n.deadline,
                    cost: n.cost,
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Raw document layer
// ---------------------------------------------------------------------------

/// Verbatim mirror of a problem file, prior to validation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    #[serde(default)]
    pub fluents: Vec<String>,
    #[serde(default)]
    pub initial: Vec<String>,
    #[serde(default)]
    pub actions: Vec<ActionDoc>,
    #[serde(default)]
    pub goals: Vec<GoalDoc>,
    #[serde(default)]
    pub norms: Vec<NormDoc>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDoc {
    pub name: String,
    pub duration: u64,
    #[serde(default)]
    pub pre: Vec<String>,
    #[serde(default)]
    pub post: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalDoc {
    pub name: String,
    pub value: u64,
    #[serde(default)]
    pub requirements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormDoc {
    pub name: String,
    pub kind: NormKind,
    pub condition: String,
    pub subject: String,
    pub deadline: u64,
    pub cost: u64,
}

fn parse_literals(texts: &[String]) -> Result<LiteralSet, String> {
    let mut lits = Vec::with_capacity(texts.len());
    for t in texts {
        lits.push(Literal::parse(t)?);
    }
    LiteralSet::from_literals(lits)
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// One validation finding, anchored to the field that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    fn error(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Error,
            field: field.into(),
            message: message.into(),
        });
    }

    fn warning(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Warning,
            field: field.into(),
            message: message.into(),
        });
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

/// Upper bound on durations, deadlines, values and costs. Keeps every
/// downstream sum and deadline computation far from integer overflow.
pub const MAX_MAGNITUDE: u64 = 1_000_000_000;

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_magnitude(report: &mut ValidationReport, field: String, value: u64) {
    if value > MAX_MAGNITUDE {
        report.error(field, format!("value exceeds the supported maximum {MAX_MAGNITUDE}"));
    }
}

fn check_name(report: &mut ValidationReport, field: &str, name: &str) {
    if !is_identifier(name) {
        report.error(field, format!("invalid identifier `{name}`"));
    }
}

fn check_literal_list(
    report: &mut ValidationReport,
    field: &str,
    texts: &[String],
    fluents: &BTreeSet<&str>,
) {
    for t in texts {
        match Literal::parse(t) {
            Ok(lit) => {
                if !fluents.contains(lit.fluent.as_str()) {
                    report.error(field, format!("unknown fluent `{}`", lit.fluent));
                }
            }
            Err(msg) => report.error(field, msg),
        }
    }
    if let Err(msg) = parse_literals(texts) {
        // Reported once per set even if several fluents contradict.
        if msg.starts_with("ill-defined") {
            report.error(field, msg);
        }
    }
}

/// Check every structural invariant of the model and collect findings.
///
/// Errors: invalid identifiers, duplicate names, unknown fluent or action
/// references, ill-defined literal sets, zero durations/values/costs, an
/// empty action set, initial fluents outside the universe. Warnings: an
/// empty goal set (no plan can exist), goals with empty requirements
/// (vacuously satisfied), norms with deadline 0 (empty compliance window),
/// norms whose subject equals their condition.
pub fn validate_document(doc: &ProblemDoc) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut fluents: BTreeSet<&str> = BTreeSet::new();
    for (i, fl) in doc.fluents.iter().enumerate() {
        let field = format!("fluents[{i}]");
        check_name(&mut report, &field, fl);
        if !fluents.insert(fl.as_str()) {
            report.error(&field, format!("duplicate fluent name `{fl}`"));
        }
    }

    let mut initial_seen: BTreeSet<&str> = BTreeSet::new();
    for (i, fl) in doc.initial.iter().enumerate() {
        let field = format!("initial[{i}]");
        if !fluents.contains(fl.as_str()) {
            report.error(&field, format!("unknown fluent `{fl}`"));
        }
        if !initial_seen.insert(fl.as_str()) {
            report.error(&field, format!("duplicate fluent name `{fl}`"));
        }
    }

    if doc.actions.is_empty() {
        report.error("actions", "action set must be non-empty");
    }
    let mut action_names: BTreeSet<&str> = BTreeSet::new();
    for (i, a) in doc.actions.iter().enumerate() {
        let field = format!("actions[{i}]");
        check_name(&mut report, &field, &a.name);
        if !action_names.insert(a.name.as_str()) {
            report.error(&field, format!("duplicate action name `{}`", a.name));
        }
        if a.duration == 0 {
            report.error(
                format!("{field}.duration"),
                "duration must be a positive integer",
            );
        }
        check_magnitude(&mut report, format!("{field}.duration"), a.duration);
        check_literal_list(&mut report, &format!("{field}.pre"), &a.pre, &fluents);
        check_literal_list(&mut report, &format!("{field}.post"), &a.post, &fluents);
    }

    if doc.goals.is_empty() {
        report.warning("goals", "empty goal set: no plan can exist");
    }
    let mut goal_names: BTreeSet<&str> = BTreeSet::new();
    for (i, g) in doc.goals.iter().enumerate() {
        let field = format!("goals[{i}]");
        check_name(&mut report, &field, &g.name);
        if !goal_names.insert(g.name.as_str()) {
            report.error(&field, format!("duplicate goal name `{}`", g.name));
        }
        if g.value == 0 {
            report.error(format!("{field}.value"), "value must be a positive integer");
        }
        check_magnitude(&mut report, format!("{field}.value"), g.value);
        if g.requirements.is_empty() {
            report.warning(
                &field,
                "goal has empty requirements: vacuously satisfied in every state",
            );
        }
        check_literal_list(
            &mut report,
            &format!("{field}.requirements"),
            &g.requirements,
            &fluents,
        );
    }

    let mut norm_names: BTreeSet<&str> = BTreeSet::new();
    for (i, n) in doc.norms.iter().enumerate() {
        let field = format!("norms[{i}]");
        check_name(&mut report, &field, &n.name);
        if !norm_names.insert(n.name.as_str()) {
            report.error(&field, format!("duplicate norm name `{}`", n.name));
        }
        if n.cost == 0 {
            report.error(format!("{field}.cost"), "cost must be a positive integer");
        }
        check_magnitude(&mut report, format!("{field}.cost"), n.cost);
        check_magnitude(&mut report, format!("{field}.deadline"), n.deadline);
        for (key, action) in [("condition", &n.condition), ("subject", &n.subject)] {
            if !action_names.contains(action.as_str()) {
                report.error(
                    format!("{field}.{key}"),
                    format!("unknown action `{action}`"),
                );
            }
        }
        if n.deadline == 0 {
            report.warning(
                format!("{field}.deadline"),
                "deadline 0 gives an empty compliance window",
            );
        }
        if n.subject == n.condition {
            report.warning(
                &field,
                "norm subject equals its condition action",
            );
        }
    }

    report
}

// ---------------------------------------------------------------------------
// Parsing and serialization
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ProblemError {
    /// The document is not syntactically valid YAML / does not match the
    /// schema. Location (line/column) is included when available.
    #[error("syntax error: {0}")]
    Syntax(String),
    /// The document parsed but violates model invariants.
    #[error("invalid problem:\n{0}")]
    Invalid(ValidationReport),
}

/// Parse the raw document layer only.
pub fn parse_document(text: &str) -> Result<ProblemDoc, ProblemError> {
    serde_yaml::from_str(text).map_err(|e| ProblemError::Syntax(e.to_string()))
}

/// Re-run structural validation on an already-built problem. Problems
/// constructed through [`parse_problem`] or [`Problem::from_document`]
/// carry no errors by construction; warnings may remain.
pub fn validate_problem(problem: &Problem) -> ValidationReport {
    validate_document(&problem.to_document())
}

/// Parse and validate a problem file. Returns the problem along with any
/// validation warnings; errors reject the document.
pub fn parse_problem(text: &str) -> Result<(Problem, Vec<Finding>), ProblemError> {
    let doc = parse_document(text)?;
    let report = validate_document(&doc);
    if report.has_errors() {
        return Err(ProblemError::Invalid(report));
    }
    let warnings = report.findings;
    let problem = Problem::from_document(&doc).expect("no errors");
    Ok((problem, warnings))
}

/// Serialize a problem back to the document format. Round-trips through
/// [`parse_problem`] field-for-field.
pub fn serialize_problem(problem: &Problem) -> String {
    serde_yaml::to_string(&problem.to_document()).expect("document serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const DISASTER: &str = include_str!("../../../scenarios/disaster.nprp");

    #[test]
    fn disaster_scenario_parses_clean() {
        let (p, warnings) = parse_problem(DISASTER).expect("scenario parses");
        assert!(warnings.is_empty(), "unexpected warnings: {warnings:?}");
        assert_eq!(p.actions().len(), 7);
        assert_eq!(p.goals().len(), 2);
        assert_eq!(p.norms().len(), 2);
        assert_eq!(p.initial().len(), 5);
        assert_eq!(p.fluents().len(), 12);
        let build = p.action("buildShelter").unwrap();
        assert_eq!(build.duration, 4);
        assert!(build.post.neg().contains("evacuated"));
    }

    #[test]
    fn empty_goal_list_warns() {
        let text = "
fluents: [p]
initial: [p]
actions:
  - {name: a, duration: 1, pre: [], post: []}
goals: []
norms: []
";
        let (p, warnings) = parse_problem(text).unwrap();
        assert!(p.goals().is_empty());
        assert!(warnings.iter().any(|w| w.message.contains("empty goal set")));
    }

    #[test]
    fn contradictory_pre_is_ill_defined() {
        let text = "
fluents: [evacuated]
initial: []
actions:
  - {name: buildShelter, duration: 4, pre: [evacuated, '!evacuated'], post: []}
goals: []
norms: []
";
        let err = parse_problem(text).unwrap_err();
        match err {
            ProblemError::Invalid(report) => {
                assert!(report
                    .errors()
                    .any(|e| e.message.contains("ill-defined literal set")));
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn zero_duration_is_an_error() {
        let mut doc = parse_document(DISASTER).unwrap();
        doc.actions[0].duration = 0;
        let report = validate_document(&doc);
        assert!(report
            .errors()
            .any(|e| e.message.contains("duration must be a positive integer")));
    }

    #[test]
    fn zero_deadline_warns_empty_window() {
        let mut doc = parse_document(DISASTER).unwrap();
        doc.norms[1].deadline = 0;
        let report = validate_document(&doc);
        assert!(!report.has_errors());
        assert!(report
            .warnings()
            .any(|w| w.message.contains("empty compliance window")));
    }

    #[test]
    fn duplicate_action_names_rejected() {
        let text = "
fluents: [p]
initial: []
actions:
  - {name: a, duration: 1, pre: [], post: [p]}
  - {name: a, duration: 2, pre: [], post: []}
goals:
  - {name: g, value: 1, requirements: [p]}
norms: []
";
        let err = parse_problem(text).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn unknown_fluent_reference_rejected() {
        let text = "
fluents: [p]
initial: []
actions:
  - {name: a, duration: 1, pre: [q], post: [p]}
goals: []
norms: []
";
        let err = parse_problem(text).unwrap_err();
        assert!(err.to_string().contains("unknown fluent `q`"));
    }

    #[test]
    fn syntax_error_reports_location() {
        let err = parse_problem("fluents: [p\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("syntax error"));
        assert!(msg.contains("line"), "no location in: {msg}");
    }

    #[test]
    fn round_trip_is_identity() {
        let (p, _) = parse_problem(DISASTER).unwrap();
        let text = serialize_problem(&p);
        let (p2, _) = parse_problem(&text).unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn oversized_magnitudes_rejected() {
        let mut doc = parse_document(DISASTER).unwrap();
        doc.actions[0].duration = MAX_MAGNITUDE + 1;
        doc.norms[0].deadline = u64::MAX;
        let report = validate_document(&doc);
        assert_eq!(
            report
                .errors()
                .filter(|e| e.message.contains("supported maximum"))
                .count(),
            2
        );
    }

    #[test]
    fn built_problems_validate_clean() {
        let (p, _) = parse_problem(DISASTER).unwrap();
        let report = validate_problem(&p);
        assert!(!report.has_errors());
        assert_eq!(report.warnings().count(), 0);
    }
}
