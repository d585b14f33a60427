//! Plan enumeration and utility-maximal search.
//!
//! [`enumerate_plans`] streams every valid plan up to a horizon in a fixed
//! depth-first order over time points: at most one action may start per
//! time point, every action must finish within the horizon, conflicting
//! pairs may not overlap, preconditions must hold throughout execution and
//! at least one goal must be satisfied. Branches die as soon as a
//! precondition fails or a conflict overlap would be created.
//!
//! [`optimal_plans`] runs the same search as branch-and-bound: an
//! admissible upper bound (utility so far plus the value of every goal not
//! yet satisfied but still reachable under a delete-relaxation) prunes
//! subtrees that cannot attain the best known utility; an initial greedy
//! dive seeds the incumbent so pruning bites early. Pruned and unpruned
//! search return the same result by construction, which the test suite
//! checks against [`enumerate_naive`], a brute-force enumerator over raw
//! start assignments kept deliberately free of the incremental machinery.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::model::Problem;
use crate::semantics::{
    apply_pending_policy, conflicting_actions, instantiate_norms, makespan, resolve_norms,
    satisfied_goals, simulate, utility, ComplianceMode, InstanceStatus, NormInstance,
    PendingPolicy, Schedule, ScheduleEntry, SimulationError,
};

/// Hard cap on configurable horizons; search materialises one state per
/// time point and recurses once per time point.
pub const MAX_HORIZON: u64 = 4096;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("horizon must be ≥ 1")]
    HorizonZero,
    #[error("horizon must be ≤ {MAX_HORIZON}")]
    HorizonTooLarge,
}

/// Search parameters shared by the enumeration and optimisation entry
/// points.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub horizon: u64,
    pub mode: ComplianceMode,
    pub pending_policy: PendingPolicy,
    pub max_plans: Option<usize>,
    pub time_budget: Option<Duration>,
    /// Only yield plans with at least this utility; lets the enumerator
    /// prune subtrees whose admissible bound falls below the floor.
    pub min_utility: Option<i64>,
}

impl SearchConfig {
    pub fn new(horizon: u64) -> Result<SearchConfig, ConfigError> {
        if horizon == 0 {
            return Err(ConfigError::HorizonZero);
        }
        if horizon > MAX_HORIZON {
            return Err(ConfigError::HorizonTooLarge);
        }
        Ok(SearchConfig {
            horizon,
            mode: ComplianceMode::default(),
            pending_policy: PendingPolicy::default(),
            max_plans: None,
            time_budget: None,
            min_utility: None,
        })
    }

    pub fn with_mode(mut self, mode: ComplianceMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_pending_policy(mut self, policy: PendingPolicy) -> Self {
        self.pending_policy = policy;
        self
    }

    pub fn with_max_plans(mut self, cap: usize) -> Self {
        self.max_plans = Some(cap);
        self
    }

    pub fn with_time_budget(mut self, budget: Duration) -> Self {
        self.time_budget = Some(budget);
        self
    }

    pub fn with_min_utility(mut self, floor: i64) -> Self {
        self.min_utility = Some(floor);
        self
    }
}

/// A validated plan with its goal, norm and utility accounting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlanReport {
    pub schedule: Schedule,
    pub satisfied: BTreeSet<String>,
    pub complied: Vec<NormInstance>,
    pub violated: Vec<NormInstance>,
    pub pending: Vec<NormInstance>,
    pub utility: i64,
    pub makespan: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error("no goal satisfied")]
    NoGoalSatisfied,
}

/// Evaluate a schedule against the full plan contract: simulate it at the
/// configured horizon, require at least one satisfied goal, resolve norm
/// instances and account utility.
pub fn plan_report(
    problem: &Problem,
    schedule: &Schedule,
    cfg: &SearchConfig,
) -> Result<PlanReport, PlanError> {
    let trace = simulate(problem, schedule, cfg.horizon)?;
    let satisfied = satisfied_goals(&trace, problem.goals());
    if satisfied.is_empty() {
        return Err(PlanError::NoGoalSatisfied);
    }
    let instances = resolve_norms(
        problem,
        schedule,
        instantiate_norms(problem, schedule),
        cfg.mode,
        cfg.horizon,
    );
    let instances = apply_pending_policy(instances, cfg.pending_policy, cfg.horizon);
    let utility = utility(problem, &satisfied, &instances);
    let mut complied = Vec::new();
    let mut violated = Vec::new();
    let mut pending = Vec::new();
    for ins in instances {
        match ins.status {
            InstanceStatus::Complied { .. } => complied.push(ins),
            InstanceStatus::Violated { .. } => violated.push(ins),
            InstanceStatus::Pending => pending.push(ins),
        }
    }
    Ok(PlanReport {
        schedule: schedule.clone(),
        satisfied,
        complied,
        violated,
        pending,
        utility,
        makespan: makespan(schedule, problem).expect("simulated"),
    })
}

// ---------------------------------------------------------------------------
// Incremental search engine
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct InProgress {
    action: usize,
    end: u64,
}

#[derive(Debug, Clone, Copy)]
struct Instance {
    norm: usize,
    deadline_abs: u64,
    status: InstanceStatus,
}

struct ActionInfo {
    duration: u64,
    pre_pos: Vec<usize>,
    pre_neg: Vec<usize>,
    post_pos: Vec<usize>,
    post_neg: Vec<usize>,
    /// Norms whose condition action this is.
    activates: Vec<usize>,
}

struct GoalInfo {
    req_pos: Vec<usize>,
    req_neg: Vec<usize>,
    value: i64,
}

struct NormInfo {
    kind: crate::model::NormKind,
    subject: usize,
    deadline: u64,
    cost: i64,
}

struct Checkpoint {
    now: u64,
    states_len: usize,
    entries_len: usize,
    instances_len: usize,
    journal_len: usize,
    in_progress: Vec<InProgress>,
    live: Vec<usize>,
    openings: Vec<(usize, u64)>,
    satisfied: Vec<bool>,
    sat_value: i64,
    viol_cost: i64,
}

struct Engine<'a> {
    problem: &'a Problem,
    cfg: &'a SearchConfig,
    actions: Vec<ActionInfo>,
    goals: Vec<GoalInfo>,
    norms: Vec<NormInfo>,
    conflict: Vec<Vec<bool>>,
    fluent_count: usize,

    now: u64,
    states: Vec<Vec<bool>>,
    entries: Vec<(usize, u64)>,
    in_progress: Vec<InProgress>,
    instances: Vec<Instance>,
    live: Vec<usize>,
    openings: Vec<(usize, u64)>,
    satisfied: Vec<bool>,
    sat_value: i64,
    viol_cost: i64,
    journal: Vec<(usize, InstanceStatus)>,
    nodes: u64,
}

impl<'a> Engine<'a> {
    fn new(problem: &'a Problem, cfg: &'a SearchConfig) -> Engine<'a> {
        let fluent_idx: std::collections::BTreeMap<&str, usize> = problem
            .fluents()
            .iter()
            .enumerate()
            .map(|(i, f)| (f.as_str(), i))
            .collect();
        let idx_of = |name: &String| fluent_idx[name.as_str()];
        let action_idx: std::collections::BTreeMap<&str, usize> = problem
            .actions()
            .iter()
            .enumerate()
            .map(|(i, a)| (a.name.as_str(), i))
            .collect();

        let norms: Vec<NormInfo> = problem
            .norms()
            .iter()
            .map(|n| NormInfo {
                kind: n.kind,
                subject: action_idx[n.subject.as_str()],
                deadline: n.deadline,
                cost: n.cost as i64,
            })
            .collect();

        let actions: Vec<ActionInfo> = problem
            .actions()
            .iter()
            .enumerate()
            .map(|(ai, a)| ActionInfo {
                duration: a.duration,
                pre_pos: a.pre.pos().iter().map(idx_of).collect(),
                pre_neg: a.pre.neg().iter().map(idx_of).collect(),
                post_pos: a.post.pos().iter().map(idx_of).collect(),
                post_neg: a.post.neg().iter().map(idx_of).collect(),
                activates: problem
                    .norms()
                    .iter()
                    .enumerate()
                    .filter(|(_, n)| action_idx[n.condition.as_str()] == ai)
                    .map(|(ni, _)| ni)
                    .collect(),
            })
            .collect();

        let goals: Vec<GoalInfo> = problem
            .goals()
            .iter()
            .map(|g| GoalInfo {
                req_pos: g.requirements.pos().iter().map(idx_of).collect(),
                req_neg: g.requirements.neg().iter().map(idx_of).collect(),
                value: g.value as i64,
            })
            .collect();

        let cf = conflicting_actions(problem.actions());
        let n = problem.actions().len();
        let mut conflict = vec![vec![false; n]; n];
        for (i, a) in problem.actions().iter().enumerate() {
            for (j, b) in problem.actions().iter().enumerate() {
                conflict[i][j] = cf.contains(&a.name, &b.name);
            }
        }

        let mut initial = vec![false; problem.fluents().len()];
        for f in problem.initial() {
            initial[fluent_idx[f.as_str()]] = true;
        }

        let mut engine = Engine {
            problem,
            cfg,
            actions,
            goals,
            norms,
            conflict,
            fluent_count: problem.fluents().len(),
            now: 0,
            states: vec![initial],
            entries: Vec::new(),
            in_progress: Vec::new(),
            instances: Vec::new(),
            live: Vec::new(),
            openings: Vec::new(),
            satisfied: vec![false; problem.goals().len()],
            sat_value: 0,
            viol_cost: 0,
            journal: Vec::new(),
            nodes: 0,
        };
        engine.update_goals();
        engine
    }

    fn state(&self) -> &[bool] {
        self.states.last().expect("one state per time point")
    }

    fn update_goals(&mut self) {
        let state = self.states.last().expect("state");
        for (gi, g) in self.goals.iter().enumerate() {
            if !self.satisfied[gi]
                && g.req_pos.iter().all(|&f| state[f])
                && g.req_neg.iter().all(|&f| !state[f])
            {
                self.satisfied[gi] = true;
                self.sat_value += g.value;
            }
        }
    }

    /// Actions startable at the current time point, ascending by index
    /// (actions are stored sorted by name).
    fn startable(&self) -> Vec<usize> {
        let state = self.state();
        (0..self.actions.len())
            .filter(|&ai| {
                let a = &self.actions[ai];
                self.now + a.duration <= self.cfg.horizon
                    && a.pre_pos.iter().all(|&f| state[f])
                    && a.pre_neg.iter().all(|&f| !state[f])
                    && self
                        .in_progress
                        .iter()
                        .all(|ip| !self.conflict[ai][ip.action])
            })
            .collect()
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            now: self.now,
            states_len: self.states.len(),
            entries_len: self.entries.len(),
            instances_len: self.instances.len(),
            journal_len: self.journal.len(),
            in_progress: self.in_progress.clone(),
            live: self.live.clone(),
            openings: self.openings.clone(),
            satisfied: self.satisfied.clone(),
            sat_value: self.sat_value,
            viol_cost: self.viol_cost,
        }
    }

    fn undo(&mut self, cp: Checkpoint) {
        for (idx, old) in self.journal.drain(cp.journal_len..).rev().collect::<Vec<_>>() {
            self.instances[idx].status = old;
        }
        self.now = cp.now;
        self.states.truncate(cp.states_len);
        self.entries.truncate(cp.entries_len);
        self.instances.truncate(cp.instances_len);
        self.in_progress = cp.in_progress;
        self.live = cp.live;
        self.openings = cp.openings;
        self.satisfied = cp.satisfied;
        self.sat_value = cp.sat_value;
        self.viol_cost = cp.viol_cost;
    }

    /// Start an action at the current time point. The caller must have
    /// checked preconditions, conflicts and horizon fit via [`startable`].
    fn start_action(&mut self, ai: usize) {
        let t = self.now;
        let duration = self.actions[ai].duration;
        self.entries.push((ai, t));
        self.in_progress.push(InProgress {
            action: ai,
            end: t + duration,
        });

        // A start can discharge several live instances at once; each
        // instance resolves independently and only once.
        let mut i = 0;
        while i < self.live.len() {
            let idx = self.live[i];
            let ins = self.instances[idx];
            let info = &self.norms[ins.norm];
            let qualifies = info.subject == ai
                && match self.cfg.mode {
                    ComplianceMode::StartOnly => true,
                    ComplianceMode::StartAndEnd => t + duration < ins.deadline_abs,
                };
            if qualifies {
                self.journal.push((idx, ins.status));
                self.instances[idx].status = match info.kind {
                    crate::model::NormKind::Obligation => InstanceStatus::Complied { at: t },
                    crate::model::NormKind::Prohibition => {
                        self.viol_cost += info.cost;
                        InstanceStatus::Violated { at: t }
                    }
                };
                self.live.swap_remove(i);
            } else {
                i += 1;
            }
        }

        for k in 0..self.actions[ai].activates.len() {
            let ni = self.actions[ai].activates[k];
            let activation_end = t + duration;
            self.instances.push(Instance {
                norm: ni,
                deadline_abs: self.norms[ni].deadline + activation_end,
                status: InstanceStatus::Pending,
            });
            self.openings.push((self.instances.len() - 1, activation_end));
        }
    }

    /// Advance one time point: apply the transition for ending actions,
    /// enforce precondition invariance for in-progress ones, open and
    /// expire compliance windows, refresh goal satisfaction. Returns false
    /// when the branch dies (caller restores the checkpoint).
    fn advance(&mut self) -> bool {
        self.now += 1;
        self.nodes += 1;
        let now = self.now;
        let mut state = self.states.last().expect("state").clone();
        for ip in &self.in_progress {
            if ip.end == now {
                for &f in &self.actions[ip.action].post_neg {
                    state[f] = false;
                }
            }
        }
        for ip in &self.in_progress {
            if ip.end == now {
                for &f in &self.actions[ip.action].post_pos {
                    state[f] = true;
                }
            }
        }
        self.in_progress.retain(|ip| ip.end > now);
        let alive = self.in_progress.iter().all(|ip| {
            let a = &self.actions[ip.action];
            a.pre_pos.iter().all(|&f| state[f]) && a.pre_neg.iter().all(|&f| !state[f])
        });
        self.states.push(state);
        if !alive {
            return false;
        }

        let mut i = 0;
        while i < self.openings.len() {
            if self.openings[i].1 == now {
                self.live.push(self.openings[i].0);
                self.openings.swap_remove(i);
            } else {
                i += 1;
            }
        }
        // Expiry wins over any start at the same time point: windows are
        // half-open, so starts at the deadline no longer discharge.
        let mut i = 0;
        while i < self.live.len() {
            let idx = self.live[i];
            let ins = self.instances[idx];
            if ins.deadline_abs == now {
                let info = &self.norms[ins.norm];
                self.journal.push((idx, ins.status));
                self.instances[idx].status = match info.kind {
                    crate::model::NormKind::Obligation => {
                        self.viol_cost += info.cost;
                        InstanceStatus::Violated { at: now }
                    }
                    crate::model::NormKind::Prohibition => InstanceStatus::Complied { at: now },
                };
                self.live.swap_remove(i);
            } else {
                i += 1;
            }
        }
        self.update_goals();
        true
    }

    fn any_goal_satisfied(&self) -> bool {
        self.satisfied.iter().any(|&s| s)
    }

    /// Leaf utility under the configured pending policy, or None when no
    /// goal was satisfied (not a plan).
    fn leaf_utility(&self) -> Option<i64> {
        if !self.any_goal_satisfied() {
            return None;
        }
        let mut u = self.sat_value - self.viol_cost;
        if self.cfg.pending_policy == PendingPolicy::Violate {
            u -= self
                .instances
                .iter()
                .filter(|ins| ins.status.is_pending())
                .map(|ins| self.norms[ins.norm].cost)
                .sum::<i64>();
        }
        Some(u)
    }

    fn schedule(&self) -> Schedule {
        Schedule::new(
            self.entries
                .iter()
                .map(|&(ai, t)| ScheduleEntry::new(self.problem.actions()[ai].name.clone(), t))
                .collect(),
        )
        .expect("starts strictly increase by construction")
    }

    /// Build the leaf's report and assert it against the pure semantics
    /// pipeline; every yielded plan passes this independent re-check.
    fn leaf_report(&self) -> Option<PlanReport> {
        let expected = self.leaf_utility()?;
        let schedule = self.schedule();
        let report = plan_report(self.problem, &schedule, self.cfg)
            .expect("engine yielded a schedule the trace engine rejects");
        assert_eq!(
            report.utility, expected,
            "engine and trace engine disagree on utility of {schedule}",
        );
        assert_eq!(
            report.complied.len() + report.violated.len() + report.pending.len(),
            self.instances.len(),
            "instance count mismatch for {schedule}",
        );
        Some(report)
    }

    /// Admissible upper bound on the utility of any completion of the
    /// current prefix: utility so far plus the value of each unsatisfied
    /// goal that is still reachable by the horizon under a delete
    /// relaxation (deletes, conflicts and the one-start-per-time rule are
    /// ignored, which can only overestimate). Violation costs only ever
    /// decrease utility, so they are not added back.
    fn upper_bound(&self) -> i64 {
        let mut bound = self.sat_value - self.viol_cost;
        let unsat: Vec<usize> = (0..self.goals.len())
            .filter(|&g| !self.satisfied[g])
            .collect();
        if unsat.is_empty() {
            return bound;
        }

        let horizon = self.cfg.horizon;
        let mut earliest: Vec<Option<u64>> = vec![None; self.fluent_count];
        for (f, &held) in self.state().iter().enumerate() {
            if held {
                earliest[f] = Some(self.now);
            }
        }
        for ip in &self.in_progress {
            for &f in &self.actions[ip.action].post_pos {
                if earliest[f].is_none_or(|e| ip.end < e) {
                    earliest[f] = Some(ip.end);
                }
            }
        }
        loop {
            let mut changed = false;
            for a in &self.actions {
                let est = a
                    .pre_pos
                    .iter()
                    .try_fold(self.now, |acc, &f| earliest[f].map(|e| acc.max(e)));
                let Some(est) = est else { continue };
                let end = est + a.duration;
                if end > horizon {
                    continue;
                }
                for &f in &a.post_pos {
                    if earliest[f].is_none_or(|e| end < e) {
                        earliest[f] = Some(end);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let deletable = |f: usize| -> bool {
            self.in_progress
                .iter()
                .any(|ip| self.actions[ip.action].post_neg.contains(&f))
                || self.actions.iter().any(|a| {
                    if !a.post_neg.contains(&f) {
                        return false;
                    }
                    let est = a
                        .pre_pos
                        .iter()
                        .try_fold(self.now, |acc, &p| earliest[p].map(|e| acc.max(e)));
                    est.is_some_and(|est| est + a.duration <= horizon)
                })
        };

        for g in unsat {
            let info = &self.goals[g];
            let pos_ok = info
                .req_pos
                .iter()
                .all(|&f| earliest[f].is_some_and(|e| e <= horizon));
            let neg_ok = info
                .req_neg
                .iter()
                .all(|&f| !self.state()[f] || deletable(f));
            if pos_ok && neg_ok {
                bound += info.value;
            }
        }
        bound
    }
}

// ---------------------------------------------------------------------------
// Streaming enumeration
// ---------------------------------------------------------------------------

struct Frame {
    choices: Vec<Option<usize>>,
    next: usize,
    cp: Checkpoint,
}

/// Iterator over every valid plan, in a fixed canonical depth-first order
/// over time points (the no-start branch first, then actions by name).
pub struct PlanStream<'a> {
    engine: Engine<'a>,
    stack: Vec<Frame>,
    deadline: Option<Instant>,
    yielded: usize,
    budget_exhausted: bool,
    capped: bool,
}

impl<'a> PlanStream<'a> {
    fn new(problem: &'a Problem, cfg: &'a SearchConfig) -> PlanStream<'a> {
        let engine = Engine::new(problem, cfg);
        let cp = engine.checkpoint();
        let choices = choices_of(&engine);
        PlanStream {
            engine,
            stack: vec![Frame {
                choices,
                next: 0,
                cp,
            }],
            deadline: cfg.time_budget.map(|b| Instant::now() + b),
            yielded: 0,
            budget_exhausted: false,
            capped: false,
        }
    }

    /// True when the stream stopped early on the time budget or plan cap;
    /// everything yielded so far is still valid.
    pub fn truncated(&self) -> bool {
        self.budget_exhausted || self.capped
    }

    /// True when the time budget ran out before the search space was
    /// exhausted.
    pub fn budget_exhausted(&self) -> bool {
        self.budget_exhausted
    }

    pub fn nodes_explored(&self) -> u64 {
        self.engine.nodes
    }
}

fn choices_of(engine: &Engine<'_>) -> Vec<Option<usize>> {
    let mut choices = vec![None];
    choices.extend(engine.startable().into_iter().map(Some));
    choices
}

impl Iterator for PlanStream<'_> {
    type Item = PlanReport;

    fn next(&mut self) -> Option<PlanReport> {
        if self.budget_exhausted || self.capped {
            return None;
        }
        if let Some(cap) = self.engine.cfg.max_plans {
            if self.yielded >= cap {
                self.capped = true;
                self.stack.clear();
                return None;
            }
        }
        loop {
            if self.engine.nodes.is_multiple_of(1024) {
                if let Some(deadline) = self.deadline {
                    if Instant::now() >= deadline {
                        self.budget_exhausted = true;
                        self.stack.clear();
                        return None;
                    }
                }
            }
            self.engine.nodes += 1;
            let frame = self.stack.last_mut()?;
            if frame.next >= frame.choices.len() {
                let frame = self.stack.pop().expect("nonempty");
                self.engine.undo(frame.cp);
                continue;
            }
            let choice = frame.choices[frame.next];
            frame.next += 1;

            let cp = self.engine.checkpoint();
            if let Some(ai) = choice {
                self.engine.start_action(ai);
            }
            let alive = self.engine.advance()
                && self
                    .engine
                    .cfg
                    .min_utility
                    .is_none_or(|floor| self.engine.upper_bound() >= floor);
            if alive {
                if self.engine.now == self.engine.cfg.horizon {
                    let report = self
                        .engine
                        .leaf_report()
                        .filter(|r| self.engine.cfg.min_utility.is_none_or(|f| r.utility >= f));
                    self.engine.undo(cp);
                    if let Some(report) = report {
                        self.yielded += 1;
                        return Some(report);
                    }
                } else {
                    let choices = choices_of(&self.engine);
                    self.stack.push(Frame {
                        choices,
                        next: 0,
                        cp,
                    });
                }
            } else {
                self.engine.undo(cp);
            }
        }
    }
}

/// Stream every plan for `problem` up to the configured horizon.
pub fn enumerate_plans<'a>(problem: &'a Problem, cfg: &'a SearchConfig) -> PlanStream<'a> {
    PlanStream::new(problem, cfg)
}

// ---------------------------------------------------------------------------
// Optimal search
// ---------------------------------------------------------------------------

/// The utility-maximal plan set.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalResult {
    /// None exactly when no plan exists.
    pub max_utility: Option<i64>,
    pub plans: Vec<PlanReport>,
    /// False when the time budget cut the search short, in which case
    /// the result is the best found so far rather than a proven optimum.
    pub certified: bool,
}

struct OptSearch<'e, 'a> {
    engine: &'e mut Engine<'a>,
    best: i64,
    found: Vec<Vec<(usize, u64)>>,
    deadline: Option<Instant>,
    truncated: bool,
    plan_cap: Option<usize>,
}

impl OptSearch<'_, '_> {
    fn run(&mut self) {
        if self.truncated {
            return;
        }
        if self.engine.nodes.is_multiple_of(1024) {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    self.truncated = true;
                    return;
                }
            }
        }
        if self.engine.now == self.engine.cfg.horizon {
            if let Some(u) = self.engine.leaf_utility() {
                if u > self.best {
                    self.best = u;
                    self.found.clear();
                }
                if u == self.best && self.plan_cap.is_none_or(|cap| self.found.len() < cap) {
                    self.found.push(self.engine.entries.clone());
                }
            }
            return;
        }
        for choice in choices_of(self.engine) {
            let cp = self.engine.checkpoint();
            if let Some(ai) = choice {
                self.engine.start_action(ai);
            }
            if self.engine.advance() && self.engine.upper_bound() >= self.best {
                self.run();
            }
            self.engine.undo(cp);
            if self.truncated {
                return;
            }
        }
    }
}

/// Greedy dive to seed the incumbent: at each time point follow the child
/// with the largest upper bound. The main search re-discovers the dive's
/// leaf, so this only tightens pruning; the leaf itself is kept so a
/// budget-truncated search still reports its best find.
fn seed_incumbent(engine: &mut Engine<'_>) -> (i64, Option<Vec<(usize, u64)>>) {
    let root = engine.checkpoint();
    let mut best = i64::MIN;
    let mut leaf = None;
    while engine.now < engine.cfg.horizon {
        let mut best_ub: Option<i64> = None;
        let mut winner: Option<Option<usize>> = None;
        for choice in choices_of(engine) {
            let cp = engine.checkpoint();
            if let Some(ai) = choice {
                engine.start_action(ai);
            }
            if engine.advance() {
                let ub = engine.upper_bound();
                if best_ub.is_none_or(|b| ub > b) {
                    best_ub = Some(ub);
                    winner = Some(choice);
                }
            }
            engine.undo(cp);
        }
        let Some(choice) = winner else { break };
        if let Some(ai) = choice {
            engine.start_action(ai);
        }
        if !engine.advance() {
            break;
        }
    }
    if engine.now == engine.cfg.horizon {
        if let Some(u) = engine.leaf_utility() {
            best = u;
            leaf = Some(engine.entries.clone());
        }
    }
    engine.undo(root);
    (best, leaf)
}

/// Compute the set of utility-maximal plans by branch-and-bound.
pub fn optimal_plans(problem: &Problem, cfg: &SearchConfig) -> OptimalResult {
    let mut engine = Engine::new(problem, cfg);
    let (seeded, seed_leaf) = seed_incumbent(&mut engine);
    let mut search = OptSearch {
        engine: &mut engine,
        best: seeded,
        found: seed_leaf.into_iter().collect(),
        deadline: cfg.time_budget.map(|b| Instant::now() + b),
        truncated: false,
        plan_cap: cfg.max_plans,
    };
    search.run();
    let best = search.best;
    let truncated = search.truncated;
    let mut schedules = std::mem::take(&mut search.found);
    schedules.sort_by(|a, b| {
        let key = |xs: &Vec<(usize, u64)>| -> Vec<(u64, &str)> {
            xs.iter()
                .map(|&(ai, t)| (t, problem.actions()[ai].name.as_str()))
                .collect()
        };
        key(a).cmp(&key(b))
    });
    schedules.dedup();
    let plans: Vec<PlanReport> = schedules
        .into_iter()
        .map(|entries| {
            let schedule = Schedule::new(
                entries
                    .into_iter()
                    .map(|(ai, t)| ScheduleEntry::new(problem.actions()[ai].name.clone(), t))
                    .collect(),
            )
            .expect("distinct starts");
            plan_report(problem, &schedule, cfg).expect("optimal search yielded a valid plan")
        })
        .collect();
    OptimalResult {
        max_utility: plans.first().map(|_| best),
        plans,
        certified: !truncated,
    }
}

// ---------------------------------------------------------------------------
// Naive oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NaiveError {
    #[error("naive enumeration guard exceeded: (|A|+1)^q = {0} > 10^7")]
    GuardExceeded(u128),
}

/// Brute-force enumerator: every assignment of at most one action start
/// per time point, filtered through the pure trace pipeline. Exponential;
/// guarded to desk scale. The reference oracle for [`enumerate_plans`].
pub fn enumerate_naive(
    problem: &Problem,
    cfg: &SearchConfig,
) -> Result<Vec<PlanReport>, NaiveError> {
    let base = problem.actions().len() as u128 + 1;
    let slots = cfg.horizon as u32;
    let combos = base
        .checked_pow(slots)
        .ok_or(NaiveError::GuardExceeded(u128::MAX))?;
    if combos > 10_000_000 {
        return Err(NaiveError::GuardExceeded(combos));
    }

    let mut plans = Vec::new();
    let mut digits = vec![0usize; slots as usize];
    loop {
        let entries: Vec<ScheduleEntry> = digits
            .iter()
            .enumerate()
            .filter(|&(_, &d)| d > 0)
            .map(|(t, &d)| ScheduleEntry::new(problem.actions()[d - 1].name.clone(), t as u64))
            .collect();
        let schedule = Schedule::new(entries).expect("one start per time point");
        if let Ok(report) = plan_report(problem, &schedule, cfg) {
            if cfg.min_utility.is_none_or(|floor| report.utility >= floor) {
                plans.push(report);
            }
        }

        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok(plans);
            }
            digits[i] += 1;
            if digits[i] <= problem.actions().len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}
