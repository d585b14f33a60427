//! Seeded random generators shared by the property and acceptance suites.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nplan_core::model::{ActionDoc, DurativeAction, GoalDoc, NormDoc, NormKind, Problem, ProblemDoc};
use nplan_core::semantics::{simulate, Schedule, ScheduleEntry, Trace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The concurrency-conflict definition spelled out clause by clause, kept
/// as an independent oracle for the implementation's union formula:
/// preconditions contradict, postconditions contradict, or a
/// postcondition of one contradicts a precondition of the other.
pub fn conflict_oracle(a: &DurativeAction, b: &DurativeAction) -> bool {
    fn one_way(a: &DurativeAction, b: &DurativeAction) -> bool {
        let pre_pre = a.pre.pos().iter().any(|r| b.pre.neg().contains(r))
            || a.pre.neg().iter().any(|r| b.pre.pos().contains(r));
        let post_post = a.post.pos().iter().any(|r| b.post.neg().contains(r))
            || a.post.neg().iter().any(|r| b.post.pos().contains(r));
        let post_pre = a.post.pos().iter().any(|r| b.pre.neg().contains(r))
            || a.post.neg().iter().any(|r| b.pre.pos().contains(r));
        let pre_post = a.pre.pos().iter().any(|r| b.post.neg().contains(r))
            || a.pre.neg().iter().any(|r| b.post.pos().contains(r));
        pre_pre || post_post || post_pre || pre_post
    }
    one_way(a, b) || one_way(b, a)
}

#[derive(Clone, Copy)]
pub struct GenLimits {
    pub max_fluents: usize,
    pub max_actions: usize,
    pub max_goals: usize,
    pub max_norms: usize,
    pub max_duration: u64,
}

impl Default for GenLimits {
    fn default() -> Self {
        GenLimits {
            max_fluents: 5,
            max_actions: 3,
            max_goals: 2,
            max_norms: 2,
            max_duration: 3,
        }
    }
}

fn random_literals(rng: &mut ChaCha8Rng, fluents: &[String], prob: f64) -> Vec<String> {
    fluents
        .iter()
        .filter_map(|f| {
            if rng.gen_bool(prob) {
                if rng.gen_bool(0.3) {
                    Some(format!("!{f}"))
                } else {
                    Some(f.clone())
                }
            } else {
                None
            }
        })
        .collect()
}

/// A structurally valid random problem: literal sets are well-defined by
/// construction (one polarity per fluent), names are unique, every
/// reference resolves.
pub fn random_problem(rng: &mut ChaCha8Rng, limits: GenLimits) -> Problem {
    let nf = rng.gen_range(1..=limits.max_fluents);
    let fluents: Vec<String> = (0..nf).map(|i| format!("p{i}")).collect();
    let initial: Vec<String> = fluents
        .iter()
        .filter(|_| rng.gen_bool(0.5))
        .cloned()
        .collect();

    let na = rng.gen_range(1..=limits.max_actions);
    let actions: Vec<ActionDoc> = (0..na)
        .map(|i| ActionDoc {
            name: format!("a{i}"),
            duration: rng.gen_range(1..=limits.max_duration),
            pre: random_literals(rng, &fluents, 0.3),
            post: random_literals(rng, &fluents, 0.4),
        })
        .collect();

    let ng = rng.gen_range(0..=limits.max_goals);
    let goals: Vec<GoalDoc> = (0..ng)
        .map(|i| GoalDoc {
            name: format!("g{i}"),
            value: rng.gen_range(1..=20),
            requirements: random_literals(rng, &fluents, 0.4),
        })
        .collect();

    let nn = rng.gen_range(0..=limits.max_norms);
    let norms: Vec<NormDoc> = (0..nn)
        .map(|i| NormDoc {
            name: format!("n{i}"),
            kind: if rng.gen_bool(0.5) {
                NormKind::Obligation
            } else {
                NormKind::Prohibition
            },
            condition: format!("a{}", rng.gen_range(0..na)),
            subject: format!("a{}", rng.gen_range(0..na)),
            deadline: rng.gen_range(0..=4),
            cost: rng.gen_range(1..=10),
        })
        .collect();

    let doc = ProblemDoc {
        fluents,
        initial,
        actions,
        goals,
        norms,
    };
    Problem::from_document(&doc).expect("generated problems are structurally valid")
}

/// Random schedule over time points `0..horizon` with at most one start
/// per point and every action finishing within the horizon. May still be
/// invalid (conflicts, failing preconditions).
pub fn random_schedule(rng: &mut ChaCha8Rng, problem: &Problem, horizon: u64) -> Schedule {
    let mut entries = Vec::new();
    for t in 0..horizon {
        if !rng.gen_bool(0.35) {
            continue;
        }
        let fitting: Vec<&str> = problem
            .actions()
            .iter()
            .filter(|a| t + a.duration <= horizon)
            .map(|a| a.name.as_str())
            .collect();
        if fitting.is_empty() {
            continue;
        }
        let pick = fitting[rng.gen_range(0..fitting.len())];
        entries.push(ScheduleEntry::new(pick, t));
    }
    Schedule::new(entries).expect("distinct start times by construction")
}

/// Keep sampling until a schedule simulates cleanly; None when the
/// attempt budget runs out.
pub fn random_valid_run(
    rng: &mut ChaCha8Rng,
    problem: &Problem,
    horizon: u64,
    attempts: usize,
) -> Option<(Schedule, Trace)> {
    for _ in 0..attempts {
        let schedule = random_schedule(rng, problem, horizon);
        if let Ok(trace) = simulate(problem, &schedule, horizon) {
            return Some((schedule, trace));
        }
    }
    None
}
