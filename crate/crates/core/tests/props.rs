//! Property tests over randomized problems and schedules.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{conflict_oracle, random_problem, random_schedule, random_valid_run, rng, GenLimits};
use nplan_core::model::{parse_problem, serialize_problem};
use nplan_core::planner::{enumerate_naive, enumerate_plans, optimal_plans, SearchConfig};
use nplan_core::semantics::{
    conflicting_actions, instantiate_norms, resolve_norms, simulate, ComplianceMode,
    InstanceStatus, PendingPolicy, Schedule,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn conflict_relation_matches_clause_oracle(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_problem(&mut rng, GenLimits::default());
        let cf = conflicting_actions(p.actions());
        for a in p.actions() {
            for b in p.actions() {
                prop_assert_eq!(
                    cf.contains(&a.name, &b.name),
                    conflict_oracle(a, b),
                    "disagreement on ({}, {})", a.name, b.name
                );
            }
        }
    }

    #[test]
    fn problem_round_trips_through_text(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_problem(&mut rng, GenLimits::default());
        let text = serialize_problem(&p);
        let (reparsed, _) = parse_problem(&text).expect("serialized problems parse");
        prop_assert_eq!(p, reparsed);
    }

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_problem(&mut rng, GenLimits::default());
        let s = random_schedule(&mut rng, &p, 6);
        let a = simulate(&p, &s, 6);
        let b = simulate(&p, &s, 6);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn traces_obey_inertia_and_frame(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_problem(&mut rng, GenLimits::default());
        let Some((schedule, trace)) = random_valid_run(&mut rng, &p, 6, 40) else {
            return Ok(());
        };
        for k in 1..=trace.horizon() {
            let prev = trace.state(k - 1);
            let cur = trace.state(k);
            let ending = trace.ending_at(k);
            if ending.is_empty() {
                prop_assert_eq!(prev, cur, "inertia broken at {}", k);
                continue;
            }
            let mut adds: BTreeSet<&String> = BTreeSet::new();
            let mut dels: BTreeSet<&String> = BTreeSet::new();
            for e in ending {
                let action = p.action(&e.action).unwrap();
                adds.extend(action.post.pos());
                dels.extend(action.post.neg());
            }
            for gained in cur.difference(prev) {
                prop_assert!(adds.contains(gained), "frame: {} appeared at {}", gained, k);
            }
            for lost in prev.difference(cur) {
                prop_assert!(dels.contains(lost), "frame: {} vanished at {}", lost, k);
            }
        }
        // Postcondition effect at each entry's end state.
        for e in schedule.entries() {
            let action = p.action(&e.action).unwrap();
            let end = e.start + action.duration;
            let state = trace.state(end);
            for f in action.post.pos() {
                prop_assert!(state.contains(f));
            }
            for f in action.post.neg() {
                prop_assert!(!state.contains(f), "{} still holds at {}", f, end);
            }
        }
    }

    #[test]
    fn instances_resolve_exhaustively(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_problem(&mut rng, GenLimits::default());
        let horizon = 6;
        let s = random_schedule(&mut rng, &p, horizon);
        let instances = instantiate_norms(&p, &s);
        for mode in [ComplianceMode::StartOnly, ComplianceMode::StartAndEnd] {
            let resolved = resolve_norms(&p, &s, instances.clone(), mode, horizon);
            prop_assert_eq!(resolved.len(), instances.len());
            for ins in &resolved {
                // Deadline arithmetic is structural.
                let d_con = p.action(&ins.norm.condition).unwrap().duration;
                prop_assert_eq!(
                    ins.deadline_abs - ins.activation_time,
                    ins.norm.deadline + d_con
                );
                // Trichotomy: pending only past the horizon.
                if ins.deadline_abs <= horizon {
                    prop_assert!(!ins.status.is_pending());
                }
                match ins.status {
                    InstanceStatus::Complied { at } | InstanceStatus::Violated { at } => {
                        prop_assert!(at <= horizon.max(ins.deadline_abs));
                    }
                    InstanceStatus::Pending => prop_assert!(ins.deadline_abs > horizon),
                }
            }
        }
    }

    #[test]
    fn start_and_end_implies_start_only(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_problem(&mut rng, GenLimits::default());
        let horizon = 6;
        let s = random_schedule(&mut rng, &p, horizon);
        let instances = instantiate_norms(&p, &s);
        let by_start = resolve_norms(&p, &s, instances.clone(), ComplianceMode::StartOnly, horizon);
        let by_both = resolve_norms(&p, &s, instances, ComplianceMode::StartAndEnd, horizon);
        for (a, b) in by_start.iter().zip(by_both.iter()) {
            match a.norm.kind {
                nplan_core::model::NormKind::Obligation => {
                    if b.status.is_complied() {
                        prop_assert!(a.status.is_complied());
                    }
                }
                nplan_core::model::NormKind::Prohibition => {
                    if b.status.is_violated() {
                        prop_assert!(a.status.is_violated());
                    }
                }
            }
        }
    }
}

proptest! {
    // The enumeration cross-checks run full searches per case.
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stream_matches_naive_oracle(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let limits = GenLimits { max_fluents: 4, max_actions: 2, ..GenLimits::default() };
        let p = random_problem(&mut rng, limits);
        for mode in [ComplianceMode::StartOnly, ComplianceMode::StartAndEnd] {
            for policy in [PendingPolicy::Ignore, PendingPolicy::Violate, PendingPolicy::Comply] {
                let cfg = SearchConfig::new(4)
                    .unwrap()
                    .with_mode(mode)
                    .with_pending_policy(policy);
                let mut stream: Vec<(Schedule, i64)> = enumerate_plans(&p, &cfg)
                    .map(|r| (r.schedule, r.utility))
                    .collect();
                let mut naive: Vec<(Schedule, i64)> = enumerate_naive(&p, &cfg)
                    .unwrap()
                    .into_iter()
                    .map(|r| (r.schedule, r.utility))
                    .collect();
                stream.sort();
                naive.sort();
                prop_assert_eq!(stream, naive, "mode {:?} policy {:?}", mode, policy);
            }
        }
    }

    #[test]
    fn optimum_equals_unpruned_maximum(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let limits = GenLimits { max_fluents: 4, max_actions: 2, ..GenLimits::default() };
        let p = random_problem(&mut rng, limits);
        for policy in [PendingPolicy::Ignore, PendingPolicy::Violate] {
            let cfg = SearchConfig::new(4).unwrap().with_pending_policy(policy);
            let opt = optimal_plans(&p, &cfg);
            prop_assert!(opt.certified);
            let all: Vec<_> = enumerate_plans(&p, &cfg).collect();
            let max = all.iter().map(|r| r.utility).max();
            prop_assert_eq!(opt.max_utility, max, "policy {:?}", policy);
            let best_schedules: BTreeSet<&Schedule> = all
                .iter()
                .filter(|r| Some(r.utility) == max)
                .map(|r| &r.schedule)
                .collect();
            let opt_schedules: BTreeSet<&Schedule> =
                opt.plans.iter().map(|r| &r.schedule).collect();
            prop_assert_eq!(opt_schedules, best_schedules, "policy {:?}", policy);
        }
    }

    #[test]
    fn answer_set_round_trips_schedules(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let p = random_problem(&mut rng, GenLimits::default());
        let s = random_schedule(&mut rng, &p, 6);
        let mangled: Vec<String> = s
            .entries()
            .iter()
            .map(|e| format!("executed({},{})", e.action.to_ascii_lowercase(), e.start))
            .collect();
        // Surrounding atoms must not disturb extraction.
        let line = format!("state(0) {} holdsat(x,0) utility(-3)", mangled.join(" "));
        let ans = nplan_core::aspgen::parse_answer_set(&p, &line).expect("parses");
        prop_assert_eq!(&ans.schedule, &s);
        prop_assert_eq!(ans.reported_utility, Some(-3));
    }

    #[test]
    fn horizon_growth_never_lowers_optimum(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let limits = GenLimits { max_fluents: 4, max_actions: 2, ..GenLimits::default() };
        let p = random_problem(&mut rng, limits);
        let small = optimal_plans(&p, &SearchConfig::new(3).unwrap());
        let large = optimal_plans(&p, &SearchConfig::new(4).unwrap());
        if let Some(a) = small.max_utility {
            let b = large.max_utility.expect("plans persist under a larger horizon");
            prop_assert!(b >= a, "max utility dropped from {} to {}", a, b);
        }
    }
}
