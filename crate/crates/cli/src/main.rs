//! `nplan` — validate normative planning problems, enumerate and optimise
//! plans, emit the equivalent answer-set program, and cross-check solver
//! answer sets against the native engine.
//!
//! Exit codes are a stable contract: 0 success, 1 usage or parse failure,
//! 2 validation failure, 3 no plan found / check failed, 4 result not
//! certified because a time budget ran out.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nplan_core::aspgen::{self, CheckReport};
use nplan_core::model::{self, Finding, Problem};
use nplan_core::planner::{self, PlanReport, SearchConfig};
use nplan_core::semantics::{
    simulate, ComplianceMode, InstanceStatus, NormInstance, PendingPolicy, Schedule, ScheduleEntry,
    Trace,
};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_INVALID: i32 = 2;
const EXIT_NO_PLAN: i32 = 3;
const EXIT_UNCERTIFIED: i32 = 4;

#[derive(Parser)]
#[command(name = "nplan", version, about = "Normative practical reasoning planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct EvalOpts {
    /// Compliance mode: does the subject's start or its whole execution
    /// have to fall inside the window
    #[arg(long, value_parser = clap::value_parser!(ComplianceMode), default_value = "start")]
    mode: ComplianceMode,
    /// Accounting for instances still pending at the horizon
    #[arg(long, value_parser = clap::value_parser!(PendingPolicy), default_value = "ignore")]
    pending: PendingPolicy,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a problem file and report validation findings
    Validate {
        file: PathBuf,
        /// Emit the report as JSON
        #[arg(long)]
        json: bool,
    },
    /// Enumerate valid plans up to a horizon
    Plan {
        file: PathBuf,
        #[arg(long)]
        horizon: u64,
        /// Stream every plan (the default)
        #[arg(long)]
        all: bool,
        /// Stop after this many plans
        #[arg(long, conflicts_with = "all")]
        max: Option<usize>,
        /// Only report plans with at least this utility
        #[arg(long)]
        min_utility: Option<i64>,
        /// Wall-clock budget in seconds
        #[arg(long)]
        time_budget: Option<f64>,
        #[command(flatten)]
        eval: EvalOpts,
        #[arg(long)]
        json: bool,
    },
    /// Compute the utility-maximal plan set
    Optimal {
        file: PathBuf,
        #[arg(long)]
        horizon: u64,
        /// Wall-clock budget in seconds
        #[arg(long)]
        time_budget: Option<f64>,
        #[command(flatten)]
        eval: EvalOpts,
        #[arg(long)]
        json: bool,
    },
    /// Emit the answer-set program for a problem and horizon
    EmitAsp {
        file: PathBuf,
        #[arg(long)]
        horizon: u64,
        /// Append the utility-maximisation block
        #[arg(long)]
        optimize: bool,
        /// Output file (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-validate solver answer sets (or plan JSON) against the engine
    Check {
        file: PathBuf,
        #[arg(long)]
        horizon: u64,
        /// Answer-set file: whitespace-separated atoms, one model per line
        #[arg(long, required_unless_present = "plan_json")]
        answer_set: Option<PathBuf>,
        /// Re-check schedules from `plan`/`optimal` --json output
        #[arg(long, conflicts_with = "answer_set")]
        plan_json: Option<PathBuf>,
        #[command(flatten)]
        eval: EvalOpts,
        #[arg(long)]
        json: bool,
    },
}

fn main() {
    // Die quietly when a downstream pipe closes, like other line tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    std::process::exit(run(cli));
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Validate { file, json } => cmd_validate(&file, json),
        Command::Plan {
            file,
            horizon,
            all: _,
            max,
            min_utility,
            time_budget,
            eval,
            json,
        } => cmd_plan(&file, horizon, max, min_utility, time_budget, eval, json),
        Command::Optimal {
            file,
            horizon,
            time_budget,
            eval,
            json,
        } => cmd_optimal(&file, horizon, time_budget, eval, json),
        Command::EmitAsp {
            file,
            horizon,
            optimize,
            output,
        } => cmd_emit_asp(&file, horizon, optimize, output.as_deref()),
        Command::Check {
            file,
            horizon,
            answer_set,
            plan_json,
            eval,
            json,
        } => cmd_check(
            &file,
            horizon,
            answer_set.as_deref(),
            plan_json.as_deref(),
            eval,
            json,
        ),
    }
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

fn read_file(path: &Path) -> Result<String, i32> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_USAGE
    })
}

fn load_problem(path: &Path) -> Result<(Problem, Vec<Finding>), i32> {
    let text = read_file(path)?;
    match model::parse_problem(&text) {
        Ok(ok) => Ok(ok),
        Err(model::ProblemError::Syntax(msg)) => {
            eprintln!("error: {}: syntax error: {msg}", path.display());
            Err(EXIT_USAGE)
        }
        Err(model::ProblemError::Invalid(report)) => {
            for finding in &report.findings {
                eprintln!("{finding}");
            }
            Err(EXIT_INVALID)
        }
    }
}

fn search_config(
    horizon: u64,
    eval: &EvalOpts,
    max: Option<usize>,
    time_budget: Option<f64>,
) -> Result<SearchConfig, i32> {
    let mut cfg = SearchConfig::new(horizon).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })?;
    cfg = cfg.with_mode(eval.mode).with_pending_policy(eval.pending);
    if let Some(cap) = max {
        cfg = cfg.with_max_plans(cap);
    }
    if let Some(secs) = time_budget {
        if secs.is_nan() || secs < 0.0 {
            eprintln!("error: time budget must be non-negative");
            return Err(EXIT_USAGE);
        }
        cfg = cfg.with_time_budget(Duration::from_secs_f64(secs));
    }
    Ok(cfg)
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn cmd_validate(path: &Path, json: bool) -> i32 {
    let text = match read_file(path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let doc = match model::parse_document(&text) {
        Ok(doc) => doc,
        Err(err) => {
            eprintln!("error: {}: {err}", path.display());
            return EXIT_USAGE;
        }
    };
    let report = model::validate_document(&doc);
    let errors: Vec<&Finding> = report.errors().collect();
    if json {
        let payload = json!({
            "file": path.display().to_string(),
            "errors": report.errors().collect::<Vec<_>>(),
            "warnings": report.warnings().collect::<Vec<_>>(),
        });
        println!("{}", serde_json::to_string_pretty(&payload).unwrap());
    } else {
        for finding in &report.findings {
            println!("{finding}");
        }
        if errors.is_empty() {
            println!(
                "ok: {} valid ({} warning{})",
                path.display(),
                report.warnings().count(),
                if report.warnings().count() == 1 { "" } else { "s" }
            );
        }
    }
    if errors.is_empty() {
        EXIT_OK
    } else {
        EXIT_INVALID
    }
}

// ---------------------------------------------------------------------------
// plan
// ---------------------------------------------------------------------------

fn cmd_plan(
    path: &Path,
    horizon: u64,
    max: Option<usize>,
    min_utility: Option<i64>,
    time_budget: Option<f64>,
    eval: EvalOpts,
    json: bool,
) -> i32 {
    let (problem, _) = match load_problem(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let mut cfg = match search_config(horizon, &eval, max, time_budget) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    if let Some(floor) = min_utility {
        cfg = cfg.with_min_utility(floor);
    }
    let mut stream = planner::enumerate_plans(&problem, &cfg);

    if json {
        let kept: Vec<PlanReport> = stream.by_ref().collect();
        let payload = json!({
            "plans": kept,
            "count": kept.len(),
            "truncated": stream.truncated(),
        });
        println!("{}", serde_json::to_string_pretty(&payload).unwrap());
    } else {
        let mut count = 0usize;
        for report in stream.by_ref() {
            count += 1;
            println!("plan {count}:");
            print_plan(&problem, &report, &cfg);
        }
        println!(
            "{count} plan{}{}",
            if count == 1 { "" } else { "s" },
            if stream.budget_exhausted() {
                " (budget exhausted)"
            } else {
                ""
            }
        );
    }
    if stream.budget_exhausted() {
        EXIT_UNCERTIFIED
    } else {
        EXIT_OK
    }
}

// ---------------------------------------------------------------------------
// optimal
// ---------------------------------------------------------------------------

fn cmd_optimal(
    path: &Path,
    horizon: u64,
    time_budget: Option<f64>,
    eval: EvalOpts,
    json: bool,
) -> i32 {
    let (problem, _) = match load_problem(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let cfg = match search_config(horizon, &eval, None, time_budget) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let result = planner::optimal_plans(&problem, &cfg);

    if json {
        println!("{}", serde_json::to_string_pretty(&result).unwrap());
    } else {
        match result.max_utility {
            None => println!("no plan"),
            Some(max) => {
                println!(
                    "max utility: {max}{}",
                    if result.certified {
                        ""
                    } else {
                        " (not certified: budget exhausted)"
                    }
                );
                println!("optimal plans: {}", result.plans.len());
                for (i, report) in result.plans.iter().enumerate() {
                    println!("plan {}:", i + 1);
                    print_plan(&problem, report, &cfg);
                }
            }
        }
    }
    if !result.certified {
        EXIT_UNCERTIFIED
    } else if result.max_utility.is_none() {
        EXIT_NO_PLAN
    } else {
        EXIT_OK
    }
}

// ---------------------------------------------------------------------------
// emit-asp
// ---------------------------------------------------------------------------

fn cmd_emit_asp(path: &Path, horizon: u64, optimize: bool, output: Option<&Path>) -> i32 {
    let (problem, _) = match load_problem(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if horizon == 0 {
        eprintln!("error: horizon must be ≥ 1");
        return EXIT_USAGE;
    }
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "problem".to_string());
    let mut program = match aspgen::emit_base_program(&problem, horizon, &label) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if optimize {
        program = program.with_optimization(aspgen::emit_optimization(&problem));
    }
    let text = program.text();
    match output {
        Some(out) => {
            if let Err(e) = fs::write(out, &text) {
                eprintln!("error: cannot write {}: {e}", out.display());
                return EXIT_USAGE;
            }
        }
        None => print!("{text}"),
    }
    EXIT_OK
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

fn cmd_check(
    path: &Path,
    horizon: u64,
    answer_set: Option<&Path>,
    plan_json: Option<&Path>,
    eval: EvalOpts,
    json: bool,
) -> i32 {
    let (problem, _) = match load_problem(path) {
        Ok(p) => p,
        Err(code) => return code,
    };

    let mut reports: Vec<CheckReport> = Vec::new();
    if let Some(ans_path) = answer_set {
        let text = match read_file(ans_path) {
            Ok(t) => t,
            Err(code) => return code,
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            match aspgen::parse_answer_set(&problem, line) {
                Ok(ans) => reports.push(aspgen::cross_check(
                    &problem,
                    horizon,
                    &ans,
                    eval.mode,
                    eval.pending,
                )),
                Err(e) => {
                    eprintln!("error: {}: {e}", ans_path.display());
                    return EXIT_USAGE;
                }
            }
        }
        if reports.is_empty() {
            eprintln!("error: {}: no models found", ans_path.display());
            return EXIT_USAGE;
        }
    } else if let Some(json_path) = plan_json {
        let text = match read_file(json_path) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let schedules = match schedules_from_json(&text) {
            Ok(s) => s,
            Err(msg) => {
                eprintln!("error: {}: {msg}", json_path.display());
                return EXIT_USAGE;
            }
        };
        for schedule in schedules {
            reports.push(aspgen::check_schedule(
                &problem,
                horizon,
                schedule,
                eval.mode,
                eval.pending,
            ));
        }
    }

    let all_ok = reports
        .iter()
        .all(|r| r.valid && r.utilities_match != Some(false));

    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&json!({ "reports": reports })).unwrap()
        );
    } else {
        for (i, report) in reports.iter().enumerate() {
            let verdict = if report.valid { "valid plan" } else { "INVALID" };
            println!("model {}: {} {}", i + 1, report.schedule, verdict);
            for issue in &report.issues {
                println!("  issue: {issue}");
            }
            if let Some(native) = report.native_utility {
                match (report.reported_utility, report.utilities_match) {
                    (Some(reported), Some(true)) => {
                        println!("  utility: {native} (matches reported {reported})")
                    }
                    (Some(reported), _) => println!(
                        "  utility mismatch: native {native}, reported {reported}"
                    ),
                    (None, _) => println!("  utility: {native} (none reported)"),
                }
            }
        }
        println!("{}", if all_ok { "check passed" } else { "check failed" });
    }
    if all_ok {
        EXIT_OK
    } else {
        EXIT_NO_PLAN
    }
}

/// Accept `plan`/`optimal` --json output, a single plan object, or a bare
/// entry array, and pull out the schedules.
fn schedules_from_json(text: &str) -> Result<Vec<Schedule>, String> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let plan_lists: Vec<&serde_json::Value> = match &value {
        serde_json::Value::Object(map) if map.contains_key("plans") => map["plans"]
            .as_array()
            .map(|a| a.iter().collect())
            .ok_or("`plans` is not an array")?,
        serde_json::Value::Object(map) if map.contains_key("schedule") => vec![&value],
        serde_json::Value::Array(_) => vec![&value],
        _ => return Err("expected {plans: [...]}, {schedule: [...]} or [entries]".into()),
    };
    let mut schedules = Vec::new();
    for plan in plan_lists {
        let entries_value = match plan {
            serde_json::Value::Object(map) => map
                .get("schedule")
                .ok_or("plan object lacks `schedule`")?,
            other => other,
        };
        let entries: Vec<ScheduleEntry> = serde_json::from_value(entries_value.clone())
            .map_err(|e| format!("bad schedule entries: {e}"))?;
        schedules.push(Schedule::new(entries).map_err(|e| e.to_string())?);
    }
    Ok(schedules)
}

// ---------------------------------------------------------------------------
// Human rendering
// ---------------------------------------------------------------------------

/// Timeline rendering: one row per time point with added (`+`) and
/// terminated (`-`) fluents, goal-satisfaction and violation markers.
fn print_plan(problem: &Problem, report: &PlanReport, cfg: &SearchConfig) {
    println!("  utility {}, makespan {}", report.utility, report.makespan);
    println!("  schedule:");
    for entry in report.schedule.entries() {
        let duration = problem
            .action(&entry.action)
            .map(|a| a.duration)
            .unwrap_or(0);
        println!(
            "    t={:<3} {} [{}, {})",
            entry.start,
            entry.action,
            entry.start,
            entry.start + duration
        );
    }

    let Ok(trace) = simulate(problem, &report.schedule, cfg.horizon) else {
        return;
    };
    let last_event = report
        .complied
        .iter()
        .chain(report.violated.iter())
        .filter_map(|ins| match ins.status {
            InstanceStatus::Complied { at } | InstanceStatus::Violated { at } => Some(at),
            InstanceStatus::Pending => None,
        })
        .max()
        .unwrap_or(0);
    let rows = report.makespan.max(last_event);

    println!("  timeline:");
    let mut satisfied_before: BTreeSet<&str> = BTreeSet::new();
    for k in 0..=rows {
        let mut cells: Vec<String> = Vec::new();
        if k == 0 {
            let init: Vec<&str> = trace.state(0).iter().map(String::as_str).collect();
            if !init.is_empty() {
                cells.push(init.join(" "));
            }
        } else {
            let prev = trace.state(k - 1);
            let cur = trace.state(k);
            for added in cur.difference(prev) {
                cells.push(format!("+{added}"));
            }
            for gone in prev.difference(cur) {
                cells.push(format!("-{gone}"));
            }
        }
        for goal in report.satisfied.iter() {
            if satisfied_before.contains(goal.as_str()) {
                continue;
            }
            if goal_holds_at(problem, &trace, goal, k) {
                cells.push(format!("goal:{goal}"));
                satisfied_before.insert(goal);
            }
        }
        for ins in report.violated.iter() {
            if ins.status == (InstanceStatus::Violated { at: k }) {
                cells.push(format!("vol:{}[{}] -{}", ins.norm.name, ins.activation_time, ins.norm.cost));
            }
        }
        for ins in report.complied.iter() {
            if ins.status == (InstanceStatus::Complied { at: k }) {
                cells.push(format!("cmp:{}[{}]", ins.norm.name, ins.activation_time));
            }
        }
        println!("    t={:<3} {}", k, cells.join("  "));
    }

    if !(report.complied.is_empty() && report.violated.is_empty() && report.pending.is_empty()) {
        println!("  norms:");
        for ins in report
            .complied
            .iter()
            .chain(report.violated.iter())
            .chain(report.pending.iter())
        {
            println!("    {}", describe_instance(ins));
        }
    }
    println!("  goals satisfied: {}", join(&report.satisfied));
}

fn goal_holds_at(problem: &Problem, trace: &Trace, goal: &str, k: u64) -> bool {
    problem
        .goal(goal)
        .map(|g| g.requirements.holds_in(trace.state(k)))
        .unwrap_or(false)
}

fn describe_instance(ins: &NormInstance) -> String {
    let window = format!("window [{}, {})", ins.activation_end, ins.deadline_abs);
    let status = match ins.status {
        InstanceStatus::Pending => "pending".to_string(),
        InstanceStatus::Complied { at } => format!("complied at {at}"),
        InstanceStatus::Violated { at } => format!("violated at {at} (cost {})", ins.norm.cost),
    };
    format!(
        "{} ({} {} within {}): activated at {}, {window}, {status}",
        ins.norm.name, ins.norm.kind, ins.norm.subject, ins.norm.deadline, ins.activation_time
    )
}

fn join(set: &BTreeSet<String>) -> String {
    if set.is_empty() {
        "(none)".to_string()
    } else {
        set.iter().cloned().collect::<Vec<_>>().join(", ")
    }
}
