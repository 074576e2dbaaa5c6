//! `qoc` — exact workbench for group-structured oracle classification.
//!
//! Subcommands: `bound` (closed forms only), `count` (exact enumeration),
//! `check` (counting vs closed form vs simulation vs explicit algorithms),
//! `sweep` (a table over a range of query counts).
//!
//! Reports go to stdout and are byte-deterministic for fixed inputs and
//! seed; timing goes to stderr. Exit codes: 0 success, 1 failed verdict or
//! numerical inconsistency, 2 bad input, 3 capacity guard.

use clap::{Parser, Subcommand, ValueEnum};
use num::{BigRational, ToPrimitive};
use qoc_core::{
    build_class_state, count_optimal, enumerate_vectors, evaluation_bound, extrapolation_bound,
    interpolation_bound, interrogation_bound, optimal_success, oracle_shift_run,
    run_parallel_algorithm, sample_oracle, span_rank, summation_bound, verify_free, BoundBracket,
    BoundValue, ClassBasis, CountConfig, CountingResult, GroupSpec, InstanceDef,
    ParallelAlgorithm, QocError, QocInstance, SimConfig,
};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "qoc",
    about = "Exact success probabilities for group-structured oracle classification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form bracket for a named problem family.
    Bound {
        /// Instance description file (JSON).
        instance: PathBuf,
        /// Number of queries.
        #[arg(long)]
        q: u64,
    },
    /// Count the exact optimal success probability by enumeration.
    Count {
        /// Instance description file (JSON).
        instance: PathBuf,
        /// Number of queries.
        #[arg(long)]
        q: usize,
        /// Include one witness query pair per winning payoff.
        #[arg(long)]
        witnesses: bool,
        /// For interrogation: count every target set of the same size and
        /// report the maximum.
        #[arg(long)]
        all_target_sets: bool,
        /// Override the enumeration capacity guard.
        #[arg(long)]
        capacity: Option<u128>,
    },
    /// Cross-check counting, closed forms, the simulated measurement, and
    /// explicit algorithms; exit 0 only if every verdict passes.
    Check {
        /// Instance description file (JSON).
        instance: PathBuf,
        /// Number of queries.
        #[arg(long)]
        q: usize,
        /// Seed for the random-algorithm trials.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of random algorithms for the dominance verdict.
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// Override the enumeration capacity guard.
        #[arg(long)]
        capacity: Option<u128>,
        /// Probability agreement tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Tabulate bracket, count, and simulation over a range of q.
    Sweep {
        /// Instance description file (JSON).
        instance: PathBuf,
        #[arg(long)]
        q_min: usize,
        #[arg(long)]
        q_max: usize,
        /// Output format.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Override the enumeration capacity guard.
        #[arg(long)]
        capacity: Option<u128>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

// ---------------------------------------------------------------------------
// report shapes

#[derive(Serialize)]
struct ValueOut {
    /// Exact value as "numerator/denominator"; absent for approximations.
    #[serde(skip_serializing_if = "Option::is_none")]
    fraction: Option<String>,
    decimal: String,
    exact: bool,
}

#[derive(Serialize)]
struct BracketOut {
    lower: ValueOut,
    upper: ValueOut,
    exact: bool,
    regime: String,
}

#[derive(Serialize)]
struct WitnessOut {
    z: Vec<Vec<u64>>,
    multiplicity: u64,
    points: Vec<u64>,
    chars: Vec<Vec<u64>>,
}

#[derive(Serialize)]
struct CountOut {
    probability: String,
    decimal: String,
    best_class_size: u64,
    best_h: Vec<Vec<u64>>,
    quotient_order: String,
    pair_count: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    witnesses: Option<Vec<WitnessOut>>,
}

#[derive(Serialize)]
struct SimOut {
    total_success: String,
    per_coset_min: String,
    per_coset_max: String,
    dimension: usize,
    class_size: usize,
}

#[derive(Serialize)]
struct VerdictOut {
    name: &'static str,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct TargetSetOut {
    targets: Vec<u64>,
    probability: String,
    decimal: String,
}

#[derive(Serialize)]
struct TargetSweepOut {
    sets: Vec<TargetSetOut>,
    max: TargetSetOut,
}

#[derive(Serialize)]
struct RunReport {
    instance: String,
    #[serde(rename = "type")]
    kind: String,
    parameters: serde_json::Value,
    q: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bracket: Option<BracketOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    counting: Option<CountOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulator: Option<SimOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_sets: Option<TargetSweepOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdicts: Option<Vec<VerdictOut>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
}

#[derive(Serialize)]
struct SweepRow {
    q: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    lower: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<bool>,
    counting: String,
    decimal: String,
    simulator: String,
}

#[derive(Serialize)]
struct SweepReport {
    instance: String,
    #[serde(rename = "type")]
    kind: String,
    rows: Vec<SweepRow>,
}

// ---------------------------------------------------------------------------
// formatting helpers

fn fraction(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn decimal_of(r: &BigRational) -> String {
    format!("{:.11e}", r.to_f64().unwrap_or(f64::NAN))
}

fn decimal_f64(x: f64) -> String {
    format!("{x:.11e}")
}

fn value_out(v: &BoundValue) -> ValueOut {
    match v {
        BoundValue::Exact(r) => ValueOut {
            fraction: Some(fraction(r)),
            decimal: decimal_of(r),
            exact: true,
        },
        BoundValue::Approx(x) => ValueOut {
            fraction: None,
            decimal: decimal_f64(*x),
            exact: false,
        },
    }
}

fn bracket_out(b: &BoundBracket) -> BracketOut {
    BracketOut {
        lower: value_out(&b.lower),
        upper: value_out(&b.upper),
        exact: b.exact,
        regime: b.regime.clone(),
    }
}

fn count_out(result: &CountingResult, witnesses: bool) -> CountOut {
    CountOut {
        probability: fraction(&result.probability),
        decimal: decimal_of(&result.probability),
        best_class_size: result.best_class_size,
        best_h: result.best_h.iter().map(|g| g.residues().to_vec()).collect(),
        quotient_order: result.quotient_order.to_string(),
        pair_count: result.pair_count.to_string(),
        witnesses: witnesses.then(|| {
            result
                .witnesses
                .iter()
                .map(|w| WitnessOut {
                    z: w.z.iter().map(|g| g.residues().to_vec()).collect(),
                    multiplicity: w.multiplicity,
                    points: w.pair.points().to_vec(),
                    chars: w.pair.chars().iter().map(|g| g.residues().to_vec()).collect(),
                })
                .collect()
        }),
    }
}

// ---------------------------------------------------------------------------
// command plumbing

fn load_def(path: &PathBuf) -> Result<InstanceDef, QocError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| QocError::domain(format!("cannot read {}: {e}", path.display())))?;
    InstanceDef::from_json(&text)
}

/// Closed-form bracket for the named families; None for custom instances.
fn closed_form(def: &InstanceDef, q: u64) -> Result<Option<BoundBracket>, QocError> {
    let bracket = match def {
        InstanceDef::Summation { m, moduli } => {
            Some(summation_bound(*m, q, GroupSpec::new(moduli.clone())?.order())?)
        }
        InstanceDef::Interrogation {
            m,
            moduli,
            targets,
            ..
        } => Some(interrogation_bound(
            *m,
            GroupSpec::new(moduli.clone())?.order(),
            targets.len() as u64,
            q,
        )?),
        InstanceDef::Interpolation { p, d } => Some(interpolation_bound(*d, q, *p)?),
        InstanceDef::Evaluation { p, d, .. } => Some(evaluation_bound(*d, q, *p)?),
        InstanceDef::Extrapolation { p, d } => Some(extrapolation_bound(*d, q, *p)?),
        InstanceDef::Custom { .. } => None,
    };
    Ok(bracket)
}

fn base_report(def: &InstanceDef, inst: &QocInstance, q: u64) -> RunReport {
    RunReport {
        instance: inst.label().to_string(),
        kind: def.type_name().to_string(),
        parameters: serde_json::to_value(def).unwrap_or(serde_json::Value::Null),
        q,
        bracket: None,
        counting: None,
        simulator: None,
        target_sets: None,
        verdicts: None,
        seed: None,
        trials: None,
    }
}

fn cmd_bound(path: &PathBuf, q: u64) -> Result<RunReport, QocError> {
    let def = load_def(path)?;
    let inst = def.to_instance()?;
    let bracket = closed_form(&def, q)?
        .ok_or_else(|| QocError::domain("custom instances have no closed form"))?;
    let mut report = base_report(&def, &inst, q);
    report.bracket = Some(bracket_out(&bracket));
    Ok(report)
}

fn cmd_count(
    path: &PathBuf,
    q: usize,
    witnesses: bool,
    all_target_sets: bool,
    ccfg: &CountConfig,
) -> Result<RunReport, QocError> {
    let def = load_def(path)?;
    let inst = def.to_instance()?;
    let mut report = base_report(&def, &inst, q as u64);
    if all_target_sets {
        let (m, moduli, k) = match &def {
            InstanceDef::Interrogation {
                m, moduli, targets, ..
            } => (*m, moduli.clone(), targets.len()),
            _ => {
                return Err(QocError::domain(
                    "--all-target-sets applies only to interrogation instances",
                ))
            }
        };
        let group = GroupSpec::new(moduli)?;
        let mut sets = Vec::new();
        let mut best: Option<(BigRational, usize)> = None;
        for targets in combinations(m, k) {
            let sub = qoc_core::make_interrogation(m, &group, &targets)?;
            let result = count_optimal(&sub, q, ccfg)?;
            if best.as_ref().is_none_or(|(p, _)| result.probability > *p) {
                best = Some((result.probability.clone(), sets.len()));
            }
            sets.push(TargetSetOut {
                targets,
                probability: fraction(&result.probability),
                decimal: decimal_of(&result.probability),
            });
        }
        let (_, best_idx) = best.expect("at least one target set");
        let max = TargetSetOut {
            targets: sets[best_idx].targets.clone(),
            probability: sets[best_idx].probability.clone(),
            decimal: sets[best_idx].decimal.clone(),
        };
        report.target_sets = Some(TargetSweepOut { sets, max });
    }
    let result = count_optimal(&inst, q, ccfg)?;
    report.counting = Some(count_out(&result, witnesses));
    Ok(report)
}

/// Lexicographic k-subsets of 0..m.
fn combinations(m: u64, k: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn go(start: u64, m: u64, k: usize, current: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for x in start..m {
            current.push(x);
            go(x + 1, m, k, current, out);
            current.pop();
        }
    }
    go(0, m, k, &mut current, &mut out);
    out
}

struct CheckOutcome {
    report: RunReport,
    all_passed: bool,
}

fn cmd_check(
    path: &PathBuf,
    q: usize,
    seed: u64,
    trials: u64,
    ccfg: &CountConfig,
    scfg: &SimConfig,
) -> Result<CheckOutcome, QocError> {
    let def = load_def(path)?;
    let inst = def.to_instance()?;
    let mut verdicts: Vec<VerdictOut> = Vec::new();
    let push = |verdicts: &mut Vec<VerdictOut>, name, passed, detail: String| {
        verdicts.push(VerdictOut {
            name,
            passed,
            detail,
        });
    };

    let free = verify_free(&inst, ccfg.max_pairs)?;
    push(
        &mut verdicts,
        "free_module",
        free,
        if free {
            "all oracle tables are distinct".into()
        } else {
            "basis is dependent: distinct coefficients repeat a table".into()
        },
    );

    let counting = count_optimal(&inst, q, ccfg)?;
    let target = counting.probability.to_f64().unwrap_or(f64::NAN);

    let bracket = closed_form(&def, q as u64)?;
    if let Some(b) = &bracket {
        let ok = b.contains(&counting.probability);
        push(
            &mut verdicts,
            "formula_bracket",
            ok,
            format!(
                "count {} vs bracket [{}, {}] ({})",
                fraction(&counting.probability),
                value_out(&b.lower).decimal,
                value_out(&b.upper).decimal,
                b.regime
            ),
        );
    }

    let sim = optimal_success(&inst, q, ccfg, scfg)?;
    let gap = (sim.total_success - target).abs();
    push(
        &mut verdicts,
        "simulator_equality",
        gap <= scfg.prob_tol,
        format!("|simulator - count| = {gap:e}"),
    );
    let (lo, hi) = sim
        .per_coset_success
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    push(
        &mut verdicts,
        "uniformity",
        hi - lo <= scfg.prob_tol,
        format!("per-coset spread = {:e}", hi - lo),
    );

    let dim = sim.dimension as f64;
    let e = sim.class_size as f64;
    let u2_gap = (&sim.gram * &sim.gram - &sim.gram * num::complex::Complex64::new(dim / e, 0.0))
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    let tr2: f64 = (0..sim.dimension)
        .map(|c| sim.sqrt_gram[(c, c)].norm_sqr())
        .sum();
    let gram_ok = u2_gap <= scfg.matrix_tol && (tr2 - e).abs() <= scfg.matrix_tol;
    push(
        &mut verdicts,
        "gram_identity",
        gram_ok,
        format!("U^2 deviation {u2_gap:e}; squared-diagonal sum {tr2} vs class size {e}"),
    );

    let mut worst = f64::MIN;
    for t in 0..trials {
        let alg = ParallelAlgorithm::random(&inst, q, seed.wrapping_add(t), ccfg)?;
        let p = run_parallel_algorithm(&alg, &inst, q, ccfg, scfg)?;
        worst = worst.max(p);
    }
    push(
        &mut verdicts,
        "dominance",
        trials == 0 || worst <= target + scfg.prob_tol,
        format!("best of {trials} random algorithms: {worst:.6} vs optimum {target:.6}"),
    );

    let mut shift_gap = 0.0f64;
    for t in 0..20u64 {
        let alg = ParallelAlgorithm::random(&inst, q, seed.wrapping_add(10_000 + t), ccfg)?;
        let plain = run_parallel_algorithm(&alg, &inst, q, ccfg, scfg)?;
        let (beta0, gamma0, _) = sample_oracle(&inst, seed.wrapping_add(20_000 + t))?;
        let shifted = oracle_shift_run(&alg, &inst, q, &beta0, &gamma0, ccfg, scfg)?;
        shift_gap = shift_gap.max((plain - shifted).abs());
    }
    push(
        &mut verdicts,
        "shift_invariance",
        shift_gap <= scfg.prob_tol,
        format!("max |plain - shifted| over 20 pairs = {shift_gap:e}"),
    );

    let class = ClassBasis::from_counting(&counting);
    let states = enumerate_vectors(inst.group(), inst.t())
        .iter()
        .map(|gamma| build_class_state(&inst, &class, gamma))
        .collect::<Result<Vec<_>, _>>()?;
    let rank = span_rank(&states);
    push(
        &mut verdicts,
        "rank_bound",
        rank as u64 <= counting.best_class_size,
        format!("span rank {rank} vs class size {}", counting.best_class_size),
    );

    let all_passed = verdicts.iter().all(|v| v.passed);
    let mut report = base_report(&def, &inst, q as u64);
    report.bracket = bracket.as_ref().map(bracket_out);
    report.counting = Some(count_out(&counting, false));
    report.simulator = Some(SimOut {
        total_success: decimal_f64(sim.total_success),
        per_coset_min: decimal_f64(lo),
        per_coset_max: decimal_f64(hi),
        dimension: sim.dimension,
        class_size: sim.class_size,
    });
    report.verdicts = Some(verdicts);
    report.seed = Some(seed);
    report.trials = Some(trials);
    Ok(CheckOutcome { report, all_passed })
}

fn cmd_sweep(
    path: &PathBuf,
    q_min: usize,
    q_max: usize,
    ccfg: &CountConfig,
    scfg: &SimConfig,
) -> Result<SweepReport, QocError> {
    let def = load_def(path)?;
    let inst = def.to_instance()?;
    if q_min > q_max {
        return Err(QocError::domain("--q-min exceeds --q-max"));
    }
    let mut rows = Vec::new();
    for q in q_min..=q_max {
        let bracket = closed_form(&def, q as u64)?;
        let counting = count_optimal(&inst, q, ccfg)?;
        let sim = optimal_success(&inst, q, ccfg, scfg)?;
        rows.push(SweepRow {
            q,
            lower: bracket.as_ref().map(|b| value_out(&b.lower).decimal),
            upper: bracket.as_ref().map(|b| value_out(&b.upper).decimal),
            exact: bracket.as_ref().map(|b| b.exact),
            counting: fraction(&counting.probability),
            decimal: decimal_of(&counting.probability),
            simulator: decimal_f64(sim.total_success),
        });
    }
    Ok(SweepReport {
        instance: inst.label().to_string(),
        kind: def.type_name().to_string(),
        rows,
    })
}

fn print_sweep_csv(report: &SweepReport) {
    println!("q,lower,upper,exact,counting,decimal,simulator");
    for row in &report.rows {
        println!(
            "{},{},{},{},{},{},{}",
            row.q,
            row.lower.as_deref().unwrap_or(""),
            row.upper.as_deref().unwrap_or(""),
            row.exact.map(|e| e.to_string()).unwrap_or_default(),
            row.counting,
            row.decimal,
            row.simulator
        );
    }
}

fn emit<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serialization cannot fail")
    );
}

fn exit_for(err: &QocError) -> u8 {
    match err {
        QocError::Capacity { .. } => 3,
        QocError::Numerical(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<u8, QocError> {
    match cli.command {
        Command::Bound { instance, q } => {
            let report = cmd_bound(&instance, q)?;
            emit(&report);
            Ok(0)
        }
        Command::Count {
            instance,
            q,
            witnesses,
            all_target_sets,
            capacity,
        } => {
            let mut ccfg = CountConfig::default();
            if let Some(c) = capacity {
                ccfg.max_pairs = c;
            }
            let report = cmd_count(&instance, q, witnesses, all_target_sets, &ccfg)?;
            emit(&report);
            Ok(0)
        }
        Command::Check {
            instance,
            q,
            seed,
            trials,
            capacity,
            tolerance,
        } => {
            let mut ccfg = CountConfig::default();
            let mut scfg = SimConfig::default();
            if let Some(c) = capacity {
                ccfg.max_pairs = c;
                scfg.max_oracles = c;
            }
            if let Some(t) = tolerance {
                scfg.prob_tol = t;
            }
            let outcome = cmd_check(&instance, q, seed, trials, &ccfg, &scfg)?;
            emit(&outcome.report);
            if outcome.all_passed {
                Ok(0)
            } else {
                for v in outcome.report.verdicts.as_deref().unwrap_or_default() {
                    if !v.passed {
                        eprintln!("verdict failed: {} ({})", v.name, v.detail);
                    }
                }
                Ok(1)
            }
        }
        Command::Sweep {
            instance,
            q_min,
            q_max,
            format,
            capacity,
        } => {
            let mut ccfg = CountConfig::default();
            if let Some(c) = capacity {
                ccfg.max_pairs = c;
            }
            let scfg = SimConfig::default();
            let report = cmd_sweep(&instance, q_min, q_max, &ccfg, &scfg)?;
            match format {
                Format::Csv => print_sweep_csv(&report),
                Format::Json => emit(&report),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_for(&err)
        }
    };
    eprintln!("wall time: {} ms", started.elapsed().as_millis());
    ExitCode::from(code)
}
