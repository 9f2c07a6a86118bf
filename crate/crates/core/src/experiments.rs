//! Experiment drivers shared by the `stabheap` CLI and the acceptance
//! tests.
//!
//! Every driver runs `trials` independent trials in parallel. Trial `i` draws
//! from its own ChaCha stream (`seed`, stream `i`), and rows are emitted in
//! trial order, so a config always produces the same report.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{active_tree, check_legitimacy, tree_height, BalanceParams};
use crate::fault::{generate_with, random_item, GenMode};
use crate::history::{
    check_availability_with, check_stabilization_with, record, HeapImpl, Invocation, StepBound,
};
use crate::node::HeapState;
use crate::ops::{Outcome, StabHeap};
use crate::reference::Multiset;
use crate::strawman::{AlwaysFail, ResetHeap};

/// Step constants frozen from the pilot run (see `stabheap steps`).
pub const STEP_BOUND: StepBound = StepBound { c0: 40, c1: 34 };

/// Frozen slope for the convergence bound `ops ≤ c·max(m, 1)`.
pub const CONVERGENCE_SLOPE: f64 = 4.0;

/// Largest tolerated quadratic share in the convergence fit.
pub const SUPERLINEAR_TOLERANCE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub capacity: usize,
    pub trials: usize,
    /// Operations per trial; each driver documents how it uses this.
    pub ops: usize,
    /// Probability that a random operation is an insert.
    pub insert_prob: f64,
    pub params: BalanceParams,
    pub bound: StepBound,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            capacity: 63,
            trials: 1000,
            ops: 200,
            insert_prob: 0.5,
            params: BalanceParams::default(),
            bound: STEP_BOUND,
        }
    }
}

impl ExperimentConfig {
    fn rng(&self, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial as u64);
        rng
    }

    fn invocation<R: Rng>(&self, rng: &mut R) -> Invocation {
        if rng.gen_bool(self.insert_prob.clamp(0.0, 1.0)) {
            Invocation::Insert(random_item(rng, self.capacity))
        } else {
            Invocation::DeleteMin
        }
    }

    fn arbitrary<R: Rng>(&self, rng: &mut R) -> HeapState<i64> {
        generate_with(rng, self.capacity, GenMode::Arbitrary).expect("capacity is positive")
    }

    fn par_trials<T: Send>(&self, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
        (0..self.trials).into_par_iter().map(f).collect()
    }
}

/// Raw per-trial rows plus a summary block.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<(String, String)>,
    /// Assertion failures; the CLI exits nonzero when this is positive.
    pub failures: u64,
}

impl Report {
    fn new(name: &str, columns: &[&str]) -> Self {
        Report {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Report::default()
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    fn put(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for r in &self.rows {
            writeln!(out, "{}", r.join(",")).unwrap();
        }
        writeln!(out, "\n# summary: {}", self.name).unwrap();
        for (k, v) in &self.summary {
            writeln!(out, "{k},{v}").unwrap();
        }
        writeln!(out, "failures,{}", self.failures).unwrap();
        out
    }

    pub fn to_text(&self) -> String {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| {
                self.columns
                    .iter()
                    .cloned()
                    .zip(r.iter().map(|c| serde_json::Value::String(c.clone())))
                    .collect()
            })
            .collect();
        let summary: serde_json::Map<String, serde_json::Value> = self
            .summary
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        let doc = serde_json::json!({
            "name": self.name,
            "failures": self.failures,
            "summary": summary,
            "rows": rows,
        });
        serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
    }
}

/// Random operations from an empty heap against a sorted multiset.
///
/// Row per trial; `ops` operations each.
pub fn differential(cfg: &ExperimentConfig) -> Report {
    let rows = cfg.par_trials(|trial| {
        let mut rng = cfg.rng(trial);
        let mut heap = StabHeap::new(cfg.capacity).expect("capacity is positive");
        let mut oracle = Multiset::new();
        let (mut mismatches, mut full, mut empty, mut max_steps) = (0u64, 0u64, 0u64, 0u64);
        for _ in 0..cfg.ops {
            let (got, want) = match cfg.invocation(&mut rng) {
                Invocation::Insert(p) => {
                    let want = if oracle.len() < cfg.capacity {
                        oracle.insert(p);
                        Outcome::Ack
                    } else {
                        Outcome::HeapFull
                    };
                    (heap.insert(p), want)
                }
                Invocation::DeleteMin => {
                    let want = oracle.pop_min().map_or(Outcome::HeapEmpty, Outcome::Item);
                    (heap.delete_min(), want)
                }
            };
            match got.outcome {
                Outcome::HeapFull => full += 1,
                Outcome::HeapEmpty => empty += 1,
                _ => {}
            }
            if got.outcome != want {
                mismatches += 1;
            }
            max_steps = max_steps.max(got.steps);
        }
        (mismatches, full, empty, max_steps)
    });

    let mut report = Report::new(
        "differential",
        &[
            "trial",
            "ops",
            "mismatches",
            "heap_full",
            "heap_empty",
            "max_steps",
        ],
    );
    let mut total = 0;
    let mut max_steps = 0;
    for (trial, (mm, full, empty, steps)) in rows.into_iter().enumerate() {
        report.row(vec![
            trial.to_string(),
            cfg.ops.to_string(),
            mm.to_string(),
            full.to_string(),
            empty.to_string(),
            steps.to_string(),
        ]);
        total += mm;
        max_steps = max_steps.max(steps);
    }
    report.put("capacity", cfg.capacity);
    report.put("ops_executed", cfg.ops * cfg.trials);
    report.put("mismatches", total);
    report.put("max_steps", max_steps);
    report.failures = total;
    report
}

/// Checks one operation against the availability contract on the active
/// tree's bag: an acknowledged insert adds exactly `p`, a failed one changes
/// nothing, delete-min fails iff the bag is empty and otherwise removes and
/// returns its minimum.
pub fn bag_contract(
    before: &[i64],
    invocation: Invocation,
    outcome: &Outcome<i64>,
    after: &[i64],
) -> Result<(), String> {
    let mut expected: Multiset<i64> = before.iter().copied().collect();
    match (invocation, outcome) {
        (Invocation::Insert(p), Outcome::Ack) => expected.insert(p),
        (Invocation::Insert(_), Outcome::HeapFull) => {}
        (Invocation::DeleteMin, Outcome::HeapEmpty) => {
            if !before.is_empty() {
                return Err(format!("HeapEmpty with {} active items", before.len()));
            }
        }
        (Invocation::DeleteMin, Outcome::Item(q)) => match expected.min() {
            Some(min) if min == q => {
                expected.pop_min();
            }
            Some(min) => return Err(format!("returned {q}, active minimum is {min}")),
            None => return Err(format!("returned {q} from an empty active tree")),
        },
        (inv, out) => return Err(format!("{out:?} does not answer {inv:?}")),
    }
    let expected = expected.to_sorted_vec();
    if expected != after {
        return Err(format!("bag after is {after:?}, expected {expected:?}"));
    }
    Ok(())
}

fn bag(state: &HeapState<i64>) -> Vec<i64> {
    check_legitimacy(state, &BalanceParams::default()).bag
}

/// Availability contract and the capacity step bound from arbitrary states.
///
/// Each trial generates one arbitrary state and checks `ops` consecutive
/// operations.
pub fn single_op_contract(cfg: &ExperimentConfig) -> Report {
    let limit = cfg.bound.for_capacity(cfg.capacity);
    let rows = cfg.par_trials(|trial| {
        let mut rng = cfg.rng(trial);
        let mut heap = StabHeap::from_state(cfg.arbitrary(&mut rng));
        let m = active_tree(heap.state()).len();
        let (mut contract, mut steps_bad, mut max_steps) = (0u64, 0u64, 0u64);
        let mut first_error = String::new();
        for _ in 0..cfg.ops {
            let before = bag(heap.state());
            let inv = cfg.invocation(&mut rng);
            let r = match inv {
                Invocation::Insert(p) => heap.insert(p),
                Invocation::DeleteMin => heap.delete_min(),
            };
            if let Err(e) = bag_contract(&before, inv, &r.outcome, &bag(heap.state())) {
                if contract == 0 {
                    first_error = e;
                }
                contract += 1;
            }
            if r.steps > limit {
                steps_bad += 1;
            }
            max_steps = max_steps.max(r.steps);
        }
        (m, contract, steps_bad, max_steps, first_error)
    });

    let mut report = Report::new(
        "single_op_contract",
        &[
            "trial",
            "m",
            "ops",
            "contract_failures",
            "step_failures",
            "max_steps",
        ],
    );
    let (mut contract, mut steps_bad, mut max_steps) = (0, 0, 0);
    let mut first = None;
    for (trial, (m, c, s, mx, err)) in rows.into_iter().enumerate() {
        report.row(vec![
            trial.to_string(),
            m.to_string(),
            cfg.ops.to_string(),
            c.to_string(),
            s.to_string(),
            mx.to_string(),
        ]);
        if c > 0 && first.is_none() {
            first = Some(format!("trial {trial}: {err}"));
        }
        contract += c;
        steps_bad += s;
        max_steps = max_steps.max(mx);
    }
    report.put("capacity", cfg.capacity);
    report.put("operations", cfg.trials * cfg.ops);
    report.put("contract_failures", contract);
    report.put("step_failures", steps_bad);
    report.put("step_limit", limit);
    report.put("max_steps", max_steps);
    if let Some(f) = first {
        report.put("first_contract_failure", f);
    }
    report.failures = contract + steps_bad;
    report
}

/// `⌊(m+1)/2⌋` calls of `verify(root)` from arbitrary states, then
/// `T_A = S_A` and conditions (i), (iii), (iv).
pub fn scan_repair(cfg: &ExperimentConfig) -> Report {
    let rows = cfg.par_trials(|trial| {
        let mut rng = cfg.rng(trial);
        let mut heap = StabHeap::from_state(cfg.arbitrary(&mut rng));
        let m = active_tree(heap.state()).len();
        let calls = m.div_ceil(2);
        for _ in 0..calls {
            heap.verify_root();
        }
        let r = check_legitimacy(heap.state(), &cfg.params);
        (m, calls, r.t_members == r.s_members && r.scan_conditions())
    });
    let mut report = Report::new("scan_repair", &["trial", "m", "verify_calls", "pass"]);
    let mut fails = 0;
    for (trial, (m, calls, pass)) in rows.into_iter().enumerate() {
        report.row(vec![
            trial.to_string(),
            m.to_string(),
            calls.to_string(),
            pass.to_string(),
        ]);
        fails += u64::from(!pass);
    }
    report.put("capacity", cfg.capacity);
    report.put("trials", cfg.trials);
    report.put("passed", cfg.trials as u64 - fails);
    report.failures = fails;
    report
}

/// After `m+1` operations, conditions (i), (iii), (iv) hold at each of the
/// next `ops` states.
///
/// Rows also carry `scan_ops`: the operation count after which the
/// conditions held for the rest of the run.
pub fn field_repair(cfg: &ExperimentConfig) -> Report {
    let rows = cfg.par_trials(|trial| {
        let mut rng = cfg.rng(trial);
        let mut heap = StabHeap::from_state(cfg.arbitrary(&mut rng));
        let m = active_tree(heap.state()).len();
        let total = m + cfg.ops;
        let mut first_bad: Option<usize> = None;
        let mut last_bad: Option<usize> = None;
        if !check_legitimacy(heap.state(), &cfg.params).scan_conditions() {
            last_bad = Some(0);
        }
        for op in 1..=total {
            match cfg.invocation(&mut rng) {
                Invocation::Insert(p) => heap.insert(p),
                Invocation::DeleteMin => heap.delete_min(),
            };
            if !check_legitimacy(heap.state(), &cfg.params).scan_conditions() {
                last_bad = Some(op);
                if op > m && first_bad.is_none() {
                    first_bad = Some(op);
                }
            }
        }
        let scan_ops = last_bad.map_or(0, |b| b + 1);
        (m, first_bad, scan_ops)
    });
    let mut report = Report::new(
        "field_repair",
        &["trial", "m", "scan_ops", "first_failure", "pass"],
    );
    let mut fails = 0;
    let mut worst_excess: i64 = i64::MIN;
    for (trial, (m, first_bad, scan_ops)) in rows.into_iter().enumerate() {
        report.row(vec![
            trial.to_string(),
            m.to_string(),
            scan_ops.to_string(),
            first_bad.map_or("-".into(), |b| b.to_string()),
            first_bad.is_none().to_string(),
        ]);
        fails += u64::from(first_bad.is_some());
        worst_excess = worst_excess.max(scan_ops as i64 - (m as i64 + 1));
    }
    report.put("capacity", cfg.capacity);
    report.put("trials", cfg.trials);
    report.put("checked_states_per_trial", cfg.ops);
    report.put("passed", cfg.trials as u64 - fails);
    report.put("max_scan_ops_minus_m_plus_1", worst_excess);
    report.failures = fails;
    report
}

/// Per-trial convergence measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub m: usize,
    /// Operations until every later state in the window is legitimate.
    pub ops_to_legit: usize,
    /// Operations until every later state satisfies (i), (iii), (iv).
    pub ops_to_scan: usize,
    pub initial_gap: usize,
    /// Operations, taken from a state satisfying (i), (iii), (iv), after
    /// which the gap increased or failed to drop from a positive value.
    pub gap_violations: usize,
    /// Whether the final state of the window is legitimate.
    pub converged: bool,
}

/// Least-squares fits of `ops_to_legit` against `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceFit {
    pub intercept: f64,
    pub slope: f64,
    pub quadratic: f64,
    /// `max(quadratic, 0)·mean(m²) / mean(ops)`: the share of the mean
    /// explained by upward curvature. A negative quadratic term is sublinear.
    pub superlinear_share: f64,
    /// `max ops / max(m, 1)` over all trials.
    pub max_ratio: f64,
}

/// Ordinary least squares for `y = Σ β_j x^j`, `j < degree + 1`.
fn poly_fit(xs: &[f64], ys: &[f64], degree: usize) -> Option<Vec<f64>> {
    let n = degree + 1;
    let mut a = vec![vec![0.0; n + 1]; n];
    for (&x, &y) in xs.iter().zip(ys) {
        let pows: Vec<f64> = (0..n).map(|j| x.powi(j as i32)).collect();
        for i in 0..n {
            for j in 0..n {
                a[i][j] += pows[i] * pows[j];
            }
            a[i][n] += pows[i] * y;
        }
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != col {
                let f = row[col] / pivot_row[col];
                for (cell, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                    *cell -= f * p;
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

pub fn fit_convergence(rows: &[ConvergenceRow]) -> ConvergenceFit {
    let xs: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ops_to_legit as f64).collect();
    let n = rows.len().max(1) as f64;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mean_x2 = xs.iter().map(|x| x * x).sum::<f64>() / n;
    let lin = poly_fit(&xs, &ys, 1).unwrap_or_else(|| vec![mean_y, 0.0]);
    let quad = poly_fit(&xs, &ys, 2).map_or(0.0, |b| b[2]);
    let superlinear_share = if mean_y > 0.0 {
        quad.max(0.0) * mean_x2 / mean_y
    } else {
        0.0
    };
    let max_ratio = rows
        .iter()
        .map(|r| r.ops_to_legit as f64 / r.m.max(1) as f64)
        .fold(0.0, f64::max);
    ConvergenceFit {
        intercept: lin[0],
        slope: lin[1],
        quadratic: quad,
        superlinear_share,
        max_ratio,
    }
}

/// Runs one convergence trial from `state` for `window` operations.
pub fn convergence_trial<R: Rng>(
    cfg: &ExperimentConfig,
    rng: &mut R,
    state: HeapState<i64>,
    window: usize,
) -> ConvergenceRow {
    let mut heap = StabHeap::from_state(state);
    let first = check_legitimacy(heap.state(), &cfg.params);
    let m = first.m;
    let initial_gap = first.gap;
    let mut last_illegit = (!first.legitimate).then_some(0);
    let mut last_unscanned = (!first.scan_conditions()).then_some(0);
    let mut prev = first;
    let mut gap_violations = 0;
    for op in 1..=window {
        match cfg.invocation(rng) {
            Invocation::Insert(p) => heap.insert(p),
            Invocation::DeleteMin => heap.delete_min(),
        };
        let now = check_legitimacy(heap.state(), &cfg.params);
        if prev.scan_conditions() {
            let dropped = if prev.gap > 0 {
                now.gap < prev.gap
            } else {
                now.gap == 0
            };
            if !dropped {
                gap_violations += 1;
            }
        }
        if !now.legitimate {
            last_illegit = Some(op);
        }
        if !now.scan_conditions() {
            last_unscanned = Some(op);
        }
        prev = now;
    }
    ConvergenceRow {
        m,
        ops_to_legit: last_illegit.map_or(0, |o| o + 1),
        ops_to_scan: last_unscanned.map_or(0, |o| o + 1),
        initial_gap,
        gap_violations,
        converged: prev.legitimate,
    }
}

/// Operations to full legitimacy from arbitrary states.
///
/// Each trial runs `4·max(m,1) + ops` operations, so the window extends
/// `ops` operations past the frozen linear bound.
pub fn convergence_rows(cfg: &ExperimentConfig) -> Vec<ConvergenceRow> {
    cfg.par_trials(|trial| {
        let mut rng = cfg.rng(trial);
        let state = cfg.arbitrary(&mut rng);
        let m = active_tree(&state).len();
        let window = (CONVERGENCE_SLOPE as usize) * m.max(1) + cfg.ops;
        convergence_trial(cfg, &mut rng, state, window)
    })
}

/// Insert probabilities reported alongside the configured one.
pub const SEGMENT_MIXES: [f64; 2] = [0.25, 0.75];

/// Convergence report for the configured mix. The summary also carries the
/// fitted slope and worst ratio for each of [`SEGMENT_MIXES`]; those
/// segments are informational and do not count as failures.
pub fn convergence(cfg: &ExperimentConfig) -> Report {
    let mut report = convergence_report(cfg, &convergence_rows(cfg));
    for mix in SEGMENT_MIXES {
        let seg = ExperimentConfig {
            insert_prob: mix,
            ..cfg.clone()
        };
        let fit = fit_convergence(&convergence_rows(&seg));
        report.put(&format!("slope@{mix}"), format!("{:.4}", fit.slope));
        report.put(
            &format!("max_ops_per_m@{mix}"),
            format!("{:.4}", fit.max_ratio),
        );
    }
    report
}

pub fn convergence_report(cfg: &ExperimentConfig, rows: &[ConvergenceRow]) -> Report {
    let mut report = Report::new(
        "convergence",
        &[
            "trial",
            "m",
            "ops_to_legit",
            "ops_to_scan",
            "initial_gap",
            "gap_violations",
            "converged",
        ],
    );
    let mut gap_violations = 0;
    let mut unconverged = 0;
    let mut over_bound = 0;
    for (trial, r) in rows.iter().enumerate() {
        report.row(vec![
            trial.to_string(),
            r.m.to_string(),
            r.ops_to_legit.to_string(),
            r.ops_to_scan.to_string(),
            r.initial_gap.to_string(),
            r.gap_violations.to_string(),
            r.converged.to_string(),
        ]);
        gap_violations += r.gap_violations as u64;
        unconverged += u64::from(!r.converged);
        over_bound += u64::from(r.ops_to_legit as f64 > CONVERGENCE_SLOPE * r.m.max(1) as f64);
    }
    let fit = fit_convergence(rows);
    report.put("capacity", cfg.capacity);
    report.put("insert_prob", cfg.insert_prob);
    report.put("trials", rows.len());
    report.put("max_m", rows.iter().map(|r| r.m).max().unwrap_or(0));
    report.put("fit_intercept", format!("{:.4}", fit.intercept));
    report.put("fit_slope", format!("{:.4}", fit.slope));
    report.put("fit_quadratic", format!("{:.6}", fit.quadratic));
    report.put("superlinear_share", format!("{:.4}", fit.superlinear_share));
    report.put("max_ops_per_m", format!("{:.4}", fit.max_ratio));
    report.put("frozen_slope", CONVERGENCE_SLOPE);
    report.put("over_bound", over_bound);
    report.put("unconverged", unconverged);
    report.put("gap_violations", gap_violations);
    let superlinear = u64::from(fit.superlinear_share >= SUPERLINEAR_TOLERANCE);
    report.failures = gap_violations + unconverged + over_bound + superlinear;
    report
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predicate {
    Availability,
    Stabilization,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Implementation {
    Stabilizing,
    AlwaysFail,
    Reset,
}

/// One recorded history checked against a predicate.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryRow {
    pub m: usize,
    pub window: usize,
    pub violations: usize,
    pub first_violation: Option<String>,
    pub convergence_period: Option<usize>,
    /// Content size at the end of the run, per the witness.
    pub final_content: Option<usize>,
}

/// Records a history per trial from an arbitrary state and checks it.
///
/// Windows are `max(ops, 4·m)` operations. For availability the witness
/// prefix is the active-tree bag of the starting state (empty for the
/// always-fail heap, and the legitimate content, if any, for the reset
/// heap).
pub fn history_rows(
    cfg: &ExperimentConfig,
    predicate: Predicate,
    implementation: Implementation,
) -> Vec<HistoryRow> {
    cfg.par_trials(|trial| {
        let mut rng = cfg.rng(trial);
        let state = cfg.arbitrary(&mut rng);
        let m = active_tree(&state).len();
        let window = cfg.ops.max(4 * m);
        let invocations: Vec<Invocation> = (0..window).map(|_| cfg.invocation(&mut rng)).collect();
        let (prefix, rec) = match implementation {
            Implementation::Stabilizing => {
                let prefix = bag(&state);
                let mut heap = StabHeap::from_state(state);
                (prefix, record(&mut heap, &invocations, &cfg.params))
            }
            Implementation::AlwaysFail => {
                let mut heap = AlwaysFail::new(cfg.capacity);
                (Vec::new(), record(&mut heap, &invocations, &cfg.params))
            }
            Implementation::Reset => {
                let mut heap = ResetHeap::from_state(&state);
                let prefix = heap.legitimate_content(&cfg.params).unwrap_or_default();
                (prefix, record(&mut heap, &invocations, &cfg.params))
            }
        };
        let final_content = rec.witnesses.last().cloned().flatten().map(|c| c.len());
        let (verdict, period) = match predicate {
            Predicate::Availability => (
                check_availability_with(&rec.history, &prefix, cfg.capacity, &cfg.bound),
                None,
            ),
            Predicate::Stabilization => {
                let s = check_stabilization_with(
                    &rec.history,
                    &rec.witnesses,
                    cfg.capacity,
                    &cfg.bound,
                )
                .expect("one witness per point");
                (s.verdict, s.convergence_period)
            }
        };
        HistoryRow {
            m,
            window,
            violations: verdict.violations.len(),
            first_violation: verdict.violations.first().map(|v| v.to_string()),
            convergence_period: period,
            final_content,
        }
    })
}

pub fn history_report(
    cfg: &ExperimentConfig,
    predicate: Predicate,
    implementation: Implementation,
) -> Report {
    let rows = history_rows(cfg, predicate, implementation);
    let mut report = Report::new(
        "history",
        &[
            "trial",
            "m",
            "window",
            "violations",
            "convergence_period",
            "final_content",
        ],
    );
    let mut violations = 0;
    let mut periods = Vec::new();
    let mut max_ratio: f64 = 0.0;
    let mut over_bound = 0;
    let mut first = None;
    for (trial, r) in rows.iter().enumerate() {
        report.row(vec![
            trial.to_string(),
            r.m.to_string(),
            r.window.to_string(),
            r.violations.to_string(),
            r.convergence_period.map_or("-".into(), |p| p.to_string()),
            r.final_content.map_or("-".into(), |c| c.to_string()),
        ]);
        violations += r.violations as u64;
        if first.is_none() {
            if let Some(v) = &r.first_violation {
                first = Some(format!("trial {trial}: {v}"));
            }
        }
        if let Some(p) = r.convergence_period {
            periods.push(p);
            max_ratio = max_ratio.max(p as f64 / r.m.max(1) as f64);
            over_bound += u64::from(p as f64 > CONVERGENCE_SLOPE * r.m.max(1) as f64);
        }
    }
    periods.sort_unstable();
    report.put("capacity", cfg.capacity);
    report.put("predicate", format!("{predicate:?}").to_lowercase());
    report.put(
        "implementation",
        format!("{implementation:?}").to_lowercase(),
    );
    report.put("histories", rows.len());
    report.put("violations", violations);
    if let Some(f) = first {
        report.put("first_violation", f);
    }
    if predicate == Predicate::Stabilization && !periods.is_empty() {
        report.put("period_min", periods[0]);
        report.put("period_median", periods[periods.len() / 2]);
        report.put("period_max", periods[periods.len() - 1]);
        report.put("period_max_per_m", format!("{max_ratio:.4}"));
    }
    report.failures = violations;
    // The linear convergence bound is only claimed for the stabilizing heap.
    if predicate == Predicate::Stabilization && implementation == Implementation::Stabilizing {
        report.put("period_over_bound", over_bound);
        report.failures += over_bound;
    }
    report
}

/// Maximum visits per operation at one capacity.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRow {
    pub capacity: usize,
    /// Largest count from arbitrary starting states.
    pub max_arbitrary: u64,
    /// Largest count from legitimate states.
    pub max_legit: u64,
    /// Operations over `bound.for_capacity(K)`.
    pub capacity_violations: u64,
    /// Legitimate-state operations over `bound.for_height(height(S_A))`.
    pub height_violations: u64,
}

/// For each capacity: `trials` arbitrary states with `ops` operations each,
/// and `trials` legitimate states of random size with `ops` operations each.
pub fn step_rows(cfg: &ExperimentConfig, capacities: &[usize]) -> Vec<StepRow> {
    capacities
        .iter()
        .map(|&k| {
            let c = ExperimentConfig {
                capacity: k,
                ..cfg.clone()
            };
            let limit = c.bound.for_capacity(k);
            let per_trial = c.par_trials(|trial| {
                let mut rng = c.rng(trial);
                let (mut max_a, mut max_l, mut cap_bad, mut h_bad) = (0, 0, 0, 0);
                let mut heap = StabHeap::from_state(c.arbitrary(&mut rng));
                for _ in 0..c.ops {
                    let r = match c.invocation(&mut rng) {
                        Invocation::Insert(p) => heap.insert(p),
                        Invocation::DeleteMin => heap.delete_min(),
                    };
                    max_a = max_a.max(r.steps);
                    cap_bad += u64::from(r.steps > limit);
                }
                let items = rng.gen_range(0..=k);
                let state = generate_with(&mut rng, k, GenMode::Legitimate { items })
                    .expect("items within capacity");
                let mut heap = StabHeap::from_state(state);
                for _ in 0..c.ops {
                    let height = tree_height(&active_tree(heap.state()));
                    let r = match c.invocation(&mut rng) {
                        Invocation::Insert(p) => heap.insert(p),
                        Invocation::DeleteMin => heap.delete_min(),
                    };
                    max_l = max_l.max(r.steps);
                    cap_bad += u64::from(r.steps > limit);
                    h_bad += u64::from(r.steps > c.bound.for_height(height));
                }
                (max_a, max_l, cap_bad, h_bad)
            });
            per_trial.into_iter().fold(
                StepRow {
                    capacity: k,
                    max_arbitrary: 0,
                    max_legit: 0,
                    capacity_violations: 0,
                    height_violations: 0,
                },
                |mut acc, (a, l, cb, hb)| {
                    acc.max_arbitrary = acc.max_arbitrary.max(a);
                    acc.max_legit = acc.max_legit.max(l);
                    acc.capacity_violations += cb;
                    acc.height_violations += hb;
                    acc
                },
            )
        })
        .collect()
}

pub fn steps_report(cfg: &ExperimentConfig, capacities: &[usize]) -> Report {
    let rows = step_rows(cfg, capacities);
    let mut report = Report::new(
        "steps",
        &[
            "capacity",
            "levels",
            "max_arbitrary",
            "max_legit",
            "capacity_bound",
            "capacity_violations",
            "height_violations",
        ],
    );
    let mut fails = 0;
    for r in &rows {
        report.row(vec![
            r.capacity.to_string(),
            (r.capacity.ilog2() + 1).to_string(),
            r.max_arbitrary.to_string(),
            r.max_legit.to_string(),
            cfg.bound.for_capacity(r.capacity).to_string(),
            r.capacity_violations.to_string(),
            r.height_violations.to_string(),
        ]);
        fails += r.capacity_violations + r.height_violations;
    }
    report.put("c0", cfg.bound.c0);
    report.put("c1", cfg.bound.c1);
    report.failures = fails;
    report
}
