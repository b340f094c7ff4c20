//! Plan execution and the three-way method comparison.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use lmm_core::driver::{find_sequence_seeded, EntryOutcome};
use lmm_core::hilbert::{read_field, GridFunction};
use lmm_core::problem::ProblemDef;

use crate::config::{Method, Resolved};
use crate::output::{csv_bytes, summarize, write_atomic, write_record, EntrySummary};

/// Loads the `[[field]]` solutions onto the problem mesh.
pub fn load_fields(resolved: &Resolved, p: &ProblemDef) -> Result<Vec<(String, GridFunction)>> {
    resolved
        .fields
        .iter()
        .map(|f| {
            let u = read_field(&f.path, p.mesh()).with_context(|| format!("loading field `{}`", f.label))?;
            Ok((f.label.clone(), u))
        })
        .collect()
}

/// Runs the plan with `method` applied on top of the base settings (or the
/// base settings as given when `None`).
pub fn run_plan(resolved: &Resolved, method: Option<Method>) -> Result<(ProblemDef, Vec<EntryOutcome>)> {
    let base = match method {
        Some(m) => m.apply(resolved.base.clone()),
        None => resolved.base.clone(),
    };
    let p = base.build_problem()?;
    let seeds = load_fields(resolved, &p)?;
    let outcomes = find_sequence_seeded(&p, &base, &resolved.plan, &seeds)?;
    Ok((p, outcomes))
}

/// Runs the plan and writes every record plus `summary.json` into `out`.
/// Returns the summaries; all succeeded iff every status is `ok`.
pub fn run_to_dir(resolved: &Resolved, out: &Path) -> Result<Vec<EntrySummary>> {
    std::fs::create_dir_all(out)?;
    let (p, outcomes) = run_plan(resolved, None)?;
    for o in &outcomes {
        if let Ok(r) = &o.result {
            write_record(out, p.mesh(), r)?;
        }
    }
    let summary = summarize(resolved, &outcomes);
    write_atomic(&out.join("summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub solution: String,
    pub method: String,
    pub status: String,
    pub iterations: Option<usize>,
    pub phi_evals: Option<usize>,
    pub linear_solves: Option<usize>,
    pub wall_time_s: f64,
    pub energy: Option<f64>,
    pub expected_energy: Option<f64>,
}

/// One bar of the comparison chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarDatum {
    pub solution: String,
    pub method: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<CompareRow>,
    /// Per solution: converged energies of all methods agree within twice the tolerance.
    pub energy_agreement: BTreeMap<String, bool>,
}

impl ComparisonReport {
    pub fn row(&self, solution: &str, method: Method) -> Option<&CompareRow> {
        let m = method.to_string();
        self.rows.iter().find(|r| r.solution == solution && r.method == m)
    }

    /// Solutions that converged under every method.
    pub fn converged_everywhere(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.solution)
                && Method::ALL
                    .iter()
                    .all(|m| self.row(&r.solution, *m).is_some_and(|x| x.status == "ok"))
            {
                out.push(r.solution.clone());
            }
        }
        out
    }

    pub fn bars(&self) -> Vec<BarDatum> {
        let mut out = Vec::new();
        for r in self.rows.iter().filter(|r| r.status == "ok") {
            let mut push = |metric: &str, value: f64| {
                out.push(BarDatum {
                    solution: r.solution.clone(),
                    method: r.method.clone(),
                    metric: metric.into(),
                    value,
                })
            };
            push("iterations", r.iterations.unwrap_or(0) as f64);
            push("phi_evals", r.phi_evals.unwrap_or(0) as f64);
            push("linear_solves", r.linear_solves.unwrap_or(0) as f64);
            push("wall_time_s", r.wall_time_s);
        }
        out
    }
}

pub fn build_report(resolved: &Resolved, runs: &[(Method, Vec<EntryOutcome>)]) -> ComparisonReport {
    let mut rows = Vec::new();
    for entry in &resolved.plan {
        for (method, outcomes) in runs {
            let o = outcomes
                .iter()
                .find(|o| o.label == entry.label)
                .expect("every plan entry has an outcome");
            let r = o.result.as_ref().ok();
            rows.push(CompareRow {
                solution: entry.label.clone(),
                method: method.to_string(),
                status: if r.is_some() { "ok".into() } else { "failed".into() },
                iterations: r.map(|r| r.iterations),
                phi_evals: r.map(|r| r.phi_evals),
                linear_solves: r.map(|r| r.linear_solves),
                wall_time_s: o.wall_time_s,
                energy: r.map(|r| r.energy),
                expected_energy: resolved.expected(&entry.label),
            });
        }
    }
    let mut energy_agreement = BTreeMap::new();
    for entry in &resolved.plan {
        let es: Vec<f64> = rows
            .iter()
            .filter(|r| r.solution == entry.label)
            .filter_map(|r| r.energy)
            .collect();
        let ok = es.iter().all(|a| {
            es.iter()
                .all(|b| (a - b).abs() <= 2.0 * resolved.tolerance * a.abs().max(b.abs()))
        });
        energy_agreement.insert(entry.label.clone(), ok);
    }
    ComparisonReport { rows, energy_agreement }
}

/// Runs the plan under all three methods, one thread per method.
pub fn compare_runs(resolved: &Resolved) -> Result<Vec<(Method, Vec<EntryOutcome>)>> {
    let results: Vec<Result<(Method, Vec<EntryOutcome>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = Method::ALL
            .iter()
            .map(|&m| scope.spawn(move || run_plan(resolved, Some(m)).map(|(_, o)| (m, o))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("comparison thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}

/// Runs the comparison and writes `comparison.csv`, `bars.csv` and
/// `comparison.json` into `out`.
pub fn compare_to_dir(resolved: &Resolved, out: &Path) -> Result<ComparisonReport> {
    std::fs::create_dir_all(out)?;
    let runs = compare_runs(resolved)?;
    let report = build_report(resolved, &runs);
    write_atomic(&out.join("comparison.csv"), &csv_bytes(&report.rows)?)?;
    write_atomic(&out.join("bars.csv"), &csv_bytes(&report.bars())?)?;
    write_atomic(&out.join("comparison.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}
