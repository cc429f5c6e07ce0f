//! ECDF and average-runtime computation plus CSV/JSON report emission.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::TargetSpec;
use crate::records::{runs_csv, RunRecord};
use crate::BenchError;

/// Log-spaced budget-per-dimension grid: 20 points per decade from 1 to
/// 10^6 evaluations per dimension.
pub fn default_budget_grid() -> Vec<f64> {
    (0..=120).map(|k| 10f64.powf(k as f64 / 20.0)).collect()
}

fn log10_grid_labels() -> Vec<f64> {
    (0..=120).map(|k| k as f64 / 20.0).collect()
}

/// Fraction of `(run, target)` pairs solved within each budget (budgets are
/// per dimension: a record contributes its history up to `budget * dim`).
pub fn compute_ecdf(
    records: &[RunRecord],
    targets: &TargetSpec,
    budgets: &[f64],
) -> Vec<(f64, f64)> {
    let exponents = targets.exponents();
    let total_pairs = (records.len() * exponents.len()) as f64;
    budgets
        .iter()
        .map(|&budget| {
            if total_pairs == 0.0 {
                return (budget, 0.0);
            }
            let mut hits = 0usize;
            for record in records {
                let allowance = (budget * record.dim as f64).floor() as u64;
                let best = record.best_within(allowance);
                for &k in &exponents {
                    if best <= record.f_opt + 10f64.powf(k) {
                        hits += 1;
                    }
                }
            }
            (budget, hits as f64 / total_pairs)
        })
        .collect()
}

/// Average runtime for the target `f_opt + precision`: total evaluations
/// spent across all runs before the target was hit (unsuccessful runs
/// contribute their full consumption), divided by the number of successful
/// runs. Infinite when no run succeeded.
pub fn compute_art(records: &[RunRecord], precision: f64) -> f64 {
    assert!(!records.is_empty(), "need at least one record");
    let mut successes = 0u64;
    let mut spent = 0u64;
    for record in records {
        match record.first_hit(record.f_opt + precision) {
            Some(evals) => {
                successes += 1;
                spent += evals;
            }
            None => spent += record.total_evals(),
        }
    }
    if successes == 0 {
        f64::INFINITY
    } else {
        spent as f64 / successes as f64
    }
}

/// Best run per (problem, dim), mirroring the single-run result tables:
/// the error is relative when `|f_opt|` is meaningfully away from zero
/// (above 1e-5), absolute otherwise.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryEntry {
    pub problem: String,
    pub dim: usize,
    pub f_opt: f64,
    pub best_f: f64,
    pub abs_error: f64,
    pub error: f64,
    pub error_is_relative: bool,
    pub generations: u64,
    pub evals: u64,
    pub termination: String,
    pub instances: usize,
}

pub fn summarize(records: &[RunRecord]) -> Vec<SummaryEntry> {
    let keys: BTreeSet<(String, usize)> =
        records.iter().map(|r| (r.problem.clone(), r.dim)).collect();
    keys.into_iter()
        .map(|(problem, dim)| {
            let group: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.problem == problem && r.dim == dim)
                .collect();
            let best = group
                .iter()
                .min_by(|a, b| {
                    let ea = (a.best_f() - a.f_opt).abs();
                    let eb = (b.best_f() - b.f_opt).abs();
                    ea.total_cmp(&eb)
                })
                .expect("group is non-empty");
            let abs_error = (best.best_f() - best.f_opt).abs();
            let relative = best.f_opt.abs() > 1e-5;
            SummaryEntry {
                problem,
                dim,
                f_opt: best.f_opt,
                best_f: best.best_f(),
                abs_error,
                error: if relative {
                    abs_error / best.f_opt.abs()
                } else {
                    abs_error
                },
                error_is_relative: relative,
                generations: best.generations,
                evals: best.total_evals(),
                termination: best.termination.to_string(),
                instances: group.len(),
            }
        })
        .collect()
}

/// ECDF rows per problem group plus the all-problems aggregate.
pub fn ecdf_csv(records: &[RunRecord], targets: &TargetSpec) -> String {
    let budgets = default_budget_grid();
    let labels = log10_grid_labels();
    let mut out = String::from("problem_group,dim,log10_budget_per_dim,fraction\n");
    let mut groups: Vec<String> = records
        .iter()
        .map(|r| r.problem.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if records.len() > 1 {
        groups.push("all".into());
    }
    for group in groups {
        let dims: BTreeSet<usize> = records
            .iter()
            .filter(|r| group == "all" || r.problem == group)
            .map(|r| r.dim)
            .collect();
        for dim in dims {
            let selected: Vec<RunRecord> = records
                .iter()
                .filter(|r| (group == "all" || r.problem == group) && r.dim == dim)
                .cloned()
                .collect();
            let curve = compute_ecdf(&selected, targets, &budgets);
            for ((_, fraction), label) in curve.iter().zip(labels.iter()) {
                out.push_str(&format!("{group},{dim},{label:.2},{fraction}\n"));
            }
        }
    }
    out
}

/// Average-runtime rows per problem, dimension, and target exponent.
pub fn art_csv(records: &[RunRecord], targets: &TargetSpec) -> String {
    let mut out = String::from("problem,dim,target_exponent,art\n");
    let keys: BTreeSet<(String, usize)> =
        records.iter().map(|r| (r.problem.clone(), r.dim)).collect();
    for (problem, dim) in keys {
        let group: Vec<RunRecord> = records
            .iter()
            .filter(|r| r.problem == problem && r.dim == dim)
            .cloned()
            .collect();
        for k in targets.exponents() {
            let art = compute_art(&group, 10f64.powf(k));
            let rendered = if art.is_finite() {
                format!("{art}")
            } else {
                "inf".into()
            };
            out.push_str(&format!("{problem},{dim},{k:.2},{rendered}\n"));
        }
    }
    out
}

/// Renders per-generation dynamics rows collected from a traced run.
pub fn trace_csv(rows: &[lccmsa::es_core::GenerationTrace]) -> String {
    let mut out = String::from("generation,sigma,best_f,bsf_f,evals_objective,evals_constraint\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.generation,
            row.sigma,
            row.best_f,
            row.bsf_f,
            row.evals_objective,
            row.evals_constraint
        ));
    }
    out
}

/// Writes `runs.csv`, `ecdf.csv`, `art.csv`, and `summary.json`.
pub fn emit_report(
    records: &[RunRecord],
    targets: &TargetSpec,
    out_dir: &Path,
) -> Result<(), BenchError> {
    fs::create_dir_all(out_dir).map_err(|e| BenchError::io(out_dir.display().to_string(), e))?;
    let write = |name: &str, contents: String| -> Result<(), BenchError> {
        let path = out_dir.join(name);
        fs::write(&path, contents).map_err(|e| BenchError::io(path.display().to_string(), e))
    };
    write("runs.csv", runs_csv(records))?;
    write("ecdf.csv", ecdf_csv(records, targets))?;
    write("art.csv", art_csv(records, targets))?;
    let summary = serde_json::to_string_pretty(&summarize(records))
        .map_err(|e| BenchError::Records(e.to_string()))?;
    write("summary.json", summary + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use lccmsa::es_core::TerminationReason;

    fn record(problem: &str, dim: usize, history: Vec<(u64, f64)>, f_opt: f64) -> RunRecord {
        RunRecord {
            problem: problem.into(),
            dim,
            instance_seed: 1,
            history,
            f_opt,
            reference_only: false,
            termination: TerminationReason::Budget,
            generations: 1,
            contract_violations: 0,
        }
    }

    #[test]
    fn ecdf_jumps_to_one_for_an_instant_hit() {
        let targets = TargetSpec {
            k_min: -2.0,
            k_max: 0.0,
            count: 3,
        };
        // Hits every target at the first evaluation.
        let r = record("p", 2, vec![(1, -100.0)], 0.0);
        let curve = compute_ecdf(&[r], &targets, &[0.5, 1.0, 10.0]);
        assert_eq!(curve[0].1, 1.0); // budget 0.5/dim => 1 eval allowed
        assert_eq!(curve[2].1, 1.0);
    }

    #[test]
    fn ecdf_is_zero_when_no_target_reached() {
        let targets = TargetSpec {
            k_min: -2.0,
            k_max: 2.0,
            count: 5,
        };
        let r = record("p", 2, vec![(1, 1e6)], 0.0);
        let curve = compute_ecdf(&[r], &targets, &default_budget_grid());
        assert!(curve.iter().all(|&(_, f)| f == 0.0));
    }

    #[test]
    fn ecdf_matches_hand_enumeration() {
        let targets = TargetSpec {
            k_min: -1.0,
            k_max: 1.0,
            count: 3, // targets: f_opt + 10, + 1, + 0.1
        };
        // Record A (dim 1): hits +10 at 5 evals, +1 at 20 evals, never +0.1.
        let a = record("p", 1, vec![(5, 9.0), (20, 0.5), (30, 0.5)], 0.0);
        // Record B (dim 1): hits everything at 8 evals.
        let b = record("p", 1, vec![(8, 0.05)], 0.0);
        let curve = compute_ecdf(&[a, b], &targets, &[6.0, 10.0, 25.0]);
        // Budget 6: A hit +10 (1 pair); B nothing. 1/6.
        assert!((curve[0].1 - 1.0 / 6.0).abs() < 1e-12);
        // Budget 10: A has +10; B has all 3. 4/6.
        assert!((curve[1].1 - 4.0 / 6.0).abs() < 1e-12);
        // Budget 25: A has +10 and +1; B all 3. 5/6.
        assert!((curve[2].1 - 5.0 / 6.0).abs() < 1e-12);
        // Monotone in budget.
        assert!(curve[0].1 <= curve[1].1 && curve[1].1 <= curve[2].1);
    }

    #[test]
    fn art_formula_fixtures() {
        // Two successes at 100 and 200 evals, one failure consuming 300.
        let records = vec![
            record("p", 2, vec![(100, 0.0)], 0.0),
            record("p", 2, vec![(200, 0.0)], 0.0),
            record("p", 2, vec![(300, 50.0)], 0.0),
        ];
        let art = compute_art(&records, 1.0);
        assert_eq!(art, 600.0 / 2.0);

        let all_hit = vec![record("p", 2, vec![(10, 0.0)], 0.0)];
        assert_eq!(compute_art(&all_hit, 1.0), 10.0);

        let none = vec![record("p", 2, vec![(10, 99.0)], 0.0)];
        assert!(compute_art(&none, 1.0).is_infinite());
    }

    #[test]
    fn empty_record_list_emits_headers_only() {
        let dir = std::env::temp_dir().join(format!("bench_report_{}", std::process::id()));
        emit_report(&[], &TargetSpec::default(), &dir).unwrap();
        let runs = std::fs::read_to_string(dir.join("runs.csv")).unwrap();
        assert_eq!(runs.lines().count(), 1);
        let ecdf = std::fs::read_to_string(dir.join("ecdf.csv")).unwrap();
        assert_eq!(ecdf.lines().count(), 1);
        let art = std::fs::read_to_string(dir.join("art.csv")).unwrap();
        assert_eq!(art.lines().count(), 1);
        let summary = std::fs::read_to_string(dir.join("summary.json")).unwrap();
        assert_eq!(summary.trim(), "[]");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn emitted_ecdf_fractions_are_monotone_and_bounded() {
        let targets = TargetSpec::default();
        let records = vec![
            record("p", 2, vec![(5, 0.5), (50, 1e-9), (80, 1e-9)], 0.0),
            record("q", 2, vec![(9, 1e-3), (90, 1e-3)], 0.0),
        ];
        let text = ecdf_csv(&records, &targets);
        let mut last: Option<(String, usize, f64)> = None;
        for line in text.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            let group = fields[0].to_string();
            let dim: usize = fields[1].parse().unwrap();
            let fraction: f64 = fields[3].parse().unwrap();
            assert!((0.0..=1.0).contains(&fraction));
            if let Some((g, d, f)) = &last {
                if *g == group && *d == dim {
                    assert!(fraction >= *f, "fraction decreased within a curve");
                }
            }
            last = Some((group, dim, fraction));
        }
    }

    #[test]
    fn summary_uses_relative_error_only_for_large_optima() {
        let records = vec![
            record("big", 1, vec![(10, -4.9999)], -5.0),
            record("tiny", 1, vec![(10, 1e-7)], 0.0),
        ];
        let summary = summarize(&records);
        let big = summary.iter().find(|e| e.problem == "big").unwrap();
        assert!(big.error_is_relative);
        assert!((big.error - 0.0001 / 5.0).abs() < 1e-9);
        let tiny = summary.iter().find(|e| e.problem == "tiny").unwrap();
        assert!(!tiny.error_is_relative);
        assert_eq!(tiny.error, 1e-7);
    }
}
