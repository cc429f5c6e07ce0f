//! Run records: one seeded optimization trajectory with its best-so-far
//! history on the combined objective + constraint evaluation axis.

use lccmsa::es_core::TerminationReason;

use crate::BenchError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub problem: String,
    pub dim: usize,
    pub instance_seed: u64,
    /// `(total_evals, best_f)` points: strictly increasing in evaluations,
    /// non-increasing in value. The final entry marks the run's total
    /// consumption.
    pub history: Vec<(u64, f64)>,
    pub f_opt: f64,
    pub reference_only: bool,
    pub termination: TerminationReason,
    pub generations: u64,
    /// Feasibility-contract violations observed by the evaluation guard
    /// (not part of the CSV format; zero when parsed back).
    pub contract_violations: u64,
}

impl RunRecord {
    pub fn best_f(&self) -> f64 {
        self.history.last().map_or(f64::INFINITY, |&(_, f)| f)
    }

    /// Total evaluations the run consumed.
    pub fn total_evals(&self) -> u64 {
        self.history.last().map_or(0, |&(e, _)| e)
    }

    /// Evaluations consumed when `best_f <= target` first held.
    pub fn first_hit(&self, target: f64) -> Option<u64> {
        self.history
            .iter()
            .find(|&&(_, f)| f <= target)
            .map(|&(e, _)| e)
    }

    /// Best value seen within the first `budget` evaluations.
    pub fn best_within(&self, budget: u64) -> f64 {
        self.history
            .iter()
            .take_while(|&&(e, _)| e <= budget)
            .last()
            .map_or(f64::INFINITY, |&(_, f)| f)
    }
}

pub(crate) const RUNS_HEADER: &str = "problem,dim,instance_seed,evals,best_f,f_opt,termination";

/// Renders records as `runs.csv` rows (one per history point).
pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for r in records {
        for &(evals, best) in &r.history {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.problem, r.dim, r.instance_seed, evals, best, r.f_opt, r.termination
            ));
        }
    }
    out
}

/// Parses `runs.csv` back into records (used by `bench report`). The
/// reference-only flag and generation counts are not stored in the CSV; they
/// come back as defaults.
pub fn parse_runs_csv(text: &str) -> Result<Vec<RunRecord>, BenchError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == RUNS_HEADER => {}
        other => {
            return Err(BenchError::Records(format!(
                "unexpected header {other:?} in runs.csv"
            )))
        }
    }
    let mut records: Vec<RunRecord> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(BenchError::Records(format!(
                "line {}: expected 7 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let parse_err =
            |what: &str| BenchError::Records(format!("line {}: bad {what}", lineno + 2));
        let problem = fields[0].to_string();
        let dim: usize = fields[1].parse().map_err(|_| parse_err("dim"))?;
        let instance_seed: u64 = fields[2].parse().map_err(|_| parse_err("instance_seed"))?;
        let evals: u64 = fields[3].parse().map_err(|_| parse_err("evals"))?;
        let best_f: f64 = fields[4].parse().map_err(|_| parse_err("best_f"))?;
        let f_opt: f64 = fields[5].parse().map_err(|_| parse_err("f_opt"))?;
        let termination: TerminationReason = fields[6]
            .parse()
            .map_err(|e| BenchError::Records(format!("line {}: {e}", lineno + 2)))?;

        let same_run = records.last().is_some_and(|r: &RunRecord| {
            r.problem == problem && r.dim == dim && r.instance_seed == instance_seed
        });
        if same_run {
            let record = records.last_mut().expect("checked above");
            record.history.push((evals, best_f));
        } else {
            records.push(RunRecord {
                problem,
                dim,
                instance_seed,
                history: vec![(evals, best_f)],
                f_opt,
                reference_only: false,
                termination,
                generations: 0,
                contract_violations: 0,
            });
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record() -> RunRecord {
        RunRecord {
            problem: "sphere_m1".into(),
            dim: 2,
            instance_seed: 42,
            history: vec![(31, 10.0), (40, 2.5), (120, 2.5)],
            f_opt: 2.0,
            reference_only: false,
            termination: TerminationReason::SigmaFloor,
            generations: 9,
            contract_violations: 0,
        }
    }

    #[test]
    fn history_queries() {
        let r = sample_record();
        assert_eq!(r.best_f(), 2.5);
        assert_eq!(r.total_evals(), 120);
        assert_eq!(r.first_hit(3.0), Some(40));
        assert_eq!(r.first_hit(1.0), None);
        assert_eq!(r.best_within(35), 10.0);
        assert_eq!(r.best_within(10), f64::INFINITY);
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![sample_record()];
        let text = runs_csv(&records);
        assert!(text.starts_with(RUNS_HEADER));
        let parsed = parse_runs_csv(&text).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(parsed[0].history, records[0].history);
        assert_eq!(parsed[0].f_opt, records[0].f_opt);
        assert_eq!(parsed[0].termination, records[0].termination);
    }

    #[test]
    fn rejects_malformed_rows() {
        let text = format!("{RUNS_HEADER}\nsphere,x,1,2,3,4,budget\n");
        assert!(parse_runs_csv(&text).is_err());
    }
}
