//! Run configuration: problem grid, budget, parameter overrides, targets.

use lccmsa::es_core::ParamOverrides;
use lccmsa::problems::ObjectiveKind;
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// Target ladder `f_opt + 10^k` for `count` evenly spaced exponents
/// between `k_min` and `k_max`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub k_min: f64,
    pub k_max: f64,
    pub count: usize,
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self {
            k_min: -8.0,
            k_max: 2.0,
            count: 51,
        }
    }
}

impl TargetSpec {
    /// Exponents in descending order (easy targets first).
    pub fn exponents(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.k_max];
        }
        let step = (self.k_max - self.k_min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| self.k_max - i as f64 * step)
            .collect()
    }
}

/// One problem family in the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub name: String,
    pub dims: Vec<usize>,
    pub instances: usize,
    /// Constraint counts for the randomly constrained families; ignored by
    /// the Klee-Minty cube.
    #[serde(default)]
    pub constraints: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub problems: Vec<ProblemConfig>,
    /// Evaluation budget per run as a multiple of the original dimension;
    /// absent means unlimited.
    #[serde(default)]
    pub budget_multiplier: Option<f64>,
    #[serde(default)]
    pub params: ParamOverrides,
    #[serde(default)]
    pub targets: TargetSpec,
}

impl BenchConfig {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let config: BenchConfig = serde_json::from_str(text).map_err(|e| {
            BenchError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.problems.is_empty() {
            return Err(BenchError::Config("field `problems` is empty".into()));
        }
        for (i, p) in self.problems.iter().enumerate() {
            let field = |name: &str| format!("problems[{i}].{name}");
            if p.name != "kleeminty" && ObjectiveKind::from_name(&p.name).is_err() {
                return Err(BenchError::Config(format!(
                    "{}: unknown problem `{}`",
                    field("name"),
                    p.name
                )));
            }
            if p.dims.is_empty() {
                return Err(BenchError::Config(format!("{}: empty", field("dims"))));
            }
            if p.instances == 0 {
                return Err(BenchError::Config(format!(
                    "{}: must be at least 1",
                    field("instances")
                )));
            }
            if p.name != "kleeminty" && p.constraints.is_empty() {
                return Err(BenchError::Config(format!(
                    "{}: required for `{}`",
                    field("constraints"),
                    p.name
                )));
            }
            if p.name == "kleeminty" {
                for &d in &p.dims {
                    if !(1..=15).contains(&d) {
                        return Err(BenchError::Config(format!(
                            "{}: dimension {d} outside 1..=15",
                            field("dims")
                        )));
                    }
                }
            }
        }
        if let Some(m) = self.budget_multiplier {
            if m <= 0.0 || !m.is_finite() {
                return Err(BenchError::Config(
                    "field `budget_multiplier` must be positive".into(),
                ));
            }
        }
        if self.targets.count == 0 {
            return Err(BenchError::Config(
                "field `targets.count` must be >= 1".into(),
            ));
        }
        if self.targets.k_min > self.targets.k_max {
            return Err(BenchError::Config(
                "field `targets.k_min` exceeds `targets.k_max`".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let config = BenchConfig::parse(
            r#"{
                "problems": [
                    {"name": "kleeminty", "dims": [1, 2, 3], "instances": 10},
                    {"name": "sphere", "dims": [2, 3], "instances": 15,
                     "constraints": [1, 2, 6]}
                ],
                "budget_multiplier": 100000.0,
                "params": {"sigma_stop": 1e-7},
                "targets": {"k_min": -8, "k_max": 2, "count": 51}
            }"#,
        )
        .unwrap();
        assert_eq!(config.problems.len(), 2);
        assert_eq!(config.targets.exponents().len(), 51);
        assert_eq!(config.params.sigma_stop, Some(1e-7));
    }

    #[test]
    fn rejects_unknown_problem_with_location() {
        let err =
            BenchConfig::parse(r#"{"problems": [{"name": "nope", "dims": [2], "instances": 1}]}"#)
                .unwrap_err();
        assert!(err.to_string().contains("problems[0].name"));
    }

    #[test]
    fn reports_json_position_on_syntax_errors() {
        let err = BenchConfig::parse("{\n  \"problems\": [,]\n}").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("line 2"), "missing location in: {text}");
    }

    #[test]
    fn target_exponents_cover_the_range() {
        let spec = TargetSpec::default();
        let exps = spec.exponents();
        assert_eq!(exps.len(), 51);
        assert_eq!(exps[0], 2.0);
        assert_eq!(exps[50], -8.0);
        // Evenly spaced by 0.2.
        assert!((exps[1] - 1.8).abs() < 1e-12);
    }
}
