//! Experiment plan files.
//!
//! A plan is a line-oriented `key = value` file:
//!
//! ```text
//! # comments start with '#'
//! name = experiment2
//! replications = 50
//! master_seed = 7
//! output = experiment2.csv
//! moving_pattern = BNE+SR           # any simulation parameter sets the base config
//! sweep number_persons = 2000, 3000 # explicit value list
//! sweep pct_bne = 0:100:2           # inclusive start:stop:step range
//!
//! desk.replications = 5             # used instead under --desk-scale
//! desk.sweep pct_bne = 0:100:10     # replaces the pct_bne sweep under --desk-scale
//! ```
//!
//! Every `desk.`-prefixed line is ignored at full scale and overrides its
//! unprefixed counterpart at desk scale. Sweeps are crossed in file order,
//! the first sweep varying slowest.

use std::path::PathBuf;

use crate::config::{canonical_name, SimConfig};
use crate::error::{EvacError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// Canonical parameter name.
    pub param: &'static str,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub name: String,
    pub base: SimConfig,
    pub sweeps: Vec<Sweep>,
    pub replications: usize,
    pub master_seed: u64,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            name: "experiment".into(),
            base: SimConfig::default(),
            sweeps: Vec::new(),
            replications: 1,
            master_seed: 0,
            output_path: None,
        }
    }
}

impl ExperimentPlan {
    /// Parses a plan, applying the `desk.` overrides when `desk_scale` is set.
    pub fn parse(text: &str, desk_scale: bool) -> Result<Self> {
        let mut plan = ExperimentPlan::default();
        let mut desk_lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| EvacError::PlanParse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if let Some(rest) = key.strip_prefix("desk.") {
                desk_lines.push((line_no, rest.trim().to_owned(), value.to_owned()));
                continue;
            }
            plan.apply(line_no, key, value)?;
        }
        // desk lines are always parsed so a malformed one fails either way
        let mut desk = plan.clone();
        for (line_no, key, value) in &desk_lines {
            desk.apply(*line_no, key, value)?;
        }
        let plan = if desk_scale { desk } else { plan };
        plan.validate()?;
        Ok(plan)
    }

    fn apply(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let at = |e: EvacError| match e {
            EvacError::PlanParse { .. } => e,
            other => EvacError::PlanParse {
                line,
                message: other.to_string(),
            },
        };
        if let Some(param) = key.strip_prefix("sweep ") {
            let param = canonical_name(param).map_err(at)?;
            let values = parse_values(value).map_err(at)?;
            // check every value against the config parser now
            let mut probe = self.base.clone();
            for v in &values {
                probe.set(param, v).map_err(at)?;
            }
            match self.sweeps.iter_mut().find(|s| s.param == param) {
                Some(s) => s.values = values,
                None => self.sweeps.push(Sweep { param, values }),
            }
            return Ok(());
        }
        match key {
            "name" => self.name = value.to_owned(),
            "replications" => {
                self.replications = value.parse().map_err(|_| EvacError::PlanParse {
                    line,
                    message: format!("replications must be a positive integer, got `{value}`"),
                })?
            }
            "master_seed" => {
                self.master_seed = value.parse().map_err(|_| EvacError::PlanParse {
                    line,
                    message: format!("master_seed must be an unsigned integer, got `{value}`"),
                })?
            }
            "output" | "output_path" => self.output_path = Some(PathBuf::from(value)),
            other => self.base.set(other, value).map_err(at)?,
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(EvacError::InvalidConfig(
                "replications must be at least 1".into(),
            ));
        }
        for s in &self.sweeps {
            if s.values.is_empty() {
                return Err(EvacError::InvalidConfig(format!(
                    "sweep over {} has no values",
                    s.param
                )));
            }
        }
        Ok(())
    }

    /// Number of distinct parameter combinations.
    pub fn cell_count(&self) -> usize {
        self.sweeps.iter().map(|s| s.values.len()).product()
    }

    pub fn run_count(&self) -> usize {
        self.cell_count() * self.replications
    }
}

/// Either a comma-separated list or an inclusive `start:stop:step` range.
pub fn parse_values(value: &str) -> Result<Vec<String>> {
    let value = value.trim();
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').map(str::trim).collect();
        let [start, stop, step] = parts[..] else {
            return Err(EvacError::InvalidConfig(format!(
                "range must be start:stop:step, got `{value}`"
            )));
        };
        return expand_range(start, stop, step);
    }
    let values: Vec<String> = value
        .split(',')
        .map(|v| v.trim().to_owned())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(EvacError::InvalidConfig("empty value list".into()));
    }
    Ok(values)
}

fn expand_range(start: &str, stop: &str, step: &str) -> Result<Vec<String>> {
    if let (Ok(a), Ok(b), Ok(s)) = (
        start.parse::<i64>(),
        stop.parse::<i64>(),
        step.parse::<i64>(),
    ) {
        if s <= 0 || b < a {
            return Err(EvacError::InvalidConfig(format!(
                "range {a}:{b}:{s} must have stop >= start and a positive step"
            )));
        }
        return Ok((a..=b).step_by(s as usize).map(|v| v.to_string()).collect());
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| EvacError::InvalidConfig(format!("`{s}` is not a number")))
    };
    let (a, b, s) = (num(start)?, num(stop)?, num(step)?);
    if !(s > 0.0) || b < a {
        return Err(EvacError::InvalidConfig(format!(
            "range {a}:{b}:{s} must have stop >= start and a positive step"
        )));
    }
    let n = ((b - a) / s + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| (a + i as f64 * s).to_string()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::MovingPattern;

    const PLAN: &str = "\
name = exp3
replications = 30
master_seed = 11
output = out.csv
moving_pattern = BNE+RF
sweep number_persons = 1100:3000:100
sweep pct_bne = 0:100:2   # every two percent

desk.replications = 3
desk.sweep number_persons = 1100, 3000
desk.sweep pct_bne = 0:100:20
";

    #[test]
    fn full_and_desk_scale() {
        let full = ExperimentPlan::parse(PLAN, false).unwrap();
        assert_eq!(full.name, "exp3");
        assert_eq!(full.base.moving_pattern, MovingPattern::BneRf);
        assert_eq!(full.replications, 30);
        assert_eq!(full.sweeps[0].values.len(), 20);
        assert_eq!(full.sweeps[1].values.len(), 51);
        assert_eq!(full.run_count(), 30_600);
        assert_eq!(full.output_path, Some(PathBuf::from("out.csv")));

        let desk = ExperimentPlan::parse(PLAN, true).unwrap();
        assert_eq!(desk.replications, 3);
        assert_eq!(desk.sweeps[0].param, "number_persons");
        assert_eq!(desk.sweeps[0].values, vec!["1100", "3000"]);
        assert_eq!(
            desk.sweeps[1].values,
            vec!["0", "20", "40", "60", "80", "100"]
        );
        assert_eq!(desk.run_count(), 36);
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_values("0:10:5").unwrap(), vec!["0", "5", "10"]);
        assert_eq!(parse_values("0:9:5").unwrap(), vec!["0", "5"]);
        assert_eq!(
            parse_values("0.5:1.5:0.5").unwrap(),
            vec!["0.5", "1", "1.5"]
        );
        assert_eq!(parse_values("SR, RF,BNE").unwrap(), vec!["SR", "RF", "BNE"]);
        assert!(parse_values("5:0:1").is_err());
        assert!(parse_values("0:5").is_err());
        assert!(parse_values(" , ").is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ExperimentPlan::parse("name = x\nsweep colour = 1,2\n", false).unwrap_err();
        assert!(
            matches!(err, EvacError::PlanParse { line: 2, .. }),
            "{err:?}"
        );
        let err = ExperimentPlan::parse("replications = many\n", false).unwrap_err();
        assert!(matches!(err, EvacError::PlanParse { line: 1, .. }));
        let err = ExperimentPlan::parse("no equals sign\n", false).unwrap_err();
        assert!(matches!(err, EvacError::PlanParse { line: 1, .. }));
        let err = ExperimentPlan::parse("sweep moving_pattern = SR, ZZ\n", false).unwrap_err();
        assert!(matches!(err, EvacError::PlanParse { line: 1, .. }));
        assert!(ExperimentPlan::parse("replications = 0\n", false).is_err());
    }

    #[test]
    fn empty_plan_is_one_cell() {
        let plan = ExperimentPlan::parse("replications = 3\n", false).unwrap();
        assert_eq!(plan.cell_count(), 1);
        assert_eq!(plan.run_count(), 3);
    }
}
