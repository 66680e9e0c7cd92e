//! Experiment plan files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::chimera::ChimeraTopology;
use crate::error::{Error, Result};
use crate::generators::{family, CouplingDistribution, Family, FieldDistribution};
use crate::solvers::{ClockKind, SolverKind};

/// Where the per-instance reference optimum comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferencePolicy {
    /// Exact proof; the run fails if one cannot be obtained.
    Certified,
    /// The planted configuration (and its flip when degenerate).
    Planted,
    /// Lowest energy any solver found on the instance.
    BestFound,
    /// Certified when the proof finishes in time, planted otherwise.
    #[default]
    Auto,
}

impl ReferencePolicy {
    pub fn name(self) -> &'static str {
        match self {
            ReferencePolicy::Certified => "certified",
            ReferencePolicy::Planted => "planted",
            ReferencePolicy::BestFound => "best_found",
            ReferencePolicy::Auto => "auto",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters_per_round: Option<usize>,
}

fn default_instance_count() -> usize {
    100
}

fn default_true() -> bool {
    true
}

fn default_certify_time() -> f64 {
    60.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub family: String,
    /// Overrides the preset couplings as `[value, probability]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<(f64, f64)>>,
    /// Topology object in the topology file format.
    pub topology: Value,
    #[serde(default = "default_instance_count")]
    pub instance_count: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Explicit instance seeds; otherwise `base_seed + k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_true")]
    pub random_gauge: bool,
    pub solvers: Vec<SolverSpec>,
    pub time_ladder: Vec<f64>,
    #[serde(default)]
    pub reference: ReferencePolicy,
    #[serde(default)]
    pub clock: ClockKind,
    /// Wall-clock budget for each branch-and-bound proof.
    #[serde(default = "default_certify_time")]
    pub certify_time_limit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

/// A plan with every name and number checked.
#[derive(Clone, Debug)]
pub struct ResolvedPlan {
    pub plan: ExperimentPlan,
    pub family: Family,
    pub topology: ChimeraTopology,
    pub solvers: Vec<(SolverKind, SolverSpec)>,
    pub seeds: Vec<u64>,
}

impl ExperimentPlan {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn max_budget(&self) -> f64 {
        self.time_ladder.last().copied().unwrap_or(0.0)
    }

    /// Checks the whole plan and reports every problem at once.
    pub fn resolve(&self) -> Result<ResolvedPlan> {
        let mut problems = Vec::new();

        let preset = family(&self.family);
        let couplings = match &self.couplings {
            Some(c) => CouplingDistribution::new(c.clone()).map_err(|e| problems.push(e.to_string())).ok(),
            None => preset.as_ref().ok().map(|f| f.couplings.clone()),
        };
        let fields = match &self.fields {
            Some(h) => FieldDistribution::new(h.clone()).map_err(|e| problems.push(e.to_string())).ok(),
            None => preset.as_ref().ok().map(|f| f.fields.clone()),
        };
        if let Err(e) = &preset {
            if self.couplings.is_none() || self.fields.is_none() {
                problems.push(e.to_string());
            }
        }
        let topology = ChimeraTopology::from_json_value(&self.topology)
            .map_err(|e| problems.push(format!("topology: {e}")))
            .ok();

        if self.instance_count == 0 {
            problems.push("instance_count must be at least 1".into());
        }
        if let Some(seeds) = &self.seeds {
            if seeds.len() != self.instance_count {
                problems.push(format!(
                    "{} seeds given for {} instances",
                    seeds.len(),
                    self.instance_count
                ));
            }
        }

        let mut solvers = Vec::new();
        if self.solvers.is_empty() {
            problems.push("no solvers listed".into());
        }
        for spec in &self.solvers {
            match spec.name.parse::<SolverKind>() {
                Ok(kind) => solvers.push((kind, spec.clone())),
                Err(e) => problems.push(e.to_string()),
            }
            if spec.max_iters_per_round == Some(0) {
                problems.push(format!("solver {}: max_iters_per_round must be positive", spec.name));
            }
        }

        if self.time_ladder.is_empty() {
            problems.push("time_ladder is empty".into());
        }
        if let Some(t) = self.time_ladder.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            problems.push(format!("time_ladder entry {t} is not a positive number"));
        }
        if self.time_ladder.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            problems.push("time_ladder must be strictly increasing".into());
        }
        if !(self.certify_time_limit.is_finite() && self.certify_time_limit > 0.0) {
            problems.push("certify_time_limit must be positive".into());
        }
        if let ClockKind::Work { units_per_second } = self.clock {
            if !(units_per_second.is_finite() && units_per_second > 0.0) {
                problems.push("work clock rate must be positive".into());
            }
        }
        if self.threads == Some(0) {
            problems.push("threads must be at least 1".into());
        }

        if !problems.is_empty() {
            return Err(Error::InvalidPlan(problems));
        }
        let family = Family::custom(
            preset.map(|f| f.name).unwrap_or_else(|_| self.family.clone()),
            couplings.expect("checked"),
            fields.expect("checked"),
        );
        let seeds = match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.instance_count as u64).map(|k| self.base_seed.wrapping_add(k)).collect(),
        };
        Ok(ResolvedPlan {
            plan: self.clone(),
            family,
            topology: topology.expect("checked"),
            solvers,
            seeds,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan_json(extra: &str) -> String {
        format!(
            r#"{{"family": "BFM", "topology": {{"rows": 1, "cols": 2, "cell_size": 4}},
                "instance_count": 2, "solvers": [{{"name": "scd"}}], "time_ladder": [0.001, 0.01]{extra}}}"#
        )
    }

    #[test]
    fn defaults_fill_in() {
        let p = ExperimentPlan::from_json_str(&plan_json("")).unwrap();
        assert!(p.random_gauge);
        assert_eq!(p.reference, ReferencePolicy::Auto);
        assert_eq!(p.clock, ClockKind::Wall);
        let r = p.resolve().unwrap();
        assert_eq!(r.seeds, vec![0, 1]);
        assert_eq!(r.topology.nodes().len(), 16);
    }

    #[test]
    fn all_problems_reported_together() {
        let text = r#"{"family": "nope", "topology": {"rows": 0, "cols": 2, "cell_size": 4},
            "instance_count": 0, "solvers": [{"name": "sa"}], "time_ladder": [0.1, 0.1]}"#;
        let err = ExperimentPlan::from_json_str(text).unwrap().resolve().unwrap_err();
        let Error::InvalidPlan(problems) = err else { panic!("wrong error") };
        assert_eq!(problems.len(), 5, "{problems:?}");
        assert!(problems.iter().any(|p| p.contains("scd, gd, ms, hfs, bnb, brute")));
    }

    #[test]
    fn custom_distributions_override_presets() {
        let p = ExperimentPlan::from_json_str(&plan_json(r#", "fields": [[-1.0, 0.5]]"#)).unwrap();
        let r = p.resolve().unwrap();
        assert_eq!(r.family.fields.entries(), &[(-1.0, 0.5)]);
        assert_eq!(r.family.name, "BFM");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentPlan::from_json_str(&plan_json(r#", "budget": 3"#)).is_err());
    }
}
