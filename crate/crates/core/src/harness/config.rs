use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::TrainConfig;
use crate::search::{GaConfig, Strategy};
use crate::tasks::{Family, FamilySpec, DEFAULT_N_TRAIN};
use crate::training::{OperatorKind, DEFAULT_PARENT_RADIUS};

pub const DEFAULT_NUM_TASKS: usize = 1000;
pub const DEFAULT_HIDDEN_DEPTH: usize = 5;
pub const TABLE1_DEPTHS: [usize; 4] = [1, 3, 5, 10];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub num_tasks: usize,
    /// Defaults to 100 for quadratic and 200 otherwise.
    pub generations: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            num_tasks: DEFAULT_NUM_TASKS,
            generations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    #[serde(default)]
    pub dimension: Option<usize>,
    #[serde(default = "default_n_train")]
    pub n_train: usize,
    #[serde(default = "default_hidden_depth")]
    pub hidden_depth: usize,
    #[serde(default)]
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_parent_radius")]
    pub parent_radius: f64,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Pre-trained operators; missing kinds are trained before the run.
    #[serde(default)]
    pub operators: BTreeMap<OperatorKind, PathBuf>,
    /// Hidden depths swept by the recognition table.
    #[serde(default = "default_table_depths")]
    pub table_depths: Vec<usize>,
}

fn default_n_train() -> usize {
    DEFAULT_N_TRAIN
}

fn default_hidden_depth() -> usize {
    DEFAULT_HIDDEN_DEPTH
}

fn default_parent_radius() -> f64 {
    DEFAULT_PARENT_RADIUS
}

fn default_table_depths() -> Vec<usize> {
    TABLE1_DEPTHS.to_vec()
}

impl ExperimentConfig {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            dimension: None,
            n_train: DEFAULT_N_TRAIN,
            hidden_depth: DEFAULT_HIDDEN_DEPTH,
            strategies: Strategy::ALL.to_vec(),
            ga: GaConfig::default(),
            train: TrainConfig::default(),
            parent_radius: DEFAULT_PARENT_RADIUS,
            eval: EvalConfig::default(),
            seed: 0,
            output: None,
            operators: BTreeMap::new(),
            table_depths: TABLE1_DEPTHS.to_vec(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn family_spec(&self) -> Result<FamilySpec> {
        FamilySpec::new(
            self.family,
            self.dimension.unwrap_or(self.family.default_dimension()),
            self.n_train,
        )
    }

    pub fn generations(&self) -> usize {
        self.eval.generations.unwrap_or(match self.family {
            Family::Quadratic => 100,
            Family::Linear | Family::Logreg => 200,
        })
    }

    /// Strategies to run; an empty list means all of them.
    pub fn strategy_list(&self) -> Vec<Strategy> {
        if self.strategies.is_empty() {
            Strategy::ALL.to_vec()
        } else {
            self.strategies.clone()
        }
    }

    /// GA settings with the evaluation horizon applied.
    pub fn ga_config(&self) -> GaConfig {
        GaConfig {
            generations: self.generations(),
            ..self.ga.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.family_spec()?;
        self.ga.validate()?;
        self.train.validate()?;
        if self.eval.num_tasks == 0 {
            return Err(Error::Config("eval.num_tasks must be >= 1".into()));
        }
        if self.hidden_depth == 0 || self.table_depths.contains(&0) {
            return Err(Error::Config("hidden depths must be >= 1".into()));
        }
        if !(self.parent_radius > 0.0 && self.parent_radius.is_finite()) {
            return Err(Error::Config("parent_radius must be > 0".into()));
        }
        let list = self.strategy_list();
        let mut dedup = list.clone();
        dedup.sort();
        dedup.dedup();
        if dedup.len() != list.len() {
            return Err(Error::Config("strategies must not repeat".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"family":"linear"}"#).unwrap();
        assert_eq!(cfg.family_spec().unwrap().dimension, 5);
        assert_eq!(cfg.generations(), 200);
        assert_eq!(cfg.eval.num_tasks, 1000);
        assert_eq!(cfg.strategy_list().len(), 5);
        assert_eq!(cfg.ga, GaConfig::default());
    }

    #[test]
    fn full_config_parses() {
        let text = r#"{
            "family": "quadratic", "dimension": 3, "hidden_depth": 2,
            "strategies": ["blind", "net_ga"],
            "ga": {"survivors": 4, "children": 8, "mutation_sigma": 0.2},
            "train": {"steps": 10, "batch_size": 4, "learning_rate": 0.01, "optimizer": "plain-sgd", "seed": 3},
            "eval": {"num_tasks": 7, "generations": 12},
            "seed": 42,
            "operators": {"net-ga": "m.json"}
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.strategy_list(), vec![Strategy::Blind, Strategy::NetGa]);
        assert_eq!(cfg.ga_config().generations, 12);
        assert_eq!(cfg.operators[&OperatorKind::NetGa], PathBuf::from("m.json"));
    }

    #[test]
    fn invalid_configs_rejected() {
        for text in [
            r#"{"family":"cubic"}"#,
            r#"{"family":"linear","eval":{"num_tasks":0}}"#,
            r#"{"family":"linear","ga":{"survivors":1}}"#,
            r#"{"family":"linear","strategies":["blind","blind"]}"#,
            r#"{"family":"linear","dimension":0}"#,
            r#"{"family":"linear","typo":1}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(text), Err(Error::Config(_))), "{text}");
        }
    }
}
