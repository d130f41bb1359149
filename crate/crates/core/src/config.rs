//! One TOML document with a section per module. Relative paths resolve
//! against the document's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::context::ContextConfig;
use crate::dataset::{DatasetConfig, JudgeConfig};
use crate::error::{Error, Result};
use crate::evalrun::{CompletionParams, HttpConfig};
use crate::fim::{BoundaryWeights, SentinelSet, SplitStrategy};
use crate::lexing::ProfileRegistry;
use crate::metrics::MetricConfig;

pub const DEFAULT_BUDGET: usize = 8192;
pub const MIN_BUDGET: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub strategy: SplitStrategy,
    pub weights: BoundaryWeights,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            strategy: SplitStrategy::ScopeAware,
            weights: BoundaryWeights::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub http: HttpConfig,
    pub params: CompletionParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalConfig {
    pub seed: Option<u64>,
    pub budget: usize,
    /// Extra language profiles: a `.toml` file or a directory of them.
    pub profiles: Option<PathBuf>,
    pub sentinels: SentinelSet,
    pub split: SplitConfig,
    pub context: ContextConfig,
    pub metrics: MetricConfig,
    pub dataset: DatasetConfig,
    pub eval: EvalConfig,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        GlobalConfig {
            seed: None,
            budget: DEFAULT_BUDGET,
            profiles: None,
            sentinels: SentinelSet::default(),
            split: SplitConfig::default(),
            context: ContextConfig::default(),
            metrics: MetricConfig::default(),
            dataset: DatasetConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

fn resolve(base: &Path, path: &mut PathBuf) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

impl GlobalConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        let config: GlobalConfig = toml::from_str(src)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&src)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(p) = &mut self.profiles {
            resolve(base, p);
        }
        for p in self
            .dataset
            .repos
            .iter_mut()
            .chain(&mut self.dataset.reference_repos)
        {
            resolve(base, p);
        }
        if let JudgeConfig::Scripted { path } = &mut self.dataset.judge {
            resolve(base, path);
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_budget(self.budget)?;
        self.sentinels.validate()?;
        self.split.weights.validate()?;
        self.context.validate()?;
        self.metrics.validate()
    }

    /// Built-in profiles plus any configured extras.
    pub fn registry(&self) -> Result<ProfileRegistry> {
        let mut registry = ProfileRegistry::builtin();
        if let Some(p) = &self.profiles {
            registry.load(p)?;
        }
        Ok(registry)
    }
}

pub fn check_budget(budget: usize) -> Result<()> {
    if budget < MIN_BUDGET {
        Err(Error::Config(format!(
            "budget {budget} is below the minimum of {MIN_BUDGET}"
        )))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_sections() {
        let c = GlobalConfig::from_toml("").unwrap();
        assert_eq!(c.budget, 8192);
        assert_eq!(c.seed, None);
        let c = GlobalConfig::from_toml(
            r#"
seed = 3
budget = 1024
[metrics]
kk_tau = 0.9
kk_denominator = "completion"
[context]
strategy = "path"
[dataset]
repos = ["r"]
[eval.params]
max_tokens = 64
"#,
        )
        .unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.metrics.kk_tau, 0.9);
        assert_eq!(c.eval.params.max_tokens, 64);
        assert_eq!(c.dataset.repos, vec![PathBuf::from("r")]);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(GlobalConfig::from_toml("budget = 100").is_err());
        assert!(GlobalConfig::from_toml("[metrics]\nkk_tau = 0").is_err());
        assert!(GlobalConfig::from_toml("typo = 1").is_err());
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "[dataset]\nrepos = [\"repo\", \"/abs\"]\n").unwrap();
        let c = GlobalConfig::load(&path).unwrap();
        assert_eq!(
            c.dataset.repos,
            vec![dir.path().join("repo"), PathBuf::from("/abs")]
        );
    }
}
