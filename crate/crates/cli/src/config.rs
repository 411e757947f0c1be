use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use scanbench_core::greedy::GreedyConfig;
use scanbench_core::ibs::IbsConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Cibs,
    Sibs,
    Nnibs,
    Greedy,
    External,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Cibs => "cibs",
            ModelKind::Sibs => "sibs",
            ModelKind::Nnibs => "nnibs",
            ModelKind::Greedy => "greedy",
            ModelKind::External => "external",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subset {
    pub size: usize,
    #[serde(default)]
    pub seed: u64,
}

/// A `run` configuration. Relative paths are relative to the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset_root: PathBuf,
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ibs: Option<IbsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub greedy: Option<GreedyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_scanpaths: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Subset>,
    #[serde(default)]
    pub precision: Precision,
    /// Directory for cached template maps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

/// A parsed config together with the directory its paths are relative to.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { config, base_dir })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

impl RunConfig {
    /// Checks that exactly the block matching `model` is present and that it
    /// agrees with the model kind.
    pub fn validate(&self) -> Result<()> {
        let has = (self.ibs.is_some(), self.greedy.is_some(), self.external_scanpaths.is_some());
        let want = match self.model {
            ModelKind::Cibs | ModelKind::Sibs | ModelKind::Nnibs => (true, false, false),
            ModelKind::Greedy => (false, true, false),
            ModelKind::External => (false, false, true),
        };
        if has != want {
            bail!(
                "model `{}` requires exactly its own config block (ibs: {}, greedy: {}, external_scanpaths: {})",
                self.model.as_str(),
                want.0,
                want.1,
                want.2
            );
        }
        if let Some(ibs) = &self.ibs {
            let expected = match self.model {
                ModelKind::Cibs => "cross_correlation",
                ModelKind::Sibs => "ssim",
                _ => "external_map",
            };
            if ibs.similarity.kind() != expected {
                bail!(
                    "model `{}` needs ibs.similarity.kind = {expected}, got {}",
                    self.model.as_str(),
                    ibs.similarity.kind()
                );
            }
            ibs.validate()?;
        }
        if let Some(g) = &self.greedy {
            g.validate()?;
        }
        if let Some(s) = &self.subset {
            if s.size == 0 {
                bail!("subset.size must be positive");
            }
        }
        Ok(())
    }

    /// Applies `--seed` and `--subset` overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, subset: Option<usize>) -> Self {
        if let Some(seed) = seed {
            if let Some(ibs) = &mut self.ibs {
                ibs.seed = seed;
            }
            if let Some(s) = &mut self.subset {
                s.seed = seed;
            }
        }
        if let Some(size) = subset {
            let seed = self.subset.as_ref().map(|s| s.seed).or(seed).unwrap_or(0);
            self.subset = Some(Subset { size, seed });
        }
        self
    }

    /// The seed recorded in the manifest.
    pub fn seed(&self) -> u64 {
        self.ibs.as_ref().map(|c| c.seed).unwrap_or(0)
    }
}
