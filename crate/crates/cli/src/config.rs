use std::path::{Path, PathBuf};

use apdkit::clustering::LabelMode;
use apdkit::dataset::{generate_synthetic, load_idx_images, load_idx_labels, pair_idx, Dataset, SyntheticSpec};
use apdkit::nn::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const OUT_ENV: &str = "APDKIT_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    /// A pair of IDX files, optionally gzip-compressed.
    Idx { images: PathBuf, labels: PathBuf },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: DataSource,
    /// Keep a seeded random sample of this many instances.
    pub subset: Option<usize>,
    pub subset_seed: u64,
    /// Divide raw IDX pixel values by 255. Ignored for synthetic data.
    pub normalize: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic(SyntheticSpec {
                num_classes: 2,
                points_per_class: 100,
                dimension: 2,
                class_center_separation: 4.0,
                noise_scale: 0.5,
                seed: 0,
            }),
            subset: None,
            subset_seed: 0,
            normalize: true,
        }
    }
}

impl DatasetConfig {
    pub fn load(&self) -> CliResult<Dataset> {
        let data = match &self.source {
            DataSource::Idx { images, labels } => {
                let images = load_idx_images(images)?;
                let labels = load_idx_labels(labels)?;
                let raw = pair_idx(&images, &labels)?;
                if self.normalize {
                    raw.normalize()
                } else {
                    raw
                }
            }
            DataSource::Synthetic(spec) => generate_synthetic(spec)?,
        };
        match self.subset {
            Some(n) => Ok(data.subset_random(n, self.subset_seed)?),
            None => Ok(data),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let DataSource::Idx { images, labels } = &mut self.source {
            for p in [images, labels] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
    }
}

/// Hidden layer widths from a name: `32full`, `16full`, `32bottl` or
/// `custom:w1,w2,...`.
pub fn resolve_arch(name: &str) -> CliResult<Vec<usize>> {
    match name {
        "32full" => Ok(vec![32; 5]),
        "16full" => Ok(vec![16; 5]),
        "32bottl" => Ok(vec![32, 16, 12, 10, 8]),
        other => {
            let list = other.strip_prefix("custom:").ok_or_else(|| {
                CliError::Config(format!(
                    "unknown architecture {other:?}; expected 32full, 16full, 32bottl or custom:w1,w2,..."
                ))
            })?;
            let widths = list
                .split(',')
                .map(|w| w.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(format!("bad width list {list:?}: {e}")))?;
            if widths.is_empty() || widths.contains(&0) {
                return Err(CliError::Config(format!("widths must be positive: {list:?}")));
            }
            Ok(widths)
        }
    }
}

/// One run, as read from a JSON config file. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub arch: String,
    /// Seed of the weight initialization.
    pub init_seed: u64,
    pub train: TrainConfig,
    pub label_mode: LabelMode,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            arch: "custom:8".into(),
            init_seed: 0,
            train: TrainConfig::default(),
            label_mode: LabelMode::Predicted,
            out: None,
            threads: None,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub arch: Option<String>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
    pub subset: Option<usize>,
    pub label_mode: Option<LabelMode>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Parse a config file. Relative dataset paths are taken relative to
    /// the file's directory.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.dataset
            .resolve_paths(path.parent().unwrap_or_else(|| Path::new(".")));
        Ok(cfg)
    }

    /// `--seed` sets both the initialization and the shuffling seed.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(a) = &o.arch {
            self.arch = a.clone();
        }
        if let Some(lr) = o.learning_rate {
            self.train.learning_rate = lr;
        }
        if let Some(e) = o.epochs {
            self.train.epochs = e;
        }
        if let Some(b) = o.batch_size {
            self.train.batch_size = b;
        }
        if let Some(s) = o.seed {
            self.init_seed = s;
            self.train.seed = s;
        }
        if let Some(n) = o.subset {
            self.dataset.subset = Some(n);
        }
        if let Some(m) = o.label_mode {
            self.label_mode = m;
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        resolve_arch(&self.arch)?;
        self.train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        if self.dataset.subset == Some(0) {
            return Err(CliError::Config("subset must be at least 1".into()));
        }
        Ok(())
    }

    /// Output directory: the configured one, else `$APDKIT_OUT`, else `apdkit-out`.
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("apdkit-out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_architectures() {
        assert_eq!(resolve_arch("32full").unwrap(), vec![32, 32, 32, 32, 32]);
        assert_eq!(resolve_arch("16full").unwrap(), vec![16, 16, 16, 16, 16]);
        assert_eq!(resolve_arch("32bottl").unwrap(), vec![32, 16, 12, 10, 8]);
        assert_eq!(resolve_arch("custom:4, 3").unwrap(), vec![4, 3]);
        for bad in ["64full", "custom:", "custom:3,0", "custom:a"] {
            assert!(matches!(resolve_arch(bad), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn flags_override_file_values() {
        let mut cfg: RunConfig =
            serde_json::from_str(r#"{"arch": "16full", "train": {"epochs": 7}}"#).unwrap();
        assert_eq!(cfg.train.batch_size, 32);
        cfg.apply(&Overrides {
            epochs: Some(3),
            seed: Some(9),
            ..Default::default()
        });
        assert_eq!((cfg.arch.as_str(), cfg.train.epochs), ("16full", 3));
        assert_eq!((cfg.init_seed, cfg.train.seed), (9, 9));
    }

    #[test]
    fn relative_idx_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"dataset": {"source": {"kind": "idx", "images": "a.gz", "labels": "/abs/b.gz"}}}"#,
        )
        .unwrap();
        let cfg = RunConfig::from_file(&path).unwrap();
        assert_eq!(
            cfg.dataset.source,
            DataSource::Idx {
                images: dir.path().join("a.gz"),
                labels: PathBuf::from("/abs/b.gz"),
            }
        );
    }

    #[test]
    fn unknown_fields_and_bad_values_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        for text in [r#"{"label_mode": "both"}"#, r#"{"epochs": 3}"#] {
            std::fs::write(&path, text).unwrap();
            assert!(matches!(RunConfig::from_file(&path), Err(CliError::Config(_))));
        }
        let mut cfg = RunConfig::default();
        cfg.train.epochs = 0;
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }
}
