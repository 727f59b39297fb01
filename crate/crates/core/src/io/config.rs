//! TOML run configuration. Unknown keys are rejected; every key has a
//! default, so an empty file is a valid configuration.
//!
//! ```toml
//! [task]
//! generator = "lagged-product"   # or "planted-bottleneck"
//! lag = 2
//! rank = 4
//! features = 8
//! classes = 4                    # planted-bottleneck only
//! teacher_hidden = 16            # planted-bottleneck only
//! frames = 200
//! sequences = 2000
//! test_sequences = 200
//! seed = 0
//!
//! [model]
//! layers = 2
//! hidden_dim = 16
//! bottleneck = 8
//!
//! [space]
//! left = [0, 1, 2, 3]
//! right = [0, 1, 2, 3]
//! dims = [8]
//! skip = [false]
//!
//! [search]
//! method = "pipe-gumbel"
//! eta = 0.0
//! # ... see SearchConfig
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bin::read_file;
use crate::error::{Error, Result};
use crate::search::SearchConfig;
use crate::supernet::{LayerSpace, SearchSpace};
use crate::tasks::{gen_lagged_product, gen_planted_bottleneck, BottleneckTask, Dataset};
use crate::tdnnf::Geometry;

/// Train data is generated as part 0, test data as part 1.
pub const TRAIN_PART: u64 = 0;
pub const TEST_PART: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    LaggedProduct,
    PlantedBottleneck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub generator: TaskKind,
    pub lag: usize,
    pub rank: usize,
    pub features: usize,
    pub classes: usize,
    pub teacher_hidden: usize,
    pub frames: usize,
    pub sequences: usize,
    pub test_sequences: usize,
    pub seed: u64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        TaskConfig {
            generator: TaskKind::LaggedProduct,
            lag: 2,
            rank: 4,
            features: 8,
            classes: 4,
            teacher_hidden: 16,
            frames: 200,
            sequences: 2000,
            test_sequences: 200,
            seed: 0,
        }
    }
}

impl TaskConfig {
    /// Number of output classes of the task.
    pub fn class_count(&self) -> usize {
        match self.generator {
            TaskKind::LaggedProduct => 2,
            TaskKind::PlantedBottleneck => self.classes,
        }
    }

    pub fn bottleneck_task(&self) -> BottleneckTask {
        BottleneckTask {
            rank: self.rank,
            features: self.features,
            classes: self.classes,
            teacher_hidden: self.teacher_hidden,
        }
    }

    fn generate(&self, part: u64, sequences: usize) -> Result<Dataset> {
        match self.generator {
            TaskKind::LaggedProduct => {
                gen_lagged_product(self.seed, part, self.lag, sequences, self.frames, self.features)
            }
            TaskKind::PlantedBottleneck => {
                gen_planted_bottleneck(self.seed, part, &self.bottleneck_task(), sequences, self.frames)
            }
        }
    }

    pub fn train_data(&self) -> Result<Dataset> {
        self.generate(TRAIN_PART, self.sequences)
    }

    pub fn test_data(&self) -> Result<Dataset> {
        self.generate(TEST_PART, self.test_sequences)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub layers: usize,
    pub hidden_dim: usize,
    /// Default bottleneck width; also the width written without an `@n`
    /// suffix in architecture strings.
    pub bottleneck: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            layers: 2,
            hidden_dim: 16,
            bottleneck: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceConfig {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// Empty means the model bottleneck only.
    pub dims: Vec<usize>,
    pub skip: Vec<bool>,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            left: vec![0, 1, 2, 3],
            right: vec![0, 1, 2, 3],
            dims: Vec::new(),
            skip: vec![false],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub task: TaskConfig,
    pub model: ModelConfig,
    pub space: SpaceConfig,
    pub search: SearchConfig,
    pub output: OutputConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::InvalidConfig(format!("{}: not UTF-8", path.display())))?;
        Config::from_toml(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical TOML text: equal configurations give equal text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical text without the output section, hex
    /// encoded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputConfig::default();
        hex::encode(Sha256::digest(c.to_toml().as_bytes()))
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            input_dim: self.task.features,
            hidden_dim: self.model.hidden_dim,
            classes: self.task.class_count(),
            bottleneck: self.model.bottleneck,
        }
    }

    pub fn search_space(&self) -> SearchSpace {
        let dims = if self.space.dims.is_empty() {
            vec![self.model.bottleneck]
        } else {
            self.space.dims.clone()
        };
        SearchSpace::uniform(
            self.geometry(),
            self.model.layers,
            LayerSpace {
                left: self.space.left.clone(),
                right: self.space.right.clone(),
                dims,
                skip: self.space.skip.clone(),
            },
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.search.validate()?;
        if self.model.layers == 0 || self.model.hidden_dim == 0 || self.model.bottleneck == 0 {
            return Err(Error::InvalidConfig(
                "model layers, hidden_dim and bottleneck must be positive".into(),
            ));
        }
        if self.task.features == 0 || self.task.sequences < 2 || self.task.test_sequences == 0 {
            return Err(Error::InvalidConfig(
                "task needs features >= 1, sequences >= 2 and test_sequences >= 1".into(),
            ));
        }
        self.search_space().validate()
    }
}
