//! Run configuration: loading, defaults and cross-field validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureSpec;
use crate::ingest::CleanOptions;
use crate::models::{ModelKind, ModelsConfig};
use crate::synthetic::SyntheticSpec;
use crate::trainer::{LossKind, SearchSpace, SplitConfig, TrainConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// `pointer` is a JSON pointer to the offending value or key.
    #[error("config {pointer}: {message}")]
    Invalid { pointer: String, message: String },
}

impl ConfigError {
    fn at(pointer: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            pointer: pointer.to_string(),
            message: message.into(),
        }
    }

    pub fn pointer(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { pointer, .. } => Some(pointer),
            ConfigError::Io { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// The amazon-meta dump; unused when `synthetic` is set.
    pub input: Option<PathBuf>,
    pub workdir: PathBuf,
    /// Title vectors (EMB1 or TSV); titles fall back to zeros when absent.
    pub embeddings: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            input: None,
            workdir: PathBuf::from("copg-work"),
            embeddings: None,
        }
    }
}

/// Stages executed by `run`, in pipeline order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageToggles {
    pub ingest: bool,
    pub build_graph: bool,
    pub features: bool,
    pub split: bool,
    pub walks: bool,
    pub train: bool,
    pub evaluate: bool,
    pub search: bool,
    pub report: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        StageToggles {
            ingest: true,
            build_graph: true,
            features: true,
            split: true,
            walks: true,
            train: true,
            evaluate: true,
            search: false,
            report: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub space: SearchSpace,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            space: SearchSpace::default(),
            trials: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    /// Models trained by `run` and summarized by `report`.
    pub models: Vec<ModelKind>,
    /// Bins of the per-model metric histograms.
    pub histogram_bins: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            models: ModelKind::ALL.to_vec(),
            histogram_bins: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub checkpoint: bool,
    pub history: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            checkpoint: true,
            history: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub stages: StageToggles,
    pub dataset: CleanOptions,
    /// Replaces ingest, graph building and feature assembly.
    pub synthetic: Option<SyntheticSpec>,
    pub split: SplitConfig,
    pub features: FeatureSpec,
    /// Seed for feature fitting (path embeddings, PCA) and walk tables.
    pub seed: u64,
    pub model: ModelKind,
    pub models: ModelsConfig,
    pub train: TrainConfig,
    pub search: SearchConfig,
    pub report: ReportConfig,
    pub output: OutputConfig,
}

/// Turns a serde path plus an optional unknown key into a JSON pointer.
fn pointer_of(path: &serde_path_to_error::Path, inner: &str) -> String {
    use serde_path_to_error::Segment;
    let mut p = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => p.push_str(&format!("/{index}")),
            Segment::Map { key } => p.push_str(&format!("/{}", escape(key))),
            Segment::Enum { variant } => p.push_str(&format!("/{}", escape(variant))),
            Segment::Unknown => {}
        }
    }
    if let Some(rest) = inner.strip_prefix("unknown field `") {
        if let Some(key) = rest.split('`').next() {
            let tail = format!("/{}", escape(key));
            if !p.ends_with(&tail) {
                p.push_str(&tail);
            }
        }
    }
    if p.is_empty() {
        p.push('/');
    }
    p
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner().to_string();
            ConfigError::at(&pointer_of(e.path(), &inner), inner)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-field checks; called after every override as well.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.train;
        let s = &self.split;
        if !(s.ratio > 0.0 && s.ratio < 1.0) {
            return Err(ConfigError::at(
                "/split/ratio",
                format!("must be in (0, 1), got {}", s.ratio),
            ));
        }
        if !(s.val_ratio > 0.0 && s.val_ratio < 1.0) {
            return Err(ConfigError::at(
                "/split/val_ratio",
                format!("must be in (0, 1), got {}", s.val_ratio),
            ));
        }
        if !(t.neg_ratio > 0.0 && t.neg_ratio.is_finite()) {
            return Err(ConfigError::at(
                "/train/neg_ratio",
                format!("negative ratio must be > 0, got {}", t.neg_ratio),
            ));
        }
        if !(t.eval_neg_ratio > 0.0 && t.eval_neg_ratio.is_finite()) {
            return Err(ConfigError::at(
                "/train/eval_neg_ratio",
                format!("must be > 0, got {}", t.eval_neg_ratio),
            ));
        }
        if t.epochs == Some(0) {
            return Err(ConfigError::at("/train/epochs", "must be >= 1"));
        }
        for (ptr, v) in [
            ("/train/patience", t.patience),
            ("/train/batch_size", t.batch_size),
            ("/train/eval_chunk", t.eval_chunk),
        ] {
            if v == 0 {
                return Err(ConfigError::at(ptr, "must be >= 1"));
            }
        }
        if !(t.lr >= 0.0 && t.lr.is_finite()) {
            return Err(ConfigError::at(
                "/train/lr",
                format!("must be >= 0, got {}", t.lr),
            ));
        }
        if !(t.weight_decay >= 0.0) {
            return Err(ConfigError::at(
                "/train/weight_decay",
                format!("must be >= 0, got {}", t.weight_decay),
            ));
        }
        t.schedule
            .validate()
            .map_err(|m| ConfigError::at("/train/schedule", m))?;
        if let Some(pw) = t.loss.pos_weight {
            if !(pw >= 1.0) {
                return Err(ConfigError::at(
                    "/train/loss/pos_weight",
                    format!("must be >= 1, got {pw}"),
                ));
            }
        }
        if t.loss.kind == LossKind::Focal && !(t.loss.gamma >= 0.0) {
            return Err(ConfigError::at(
                "/train/loss/gamma",
                "focal loss needs gamma >= 0",
            ));
        }
        if t.seeds.is_empty() {
            return Err(ConfigError::at(
                "/train/seeds",
                "at least one seed is required",
            ));
        }
        if let Some(i) = t.fanout.iter().position(|&f| f == 0) {
            return Err(ConfigError::at(
                &format!("/train/fanout/{i}"),
                "fan-out caps must be >= 1",
            ));
        }
        let kinds: Vec<ModelKind> = std::iter::once(self.model)
            .chain(self.report.models.iter().copied())
            .collect();
        for kind in kinds {
            self.check_fanout(kind)?;
        }
        self.search
            .space
            .validate()
            .map_err(|m| ConfigError::at("/search/space", m))?;
        for (i, f) in self.search.space.fanout.iter().enumerate() {
            if f.is_empty() || f.contains(&0) {
                return Err(ConfigError::at(
                    &format!("/search/space/fanout/{i}"),
                    "fan-out caps must be >= 1",
                ));
            }
        }
        if let Some(spec) = &self.synthetic {
            spec.validate()
                .map_err(|m| ConfigError::at("/synthetic", m))?;
        }
        if self.dataset.category_depth == 0 {
            return Err(ConfigError::at("/dataset/category_depth", "must be >= 1"));
        }
        self.features
            .numeric_indices()
            .map_err(|e| ConfigError::at("/features/numeric_fields", e.to_string()))?;
        if let Some(k) = self.features.pca_target {
            if k == 0 || k > self.features.title_dim {
                return Err(ConfigError::at(
                    "/features/pca_target",
                    format!("must be in 1..={}, got {k}", self.features.title_dim),
                ));
            }
        }
        let m = &self.models;
        for (ptr, v) in [
            ("/models/sage/layers", m.sage.layers),
            ("/models/pinsage/layers", m.pinsage.layers),
            ("/models/lightgcn/layers", m.lightgcn.layers),
            ("/models/gat/heads_l1", m.gat.heads_l1),
            ("/models/gat/heads_l2", m.gat.heads_l2),
            ("/models/pinsage/neighbors", m.pinsage.neighbors),
            ("/models/pinsage/num_walks", m.pinsage.num_walks),
            ("/models/pinsage/walk_length", m.pinsage.walk_length),
            ("/models/mlp/layers", m.mlp.layers),
        ] {
            if v == 0 {
                return Err(ConfigError::at(ptr, "must be >= 1"));
            }
        }
        for (ptr, p) in [
            ("/models/sage/dropout", m.sage.dropout),
            ("/models/gat/dropout", m.gat.dropout),
            ("/models/pinsage/dropout", m.pinsage.dropout),
            ("/models/mlp/dropout", m.mlp.dropout),
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(ConfigError::at(
                    ptr,
                    format!("dropout must be in [0, 1), got {p}"),
                ));
            }
        }
        Ok(())
    }

    fn check_fanout(&self, kind: ModelKind) -> Result<(), ConfigError> {
        let depth_field = match kind {
            ModelKind::Sage => "/models/sage/layers",
            ModelKind::Gat => "/models/gat (fixed at 2 layers)",
            _ => return Ok(()),
        };
        let depth = self.models.depth(kind);
        if self.train.fanout.len() != depth {
            return Err(ConfigError::at(
                "/train/fanout",
                format!(
                    "/train/fanout has {} hops but {depth_field} gives {kind} a depth of {depth}",
                    self.train.fanout.len()
                ),
            ));
        }
        Ok(())
    }

    /// Model override from the command line, re-validated.
    pub fn with_model(mut self, kind: ModelKind) -> Result<RunConfig, ConfigError> {
        self.model = kind;
        self.validate()?;
        Ok(self)
    }
}

/// Reads, defaults and validates a JSON run configuration.
pub fn validate_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    RunConfig::from_json(&text)
}
