//! Link-prediction encoders and decoders built on the autodiff tape.

pub mod block;
mod decoder;
mod gat;
mod init;
mod lightgcn;
mod sage;

use serde::{Deserialize, Serialize};

pub use block::{Block, BlockLayer};
pub use decoder::{Decoder, DecoderKind, MlpDecoderConfig};
pub use gat::{Attention, Gat};
pub use lightgcn::{normalized_adjacency, LayerCombination, LightGcn, Normalization};
pub use sage::SageStack;

use crate::autodiff::{AutodiffError, Matrix, ParamId, ParamStore, SparseRows, Tape, Var};
use crate::features::FeatureMatrix;
use crate::graph::NodeId;
use init::Init;

pub(crate) fn depth_error(found: usize, expected: usize) -> AutodiffError {
    AutodiffError::ShapeMismatch {
        op: "block depth",
        left: (found, 0),
        right: (expected, 0),
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    #[serde(alias = "graphsage")]
    Sage,
    Gat,
    Pinsage,
    Lightgcn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Sage,
        ModelKind::Gat,
        ModelKind::Pinsage,
        ModelKind::Lightgcn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Sage => "sage",
            ModelKind::Gat => "gat",
            ModelKind::Pinsage => "pinsage",
            ModelKind::Lightgcn => "lightgcn",
        }
    }

    /// Uses node features (and therefore sampled blocks).
    pub fn uses_features(self) -> bool {
        self != ModelKind::Lightgcn
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "graphsage" {
            return Ok(ModelKind::Sage);
        }
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                format!("unknown model '{s}' (expected sage, graphsage, gat, pinsage, lightgcn)")
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SageConfig {
    pub hidden: usize,
    pub out: usize,
    pub layers: usize,
    pub dropout: f64,
    /// Project `[self || neighbor mean]` with one matrix.
    pub concat: bool,
}

impl Default for SageConfig {
    fn default() -> Self {
        SageConfig {
            hidden: 32,
            out: 32,
            layers: 2,
            dropout: 0.3,
            concat: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatConfig {
    /// Width of each first-layer head.
    pub hidden: usize,
    pub heads_l1: usize,
    pub heads_l2: usize,
    pub out: usize,
    pub dropout: f64,
    pub negative_slope: f64,
}

impl Default for GatConfig {
    fn default() -> Self {
        GatConfig {
            hidden: 256,
            heads_l1: 2,
            heads_l2: 1,
            out: 512,
            dropout: 0.05,
            negative_slope: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PinSageConfig {
    pub hidden: usize,
    pub out: usize,
    pub layers: usize,
    pub dropout: f64,
    /// Top-k visited nodes kept per hop.
    pub neighbors: usize,
    pub num_walks: usize,
    pub walk_length: usize,
}

impl Default for PinSageConfig {
    fn default() -> Self {
        PinSageConfig {
            hidden: 256,
            out: 128,
            layers: 3,
            dropout: 0.25,
            neighbors: 8,
            num_walks: 15,
            walk_length: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LightGcnConfig {
    pub emb_dim: usize,
    pub layers: usize,
    pub combine: LayerCombination,
    pub norm: Normalization,
}

impl Default for LightGcnConfig {
    fn default() -> Self {
        LightGcnConfig {
            emb_dim: 128,
            layers: 2,
            combine: LayerCombination::Mean,
            norm: Normalization::Symmetric,
        }
    }
}

/// Hyperparameters of every model; the trainer picks one by [`ModelKind`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsConfig {
    pub sage: SageConfig,
    pub gat: GatConfig,
    pub pinsage: PinSageConfig,
    pub lightgcn: LightGcnConfig,
    /// Defaults to `dot` for LightGCN and `mlp` otherwise.
    pub decoder: Option<DecoderKind>,
    pub mlp: MlpDecoderConfig,
}

impl ModelsConfig {
    /// Number of message-passing hops the model consumes.
    pub fn depth(&self, kind: ModelKind) -> usize {
        match kind {
            ModelKind::Sage => self.sage.layers,
            ModelKind::Gat => 2,
            ModelKind::Pinsage => self.pinsage.layers,
            ModelKind::Lightgcn => self.lightgcn.layers,
        }
    }

    pub fn decoder_kind(&self, kind: ModelKind) -> DecoderKind {
        self.decoder.unwrap_or(match kind {
            ModelKind::Lightgcn => DecoderKind::Dot,
            _ => DecoderKind::Mlp,
        })
    }

    pub fn embedding_dim(&self, kind: ModelKind) -> usize {
        match kind {
            ModelKind::Sage => self.sage.out,
            ModelKind::Gat => self.gat.out,
            ModelKind::Pinsage => self.pinsage.out,
            ModelKind::Lightgcn => self.lightgcn.emb_dim,
        }
    }

    /// Dropout rate used by the encoder of `kind`.
    pub fn dropout(&self, kind: ModelKind) -> f64 {
        match kind {
            ModelKind::Sage => self.sage.dropout,
            ModelKind::Gat => self.gat.dropout,
            ModelKind::Pinsage => self.pinsage.dropout,
            ModelKind::Lightgcn => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Encoder {
    Sage(SageStack),
    Gat(Gat),
    PinSage(SageStack),
    LightGcn(LightGcn),
}

/// Trainable category-path table pooled into the `path` feature block.
#[derive(Debug, Clone)]
struct PathParam {
    table: ParamId,
    start: usize,
    end: usize,
    item_paths: Vec<Vec<usize>>,
}

/// Encoder, decoder and their parameters.
#[derive(Debug, Clone)]
pub struct Model {
    pub kind: ModelKind,
    pub store: ParamStore,
    pub encoder: Encoder,
    pub decoder: Decoder,
    path: Option<PathParam>,
}

fn stack_dims(in_dim: usize, hidden: usize, out: usize, layers: usize) -> Vec<usize> {
    let mut dims = vec![in_dim];
    dims.extend(std::iter::repeat_n(hidden, layers.saturating_sub(1)));
    dims.push(out);
    dims
}

impl Model {
    /// `features` supplies the input width (and the trainable path table
    /// when present); LightGCN ignores it and sizes its table by `num_nodes`.
    pub fn new(
        kind: ModelKind,
        cfg: &ModelsConfig,
        features: Option<&FeatureMatrix>,
        num_nodes: usize,
        seed: u64,
    ) -> Self {
        let mut store = ParamStore::new();
        let mut init = Init::new(&mut store, seed);
        let in_dim = features.map_or(0, |f| f.dim());
        let encoder = match kind {
            ModelKind::Sage => {
                let c = &cfg.sage;
                Encoder::Sage(SageStack::new(
                    &mut init,
                    "sage",
                    &stack_dims(in_dim, c.hidden, c.out, c.layers),
                    c.dropout,
                    false,
                    c.concat,
                ))
            }
            ModelKind::Pinsage => {
                let c = &cfg.pinsage;
                Encoder::PinSage(SageStack::new(
                    &mut init,
                    "pinsage",
                    &stack_dims(in_dim, c.hidden, c.out, c.layers),
                    c.dropout,
                    true,
                    false,
                ))
            }
            ModelKind::Gat => {
                let c = &cfg.gat;
                Encoder::Gat(Gat::new(
                    &mut init,
                    in_dim,
                    c.hidden,
                    c.heads_l1,
                    c.heads_l2,
                    c.out,
                    c.dropout,
                    c.negative_slope,
                ))
            }
            ModelKind::Lightgcn => {
                let c = &cfg.lightgcn;
                Encoder::LightGcn(LightGcn::new(
                    &mut init, num_nodes, c.emb_dim, c.layers, c.combine,
                ))
            }
        };
        let decoder = match cfg.decoder_kind(kind) {
            DecoderKind::Dot => Decoder::Dot,
            DecoderKind::Mlp => Decoder::mlp(&mut init, cfg.embedding_dim(kind), &cfg.mlp),
        };
        let path = match (kind.uses_features(), features) {
            (true, Some(f)) => {
                f.path_input
                    .as_ref()
                    .zip(f.block("path"))
                    .map(|(pi, r)| PathParam {
                        table: init.store.add("path.table", pi.table.clone()),
                        start: r.start,
                        end: r.end,
                        item_paths: pi.item_paths.clone(),
                    })
            }
            _ => None,
        };
        if let Encoder::LightGcn(l) = &encoder {
            // Only the embedding table carries the L2 penalty.
            let emb = l.emb;
            let ids: Vec<ParamId> = store.ids().filter(|&id| id != emb).collect();
            for id in ids {
                store.set_decay(id, false);
            }
        }
        Model {
            kind,
            store,
            encoder,
            decoder,
            path,
        }
    }

    pub fn depth(&self) -> usize {
        match &self.encoder {
            Encoder::Sage(s) | Encoder::PinSage(s) => s.depth(),
            Encoder::Gat(g) => g.depth(),
            Encoder::LightGcn(l) => l.num_layers,
        }
    }

    /// Feature rows of `nodes`, with the path block recomputed from the
    /// trainable table when one is attached.
    pub fn input(
        &self,
        tape: &mut Tape,
        features: &FeatureMatrix,
        nodes: &[NodeId],
    ) -> Result<Var, AutodiffError> {
        let idx: Vec<usize> = nodes.iter().map(|&u| u as usize).collect();
        let x = tape.constant(features.data.select_rows(&idx));
        let Some(p) = &self.path else {
            return Ok(x);
        };
        let mut gather = Vec::new();
        let mut seg = Vec::new();
        for (r, &u) in idx.iter().enumerate() {
            for &pid in &p.item_paths[u] {
                gather.push(pid);
                seg.push(r);
            }
        }
        let table = tape.param(&self.store, p.table);
        let rows = tape.row_gather(table, &gather)?;
        let pooled = tape.segment_mean(rows, &seg, idx.len())?;
        let mut parts = Vec::new();
        if p.start > 0 {
            parts.push(tape.slice_cols(x, 0, p.start)?);
        }
        parts.push(pooled);
        if p.end < features.dim() {
            parts.push(tape.slice_cols(x, p.end, features.dim())?);
        }
        tape.concat_cols(&parts)
    }

    /// Embeddings of `block.output_nodes()`, one row each.
    pub fn encode_block(
        &self,
        tape: &mut Tape,
        features: &FeatureMatrix,
        block: &Block,
    ) -> Result<Var, AutodiffError> {
        let x = self.input(tape, features, block.input_nodes())?;
        match &self.encoder {
            Encoder::Sage(s) | Encoder::PinSage(s) => s.forward(tape, &self.store, x, block),
            Encoder::Gat(g) => g.forward(tape, &self.store, x, block),
            Encoder::LightGcn(_) => Err(AutodiffError::ShapeMismatch {
                op: "lightgcn has no block encoder",
                left: (0, 0),
                right: (0, 0),
            }),
        }
    }

    /// LightGCN embeddings of every node given the propagation operator.
    pub fn encode_all(&self, tape: &mut Tape, adj: &SparseRows) -> Result<Var, AutodiffError> {
        match &self.encoder {
            Encoder::LightGcn(l) => l.forward(tape, &self.store, adj),
            _ => Err(AutodiffError::ShapeMismatch {
                op: "encode_all needs lightgcn",
                left: (0, 0),
                right: (0, 0),
            }),
        }
    }

    /// Logits for `pairs`, given embeddings `h` and a map to their rows.
    pub fn score_pairs(
        &self,
        tape: &mut Tape,
        h: Var,
        pairs: &[(usize, usize)],
    ) -> Result<Var, AutodiffError> {
        let us: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let vs: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let hu = tape.row_gather(h, &us)?;
        let hv = tape.row_gather(h, &vs)?;
        self.decoder.logits(tape, &self.store, hu, hv)
    }

    /// In-memory copy of the current parameter values.
    pub fn snapshot(&self) -> Vec<Matrix> {
        self.store.iter().map(|p| p.value.clone()).collect()
    }

    pub fn restore(&mut self, snap: &[Matrix]) {
        for (p, v) in self.store.iter_mut().zip(snap) {
            p.value = v.clone();
        }
    }

    /// Finite-difference check of every parameter for the scalar `loss`.
    pub fn gradient_error<F>(&mut self, h: f64, loss: F) -> Result<f64, AutodiffError>
    where
        F: Fn(&Model, &mut Tape) -> Result<Var, AutodiffError>,
    {
        crate::autodiff::max_param_gradient_error(self, h, |m| &mut m.store, loss)
    }
}
