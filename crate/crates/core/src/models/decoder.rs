use serde::{Deserialize, Serialize};

use super::init::Init;
use crate::autodiff::{AutodiffError, ParamId, ParamStore, Tape, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    Mlp,
    Dot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpDecoderConfig {
    /// Linear layers including the scalar output layer.
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
}

impl Default for MlpDecoderConfig {
    fn default() -> Self {
        MlpDecoderConfig {
            layers: 2,
            hidden: 32,
            dropout: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Decoder {
    Dot,
    Mlp {
        weights: Vec<(ParamId, ParamId)>,
        dropout: f64,
    },
}

impl Decoder {
    pub(crate) fn mlp(init: &mut Init<'_>, in_dim: usize, cfg: &MlpDecoderConfig) -> Self {
        let mut dims = vec![in_dim];
        dims.extend(std::iter::repeat_n(
            cfg.hidden,
            cfg.layers.saturating_sub(1),
        ));
        dims.push(1);
        let weights = dims
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                (
                    init.glorot(&format!("dec.{k}.w"), w[0], w[1]),
                    init.zeros(&format!("dec.{k}.b"), 1, w[1]),
                )
            })
            .collect();
        Decoder::Mlp {
            weights,
            dropout: cfg.dropout,
        }
    }

    /// Logits (`n x 1`) for row pairs of `hu` and `hv`.
    pub fn logits(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        hu: Var,
        hv: Var,
    ) -> Result<Var, AutodiffError> {
        let prod = tape.mul(hu, hv)?;
        match self {
            Decoder::Dot => Ok(tape.row_sum(prod)),
            Decoder::Mlp { weights, dropout } => {
                let mut x = prod;
                let last = weights.len() - 1;
                for (k, &(w, b)) in weights.iter().enumerate() {
                    let wv = tape.param(store, w);
                    let bv = tape.param(store, b);
                    let z = tape.matmul(x, wv)?;
                    x = tape.add_row(z, bv)?;
                    if k < last {
                        x = tape.relu(x);
                        x = tape.dropout(x, *dropout)?;
                    }
                }
                Ok(x)
            }
        }
    }
}
