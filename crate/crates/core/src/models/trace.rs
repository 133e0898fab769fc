use super::Architecture;
use crate::numerics::{Tape, Tensor, Var};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceSide {
    Encoder,
    Decoder,
}

/// Everything a forward pass exposes for one sentence.
///
/// `hidden[0]` holds the raw token embeddings (no positional signal). For
/// the Transformer, `hidden[l]` is the residual stream after layer `l`. For
/// the recurrent encoder, odd entries are forward passes and even entries
/// backward passes of successive bidirectional levels; the recurrent decoder
/// lists its GRU layers and then the attentional output state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerTrace {
    pub architecture: Architecture,
    pub side: TraceSide,
    pub hidden: Vec<Tensor>,
    /// `[layer][head]`, each `n × n` (empty for recurrent models).
    pub self_attention: Vec<Vec<Tensor>>,
    /// Decoder only: `[layer][head]`, each `m × n` over source positions.
    pub cross_attention: Vec<Vec<Tensor>>,
}

impl LayerTrace {
    pub(crate) fn capture(
        tape: &Tape<'_>,
        architecture: Architecture,
        side: TraceSide,
        states: &[Var],
        self_attention: &[Vec<Var>],
        cross_attention: &[Vec<Var>],
    ) -> Self {
        let grab = |groups: &[Vec<Var>]| -> Vec<Vec<Tensor>> {
            groups
                .iter()
                .map(|g| g.iter().map(|&v| tape.tensor(v)).collect())
                .collect()
        };
        LayerTrace {
            architecture,
            side,
            hidden: states.iter().map(|&v| tape.tensor(v)).collect(),
            self_attention: grab(self_attention),
            cross_attention: grab(cross_attention),
        }
    }

    /// Number of positions (rows of each hidden state).
    pub fn len(&self) -> usize {
        self.hidden.first().map_or(0, |h| h.rows())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn layers(&self) -> usize {
        self.hidden.len().saturating_sub(1)
    }
}
