use super::{
    embedding_init, positional_encoding, xavier, DecoderVars, Dropout, EncoderVars, ModelConfig,
};
use crate::numerics::{ParamId, ParamSet, Tape, Tensor, Var};
use crate::rng::SeededRng;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy)]
struct Norm {
    gain: ParamId,
    bias: ParamId,
}

// Attention projections carry no biases: a key bias cancels under the
// softmax and would only add dead parameters.
#[derive(Debug, Clone, Copy)]
struct Attention {
    q: ParamId,
    k: ParamId,
    v: ParamId,
    o: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct FeedForward {
    w1: ParamId,
    b1: ParamId,
    w2: ParamId,
    b2: ParamId,
}

#[derive(Debug, Clone)]
struct EncoderLayer {
    ln_attn: Norm,
    attn: Attention,
    ln_ff: Norm,
    ff: FeedForward,
}

#[derive(Debug, Clone)]
struct DecoderLayer {
    ln_self: Norm,
    self_attn: Attention,
    ln_cross: Norm,
    cross_attn: Attention,
    ln_ff: Norm,
    ff: FeedForward,
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    src_embed: ParamId,
    tgt_embed: ParamId,
    encoder: Vec<EncoderLayer>,
    enc_norm: Norm,
    decoder: Vec<DecoderLayer>,
    dec_norm: Norm,
    out_w: ParamId,
    out_b: ParamId,
}

fn norm(params: &mut ParamSet, name: &str, d: usize) -> Norm {
    Norm {
        gain: params.add(format!("{name}.gain"), Tensor::filled(&[1, d], 1.0)),
        bias: params.add(format!("{name}.bias"), Tensor::zeros(&[1, d])),
    }
}

fn attention(params: &mut ParamSet, rng: &mut SeededRng, name: &str, d: usize) -> Attention {
    let mut w = |p: &str| params.add(format!("{name}.{p}"), xavier(rng, d, d));
    Attention {
        q: w("q"),
        k: w("k"),
        v: w("v"),
        o: w("o"),
    }
}

fn feed_forward(
    params: &mut ParamSet,
    rng: &mut SeededRng,
    name: &str,
    d: usize,
    ff: usize,
) -> FeedForward {
    FeedForward {
        w1: params.add(format!("{name}.w1"), xavier(rng, d, ff)),
        b1: params.add(format!("{name}.b1"), Tensor::zeros(&[1, ff])),
        w2: params.add(format!("{name}.w2"), xavier(rng, ff, d)),
        b2: params.add(format!("{name}.b2"), Tensor::zeros(&[1, d])),
    }
}

impl Layout {
    pub(crate) fn build(cfg: &ModelConfig, params: &mut ParamSet, rng: &mut SeededRng) -> Self {
        let d = cfg.model_dim;
        let src_embed = params.add("src.embed", embedding_init(rng, cfg.source_vocab, d));
        let tgt_embed = params.add("tgt.embed", embedding_init(rng, cfg.target_vocab, d));
        let encoder = (0..cfg.layers)
            .map(|l| {
                let name = format!("enc.{l}");
                EncoderLayer {
                    ln_attn: norm(params, &format!("{name}.ln_attn"), d),
                    attn: attention(params, rng, &format!("{name}.attn"), d),
                    ln_ff: norm(params, &format!("{name}.ln_ff"), d),
                    ff: feed_forward(params, rng, &format!("{name}.ff"), d, cfg.ff_dim),
                }
            })
            .collect();
        let enc_norm = norm(params, "enc.ln_out", d);
        let decoder = (0..cfg.layers)
            .map(|l| {
                let name = format!("dec.{l}");
                DecoderLayer {
                    ln_self: norm(params, &format!("{name}.ln_self"), d),
                    self_attn: attention(params, rng, &format!("{name}.self"), d),
                    ln_cross: norm(params, &format!("{name}.ln_cross"), d),
                    cross_attn: attention(params, rng, &format!("{name}.cross"), d),
                    ln_ff: norm(params, &format!("{name}.ln_ff"), d),
                    ff: feed_forward(params, rng, &format!("{name}.ff"), d, cfg.ff_dim),
                }
            })
            .collect();
        let dec_norm = norm(params, "dec.ln_out", d);
        let out_w = params.add("out.w", xavier(rng, d, cfg.target_vocab));
        let out_b = params.add("out.b", Tensor::zeros(&[1, cfg.target_vocab]));
        Layout {
            src_embed,
            tgt_embed,
            encoder,
            enc_norm,
            decoder,
            dec_norm,
            out_w,
            out_b,
        }
    }

    fn layer_norm(tape: &mut Tape<'_>, x: Var, n: Norm) -> Var {
        let g = tape.param(n.gain);
        let b = tape.param(n.bias);
        tape.layer_norm(x, g, b)
    }

    /// Embedding lookup; returns (raw embeddings, scaled + positional input).
    fn embed(cfg: &ModelConfig, tape: &mut Tape<'_>, table: ParamId, ids: &[usize]) -> (Var, Var) {
        let t = tape.param(table);
        let raw = tape.gather_rows(t, ids);
        let mut x = tape.scale(raw, crate::math::sqrt(cfg.model_dim as f64));
        if cfg.positional_encoding {
            let pe = tape.constant(
                ids.len(),
                cfg.model_dim,
                positional_encoding(ids.len(), cfg.model_dim),
            );
            x = tape.add(x, pe);
        }
        (raw, x)
    }

    fn multi_head(
        cfg: &ModelConfig,
        tape: &mut Tape<'_>,
        queries: Var,
        keys: Var,
        a: Attention,
        causal: bool,
    ) -> (Var, Vec<Var>) {
        let (wq, wk, wv, wo) = (
            tape.param(a.q),
            tape.param(a.k),
            tape.param(a.v),
            tape.param(a.o),
        );
        let q = tape.matmul(queries, wq);
        let k = tape.matmul(keys, wk);
        let v = tape.matmul(keys, wv);
        let dh = cfg.head_dim();
        let scale = 1.0 / crate::math::sqrt(dh as f64);
        let mut outs = Vec::with_capacity(cfg.heads);
        let mut probs = Vec::with_capacity(cfg.heads);
        for h in 0..cfg.heads {
            let qh = tape.slice_cols(q, h * dh, dh);
            let kh = tape.slice_cols(k, h * dh, dh);
            let vh = tape.slice_cols(v, h * dh, dh);
            let s = tape.matmul_nt(qh, kh);
            let s = tape.scale(s, scale);
            let p = tape.softmax_rows(s, causal);
            outs.push(tape.matmul(p, vh));
            probs.push(p);
        }
        let joined = if outs.len() == 1 {
            outs[0]
        } else {
            tape.concat_cols(&outs)
        };
        (tape.matmul(joined, wo), probs)
    }

    fn feed_forward(tape: &mut Tape<'_>, x: Var, f: FeedForward, drop: &mut Dropout<'_>) -> Var {
        let (w1, b1, w2, b2) = (
            tape.param(f.w1),
            tape.param(f.b1),
            tape.param(f.w2),
            tape.param(f.b2),
        );
        let h = tape.matmul(x, w1);
        let h = tape.add_row(h, b1);
        let h = tape.relu(h);
        let h = drop.apply(tape, h);
        let y = tape.matmul(h, w2);
        tape.add_row(y, b2)
    }

    pub(crate) fn encode(
        &self,
        cfg: &ModelConfig,
        tape: &mut Tape<'_>,
        src: &[usize],
        drop: &mut Dropout<'_>,
    ) -> EncoderVars {
        let (raw, x) = Self::embed(cfg, tape, self.src_embed, src);
        let mut x = drop.apply(tape, x);
        let mut states = vec![raw];
        let mut attention = Vec::with_capacity(cfg.layers);
        for layer in &self.encoder {
            let h = Self::layer_norm(tape, x, layer.ln_attn);
            let (a, probs) = Self::multi_head(cfg, tape, h, h, layer.attn, false);
            let a = drop.apply(tape, a);
            x = tape.add(x, a);
            let h = Self::layer_norm(tape, x, layer.ln_ff);
            let f = Self::feed_forward(tape, h, layer.ff, drop);
            let f = drop.apply(tape, f);
            x = tape.add(x, f);
            states.push(x);
            attention.push(probs);
        }
        let memory = self.encoder_memory(tape, x);
        EncoderVars {
            states,
            attention,
            memory,
        }
    }

    pub(crate) fn encoder_memory(&self, tape: &mut Tape<'_>, top: Var) -> Var {
        Self::layer_norm(tape, top, self.enc_norm)
    }

    pub(crate) fn decode(
        &self,
        cfg: &ModelConfig,
        tape: &mut Tape<'_>,
        memory: Var,
        input: &[usize],
        drop: &mut Dropout<'_>,
    ) -> DecoderVars {
        let (raw, x) = Self::embed(cfg, tape, self.tgt_embed, input);
        let mut x = drop.apply(tape, x);
        let mut states = vec![raw];
        let mut self_attention = Vec::with_capacity(cfg.layers);
        let mut cross_attention = Vec::with_capacity(cfg.layers);
        for layer in &self.decoder {
            let h = Self::layer_norm(tape, x, layer.ln_self);
            let (a, p_self) = Self::multi_head(cfg, tape, h, h, layer.self_attn, true);
            let a = drop.apply(tape, a);
            x = tape.add(x, a);
            let h = Self::layer_norm(tape, x, layer.ln_cross);
            let (c, p_cross) = Self::multi_head(cfg, tape, h, memory, layer.cross_attn, false);
            let c = drop.apply(tape, c);
            x = tape.add(x, c);
            let h = Self::layer_norm(tape, x, layer.ln_ff);
            let f = Self::feed_forward(tape, h, layer.ff, drop);
            let f = drop.apply(tape, f);
            x = tape.add(x, f);
            states.push(x);
            self_attention.push(p_self);
            cross_attention.push(p_cross);
        }
        let top = Self::layer_norm(tape, x, self.dec_norm);
        let (w, b) = (tape.param(self.out_w), tape.param(self.out_b));
        let logits = tape.matmul(top, w);
        let logits = tape.add_row(logits, b);
        DecoderVars {
            states,
            self_attention,
            cross_attention,
            logits,
        }
    }
}
