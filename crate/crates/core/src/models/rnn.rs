//! Bidirectional GRU encoder, GRU decoder, multiplicative attention.
//!
//! Gate layout inside the fused `3h` projections is `[reset | update | new]`;
//! the candidate state uses `r ⊙ (W_hn h + b_hn)`.

use super::{embedding_init, xavier, DecoderVars, Dropout, EncoderVars, ModelConfig};
use crate::numerics::{ParamId, ParamSet, Tape, Tensor, Var};
use crate::rng::SeededRng;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy)]
struct Gru {
    wx: ParamId,
    bx: ParamId,
    wh: ParamId,
    bh: ParamId,
    hidden: usize,
}

impl Gru {
    fn build(
        params: &mut ParamSet,
        rng: &mut SeededRng,
        name: &str,
        input: usize,
        hidden: usize,
    ) -> Self {
        Gru {
            wx: params.add(format!("{name}.wx"), xavier(rng, input, 3 * hidden)),
            bx: params.add(format!("{name}.bx"), Tensor::zeros(&[1, 3 * hidden])),
            wh: params.add(format!("{name}.wh"), xavier(rng, hidden, 3 * hidden)),
            bh: params.add(format!("{name}.bh"), Tensor::zeros(&[1, 3 * hidden])),
            hidden,
        }
    }

    /// Run over all rows of `x`; `reverse` scans right to left. The result
    /// is in the original position order.
    fn run(&self, tape: &mut Tape<'_>, x: Var, h0: Var, reverse: bool) -> Var {
        let h = self.hidden;
        let n = tape.rows(x);
        let (wx, bx, wh, bh) = (
            tape.param(self.wx),
            tape.param(self.bx),
            tape.param(self.wh),
            tape.param(self.bh),
        );
        let xp = tape.matmul(x, wx);
        let xp = tape.add_row(xp, bx);
        let mut state = h0;
        let mut out = vec![state; n];
        for step in 0..n {
            let t = if reverse { n - 1 - step } else { step };
            let xt = tape.slice_rows(xp, t, 1);
            let hp = tape.matmul(state, wh);
            let hp = tape.add_row(hp, bh);
            let x_rz = tape.slice_cols(xt, 0, 2 * h);
            let h_rz = tape.slice_cols(hp, 0, 2 * h);
            let rz = tape.add(x_rz, h_rz);
            let rz = tape.sigmoid(rz);
            let r = tape.slice_cols(rz, 0, h);
            let z = tape.slice_cols(rz, h, h);
            let x_n = tape.slice_cols(xt, 2 * h, h);
            let h_n = tape.slice_cols(hp, 2 * h, h);
            let gated = tape.mul(r, h_n);
            let cand = tape.add(x_n, gated);
            let cand = tape.tanh(cand);
            // h' = n + z ⊙ (h − n)
            let diff = tape.sub(state, cand);
            let keep = tape.mul(z, diff);
            state = tape.add(cand, keep);
            out[t] = state;
        }
        tape.stack_rows(&out)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    src_embed: ParamId,
    tgt_embed: ParamId,
    /// One (forward, backward) pair per bidirectional level.
    encoder: Vec<(Gru, Gru)>,
    init_w: ParamId,
    init_b: ParamId,
    decoder: Vec<Gru>,
    attn_w: ParamId,
    combine_w: ParamId,
    combine_b: ParamId,
    out_w: ParamId,
    out_b: ParamId,
}

impl Layout {
    pub(crate) fn build(cfg: &ModelConfig, params: &mut ParamSet, rng: &mut SeededRng) -> Self {
        let d = cfg.model_dim;
        let levels = cfg.layers / 2;
        let src_embed = params.add("src.embed", embedding_init(rng, cfg.source_vocab, d));
        let tgt_embed = params.add("tgt.embed", embedding_init(rng, cfg.target_vocab, d));
        let encoder = (0..levels)
            .map(|k| {
                let input = if k == 0 { d } else { 2 * d };
                (
                    Gru::build(params, rng, &format!("enc.{k}.fwd"), input, d),
                    Gru::build(params, rng, &format!("enc.{k}.bwd"), input, d),
                )
            })
            .collect();
        let init_w = params.add("dec.init.w", xavier(rng, 2 * d, d));
        let init_b = params.add("dec.init.b", Tensor::zeros(&[1, d]));
        let decoder = (0..levels)
            .map(|k| Gru::build(params, rng, &format!("dec.{k}"), d, d))
            .collect();
        let attn_w = params.add("dec.attn.w", xavier(rng, 2 * d, d));
        let combine_w = params.add("dec.combine.w", xavier(rng, 3 * d, d));
        let combine_b = params.add("dec.combine.b", Tensor::zeros(&[1, d]));
        let out_w = params.add("out.w", xavier(rng, d, cfg.target_vocab));
        let out_b = params.add("out.b", Tensor::zeros(&[1, cfg.target_vocab]));
        Layout {
            src_embed,
            tgt_embed,
            encoder,
            init_w,
            init_b,
            decoder,
            attn_w,
            combine_w,
            combine_b,
            out_w,
            out_b,
        }
    }

    pub(crate) fn encode(
        &self,
        cfg: &ModelConfig,
        tape: &mut Tape<'_>,
        src: &[usize],
        drop: &mut Dropout<'_>,
    ) -> EncoderVars {
        let table = tape.param(self.src_embed);
        let raw = tape.gather_rows(table, src);
        let zero = tape.constant(1, cfg.model_dim, vec![0.0; cfg.model_dim]);
        let mut states = vec![raw];
        let mut x = drop.apply(tape, raw);
        let mut top = raw;
        for (fwd, bwd) in &self.encoder {
            let f = fwd.run(tape, x, zero, false);
            let b = bwd.run(tape, x, zero, true);
            states.push(f);
            states.push(b);
            top = tape.concat_cols(&[f, b]);
            x = drop.apply(tape, top);
        }
        EncoderVars {
            states,
            attention: Vec::new(),
            memory: top,
        }
    }

    pub(crate) fn decode(
        &self,
        _cfg: &ModelConfig,
        tape: &mut Tape<'_>,
        memory: Var,
        input: &[usize],
        drop: &mut Dropout<'_>,
    ) -> DecoderVars {
        let table = tape.param(self.tgt_embed);
        let raw = tape.gather_rows(table, input);
        let (iw, ib) = (tape.param(self.init_w), tape.param(self.init_b));
        let pooled = tape.mean_rows(memory);
        let h0 = tape.matmul(pooled, iw);
        let h0 = tape.add_row(h0, ib);
        let h0 = tape.tanh(h0);

        let mut states = vec![raw];
        let mut x = drop.apply(tape, raw);
        let mut top = raw;
        for gru in &self.decoder {
            top = gru.run(tape, x, h0, false);
            states.push(top);
            x = drop.apply(tape, top);
        }

        let wa = tape.param(self.attn_w);
        let keys = tape.matmul(memory, wa);
        let scores = tape.matmul_nt(top, keys);
        let probs = tape.softmax_rows(scores, false);
        let context = tape.matmul(probs, memory);
        let (cw, cb) = (tape.param(self.combine_w), tape.param(self.combine_b));
        let joined = tape.concat_cols(&[context, top]);
        let attended = tape.matmul(joined, cw);
        let attended = tape.add_row(attended, cb);
        let attended = tape.tanh(attended);
        states.push(attended);

        let attended = drop.apply(tape, attended);
        let (ow, ob) = (tape.param(self.out_w), tape.param(self.out_b));
        let logits = tape.matmul(attended, ow);
        let logits = tape.add_row(logits, ob);
        DecoderVars {
            states,
            self_attention: Vec::new(),
            cross_attention: vec![vec![probs]],
            logits,
        }
    }
}
