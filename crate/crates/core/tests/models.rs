use wsd_core::models::{build_model, Architecture, ModelConfig, TraceSide};
use wsd_core::numerics::Tensor;

fn tiny(arch: Architecture) -> ModelConfig {
    ModelConfig {
        layers: 2,
        model_dim: 8,
        heads: 2,
        ff_dim: 8,
        ..ModelConfig::desk(arch, 7, 6)
    }
}

fn naive_attention(
    x: &Tensor,
    wq: &Tensor,
    wk: &Tensor,
    wv: &Tensor,
    heads: usize,
) -> Vec<Vec<f64>> {
    let mm = |a: &Tensor, b: &Tensor| -> Vec<Vec<f64>> {
        (0..a.rows())
            .map(|i| {
                (0..b.cols())
                    .map(|j| (0..a.cols()).map(|k| a.get2(i, k) * b.get2(k, j)).sum())
                    .collect()
            })
            .collect()
    };
    let (q, k, v) = (mm(x, wq), mm(x, wk), mm(x, wv));
    let n = x.rows();
    let dh = wq.cols() / heads;
    let mut out = vec![vec![0.0; wq.cols()]; n];
    for h in 0..heads {
        for i in 0..n {
            let s: Vec<f64> = (0..n)
                .map(|j| {
                    (0..dh)
                        .map(|c| q[i][h * dh + c] * k[j][h * dh + c])
                        .sum::<f64>()
                        / (dh as f64).sqrt()
                })
                .collect();
            let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = s.iter().map(|x| (x - m).exp()).collect();
            let z: f64 = e.iter().sum();
            for j in 0..n {
                for c in 0..dh {
                    out[i][h * dh + c] += e[j] / z * v[j][h * dh + c];
                }
            }
        }
    }
    out
}

#[test]
fn config_contract() {
    let ok = ModelConfig::desk(Architecture::Transformer, 50, 50);
    let m = build_model(&ok, 1).unwrap();
    assert_eq!(ok.head_dim(), 16);
    assert!(m.parameter_count() > 0);
    let bad = ModelConfig {
        heads: 5,
        ..ok.clone()
    };
    assert!(matches!(
        build_model(&bad, 1),
        Err(wsd_core::Error::Config(_))
    ));
    let odd = ModelConfig {
        layers: 3,
        ..ModelConfig::desk(Architecture::Rnns2s, 50, 50)
    };
    assert!(matches!(
        build_model(&odd, 1),
        Err(wsd_core::Error::Config(_))
    ));
}

#[test]
fn initialisation_is_deterministic() {
    for arch in [Architecture::Transformer, Architecture::Rnns2s] {
        let cfg = ModelConfig::desk(arch, 30, 40);
        let a = build_model(&cfg, 9).unwrap();
        let b = build_model(&cfg, 9).unwrap();
        let c = build_model(&cfg, 10).unwrap();
        assert!(a
            .params
            .iter()
            .zip(b.params.iter())
            .all(|(x, y)| x.value == y.value));
        assert!(a
            .params
            .iter()
            .zip(c.params.iter())
            .any(|(x, y)| x.value != y.value));
    }
}

#[test]
fn trace_shapes_and_single_token_attention() {
    let cfg = ModelConfig::desk(Architecture::Transformer, 30, 30);
    let m = build_model(&cfg, 3).unwrap();
    let t = m.encode(&[5]).unwrap();
    assert_eq!(t.hidden.len(), 5);
    for layer in &t.self_attention {
        assert_eq!(layer.len(), 4);
        for head in layer {
            assert_eq!(head.data(), &[1.0]);
        }
    }
    let t = m.encode(&[5, 6, 7, 8, 9, 10]).unwrap();
    assert!(t.hidden.iter().all(|h| h.shape() == [6, 64]));
    assert!(matches!(m.encode(&[]), Err(wsd_core::Error::Input(_))));

    let r = build_model(&ModelConfig::desk(Architecture::Rnns2s, 30, 30), 3).unwrap();
    let t = r.encode(&[5, 6, 7]).unwrap();
    assert_eq!(t.hidden.len(), 5);
    assert!(t.hidden.iter().all(|h| h.shape() == [3, 64]));
    assert!(t.self_attention.is_empty());
}

#[test]
fn self_attention_matches_naive_oracle() {
    let cfg = ModelConfig {
        positional_encoding: false,
        ..ModelConfig::desk(Architecture::Transformer, 30, 30)
    };
    let m = build_model(&cfg, 5).unwrap();
    let src = [4, 9, 13, 4, 22];
    let t = m.encode(&src).unwrap();
    let p = |n: &str| m.params.value(m.params.find(n).unwrap()).clone();
    // Layer-0 attention input: layer norm of the scaled embeddings.
    let emb = t.hidden[0].clone();
    let x: Vec<f64> = (0..emb.rows())
        .flat_map(|r| {
            let row: Vec<f64> = emb.row(r).iter().map(|v| v * 8.0).collect();
            let mu = row.iter().sum::<f64>() / 64.0;
            let var = row.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 64.0;
            row.into_iter()
                .map(move |v| (v - mu) / (var + 1e-5).sqrt())
                .collect::<Vec<_>>()
        })
        .collect();
    let x = Tensor::matrix(src.len(), 64, x).unwrap();
    let want = naive_attention(
        &x,
        &p("enc.0.attn.q"),
        &p("enc.0.attn.k"),
        &p("enc.0.attn.v"),
        4,
    );
    // Residual after attention = input + (concat heads)·Wo; check via layer-1 probabilities instead:
    // recompute head outputs from the traced probabilities and compare.
    let wv = p("enc.0.attn.v");
    for h in 0..4 {
        let probs = &t.self_attention[0][h];
        for i in 0..src.len() {
            for c in 0..16 {
                let got: f64 = (0..src.len())
                    .map(|j| {
                        probs.get2(i, j)
                            * (0..64)
                                .map(|k| x.get2(j, k) * wv.get2(k, h * 16 + c))
                                .sum::<f64>()
                    })
                    .sum();
                assert!(
                    (got - want[i][h * 16 + c]).abs() < 1e-10,
                    "head {h} row {i}"
                );
            }
        }
    }
}

#[test]
fn permutation_equivariance_without_positions() {
    let cfg = ModelConfig {
        positional_encoding: false,
        ..ModelConfig::desk(Architecture::Transformer, 30, 30)
    };
    let m = build_model(&cfg, 2).unwrap();
    let src = [3, 8, 15, 21];
    let perm = [2, 0, 3, 1];
    let permuted: Vec<usize> = perm.iter().map(|&i| src[i]).collect();
    let a = m.encode(&src).unwrap();
    let b = m.encode(&permuted).unwrap();
    for (k, &i) in perm.iter().enumerate() {
        for (x, y) in a.hidden[1].row(i).iter().zip(b.hidden[1].row(k)) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn decoder_is_causal() {
    for arch in [Architecture::Transformer, Architecture::Rnns2s] {
        let m = build_model(&ModelConfig::desk(arch, 30, 30), 4).unwrap();
        let enc = m.encode(&[4, 5, 6]).unwrap();
        let (la, ta) = m.decode_teacher_forced(&enc, &[7, 8, 9]).unwrap();
        let (_, tb) = m.decode_teacher_forced(&enc, &[7, 8, 20]).unwrap();
        assert_eq!(la.shape(), [4, 30]);
        assert_eq!(ta.side, TraceSide::Decoder);
        // Position 2 consumes BOS, 7, 8 only.
        for (ha, hb) in ta.hidden.iter().zip(&tb.hidden) {
            for t in 0..3 {
                assert_eq!(ha.row(t), hb.row(t), "{arch}");
            }
            assert_ne!(ha.row(3), hb.row(3));
        }
        for layer in &ta.self_attention {
            for head in layer {
                for i in 0..head.rows() {
                    assert!(head.row(i)[i + 1..].iter().all(|&v| v == 0.0));
                }
            }
        }
        let (l0, t0) = m.decode_teacher_forced(&enc, &[]).unwrap();
        assert_eq!(l0.rows(), 1);
        assert_eq!(t0.len(), 1);
    }
}

#[test]
fn rnn_directions_see_one_side() {
    let m = build_model(&ModelConfig::desk(Architecture::Rnns2s, 30, 30), 6).unwrap();
    let a = m.encode(&[4, 5, 6, 7, 8]).unwrap();
    let later = m.encode(&[4, 5, 6, 20, 21]).unwrap();
    let earlier = m.encode(&[22, 23, 6, 7, 8]).unwrap();
    // Layer 1 forward, layer 2 backward (first bidirectional level).
    for t in 0..3 {
        assert_eq!(a.hidden[1].row(t), later.hidden[1].row(t));
    }
    for t in 2..5 {
        assert_eq!(a.hidden[2].row(t), earlier.hidden[2].row(t));
    }
    assert_ne!(a.hidden[1].row(4), later.hidden[1].row(4));
    assert_ne!(a.hidden[2].row(0), earlier.hidden[2].row(0));
}

#[test]
fn tiny_models_pass_gradient_check() {
    for arch in [Architecture::Transformer, Architecture::Rnns2s] {
        let mut m = build_model(&tiny(arch), 11).unwrap();
        let r = m.grad_check_loss(&[3, 4, 5], &[3, 4, 5], 1e-5).unwrap();
        // Round-off in the difference quotient is ~1e-10 here, so only
        // coordinates with |g| well below 1e-4 can exceed 1e-6 relative.
        assert!(r.max_absolute < 1e-9, "{arch}: {r:?}");
        assert!(r.above_threshold * 10 < r.coordinates, "{arch}: {r:?}");
    }
}
