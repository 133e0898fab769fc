use wsd_core::decode::{corpus_bleu, greedy_decode};
use wsd_core::models::{
    build_model, copy_task, eval_loss, train_nmt, Architecture, ModelConfig, TrainConfig,
};
use wsd_core::Error;

fn small(arch: Architecture, vocab: usize) -> ModelConfig {
    ModelConfig {
        layers: 2,
        model_dim: 32,
        heads: 4,
        ff_dim: 64,
        ..ModelConfig::desk(arch, vocab, vocab)
    }
}

#[test]
fn fifty_sentence_copy_task_halves_the_loss() {
    let pairs = copy_task(50, 12, 3, 8, 5).unwrap();
    for arch in [Architecture::Transformer, Architecture::Rnns2s] {
        let mut m = build_model(&small(arch, 12), 6).unwrap();
        let initial = eval_loss(&m, &pairs).unwrap();
        let cfg = TrainConfig {
            epochs: 30,
            learning_rate: 1e-3,
            batch_size: 4,
            ..TrainConfig::default()
        };
        let report = train_nmt(&mut m, &pairs, &cfg, |_| {}).unwrap();
        assert_eq!(report.epochs.len(), 30);
        let last = *report.losses().last().unwrap();
        assert!(last < 0.5 * initial, "{arch}: {initial} -> {last}");
        assert!(eval_loss(&m, &pairs).unwrap() < 0.5 * initial);
        assert_eq!(m.meta.epochs, 30);
        assert_eq!(m.meta.final_loss, Some(last));
    }
}

#[test]
fn zero_epochs_leave_the_model_untouched() {
    let pairs = copy_task(5, 10, 2, 4, 1).unwrap();
    let mut m = build_model(&small(Architecture::Transformer, 10), 2).unwrap();
    let before = m.clone();
    let cfg = TrainConfig {
        epochs: 0,
        ..TrainConfig::default()
    };
    let report = train_nmt(&mut m, &pairs, &cfg, |_| panic!("no epochs expected")).unwrap();
    assert!(report.epochs.is_empty());
    for (a, b) in m.params.iter().zip(before.params.iter()) {
        assert_eq!(a.value, b.value);
    }
}

#[test]
fn training_is_deterministic() {
    let pairs = copy_task(12, 10, 2, 5, 3).unwrap();
    let cfg = TrainConfig {
        epochs: 2,
        batch_size: 3,
        learning_rate: 1e-3,
        seed: 9,
        ..TrainConfig::default()
    };
    for arch in [Architecture::Transformer, Architecture::Rnns2s] {
        let run = || {
            let mut m = build_model(
                &ModelConfig {
                    dropout: 0.1,
                    ..small(arch, 10)
                },
                4,
            )
            .unwrap();
            train_nmt(&mut m, &pairs, &cfg, |_| {}).unwrap();
            m
        };
        let (a, b) = (run(), run());
        for (x, y) in a.params.iter().zip(b.params.iter()) {
            assert_eq!(x.value, y.value, "{arch}: {}", x.name);
        }
    }
}

#[test]
fn divergence_is_reported_with_its_epoch() {
    let pairs = copy_task(4, 10, 2, 4, 2).unwrap();
    let mut m = build_model(&small(Architecture::Transformer, 10), 2).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        learning_rate: 1e300,
        clip_norm: None,
        ..TrainConfig::default()
    };
    match train_nmt(&mut m, &pairs, &cfg, |_| {}) {
        Err(Error::Training { epoch, .. }) => assert!((1..=3).contains(&epoch)),
        other => panic!("expected a training error, got {other:?}"),
    }
}

#[test]
fn rejects_bad_inputs() {
    let mut m = build_model(&small(Architecture::Rnns2s, 10), 2).unwrap();
    assert!(train_nmt(&mut m, &[], &TrainConfig::default(), |_| {}).is_err());
    let bad = vec![(vec![], vec![3])];
    assert!(train_nmt(&mut m, &bad, &TrainConfig::default(), |_| {}).is_err());
    let zero_batch = TrainConfig {
        batch_size: 0,
        ..TrainConfig::default()
    };
    assert!(train_nmt(
        &mut m,
        &copy_task(2, 10, 1, 2, 0).unwrap(),
        &zero_batch,
        |_| {}
    )
    .is_err());
    assert!(copy_task(3, 3, 1, 2, 0).is_err());
    assert!(copy_task(3, 10, 4, 2, 0).is_err());
}

#[test]
fn copy_model_reproduces_held_out_sentences() {
    let data = copy_task(1050, 12, 3, 10, 1).unwrap();
    let (train, held) = data.split_at(1000);
    let mut m = build_model(&small(Architecture::Rnns2s, 12), 2).unwrap();
    let cfg = TrainConfig {
        epochs: 20,
        batch_size: 8,
        learning_rate: 1e-3,
        ..TrainConfig::default()
    };
    train_nmt(&mut m, train, &cfg, |_| {}).unwrap();
    let hyps: Vec<Vec<usize>> = held
        .iter()
        .map(|(s, _)| greedy_decode(&m, s, 20).unwrap().tokens)
        .collect();
    let refs: Vec<Vec<usize>> = held.iter().map(|(_, t)| t.clone()).collect();
    let exact = hyps.iter().zip(&refs).filter(|(h, r)| h == r).count();
    let bleu = corpus_bleu(&hyps, &refs, 4).unwrap();
    assert!(bleu.score >= 90.0, "BLEU {}", bleu.score);
    assert!(
        exact * 10 >= held.len() * 9,
        "{exact}/{} exact copies",
        held.len()
    );
}
