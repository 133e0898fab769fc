use serde_json::{json, Value};
use std::path::Path;
use wsd_core::models::Architecture;
use wsd_harness::pipeline::{Manifest, Outcome, FAILED_FILE, MANIFEST_FILE, SUMMARY_FILE};
use wsd_harness::{Pipeline, RunConfig, RunOptions, Stage};

fn tiny() -> RunConfig {
    serde_json::from_value(json!({
        "name": "tiny",
        "seed": 3,
        "corpus": {
            "synthetic": { "sentences": 240, "ambiguous_fraction": 0.3 },
            "bpe_merges": 40,
            "heldout_sentences": 20
        },
        "model": { "layers": 2, "model_dim": 16, "heads": 2, "ff_dim": 32 },
        "training": { "epochs": 1, "batch_size": 16 },
        "probe": { "seeds": 2, "epochs": 3, "hidden": 8 },
        "analysis": { "attention_sentences": 40, "max_decode_length": 20 }
    }))
    .unwrap()
}

fn stages(list: &[Stage]) -> RunOptions {
    RunOptions {
        stages: list.to_vec(),
        ..RunOptions::default()
    }
}

fn outcomes(p: &Pipeline) -> Vec<(Stage, Option<Architecture>, Outcome)> {
    p.records()
        .iter()
        .map(|r| (r.stage, r.architecture, r.outcome))
        .collect()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn full_run_writes_every_artifact_and_then_caches() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = Pipeline::new(tiny(), dir.path()).unwrap();
    let summary = p.run(&RunOptions::default()).unwrap();
    assert!(outcomes(&p).iter().all(|o| o.2 == Outcome::Ran));
    for f in [
        "corpus/corpus.tsv",
        "corpus/merges.txt",
        "models/transformer/params.wsdt",
        "models/transformer/params.wsdt.json",
        "models/rnns2s/model.json",
        "traces/rnns2s/features.wsdt",
        "probe/transformer/probe_report.csv",
        "probe/rnns2s/probe_report.json",
        "analysis/transformer/attention_stats.csv",
        "analysis/transformer/bleu.json",
        "analysis/rnns2s/translations.txt",
        SUMMARY_FILE,
        "run_config.json",
    ] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    // Attention statistics only exist for the self-attentive model.
    assert!(!dir
        .path()
        .join("analysis/rnns2s/attention_stats.csv")
        .exists());

    let on_disk: Value = serde_json::from_slice(&read(&dir.path().join(SUMMARY_FILE))).unwrap();
    assert_eq!(on_disk["config_hash"], summary["config_hash"]);
    assert_eq!(on_disk["master_seed"], 3);
    let artifacts = on_disk["artifacts"].as_object().unwrap();
    assert!(artifacts.contains_key("probe/rnns2s/probe_report.csv"));
    assert!(!artifacts.contains_key(SUMMARY_FILE));

    let m: Manifest = serde_json::from_slice(&read(
        &dir.path().join("probe/transformer").join(MANIFEST_FILE),
    ))
    .unwrap();
    assert_eq!(m.stage, Stage::Probe);
    assert!(m.seeds.contains_key("probe") && m.inputs.contains_key("trace"));

    let csv = read(&dir.path().join("probe/transformer/probe_report.csv"));
    let mut again = Pipeline::new(tiny(), dir.path()).unwrap();
    again.run(&RunOptions::default()).unwrap();
    assert!(
        outcomes(&again).iter().all(|o| o.2 == Outcome::Cached),
        "{:?}",
        outcomes(&again)
    );
    assert_eq!(
        read(&dir.path().join("probe/transformer/probe_report.csv")),
        csv
    );

    let mut forced = Pipeline::new(tiny(), dir.path()).unwrap();
    forced
        .run(&RunOptions {
            stages: vec![Stage::Probe],
            architectures: vec![Architecture::Transformer],
            force: true,
        })
        .unwrap();
    let o = outcomes(&forced);
    assert!(o.contains(&(Stage::Probe, Some(Architecture::Transformer), Outcome::Ran)));
    assert!(o.contains(&(
        Stage::Train,
        Some(Architecture::Transformer),
        Outcome::Loaded
    )));
    assert!(!o.iter().any(|r| r.1 == Some(Architecture::Rnns2s)));
    assert_eq!(
        read(&dir.path().join("probe/transformer/probe_report.csv")),
        csv,
        "recomputation is deterministic"
    );
}

#[test]
fn probe_only_reuses_training_and_notices_changes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny();
    cfg.architectures = vec![Architecture::Transformer];
    Pipeline::new(cfg.clone(), dir.path())
        .unwrap()
        .run(&RunOptions::default())
        .unwrap();
    let params = read(&dir.path().join("models/transformer/params.wsdt"));

    // A new probe configuration: only the probe stage runs.
    cfg.probe.seeds = 3;
    let mut p = Pipeline::new(cfg.clone(), dir.path()).unwrap();
    let summary = p.run(&stages(&[Stage::Probe])).unwrap();
    let o = outcomes(&p);
    assert!(o.contains(&(
        Stage::Train,
        Some(Architecture::Transformer),
        Outcome::Loaded
    )));
    assert!(o.contains(&(
        Stage::Trace,
        Some(Architecture::Transformer),
        Outcome::Loaded
    )));
    assert!(o.contains(&(Stage::Probe, Some(Architecture::Transformer), Outcome::Ran)));
    assert_eq!(
        read(&dir.path().join("models/transformer/params.wsdt")),
        params
    );
    assert_eq!(
        summary["architectures"]["transformer"]["probe"][0]["seeds"],
        3
    );

    // A different training setup invalidates the model, which probe-only
    // runs refuse to rebuild.
    cfg.training.epochs = 2;
    let mut p = Pipeline::new(cfg.clone(), dir.path()).unwrap();
    let err = p.run(&stages(&[Stage::Probe])).unwrap_err();
    assert_eq!(err.stage, Stage::Train);
    assert!(err.to_string().contains("stage `train`"), "{err}");
    let marker: Value = serde_json::from_slice(&read(&dir.path().join(FAILED_FILE))).unwrap();
    assert_eq!(marker["stage"], "train");

    // So does a corrupted checkpoint, even under the original config.
    cfg.training.epochs = 1;
    let path = dir.path().join("models/transformer/params.wsdt");
    let mut bytes = params.clone();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&path, bytes).unwrap();
    let err = Pipeline::new(cfg.clone(), dir.path())
        .unwrap()
        .run(&stages(&[Stage::Probe]))
        .unwrap_err();
    assert_eq!(err.stage, Stage::Train);

    // Re-running training repairs it and clears the marker.
    Pipeline::new(cfg, dir.path())
        .unwrap()
        .run(&stages(&[Stage::Train, Stage::Probe]))
        .unwrap();
    assert_eq!(read(&path), params);
    assert!(!dir.path().join(FAILED_FILE).exists());
}

#[test]
fn missing_upstream_stage_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let err = Pipeline::new(tiny(), dir.path())
        .unwrap()
        .run(&stages(&[Stage::Probe]))
        .unwrap_err();
    assert_eq!(err.stage, Stage::Generate);
    assert!(err.to_string().contains("stage `generate`"), "{err}");
    assert!(dir.path().join(FAILED_FILE).is_file());
}

#[test]
fn generate_only_stops_early() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = Pipeline::new(tiny(), dir.path()).unwrap();
    let summary = p.run(&stages(&[Stage::Generate])).unwrap();
    assert_eq!(outcomes(&p), vec![(Stage::Generate, None, Outcome::Ran)]);
    assert_eq!(summary["corpus"]["sentences"], 240);
    assert!(!dir.path().join("models").exists());
    assert!(!dir.path().join(SUMMARY_FILE).exists());
}

#[test]
fn same_seed_runs_agree_and_other_seeds_differ() {
    let base = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: u64| {
        let mut cfg = tiny();
        cfg.seed = seed;
        cfg.architectures = vec![Architecture::Transformer];
        let dir = base.path().join(name);
        Pipeline::new(cfg, &dir)
            .unwrap()
            .run(&RunOptions::default())
            .unwrap();
        (
            read(&dir.join("probe/transformer/probe_report.json")),
            read(&dir.join("analysis/transformer/attention_stats.csv")),
        )
    };
    let a = run("a", 5);
    assert_eq!(a, run("b", 5));
    assert_ne!(a.0, run("c", 6).0);
}

#[test]
fn rejects_unknown_architecture_selection_and_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny();
    cfg.architectures = vec![Architecture::Transformer];
    let opts = RunOptions {
        architectures: vec![Architecture::Rnns2s],
        ..RunOptions::default()
    };
    assert!(Pipeline::new(cfg, dir.path()).unwrap().run(&opts).is_err());
    let mut bad = tiny();
    bad.probe.seeds = 0;
    assert!(Pipeline::new(bad, dir.path()).is_err());
}
