use super::*;

fn bec_cfg(n: usize, k: usize, eps: Vec<f64>, decoder: DecoderConfig, trials: u64) -> ExperimentConfig {
    ExperimentConfig {
        code: CodeConfig::construct(n, k, "0x43"),
        channel: ChannelConfig::Bec { points: eps },
        decoder,
        trials: TrialsConfig {
            max: trials,
            target_errors: None,
        },
        master_seed: 11,
        workers: 1,
    }
}

fn ml() -> DecoderConfig {
    Variant::Sequential.into()
}

#[test]
fn clean_channel_has_no_errors() {
    let cfg = bec_cfg(5, 22, vec![0.0], ml(), 50);
    let res = run_experiment(&cfg).unwrap();
    assert_eq!(res.points[0].errors, 0);
    assert_eq!(res.points[0].fer, 0.0);
    assert_eq!(res.points[0].avg_nr_cond, 0.0);
}

#[test]
fn worker_count_does_not_change_results() {
    let mut cfg = bec_cfg(6, 38, vec![0.35, 0.45], ml(), 600);
    cfg.trials.target_errors = Some(40);
    let a = run_experiment(&cfg).unwrap();
    cfg.workers = 8;
    let b = run_experiment(&cfg).unwrap();
    assert!(a.same_statistics(&b));
    assert!(a.points[1].errors >= 40 && a.points[1].trials < 600);

    let awgn = ExperimentConfig {
        channel: ChannelConfig::Awgn { points: vec![2.0] },
        decoder: DecoderConfig::CbplOsd {
            list: 2,
            bp: BpConfig::default(),
            osd: OsdName::Lcosd1,
            posd_fraction: 0.25,
        },
        workers: 1,
        ..bec_cfg(5, 22, vec![], ml(), 60)
    };
    let a = run_experiment(&awgn).unwrap();
    let b = run_experiment(&ExperimentConfig { workers: 3, ..awgn }).unwrap();
    assert!(a.same_statistics(&b));
}

#[test]
fn ml_agrees_with_brute_force_trial_by_trial() {
    let a = bec_cfg(6, 38, vec![0.4, 0.5], ml(), 300);
    let b = ExperimentConfig {
        decoder: DecoderConfig::BruteForceBec,
        ..a.clone()
    };
    let rep = paired_compare(&a, &b).unwrap();
    for p in &rep.points {
        assert_eq!((p.only_a, p.only_b), (0, 0));
        assert_eq!(p.p_value, 1.0);
    }
    assert!(rep.points[1].errors_a > 0);
}

#[test]
fn peeling_success_implies_ml_success() {
    let code = prepare_code(&CodeConfig::construct(6, 38, "0x43")).unwrap();
    let ch = ChannelConfig::Bec { points: vec![0.4] };
    let decs = [DecoderConfig::Peel, ml()];
    let out = run_trials(&code, &ch, 0, &decs, 3, 0..300, 1);
    let mut strictly_better = 0;
    for o in &out {
        assert!(o[0].frame_error || !o[1].frame_error);
        strictly_better += (o[0].frame_error && !o[1].frame_error) as usize;
    }
    assert!(strictly_better > 0);
}

#[test]
fn mismatched_pairs_are_rejected() {
    let a = bec_cfg(5, 22, vec![0.3], ml(), 10);
    let mut b = a.clone();
    b.master_seed += 1;
    assert!(matches!(paired_compare(&a, &b), Err(SimError::ConfigMismatch("master_seed"))));
    let mut b = a.clone();
    b.channel = ChannelConfig::Bec { points: vec![0.4] };
    assert!(matches!(paired_compare(&a, &b), Err(SimError::ConfigMismatch("channel"))));
}

#[test]
fn config_validation() {
    let good = bec_cfg(5, 22, vec![0.3], ml(), 10);
    assert!(good.validate().is_ok());
    let bad = [
        bec_cfg(5, 22, vec![1.5], ml(), 10),
        bec_cfg(5, 22, vec![0.3], ml(), 0),
        bec_cfg(5, 22, vec![0.3], DecoderConfig::Cbpl { list: 1, bp: BpConfig::default() }, 10),
        ExperimentConfig {
            channel: ChannelConfig::Awgn { points: vec![1.0] },
            decoder: DecoderConfig::Cbpl { list: 121, bp: BpConfig::default() },
            ..good.clone()
        },
        ExperimentConfig { workers: 0, ..good.clone() },
    ];
    for cfg in &bad {
        assert!(matches!(cfg.validate(), Err(SimError::InvalidConfig(_))), "{cfg:?}");
    }
    assert!(ExperimentConfig::from_toml("[code]\nn = 5\n").is_err());
    let text = good.to_toml();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), good);
}

#[test]
fn toml_example_parses() {
    let cfg = ExperimentConfig::from_toml(
        r#"
master_seed = 7
[code]
n = 6
k = 38
[channel]
kind = "awgn"
points = [1.0, 2.0]
[decoder]
kind = "cbpl_osd"
list = 6
osd = "posd2"
[decoder.bp]
i_max = 50
[trials]
max = 100
"#,
    )
    .unwrap();
    assert_eq!(cfg.decoder.osd_mode(), Some(crate::osd::OsdMode::Posd2(0.25)));
    assert_eq!(cfg.workers, 1);
    assert!(ExperimentConfig::from_toml("master_seed = 1\nbogus = 2\n[code]\nn=5\nk=22\n[channel]\nkind=\"bec\"\npoints=[0.1]\n[decoder]\nkind=\"peel\"\n").is_err());
}

#[test]
fn missing_and_mismatched_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut code = CodeConfig::construct(5, 22, "0x43");
    code.artifact = Some(dir.path().join("absent.ppcm"));
    assert!(matches!(prepare_code(&code), Err(SimError::MissingArtifact(_))));

    let other = prepare_code(&CodeConfig::construct(5, 24, "0x43")).unwrap();
    let path = dir.path().join("other.ppcm");
    other.pcm.save(&path).unwrap();
    code.artifact = Some(path.clone());
    assert!(matches!(prepare_code(&code), Err(SimError::InvalidConfig(_))));

    let own = prepare_code(&CodeConfig::construct(5, 22, "0x43")).unwrap();
    own.pcm.save(&path).unwrap();
    let loaded = prepare_code(&code).unwrap();
    assert_eq!(loaded.pcm, own.pcm);

    std::fs::write(&path, b"PPCM garbage").unwrap();
    assert!(matches!(prepare_code(&code), Err(SimError::Artifact(_))));
}

#[test]
fn outputs_round_trip() {
    let res = run_experiment(&bec_cfg(5, 22, vec![0.2, 0.3], ml(), 40)).unwrap();
    let json = emit(&res, Format::Json);
    let back: ExperimentResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, res);
    let csv = emit(&res, Format::Csv);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines[1].split(',').count(), CSV_HEADER.split(',').count());

    let empty = run_experiment(&bec_cfg(5, 22, vec![], ml(), 40)).unwrap();
    assert_eq!(emit(&empty, Format::Csv), format!("{CSV_HEADER}\n"));
}

#[test]
fn bit_errors_count_message_bits() {
    let res = run_experiment(&bec_cfg(5, 22, vec![0.6], DecoderConfig::Peel, 100)).unwrap();
    let p = &res.points[0];
    assert!(p.errors > 0);
    assert!(p.bit_errors <= p.errors * res.message_len as u64);
    assert!((p.ber - p.bit_errors as f64 / (100.0 * 16.0)).abs() < 1e-12);
}
