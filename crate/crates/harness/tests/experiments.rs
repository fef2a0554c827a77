use sjdpv_core::models::greedy_sequential;
use sjdpv_core::phrase::{cooccurrence_stats, write_corpus};
use sjdpv_core::rng::seeded;
use sjdpv_core::{DecodeMode, TokenId};
use sjdpv_harness::bench::{run_mode, Workload};
use sjdpv_harness::{
    planted_phrase_corpus, run_benchmark, run_merge_sweep, run_tau_sweep, ExperimentConfig,
    HarnessError, PlantSpec,
};

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        seed: 5,
        decodes: 40,
        tokens: 96,
        ..ExperimentConfig::default()
    }
}

fn spec(phrase_count: usize, phrase_len: usize, rate: f64) -> PlantSpec {
    PlantSpec {
        vocab: 32,
        phrase_count,
        phrase_len,
        planting_rate: rate,
        concentration: 1.0,
    }
}

#[test]
fn fully_planted_phrase_always_continues() {
    let (corpus, planted) =
        planted_phrase_corpus(&spec(1, 3, 1.0), 50, 100, &mut seeded(1)).unwrap();
    let p = &planted.phrases[0];
    let (a, b, c) = (p[0], p[1], p[2]);
    let mut seen = 0;
    for s in &corpus {
        for i in 0..s.len().saturating_sub(2) {
            if s[i] == a {
                seen += 1;
                assert_eq!((s[i + 1], s[i + 2]), (b, c));
            }
        }
    }
    assert!(seen > 0);
}

#[test]
fn top_pair_is_planted() {
    let (corpus, planted) =
        planted_phrase_corpus(&spec(4, 5, 1.0), 40, 200, &mut seeded(2)).unwrap();
    let top = cooccurrence_stats(&corpus, 1).unwrap()[0].0;
    let planted_pairs: Vec<(TokenId, TokenId)> = planted
        .phrases
        .iter()
        .flat_map(|p| p.windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>())
        .collect();
    assert!(
        planted_pairs.contains(&top),
        "{top:?} not in {planted_pairs:?}"
    );
}

#[test]
fn planted_corpus_is_seed_deterministic() {
    let bytes = |seed| {
        let (corpus, _) =
            planted_phrase_corpus(&spec(3, 4, 0.9), 10, 50, &mut seeded(seed)).unwrap();
        let mut buf = Vec::new();
        write_corpus(&mut buf, &corpus).unwrap();
        buf
    };
    assert_eq!(bytes(3), bytes(3));
    assert_ne!(bytes(3), bytes(4));
}

#[test]
fn planted_capacity_and_ranges() {
    let too_many = PlantSpec {
        vocab: 4,
        phrase_count: 3,
        phrase_len: 6,
        planting_rate: 1.0,
        concentration: 1.0,
    };
    assert!(matches!(
        planted_phrase_corpus(&too_many, 1, 10, &mut seeded(0)),
        Err(HarnessError::CapacityExceeded { .. })
    ));
    assert!(planted_phrase_corpus(&spec(1, 1, 1.0), 1, 10, &mut seeded(0)).is_err());
    assert!(planted_phrase_corpus(&spec(1, 3, 0.0), 1, 10, &mut seeded(0)).is_err());
}

#[test]
fn one_decode_gives_one_row_per_mode() {
    let cfg = ExperimentConfig {
        decodes: 1,
        modes: DecodeMode::ALL.to_vec(),
        ..small_config()
    };
    let r = run_benchmark(&cfg).unwrap();
    assert_eq!(r.report_version, 1);
    assert_eq!(r.runs.len(), 3);
    for m in DecodeMode::ALL {
        assert_eq!(
            r.runs.iter().filter(|row| row.mode == m.as_str()).count(),
            1
        );
        assert_eq!(r.mode(m).unwrap().decodes, 1);
    }
    assert_eq!(r.modes[0].nfe_acceleration, 1.0);
}

#[test]
fn benchmark_is_reproducible_and_paired() {
    let cfg = small_config();
    let a = run_benchmark(&cfg).unwrap();
    let b = run_benchmark(&cfg).unwrap();
    assert_eq!(a.runs, b.runs);
    assert_eq!(a.config, b.config);
    // both modes see the same per-decode seeds
    let seeds = |m: &str| {
        a.runs
            .iter()
            .filter(|r| r.mode == m)
            .map(|r| r.seed)
            .collect::<Vec<_>>()
    };
    assert_eq!(seeds("sjd"), seeds("sjd_pv"));
    let sjd = a.mode(DecodeMode::Sjd).unwrap();
    let pv = a.mode(DecodeMode::SjdPv).unwrap();
    assert!(
        pv.mean_nfe < sjd.mean_nfe,
        "{} vs {}",
        pv.mean_nfe,
        sjd.mean_nfe
    );
    assert!((pv.nfe_acceleration - sjd.mean_nfe / pv.mean_nfe).abs() < 1e-12);
}

#[test]
fn greedy_jacobi_benchmark_matches_sequential() {
    let cfg = ExperimentConfig {
        modes: vec![DecodeMode::Jacobi],
        greedy: true,
        decodes: 3,
        ..small_config()
    };
    let w = Workload::prepare(&cfg).unwrap();
    let lib = w.library(0, 8).unwrap();
    let (runs, _) = run_mode(&w, &lib, &cfg, DecodeMode::Jacobi).unwrap();
    let expected = greedy_sequential(&w.model, cfg.tokens);
    for (seq, _) in runs {
        assert_eq!(seq, expected);
    }
}

#[test]
fn tau_sweep_contracts() {
    let cfg = small_config();
    assert_eq!(run_tau_sweep(&cfg, &[0.01]).unwrap().len(), 1);
    assert!(run_tau_sweep(&cfg, &[]).is_err());
    assert!(run_tau_sweep(&cfg, &[0.02, 0.01]).is_err());
    let rows = run_tau_sweep(&cfg, &[1e-9, 0.01]).unwrap();
    assert!(rows[0].phrase_accept_rate.is_finite());
    assert!(rows[0].mean_nfe >= rows[1].mean_nfe);
}

#[test]
fn merge_sweep_contracts() {
    let cfg = small_config();
    let rows = run_merge_sweep(&cfg, &[0, 4, 64, 100_000]).unwrap();
    for r in &rows {
        assert!(r.library_size <= r.merges);
    }
    assert_eq!(rows[0].phrase_hit_rate, 0.0);
    // an empty library decodes exactly like token-wise verification
    let sjd = run_benchmark(&ExperimentConfig {
        modes: vec![DecodeMode::Sjd],
        ..cfg.clone()
    })
    .unwrap();
    assert_eq!(rows[0].mean_nfe, sjd.modes[0].mean_nfe);
    assert!(run_merge_sweep(&cfg, &[]).is_err());
}

#[test]
fn invalid_config_is_rejected() {
    let cfg = ExperimentConfig {
        tau: 0.0,
        ..small_config()
    };
    assert!(matches!(
        run_benchmark(&cfg),
        Err(HarnessError::ConfigInvalid(_))
    ));
}
