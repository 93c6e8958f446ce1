//! Randomized invariants that cut across modules.

use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mpcert_core::certify::{blackwell_certify, build_dual_witness};
use mpcert_core::channel::{self, ChannelSpec};
use mpcert_core::de::{error_probability, threshold, ThresholdQuery, ThresholdResult};
use mpcert_core::msgpass::{run, DecoderConfig, Status};
use mpcert_core::opt::exact_ml;
use mpcert_core::sim::{run_wer_campaign, Campaign, DecoderSpec, GraphSource};
use mpcert_core::tanner::{
    build_regular_graph, enumerate_codewords, example1_graph, girth, parse_alist, write_alist, Codeword, TannerGraph,
};

const FIXTURE: &str = include_str!("fixtures/example1.alist");

fn pool() -> Vec<TannerGraph> {
    let mut out = vec![example1_graph()];
    for seed in 0..6 {
        out.push(build_regular_graph(24, 3, 6, 4, seed).unwrap());
        out.push(build_regular_graph(16, 3, 4, 4, seed).unwrap());
        out.push(build_regular_graph(20, 4, 5, 4, seed).unwrap());
    }
    out
}

#[test]
fn golden_fixture_is_the_example_code() {
    let g = parse_alist(FIXTURE).unwrap();
    assert_eq!(g.to_dense(), example1_graph().to_dense());
    assert_eq!(write_alist(&g), FIXTURE);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn generated_graphs_are_well_formed(
        shape in prop::sample::select(vec![(24usize, 3usize, 6usize), (30, 3, 5), (40, 4, 8), (60, 3, 6)]),
        girth_min in prop::sample::select(vec![4usize, 6]),
        seed in any::<u64>(),
    ) {
        let (n, dv, dc) = shape;
        if let Ok(g) = build_regular_graph(n, dv, dc, girth_min, seed) {
            prop_assert!(g.is_consistent());
            prop_assert_eq!(g.regular_degrees(), Some((dv, dc)));
            prop_assert!(girth(&g).is_none_or(|c| c >= girth_min));
            let again = parse_alist(&write_alist(&g)).unwrap();
            prop_assert_eq!(again.to_dense(), g.to_dense());
            prop_assert_eq!(write_alist(&again), write_alist(&g));
        }
    }

    #[test]
    fn codeword_enumeration_is_complete(seed in any::<u64>(), shape in prop::sample::select(vec![(16usize, 3usize, 4usize), (24, 3, 6), (20, 4, 5)])) {
        let (n, dv, dc) = shape;
        let g = build_regular_graph(n, dv, dc, 4, seed).unwrap();
        let rank = g.parity_matrix().rank();
        let words: Vec<Codeword> = enumerate_codewords(&g, 28).unwrap().collect();
        prop_assert_eq!(words.len(), 1usize << (n - rank));
        let distinct: HashSet<Vec<u8>> = words.iter().map(|w| w.bits().to_vec()).collect();
        prop_assert_eq!(distinct.len(), words.len());
        for w in &words {
            prop_assert!(g.is_codeword(w.bits()));
        }
    }

    #[test]
    fn llr_sign_symmetry(p in 0.001..0.5f64, sigma in 0.1..3.0f64, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let word = Codeword::new((0..40).map(|_| rng.random::<u8>() & 1).collect());
        for spec in [ChannelSpec::bsc(p).unwrap(), ChannelSpec::biawgn(sigma).unwrap()] {
            let obs = channel::sample(&spec, &word, &mut rng);
            let a = channel::llr(&spec, &obs).unwrap();
            let b = channel::llr(&spec, &obs.flipped()).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert_eq!(*x, -*y);
            }
        }
        let obs = channel::sample(&ChannelSpec::bsc(p).unwrap(), &word, &mut rng);
        let l = channel::llr(&ChannelSpec::bsc(p).unwrap(), &obs).unwrap();
        prop_assert_eq!(l.inf_norm(), ((1.0 - p) / p).ln());
    }

    #[test]
    fn error_estimator_is_monotone_under_shifts(
        samples in prop::collection::vec(prop_oneof![4 => -5.0..5.0f64, 1 => Just(0.0)], 1..200),
        shift in 1e-6..3.0f64,
    ) {
        let shifted: Vec<f64> = samples.iter().map(|s| s + shift).collect();
        prop_assert!(error_probability(&shifted) <= error_probability(&samples));
    }
}

#[test]
fn consistent_messages_give_codewords() {
    let graphs = pool();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut consistent = 0;
    for t in 0..10_000 {
        let g = &graphs[t % graphs.len()];
        let beta = rng.random_range(0.0..=1.0);
        let p: f64 = rng.random_range(0.01..0.2);
        let llr: Vec<f64> = (0..g.n())
            .map(|_| if rng.random::<f64>() < p { -1.0 } else { 1.0 } * rng.random_range(0.5..2.0))
            .collect();
        let r = run(g, &llr, &DecoderConfig::new(beta, 150)).unwrap();
        if r.consistency.wms_consistent {
            consistent += 1;
            assert!(g.is_codeword(r.hard.bits()), "trial {t}: consistent messages, hard word not a codeword");
        }
    }
    assert!(consistent > 3_000, "only {consistent} consistent runs");
}

#[test]
fn witness_lower_bounds_every_codeword() {
    let graphs = pool();
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let mut checked = 0;
    for t in 0..600 {
        let g = &graphs[t % graphs.len()];
        let (dv, _) = g.regular_degrees().unwrap();
        let beta = rng.random_range(0.0..0.99) / (dv - 1) as f64;
        let llr: Vec<f64> = (0..g.n()).map(|_| rng.random_range(-1.0..2.0)).collect();
        let cfg = DecoderConfig::new(beta, 5000);
        let r = run(g, &llr, &cfg).unwrap();
        if r.status != Status::Converged {
            continue;
        }
        let w = build_dual_witness(g, &llr, &r.messages.v2c, beta, cfg.fp_tol_for(&llr)).unwrap();
        let slack = 1e-9 * (1.0 + llr.iter().map(|v| v.abs()).sum::<f64>());
        for x in enumerate_codewords(g, 28).unwrap() {
            assert!(x.cost(&llr) >= w.objective - slack);
        }
        checked += 1;
    }
    assert!(checked > 300);
}

#[test]
fn delta_run_reproduces_the_critical_decisions() {
    let mut instances = 0;
    for seed in 100..130u64 {
        let g = build_regular_graph(24, 3, 6, 4, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..4 {
            let llr: Vec<f64> = (0..24)
                .map(|_| if rng.random::<f64>() < 0.04 { -1.0 } else { 1.0 } * rng.random_range(0.8..1.2))
                .collect();
            let cfg = DecoderConfig::new(0.5, 2000);
            if !matches!(run(&g, &llr, &cfg).unwrap().status, Status::DivergentConsistent { .. }) {
                continue;
            }
            instances += 1;
            let o = blackwell_certify(&g, &llr, &cfg).unwrap();
            if o.certificate.is_certified() {
                assert_eq!(o.hard_delta, o.hard_at_l0);
                let ml = exact_ml(&g, &llr).unwrap();
                assert!((o.hard_delta.unwrap().cost(&llr) - ml.objective).abs() < 1e-9);
            }
        }
    }
    assert!(instances >= 20);
}

#[test]
fn campaign_certificates_never_contradict_ml() {
    let dir = tempfile::tempdir().unwrap();
    let c = Campaign {
        graph: GraphSource::Example1,
        channel: ChannelSpec::bsc(0.05).unwrap(),
        grid: vec![0.03, 0.08, 0.15],
        decoders: vec![
            DecoderSpec::Wms { beta: 0.3, iters: 2000 },
            DecoderSpec::Wms { beta: 0.5, iters: 2000 },
            DecoderSpec::Wms { beta: 0.8, iters: 200 },
        ],
        trials: 300,
        seed: 3,
        output: dir.path().to_path_buf(),
        checkpoint: 128,
        certify: true,
        blackwell: true,
        ml_oracle: true,
        perturbation: Some(1e-9),
    };
    let r = run_wer_campaign(&c).unwrap();
    let certified = r.records.iter().filter(|t| t.certified).count();
    assert!(certified > 100);
    assert!(r.records.iter().all(|t| !(t.certified && t.ml_agrees == Some(false))));
    assert!(r.summaries.iter().all(|s| s.certified_not_ml == 0));
}

#[test]
fn thresholds_are_stable_in_population_size() {
    let base = ThresholdQuery {
        bracket: (0.07, 0.095),
        tolerance: 2e-3,
        max_iters: 300,
        ..ThresholdQuery::new(3, 6, 0.8, ChannelSpec::bsc(0.05).unwrap())
    };
    let at = |population| match threshold(&ThresholdQuery { population, ..base.clone() }).unwrap() {
        ThresholdResult::Threshold { value, .. } => value,
        other => panic!("{other:?}"),
    };
    let (small, large) = (at(100_000), at(400_000));
    assert!((small - large).abs() <= base.tolerance, "{small} vs {large}");
    assert_eq!(at(100_000), small);
}
