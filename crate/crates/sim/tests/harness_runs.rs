use rand::Rng;
use uabs_core::config::SafetyMode;
use uabs_core::learn::QNetwork;
use uabs_core::rng::{stream_rng, Stream};
use uabs_core::SimConfig;
use uabs_sim::harness::{self, TraceSet, TrainOptions};

fn small(mode: SafetyMode) -> SimConfig {
    let mut c = SimConfig::desk_scale();
    c.safety_mode = mode;
    c.learner.hidden_layers = vec![16];
    c.learner.batch_size = 16;
    c
}

#[test]
fn thousand_episodes_with_period_twenty_give_fifty_evaluations() {
    let mut c = small(SafetyMode::RankMask);
    c.train_episodes = 1000;
    c.eval_period = 20;
    c.episode_len = 2;
    c.window_len = 1;
    c.sat_threshold = 1;
    c.num_gues = 2;
    let r = harness::train(&c, &TraceSet::default(), &TrainOptions::default()).unwrap();
    assert_eq!(r.train.len(), 1000);
    assert_eq!(r.evals.len(), 50);
    assert_eq!(r.evals.last().unwrap().episode, 1000);
}

#[test]
fn masking_evaluation_never_collides() {
    for mode in [SafetyMode::FlatMask, SafetyMode::RankMask] {
        for seed in 0..5 {
            let c = SimConfig { rng_seed: seed, ..small(mode) };
            let traces = harness::generate_traces(&c, Stream::EvalTraces, 0).unwrap();
            let net = QNetwork::new(c.feature_dim(), &c.learner.hidden_layers, &mut stream_rng(seed, Stream::NetworkInit, 0));
            let m = harness::evaluate(&c, &net, &traces).unwrap();
            assert_eq!(m.collisions, 0, "{mode:?} seed {seed}");
        }
    }
}

#[test]
fn penalty_mode_desk_scale_random_census_collides() {
    let c = SimConfig { safety_mode: SafetyMode::Penalty, rng_seed: 77, ..SimConfig::desk_scale() };
    let mut with_collision = 0;
    for e in 0..100 {
        let traces = harness::generate_traces(&c, Stream::TrainTraces, e).unwrap();
        let mut rng = stream_rng(c.rng_seed, Stream::Exploration, e);
        let m = harness::random_rollout(&c, &traces, stream_rng(c.rng_seed, Stream::Rollout, e), &mut rng).unwrap();
        with_collision += usize::from(m.had_collision());
    }
    println!("desk-scale penalty census: {with_collision}/100 episodes with a collision");
    assert!(with_collision >= 1);
}

#[test]
fn pg_is_monotone_on_evaluation_logs() {
    let c = SimConfig { num_agents: 2, ..small(SafetyMode::FlatMask) };
    let mut rng = stream_rng(3, Stream::Rollout, 0);
    for i in 0..5 {
        let traces = harness::generate_traces(&c, Stream::EvalTraces, i).unwrap();
        let m = harness::random_rollout(&c, &traces, stream_rng(3, Stream::EvalEpisode, i), &mut rng).unwrap();
        assert_eq!(m.pg[0], 1.0);
        assert!(m.pg.windows(2).all(|w| w[1] <= w[0]), "{:?}", m.pg);
        let _: f64 = rng.random();
    }
}

#[test]
fn fixed_seed_training_is_reproducible() {
    let mut c = small(SafetyMode::RankMask);
    c.train_episodes = 6;
    c.eval_period = 3;
    let a = harness::train(&c, &TraceSet::default(), &TrainOptions::default()).unwrap();
    let b = harness::train(&c, &TraceSet::default(), &TrainOptions::default()).unwrap();
    let strip = |r: &harness::TrainReport| {
        r.train.iter().chain(&r.evals).map(|m| (m.reward, m.mean_loss, m.pg.clone())).collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(a.final_network, b.final_network);
}

#[test]
fn compare_tabulates_every_mode_and_seed() {
    let mut c = small(SafetyMode::Penalty);
    c.train_episodes = 2;
    c.eval_period = 1;
    c.episode_len = 10;
    let dir = tempfile::tempdir().unwrap();
    let opts = TrainOptions { out_dir: Some(dir.path().to_path_buf()), verbose: false };
    let r = harness::compare(&c, &SafetyMode::ALL, &[1, 2], &TraceSet::default(), &opts).unwrap();
    assert_eq!(r.rows.len(), 6);
    for mode in [SafetyMode::FlatMask, SafetyMode::RankMask] {
        assert!(r.rows_for(mode).all(|row| row.train_collision_pct == 0.0 && row.eval_collision_pct == 0.0));
    }
    let csv = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(dir.path().join("rank_mask_seed2").join("metrics.csv").exists());
    assert!(r.summary().contains("rank_mask"));
}
