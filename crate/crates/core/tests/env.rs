use std::collections::HashSet;
use std::f64::consts::PI;

use aesa_core::metrics::summary::{percentile, read_csv, summarize_steps, write_csv, Stats};
use aesa_core::metrics::episode_summary;
use aesa_core::scan_history::p_max;
use aesa_core::{run_episode, BeamAction, Environment, EpisodeConfig, EpisodeTrace, Error, PolicyKind};
use proptest::prelude::*;

fn short(n_steps: u64, seed: u64) -> EpisodeConfig {
    EpisodeConfig {
        n_steps,
        seed,
        ..EpisodeConfig::default()
    }
}

#[test]
fn reset_returns_an_empty_observation() {
    let mut env = Environment::new(short(10, 3)).unwrap();
    let obs = env.reset(Some(4)).unwrap();
    assert_eq!(env.seed(), 4);
    assert_eq!(env.steps_taken(), 0);
    assert_eq!(obs.track_matrix.len(), 15 * 7);
    assert_eq!(obs.raster_shape(), [1, 48, 48]);
    assert!(obs.track_matrix.iter().chain(&obs.scan_raster).all(|&v| v == 0.0));
}

#[test]
fn repeated_beam_is_penalised_by_the_aged_scan() {
    let mut env = Environment::new(short(10, 1)).unwrap();
    let a = BeamAction::new(4, 12);
    let first = env.step(a).unwrap();
    assert_eq!(first.reward.r_sv, 0.0);
    assert_eq!(first.info.t, 0);
    let raster = &first.observation.as_ref().unwrap().scan_raster;
    assert!(raster.iter().any(|&v| v > 0.0));

    let second = env.step(a).unwrap();
    let h = env.history();
    let sigma1 = h.sigma0() * (1.0 + h.gamma());
    let expected = -1.0 / (2.0 * PI * sigma1 * sigma1) / p_max(4, h.sigma0(), h.gamma());
    assert!((second.reward.r_sv - expected).abs() < 1e-12 * expected.abs());
    assert_eq!(second.info.t, 1);
}

#[test]
fn episode_ends_after_n_steps() {
    let mut env = Environment::new(short(3, 1)).unwrap();
    let a = BeamAction::new(0, 0);
    assert!(!env.step(a).unwrap().done);
    assert!(!env.step(a).unwrap().done);
    assert!(env.step(a).unwrap().done);
    assert!(matches!(env.step(a), Err(Error::Contract(_))));
    env.reset(None).unwrap();
    assert!(env.step(a).is_ok());
}

#[test]
fn invalid_action_leaves_state_untouched() {
    let mut env = Environment::new(short(5, 1)).unwrap();
    assert!(matches!(env.step(BeamAction::new(19, 0)), Err(Error::Domain(_))));
    assert_eq!(env.steps_taken(), 0);
    assert!(env.history().is_empty());
}

#[test]
fn reset_with_the_same_seed_replays_the_episode() {
    let mut env = Environment::new(short(40, 9)).unwrap();
    let actions: Vec<BeamAction> = (0..40).map(|k| BeamAction::new(k % 19, (k * 7) % 19)).collect();
    let run = |env: &mut Environment| -> Vec<_> {
        env.reset(Some(9)).unwrap();
        actions.iter().map(|&a| env.step(a).unwrap()).collect()
    };
    let a = run(&mut env);
    let b = run(&mut env);
    assert_eq!(a, b);
}

#[test]
fn static_policy_points_one_way() {
    let trace = run_episode(&short(300, 2), PolicyKind::Static.build(2).as_mut()).unwrap();
    let bearings: HashSet<_> = trace.steps.iter().map(|s| (s.bearing.psi.to_bits(), s.bearing.theta.to_bits())).collect();
    assert_eq!(bearings.len(), 1);
}

#[test]
fn trace_round_trips_through_jsonl() {
    let trace = run_episode(&short(120, 5), PolicyKind::Coverage.build(5).as_mut()).unwrap();
    let bytes = trace.to_jsonl_bytes().unwrap();
    let back = EpisodeTrace::read_jsonl(bytes.as_slice()).unwrap();
    assert_eq!(back, trace);
    assert_eq!(back.to_jsonl_bytes().unwrap(), bytes);
}

#[test]
fn tampered_traces_fail_verification() {
    let trace = run_episode(&short(60, 5), PolicyKind::Random.build(5).as_mut()).unwrap();

    let mut t = trace.clone();
    t.steps[10].reward.r_sv -= 1e-3;
    assert!(matches!(t.verify(), Err(Error::Integrity(_))));

    let mut t = trace.clone();
    t.steps.pop();
    assert!(matches!(t.verify(), Err(Error::Integrity(_))));

    let mut t = trace.clone();
    t.header.config.n_targets += 1;
    assert!(matches!(t.verify(), Err(Error::Integrity(_))));

    let mut t = trace.clone();
    t.footer.switch_events += 1;
    assert!(matches!(t.verify(), Err(Error::Integrity(_))));

    let text = String::from_utf8(trace.to_jsonl_bytes().unwrap()).unwrap();
    let edited = text.replacen("\"t\":3,", "\"t\":4,", 1);
    assert_ne!(edited, text);
    assert!(matches!(EpisodeTrace::read_jsonl(edited.as_bytes()), Err(Error::Integrity(_))));
}

#[test]
fn summaries_of_concatenated_episodes_are_weighted_means() {
    let a = run_episode(&short(50, 1), PolicyKind::Random.build(1).as_mut()).unwrap();
    let b = run_episode(&short(150, 2), PolicyKind::Random.build(2).as_mut()).unwrap();
    let (sa, sb) = (episode_summary(&a).unwrap(), episode_summary(&b).unwrap());
    let all: Vec<_> = a.steps.iter().chain(&b.steps).cloned().collect();
    let joint = summarize_steps("random", 1, &all);
    let weighted = (50.0 * sa.search_reward_mean + 150.0 * sb.search_reward_mean) / 200.0;
    assert!((joint.search_reward_mean - weighted).abs() < 1e-12);
    assert!((joint.episode_return - sa.episode_return - sb.episode_return).abs() < 1e-9);
    assert_eq!(joint.switch_events, sa.switch_events + sb.switch_events);
}

#[test]
fn summary_csv_round_trips() {
    let rows: Vec<_> = (0..3)
        .map(|s| episode_summary(&run_episode(&short(80, s), PolicyKind::Static.build(s).as_mut()).unwrap()).unwrap())
        .collect();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
}

proptest! {
    #[test]
    fn percentile_agrees_with_sorted_order_statistics(
        data in prop::collection::vec(-1e6f64..1e6, 1..200),
        q in 0.0f64..=100.0,
    ) {
        let mut sorted = data.clone();
        sorted.sort_by(f64::total_cmp);
        let v = percentile(&data, q).unwrap();
        let pos = q / 100.0 * (sorted.len() - 1) as f64;
        let (lo, hi) = (sorted[pos.floor() as usize], sorted[pos.ceil() as usize]);
        prop_assert!(v >= lo.min(hi) - 1e-9 && v <= lo.max(hi) + 1e-9);
        prop_assert_eq!(percentile(&data, 0.0).unwrap(), sorted[0]);
        prop_assert_eq!(percentile(&data, 100.0).unwrap(), *sorted.last().unwrap());
        let s = Stats::of(&data).unwrap();
        prop_assert!(s.p5 <= s.p95 && s.std >= 0.0);
        prop_assert!(s.mean >= sorted[0] - 1e-9 && s.mean <= sorted[sorted.len() - 1] + 1e-9);
    }
}
