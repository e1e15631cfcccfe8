mod support;

use std::fs;

use proptest::prelude::*;
use provtrack::logging::read_series;
use provtrack::run::NEVER_SPILL;
use provtrack::{Context, Error};
use support::{expected_series, replay_series, tempdir, Fixture, ScriptedSample};

fn samples() -> impl Strategy<Value = Vec<ScriptedSample>> {
    proptest::collection::vec(
        (0u64..10_000, 0i64..5_000, -1e9f64..1e9),
        0..1000,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn spill_threshold_does_not_change_the_file(samples in samples()) {
        let tmp = tempdir();
        let expected = expected_series(&samples);
        for (i, threshold) in [1, 7, 100, NEVER_SPILL].into_iter().enumerate() {
            let dir = tmp.path().join(i.to_string());
            let bytes = replay_series(&dir, threshold, &samples);
            prop_assert!(bytes == expected, "threshold {}", threshold);
        }
    }
}

#[test]
fn buffer_holds_the_remainder_until_end() {
    let tmp = tempdir();
    let fx = Fixture::new(tmp.path());
    let run = fx.start_with(fx.config().save_after_n_logs(100), fx.hooks());
    for step in 0..250 {
        run.log_metric("loss", step as f64, Context::Training, step).unwrap();
    }
    let path = run.metrics_dir().join("training_loss.tsv");
    assert_eq!(run.series_counts("loss", &Context::Training), Some((250, 200)));
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 200);

    run.end_run(false, false).unwrap();
    let back = read_series(&path).unwrap();
    assert_eq!(back.len(), 250);
    assert!(back.iter().enumerate().all(|(i, s)| s.step == i as u64 && s.value == i as f64));
}

#[test]
fn order_is_log_order_not_step_order() {
    let tmp = tempdir();
    let steps = [5u64, 3, 3, 9, 0, 1];
    let samples: Vec<ScriptedSample> = steps.iter().map(|&s| (s, 1, s as f64 / 2.0)).collect();
    let bytes = replay_series(tmp.path(), 2, &samples);
    assert_eq!(bytes, expected_series(&samples));
}

#[test]
fn contexts_are_independent_series() {
    let tmp = tempdir();
    let fx = Fixture::new(tmp.path());
    let run = fx.start();
    run.log_metric("loss", 1.0, Context::Training, 0).unwrap();
    run.log_metric("loss", 2.0, Context::Validation, 0).unwrap();
    run.log_metric("loss", 3.0, Context::Validation, 1).unwrap();
    run.log_metric("loss", 4.0, Context::custom("finetune").unwrap(), 0).unwrap();
    run.end_run(false, false).unwrap();
    let dir = run.metrics_dir();
    let counts: Vec<usize> = ["training_loss.tsv", "validation_loss.tsv", "finetune_loss.tsv"]
        .iter()
        .map(|f| read_series(&dir.join(f)).unwrap().len())
        .collect();
    assert_eq!(counts, [1, 2, 1]);
}

#[test]
fn non_finite_values_and_empty_keys_are_rejected() {
    let tmp = tempdir();
    let fx = Fixture::new(tmp.path());
    let run = fx.start();
    for v in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
        assert!(matches!(run.log_metric("m", v, Context::Training, 0), Err(Error::InvalidArgument(_))));
    }
    assert!(matches!(run.log_metric("", 1.0, Context::Training, 0), Err(Error::InvalidArgument(_))));
    assert_eq!(run.series_counts("m", &Context::Training), None);
}

#[test]
fn execution_time_is_seconds_since_start() {
    let tmp = tempdir();
    let fx = Fixture::new(tmp.path());
    let run = fx.start();
    run.log_current_execution_time("epoch_time", Context::Training, 0).unwrap();
    fx.clock.advance(1500);
    run.log_current_execution_time("epoch_time", Context::Training, 1).unwrap();
    run.end_run(false, false).unwrap();
    let back = read_series(&run.metrics_dir().join("training_epoch_time.tsv")).unwrap();
    let values: Vec<f64> = back.iter().map(|s| s.value).collect();
    assert_eq!(values, [0.0, 1.5]);
    assert_eq!(back[1].timestamp, support::T0 + 1500);
}

#[test]
fn duplicate_params_are_rejected() {
    let tmp = tempdir();
    let fx = Fixture::new(tmp.path());
    let run = fx.start();
    run.log_param("lr", 0.01).unwrap();
    assert!(matches!(run.log_param("lr", 0.1), Err(Error::DuplicateParam(k)) if k == "lr"));
    assert!(matches!(run.log_param("", 1i64), Err(Error::InvalidArgument(_))));
}
