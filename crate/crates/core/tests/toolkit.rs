mod support;

use std::fs;

use provtrack::prov::{AttributeValue, QualifiedName, RecordKind, RelationKind};
use provtrack::toolkit::{diff_runs, EXIT_FINDINGS, EXIT_IO, EXIT_OK, EXIT_TOOL};
use provtrack::{prov_json, Context};
use support::{
    cli, count_tags, distributed_run, fake_layout_tool, fixture_run, is_self_contained, path_str,
    random_params, tempdir, Fixture,
};

fn params(pairs: &[(&str, AttributeValue)]) -> Vec<(String, AttributeValue)> {
    pairs.iter().map(|(k, v)| ((*k).to_owned(), v.clone())).collect()
}

#[test]
fn merge_links_every_rank() {
    let tmp = tempdir();
    for ranks in 1..=8u32 {
        let dir = tmp.path().join(format!("n{ranks}"));
        let inputs = distributed_run(&dir, ranks);
        let out = dir.join("merged.json");
        let mut args = vec!["merge"];
        args.extend(inputs.iter().map(|p| path_str(p)));
        args.extend(["-o", path_str(&out)]);
        let (code, stdout, stderr) = cli(&args);
        assert_eq!(code, EXIT_OK, "{stderr}");
        assert!(stdout.contains(&format!("({ranks} member(s))")));

        let doc = prov_json::parse(&fs::read(&out).unwrap()).unwrap();
        assert!(prov_json::validate(&doc).is_valid());
        let members: Vec<_> = doc.relations_of(RelationKind::HadMember).collect();
        assert_eq!(members.len(), ranks as usize);
        let collection = QualifiedName::new("user", "test_run0_collection").unwrap();
        assert!(members.iter().all(|r| r.subject == collection));
        let parts: usize = inputs
            .iter()
            .map(|p| prov_json::parse(&fs::read(p).unwrap()).unwrap().records().len())
            .sum();
        assert_eq!(doc.records().len(), parts + 1);
        assert_eq!(doc.records_of(RecordKind::Activity).count(), ranks as usize);
    }
}

#[test]
fn merging_a_document_with_itself_fails() {
    let tmp = tempdir();
    let inputs = distributed_run(tmp.path(), 1);
    let p = path_str(&inputs[0]);
    let out = tmp.path().join("m.json");
    let (code, _, stderr) = cli(&["merge", p, p, "-o", path_str(&out)]);
    assert_eq!(code, EXIT_FINDINGS, "{stderr}");
    assert!(!out.exists());
}

#[test]
fn custom_collection_id() {
    let tmp = tempdir();
    let inputs = distributed_run(tmp.path(), 2);
    let out = tmp.path().join("m.json");
    let (code, _, _) = cli(&[
        "merge", path_str(&inputs[0]), path_str(&inputs[1]), "-o", path_str(&out), "--collection-id", "all_ranks",
    ]);
    assert_eq!(code, EXIT_OK);
    let doc = prov_json::parse(&fs::read(&out).unwrap()).unwrap();
    assert!(doc.contains(RecordKind::Entity, &QualifiedName::new("user", "all_ranks").unwrap()));
}

#[test]
fn diff_of_a_run_with_itself_is_empty() {
    let tmp = tempdir();
    let run = fixture_run(tmp.path(), &random_params(1, 6));
    let p = path_str(&run);
    let (code, stdout, _) = cli(&["diff", p, p]);
    assert_eq!((code, stdout.trim()), (EXIT_OK, "no differences"));
    let (code, _, _) = cli(&["diff", p, p, "--full-series"]);
    assert_eq!(code, EXIT_OK);
}

#[test]
fn diff_reports_a_learning_rate_change() {
    let tmp = tempdir();
    let left = fixture_run(&tmp.path().join("l"), &params(&[("lr", 0.1.into()), ("epochs", 3i64.into())]));
    let right = fixture_run(&tmp.path().join("r"), &params(&[("lr", 0.01.into()), ("epochs", 3i64.into())]));
    let diff = diff_runs(&left, &right, 0, true).unwrap();
    assert_eq!(diff.params.changed.len(), 1);
    let change = &diff.params.changed[0];
    assert_eq!((change.key.as_str(), change.left.as_str(), change.right.as_str()), ("lr", "0.1", "0.01"));
    assert!(diff.params.added.is_empty() && diff.params.removed.is_empty());
    assert!(diff.metrics.is_empty(), "{:?}", diff.metrics);

    let (code, stdout, _) = cli(&["diff", path_str(&left), path_str(&right), "--json"]);
    assert_eq!(code, EXIT_FINDINGS);
    let json: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(json["params"]["changed"][0]["key"], "lr");
}

#[test]
fn diff_is_antisymmetric() {
    let tmp = tempdir();
    let left = fixture_run(&tmp.path().join("l"), &params(&[("a", 1i64.into()), ("b", true.into())]));
    let right = fixture_run(&tmp.path().join("r"), &params(&[("b", false.into()), ("c", "x".into())]));
    let lr = diff_runs(&left, &right, 0, false).unwrap();
    let rl = diff_runs(&right, &left, 0, false).unwrap();
    assert_eq!(lr.params.added, rl.params.removed);
    assert_eq!(lr.params.removed, rl.params.added);
    let flip: Vec<_> = rl.params.changed.iter().map(|c| (c.key.clone(), c.right.clone(), c.left.clone())).collect();
    let direct: Vec<_> = lr.params.changed.iter().map(|c| (c.key.clone(), c.left.clone(), c.right.clone())).collect();
    assert_eq!(direct, flip);
    assert_eq!(lr.artifacts.only_left, rl.artifacts.only_right);
}

#[test]
fn diff_finds_metric_and_artifact_changes() {
    let tmp = tempdir();
    let left = fixture_run(&tmp.path().join("l"), &[]);
    let fx = Fixture::new(&tmp.path().join("r"));
    let run = fx.start();
    for step in 0..20u64 {
        fx.clock.advance(100);
        let v = if step == 12 { 7.0 } else { 1.0 / (step + 1) as f64 };
        run.log_metric("loss", v, Context::Training, step).unwrap();
    }
    run.end_run(false, false).unwrap();

    let diff = diff_runs(&left, run.run_dir(), 0, true).unwrap();
    assert_eq!(diff.artifacts.only_left, ["artifacts/notes.txt"]);
    assert_eq!(diff.metrics.len(), 1);
    let m = &diff.metrics[0];
    assert_eq!(m.first_divergent_sample, Some(12));
    assert_eq!(m.delta_of_last, Some(0.0));
}

#[test]
fn diff_of_missing_directory_is_an_io_failure() {
    let tmp = tempdir();
    let run = fixture_run(tmp.path(), &[]);
    let (code, _, stderr) = cli(&["diff", path_str(&run), path_str(&tmp.path().join("missing"))]);
    assert_eq!(code, EXIT_IO, "{stderr}");
}

#[test]
fn validate_exit_codes() {
    let tmp = tempdir();
    let good = distributed_run(tmp.path(), 1).remove(0);
    assert_eq!(cli(&["validate", path_str(&good)]).0, EXIT_OK);

    let mut json: serde_json::Value = serde_json::from_slice(&fs::read(&good).unwrap()).unwrap();
    json.as_object_mut().unwrap().remove("activity");
    let broken = tmp.path().join("broken.json");
    fs::write(&broken, json.to_string()).unwrap();
    let (code, stdout, _) = cli(&["validate", path_str(&broken)]);
    assert_eq!(code, EXIT_FINDINGS, "{stdout}");

    let garbage = tmp.path().join("garbage.json");
    fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(cli(&["validate", path_str(&garbage)]).0, EXIT_IO);
    assert_eq!(cli(&["validate", path_str(&tmp.path().join("none.json"))]).0, EXIT_IO);
    assert_eq!(cli(&["validate"]).0, EXIT_IO);
    assert_eq!(cli(&["--help"]).0, EXIT_OK);
}

#[test]
fn convert_to_dot_and_svg() {
    let tmp = tempdir();
    let doc = distributed_run(&tmp.path().join("prov"), 1).remove(0);
    let dot = tmp.path().join("g.dot");
    assert_eq!(cli(&["convert", path_str(&doc), "--to", "dot", "-o", path_str(&dot)]).0, EXIT_OK);
    let graph = support::dot::parse_dot(&fs::read_to_string(&dot).unwrap()).unwrap();
    let parsed = prov_json::parse(&fs::read(&doc).unwrap()).unwrap();
    assert_eq!(graph.nodes.len(), parsed.records().len());

    let svg = tmp.path().join("g.svg");
    let (code, _, stderr) =
        cli(&["convert", path_str(&doc), "--to", "svg", "-o", path_str(&svg), "--dot", "/nonexistent/dot"]);
    assert_eq!(code, EXIT_TOOL, "{stderr}");
    assert!(!svg.exists());

    let tool = fake_layout_tool(tmp.path());
    let (code, _, _) = cli(&["convert", path_str(&doc), "--to", "svg", "-o", path_str(&svg), "--dot", path_str(&tool)]);
    assert_eq!(code, EXIT_OK);
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    assert_eq!(cli(&["convert", path_str(&doc), "--to", "png", "-o", "x"]).0, EXIT_IO);
}

#[test]
fn metrics_command() {
    let tmp = tempdir();
    let fx = Fixture::new(&tmp.path().join("prov"));
    let run = fx.start();
    for step in 0..10u64 {
        fx.clock.advance(1000);
        run.log_metric("loss", 1.0 / (step + 1) as f64, Context::Training, step).unwrap();
        run.log_metric("cpu_power_W", 40.0 + step as f64, Context::Training, step).unwrap();
    }
    run.end_run(false, false).unwrap();
    let dir = path_str(run.run_dir());

    let csv = tmp.path().join("loss.csv");
    let (code, _, _) = cli(&["metrics", dir, "--key", "loss", "--context", "training", "--csv", "-o", path_str(&csv)]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 11);

    let svg = tmp.path().join("plot.svg");
    let (code, _, _) = cli(&[
        "metrics", dir, "--key", "loss", "--key", "cpu_power_W", "--context", "training", "--plot", "-o", path_str(&svg),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(&svg).unwrap();
    assert!(is_self_contained(&text));
    assert_eq!(count_tags(&text, "polyline"), 2);

    let (code, _, _) = cli(&["metrics", dir, "--key", "nope", "--csv", "-o", path_str(&csv)]);
    assert_eq!(code, EXIT_FINDINGS);
    let (code, _, _) = cli(&["metrics", dir, "--key", "loss", "--csv", "--plot", "-o", path_str(&csv)]);
    assert_eq!(code, EXIT_IO);
    let (code, _, _) = cli(&["metrics", dir, "--key", "loss", "--key", "cpu_power_W", "--csv", "-o", path_str(&csv)]);
    assert_eq!(code, EXIT_FINDINGS);
}

#[test]
fn cli_output_is_deterministic() {
    let tmp = tempdir();
    let inputs = distributed_run(&tmp.path().join("prov"), 3);
    let mut outputs = Vec::new();
    for i in 0..2 {
        let out = tmp.path().join(format!("m{i}.json"));
        let mut args = vec!["merge"];
        args.extend(inputs.iter().map(|p| path_str(p)));
        args.extend(["-o", path_str(&out)]);
        assert_eq!(cli(&args).0, EXIT_OK);
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
