//! Shared test helpers: a seeded generator of valid PROV documents, an
//! independent DOT grammar checker and run fixtures.
#![allow(dead_code)]

pub mod dot;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use provtrack::clock::ManualClock;
use provtrack::prov::{
    AttributeValue, Datatype, ProvDocument, ProvRecord, QualifiedName, RecordKind, Relation,
    RelationKind, Value,
};
use provtrack::{RunConfig, RunHandle, RunHooks, RunManager};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const T0: i64 = 1_700_000_000_000;

const LOCAL_ALPHABET: &[&str] = &[
    "a", "b", "z", "Q", "0", "7", "_", "-", ".", ":", " ", "/", "%", "#", "é", "λ", "模", "\"", "\\",
];

fn random_text(rng: &mut ChaCha8Rng, max: usize) -> String {
    let n = rng.gen_range(1..=max);
    (0..n).map(|_| *LOCAL_ALPHABET.choose(rng).unwrap()).collect()
}

fn random_double(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..10) {
        0 => f64::INFINITY,
        1 => f64::NEG_INFINITY,
        2 => f64::NAN,
        3 => -0.0,
        4 => f64::MIN_POSITIVE,
        5 => rng.gen_range(-1e300..1e300),
        _ => f64::from_bits(rng.gen::<u64>() & 0x7fef_ffff_ffff_ffff) * if rng.gen() { 1.0 } else { -1.0 },
    }
}

fn random_value(rng: &mut ChaCha8Rng, prefixes: &[String]) -> AttributeValue {
    match rng.gen_range(0..8) {
        0 => AttributeValue::string(random_text(rng, 12)),
        1 => AttributeValue::long(rng.gen()),
        2 => AttributeValue::double(random_double(rng)),
        3 => AttributeValue::boolean(rng.gen()),
        4 => AttributeValue::datetime(rng.gen_range(-62_135_596_800_000..253_402_300_799_999)),
        5 => {
            let p = prefixes.choose(rng).unwrap();
            AttributeValue::qualified_name(&QualifiedName::new(p, &random_text(rng, 6)).unwrap())
        }
        6 => AttributeValue::typed(Value::String(random_text(rng, 8)), Datatype::Other("xsd:anyURI".into())).unwrap(),
        _ => AttributeValue::string(""),
    }
}

fn random_name(rng: &mut ChaCha8Rng, prefixes: &[String]) -> QualifiedName {
    QualifiedName::new(prefixes.choose(rng).unwrap(), &random_text(rng, 10)).unwrap()
}

fn random_attributes(rng: &mut ChaCha8Rng, prefixes: &[String], max: usize) -> Vec<(QualifiedName, AttributeValue)> {
    let mut out: Vec<(QualifiedName, AttributeValue)> = Vec::new();
    for _ in 0..rng.gen_range(0..=max) {
        let key = random_name(rng, prefixes);
        if out.iter().any(|(k, _)| *k == key) {
            continue;
        }
        out.push((key, random_value(rng, prefixes)));
    }
    out
}

/// A document that passes validation, built deterministically from `seed`.
///
/// Covers every record kind and relation kind, all value types including
/// non-finite doubles, escaped local names, activity times and optional
/// relation attributes.
pub fn random_document(seed: u64) -> ProvDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut doc = ProvDocument::new(&format!("urn:seed:{seed}#")).unwrap();
    let mut prefixes = vec!["user".to_string(), "prov".to_string(), "xsd".to_string()];
    for i in 0..rng.gen_range(0..3) {
        let p = format!("ex{i}");
        doc.add_prefix(&p, &format!("http://example.org/{seed}/{i}#")).unwrap();
        prefixes.push(p);
    }
    let id_prefixes: Vec<String> = prefixes.iter().filter(|p| *p != "prov" && *p != "xsd").cloned().collect();

    let mut ids: [Vec<QualifiedName>; 3] = Default::default();
    let n_records = rng.gen_range(0..25);
    for _ in 0..n_records {
        let kind = *RecordKind::ALL.choose(&mut rng).unwrap();
        let id = random_name(&mut rng, &id_prefixes);
        if doc.contains(kind, &id) {
            continue;
        }
        let mut record = ProvRecord::new(kind, id.clone());
        record.attributes = random_attributes(&mut rng, &prefixes, 4);
        if kind == RecordKind::Activity {
            let start = rng.gen_bool(0.7).then(|| T0 + rng.gen_range(-1_000_000_000..1_000_000_000));
            let end = rng.gen_bool(0.7).then(|| start.unwrap_or(T0) + rng.gen_range(0..10_000_000));
            record.start_time = start;
            record.end_time = end;
        }
        if doc.add_record(record).is_ok() {
            ids[kind as usize].push(id);
        }
    }

    for _ in 0..rng.gen_range(0..30) {
        let kind = *RelationKind::ALL.choose(&mut rng).unwrap();
        let (sk, ok) = kind.endpoint_kinds();
        let (Some(subject), Some(object)) = (ids[sk as usize].choose(&mut rng), ids[ok as usize].choose(&mut rng)) else {
            continue;
        };
        let mut rel = Relation::new(kind, random_name(&mut rng, &id_prefixes), subject.clone(), object.clone());
        rel.attributes = random_attributes(&mut rng, &prefixes, 2)
            .into_iter()
            .filter(|(k, _)| k.prefix() != "prov")
            .collect();
        let _ = doc.add_relation(rel);
    }
    doc
}

pub fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temp dir")
}

/// Deterministic run on a private manager, so tests can run in parallel.
pub struct Fixture {
    pub manager: RunManager,
    pub clock: Arc<ManualClock>,
    pub dir: PathBuf,
}

impl Fixture {
    pub fn new(dir: &Path) -> Self {
        Self {
            manager: RunManager::new(),
            clock: ManualClock::shared(T0),
            dir: dir.to_path_buf(),
        }
    }

    pub fn config(&self) -> RunConfig {
        RunConfig::new("www.example.org")
            .experiment_name("test")
            .save_dir(&self.dir)
            .rank(0)
    }

    pub fn hooks(&self) -> RunHooks {
        RunHooks::deterministic(self.clock.clone())
    }

    pub fn start(&self) -> RunHandle {
        self.manager.start(self.config(), self.hooks()).expect("run starts")
    }

    pub fn start_with(&self, config: RunConfig, hooks: RunHooks) -> RunHandle {
        self.manager.start(config, hooks).expect("run starts")
    }
}

/// Every file below `dir`, relative and sorted.
pub fn list_files(dir: &Path) -> Vec<String> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<String>) {
        let Ok(entries) = std::fs::read_dir(dir) else { return };
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                out.push(p.strip_prefix(base).unwrap().to_string_lossy().replace('\\', "/"));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

/// One logged sample: step, clock advance before logging (ms) and value.
pub type ScriptedSample = (u64, i64, f64);

/// Log `samples` as `training/loss` with the given spill threshold, end the
/// run and return the series file's bytes, `None` when no file was written.
pub fn replay_series(dir: &Path, threshold: usize, samples: &[ScriptedSample]) -> Option<Vec<u8>> {
    let fx = Fixture::new(dir);
    let run = fx.start_with(fx.config().save_after_n_logs(threshold), fx.hooks());
    for &(step, dt, value) in samples {
        fx.clock.advance(dt);
        run.log_metric("loss", value, provtrack::Context::Training, step).expect("metric logs");
    }
    run.end_run(false, false).expect("run ends");
    std::fs::read(run.run_dir().join("metrics/training_loss.tsv")).ok()
}

/// The series file `samples` should produce, written out longhand. A series
/// that was never logged has no file.
pub fn expected_series(samples: &[ScriptedSample]) -> Option<Vec<u8>> {
    if samples.is_empty() {
        return None;
    }
    let mut t = T0;
    let mut out = String::new();
    for &(step, dt, value) in samples {
        t += dt;
        out.push_str(&format!("{step}\t{t}\t{value:?}\n"));
    }
    Some(out.into_bytes())
}

/// Local part of an entity's `prov:type`, if it is a qualified name.
pub fn type_of(record: &ProvRecord) -> Option<String> {
    let key = QualifiedName::new("prov", "type").unwrap();
    record.attribute(&key)?.as_qualified_name().map(|q| q.local().to_owned())
}

pub fn entities_typed<'a>(doc: &'a ProvDocument, type_local: &str) -> Vec<&'a ProvRecord> {
    doc.records_of(RecordKind::Entity)
        .filter(|r| type_of(r).as_deref() == Some(type_local))
        .collect()
}

/// Checks that the edges of `kind` form one simple path and returns its
/// nodes from the oldest (no outgoing derivation) to the newest.
pub fn simple_path(doc: &ProvDocument, kind: RelationKind) -> Result<Vec<QualifiedName>, String> {
    use std::collections::{BTreeMap, BTreeSet};
    let edges: Vec<(String, String)> = doc
        .relations_of(kind)
        .map(|r| (r.subject.as_str().to_owned(), r.object.as_str().to_owned()))
        .collect();
    if edges.is_empty() {
        return Err("no edges".into());
    }
    let mut out: BTreeMap<&str, &str> = BTreeMap::new();
    let mut inn: BTreeMap<&str, &str> = BTreeMap::new();
    let mut nodes = BTreeSet::new();
    for (s, o) in &edges {
        if s == o {
            return Err(format!("self loop at {s}"));
        }
        if out.insert(s, o).is_some() {
            return Err(format!("{s} has out-degree > 1"));
        }
        if inn.insert(o, s).is_some() {
            return Err(format!("{o} has in-degree > 1"));
        }
        nodes.insert(s.as_str());
        nodes.insert(o.as_str());
    }
    // Start at the newest node, which nothing derives from.
    let heads: Vec<&str> = nodes.iter().copied().filter(|n| !inn.contains_key(n)).collect();
    if heads.len() != 1 {
        return Err(format!("{} path heads", heads.len()));
    }
    let mut walk = vec![heads[0]];
    while let Some(next) = out.get(walk.last().unwrap()) {
        if walk.contains(next) {
            return Err("cycle".into());
        }
        walk.push(next);
    }
    if walk.len() != nodes.len() {
        return Err("edges are not connected".into());
    }
    walk.reverse();
    Ok(walk.into_iter().map(|n| QualifiedName::parse(n).unwrap()).collect())
}

/// Drive a run through piecewise-constant CPU power, `(duration_ms, watts)`
/// per segment, taking a carbon reading at every segment boundary. Returns
/// the run's cumulative energy and the last logged emissions value.
pub fn energy_through_run(dir: &Path, segments: &[(i64, f64)]) -> (f64, f64) {
    use provtrack::telemetry::{PowerStep, ScriptedTelemetry};
    let fx = Fixture::new(dir);
    let mut t = T0;
    let mut steps = Vec::new();
    for &(duration, watts) in segments {
        steps.push(PowerStep { from_ms: t, cpu_watts: watts, gpu_watts: None, ram_watts: None });
        t += duration;
    }
    let hooks = fx.hooks().telemetry(ScriptedTelemetry::new().power_schedule(steps));
    let run = fx.start_with(fx.config(), hooks);
    run.log_carbon_metrics(provtrack::Context::Training, 0).unwrap();
    for (i, &(duration, _)) in segments.iter().enumerate() {
        fx.clock.advance(duration);
        run.log_carbon_metrics(provtrack::Context::Training, i as u64 + 1).unwrap();
    }
    let energy = run.cumulative_energy_kwh();
    run.end_run(false, false).unwrap();
    let emissions = provtrack::logging::read_series(&run.metrics_dir().join("training_emissions_gCO2eq.tsv"))
        .unwrap()
        .last()
        .unwrap()
        .value;
    (energy, emissions)
}

/// Energy in kWh of a schedule, summed segment by segment.
pub fn schedule_energy_kwh(segments: &[(i64, f64)]) -> f64 {
    segments.iter().map(|&(ms, w)| w * (ms as f64 / 1000.0)).sum::<f64>() / 3_600_000.0
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// A stand-in for graphviz: accepts DOT starting with `digraph` and prints a
/// small SVG that echoes the input size; anything else fails with status 1.
pub fn fake_layout_tool(dir: &Path) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join("fake-dot");
    let script = r#"#!/bin/sh
[ "$1" = "-Tsvg" ] || { echo "expected -Tsvg" >&2; exit 2; }
input=$(cat)
case "$input" in
  digraph*) printf '<svg xmlns="http://www.w3.org/2000/svg"><!-- %s bytes --></svg>\n' "${#input}" ;;
  *) echo "syntax error in line 1" >&2; exit 1 ;;
esac
"#;
    std::fs::write(&path, script).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

/// Count opening `<name` tags that are followed by a space, `>` or `/`.
pub fn count_tags(svg: &str, name: &str) -> usize {
    let open = format!("<{name}");
    svg.match_indices(&open)
        .filter(|(i, _)| matches!(svg.as_bytes().get(i + open.len()), Some(b' ' | b'>' | b'/')))
        .count()
}

/// No external references: nothing fetched or executed when the file is opened.
pub fn is_self_contained(svg: &str) -> bool {
    let lower = svg.to_ascii_lowercase();
    svg.trim_start().starts_with("<svg")
        && svg.trim_end().ends_with("</svg>")
        && !["href=", "<image", "<script", "@import", "url("].iter().any(|s| lower.contains(s))
}

/// Run the command-line front end in-process.
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("provtrack").chain(args.iter().copied());
    let code = provtrack::toolkit::run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

/// An `n`-rank run with every rank collected into one run directory.
/// Returns the per-rank document paths in rank order.
pub fn distributed_run(dir: &Path, ranks: u32) -> Vec<PathBuf> {
    (0..ranks)
        .map(|rank| {
            let fx = Fixture::new(dir);
            let config = fx.config().collect_all_processes(true).rank(rank);
            let run = fx.start_with(config, fx.hooks());
            run.log_param("world_size", i64::from(ranks)).unwrap();
            run.log_metric("loss", 1.0 / f64::from(rank + 1), provtrack::Context::Training, 0).unwrap();
            run.save_model_version("shard", &rank.to_le_bytes(), None, 0, None).unwrap();
            run.end_run(false, false).unwrap().document.unwrap()
        })
        .collect()
}

/// A complete run directory with the given parameters, a fixed loss series
/// and one artifact. Identical inputs give identical directories.
pub fn fixture_run(dir: &Path, params: &[(String, AttributeValue)]) -> PathBuf {
    let fx = Fixture::new(dir);
    let run = fx.start();
    for (k, v) in params {
        run.log_param(k, v.clone()).unwrap();
    }
    for step in 0..20u64 {
        fx.clock.advance(100);
        run.log_metric("loss", 1.0 / (step + 1) as f64, provtrack::Context::Training, step).unwrap();
    }
    let src = dir.join("notes.txt");
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(&src, b"fixture notes").unwrap();
    run.log_artifact("notes", &src, None, None, None).unwrap();
    run.end_run(false, false).unwrap();
    run.run_dir().to_path_buf()
}

/// `count` parameters of mixed types drawn from `seed`.
pub fn random_params(seed: u64, count: usize) -> Vec<(String, AttributeValue)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|i| (format!("param_{i}"), random_param_value(&mut rng))).collect()
}

pub fn random_param_value(rng: &mut ChaCha8Rng) -> AttributeValue {
    match rng.gen_range(0..4) {
        0 => AttributeValue::long(rng.gen_range(-1000..1000)),
        1 => AttributeValue::double(rng.gen_range(-10.0..10.0)),
        2 => AttributeValue::boolean(rng.gen()),
        _ => AttributeValue::string(random_text(rng, 8)),
    }
}

pub const GOLDEN_DEMO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/mnist_demo.json");

/// Run the scripted demo in a fresh directory on a private manager and
/// return the document bytes and the DOT text.
pub fn demo_outputs(dir: &Path) -> (Vec<u8>, String) {
    let demo = provtrack::demo::run_mnist_demo(&RunManager::new(), &provtrack::demo::DemoConfig::new(dir))
        .expect("demo runs");
    let json = std::fs::read(demo.outcome.document.as_ref().unwrap()).unwrap();
    let dot = std::fs::read_to_string(demo.outcome.dot.as_ref().unwrap()).unwrap();
    (json, dot)
}
