use std::fs;
use std::io::{BufReader, Write};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use aesa_core::dataset::DatasetReader;
use aesa_core::metrics::summary::read_csv;
use aesa_core::wire::Response;
use aesa_core::EpisodeTrace;

fn aesa() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aesa"))
}

fn run_with_stdin(cmd: &mut Command, input: &str) -> Output {
    let mut child = cmd
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn write_config(dir: &Path, json: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_writes_traces_and_summaries_in_seed_order() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"n_steps": 60}"#);
    let out_for = |threads: &str| {
        let out = dir.path().join(format!("out{threads}"));
        let status = aesa()
            .args(["run", "--policy", "random", "--episodes", "4", "--seed", "5", "--threads", threads])
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", stderr(&status));
        out
    };
    let (one, many) = (out_for("1"), out_for("3"));

    let rows = read_csv(fs::File::open(one.join("summary.csv")).unwrap()).unwrap();
    assert_eq!(rows.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![5, 6, 7, 8]);
    assert!(rows.iter().all(|r| r.policy == "random" && r.n_steps == 60));
    for seed in 5..9 {
        let name = format!("episode_random_{seed:06}.jsonl");
        let bytes = fs::read(one.join(&name)).unwrap();
        assert_eq!(bytes, fs::read(many.join(&name)).unwrap(), "{name} depends on thread count");
        let trace = EpisodeTrace::read_jsonl(bytes.as_slice()).unwrap();
        assert_eq!(trace.header.seed, seed);
    }
    assert_eq!(fs::read(one.join("summary.csv")).unwrap(), fs::read(many.join("summary.csv")).unwrap());
    let json: serde_json::Value = serde_json::from_slice(&fs::read(one.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 4);
}

#[test]
fn gospa_recomputes_the_run_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"n_steps": 40}"#);
    let out = dir.path().join("traces");
    let status = aesa()
        .args(["run", "--policy", "coverage", "--episodes", "2", "--seed", "11"])
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", stderr(&status));

    let recomputed = aesa().args(["gospa", "--traces"]).arg(&out).output().unwrap();
    assert!(recomputed.status.success(), "{}", stderr(&recomputed));
    assert_eq!(recomputed.stdout, fs::read(out.join("summary.csv")).unwrap());

    // a damaged trace is refused
    let path = out.join("episode_coverage_000011.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    fs::write(&path, text.replacen("\"t\":2,", "\"t\":3,", 1)).unwrap();
    let refused = aesa().args(["gospa", "--traces"]).arg(&out).output().unwrap();
    assert!(!refused.status.success());
    assert!(stderr(&refused).contains("episode_coverage_000011.jsonl"), "{}", stderr(&refused));
}

#[test]
fn dataset_writes_the_requested_number_of_records() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"n_steps": 20}"#);
    let file = dir.path().join("bc.bin");
    let status = aesa()
        .args(["dataset", "--samples", "45", "--seed", "3"])
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(&file)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", stderr(&status));
    let reader = DatasetReader::new(BufReader::new(fs::File::open(&file).unwrap())).unwrap();
    assert_eq!(reader.header().n_records, 45);
    assert_eq!(reader.header().teacher, "random");
    assert_eq!(reader.count(), 45);

    let zero = aesa().args(["dataset", "--samples", "0", "--out"]).arg(dir.path().join("z.bin")).output().unwrap();
    assert!(!zero.status.success());
}

#[test]
fn serve_speaks_json_lines() {
    let out = run_with_stdin(
        aesa().args(["serve"]),
        "{\"op\":\"spaces\"}\n{\"op\":\"reset\",\"seed\":2}\n{\"op\":\"step\",\"action\":[9,9]}\n{\"op\":\"close\"}\n",
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let responses: Vec<Response> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(matches!(responses[0], Response::Spaces { ok: true, .. }));
    assert!(matches!(responses[1], Response::Reset { ok: true, .. }));
    assert!(matches!(&responses[2], Response::Step { ok: true, info, .. } if info.t == 0));
    assert!(matches!(responses[3], Response::Closed { ok: true, closed: true }));
}

#[test]
fn external_policy_reads_actions_from_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#"{"n_steps": 3, "seed": 4}"#);
    let out_dir = dir.path().join("ext");
    let replies = "{\"action\":[1,2]}\n{\"action\":[3,4]}\n{\"action\":[5,6]}\n";
    let out = run_with_stdin(
        aesa().args(["run", "--policy", "external"]).arg("--config").arg(&config).arg("--out").arg(&out_dir),
        replies,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let requests: Vec<serde_json::Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(requests.len(), 3);
    assert_eq!(requests[2]["step"], 2);
    assert_eq!(requests[0]["grid_size"], 19);

    let trace = EpisodeTrace::read_jsonl(BufReader::new(
        fs::File::open(out_dir.join("episode_external_000004.jsonl")).unwrap(),
    ))
    .unwrap();
    let actions: Vec<[u32; 2]> = trace.steps.iter().map(|s| s.action.into()).collect();
    assert_eq!(actions, vec![[1, 2], [3, 4], [5, 6]]);

    // too few replies
    let short = run_with_stdin(
        aesa().args(["run", "--policy", "external"]).arg("--config").arg(&config).arg("--out").arg(&out_dir),
        "{\"action\":[1,2]}\n",
    );
    assert!(!short.status.success());
    assert!(stderr(&short).contains("contract"), "{}", stderr(&short));
}

#[test]
fn bad_configs_name_the_offending_field() {
    let dir = tempfile::tempdir().unwrap();
    for (json, field) in [
        (r#"{"sensor": {"p_detect": "high"}}"#, "sensor.p_detect"),
        (r#"{"sensor": {"p_detect": 1.5}}"#, "sensor.p_detect"),
        (r#"{"tracker": {"gate_size": 3}}"#, "tracker"),
        (r#"{"gospa": {"alpha": 1.0}}"#, "gospa.alpha"),
    ] {
        let config = write_config(dir.path(), json);
        let out = aesa()
            .args(["run", "--policy", "static"])
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(dir.path().join("never"))
            .output()
            .unwrap();
        assert!(!out.status.success(), "{json} was accepted");
        assert!(stderr(&out).contains(field), "{json}: {}", stderr(&out));
    }
}

#[test]
fn zero_episodes_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = aesa()
        .args(["run", "--policy", "static", "--episodes", "0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--episodes"));
}
