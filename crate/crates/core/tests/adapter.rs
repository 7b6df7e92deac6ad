mod common;

use std::fs;
use std::process::Command;
use std::time::Duration;

use amrfact_core::adapter::{call_parallel, Adapter, AdapterError, AdapterReply, AdapterRequest, Task};

use common::data_path;

const T: Duration = Duration::from_secs(10);

fn echo() -> String {
    format!("python3 {}", data_path("fixtures/echo_adapter.py").display())
}

fn requests(n: usize) -> Vec<AdapterRequest> {
    (0..n)
        .map(|i| match i % 3 {
            0 => AdapterRequest::score(format!("r{i}"), Task::Entailment, "the cat sat", "a cat sat"),
            1 => AdapterRequest::score(format!("r{i}"), Task::Relevance, "the cat sat", "a cat sat"),
            _ => AdapterRequest::bridge(format!("r{i}"), Task::Amr2text, &format!("(c / cat-{i})")),
        })
        .collect()
}

fn handshake_then(body: &str) -> String {
    format!(r#"echo '{{"protocol":"amrfact-scorer/1"}}'; {body}"#)
}

#[test]
fn echo_stub_answers_every_task() {
    let mut adapter = Adapter::spawn(&echo(), T).unwrap();
    let replies = adapter.call(&requests(6)).unwrap();
    assert_eq!(
        replies,
        vec![
            AdapterReply::Score(0.5),
            AdapterReply::Score(-1.0),
            AdapterReply::Output("(c / cat-2)".into()),
            AdapterReply::Score(0.5),
            AdapterReply::Score(-1.0),
            AdapterReply::Output("(c / cat-5)".into()),
        ]
    );
    // The same process serves later batches.
    let again = adapter.call(&requests(2)).unwrap();
    assert_eq!(again, vec![AdapterReply::Score(0.5), AdapterReply::Score(-1.0)]);
}

#[test]
fn parallel_streams_keep_request_order() {
    let reqs = requests(25);
    let one = call_parallel(&echo(), T, &reqs, 1).unwrap();
    let four = call_parallel(&echo(), T, &reqs, 4).unwrap();
    assert_eq!(one, four);
    assert_eq!(one.len(), 25);
}

#[test]
fn out_of_order_replies_are_matched_by_id() {
    let script = handshake_then(
        r#"read a; read b; echo '{"id":"r1","score":-2.0}'; echo '{"id":"r0","score":0.25}'"#,
    );
    let mut adapter = Adapter::spawn(&script, T).unwrap();
    let replies = adapter.call(&requests(2)).unwrap();
    assert_eq!(replies, vec![AdapterReply::Score(0.25), AdapterReply::Score(-2.0)]);
}

#[test]
fn missing_or_wrong_handshake() {
    assert!(matches!(Adapter::spawn("echo hello", T), Err(AdapterError::Handshake(_))));
    assert!(matches!(
        Adapter::spawn(r#"echo '{"protocol":"other/9"}'"#, T),
        Err(AdapterError::Handshake(_))
    ));
    assert!(matches!(Adapter::spawn("true", T), Err(AdapterError::Handshake(_))));
}

#[test]
fn silent_adapter_times_out() {
    let script = handshake_then("sleep 5");
    let mut adapter = Adapter::spawn(&script, Duration::from_millis(200)).unwrap();
    let start = std::time::Instant::now();
    assert!(matches!(adapter.call(&requests(1)), Err(AdapterError::Timeout(_))));
    assert!(start.elapsed() < Duration::from_secs(4));
}

#[test]
fn adapter_exiting_mid_batch() {
    let script = handshake_then(r#"read a; echo '{"id":"r0","score":0.1}'"#);
    let mut adapter = Adapter::spawn(&script, T).unwrap();
    match adapter.call(&requests(3)) {
        Err(AdapterError::Closed { pending }) => assert_eq!(pending, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn protocol_violations() {
    let cases = [
        (1, r#"read a; echo '{"id":"zzz","score":0.1}'"#),
        (2, r#"read a; echo '{"id":"r0","score":0.1}'; echo '{"id":"r0","score":0.1}'"#),
        (1, r#"read a; echo '{"id":"r0","score":1.5}'"#),
        (1, r#"read a; echo '{"id":"r0"}'"#),
        (1, r#"read a; echo 'not json'"#),
    ];
    for (n, body) in cases {
        let mut adapter = Adapter::spawn(&handshake_then(body), T).unwrap();
        let result = adapter.call(&requests(n));
        assert!(matches!(result, Err(AdapterError::Protocol(_))), "{body}: {result:?}");
    }
}

#[test]
fn remote_error_is_reported() {
    let script = handshake_then(r#"read a; echo '{"id":"r0","error":"model not loaded"}'"#);
    let mut adapter = Adapter::spawn(&script, T).unwrap();
    match adapter.call(&requests(1)) {
        Err(AdapterError::Remote { id, message }) => {
            assert_eq!(id, "r0");
            assert_eq!(message, "model not loaded");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn bridge_reply_needs_output() {
    let script = handshake_then(r#"read a; echo '{"id":"r0","score":0.3}'"#);
    let mut adapter = Adapter::spawn(&script, T).unwrap();
    let req = vec![AdapterRequest::bridge("r0", Task::Text2amr, "a cat")];
    assert!(matches!(adapter.call(&req), Err(AdapterError::Protocol(_))));
}

#[test]
fn exec_scorer_and_realizer_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ds");
    let corpus = data_path("data/synthetic_corpus.jsonl");
    let status = Command::new(env!("CARGO_BIN_EXE_amrfact"))
        .args(["build-dataset", "--seed", "2", "--jobs", "3", "--format", "json"])
        .arg("--corpus")
        .arg(&corpus)
        .arg("--out")
        .arg(&out)
        .arg("--scorer")
        .arg(format!("exec:{}", echo()))
        .arg("--realizer")
        .arg(format!("exec:{}", echo()))
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(&status.stdout).unwrap();
    // 0.5 < 0.9 and -1.0 > -1.8: every candidate passes the stub scorer.
    assert_eq!(manifest["counts"]["valid_negatives"], manifest["counts"]["candidates"]);

    let candidates = fs::read_to_string(out.join("candidates.jsonl")).unwrap();
    for line in candidates.lines() {
        let c: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(c["perturbed_text"], c["perturbed_penman"]);
        assert_eq!(c["realization"], "adapter");
    }
    let scores = fs::read_to_string(out.join("scores.jsonl")).unwrap();
    for line in scores.lines() {
        let s: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!((s["entailment"].as_f64(), s["relevance"].as_f64()), (Some(0.5), Some(-1.0)));
    }

    let failing = Command::new(env!("CARGO_BIN_EXE_amrfact"))
        .args(["build-dataset", "--seed", "2", "--scorer", "exec:echo nope"])
        .arg("--corpus")
        .arg(&corpus)
        .arg("--out")
        .arg(tmp.path().join("bad"))
        .output()
        .unwrap();
    assert_eq!(failing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&failing.stderr).contains("handshake"));
}
