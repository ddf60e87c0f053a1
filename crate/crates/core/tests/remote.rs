use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use ruleshift::eval::{run_baseline, score, score_with, Baseline, Coverage, RecordKey};
use ruleshift::genset::{generate, Dataset, DatasetConfig};
use ruleshift::remote::{fetch_remote_predictions, Endpoint, FailureKind};
use serde_json::{json, Value};

#[derive(Clone, Copy)]
enum Fault {
    Sleep,
    Yes,
    BadJson,
    Status500,
}

/// Reads one HTTP/1.1 request and returns its body.
fn read_body(stream: &mut TcpStream) -> String {
    let mut reader = BufReader::new(stream);
    let mut length = 0;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    String::from_utf8(body).unwrap()
}

/// Serves `answers` by id on one thread per connection; ids in `faults`
/// misbehave instead.
fn stub(answers: BTreeMap<String, String>, faults: BTreeMap<String, Fault>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    let answers = Arc::new(answers);
    let faults = Arc::new(faults);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let mut stream = stream.unwrap();
            let answers = Arc::clone(&answers);
            let faults = Arc::clone(&faults);
            thread::spawn(move || {
                let v: Value = serde_json::from_str(&read_body(&mut stream)).unwrap();
                let id = v["id"].as_str().unwrap().to_string();
                assert!(v["prompt"].as_str().unwrap().ends_with("True/False?"));
                let (status, text) = match faults.get(&id) {
                    Some(Fault::Sleep) => {
                        thread::sleep(Duration::from_millis(1500));
                        (200, json!({"id": id, "label": answers[&id]}).to_string())
                    }
                    Some(Fault::Yes) => (200, json!({"id": id, "label": "yes"}).to_string()),
                    Some(Fault::BadJson) => (200, "{not json".to_string()),
                    Some(Fault::Status500) => (500, "boom".to_string()),
                    None => (200, json!({"id": id, "label": answers[&id]}).to_string()),
                };
                let head = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                    text.len()
                );
                let _ = stream
                    .write_all(head.as_bytes())
                    .and_then(|()| stream.write_all(text.as_bytes()));
            });
        }
    });
    format!("http://127.0.0.1:{port}/predict")
}

fn dataset() -> Dataset {
    generate(&DatasetConfig {
        groups: 3,
        train: 1,
        seed: 17,
    })
    .unwrap()
}

fn oracle_answers(d: &Dataset) -> BTreeMap<String, String> {
    run_baseline(d, Baseline::Oracle, 0)
        .unwrap()
        .into_iter()
        .map(|p| (p.key().to_string(), p.label.as_str().to_string()))
        .collect()
}

fn endpoint(url: String) -> Endpoint {
    Endpoint {
        url,
        timeout: Duration::from_millis(400),
        max_parallel: 16,
    }
}

#[test]
fn echoing_stub_reproduces_oracle_report() {
    let d = dataset();
    let url = stub(oracle_answers(&d), BTreeMap::new());
    let outcome = fetch_remote_predictions(&d, &endpoint(url));
    assert!(outcome.failures.is_empty(), "{}", outcome.failure_report());
    let remote = score(&d, "oracle", &outcome.predictions).unwrap();
    let local = score(
        &d,
        "oracle",
        &run_baseline(&d, Baseline::Oracle, 0).unwrap(),
    )
    .unwrap();
    assert_eq!(remote, local);
}

#[test]
fn injected_timeouts_are_reported_exactly() {
    let d = dataset();
    let answers = oracle_answers(&d);
    // Every 20th id in key order: 5% of the records.
    let mut keys: Vec<RecordKey> = answers.keys().map(|k| k.parse().unwrap()).collect();
    keys.sort();
    let slow: BTreeSet<String> = keys.iter().step_by(20).map(ToString::to_string).collect();
    let faults = slow.iter().map(|id| (id.clone(), Fault::Sleep)).collect();
    let url = stub(answers.clone(), faults);
    let outcome = fetch_remote_predictions(&d, &endpoint(url));
    let failed: BTreeSet<String> = outcome.failures.iter().map(|f| f.id.clone()).collect();
    assert_eq!(failed, slow, "{}", outcome.failure_report());
    assert!(outcome
        .failures
        .iter()
        .all(|f| f.kind == FailureKind::Timeout));
    assert_eq!(outcome.predictions.len() + slow.len(), answers.len());

    let report = score_with(&d, "stub", &outcome.predictions, Coverage::Permissive).unwrap();
    assert!(report.flagged);
    assert_eq!(
        report.unanswered.iter().cloned().collect::<BTreeSet<_>>(),
        slow
    );
    assert!(score(&d, "stub", &outcome.predictions).is_err());
}

#[test]
fn non_conforming_responses_are_not_guessed() {
    let d = dataset();
    let answers = oracle_answers(&d);
    let ids: Vec<String> = answers.keys().take(3).cloned().collect();
    let faults = BTreeMap::from([
        (ids[0].clone(), Fault::Yes),
        (ids[1].clone(), Fault::BadJson),
        (ids[2].clone(), Fault::Status500),
    ]);
    let url = stub(answers.clone(), faults);
    let outcome = fetch_remote_predictions(&d, &endpoint(url));
    assert_eq!(outcome.failures.len(), 3);
    let kind = |id: &str| {
        outcome
            .failures
            .iter()
            .find(|f| f.id == id)
            .unwrap()
            .kind
            .clone()
    };
    assert!(matches!(kind(&ids[0]), FailureKind::MalformedResponse(m) if m.contains("\"yes\"")));
    assert!(matches!(kind(&ids[1]), FailureKind::MalformedResponse(_)));
    assert!(matches!(kind(&ids[2]), FailureKind::Transport(m) if m.contains("500")));
    assert_eq!(outcome.predictions.len(), answers.len() - 3);
}

#[test]
fn unreachable_endpoint_is_a_transport_failure() {
    let d = generate(&DatasetConfig {
        groups: 1,
        train: 0,
        seed: 1,
    })
    .unwrap();
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    drop(listener);
    let outcome = fetch_remote_predictions(&d, &endpoint(format!("http://127.0.0.1:{port}/")));
    assert_eq!(outcome.failures.len(), 44);
    assert!(outcome
        .failures
        .iter()
        .all(|f| matches!(f.kind, FailureKind::Transport(_))));
}
