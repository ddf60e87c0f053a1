use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BASE: &str = "Anne is green or blue.
If someone is green then they are cold.
If someone is blue then they are cold.
If someone is cold then they are rough.
If someone is rough then they are young.
If someone is young then they are cold.
If someone is young then they are nice.
Anne is cold. True/False?
Anne is rough. True/False?
Anne is young. True/False?
Anne is nice. True/False?
";

fn ruleshift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ruleshift"))
        .args(args)
        .env_remove("RULESHIFT_OUT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn generate(dir: &Path, groups: &str, train: &str) -> Output {
    ruleshift(&[
        "generate",
        "--groups",
        groups,
        "--train",
        train,
        "--seed",
        "42",
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn generate_reports_counts_and_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d");
    let first = generate(&dir, "1", "0");
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    assert!(stdout(&first).contains("44 records"));
    let bytes = fs::read(dir.join("manifest.json")).unwrap();

    let again = generate(&dir, "1", "0");
    assert_eq!(code(&again), 0, "{}", stderr(&again));
    assert_eq!(fs::read(dir.join("manifest.json")).unwrap(), bytes);
    let hash = |o: &Output| {
        stdout(o)
            .lines()
            .find(|l| l.starts_with("manifest sha256"))
            .map(str::to_string)
    };
    assert_eq!(hash(&first), hash(&again));

    let other = ruleshift(&[
        "generate",
        "--groups",
        "1",
        "--train",
        "0",
        "--seed",
        "43",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&other), 3, "existing dataset must not be replaced");
    assert_eq!(fs::read(dir.join("manifest.json")).unwrap(), bytes);
}

#[test]
fn generate_takes_output_directory_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_ruleshift"))
        .args(["generate", "--groups", "2", "--train", "1", "--seed", "1"])
        .env("RULESHIFT_OUT", &dir)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.join("manifest.json").exists());
}

#[test]
fn generate_rejects_bad_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&generate(&tmp.path().join("x"), "3", "3")), 3);
    assert_eq!(
        code(&ruleshift(&["generate", "--groups", "3", "--out", "x"])),
        3,
        "seed is mandatory"
    );
}

#[test]
fn solve_prints_answers_and_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("base.txt");
    fs::write(&path, BASE).unwrap();
    let o = ruleshift(&["solve", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("answers: T,T,T,T"), "{out}");
    let branch: Vec<&str> = out
        .lines()
        .skip_while(|l| !l.contains("branch 1"))
        .skip(1)
        .take_while(|l| !l.contains("branch 2"))
        .collect();
    assert_eq!(
        branch,
        [
            "    rule1: cold",
            "    rule3: rough",
            "    rule4: young",
            "    rule6: nice"
        ]
    );
}

#[test]
fn solve_flags_inconsistency() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("v3.txt");
    fs::write(&path, format!("Anne is not cold or not nice.\n{BASE}")).unwrap();
    let o = ruleshift(&["solve", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("INCONSISTENT"));
    assert!(stdout(&o).contains("answers: F,F,F,F"));
}

#[test]
fn solve_reports_parse_position() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.txt");
    fs::write(
        &path,
        "Anne is green.\nIf someone is green thn they are cold.\n",
    )
    .unwrap();
    let o = ruleshift(&["solve", path.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    assert!(
        stderr(&o).contains("line 2") && stderr(&o).contains("byte 20"),
        "{}",
        stderr(&o)
    );
    assert_eq!(
        code(&ruleshift(&[
            "solve",
            tmp.path().join("none.txt").to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn transform_laws() {
    let rule = "If someone is green then they are cold.";
    let o = ruleshift(&["transform", "--law", "contrapositive", rule]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert_eq!(
        out.lines().next(),
        Some("If someone is not cold then they are not green.")
    );
    assert!(out.contains("equivalent: true"));

    assert_eq!(
        code(&ruleshift(&["transform", "--law", "commutativity", rule])),
        5
    );
    let id = ruleshift(&["transform", "--law", "identity", rule]);
    assert_eq!(
        stdout(&id).lines().next(),
        Some("If someone is green or green then they are cold.")
    );
    assert!(stdout(&id).contains("equivalent: true"));
    assert_eq!(
        code(&ruleshift(&["transform", "--law", "nonsense", rule])),
        3
    );
    assert_eq!(
        code(&ruleshift(&[
            "transform",
            "--law",
            "identity",
            "green implies cold"
        ])),
        4
    );

    let a = ruleshift(&["transform", "--stack", "5", "--seed", "9", rule]);
    let b = ruleshift(&["transform", "--stack", "5", "--seed", "9", rule]);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(
        stdout(&a).lines().filter(|l| l.starts_with("  ")).count(),
        5
    );
    assert_eq!(code(&ruleshift(&["transform", "--stack", "7", rule])), 3);
}

#[test]
fn evaluate_baselines_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d");
    assert_eq!(code(&generate(&dir, "5", "3")), 0);
    let report = tmp.path().join("ct.json");
    let o = ruleshift(&[
        "evaluate",
        "--dataset",
        dir.to_str().unwrap(),
        "--baseline",
        "chain-template",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let row = |out: &str, name: &str| -> Vec<String> {
        out.lines()
            .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
            .find(|w| w.first().map(String::as_str) == Some(name))
            .unwrap()
    };
    let out = stdout(&o);
    assert_eq!(row(&out, "base")[1..3], ["1.0000", "0.0000"]);
    assert_eq!(row(&out, "variant1")[1..3], ["1.0000", "0.0000"]);
    assert_eq!(row(&out, "variant2")[1..3], ["0.2500", "-0.7500"]);
    assert_eq!(row(&out, "variant3")[1..3], ["0.0000", "-1.0000"]);

    let rerendered = ruleshift(&["report", "--input", report.to_str().unwrap()]);
    assert_eq!(code(&rerendered), 0);
    assert!(out.starts_with(&stdout(&rerendered)));

    let oracle_report = tmp.path().join("o.json");
    let o = ruleshift(&[
        "evaluate",
        "--dataset",
        dir.to_str().unwrap(),
        "--baseline",
        "oracle",
        "--report",
        oracle_report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let lines: Vec<String> = stdout(&o)
        .lines()
        .filter(|l| l.starts_with("variant") || l.starts_with("base"))
        .map(str::to_string)
        .collect();
    assert_eq!(lines.len(), 11);
    assert!(lines
        .iter()
        .all(|l| l.split_whitespace().nth(1) == Some("1.0000")));
}

#[test]
fn evaluate_error_exits() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d");
    assert_eq!(code(&generate(&dir, "2", "1")), 0);
    let d = dir.to_str().unwrap();
    let report = tmp.path().join("r.json");
    let r = report.to_str().unwrap();
    assert_eq!(
        code(&ruleshift(&[
            "evaluate",
            "--dataset",
            d,
            "--predictions",
            "missing.file",
            "--report",
            r
        ])),
        6
    );
    assert_eq!(
        code(&ruleshift(&[
            "evaluate",
            "--dataset",
            d,
            "--baseline",
            "gpt",
            "--report",
            r
        ])),
        3
    );
    assert_eq!(
        code(&ruleshift(&["evaluate", "--dataset", d, "--report", r])),
        3,
        "a source is required"
    );
    assert_eq!(
        code(&ruleshift(&[
            "evaluate",
            "--dataset",
            d,
            "--baseline",
            "oracle",
            "--predictions",
            "p",
            "--report",
            r
        ])),
        3,
        "sources are exclusive"
    );
    let partial = tmp.path().join("partial.jsonl");
    fs::write(
        &partial,
        "{\"group_id\":0,\"variant\":\"base\",\"question_index\":0,\"label\":\"T\"}\n",
    )
    .unwrap();
    let o = ruleshift(&[
        "evaluate",
        "--dataset",
        d,
        "--predictions",
        partial.to_str().unwrap(),
        "--report",
        r,
    ]);
    assert_eq!(code(&o), 6);
    assert!(stderr(&o).contains("missing"));
    assert_eq!(
        code(&ruleshift(&[
            "evaluate",
            "--dataset",
            tmp.path().join("nope").to_str().unwrap(),
            "--baseline",
            "oracle",
            "--report",
            r
        ])),
        2
    );
    assert!(!report.exists());
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&ruleshift(&["--help"])), 0);
    assert_eq!(code(&ruleshift(&["--version"])), 0);
    assert_eq!(code(&ruleshift(&["frobnicate"])), 3);
}
