use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn sbfl(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_sbfl"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn worked() -> String {
    fixture("worked.json").to_string_lossy().into_owned()
}

fn calc_args() -> [String; 4] {
    [
        "--coverage".into(),
        fixture("calc/manifest.tsv").to_string_lossy().into_owned(),
        "--tests".into(),
        fixture("calc/junit.xml").to_string_lossy().into_owned(),
    ]
}

#[test]
fn rank_table_is_stable() {
    let out = sbfl(&["rank", "--spectrum", &worked()], None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "rank   score  element  location\n\
         \x20  1  0.7071  s1       a.c:1\n\
         \x20  2  0.7071  s2       a.c:2\n\
         \x20  3  0.0000  s3       a.c:3\n"
    );
    assert_eq!(stderr(&out), "");
}

#[test]
fn custom_formula_and_top() {
    let out = sbfl(
        &["rank", "--spectrum", &worked(), "--formula", "ef", "--top", "2"],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().contains("1.0000  s1"));
}

#[test]
fn average_rank_prints_fractions() {
    let out = sbfl(&["rank", "--spectrum", &worked(), "--tiebreak", "AVERAGE_RANK"], None);
    let text = stdout(&out);
    assert!(text.contains("1.5  0.7071  s1"), "{text}");
    assert!(text.contains("1.5  0.7071  s2"), "{text}");
}

#[test]
fn manifest_ranking_matches_hand_counts() {
    let args = calc_args();
    let mut argv = vec!["rank"];
    argv.extend(args.iter().map(String::as_str));
    let out = sbfl(&argv, None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let names: Vec<String> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().nth(2).unwrap().to_string())
        .collect();
    assert_eq!(
        names,
        [
            "src/calc.c:5",
            "src/calc.c:8",
            "src/util.c:11",
            "src/calc.c:3",
            "src/calc.c:7",
            "src/util.c:10",
            "src/calc.c:4"
        ]
    );
    // unsupported LCOV records are reported, not fatal
    assert!(stderr(&out).contains("warning: "));
}

#[test]
fn canonical_format_is_the_service_ranking() {
    let out = sbfl(&["rank", "--spectrum", &worked(), "--format", "canonical"], None);
    assert_eq!(out.status.code(), Some(0));
    let body: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(body["formula"], "OCHIAI");
    assert_eq!(body["total"], 3);
    assert_eq!(body["entries"][0]["name"], "s1");
    assert_eq!(body["entries"][0]["color"], serde_json::json!([156, 59, 0]));
    let parsed: sbfl_service::wire::RankingBody = serde_json::from_value(body).unwrap();
    assert_eq!(parsed.entries.len(), 3);
}

#[test]
fn explain_shows_the_trace() {
    let out = sbfl(&["explain", "--spectrum", &worked(), "--element", "s2"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("metrics  ef=1 ep=1 nf=0 np=1"), "{text}");
    assert!(text.contains("trace    1 / sqrt(1*(1+1))"), "{text}");
    assert!(text.contains("failing  t1"), "{text}");

    let by_id = sbfl(&["explain", "--spectrum", &worked(), "--element", "#2"], None);
    assert_eq!(stdout(&by_id), text);

    let missing = sbfl(&["explain", "--spectrum", &worked(), "--element", "s9"], None);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn convert_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("calc.json");
    let args = calc_args();
    let mut argv = vec!["convert"];
    argv.extend(args.iter().map(String::as_str));
    argv.extend(["-o", doc.to_str().unwrap()]);
    let out = sbfl(&argv, None);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let mut from_manifest = vec!["rank"];
    from_manifest.extend(args.iter().map(String::as_str));
    let direct = sbfl(&from_manifest, None);
    let via_doc = sbfl(&["rank", "--spectrum", doc.to_str().unwrap()], None);
    assert_eq!(stdout(&direct), stdout(&via_doc));

    let again = sbfl(&["convert", "--spectrum", doc.to_str().unwrap()], None);
    assert_eq!(stdout(&again), std::fs::read_to_string(&doc).unwrap());
}

#[test]
fn no_failing_tests_warns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("green.json");
    let text = std::fs::read_to_string(fixture("worked.json"))
        .unwrap()
        .replace("\"FAIL\"", "\"PASS\"");
    std::fs::write(&path, text).unwrap();
    let out = sbfl(&["rank", "--spectrum", path.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("no failing tests"));
}

#[test]
fn formula_errors_point_at_the_offset() {
    let out = sbfl(&["rank", "--spectrum", &worked(), "--formula", "ef/(ef+"], None);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("offset 8"), "{err}");
    assert!(err.contains("  ef/(ef+\n         ^"), "{err}");
    assert_eq!(stdout(&out), "");
}

#[test]
fn usage_and_input_errors_exit_2() {
    let calc = calc_args();
    let worked = worked();
    let cases: Vec<Vec<&str>> = vec![
        vec!["rank"],
        vec!["rank", "--spectrum", &calc[1]],
        vec!["rank", "--spectrum", "does-not-exist.json"],
        vec![
            "rank",
            "--spectrum",
            &worked,
            "--coverage",
            &calc[1],
            "--tests",
            &calc[3],
        ],
        vec!["rank", "--coverage", &calc[1]],
        vec!["rank", "--spectrum", &worked, "--granularity", "BOGUS"],
        vec!["rank", "--spectrum", &worked, "--tiebreak", "RANDOM"],
        vec!["rank", "--spectrum", &worked, "--format", "xml"],
        vec!["frobnicate"],
    ];
    for argv in cases {
        let out = sbfl(&argv, None);
        assert_eq!(out.status.code(), Some(2), "{argv:?}: {}", stderr(&out));
        assert!(!stderr(&out).is_empty());
    }
}

#[test]
fn formulas_lists_the_builtins() {
    let out = sbfl(&["formulas"], None);
    let text = stdout(&out);
    for name in ["TARANTULA", "OCHIAI", "BARINEL"] {
        assert!(text.contains(name), "{text}");
    }
}

fn elo_pool(items: &[&str]) -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let list = dir.path().join("items.txt");
    std::fs::write(&list, items.join("\n")).unwrap();
    let pool = dir.path().join("pool.tsv").to_string_lossy().into_owned();
    let out = sbfl(
        &[
            "elo",
            "--pool",
            &pool,
            "init",
            "--items",
            list.to_str().unwrap(),
            "--seed",
            "7",
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    (dir, pool)
}

#[test]
fn elo_one_vote() {
    let (_dir, pool) = elo_pool(&["x", "y"]);
    let out = sbfl(&["elo", "--pool", &pool, "vote"], Some("a\n"));
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("recorded 1 vote(s)"));
    let standings = stdout(&sbfl(&["elo", "--pool", &pool, "standings"], None));
    assert_eq!(
        standings,
        "rank  rating  matches  item\n   1  1516.0        1  x\n   2  1484.0        1  y\n"
    );
}

#[test]
fn elo_votes_replay_identically() {
    let answers = "a\nb\ndraw\nnonsense\na\nb\nq\n";
    let files: Vec<String> = (0..2)
        .map(|_| {
            let (_dir, pool) = elo_pool(&["alpha", "beta", "gamma", "delta"]);
            let out = sbfl(&["elo", "--pool", &pool, "vote"], Some(answers));
            assert_eq!(out.status.code(), Some(0));
            assert!(stdout(&out).contains("recorded 5 vote(s)"));
            std::fs::read_to_string(&pool).unwrap()
        })
        .collect();
    assert_eq!(files[0], files[1]);
}

#[test]
fn elo_rounds_limit_and_resume() {
    let (_dir, pool) = elo_pool(&["x", "y", "z"]);
    let out = sbfl(&["elo", "--pool", &pool, "vote", "--rounds", "2"], Some("a\na\na\na\n"));
    assert!(stdout(&out).contains("recorded 2 vote(s); 2 in total"));
    let out = sbfl(&["elo", "--pool", &pool, "vote"], Some("b\n"));
    assert!(stdout(&out).contains("recorded 1 vote(s); 3 in total"));
}

#[test]
fn elo_errors_exit_2() {
    let (dir, pool) = elo_pool(&["only"]);
    let out = sbfl(&["elo", "--pool", &pool, "vote"], Some("a\n"));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("at least 2"));

    let items = dir.path().join("items.txt");
    let again = sbfl(
        &["elo", "--pool", &pool, "init", "--items", items.to_str().unwrap()],
        None,
    );
    assert_eq!(again.status.code(), Some(2));
    let forced = sbfl(
        &[
            "elo",
            "--pool",
            &pool,
            "init",
            "--items",
            items.to_str().unwrap(),
            "--force",
        ],
        None,
    );
    assert_eq!(forced.status.code(), Some(0));

    let missing = dir.path().join("nope.tsv");
    let out = sbfl(&["elo", "--pool", missing.to_str().unwrap(), "standings"], None);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(&pool, "not a pool\n").unwrap();
    let out = sbfl(&["elo", "--pool", &pool, "standings"], None);
    assert_eq!(out.status.code(), Some(2));
}
