use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use exactbn::output::{default_names, NetworkDoc};
use exactbn::{learn, ComputeOptions, Dataset, ScoreSpec};

fn exactbn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exactbn"))
        .current_dir(dir)
        .env_remove("EXACTBN_CACHE_DIR")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = exactbn(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    exactbn(dir, args).status.code().unwrap()
}

/// Five dependent columns, 400 rows.
fn write_data(dir: &Path, name: &str) -> PathBuf {
    let mut text = String::new();
    let mut state = 12345u64;
    for _ in 0..400 {
        let mut prev = 0u64;
        let mut row = Vec::new();
        for v in 0..5u64 {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let noise = (state >> 33) % 10;
            let arity = 2 + v % 2;
            let x = if noise < 7 {
                prev % arity
            } else {
                (state >> 40) % arity
            };
            row.push(x.to_string());
            prev = x;
        }
        text += &row.join(",");
        text.push('\n');
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn learn_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tiny.csv");
    fs::write(&path, "0,0,1\n1,1,0\n1,1,1\n0,0,0\n1,1,1\n0,1,0\n").unwrap();
    let data = Dataset::load(&path).unwrap();
    let spec = ScoreSpec::bic();
    let opts = ComputeOptions::default();

    let best = learn::<f32>(&data, &spec, &opts).unwrap();
    let want = NetworkDoc::new(
        spec,
        best.total_score.into(),
        &best.ordering,
        &best.network,
        &default_names(3),
    );
    assert_eq!(
        ok(dir.path(), &["learn", "tiny.csv", "--score", "bic"]),
        want.to_json() + "\n"
    );

    let best = learn::<f64>(&data, &spec, &opts).unwrap();
    let want = NetworkDoc::new(
        spec,
        best.total_score,
        &best.ordering,
        &best.network,
        &default_names(3),
    );
    let got = ok(
        dir.path(),
        &["learn", "tiny.csv", "--score", "bic", "--precision", "8"],
    );
    assert_eq!(NetworkDoc::from_json(&got).unwrap(), want);
}

#[test]
fn net_for_order_then_report() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), "d.csv");
    fs::write(dir.path().join("names.txt"), "a b c d e\n").unwrap();
    ok(
        dir.path(),
        &[
            "net-for-order",
            "d.csv",
            "--order",
            "0,1,2,3,4",
            "--out",
            "net.json",
            "--dot",
            "net.dot",
            "--names",
            "names.txt",
        ],
    );
    let report = ok(dir.path(), &["report", "--network", "net.json", "d.csv"]);
    let field = |key: &str| -> String {
        report
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key}: ")))
            .unwrap()
            .to_string()
    };
    assert_eq!(field("n"), "5");
    assert_eq!(field("rows"), "400");
    assert_eq!(field("arities"), "2,3,2,3,2");
    assert!(field("max in-degree").parse::<usize>().unwrap() <= 4);
    assert!(fs::read_to_string(dir.path().join("net.dot"))
        .unwrap()
        .starts_with("digraph bn {\n  \"a\";"));

    let tiny = dir.path().join("t.csv");
    fs::write(&tiny, "0 1 1\n1 0 1\n1 1 0\n0 0 0\n").unwrap();
    ok(
        dir.path(),
        &[
            "net-for-order",
            "t.csv",
            "--order",
            "0,1,2",
            "--out",
            "t.json",
        ],
    );
    let report = ok(dir.path(), &["report", "--network", "t.json"]);
    let d: usize = report
        .lines()
        .find_map(|l| l.strip_prefix("max in-degree: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(d <= 2);
}

#[test]
fn sharded_pipeline_matches_unsharded() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), "d.csv");
    let mut shards = Vec::new();
    for i in 0..4 {
        let out = format!("s{i}.bnsh");
        ok(
            dir.path(),
            &[
                "scores",
                "d.csv",
                "--shard",
                &format!("{i}/4"),
                "--out",
                &out,
            ],
        );
        shards.push(out);
    }
    let mut args = vec!["merge"];
    args.extend(shards.iter().rev().map(String::as_str));
    args.extend(["--out", "merged.bnls"]);
    ok(dir.path(), &args);
    ok(dir.path(), &["scores", "d.csv", "--out", "mono.bnls"]);
    assert_eq!(
        fs::read(dir.path().join("merged.bnls")).unwrap(),
        fs::read(dir.path().join("mono.bnls")).unwrap()
    );
    let sharded = ok(dir.path(), &["learn", "--cache", "merged.bnls"]);
    assert_eq!(sharded, ok(dir.path(), &["learn", "d.csv"]));
}

#[test]
fn saved_tables_reproduce_the_ordering() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), "d.csv");
    ok(
        dir.path(),
        &["scores", "d.csv", "--score", "aic", "--out", "c.bnls"],
    );
    let doc = ok(
        dir.path(),
        &[
            "learn",
            "--cache",
            "c.bnls",
            "--save-sinks",
            "s.bnsk",
            "--save-parents",
            "p.bnbp",
        ],
    );
    let doc = NetworkDoc::from_json(&doc).unwrap();
    let from_sinks = ok(dir.path(), &["best-order", "--sinks", "s.bnsk"]);
    let ord: Vec<String> = doc.ordering.iter().map(usize::to_string).collect();
    assert_eq!(from_sinks.trim(), ord.join(","));
    let order = ord.join(",");
    let via_parents = ok(
        dir.path(),
        &[
            "net-for-order",
            "--cache",
            "c.bnls",
            "--parents",
            "p.bnbp",
            "--order",
            &order,
        ],
    );
    assert_eq!(NetworkDoc::from_json(&via_parents).unwrap(), doc);
}

#[test]
fn scan_and_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), "d.csv");
    let rot = ok(dir.path(), &["rotations", "d.csv", "--score", "bic"]);
    let lines: Vec<&str> = rot.lines().collect();
    assert_eq!(lines[0], "k,score");
    assert_eq!(lines.len(), 1 + 5);
    let sw = ok(dir.path(), &["swaps", "d.csv", "--order", "4,3,2,1,0"]);
    assert_eq!(sw.lines().next(), Some("i,j,score"));
    assert_eq!(sw.lines().count(), 1 + 25);
    let sweep = ok(dir.path(), &["sweep-ess", "d.csv", "--grid", "1,10"]);
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], "ess,arcs,score");
    assert!(lines[1].starts_with("1,") && lines[2].starts_with("10,"));
}

#[test]
fn sample_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path(), "d.csv");
    ok(dir.path(), &["learn", "d.csv", "--out", "net.json"]);
    let args = [
        "sample",
        "d.csv",
        "--network",
        "net.json",
        "--count",
        "50",
        "--seed",
        "7",
    ];
    let a = ok(dir.path(), &args);
    assert_eq!(a, ok(dir.path(), &args));
    assert!(a.starts_with("# rng: ") && a.contains("# seed: 7\n"));
    let sampled = Dataset::parse(&a).unwrap();
    assert_eq!(sampled.len(), 50);
    fs::write(dir.path().join("s.txt"), &a).unwrap();
    let pred = ok(
        dir.path(),
        &["predict", "d.csv", "s.txt", "--network", "net.json"],
    );
    let lines: Vec<&str> = pred.lines().collect();
    assert_eq!(lines[0], "row,logp");
    assert_eq!(lines.len(), 1 + 50 + 1);
    let mean: f64 = lines[51].strip_prefix("mean,").unwrap().parse().unwrap();
    assert!(mean < 0.0);
}

#[test]
fn cache_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let caches = tempfile::tempdir().unwrap();
    write_data(dir.path(), "d.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_exactbn"))
        .current_dir(dir.path())
        .env("EXACTBN_CACHE_DIR", caches.path())
        .args(["scores", "d.csv"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(caches.path().join("d.bnls").exists());
    let out = Command::new(env!("CARGO_BIN_EXE_exactbn"))
        .current_dir(dir.path())
        .env("EXACTBN_CACHE_DIR", caches.path())
        .args(["best-order", "--cache", "d.bnls"])
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_data(d, "d.csv");
    assert_eq!(code(d, &["learn", "d.csv", "--bogus"]), 2);
    assert_eq!(
        code(d, &["learn", "d.csv", "--score", "bic", "--ess", "2"]),
        2
    );
    assert_eq!(code(d, &["learn", "d.csv", "--ess", "0"]), 2);
    assert_eq!(code(d, &["scores", "d.csv", "--shard", "4/4"]), 2);
    assert_eq!(code(d, &["learn"]), 2);

    fs::write(d.join("bad.csv"), "0,1\n1,x\n").unwrap();
    assert_eq!(code(d, &["learn", "bad.csv"]), 3);
    fs::write(d.join("ragged.csv"), "0,1\n1\n").unwrap();
    assert_eq!(code(d, &["learn", "ragged.csv"]), 3);
    assert_eq!(code(d, &["learn", "missing.csv"]), 3);
    assert_eq!(code(d, &["learn", "d.csv", "--arities", "2,2,2,2,2"]), 3);

    ok(d, &["scores", "d.csv", "--out", "c.bnls"]);
    assert_eq!(
        code(d, &["learn", "--cache", "c.bnls", "--score", "bic"]),
        4
    );
    assert_eq!(code(d, &["learn", "--cache", "c.bnls", "--ess", "3"]), 4);
    assert_eq!(
        code(d, &["learn", "--cache", "c.bnls", "--precision", "8"]),
        4
    );
    ok(d, &["scores", "d.csv", "--shard", "0/2", "--out", "a.bnsh"]);
    ok(
        d,
        &[
            "scores", "d.csv", "--shard", "1/2", "--score", "bic", "--out", "b.bnsh",
        ],
    );
    assert_eq!(
        code(d, &["merge", "a.bnsh", "b.bnsh", "--out", "m.bnls"]),
        4
    );
    assert_eq!(code(d, &["merge", "a.bnsh", "--out", "m.bnls"]), 3);

    let wide: Vec<String> = (0..33).map(|i| (i % 2).to_string()).collect();
    fs::write(d.join("wide.csv"), wide.join(",") + "\n").unwrap();
    assert_eq!(code(d, &["learn", "wide.csv"]), 5);

    assert_eq!(code(d, &["--help"]), 0);
}
