use std::process::{Command, Output};

use graph_pir::GraphSpec;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graph-pir"))
        .args(args)
        .env_remove("GRAPH_PIR_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn request_lines(dump: &str) -> usize {
    dump.lines().take_while(|l| *l != "plan").filter(|l| l.starts_with("  ")).count()
}

#[test]
fn run_path3() {
    let o = cli(&["run", "--scheme", "path", "--graph", "path:3", "--theta", "1", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(request_lines(&out), 3);
    assert!(out.ends_with("rate 2/3\n"));
}

#[test]
fn run_lifted_path3() {
    let o = cli(&["run", "--scheme", "lift:path", "--graph", "path:3^2", "--theta", "1.1", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(request_lines(&out), 9);
    assert!(out.ends_with("rate 4/9\n"));
}

#[test]
fn incompatible_scheme_is_usage_error() {
    let o = cli(&["run", "--scheme", "complete", "--graph", "path:4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot run"));
    assert_eq!(cli(&["run", "--graph", "path:3", "--theta", "9"]).status.code(), Some(2));
    assert_eq!(cli(&["table", "--name", "tableV"]).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn same_seed_same_bytes() {
    let args = ["run", "--graph", "complete:4", "--theta", "3", "--seed", "11"];
    assert_eq!(cli(&args).stdout, cli(&args).stdout);
    let other = cli(&["run", "--graph", "complete:4", "--theta", "3", "--seed", "12"]);
    assert_ne!(cli(&args).stdout, other.stdout);
}

#[test]
fn seed_from_environment() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_graph-pir"))
        .args(["run", "--graph", "complete:4"])
        .env("GRAPH_PIR_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(with_env.stdout, cli(&["run", "--graph", "complete:4", "--seed", "5"]).stdout);
}

#[test]
fn json_graph_round_trips() {
    for spec in ["path:3", "complete:3^2", "complete_bipartite:2,3"] {
        let o = cli(&["run", "--graph", spec, "--format", "json"]);
        assert_eq!(o.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        let text = v["graph"].to_string();
        assert_eq!(GraphSpec::parse(&text).unwrap(), GraphSpec::parse(spec).unwrap());
        assert!(v["rate"].is_string());
    }
}

#[test]
fn verify_exit_codes() {
    let ok = cli(&["verify", "--graph", "path:4", "--scheme", "path", "--privacy", "exact"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).ends_with("overall: PASS\n"));
    let bad = cli(&["verify", "--graph", "complete:3", "--scheme", "mutant:dropped-ref:complete", "--privacy", "off"]);
    assert_eq!(bad.status.code(), Some(1));
    let out = stdout(&bad);
    assert!(out.contains("seed=") && out.ends_with("overall: FAIL\n"), "{out}");
}

#[test]
fn sweep_path_grid() {
    let o = cli(&["sweep", "--family", "path", "--n", "2..8", "--r", "1..3"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("graph,scheme,rate,best_lb,best_ub,tight"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 21);
    for row in &rows {
        let n: usize = row[0].trim_start_matches("path:").split('^').next().unwrap().parse().unwrap();
        if n.is_multiple_of(2) {
            assert_eq!(row[5], "true", "{row:?}");
        }
        assert_eq!(row[2], row[3], "rate is the lift lower bound: {row:?}");
    }
}

#[test]
fn sweep_empty_and_capped() {
    let o = cli(&["sweep", "--family", "path", "--n", "5..4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "graph,scheme,rate,best_lb,best_ub,tight\n");
    assert_eq!(cli(&["sweep", "--family", "path", "--n", "2..9"]).status.code(), Some(2));
    assert_eq!(cli(&["sweep", "--family", "path", "--n", "2", "--r", "5"]).status.code(), Some(2));
}

#[test]
fn tables_render() {
    let t3 = stdout(&cli(&["table", "--name", "tableIII", "--format", "csv"]));
    assert_eq!(t3.lines().count(), 13);
    assert!(t3.contains("\"(1,2)\",a_1,a_3,b_2"));
    let t4 = stdout(&cli(&["table", "--name", "tableIV", "--format", "csv"]));
    assert_eq!(t4.lines().count(), 13);
    assert!(t4.contains("\"(1,1)\",a_4+a'_2,a_3+a'_1+b_4+b'_4,b_4+b'_4"));
    let t2 = stdout(&cli(&["table", "--name", "tableII", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&t2).unwrap();
    let row = v["rows"].as_array().unwrap().iter().find(|r| r[0] == "path:4^2").unwrap();
    assert_eq!((row[1].as_str(), row[3].as_str()), (Some("1/3"), Some("1/3")));
}
