use std::path::Path;
use std::process::{Command, Output};

fn fraclab(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fraclab"));
    c.args(args).env_remove("FRACLAB_SEED").env_remove("FRACLAB_THREADS").env_remove("FRACLAB_CELL_BUDGET");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is json")
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = fraclab(&["check", "--s-e", "1.6", "--s-f", "1.6", "--gamma-f", "0", "--l-f", "0.8", "--alpha", "1", "--d", "2"], &[]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["verdict"], "holds");
    assert_eq!(json(&ok)["branch2_exact"], "6/5");

    let bad = fraclab(&["check", "--s-e", "x", "--s-f", "1", "--gamma-f", "0", "--l-f", "1", "--alpha", "0", "--d", "2"], &[]);
    assert_eq!(bad.status.code(), Some(2));

    let out = p(dir.path(), "i.frs");
    let budget = fraclab(&["--out", &out, "--cell-budget", "10", "generate", "interval", "--resolution", "64"], &[]);
    assert_eq!(budget.status.code(), Some(3));

    let missing = fraclab(&["sumset", &p(dir.path(), "none.frs"), &p(dir.path(), "none.frs"), "--out", &out], &[]);
    assert_eq!(missing.status.code(), Some(4));

    let usage = fraclab(&["frobnicate"], &[]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn flags_win_over_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "i.frs");
    let env_only = fraclab(&["--out", &out, "generate", "interval", "--resolution", "64"], &[("FRACLAB_CELL_BUDGET", "10")]);
    assert_eq!(env_only.status.code(), Some(3));
    let flag = fraclab(
        &["--out", &out, "--cell-budget", "100", "generate", "interval", "--resolution", "64"],
        &[("FRACLAB_CELL_BUDGET", "10")],
    );
    assert_eq!(flag.status.code(), Some(0));

    let circle = p(dir.path(), "c.frs");
    let g = fraclab(&["--out", &circle, "generate", "sphere", "--dim", "2", "--resolution", "32"], &[]);
    assert_eq!(g.status.code(), Some(0));
    let run = |args: &[&str], env: &[(&str, &str)]| json(&fraclab(args, env))["occupied"].clone();
    let simplex = ["simplex", circle.as_str(), "--samples", "3000", "--bins", "8"];
    let by_env = run(&simplex, &[("FRACLAB_SEED", "5")]);
    let mut with_flag = simplex.to_vec();
    with_flag.extend(["--seed", "5"]);
    assert_eq!(by_env, run(&with_flag, &[("FRACLAB_SEED", "6")]));
}

#[test]
fn pipeline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = p(dir.path(), "a.frs");
    let g = fraclab(&["--out", &a, "generate", "cantor", "--base", "4", "--digits", "0,1,2", "--depth", "5"], &[]);
    assert_eq!(g.status.code(), Some(0));
    assert_eq!(json(&g)["cells"], 243);
    let s = fraclab(&["--out", &p(dir.path(), "s.frs"), "sumset", &a, &a], &[]);
    assert_eq!(s.status.code(), Some(0));
    let d = fraclab(&["--out", &p(dir.path(), "d.frs"), "dilated-sum", &a, "--coeffs", "0.5,-0.75"], &[]);
    assert_eq!(d.status.code(), Some(0));
    let t = fraclab(&["thresholds", "--d-min", "2", "--d-max", "2"], &[]);
    let text = String::from_utf8(t.stdout).unwrap();
    assert!(text.starts_with("d,k,sum_product"));
    assert!(text.lines().nth(1).unwrap().ends_with("2/3"));
}

#[test]
fn sweep_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = p(dir.path(), "cfg.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 17, "experiment": {"kind": "tube", "sets": [{"base": 3, "digits": [0, 2]}], "depths": [5, 6], "directions": 16}}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let csv = p(dir.path(), &format!("r{threads}.csv"));
        let svg = p(dir.path(), &format!("r{threads}.svg"));
        let o = fraclab(&["sweep", &cfg, "--threads", threads, "--out", &csv], &[]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let json_out = p(dir.path(), &format!("r{threads}.json"));
        assert_eq!(fraclab(&["sweep", &cfg, "--threads", threads, "--out", &json_out], &[]).status.code(), Some(0));
        assert_eq!(fraclab(&["report", &json_out, "--out", &svg], &[]).status.code(), Some(0));
        outputs.push((std::fs::read(csv).unwrap(), std::fs::read(json_out).unwrap()));
        assert!(std::fs::read_to_string(svg).unwrap().contains("exponent = "));
    }
    assert_eq!(outputs[0], outputs[1]);
}
