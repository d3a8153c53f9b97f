use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn perilimit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perilimit")).args(args).output().expect("binary runs")
}

fn with_config(dir: &Path, name: &str, text: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(name);
    std::fs::write(&cfg, text).unwrap();
    let out = dir.join("out");
    let mut args = vec!["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    perilimit(&args)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/summary.json")).unwrap()).unwrap()
}

#[test]
fn frobenius_recoverability_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config(
        dir.path(),
        "c.toml",
        "task = \"recoverability\"\n[density]\nkind = \"frobenius-squared\"\n",
        &["--no-timestamp"],
    );
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path());
    assert_eq!(s["verdict"], "consistent");
    assert_eq!(s["exit_code"], 0);
    assert!(s.get("timestamp_unix").is_none());
}

#[test]
fn quadrature_check_exits_zero_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config(dir.path(), "c.toml", "", &["--task", "quadrature-check", "--quad-order", "32"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path());
    for rule in s["result"]["rules"].as_array().unwrap() {
        assert!(rule["second_moment_error"].as_f64().unwrap() <= 1e-10);
    }
    assert!(s["timestamp_unix"].is_u64());
}

#[test]
fn incompressible_model_reports_inf_in_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config(
        dir.path(),
        "c.toml",
        "task = \"recoverability\"\n[density]\nkind = \"incompressible-mr\"\nalpha = 1.0\nbeta = 1.0\n",
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(summary(dir.path())["verdict"], "infinite-violation");
    let csv = std::fs::read_to_string(dir.path().join("out/detail.csv")).unwrap();
    assert!(csv.starts_with("label,matrix,lhs,rhs,residual,residual_kind,violates\n"));
    assert!(csv.contains(",inf,"));
    assert!(csv.contains("infinite-violation"));
}

#[test]
fn json_configs_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config(
        dir.path(),
        "c.json",
        r#"{"task": "gamma-limit", "gamma_limit": {"dim": 2, "matrices": 3, "compare_density": true}}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert_eq!(s["config"]["gamma_limit"]["invariance_trials"], 50);
    assert_eq!(s["result"]["beta"], 0.0);
}

#[test]
fn summary_embeds_resolved_config_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config(dir.path(), "c.toml", "task = \"recoverability\"\n", &["--seed", "42", "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let cfg = &summary(dir.path())["config"];
    assert_eq!(cfg["seed"], 42);
    assert_eq!(cfg["threads"], 2);
    assert_eq!(cfg["quad_order"], 32);
    assert_eq!(cfg["density"]["kind"], "frobenius-squared");
    assert_eq!(cfg["convexify"]["max_sweeps"], 50);
}

#[test]
fn invalid_configs_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let typo = with_config(dir.path(), "a.toml", "task = \"recoverability\"\nquad_ordr = 8\n", &[]);
    assert_eq!(typo.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&typo.stderr).contains("quad_ordr"));
    let bad_task = with_config(dir.path(), "b.toml", "task = \"minimize\"\n", &[]);
    assert_eq!(bad_task.status.code(), Some(64));
    let bad_step = with_config(dir.path(), "c.toml", "task = \"convexify\"\n[convexify]\nstep = 0.3\n", &[]);
    assert_eq!(bad_step.status.code(), Some(64));
    let missing = perilimit(&["--config", dir.path().join("none.toml").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(64));
    let bad_flag = perilimit(&["--task", "nope"]);
    assert_eq!(bad_flag.status.code(), Some(64));
}

#[test]
fn unsettled_envelope_exits_one_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config(
        dir.path(),
        "c.toml",
        "task = \"convexify\"\n[density]\nkind = \"profile-frobenius\"\ng = { kind = \"well\" }\n[convexify]\ndim = 2\nmode = \"full\"\nbound = 2.0\nstep = 0.25\nmax_sweeps = 1\n",
        &[],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did not settle"));
    let s = summary(dir.path());
    assert_eq!(s["status"], "diverged");
    assert!(s["diagnostic"].is_string());
}

#[test]
fn double_well_envelope_is_relaxed() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config(
        dir.path(),
        "c.toml",
        "task = \"convexify\"\n[density]\nkind = \"profile-frobenius\"\ng = { kind = \"well\" }\n[convexify]\ndim = 1\nbound = 2.0\nstep = 0.5\n",
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(summary(dir.path())["verdict"], "relaxed");
    let csv = std::fs::read_to_string(dir.path().join("out/detail.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "c0,value,original,interior");
    // a = 0: envelope 0, original 1.
    assert!(lines.contains(&"0.0,0.0,1.0,true"), "{csv}");
}

#[test]
fn counterexamples_task_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config(dir.path(), "c.toml", "task = \"counterexamples\"\n", &["--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(dir.path());
    assert_eq!(s["verdict"], "reproduced");
    assert!(s["result"]["mooney_rivlin_inequality"]["first_failure"].is_f64());
}

#[test]
fn list_zoo_is_complete_and_stable() {
    let a = perilimit(&["--list-zoo"]);
    let b = perilimit(&["--list-zoo"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for name in ["mooney-rivlin", "neo-hookean", "incompressible-mr", "power-bond", "profile-cof"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let text = "task = \"recoverability\"\nseed = 5\n[density]\nkind = \"mooney-rivlin\"\nalpha = 1.0\nbeta = 2.0\ng = { kind = \"well\" }\n";
    let mut bytes = Vec::new();
    for threads in ["1", "4"] {
        let dir = tempfile::tempdir().unwrap();
        let out = with_config(dir.path(), "c.toml", text, &["--threads", threads, "--no-timestamp"]);
        assert_eq!(out.status.code(), Some(2));
        let mut s = summary(dir.path());
        s["config"]["threads"] = Value::Null;
        let csv = std::fs::read(dir.path().join("out/detail.csv")).unwrap();
        bytes.push((s, csv));
    }
    assert_eq!(bytes[0], bytes[1]);
}
