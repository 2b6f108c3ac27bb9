use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn parlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parlab"))
        .current_dir(dir)
        .env_remove("PARLAB_WORKERS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn pv_enum_lists_vectors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = parlab(tmp.path(), &["pv", "enum", "--n", "4"]);
    assert!(out.status.success());
    let v = json_of(&out);
    assert_eq!(v["count"], 7);
    assert_eq!(v["vectors"][0], "+++-");
    assert_eq!(v["vectors"][6], "+---");
}

#[test]
fn partition_evaluations() {
    let tmp = tempfile::tempdir().unwrap();
    let v = json_of(&parlab(
        tmp.path(),
        &[
            "par",
            "eval",
            "--k",
            "2",
            "--n",
            "6",
            "--bits",
            "110101101001",
        ],
    ));
    assert_eq!(v["value"], 1);
    assert_eq!(v["numbers"], serde_json::json!([3, 1, 1, 2, 2, 1]));
    let v = json_of(&parlab(
        tmp.path(),
        &["gpar", "eval", "--bits", "110101101000"],
    ));
    assert_eq!(v["value"], 0);
    let v = json_of(&parlab(
        tmp.path(),
        &["gpar", "eval", "--bits", "1001011010111"],
    ));
    assert_eq!(v["value"], 1);
    assert_eq!(v["k"], 3);
}

#[test]
fn unique_build_and_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let v = json_of(&parlab(tmp.path(), &["unique", "build", "--pv", "+--"]));
    assert_eq!(v["unique"], true);
    assert_eq!(v["signed_sum"], "0");
    let v = json_of(&parlab(
        tmp.path(),
        &["unique", "verify", "--omega", "3,2,2,1,6", "--pv", "+++--"],
    ));
    assert_eq!(v["unique"], true);
    let v = json_of(&parlab(
        tmp.path(),
        &["unique", "verify", "--omega", "3,1,1,2,1", "--pv", "++---"],
    ));
    assert_eq!(v["equal_split"], true);
    assert_eq!(v["unique"], false);
}

#[test]
fn chain_and_trial() {
    let tmp = tempfile::tempdir().unwrap();
    let v = json_of(&parlab(tmp.path(), &["chain", "--k", "3", "--n", "3"]));
    assert_eq!(v["all_strict"], true);
    let seeded = json_of(&parlab(
        tmp.path(),
        &["chain", "--k", "3", "--n", "3", "--seed", "5"],
    ));
    assert_eq!(seeded["z_size"], v["z_size"]);
    let v = json_of(&parlab(
        tmp.path(),
        &[
            "trial",
            "--phi",
            "partition",
            "--k",
            "3",
            "--n",
            "3",
            "--params",
            "pv-all",
            "--bits",
            "011001010",
        ],
    ));
    // 3, 1, 2 splits as 3 = 1 + 2
    assert_eq!(v["value"], 1);
    let v = json_of(&parlab(
        tmp.path(),
        &[
            "trial",
            "--phi",
            "switch-and",
            "--params",
            "10,01",
            "--bits",
            "01",
        ],
    ));
    assert_eq!(v["value"], 1);
}

#[test]
fn circuit_round_trip_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = parlab(
        tmp.path(),
        &[
            "circuit", "build", "--kind", "adder", "--k", "2", "--output", "z1",
        ],
    );
    assert!(out.status.success());
    let path = write(
        tmp.path(),
        "z1.json",
        &String::from_utf8(out.stdout).unwrap(),
    );
    // x=11, y=01: sum 100, so z1 = 0
    let v = json_of(&parlab(
        tmp.path(),
        &["circuit", "eval", "--file", &path, "--bits", "1101"],
    ));
    assert_eq!(v["value"], 0);
    let v = json_of(&parlab(
        tmp.path(),
        &["circuit", "eval", "--file", &path, "--bits", "0101"],
    ));
    assert_eq!(v["value"], 1);
    let v = json_of(&parlab(tmp.path(), &["circuit", "count", "--file", &path]));
    assert!(v["d"].as_u64().unwrap() <= v["d_prime"].as_u64().unwrap());

    let bundle = json_of(&parlab(
        tmp.path(),
        &["circuit", "build", "--kind", "subtractor", "--k", "2"],
    ));
    assert!(bundle["outputs"]["g"].is_object());
    let bad = parlab(
        tmp.path(),
        &[
            "circuit", "build", "--kind", "adder", "--k", "2", "--output", "nope",
        ],
    );
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn fe_and_pss_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let samples = write(
        tmp.path(),
        "s.json",
        r#"{"arity":2,"points":[{"x":"00","v":0},{"x":"01","v":1},{"x":"10","v":1},{"x":"11","v":0}]}"#,
    );
    let v = json_of(&parlab(tmp.path(), &["fe", "solve", "--samples", &samples]));
    assert_eq!(v["min_d"], 3);
    assert_eq!(v["status"], "solved");

    let f = write(tmp.path(), "f.json", r#"{"arity":2,"table":"6"}"#);
    let pts = write(tmp.path(), "p.json", r#"["00","01","10"]"#);
    let out = parlab(tmp.path(), &["pss", "check", "--samples", &pts, "--fn", &f]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["verdict"], "not-proper");
    // a sampling set file is accepted as a point list
    let out = parlab(
        tmp.path(),
        &["pss", "check", "--samples", &samples, "--fn", &f],
    );
    assert_eq!(json_of(&out)["verdict"], "proper");

    let v = json_of(&parlab(tmp.path(), &["pss", "min", "--fn", &f]));
    assert_eq!(v["size"], 4);

    let c = parlab(
        tmp.path(),
        &[
            "circuit", "build", "--kind", "adder", "--k", "1", "--output", "z0",
        ],
    );
    let c = write(tmp.path(), "c.json", &String::from_utf8(c.stdout).unwrap());
    let v = json_of(&parlab(
        tmp.path(),
        &["pss", "from-circuit", "--fn", &f, "--circuit", &c],
    ));
    assert_eq!(v["terminated"], true);
    assert_eq!(v["circuit_d"], 3);
}

#[test]
fn cap_limited_runs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write(tmp.path(), "f.json", r#"{"arity":3,"table":"96"}"#);
    let pts = write(
        tmp.path(),
        "p.json",
        r#"["000","001","010","011","100","101","110","111"]"#,
    );
    let out = parlab(
        tmp.path(),
        &[
            "pss",
            "check",
            "--samples",
            &pts,
            "--fn",
            &f,
            "--node-budget",
            "10",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["verdict"], "indeterminate");
    let out = parlab(
        tmp.path(),
        &[
            "pss",
            "check",
            "--samples",
            &pts,
            "--fn",
            &f,
            "--gate-cap",
            "2",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn audit_reports_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let v = json_of(&parlab(tmp.path(), &["audit", "--n", "3"]));
    assert_eq!(v["mpss_lower"], 4);
    assert_eq!(v["gate_lower"], 2);
    assert_eq!(v["n"], 9);
}

#[test]
fn verify_persists_replayable_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "--out-dir",
        "out",
        "verify",
        "--scenario",
        "wj-chain",
        "--k",
        "3",
        "--n",
        "3",
    ];
    let first = parlab(tmp.path(), &args);
    assert!(first.status.success());
    let a = json_of(&first);
    assert_eq!(a["body"]["verdict"], "pass");
    let second = json_of(&parlab(tmp.path(), &args));
    assert_eq!(a["body"], second["body"]);
    assert_eq!(a["body_sha256"], second["body_sha256"]);

    let files: Vec<_> = fs::read_dir(tmp.path().join("out")).unwrap().collect();
    assert_eq!(files.len(), 1);
    let path = files[0].as_ref().unwrap().path();
    let name = path.file_name().unwrap().to_str().unwrap().to_string();
    assert!(name.starts_with("wj-chain-"));
    let shown = json_of(&parlab(
        tmp.path(),
        &["report", "show", path.to_str().unwrap()],
    ));
    assert_eq!(shown["body"], a["body"]);
    assert_eq!(shown["schema"], 1);

    // tampering breaks the hash check
    let text = fs::read_to_string(&path)
        .unwrap()
        .replace("\"pass\"", "\"fail\"");
    fs::write(&path, text).unwrap();
    let out = parlab(tmp.path(), &["report", "show", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn worker_flag_does_not_change_bodies() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |w: &str| {
        json_of(&parlab(
            tmp.path(),
            &[
                "--workers",
                w,
                "verify",
                "--no-persist",
                "--scenario",
                "fe-oracle",
                "--samples",
                "30",
            ],
        ))
    };
    assert_eq!(run("1")["body"], run("4")["body"]);
}

#[test]
fn suite_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = write(tmp.path(), "empty.json", r#"{"schema":1,"scenarios":[]}"#);
    let out = parlab(tmp.path(), &["verify", "--no-persist", "--suite", &empty]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["total"], 0);

    let perturbed = write(
        tmp.path(),
        "bad.json",
        r#"{"schema":1,"scenarios":[{"id":"bound-audit"},{"id":"uniqueness","params":{"n_min":3,"n_max":4,"perturb":true}}]}"#,
    );
    let out = parlab(
        tmp.path(),
        &["verify", "--no-persist", "--suite", &perturbed],
    );
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert_eq!(v["failed"], 1);
    assert_eq!(v["passed"], 1);

    let capped = write(
        tmp.path(),
        "capped.json",
        r#"{"schema":1,"scenarios":[{"id":"xor-mpss","params":{"node_budget":5}},{"id":"wj-chain-k1"}]}"#,
    );
    let out = parlab(tmp.path(), &["verify", "--no-persist", "--suite", &capped]);
    assert_eq!(out.status.code(), Some(2));

    let unknown = write(
        tmp.path(),
        "unknown.json",
        r#"{"schema":1,"scenarios":[{"id":"nope"}]}"#,
    );
    let out = parlab(tmp.path(), &["verify", "--suite", &unknown]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parsing"));
}

#[test]
fn default_suite_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let suite = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/default.json");
    let out = parlab(tmp.path(), &["verify", "--suite", suite.to_str().unwrap()]);
    let v = json_of(&out);
    assert_eq!(out.status.code(), Some(0), "{v}");
    assert_eq!(v["total"], 12);
    assert_eq!(v["failed"], 0);
    assert_eq!(v["recorded"], 1);
    assert_eq!(
        fs::read_dir(tmp.path().join("reports")).unwrap().count(),
        12
    );
}
