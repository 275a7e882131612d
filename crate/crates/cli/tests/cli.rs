//! End-to-end checks of the command-line surface: exit-code taxonomy,
//! byte-level determinism, and pipeline hash stability.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_schottky"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("schottky-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn construct_is_byte_identical_under_a_fixed_seed() {
    let dir = tmp_dir("determinism");
    let out1 = dir.join("g1.json");
    let out2 = dir.join("g2.json");
    for out in [&out1, &out2] {
        let status = bin()
            .args([
                "construct",
                "--model",
                "P:1",
                "--rank",
                "2",
                "--seed",
                "7",
                "--out",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let b1 = std::fs::read(&out1).unwrap();
    let b2 = std::fs::read(&out2).unwrap();
    assert_eq!(b1, b2, "construct outputs differ between identical runs");
}

#[test]
fn parity_obstruction_exits_with_code_3() {
    let dir = tmp_dir("parity");
    let out = dir.join("g.json");
    let output = bin()
        .args(["construct", "--model", "Qeven:3", "--rank", "2", "--seed", "1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("PARITY_OBSTRUCTION"),
        "stderr was: {stderr}"
    );
    assert!(!out.exists());
}

#[test]
fn malformed_group_file_exits_with_code_1() {
    let dir = tmp_dir("malformed");
    let group = dir.join("bad.json");
    std::fs::write(&group, b"{ not json").unwrap();
    let output = bin()
        .args(["certify", "--group"])
        .arg(&group)
        .args(["--samples", "10"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).starts_with("ERROR "));
}

#[test]
fn pipeline_round_trip_keeps_the_group_hash() {
    let dir = tmp_dir("roundtrip");
    let group = dir.join("group.json");
    let cert = dir.join("cert.json");
    let inv = dir.join("invariants.json");

    let status = bin()
        .args(["construct", "--model", "P:1", "--rank", "2", "--seed", "11", "--out"])
        .arg(&group)
        .status()
        .unwrap();
    assert!(status.success());

    let status = bin()
        .args(["certify", "--group"])
        .arg(&group)
        .args(["--samples", "150", "--max-word-len", "3", "--out"])
        .arg(&cert)
        .status()
        .unwrap();
    assert!(status.success(), "certificate must pass");

    let status = bin()
        .args(["invariants", "--group"])
        .arg(&group)
        .args(["--samples", "10", "--out"])
        .arg(&inv)
        .status()
        .unwrap();
    assert!(status.success());

    let h0 = read_json(&group)["header"]["group_hash"].clone();
    let h1 = read_json(&cert)["header"]["group_hash"].clone();
    let h2 = read_json(&inv)["header"]["group_hash"].clone();
    assert!(h0.is_string());
    assert_eq!(h0, h1, "certify re-derived a different group");
    assert_eq!(h0, h2, "invariants re-derived a different group");

    // every artifact records the seed and tolerances it used
    for path in [&group, &cert, &inv] {
        let v = read_json(path);
        assert_eq!(v["header"]["seed"], 11);
        assert!(v["header"]["tolerances"]["rank_rel"].is_number());
        assert_eq!(v["header"]["tool_version"], env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn certificate_failure_exits_with_code_2() {
    let dir = tmp_dir("certfail");
    let group = dir.join("group.json");
    let status = bin()
        .args(["construct", "--model", "P:1", "--rank", "2", "--seed", "17", "--out"])
        .arg(&group)
        .status()
        .unwrap();
    assert!(status.success());

    // sabotage the calibration: blow the neighborhoods up to eps = 0.49
    // while keeping |lambda| = (1 - eps)/eps so the file still validates
    let mut v = read_json(&group);
    let eps = 0.49;
    let lam = (1.0 - eps) / eps;
    v["payload"]["epsilons"] = serde_json::json!([eps, eps]);
    v["payload"]["lambdas"] = serde_json::json!([[lam, 0.0], [lam, 0.0]]);
    std::fs::write(&group, serde_json::to_vec_pretty(&v).unwrap()).unwrap();

    let output = bin()
        .args(["certify", "--group"])
        .arg(&group)
        .args(["--samples", "60", "--max-word-len", "2"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&output.stderr));
}

#[test]
fn limitset_csv_has_the_word_count_rows() {
    let dir = tmp_dir("limitset");
    let group = dir.join("group.json");
    let csv = dir.join("cloud.csv");
    bin()
        .args(["construct", "--model", "P:1", "--rank", "2", "--seed", "23", "--out"])
        .arg(&group)
        .status()
        .unwrap();
    let status = bin()
        .args(["limitset", "--group"])
        .arg(&group)
        .args(["--depth", "2", "--csv"])
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows = text.lines().count() - 1; // header
    // N_2 = 4 * 3 words, 4 base points
    assert_eq!(rows, 12 * 4);
}

#[test]
fn construct_with_subsphere_restricts_the_moves() {
    let dir = tmp_dir("subsphere");
    let group = dir.join("group.json");
    let status = bin()
        .args([
            "construct",
            "--model",
            "IGr:2",
            "--rank",
            "2",
            "--seed",
            "29",
            "--subsphere",
            "1",
            "--out",
        ])
        .arg(&group)
        .status()
        .unwrap();
    assert!(status.success());
    let v = read_json(&group);
    // the move acts on the so(3) block: rows/cols past index 2 are identity
    let mv = &v["payload"]["moves"][1]["matrix"];
    let cols = mv["cols"].as_u64().unwrap() as usize;
    let re = mv["re"].as_array().unwrap();
    let im = mv["im"].as_array().unwrap();
    for i in 3..cols {
        for j in 0..cols {
            if i == j {
                continue;
            }
            let idx = i * cols + j;
            assert!(re[idx].as_f64().unwrap().abs() < 1e-12);
            assert!(im[idx].as_f64().unwrap().abs() < 1e-12);
        }
    }
}

#[test]
fn report_renders_an_artifact() {
    let dir = tmp_dir("report");
    let group = dir.join("group.json");
    bin()
        .args(["construct", "--model", "P:1", "--rank", "1", "--seed", "2", "--out"])
        .arg(&group)
        .status()
        .unwrap();
    let output = bin().args(["report", "--input"]).arg(&group).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("header.tool_version"));
}
