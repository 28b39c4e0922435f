//! End-to-end runs of the `nvalue` binary: output shape and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nvalue::instance::{queens_instance, save_instance};
use nvalue::lp::parse_lp;
use nvalue::{Instance, Kind};

fn nvalue(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvalue"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, inst: &Instance) -> PathBuf {
    let path = dir.join(name);
    save_instance(inst, &path).unwrap();
    path
}

fn running_example(kind: Kind) -> Instance {
    Instance::from_domains(
        5,
        vec![
            vec![1, 2, 3, 5],
            vec![2],
            vec![2, 3, 4],
            vec![4],
            vec![3, 4],
        ],
        vec![1, 2, 5],
        kind,
    )
    .unwrap()
}

fn separation() -> Instance {
    Instance::from_domains(4, vec![vec![1, 2], vec![3, 4]], vec![1], Kind::NValue).unwrap()
}

#[test]
fn solve_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "ex.json", &running_example(Kind::NValue));
    let out = nvalue(&[
        "solve",
        "--model",
        "nvalue-bc",
        "--instance",
        path.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["outcome"], "sat");
    let sol: Vec<i64> = serde_json::from_value(v["solution"].clone()).unwrap();
    assert_eq!(sol.len(), 5);
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let sep = write(dir.path(), "sep.json", &separation());
    let unsat = nvalue(&[
        "solve",
        "--model",
        "occs",
        "--instance",
        sep.to_str().unwrap(),
    ]);
    assert_eq!(unsat.status.code(), Some(1), "{}", stdout(&unsat));

    let q = write(dir.path(), "q6.json", &queens_instance(6, 3));
    let limited = nvalue(&[
        "solve",
        "--model",
        "pyramid-bc",
        "--instance",
        q.to_str().unwrap(),
        "--node-limit",
        "1",
    ]);
    assert_eq!(limited.status.code(), Some(2), "{}", stdout(&limited));

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"d":3,"vars":[{"name":"X1","dom":[0,1]}],"N":{"dom":[1]},"kind":"atmost"}"#,
    )
    .unwrap();
    let err = nvalue(&[
        "solve",
        "--model",
        "occs",
        "--instance",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(err.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&err.stderr).starts_with("error:"));
}

#[test]
fn check_match_and_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let ex = write(dir.path(), "ex.json", &running_example(Kind::AtMost));
    for (kind, model) in [
        ("bc", "pyramid-bc"),
        ("bc", "pyramid-fast"),
        ("rc", "pyramid-rc"),
    ] {
        let out = nvalue(&[
            "check",
            "--instance",
            ex.to_str().unwrap(),
            "--kind",
            kind,
            "--model",
            model,
        ]);
        assert_eq!(out.status.code(), Some(0), "{model}: {}", stdout(&out));
        assert!(stdout(&out).starts_with("MATCH"));
    }
    // The occurrence model does not detect the separation instance's failure.
    let sep = write(dir.path(), "sep.json", &separation());
    let out = nvalue(&[
        "check",
        "--instance",
        sep.to_str().unwrap(),
        "--kind",
        "bc",
        "--model",
        "occs",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("disentailment"));
}

#[test]
fn bench_and_fuzz() {
    let out = nvalue(&[
        "bench",
        "queens",
        "--n",
        "5",
        "--nvalues",
        "3",
        "--model",
        "pyramid-bc",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("SAT"), "{}", stdout(&out));

    let out = nvalue(&["fuzz", "--count", "30", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).trim_end().ends_with("0 mismatches"));
}

#[test]
fn export_lp_with_lazy_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let q = write(dir.path(), "q5.json", &queens_instance(5, 3));
    let lp = dir.path().join("q5.lp");
    let out = nvalue(&[
        "export-lp",
        "--encoding",
        "linear",
        "--lazy-pyramid",
        "--instance",
        q.to_str().unwrap(),
        "--out",
        lp.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let model = parse_lp(&std::fs::read_to_string(&lp).unwrap()).unwrap();
    assert_eq!(model.lazy_rows.len(), 300);
    let sidecar = std::fs::read_to_string(dir.path().join("q5.lp.lazy")).unwrap();
    assert_eq!(
        sidecar.lines().filter(|l| l.starts_with("pyr_")).count(),
        300
    );

    let direct = dir.path().join("q5-direct.lp");
    let out = nvalue(&[
        "export-lp",
        "--encoding",
        "direct",
        "--instance",
        q.to_str().unwrap(),
        "--out",
        direct.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let model = parse_lp(&std::fs::read_to_string(&direct).unwrap()).unwrap();
    let card = model.rows.iter().find(|r| r.name == "card").unwrap();
    assert_eq!(card.rhs, 3);
    assert!(!dir.path().join("q5-direct.lp.lazy").exists());
}
