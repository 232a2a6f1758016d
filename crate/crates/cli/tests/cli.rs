use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_invmasa"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stderr)))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("invmasa-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn gen_embed_verify_pipeline() {
    let instance = scratch("pipeline-instance.json");
    let result = scratch("pipeline-result.json");
    let i = instance.to_str().unwrap();
    let r = result.to_str().unwrap();
    assert!(run(&["masa", "gen", "--blocks", "2,2", "--perm", "1,0", "--seed", "7", "--output", i]).status.success());
    let embed = run(&["masa", "embed", "--input", i, "--output", r]);
    assert_eq!(embed.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&std::fs::read(&result).unwrap()).unwrap();
    assert_eq!(doc["certificate"]["passed"], true);
    let verify = run(&["masa", "verify", "--input", i, "--algebra", r, "--mode", "masa"]);
    assert_eq!(verify.status.code(), Some(0));
    assert_eq!(json(&verify)["masa"]["commutant_dimension"], 4);
}

#[test]
fn block_permutation_keeps_diagonal_invariant() {
    let instance = scratch("perm-instance.json");
    let i = instance.to_str().unwrap();
    let gen = run(&["masa", "gen", "--blocks", "1,1,1", "--perm", "1,2,0", "--trivial-v", "--counting", "--output", i]);
    assert!(gen.status.success());
    let verify = run(&["masa", "verify", "--input", i, "--mode", "invariance"]);
    assert_eq!(verify.status.code(), Some(0));
    assert_eq!(json(&verify)["invariance"]["invariant"], true);
}

#[test]
fn exit_codes() {
    let hadamard = data("data/hadamard_diagonal.json");
    assert_eq!(run(&["masa", "embed", "--input", hadamard.to_str().unwrap()]).status.code(), Some(3));
    let shift = data("data/truncated_shift.json");
    let out = run(&["masa", "verify", "--input", shift.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NotUnitary"));
    assert_eq!(run(&["masa", "gen", "--blocks", "1,2", "--perm", "1,0"]).status.code(), Some(3));
    assert_eq!(run(&["masa", "embed", "--input", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(run(&["cex", "orbit", "--a", "0.25", "--stats"]).status.code(), Some(2));
    assert_eq!(run(&["cex", "defect", "--a", "0.1"]).status.code(), Some(2));
    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn combinatorics_matches_golden_file() {
    let out = run(&["cex", "combinatorics"]);
    assert!(out.status.success());
    let golden = std::fs::read_to_string(data("golden/combinatorics.json")).unwrap();
    let mut golden_doc: Value = serde_json::from_str(&golden).unwrap();
    let mut doc = json(&out);
    for d in [&mut doc, &mut golden_doc] {
        d.as_object_mut().unwrap().remove("tool_version");
    }
    assert_eq!(doc, golden_doc);
    assert_eq!(run(&["cex", "combinatorics"]).stdout, out.stdout);
}

/// The α tables in the golden file against the defining formulas on raw triples.
#[test]
fn golden_alpha_tables_follow_the_formulas() {
    let doc: Value =
        serde_json::from_str(&std::fs::read_to_string(data("golden/combinatorics.json")).unwrap()).unwrap();
    let parse = |s: &str| -> [i8; 3] {
        let v: Vec<i8> = s.trim_matches(|c| c == '(' || c == ')').split(',').map(|x| x.parse().unwrap()).collect();
        [v[0], v[1], v[2]]
    };
    let canon = |t: [i8; 3]| -> [i8; 3] {
        match t.iter().find(|&&c| c != 0) {
            Some(&l) if l < 0 => t.map(|c| -c),
            _ => t,
        }
    };
    let classes: Vec<[i8; 3]> = doc["classes"].as_array().unwrap().iter().map(|c| parse(c.as_str().unwrap())).collect();
    assert_eq!(classes.len(), 14);
    type Rule = fn([i8; 3]) -> [i8; 3];
    let rules: [(&str, Rule); 3] = [("J1", |[p, q, r]| [q, -p, r]), ("J2", |[p, q, r]| [r, p, q]), ("J3", |t| t)];
    for (name, rule) in rules {
        let table = doc["alpha"][name].as_array().unwrap();
        for (c, image) in classes.iter().zip(table) {
            assert_eq!(canon(rule(*c)), parse(image.as_str().unwrap()), "{name} on {c:?}");
        }
    }
}

#[test]
fn return_map_and_defect_examples() {
    let out = run(&["cex", "return-map", "--a", "0.17677669529663687", "--samples", "10000"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["max_error"].as_f64().unwrap() <= 1e-11);

    let cand = data("data/constant_diag.json");
    let out = run(&["cex", "defect", "--a", "0.17677669529663687", "--candidate", cand.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["defect"]["max_defect"].as_f64().unwrap() - 2.0).abs() <= 1e-9);
}

#[test]
fn rational_rotation_warns_but_succeeds() {
    let out = run(&["cex", "orbit", "--a", "0.2", "--steps", "100", "--stats"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!json(&out)["rotation"]["rational_warnings"].as_array().unwrap().is_empty());
}

#[test]
fn reports_round_trip_and_repeat() {
    let args = [
        "cex",
        "propagate",
        "--a",
        "0.17677669529663687",
        "--d",
        "0.6",
        "--e",
        "0.8",
        "--theta-arg",
        "-1.2",
        "--steps",
        "50",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let doc = json(&a);
    let again: Value = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
    assert_eq!(again, doc);
    assert_eq!(doc["consistent"], true);
    assert_eq!(doc["trajectory"].as_array().unwrap().len(), 51);
}
