use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cohesive-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn instance(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cohesive")).args(args).output().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn reports_are_written_beside_the_input_by_default() {
    let dir = scratch("beside");
    let input = dir.join("gl2.json");
    std::fs::copy(instance("gl2_exterior.json"), &input).unwrap();
    let out = run(&["cohomology", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&dir.join("gl2.cohomology.report.json"));
    let dims: Vec<u64> = report["results"]["degrees"].as_array().unwrap().iter().map(|d| d["harmonic_dim"].as_u64().unwrap()).collect();
    assert_eq!(dims, vec![0, 4, 8, 4, 0]);
    assert_eq!(report["tolerances"]["core"]["residual"].as_f64(), Some(1e-9));
    assert_eq!(report["instance"]["file"], "gl2.json");
}

#[test]
fn timing_is_outside_the_stability_hash() {
    let dir = scratch("timing");
    let input = instance("dtbar_family.json");
    let a = dir.join("a");
    let b = dir.join("b");
    assert_eq!(run(&["regularize", input.to_str().unwrap(), "--out-dir", a.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(run(&["regularize", input.to_str().unwrap(), "--out-dir", b.to_str().unwrap(), "--timing"]).status.code(), Some(0));
    let ra = json(&a.join("dtbar_family.regularize.report.json"));
    let rb = json(&b.join("dtbar_family.regularize.report.json"));
    assert!(ra.get("timing").is_none());
    assert!(rb["timing"]["elapsed_ms"].as_f64().is_some());
    assert_eq!(ra["stability_hash"], rb["stability_hash"]);
}

#[test]
fn regularize_report_carries_the_closed_form_gauge() {
    let dir = scratch("regularize");
    let input = instance("dtbar_family.json");
    run(&["regularize", input.to_str().unwrap(), "--out-dir", dir.to_str().unwrap()]);
    let r = json(&dir.join("dtbar_family.regularize.report.json"));
    // J = id − (t̄²/2) M − t (t̄²/2) M′.
    let terms = r["results"]["gauge"]["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 3);
    let m = &terms[1];
    assert_eq!(m["monomial"]["tbar"], serde_json::json!([2]));
    assert_eq!(m["blocks"][0]["rows"][0][0], serde_json::json!([-0.15, -0.05]));
    assert_eq!(r["results"]["regularized_deformation"]["norm"].as_f64(), Some(0.0));
    assert_eq!(r["results"]["strongified"]["mc_residual"].as_f64(), Some(0.0));
}

#[test]
fn transfer_report_has_the_second_order_term() {
    let dir = scratch("transfer");
    let out = run(&["transfer", instance("acyclic_sum.json").to_str().unwrap(), "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&dir.join("acyclic_sum.transfer-eta.report.json"));
    let eps = r["results"]["epsilon"]["coefficients"].as_array().unwrap();
    assert_eq!(eps.len(), 1);
    assert_eq!(eps[0]["index"], serde_json::json!([2]));
    assert_eq!(eps[0]["terms"][0]["blocks"][0]["rows"], serde_json::json!([[[-1.0, 0.0]]]));
}

#[test]
fn schema_errors_exit_2_and_name_the_path() {
    let dir = scratch("schema");
    let cases = [
        (r#"{"base":{"builder":"point"},"space":[{"degree":"a","dim":1}]}"#, "space[0].degree"),
        (r#"{"base":{"builder":"point"},"space":[{"degree":0,"dim":1}],"connection":[{"basis":"q","end_degree":1,"blocks":[]}]}"#, "connection[0].basis"),
        (r#"{"base":{"builder":"torus"},"space":[]}"#, "base"),
        (r#"{"base":{"builder":"point"},"space":[{"degree":0,"dim":1}],"extra":1}"#, "extra"),
    ];
    for (i, (text, path)) in cases.iter().enumerate() {
        let input = dir.join(format!("bad{i}.json"));
        std::fs::write(&input, text).unwrap();
        let out = run(&["check", input.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "case {i}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(path), "case {i}: {err}");
    }
}

#[test]
fn non_flat_connections_exit_2() {
    let dir = scratch("nonflat");
    // A: ℂ → ℂ → ℂ with both maps 1, so A² ≠ 0.
    let text = r#"{"base":{"builder":"point"},"space":[{"degree":0,"dim":1},{"degree":1,"dim":1},{"degree":2,"dim":1}],
      "connection":[{"basis":"1","end_degree":1,"blocks":[{"source_degree":0,"rows":[[[1,0]]]},{"source_degree":1,"rows":[[[1,0]]]}]}]}"#;
    let input = dir.join("nonflat.json");
    std::fs::write(&input, text).unwrap();
    let out = run(&["check", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not flat"));
}

#[test]
fn strict_profile_turns_small_curvature_into_exit_3() {
    let dir = scratch("strict");
    // Curvature 1e-10: flat by default, not under the strict profile.
    let text = r#"{"base":{"builder":"point"},"space":[{"degree":0,"dim":1},{"degree":1,"dim":1},{"degree":2,"dim":1}],
      "connection":[{"basis":"1","end_degree":1,"blocks":[{"source_degree":0,"rows":[[[1,0]]]},{"source_degree":1,"rows":[[[1e-10,0]]]}]}]}"#;
    let input = dir.join("almost.json");
    std::fs::write(&input, text).unwrap();
    assert_eq!(run(&["check", input.to_str().unwrap()]).status.code(), Some(0));
    let out = run(&["check", input.to_str().unwrap(), "--tolerance-profile", "strict"]);
    assert_eq!(out.status.code(), Some(3));
    let r = json(&dir.join("almost.check.report.json"));
    assert_eq!(r["status"]["ok"], false);
    assert_eq!(r["status"]["failed_check"], "flatness");
    assert_eq!(r["tolerances"]["profile"]["name"], "strict");
}

#[test]
fn missing_seed_and_missing_homotopy_exit_2() {
    let gl2 = instance("gl2_exterior.json");
    let out = run(&["solve", gl2.to_str().unwrap(), "--seed", "nope", "--out-dir", scratch("seed").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["transfer", gl2.to_str().unwrap(), "--out-dir", scratch("homotopy").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn batch_reports_every_input() {
    let dir = scratch("batch");
    let inputs: Vec<String> = ["gl2_exterior.json", "acyclic_sum.json", "dtbar_family.json"].iter().map(|f| instance(f).display().to_string()).collect();
    let mut args = vec!["check", "--batch", "--out-dir", dir.to_str().unwrap()];
    args.extend(inputs.iter().map(String::as_str));
    let out = run(&args);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 3);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
}
