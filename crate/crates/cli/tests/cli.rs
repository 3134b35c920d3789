//! End-to-end checks of the binary: exit codes, JSON shapes, and the
//! worked examples from the command documentation.

use std::process::Command;

fn jetflag(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_jetflag"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
        out.status.code().unwrap_or(-1),
    )
}

fn json(args: &[&str]) -> serde_json::Value {
    let (stdout, stderr, code) = jetflag(args);
    assert_eq!(code, 0, "stderr: {stderr}");
    serde_json::from_str(&stdout).expect("valid JSON on stdout")
}

#[test]
fn partitions_of_a_doubled_axis() {
    let v = json(&["mi", "partitions", "--index", "2.0"]);
    let parts = v.as_array().unwrap();
    assert_eq!(parts.len(), 4);
    let doubled = parts
        .iter()
        .find(|p| p["blocks"].as_array().unwrap().len() == 1
            && p["blocks"][0] == "1.0"
            && p["remainder"] == "1.0")
        .unwrap();
    assert_eq!(doubled["multiplicity"], 2);
}

#[test]
fn expression_commands() {
    let v = json(&["expr", "diff", "--expr", "sqrt(1 + p^2)", "--var", "p"]);
    assert_eq!(v["derivative"], "p/sqrt(1 + p^2)");
    let v = json(&[
        "expr",
        "eval",
        "--expr",
        "sin(x)^2 + cos(x)^2",
        "--env",
        r#"{"x": 0.7}"#,
    ]);
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn prolongation_of_a_parabola() {
    let v = json(&[
        "jet", "prolong", "--n", "1", "--k", "2", "--section", r#"["x1^2"]"#, "--at", "1",
    ]);
    assert_eq!(v["x1"], 1.0);
    assert_eq!(v["u1_0"], 1.0);
    assert_eq!(v["u1_1"], 2.0);
    assert_eq!(v["u1_2"], 2.0);
}

#[test]
fn involutivity_pipeline_on_the_contact_form() {
    let dist = r#"{"vars": {"x": ["x"], "u": ["u", "p"]},
                   "forms": [{"dx": {"x": "-p"}, "du": {"u": "1"}}]}"#;
    let v = json(&["inv", "eqs", "--dist", dist, "--r", "1"]);
    assert_eq!(v["f1"][0]["expr"], "-p + u_1");
    assert_eq!(v["f2"][0]["expr"], "0");
    let point = r#"{"x": 0.0, "u": 1.0, "p": 0.5, "u_1": 0.5, "p_1": 0.3}"#;
    let v = json(&["inv", "check", "--dist", dist, "--r", "1", "--point", point]);
    assert_eq!(v["involutive"], true);
    let v = json(&[
        "inv", "consequences", "--dist", dist, "--r", "1", "--samples", "10", "--seed", "1",
    ]);
    assert_eq!(v["skipped"], 0);
    assert!(v["max_residual"].as_f64().unwrap() < 1e-10);
}

#[test]
fn flag_chart_conversion_roundtrip() {
    let point = r#"{"x1": 0.2, "t": 0.5, "u1_0_0": 1.0, "u1_1_0": 3.0,
                    "u1_0_1": 7.0, "tD_1": 2.0}"#;
    let ii = json(&[
        "flag", "convert", "--n", "2", "--m", "1", "--k", "1", "--to", "ii", "--point",
        point,
    ]);
    assert_eq!(ii["w1_0_0_1"], 17.0);
    let back = json(&[
        "flag",
        "convert",
        "--n",
        "2",
        "--m",
        "1",
        "--k",
        "1",
        "--to",
        "i",
        "--point",
        &ii.to_string(),
    ]);
    assert_eq!(back["point"]["u1_1_0"], 3.0);
    assert_eq!(back["peel_consistency"], 0.0);
    let dims = json(&["flag", "dims", "--n", "2", "--m", "1", "--k", "1"]);
    assert_eq!(dims["flag_dim"], 6);
}

#[test]
fn cauchy_pipeline() {
    let profiles = r#"{"f": "x1", "g": ["x1^2"], "h": [["1", "0"]]}"#;
    let built = json(&[
        "cauchy", "build", "--n", "2", "--m", "1", "--K", "2", "--profiles", profiles,
        "--at", "0",
    ]);
    assert_eq!(built["tD_1"], 1.0);
    assert_eq!(built["u1_2_0"], 2.0);
    assert_eq!(built["u1_1_0"], -1.0);
    let p_image = json(&[
        "cauchy",
        "project",
        "--n",
        "2",
        "--m",
        "1",
        "--K",
        "2",
        "--map",
        "p",
        "--point",
        &built.to_string(),
    ]);
    // t becomes x2 and the surface slopes are dropped.
    assert_eq!(p_image["x2"], built["t"]);
    assert!(p_image.get("tD_1").is_none());
    let n_image = json(&[
        "cauchy",
        "project",
        "--n",
        "2",
        "--m",
        "1",
        "--K",
        "2",
        "--map",
        "n",
        "--point",
        &built.to_string(),
    ]);
    // The n-image carries the value jets of g.
    assert_eq!(n_image["u1_1_0"], 0.0);
    assert_eq!(n_image["u1_2_0"], 2.0);

    let expand = json(&[
        "cauchy", "expand", "--n", "2", "--m", "1", "--K", "3", "--a", "1", "--l", "0",
        "--b", "1",
    ]);
    assert_eq!(expand["expr"], "tD_1*u1_1_1 + u1_2_0");

    let profiles2 = r#"{"f": "x1", "g": ["x1^2"], "h": [["2", "0"]]}"#;
    let report = json(&[
        "cauchy",
        "transversal",
        "--n",
        "2",
        "--m",
        "1",
        "--K",
        "2",
        "--profiles",
        profiles,
        "--profiles2",
        profiles2,
        "--samples",
        "5",
        "--seed",
        "0",
    ]);
    assert_eq!(report["full_rank"], true);
    assert_eq!(report["distinct_everywhere"], true);
}

#[test]
fn variational_commands() {
    let v = json(&["var", "tc", "--f", "sqrt(1 + p^2)"]);
    let tc = v["transversality"].as_str().unwrap();
    assert!(tc.contains("xG"), "{tc}");
    let v = json(&[
        "var",
        "tc-cylinder",
        "--f",
        "p^2/2",
        "--phi",
        r#"{"x": "xi", "y": "eta"}"#,
    ]);
    assert_eq!(v["boundary_expr"], "etap");

    let sol = json(&[
        "var",
        "columbus",
        "--g1",
        r#"{"x": "cos(s)", "y": "sin(s)", "domain": [-3.2, 3.2]}"#,
        "--g2",
        r#"{"x": "3", "y": "s", "domain": [-2, 2]}"#,
        "--init",
        "0.4,-0.3",
    ]);
    assert!((sol["length"].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert!(sol["iterations"].as_u64().unwrap() <= 25);
}

#[test]
fn svg_emission() {
    let dir = std::env::temp_dir().join("jetflag-svg-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("columbus.svg");
    let (_, stderr, code) = jetflag(&[
        "var",
        "columbus",
        "--g1",
        r#"{"x": "cos(s)", "y": "sin(s)", "domain": [-3.2, 3.2]}"#,
        "--g2",
        r#"{"x": "3", "y": "s", "domain": [-2, 2]}"#,
        "--init",
        "0.4,-0.3",
        "--svg",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stderr}");
    let svg = std::fs::read_to_string(&path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("polyline"));
}

#[test]
fn check_commands() {
    let v = json(&[
        "check", "diagram", "--n", "2", "--m", "1", "--k", "2", "--samples", "100",
    ]);
    assert!(v["max_residual"].as_f64().unwrap() < 1e-12);
    let v = json(&["check", "roundtrip", "--n", "3", "--K", "3"]);
    assert_eq!(v["all_zero"], true);
}

#[test]
fn domain_errors_exit_one_with_json_on_stderr() {
    let (stdout, stderr, code) = jetflag(&["expr", "diff", "--expr", "log(z", "--var", "z"]);
    assert_eq!(code, 1);
    assert!(stdout.is_empty());
    let err: serde_json::Value = serde_json::from_str(&stderr).unwrap();
    assert_eq!(err["error"], "domain");
    assert!(err["message"].as_str().unwrap().contains("syntax error"));
}

#[test]
fn usage_errors_exit_two() {
    let (_, _, code) = jetflag(&["no-such-command"]);
    assert_eq!(code, 2);
    let (_, _, code) = jetflag(&["mi", "partitions"]);
    assert_eq!(code, 2);
}

#[test]
fn sampled_checks_are_deterministic_under_a_seed() {
    let dist = r#"{"vars": {"x": ["x"], "u": ["u", "p"]},
                   "forms": [{"dx": {"x": "-p"}, "du": {"u": "1"}}]}"#;
    let args = [
        "inv", "consequences", "--dist", dist, "--r", "1", "--samples", "8", "--seed", "9",
    ];
    let (first, _, _) = jetflag(&args);
    let (second, _, _) = jetflag(&args);
    assert_eq!(first, second);
}

#[test]
fn file_payloads_are_accepted() {
    let dir = std::env::temp_dir().join("jetflag-file-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("circle.json");
    std::fs::write(&path, r#"{"x": "cos(s)", "y": "sin(s)", "domain": [-3.2, 3.2]}"#)
        .unwrap();
    let sol = json(&[
        "var",
        "columbus",
        "--g1",
        path.to_str().unwrap(),
        "--g2",
        r#"{"x": "3", "y": "s", "domain": [-2, 2]}"#,
        "--init",
        "0.4,-0.3",
    ]);
    assert!((sol["length"].as_f64().unwrap() - 2.0).abs() < 1e-8);
    let (_, stderr, code) = jetflag(&["var", "columbus", "--g1", "missing.json", "--g2",
        r#"{"x": "3", "y": "s", "domain": [-2, 2]}"#, "--init", "0,0"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("input"));
}

#[test]
fn stdin_payloads_are_accepted() {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_jetflag"))
        .args(["expr", "eval", "--expr", "x + 1", "--env", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(br#"{"x": 2.0}"#)
        .unwrap();
    let out = child.wait_with_output().unwrap();
    let v: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("valid JSON on stdout");
    assert_eq!(v["value"], 3.0);
}
