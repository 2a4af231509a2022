use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_detforest")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn json_out(args: &[&str]) -> Value {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("valid JSON on stdout")
}

#[test]
fn charpoly_of_width4_has_the_nine_coefficients() {
    let v = json_out(&["charpoly", "--graph", &data("width4.json")]);
    assert_eq!(v["var"], 1);
    let expect = [1.0, -14.0, 74.0, -190.0, 258.0, -190.0, 74.0, -14.0, 1.0];
    let terms = v["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 9);
    for (t, c) in terms.iter().zip(expect) {
        let re = t["re"].as_f64().unwrap();
        assert_eq!(re.round(), c);
        assert!((re - c).abs() < 1e-9);
        assert!(t["im"].as_f64().unwrap().abs() < 1e-9);
    }
}

#[test]
fn roots_of_width4() {
    let v = json_out(&["roots", "--graph", &data("width4.json")]);
    let got: Vec<f64> = v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let want = [1.0, 2.11239, 3.73205, 5.22274];
    assert_eq!(got.len(), 4);
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-4, "{g} vs {w}");
    }
}

#[test]
fn dpp_sample_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let outs: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("sample{k}.json"))).collect();
    for o in &outs {
        let args = ["sample", "--graph", &data("line.json"), "--method", "dpp", "--n", "8", "--z", "-2", "--seed", "7"];
        let mut args: Vec<&str> = args.to_vec();
        args.extend(["--out", o.to_str().unwrap()]);
        assert_eq!(code(&args), 0);
    }
    let a = std::fs::read(&outs[0]).unwrap();
    assert_eq!(a, std::fs::read(&outs[1]).unwrap());
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["seed"], 7);
}

#[test]
fn manifest_sits_next_to_the_output_and_digests_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("roots.json");
    let g = data("width4.json");
    assert_eq!(code(&["roots", "--graph", &g, "--out", out.to_str().unwrap(), "--seed", "5"]), 0);
    let m: Value = serde_json::from_slice(&std::fs::read(dir.path().join("roots.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "roots");
    assert_eq!(m["seed"], 5);
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["flags"]["global"]["graph"], g.as_str());
    let digest = hex::encode(Sha256::digest(std::fs::read(&g).unwrap()));
    assert_eq!(m["inputs"][g.as_str()], digest.as_str());
    assert_eq!(m["outputs"][0], out.to_str().unwrap());
}

#[test]
fn explicit_manifest_path_and_failed_runs_still_get_one() {
    let dir = tempfile::tempdir().unwrap();
    let man = dir.path().join("m.json");
    let o = run(&["roots", "--graph", &data("square.json"), "--manifest", man.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let m: Value = serde_json::from_slice(&std::fs::read(&man).unwrap()).unwrap();
    assert_eq!(m["exit_code"], 2);
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn exit_code_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"kind\": \"strip\", \"vertices\": [\"a\"]");
    let unknown_vertex =
        write(dir.path(), "uv.json", r#"{"kind":"strip","vertices":["a"],"edges":[{"u":"a","v":"z","dx":1,"c":1.0}]}"#);
    let man = dir.path().join("m.json");
    let m = man.to_str().unwrap();
    let (w4, sq) = (data("width4.json"), data("square.json"));
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["--help"], 0),
        (vec!["roots", "--help"], 0),
        (vec!["--version"], 0),
        (vec!["growth", "--graph", &w4, "--manifest", m], 0),
        (vec!["divisor", "--n", "3", "--manifest", m], 0),
        // usage
        (vec![], 64),
        (vec!["frobnicate"], 64),
        (vec!["roots", "--graph", &w4, "--bogus"], 64),
        (vec!["roots", "--manifest", m], 64),
        (vec!["harnack", "--graph", &sq, "--r1", "x", "--r2", "1"], 64),
        (vec!["sample", "--graph", &w4, "--method", "metropolis"], 64),
        // validation
        (vec!["roots", "--graph", "/no/such/file.json", "--manifest", m], 2),
        (vec!["roots", "--graph", &bad, "--manifest", m], 2),
        (vec!["roots", "--graph", &unknown_vertex, "--manifest", m], 2),
        (vec!["roots", "--graph", &sq, "--manifest", m], 2),
        (vec!["sigma", "--graph", &sq, "--x", "2", "--y", "0", "--manifest", m], 2),
        (vec!["ronkin", "--graph", &sq, "--x", "0:1", "--y", "0", "--manifest", m], 2),
        (vec!["divisor", "--n", "0", "--manifest", m], 2),
        (vec!["kernel", "--graph", &w4, "--edges", "99", "--manifest", m], 2),
        (vec!["growth", "--graph", &w4, "--j", "9", "--manifest", m], 2),
        (vec!["sample", "--graph", &w4, "--method", "wilson", "--manifest", m], 2),
        // numerical
        (vec!["kernel", "--graph", &sq, "--z", "1", "--w", "1", "--manifest", m], 3),
        (vec!["charpoly", "--graph", &w4, "--tol", "1e-30", "--manifest", m], 3),
    ];
    for (args, want) in cases {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(want), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        if want == 64 {
            assert!(String::from_utf8_lossy(&o.stderr).contains("Usage") || String::from_utf8_lossy(&o.stderr).contains("--help"));
        }
    }
}

#[test]
fn every_json_subcommand_is_deterministic() {
    let (w4, sq, lm) = (data("width4.json"), data("square.json"), data("ladder_massive.json"));
    let (sqm, star) = (data("square_massive.json"), data("star.json"));
    let dir = tempfile::tempdir().unwrap();
    let man = dir.path().join("m.json");
    let m = man.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["charpoly", "--graph", &sq],
        vec!["roots", "--graph", &w4, "--full"],
        vec!["growth", "--graph", &lm],
        vec!["polygon", "--graph", &sq],
        vec!["ronkin", "--graph", &sq, "--x", "-0.5:0.5:3", "--y", "0.2"],
        vec!["sigma", "--graph", &sq, "--x", "0.25", "--y", "-0.25"],
        vec!["kernel", "--graph", &w4, "--component", "2", "--edges", "0,3", "--shift", "1"],
        vec!["kernel", "--graph", &sq, "--slope", "0.2,0.1"],
        vec!["sample", "--graph", &sq, "--method", "mcmc", "--n", "2", "--homology", "1,0", "--steps", "2000", "--seed", "3"],
        vec!["sample", "--graph", &lm, "--method", "wilson", "--n", "5", "--seed", "3"],
        vec!["sample", "--graph", &lm, "--method", "dpp", "--n", "3", "--z", "1", "--seed", "3", "--threads", "1"],
        vec!["harnack", "--graph", &sq, "--r1", "1.5", "--r2", "0.8"],
        vec!["divisor", "--n", "2"],
        vec!["decay", "--graph", &sqm, "--max-dist", "12"],
        vec!["transform", "--graph", &star, "--move", "star-triangle", "--vertex", "x"],
    ];
    for mut args in cases {
        args.extend(["--manifest", m]);
        let a = run(&args);
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        serde_json::from_slice::<Value>(&a.stdout).unwrap_or_else(|e| panic!("{args:?}: {e}"));
        let b = run(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn seeds_change_samples() {
    let lm = data("ladder_massive.json");
    let s = |seed: &str| run(&["sample", "--graph", &lm, "--method", "wilson", "--n", "6", "--seed", seed]).stdout;
    let distinct: std::collections::BTreeSet<Vec<u8>> = ["1", "2", "3", "4", "5"].iter().map(|k| s(k)).collect();
    assert!(distinct.len() > 1);
}

#[test]
fn finite_kernel_at_minus_one() {
    let v = json_out(&["kernel", "--graph", &data("width4.json"), "--z", "-1", "--edges", "0,1"]);
    assert_eq!(v["contour"]["kind"], "finite");
    assert!(v["residual"].as_f64().unwrap() < 1e-10);
    let e = v["entries"].as_array().unwrap();
    assert_eq!(e.len(), 4);
    assert_eq!((e[1]["e1"].as_u64(), e[1]["e2"].as_u64()), (Some(0), Some(1)));
    assert!((e[1]["re"].as_f64().unwrap() + 2.0 / 17.0).abs() < 1e-10);
}

#[test]
fn sigma_grid_as_csv() {
    let o = run(&["sigma", "--graph", &data("square.json"), "--x", "-1:1:3", "--y", "0", "--csv"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), ["s", "t", "sigma", "free_energy", "x", "y", "boundary"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    let sigma: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(sigma[0].abs() < 1e-12 && sigma[2].abs() < 1e-12);
    assert!((sigma[1] + 1.166243).abs() < 1e-5);
    assert_eq!(&rows[0][6], "true");
    assert_eq!(&rows[1][6], "false");
}

#[test]
fn ronkin_csv_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    assert_eq!(code(&["ronkin", "--graph", &data("square.json"), "--x", "0", "--y", "0:1:2", "--out", out.to_str().unwrap()]), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,R");
    assert_eq!(lines.len(), 3);
    let r0: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((r0 - 1.166243).abs() < 1e-5);
}

#[test]
fn sample_svg_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.svg");
    let args = ["sample", "--graph", &data("square.json"), "--method", "mcmc", "--n", "2", "--homology", "1,0", "--steps", "500"];
    let mut args = args.to_vec();
    args.extend(["--out", out.to_str().unwrap()]);
    assert_eq!(code(&args), 0);
    let svg = std::fs::read_to_string(&out).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("#c0392b"), "the winding cycle is highlighted");
}

#[test]
fn limitshape_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("leaves.svg");
    let report = dir.path().join("report.json");
    let args = [
        "limitshape",
        "--graph",
        &data("square.json"),
        "--mesh",
        &data("mesh4.json"),
        "--boundary",
        &data("two_slope4.csv"),
        "--spacing",
        "0.05",
        "--out",
        svg.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ];
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert!(r["residual"].as_f64().unwrap() < 1e-8);
    assert!(r["energy"].as_f64().unwrap() < 0.0);
    assert_eq!(r["heights"].as_array().unwrap().len(), 25);
    assert_eq!(r["table"]["violations"].as_array().unwrap().len(), 0);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let m: Value = serde_json::from_slice(&std::fs::read(dir.path().join("leaves.svg.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["inputs"].as_object().unwrap().len(), 3);
}

#[test]
fn limitshape_rejects_steep_boundary_data() {
    let dir = tempfile::tempdir().unwrap();
    // slope 3 along the bottom side leaves the unit-flow polygon
    let mut csv = String::from("vertex,height\n");
    for (k, (x, y)) in (0..25).map(|k| (k, ((k % 5) as f64 / 4.0, (k / 5) as f64 / 4.0))) {
        if x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0 {
            csv += &format!("{k},{}\n", 3.0 * x);
        }
    }
    let b = write(dir.path(), "steep.csv", &csv);
    let man = dir.path().join("m.json");
    let o = run(&[
        "limitshape",
        "--graph",
        &data("square.json"),
        "--mesh",
        &data("mesh4.json"),
        "--boundary",
        &b,
        "--manifest",
        man.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
}

#[test]
fn transform_preserves_the_polynomial_up_to_a_constant() {
    let dir = tempfile::tempdir().unwrap();
    let star = data("star.json");
    let out = dir.path().join("tri.json");
    let o = out.to_str().unwrap();
    assert_eq!(code(&["transform", "--graph", &star, "--move", "star-triangle", "--vertex", "x", "--out", o]), 0);
    let coeffs = |g: &str| -> Vec<(Vec<i64>, f64)> {
        let v = json_out(&["charpoly", "--graph", g]);
        v["terms"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| (t["e"].as_array().unwrap().iter().map(|x| x.as_i64().unwrap()).collect(), t["re"].as_f64().unwrap()))
            .filter(|(_, c)| c.abs() > 1e-9)
            .collect()
    };
    let (a, b) = (coeffs(&star), coeffs(o));
    assert_eq!(a.iter().map(|t| &t.0).collect::<Vec<_>>(), b.iter().map(|t| &t.0).collect::<Vec<_>>());
    let ratio = a[0].1 / b[0].1;
    for (x, y) in a.iter().zip(&b) {
        assert!((x.1 - ratio * y.1).abs() < 1e-9 * x.1.abs().max(1.0), "{x:?} vs {y:?}");
    }
}

fn schema(name: &str) -> Value {
    let p = format!("{}/../../schema/v1/{name}.schema.json", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn assert_keys_match(v: &Value, s: &Value) {
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let props: Vec<&String> = s["properties"].as_object().unwrap().keys().collect();
    for k in &keys {
        assert!(props.contains(k), "{k} not in schema");
    }
    for r in s["required"].as_array().unwrap() {
        assert!(keys.contains(&&r.as_str().unwrap().to_string()), "{r} missing");
    }
}

#[test]
fn outputs_follow_the_versioned_schemas() {
    let sq = data("square.json");
    assert_keys_match(&json_out(&["charpoly", "--graph", &sq]), &schema("polynomial"));
    assert_keys_match(&json_out(&["kernel", "--graph", &sq, "--slope", "0.1,0"]), &schema("kernel"));
    let s = json_out(&["sample", "--graph", &data("square_massive.json"), "--method", "wilson", "--n", "2"]);
    assert_keys_match(&s, &schema("sample"));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    assert_eq!(code(&["polygon", "--graph", &sq, "--out", out.to_str().unwrap()]), 0);
    let m: Value = serde_json::from_slice(&std::fs::read(dir.path().join("p.json.manifest.json")).unwrap()).unwrap();
    assert_keys_match(&m, &schema("manifest"));
    for g in ["width4", "line", "square", "triangular", "star", "ladder_massive", "square_massive"] {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(data(&format!("{g}.json"))).unwrap()).unwrap();
        assert_keys_match(&v, &schema("graph"));
    }
}
