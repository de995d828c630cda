use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn maxosc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxosc")).args(args).output().unwrap()
}

fn write_spec(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const OSC: &str = r#"{"system": {"kind": "shift", "alphabet": 2, "forbidden": ["11"]},
 "task": {"kind": "oscillate", "v": {"path": [{"periodic": "0"}, {"periodic": "01"}]},
          "depth": 6, "profile": {"desk": {"c": 2.0}}}, "seed": 9}"#;

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn oscillate_depth_six_and_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "osc.json", OSC);
    let out = tmp.path().join("run");
    let o = maxosc(&["oscillate", "--spec", &spec, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("checkpoints.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "n,a_n,b_n,k_n,p_n,M_n,dist_to_center,step3_bound,pass");
    assert_eq!(lines.count(), 6);
    let v = maxosc(&["verify", "--out", out.to_str().unwrap()]);
    assert!(v.status.success(), "{}", stdout(&v));
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "osc.json", OSC);
    let dirs = ["a", "b"].map(|d| tmp.path().join(d));
    for d in &dirs {
        assert!(maxosc(&["oscillate", "--spec", &spec, "--out", d.to_str().unwrap()]).status.success());
    }
    let names = ["manifest.json", "checkpoints.csv", "orbit_blocks.csv", "orbit_prefix.txt", "verification.json", "chain.json"];
    for n in names {
        assert_eq!(fs::read(dirs[0].join(n)).unwrap(), fs::read(dirs[1].join(n)).unwrap(), "{n}");
    }
}

#[test]
fn zero_zeta_is_rejected_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "bad.json", &OSC.replace(r#""depth": 6"#, r#""depth": 6, "zeta0": 0"#));
    let o = maxosc(&["oscillate", "--spec", &spec, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("task.zeta0"));
}

#[test]
fn tampered_checkpoint_row_fails_recheck() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "osc.json", OSC);
    let out = tmp.path().join("run");
    assert!(maxosc(&["oscillate", "--spec", &spec, "--out", out.to_str().unwrap()]).status.success());
    let path = out.join("checkpoints.csv");
    let csv = fs::read_to_string(&path).unwrap();
    let tampered: Vec<String> = csv
        .lines()
        .map(|l| {
            if l.starts_with("3,") {
                let mut f: Vec<&str> = l.split(',').collect();
                f[7] = "9.0000000000000000e-1";
                f.join(",")
            } else {
                l.to_string()
            }
        })
        .collect();
    fs::write(&path, tampered.join("\n") + "\n").unwrap();
    let v = maxosc(&["verify", "--spec", out.join("manifest.json").to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(1));
    let text = stdout(&v);
    assert!(text.contains("FAIL digest checkpoints.csv"), "{text}");
    assert!(text.contains("FAIL checkpoint row 3: step3_bound"), "{text}");
    assert!(text.contains("PASS checkpoint row 2"), "{text}");
}

#[test]
fn truncated_artifact_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "osc.json", OSC);
    let out = tmp.path().join("run");
    assert!(maxosc(&["oscillate", "--spec", &spec, "--out", out.to_str().unwrap()]).status.success());
    let p = out.join("orbit_prefix.txt");
    let text = fs::read_to_string(&p).unwrap();
    fs::write(&p, &text[..10]).unwrap();
    let v = maxosc(&["verify", "--out", out.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(1));
    assert!(stdout(&v).contains("FAIL digest orbit_prefix.txt: digest mismatch"));
    fs::remove_file(out.join("chain.json")).unwrap();
    let v = maxosc(&["verify", "--out", out.to_str().unwrap()]);
    assert!(stdout(&v).contains("FAIL digest chain.json: missing artifact"));
}

#[test]
fn length_cap_names_fitting_depth() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "osc.json", OSC);
    let o = maxosc(&["oscillate", "--spec", &spec, "--depth", "10", "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("largest depth that fits is 7"), "{err}");
}

#[test]
fn paper_profile_override() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "osc.json", OSC);
    let out = tmp.path().join("run");
    let o = maxosc(&["oscillate", "--spec", &spec, "--profile", "paper", "--depth", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["spec"]["task"]["profile"], "paper");
    assert_eq!(m["derived"]["schedule"]["levels"].as_array().unwrap().len(), 3);
}

#[test]
fn full_shift_glue_of_two_segments() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(
        tmp.path(),
        "glue.json",
        r#"{"system": {"kind": "shift", "alphabet": 2},
            "task": {"kind": "glue", "segments": [{"word": "0110"}, {"word": "1", "repeats": 3}]}}"#,
    );
    let out = tmp.path().join("g");
    let o = maxosc(&["glue", "--spec", &spec, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("orbit.txt")).unwrap(), "0110111\n");
    let off: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("offsets.json")).unwrap()).unwrap();
    assert_eq!(off["offsets"], serde_json::json!([0, 4]));
    assert!(maxosc(&["verify", "--out", out.to_str().unwrap()]).status.success());

    let out = tmp.path().join("p");
    let gm = write_spec(
        tmp.path(),
        "gm.json",
        r#"{"system": {"kind": "shift", "alphabet": 2, "forbidden": ["11"]},
            "task": {"kind": "glue", "segments": [{"word": "1"}, {"word": "1"}]}}"#,
    );
    assert!(maxosc(&["glue", "--spec", &gm, "--period", "--out", out.to_str().unwrap()]).status.success());
    assert_eq!(fs::read_to_string(out.join("orbit.txt")).unwrap(), "1010\n");
}

#[test]
fn compile_measure_writes_guarantee() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(
        tmp.path(),
        "c.json",
        r#"{"system": {"kind": "shift", "alphabet": 2, "forbidden": ["11"]},
            "task": {"kind": "compile-measure", "zeta": 0.05, "functions": ["0", "1", "00", "01"],
                     "measure": {"convex": [{"w": 0.5, "periodic": "0"}, {"w": 0.5, "periodic": "01"}]}}}"#,
    );
    let out = tmp.path().join("c");
    let o = maxosc(&["compile-measure", "--spec", &spec, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let g: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("guarantee.json")).unwrap()).unwrap();
    assert!(g["max_error"].as_f64().unwrap() < 0.05);
    assert!(out.join("segments.json").exists());
    assert!(maxosc(&["verify", "--out", out.to_str().unwrap()]).status.success());
}

#[test]
fn shadow_cat_map_pseudo_orbit() {
    let tmp = tempfile::tempdir().unwrap();
    // Period-3 cycle of x ↦ Lx mod 1 on the lattice (1/4)Z², perturbed.
    let csv = "index,x,y,level\n0,0.00002,0.50001,1\n1,0.49998,0.5,1\n2,0.5,0.00001,1\n";
    fs::write(tmp.path().join("po.csv"), csv).unwrap();
    let spec = write_spec(
        tmp.path(),
        "s.json",
        r#"{"system": {"kind": "toral", "matrix": [[2, 1], [1, 1]]},
            "task": {"kind": "shadow", "input": "po.csv", "eta": 0.01}}"#,
    );
    let out = tmp.path().join("s");
    let o = maxosc(&["shadow", "--spec", &spec, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(out.join("shadow.csv")).unwrap();
    assert_eq!(rows.lines().count(), 4);
    assert!(maxosc(&["verify", "--out", out.to_str().unwrap()]).status.success());
}

#[test]
fn task_mismatch_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), "osc.json", OSC);
    let o = maxosc(&["glue", "--spec", &spec, "--out", tmp.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
