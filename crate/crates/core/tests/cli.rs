use std::path::Path;
use std::process::{Command, Output};

fn gblab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gblab"))
        .args(args)
        .current_dir(dir)
        .env_remove("GBLAB_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn pfaffian_of_block_diagonal() {
    let d = tempfile::tempdir().unwrap();
    let f = write(d.path(), "blockdiag.json", "[[0,2,0,0],[-2,0,0,0],[0,0,0,3],[0,0,-3,0]]");
    let o = gblab(&["compute", "pfaffian", "--input", &f], d.path());
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout), "6\n");
}

#[test]
fn input_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let bad = write(d.path(), "bad.json", "[[0, 1],\n [-1, 0");
    let o = gblab(&["compute", "pfaffian", "--input", &bad], d.path());
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("malformed JSON") && err.contains("line 2"), "{err}");

    let odd = write(d.path(), "odd.json", "[[0]]");
    assert_eq!(code(&gblab(&["compute", "pfaffian", "--input", &odd], d.path())), 2);
    let notskew = write(d.path(), "ns.json", "[[0,1],[1,0]]");
    assert_eq!(code(&gblab(&["compute", "pfaffian", "--input", &notskew], d.path())), 2);

    assert_eq!(code(&gblab(&["verify", "pfaffian", "--bogus"], d.path())), 2);
    assert_eq!(code(&gblab(&["verify", "nonsense"], d.path())), 2);
    assert_eq!(code(&gblab(&["verify", "all", "--resolution", "65"], d.path())), 2);
    assert_eq!(code(&gblab(&["compute", "pfaffian", "--input", "missing.json"], d.path())), 2);

    let cfg = write(d.path(), "c.toml", "sed = 1\n");
    assert_eq!(code(&gblab(&["verify", "forms", "--config", &cfg], d.path())), 2);
    let cfg = write(d.path(), "c2.toml", "tol_thom = -1.0\n");
    assert_eq!(code(&gblab(&["verify", "forms", "--config", &cfg], d.path())), 2);
}

#[test]
fn failing_check_exits_1() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "tight.toml", "tol_sphere_volume = 1e-30\n");
    let o = gblab(&["verify", "forms", "--config", &cfg, "--format", "csv"], d.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains(",false"));
}

#[test]
fn verify_report_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let args = ["verify", "pfaffian", "--no-timestamp", "--seed", "11"];
    let a = gblab(&args, d.path());
    let b = gblab(&args, d.path());
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["seed"], 11);
    assert_eq!(v["pass"], true);
    assert_eq!(v["suites"][0]["suite"], "pfaffian");
    let check = &v["suites"][0]["checks"][0];
    for key in ["name", "computed", "expected", "tolerance", "pass"] {
        assert!(check.get(key).is_some(), "{key}");
    }
    assert!(v.get("timestamp").is_none());
    assert_eq!(v["config"]["seed"], 11);

    let t = gblab(&["verify", "pfaffian"], d.path());
    let v: serde_json::Value = serde_json::from_slice(&t.stdout).unwrap();
    assert!(v["timestamp"].is_u64() && v["wall_time_s"].is_f64());
}

#[test]
fn seed_precedence() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write(d.path(), "s.toml", "seed = 5\n");
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_gblab"));
        c.args(["verify", "forms", "--no-timestamp", "--config", &cfg]).current_dir(d.path()).env_remove("GBLAB_SEED");
        if let Some(e) = env {
            c.env("GBLAB_SEED", e);
        }
        if let Some(f) = flag {
            c.args(["--seed", f]);
        }
        let o = c.output().unwrap();
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["seed"].as_u64().unwrap()
    };
    assert_eq!(run(None, None), 5);
    assert_eq!(run(Some("9"), None), 9);
    assert_eq!(run(Some("9"), Some("0x10")), 16);
}

#[test]
fn out_file_and_report_rendering() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("r.json");
    let o = gblab(&["verify", "forms", "--no-timestamp", "--out", out.to_str().unwrap()], d.path());
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let csv = gblab(&["report", "--input", out.to_str().unwrap(), "--format", "csv"], d.path());
    assert_eq!(code(&csv), 0);
    let text = String::from_utf8_lossy(&csv.stdout);
    assert!(text.starts_with("suite,check,criterion,computed,expected,tolerance,relation,pass\n"));
    assert_eq!(text.lines().count(), 4);
    let txt = gblab(&["report", "--input", out.to_str().unwrap(), "--format", "text"], d.path());
    assert!(String::from_utf8_lossy(&txt.stdout).ends_with("overall: PASS\n"));
    let same = gblab(&["report", "--input", out.to_str().unwrap(), "--no-timestamp"], d.path());
    assert_eq!(same.stdout, std::fs::read(&out).unwrap());
}

#[test]
fn verify_hazzidakis_at_513() {
    let d = tempfile::tempdir().unwrap();
    let o = gblab(&["verify", "hazzidakis", "--resolution", "513", "--no-timestamp"], d.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["hazzidakis_resolution"], 513);
    let checks = v["suites"][0]["checks"].as_array().unwrap();
    let area: Vec<f64> = checks
        .iter()
        .filter(|c| c["name"].as_str().unwrap().starts_with("area_vs_corner_sum"))
        .map(|c| c["computed"].as_f64().unwrap())
        .collect();
    assert_eq!(area.len(), 3);
    assert!(area.iter().all(|e| *e <= 1e-6));
}

#[test]
fn diagonalize_and_solid_angle() {
    let d = tempfile::tempdir().unwrap();
    let t = write(d.path(), "t.json", "[[[2,0],[0,0]],[[0,0],[0,3]]]");
    let o = gblab(&["compute", "diagonalize", "--input", &t], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["basis"].as_array().unwrap().len(), 2);
    let bad = write(d.path(), "shape.json", "[[[1,0],[0,1]],[[0,0]]]");
    assert_eq!(code(&gblab(&["compute", "diagonalize", "--input", &bad], d.path())), 2);

    let c = write(d.path(), "c.json", "[[1,0,0],[0,1,0],[0,0,1]]");
    let o = gblab(&["compute", "solid-angle", "--coframe", &c, "--samples", "60000"], d.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let f: Vec<f64> = v["fractions"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(f.len(), 6);
    assert!(f.iter().all(|x| (x - 1.0 / 6.0).abs() < 1e-2));
    let sing = write(d.path(), "s.json", "[[1,2],[2,4]]");
    assert_eq!(code(&gblab(&["compute", "solid-angle", "--coframe", &sing], d.path())), 2);
}

#[test]
fn convergence_csv() {
    let d = tempfile::tempdir().unwrap();
    let o = gblab(&["compute", "convergence", "--mu", "2", "--resolutions", "65,129"], d.path());
    assert_eq!(code(&o), 0);
    let s = String::from_utf8_lossy(&o.stdout);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "resolution,area,corner_sum,error,residual");
    assert!(lines[1].starts_with("65,") && lines[2].starts_with("129,"));
}
