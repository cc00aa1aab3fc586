use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn swarmlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swarmlab"))
        .args(args)
        .env("SWARMLAB_OUTPUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn error_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).expect("stderr holds one JSON object")
}

fn write_measure(path: &Path, rows: &[[f64; 5]]) {
    let mut s = String::from("x1,x2,v1,v2,weight\n");
    for r in rows {
        s += &format!("{},{},{},{},{}\n", r[0], r[1], r[2], r[3], r[4]);
    }
    fs::write(path, s).unwrap();
}

/// Small settings for the study subcommands.
const SMALL: &str = r#"
seed = 5

[dynamics]
dt = 0.01
t_end = 0.1

[study]
n = 40
n_list = [10, 20]
n_ref = 80
times = [0.05, 0.1]
reference = { eps = 0.2, eta = 0.2 }

[study.hypcheck]
n_samples = 2000
lemma_samples = 300

[study.lipschitz]
probes = 20
"#;

#[test]
fn w1_of_a_file_with_itself_prints_zero() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    write_measure(&a, &[[0.0, 1.0, 0.5, -0.5, 0.25], [2.0, -1.0, 0.0, 1.0, 0.75]]);
    let o = swarmlab(&["w1", a.to_str().unwrap(), a.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "0.0");
}

#[test]
fn w1_writes_plan_and_matches_hand_value() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, plan) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("plan.csv"));
    write_measure(&a, &[[0.0, 0.0, 0.0, 0.0, 1.0]]);
    write_measure(&b, &[[3.0, 0.0, 0.0, 4.0, 0.5], [0.0, 0.0, 0.0, 1.0, 0.5]]);
    let o = swarmlab(&["w1", a.to_str().unwrap(), b.to_str().unwrap(), "--plan", plan.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let d: f64 = stdout(&o).trim().parse().unwrap();
    assert!((d - 3.0).abs() < 1e-12);
    assert_eq!(fs::read_to_string(&plan).unwrap().lines().count(), 3);
}

#[test]
fn w1_size_cap_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("big.csv");
    let n = 20_001;
    let mut s = String::from("x1,x2,v1,v2,weight\n");
    for k in 0..n {
        s += &format!("{k},0,0,0,{}\n", 1.0 / n as f64);
    }
    fs::write(&a, s).unwrap();
    let o = swarmlab(&["w1", a.to_str().unwrap(), a.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_json(&o)["error"]["kind"], "size_cap");
}

#[test]
fn unknown_key_exits_2_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[dynamics]\ndtt = 0.1\n").unwrap();
    let o = swarmlab(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["error"]["exit_code"], 2);
    assert!(e["error"]["message"].as_str().unwrap().contains("dtt"));
}

#[test]
fn invalid_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = swarmlab(&["simulate", "--set", "region.kind.radius=-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn blow_up_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = swarmlab(
        &["simulate", "--set", "force.psi.value=1e308", "--set", "dynamics.dt=1", "--set", "dynamics.t_end=5", "--set", "dynamics.particles=20"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(error_json(&o)["error"]["kind"], "numerical");
}

#[test]
fn single_particle_streams_freely() {
    let dir = tempfile::tempdir().unwrap();
    let o = swarmlab(
        &["simulate", "--set", "dynamics.particles=1", "--set", "dynamics.t_end=0.5", "--set", "dynamics.record_every=50"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,particle,x1,x2,v1,v2,weight"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 11);
    let r0 = &rows[0];
    for r in &rows {
        let t = r[0];
        assert_eq!(&r[4..], &r0[4..]);
        assert!((r[2] - (r0[2] + t * r0[4])).abs() < 1e-12);
        assert!((r[3] - (r0[3] + t * r0[5])).abs() < 1e-12);
    }
    let diag = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 502);
}

#[test]
fn simulate_accepts_initial_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("init.csv");
    write_measure(&a, &[[0.0, 0.0, 1.0, 0.0, 0.5], [0.5, 0.0, 0.0, 0.0, 0.5]]);
    let set = format!("dynamics.initial_file={}", a.display());
    let o = swarmlab(&["simulate", "--set", &set, "--set", "region.kind={ type = \"ball\", radius = 1.0 }"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["particles"], 2);
    // the pair aligns: total momentum is conserved
    let p1 = summary["final"]["momentum"][0].as_f64().unwrap();
    assert!((p1 - 0.5).abs() < 1e-12);
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.path().is_file())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn converge_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = swarmlab(&["converge", "--config", cfg.to_str().unwrap()], out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (read_dir(&a), read_dir(&b));
    assert_eq!(fa.iter().map(|f| f.0.as_str()).collect::<Vec<_>>(), ["convergence.csv", "manifest.json", "summary.json"]);
    assert_eq!(fa, fb);
    let csv = String::from_utf8(fa[0].1.clone()).unwrap();
    assert!(csv.starts_with("study,N,t,d1,ratio\n"));
    // two study sizes, times 0, 0.05, 0.1
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
}

#[test]
fn manifest_config_echo_reparses_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = swarmlab(&["simulate", "--config", cfg.to_str().unwrap(), "--set", "dynamics.particles=5"], &a);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let echo = dir.path().join("echo.toml");
    fs::write(&echo, m["config"].as_str().unwrap()).unwrap();
    let o = swarmlab(&["simulate", "--config", echo.to_str().unwrap()], &b);
    assert!(o.status.success());
    let m2: serde_json::Value = serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"], m2["config"]);
    assert_eq!(m["version"], m2["version"]);
    assert_eq!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(b.join("trajectory.csv")).unwrap());
}

#[test]
fn study_subcommands_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    for (cmd, table) in [("stability", Some("stability.csv")), ("hypcheck", Some("volume_fits.csv")), ("lipschitz", None)] {
        let out = dir.path().join(cmd);
        let o = swarmlab(&[cmd, "--config", cfg.to_str().unwrap()], &out);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains(cmd));
        let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        assert!(summary.is_object());
        if let Some(t) = table {
            assert!(fs::read_to_string(out.join(t)).unwrap().starts_with("study,"));
        }
    }
}

#[test]
fn schema_lists_sections_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = swarmlab(&["schema"], dir.path());
    assert!(o.status.success());
    let s = stdout(&o);
    for key in ["[region]", "[force]", "[dynamics]", "[study]", "[output]", "convergence.csv", "n_ref = 6400"] {
        assert!(s.contains(key), "{key}");
    }
}
