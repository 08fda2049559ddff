use std::path::Path;
use std::process::{Command, Output};

use spherevortex::io::{RunManifest, MANIFEST_FILE};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spherevortex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn column(table: &str, name: &str) -> Vec<String> {
    let mut lines = table.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().to_string())
        .collect()
}

const POLAR: &str = "gamma = 0.5\n\
    [[vortices]]\nposition = [0.0, 0.0, 1.0]\nstrength = 1.5\n\
    [[vortices]]\nposition = [0.0, 0.0, -1.0]\nstrength = -1.5\n";

#[test]
fn four_vortex_stability_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "stability",
        "--family",
        "four-vortex",
        "--a",
        "1",
        "--gamma",
        "0.5",
        "--out-dir",
        out,
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(String::from_utf8_lossy(&o.stdout).contains("master_seed = 0"));
    let summary = read(&dir.path().join("spectrum_summary.csv"));
    let m: f64 = column(&summary, "max_real_part")[0].parse().unwrap();
    assert!((m - 0.0491).abs() <= 1e-3);
    let spectrum = read(&dir.path().join("spectrum.csv"));
    assert!(spectrum.starts_with("re,im,residual\n"));
    assert_eq!(spectrum.lines().count(), 9);
    assert_eq!(read(&dir.path().join("jacobian.csv")).lines().count(), 17);
    let manifest = RunManifest::read(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.command, "stability");
    assert!(manifest.mismatches(dir.path()).is_empty());
    assert!(!manifest.args.iter().any(|a| a.contains("out-dir")));
}

#[test]
fn polar_simulation_has_no_drift() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("polar.toml");
    std::fs::write(&cfg, POLAR).unwrap();
    let out = dir.path().join("run");
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--t-end",
        "2",
        "--record-every",
        "100",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let drift = read(&out.join("drift.csv"));
    for name in ["dH", "dM3", "dM"] {
        for v in column(&drift, name) {
            assert!(v.parse::<f64>().unwrap().abs() <= 1e-10);
        }
    }
    let traj = read(&out.join("trajectory.csv"));
    assert!(traj.starts_with("t,i,x,y,z,gx,gy,gz\n"));
    assert!(read(&out.join("invariants.csv")).starts_with("t,H,M3,gauss_sum\n"));
    // replay from the manifest reproduces every file
    let o = run(&[
        "verify",
        "--manifest",
        out.join(MANIFEST_FILE).to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
}

#[test]
fn validation_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, POLAR.replace("strength = -1.5", "strength = \"x\"")).unwrap();
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("vortices[1].strength"));

    std::fs::write(&cfg, POLAR.replace("-1.5", "-1.0")).unwrap();
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("5e-1"));

    let o = run(&["sweep", "--family", "four-vortex", "--gamma", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`a`"));
}

#[test]
fn coincident_vortices_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("same.toml");
    std::fs::write(&cfg, POLAR.replace("[0.0, 0.0, -1.0]", "[0.0, 0.0, 1.0]")).unwrap();
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("vortices[1].position"));
}

#[test]
fn sweep_and_montecarlo_tables() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep");
    let o = run(&[
        "sweep",
        "--family",
        "four-vortex",
        "--a",
        "0.1,0.3",
        "--gamma",
        "-2:2:5",
        "--out-dir",
        sweep.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let table = read(&sweep.join("sweep.csv"));
    assert!(table.starts_with("family,N,a,kappa,gamma,eq_residual,max_real_part,Omega\n"));
    assert_eq!(table.lines().count(), 11);

    let mc = dir.path().join("mc");
    let args = [
        "montecarlo",
        "--eps",
        "0.6,0.2",
        "--trials",
        "16",
        "--tau",
        "1",
        "--seed",
        "11",
    ];
    let o = run(&[&args[..], &["--out-dir", mc.to_str().unwrap()]].concat());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("master_seed = 11"));
    let first = read(&mc.join("collisions.csv"));
    assert!(first.starts_with("eps,trials,collided,fraction,std_error\n"));
    let again = dir.path().join("mc2");
    run(&[&args[..], &["--out-dir", again.to_str().unwrap()]].concat());
    assert_eq!(first, read(&again.join("collisions.csv")));
    assert_eq!(
        read(&mc.join("trials.csv")),
        read(&again.join("trials.csv"))
    );
}

#[test]
fn blob_run_writes_moments_and_exits() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "blob",
        "--family",
        "polar-pair",
        "--eps",
        "0.1",
        "--particles",
        "12",
        "--t-end",
        "0.2",
        "--radii",
        "0.05,0.1",
        "--layout",
        "fibonacci",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let moments = read(&dir.path().join("moments.csv"));
    assert!(moments.starts_with("t,blob,cx,cy,cz,I,R,max_deviation,ref_x,ref_y,ref_z,m1,m2,m3,"));
    assert_eq!(
        read(&dir.path().join("exits.csv")),
        "blob,exit_time\n0,\n1,\n"
    );
}

#[test]
fn help_and_unknown_commands() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}
