use std::path::PathBuf;
use std::process::{Command, Output};

use ibflow::grid::snapshot::read_snapshot;
use tempfile::TempDir;

const DESK: &str = r#"
[domain]
L1 = 0.5
L2 = 0.5

[grid]
n1 = 32
n2 = 32

[fluid]
rho = 1.0
mu = 4.0e-4

[particle]
k = 0.1
X0 = [0.25, 0.25]
c = 0.0625

[flow]
u_mean = 0.25
v0 = 0.04

[time]
dt = 4e-3
t_end = 0.04

[output]
cadence = 5
formats = ["binary", "csv"]
"#;

const TAYLOR_GREEN: &str = r#"
[domain]
L1 = 1.0
L2 = 1.0

[grid]
n1 = 128
n2 = 128

[fluid]
rho = 1.0
mu = 0.01

[particle]
k = 0.0
X0 = [0.3, 0.6]
c = 0.03125

[flow]
initial = "taylor-green"
amplitude = 0.5
modes = [1, 2]

[time]
kappa = 6.4
t_end = 0.1

[mode]
scheme = "plain"
"#;

fn ibflow(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ibflow"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("launch ibflow")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_desk(dir: &TempDir, text: &str, out: &str) -> (Output, PathBuf) {
    let cfg = write_config(dir, "desk.toml", text);
    let out_dir = dir.path().join(out);
    let o = ibflow(
        &["run", cfg.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()],
        &[],
    );
    (o, out_dir)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_trajectory_snapshots_and_manifest() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_desk(&dir, DESK, "out");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = traj.lines().collect();
    assert_eq!(lines[0], "t,X1,X2,U1,U2,mean_u1,div_residual,kinetic_energy");
    assert_eq!(lines.len(), 1 + 3, "samples at steps 0, 5, 10");

    let snap = read_snapshot(&out.join("snapshot_000010.bin")).unwrap();
    assert_eq!(snap.spec.n1(), 32);
    for name in ["u1", "u2", "vorticity"] {
        assert!(snap.channel(name).is_some());
        assert!(out.join(format!("snapshot_000010_{name}.csv")).exists());
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["fluid"]["mu"], 4.0e-4);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 1 + 3 * 4);
    for entry in outputs {
        let path = out.join(entry["path"].as_str().unwrap());
        let (sha, _) = ibflow::cli::manifest::sha256_file(&path).unwrap();
        assert_eq!(entry["sha256"].as_str().unwrap(), sha);
    }
    assert!(!out.join(".manifest.json.tmp").exists());
}

#[test]
fn outputs_are_byte_for_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, out_a) = run_desk(&dir, DESK, "a");
    let (b, out_b) = run_desk(&dir, DESK, "b");
    assert!(a.status.success() && b.status.success());
    for name in ["trajectory.csv", "snapshot_000010_vorticity.csv", "snapshot_000005.bin"] {
        assert_eq!(std::fs::read(out_a.join(name)).unwrap(), std::fs::read(out_b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn zero_end_time_writes_initial_state_only() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_desk(&dir, &DESK.replace("t_end = 0.04", "t_end = 0.0"), "out");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 2);
    assert!(out.join("snapshot_000000.bin").exists());
    assert!(!out.join("snapshot_000001.bin").exists());
}

#[test]
fn startup_prints_reynolds_number() {
    let dir = TempDir::new().unwrap();
    let (o, _) = run_desk(&dir, &DESK.replace("t_end = 0.04", "t_end = 0.0"), "out");
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.starts_with("Re = "), "{stdout}");
    let quiet = ibflow(
        &["run", dir.path().join("desk.toml").to_str().unwrap(), "--quiet", "--output-dir", dir.path().join("q").to_str().unwrap()],
        &[],
    );
    assert!(quiet.status.success());
    assert!(quiet.stdout.is_empty());
}

#[test]
fn divergence_exits_with_code_two_and_step_index() {
    let dir = TempDir::new().unwrap();
    let text = TAYLOR_GREEN
        .replace("n1 = 128\nn2 = 128", "n1 = 32\nn2 = 32")
        .replace("mu = 0.01", "mu = 1e-6")
        .replace("kappa = 6.4\nt_end = 0.1", "dt = 0.5\nt_end = 500.0");
    let (o, _) = run_desk(&dir, &text, "out");
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("diverged at step"), "{err}");
}

#[test]
fn validation_errors_exit_with_code_one() {
    let dir = TempDir::new().unwrap();
    let (o, _) = run_desk(&dir, &DESK.replace("rho = 1.0", "rho = -1.0"), "out");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("fluid.rho"), "{}", stderr(&o));

    let (o, _) = run_desk(&dir, &DESK.replace("c = 0.0625", "c = 0.05"), "out");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("particle.c"));

    let (o, _) = run_desk(&dir, &DESK.replace("v0 = 0.04", "v0 = 0.04\nspeed = 3"), "out");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("speed"));

    assert_eq!(ibflow(&["frobnicate"], &[]).status.code(), Some(1));
    assert_eq!(ibflow(&["--help"], &[]).status.code(), Some(0));
}

#[test]
fn environment_overrides_apply() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "desk.toml", DESK);
    let out = dir.path().join("out");
    let o = ibflow(
        &["run", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()],
        &[("IBFLOW_FLUID_RHO", "-2")],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("fluid.rho"));

    let o = ibflow(
        &["run", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()],
        &[("IBFLOW_TIME_T_END", "0.008")],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 2 + 1, "steps 0 and 2 (final)");
}

#[test]
fn missing_config_is_an_io_error() {
    let o = ibflow(&["run", "/nonexistent/ibflow.toml"], &[]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let cfg = write_config(&dir, "desk.toml", DESK);
    let o = ibflow(
        &["run", cfg.to_str().unwrap(), "--output-dir", blocker.join("sub").to_str().unwrap()],
        &[],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

fn converge(dir: &TempDir, text: &str, levels: &str) -> (Output, PathBuf) {
    let cfg = write_config(dir, "tg.toml", text);
    let out = dir.path().join("conv");
    let o = ibflow(
        &["converge", cfg.to_str().unwrap(), "--levels", levels, "--output-dir", out.to_str().unwrap()],
        &[],
    );
    (o, out)
}

#[test]
fn converge_taylor_green_reports_second_order() {
    let dir = TempDir::new().unwrap();
    let (o, out) = converge(&dir, TAYLOR_GREEN, "3");
    assert_eq!(o.status.code(), Some(0), "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let csv = std::fs::read_to_string(out.join("refinement.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "level,h,dt,du_norm,dX_norm,du_sumsq");
    assert_eq!(lines.len(), 5);
    let footer = lines[4];
    let p: f64 = footer
        .split_whitespace()
        .find_map(|t| t.strip_prefix("p_u="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((1.7..=2.3).contains(&p), "{footer}");
}

#[test]
fn converge_rejects_bad_levels_and_odd_grids() {
    let dir = TempDir::new().unwrap();
    let (o, _) = converge(&dir, TAYLOR_GREEN, "1");
    assert_eq!(o.status.code(), Some(1));

    let odd = TAYLOR_GREEN
        .replace("L1 = 1.0", "L1 = 0.9921875")
        .replace("n1 = 128", "n1 = 127");
    let (o, out) = converge(&dir, &odd, "2");
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("grid"), "{}", stderr(&o));
    assert!(!out.join("refinement.csv").exists());
}

#[test]
fn kernel_check_passes_and_detects_tampering() {
    let dir = TempDir::new().unwrap();
    let o = ibflow(&["kernel-check", "--samples", "1000", "--output-dir", dir.path().to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("kernel_check.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1001);
    assert!(csv.starts_with(ibflow::cli::KERNEL_CHECK_HEADER));

    let o = ibflow(&["kernel-check", "--samples", "50"], &[]);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    assert_eq!(table.lines().count(), 51);

    let tampered = format!("{}", ibflow::kernel::canonical_second_moment() + 0.01);
    let o = ibflow(&["kernel-check", "--samples", "100", "--second-moment", &tampered], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FAIL"));

    assert_eq!(ibflow(&["kernel-check", "--samples", "0"], &[]).status.code(), Some(1));
}

#[test]
fn table_has_bell_shape_on_support() {
    let o = ibflow(&["kernel-check", "--samples", "200"], &[]);
    let table = String::from_utf8(o.stdout).unwrap();
    // profile values by x = s + offset, reassembled from the per-shift rows
    let mut points: Vec<(f64, f64)> = Vec::new();
    for line in table.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        for m in 0..6 {
            points.push((v[0] + m as f64 - 3.0, v[1 + m]));
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let peak = points.iter().cloned().fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    assert!(peak.0.abs() < 1e-12);
    assert!(points.iter().all(|(x, _)| (-3.0..3.0).contains(x)));
    assert!(points.first().unwrap().1.abs() < 1e-12);
}

#[test]
fn bundled_configs_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["desk_vortex.toml", "taylor_green.toml"] {
        let file = ibflow::cli::config::ConfigFile::from_toml_str(&std::fs::read_to_string(dir.join(name)).unwrap())
            .unwrap_or_else(|e| panic!("{name}: {e}"));
        file.to_sim_config().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
