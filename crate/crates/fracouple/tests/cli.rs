use fracouple::cli::{file_digest, parse_config_str, RunManifest, REQUIRED_KEYS};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BASE: &str = r#"
model = "additive_baseline"
H = 0.7
theta = 0.6
alpha = 0.25
K = 10.0
c3 = 4.0
beta = 2.5
varsigma = 1.25
dt = 0.03125
T_hist = 20.0
n_replicas = 12
t_max = 80.0
seed = 42
ck_runs = 10
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fracouple"));
    c.env_remove("FRACOUPLE_WORKERS");
    c
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn unknown_subcommand_is_an_error() {
    let o = run(&["bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("fracouple:error:"));
}

#[test]
fn couple_twice_gives_identical_logs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BASE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["couple", "-c", s(&cfg), "-o", s(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let ta = std::fs::read(a.join("trials.csv")).unwrap();
    assert!(!ta.is_empty());
    assert_eq!(ta, std::fs::read(b.join("trials.csv")).unwrap());
}

#[test]
fn zero_replicas_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BASE);
    let o = run(&["tail", "-c", s(&cfg), "-o", s(dir.path()), "--set", "n_replicas=0"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.starts_with("fracouple:error:") && e.contains("n_replicas"), "{e}");
}

#[test]
fn constraint_messages_name_the_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BASE);
    for (set, msg) in [
        ("alpha=0.6", "alpha must lie in (0, 1/2)"),
        ("beta=1.2", "beta must exceed 1/(1-2*alpha) per schedule condition"),
    ] {
        let o = run(&["couple", "-c", s(&cfg), "-o", s(dir.path()), "--set", set]);
        assert_eq!(o.status.code(), Some(1));
        assert!(stderr(&o).contains(msg), "{}", stderr(&o));
    }
}

#[test]
fn every_required_key_is_enforced() {
    for key in REQUIRED_KEYS {
        let text: String = BASE.lines().filter(|l| !l.starts_with(&format!("{key} ="))).collect::<Vec<_>>().join("\n");
        let e = parse_config_str(&text, &[], None).unwrap_err().to_string();
        assert!(e.contains(&format!("missing required key '{key}'")), "{key}: {e}");
    }
}

#[test]
fn defaults_are_filled_and_unknown_keys_rejected() {
    let p = parse_config_str(BASE, &[], None).unwrap();
    assert_eq!(p.experiment.coupling.delta1, 0.9);
    assert_eq!(p.experiment.x1, vec![1.0]);
    assert!(parse_config_str(&format!("{BASE}\nbogus = 1\n"), &[], None).is_err());
    let o = parse_config_str(BASE, &["seed=7".into(), "tail.t_min=2.0".into()], None).unwrap();
    assert_eq!(o.experiment.seed, 7);
    assert_eq!(o.experiment.tail.t_min, 2.0);
    assert_ne!(o.digest, p.digest);
}

#[test]
fn manifest_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BASE);
    let out = dir.path().join("out");
    let o = run(&["fbm", "-c", s(&cfg), "-o", s(&out), "--horizon", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = RunManifest::load(&out.join("manifest.toml")).unwrap();
    assert_eq!(m.command, "fbm");
    assert_eq!(m.seed, 42);
    assert_eq!(m.outputs.len(), 1);

    let fbm = out.join("fbm.csv");
    let mut bytes = std::fs::read(&fbm).unwrap();
    bytes.extend_from_slice(b"\n");
    std::fs::write(&fbm, bytes).unwrap();
    assert!(RunManifest::load(&out.join("manifest.toml")).is_err());
}

#[test]
fn inputs_are_never_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fbm.csv", BASE);
    let o = run(&["fbm", "-c", s(&cfg), "-o", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(std::fs::read_to_string(&cfg).unwrap(), BASE);
}

#[test]
fn integrate_replays_a_noise_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BASE);
    let out = dir.path().join("out");
    assert_eq!(run(&["fbm", "-c", s(&cfg), "-o", s(&out), "--horizon", "3"]).status.code(), Some(0));
    let noise = out.join("fbm.csv");
    let before = file_digest(&noise).unwrap();
    let o = run(&["integrate", "-c", s(&cfg), "-o", s(&out), "--noise", s(&noise)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,x_0\n"));
    assert_eq!(traj.lines().count(), 3 * 32 + 2);
    assert_eq!(file_digest(&noise).unwrap(), before);
}

#[test]
fn calibrated_constants_are_pinned_by_digest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BASE);
    let kdir = dir.path().join("k");
    let o = run(&["calibrate", "-c", s(&cfg), "-o", s(&kdir)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let kpath = kdir.join("constants.toml");
    let digest = file_digest(&kpath).unwrap();

    let pinned = format!("{BASE}\n[constants]\npath = \"k/constants.toml\"\ndigest = \"{digest}\"\n");
    let cfg2 = write_config(dir.path(), "pinned.toml", &pinned);
    let o = run(&["couple", "-c", s(&cfg2), "-o", s(&dir.path().join("run"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let wrong = pinned.replace(&digest, &"0".repeat(64));
    let cfg3 = write_config(dir.path(), "wrong.toml", &wrong);
    let o = run(&["couple", "-c", s(&cfg3), "-o", s(&dir.path().join("run"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("digest"));
}

#[test]
fn tail_writes_survival_and_is_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BASE);
    let mut outs = Vec::new();
    for w in ["1", "2"] {
        let out = dir.path().join(format!("w{w}"));
        let o = bin().args(["tail", "-c", s(&cfg), "-o", s(&out)]).env("FRACOUPLE_WORKERS", w).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outs.push(std::fs::read_to_string(out.join("survival.csv")).unwrap());
    }
    assert!(outs[0].starts_with("t,survival,ci_lo,ci_hi,n_at_risk\n"));
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn bad_worker_env_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BASE);
    let o = bin().args(["fbm", "-c", s(&cfg), "-o", s(dir.path())]).env("FRACOUPLE_WORKERS", "many").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FRACOUPLE_WORKERS"));
}

#[test]
fn failed_validation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", BASE);
    let o = run(&["validate", "-c", s(&cfg), "-o", s(dir.path()), "--quick", "--alpha-h-scale", "1.1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("validate.csv")).unwrap();
    assert!(report.starts_with("item,status,value,threshold\n"));
    assert!(report.lines().any(|l| l.starts_with("mvn_variance,fail,")));
}
