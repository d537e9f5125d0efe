use std::path::Path;
use std::process::{Command, Output};

fn bogolib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bogolib")).args(args).env_remove("BOGOLIB_THREADS").output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn verify_comm1_passes() {
    let out = bogolib(&["verify", "--identity", "comm1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let r = &v["identities"]["comm1"];
    assert_eq!(r["status"], "pass");
    assert!(r["max_dev"].as_f64().unwrap() <= 1e-12);
    assert!(!r["basis_dims"].as_array().unwrap().is_empty());
    assert_eq!(v["bogolib_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["lattice"]["K"], 1);
}

#[test]
fn unknown_identity_is_config_error() {
    assert_eq!(bogolib(&["verify", "--identity", "comm9"]).status.code(), Some(2));
}

#[test]
fn spectrum_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[potential]\nv = 50\nR = 0.2\n[gp]\nN = 20\n[lattice]\nK = 2\n");
    let path = dir.path().join("levels.csv");
    let out = bogolib(&["spectrum", "--config", &cfg, "--max-energy", "200", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("# bogolib_version: "));
    assert!(text.contains("\"K\":2"));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "level_index,energy,degeneracy,occupations");
    assert!(lines[1].starts_with("0,0.0000000000000000e+0,1,"));
    assert!(lines[2].starts_with("1,") && lines[2].contains(",6,"));
}

#[test]
fn spectrum_continuum_choice_is_named() {
    let out = bogolib(&["spectrum", "--a-choice", "continuum", "--max-energy", "50", "--out", "json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["a_choice"], "continuum");
}

#[test]
fn missing_config_names_path() {
    let out = bogolib(&["spectrum", "--config", "/definitely/not/here.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/definitely/not/here.toml"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bogolib(&["spectrum", "--bogus"]).status.code(), Some(2));
    assert_eq!(bogolib(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bogolib(&[]).status.code(), Some(2));
}

#[test]
fn invalid_values_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["[bogoliubov]\nalpha = 1.5\n", "[lattice]\nK = 0\n", "[lattice]\nL = 2\n", "[potential]\nR = 0.9\n[gp]\nN = 1\n", "[ed]\nsectors = [\"e7\"]\n"] {
        let cfg = write(dir.path(), "bad.toml", text);
        let out = bogolib(&["scattering", "--config", &cfg]);
        assert_eq!(out.status.code(), Some(2), "{text}");
    }
}

#[test]
fn computational_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[spectrum]\nbudget = 5\nmax_energy = 500\n");
    let out = bogolib(&["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_thread_count_exits_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_bogolib")).args(["spectrum"]).env("BOGOLIB_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_bogolib")).args(["spectrum", "--max-energy", "50"]).env("BOGOLIB_THREADS", "2").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn scattering_sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[lattice]\nK = 3\n");
    let p = dir.path().join("a.csv");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = bogolib(&["scattering", "--config", &cfg, "--sweep-N", "20,40", "--output", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        runs.push(std::fs::read(&p).unwrap());
    }
    let (ta, tb) = (runs.remove(0), runs.remove(0));
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "N,K,alpha,a_N,a_continuum,residual_sup,phi_l1,phi_tilde_l2");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("20,3,"));
}

#[test]
fn ed_json_and_sweep_csv() {
    let out = bogolib(&["ed", "--sectors", "0,e1", "--levels", "3", "--out", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let run = &v["runs"][0];
    assert_eq!(run["N"], 3);
    assert_eq!(run["sectors"].as_array().unwrap().len(), 2);
    assert!(run["ground"]["ed_energy"].is_number());

    let out = bogolib(&["sweep", "--preset", "desk"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "N,sector,level,ed_gap,predicted,occupations,rel_dev,depletion,e0_per_particle,fourpi_aN");
    for n in ["6,", "12,", "20,"] {
        assert!(lines.iter().any(|l| l.starts_with(n)));
    }
}

#[test]
fn report_concatenates_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.csv");
    let v = dir.path().join("v.json");
    assert_eq!(bogolib(&["spectrum", "--max-energy", "50", "--output", s.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(bogolib(&["verify", "--identity", "bcomm", "--output", v.to_str().unwrap()]).status.code(), Some(0));
    let r = dir.path().join("r.csv");
    let out = bogolib(&["report", s.to_str().unwrap(), v.to_str().unwrap(), "--output", r.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&r).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "source,command,record,field,value");
    assert!(lines.iter().any(|l| l.contains(",spectrum,0,energy,")));
    assert!(lines.iter().any(|l| l.contains(",verify,,identities.bcomm.status,pass")));
    assert_eq!(bogolib(&["report", dir.path().join("none.csv").to_str().unwrap()]).status.code(), Some(2));
}
