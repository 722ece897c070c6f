use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use trustdyn_core::config::KeyValueConfig;
use trustdyn_core::io::{read_equilibria, read_finite_rows, read_numeric_table, read_q_trace, read_trajectory};

fn trustdyn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trustdyn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("TRUSTDYN_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = trustdyn(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn code(args: &[&str], out: &Path) -> i32 {
    trustdyn(args, out).status.code().expect("exit code")
}

fn meta(dir: &Path) -> KeyValueConfig {
    KeyValueConfig::load(&dir.join("meta.txt")).unwrap()
}

/// CSV files listed in the meta file, by kind.
fn listed(dir: &Path) -> Vec<(String, PathBuf)> {
    let m = meta(dir);
    m.keys()
        .filter_map(|k| k.strip_prefix("csv."))
        .map(|kind| (kind.to_string(), dir.join(m.get(&format!("csv.{kind}")).unwrap())))
        .collect()
}

fn check_round_trip(dir: &Path) {
    let files = listed(dir);
    assert!(!files.is_empty());
    for (kind, path) in files {
        let f = fs::File::open(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let parsed = match kind.as_str() {
            "trajectory" => read_trajectory(f).map(|_| ()),
            "equilibria" => read_equilibria(f).map(|_| ()),
            k if k.starts_with("finite") => read_finite_rows(f).map(|_| ()),
            k if k == "qlearn" || k.starts_with("qlearn_trace") => read_q_trace(f).map(|_| ()),
            _ => read_numeric_table(f).map(|_| ()),
        };
        assert!(parsed.is_ok(), "{kind}: {parsed:?}");
    }
}

/// Runs the command twice and compares every listed CSV byte for byte.
fn assert_reproducible(args: &[&str]) {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(args, &a);
    ok(args, &b);
    let files = listed(&a);
    assert!(!files.is_empty());
    for (kind, path) in files {
        let other = b.join(path.file_name().unwrap());
        assert_eq!(fs::read(&path).unwrap(), fs::read(&other).unwrap(), "{kind} differs between runs");
    }
    check_round_trip(&a);
}

#[test]
fn commands_are_reproducible() {
    assert_reproducible(&["finite", "--Z_u", "10", "--Z_c", "10", "--mc_steps", "20000", "--mc_record_every", "100"]);
    assert_reproducible(&["replicator", "--eps", "0.5", "--t_end", "20"]);
    assert_reproducible(&["qlearn", "--pop_size", "20", "--episodes", "200", "--runs", "3", "--seed", "4"]);
    assert_reproducible(&["equilibria", "--eps", "0.5", "--v", "1"]);
    assert_reproducible(&["sweep", "--axis1", "eps=0:1:5", "--axis2", "v=0.1,1"]);
    assert_reproducible(&["sweep", "--mode", "qlearn", "--axis1", "eps=0,2", "--pop_size", "10", "--episodes", "50", "--runs", "2"]);
}

#[test]
fn default_sweep_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    ok(&["sweep", "--axis2", "v=0.1,0.5,1", "--jobs", "3"], &out);
    let m = meta(&out);
    assert_eq!(m.get("command"), Some("sweep"));
    assert_eq!(m.get("points"), Some("63"));
    assert_eq!(m.get("seed"), Some("1"));
    assert!(m.get("created_unix").is_some());
    let kinds: Vec<String> = listed(&out).into_iter().map(|(k, _)| k).collect();
    assert_eq!(kinds, ["adoption_difference", "finite_with_trust", "finite_without_trust"]);
    let (axes, with) = read_finite_rows(fs::File::open(out.join("finite_with_trust.csv")).unwrap()).unwrap();
    let (_, without) = read_finite_rows(fs::File::open(out.join("finite_without_trust.csv")).unwrap()).unwrap();
    assert!(axes.is_empty());
    assert_eq!((with.len(), without.len()), (63, 63));
    assert_eq!(with[0].stationary.len(), 10);
    assert_eq!(without[0].stationary.len(), 6);
    // Sorted by eps, then v.
    assert!(with.windows(2).all(|w| (w[0].eps, w[0].v) < (w[1].eps, w[1].v)));
    let diff = read_numeric_table(fs::File::open(out.join("adoption_difference.csv")).unwrap()).unwrap();
    assert_eq!(diff.header, ["eps", "v", "adoption_with_trust", "adoption_without_trust", "difference"]);
    for (row, (a, b)) in diff.rows.iter().zip(with.iter().zip(&without)) {
        assert_eq!(row[4], a.adoption_level - b.adoption_level);
    }
    // The same grid on one worker gives the same bytes.
    let serial = tmp.path().join("serial");
    ok(&["sweep", "--axis2", "v=0.1,0.5,1", "--jobs", "1"], &serial);
    for name in ["finite_with_trust.csv", "finite_without_trust.csv", "adoption_difference.csv"] {
        assert_eq!(fs::read(out.join(name)).unwrap(), fs::read(serial.join(name)).unwrap());
    }
}

#[test]
fn single_row_and_extra_axis_sweeps() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("one");
    ok(&["sweep", "--axis1", "eps=0.3", "--axis2", "", "--trust_variants", "with"], &out);
    let (_, rows) = read_finite_rows(fs::File::open(out.join("finite_with_trust.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(!out.join("adoption_difference.csv").exists());

    let out = tmp.path().join("beta");
    ok(&["sweep", "--axis1", "beta=0,0.1", "--axis2", "mu=-0.2,0.2", "--trust_variants", "without"], &out);
    let (axes, rows) = read_finite_rows(fs::File::open(out.join("finite_without_trust.csv")).unwrap()).unwrap();
    assert_eq!(axes, ["beta", "mu"]);
    assert_eq!(rows.len(), 4);
    // Neutral selection gives the uniform distribution.
    assert!(rows[0].stationary.iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-12));

    let out = tmp.path().join("rep");
    ok(&["sweep", "--mode", "replicator", "--axis1", "eps=0,1", "--t_end", "50"], &out);
    check_round_trip(&out);
    let t = read_numeric_table(fs::File::open(out.join("replicator_without_trust.csv")).unwrap()).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert!(t.rows.iter().all(|r| r[4] == 0.0 && r[5].abs() < 1e-12));
}

#[test]
fn seed_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["qlearn", "--pop_size", "10", "--episodes", "30", "--runs", "1"];
    let run_env = |seed: &str, out: &Path| {
        let o = Command::new(env!("CARGO_BIN_EXE_trustdyn"))
            .args(args)
            .arg("--out")
            .arg(out)
            .env("TRUSTDYN_SEED", seed)
            .output()
            .unwrap();
        assert!(o.status.success());
        fs::read(out.join("qlearn_trace.csv")).unwrap()
    };
    let env7 = run_env("7", &tmp.path().join("env7"));
    let mut flag_args = args.to_vec();
    flag_args.extend(["--seed", "7"]);
    ok(&flag_args, &tmp.path().join("flag7"));
    ok(&args, &tmp.path().join("default"));
    assert_eq!(env7, fs::read(tmp.path().join("flag7/qlearn_trace.csv")).unwrap());
    assert_ne!(env7, fs::read(tmp.path().join("default/qlearn_trace.csv")).unwrap());
    assert_eq!(meta(&tmp.path().join("env7")).get("seed"), Some("7"));
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# intermediate monitoring cost\neps = 0.5\nt_end = 10\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let out = tmp.path().join("a");
    ok(&["replicator", "--config", cfg], &out);
    assert_eq!(meta(&out).get("eps"), Some("0.5"));
    let out = tmp.path().join("b");
    ok(&["replicator", "--config", cfg, "--eps", "1"], &out);
    assert_eq!(meta(&out).get("eps"), Some("1"));
    assert_eq!(meta(&out).get("t_end"), Some("10"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    assert_eq!(code(&["finite", "--eps", "abc"], &out), 2);
    assert_eq!(code(&["finite", "--p_T", "1.5"], &out), 2);
    assert_eq!(code(&["qlearn", "--census", "all"], &out), 2);
    assert_eq!(code(&["sweep", "--axis1", "gamma=1"], &out), 2);
    let bad_cfg = tmp.path().join("bad.cfg");
    fs::write(&bad_cfg, "eps=0.1\nlambda=2\n").unwrap();
    assert_eq!(code(&["finite", "--config", bad_cfg.to_str().unwrap()], &out), 2);
    assert_eq!(code(&["finite", "--config", tmp.path().join("missing.cfg").to_str().unwrap()], &out), 2);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    assert_eq!(code(&["finite"], &blocker.join("sub")), 2);
    assert!(!out.exists());

    assert_eq!(code(&["replicator", "--dt", "50", "--b_u", "20", "--eps", "0.5"], &out), 3);

    // With no safety cost the unsafe point has a zero eigenvalue, so it
    // cannot be stable even though mu < 0.
    assert_eq!(code(&["equilibria", "--c", "0", "--eps", "0.5"], &out), 4);
    assert!(out.join("equilibria.csv").exists());
    assert_eq!(code(&["equilibria", "--eps", "0.5", "--grid"], &tmp.path().join("g")), 0);
}

#[test]
fn failed_sweep_leaves_nothing_behind() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let o = trustdyn(&["sweep", "--mode", "replicator", "--axis1", "b_u=1,20", "--dt", "50", "--eps", "0.5"], &out);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());

    // A pre-existing directory is kept, but nothing is written into it.
    fs::create_dir(&out).unwrap();
    fs::write(out.join("keep.txt"), "x").unwrap();
    let o = trustdyn(&["sweep", "--mode", "replicator", "--axis1", "b_u=1,20", "--dt", "50", "--eps", "0.5"], &out);
    assert_eq!(o.status.code(), Some(3));
    let names: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, ["keep.txt"]);
}

#[test]
fn equilibria_report_contents() {
    let tmp = tempfile::tempdir().unwrap();
    let report = ok(&["equilibria", "--eps", "0.5"], &tmp.path().join("a"));
    let line = |label: &str| report.lines().find(|l| l.starts_with(&format!("{label} "))).unwrap().to_string();
    assert!(line("p4").contains("stable (mu < 0)"));
    assert!(line("p4").split_whitespace().nth(2) == Some("stable"));
    assert!(line("p9").split_whitespace().nth(2) == Some("unstable"));
    assert!(line("p15").contains("infeasible") && line("p15").contains("< 0"));

    let report = ok(&["equilibria", "--eps", "0.5", "--v", "1"], &tmp.path().join("b"));
    assert!(report.lines().any(|l| l.starts_with("p9 ") && l.contains("desirable equilibrium")));
}
