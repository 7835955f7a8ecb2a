use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn out_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn bench(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stokes-bench")).args(args).arg("--out").arg(out).output().unwrap()
}

const SMALL: [&str; 5] = ["channel", "--override", "lengths=[2, 3]", "--override", "levels=[0]"];

#[test]
fn repeated_runs_write_identical_csv() {
    let (a, b) = (out_dir("det_a"), out_dir("det_b"));
    for dir in [&a, &b] {
        let out = bench(&SMALL, dir);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ca = std::fs::read_to_string(a.join("channel.csv")).unwrap();
    let cb = std::fs::read_to_string(b.join("channel.csv")).unwrap();
    assert_eq!(ca, cb);
    let header = ca.lines().next().unwrap();
    assert!(header.starts_with("L,W,h,level,backend,preset,precond"), "{header}");
    assert!(header.ends_with("wall_time_s"));
    // 2 lengths x 3 preconditioners
    assert_eq!(ca.lines().count(), 7);
}

#[test]
fn meta_sidecar_and_svg() {
    let dir = out_dir("meta");
    let mut args = SMALL.to_vec();
    args.push("--svg");
    let out = bench(&args, &dir);
    assert!(out.status.success());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("channel.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["rows"], 6);
    assert_eq!(meta["unconverged"], 0);
    assert_eq!(meta["seed"], 20240601);
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(meta["config"]["levels"], "[0]");
    let svg = std::fs::read_to_string(dir.join("channel.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn unconverged_rows_set_exit_code_two() {
    let dir = out_dir("unconverged");
    let mut args = SMALL.to_vec();
    args.extend(["--override", "maxit=2"]);
    let out = bench(&args, &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.join("channel.csv").exists());
}

#[test]
fn bad_input_is_an_error() {
    let dir = out_dir("bad");
    for args in [
        vec!["channel", "--override", "lenghts=[2]"],
        vec!["no_such_experiment"],
        vec!["channel", "--precond", "bogus"],
    ] {
        let out = bench(&args, &dir);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

#[test]
fn config_file_matches_overrides() {
    let dir = out_dir("cfgfile");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.json");
    std::fs::write(&cfg, r#"{"lengths": [2, 3], "levels": [0]}"#).unwrap();
    let out = bench(&["channel", "--config", cfg.to_str().unwrap()], &dir.join("a"));
    assert!(out.status.success());
    let via_flags = out_dir("cfgflags");
    assert!(bench(&SMALL, &via_flags).status.success());
    assert_eq!(
        std::fs::read_to_string(dir.join("a/channel.csv")).unwrap(),
        std::fs::read_to_string(via_flags.join("channel.csv")).unwrap()
    );
}
