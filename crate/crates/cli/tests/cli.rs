use std::fs;
use std::path::Path;
use std::process::Command;

use mdf_cli::config::parse_pairs;
use mdf_cli::runner::{diagnostics_header, CHECKPOINTS_DIR, DIAGNOSTICS, ERRORS, FIELDS_DIR, MANIFEST, SPECTRUM};
use mdf_cli::vtk::StructuredPoints;
use mdf_cli::{run_case, RunConfig};
use mdf_core::timestepping::read_checkpoint;

fn config(text: &str, out: &Path) -> RunConfig {
    let mut pairs = parse_pairs(text).unwrap();
    pairs.push(("out".into(), out.display().to_string()));
    RunConfig::resolve(&pairs, &[]).unwrap()
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn zero_end_time_writes_single_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("case = custom\nK = 1\nN = 1\nt_end = 0", dir.path());
    let out = run_case(&cfg).unwrap();
    assert_eq!(out.runs[0].records.len(), 1);
    let rows = lines(&dir.path().join(DIAGNOSTICS));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], diagnostics_header());
    assert!(rows[1].starts_with("1,1,0,"));
}

#[test]
fn identical_configs_give_identical_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let text = "case = custom\nK = 2\nN = 1\nt_end = 1/4\ndt = 1/20\nspectrum_n = 4";
    run_case(&config(text, a.path())).unwrap();
    run_case(&config(text, b.path())).unwrap();
    for name in [DIAGNOSTICS, SPECTRUM] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn manifest_reproduces_the_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "case = dissipation\nK = 1\nN = 2\nt_end = 1/10\ndt = 1/20\nRe = 7",
        dir.path(),
    );
    run_case(&cfg).unwrap();
    let text = fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
    assert!(text.contains(env!("CARGO_PKG_VERSION")));
    assert!(text.contains("solver direct"));
    let again = RunConfig::resolve(&parse_pairs(&text).unwrap(), &[]).unwrap();
    assert_eq!(again, cfg);
}

#[test]
fn conservation_columns_are_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("case = conservation\nK = 2\nt_end = 1", dir.path());
    run_case(&cfg).unwrap();
    let rows = lines(&dir.path().join(DIAGNOSTICS));
    let header: Vec<&str> = rows[0].split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let values = |name: &str| -> Vec<f64> {
        rows[1..]
            .iter()
            .map(|r| r.split(',').nth(col(name)).unwrap().parse().unwrap())
            .collect()
    };
    assert_eq!(rows.len(), 22);
    let k2 = values("K2");
    assert!(k2.iter().all(|v| (v - k2[0]).abs() <= 1e-9 * k2[0]));
    let k1 = values("K1");
    assert!(k1[1..].iter().all(|v| (v - k1[1]).abs() <= 1e-9 * k1[1]));
    let (k2m, k2_raw) = (values("K2_mean"), values("K2"));
    assert_eq!(k2m[0], k2_raw[0]);
}

#[test]
fn convergence_sweep_writes_decreasing_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "case = convergence\nsweep_K = 2,3\nsweep_N = 2\nt_end = 1/25\ndt = 1/50",
        dir.path(),
    );
    let out = run_case(&cfg).unwrap();
    assert_eq!(out.runs.len(), 2);
    let rows = lines(&dir.path().join(ERRORS));
    assert_eq!(rows.len(), 3);
    let u2: Vec<f64> = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(6).unwrap().parse().unwrap())
        .collect();
    assert!(u2[1] < u2[0], "{u2:?}");
    let diag = lines(&dir.path().join(DIAGNOSTICS));
    assert_eq!(diag.len(), 1 + 2 * 3);
}

#[test]
fn dumps_and_checkpoints_reload() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        "case = custom\nflow = taylor-green\nK = 2\nN = 1\nt_end = 3/20\ndt = 1/20\ndump_every = 2\ncheckpoint_every = 5",
        dir.path(),
    );
    let out = run_case(&cfg).unwrap();
    let fields = dir.path().join(FIELDS_DIR);
    let mut names: Vec<String> = fs::read_dir(&fields)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["K2_N1_step000000.vtk", "K2_N1_step000002.vtk", "K2_N1_step000003.vtk"]
    );
    let dump = StructuredPoints::read(
        fs::File::open(fields.join(&names[2]))
            .map(std::io::BufReader::new)
            .unwrap(),
    )
    .unwrap();
    assert_eq!(dump.dims, [4, 4, 4]);
    for name in ["u1", "u2", "w1", "w2"] {
        assert!(dump.get(name).is_some(), "{name}");
    }
    let ckpt = dir.path().join(CHECKPOINTS_DIR).join("K2_N1_step000003.txt");
    let (state, k, n) = read_checkpoint(std::io::BufReader::new(fs::File::open(ckpt).unwrap())).unwrap();
    assert_eq!((k, n), (2, 1));
    assert_eq!(state.u2.coeffs, out.runs[0].state.u2.coeffs);
    assert_eq!(state.k, 3);
}

fn mdf(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mdf")).args(args).output().unwrap()
}

#[test]
fn binary_runs_from_flags_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = mdf(&[
        "--case",
        "custom",
        "--K",
        "1",
        "--N",
        "1",
        "--dt",
        "1/10",
        "--t-end",
        "1/5",
        "--inviscid",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(lines(&out.join(DIAGNOSTICS)).len(), 4);

    let cfg_path = dir.path().join("run.cfg");
    fs::write(&cfg_path, "case = custom\nK = 1\nN = 1\ndt = 1/10\nt_end = 1\n").unwrap();
    let out2 = dir.path().join("run2");
    let o = mdf(&[
        "--config",
        cfg_path.to_str().unwrap(),
        "--t-end",
        "1/10",
        "--re",
        "50",
        "--out",
        out2.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(lines(&out2.join(DIAGNOSTICS)).len(), 3);
    assert!(fs::read_to_string(out2.join(MANIFEST)).unwrap().contains("Re = 5e1"));
}

#[test]
fn binary_reports_failures_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = mdf(&["--case", "conservation", "--dt", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`dt`"));

    let o = mdf(&["--case", "conservation", "--set", "speed=3"]);
    assert_eq!(o.status.code(), Some(2));

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = mdf(&[
        "--case",
        "custom",
        "--K",
        "1",
        "--N",
        "1",
        "--t-end",
        "0",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}
