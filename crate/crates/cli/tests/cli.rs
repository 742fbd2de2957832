use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sikorski"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn sikorski(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).expect("csv opens");
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn complete_adjoins_both_ends_of_the_line() {
    let dir = tempdir().unwrap();
    let o = sikorski(&["complete", "real_line_atan"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&dir.path().join("complete_points.csv"));
    let adjoined: Vec<f64> = rows
        .iter()
        .filter(|r| r[0] == "adjoined")
        .map(|r| r[2].parse().unwrap())
        .collect();
    assert_eq!(adjoined.len(), 2);
    assert!((adjoined[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-3);
    assert!((adjoined[1] + std::f64::consts::FRAC_PI_2).abs() < 1e-3);
}

#[test]
fn family_flag_beats_experiment_setting() {
    let dir = tempdir().unwrap();
    let o = sikorski(&["complete", "real_line_atan", "--family", "id"], dir.path());
    assert!(o.status.success());
    let probes = read_csv(&dir.path().join("complete_probes.csv"));
    assert!(probes.iter().all(|r| r[1] == "escaping"), "{probes:?}");
    assert!(stdout(&o).contains("adjoined: 0"));
}

#[test]
fn tol_flag_beats_experiment_setting() {
    let dir = tempdir().unwrap();
    let o = sikorski(&["complete", "real_line_atan", "--tol", "1e-9"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("tol: 1.0000000000000001e-9"), "{}", stdout(&o));
    assert!(stdout(&o).contains("adjoined: 0"));
}

#[test]
fn maximal_family_adds_monomials() {
    let dir = tempdir().unwrap();
    let o = sikorski(&["embed", "plane_square", "--family", "maximal:2"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let header = csv::Reader::from_path(dir.path().join("embed_points.csv"))
        .unwrap()
        .headers()
        .unwrap()
        .clone();
    let names: Vec<&str> = header.iter().skip(4).collect();
    assert_eq!(names, ["p", "q", "p^2", "p*q", "q^2"]);
}

#[test]
fn verify_filters_up_to_three_points() {
    let dir = tempdir().unwrap();
    let o = sikorski(&["verify-filters", "--max-size", "3"], dir.path());
    assert!(o.status.success());
    let models = read_csv(&dir.path().join("verify_filters_models.csv"));
    // one uniformity per partition: 1 + 2 + 5
    assert_eq!(models.len(), 8);
    for m in &models {
        let n: u32 = m[0].parse().unwrap();
        assert_eq!(m[3], (2u32.pow(n) - 1).to_string());
    }
    assert!(stdout(&o).contains("status: passed"));
}

#[test]
fn compare_uniform_finds_the_pair_at_ten() {
    let dir = tempdir().unwrap();
    let spec = fixture("parabola_coarse_grid.spec");
    let o = sikorski(&["compare-uniform", spec.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = read_csv(&dir.path().join("compare_uniform_witnesses.csv"));
    assert_eq!(rows.len(), 1);
    let x: f64 = rows[0][3].parse().unwrap();
    let y: f64 = rows[0][4].parse().unwrap();
    assert_eq!(x, 10.0);
    assert!((y - 10.05).abs() < 1e-12);
    // |10.05^2 - 10^2| = 1.0025
    let gap: f64 = rows[0][7].parse().unwrap();
    assert!((gap - 1.0025).abs() < 1e-9);
}

#[test]
fn set_overrides_an_experiment_setting() {
    let dir = tempdir().unwrap();
    let o = sikorski(&["compare-uniform", "parabola_refinement", "--set", "eps=0.5"], dir.path());
    assert!(o.status.success());
    let rows = read_csv(&dir.path().join("compare_uniform_witnesses.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.5);

    let o = sikorski(&["compare-uniform", "parabola_refinement", "--set", "depth=3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not a setting of compare-uniform"));
}

#[test]
fn load_errors_carry_line_and_column() {
    let dir = tempdir().unwrap();
    let spec = fixture("dangling.spec");
    let o = sikorski(&["embed", spec.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 7, column 9"), "{err}");
    assert!(err.contains("unknown variable `y`"), "{err}");
}

#[test]
fn violated_invariant_exits_nonzero_and_names_it() {
    let dir = tempdir().unwrap();
    let spec = fixture("bad_map.spec");
    let o = sikorski(&["check-map", spec.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("invariant violated [space] witness of pu"), "{}", stderr(&o));
    let summary = std::fs::read_to_string(dir.path().join("check_map_summary.txt")).unwrap();
    assert!(summary.contains("status: FAILED"));
}

#[test]
fn missing_description_is_an_error() {
    let dir = tempdir().unwrap();
    let o = sikorski(&["embed", "no_such_space"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no bundled description"));
}

#[test]
fn thread_count_does_not_change_artifacts() {
    let one = tempdir().unwrap();
    let many = tempdir().unwrap();
    for (dir, threads) in [(&one, "1"), (&many, "0")] {
        let o = bin()
            .args(["complete", "spiral", "--out"])
            .arg(dir.path())
            .env("SIKORSKI_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
    }
    for f in ["complete_points.csv", "complete_probes.csv", "complete_iota.csv"] {
        let a = std::fs::read(one.path().join(f)).unwrap();
        let b = std::fs::read(many.path().join(f)).unwrap();
        assert!(a == b, "{f} differs between thread counts");
    }
}

#[test]
fn bundled_lists_every_description() {
    let o = bin().arg("bundled").output().unwrap();
    let names: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(
        names,
        ["real_line_atan", "parabola_refinement", "spiral", "rationals_sqrt2", "unit_interval_compact", "plane_square"]
    );
}

#[test]
fn bundled_files_match_embedded_copies() {
    for (name, text) in sikorski_cli::BUNDLED {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("specs").join(format!("{name}.spec"));
        assert_eq!(std::fs::read_to_string(path).unwrap(), *text);
    }
}
