use std::process::{Command, Output};

fn stldg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stldg")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn csv_rows(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    let header = rd.headers().unwrap().iter().map(str::to_string).collect();
    let rows = rd.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn study_header_is_stable() {
    let (header, rows) =
        csv_rows(&stldg(&["--experiment", "solve", "--problem", "smooth-1d", "--levels", "2", "--space", "standard"]));
    assert_eq!(
        header,
        [
            "method",
            "h",
            "p",
            "ndofs",
            "slabs",
            "error_L2",
            "eoc_L2",
            "error_LDG",
            "eoc_LDG",
            "error_LDGp",
            "eoc_LDGp",
            "error_LDGN",
            "eoc_LDGN",
            "totaldofs",
            "totaldofs2",
            "totaldofs3",
            "totaldofs4"
        ]
    );
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "standard");
}

#[test]
fn single_level_leaves_eocs_blank() {
    let (header, rows) =
        csv_rows(&stldg(&["--experiment", "converge-h", "--problem", "smooth-1d", "--levels", "4", "--space", "all"]));
    assert_eq!(rows.len(), 4);
    for r in &rows {
        for name in ["eoc_L2", "eoc_LDG", "eoc_LDGp", "eoc_LDGN"] {
            assert_eq!(r[col(&header, name)], "");
        }
        assert!(r[col(&header, "error_L2")].parse::<f64>().unwrap() > 0.0);
    }
}

#[test]
fn second_level_fills_eocs() {
    let (header, rows) = csv_rows(&stldg(&[
        "--experiment",
        "converge-h",
        "--problem",
        "smooth-1d",
        "--levels",
        "2,4",
        "--space",
        "tensor",
    ]));
    assert_eq!(rows[0][col(&header, "eoc_L2")], "");
    let eoc: f64 = rows[1][col(&header, "eoc_L2")].parse().unwrap();
    assert!(eoc > 1.5, "eoc {eoc}");
}

#[test]
fn invalid_parameters_exit_nonzero() {
    for args in [
        &["--alpha", "1.5"][..],
        &["--eta-star", "0"],
        &["--eta-star", "-1"],
        &["--space", "lagrange"],
        &["--degree", "0"],
        &["--problem", "wave"],
        &["--problem", "smooth-1d", "--dim", "2"],
        &["--experiment", "converge-hp", "--sigma", "1.2"],
        &["--experiment", "condition", "--levels", "3"],
        &["--solver", "cg"],
        &["--config", "/nonexistent/stldg.toml"],
    ] {
        let out = stldg(args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(out.stdout.is_empty(), "{args:?} wrote output");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"), "{args:?}");
    }
}

#[test]
fn reruns_are_bit_identical() {
    let args = ["--experiment", "converge-h", "--problem", "smooth-2d", "--levels", "1,2", "--space", "all"];
    let a = stldg(&args);
    let b = stldg(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn quasi_trefftz_saves_dofs_at_high_degree() {
    let run = |space| {
        let (header, rows) = csv_rows(&stldg(&[
            "--experiment",
            "solve",
            "--problem",
            "smooth-2d",
            "--levels",
            "1",
            "--degree",
            "6",
            "--space",
            space,
            "--no-newton",
        ]));
        rows[0][col(&header, "ndofs")].parse::<usize>().unwrap()
    };
    let (qt, fs) = (run("qtrefftz"), run("standard"));
    // per element: C(8,2) + C(7,2) = 49 against C(9,3) = 84
    assert_eq!(qt * 84, fs * 49);
}

#[test]
fn converge_p_matches_converge_h_on_shared_configuration() {
    let (hh, h) = csv_rows(&stldg(&[
        "--experiment",
        "converge-h",
        "--problem",
        "smooth-1d",
        "--levels",
        "2,4",
        "--degree",
        "2",
        "--space",
        "etrefftz",
    ]));
    let (ph, p) = csv_rows(&stldg(&[
        "--experiment",
        "converge-p",
        "--problem",
        "smooth-1d",
        "--nx",
        "2",
        "--degree",
        "2,3",
        "--space",
        "etrefftz",
    ]));
    assert_eq!(hh, ph);
    for name in ["method", "h", "p", "ndofs", "slabs", "error_L2", "error_LDG", "error_LDGp", "error_LDGN"] {
        assert_eq!(h[0][col(&hh, name)], p[0][col(&ph, name)], "{name}");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = std::env::temp_dir().join(format!("stldg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.toml");
    std::fs::write(&path, "experiment = \"solve\"\nproblem = \"smooth-1d\"\nspace = [\"tensor\"]\nlevels = [2]\n")
        .unwrap();
    let cfg = path.to_str().unwrap();

    let (header, rows) = csv_rows(&stldg(&["--config", cfg]));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "tensor");
    let (_, rows) = csv_rows(&stldg(&["--config", cfg, "--space", "standard,qtrefftz"]));
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["standard", "qtrefftz"]);
    assert_eq!(col(&header, "method"), 0);

    std::fs::write(&path, "experimnt = \"solve\"\n").unwrap();
    assert!(!stldg(&["--config", cfg]).status.success());

    let out = dir.join("out.csv");
    let res = stldg(&["--config", cfg.replace("run.toml", "missing.toml").as_str()]);
    assert!(!res.status.success());
    std::fs::write(&path, "problem = \"smooth-1d\"\nlevels = [2]\nspace = [\"standard\"]\n").unwrap();
    let res = stldg(&["--config", cfg, "--experiment", "solve", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    assert!(res.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("method,h,p,ndofs"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn condition_experiment_reports_kappa_and_slope() {
    let (header, rows) =
        csv_rows(&stldg(&["--experiment", "condition", "--levels", "1,2,3", "--degree", "2", "--space", "tensor"]));
    assert_eq!(header, ["method", "h", "p", "ndofs", "kappa", "slope"]);
    assert_eq!(rows.len(), 3);
    let kappa: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(kappa.windows(2).all(|w| w[1] > w[0]));
}
