use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    run_in(None, args, None)
}

fn run_in(dir: Option<&Path>, args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_soliton-lab"));
    cmd.args(args);
    if let Some(d) = dir {
        cmd.current_dir(d);
    }
    match threads {
        Some(t) => cmd.env("SOLITON_LAB_THREADS", t),
        None => cmd.env_remove("SOLITON_LAB_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of a CSV file, with `#` header lines and the column line dropped.
fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn lemma1_on_cigar_gives_five_rows_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("v.csv");
    let o = run(&[
        "verify",
        "--model",
        "cigar",
        "--identities",
        "lemma1",
        "--points",
        "50",
        "--seed",
        "7",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = read(&csv);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 250);
    assert!(rows.iter().all(|r| r.last().unwrap() == "pass"));
    assert!(text.starts_with("# format_version = soliton-lab-report/1\n# command = verify\n"));
    assert!(text.contains("# points = 50\n"));
}

#[test]
fn constant_potential_skips_every_prop3_row() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("e.json");
    let o = run(&[
        "verify",
        "--model",
        "euclidean",
        "--identities",
        "prop3",
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&read(&json)).unwrap();
    let reports = doc["reports"].as_array().unwrap();
    assert!(!reports.is_empty());
    for r in reports {
        assert_eq!(r["status"], "gradient-critical: skipped");
    }
}

#[test]
fn usage_errors_exit_two() {
    let o = run(&["verify", "--identities", "bogus"]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("lemma1") && stderr(&o).contains("main_u0"),
        "{}",
        stderr(&o)
    );
    assert_eq!(code(&run(&["verify", "--model", "torus"])), 2);
    assert_eq!(code(&run(&["verify", "--points", "many"])), 2);
    assert_eq!(code(&run(&["decay"])), 2);
    assert_eq!(
        code(&run(&["decay", "--model", "bryant", "--quantity", "curl"])),
        2
    );
    assert_eq!(code(&run(&["bryant", "--rmax", "-1"])), 2);
    assert_eq!(code(&run(&["bryant", "--tol", "0"])), 2);
    assert_eq!(code(&run(&["report"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn bryant_scalar_decays_like_inverse_radius() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("d.json");
    let o = run(&[
        "decay",
        "--model",
        "bryant",
        "--quantity",
        "R",
        "--rmin",
        "100",
        "--rmax",
        "10000",
        "--n",
        "32",
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&read(&json)).unwrap();
    let fit = &doc["fits"][0];
    assert!(
        (fit["exponent"].as_f64().unwrap() + 1.0).abs() < 0.05,
        "{fit}"
    );
    assert_eq!(fit["verdict"], "power law");
    assert_eq!(fit["consistent"], true);
}

#[test]
fn exponent_table_has_one_row_per_b() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let o = run(&[
        "decay",
        "--table-exponents",
        "--a",
        "1",
        "--b",
        "1,1.5,2",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = data_rows(&read(&csv));
    assert_eq!(rows.len(), 3);
    let num = |r: &Vec<String>, k: usize| r[k].parse::<f64>().unwrap();
    // columns: a, b, sigma, e1, e2, effective, round
    assert_eq!(
        (num(&rows[0], 2), num(&rows[0], 3), num(&rows[0], 4)),
        (2.0, -2.0, -2.0)
    );
    assert!((num(&rows[1], 3) - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(num(&rows[1], 4), -1.0);
    assert_eq!(rows[1][6], "true");
    assert_eq!(rows[2][6], "false");
}

#[test]
fn product_scalar_is_not_a_power_law() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let o = run(&[
        "decay",
        "--model",
        "cigarxr",
        "--quantity",
        "R",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = data_rows(&read(&csv));
    assert_eq!(rows[0][8], "not power law");
}

#[test]
fn consistency_violation_exits_one() {
    // a negative slack pushes the R fit past its bound
    let o = run(&[
        "decay",
        "--model",
        "bryant",
        "--quantity",
        "R",
        "--rmax",
        "1000",
        "--consistency-tol",
        "-0.5",
        "--json",
        "/dev/null",
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn comparison_summary_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("cmp.json");
    let o = run(&[
        "decay",
        "--comparison-c",
        "2",
        "--comparison-u0",
        "9",
        "--json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&read(&json)).unwrap();
    let c = &doc["comparison"];
    assert_eq!(c["sup_bound"], 9.0);
    assert!(c["max_difference"].as_f64().unwrap() < 1e-8);
}

#[test]
fn bryant_profile_is_monotone_conserved_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = run(&[
            "bryant",
            "--rmax",
            "1e4",
            "--tol",
            "1e-10",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let text = read(&a);
    assert_eq!(text, read(&b));
    let rows = data_rows(&text);
    let r: Vec<f64> = rows.iter().map(|row| row[0].parse().unwrap()).collect();
    assert!(r.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(*r.last().unwrap(), 1e4);
    let drift = rows
        .iter()
        .map(|row| (row[6].parse::<f64>().unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(drift < 1e-8, "{drift}");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        "# cigar only\nmodel = cigar\nidentities = soliton\npoints = 5\ncsv = out.csv\n",
    )
    .unwrap();
    let o = run_in(
        Some(dir.path()),
        &["--config", cfg.to_str().unwrap(), "verify", "--points", "3"],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = read(&dir.path().join("out.csv"));
    assert_eq!(data_rows(&text).len(), 3);
    assert!(text.contains("# points = 3\n") && text.contains("# model = cigar\n"));

    std::fs::write(&cfg, "model = cigar\nbogus = 1\n").unwrap();
    let o = run_in(
        Some(dir.path()),
        &["--config", cfg.to_str().unwrap(), "verify"],
        None,
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn json_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let args = |p: &Path| {
        vec![
            "verify".to_string(),
            "--model".into(),
            "cigar,cigarxr".into(),
            "--identities".into(),
            "soliton,lemma1,lsf,main_u0".into(),
            "--points".into(),
            "8".into(),
            "--seed".into(),
            "11".into(),
            "--json".into(),
            p.file_name().unwrap().to_str().unwrap().into(),
        ]
    };
    let mut outputs = Vec::new();
    for (k, threads) in [None, Some("1"), Some("4"), Some("0")]
        .into_iter()
        .enumerate()
    {
        // same file name each time, since the path is echoed into the config
        let sub = dir.path().join(k.to_string());
        std::fs::create_dir(&sub).unwrap();
        let p = sub.join("r.json");
        let a = args(&p);
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        let o = run_in(Some(&sub), &a, threads);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outputs.push(read(&p));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(
        code(&run_in(
            None,
            &["verify", "--model", "cigar", "--points", "1"],
            Some("lots")
        )),
        2
    );
}

#[test]
fn report_rerenders_verify_json_as_the_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (json, csv, again) = (
        dir.path().join("r.json"),
        dir.path().join("r.csv"),
        dir.path().join("again.csv"),
    );
    let o = run(&[
        "verify",
        "--model",
        "cigarxr",
        "--identities",
        "lsf,main_u0",
        "--points",
        "4",
        "--json",
        json.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(&[
        "report",
        "--input",
        json.to_str().unwrap(),
        "--csv",
        again.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read(&csv), read(&again));
}
