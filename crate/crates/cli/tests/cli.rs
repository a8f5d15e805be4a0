use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mmm_core::pricing::{cash_annuity_value, fair_zcb};
use mmm_core::{Annuity, AnnuityKind, Discounting, IngestionConfig, Mmm, Month, Series};
use tempfile::TempDir;

const ALPHA: f64 = 0.00586;
const ETA: f64 = 0.049496;

fn month(s: &str) -> Month {
    s.parse().unwrap()
}

/// Writes a monthly file from 1871-01 whose discounted index follows one
/// simulated model path under a 4% short rate.
fn synthetic_data(dir: &Path) -> PathBuf {
    let origin = month("1871-01");
    let p = Mmm::new(ALPHA, ETA, origin).unwrap();
    let months = 1755;
    let grid: Vec<f64> = (1..months).map(|k| k as f64 / 12.0).collect();
    let path = p.simulate_paths(0.05, 0.0, &grid, 1, 2024).unwrap().remove(0);
    let mut text = String::from("date,index,short_rate\n");
    for (k, x) in path.iter().enumerate() {
        let s0 = (0.04 * k as f64 / 12.0).exp();
        text.push_str(&format!("{},{},0.04\n", origin.offset(k as i32), x * s0));
    }
    let file = dir.join("data.csv");
    fs::write(&file, text).unwrap();
    file
}

fn mmm(args: &[&str], data: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmm"))
        .args(args)
        .arg("--data")
        .arg(data)
        .arg("--out")
        .arg(out)
        .env_remove("MMM_DATA")
        .output()
        .unwrap()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read_table(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn given_params() -> [&'static str; 6] {
    ["--alpha", "0.00586", "--eta", "0.049496", "--origin", "1871-01"]
}

#[test]
fn calibrate_writes_report_and_manifest() {
    let tmp = TempDir::new().unwrap();
    let data = synthetic_data(tmp.path());
    let out = tmp.path().join("cal");
    let o = mmm(
        &["calibrate", "--model", "mmm", "--from", "1871-01", "--to", "1932-01"],
        &data,
        &out,
    );
    ok(&o);
    let rows = read_table(&out.join("calibration.csv"));
    assert_eq!(rows[0], ["key", "value"]);
    let get = |k: &str| rows.iter().find(|r| r[0] == k).unwrap()[1].clone();
    let alpha: f64 = get("alpha").parse().unwrap();
    let se: f64 = get("se_alpha").parse().unwrap();
    assert!(alpha > 0.0 && se > 0.0);
    assert!(get("log_likelihood").parse::<f64>().is_ok());
    assert_eq!(get("converged"), "true");
    assert!(String::from_utf8_lossy(&o.stdout).contains("alpha"));

    let m = manifest(&out);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["command"], "calibrate");
    assert_eq!(m["config"]["calibration"]["from"], "1871-01");
    assert_eq!(m["config"]["calibration"]["tol"], 1e-8);
    assert_eq!(m["params"]["params"]["model"], "mmm");

    let g = tmp.path().join("gbm");
    ok(&mmm(&["calibrate", "--model", "gbm"], &data, &g));
    let rows = read_table(&g.join("calibration.csv"));
    assert!(rows.iter().any(|r| r[0] == "theta"));
}

#[test]
fn usage_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let data = synthetic_data(tmp.path());
    let o = mmm(&["calibrate", "--bogus"], &data, tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = mmm(&["frobnicate"], &data, tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = mmm(&["price-zcb", "--t", "1932-13", "--T", "2017-03"], &data, tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn module_errors_exit_one_with_category() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("nope.csv");
    let o = mmm(&["calibrate"], &missing, tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[IO]"));

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "date,index,short_rate\n1871-01,1.0,0.04\n1871-03,1.0,0.04\n").unwrap();
    let o = mmm(&["calibrate"], &bad, tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[MalformedSeries]"));

    let data = synthetic_data(tmp.path());
    let o = mmm(
        &[
            "price-zcb",
            "--t",
            "2000-01",
            "--T",
            "1990-01",
            "--alpha",
            "0.005",
            "--eta",
            "0.05",
        ],
        &data,
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[InvalidWindow]"));

    let o = mmm(
        &["hedge", "--t0", "1932-01", "--T", "2017-03", "--alpha", "0.005"],
        &data,
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[Usage]"));

    let o = mmm(
        &["backtest", "--tenors", "200", "--alpha", "0.005", "--eta", "0.05"],
        &data,
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[EmptyBacktest]"));
}

#[test]
fn price_zcb_matches_library() {
    let tmp = TempDir::new().unwrap();
    let data = synthetic_data(tmp.path());
    let out = tmp.path().join("zcb");
    let mut args = vec!["price-zcb", "--t", "1932-01", "--T", "2017-03"];
    args.extend(given_params());
    ok(&mmm(&args, &data, &out));
    let rows = read_table(&out.join("zcb.csv"));
    let col = |k: &str| {
        rows[1][rows[0].iter().position(|h| h == k).unwrap()]
            .parse::<f64>()
            .unwrap()
    };

    let series = Series::load(&data, &IngestionConfig::default()).unwrap();
    let p = Mmm::new(ALPHA, ETA, month("1871-01")).unwrap();
    let q = fair_zcb(&p, &series, month("1932-01"), month("2017-03"), Discounting::Realized).unwrap();
    assert_eq!(col("fair_bond"), q.fair_bond);
    assert_eq!(col("savings_bond"), q.savings_bond);
    assert_eq!(col("lambda"), q.lambda);
}

#[test]
fn cash_annuity_series_matches_library() {
    let tmp = TempDir::new().unwrap();
    let data = synthetic_data(tmp.path());
    let out = tmp.path().join("ann");
    let mut args = vec![
        "annuity",
        "--kind",
        "cash",
        "--t0",
        "1932-01",
        "--payments",
        "1972-01..2016-01",
        "--valuation-to",
        "1971-12",
    ];
    args.extend(given_params());
    ok(&mmm(&args, &data, &out));
    let rows = read_table(&out.join("annuity.csv"));
    assert_eq!(rows[0], ["date", "discounted_rw", "discounted_rn"]);
    assert_eq!(rows.len(), 1 + 40 * 12);

    let series = Series::load(&data, &IngestionConfig::default()).unwrap();
    let p = Mmm::new(ALPHA, ETA, month("1871-01")).unwrap();
    let spec = Annuity::annual(month("1932-01"), 40, 45, AnnuityKind::CashLinked).unwrap();
    for row in &rows[1..] {
        let v = cash_annuity_value(&p, &series, month(&row[0]), &spec).unwrap();
        assert_eq!(row[1].parse::<f64>().unwrap(), v.discounted_rw);
        assert_eq!(row[2].parse::<f64>().unwrap(), 45.0);
    }
}

#[test]
fn equity_annuity_reports_both_models() {
    let tmp = TempDir::new().unwrap();
    let data = synthetic_data(tmp.path());
    let dates = tmp.path().join("dates.txt");
    fs::write(&dates, "# payment dates\n1972-01\n1973-01\n\n1974-01\n").unwrap();
    let out = tmp.path().join("eq");
    let mut args = vec![
        "annuity",
        "--kind",
        "equity",
        "--t0",
        "1932-01",
        "--valuation-to",
        "1932-12",
        "--theta",
        "0.13",
    ];
    args.extend(["--payments", dates.to_str().unwrap()]);
    args.extend(given_params());
    ok(&mmm(&args, &data, &out));
    let rows = read_table(&out.join("annuity.csv"));
    assert_eq!(
        rows[0],
        ["date", "mmm_value", "mmm_discounted", "bs_value", "bs_discounted"]
    );
    assert_eq!(rows.len(), 13);
    for r in &rows[1..] {
        let (m, b): (f64, f64) = (r[2].parse().unwrap(), r[4].parse().unwrap());
        assert!(m > 0.0 && b > 0.0);
    }
    assert_eq!(manifest(&out)["params"]["gbm"]["theta"], 0.13);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let data = synthetic_data(tmp.path());
    let out = tmp.path().join("bt");
    let strip = |d: &Path| {
        let mut m = manifest(d);
        m.as_object_mut().unwrap().remove("created_unix");
        m
    };
    let mut runs = Vec::new();
    for _ in 0..2 {
        ok(&mmm(
            &["backtest", "--tenors", "10,25", "--from", "1932-01"],
            &data,
            &out,
        ));
        runs.push((fs::read(out.join("backtest.csv")).unwrap(), strip(&out)));
    }
    assert_eq!(runs[0], runs[1]);
    let a = out;
    let rows = read_table(&a.join("backtest.csv"));
    assert_eq!(rows[0][0], "tenor_years");
    assert_eq!(rows.len(), 3);
    assert_eq!(manifest(&a)["params"]["calibrated"], true);
}

#[test]
fn hedge_and_annuity_backtest_outputs() {
    let tmp = TempDir::new().unwrap();
    let data = synthetic_data(tmp.path());
    let out = tmp.path().join("h");
    let mut args = vec!["hedge", "--t0", "1932-01", "--T", "1957-01"];
    args.extend(given_params());
    ok(&mmm(&args, &data, &out));
    let rows = read_table(&out.join("hedge.csv"));
    assert_eq!(rows.len(), 1 + 301);
    assert_eq!(rows[1][5], "0");

    let out = tmp.path().join("ab");
    let mut args = vec!["backtest-annuity", "--deferral", "40", "--payments", "45"];
    args.extend(given_params());
    ok(&mmm(&args, &data, &out));
    let rows = read_table(&out.join("annuity_backtest.csv"));
    let get = |k: &str| rows.iter().find(|r| r[0] == k).unwrap()[1].parse::<f64>().unwrap();
    assert_eq!(get("n_windows"), 733.0);
    assert_eq!(get("mean_rn"), 45.0);
}

#[test]
fn simulation_depends_only_on_seed() {
    let tmp = TempDir::new().unwrap();
    let data = synthetic_data(tmp.path());
    let run = |name: &str, seed: &str| {
        let out = tmp.path().join(name);
        let mut args = vec![
            "simulate", "--t0", "1932-01", "--T", "1942-01", "--paths", "5", "--seed", seed,
        ];
        args.extend(given_params());
        ok(&mmm(&args, &data, &out));
        fs::read(out.join("paths.csv")).unwrap()
    };
    let a = run("a", "7");
    assert_eq!(a, run("b", "7"));
    assert_ne!(a, run("c", "8"));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 1 + 5 * 121);
}

#[test]
fn config_file_is_applied_and_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    let data = synthetic_data(tmp.path());
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        "seed = 3\n[model]\nalpha = 0.00586\neta = 0.049496\norigin = \"1871-01\"\n[valuation]\nflat_rate = 0.03\n",
    )
    .unwrap();
    let out = tmp.path().join("c");
    let o = mmm(
        &[
            "--config",
            cfg.to_str().unwrap(),
            "price-zcb",
            "--t",
            "1932-01",
            "--T",
            "2100-01",
            "--eta",
            "0.05",
        ],
        &data,
        &out,
    );
    ok(&o);
    let m = manifest(&out);
    assert_eq!(m["config"]["seed"], 3);
    assert_eq!(m["config"]["model"]["eta"], 0.05);
    assert_eq!(m["config"]["model"]["alpha"], 0.00586);
    assert_eq!(m["config"]["valuation"]["flat_rate"], 0.03);
    assert_eq!(m["params"]["calibrated"], false);

    fs::write(&cfg, "sead = 3\n").unwrap();
    let o = mmm(&["--config", cfg.to_str().unwrap(), "calibrate"], &data, &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[Config]"));
}
