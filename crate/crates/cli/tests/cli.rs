use bubble_fts_cli::run;
use std::fs;
use std::path::{Path, PathBuf};
use tempfile::TempDir;

fn data(name: &str) -> String {
    format!("{}/../core/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn bf(args: &[&str]) -> i32 {
    run(std::iter::once("bubble-fts").chain(args.iter().copied()))
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn json(p: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn scan_1980s(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let out = path(dir, name);
    let spx = data("spx_1980_1993.csv");
    let mut args = vec!["scan", "--input", &spx, "--from", "1984-01-01", "--to", "1989-12-31", "--out", &out];
    args.extend_from_slice(extra);
    assert_eq!(bf(&args), 0);
    PathBuf::from(out)
}

#[test]
fn scan_writes_alarms_with_provenance() {
    let dir = TempDir::new().unwrap();
    let plot = path(&dir, "plot.csv");
    let out = scan_1980s(&dir, "a.json", &["--plot-data", &plot]);
    let v = json(&out);
    assert_eq!(v["seed"], 42);
    assert!(v["tool_version"].as_str().unwrap().starts_with("bubble-fts"));
    assert_eq!(v["config"]["model"], "fts-price");
    assert_eq!(v["config"]["table"]["source"], "shipped");
    let alarms = v["alarms"].as_array().unwrap();
    let plot = fs::read_to_string(plot).unwrap();
    let mut lines = plot.lines();
    assert_eq!(lines.next(), Some("date,log_price,alarm_level"));
    let flagged = lines.filter(|l| !l.ends_with(",0")).count();
    assert_eq!(flagged, alarms.len());
}

#[test]
fn reruns_are_byte_identical_and_jobs_do_not_matter() {
    let dir = TempDir::new().unwrap();
    let a = fs::read(scan_1980s(&dir, "a.json", &[])).unwrap();
    let b = fs::read(scan_1980s(&dir, "b.json", &[])).unwrap();
    let c = fs::read(scan_1980s(&dir, "c.json", &["--jobs", "4"])).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(bf(&["scan", "--no-such-flag"]), 1);
    assert_eq!(bf(&["frobnicate"]), 1);
    assert_eq!(bf(&["scan", "--input", "/nonexistent/prices.csv"]), 1);
    assert_eq!(bf(&["scan", "--model", "fts-volume", "--input", &data("spx_1980_1993.csv")]), 1);
    assert_eq!(bf(&["critical-values"]), 1);
    assert_eq!(bf(&["--jobs", "0", "critical-values", "--length", "50"]), 1);
    assert_eq!(bf(&["--help"]), 0);
}

#[test]
fn report_text_has_one_line_per_cluster() {
    let dir = TempDir::new().unwrap();
    let alarms = scan_1980s(&dir, "a.json", &["--step", "5"]);
    let alarms = alarms.to_string_lossy().into_owned();
    let text = path(&dir, "r.txt");
    let js = path(&dir, "r.json");
    assert_eq!(bf(&["report", "--alarms", &alarms, "--out", &text]), 0);
    assert_eq!(bf(&["report", "--alarms", &alarms, "--format", "json", "--out", &js]), 0);
    let clusters = json(&js)["clusters"].as_array().unwrap().clone();
    let text = fs::read_to_string(text).unwrap();
    assert_eq!(text.lines().count(), clusters.len());
    for (line, c) in text.lines().zip(&clusters) {
        assert!(line.starts_with("fts-price "), "{line}");
        assert!(line.contains(&format!("peak level {}", c["peak_level"])), "{line}");
    }
    let n: u64 = clusters.iter().map(|c| c["n_alarms"].as_u64().unwrap()).sum();
    assert_eq!(n as usize, json(&alarms)["alarms"].as_array().unwrap().len());
    assert_eq!(bf(&["report", "--alarms", &alarms, "--format", "yaml"]), 1);
}

#[test]
fn report_accepts_a_bare_array() {
    let dir = TempDir::new().unwrap();
    let p = path(&dir, "bare.json");
    fs::write(
        &p,
        r#"[{"window_end":"2000-01-03","window_end_index":750,"model":"fts-price","t_c_date":"2000-02-01",
            "horizon_days":21,"m":3.0,"beta":0.5,"level":750},
           {"window_end":"2000-02-07","window_end_index":775,"model":"fts-price","t_c_date":"2000-02-04",
            "horizon_days":-2,"m":3.0,"beta":0.5,"level":250}]"#,
    )
    .unwrap();
    let out = path(&dir, "r.csv");
    assert_eq!(bf(&["report", "--alarms", &p, "--format", "csv", "--out", &out]), 0);
    assert_eq!(
        fs::read_to_string(out).unwrap(),
        "model,start,end,peak_level,n_alarms,first_t_c,last_t_c\n\
         fts-price,2000-01-03,2000-02-07,250,2,2000-02-01,2000-02-04\n"
    );
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "run.toml");
    fs::write(&cfg, "length = [40]\nreps = 10000\nseed = 7\nlevel = 0.05\n").unwrap();
    let a = path(&dir, "a.json");
    let b = path(&dir, "b.json");
    assert_eq!(bf(&["--config", &cfg, "critical-values", "--out", &a]), 0);
    assert_eq!(bf(&["--config", &cfg, "critical-values", "--seed", "8", "--out", &b]), 0);
    let (a, b) = (json(a), json(b));
    assert_eq!(a["seed"], 7);
    assert_eq!(a["length"], 40);
    assert_eq!(a["config"]["reps"], 10000);
    assert_eq!(b["seed"], 8);
    assert_ne!(a["critical_value"], b["critical_value"]);

    let bad = path(&dir, "bad.toml");
    fs::write(&bad, "lenght = [40]\n").unwrap();
    assert_eq!(bf(&["--config", &bad, "critical-values"]), 1);
}

#[test]
fn critical_values_table_feeds_scan() {
    let dir = TempDir::new().unwrap();
    let table = path(&dir, "t.json");
    let out = path(&dir, "cv.json");
    let args = ["critical-values", "--length", "300", "500", "--reps", "10000", "--out", &out, "--table-out", &table];
    assert_eq!(bf(&args), 0);
    let v = json(&out);
    let cv = v["critical_values"]["300"].as_f64().unwrap();
    // 5% one-sided DF quantile without intercept is near -1.94; 0.5% near -2.6
    assert!(cv < -2.3 && cv > -3.0, "{cv}");
    assert!(v.get("critical_value").is_none());
    let alarms = scan_1980s(&dir, "a.json", &["--table", &table, "--window-length", "500"]);
    assert_eq!(json(alarms)["config"]["table"]["source"], table.as_str());
    // no entry for 750
    let spx = data("spx_1980_1993.csv");
    assert_eq!(bf(&["scan", "--input", &spx, "--table", &table, "--out", &path(&dir, "x.json")]), 1);
}

#[test]
fn simulate_writes_csv_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "sim.csv");
    assert_eq!(bf(&["simulate", "--steps", "500", "--dt", "0.1", "--seed", "3", "--out", &out]), 0);
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,price,tc"));
    assert_eq!(lines.count(), 501);
    let side = json(format!("{out}.json"));
    assert_eq!(side["seed"], 3);
    assert_eq!(side["t_c"], 100.0);
    assert_eq!(side["config"]["params"]["model"], "fts-price");

    let out2 = path(&dir, "sim2.csv");
    let side2 = path(&dir, "side.json");
    let args = ["simulate", "--model", "fts-momentum", "--steps", "100", "--out", &out2, "--sidecar", &side2];
    assert_eq!(bf(&args), 0);
    assert!(fs::read_to_string(out2).unwrap().starts_with("t,price,momentum,tc\n"));
    assert_eq!(json(side2)["config"]["params"]["model"], "fts-momentum");

    assert_eq!(bf(&["simulate", "--m", "0.5", "--out", &path(&dir, "bad.csv")]), 1);
}

#[test]
fn calibrate_writes_result_and_series() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "c.json");
    let series = path(&dir, "s.csv");
    let spx = data("spx_1980_1993.csv");
    let args = ["calibrate", "--input", &spx, "--end", "1987-08-29", "--out", &out, "--series-out", &series];
    assert_eq!(bf(&args), 0);
    let v = json(&out);
    // a Saturday resolves to the Friday before
    assert_eq!(v["config"]["end"], "1987-08-28");
    assert_eq!(v["result"]["window_length"], 750);
    let csv = fs::read_to_string(series).unwrap();
    assert!(csv.starts_with("t,T_tilde,residual\n"));
    if !v["result"]["best"].is_null() {
        assert_eq!(csv.lines().count(), 751);
    }
    assert_eq!(bf(&["calibrate", "--input", &spx, "--end", "1970-01-01"]), 1);
}

#[test]
fn exit_times_blank_when_no_interior_exit() {
    let dir = TempDir::new().unwrap();
    let input = path(&dir, "pop.json");
    fs::write(
        &input,
        r#"{"market": {"model": "fts-price", "mu": 1.0, "m": 2.0, "p0": 0.01},
            "agents": [
              {"id": "early", "t_ci": 100.0, "beta_i": 2.0, "c_i": 20.0, "kappa": 0.5, "t_entry": 0.0},
              {"t_ci": 100.0, "beta_i": 2.0, "c_i": 20.0, "kappa": 0.5, "t_entry": 99.9}
            ]}"#,
    )
    .unwrap();
    let out = path(&dir, "exit.csv");
    assert_eq!(bf(&["exit-times", "--input", &input, "--out", &out]), 0);
    let csv = fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "agent_id,t_exit,residual");
    // optimal exit is T_c − κ c / β = 90
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "early");
    assert!((first[1].parse::<f64>().unwrap() - 90.0).abs() < 1e-6, "{}", lines[1]);
    assert_eq!(lines[2], "1,,");

    fs::write(&input, r#"{"market": {"model": "fts-price", "mu": 1.0, "m": 2.0, "p0": 0.01}, "agents": [{"t_ci": 1.0}]}"#).unwrap();
    assert_eq!(bf(&["exit-times", "--input", &input]), 1);
}
