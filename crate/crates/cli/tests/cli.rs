//! End-to-end tests of the `svcbt` binary against the bundled fixture and
//! small synthetic datasets.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_svcbt"))
}

fn testdata_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../testdata/config.toml")
        .canonicalize()
        .expect("bundled testdata present")
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn run_err(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        !out.status.success(),
        "command {:?} unexpectedly succeeded: {}",
        args,
        String::from_utf8_lossy(&out.stdout)
    );
    out
}

#[test]
fn ingest_prints_counts() {
    let cfg = testdata_config();
    let out_dir = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.path().to_str().unwrap(),
        "ingest",
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("comments kept: 4205"), "{stdout}");
    assert!(stdout.contains("dropped"), "{stdout}");
    assert!(stdout.contains("trading days: 260"), "{stdout}");
}

#[test]
fn ingest_names_the_ticker_with_missing_prices() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("comments")).unwrap();
    fs::create_dir(dir.path().join("prices")).unwrap();
    fs::write(
        dir.path().join("comments/c.csv"),
        "timestamp,body,tickers,score\n1609459200,MSFT up,,0.1\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("prices/MSFT.csv"),
        "date,close\n2021-01-04,100\n2021-01-05,101\n",
    )
    .unwrap();
    // registry also tracks NVDA, which has no price file
    fs::write(
        dir.path().join("config.toml"),
        r#"
[data]
comments_dir = "comments"
prices_dir = "prices"

[[registry]]
ticker = "MSFT"
names = ["Microsoft"]

[[registry]]
ticker = "NVDA"
names = ["Nvidia"]

[range]
start = "2021-01-01"
end = "2021-02-01"
"#,
    )
    .unwrap();
    let out = run_err(&[
        "--config",
        dir.path().join("config.toml").to_str().unwrap(),
        "ingest",
    ]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("NVDA"), "error should name the ticker: {stderr}");
}

#[test]
fn ingest_reports_zero_kept_when_nothing_matches() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("comments")).unwrap();
    fs::create_dir(dir.path().join("prices")).unwrap();
    fs::write(
        dir.path().join("comments/c.csv"),
        "timestamp,body,tickers,score\n1609459200,just chatting,,0.1\n1609459300,more chat,,0.2\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("prices/MSFT.csv"),
        "date,close\n2021-01-04,100\n2021-01-05,101\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("config.toml"),
        r#"
[data]
comments_dir = "comments"
prices_dir = "prices"

[[registry]]
ticker = "MSFT"
names = ["Microsoft"]

[range]
start = "2021-01-01"
end = "2021-02-01"
"#,
    )
    .unwrap();
    let out = run_ok(&[
        "--config",
        dir.path().join("config.toml").to_str().unwrap(),
        "ingest",
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("comments kept: 0"), "{stdout}");
    assert!(stdout.contains("dropped (no company match): 2"), "{stdout}");
}

#[test]
fn score_lexicon_mode_is_byte_identical_across_runs() {
    let cfg = testdata_config();
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out_dir = tempfile::tempdir().unwrap();
        run_ok(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.path().to_str().unwrap(),
            "score",
            "--mode",
            "lexicon",
        ]);
        outputs.push(fs::read(out_dir.path().join("scored_comments.csv")).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1], "lexicon scoring must be deterministic");
}

#[test]
fn score_precomputed_passes_through_and_flags_missing_rows() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("comments")).unwrap();
    fs::create_dir(dir.path().join("prices")).unwrap();
    fs::write(
        dir.path().join("comments/c.csv"),
        "timestamp,body,tickers,score\n1609459200,MSFT up,,0.1\n1609459300,MSFT down,,\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("prices/MSFT.csv"),
        "date,close\n2021-01-04,100\n2021-01-05,101\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("config.toml"),
        r#"
[data]
comments_dir = "comments"
prices_dir = "prices"

[[registry]]
ticker = "MSFT"
names = ["Microsoft"]

[range]
start = "2021-01-01"
end = "2021-02-01"
"#,
    )
    .unwrap();
    let out = run_err(&[
        "--config",
        dir.path().join("config.toml").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "score",
        "--mode",
        "precomputed",
    ]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("c.csv:3"), "error should carry the row: {stderr}");

    // with the gap filled, precomputed mode is a pass-through
    fs::write(
        dir.path().join("comments/c.csv"),
        "timestamp,body,tickers,score\n1609459200,MSFT up,,0.1\n1609459300,MSFT down,,-0.2\n",
    )
    .unwrap();
    run_ok(&[
        "--config",
        dir.path().join("config.toml").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "score",
    ]);
    let text = fs::read_to_string(dir.path().join("out/scored_comments.csv")).unwrap();
    assert!(text.contains("1609459200,MSFT up,MSFT,0.1"), "{text}");
    assert!(text.contains("1609459300,MSFT down,MSFT,-0.2"), "{text}");
}

/// One ticker, flat signal, price 100 -> 150: the all-in hold must return
/// exactly the planted price return.
#[test]
fn backtest_bh100_matches_planted_price_return() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("comments")).unwrap();
    fs::create_dir(dir.path().join("prices")).unwrap();
    fs::write(
        dir.path().join("comments/c.csv"),
        "timestamp,body,tickers,score\n1609718400,MSFT steady,,0.0\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("prices/MSFT.csv"),
        "date,close\n2021-01-04,100\n2021-01-05,120\n2021-01-06,150\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("config.toml"),
        r#"
[data]
comments_dir = "comments"
prices_dir = "prices"

[[registry]]
ticker = "MSFT"
names = ["Microsoft"]

[range]
start = "2021-01-01"
end = "2021-02-01"
"#,
    )
    .unwrap();
    run_ok(&[
        "--config",
        dir.path().join("config.toml").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "backtest",
        "--strategy",
        "bh100",
    ]);
    let metrics = fs::read_to_string(dir.path().join("out/bh100_metrics.csv")).unwrap();
    let row = metrics.lines().nth(1).unwrap();
    assert!(row.starts_with("0.5,"), "return should be 50%: {metrics}");
}

#[test]
fn grid_prints_and_persists_the_chosen_pair() {
    let cfg = testdata_config();
    let out_dir = tempfile::tempdir().unwrap();
    let out = run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.path().to_str().unwrap(),
        "grid",
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("chosen threshold pair"), "{stdout}");
    let chosen = fs::read_to_string(out_dir.path().join("grid_chosen.csv")).unwrap();
    assert!(chosen.starts_with("pos_threshold,neg_threshold\n"), "{chosen}");
    let grid = fs::read_to_string(out_dir.path().join("grid.csv")).unwrap();
    // 3x3 grid plus header
    assert_eq!(grid.lines().count(), 10, "{grid}");
}

#[test]
fn permute_is_deterministic_across_job_counts() {
    let cfg = testdata_config();
    let mut outputs = Vec::new();
    for jobs in ["1", "8"] {
        let out_dir = tempfile::tempdir().unwrap();
        run_ok(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.path().to_str().unwrap(),
            "--jobs",
            jobs,
            "permute",
        ]);
        outputs.push(fs::read(out_dir.path().join("permutation.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn report_renders_year_rows_from_stored_results() {
    let cfg = testdata_config();
    let out_dir = tempfile::tempdir().unwrap();
    let out = out_dir.path().to_str().unwrap();
    for strategy in ["bh50", "bh100", "multi"] {
        run_ok(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out,
            "backtest",
            "--strategy",
            strategy,
        ]);
    }
    run_ok(&["--config", cfg.to_str().unwrap(), "--out", out, "report"]);

    let md = fs::read_to_string(out_dir.path().join("summary.md")).unwrap();
    assert!(md.contains("| year | bh100 | bh50 | multi |"), "{md}");
    let year_rows = md.lines().filter(|l| l.starts_with("| 2021 |")).count();
    // one row per year in each of the two tables
    assert_eq!(year_rows, 2, "{md}");

    // multi + bh100 present and aligned: the growth-diff distribution and
    // the share analysis are emitted as well
    assert!(out_dir.path().join("distribution.csv").exists());
    assert!(out_dir.path().join("investment_share.csv").exists());
    let share = fs::read_to_string(out_dir.path().join("investment_share.csv")).unwrap();
    assert!(share.contains("MSFT"), "{share}");
    assert!(share.contains("stddev_pct"), "{share}");
}

#[test]
fn report_without_results_names_the_missing_artifact() {
    let cfg = testdata_config();
    let out_dir = tempfile::tempdir().unwrap();
    let out = run_err(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.path().to_str().unwrap(),
        "report",
    ]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("_values.csv"), "{stderr}");
    assert!(stderr.contains("backtest"), "{stderr}");
}

#[test]
fn signal_output_is_deterministic() {
    let cfg = testdata_config();
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out_dir = tempfile::tempdir().unwrap();
        run_ok(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.path().to_str().unwrap(),
            "signal",
        ]);
        outputs.push(fs::read(out_dir.path().join("signals.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn correlate_honors_radius_and_errors_when_everything_is_excluded() {
    let cfg = testdata_config();
    let out_dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.path().to_str().unwrap(),
        "correlate",
        "--radius",
        "5.0",
    ]);
    let summary = fs::read_to_string(out_dir.path().join("regression.csv")).unwrap();
    assert!(summary.starts_with("n,slope,intercept,r_squared,p_value\n"), "{summary}");

    let out = run_err(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.path().to_str().unwrap(),
        "correlate",
        "--radius",
        "1000000",
    ]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("at least 3"), "{stderr}");
}
