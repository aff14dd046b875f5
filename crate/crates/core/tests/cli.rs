use std::fs;
use std::path::Path;
use std::process::Command;

fn pfnts(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pfnts"))
        .args(args)
        .env_remove("PFNTS_OUTPUT_DIR")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("exp.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

const RUN: &str = r#"
scenario = ["linear", "friedman"]
horizon = 80
replications = 2
seed = 11
stride = 20

[[agents]]
kind = "pfn-ts"

[[agents]]
kind = "lin-ts"

[[agents]]
kind = "uniform"

[[agents]]
kind = "oracle"
"#;

#[test]
fn missing_config_exits_2() {
    let (code, _, err) = pfnts(&["run", "--config", "/nonexistent/missing.toml"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn unknown_flag_exits_2_with_usage() {
    let (code, _, err) = pfnts(&["run", "--frobnicate"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scenario = \"linear\"\nhorizon = 0\n");
    assert_eq!(pfnts(&["run", "--config", &cfg]).0, 2);
    let cfg = write_config(dir.path(), "scenario = \"linear\"\nunknown_key = 1\n");
    assert_eq!(pfnts(&["run", "--config", &cfg]).0, 2);
}

#[test]
fn runtime_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario = \"iris\"\n[[agents]]\nkind = \"uniform\"\n[[datasets]]\nname = \"iris\"\npath = \"/nonexistent.csv\"\nlabel = \"y\"\n",
    );
    let out = dir.path().join("o");
    assert_eq!(pfnts(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).0, 1);
    // report on an empty directory has nothing to rank
    assert_eq!(pfnts(&["report", "--out", out.to_str().unwrap()]).0, 1);
}

#[test]
fn run_is_deterministic_across_job_counts_and_report_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RUN);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let (code, _, err) = pfnts(&["run", "--config", &cfg, "--out", a.to_str().unwrap(), "--jobs", "1"]);
    assert_eq!(code, 0, "{err}");
    let (code, _, err) = pfnts(&["run", "--config", &cfg, "--out", b.to_str().unwrap(), "--jobs", "4"]);
    assert_eq!(code, 0, "{err}");
    let ra = fs::read(a.join("regret.csv")).unwrap();
    assert_eq!(ra, fs::read(b.join("regret.csv")).unwrap());
    assert_eq!(
        fs::read(a.join("aggregate.json")).unwrap(),
        fs::read(b.join("aggregate.json")).unwrap()
    );
    let text = String::from_utf8(ra).unwrap();
    assert!(text.starts_with("scenario,agent,rep,t,cum_regret\n"));
    // 2 scenarios x 4 agents x 2 reps x 80 rounds
    assert_eq!(text.lines().count(), 1 + 2 * 4 * 2 * 80);
    assert!(text
        .lines()
        .filter(|l| l.contains(",oracle,"))
        .all(|l| l.ends_with(",0.0")));

    let (code, stdout, err) = pfnts(&["report", "--out", a.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("average rank oracle 1"), "{stdout}");
    let table = fs::read_to_string(a.join("rank_table.csv")).unwrap();
    assert!(table.starts_with("scenario,agent,mean_final,se,rank\n"));

    // a different seed changes the curves
    let c = dir.path().join("c");
    assert_eq!(pfnts(&["run", "--config", &cfg, "--out", c.to_str().unwrap(), "--seed", "12"]).0, 0);
    assert_ne!(fs::read(a.join("regret.csv")).unwrap(), fs::read(c.join("regret.csv")).unwrap());
}

#[test]
fn coverage_writes_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scenario = \"linear\"\nseed = 2\n[coverage]\nsizes = [16, 64]\nreps = 3\nqueries = 4\n",
    );
    let out = dir.path().join("cov");
    let (code, _, err) = pfnts(&["coverage", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(out.join("coverage.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "dgp,n,rep,query_id,covered,length");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 3 * 4);
    for r in &rows {
        assert_eq!(r[0], "linear");
        assert!(r[4] == "0" || r[4] == "1");
        assert!(r[5].parse::<f64>().unwrap() > 0.0);
    }
    assert!(out.join("coverage_summary.json").exists());
}

#[test]
fn ope_on_generated_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
seed = 5
[[agents]]
kind = "uniform"
[[agents]]
kind = "lin-ucb"
[ope]
users = 12
days = 10
draws = 10
replicates = 5
horizons = [60, 120]
"#,
    );
    let out = dir.path().join("ope");
    let (code, stdout, err) = pfnts(&["ope", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("uniform snips"));
    for f in ["logged.csv", "ope_uniform_snips.json", "ope_lin-ucb_dr.json", "weights_uniform.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("ope_uniform_dr.json")).unwrap()).unwrap();
    assert_eq!(report["n"], 120);
    assert_eq!(report["B"], 5);
    assert!(report["max_weight"].as_f64().unwrap() <= 10.0 / 3.0 + 1e-9);
    assert_eq!(report["horizon_curve"].as_array().unwrap().len(), 2);

    // the same log read back from disk gives the same estimates
    let logged = out.join("logged.csv");
    let cfg2 = write_config(
        dir.path(),
        &format!(
            "seed = 5\n[[agents]]\nkind = \"uniform\"\n[ope]\nlog = {:?}\ndraws = 10\nreplicates = 5\nhorizons = [60, 120]\n",
            logged.to_str().unwrap()
        ),
    );
    let out2 = dir.path().join("ope2");
    assert_eq!(pfnts(&["ope", "--config", &cfg2, "--out", out2.to_str().unwrap()]).0, 0);
    assert_eq!(
        fs::read(out.join("ope_uniform_snips.json")).unwrap(),
        fs::read(out2.join("ope_uniform_snips.json")).unwrap()
    );
}
