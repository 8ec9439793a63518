use std::fs;
use std::path::Path;
use std::process::Command;

use fairsched::cli::run_cli;
use fairsched::workload::read_trace;
use tempfile::TempDir;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("fairsched").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn two_job_trace(dir: &TempDir) -> std::path::PathBuf {
    let p = dir.path().join("two.csv");
    fs::write(&p, "id,release,size,estimate,weight\n0,0,4,4,1\n1,1,1,1,1\n").unwrap();
    p
}

fn completions(csv_text: &str) -> Vec<f64> {
    csv_text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn generate_writes_a_readable_trace() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("w.csv");
    let o = cli(&["generate", "--seed", "3", "--n-jobs", "50", "--shape", "0.5", "--sigma", "1", "--out", path_str(&p)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let w = read_trace(fs::File::open(&p).unwrap()).unwrap();
    assert_eq!(w.len(), 50);
}

#[test]
fn single_job_trace_has_header_and_one_row() {
    let o = cli(&["generate", "--n-jobs", "1"]);
    assert_eq!(o.code, 0);
    let lines: Vec<_> = o.stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "id,release,size,estimate,weight");
}

#[test]
fn generate_is_byte_identical_for_a_fixed_seed() {
    let args = ["generate", "--seed", "42", "--n-jobs", "200", "--sigma", "0.7", "--weights", "1:0.5,4:0.5"];
    let a = cli(&args);
    let b = cli(&args);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, cli(&["generate", "--seed", "43", "--n-jobs", "200"]).stdout);
}

#[test]
fn run_reports_worked_example_completions() {
    let dir = TempDir::new().unwrap();
    let trace = two_job_trace(&dir);
    let ps = cli(&["run", "--trace", path_str(&trace), "--policy", "ps"]);
    assert_eq!(ps.code, 0, "{}", ps.stderr);
    assert_eq!(completions(&ps.stdout), vec![5.0, 3.0]);
    assert!(ps.stderr.contains("policy=ps jobs=2 mst=3.5"), "{}", ps.stderr);

    let fsp = cli(&["run", "--trace", path_str(&trace), "--policy", "FSP"]);
    assert_eq!(completions(&fsp.stdout), vec![5.0, 2.0]);
}

#[test]
fn run_writes_event_log() {
    let dir = TempDir::new().unwrap();
    let trace = two_job_trace(&dir);
    let log = dir.path().join("events.csv");
    let out = dir.path().join("jobs.csv");
    let o = cli(&[
        "run", "--trace", path_str(&trace), "--policy", "srpt",
        "--out", path_str(&out), "--log-events", path_str(&log),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.is_empty());
    assert_eq!(completions(&fs::read_to_string(&out).unwrap()), vec![5.0, 2.0]);
    let events = fs::read_to_string(&log).unwrap();
    let lines: Vec<_> = events.lines().collect();
    assert_eq!(lines[0], "time,kind,job_id");
    assert_eq!(lines.len(), 5);
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let trace = two_job_trace(&dir);
    let unknown = cli(&["run", "--trace", path_str(&trace), "--policy", "nosuch"]);
    assert_eq!(unknown.code, 2);
    assert!(unknown.stderr.contains("psbs"), "should list known policies: {}", unknown.stderr);

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "id,release,size,estimate,weight\n0,0,0,1,1\n").unwrap();
    let o = cli(&["run", "--trace", path_str(&bad), "--policy", "ps"]);
    assert_eq!(o.code, 3);
    assert!(o.stderr.contains("line 2"), "{}", o.stderr);

    let missing = cli(&["run", "--trace", "/nonexistent/trace.csv", "--policy", "ps"]);
    assert_eq!(missing.code, 3);

    assert_eq!(cli(&["frobnicate"]).code, 2);
    assert_eq!(cli(&["generate", "--load", "1.5"]).code, 2);
    assert_eq!(cli(&["generate", "--error-bias", "mode"]).code, 2);
    assert_eq!(cli(&["--help"]).code, 0);
}

#[test]
fn mean_error_bias_shrinks_estimates() {
    let estimates = |bias: &str| -> Vec<f64> {
        let o = cli(&["generate", "--n-jobs", "20", "--sigma", "1", "--error-bias", bias]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        o.stdout.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect()
    };
    let factor = (-0.5f64).exp();
    for (median, mean) in estimates("median").iter().zip(estimates("mean")) {
        assert!((mean - median * factor).abs() <= 1e-12 * median);
    }
}

#[test]
fn sweep_single_cell_normalizes_ps_to_one() {
    let o = cli(&["sweep", "--shape", "1", "--sigma", "0", "--seeds", "1", "--n-jobs", "200", "--policy", "ps,srpt"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let lines: Vec<_> = o.stdout.lines().collect();
    assert_eq!(lines[0], "shape,sigma,seed,policy,mst,mst_norm_ps");
    assert_eq!(lines.len(), 3);
    let norm = |l: &str| l.rsplit(',').next().unwrap().parse::<f64>().unwrap();
    assert_eq!(norm(lines[1]), 1.0);
    assert!(norm(lines[2]) < 1.0);
}

#[test]
fn compare_reports_dominance() {
    let dir = TempDir::new().unwrap();
    let trace = two_job_trace(&dir);
    let o = cli(&["compare", "--trace", path_str(&trace), "--policy", "fsp", "--reference", "ps"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("dominates: yes, 0 violations"), "{}", o.stdout);

    let o = cli(&["compare", "--trace", path_str(&trace), "--policy", "fifo"]);
    assert!(o.stdout.contains("dominates: no, 1 violations"), "{}", o.stdout);
    assert!(o.stdout.contains("violation: job=1"), "{}", o.stdout);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("gen.conf");
    fs::write(&cfg, "# workload\nseed = 9\nn_jobs = 30\nsigma = 1.5\n").unwrap();
    let from_file = cli(&["generate", "--config", path_str(&cfg)]);
    let explicit = cli(&["generate", "--seed", "9", "--n-jobs", "30", "--sigma", "1.5"]);
    assert_eq!(from_file.code, 0, "{}", from_file.stderr);
    assert_eq!(from_file.stdout, explicit.stdout);

    let overridden = cli(&["generate", "--config", path_str(&cfg), "--n-jobs", "5"]);
    assert_eq!(overridden.stdout.lines().count(), 6);
}

#[test]
fn end_to_end_pipeline_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("w.csv");
    let run = || {
        assert_eq!(cli(&["generate", "--seed", "5", "--n-jobs", "500", "--shape", "0.25", "--sigma", "2", "--out", path_str(&trace)]).code, 0);
        cli(&["run", "--trace", path_str(&trace), "--policy", "psbs"]).stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn binary_runs() {
    let bin = env!("CARGO_BIN_EXE_fairsched");
    let out = Command::new(bin).args(["generate", "--n-jobs", "3"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);

    let out = Command::new(bin).args(["run", "--policy", "nosuch", "--trace", "x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
