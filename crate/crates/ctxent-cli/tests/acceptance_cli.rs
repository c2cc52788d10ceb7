//! Final acceptance check, covering the binary's public contract: the full
//! built-in suite passes, every documented exit code is produced by the
//! condition that documents it, and JSON reports round-trip exactly.
//! Prints one `acceptance 10: PASS/FAIL` summary line.

use std::io::Write as _;
use std::process::Command;

use ctxent::models::{builtin, DEFAULT_ALPHA};
use ctxent_cli::report::Report;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ctxent"));
    cmd.env_remove("CTXENT_UNITS");
    cmd
}

fn spec_file(dir: &TempDir, name: &str) -> std::path::PathBuf {
    let spec = builtin(name, DEFAULT_ALPHA).unwrap();
    let path = dir.path().join(format!("{name}.exp"));
    std::fs::write(&path, ctxent::dsl::render(&spec)).unwrap();
    path
}

fn round_trips(json: &str) -> bool {
    let Ok(first) = serde_json::from_str::<Report>(json) else {
        return false;
    };
    let Ok(emitted) = serde_json::to_string(&first) else {
        return false;
    };
    matches!(serde_json::from_str::<Report>(&emitted), Ok(second) if second == first)
}

#[test]
fn a10_command_line_contract_holds() {
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, detail: &str| {
        if !ok {
            failures.push(detail.to_owned());
        }
    };
    let dir = TempDir::new().unwrap();
    let m = spec_file(&dir, "m");
    let l_two = spec_file(&dir, "l_two");

    // the full suite passes and exits 0
    let suite = bin().arg("paper-suite").output().unwrap();
    check(suite.status.code() == Some(0), "paper-suite should exit 0");
    check(
        String::from_utf8_lossy(&suite.stdout).contains("all 22 rows pass"),
        "paper-suite should pass every row",
    );

    // exit 0: a healthy run
    let run = bin().arg("run").arg(&l_two).output().unwrap();
    check(run.status.code() == Some(0), "run should exit 0");

    // exit 1: input errors (missing file, shared context)
    let missing = bin().args(["run", "definitely-missing.exp"]).output().unwrap();
    check(missing.status.code() == Some(1), "missing file should exit 1");
    let same = bin().arg("compare").arg(&m).arg(&m).output().unwrap();
    check(same.status.code() == Some(1), "same-context compare should exit 1");

    // exit 2: an expected value out of tolerance
    let corrupt = bin().args(["paper-suite", "--corrupt"]).output().unwrap();
    check(corrupt.status.code() == Some(2), "corrupted suite should exit 2");

    // exit 3: a statistical mismatch
    let perturbed = bin()
        .args(["sample", "--n", "10000", "--seed", "42", "--perturb"])
        .arg(&l_two)
        .output()
        .unwrap();
    check(perturbed.status.code() == Some(3), "perturbed sample should exit 3");

    // JSON round-trips for reports of every command shape
    for args in [
        vec!["run".to_owned(), l_two.display().to_string(), "--json".to_owned()],
        vec![
            "compare".to_owned(),
            m.display().to_string(),
            l_two.display().to_string(),
            "--json".to_owned(),
        ],
        vec![
            "sample".to_owned(),
            l_two.display().to_string(),
            "--n".to_owned(),
            "1000".to_owned(),
            "--json".to_owned(),
        ],
        vec!["paper-suite".to_owned(), "--json".to_owned()],
    ] {
        let out = bin().args(&args).output().unwrap();
        check(
            out.status.code() == Some(0),
            &format!("`{}` should exit 0", args.join(" ")),
        );
        check(
            round_trips(&String::from_utf8_lossy(&out.stdout)),
            &format!("`{}` JSON should round-trip", args.join(" ")),
        );
    }

    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let mut line = format!(
        "acceptance 10: {status} — suite exits 0 with all rows passing, exit codes 0/1/2/3 \
         arise from their documented conditions, and JSON reports round-trip"
    );
    if !failures.is_empty() {
        line.push_str(&format!(" [{}]", failures.join("; ")));
    }
    line.push('\n');
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(failures.is_empty(), "{line}");
}
