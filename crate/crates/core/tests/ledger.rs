use serde_json::json;
use stable_ergo::cli_io::{config_digest, read_ledger, run, verify_outputs, Command, RunContext, LEDGER_FILE};

#[test]
fn ledger_is_append_only_and_digests_recompute() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = RunContext { out_dir: dir.path().to_path_buf(), threads: 1 };
    let mut cfg = Command::Special.defaults();
    cfg["alpha"] = json!(1.2);
    let first = run(Command::Special, cfg.clone(), &ctx).unwrap();
    let before = std::fs::read(dir.path().join(LEDGER_FILE)).unwrap();
    run(Command::Rates, Command::Rates.defaults(), &ctx).unwrap();
    let after = std::fs::read(dir.path().join(LEDGER_FILE)).unwrap();
    assert!(after.starts_with(&before));

    let records = read_ledger(&dir.path().join(LEDGER_FILE)).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].command, "special");
    assert_eq!(records[0].config_digest, first.record.config_digest);
    assert_eq!(records[0].config_digest, config_digest(&records[0].config));
    assert_eq!(records[0].config["alpha"], json!(1.2));
    for r in &records {
        verify_outputs(r, dir.path()).unwrap();
    }
}

#[test]
fn tampered_outputs_and_records_are_detected() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = RunContext { out_dir: dir.path().to_path_buf(), threads: 1 };
    let res = run(Command::Special, Command::Special.defaults(), &ctx).unwrap();
    std::fs::write(dir.path().join("special.json"), b"{}").unwrap();
    assert!(verify_outputs(&res.record, dir.path()).is_err());

    let path = dir.path().join(LEDGER_FILE);
    let text = std::fs::read_to_string(&path).unwrap().replace("\"alpha\":1.5", "\"alpha\":1.6");
    std::fs::write(&path, text).unwrap();
    assert!(read_ledger(&path).is_err());
}

#[test]
fn seeded_runs_record_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let ctx = RunContext { out_dir: dir.path().to_path_buf(), threads: 1 };
    let mut cfg = Command::Simulate.defaults();
    cfg["sim"]["n_paths"] = json!(20);
    cfg["sim"]["master_seed"] = json!(99);
    let res = run(Command::Simulate, cfg, &ctx).unwrap();
    assert_eq!(res.record.master_seed, Some(99));
}
