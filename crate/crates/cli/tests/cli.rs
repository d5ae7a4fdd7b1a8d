//! Black-box tests of the `tdestore` binary: exit codes, JSON output,
//! determinism, and secret handling.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SECRET: &str = "cli test machine secret value";

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn tdestore(dir: &Path, args: &[&str]) -> Output {
    tdestore_env(dir, args, &[(("TDE_MACHINE_SECRET"), SECRET)])
}

fn tdestore_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tdestore"));
    cmd.arg("--data-dir").arg(dir);
    cmd.args(args);
    cmd.env_remove("TDE_MACHINE_SECRET");
    for (key, value) in env {
        cmd.env(key, value);
    }
    cmd.output().expect("failed to spawn tdestore")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().unwrap_or(-1)
}

#[test]
fn init_run_status_happy_path() {
    let dir = tempfile::TempDir::new().unwrap();
    let inst = dir.path().join("inst");

    let out = tdestore(&inst, &["init"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = tdestore(&inst, &["run", fixture("code1.sql").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = tdestore(&inst, &["run", fixture("code2.sql").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = tdestore(&inst, &["--json", "status"]);
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["databases"][0]["name"], "Sales");
    assert_eq!(json["databases"][0]["encryption_state"], "On");
    assert_eq!(json["databases"][0]["accessible"], true);
    assert_eq!(json["databases"][0]["last_error"], serde_json::Value::Null);
}

#[test]
fn second_init_fails() {
    let dir = tempfile::TempDir::new().unwrap();
    let inst = dir.path().join("inst");
    assert_eq!(code(&tdestore(&inst, &["init"])), 0);
    let out = tdestore(&inst, &["init"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("AlreadyInitialized"));
}

#[test]
fn init_with_env_secret_writes_no_secret_file() {
    let dir = tempfile::TempDir::new().unwrap();
    let inst = dir.path().join("inst");
    assert_eq!(code(&tdestore(&inst, &["init"])), 0);
    assert!(!inst.join("machine.secret").exists());
}

#[test]
fn init_without_env_secret_generates_file() {
    let dir = tempfile::TempDir::new().unwrap();
    let inst = dir.path().join("inst");
    let out = tdestore_env(&inst, &["init"], &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(inst.join("machine.secret").exists());
    // And the generated secret actually opens the instance again.
    let out = tdestore_env(&inst, &["status"], &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn syntax_error_exits_2_with_position() {
    let dir = tempfile::TempDir::new().unwrap();
    let inst = dir.path().join("inst");
    assert_eq!(code(&tdestore(&inst, &["init"])), 0);
    let bad = dir.path().join("bad.sql");
    std::fs::write(&bad, "CREATE DATABSE Sales;\n").unwrap();
    let out = tdestore(&inst, &["run", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn run_against_uninitialized_dir_exits_1() {
    let dir = tempfile::TempDir::new().unwrap();
    let inst = dir.path().join("missing");
    let out = tdestore(&inst, &["run", fixture("code1.sql").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("NotInitialized"));
}

#[test]
fn execution_error_exits_1_and_reports_line() {
    let dir = tempfile::TempDir::new().unwrap();
    let inst = dir.path().join("inst");
    assert_eq!(code(&tdestore(&inst, &["init"])), 0);
    let script = dir.path().join("use.sql");
    std::fs::write(&script, "USE Phantom;\n").unwrap();
    let out = tdestore(&inst, &["run", script.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("[line 1] error"), "{}", stdout(&out));
}

#[test]
fn empty_instance_status_is_empty_and_exit_0() {
    let dir = tempfile::TempDir::new().unwrap();
    let inst = dir.path().join("inst");
    assert_eq!(code(&tdestore(&inst, &["init"])), 0);
    let out = tdestore(&inst, &["--json", "status"]);
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["databases"].as_array().unwrap().len(), 0);
}

#[test]
fn repeated_commands_are_deterministic() {
    let dir = tempfile::TempDir::new().unwrap();
    let inst = dir.path().join("inst");
    assert_eq!(code(&tdestore(&inst, &["init"])), 0);
    let out = tdestore(&inst, &["run", fixture("code1.sql").to_str().unwrap()]);
    assert_eq!(code(&out), 0);

    let first = tdestore(&inst, &["--json", "status"]);
    let second = tdestore(&inst, &["--json", "status"]);
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(code(&first), code(&second));
}

#[test]
fn cipher_demo_outputs() {
    let dir = tempfile::TempDir::new().unwrap();
    let out = tdestore(dir.path(), &["cipher", "shift", "--key", "3", "abcd"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "defg");

    let out = tdestore(
        dir.path(),
        &["cipher", "shift", "--key", "3", "--decrypt", "defg"],
    );
    assert_eq!(stdout(&out).trim(), "abcd");

    let out = tdestore(
        dir.path(),
        &[
            "cipher",
            "shift",
            "--key",
            "3",
            "abcdefghijklmnopqrstuvwxyz",
        ],
    );
    assert_eq!(stdout(&out).trim(), "defghijklmnopqrstuvwxyzabc");

    let out = tdestore(dir.path(), &["cipher", "reverse", "abcd"]);
    assert_eq!(stdout(&out).trim(), "dcba");
}

#[test]
fn certificate_backup_restore_across_instances() {
    let dir = tempfile::TempDir::new().unwrap();
    let origin = dir.path().join("origin");
    assert_eq!(code(&tdestore(&origin, &["init"])), 0);
    let setup = dir.path().join("setup.sql");
    std::fs::write(
        &setup,
        "CREATE MASTER KEY ENCRYPTION BY PASSWORD = 'mk-pw';\nGO\n\
         CREATE CERTIFICATE PortCert WITH SUBJECT = 'portable';\nGO\n",
    )
    .unwrap();
    assert_eq!(
        code(&tdestore(&origin, &["run", setup.to_str().unwrap()])),
        0
    );

    let cert = dir.path().join("port.cert");
    let pvk = dir.path().join("port.pvk");
    let out = tdestore(
        &origin,
        &[
            "backup-cert",
            "PortCert",
            cert.to_str().unwrap(),
            pvk.to_str().unwrap(),
            "--password",
            "portable-pw",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(cert.exists() && pvk.exists());

    let target = dir.path().join("target");
    assert_eq!(code(&tdestore(&target, &["init"])), 0);
    let mk = dir.path().join("mk.sql");
    std::fs::write(&mk, "CREATE MASTER KEY ENCRYPTION BY PASSWORD = 'other';\n").unwrap();
    assert_eq!(code(&tdestore(&target, &["run", mk.to_str().unwrap()])), 0);

    // Wrong password first.
    let out = tdestore(
        &target,
        &[
            "restore-cert",
            cert.to_str().unwrap(),
            pvk.to_str().unwrap(),
            "--password",
            "wrong",
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("wrong password"), "{}", stderr(&out));

    let out = tdestore(
        &target,
        &[
            "restore-cert",
            cert.to_str().unwrap(),
            pvk.to_str().unwrap(),
            "--password",
            "portable-pw",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn restore_db_on_fresh_instance_succeeds_but_stays_inaccessible() {
    let dir = tempfile::TempDir::new().unwrap();
    let origin = dir.path().join("origin");
    assert_eq!(code(&tdestore(&origin, &["init"])), 0);
    let script = dir.path().join("full.sql");
    std::fs::write(
        &script,
        "CREATE DATABASE Tiny ON ( NAME = t_dat, FILENAME = 'tiny.mdf', SIZE = 64KB, \
         MAXSIZE = 128KB, FILEGROWTH = 16KB ) LOG ON ( NAME = t_log, FILENAME = 'tiny.ldf', \
         SIZE = 8KB, MAXSIZE = 32KB, FILEGROWTH = 8KB );\nGO\n\
         CREATE MASTER KEY ENCRYPTION BY PASSWORD = 'mk';\nGO\n\
         CREATE CERTIFICATE TinyCert WITH SUBJECT = 's';\nGO\n\
         USE Tiny;\nGO\n\
         CREATE DATABASE ENCRYPTION KEY WITH ALGORITHM = AES_128 \
         ENCRYPTION BY SERVER CERTIFICATE TinyCert;\nGO\n\
         ALTER DATABASE Tiny SET ENCRYPTION ON;\nGO\n",
    )
    .unwrap();
    assert_eq!(
        code(&tdestore(&origin, &["run", script.to_str().unwrap()])),
        0
    );

    let image = dir.path().join("tiny.tdebak");
    let out = tdestore(&origin, &["backup-db", "Tiny", image.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let target = dir.path().join("target");
    assert_eq!(code(&tdestore(&target, &["init"])), 0);
    let out = tdestore(&target, &["restore-db", image.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = tdestore(&target, &["--json", "status"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["databases"][0]["name"], "Tiny");
    assert_eq!(json["databases"][0]["accessible"], false);
    assert_eq!(json["databases"][0]["last_error"], "CertificateNotFound");
}

#[test]
fn no_command_echoes_passwords_or_key_material() {
    let dir = tempfile::TempDir::new().unwrap();
    let inst = dir.path().join("inst");
    assert_eq!(code(&tdestore(&inst, &["init"])), 0);
    let script = dir.path().join("keys.sql");
    std::fs::write(
        &script,
        "CREATE MASTER KEY ENCRYPTION BY PASSWORD = 'Sup3rSecretMkPw!';\nGO\n\
         CREATE CERTIFICATE EchoCert WITH SUBJECT = 'subject text';\nGO\n",
    )
    .unwrap();
    let out = tdestore(&inst, &["run", script.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let all_output = format!("{}{}", stdout(&out), stderr(&out));
    assert!(!all_output.contains("Sup3rSecretMkPw!"));

    let out = tdestore(
        &inst,
        &[
            "backup-cert",
            "EchoCert",
            dir.path().join("e.cert").to_str().unwrap(),
            dir.path().join("e.pvk").to_str().unwrap(),
            "--password",
            "BackupPw#123",
        ],
    );
    let all_output = format!("{}{}", stdout(&out), stderr(&out));
    assert!(!all_output.contains("BackupPw#123"));
    // The machine secret must never surface either.
    assert!(!all_output.contains(SECRET));
}
