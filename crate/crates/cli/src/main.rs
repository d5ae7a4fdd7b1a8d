//! `tdestore` — command-line front end for the encrypted page store.
//!
//! Exit codes: 0 success, 1 execution error, 2 syntax error in a script.
//!
//! The machine secret comes from `TDE_MACHINE_SECRET` when set, otherwise
//! from `<data-dir>/machine.secret`; `init` generates the file when neither
//! exists.

use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::RngCore;
use serde::Serialize;

use tdestore_core::cipherlab::{self, ShiftKey};
use tdestore_core::engine::{ScriptReport, ServerInstance, KEYSTORE_FILE};
use tdestore_core::ParseError;

const MACHINE_SECRET_ENV: &str = "TDE_MACHINE_SECRET";
const MACHINE_SECRET_FILE: &str = "machine.secret";

const EXIT_FAILURE: u8 = 1;
const EXIT_SYNTAX: u8 = 2;

#[derive(Parser)]
#[command(
    name = "tdestore",
    about = "Embedded page store with transparent data encryption",
    version
)]
struct Cli {
    /// Instance data directory
    #[arg(long, global = true, default_value = "./tde-data")]
    data_dir: PathBuf,

    /// Emit machine-readable JSON instead of human output
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create the instance directory, machine secret, and service master key
    Init,
    /// Execute a DDL script, batch by batch
    Run {
        script: PathBuf,
        /// Password for password-protected certificate private keys
        #[arg(long)]
        password: Option<String>,
    },
    /// List cataloged databases with encryption state and accessibility
    Status {
        #[arg(long)]
        password: Option<String>,
    },
    /// Back up a database to an image file
    BackupDb { database: String, to_file: PathBuf },
    /// Restore a database from an image file
    RestoreDb {
        from_file: PathBuf,
        #[arg(long)]
        password: Option<String>,
    },
    /// Attach existing database files
    AttachDb {
        data_file: PathBuf,
        log_file: PathBuf,
        #[arg(long)]
        password: Option<String>,
    },
    /// Export a certificate and its password-protected private key
    BackupCert {
        name: String,
        cert_file: PathBuf,
        private_key_file: PathBuf,
        /// Password protecting the exported private key (prompted if absent)
        #[arg(long)]
        password: Option<String>,
    },
    /// Install a certificate from backup files
    RestoreCert {
        cert_file: PathBuf,
        private_key_file: PathBuf,
        #[arg(long)]
        password: Option<String>,
    },
    /// Classical cipher demos
    Cipher {
        #[command(subcommand)]
        cipher: CipherCommand,
    },
}

#[derive(Subcommand)]
enum CipherCommand {
    /// Alphabet shift cipher
    Shift {
        text: String,
        /// Shift amount (any integer; reduced modulo 26)
        #[arg(long)]
        key: i64,
        /// Decrypt instead of encrypt
        #[arg(long)]
        decrypt: bool,
    },
    /// Reverse the order of characters
    Reverse { text: String },
}

struct CliFailure {
    code: u8,
    message: String,
}

impl CliFailure {
    fn failure(message: impl Into<String>) -> CliFailure {
        CliFailure {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

impl<E: std::error::Error> From<E> for CliFailure {
    fn from(err: E) -> Self {
        CliFailure::failure(err.to_string())
    }
}

#[derive(Serialize)]
struct StatusRow {
    name: String,
    encryption_state: String,
    accessible: bool,
    last_error: Option<String>,
}

#[derive(Serialize)]
struct StatusOutput {
    databases: Vec<StatusRow>,
}

#[derive(Serialize)]
struct RunRow {
    line: u32,
    ok: bool,
    message: String,
}

#[derive(Serialize)]
struct RunOutput {
    success: bool,
    results: Vec<RunRow>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliFailure> {
    match &cli.command {
        Command::Init => cmd_init(cli),
        Command::Run { script, password } => cmd_run(cli, script, password.as_deref()),
        Command::Status { password } => cmd_status(cli, password.as_deref()),
        Command::BackupDb { database, to_file } => cmd_backup_db(cli, database, to_file),
        Command::RestoreDb {
            from_file,
            password,
        } => cmd_restore_db(cli, from_file, password.as_deref()),
        Command::AttachDb {
            data_file,
            log_file,
            password,
        } => cmd_attach_db(cli, data_file, log_file, password.as_deref()),
        Command::BackupCert {
            name,
            cert_file,
            private_key_file,
            password,
        } => cmd_backup_cert(cli, name, cert_file, private_key_file, password.clone()),
        Command::RestoreCert {
            cert_file,
            private_key_file,
            password,
        } => cmd_restore_cert(cli, cert_file, private_key_file, password.clone()),
        Command::Cipher { cipher } => {
            cmd_cipher(cipher);
            Ok(())
        }
    }
}

fn data_dir(cli: &Cli) -> Result<PathBuf, CliFailure> {
    if cli.data_dir.is_absolute() {
        return Ok(cli.data_dir.clone());
    }
    let cwd = std::env::current_dir().map_err(|e| CliFailure::failure(e.to_string()))?;
    Ok(cwd.join(&cli.data_dir))
}

fn is_initialized(dir: &Path) -> bool {
    dir.join(KEYSTORE_FILE).exists()
}

/// Env var first, then the secret file.
fn stored_machine_secret(dir: &Path) -> Option<Vec<u8>> {
    if let Ok(value) = std::env::var(MACHINE_SECRET_ENV) {
        return Some(value.into_bytes());
    }
    fs::read(dir.join(MACHINE_SECRET_FILE)).ok()
}

fn require_instance(dir: &Path, password: Option<&str>) -> Result<ServerInstance, CliFailure> {
    if !is_initialized(dir) {
        return Err(CliFailure::failure(format!(
            "NotInitialized: no instance at {} (run `tdestore init`)",
            dir.display()
        )));
    }
    let secret = stored_machine_secret(dir).ok_or_else(|| {
        CliFailure::failure("no machine secret: set TDE_MACHINE_SECRET or restore machine.secret")
    })?;
    Ok(ServerInstance::open_with_certificate_password(
        dir, &secret, password,
    )?)
}

fn resolve_password(password: Option<String>) -> Result<String, CliFailure> {
    if let Some(password) = password {
        return Ok(password);
    }
    eprint!("password: ");
    let mut line = String::new();
    std::io::stdin()
        .lock()
        .read_line(&mut line)
        .map_err(|e| CliFailure::failure(e.to_string()))?;
    Ok(line.trim_end_matches(['\r', '\n']).to_string())
}

fn cmd_init(cli: &Cli) -> Result<(), CliFailure> {
    let dir = data_dir(cli)?;
    if is_initialized(&dir) {
        return Err(CliFailure::failure(format!(
            "AlreadyInitialized: instance exists at {}",
            dir.display()
        )));
    }
    fs::create_dir_all(&dir).map_err(|e| CliFailure::failure(e.to_string()))?;
    let secret = match stored_machine_secret(&dir) {
        Some(secret) => secret,
        None => {
            let mut fresh = vec![0u8; 32];
            rand::rngs::OsRng.fill_bytes(&mut fresh);
            let encoded: String = fresh.iter().map(|b| format!("{b:02x}")).collect();
            fs::write(dir.join(MACHINE_SECRET_FILE), encoded.as_bytes())
                .map_err(|e| CliFailure::failure(e.to_string()))?;
            encoded.into_bytes()
        }
    };
    drop(ServerInstance::open(&dir, &secret)?);
    if cli.json {
        println!("{}", serde_json::json!({ "initialized": true }));
    } else {
        println!("instance initialized at {}", dir.display());
    }
    Ok(())
}

fn print_report(cli: &Cli, report: &ScriptReport) {
    if cli.json {
        let results: Vec<RunRow> = report
            .outcomes
            .iter()
            .map(|outcome| match outcome {
                Ok(result) => RunRow {
                    line: result.line,
                    ok: true,
                    message: result.message.clone(),
                },
                Err(err) => RunRow {
                    line: err.line,
                    ok: false,
                    message: err.error.to_string(),
                },
            })
            .collect();
        let output = RunOutput {
            success: report.succeeded(),
            results,
        };
        println!("{}", serde_json::to_string_pretty(&output).unwrap());
    } else {
        for outcome in &report.outcomes {
            match outcome {
                Ok(result) => println!("[line {}] {}", result.line, result.message),
                Err(err) => println!("[line {}] error: {}", err.line, err.error),
            }
        }
    }
}

fn cmd_run(cli: &Cli, script: &Path, password: Option<&str>) -> Result<(), CliFailure> {
    let dir = data_dir(cli)?;
    let text = fs::read_to_string(script)
        .map_err(|e| CliFailure::failure(format!("cannot read {}: {e}", script.display())))?;
    let mut instance = require_instance(&dir, password)?;
    match instance.run_script(&text) {
        Ok(report) => {
            print_report(cli, &report);
            if report.succeeded() {
                Ok(())
            } else {
                Err(CliFailure::failure("script finished with errors"))
            }
        }
        Err(parse_error) => Err(CliFailure {
            code: EXIT_SYNTAX,
            message: describe_parse_error(&parse_error),
        }),
    }
}

fn describe_parse_error(err: &ParseError) -> String {
    let (line, column) = err.position();
    format!("{err} (line {line}, column {column})")
}

fn cmd_status(cli: &Cli, password: Option<&str>) -> Result<(), CliFailure> {
    let dir = data_dir(cli)?;
    let instance = require_instance(&dir, password)?;
    let rows: Vec<StatusRow> = instance
        .status()
        .into_iter()
        .map(|status| StatusRow {
            name: status.name,
            encryption_state: status.encryption_state.to_string(),
            accessible: status.accessible,
            last_error: status.last_error.map(|e| e.to_string()),
        })
        .collect();
    if cli.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&StatusOutput { databases: rows }).unwrap()
        );
    } else if rows.is_empty() {
        println!("no databases");
    } else {
        for row in rows {
            let access = if row.accessible {
                "accessible".to_string()
            } else {
                format!(
                    "inaccessible({})",
                    row.last_error.unwrap_or_else(|| "unknown".to_string())
                )
            };
            println!(
                "{}  encryption={}  {}",
                row.name, row.encryption_state, access
            );
        }
    }
    Ok(())
}

fn cmd_backup_db(cli: &Cli, database: &str, to_file: &Path) -> Result<(), CliFailure> {
    let dir = data_dir(cli)?;
    let mut instance = require_instance(&dir, None)?;
    let summary = instance.backup_database(database, to_file)?;
    if cli.json {
        println!(
            "{}",
            serde_json::json!({
                "database": summary.database,
                "pages": summary.pages,
                "image_bytes": summary.image_bytes,
            })
        );
    } else {
        println!(
            "backed up '{}' to {} ({} pages)",
            summary.database,
            to_file.display(),
            summary.pages
        );
    }
    Ok(())
}

fn cmd_restore_db(cli: &Cli, from_file: &Path, password: Option<&str>) -> Result<(), CliFailure> {
    let dir = data_dir(cli)?;
    let mut instance = require_instance(&dir, password)?;
    let name = instance.restore_database(from_file)?;
    let status = instance
        .status()
        .into_iter()
        .find(|s| s.name.eq_ignore_ascii_case(&name));
    if cli.json {
        let accessible = status.as_ref().map(|s| s.accessible).unwrap_or(false);
        println!(
            "{}",
            serde_json::json!({ "database": name, "accessible": accessible })
        );
    } else {
        match status {
            Some(s) if s.accessible => println!("restored '{name}' (accessible)"),
            Some(s) => println!(
                "restored '{name}' (inaccessible: {})",
                s.last_error.map(|e| e.to_string()).unwrap_or_default()
            ),
            None => println!("restored '{name}'"),
        }
    }
    Ok(())
}

fn cmd_attach_db(
    cli: &Cli,
    data_file: &Path,
    log_file: &Path,
    password: Option<&str>,
) -> Result<(), CliFailure> {
    let dir = data_dir(cli)?;
    let mut instance = require_instance(&dir, password)?;
    let name = instance.attach_database(data_file, log_file)?;
    if cli.json {
        println!("{}", serde_json::json!({ "database": name }));
    } else {
        println!("attached '{name}'");
    }
    Ok(())
}

fn cmd_backup_cert(
    cli: &Cli,
    name: &str,
    cert_file: &Path,
    private_key_file: &Path,
    password: Option<String>,
) -> Result<(), CliFailure> {
    let dir = data_dir(cli)?;
    let password = resolve_password(password)?;
    let instance = require_instance(&dir, None)?;
    let info =
        instance
            .keyvault()
            .backup_certificate(name, cert_file, private_key_file, &password)?;
    if cli.json {
        println!(
            "{}",
            serde_json::json!({ "certificate": info.name, "thumbprint": info.thumbprint.to_string() })
        );
    } else {
        println!(
            "backed up certificate '{}' (thumbprint {})",
            info.name, info.thumbprint
        );
    }
    Ok(())
}

fn cmd_restore_cert(
    cli: &Cli,
    cert_file: &Path,
    private_key_file: &Path,
    password: Option<String>,
) -> Result<(), CliFailure> {
    let dir = data_dir(cli)?;
    let password = resolve_password(password)?;
    let mut instance = require_instance(&dir, None)?;
    let info =
        instance
            .keyvault_mut()
            .restore_certificate(cert_file, private_key_file, &password)?;
    instance.refresh_accessibility();
    if cli.json {
        println!(
            "{}",
            serde_json::json!({ "certificate": info.name, "thumbprint": info.thumbprint.to_string() })
        );
    } else {
        println!(
            "restored certificate '{}' (thumbprint {})",
            info.name, info.thumbprint
        );
    }
    Ok(())
}

fn cmd_cipher(command: &CipherCommand) {
    match command {
        CipherCommand::Shift { text, key, decrypt } => {
            let key = ShiftKey::new(*key);
            let output = if *decrypt {
                cipherlab::shift_decrypt(text, key)
            } else {
                cipherlab::shift_encrypt(text, key)
            };
            println!("{output}");
        }
        CipherCommand::Reverse { text } => {
            println!("{}", cipherlab::reverse_cipher(text));
        }
    }
}
