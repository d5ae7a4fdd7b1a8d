//! Typed AST for the DDL dialect, plus the canonical pretty-printer.
//!
//! The printer emits text the parser accepts, and parsing printed output
//! reproduces the same structure (checked by property tests).

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeUnit {
    Kb,
    Mb,
    Gb,
}

impl SizeUnit {
    pub fn bytes(self) -> u64 {
        match self {
            SizeUnit::Kb => 1 << 10,
            SizeUnit::Mb => 1 << 20,
            SizeUnit::Gb => 1 << 30,
        }
    }
}

impl fmt::Display for SizeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeUnit::Kb => write!(f, "KB"),
            SizeUnit::Mb => write!(f, "MB"),
            SizeUnit::Gb => write!(f, "GB"),
        }
    }
}

/// A SIZE/MAXSIZE/FILEGROWTH value. Unsuffixed numbers default to megabytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeSpec {
    pub value: u64,
    pub unit: SizeUnit,
}

impl SizeSpec {
    pub fn bytes(self) -> u64 {
        self.value * self.unit.bytes()
    }
}

impl fmt::Display for SizeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.value, self.unit)
    }
}

/// One file clause of CREATE DATABASE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileSpec {
    pub logical_name: String,
    pub filename: String,
    pub size: SizeSpec,
    pub maxsize: SizeSpec,
    pub filegrowth: SizeSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatementKind {
    Use {
        database: String,
    },
    CreateDatabase {
        name: String,
        data_file: FileSpec,
        log_file: FileSpec,
    },
    CreateMasterKey {
        password: String,
    },
    CreateCertificate {
        name: String,
        subject: String,
    },
    CreateDatabaseEncryptionKey {
        algorithm: String,
        certificate: String,
    },
    AlterDatabaseSetEncryption {
        database: String,
        on: bool,
    },
    BackupCertificate {
        name: String,
        cert_file: String,
        private_key_file: String,
        password: String,
    },
    RestoreCertificate {
        cert_file: String,
        private_key_file: String,
        password: String,
    },
    AlterCertificatePassword {
        name: String,
        password: String,
    },
    BackupDatabase {
        database: String,
        to_file: String,
    },
    RestoreDatabase {
        from_file: String,
    },
    AttachDatabase {
        data_file: String,
        log_file: String,
    },
}

/// A parsed statement with the source line it started on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub line: u32,
    pub kind: StatementKind,
}

/// GO-delimited group of statements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub statements: Vec<Statement>,
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn write_file_spec(f: &mut fmt::Formatter<'_>, spec: &FileSpec) -> fmt::Result {
    write!(
        f,
        "( NAME = {}, FILENAME = {}, SIZE = {}, MAXSIZE = {}, FILEGROWTH = {} )",
        spec.logical_name,
        quote(&spec.filename),
        spec.size,
        spec.maxsize,
        spec.filegrowth
    )
}

impl fmt::Display for StatementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatementKind::Use { database } => write!(f, "USE {database}"),
            StatementKind::CreateDatabase {
                name,
                data_file,
                log_file,
            } => {
                write!(f, "CREATE DATABASE {name} ON ")?;
                write_file_spec(f, data_file)?;
                write!(f, " LOG ON ")?;
                write_file_spec(f, log_file)
            }
            StatementKind::CreateMasterKey { password } => {
                write!(
                    f,
                    "CREATE MASTER KEY ENCRYPTION BY PASSWORD = {}",
                    quote(password)
                )
            }
            StatementKind::CreateCertificate { name, subject } => {
                write!(
                    f,
                    "CREATE CERTIFICATE {name} WITH SUBJECT = {}",
                    quote(subject)
                )
            }
            StatementKind::CreateDatabaseEncryptionKey {
                algorithm,
                certificate,
            } => write!(
                f,
                "CREATE DATABASE ENCRYPTION KEY WITH ALGORITHM = {algorithm} \
                 ENCRYPTION BY SERVER CERTIFICATE {certificate}"
            ),
            StatementKind::AlterDatabaseSetEncryption { database, on } => write!(
                f,
                "ALTER DATABASE {database} SET ENCRYPTION {}",
                if *on { "ON" } else { "OFF" }
            ),
            StatementKind::BackupCertificate {
                name,
                cert_file,
                private_key_file,
                password,
            } => write!(
                f,
                "BACKUP CERTIFICATE {name} TO FILE = {} WITH PRIVATE KEY \
                 ( FILE = {}, ENCRYPTION BY PASSWORD = {} )",
                quote(cert_file),
                quote(private_key_file),
                quote(password)
            ),
            StatementKind::RestoreCertificate {
                cert_file,
                private_key_file,
                password,
            } => write!(
                f,
                "RESTORE CERTIFICATE FROM FILE = {} WITH PRIVATE KEY \
                 ( FILE = {}, DECRYPTION BY PASSWORD = {} )",
                quote(cert_file),
                quote(private_key_file),
                quote(password)
            ),
            StatementKind::AlterCertificatePassword { name, password } => write!(
                f,
                "ALTER CERTIFICATE {name} WITH PRIVATE KEY \
                 ( ENCRYPTION BY PASSWORD = {} )",
                quote(password)
            ),
            StatementKind::BackupDatabase { database, to_file } => {
                write!(f, "BACKUP DATABASE {database} TO DISK = {}", quote(to_file))
            }
            StatementKind::RestoreDatabase { from_file } => {
                write!(f, "RESTORE DATABASE FROM DISK = {}", quote(from_file))
            }
            StatementKind::AttachDatabase {
                data_file,
                log_file,
            } => write!(
                f,
                "ATTACH DATABASE DATA FILE = {} LOG FILE = {}",
                quote(data_file),
                quote(log_file)
            ),
        }
    }
}

/// Render batches as script text the parser accepts.
pub fn print_script(batches: &[Batch]) -> String {
    let mut out = String::new();
    for batch in batches {
        for statement in &batch.statements {
            out.push_str(&statement.kind.to_string());
            out.push_str(";\n");
        }
        out.push_str("GO\n");
    }
    out
}
