//! Recursive-descent parser over the token stream.

use super::ast::{FileSpec, SizeSpec, SizeUnit, Statement, StatementKind};
use super::token::{Keyword, Token, TokenKind};
use super::ParseError;

pub struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub fn new(tokens: Vec<Token>) -> Parser {
        Parser { tokens, pos: 0 }
    }

    /// Parse statements until the token stream is exhausted.
    pub fn parse_statements(&mut self) -> Result<Vec<Statement>, ParseError> {
        let mut statements = Vec::new();
        while self.peek().is_some() {
            statements.push(self.parse_statement()?);
        }
        Ok(statements)
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    fn bump(&mut self) -> Option<Token> {
        let token = self.tokens.get(self.pos).cloned();
        if token.is_some() {
            self.pos += 1;
        }
        token
    }

    fn error(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some(token) => ParseError::Syntax {
                expected: expected.to_string(),
                found: describe(token),
                line: token.line,
                column: token.column,
            },
            None => {
                let (line, column) = self
                    .tokens
                    .last()
                    .map(|t| (t.line, t.column + t.text.chars().count() as u32))
                    .unwrap_or((1, 1));
                ParseError::Syntax {
                    expected: expected.to_string(),
                    found: "end of input".to_string(),
                    line,
                    column,
                }
            }
        }
    }

    fn at_keyword(&self, keyword: Keyword) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword(keyword))
    }

    fn keyword_at(&self, offset: usize, keyword: Keyword) -> bool {
        matches!(self.peek_at(offset), Some(t) if t.kind == TokenKind::Keyword(keyword))
    }

    fn expect_keyword(&mut self, keyword: Keyword, expected: &str) -> Result<Token, ParseError> {
        if self.at_keyword(keyword) {
            Ok(self.bump().unwrap())
        } else {
            Err(self.error(expected))
        }
    }

    fn expect_punct(&mut self, ch: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Punct(ch) => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error(&format!("'{ch}'"))),
        }
    }

    fn eat_punct(&mut self, ch: char) -> bool {
        if matches!(self.peek(), Some(t) if t.kind == TokenKind::Punct(ch)) {
            self.bump();
            true
        } else {
            false
        }
    }

    /// Names may be plain identifiers or keywords used as names (`master`).
    fn expect_name(&mut self, expected: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(t) if matches!(t.kind, TokenKind::Identifier | TokenKind::Keyword(_)) => {
                Ok(self.bump().unwrap().text)
            }
            _ => Err(self.error(expected)),
        }
    }

    fn expect_string(&mut self, expected: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::SingleQuotedString => Ok(self.bump().unwrap().text),
            _ => Err(self.error(expected)),
        }
    }

    fn expect_size_spec(&mut self) -> Result<SizeSpec, ParseError> {
        let token = match self.peek() {
            Some(t) if t.kind == TokenKind::Number => self.bump().unwrap(),
            _ => return Err(self.error("size value")),
        };
        let value: u64 = token.text.parse().map_err(|_| ParseError::Syntax {
            expected: "size value".to_string(),
            found: token.text.clone(),
            line: token.line,
            column: token.column,
        })?;
        if value == 0 {
            return Err(ParseError::Syntax {
                expected: "positive size value".to_string(),
                found: "0".to_string(),
                line: token.line,
                column: token.column,
            });
        }
        let unit = match self.peek().map(|t| t.kind) {
            Some(TokenKind::Keyword(Keyword::Mb)) => {
                self.bump();
                SizeUnit::Mb
            }
            Some(TokenKind::Keyword(Keyword::Kb)) => {
                self.bump();
                SizeUnit::Kb
            }
            Some(TokenKind::Keyword(Keyword::Gb)) => {
                self.bump();
                SizeUnit::Gb
            }
            _ => SizeUnit::Mb,
        };
        Ok(SizeSpec { value, unit })
    }

    fn parse_statement(&mut self) -> Result<Statement, ParseError> {
        let token = self.peek().ok_or_else(|| self.error("statement"))?;
        let line = token.line;
        let kind = match token.kind {
            TokenKind::Keyword(Keyword::Use) => self.parse_use()?,
            TokenKind::Keyword(Keyword::Create) => self.parse_create()?,
            TokenKind::Keyword(Keyword::Alter) => self.parse_alter()?,
            TokenKind::Keyword(Keyword::Backup) => self.parse_backup()?,
            TokenKind::Keyword(Keyword::Restore) => self.parse_restore()?,
            TokenKind::Keyword(Keyword::Attach) => self.parse_attach()?,
            _ => return Err(self.error("statement keyword")),
        };
        self.eat_punct(';');
        Ok(Statement { line, kind })
    }

    fn parse_use(&mut self) -> Result<StatementKind, ParseError> {
        self.expect_keyword(Keyword::Use, "USE")?;
        let database = self.expect_name("database name")?;
        Ok(StatementKind::Use { database })
    }

    fn parse_create(&mut self) -> Result<StatementKind, ParseError> {
        self.expect_keyword(Keyword::Create, "CREATE")?;
        match self.peek().map(|t| t.kind) {
            Some(TokenKind::Keyword(Keyword::Database)) => {
                if self.keyword_at(1, Keyword::Encryption) {
                    self.parse_create_dek()
                } else {
                    self.parse_create_database()
                }
            }
            Some(TokenKind::Keyword(Keyword::Master)) => self.parse_create_master_key(),
            Some(TokenKind::Keyword(Keyword::Certificate)) => self.parse_create_certificate(),
            _ => Err(self.error("DATABASE, MASTER KEY, or CERTIFICATE")),
        }
    }

    fn parse_file_spec(&mut self) -> Result<FileSpec, ParseError> {
        self.expect_punct('(')?;
        self.expect_keyword(Keyword::Name, "NAME")?;
        self.expect_punct('=')?;
        let logical_name = self.expect_name("logical file name")?;
        self.expect_punct(',')?;
        self.expect_keyword(Keyword::Filename, "FILENAME")?;
        self.expect_punct('=')?;
        let filename = self.expect_string("file path string")?;
        self.expect_punct(',')?;
        self.expect_keyword(Keyword::Size, "SIZE")?;
        self.expect_punct('=')?;
        let size = self.expect_size_spec()?;
        self.expect_punct(',')?;
        self.expect_keyword(Keyword::Maxsize, "MAXSIZE")?;
        self.expect_punct('=')?;
        let maxsize = self.expect_size_spec()?;
        self.expect_punct(',')?;
        self.expect_keyword(Keyword::Filegrowth, "FILEGROWTH")?;
        self.expect_punct('=')?;
        let filegrowth = self.expect_size_spec()?;
        self.expect_punct(')')?;
        Ok(FileSpec {
            logical_name,
            filename,
            size,
            maxsize,
            filegrowth,
        })
    }

    fn parse_create_database(&mut self) -> Result<StatementKind, ParseError> {
        self.expect_keyword(Keyword::Database, "DATABASE")?;
        let name = self.expect_name("database name")?;
        self.expect_keyword(Keyword::On, "ON")?;
        let data_file = self.parse_file_spec()?;
        self.expect_keyword(Keyword::Log, "LOG")?;
        self.expect_keyword(Keyword::On, "ON")?;
        let log_file = self.parse_file_spec()?;
        Ok(StatementKind::CreateDatabase {
            name,
            data_file,
            log_file,
        })
    }

    fn parse_create_master_key(&mut self) -> Result<StatementKind, ParseError> {
        self.expect_keyword(Keyword::Master, "MASTER")?;
        self.expect_keyword(Keyword::Key, "KEY")?;
        self.expect_keyword(Keyword::Encryption, "ENCRYPTION")?;
        self.expect_keyword(Keyword::By, "BY")?;
        self.expect_keyword(Keyword::Password, "PASSWORD")?;
        self.expect_punct('=')?;
        let password = self.expect_string("password string")?;
        Ok(StatementKind::CreateMasterKey { password })
    }

    fn parse_create_certificate(&mut self) -> Result<StatementKind, ParseError> {
        self.expect_keyword(Keyword::Certificate, "CERTIFICATE")?;
        let name = self.expect_name("certificate name")?;
        self.expect_keyword(Keyword::With, "WITH")?;
        self.expect_keyword(Keyword::Subject, "SUBJECT")?;
        self.expect_punct('=')?;
        let subject = self.expect_string("subject string")?;
        Ok(StatementKind::CreateCertificate { name, subject })
    }

    fn parse_create_dek(&mut self) -> Result<StatementKind, ParseError> {
        self.expect_keyword(Keyword::Database, "DATABASE")?;
        self.expect_keyword(Keyword::Encryption, "ENCRYPTION")?;
        self.expect_keyword(Keyword::Key, "KEY")?;
        self.expect_keyword(Keyword::With, "WITH")?;
        self.expect_keyword(Keyword::Algorithm, "ALGORITHM")?;
        self.expect_punct('=')?;
        let algorithm = self.expect_name("algorithm name")?;
        self.expect_keyword(Keyword::Encryption, "ENCRYPTION")?;
        self.expect_keyword(Keyword::By, "BY")?;
        self.expect_keyword(Keyword::Server, "SERVER")?;
        self.expect_keyword(Keyword::Certificate, "CERTIFICATE")?;
        let certificate = self.expect_name("certificate name")?;
        Ok(StatementKind::CreateDatabaseEncryptionKey {
            algorithm,
            certificate,
        })
    }

    fn parse_alter(&mut self) -> Result<StatementKind, ParseError> {
        self.expect_keyword(Keyword::Alter, "ALTER")?;
        match self.peek().map(|t| t.kind) {
            Some(TokenKind::Keyword(Keyword::Database)) => {
                self.bump();
                let database = self.expect_name("database name")?;
                self.expect_keyword(Keyword::Set, "SET")?;
                self.expect_keyword(Keyword::Encryption, "ENCRYPTION")?;
                let on = if self.at_keyword(Keyword::On) {
                    self.bump();
                    true
                } else if self.at_keyword(Keyword::Off) {
                    self.bump();
                    false
                } else {
                    return Err(self.error("ON or OFF"));
                };
                Ok(StatementKind::AlterDatabaseSetEncryption { database, on })
            }
            Some(TokenKind::Keyword(Keyword::Certificate)) => {
                self.bump();
                let name = self.expect_name("certificate name")?;
                self.expect_keyword(Keyword::With, "WITH")?;
                self.expect_keyword(Keyword::Private, "PRIVATE")?;
                self.expect_keyword(Keyword::Key, "KEY")?;
                self.expect_punct('(')?;
                self.expect_keyword(Keyword::Encryption, "ENCRYPTION")?;
                self.expect_keyword(Keyword::By, "BY")?;
                self.expect_keyword(Keyword::Password, "PASSWORD")?;
                self.expect_punct('=')?;
                let password = self.expect_string("password string")?;
                self.expect_punct(')')?;
                Ok(StatementKind::AlterCertificatePassword { name, password })
            }
            _ => Err(self.error("DATABASE or CERTIFICATE")),
        }
    }

    fn parse_backup(&mut self) -> Result<StatementKind, ParseError> {
        self.expect_keyword(Keyword::Backup, "BACKUP")?;
        match self.peek().map(|t| t.kind) {
            Some(TokenKind::Keyword(Keyword::Certificate)) => {
                self.bump();
                let name = self.expect_name("certificate name")?;
                self.expect_keyword(Keyword::To, "TO")?;
                self.expect_keyword(Keyword::File, "FILE")?;
                self.expect_punct('=')?;
                let cert_file = self.expect_string("file path string")?;
                self.expect_keyword(Keyword::With, "WITH")?;
                self.expect_keyword(Keyword::Private, "PRIVATE")?;
                self.expect_keyword(Keyword::Key, "KEY")?;
                self.expect_punct('(')?;
                self.expect_keyword(Keyword::File, "FILE")?;
                self.expect_punct('=')?;
                let private_key_file = self.expect_string("file path string")?;
                self.expect_punct(',')?;
                self.expect_keyword(Keyword::Encryption, "ENCRYPTION")?;
                self.expect_keyword(Keyword::By, "BY")?;
                self.expect_keyword(Keyword::Password, "PASSWORD")?;
                self.expect_punct('=')?;
                let password = self.expect_string("password string")?;
                self.expect_punct(')')?;
                Ok(StatementKind::BackupCertificate {
                    name,
                    cert_file,
                    private_key_file,
                    password,
                })
            }
            Some(TokenKind::Keyword(Keyword::Database)) => {
                self.bump();
                let database = self.expect_name("database name")?;
                self.expect_keyword(Keyword::To, "TO")?;
                self.expect_keyword(Keyword::Disk, "DISK")?;
                self.expect_punct('=')?;
                let to_file = self.expect_string("file path string")?;
                Ok(StatementKind::BackupDatabase { database, to_file })
            }
            _ => Err(self.error("CERTIFICATE or DATABASE")),
        }
    }

    fn parse_restore(&mut self) -> Result<StatementKind, ParseError> {
        self.expect_keyword(Keyword::Restore, "RESTORE")?;
        match self.peek().map(|t| t.kind) {
            Some(TokenKind::Keyword(Keyword::Certificate)) => {
                self.bump();
                self.expect_keyword(Keyword::From, "FROM")?;
                self.expect_keyword(Keyword::File, "FILE")?;
                self.expect_punct('=')?;
                let cert_file = self.expect_string("file path string")?;
                self.expect_keyword(Keyword::With, "WITH")?;
                self.expect_keyword(Keyword::Private, "PRIVATE")?;
                self.expect_keyword(Keyword::Key, "KEY")?;
                self.expect_punct('(')?;
                self.expect_keyword(Keyword::File, "FILE")?;
                self.expect_punct('=')?;
                let private_key_file = self.expect_string("file path string")?;
                self.expect_punct(',')?;
                self.expect_keyword(Keyword::Decryption, "DECRYPTION")?;
                self.expect_keyword(Keyword::By, "BY")?;
                self.expect_keyword(Keyword::Password, "PASSWORD")?;
                self.expect_punct('=')?;
                let password = self.expect_string("password string")?;
                self.expect_punct(')')?;
                Ok(StatementKind::RestoreCertificate {
                    cert_file,
                    private_key_file,
                    password,
                })
            }
            Some(TokenKind::Keyword(Keyword::Database)) => {
                self.bump();
                self.expect_keyword(Keyword::From, "FROM")?;
                self.expect_keyword(Keyword::Disk, "DISK")?;
                self.expect_punct('=')?;
                let from_file = self.expect_string("file path string")?;
                Ok(StatementKind::RestoreDatabase { from_file })
            }
            _ => Err(self.error("CERTIFICATE or DATABASE")),
        }
    }

    fn parse_attach(&mut self) -> Result<StatementKind, ParseError> {
        self.expect_keyword(Keyword::Attach, "ATTACH")?;
        self.expect_keyword(Keyword::Database, "DATABASE")?;
        self.expect_keyword(Keyword::Data, "DATA")?;
        self.expect_keyword(Keyword::File, "FILE")?;
        self.expect_punct('=')?;
        let data_file = self.expect_string("file path string")?;
        self.expect_keyword(Keyword::Log, "LOG")?;
        self.expect_keyword(Keyword::File, "FILE")?;
        self.expect_punct('=')?;
        let log_file = self.expect_string("file path string")?;
        Ok(StatementKind::AttachDatabase {
            data_file,
            log_file,
        })
    }
}

fn describe(token: &Token) -> String {
    match token.kind {
        TokenKind::SingleQuotedString => "string literal".to_string(),
        _ => format!("'{}'", token.text),
    }
}
