//! Tokenizer for the DDL dialect.
//!
//! Keywords match case-insensitively; identifiers keep their case. `--`
//! starts a comment running to end of line. Single-quoted strings may span
//! lines and escape a quote by doubling it. Every token carries its 1-based
//! line and column.

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Use,
    Create,
    Database,
    On,
    Name,
    Filename,
    Size,
    Maxsize,
    Filegrowth,
    Log,
    Master,
    Key,
    Encryption,
    By,
    Password,
    Certificate,
    With,
    Subject,
    Algorithm,
    Server,
    Alter,
    Set,
    Off,
    Backup,
    To,
    File,
    Private,
    Restore,
    From,
    Decryption,
    Disk,
    Attach,
    Data,
    Go,
    Mb,
    Kb,
    Gb,
}

impl Keyword {
    pub fn from_word(word: &str) -> Option<Keyword> {
        let upper = word.to_ascii_uppercase();
        Some(match upper.as_str() {
            "USE" => Keyword::Use,
            "CREATE" => Keyword::Create,
            "DATABASE" => Keyword::Database,
            "ON" => Keyword::On,
            "NAME" => Keyword::Name,
            "FILENAME" => Keyword::Filename,
            "SIZE" => Keyword::Size,
            "MAXSIZE" => Keyword::Maxsize,
            "FILEGROWTH" => Keyword::Filegrowth,
            "LOG" => Keyword::Log,
            "MASTER" => Keyword::Master,
            "KEY" => Keyword::Key,
            "ENCRYPTION" => Keyword::Encryption,
            "BY" => Keyword::By,
            "PASSWORD" => Keyword::Password,
            "CERTIFICATE" => Keyword::Certificate,
            "WITH" => Keyword::With,
            "SUBJECT" => Keyword::Subject,
            "ALGORITHM" => Keyword::Algorithm,
            "SERVER" => Keyword::Server,
            "ALTER" => Keyword::Alter,
            "SET" => Keyword::Set,
            "OFF" => Keyword::Off,
            "BACKUP" => Keyword::Backup,
            "TO" => Keyword::To,
            "FILE" => Keyword::File,
            "PRIVATE" => Keyword::Private,
            "RESTORE" => Keyword::Restore,
            "FROM" => Keyword::From,
            "DECRYPTION" => Keyword::Decryption,
            "DISK" => Keyword::Disk,
            "ATTACH" => Keyword::Attach,
            "DATA" => Keyword::Data,
            "GO" => Keyword::Go,
            "MB" => Keyword::Mb,
            "KB" => Keyword::Kb,
            "GB" => Keyword::Gb,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Identifier,
    Number,
    SingleQuotedString,
    Punct(char),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// For strings this is the decoded value (quotes stripped, doubled
    /// quotes collapsed); for everything else, the raw source text.
    pub text: String,
    pub line: u32,
    pub column: u32,
}

struct Cursor<'a> {
    chars: std::str::Chars<'a>,
    peeked: Option<char>,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn new(input: &'a str, first_line: u32) -> Self {
        let mut chars = input.chars();
        let peeked = chars.next();
        Cursor {
            chars,
            peeked,
            line: first_line,
            column: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.peeked
    }

    fn bump(&mut self) -> Option<char> {
        let current = self.peeked?;
        self.peeked = self.chars.next();
        if current == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(current)
    }
}

fn is_word_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_word_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Tokenize `input`, reporting positions as if its first line were
/// `first_line` (batches are tokenized separately but keep script-global
/// line numbers).
pub fn tokenize_from(input: &str, first_line: u32) -> Result<Vec<Token>, ParseError> {
    let mut cursor = Cursor::new(input, first_line);
    let mut tokens = Vec::new();

    while let Some(c) = cursor.peek() {
        if c.is_whitespace() {
            cursor.bump();
            continue;
        }

        let line = cursor.line;
        let column = cursor.column;

        if c == '-' {
            cursor.bump();
            if cursor.peek() == Some('-') {
                while let Some(c) = cursor.peek() {
                    if c == '\n' {
                        break;
                    }
                    cursor.bump();
                }
                continue;
            }
            tokens.push(Token {
                kind: TokenKind::Punct('-'),
                text: "-".to_string(),
                line,
                column,
            });
            continue;
        }

        if c == '\'' {
            cursor.bump();
            let mut value = String::new();
            loop {
                match cursor.bump() {
                    None => return Err(ParseError::UnterminatedString { line, column }),
                    Some('\'') => {
                        if cursor.peek() == Some('\'') {
                            cursor.bump();
                            value.push('\'');
                        } else {
                            break;
                        }
                    }
                    Some(other) => value.push(other),
                }
            }
            tokens.push(Token {
                kind: TokenKind::SingleQuotedString,
                text: value,
                line,
                column,
            });
            continue;
        }

        if c.is_ascii_digit() {
            let mut text = String::new();
            while let Some(c) = cursor.peek() {
                if c.is_ascii_digit() {
                    text.push(c);
                    cursor.bump();
                } else {
                    break;
                }
            }
            tokens.push(Token {
                kind: TokenKind::Number,
                text,
                line,
                column,
            });
            continue;
        }

        if is_word_start(c) {
            let mut text = String::new();
            while let Some(c) = cursor.peek() {
                if is_word_continue(c) {
                    text.push(c);
                    cursor.bump();
                } else {
                    break;
                }
            }
            let kind = match Keyword::from_word(&text) {
                Some(kw) => TokenKind::Keyword(kw),
                None => TokenKind::Identifier,
            };
            tokens.push(Token {
                kind,
                text,
                line,
                column,
            });
            continue;
        }

        cursor.bump();
        tokens.push(Token {
            kind: TokenKind::Punct(c),
            text: c.to_string(),
            line,
            column,
        });
    }

    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_with_unit_splits_into_number_and_keyword() {
        let tokens = tokenize_from("SIZE = 5MB", 1).unwrap();
        let kinds: Vec<TokenKind> = tokens.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TokenKind::Keyword(Keyword::Size),
                TokenKind::Punct('='),
                TokenKind::Number,
                TokenKind::Keyword(Keyword::Mb),
            ]
        );
        assert_eq!(tokens[2].text, "5");
    }

    #[test]
    fn empty_input_yields_no_tokens() {
        assert_eq!(tokenize_from("", 1).unwrap(), vec![]);
    }

    #[test]
    fn unterminated_string_reports_opening_position() {
        let err = tokenize_from("'abc", 1).unwrap_err();
        assert_eq!(err, ParseError::UnterminatedString { line: 1, column: 1 });
    }

    #[test]
    fn keywords_are_case_insensitive_identifiers_keep_case() {
        let tokens = tokenize_from("uSe MySalesCert", 1).unwrap();
        assert_eq!(tokens[0].kind, TokenKind::Keyword(Keyword::Use));
        assert_eq!(tokens[0].text, "uSe");
        assert_eq!(tokens[1].kind, TokenKind::Identifier);
        assert_eq!(tokens[1].text, "MySalesCert");
    }

    #[test]
    fn comments_are_skipped() {
        let tokens = tokenize_from("USE master -- switch context\n;", 1).unwrap();
        assert_eq!(tokens.len(), 3);
        assert_eq!(tokens[2].kind, TokenKind::Punct(';'));
        assert_eq!(tokens[2].line, 2);
    }

    #[test]
    fn strings_span_lines_and_double_quotes_escape() {
        let tokens = tokenize_from("'It is my\nCertificate' 'a''b'", 1).unwrap();
        assert_eq!(tokens[0].text, "It is my\nCertificate");
        assert_eq!(tokens[1].text, "a'b");
        assert_eq!(tokens[1].line, 2);
    }

    #[test]
    fn positions_track_lines_and_columns() {
        let tokens = tokenize_from("USE x;\n  GO", 1).unwrap();
        assert_eq!((tokens[0].line, tokens[0].column), (1, 1));
        assert_eq!((tokens[1].line, tokens[1].column), (1, 5));
        assert_eq!((tokens[3].line, tokens[3].column), (2, 3));
    }
}
