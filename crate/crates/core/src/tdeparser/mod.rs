//! Tokenizer and recursive-descent parser for the DDL dialect.
//!
//! Scripts are split into batches on lines consisting solely of `GO`
//! (case-insensitive); each batch parses to a list of typed statements.
//! Statement terminators (`;`) are optional, whitespace and line breaks are
//! insignificant inside statements, and string literals may span lines.

mod ast;
mod parser;
mod token;

pub use ast::{print_script, Batch, FileSpec, SizeSpec, SizeUnit, Statement, StatementKind};
pub use token::{Keyword, Token, TokenKind};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("unterminated string literal at line {line}, column {column}")]
    UnterminatedString { line: u32, column: u32 },
    #[error("syntax error at line {line}, column {column}: expected {expected}, found {found}")]
    Syntax {
        expected: String,
        found: String,
        line: u32,
        column: u32,
    },
}

impl ParseError {
    pub fn position(&self) -> (u32, u32) {
        match self {
            ParseError::UnterminatedString { line, column } => (*line, *column),
            ParseError::Syntax { line, column, .. } => (*line, *column),
        }
    }
}

/// Tokenize a whole script (positions start at line 1).
pub fn tokenize(script: &str) -> Result<Vec<Token>, ParseError> {
    token::tokenize_from(script, 1)
}

fn is_go_line(line: &str) -> bool {
    line.trim().eq_ignore_ascii_case("go")
}

/// Split on GO-only lines, keeping each chunk's starting line number so
/// diagnostics stay script-global.
fn split_batches_spanned(script: &str) -> Vec<(u32, String)> {
    let mut chunks = Vec::new();
    let mut current = String::new();
    let mut current_start = 1u32;
    let mut line_no = 0u32;
    for line in script.lines() {
        line_no += 1;
        if is_go_line(line) {
            chunks.push((current_start, std::mem::take(&mut current)));
            current_start = line_no + 1;
        } else {
            current.push_str(line);
            current.push('\n');
        }
    }
    chunks.push((current_start, current));
    chunks
        .into_iter()
        .filter(|(_, text)| !text.trim().is_empty())
        .collect()
}

/// Split a script into batch texts. Empty batches are dropped.
pub fn split_batches(script: &str) -> Vec<String> {
    split_batches_spanned(script)
        .into_iter()
        .map(|(_, text)| text)
        .collect()
}

/// Parse a whole script into GO-delimited batches of statements.
pub fn parse_script(script: &str) -> Result<Vec<Batch>, ParseError> {
    let mut batches = Vec::new();
    for (start_line, text) in split_batches_spanned(script) {
        let tokens = token::tokenize_from(&text, start_line)?;
        let statements = parser::Parser::new(tokens).parse_statements()?;
        if !statements.is_empty() {
            batches.push(Batch { statements });
        }
    }
    Ok(batches)
}

/// Parse a script and flatten the batches into one statement list.
pub fn parse_statements(script: &str) -> Result<Vec<Statement>, ParseError> {
    Ok(parse_script(script)?
        .into_iter()
        .flat_map(|b| b.statements)
        .collect())
}
