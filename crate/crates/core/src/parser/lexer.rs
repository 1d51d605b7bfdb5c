//! Tokenizer for the declaration syntax.

use crate::error::{Error, ErrorCode, Result};
use crate::loc::Location;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// Plain identifier; all-digit names like `0` are allowed.
    Ident(String),
    /// `module.name`, produced when a dot sits directly between two idents.
    QIdent(String, String),
    /// The `_` wildcard.
    Wildcard,
    /// `#NAME` meta-directive introducer.
    Directive(String),
    KwDef,
    KwType,
    Colon,
    ColonEq,
    Arrow,
    FatArrow,
    LongArrow,
    Dot,
    Comma,
    LPar,
    RPar,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::QIdent(m, s) => write!(f, "{m}.{s}"),
            Tok::Wildcard => write!(f, "_"),
            Tok::Directive(s) => write!(f, "#{s}"),
            Tok::KwDef => write!(f, "def"),
            Tok::KwType => write!(f, "Type"),
            Tok::Colon => write!(f, ":"),
            Tok::ColonEq => write!(f, ":="),
            Tok::Arrow => write!(f, "->"),
            Tok::FatArrow => write!(f, "=>"),
            Tok::LongArrow => write!(f, "-->"),
            Tok::Dot => write!(f, "."),
            Tok::Comma => write!(f, ","),
            Tok::LPar => write!(f, "("),
            Tok::RPar => write!(f, ")"),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::LBrace => write!(f, "{{"),
            Tok::RBrace => write!(f, "}}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub loc: Location,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn is_ident_start(c: char) -> bool {
    is_ident_char(c)
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
    file: Arc<str>,
}

impl<'a> Lexer<'a> {
    fn loc(&self) -> Location {
        Location { file: self.file.clone(), line: self.line, col: self.col }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::new(ErrorCode::Lexical, msg).at(self.loc())
    }

    fn skip_comment(&mut self) -> Result<()> {
        let start = self.loc();
        self.bump(); // (
        self.bump(); // ;
        let mut depth = 1usize;
        while depth > 0 {
            match self.peek() {
                Some(b'(') if self.peek_at(1) == Some(b';') => {
                    self.bump();
                    self.bump();
                    depth += 1;
                }
                Some(b';') if self.peek_at(1) == Some(b')') => {
                    self.bump();
                    self.bump();
                    depth -= 1;
                }
                Some(_) => {
                    self.bump();
                }
                None => {
                    return Err(Error::new(ErrorCode::Lexical, "unterminated comment").at(start))
                }
            }
        }
        Ok(())
    }

    fn ident(&mut self) -> Result<String> {
        let loc = self.loc();
        let start = self.pos;
        while self.peek().map_or(false, |c| is_ident_char(c as char)) {
            self.bump();
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let first = s.chars().next().unwrap();
        if first.is_ascii_digit() && !s.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::new(
                ErrorCode::Lexical,
                format!("identifier `{s}` may not start with a digit"),
            )
            .at(loc));
        }
        Ok(s.to_string())
    }

    fn next_token(&mut self) -> Result<Option<Token>> {
        loop {
            match self.peek() {
                None => return Ok(None),
                Some(c) if (c as char).is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'(') if self.peek_at(1) == Some(b';') => self.skip_comment()?,
                _ => break,
            }
        }
        let loc = self.loc();
        let tok = match self.peek().unwrap() {
            b'(' => {
                self.bump();
                Tok::LPar
            }
            b')' => {
                self.bump();
                Tok::RPar
            }
            b'[' => {
                self.bump();
                Tok::LBracket
            }
            b']' => {
                self.bump();
                Tok::RBracket
            }
            b'{' => {
                self.bump();
                Tok::LBrace
            }
            b'}' => {
                self.bump();
                Tok::RBrace
            }
            b',' => {
                self.bump();
                Tok::Comma
            }
            b'.' => {
                self.bump();
                Tok::Dot
            }
            b':' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    Tok::ColonEq
                } else {
                    Tok::Colon
                }
            }
            b'=' => {
                self.bump();
                if self.peek() == Some(b'>') {
                    self.bump();
                    Tok::FatArrow
                } else {
                    return Err(self.err("expected `=>`"));
                }
            }
            b'-' => {
                self.bump();
                if self.peek() == Some(b'-') && self.peek_at(1) == Some(b'>') {
                    self.bump();
                    self.bump();
                    Tok::LongArrow
                } else if self.peek() == Some(b'>') {
                    self.bump();
                    Tok::Arrow
                } else {
                    return Err(self.err("expected `->` or `-->`"));
                }
            }
            b'#' => {
                self.bump();
                let name = self.ident()?;
                if name.is_empty() {
                    return Err(self.err("expected a directive name after `#`"));
                }
                Tok::Directive(name)
            }
            // `@` is accepted as a standalone symbol name.
            b'@' => {
                self.bump();
                Tok::Ident("@".to_string())
            }
            c if is_ident_start(c as char) => {
                let id = self.ident()?;
                // An immediately following dot glued to another identifier
                // qualifies the name; a dot before anything else terminates
                // the declaration.
                if self.peek() == Some(b'.')
                    && self.peek_at(1).map_or(false, |c| is_ident_start(c as char))
                    && id != "def"
                    && id != "Type"
                {
                    self.bump(); // .
                    let id2 = self.ident()?;
                    Tok::QIdent(id, id2)
                } else {
                    match id.as_str() {
                        "def" => Tok::KwDef,
                        "Type" => Tok::KwType,
                        "_" => Tok::Wildcard,
                        _ => Tok::Ident(id),
                    }
                }
            }
            c => {
                return Err(self.err(format!("unexpected character `{}`", c as char)));
            }
        };
        Ok(Some(Token { tok, loc }))
    }
}

/// Tokenizes a whole file. `file` is only used for locations.
pub fn tokenize(src: &str, file: &str) -> Result<Vec<Token>> {
    if !src.is_ascii() {
        // Find the first offending line for a useful report.
        for (i, line) in src.lines().enumerate() {
            if !line.is_ascii() {
                return Err(Error::new(ErrorCode::Lexical, "input must be ASCII").at(
                    Location::new(file, (i + 1) as u32, 1),
                ));
            }
        }
    }
    let mut lx = Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1, file: file.into() };
    let mut out = Vec::new();
    while let Some(tok) = lx.next_token()? {
        out.push(tok);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src, "<test>").unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn definition_line() {
        use Tok::*;
        assert_eq!(
            toks("def two := S (S 0)."),
            vec![
                KwDef,
                Ident("two".into()),
                ColonEq,
                Ident("S".into()),
                LPar,
                Ident("S".into()),
                Ident("0".into()),
                RPar,
                Dot
            ]
        );
    }

    #[test]
    fn rule_line() {
        use Tok::*;
        assert_eq!(
            toks("[n] plus 0 n --> n."),
            vec![
                LBracket,
                Ident("n".into()),
                RBracket,
                Ident("plus".into()),
                Ident("0".into()),
                Ident("n".into()),
                LongArrow,
                Ident("n".into()),
                Dot
            ]
        );
    }

    #[test]
    fn comments_are_skipped() {
        use Tok::*;
        assert_eq!(
            toks("(; comment ;) nat : Type."),
            vec![Ident("nat".into()), Colon, KwType, Dot]
        );
        assert_eq!(toks("(; a (; nested ;) b ;) x."), vec![Ident("x".into()), Dot]);
    }

    #[test]
    fn qualified_names() {
        use Tok::*;
        assert_eq!(
            toks("m.plus m.0."),
            vec![
                QIdent("m".into(), "plus".into()),
                QIdent("m".into(), "0".into()),
                Dot
            ]
        );
    }

    #[test]
    fn arrows_and_wildcards() {
        use Tok::*;
        assert_eq!(
            toks("_ -> x => y --> z"),
            vec![
                Wildcard,
                Arrow,
                Ident("x".into()),
                FatArrow,
                Ident("y".into()),
                LongArrow,
                Ident("z".into())
            ]
        );
    }

    #[test]
    fn bad_identifier() {
        let e = tokenize("0abc : Type.", "<test>").unwrap_err();
        assert_eq!(e.code, crate::error::ErrorCode::Lexical);
    }

    #[test]
    fn directive_and_at() {
        use Tok::*;
        assert_eq!(
            toks("#CONV @ x, y."),
            vec![
                Directive("CONV".into()),
                Ident("@".into()),
                Ident("x".into()),
                Comma,
                Ident("y".into()),
                Dot
            ]
        );
    }
}
