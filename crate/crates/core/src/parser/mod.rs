//! Parsing of signature files: declarations, rewrite rules, directives.
//!
//! The surface tree (`PTerm`) keeps wildcards and guards as explicit nodes;
//! [`resolve`] turns it into core terms, separating bound variables, rule
//! variables and constants.

pub mod lexer;
mod resolve;

pub use lexer::{tokenize, Tok, Token};
pub use resolve::{resolve, resolve_term, resolve_term_with_free, RawRule, Resolved};

use crate::error::{Error, ErrorCode, Result};
use crate::loc::Location;

#[derive(Clone, Debug)]
pub struct PTerm {
    pub kind: PTermKind,
    pub loc: Location,
}

#[derive(Clone, Debug)]
pub enum PTermKind {
    Type,
    /// Possibly qualified identifier; resolution decides what it names.
    Ident(Option<String>, String),
    Wildcard,
    /// `{t}` guard marker, only meaningful in rule left-hand sides.
    Guard(Box<PTerm>),
    App(Box<PTerm>, Box<PTerm>),
    Lam(String, Option<Box<PTerm>>, Box<PTerm>),
    /// `x:A -> B` when named, `A -> B` otherwise.
    Pi(Option<String>, Box<PTerm>, Box<PTerm>),
}

#[derive(Clone, Debug)]
pub struct RawRuleSrc {
    /// The bracketed rule context: names whose types will be inferred.
    pub vars: Vec<(String, Location)>,
    pub lhs: PTerm,
    pub rhs: PTerm,
    pub loc: Location,
}

#[derive(Clone, Debug)]
pub struct Decl {
    pub kind: DeclKind,
    pub loc: Location,
}

#[derive(Clone, Debug)]
pub enum DeclKind {
    /// `name : ty.` — a static symbol: may never head a rewrite rule.
    Static { name: String, ty: PTerm },
    /// `def name : ty.` — a definable symbol.
    Definable { name: String, ty: PTerm },
    /// `def name (: ty)? := body.`
    Definition { name: String, ty: Option<PTerm>, body: PTerm },
    /// A maximal run of `[...] l --> r` clauses terminated by one dot;
    /// rules of one block are typed without seeing each other.
    Rules(Vec<RawRuleSrc>),
    Conv(PTerm, PTerm),
    Whnf(PTerm),
    Snf(PTerm),
    Require(String),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    eof: Location,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.tokens.get(self.pos + 1).map(|t| &t.tok)
    }

    fn loc(&self) -> Location {
        self.tokens
            .get(self.pos)
            .map(|t| t.loc.clone())
            .unwrap_or_else(|| self.eof.clone())
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::new(ErrorCode::Syntax, msg).at(self.loc())
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<Location> {
        match self.peek() {
            Some(t) if t == tok => Ok(self.bump().unwrap().loc),
            Some(t) => Err(self.err(format!("expected {what}, found `{t}`"))),
            None => Err(self.err(format!("expected {what}, found end of file"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Location)> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let t = self.bump().unwrap();
                match t.tok {
                    Tok::Ident(s) => Ok((s, t.loc)),
                    _ => unreachable!(),
                }
            }
            Some(t) => Err(self.err(format!("expected {what}, found `{t}`"))),
            None => Err(self.err(format!("expected {what}, found end of file"))),
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(
                Tok::Ident(_)
                    | Tok::QIdent(..)
                    | Tok::KwType
                    | Tok::Wildcard
                    | Tok::LPar
                    | Tok::LBrace
            )
        )
    }

    fn atom(&mut self) -> Result<PTerm> {
        let loc = self.loc();
        match self.bump().map(|t| t.tok) {
            Some(Tok::Ident(s)) => Ok(PTerm { kind: PTermKind::Ident(None, s), loc }),
            Some(Tok::QIdent(m, s)) => Ok(PTerm { kind: PTermKind::Ident(Some(m), s), loc }),
            Some(Tok::KwType) => Ok(PTerm { kind: PTermKind::Type, loc }),
            Some(Tok::Wildcard) => Ok(PTerm { kind: PTermKind::Wildcard, loc }),
            Some(Tok::LPar) => {
                let t = self.term()?;
                self.expect(&Tok::RPar, "`)`")?;
                Ok(t)
            }
            Some(Tok::LBrace) => {
                let t = self.term()?;
                self.expect(&Tok::RBrace, "`}`")?;
                Ok(PTerm { kind: PTermKind::Guard(Box::new(t)), loc })
            }
            Some(t) => Err(Error::new(ErrorCode::Syntax, format!("expected a term, found `{t}`"))
                .at(loc)),
            None => Err(Error::new(ErrorCode::Syntax, "expected a term, found end of file")
                .at(loc)),
        }
    }

    fn app_term(&mut self) -> Result<PTerm> {
        let mut head = self.atom()?;
        while self.starts_atom() {
            let loc = head.loc.clone();
            let arg = self.atom()?;
            head = PTerm { kind: PTermKind::App(Box::new(head), Box::new(arg)), loc };
        }
        Ok(head)
    }

    fn term(&mut self) -> Result<PTerm> {
        // Binder lookahead: `x : A ->`, `x : A =>`, `x =>`, `_ =>`.
        let binder_name = match (self.peek(), self.peek2()) {
            (Some(Tok::Ident(s)), Some(Tok::Colon | Tok::FatArrow)) => Some(s.clone()),
            (Some(Tok::Wildcard), Some(Tok::FatArrow)) => Some("_".to_string()),
            _ => None,
        };
        if let Some(name) = binder_name {
            let loc = self.loc();
            self.bump();
            match self.bump().map(|t| t.tok) {
                Some(Tok::FatArrow) => {
                    let body = self.term()?;
                    return Ok(PTerm {
                        kind: PTermKind::Lam(name, None, Box::new(body)),
                        loc,
                    });
                }
                Some(Tok::Colon) => {
                    let dom = self.app_term()?;
                    match self.bump().map(|t| t.tok) {
                        Some(Tok::Arrow) => {
                            let cod = self.term()?;
                            return Ok(PTerm {
                                kind: PTermKind::Pi(Some(name), Box::new(dom), Box::new(cod)),
                                loc,
                            });
                        }
                        Some(Tok::FatArrow) => {
                            let body = self.term()?;
                            return Ok(PTerm {
                                kind: PTermKind::Lam(name, Some(Box::new(dom)), Box::new(body)),
                                loc,
                            });
                        }
                        _ => return Err(self.err("expected `->` or `=>` after binder")),
                    }
                }
                _ => unreachable!(),
            }
        }
        let t = self.app_term()?;
        if self.peek() == Some(&Tok::Arrow) {
            let loc = t.loc.clone();
            self.bump();
            let cod = self.term()?;
            return Ok(PTerm { kind: PTermKind::Pi(None, Box::new(t), Box::new(cod)), loc });
        }
        if self.peek() == Some(&Tok::FatArrow) {
            return Err(self.err("the left-hand side of `=>` must be a variable"));
        }
        Ok(t)
    }

    /// `(x : A) (y : B) ...` parameters of a definition.
    fn params(&mut self) -> Result<Vec<(String, PTerm)>> {
        let mut out = Vec::new();
        while self.peek() == Some(&Tok::LPar) {
            self.bump();
            let (name, _) = self.ident("a parameter name")?;
            self.expect(&Tok::Colon, "`:`")?;
            let ty = self.term()?;
            self.expect(&Tok::RPar, "`)`")?;
            out.push((name, ty));
        }
        Ok(out)
    }

    fn rule_clause(&mut self) -> Result<RawRuleSrc> {
        let loc = self.expect(&Tok::LBracket, "`[`")?;
        let mut vars = Vec::new();
        if self.peek() != Some(&Tok::RBracket) {
            loop {
                let (name, vloc) = self.ident("a rule variable")?;
                vars.push((name, vloc));
                if self.peek() == Some(&Tok::Comma) {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(&Tok::RBracket, "`]`")?;
        let lhs = self.term()?;
        self.expect(&Tok::LongArrow, "`-->`")?;
        let rhs = self.term()?;
        Ok(RawRuleSrc { vars, lhs, rhs, loc })
    }

    fn declaration(&mut self) -> Result<Decl> {
        let loc = self.loc();
        match self.peek() {
            Some(Tok::Directive(_)) => {
                let name = match self.bump().unwrap().tok {
                    Tok::Directive(n) => n,
                    _ => unreachable!(),
                };
                let kind = match name.as_str() {
                    "CONV" => {
                        let a = self.term()?;
                        self.expect(&Tok::Comma, "`,`")?;
                        let b = self.term()?;
                        DeclKind::Conv(a, b)
                    }
                    "WHNF" => DeclKind::Whnf(self.term()?),
                    "SNF" => DeclKind::Snf(self.term()?),
                    "REQUIRE" => {
                        let (m, _) = self.ident("a module name")?;
                        DeclKind::Require(m)
                    }
                    other => {
                        return Err(Error::new(
                            ErrorCode::Syntax,
                            format!("unknown directive `#{other}`"),
                        )
                        .at(loc))
                    }
                };
                self.expect(&Tok::Dot, "`.`")?;
                Ok(Decl { kind, loc })
            }
            Some(Tok::KwDef) => {
                self.bump();
                let (name, _) = self.ident("a symbol name")?;
                let params = self.params()?;
                let (ty, body) = match self.peek() {
                    Some(Tok::Colon) => {
                        self.bump();
                        let ty = self.term()?;
                        match self.peek() {
                            Some(Tok::ColonEq) => {
                                self.bump();
                                (Some(ty), Some(self.term()?))
                            }
                            _ => (Some(ty), None),
                        }
                    }
                    Some(Tok::ColonEq) => {
                        self.bump();
                        (None, Some(self.term()?))
                    }
                    _ => return Err(self.err("expected `:` or `:=` after `def`")),
                };
                self.expect(&Tok::Dot, "`.`")?;
                // Parameters wrap the type in products and the body in
                // annotated lambdas.
                let ty = ty.map(|t| {
                    params.iter().rev().fold(t, |acc, (n, a)| PTerm {
                        loc: a.loc.clone(),
                        kind: PTermKind::Pi(
                            Some(n.clone()),
                            Box::new(a.clone()),
                            Box::new(acc),
                        ),
                    })
                });
                let body = body.map(|b| {
                    params.iter().rev().fold(b, |acc, (n, a)| PTerm {
                        loc: a.loc.clone(),
                        kind: PTermKind::Lam(
                            n.clone(),
                            Some(Box::new(a.clone())),
                            Box::new(acc),
                        ),
                    })
                });
                let kind = match (ty, body) {
                    (ty, Some(body)) => DeclKind::Definition { name, ty, body },
                    (Some(ty), None) => DeclKind::Definable { name, ty },
                    (None, None) => unreachable!(),
                };
                Ok(Decl { kind, loc })
            }
            Some(Tok::LBracket) => {
                let mut rules = vec![self.rule_clause()?];
                while self.peek() == Some(&Tok::LBracket) {
                    rules.push(self.rule_clause()?);
                }
                self.expect(&Tok::Dot, "`.`")?;
                Ok(Decl { kind: DeclKind::Rules(rules), loc })
            }
            Some(Tok::Ident(_)) => {
                let (name, _) = self.ident("a symbol name")?;
                self.expect(&Tok::Colon, "`:`")?;
                let ty = self.term()?;
                self.expect(&Tok::Dot, "`.`")?;
                Ok(Decl { kind: DeclKind::Static { name, ty }, loc })
            }
            Some(t) => Err(self.err(format!("expected a declaration, found `{t}`"))),
            None => Err(self.err("expected a declaration")),
        }
    }
}

/// Parses a token stream into declarations, one per terminating dot.
pub fn parse_tokens(tokens: Vec<Token>, file: &str) -> Result<Vec<Decl>> {
    let eof = tokens
        .last()
        .map(|t| t.loc.clone())
        .unwrap_or_else(|| Location::new(file, 1, 1));
    let mut p = Parser { tokens, pos: 0, eof };
    let mut decls = Vec::new();
    while p.peek().is_some() {
        decls.push(p.declaration()?);
    }
    Ok(decls)
}

/// Convenience entry point: tokenize and parse a whole file.
pub fn parse_file(src: &str, file: &str) -> Result<Vec<Decl>> {
    parse_tokens(tokenize(src, file)?, file)
}

/// Parses a single term, for directives and tests.
pub fn parse_pterm(src: &str, file: &str) -> Result<PTerm> {
    let tokens = tokenize(src, file)?;
    let eof = tokens
        .last()
        .map(|t| t.loc.clone())
        .unwrap_or_else(|| Location::new(file, 1, 1));
    let mut p = Parser { tokens, pos: 0, eof };
    let t = p.term()?;
    match p.peek() {
        None => Ok(t),
        Some(tok) => Err(p.err(format!("trailing input after term: `{tok}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_declaration() {
        let ds = parse_file("nat : Type.", "<test>").unwrap();
        assert_eq!(ds.len(), 1);
        match &ds[0].kind {
            DeclKind::Static { name, ty } => {
                assert_eq!(name, "nat");
                assert!(matches!(ty.kind, PTermKind::Type));
            }
            other => panic!("unexpected declaration {other:?}"),
        }
    }

    #[test]
    fn definable_declaration() {
        let ds = parse_file("def tail: n:nat -> vector (S n) -> vector n.", "<test>").unwrap();
        match &ds[0].kind {
            DeclKind::Definable { name, ty } => {
                assert_eq!(name, "tail");
                assert!(matches!(ty.kind, PTermKind::Pi(Some(_), ..)));
            }
            other => panic!("unexpected declaration {other:?}"),
        }
    }

    #[test]
    fn grouped_rules_share_one_dot() {
        let src = "[n] plus 0 n --> n\n[n1, n2] plus (S n1) n2 --> S (plus n1 n2).";
        let ds = parse_file(src, "<test>").unwrap();
        assert_eq!(ds.len(), 1);
        match &ds[0].kind {
            DeclKind::Rules(rules) => {
                assert_eq!(rules.len(), 2);
                assert_eq!(rules[0].vars.len(), 1);
                assert_eq!(rules[1].vars.len(), 2);
            }
            other => panic!("unexpected declaration {other:?}"),
        }
    }

    #[test]
    fn sequential_rules_are_separate_blocks() {
        let src = "[n] plus 0 n --> n.\n[n1, n2] plus (S n1) n2 --> S (plus n1 n2).";
        let ds = parse_file(src, "<test>").unwrap();
        assert_eq!(ds.len(), 2);
    }

    #[test]
    fn definition_with_parameters() {
        let src = "def update (A : type) := preupdate A A.";
        let ds = parse_file(src, "<test>").unwrap();
        match &ds[0].kind {
            DeclKind::Definition { name, ty, body } => {
                assert_eq!(name, "update");
                assert!(ty.is_none());
                assert!(matches!(body.kind, PTermKind::Lam(..)));
            }
            other => panic!("unexpected declaration {other:?}"),
        }
    }

    #[test]
    fn conv_directive_carries_two_terms() {
        let ds = parse_file("#CONV mod2 (S O), O.", "<test>").unwrap();
        assert!(matches!(ds[0].kind, DeclKind::Conv(..)));
    }

    #[test]
    fn missing_rule_arrow_is_an_error() {
        let e = parse_file("[n] plus 0 n.", "<test>").unwrap_err();
        assert_eq!(e.code, ErrorCode::Syntax);
    }

    #[test]
    fn unbalanced_bracket_is_an_error() {
        assert!(parse_file("f : (A -> B.", "<test>").is_err());
    }
}
