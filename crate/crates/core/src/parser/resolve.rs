//! Name resolution: surface trees to core terms.
//!
//! Each identifier becomes the innermost binder of that name, a rule
//! variable, or a signature constant, in that order. Wildcards desugar to
//! fresh rule variables, guards are recorded as paths into the left-hand
//! side and the guarded subterm is kept in place.

use super::{Decl, DeclKind, PTerm, PTermKind, RawRuleSrc};
use crate::error::{Error, ErrorCode, Result};
use crate::loc::Location;
use crate::signature::Signature;
use crate::term::{Name, RTerm, Term};
use std::collections::BTreeSet;

/// A resolved rewrite rule, before pattern and type validation.
#[derive(Clone, Debug)]
pub struct RawRule {
    /// Rule variables: the bracketed names plus one fresh name per wildcard.
    pub delta: Vec<String>,
    /// Left-hand side with guards transparent (the guarded subterms in place).
    pub lhs: RTerm,
    pub rhs: RTerm,
    /// Paths (child-index sequences) of the guard markers within `lhs`.
    pub guard_paths: Vec<Vec<u8>>,
    pub loc: Location,
}

/// A declaration with all terms resolved.
#[derive(Clone, Debug)]
pub enum Resolved {
    Static { name: String, ty: RTerm },
    Definable { name: String, ty: RTerm },
    Definition { name: String, ty: Option<RTerm>, body: RTerm },
    Rules(Vec<RawRule>),
    Conv(RTerm, RTerm),
    Whnf(RTerm),
    Snf(RTerm),
    Require(String),
}

/// Accumulator for the rule currently being resolved.
struct RuleAcc {
    delta: Vec<String>,
    names: BTreeSet<String>,
    /// Rule variables seen at least once outside every guard.
    covered: BTreeSet<String>,
    guards: Vec<Vec<u8>>,
    wildcards: usize,
}

impl RuleAcc {
    fn fresh_wildcard(&mut self) -> String {
        loop {
            let name = format!("_{}", self.wildcards);
            self.wildcards += 1;
            if !self.names.contains(&name) {
                self.names.insert(name.clone());
                self.delta.push(name.clone());
                return name;
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Plain,
    RuleLhs,
    RuleRhs,
}

struct Resolver<'a> {
    sig: &'a Signature,
    binders: Vec<String>,
    /// Extra free names treated as `Local`s (rule variables, test contexts).
    free: BTreeSet<String>,
}

impl<'a> Resolver<'a> {
    fn unknown(&self, id: &str, loc: &Location, mode: Mode) -> Error {
        let hint = if mode != Mode::Plain {
            " (rule variables must be listed in the rule context)"
        } else {
            ""
        };
        Error::new(ErrorCode::UnknownIdentifier, format!("unknown identifier `{id}`{hint}"))
            .at(loc.clone())
    }

    fn term(
        &mut self,
        pt: &PTerm,
        mode: Mode,
        rule: &mut Option<&mut RuleAcc>,
        path: &mut Vec<u8>,
        in_guard: bool,
    ) -> Result<RTerm> {
        match &pt.kind {
            PTermKind::Type => Ok(Term::sort_type()),
            PTermKind::Ident(None, id) => {
                if let Some(idx) = self.binders.iter().rev().position(|b| b == id) {
                    return Ok(Term::bound(idx));
                }
                if self.free.contains(id) {
                    if !in_guard {
                        if let Some(acc) = rule {
                            acc.covered.insert(id.clone());
                        }
                    }
                    return Ok(Term::local(id));
                }
                let name = Name::global(id.clone());
                if self.sig.contains(&name) {
                    return Ok(Term::cst(name));
                }
                Err(self.unknown(id, &pt.loc, mode))
            }
            PTermKind::Ident(Some(m), id) => {
                let name = Name::qualified(m.clone(), id.clone());
                if self.sig.contains(&name) {
                    Ok(Term::cst(name))
                } else {
                    Err(self.unknown(&format!("{m}.{id}"), &pt.loc, mode))
                }
            }
            PTermKind::Wildcard => match (mode, rule) {
                (Mode::RuleLhs, Some(acc)) if !in_guard => {
                    let name = acc.fresh_wildcard();
                    acc.covered.insert(name.clone());
                    self.free.insert(name.clone());
                    Ok(Term::local(name))
                }
                (Mode::RuleLhs, _) => Err(Error::new(
                    ErrorCode::MisplacedWildcard,
                    "wildcards may not appear inside a guard",
                )
                .at(pt.loc.clone())),
                _ => Err(Error::new(
                    ErrorCode::MisplacedWildcard,
                    "`_` is only allowed in rule left-hand sides",
                )
                .at(pt.loc.clone())),
            },
            PTermKind::Guard(sub) => {
                if mode != Mode::RuleLhs || rule.is_none() {
                    return Err(Error::new(
                        ErrorCode::MisplacedGuard,
                        "`{...}` guards are only allowed in rule left-hand sides",
                    )
                    .at(pt.loc.clone()));
                }
                if in_guard {
                    return Err(Error::new(ErrorCode::MisplacedGuard, "guards may not be nested")
                        .at(pt.loc.clone()));
                }
                if let Some(acc) = rule.as_mut() {
                    acc.guards.push(path.clone());
                }
                self.term(sub, mode, rule, path, true)
            }
            PTermKind::App(f, a) => {
                path.push(0);
                let rf = self.term(f, mode, rule, path, in_guard)?;
                path.pop();
                path.push(1);
                let ra = self.term(a, mode, rule, path, in_guard)?;
                path.pop();
                Ok(Term::app(rf, ra))
            }
            PTermKind::Lam(name, ann, body) => {
                self.check_binder(name, mode, rule, &pt.loc)?;
                let rann = match ann {
                    Some(a) => {
                        path.push(0);
                        let r = self.term(a, mode, rule, path, in_guard)?;
                        path.pop();
                        Some(r)
                    }
                    None => None,
                };
                self.binders.push(name.clone());
                path.push(1);
                let rbody = self.term(body, mode, rule, path, in_guard);
                path.pop();
                self.binders.pop();
                Ok(Term::lam(name.clone(), rann, rbody?))
            }
            PTermKind::Pi(name, dom, cod) => {
                let name = name.clone().unwrap_or_default();
                self.check_binder(&name, mode, rule, &pt.loc)?;
                path.push(0);
                let rdom = self.term(dom, mode, rule, path, in_guard)?;
                path.pop();
                self.binders.push(name.clone());
                path.push(1);
                let rcod = self.term(cod, mode, rule, path, in_guard);
                path.pop();
                self.binders.pop();
                Ok(Term::pi(name, rdom, rcod?))
            }
        }
    }

    /// Inside a rule, a binder may not reuse a rule-variable name; the
    /// reference would silently change meaning.
    fn check_binder(
        &self,
        name: &str,
        mode: Mode,
        rule: &Option<&mut RuleAcc>,
        loc: &Location,
    ) -> Result<()> {
        if mode != Mode::Plain {
            if let Some(acc) = rule {
                if acc.names.contains(name) {
                    return Err(Error::new(
                        ErrorCode::ShadowedRuleVariable,
                        format!("binder `{name}` shadows a rule variable"),
                    )
                    .at(loc.clone()));
                }
            }
        }
        Ok(())
    }
}

fn resolve_rule(sig: &Signature, src: &RawRuleSrc) -> Result<RawRule> {
    let mut acc = RuleAcc {
        delta: Vec::new(),
        names: BTreeSet::new(),
        covered: BTreeSet::new(),
        guards: Vec::new(),
        wildcards: 0,
    };
    for (v, vloc) in &src.vars {
        if !acc.names.insert(v.clone()) {
            return Err(Error::new(
                ErrorCode::DuplicateName,
                format!("rule variable `{v}` is declared twice"),
            )
            .at(vloc.clone()));
        }
        acc.delta.push(v.clone());
    }
    let mut resolver = Resolver { sig, binders: Vec::new(), free: acc.names.clone() };
    let mut path = Vec::new();
    let mut slot = Some(&mut acc);
    let lhs = resolver.term(&src.lhs, Mode::RuleLhs, &mut slot, &mut path, false)?;
    let rhs = resolver.term(&src.rhs, Mode::RuleRhs, &mut slot, &mut path, false)?;
    drop(slot);
    // Every rule variable must occur in the left-hand side outside guards,
    // otherwise matching could never bind it.
    for v in &acc.delta {
        if !acc.covered.contains(v) {
            return Err(Error::new(
                ErrorCode::UnusedRuleVariable,
                format!("rule variable `{v}` does not occur in the left-hand side"),
            )
            .at(src.loc.clone()));
        }
    }
    Ok(RawRule {
        delta: acc.delta,
        lhs,
        rhs,
        guard_paths: acc.guards,
        loc: src.loc.clone(),
    })
}

/// Resolves a declaration against the names currently in scope.
pub fn resolve(sig: &Signature, decl: &Decl) -> Result<Resolved> {
    let plain = |pt: &PTerm| -> Result<RTerm> { resolve_term(sig, pt) };
    match &decl.kind {
        DeclKind::Static { name, ty } => Ok(Resolved::Static { name: name.clone(), ty: plain(ty)? }),
        DeclKind::Definable { name, ty } => {
            Ok(Resolved::Definable { name: name.clone(), ty: plain(ty)? })
        }
        DeclKind::Definition { name, ty, body } => Ok(Resolved::Definition {
            name: name.clone(),
            ty: ty.as_ref().map(&plain).transpose()?,
            body: plain(body)?,
        }),
        DeclKind::Rules(rules) => Ok(Resolved::Rules(
            rules.iter().map(|r| resolve_rule(sig, r)).collect::<Result<_>>()?,
        )),
        DeclKind::Conv(a, b) => Ok(Resolved::Conv(plain(a)?, plain(b)?)),
        DeclKind::Whnf(t) => Ok(Resolved::Whnf(plain(t)?)),
        DeclKind::Snf(t) => Ok(Resolved::Snf(plain(t)?)),
        DeclKind::Require(m) => Ok(Resolved::Require(m.clone())),
    }
}

/// Resolves a term that may only mention binders and signature constants.
pub fn resolve_term(sig: &Signature, pt: &PTerm) -> Result<RTerm> {
    resolve_term_with_free(sig, pt, &BTreeSet::new())
}

/// Resolves a term treating `free` names as `Local` variables; used for
/// terms that live under a typing context.
pub fn resolve_term_with_free(
    sig: &Signature,
    pt: &PTerm,
    free: &BTreeSet<String>,
) -> Result<RTerm> {
    let mut resolver = Resolver { sig, binders: Vec::new(), free: free.clone() };
    let mut none = None;
    let mut path = Vec::new();
    resolver.term(pt, Mode::Plain, &mut none, &mut path, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_file, parse_pterm};
    use crate::signature::{Sort, SymbolKind};

    fn sig_with(names: &[(&str, SymbolKind)]) -> Signature {
        let mut sig = Signature::new();
        for (n, k) in names {
            sig.declare(
                Name::global(*n),
                Term::sort_type(),
                *k,
                Sort::Kind,
                Location::builtin(),
            )
            .unwrap();
        }
        sig
    }

    fn rules_of(sig: &Signature, src: &str) -> Result<Vec<RawRule>> {
        let decls = parse_file(src, "<test>").unwrap();
        match resolve(sig, &decls[0])? {
            Resolved::Rules(rs) => Ok(rs),
            other => panic!("expected rules, got {other:?}"),
        }
    }

    #[test]
    fn wildcards_become_fresh_rule_variables() {
        let sig = sig_with(&[
            ("tail", SymbolKind::Definable),
            ("Cons", SymbolKind::Static),
        ]);
        let rs = rules_of(&sig, "[l] tail _ (Cons _ _ l) --> l.").unwrap();
        assert_eq!(rs[0].delta, vec!["l", "_0", "_1", "_2"]);
    }

    #[test]
    fn guard_paths_are_recorded() {
        let sig = sig_with(&[
            ("tail", SymbolKind::Definable),
            ("Cons", SymbolKind::Static),
        ]);
        let rs = rules_of(&sig, "[n, a, l] tail n (Cons {n} a l) --> l.").unwrap();
        assert_eq!(rs[0].guard_paths.len(), 1);
        // tail n (Cons {n} a l): the guard sits on the first argument of the
        // Cons spine, i.e. fun-fun-arg within the second tail argument.
        assert_eq!(rs[0].guard_paths[0], vec![1, 0, 0, 1]);
    }

    #[test]
    fn variables_outside_the_context_are_rejected() {
        let sig = sig_with(&[("plus", SymbolKind::Definable), ("0", SymbolKind::Static)]);
        let e = rules_of(&sig, "[n] plus 0 m --> m.").unwrap_err();
        assert_eq!(e.code, ErrorCode::UnknownIdentifier);
    }

    #[test]
    fn unused_rule_variable_is_rejected() {
        let sig = sig_with(&[("plus", SymbolKind::Definable), ("0", SymbolKind::Static)]);
        let e = rules_of(&sig, "[n, m] plus 0 0 --> 0.").unwrap_err();
        assert_eq!(e.code, ErrorCode::UnusedRuleVariable);
    }

    #[test]
    fn binder_shadowing_a_rule_variable_is_rejected() {
        let sig = sig_with(&[("f", SymbolKind::Definable), ("c", SymbolKind::Static)]);
        let e = rules_of(&sig, "[y] f (y => y) --> c.").unwrap_err();
        assert_eq!(e.code, ErrorCode::ShadowedRuleVariable);
    }

    #[test]
    fn innermost_binder_wins() {
        let sig = sig_with(&[("c", SymbolKind::Static)]);
        let t = parse_pterm("x => x => x", "<test>").unwrap();
        let r = resolve_term(&sig, &t).unwrap();
        assert_eq!(
            r,
            Term::lam("x", None, Term::lam("x", None, Term::bound(0)))
        );
    }

    #[test]
    fn wildcards_rejected_outside_rules() {
        let sig = sig_with(&[]);
        let t = parse_pterm("x => _", "<test>").unwrap();
        let e = resolve_term(&sig, &t).unwrap_err();
        assert_eq!(e.code, ErrorCode::MisplacedWildcard);
    }
}
