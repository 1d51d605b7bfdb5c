//! The global context: an ordered table of typed symbols and their rules.

use crate::error::{Error, ErrorCode, Result};
use crate::loc::Location;
use crate::reduction::CheckedRule;
use crate::term::{Name, RTerm};
use std::collections::BTreeMap;

/// Whether a symbol may head rewrite rules.
///
/// Static symbols never do, which makes them injective with respect to the
/// rewrite congruence; definable symbols (`def`) may.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Static,
    Definable,
}

/// The sort of a declared type: object types live in `Type`, type families
/// in `Kind`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sort {
    Type,
    Kind,
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub name: Name,
    pub ty: RTerm,
    pub kind: SymbolKind,
    pub sort: Sort,
    pub rules: Vec<CheckedRule>,
    /// Set for symbols introduced by `def n := t`; such a symbol carries
    /// exactly its unfolding rule and may not receive further rules.
    pub is_definition: bool,
    pub loc: Location,
}

/// Ordered global context. Declaration order is preserved and observable:
/// rules are tried in it and later declarations see earlier ones only.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    entries: Vec<Entry>,
    index: BTreeMap<Name, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &Name) -> Option<&Entry> {
        self.index.get(name).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, name: &Name) -> bool {
        self.index.contains_key(name)
    }

    pub fn type_of(&self, name: &Name) -> Option<RTerm> {
        self.get(name).map(|e| e.ty.clone())
    }

    pub fn entries(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn unknown(name: &Name) -> Error {
        Error::new(
            ErrorCode::UnknownIdentifier,
            format!("unknown symbol `{name}`"),
        )
    }

    /// Appends a declaration. The type must already have been accepted by
    /// the typing module at sort `sort`; redeclaration is rejected.
    pub fn declare(
        &mut self,
        name: Name,
        ty: RTerm,
        kind: SymbolKind,
        sort: Sort,
        loc: Location,
    ) -> Result<()> {
        if self.contains(&name) {
            return Err(Error::new(
                ErrorCode::DuplicateName,
                format!("`{name}` is already declared"),
            )
            .at(loc));
        }
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push(Entry {
            name,
            ty,
            kind,
            sort,
            rules: Vec::new(),
            is_definition: false,
            loc,
        });
        Ok(())
    }

    /// Declares `name` as a definable symbol carrying its single unfolding
    /// rule `name --> body`. The body must already check against `ty`.
    pub fn add_definition(
        &mut self,
        name: Name,
        ty: RTerm,
        sort: Sort,
        body: RTerm,
        loc: Location,
    ) -> Result<()> {
        self.declare(name.clone(), ty, SymbolKind::Definable, sort, loc.clone())?;
        let i = self.index[&name];
        self.entries[i].is_definition = true;
        self.entries[i].rules.push(CheckedRule::definition(name, body, loc));
        Ok(())
    }

    /// Adds a block of checked rules atomically. Every rule must have been
    /// validated against this signature without the other rules of the block.
    pub fn add_rule_block(&mut self, rules: Vec<CheckedRule>) -> Result<()> {
        for rule in &rules {
            let entry = self
                .get(&rule.head)
                .ok_or_else(|| {
                    Error::new(
                        ErrorCode::UnknownHead,
                        format!("rule rewrites undeclared symbol `{}`", rule.head),
                    )
                    .at(rule.loc.clone())
                })?;
            if entry.kind == SymbolKind::Static {
                return Err(Error::new(
                    ErrorCode::StaticHead,
                    format!("static symbol `{}` may not head a rewrite rule", rule.head),
                )
                .at(rule.loc.clone()));
            }
            if entry.is_definition {
                return Err(Error::new(
                    ErrorCode::RedefinedSymbol,
                    format!("`{}` was introduced by `:=` and may not take rules", rule.head),
                )
                .at(rule.loc.clone()));
            }
        }
        for rule in rules {
            let i = self.index[&rule.head];
            self.entries[i].rules.push(rule);
        }
        Ok(())
    }

    /// True iff the symbol is static, the conservative criterion under which
    /// constraint solving may decompose applications of it.
    pub fn is_injective(&self, name: &Name) -> Result<bool> {
        let entry = self.get(name).ok_or_else(|| Self::unknown(name))?;
        Ok(entry.kind == SymbolKind::Static)
    }

    /// The rules whose head is `name`, in declaration order.
    pub fn rules_for(&self, name: &Name) -> Result<&[CheckedRule]> {
        let entry = self.get(name).ok_or_else(|| Self::unknown(name))?;
        Ok(&entry.rules)
    }

    /// Merges a previously checked module, qualifying every name that the
    /// module declared itself; names it had already imported keep their
    /// qualifier. Entries already present (diamond imports) are skipped.
    pub fn import(&mut self, module: &str, other: &Signature) {
        for entry in &other.entries {
            let name = entry.name.under(module);
            if self.contains(&name) {
                continue;
            }
            let mut e = entry.clone();
            e.name = name.clone();
            e.ty = crate::term::qualify(&e.ty, module);
            e.rules = e.rules.iter().map(|r| r.qualify(module)).collect();
            self.index.insert(name, self.entries.len());
            self.entries.push(e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Term;

    fn loc() -> Location {
        Location::builtin()
    }

    fn n(s: &str) -> Name {
        Name::global(s)
    }

    #[test]
    fn declare_and_lookup() {
        let mut sig = Signature::new();
        sig.declare(n("nat"), Term::sort_type(), SymbolKind::Static, Sort::Kind, loc())
            .unwrap();
        sig.declare(
            n("0"),
            Term::cst(n("nat")),
            SymbolKind::Static,
            Sort::Type,
            loc(),
        )
        .unwrap();
        assert!(sig.contains(&n("nat")));
        assert_eq!(sig.type_of(&n("0")), Some(Term::cst(n("nat"))));
    }

    #[test]
    fn duplicate_declaration_rejected() {
        let mut sig = Signature::new();
        sig.declare(n("nat"), Term::sort_type(), SymbolKind::Static, Sort::Kind, loc())
            .unwrap();
        let e = sig
            .declare(n("nat"), Term::sort_type(), SymbolKind::Static, Sort::Kind, loc())
            .unwrap_err();
        assert_eq!(e.code, ErrorCode::DuplicateName);
    }

    #[test]
    fn static_symbols_are_injective_definable_are_not() {
        let mut sig = Signature::new();
        sig.declare(n("S"), Term::sort_type(), SymbolKind::Static, Sort::Kind, loc())
            .unwrap();
        sig.declare(n("tail"), Term::sort_type(), SymbolKind::Definable, Sort::Kind, loc())
            .unwrap();
        assert!(sig.is_injective(&n("S")).unwrap());
        assert!(!sig.is_injective(&n("tail")).unwrap());
        assert!(sig.is_injective(&n("ghost")).is_err());
    }

    #[test]
    fn rules_on_static_heads_are_rejected() {
        let mut sig = Signature::new();
        sig.declare(n("S"), Term::sort_type(), SymbolKind::Static, Sort::Kind, loc())
            .unwrap();
        let rule = CheckedRule::definition(n("S"), Term::sort_type(), loc());
        let e = sig.add_rule_block(vec![rule]).unwrap_err();
        assert_eq!(e.code, ErrorCode::StaticHead);
    }

    #[test]
    fn rules_for_unknown_symbol_is_an_error() {
        let sig = Signature::new();
        assert_eq!(
            sig.rules_for(&n("ghost")).unwrap_err().code,
            ErrorCode::UnknownIdentifier
        );
    }
}
