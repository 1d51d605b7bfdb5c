//! Term printing with minimal parentheses.
//!
//! Output re-parses to an alpha-equivalent term: binder display names are
//! renamed apart whenever they would capture a free name used underneath,
//! and products whose variable is unused print in arrow form.

use crate::term::{RTerm, Term};
use std::collections::BTreeSet;
use std::fmt::Write;

/// Printing context: how tightly the surrounding syntax binds.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    /// Binders are allowed bare.
    Term,
    /// Head or argument chain of an application: binders need parentheses.
    App,
    /// Argument position: applications need parentheses too.
    Atom,
}

/// Does the term reference the binder `depth` levels out?
fn uses_binder(t: &Term, depth: usize) -> bool {
    match t {
        Term::Bound(i) => *i == depth,
        Term::App(f, a) => uses_binder(f, depth) || uses_binder(a, depth),
        Term::Lam { ann, body, .. } => {
            ann.as_ref().map_or(false, |a| uses_binder(a, depth)) || uses_binder(body, depth + 1)
        }
        Term::Pi { dom, cod, .. } => uses_binder(dom, depth) || uses_binder(cod, depth + 1),
        _ => false,
    }
}

/// Names that a binder around `t` must not take: free variables, unqualified
/// constants, and the display names of outer binders referenced from `t`.
fn names_in_scope(t: &Term, depth: usize, stack: &[String], out: &mut BTreeSet<String>) {
    match t {
        Term::Local(v) => {
            out.insert(v.clone());
        }
        Term::Const(n) => {
            if n.qualifier().is_none() {
                out.insert(n.id().to_string());
            }
        }
        Term::Bound(i) => {
            if *i > depth {
                let outer = i - depth - 1;
                if outer < stack.len() {
                    out.insert(stack[stack.len() - 1 - outer].clone());
                }
            }
        }
        Term::App(f, a) => {
            names_in_scope(f, depth, stack, out);
            names_in_scope(a, depth, stack, out);
        }
        Term::Lam { ann, body, .. } => {
            if let Some(a) = ann {
                names_in_scope(a, depth, stack, out);
            }
            names_in_scope(body, depth + 1, stack, out);
        }
        Term::Pi { dom, cod, .. } => {
            names_in_scope(dom, depth, stack, out);
            names_in_scope(cod, depth + 1, stack, out);
        }
        _ => {}
    }
}

struct Printer {
    stack: Vec<String>,
    buf: String,
}

impl Printer {
    fn choose_name(&self, desired: &str, body: &Term) -> String {
        let mut avoid = BTreeSet::new();
        names_in_scope(body, 0, &self.stack, &mut avoid);
        let base = if desired.is_empty() || desired == "_" {
            if uses_binder(body, 0) { "x" } else { "_" }
        } else {
            desired
        };
        if base == "_" {
            return "_".to_string();
        }
        let mut name = base.to_string();
        while avoid.contains(&name) {
            name.push('\'');
        }
        name
    }

    fn print(&mut self, t: &Term, prec: Prec) {
        let parens = match t {
            Term::Lam { .. } | Term::Pi { .. } => prec > Prec::Term,
            Term::App(..) => prec > Prec::App,
            _ => false,
        };
        if parens {
            self.buf.push('(');
        }
        match t {
            Term::Kind => self.buf.push_str("Kind"),
            Term::Type => self.buf.push_str("Type"),
            Term::Const(n) => {
                let _ = write!(self.buf, "{n}");
            }
            Term::Local(v) => self.buf.push_str(v),
            Term::Bound(i) => {
                if *i < self.stack.len() {
                    let name = self.stack[self.stack.len() - 1 - i].clone();
                    self.buf.push_str(&name);
                } else {
                    // A loose index; only reachable when printing open
                    // fragments in diagnostics.
                    let _ = write!(self.buf, "#{i}");
                }
            }
            Term::App(f, a) => {
                self.print(f, Prec::App);
                self.buf.push(' ');
                self.print(a, Prec::Atom);
            }
            Term::Lam { name, ann, body } => {
                let chosen = self.choose_name(name, body);
                self.buf.push_str(&chosen);
                if let Some(a) = ann {
                    self.buf.push(':');
                    self.print(a, Prec::App);
                }
                self.buf.push_str(" => ");
                self.stack.push(chosen);
                self.print(body, Prec::Term);
                self.stack.pop();
            }
            Term::Pi { name, dom, cod } => {
                if uses_binder(cod, 0) {
                    let chosen = self.choose_name(name, cod);
                    self.buf.push_str(&chosen);
                    self.buf.push(':');
                    self.print(dom, Prec::App);
                    self.buf.push_str(" -> ");
                    self.stack.push(chosen);
                    self.print(cod, Prec::Term);
                    self.stack.pop();
                } else {
                    self.print(dom, Prec::App);
                    self.buf.push_str(" -> ");
                    // The binder stays on the stack so deeper indices line up.
                    self.stack.push(String::new());
                    self.print(cod, Prec::Term);
                    self.stack.pop();
                }
            }
        }
        if parens {
            self.buf.push(')');
        }
    }
}

/// Renders a term as concrete syntax with minimal parentheses.
pub fn print_term(t: &RTerm) -> String {
    let mut p = Printer { stack: Vec::new(), buf: String::new() };
    p.print(t, Prec::Term);
    p.buf
}

impl std::fmt::Display for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut p = Printer { stack: Vec::new(), buf: String::new() };
        p.print(self, Prec::Term);
        f.write_str(&p.buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Name;

    fn c(name: &str) -> RTerm {
        Term::cst(Name::global(name))
    }

    #[test]
    fn lambda_with_annotation() {
        let t = Term::lam("x", Some(c("nat")), Term::bound(0));
        assert_eq!(print_term(&t), "x:nat => x");
    }

    #[test]
    fn unused_product_prints_as_arrow() {
        let t = Term::pi("x", c("A"), c("B"));
        assert_eq!(print_term(&t), "A -> B");
    }

    #[test]
    fn dependent_product_keeps_its_binder() {
        let t = Term::pi("n", c("nat"), Term::app(c("vector"), Term::bound(0)));
        assert_eq!(print_term(&t), "n:nat -> vector n");
    }

    #[test]
    fn binder_renamed_apart_from_free_variable() {
        // λx. x_free prints with a primed binder
        let t = Term::lam("x", None, Term::local("x"));
        assert_eq!(print_term(&t), "x' => x");
    }

    #[test]
    fn binder_renamed_apart_from_outer_reference() {
        // λx. λx. #1 — inner binder shadows, so it is primed
        let t = Term::lam("x", None, Term::lam("x", None, Term::bound(1)));
        assert_eq!(print_term(&t), "x => x' => x");
    }

    #[test]
    fn application_parentheses() {
        let t = Term::app(
            Term::lam("x", None, Term::bound(0)),
            Term::app(c("S"), c("0")),
        );
        assert_eq!(print_term(&t), "(x => x) (S 0)");
    }

    #[test]
    fn arrow_domain_parenthesized() {
        let t = Term::arrow(Term::arrow(c("a"), c("b")), c("c"));
        assert_eq!(print_term(&t), "(a -> b) -> c");
    }

    #[test]
    fn indices_survive_arrow_form() {
        // n:nat -> vector n -> vector n: the unused middle binder must not
        // shift the reference to n.
        let t = Term::pi(
            "n",
            c("nat"),
            Term::arrow(
                Term::app(c("vector"), Term::bound(0)),
                Term::app(c("vector"), Term::bound(1)),
            ),
        );
        assert_eq!(print_term(&t), "n:nat -> vector n -> vector n");
    }
}
