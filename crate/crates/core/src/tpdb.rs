//! Export of a checked signature's rewrite rules to the old TPDB textual
//! format (`(VAR ...)` / `(RULES ...)` sections), for external confluence
//! and termination tools.
//!
//! The encoding is applicative and lossy for binders: saturated constant
//! applications become first-order terms, other applications use a binary
//! `app`, lambdas become `lam(x, body)` with `x` declared as a variable,
//! non-dependent products become `arr` and dependent ones `pi`. Beta itself
//! is not expressible as a first-order rule and is omitted; the header
//! records the approximation. Guards are already gone: the exported rules
//! are the linearized ones, which is what reduction actually uses.

use crate::signature::Signature;
use crate::term::{Name, RTerm, Term};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

struct Export<'s> {
    sig: &'s Signature,
    used: BTreeSet<String>,
    symbols: BTreeMap<Name, String>,
    vars: BTreeMap<String, String>,
    var_order: Vec<String>,
    binders: usize,
}

fn mangle_raw(raw: &str) -> String {
    let s: String = raw
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    if s.is_empty() {
        "_".to_string()
    } else {
        s
    }
}

impl<'s> Export<'s> {
    fn claim(&mut self, base: String) -> String {
        if self.used.insert(base.clone()) {
            return base;
        }
        let mut k = 2usize;
        loop {
            let cand = format!("{base}_{k}");
            if self.used.insert(cand.clone()) {
                return cand;
            }
            k += 1;
        }
    }

    fn symbol(&mut self, n: &Name) -> String {
        if let Some(s) = self.symbols.get(n) {
            return s.clone();
        }
        let s = self.claim(mangle_raw(&n.to_string()));
        self.symbols.insert(n.clone(), s.clone());
        s
    }

    fn var(&mut self, v: &str) -> String {
        if let Some(s) = self.vars.get(v) {
            return s.clone();
        }
        let s = self.claim(mangle_raw(v));
        self.vars.insert(v.to_string(), s.clone());
        self.var_order.push(s.clone());
        s
    }

    fn fresh_binder(&mut self) -> String {
        let s = loop {
            let cand = format!("x{}", self.binders);
            self.binders += 1;
            if !self.used.contains(&cand) {
                break cand;
            }
        };
        self.used.insert(s.clone());
        self.var_order.push(s.clone());
        s
    }

    fn app_chain(&self, head: String, args: &[String]) -> String {
        args.iter()
            .fold(head, |acc, a| format!("app({acc},{a})"))
    }

    fn term(&mut self, t: &RTerm, stack: &mut Vec<String>) -> String {
        let (head, args) = t.spine();
        let args: Vec<String> = args.iter().map(|a| self.term(a, stack)).collect();
        match &*head {
            Term::Const(c) => {
                let s = self.symbol(c);
                if args.is_empty() {
                    s
                } else {
                    format!("{s}({})", args.join(","))
                }
            }
            Term::Local(v) => {
                let s = self.var(v);
                self.app_chain(s, &args)
            }
            Term::Bound(i) => {
                let s = stack[stack.len() - 1 - i].clone();
                self.app_chain(s, &args)
            }
            Term::Type => {
                let s = self.symbol(&Name::global("Type"));
                self.app_chain(s, &args)
            }
            Term::Kind => {
                let s = self.symbol(&Name::global("Kind"));
                self.app_chain(s, &args)
            }
            Term::Lam { body, .. } => {
                let x = self.fresh_binder();
                stack.push(x.clone());
                let b = self.term(body, stack);
                stack.pop();
                self.app_chain(format!("lam({x},{b})"), &args)
            }
            Term::App(..) => unreachable!("spine head"),
            Term::Pi { dom, cod, .. } => {
                let d = self.term(dom, stack);
                let node = if cod.has_loose_bound(0) {
                    let x = self.fresh_binder();
                    stack.push(x.clone());
                    let c = self.term(cod, stack);
                    stack.pop();
                    format!("pi({d},lam({x},{c}))")
                } else {
                    // Drop the unused binder but keep indices aligned.
                    stack.push(String::new());
                    let c = self.term(cod, stack);
                    stack.pop();
                    format!("arr({d},{c})")
                };
                self.app_chain(node, &args)
            }
        }
    }
}

/// Renders every rule of the signature, in declaration order, as an old
/// TPDB problem. Best-effort: the applicative encoding of binders is lossy
/// and beta is omitted, as the header comments state.
pub fn export(sig: &Signature) -> String {
    let mut ex = Export {
        sig,
        used: ["app", "lam", "arr", "pi"].iter().map(|s| s.to_string()).collect(),
        symbols: BTreeMap::new(),
        vars: BTreeMap::new(),
        var_order: Vec::new(),
        binders: 0,
    };
    let mut rules = Vec::new();
    for entry in ex.sig.entries() {
        for rule in &entry.rules {
            let mut stack = Vec::new();
            let lhs = ex.term(&rule.lhs_linear.clone(), &mut stack);
            let rhs = ex.term(&rule.rhs.clone(), &mut stack);
            rules.push(format!("{lhs} -> {rhs}"));
        }
    }
    let mut out = String::new();
    out.push_str("(COMMENT higher-order rules encoded applicatively:\n");
    out.push_str("  app/lam/arr/pi are reserved symbols, lambda binders are variables,\n");
    out.push_str("  beta-reduction is omitted because it has no first-order form)\n");
    let _ = writeln!(out, "(VAR {})", ex.var_order.join(" "));
    if rules.is_empty() {
        out.push_str("(RULES )\n");
    } else {
        out.push_str("(RULES\n");
        for r in &rules {
            out.push_str(r);
            out.push('\n');
        }
        out.push_str(")\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::check_str;

    #[test]
    fn empty_signature_exports_empty_sections() {
        let sig = Signature::new();
        let text = export(&sig);
        assert!(text.contains("(RULES )"));
    }

    #[test]
    fn addition_rules_export_as_first_order_terms() {
        let src = "nat : Type.\n0 : nat.\nS : nat -> nat.\ndef plus : nat -> nat -> nat.\n\
                   [n] plus 0 n --> n\n[n1, n2] plus (S n1) n2 --> S (plus n1 n2).";
        let (sig, outcome) = check_str(src, "<test>");
        assert!(outcome.ok(), "{:?}", outcome.error);
        let text = export(&sig);
        assert!(text.contains("plus(0,n) -> n"), "{text}");
        assert!(text.contains("plus(S(n1),n2) -> S(plus(n1,n2))"), "{text}");
    }

    #[test]
    fn arrows_encode_as_arr() {
        let src = "o : Type.\nimp : o -> o -> o.\ndef eps : o -> Type.\n\
                   [x, y] eps (imp x y) --> (eps x) -> (eps y).";
        let (sig, outcome) = check_str(src, "<test>");
        assert!(outcome.ok(), "{:?}", outcome.error);
        let text = export(&sig);
        assert!(text.contains("eps(imp(x,y)) -> arr(eps(x),eps(y))"), "{text}");
    }
}
