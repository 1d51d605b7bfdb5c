//! Terms of the lambda-Pi-calculus: sorts, constants, variables, binders.
//!
//! Bound variables are de Bruijn indices, so alpha-equivalence is plain
//! structural equality (binder display names are kept for printing only and
//! ignored by `PartialEq`). Free variables — entries of a typing context or
//! the variables of a rewrite rule — are named `Local`s. A term never
//! captures a `Local`, which keeps substitution mechanical.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// Reference-counted term; terms are immutable and freely shared.
pub type RTerm = Arc<Term>;

/// A symbol name, optionally qualified by the module it was imported from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name {
    qualifier: Option<Arc<str>>,
    id: Arc<str>,
}

impl Name {
    pub fn global(id: impl Into<Arc<str>>) -> Self {
        Name { qualifier: None, id: id.into() }
    }

    pub fn qualified(module: impl Into<Arc<str>>, id: impl Into<Arc<str>>) -> Self {
        Name { qualifier: Some(module.into()), id: id.into() }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn qualifier(&self) -> Option<&str> {
        self.qualifier.as_deref()
    }

    /// The same name, requalified under `module` if it has no qualifier yet.
    pub fn under(&self, module: &str) -> Name {
        match self.qualifier {
            Some(_) => self.clone(),
            None => Name::qualified(module, self.id.clone()),
        }
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.qualifier {
            Some(q) => write!(f, "{}.{}", q, self.id),
            None => write!(f, "{}", self.id),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Term {
    /// The sort of `Type`; never written in source, only inferred.
    Kind,
    /// The sort of types.
    Type,
    /// A constant of the global context.
    Const(Name),
    /// A named free variable: typing-context entry or rewrite-rule variable.
    Local(String),
    /// A bound variable as a de Bruijn index.
    Bound(usize),
    App(RTerm, RTerm),
    Lam { name: String, ann: Option<RTerm>, body: RTerm },
    Pi { name: String, dom: RTerm, cod: RTerm },
}

impl PartialEq for Term {
    /// Alpha-equivalence: display names are ignored, everything else is
    /// structural. Lambda annotations count: `None` equals only `None`.
    fn eq(&self, other: &Term) -> bool {
        use Term::*;
        match (self, other) {
            (Kind, Kind) | (Type, Type) => true,
            (Const(a), Const(b)) => a == b,
            (Local(a), Local(b)) => a == b,
            (Bound(a), Bound(b)) => a == b,
            (App(f, a), App(g, b)) => f == g && a == b,
            (Lam { ann: a1, body: b1, .. }, Lam { ann: a2, body: b2, .. }) => {
                a1 == a2 && b1 == b2
            }
            (Pi { dom: d1, cod: c1, .. }, Pi { dom: d2, cod: c2, .. }) => d1 == d2 && c1 == c2,
            _ => false,
        }
    }
}

impl Eq for Term {}

/// True iff `t` and `u` are identical up to bound-variable renaming.
pub fn alpha_equal(t: &Term, u: &Term) -> bool {
    t == u
}

impl Term {
    pub fn app(f: RTerm, a: RTerm) -> RTerm {
        Arc::new(Term::App(f, a))
    }

    pub fn apply(f: RTerm, args: impl IntoIterator<Item = RTerm>) -> RTerm {
        args.into_iter().fold(f, Term::app)
    }

    pub fn lam(name: impl Into<String>, ann: Option<RTerm>, body: RTerm) -> RTerm {
        Arc::new(Term::Lam { name: name.into(), ann, body })
    }

    pub fn pi(name: impl Into<String>, dom: RTerm, cod: RTerm) -> RTerm {
        Arc::new(Term::Pi { name: name.into(), dom, cod })
    }

    /// Non-dependent product `a -> b` (a `Pi` whose variable is unused).
    pub fn arrow(dom: RTerm, cod: RTerm) -> RTerm {
        Term::pi("", dom, cod)
    }

    pub fn cst(name: Name) -> RTerm {
        Arc::new(Term::Const(name))
    }

    pub fn local(name: impl Into<String>) -> RTerm {
        Arc::new(Term::Local(name.into()))
    }

    pub fn bound(idx: usize) -> RTerm {
        Arc::new(Term::Bound(idx))
    }

    pub fn sort_type() -> RTerm {
        Arc::new(Term::Type)
    }

    pub fn sort_kind() -> RTerm {
        Arc::new(Term::Kind)
    }

    /// Splits an application spine: `f a b` gives `(f, [a, b])`.
    pub fn spine(self: &RTerm) -> (RTerm, Vec<RTerm>) {
        let mut head = self.clone();
        let mut args = Vec::new();
        while let Term::App(f, a) = &*head {
            args.push(a.clone());
            let f = f.clone();
            head = f;
        }
        args.reverse();
        (head, args)
    }

    /// Pre-order traversal of every subterm, including annotations.
    pub fn visit(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        match self {
            Term::App(g, a) => {
                g.visit(f);
                a.visit(f);
            }
            Term::Lam { ann, body, .. } => {
                if let Some(a) = ann {
                    a.visit(f);
                }
                body.visit(f);
            }
            Term::Pi { dom, cod, .. } => {
                dom.visit(f);
                cod.visit(f);
            }
            _ => {}
        }
    }

    /// Does the term contain a bound index `>= cutoff` pointing past its root?
    pub fn has_loose_bound(&self, cutoff: usize) -> bool {
        match self {
            Term::Bound(i) => *i >= cutoff,
            Term::App(f, a) => f.has_loose_bound(cutoff) || a.has_loose_bound(cutoff),
            Term::Lam { ann, body, .. } => {
                ann.as_ref().map_or(false, |a| a.has_loose_bound(cutoff))
                    || body.has_loose_bound(cutoff + 1)
            }
            Term::Pi { dom, cod, .. } => {
                dom.has_loose_bound(cutoff) || cod.has_loose_bound(cutoff + 1)
            }
            _ => false,
        }
    }

    /// The set of free `Local` names occurring anywhere in the term.
    pub fn free_locals(&self) -> BTreeSet<String> {
        let mut set = BTreeSet::new();
        self.visit(&mut |t| {
            if let Term::Local(v) = t {
                set.insert(v.clone());
            }
        });
        set
    }
}

/// Requalifies every unqualified constant under `module`; used when a
/// checked file is imported.
pub fn qualify(t: &RTerm, module: &str) -> RTerm {
    match &**t {
        Term::Const(n) if n.qualifier().is_none() => Term::cst(n.under(module)),
        Term::App(f, a) => Term::app(qualify(f, module), qualify(a, module)),
        Term::Lam { name, ann, body } => Term::lam(
            name.clone(),
            ann.as_ref().map(|a| qualify(a, module)),
            qualify(body, module),
        ),
        Term::Pi { name, dom, cod } => {
            Term::pi(name.clone(), qualify(dom, module), qualify(cod, module))
        }
        _ => t.clone(),
    }
}

/// Adds `inc` to every bound index `>= cutoff`.
pub fn shift(t: &RTerm, inc: usize, cutoff: usize) -> RTerm {
    if inc == 0 || !t.has_loose_bound(cutoff) {
        return t.clone();
    }
    match &**t {
        Term::Bound(i) if *i >= cutoff => Term::bound(i + inc),
        Term::Bound(_) => t.clone(),
        Term::App(f, a) => Term::app(shift(f, inc, cutoff), shift(a, inc, cutoff)),
        Term::Lam { name, ann, body } => Term::lam(
            name.clone(),
            ann.as_ref().map(|a| shift(a, inc, cutoff)),
            shift(body, inc, cutoff + 1),
        ),
        Term::Pi { name, dom, cod } => Term::pi(
            name.clone(),
            shift(dom, inc, cutoff),
            shift(cod, inc, cutoff + 1),
        ),
        _ => t.clone(),
    }
}

fn instantiate_at(t: &RTerm, depth: usize, arg: &RTerm) -> RTerm {
    if !t.has_loose_bound(depth) {
        return t.clone();
    }
    match &**t {
        Term::Bound(i) if *i == depth => shift(arg, depth, 0),
        Term::Bound(i) if *i > depth => Term::bound(i - 1),
        Term::Bound(_) => t.clone(),
        Term::App(f, a) => Term::app(instantiate_at(f, depth, arg), instantiate_at(a, depth, arg)),
        Term::Lam { name, ann, body } => Term::lam(
            name.clone(),
            ann.as_ref().map(|a| instantiate_at(a, depth, arg)),
            instantiate_at(body, depth + 1, arg),
        ),
        Term::Pi { name, dom, cod } => Term::pi(
            name.clone(),
            instantiate_at(dom, depth, arg),
            instantiate_at(cod, depth + 1, arg),
        ),
        _ => t.clone(),
    }
}

/// Replaces the outermost bound variable of a binder body by `arg`,
/// capture-avoidingly. This is beta-contraction when `body` comes from a
/// lambda and codomain instantiation when it comes from a product.
pub fn instantiate(body: &RTerm, arg: &RTerm) -> RTerm {
    instantiate_at(body, 0, arg)
}

/// Opens a binder body, turning its bound variable into the free `Local`
/// named `name`. The caller is responsible for picking a fresh name.
pub fn open(body: &RTerm, name: &str) -> RTerm {
    instantiate(body, &Term::local(name))
}

fn close_at(t: &RTerm, name: &str, depth: usize) -> RTerm {
    match &**t {
        Term::Local(v) if v == name => Term::bound(depth),
        Term::App(f, a) => Term::app(close_at(f, name, depth), close_at(a, name, depth)),
        Term::Lam { name: n, ann, body } => Term::lam(
            n.clone(),
            ann.as_ref().map(|a| close_at(a, name, depth)),
            close_at(body, name, depth + 1),
        ),
        Term::Pi { name: n, dom, cod } => Term::pi(
            n.clone(),
            close_at(dom, name, depth),
            close_at(cod, name, depth + 1),
        ),
        _ => t.clone(),
    }
}

/// Inverse of [`open`]: abstracts the free `Local` named `name` back into
/// the variable of a binder that is about to be wrapped around `t`.
pub fn close(t: &RTerm, name: &str) -> RTerm {
    close_at(t, name, 0)
}

/// A finite, simultaneous, capture-avoiding map from rule variables to terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<String, RTerm>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, t: RTerm) {
        self.map.insert(name.into(), t);
    }

    pub fn get(&self, name: &str) -> Option<&RTerm> {
        self.map.get(name)
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(|k| k.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &RTerm)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `outer.compose(inner)` behaves like applying `inner` first, then
    /// `outer`: `substitute(t, outer ∘ inner) = substitute(substitute(t, inner), outer)`.
    pub fn compose(&self, inner: &Substitution) -> Substitution {
        let mut map = BTreeMap::new();
        for (v, t) in &inner.map {
            map.insert(v.clone(), substitute(t, self));
        }
        for (v, t) in &self.map {
            map.entry(v.clone()).or_insert_with(|| t.clone());
        }
        Substitution { map }
    }
}

impl FromIterator<(String, RTerm)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (String, RTerm)>>(iter: I) -> Self {
        Substitution { map: iter.into_iter().collect() }
    }
}

fn substitute_at(t: &RTerm, s: &Substitution, depth: usize) -> RTerm {
    match &**t {
        Term::Local(v) => match s.get(v) {
            // The image may mention binders surrounding the whole
            // substitution site, so its loose indices move up by `depth`.
            Some(img) => shift(img, depth, 0),
            None => t.clone(),
        },
        Term::App(f, a) => Term::app(substitute_at(f, s, depth), substitute_at(a, s, depth)),
        Term::Lam { name, ann, body } => Term::lam(
            name.clone(),
            ann.as_ref().map(|a| substitute_at(a, s, depth)),
            substitute_at(body, s, depth + 1),
        ),
        Term::Pi { name, dom, cod } => Term::pi(
            name.clone(),
            substitute_at(dom, s, depth),
            substitute_at(cod, s, depth + 1),
        ),
        _ => t.clone(),
    }
}

/// Simultaneous capture-avoiding substitution of rule variables.
/// Variables outside the domain of `s` are untouched.
pub fn substitute(t: &RTerm, s: &Substitution) -> RTerm {
    if s.is_empty() {
        return t.clone();
    }
    substitute_at(t, s, 0)
}

/// An ordered typing context of named free variables.
///
/// Holds both the local part of the global context during checking and the
/// rule context during rule validation. Names are kept distinct by `push`.
#[derive(Clone, Debug, Default)]
pub struct TypingContext {
    entries: Vec<(String, RTerm)>,
}

impl TypingContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&self, name: &str) -> Option<&RTerm> {
        self.entries
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup(name).is_some()
    }

    /// Appends a binding; the name must not already be present.
    pub fn push(&mut self, name: impl Into<String>, ty: RTerm) {
        let name = name.into();
        debug_assert!(!self.contains(&name), "shadowed context entry {name}");
        self.entries.push((name, ty));
    }

    pub fn pop(&mut self) {
        self.entries.pop();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &RTerm)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    /// A variant of `base` not yet used in this context: `x`, then `x'`,
    /// `x''`, and so on. Deterministic by construction.
    pub fn fresh(&self, base: &str) -> String {
        let base = if base.is_empty() || base == "_" { "x" } else { base };
        let mut candidate = base.to_string();
        while self.contains(&candidate) {
            candidate.push('\'');
        }
        candidate
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(name: &str) -> RTerm {
        Term::local(name)
    }

    fn c(name: &str) -> RTerm {
        Term::cst(Name::global(name))
    }

    #[test]
    fn empty_substitution_is_identity() {
        // λx:A. x
        let t = Term::lam("x", Some(c("A")), Term::bound(0));
        assert_eq!(substitute(&t, &Substitution::new()), t);
    }

    #[test]
    fn substitution_replaces_rule_variables() {
        // plus n 0 with n := S 0
        let t = Term::apply(c("plus"), [l("n"), c("0")]);
        let mut s = Substitution::new();
        s.bind("n", Term::app(c("S"), c("0")));
        let expected = Term::apply(c("plus"), [Term::app(c("S"), c("0")), c("0")]);
        assert_eq!(substitute(&t, &s), expected);
    }

    #[test]
    fn substitution_cannot_capture() {
        // (λx. y){y := x}: the free x stays free, regardless of the binder's
        // display name; printing renames the binder apart.
        let t = Term::lam("x", None, l("y"));
        let mut s = Substitution::new();
        s.bind("y", l("x"));
        let r = substitute(&t, &s);
        assert_eq!(r, Term::lam("whatever", None, l("x")));
        match &*r {
            Term::Lam { body, .. } => assert_eq!(**body, Term::Local("x".into())),
            _ => panic!("expected lambda"),
        }
    }

    #[test]
    fn substitution_image_is_shifted_under_binders() {
        // (λz. n){n := #0}: the image points at a binder outside the whole
        // term, so under λz it must become #1.
        let t = Term::lam("z", None, l("n"));
        let mut s = Substitution::new();
        s.bind("n", Term::bound(0));
        let r = substitute(&t, &s);
        assert_eq!(r, Term::lam("z", None, Term::bound(1)));
    }

    #[test]
    fn instantiate_replaces_the_binder() {
        // body of λx:nat. plus x 0 at S 0
        let body = Term::apply(c("plus"), [Term::bound(0), c("0")]);
        let arg = Term::app(c("S"), c("0"));
        let expected = Term::apply(c("plus"), [arg.clone(), c("0")]);
        assert_eq!(instantiate(&body, &arg), expected);
    }

    #[test]
    fn instantiate_vacuous_binder() {
        // body of λx:A. A at c
        assert_eq!(instantiate(&c("A"), &c("c")), c("A"));
    }

    #[test]
    fn instantiate_under_application() {
        // body of Πx:A. P x at c
        let body = Term::app(c("P"), Term::bound(0));
        assert_eq!(instantiate(&body, &c("c")), Term::app(c("P"), c("c")));
    }

    #[test]
    fn alpha_equality_ignores_display_names() {
        let t = Term::lam("x", Some(c("A")), Term::bound(0));
        let u = Term::lam("y", Some(c("A")), Term::bound(0));
        assert!(alpha_equal(&t, &u));
        // λx:A. x vs λx:A. A
        let v = Term::lam("x", Some(c("A")), c("A"));
        assert!(!alpha_equal(&t, &v));
    }

    #[test]
    fn missing_annotation_only_equals_missing_annotation() {
        let t = Term::lam("x", None, Term::bound(0));
        let u = Term::lam("x", Some(c("A")), Term::bound(0));
        assert!(!alpha_equal(&t, &u));
    }

    #[test]
    fn arrow_is_a_product_with_unused_binder() {
        // Πx:A. B with B not mentioning x equals A -> B
        let t = Term::pi("x", c("A"), c("B"));
        assert!(alpha_equal(&t, &Term::arrow(c("A"), c("B"))));
    }

    #[test]
    fn open_close_roundtrip() {
        let body = Term::app(c("P"), Term::bound(0));
        let opened = open(&body, "v");
        assert_eq!(opened, Term::app(c("P"), l("v")));
        assert_eq!(close(&opened, "v"), body);
    }

    /// Small deterministic pool of terms for property checks.
    fn pool() -> Vec<RTerm> {
        let mut out: Vec<RTerm> = vec![c("a"), c("f"), l("u"), l("v"), Term::sort_type()];
        let base = out.clone();
        for x in &base {
            for y in &base {
                out.push(Term::app(x.clone(), y.clone()));
            }
            out.push(Term::lam("x", None, Term::app(x.clone(), Term::bound(0))));
            out.push(Term::pi("x", x.clone(), Term::bound(0)));
        }
        out
    }

    #[test]
    fn composition_agrees_with_sequencing() {
        // disjoint domains: s2 = {u := t}, s1 = {v := t'}
        for t in pool() {
            for (i, img2) in pool().into_iter().enumerate() {
                if i % 3 != 0 {
                    continue;
                }
                let mut s2 = Substitution::new();
                s2.bind("u", img2.clone());
                let mut s1 = Substitution::new();
                s1.bind("v", c("w"));
                let seq = substitute(&substitute(&t, &s2), &s1);
                let composed = substitute(&t, &s1.compose(&s2));
                assert_eq!(seq, composed, "mismatch on {t:?}");
            }
        }
    }

    #[test]
    fn alpha_equal_is_an_equivalence() {
        let pool = pool();
        for t in &pool {
            assert!(alpha_equal(t, t));
        }
        for t in &pool {
            for u in &pool {
                assert_eq!(alpha_equal(t, u), alpha_equal(u, t));
                if alpha_equal(t, u) {
                    for v in &pool {
                        if alpha_equal(u, v) {
                            assert!(alpha_equal(t, v));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn substitution_preserves_kind_count() {
        fn kinds(t: &Term) -> usize {
            let mut n = 0;
            t.visit(&mut |s| {
                if matches!(s, Term::Kind) {
                    n += 1;
                }
            });
            n
        }
        let mut s = Substitution::new();
        s.bind("u", c("a"));
        s.bind("v", Term::app(c("f"), c("a")));
        for t in pool() {
            assert_eq!(kinds(&t), kinds(&substitute(&t, &s)));
        }
    }
}
