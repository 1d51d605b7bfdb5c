//! The rewrite engine: higher-order pattern matching, beta steps, head
//! rewriting, normalization and the conversion test generated by beta plus
//! the signature's rules.
//!
//! Matching is done modulo beta: the matcher reduces candidate subterms to
//! weak head normal form exactly where the pattern is rigid, and captures
//! the arguments of pattern variables lazily. Rules are tried in declaration
//! order, first match wins. Every reduction entry point runs under a step
//! budget so non-terminating signatures produce a diagnosable error instead
//! of a hang.

use crate::error::{Error, ErrorCode, Result};
use crate::loc::Location;
use crate::pretty::print_term;
use crate::signature::Signature;
use crate::term::{alpha_equal, instantiate, qualify, substitute, RTerm, Name, Substitution, Term};
use std::cell::Cell;

/// One argument slot of a rewrite pattern.
#[derive(Clone, Debug)]
pub enum PatNode {
    /// Rigid constant application; matching compares head and arity after
    /// weak-head reduction.
    Const(Name, Vec<PatNode>),
    /// The `Type` sort as a rigid atom.
    Type,
    /// A bound variable of the pattern, possibly applied.
    Bound(usize, Vec<PatNode>),
    /// A rule variable applied to pairwise distinct bound variables
    /// (innermost index first is not required; order is application order).
    Var(String, Vec<usize>),
    /// A binder; matching requires a literal lambda (no eta).
    Lam(String, Box<PatNode>),
    /// A guard: matches anything, binds the fresh variable `name`, and
    /// records a conversion check against `term`. `term` is closed by
    /// lambda-wrapping over the pattern binders in scope at this position,
    /// and the matched subterm is captured the same way.
    Guard { name: String, term: RTerm },
}

impl PatNode {
    fn qualify(&self, module: &str) -> PatNode {
        match self {
            PatNode::Const(c, args) => PatNode::Const(
                c.under(module),
                args.iter().map(|a| a.qualify(module)).collect(),
            ),
            PatNode::Type => PatNode::Type,
            PatNode::Bound(i, args) => {
                PatNode::Bound(*i, args.iter().map(|a| a.qualify(module)).collect())
            }
            PatNode::Var(v, xs) => PatNode::Var(v.clone(), xs.clone()),
            PatNode::Lam(n, body) => PatNode::Lam(n.clone(), Box::new(body.qualify(module))),
            PatNode::Guard { name, term } => {
                PatNode::Guard { name: name.clone(), term: qualify(term, module) }
            }
        }
    }
}

/// A Miller pattern: a definable head applied to pattern arguments.
#[derive(Clone, Debug)]
pub struct Pattern {
    pub head: Name,
    pub args: Vec<PatNode>,
}

impl Pattern {
    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

/// A guard obligation attached to a rule: whenever the rule fires, the
/// subterm captured for `var` must be convertible with `term` under the
/// match substitution.
#[derive(Clone, Debug)]
pub struct GuardCheck {
    pub var: String,
    pub term: RTerm,
    /// Path of the guard within the left-hand side, for diagnostics.
    pub path: Vec<u8>,
}

/// A validated rewrite rule as stored in the signature.
///
/// The stored pattern is linear: source guards and repeated rule variables
/// have been replaced by fresh variables with guard obligations. `mgts` is
/// the most general typing substitution under which the rule was accepted,
/// retained for diagnostics.
#[derive(Clone, Debug)]
pub struct CheckedRule {
    pub head: Name,
    /// Inferred types of the rule variables, in first-occurrence order.
    pub delta: Vec<(String, RTerm)>,
    pub pattern: Pattern,
    pub rhs: RTerm,
    /// The left-hand side as typed: guards transparent, repeats kept.
    pub lhs_typed: RTerm,
    /// The left-hand side actually matched: guards as fresh variables.
    pub lhs_linear: RTerm,
    pub guards: Vec<GuardCheck>,
    pub mgts: Substitution,
    pub loc: Location,
}

impl CheckedRule {
    /// The unfolding rule of `def name := body`.
    pub fn definition(head: Name, body: RTerm, loc: Location) -> Self {
        let lhs = Term::cst(head.clone());
        CheckedRule {
            head: head.clone(),
            delta: Vec::new(),
            pattern: Pattern { head, args: Vec::new() },
            rhs: body,
            lhs_typed: lhs.clone(),
            lhs_linear: lhs,
            guards: Vec::new(),
            mgts: Substitution::new(),
            loc,
        }
    }

    pub fn arity(&self) -> usize {
        self.pattern.arity()
    }

    pub fn qualify(&self, module: &str) -> CheckedRule {
        CheckedRule {
            head: self.head.under(module),
            delta: self
                .delta
                .iter()
                .map(|(v, t)| (v.clone(), qualify(t, module)))
                .collect(),
            pattern: Pattern {
                head: self.pattern.head.under(module),
                args: self.pattern.args.iter().map(|a| a.qualify(module)).collect(),
            },
            rhs: qualify(&self.rhs, module),
            lhs_typed: qualify(&self.lhs_typed, module),
            lhs_linear: qualify(&self.lhs_linear, module),
            guards: self
                .guards
                .iter()
                .map(|g| GuardCheck {
                    var: g.var.clone(),
                    term: qualify(&g.term, module),
                    path: g.path.clone(),
                })
                .collect(),
            mgts: self
                .mgts
                .iter()
                .map(|(v, t)| (v.to_string(), qualify(t, module)))
                .collect(),
            loc: self.loc.clone(),
        }
    }
}

/// Resource limits for reduction queries.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    /// Maximum number of head steps per query (whnf, snf or conversion).
    pub max_steps: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_steps: 10_000_000 }
    }
}

/// A successful match: the substitution and the guard checks it still owes.
#[derive(Clone, Debug, Default)]
pub struct MatchResult {
    pub subst: Substitution,
    pub pending: Vec<PendingGuard>,
}

/// A guard conversion check recorded during matching.
#[derive(Clone, Debug)]
pub struct PendingGuard {
    pub var: String,
    /// The rule's guard term (still mentioning rule variables).
    pub term: RTerm,
    /// What the guard position actually matched, lambda-wrapped.
    pub found: RTerm,
}

/// Reduction engine over an immutable signature. All operations are pure;
/// the engine only carries limits and instrumentation counters.
pub struct Engine<'s> {
    sig: &'s Signature,
    limits: Limits,
    conv_queries: Cell<u64>,
}

impl<'s> Engine<'s> {
    pub fn new(sig: &'s Signature) -> Self {
        Engine::with_limits(sig, Limits::default())
    }

    pub fn with_limits(sig: &'s Signature, limits: Limits) -> Self {
        Engine { sig, limits, conv_queries: Cell::new(0) }
    }

    pub fn sig(&self) -> &'s Signature {
        self.sig
    }

    /// How many conversion queries have been asked of this engine; lets
    /// tests verify that typing consults conversion here and nowhere else.
    pub fn conv_query_count(&self) -> u64 {
        self.conv_queries.get()
    }

    fn query(&self) -> Query<'s> {
        Query { sig: self.sig, remaining: self.limits.max_steps }
    }

    /// Weak head normal form: no beta or rule redex remains in head position.
    pub fn whnf(&self, t: &RTerm) -> Result<RTerm> {
        let mut q = self.query();
        let (h, args) = q.whnf_spine(t)?;
        Ok(Term::apply(h, args))
    }

    /// Strong normal form: weak head normalization applied recursively.
    pub fn snf(&self, t: &RTerm) -> Result<RTerm> {
        self.query().snf(t)
    }

    /// One head step, if any: beta contraction or the first matching rule.
    pub fn head_step(&self, t: &RTerm) -> Result<Option<RTerm>> {
        let mut q = self.query();
        let (head, mut args) = t.spine();
        Ok(q.head_step_spine(&head, &mut args)?.map(|h| Term::apply(h, args)))
    }

    /// The conversion test for well-typed terms. Decides the congruence
    /// whenever the rewrite system together with beta is confluent and
    /// terminating.
    pub fn convertible(&self, t: &RTerm, u: &RTerm) -> Result<bool> {
        self.conv_queries.set(self.conv_queries.get() + 1);
        self.query().conv(t, u)
    }

    /// Matches `rule` against the spine of `term` without running the guard
    /// checks; returns the unique Miller substitution when one exists.
    pub fn match_term(&self, rule: &CheckedRule, term: &RTerm) -> Result<Option<MatchResult>> {
        let mut q = self.query();
        let (head, args) = q.whnf_spine(term)?;
        match &*head {
            Term::Const(c) if *c == rule.head && args.len() >= rule.arity() => {
                q.match_args(rule, &args[..rule.arity()])
            }
            _ => Ok(None),
        }
    }

    /// All one-step reducts of `t`, anywhere in the term: beta contractions
    /// and rule rewrites, closed by context. Rule instances whose guards
    /// fail are not reducts and are skipped.
    pub fn reducts(&self, t: &RTerm) -> Result<Vec<RTerm>> {
        let mut q = self.query();
        q.reducts(t)
    }
}

/// One reduction query with its own step budget.
struct Query<'s> {
    sig: &'s Signature,
    remaining: u64,
}

impl<'s> Query<'s> {
    fn tick(&mut self) -> Result<()> {
        if self.remaining == 0 {
            return Err(Error::new(
                ErrorCode::StepBudgetExceeded,
                "step budget exceeded; the rewrite system may not terminate \
                 (raise the budget with --budget)",
            ));
        }
        self.remaining -= 1;
        Ok(())
    }

    /// Tries one step at the head of a spine. On success the new head is
    /// returned and `args` is updated in place.
    fn head_step_spine(&mut self, head: &RTerm, args: &mut Vec<RTerm>) -> Result<Option<RTerm>> {
        match &**head {
            Term::Lam { body, .. } if !args.is_empty() => {
                self.tick()?;
                let arg = args.remove(0);
                let contracted = instantiate(body, &arg);
                let (h, mut pre) = contracted.spine();
                if !pre.is_empty() {
                    pre.append(args);
                    *args = pre;
                }
                Ok(Some(h))
            }
            Term::Const(c) => {
                let sig = self.sig;
                let entry = match sig.get(c) {
                    Some(e) => e,
                    None => return Ok(None),
                };
                for rule in &entry.rules {
                    let n = rule.arity();
                    if n > args.len() {
                        continue;
                    }
                    if let Some(m) = self.match_args(rule, &args[..n])? {
                        self.check_guards(rule, &m)?;
                        self.tick()?;
                        let rhs = substitute(&rule.rhs, &m.subst);
                        let rest = args.split_off(n);
                        let (h, mut pre) = rhs.spine();
                        pre.extend(rest);
                        *args = pre;
                        return Ok(Some(h));
                    }
                }
                Ok(None)
            }
            _ => Ok(None),
        }
    }

    fn whnf_spine(&mut self, t: &RTerm) -> Result<(RTerm, Vec<RTerm>)> {
        let (mut head, mut args) = t.spine();
        while let Some(h) = self.head_step_spine(&head, &mut args)? {
            head = h;
        }
        Ok((head, args))
    }

    fn snf(&mut self, t: &RTerm) -> Result<RTerm> {
        let (head, args) = self.whnf_spine(t)?;
        let head = match &*head {
            Term::Lam { name, ann, body } => {
                let ann = match ann {
                    Some(a) => Some(self.snf(a)?),
                    None => None,
                };
                Term::lam(name.clone(), ann, self.snf(body)?)
            }
            Term::Pi { name, dom, cod } => {
                Term::pi(name.clone(), self.snf(dom)?, self.snf(cod)?)
            }
            _ => head.clone(),
        };
        let args = args
            .iter()
            .map(|a| self.snf(a))
            .collect::<Result<Vec<_>>>()?;
        let rebuilt = Term::apply(head, args);
        // Normalizing the arguments can expose a head redex that lazy
        // matching missed (a captured argument whose free variables vanish
        // after reduction); one more pass keeps the result head-stable.
        let (h, mut a) = rebuilt.spine();
        match self.head_step_spine(&h, &mut a)? {
            Some(h2) => self.snf(&Term::apply(h2, a)),
            None => Ok(rebuilt),
        }
    }

    fn conv(&mut self, t: &RTerm, u: &RTerm) -> Result<bool> {
        if alpha_equal(t, u) {
            return Ok(true);
        }
        let (h1, a1) = self.whnf_spine(t)?;
        let (h2, a2) = self.whnf_spine(u)?;
        match (&*h1, &*h2) {
            // Annotations are ignored: only the bodies are compared.
            (Term::Lam { body: b1, .. }, Term::Lam { body: b2, .. })
                if a1.is_empty() && a2.is_empty() =>
            {
                self.conv(b1, b2)
            }
            (
                Term::Pi { dom: d1, cod: c1, .. },
                Term::Pi { dom: d2, cod: c2, .. },
            ) if a1.is_empty() && a2.is_empty() => {
                Ok(self.conv(d1, d2)? && self.conv(c1, c2)?)
            }
            (x, y) if Self::same_rigid_head(x, y) => {
                if a1.len() != a2.len() {
                    return Ok(false);
                }
                for (x, y) in a1.iter().zip(&a2) {
                    if !self.conv(x, y)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    fn same_rigid_head(a: &Term, b: &Term) -> bool {
        match (a, b) {
            (Term::Kind, Term::Kind) | (Term::Type, Term::Type) => true,
            (Term::Const(x), Term::Const(y)) => x == y,
            (Term::Local(x), Term::Local(y)) => x == y,
            (Term::Bound(x), Term::Bound(y)) => x == y,
            _ => false,
        }
    }

    fn match_args(&mut self, rule: &CheckedRule, args: &[RTerm]) -> Result<Option<MatchResult>> {
        debug_assert_eq!(rule.arity(), args.len());
        let mut m = MatchResult::default();
        for (p, a) in rule.pattern.args.iter().zip(args) {
            if !self.match_node(p, a, 0, &mut m)? {
                return Ok(None);
            }
        }
        Ok(Some(m))
    }

    fn match_node(
        &mut self,
        p: &PatNode,
        t: &RTerm,
        depth: usize,
        m: &mut MatchResult,
    ) -> Result<bool> {
        match p {
            PatNode::Var(v, xs) => match capture(t, depth, xs) {
                Some(img) => {
                    m.subst.bind(v.clone(), img);
                    Ok(true)
                }
                None => Ok(false),
            },
            PatNode::Guard { name, term } => {
                let found = wrap_lams(t, depth);
                m.subst.bind(name.clone(), found.clone());
                m.pending.push(PendingGuard { var: name.clone(), term: term.clone(), found });
                Ok(true)
            }
            PatNode::Const(c, ps) => {
                let (h, args) = self.whnf_spine(t)?;
                match &*h {
                    Term::Const(c2) if c2 == c && args.len() == ps.len() => {
                        for (p, a) in ps.iter().zip(&args) {
                            if !self.match_node(p, a, depth, m)? {
                                return Ok(false);
                            }
                        }
                        Ok(true)
                    }
                    _ => Ok(false),
                }
            }
            PatNode::Type => {
                let (h, args) = self.whnf_spine(t)?;
                Ok(matches!(&*h, Term::Type) && args.is_empty())
            }
            PatNode::Bound(i, ps) => {
                let (h, args) = self.whnf_spine(t)?;
                match &*h {
                    Term::Bound(j) if j == i && args.len() == ps.len() => {
                        for (p, a) in ps.iter().zip(&args) {
                            if !self.match_node(p, a, depth, m)? {
                                return Ok(false);
                            }
                        }
                        Ok(true)
                    }
                    _ => Ok(false),
                }
            }
            PatNode::Lam(_, body) => {
                let (h, args) = self.whnf_spine(t)?;
                match &*h {
                    Term::Lam { body: tb, .. } if args.is_empty() => {
                        self.match_node(body, tb, depth + 1, m)
                    }
                    // No eta: a pattern lambda requires a lambda.
                    _ => Ok(false),
                }
            }
        }
    }

    fn check_guards(&mut self, rule: &CheckedRule, m: &MatchResult) -> Result<()> {
        for g in &m.pending {
            let expected = substitute(&g.term, &m.subst);
            if !self.conv(&g.found, &expected)? {
                return Err(Error::new(
                    ErrorCode::GuardViolation,
                    format!(
                        "guard violated on a rule for `{}`: `{}` is not convertible with `{}`",
                        rule.head,
                        print_term(&strip_lams(&g.found)),
                        print_term(&strip_lams(&expected)),
                    ),
                )
                .at(rule.loc.clone()));
            }
        }
        Ok(())
    }

    fn reducts(&mut self, t: &RTerm) -> Result<Vec<RTerm>> {
        let mut out: Vec<RTerm> = Vec::new();
        let push = |out: &mut Vec<RTerm>, r: RTerm| {
            if !out.iter().any(|x| alpha_equal(x, &r)) {
                out.push(r);
            }
        };
        // Redexes whose head is this very node.
        if let Term::App(f, a) = &**t {
            if let Term::Lam { body, .. } = &**f {
                push(&mut out, instantiate(body, a));
            }
        }
        let (head, args) = t.spine();
        if let Term::Const(c) = &*head {
            if let Some(entry) = self.sig.get(c) {
                for rule in &entry.rules {
                    if rule.arity() != args.len() {
                        continue;
                    }
                    match self.try_rule(rule, &args) {
                        Ok(Some(r)) => push(&mut out, r),
                        Ok(None) => {}
                        // A failed guard is not a rewrite; skip it.
                        Err(e) if e.code == ErrorCode::GuardViolation => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        // Reducts of the children, closed by context.
        match &**t {
            Term::App(f, a) => {
                for r in self.reducts(f)? {
                    push(&mut out, Term::app(r, a.clone()));
                }
                for r in self.reducts(a)? {
                    push(&mut out, Term::app(f.clone(), r));
                }
            }
            Term::Lam { name, ann, body } => {
                if let Some(an) = ann {
                    for r in self.reducts(an)? {
                        push(&mut out, Term::lam(name.clone(), Some(r), body.clone()));
                    }
                }
                for r in self.reducts(body)? {
                    push(&mut out, Term::lam(name.clone(), ann.clone(), r));
                }
            }
            Term::Pi { name, dom, cod } => {
                for r in self.reducts(dom)? {
                    push(&mut out, Term::pi(name.clone(), r, cod.clone()));
                }
                for r in self.reducts(cod)? {
                    push(&mut out, Term::pi(name.clone(), dom.clone(), r));
                }
            }
            _ => {}
        }
        Ok(out)
    }

    fn try_rule(&mut self, rule: &CheckedRule, args: &[RTerm]) -> Result<Option<RTerm>> {
        match self.match_args(rule, args)? {
            Some(m) => {
                self.check_guards(rule, &m)?;
                Ok(Some(substitute(&rule.rhs, &m.subst)))
            }
            None => Ok(None),
        }
    }
}

/// Wraps `depth` anonymous lambdas around `t` verbatim; indices below
/// `depth` now point at the wrappers, ambient indices are unchanged because
/// the wrapped term is used at the root of the match.
fn wrap_lams(t: &RTerm, depth: usize) -> RTerm {
    let mut out = t.clone();
    for _ in 0..depth {
        out = Term::lam("", None, out);
    }
    out
}

/// Peels the lambda wrappers off a guard image, for error messages.
fn strip_lams(t: &RTerm) -> RTerm {
    let mut out = t.clone();
    while let Term::Lam { ann: None, body, name } = &*out {
        if !name.is_empty() {
            break;
        }
        let b = body.clone();
        out = b;
    }
    out
}

/// Higher-order capture: matching `v x_{i1} .. x_{ik}` (the `xs` are de
/// Bruijn indices of pattern binders at `depth`) against `u` produces
/// `v := \y1..yk. u'` where each `x_{ij}` becomes `yj` and ambient indices
/// are rebased to the match root. Fails when `u` mentions a pattern binder
/// not among the `xs` — the substitution would escape its scope.
fn capture(u: &RTerm, depth: usize, xs: &[usize]) -> Option<RTerm> {
    fn go(u: &RTerm, dd: usize, depth: usize, xs: &[usize]) -> Option<RTerm> {
        let a = xs.len();
        match &**u {
            Term::Bound(k) => {
                if *k < dd {
                    return Some(u.clone());
                }
                let o = k - dd;
                if o < depth {
                    match xs.iter().position(|x| *x == o) {
                        Some(j) => Some(Term::bound(dd + (a - 1 - j))),
                        None => None,
                    }
                } else {
                    Some(Term::bound(dd + (o - depth) + a))
                }
            }
            Term::App(f, x) => Some(Term::app(
                go(f, dd, depth, xs)?,
                go(x, dd, depth, xs)?,
            )),
            Term::Lam { name, ann, body } => {
                let ann = match ann {
                    Some(t) => Some(go(t, dd, depth, xs)?),
                    None => None,
                };
                Some(Term::lam(name.clone(), ann, go(body, dd + 1, depth, xs)?))
            }
            Term::Pi { name, dom, cod } => Some(Term::pi(
                name.clone(),
                go(dom, dd, depth, xs)?,
                go(cod, dd + 1, depth, xs)?,
            )),
            _ => Some(u.clone()),
        }
    }
    let body = go(u, 0, depth, xs)?;
    let mut out = body;
    for _ in 0..xs.len() {
        out = Term::lam("", None, out);
    }
    Some(out)
}

// Convenience entry points with default limits.

pub fn whnf(sig: &Signature, t: &RTerm) -> Result<RTerm> {
    Engine::new(sig).whnf(t)
}

pub fn snf(sig: &Signature, t: &RTerm) -> Result<RTerm> {
    Engine::new(sig).snf(t)
}

pub fn convertible(sig: &Signature, t: &RTerm, u: &RTerm) -> Result<bool> {
    Engine::new(sig).convertible(t, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::{Sort, SymbolKind};

    fn n(s: &str) -> Name {
        Name::global(s)
    }

    fn c(s: &str) -> RTerm {
        Term::cst(n(s))
    }

    fn loc() -> Location {
        Location::builtin()
    }

    /// nat, 0, S, plus with its two rules, built by hand.
    fn plus_sig() -> Signature {
        let mut sig = Signature::new();
        let nat = c("nat");
        sig.declare(n("nat"), Term::sort_type(), SymbolKind::Static, Sort::Kind, loc())
            .unwrap();
        sig.declare(n("0"), nat.clone(), SymbolKind::Static, Sort::Type, loc())
            .unwrap();
        sig.declare(
            n("S"),
            Term::arrow(nat.clone(), nat.clone()),
            SymbolKind::Static,
            Sort::Type,
            loc(),
        )
        .unwrap();
        sig.declare(
            n("plus"),
            Term::arrow(nat.clone(), Term::arrow(nat.clone(), nat.clone())),
            SymbolKind::Definable,
            Sort::Type,
            loc(),
        )
        .unwrap();
        // [y] plus 0 y --> y
        let r1 = CheckedRule {
            head: n("plus"),
            delta: vec![("y".into(), nat.clone())],
            pattern: Pattern {
                head: n("plus"),
                args: vec![PatNode::Const(n("0"), vec![]), PatNode::Var("y".into(), vec![])],
            },
            rhs: Term::local("y"),
            lhs_typed: Term::apply(c("plus"), [c("0"), Term::local("y")]),
            lhs_linear: Term::apply(c("plus"), [c("0"), Term::local("y")]),
            guards: vec![],
            mgts: Substitution::new(),
            loc: loc(),
        };
        // [x, y] plus (S x) y --> S (plus x y)
        let r2 = CheckedRule {
            head: n("plus"),
            delta: vec![("x".into(), nat.clone()), ("y".into(), nat)],
            pattern: Pattern {
                head: n("plus"),
                args: vec![
                    PatNode::Const(n("S"), vec![PatNode::Var("x".into(), vec![])]),
                    PatNode::Var("y".into(), vec![]),
                ],
            },
            rhs: Term::app(
                c("S"),
                Term::apply(c("plus"), [Term::local("x"), Term::local("y")]),
            ),
            lhs_typed: Term::apply(
                c("plus"),
                [Term::app(c("S"), Term::local("x")), Term::local("y")],
            ),
            lhs_linear: Term::apply(
                c("plus"),
                [Term::app(c("S"), Term::local("x")), Term::local("y")],
            ),
            guards: vec![],
            mgts: Substitution::new(),
            loc: loc(),
        };
        sig.add_rule_block(vec![r1]).unwrap();
        sig.add_rule_block(vec![r2]).unwrap();
        sig
    }

    fn num(k: usize) -> RTerm {
        (0..k).fold(c("0"), |t, _| Term::app(c("S"), t))
    }

    #[test]
    fn head_step_applies_the_first_rule() {
        let sig = plus_sig();
        let eng = Engine::new(&sig);
        let t = Term::apply(c("plus"), [c("0"), Term::local("v")]);
        let stepped = eng.head_step(&t).unwrap().unwrap();
        assert_eq!(stepped, Term::local("v"));
    }

    #[test]
    fn rigid_clash_does_not_match() {
        let sig = plus_sig();
        let eng = Engine::new(&sig);
        // plus (S 0) 0 does not match plus 0 n, but matches the S rule.
        let t = Term::apply(c("plus"), [num(1), c("0")]);
        let stepped = eng.head_step(&t).unwrap().unwrap();
        assert_eq!(
            stepped,
            Term::app(c("S"), Term::apply(c("plus"), [c("0"), c("0")]))
        );
    }

    #[test]
    fn snf_computes_addition() {
        let sig = plus_sig();
        let eng = Engine::new(&sig);
        let t = Term::apply(c("plus"), [num(2), num(2)]);
        assert_eq!(eng.snf(&t).unwrap(), num(4));
    }

    #[test]
    fn whnf_stops_under_rigid_heads() {
        let sig = plus_sig();
        let eng = Engine::new(&sig);
        let t = Term::app(c("S"), Term::apply(c("plus"), [c("0"), c("0")]));
        assert_eq!(eng.whnf(&t).unwrap(), t);
    }

    #[test]
    fn whnf_is_idempotent() {
        let sig = plus_sig();
        let eng = Engine::new(&sig);
        for t in [
            Term::apply(c("plus"), [num(2), num(1)]),
            Term::app(Term::lam("x", None, Term::bound(0)), num(1)),
            Term::lam("x", None, Term::apply(c("plus"), [c("0"), Term::bound(0)])),
        ] {
            let w = eng.whnf(&t).unwrap();
            assert_eq!(eng.whnf(&w).unwrap(), w);
        }
    }

    #[test]
    fn beta_contraction_at_head() {
        let sig = Signature::new();
        let eng = Engine::new(&sig);
        let id = Term::lam("x", None, Term::bound(0));
        let t = Term::app(id, c_free());
        assert_eq!(eng.whnf(&t).unwrap(), c_free());
    }

    fn c_free() -> RTerm {
        Term::local("free")
    }

    #[test]
    fn budget_exceeded_reports_instead_of_hanging() {
        // loop --> loop
        let mut sig = Signature::new();
        sig.declare(n("A"), Term::sort_type(), SymbolKind::Static, Sort::Kind, loc())
            .unwrap();
        sig.declare(n("loop"), c("A"), SymbolKind::Definable, Sort::Type, loc())
            .unwrap();
        let rule = CheckedRule {
            head: n("loop"),
            delta: vec![],
            pattern: Pattern { head: n("loop"), args: vec![] },
            rhs: c("loop"),
            lhs_typed: c("loop"),
            lhs_linear: c("loop"),
            guards: vec![],
            mgts: Substitution::new(),
            loc: loc(),
        };
        sig.add_rule_block(vec![rule]).unwrap();
        let eng = Engine::with_limits(&sig, Limits { max_steps: 100 });
        let e = eng.whnf(&c("loop")).unwrap_err();
        assert_eq!(e.code, ErrorCode::StepBudgetExceeded);
    }

    /// The higher-order capture of the derivative rule: matching
    /// `D (\x. sin (f x))` against `D (\x. sin x)` must yield `f := \y. y`.
    #[test]
    fn miller_capture_builds_the_identity() {
        let mut sig = Signature::new();
        sig.declare(n("real"), Term::sort_type(), SymbolKind::Static, Sort::Kind, loc())
            .unwrap();
        let rr = Term::arrow(c("real"), c("real"));
        sig.declare(n("sin"), rr.clone(), SymbolKind::Static, Sort::Type, loc())
            .unwrap();
        sig.declare(n("D"), Term::arrow(rr.clone(), rr.clone()), SymbolKind::Definable, Sort::Type, loc())
            .unwrap();
        let rule = CheckedRule {
            head: n("D"),
            delta: vec![("f".into(), rr)],
            pattern: Pattern {
                head: n("D"),
                args: vec![PatNode::Lam(
                    "x".into(),
                    Box::new(PatNode::Const(n("sin"), vec![PatNode::Var("f".into(), vec![0])])),
                )],
            },
            rhs: c("0"),
            lhs_typed: c("D"),
            lhs_linear: c("D"),
            guards: vec![],
            mgts: Substitution::new(),
            loc: loc(),
        };
        let eng = Engine::new(&sig);
        let t = Term::app(
            c("D"),
            Term::lam("x", None, Term::app(c("sin"), Term::bound(0))),
        );
        let m = eng.match_term(&rule, &t).unwrap().unwrap();
        let f = m.subst.get("f").unwrap();
        assert!(alpha_equal(f, &Term::lam("y", None, Term::bound(0))));

        // D (\x. sin (sin x)) gives f := \y. sin y.
        let t2 = Term::app(
            c("D"),
            Term::lam(
                "x",
                None,
                Term::app(c("sin"), Term::app(c("sin"), Term::bound(0))),
            ),
        );
        let m2 = eng.match_term(&rule, &t2).unwrap().unwrap();
        assert!(alpha_equal(
            m2.subst.get("f").unwrap(),
            &Term::lam("y", None, Term::app(c("sin"), Term::bound(0)))
        ));

        // D (\x. sin c) for a constant body: f := \y. c (y unused).
        let t3 = Term::app(c("D"), Term::lam("x", None, Term::app(c("sin"), c("real"))));
        let m3 = eng.match_term(&rule, &t3).unwrap().unwrap();
        assert!(alpha_equal(
            m3.subst.get("f").unwrap(),
            &Term::lam("y", None, c("real"))
        ));
    }

    #[test]
    fn capture_rejects_escaping_binders() {
        // Matching f (applied to nothing) under one binder against a body
        // that uses the binder must fail.
        assert!(capture(&Term::bound(0), 1, &[]).is_none());
        // Applied to that binder it succeeds.
        assert!(capture(&Term::bound(0), 1, &[0]).is_some());
    }

    #[test]
    fn guard_violation_is_an_error_not_a_skip() {
        // f with rule [x] f x {x} --> x, fired on f 0 (S 0).
        let mut sig = plus_sig();
        sig.declare(
            n("f"),
            Term::arrow(c("nat"), Term::arrow(c("nat"), c("nat"))),
            SymbolKind::Definable,
            Sort::Type,
            loc(),
        )
        .unwrap();
        let rule = CheckedRule {
            head: n("f"),
            delta: vec![("x".into(), c("nat"))],
            pattern: Pattern {
                head: n("f"),
                args: vec![
                    PatNode::Var("x".into(), vec![]),
                    PatNode::Guard { name: "x1".into(), term: Term::local("x") },
                ],
            },
            rhs: Term::local("x"),
            lhs_typed: Term::apply(c("f"), [Term::local("x"), Term::local("x")]),
            lhs_linear: Term::apply(c("f"), [Term::local("x"), Term::local("x1")]),
            guards: vec![GuardCheck { var: "x1".into(), term: Term::local("x"), path: vec![1] }],
            mgts: Substitution::new(),
            loc: loc(),
        };
        sig.add_rule_block(vec![rule]).unwrap();
        let eng = Engine::new(&sig);
        // Matching instance: f 0 0 fires.
        let ok = Term::apply(c("f"), [c("0"), c("0")]);
        assert_eq!(eng.whnf(&ok).unwrap(), c("0"));
        // Mismatch: f 0 (S 0) raises a guard violation.
        let bad = Term::apply(c("f"), [c("0"), num(1)]);
        let e = eng.whnf(&bad).unwrap_err();
        assert_eq!(e.code, ErrorCode::GuardViolation);
    }

    #[test]
    fn reducts_enumerates_all_positions() {
        let sig = plus_sig();
        let eng = Engine::new(&sig);
        // S (plus 0 0) has exactly one reduct: S 0.
        let t = Term::app(c("S"), Term::apply(c("plus"), [c("0"), c("0")]));
        let rs = eng.reducts(&t).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0], Term::app(c("S"), c("0")));
        // plus (plus 0 0) (plus 0 0) has the inner reducts plus the S-rule
        // match that weak-head-normalizes the first argument on the fly.
        let inner = Term::apply(c("plus"), [c("0"), c("0")]);
        let t2 = Term::apply(c("plus"), [inner.clone(), inner]);
        let rs2 = eng.reducts(&t2).unwrap();
        assert!(rs2.len() >= 2);
    }
}
