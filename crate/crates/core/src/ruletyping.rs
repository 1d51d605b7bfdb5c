//! Validation of rewrite rules.
//!
//! A rule is accepted when its left-hand side is a Miller pattern and there
//! is a most general typing substitution `tau` such that `tau l` and
//! `tau r` are well-typed with the same type. Types of the rule variables
//! are inferred by walking the pattern against the head's telescope;
//! positions that do not determine a type directly become constraints,
//! solved by first-order unification that decomposes only under injective
//! (static) heads. The stored rule is linear: source guards and repeated
//! variables are replaced by fresh variables carrying runtime conversion
//! checks.

use crate::error::{Error, ErrorCode, Result};
use crate::parser::RawRule;
use crate::pretty::print_term;
use crate::reduction::{CheckedRule, Engine, GuardCheck, PatNode, Pattern};
use crate::signature::SymbolKind;
use crate::term::{
    alpha_equal, instantiate, shift, substitute, Name, RTerm, Substitution, Term, TypingContext,
};
use crate::typing;
use std::collections::{BTreeMap, BTreeSet};

/// A convertibility requirement collected while inferring rule-variable
/// types, with the left-hand-side path it came from.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub left: RTerm,
    pub right: RTerm,
    /// True when the constraint arose inside a guarded subterm; such
    /// constraints may stay unsolved, the guard re-checks them at runtime.
    pub under_guard: bool,
    pub path: Vec<u8>,
}

/// Outcome of constraint solving.
#[derive(Clone, Debug)]
pub struct MgtsResult {
    /// The most general typing substitution over the rule variables.
    pub tau: Substitution,
    /// Constraints left to the runtime guard checks.
    pub residuals: Vec<Constraint>,
}

/// Pattern plus the linearization artifacts derived from it.
#[derive(Clone, Debug)]
pub struct ShapedPattern {
    pub head: Name,
    pub pattern: Pattern,
    pub guards: Vec<GuardCheck>,
    /// The left-hand side with every guard and repeated variable replaced
    /// by its fresh variable; this is what matching sees.
    pub lhs_linear: RTerm,
}

fn not_a_pattern(msg: String) -> Error {
    Error::new(ErrorCode::NotAPattern, msg)
}

/// Splits `t` into spine head and arguments, recording each argument's path
/// relative to `base` (0 descends into the function, 1 into the argument).
fn spine_with_paths(t: &RTerm, base: &[u8]) -> (RTerm, Vec<(RTerm, Vec<u8>)>) {
    let mut head = t.clone();
    let mut rev_args: Vec<(RTerm, Vec<u8>)> = Vec::new();
    let mut prefix = base.to_vec();
    while let Term::App(f, a) = &*head {
        let mut p = prefix.clone();
        p.push(1);
        rev_args.push((a.clone(), p));
        prefix.push(0);
        let f = f.clone();
        head = f;
    }
    rev_args.reverse();
    (head, rev_args)
}

struct Shaper<'a> {
    delta: &'a BTreeSet<String>,
    guard_paths: &'a [Vec<u8>],
    /// Rule variables already claimed by a match position.
    seen: BTreeSet<String>,
    used_names: BTreeSet<String>,
    guards: Vec<GuardCheck>,
}

impl<'a> Shaper<'a> {
    fn fresh(&mut self, base: &str) -> String {
        let mut i = 1usize;
        loop {
            let name = format!("{base}_{i}");
            if self.used_names.insert(name.clone()) {
                return name;
            }
            i += 1;
        }
    }

    /// Wraps `depth` lambdas around `t` verbatim; the guard capture uses the
    /// same convention on the matched side.
    fn close_over(t: &RTerm, depth: usize) -> RTerm {
        let mut out = t.clone();
        for _ in 0..depth {
            out = Term::lam("", None, out);
        }
        out
    }

    /// The linear stand-in for a guarded position: the fresh variable
    /// applied to every binder in scope, outermost first.
    fn guard_stub(name: &str, depth: usize) -> RTerm {
        Term::apply(Term::local(name), (0..depth).rev().map(Term::bound))
    }

    fn guard_node(&mut self, t: &RTerm, depth: usize, path: &[u8], base: &str) -> (PatNode, RTerm) {
        let name = self.fresh(base);
        let term = Self::close_over(t, depth);
        self.guards.push(GuardCheck { var: name.clone(), term: term.clone(), path: path.to_vec() });
        let node = PatNode::Guard { name: name.clone(), term };
        (node, Self::guard_stub(&name, depth))
    }

    fn node(&mut self, t: &RTerm, depth: usize, path: &[u8]) -> Result<(PatNode, RTerm)> {
        if self.guard_paths.iter().any(|p| p == path) {
            return Ok(self.guard_node(t, depth, path, "g"));
        }
        let (head, args) = spine_with_paths(t, path);
        match &*head {
            Term::Local(v) if self.delta.contains(v) => {
                let mut xs = Vec::new();
                for (a, _) in &args {
                    match &**a {
                        Term::Bound(i) if !xs.contains(i) => xs.push(*i),
                        Term::Bound(_) => {
                            return Err(not_a_pattern(format!(
                                "rule variable `{v}` is applied to the same bound \
                                 variable twice in `{}`",
                                print_term(t)
                            )))
                        }
                        _ => {
                            return Err(not_a_pattern(format!(
                                "rule variable `{v}` may only be applied to bound \
                                 variables, not to `{}`",
                                print_term(a)
                            )))
                        }
                    }
                }
                if self.seen.contains(v) {
                    // Non-left-linear: keep the first occurrence as the
                    // matching one, guard the repeats.
                    return Ok(self.guard_node(t, depth, path, v));
                }
                self.seen.insert(v.clone());
                Ok((PatNode::Var(v.clone(), xs), t.clone()))
            }
            Term::Local(v) => Err(not_a_pattern(format!(
                "free variable `{v}` in a rule left-hand side"
            ))),
            Term::Const(c) => {
                let mut nodes = Vec::new();
                let mut linear_args = Vec::new();
                for (a, p) in &args {
                    let (n, l) = self.node(a, depth, p)?;
                    nodes.push(n);
                    linear_args.push(l);
                }
                Ok((
                    PatNode::Const(c.clone(), nodes),
                    Term::apply(Term::cst(c.clone()), linear_args),
                ))
            }
            Term::Bound(i) => {
                let mut nodes = Vec::new();
                let mut linear_args = Vec::new();
                for (a, p) in &args {
                    let (n, l) = self.node(a, depth, p)?;
                    nodes.push(n);
                    linear_args.push(l);
                }
                Ok((
                    PatNode::Bound(*i, nodes),
                    Term::apply(Term::bound(*i), linear_args),
                ))
            }
            Term::Lam { name, ann, body } => {
                if !args.is_empty() {
                    return Err(not_a_pattern(format!(
                        "left-hand side is not beta-normal at `{}`",
                        print_term(t)
                    )));
                }
                let mut p = path.to_vec();
                p.push(1);
                let (n, l) = self.node(body, depth + 1, &p)?;
                Ok((
                    PatNode::Lam(name.clone(), Box::new(n)),
                    Term::lam(name.clone(), ann.clone(), l),
                ))
            }
            Term::Type => {
                if args.is_empty() {
                    Ok((PatNode::Type, Term::sort_type()))
                } else {
                    Err(not_a_pattern("the sort Type is never applied".into()))
                }
            }
            Term::Pi { .. } => Err(not_a_pattern(format!(
                "product in a pattern position: `{}`",
                print_term(t)
            ))),
            Term::Kind | Term::App(..) => unreachable!("spine head"),
        }
    }
}

/// Checks the Miller pattern conditions on a resolved left-hand side and
/// builds the linearized pattern. The head must be a declared definable
/// symbol outside the rule context.
pub fn check_pattern_shape(
    eng: &Engine,
    lhs: &RTerm,
    delta: &[String],
    guard_paths: &[Vec<u8>],
) -> Result<ShapedPattern> {
    let delta_set: BTreeSet<String> = delta.iter().cloned().collect();
    let (head, args) = spine_with_paths(lhs, &[]);
    let head_name = match &*head {
        Term::Const(c) => c.clone(),
        Term::Local(v) => {
            return Err(not_a_pattern(format!(
                "the head of a rule must be a symbol, not the rule variable `{v}`"
            )))
        }
        other => {
            return Err(not_a_pattern(format!(
                "the head of a rule must be a symbol, found `{other}`"
            )))
        }
    };
    match eng.sig().get(&head_name) {
        None => {
            return Err(Error::new(
                ErrorCode::UnknownHead,
                format!("rule rewrites undeclared symbol `{head_name}`"),
            ))
        }
        Some(e) if e.kind == SymbolKind::Static => {
            return Err(Error::new(
                ErrorCode::StaticHead,
                format!("static symbol `{head_name}` may not head a rewrite rule"),
            ))
        }
        Some(e) if e.is_definition => {
            return Err(Error::new(
                ErrorCode::RedefinedSymbol,
                format!("`{head_name}` was introduced by `:=` and may not take rules"),
            ))
        }
        Some(_) => {}
    }
    let mut shaper = Shaper {
        delta: &delta_set,
        guard_paths,
        seen: BTreeSet::new(),
        used_names: delta_set.clone(),
        guards: Vec::new(),
    };
    let mut nodes = Vec::new();
    let mut linear_args = Vec::new();
    for (a, p) in &args {
        let (n, l) = shaper.node(a, 0, p)?;
        nodes.push(n);
        linear_args.push(l);
    }
    Ok(ShapedPattern {
        head: head_name.clone(),
        pattern: Pattern { head: head_name.clone(), args: nodes },
        guards: shaper.guards,
        lhs_linear: Term::apply(Term::cst(head_name), linear_args),
    })
}

/// Rebases a term from under the pattern binders to a position where only
/// the binders listed in `xs` (as fresh wrappers) are in scope. Returns
/// `None` when the term mentions a pattern binder outside `xs`.
fn remap(u: &RTerm, dd: usize, depth: usize, xs: &[usize]) -> Option<RTerm> {
    let a = xs.len();
    match &**u {
        Term::Bound(k) => {
            if *k < dd {
                return Some(u.clone());
            }
            let o = k - dd;
            if o < depth {
                xs.iter()
                    .position(|x| *x == o)
                    .map(|j| Term::bound(dd + (a - 1 - j)))
            } else {
                Some(Term::bound(dd + (o - depth) + a))
            }
        }
        Term::App(f, x) => Some(Term::app(remap(f, dd, depth, xs)?, remap(x, dd, depth, xs)?)),
        Term::Lam { name, ann, body } => {
            let ann = match ann {
                Some(t) => Some(remap(t, dd, depth, xs)?),
                None => None,
            };
            Some(Term::lam(name.clone(), ann, remap(body, dd + 1, depth, xs)?))
        }
        Term::Pi { name, dom, cod } => Some(Term::pi(
            name.clone(),
            remap(dom, dd, depth, xs)?,
            remap(cod, dd + 1, depth, xs)?,
        )),
        _ => Some(u.clone()),
    }
}

struct DeltaInference<'e, 's> {
    eng: &'e Engine<'s>,
    delta_names: BTreeSet<String>,
    assigned: BTreeMap<String, RTerm>,
    order: Vec<String>,
    constraints: Vec<Constraint>,
    guard_paths: Vec<Vec<u8>>,
}

impl<'e, 's> DeltaInference<'e, 's> {
    fn constrain(&mut self, left: RTerm, right: RTerm, under_guard: bool, path: &[u8]) {
        if !alpha_equal(&left, &right) {
            self.constraints.push(Constraint { left, right, under_guard, path: path.to_vec() });
        }
    }

    /// The type of bound variable `idx` as seen from `depth` binders in.
    fn binder_type(binders: &[RTerm], depth: usize, idx: usize) -> RTerm {
        let pos = depth - 1 - idx;
        shift(&binders[pos], depth - pos, 0)
    }

    /// Runs `t`'s type against `expected`, assigning rule-variable types at
    /// their first occurrence and collecting constraints elsewhere.
    fn assign(
        &mut self,
        t: &RTerm,
        expected: &RTerm,
        binders: &mut Vec<RTerm>,
        path: &[u8],
        under_guard: bool,
    ) -> Result<()> {
        let under_guard = under_guard || self.guard_paths.iter().any(|p| p == path);
        let depth = binders.len();
        let (head, args) = spine_with_paths(t, path);
        match &*head {
            Term::Local(v) if self.delta_names.contains(v) => {
                if let Some(known) = self.assigned.get(v).cloned() {
                    // Later occurrence: walk the known type's telescope.
                    let mut tele = shift(&known, depth, 0);
                    for (a, p) in &args {
                        let w = self.eng.whnf(&tele)?;
                        match &*w {
                            Term::Pi { dom, cod, .. } => {
                                self.assign(a, dom, binders, p, under_guard)?;
                                tele = instantiate(cod, a);
                            }
                            _ => {
                                return Err(Error::new(
                                    ErrorCode::ArityOverflow,
                                    format!(
                                        "rule variable `{v}` is applied more times than \
                                         its type `{}` allows",
                                        print_term(&known)
                                    ),
                                ))
                            }
                        }
                    }
                    self.constrain(tele, expected.clone(), under_guard, path);
                    return Ok(());
                }
                // First occurrence: derive the variable's type.
                let mut xs = Vec::new();
                let mut plain = true;
                for (a, _) in &args {
                    match &**a {
                        Term::Bound(i) if !xs.contains(i) => xs.push(*i),
                        _ => plain = false,
                    }
                }
                if !plain {
                    return Err(Error::new(
                        ErrorCode::UntypableVariable,
                        format!(
                            "cannot infer a type for `{v}`: it is first used applied \
                             to non-variable arguments"
                        ),
                    ));
                }
                let ty = self
                    .pi_close(binders, depth, &xs, expected)
                    .ok_or_else(|| {
                        Error::new(
                            ErrorCode::UntypableVariable,
                            format!(
                                "the type of `{v}` at its first occurrence depends on a \
                                 bound variable it is not applied to"
                            ),
                        )
                    })?;
                self.assigned.insert(v.clone(), ty);
                self.order.push(v.clone());
                Ok(())
            }
            Term::Local(v) => Err(Error::new(
                ErrorCode::UnboundVariable,
                format!("unbound variable `{v}` in a rule left-hand side"),
            )),
            Term::Const(c) => {
                let mut tele = self.eng.sig().type_of(c).ok_or_else(|| {
                    Error::new(ErrorCode::UnknownIdentifier, format!("unknown symbol `{c}`"))
                })?;
                tele = shift(&tele, depth, 0);
                self.walk_telescope(&mut tele, c.to_string(), &args, binders, under_guard)?;
                self.constrain(tele, expected.clone(), under_guard, path);
                Ok(())
            }
            Term::Bound(i) => {
                let mut tele = Self::binder_type(binders, depth, *i);
                self.walk_telescope(&mut tele, format!("#{i}"), &args, binders, under_guard)?;
                self.constrain(tele, expected.clone(), under_guard, path);
                Ok(())
            }
            Term::Lam { ann, body, .. } => {
                if !args.is_empty() {
                    // Only reachable inside guards, which may be non-normal:
                    // reduce and retry.
                    let w = self.eng.whnf(t)?;
                    return self.assign(&w, expected, binders, path, under_guard);
                }
                let w = self.eng.whnf(expected)?;
                match &*w {
                    Term::Pi { dom, cod, .. } => {
                        if let Some(a) = ann {
                            let mut p = path.to_vec();
                            p.push(0);
                            self.constrain(a.clone(), dom.clone(), under_guard, &p);
                        }
                        binders.push(dom.clone());
                        let mut p = path.to_vec();
                        p.push(1);
                        let r = self.assign(body, cod, binders, &p, under_guard);
                        binders.pop();
                        r
                    }
                    _ => Err(Error::new(
                        ErrorCode::NotAProduct,
                        format!(
                            "a lambda in the left-hand side sits where `{}` is expected",
                            print_term(&w)
                        ),
                    )),
                }
            }
            Term::Pi { dom, cod, .. } => {
                let mut p = path.to_vec();
                p.push(0);
                self.assign(dom, &Term::sort_type(), binders, &p, under_guard)?;
                binders.push(dom.clone());
                let mut p = path.to_vec();
                p.push(1);
                let shifted = shift(expected, 1, 0);
                let r = self.assign(cod, &shifted, binders, &p, under_guard);
                binders.pop();
                r
            }
            Term::Type => {
                self.constrain(Term::sort_kind(), expected.clone(), under_guard, path);
                Ok(())
            }
            Term::Kind | Term::App(..) => unreachable!("spine head"),
        }
    }

    fn walk_telescope(
        &mut self,
        tele: &mut RTerm,
        what: String,
        args: &[(RTerm, Vec<u8>)],
        binders: &mut Vec<RTerm>,
        under_guard: bool,
    ) -> Result<()> {
        for (a, p) in args {
            let w = self.eng.whnf(tele)?;
            match &*w {
                Term::Pi { dom, cod, .. } => {
                    self.assign(a, dom, binders, p, under_guard)?;
                    *tele = instantiate(cod, a);
                }
                _ => {
                    return Err(Error::new(
                        ErrorCode::ArityOverflow,
                        format!(
                            "`{what}` is applied to more arguments than its type provides \
                             (no product left at `{}`)",
                            print_term(&w)
                        ),
                    ))
                }
            }
        }
        Ok(())
    }

    /// Builds `Π z1:T1 .. zk:Tk. E` for a variable applied to the bound
    /// variables `xs`, rebasing each type out of the pattern binders.
    fn pi_close(
        &self,
        binders: &[RTerm],
        depth: usize,
        xs: &[usize],
        expected: &RTerm,
    ) -> Option<RTerm> {
        let mut domains = Vec::new();
        for (j, &x) in xs.iter().enumerate() {
            let ty = Self::binder_type(binders, depth, x);
            domains.push(remap(&ty, 0, depth, &xs[..j])?);
        }
        let mut out = remap(expected, 0, depth, xs)?;
        for dom in domains.into_iter().rev() {
            out = Term::pi("", dom, out);
        }
        Some(out)
    }
}

/// Infers the types of the rule variables by traversing the left-hand side
/// against the head's telescope. Returns the context in first-occurrence
/// order together with the constraints that positions beyond the first
/// occurrence generated.
pub fn infer_delta_types(
    eng: &Engine,
    lhs: &RTerm,
    guard_paths: &[Vec<u8>],
    delta: &[String],
) -> Result<(Vec<(String, RTerm)>, Vec<Constraint>)> {
    let (head, args) = spine_with_paths(lhs, &[]);
    let head_name = match &*head {
        Term::Const(c) => c.clone(),
        _ => return Err(not_a_pattern("rule head must be a symbol".into())),
    };
    let mut cx = DeltaInference {
        eng,
        delta_names: delta.iter().cloned().collect(),
        assigned: BTreeMap::new(),
        order: Vec::new(),
        constraints: Vec::new(),
        guard_paths: guard_paths.to_vec(),
    };
    let mut tele = eng.sig().type_of(&head_name).ok_or_else(|| {
        Error::new(ErrorCode::UnknownHead, format!("unknown symbol `{head_name}`"))
    })?;
    let mut binders = Vec::new();
    cx.walk_telescope(&mut tele, head_name.to_string(), &args, &mut binders, false)?;
    let ctx = cx
        .order
        .iter()
        .map(|v| (v.clone(), cx.assigned[v].clone()))
        .collect();
    Ok((ctx, cx.constraints))
}

/// First-order unification modulo weak-head reduction. Decomposes
/// applications only under injective heads; constraints that would require
/// the injectivity of a definable symbol are rejected unless a guard covers
/// them.
pub fn solve_mgts(
    eng: &Engine,
    delta: &BTreeSet<String>,
    constraints: Vec<Constraint>,
) -> Result<MgtsResult> {
    let mut tau = Substitution::new();
    let mut residuals = Vec::new();
    let mut work: Vec<Constraint> = constraints;
    work.reverse();
    while let Some(c) = work.pop() {
        let l = substitute(&c.left, &tau);
        let r = substitute(&c.right, &tau);
        if alpha_equal(&l, &r) {
            continue;
        }
        let wl = eng.whnf(&l)?;
        let wr = eng.whnf(&r)?;
        if alpha_equal(&wl, &wr) {
            continue;
        }
        // Orientation: bind the left side when possible, so a constraint
        // `found ≡ expected` maps the found variable onto the expected one.
        let bindable = |t: &RTerm| match &**t {
            Term::Local(v) if delta.contains(v) => Some(v.clone()),
            _ => None,
        };
        let (var, image) = match (bindable(&wl), bindable(&wr)) {
            (Some(v), _) => (Some(v), wr.clone()),
            (None, Some(v)) => (Some(v), wl.clone()),
            (None, None) => (None, wl.clone()),
        };
        if let Some(v) = var {
            if image.free_locals().contains(&v) {
                return Err(Error::new(
                    ErrorCode::OccursCheck,
                    format!("`{v}` occurs in `{}`", print_term(&image)),
                ));
            }
            if image.has_loose_bound(0) {
                // The image mentions a pattern binder; binding would escape
                // the rule context.
                push_residual(&mut residuals, c, eng, &wl, &wr)?;
                continue;
            }
            let mut single = Substitution::new();
            single.bind(v, image);
            tau = single.compose(&tau);
            continue;
        }
        // Structural decomposition.
        let (h1, a1) = wl.spine();
        let (h2, a2) = wr.spine();
        let rigid = |h: &RTerm| match &**h {
            Term::Type | Term::Kind | Term::Pi { .. } | Term::Lam { .. } | Term::Bound(_) => true,
            Term::Const(cst) => eng.sig().is_injective(cst).unwrap_or(false),
            Term::Local(v) => !delta.contains(v),
            Term::App(..) => false,
        };
        let same_head = match (&*h1, &*h2) {
            (Term::Type, Term::Type) | (Term::Kind, Term::Kind) => true,
            (Term::Const(x), Term::Const(y)) => x == y,
            (Term::Local(x), Term::Local(y)) => x == y,
            (Term::Bound(x), Term::Bound(y)) => x == y,
            (Term::Pi { .. }, Term::Pi { .. }) => a1.is_empty() && a2.is_empty(),
            (Term::Lam { .. }, Term::Lam { .. }) => a1.is_empty() && a2.is_empty(),
            _ => false,
        };
        if rigid(&h1) && rigid(&h2) && same_head {
            if a1.len() != a2.len() {
                return Err(unification_clash(&wl, &wr));
            }
            match (&*h1, &*h2) {
                (Term::Pi { dom: d1, cod: c1, .. }, Term::Pi { dom: d2, cod: c2, .. }) => {
                    work.push(Constraint {
                        left: d1.clone(),
                        right: d2.clone(),
                        under_guard: c.under_guard,
                        path: c.path.clone(),
                    });
                    work.push(Constraint {
                        left: c1.clone(),
                        right: c2.clone(),
                        under_guard: c.under_guard,
                        path: c.path.clone(),
                    });
                }
                (Term::Lam { body: b1, .. }, Term::Lam { body: b2, .. }) => {
                    work.push(Constraint {
                        left: b1.clone(),
                        right: b2.clone(),
                        under_guard: c.under_guard,
                        path: c.path.clone(),
                    });
                }
                _ => {}
            }
            for (x, y) in a1.iter().zip(&a2) {
                work.push(Constraint {
                    left: x.clone(),
                    right: y.clone(),
                    under_guard: c.under_guard,
                    path: c.path.clone(),
                });
            }
            continue;
        }
        if rigid(&h1) && rigid(&h2) {
            return Err(unification_clash(&wl, &wr));
        }
        // At least one flexible side: a definable head or an applied rule
        // variable. Conversion may still discharge it.
        if eng.convertible(&wl, &wr)? {
            continue;
        }
        push_residual(&mut residuals, c, eng, &wl, &wr)?;
    }
    Ok(MgtsResult { tau, residuals })
}

fn unification_clash(l: &RTerm, r: &RTerm) -> Error {
    Error::new(
        ErrorCode::UnificationClash,
        format!(
            "cannot unify `{}` with `{}`",
            print_term(l),
            print_term(r)
        ),
    )
}

fn push_residual(
    residuals: &mut Vec<Constraint>,
    c: Constraint,
    _eng: &Engine,
    wl: &RTerm,
    wr: &RTerm,
) -> Result<()> {
    if c.under_guard {
        residuals.push(c);
        Ok(())
    } else {
        Err(Error::new(
            ErrorCode::UnsolvableWithoutGuard,
            format!(
                "typing the left-hand side needs `{}` ≡ `{}`, which does not follow \
                 from injective decomposition; add a `{{...}}` guard if the equation \
                 holds by typing",
                print_term(wl),
                print_term(wr)
            ),
        ))
    }
}

/// Orders the rule context so that every type only mentions variables
/// declared before it; first-occurrence order already satisfies this in
/// practice, the sort keeps it an invariant.
fn dependency_order(vars: Vec<(String, RTerm)>) -> Result<Vec<(String, RTerm)>> {
    let names: BTreeSet<String> = vars.iter().map(|(v, _)| v.clone()).collect();
    let mut pending = vars;
    let mut out: Vec<(String, RTerm)> = Vec::new();
    let mut placed: BTreeSet<String> = BTreeSet::new();
    while !pending.is_empty() {
        let mut rest = Vec::new();
        let mut progressed = false;
        for (v, ty) in pending {
            let ready = ty
                .free_locals()
                .iter()
                .all(|d| placed.contains(d) || !names.contains(d));
            if ready {
                placed.insert(v.clone());
                out.push((v, ty));
                progressed = true;
            } else {
                rest.push((v, ty));
            }
        }
        if !progressed {
            let cycle: Vec<String> = rest.into_iter().map(|(v, _)| v).collect();
            return Err(Error::new(
                ErrorCode::UntypableVariable,
                format!("circular types among rule variables {}", cycle.join(", ")),
            ));
        }
        pending = rest;
    }
    Ok(out)
}

/// Validates one resolved rule end to end and produces the stored form.
pub fn check_rule(eng: &Engine, raw: &RawRule) -> Result<CheckedRule> {
    let shaped = check_pattern_shape(eng, &raw.lhs, &raw.delta, &raw.guard_paths)?;
    let (delta_inferred, constraints) =
        infer_delta_types(eng, &raw.lhs, &raw.guard_paths, &raw.delta)?;
    let delta_set: BTreeSet<String> = raw.delta.iter().cloned().collect();
    let mg = solve_mgts(eng, &delta_set, constraints)?;
    // Assemble the specialized context and type both sides under it.
    let remaining: Vec<(String, RTerm)> = delta_inferred
        .iter()
        .filter(|(v, _)| mg.tau.get(v).is_none())
        .map(|(v, ty)| (v.clone(), substitute(ty, &mg.tau)))
        .collect();
    let ordered = dependency_order(remaining)?;
    let mut ctx = TypingContext::new();
    for (v, ty) in &ordered {
        let sort = typing::infer(eng, &mut ctx, ty)?;
        let w = eng.whnf(&sort)?;
        if !matches!(&*w, Term::Type) {
            return Err(Error::new(
                ErrorCode::SortError,
                format!(
                    "rule variable `{v}` must have an object type; `{}` has sort `{}`",
                    print_term(ty),
                    print_term(&w)
                ),
            ));
        }
        ctx.push(v.clone(), ty.clone());
    }
    let tau_lhs = substitute(&raw.lhs, &mg.tau);
    let lhs_ty = typing::infer(eng, &mut ctx, &tau_lhs)?;
    let tau_rhs = substitute(&raw.rhs, &mg.tau);
    typing::check(eng, &mut ctx, &tau_rhs, &lhs_ty)?;
    Ok(CheckedRule {
        head: shaped.head,
        delta: delta_inferred,
        pattern: shaped.pattern,
        rhs: raw.rhs.clone(),
        lhs_typed: raw.lhs.clone(),
        lhs_linear: shaped.lhs_linear,
        guards: shaped.guards,
        mgts: mg.tau,
        loc: raw.loc.clone(),
    })
}
