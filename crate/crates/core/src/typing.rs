//! Bidirectional type checking.
//!
//! Inference handles everything except unannotated lambdas, which are only
//! accepted in checking position against a product. All equality of types
//! goes through the reduction engine's conversion test; there is no private
//! syntactic comparison here.

use crate::error::{Error, ErrorCode, Result};
use crate::pretty::print_term;
use crate::reduction::Engine;
use crate::signature::Sort;
use crate::term::{close, instantiate, open, RTerm, Term, TypingContext};

fn unbound(v: &str) -> Error {
    Error::new(ErrorCode::UnboundVariable, format!("unbound variable `{v}`"))
}

/// Infers the type of `t` in `ctx`. The context must be well-formed over the
/// engine's signature.
pub fn infer(eng: &Engine, ctx: &mut TypingContext, t: &RTerm) -> Result<RTerm> {
    match &**t {
        Term::Type => Ok(Term::sort_kind()),
        Term::Kind => Err(Error::new(
            ErrorCode::KindMisuse,
            "the sort Kind cannot be used as a term",
        )),
        Term::Const(c) => eng
            .sig()
            .type_of(c)
            .ok_or_else(|| unbound(&c.to_string())),
        Term::Local(v) => ctx.lookup(v).cloned().ok_or_else(|| unbound(v)),
        Term::Bound(i) => Err(Error::new(
            ErrorCode::UnboundVariable,
            format!("loose bound variable #{i}"),
        )),
        Term::App(f, a) => {
            let tf = infer(eng, ctx, f)?;
            let wtf = eng.whnf(&tf)?;
            match &*wtf {
                Term::Pi { dom, cod, .. } => {
                    check(eng, ctx, a, dom)?;
                    Ok(instantiate(cod, a))
                }
                _ => Err(Error::new(
                    ErrorCode::NotAProduct,
                    format!(
                        "`{}` of type `{}` is applied but its type is not a product",
                        print_term(f),
                        print_term(&wtf)
                    ),
                )),
            }
        }
        Term::Lam { name, ann: Some(ann), body } => {
            expect_object_type(eng, ctx, ann)?;
            let x = ctx.fresh(name);
            let opened = open(body, &x);
            ctx.push(x.clone(), ann.clone());
            let bt = infer(eng, ctx, &opened);
            ctx.pop();
            let bt = bt?;
            if matches!(&*bt, Term::Kind) {
                return Err(Error::new(
                    ErrorCode::SortError,
                    format!("the body of `{name} => ...` is a kind; no product types it"),
                ));
            }
            Ok(Term::pi(name.clone(), ann.clone(), close(&bt, &x)))
        }
        Term::Lam { ann: None, .. } => Err(Error::new(
            ErrorCode::UnannotatedLambda,
            "cannot infer the type of an unannotated lambda; the annotation is \
             mandatory here",
        )),
        Term::Pi { name, dom, cod } => {
            expect_object_type(eng, ctx, dom)?;
            let x = ctx.fresh(name);
            let opened = open(cod, &x);
            ctx.push(x, dom.clone());
            let st = infer(eng, ctx, &opened);
            ctx.pop();
            let st = st?;
            let w = eng.whnf(&st)?;
            match &*w {
                Term::Type | Term::Kind => Ok(w),
                _ => Err(Error::new(
                    ErrorCode::SortError,
                    format!("the codomain of a product must be a type or a kind, found `{}`",
                        print_term(&w)),
                )),
            }
        }
    }
}

/// Checks `t` against `expected`, whose sort the caller has established.
pub fn check(eng: &Engine, ctx: &mut TypingContext, t: &RTerm, expected: &RTerm) -> Result<()> {
    if let Term::Lam { name, ann: None, body } = &**t {
        let w = eng.whnf(expected)?;
        return match &*w {
            Term::Pi { dom, cod, .. } => {
                let x = ctx.fresh(name);
                let obody = open(body, &x);
                let ocod = open(cod, &x);
                ctx.push(x, dom.clone());
                let r = check(eng, ctx, &obody, &ocod);
                ctx.pop();
                r
            }
            _ => Err(Error::new(
                ErrorCode::NotAProduct,
                format!(
                    "this lambda would need type `{}`, which is not a product",
                    print_term(&w)
                ),
            )),
        };
    }
    let found = infer(eng, ctx, t)?;
    if eng.convertible(&found, expected)? {
        Ok(())
    } else {
        Err(Error::new(
            ErrorCode::Mismatch,
            format!(
                "type mismatch: expected `{}`, found `{}`",
                print_term(&eng.whnf(expected)?),
                print_term(&eng.whnf(&found)?)
            ),
        ))
    }
}

/// Requires `ann` to be an object type (sort `Type`), as binder domains are.
fn expect_object_type(eng: &Engine, ctx: &mut TypingContext, ann: &RTerm) -> Result<()> {
    let s = infer(eng, ctx, ann)?;
    let w = eng.whnf(&s)?;
    match &*w {
        Term::Type => Ok(()),
        _ => Err(Error::new(
            ErrorCode::SortError,
            format!(
                "a binder domain must be a type; `{}` has sort `{}`",
                print_term(ann),
                print_term(&w)
            ),
        )),
    }
}

/// Validates a declared type: infers it in the empty local context and
/// requires the result to be exactly `Type` or `Kind`.
pub fn declaration_sort(eng: &Engine, ty: &RTerm) -> Result<Sort> {
    let mut ctx = TypingContext::new();
    let s = infer(eng, &mut ctx, ty)?;
    let w = eng.whnf(&s)?;
    match &*w {
        Term::Type => Ok(Sort::Type),
        Term::Kind => Ok(Sort::Kind),
        _ => Err(Error::new(
            ErrorCode::SortError,
            format!(
                "a declared type must be a type or a kind; `{}` has type `{}`",
                print_term(ty),
                print_term(&w)
            ),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loc::Location;
    use crate::parser::{parse_pterm, resolve_term};
    use crate::signature::{Signature, SymbolKind};
    use crate::term::{alpha_equal, Name};

    /// Declares `name : ty` (parsed) with the given kind, checking the sort.
    fn declare(sig: &mut Signature, name: &str, ty: &str, kind: SymbolKind) {
        let pt = parse_pterm(ty, "<test>").unwrap();
        let ty = resolve_term(sig, &pt).unwrap();
        let sort = declaration_sort(&Engine::new(sig), &ty).unwrap();
        sig.declare(Name::global(name), ty, kind, sort, Location::builtin())
            .unwrap();
    }

    fn minimal_sig() -> Signature {
        let mut sig = Signature::new();
        declare(&mut sig, "s", "Type", SymbolKind::Static);
        declare(&mut sig, "P", "s -> Type", SymbolKind::Static);
        sig
    }

    fn t(sig: &Signature, src: &str) -> RTerm {
        resolve_term(sig, &parse_pterm(src, "<test>").unwrap()).unwrap()
    }

    #[test]
    fn type_has_sort_kind() {
        let sig = Signature::new();
        let eng = Engine::new(&sig);
        let mut ctx = TypingContext::new();
        assert_eq!(
            infer(&eng, &mut ctx, &Term::sort_type()).unwrap(),
            Term::sort_kind()
        );
    }

    #[test]
    fn identity_proof_infers_its_product() {
        let sig = minimal_sig();
        let eng = Engine::new(&sig);
        let mut ctx = TypingContext::new();
        let proof = t(&sig, "x:s => a:(P x) => a");
        let ty = infer(&eng, &mut ctx, &proof).unwrap();
        let expected = t(&sig, "x:s -> (P x) -> (P x)");
        assert!(alpha_equal(&ty, &expected), "got {}", ty);
        // infer/check agreement
        check(&eng, &mut ctx, &proof, &ty).unwrap();
    }

    #[test]
    fn unannotated_lambda_needs_a_checking_position() {
        let sig = minimal_sig();
        let eng = Engine::new(&sig);
        let mut ctx = TypingContext::new();
        let lam = t(&sig, "x => x");
        let e = infer(&eng, &mut ctx, &lam).unwrap_err();
        assert_eq!(e.code, ErrorCode::UnannotatedLambda);
        check(&eng, &mut ctx, &lam, &t(&sig, "s -> s")).unwrap();
    }

    #[test]
    fn checking_against_a_non_product_fails() {
        let sig = minimal_sig();
        let eng = Engine::new(&sig);
        let mut ctx = TypingContext::new();
        let lam = t(&sig, "x => x");
        let e = check(&eng, &mut ctx, &lam, &t(&sig, "s")).unwrap_err();
        assert_eq!(e.code, ErrorCode::NotAProduct);
    }

    #[test]
    fn mismatch_reports_both_types() {
        let mut sig = minimal_sig();
        declare(&mut sig, "o", "Type", SymbolKind::Static);
        declare(&mut sig, "c", "s", SymbolKind::Static);
        let eng = Engine::new(&sig);
        let mut ctx = TypingContext::new();
        check(&eng, &mut ctx, &t(&sig, "c"), &t(&sig, "s")).unwrap();
        let e = check(&eng, &mut ctx, &t(&sig, "c"), &t(&sig, "o")).unwrap_err();
        assert_eq!(e.code, ErrorCode::Mismatch);
        assert!(e.msg.contains("`o`") && e.msg.contains("`s`"));
    }

    #[test]
    fn declaration_sorts() {
        let sig = minimal_sig();
        let eng = Engine::new(&sig);
        // `Type` itself has sort Kind; `s -> Type` too; `s` has sort Type.
        assert_eq!(declaration_sort(&eng, &Term::sort_type()).unwrap(), Sort::Kind);
        assert_eq!(declaration_sort(&eng, &t(&sig, "s -> Type")).unwrap(), Sort::Kind);
        assert_eq!(declaration_sort(&eng, &t(&sig, "s")).unwrap(), Sort::Type);
        // An object like `P` applied partially is no sort at all.
        let e = declaration_sort(&eng, &t(&sig, "x:s => x")).unwrap_err();
        assert_eq!(e.code, ErrorCode::SortError);
    }

    #[test]
    fn kind_is_not_a_term() {
        let sig = Signature::new();
        let eng = Engine::new(&sig);
        let mut ctx = TypingContext::new();
        let e = infer(&eng, &mut ctx, &Term::sort_kind()).unwrap_err();
        assert_eq!(e.code, ErrorCode::KindMisuse);
    }

    #[test]
    fn lambda_body_may_not_be_a_kind() {
        let sig = minimal_sig();
        let eng = Engine::new(&sig);
        let mut ctx = TypingContext::new();
        // \x:s. Type would inhabit Πx:s. Kind, which is not a product.
        let bad = Term::lam("x", Some(t(&sig, "s")), Term::sort_type());
        let e = infer(&eng, &mut ctx, &bad).unwrap_err();
        assert_eq!(e.code, ErrorCode::SortError);
    }

    #[test]
    fn typing_consults_conversion_through_the_engine() {
        let sig = minimal_sig();
        let eng = Engine::new(&sig);
        let mut ctx = TypingContext::new();
        let proof = t(&sig, "x:s => a:(P x) => a");
        let ty = infer(&eng, &mut ctx, &proof).unwrap();
        let before = eng.conv_query_count();
        check(&eng, &mut ctx, &proof, &ty).unwrap();
        assert!(eng.conv_query_count() > before);
    }
}
