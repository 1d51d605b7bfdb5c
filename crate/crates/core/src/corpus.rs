//! The shipped example library: one signature file per encoded theory,
//! each with an expected outcome. Doubles as the integration surface for
//! the whole checker.

use crate::driver::{CheckOptions, Checker, FileOutcome};
use crate::error::ErrorCode;
use std::path::PathBuf;

/// What a corpus file is expected to do.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expected {
    /// Checks clean with no conversion directives asserted individually.
    CheckOk,
    /// Checks clean and its `#CONV` directives answer exactly this.
    ConvResults(&'static [bool]),
    /// Fails with exactly this error kind.
    CheckFail(ErrorCode),
}

#[derive(Clone, Copy, Debug)]
pub struct CorpusCase {
    /// Path relative to the corpus root.
    pub path: &'static str,
    pub expected: Expected,
    /// What the file encodes.
    pub note: &'static str,
    /// Whether the file's rewrite system terminates on the term pools the
    /// property tests draw from; non-terminating files are excluded from
    /// normalization-based spot checks.
    pub terminating: bool,
}

const T: &[bool] = &[true];
const TT: &[bool] = &[true, true];

const CASES: &[CorpusCase] = &[
    CorpusCase {
        path: "basics/nat_plus.dk",
        expected: Expected::ConvResults(T),
        note: "Peano naturals, addition by a grouped rule block, definitions",
        terminating: true,
    },
    CorpusCase {
        path: "basics/plus_assoc.dk",
        expected: Expected::CheckOk,
        note: "addition with sequential rule blocks plus associativity",
        terminating: true,
    },
    CorpusCase {
        path: "basics/vector_tail.dk",
        expected: Expected::ConvResults(TT),
        note: "length-indexed vectors; linear, wildcard and guarded tail",
        terminating: true,
    },
    CorpusCase {
        path: "predicate/minimal_logic.dk",
        expected: Expected::CheckOk,
        note: "minimal predicate logic: implication and universals as products",
        terminating: true,
    },
    CorpusCase {
        path: "predicate/constructive.dk",
        expected: Expected::CheckOk,
        note: "constructive connectives defined by rewriting on eps",
        terminating: true,
    },
    CorpusCase {
        path: "predicate/heyting.dk",
        expected: Expected::ConvResults(T),
        note: "Heyting arithmetic: nine rules and a proof that 0 is right-neutral",
        terminating: true,
    },
    CorpusCase {
        path: "predicate/resolution.dk",
        expected: Expected::CheckOk,
        note: "a resolution refutation checked step by step",
        terminating: true,
    },
    CorpusCase {
        path: "classical/connectives.dk",
        expected: Expected::CheckOk,
        note: "classical connectives by double negation; excluded middle",
        terminating: true,
    },
    CorpusCase {
        path: "classical/set_rewrite.dk",
        expected: Expected::ConvResults(T),
        note: "set-theory membership axiom turned into a rewrite rule",
        terminating: true,
    },
    CorpusCase {
        path: "stt/stt.dk",
        expected: Expected::CheckOk,
        note: "simple type theory with object-level types and eps",
        terminating: true,
    },
    CorpusCase {
        path: "prog/untyped_lambda.dk",
        expected: Expected::ConvResults(T),
        note: "untyped lambda-calculus with a higher-order beta rule",
        terminating: false,
    },
    CorpusCase {
        path: "prog/fix_mod2.dk",
        expected: Expected::ConvResults(T),
        note: "simply-typed fixpoint operator and mod2 as a recursive program",
        terminating: false,
    },
    CorpusCase {
        path: "prog/sigma_objects.dk",
        expected: Expected::ConvResults(T),
        note: "object calculus: preobjects, method selection and update",
        terminating: true,
    },
    CorpusCase {
        path: "prog/ml_destructors.dk",
        expected: Expected::ConvResults(TT),
        note: "ML pattern matching via destructors and the freeze symbol @",
        terminating: true,
    },
    CorpusCase {
        path: "cic/coc.dk",
        expected: Expected::CheckOk,
        note: "the calculus of constructions as a pure type system",
        terminating: true,
    },
    CorpusCase {
        path: "cic/lists.dk",
        expected: Expected::ConvResults(T),
        note: "polymorphic lists with a primitive recursion eliminator",
        terminating: true,
    },
    CorpusCase {
        path: "cic/universes.dk",
        expected: Expected::ConvResults(TT),
        note: "cumulative universes with explicit lifts and a guarded rule",
        terminating: true,
    },
    CorpusCase {
        path: "rewriting/derivative.dk",
        expected: Expected::ConvResults(T),
        note: "higher-order differentiation rule; its critical peak rejoins",
        terminating: true,
    },
    CorpusCase {
        path: "modular/nat_defs.dk",
        expected: Expected::CheckOk,
        note: "a module of naturals meant to be imported",
        terminating: true,
    },
    CorpusCase {
        path: "modular/uses_nat.dk",
        expected: Expected::ConvResults(T),
        note: "imports a checked module under a qualified prefix",
        terminating: true,
    },
    CorpusCase {
        path: "negative/non_pattern.dk",
        expected: Expected::CheckFail(ErrorCode::NotAPattern),
        note: "left-hand side applies a rule variable to a rigid term",
        terminating: true,
    },
    CorpusCase {
        path: "negative/static_head.dk",
        expected: Expected::CheckFail(ErrorCode::StaticHead),
        note: "rule headed by a static symbol",
        terminating: true,
    },
    CorpusCase {
        path: "negative/ill_typed_rhs.dk",
        expected: Expected::CheckFail(ErrorCode::Mismatch),
        note: "right-hand side with a different type than the left",
        terminating: true,
    },
    CorpusCase {
        path: "negative/guard_violation.dk",
        expected: Expected::CheckFail(ErrorCode::GuardViolation),
        note: "a guard that does not follow from typing, caught at rewrite time",
        terminating: true,
    },
    CorpusCase {
        path: "negative/unbound_rule_var.dk",
        expected: Expected::CheckFail(ErrorCode::UnknownIdentifier),
        note: "right-hand side variable missing from the rule context",
        terminating: true,
    },
];

/// Root of the shipped corpus (the `corpus/` directory of the workspace).
pub fn corpus_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("..")
        .join("..")
        .join("corpus")
}

/// Enumerates the shipped cases; a missing file is a build defect and
/// panics.
pub fn load_corpus() -> Vec<CorpusCase> {
    let root = corpus_root();
    for case in CASES {
        let p = root.join(case.path);
        assert!(p.is_file(), "corpus file missing: {}", p.display());
    }
    CASES.to_vec()
}

#[derive(Clone, Debug)]
pub struct CaseResult {
    pub case: CorpusCase,
    pub outcome: FileOutcome,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct CorpusReport {
    pub results: Vec<CaseResult>,
}

impl CorpusReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(if r.pass { "pass " } else { "FAIL " });
            out.push_str(r.case.path);
            if !r.pass {
                out.push_str(": ");
                out.push_str(&r.detail);
            }
            out.push('\n');
        }
        let passed = self.results.iter().filter(|r| r.pass).count();
        out.push_str(&format!("corpus: {passed}/{} cases pass\n", self.results.len()));
        out
    }
}

/// Runs every corpus case and compares against its expected outcome.
pub fn check_corpus(opts: CheckOptions) -> CorpusReport {
    let root = corpus_root();
    let mut report = CorpusReport::default();
    for case in load_corpus() {
        let mut checker = Checker::new(opts.clone());
        let outcome = checker.check_file(&root.join(case.path));
        let (pass, detail) = judge(&case, &outcome);
        report.results.push(CaseResult { case, outcome, pass, detail });
    }
    report
}

fn judge(case: &CorpusCase, outcome: &FileOutcome) -> (bool, String) {
    match case.expected {
        Expected::CheckOk => match &outcome.error {
            None => (true, String::new()),
            Some(e) => (false, format!("expected success, got {e}")),
        },
        Expected::ConvResults(expected) => match &outcome.error {
            None if outcome.convs == expected => (true, String::new()),
            None => (
                false,
                format!("expected #CONV results {:?}, got {:?}", expected, outcome.convs),
            ),
            Some(e) => (false, format!("expected success, got {e}")),
        },
        Expected::CheckFail(code) => match &outcome.error {
            Some(e) if e.code == code => (true, String::new()),
            Some(e) => (
                false,
                format!("expected error[{}], got error[{}]: {}", code, e.code, e.msg),
            ),
            None => (false, format!("expected error[{code}], but the file checked")),
        },
    }
}
