//! File checking: processes declarations in order, executes directives,
//! loads required modules, and reports results.

use crate::error::{Error, ErrorCode, Result};
use crate::loc::Location;
use crate::parser::{self, Decl, Resolved};
use crate::pretty::print_term;
use crate::reduction::{Engine, Limits};
use crate::ruletyping;
use crate::signature::{Signature, SymbolKind};
use crate::term::{Name, RTerm, Term, TypingContext};
use crate::typing;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub limits: Limits,
    /// Extra directories searched by `#REQUIRE`, after the requiring file's
    /// own directory.
    pub include: Vec<PathBuf>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { limits: Limits::default(), include: Vec::new() }
    }
}

/// One processed declaration, for reporting.
#[derive(Clone, Debug)]
pub struct DeclInfo {
    pub loc: Location,
    pub label: String,
}

/// The result of checking one file. Processing stops at the first error.
#[derive(Clone, Debug)]
pub struct FileOutcome {
    pub path: String,
    pub decls: Vec<DeclInfo>,
    /// Rendered output lines of `#CONV`, `#WHNF` and `#SNF` directives.
    pub lines: Vec<String>,
    /// Result of each `#CONV`, in order.
    pub convs: Vec<bool>,
    /// Closed well-typed terms established by the file, with their types;
    /// used by the test suites.
    pub terms: Vec<(RTerm, RTerm)>,
    pub error: Option<Error>,
}

impl FileOutcome {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub files: Vec<FileOutcome>,
}

impl Report {
    pub fn failures(&self) -> usize {
        self.files.iter().filter(|f| !f.ok()).count()
    }

    /// 0 iff every file checked and every directive passed.
    pub fn exit_code(&self) -> i32 {
        if self.failures() == 0 {
            0
        } else {
            1
        }
    }

    /// Deterministic textual report: identical inputs and flags produce
    /// byte-identical output.
    pub fn render(&self, quiet: bool) -> String {
        let mut out = String::new();
        for f in &self.files {
            if !quiet {
                for line in &f.lines {
                    out.push_str("  ");
                    out.push_str(line);
                    out.push('\n');
                }
            }
            match &f.error {
                None => {
                    if !quiet {
                        out.push_str(&format!("ok {} ({} declarations)\n", f.path, f.decls.len()));
                    }
                }
                Some(e) => {
                    out.push_str(&format!("{e}\n"));
                    out.push_str(&format!("fail {}\n", f.path));
                }
            }
        }
        let ok = self.files.len() - self.failures();
        out.push_str(&format!(
            "checked {} file(s): {} ok, {} failed\n",
            self.files.len(),
            ok,
            self.failures()
        ));
        out
    }
}

/// Checks files and caches modules loaded through `#REQUIRE`.
pub struct Checker {
    pub opts: CheckOptions,
    cache: BTreeMap<String, Signature>,
    loading: BTreeSet<String>,
}

impl Checker {
    pub fn new(opts: CheckOptions) -> Self {
        Checker { opts, cache: BTreeMap::new(), loading: BTreeSet::new() }
    }

    pub fn check_file(&mut self, path: &Path) -> FileOutcome {
        let display = path.display().to_string();
        match std::fs::read_to_string(path) {
            Ok(src) => {
                let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                self.check_source(&src, &display, &dir).1
            }
            Err(e) => FileOutcome {
                path: display.clone(),
                decls: Vec::new(),
                lines: Vec::new(),
                convs: Vec::new(),
                terms: Vec::new(),
                error: Some(
                    Error::new(ErrorCode::Io, format!("cannot read {display}: {e}"))
                        .at(Location::new(display, 0, 0)),
                ),
            },
        }
    }

    /// Checks a whole source text, returning the final signature together
    /// with the outcome. `dir` anchors `#REQUIRE` lookups.
    pub fn check_source(&mut self, src: &str, path: &str, dir: &Path) -> (Signature, FileOutcome) {
        let mut sig = Signature::new();
        let mut outcome = FileOutcome {
            path: path.to_string(),
            decls: Vec::new(),
            lines: Vec::new(),
            convs: Vec::new(),
            terms: Vec::new(),
            error: None,
        };
        let decls = match parser::parse_file(src, path) {
            Ok(ds) => ds,
            Err(e) => {
                outcome.error = Some(e);
                return (sig, outcome);
            }
        };
        for decl in &decls {
            match self.process_declaration(&mut sig, decl, dir, &mut outcome) {
                Ok(info) => outcome.decls.push(info),
                Err(e) => {
                    outcome.error = Some(e.locate(&decl.loc));
                    break;
                }
            }
        }
        (sig, outcome)
    }

    /// Processes one declaration against `sig`, mutating it on success.
    pub fn process_declaration(
        &mut self,
        sig: &mut Signature,
        decl: &Decl,
        dir: &Path,
        outcome: &mut FileOutcome,
    ) -> Result<DeclInfo> {
        let resolved = parser::resolve(sig, decl)?;
        let limits = self.opts.limits;
        let loc = decl.loc.clone();
        let label;
        match resolved {
            Resolved::Static { name, ty } => {
                let sort = typing::declaration_sort(&Engine::with_limits(sig, limits), &ty)?;
                outcome.terms.push((ty.clone(), sort_term(sort)));
                label = format!("{name} (static)");
                sig.declare(Name::global(name), ty, SymbolKind::Static, sort, loc.clone())?;
            }
            Resolved::Definable { name, ty } => {
                let sort = typing::declaration_sort(&Engine::with_limits(sig, limits), &ty)?;
                outcome.terms.push((ty.clone(), sort_term(sort)));
                label = format!("{name} (definable)");
                sig.declare(Name::global(name), ty, SymbolKind::Definable, sort, loc.clone())?;
            }
            Resolved::Definition { name, ty, body } => {
                let eng = Engine::with_limits(sig, limits);
                let final_ty = match ty {
                    Some(ty) => {
                        typing::declaration_sort(&eng, &ty)?;
                        typing::check(&eng, &mut TypingContext::new(), &body, &ty)?;
                        ty
                    }
                    None => {
                        let t = typing::infer(&eng, &mut TypingContext::new(), &body)?;
                        if matches!(&*t, Term::Kind) {
                            return Err(Error::new(
                                ErrorCode::SortError,
                                format!("`{name}` would have type Kind, which cannot be declared"),
                            ));
                        }
                        t
                    }
                };
                let sort = typing::declaration_sort(&eng, &final_ty)?;
                outcome.terms.push((body.clone(), final_ty.clone()));
                label = format!("{name} (definition)");
                sig.add_definition(Name::global(name), final_ty, sort, body, loc.clone())?;
            }
            Resolved::Rules(raws) => {
                // Each rule is validated against the signature without the
                // other rules of its block, then the block lands atomically.
                let mut checked = Vec::new();
                {
                    let eng = Engine::with_limits(sig, limits);
                    for raw in &raws {
                        checked.push(ruletyping::check_rule(&eng, raw)?);
                    }
                }
                let heads: Vec<String> =
                    checked.iter().map(|r| r.head.to_string()).collect();
                label = format!("rules for {}", heads.join(", "));
                sig.add_rule_block(checked)?;
            }
            Resolved::Conv(a, b) => {
                let eng = Engine::with_limits(sig, limits);
                let mut ctx = TypingContext::new();
                let ta = typing::infer(&eng, &mut ctx, &a)?;
                let tb = typing::infer(&eng, &mut ctx, &b)?;
                outcome.terms.push((a.clone(), ta));
                outcome.terms.push((b.clone(), tb));
                let ok = eng.convertible(&a, &b)?;
                outcome.convs.push(ok);
                outcome.lines.push(format!(
                    "#CONV {}, {}: {}",
                    print_term(&a),
                    print_term(&b),
                    if ok { "ok" } else { "FAILED" }
                ));
                label = "#CONV".to_string();
                if !ok {
                    return Err(Error::new(
                        ErrorCode::ConvFailed,
                        format!(
                            "`{}` and `{}` are not convertible",
                            print_term(&a),
                            print_term(&b)
                        ),
                    ));
                }
            }
            Resolved::Whnf(t) => {
                let eng = Engine::with_limits(sig, limits);
                let ty = typing::infer(&eng, &mut TypingContext::new(), &t)?;
                outcome.terms.push((t.clone(), ty));
                let w = eng.whnf(&t)?;
                outcome
                    .lines
                    .push(format!("#WHNF {} --> {}", print_term(&t), print_term(&w)));
                label = "#WHNF".to_string();
            }
            Resolved::Snf(t) => {
                let eng = Engine::with_limits(sig, limits);
                let ty = typing::infer(&eng, &mut TypingContext::new(), &t)?;
                outcome.terms.push((t.clone(), ty));
                let w = eng.snf(&t)?;
                outcome
                    .lines
                    .push(format!("#SNF {} --> {}", print_term(&t), print_term(&w)));
                label = "#SNF".to_string();
            }
            Resolved::Require(m) => {
                self.require(sig, &m, dir, &loc)?;
                label = format!("#REQUIRE {m}");
            }
        }
        Ok(DeclInfo { loc, label })
    }

    fn require(&mut self, sig: &mut Signature, m: &str, dir: &Path, loc: &Location) -> Result<()> {
        if !self.cache.contains_key(m) {
            if self.loading.contains(m) {
                return Err(Error::new(
                    ErrorCode::MissingModule,
                    format!("circular #REQUIRE of module `{m}`"),
                )
                .at(loc.clone()));
            }
            let path = self.find_module(m, dir).ok_or_else(|| {
                Error::new(
                    ErrorCode::MissingModule,
                    format!("cannot find `{m}.dk` (searched the file's directory and -I paths)"),
                )
                .at(loc.clone())
            })?;
            self.loading.insert(m.to_string());
            let outcome = {
                let display = path.display().to_string();
                match std::fs::read_to_string(&path) {
                    Ok(src) => {
                        let mdir = path.parent().map(Path::to_path_buf).unwrap_or_default();
                        let (msig, outcome) = self.check_source(&src, &display, &mdir);
                        if outcome.ok() {
                            self.cache.insert(m.to_string(), msig);
                        }
                        outcome
                    }
                    Err(e) => {
                        self.loading.remove(m);
                        return Err(Error::new(
                            ErrorCode::Io,
                            format!("cannot read {display}: {e}"),
                        )
                        .at(loc.clone()));
                    }
                }
            };
            self.loading.remove(m);
            if let Some(e) = outcome.error {
                return Err(e);
            }
        }
        sig.import(m, &self.cache[m]);
        Ok(())
    }

    fn find_module(&self, m: &str, dir: &Path) -> Option<PathBuf> {
        let file = format!("{m}.dk");
        let mut candidates = vec![dir.join(&file)];
        for inc in &self.opts.include {
            candidates.push(inc.join(&file));
        }
        candidates.into_iter().find(|p| p.is_file())
    }
}

fn sort_term(sort: crate::signature::Sort) -> RTerm {
    match sort {
        crate::signature::Sort::Type => Term::sort_type(),
        crate::signature::Sort::Kind => Term::sort_kind(),
    }
}

/// Checks the given files in order. Without `keep_going`, stops at the
/// first failing file.
pub fn run_check(paths: &[PathBuf], opts: CheckOptions, keep_going: bool) -> Report {
    let mut checker = Checker::new(opts);
    let mut report = Report::default();
    for p in paths {
        let outcome = checker.check_file(p);
        let failed = !outcome.ok();
        report.files.push(outcome);
        if failed && !keep_going {
            break;
        }
    }
    report
}

/// Checks a single source string with default options; convenience for
/// tests and the corpus harness.
pub fn check_str(src: &str, path: &str) -> (Signature, FileOutcome) {
    Checker::new(CheckOptions::default()).check_source(src, path, Path::new("."))
}
