//! A small first-order language for valued fields: the ring language
//! extended by power predicates P_n. Provides an AST, a parser and a
//! canonical printer that are mutually inverse, a classifier, a
//! three-valued evaluator, elimination of power predicates, and the two
//! registered membership schemas.
//!
//! The concrete grammar lives in docs/formula-grammar.ebnf.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::decision::{Decision, DecisionResult};
use crate::solvers::{self, CaseKind, Setting};
use crate::valued_fields::{
    is_nth_power_valued, FieldDescriptor, FieldElement, ValuationHandle, VfError,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Zero,
    One,
    Neg(Box<Term>),
    Add(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Pow(Box<Term>, u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Eq(Term, Term),
    /// P_n(t): t is an n-th power
    Pn(u64, Term),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    /// n as the expanded sum 1 + 1 + ... + 1 (left-associated), 0 as Zero.
    pub fn numeral(n: u64) -> Term {
        match n {
            0 => Term::Zero,
            _ => {
                let mut t = Term::One;
                for _ in 1..n {
                    t = Term::Add(Box::new(t), Box::new(Term::One));
                }
                t
            }
        }
    }

    fn has_var(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => v == name,
            Term::Zero | Term::One => false,
            Term::Neg(t) => t.has_var(name),
            Term::Add(a, b) | Term::Mul(a, b) => a.has_var(name) || b.has_var(name),
            Term::Pow(t, _) => t.has_var(name),
        }
    }

    pub fn free_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Zero | Term::One => {}
            Term::Neg(t) | Term::Pow(t, _) => t.free_vars(out),
            Term::Add(a, b) | Term::Mul(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }
}

impl Formula {
    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn exists(v: &str, body: Formula) -> Formula {
        Formula::Exists(v.to_string(), Box::new(body))
    }

    pub fn forall(v: &str, body: Formula) -> Formula {
        Formula::Forall(v.to_string(), Box::new(body))
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::Eq(..) | Formula::Pn(..) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            Formula::Exists(..) | Formula::Forall(..) => false,
        }
    }

    /// (existential, universal) quantifier counts of the prefix and body.
    pub fn quantifier_counts(&self) -> (usize, usize) {
        match self {
            Formula::Eq(..) | Formula::Pn(..) => (0, 0),
            Formula::Not(f) => f.quantifier_counts(),
            Formula::And(a, b) | Formula::Or(a, b) => {
                let (e1, u1) = a.quantifier_counts();
                let (e2, u2) = b.quantifier_counts();
                (e1 + e2, u1 + u2)
            }
            Formula::Exists(_, f) => {
                let (e, u) = f.quantifier_counts();
                (e + 1, u)
            }
            Formula::Forall(_, f) => {
                let (e, u) = f.quantifier_counts();
                (e, u + 1)
            }
        }
    }

    pub fn free_vars(&self) -> Vec<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut Vec<String>) {
            match f {
                Formula::Eq(a, b) => {
                    let mut vs = Vec::new();
                    a.free_vars(&mut vs);
                    b.free_vars(&mut vs);
                    for v in vs {
                        if !bound.contains(&v) && !out.contains(&v) {
                            out.push(v);
                        }
                    }
                }
                Formula::Pn(_, t) => {
                    let mut vs = Vec::new();
                    t.free_vars(&mut vs);
                    for v in vs {
                        if !bound.contains(&v) && !out.contains(&v) {
                            out.push(v);
                        }
                    }
                }
                Formula::Not(g) => go(g, bound, out),
                Formula::And(a, b) | Formula::Or(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Formula::Exists(v, g) | Formula::Forall(v, g) => {
                    bound.push(v.clone());
                    go(g, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }
}

// ---------------------------------------------------------------------------
// canonical printer

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Zero => write!(f, "0"),
            Term::One => write!(f, "1"),
            Term::Neg(t) => write!(f, "(- {t})"),
            Term::Add(a, b) => write!(f, "({a} + {b})"),
            Term::Mul(a, b) => write!(f, "({a} * {b})"),
            Term::Pow(t, n) => write!(f, "({t} ^ {n})"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Pn(n, t) => write!(f, "P_{n}({t})"),
            Formula::Not(g) => write!(f, "!({g})"),
            Formula::And(a, b) => write!(f, "(({a}) & ({b}))"),
            Formula::Or(a, b) => write!(f, "(({a}) | ({b}))"),
            Formula::Exists(v, g) => write!(f, "E {v}. {g}"),
            Formula::Forall(v, g) => write!(f, "A {v}. {g}"),
        }
    }
}

// ---------------------------------------------------------------------------
// parser

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Nat(u64),
    Sym(char),
    Eof,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn err(&self, msg: &str) -> VfError {
        VfError::Parse(format!("{msg} at byte {}", self.pos))
    }

    fn peek_tok(&mut self) -> Result<(Tok, usize), VfError> {
        let save = self.pos;
        let t = self.next_tok()?;
        let after = self.pos;
        self.pos = save;
        Ok((t, after))
    }

    fn next_tok(&mut self) -> Result<Tok, VfError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= self.src.len() {
            return Ok(Tok::Eof);
        }
        let c = self.src[self.pos];
        if c.is_ascii_digit() {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            return s
                .parse::<u64>()
                .map(Tok::Nat)
                .map_err(|_| self.err("numeral out of range"));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            return Ok(Tok::Ident(s.to_string()));
        }
        if "()+-*^=&|!.".contains(c as char) {
            self.pos += 1;
            return Ok(Tok::Sym(c as char));
        }
        Err(self.err(&format!("unexpected character '{}'", c as char)))
    }

    fn expect_sym(&mut self, c: char) -> Result<(), VfError> {
        match self.next_tok()? {
            Tok::Sym(s) if s == c => Ok(()),
            other => Err(self.err(&format!("expected '{c}', found {other:?}"))),
        }
    }
}

pub fn parse_formula(src: &str) -> Result<Formula, VfError> {
    let mut lx = Lexer::new(src);
    let f = parse_quantified(&mut lx)?;
    match lx.next_tok()? {
        Tok::Eof => Ok(f),
        other => Err(lx.err(&format!("trailing input {other:?}"))),
    }
}

pub fn parse_term(src: &str) -> Result<Term, VfError> {
    let mut lx = Lexer::new(src);
    let t = parse_sum(&mut lx)?;
    match lx.next_tok()? {
        Tok::Eof => Ok(t),
        other => Err(lx.err(&format!("trailing input {other:?}"))),
    }
}

fn parse_quantified(lx: &mut Lexer) -> Result<Formula, VfError> {
    let (tok, _) = lx.peek_tok()?;
    if let Tok::Ident(name) = &tok {
        if name == "E" || name == "A" {
            let q = name.clone();
            lx.next_tok()?;
            let var = match lx.next_tok()? {
                Tok::Ident(v) => v,
                other => return Err(lx.err(&format!("expected variable, found {other:?}"))),
            };
            lx.expect_sym('.')?;
            let body = parse_quantified(lx)?;
            return Ok(if q == "E" {
                Formula::Exists(var, Box::new(body))
            } else {
                Formula::Forall(var, Box::new(body))
            });
        }
    }
    parse_disjunct(lx)
}

fn parse_disjunct(lx: &mut Lexer) -> Result<Formula, VfError> {
    let mut f = parse_conjunct(lx)?;
    loop {
        let (tok, after) = lx.peek_tok()?;
        if tok == Tok::Sym('|') {
            lx.pos = after;
            let g = parse_conjunct(lx)?;
            f = f.or(g);
        } else {
            return Ok(f);
        }
    }
}

fn parse_conjunct(lx: &mut Lexer) -> Result<Formula, VfError> {
    let mut f = parse_literal(lx)?;
    loop {
        let (tok, after) = lx.peek_tok()?;
        if tok == Tok::Sym('&') {
            lx.pos = after;
            let g = parse_literal(lx)?;
            f = f.and(g);
        } else {
            return Ok(f);
        }
    }
}

fn parse_literal(lx: &mut Lexer) -> Result<Formula, VfError> {
    let (tok, after) = lx.peek_tok()?;
    match tok {
        Tok::Sym('!') => {
            lx.pos = after;
            Ok(parse_literal(lx)?.not())
        }
        Tok::Sym('(') => {
            // either a parenthesized formula or a term starting with '('
            let save = lx.pos;
            lx.pos = after;
            if let Ok(f) = parse_quantified(lx) {
                let save_inner = lx.pos;
                if lx.next_tok()? == Tok::Sym(')') {
                    // a bare parenthesized term would re-parse as an atom,
                    // so only accept if no '=' follows
                    let save_close = lx.pos;
                    let (next, _) = lx.peek_tok()?;
                    if next != Tok::Sym('=') {
                        return Ok(f);
                    }
                    lx.pos = save_close;
                    let _ = save_inner;
                }
                lx.pos = save;
            } else {
                lx.pos = save;
            }
            parse_atom(lx)
        }
        Tok::Ident(name) if is_power_predicate(&name) => {
            lx.pos = after;
            let n: u64 = name[2..]
                .parse()
                .map_err(|_| lx.err("bad power predicate index"))?;
            if n == 0 {
                return Err(lx.err("power predicate index must be positive"));
            }
            lx.expect_sym('(')?;
            let t = parse_sum(lx)?;
            lx.expect_sym(')')?;
            Ok(Formula::Pn(n, t))
        }
        _ => parse_atom(lx),
    }
}

fn is_power_predicate(name: &str) -> bool {
    name.starts_with("P_") && name[2..].chars().all(|c| c.is_ascii_digit()) && name.len() > 2
}

fn parse_atom(lx: &mut Lexer) -> Result<Formula, VfError> {
    let a = parse_sum(lx)?;
    lx.expect_sym('=')?;
    let b = parse_sum(lx)?;
    Ok(Formula::Eq(a, b))
}

fn parse_sum(lx: &mut Lexer) -> Result<Term, VfError> {
    let mut t = parse_product(lx)?;
    loop {
        let (tok, after) = lx.peek_tok()?;
        match tok {
            Tok::Sym('+') => {
                lx.pos = after;
                let u = parse_product(lx)?;
                t = Term::Add(Box::new(t), Box::new(u));
            }
            Tok::Sym('-') => {
                lx.pos = after;
                let u = parse_product(lx)?;
                t = Term::Add(Box::new(t), Box::new(Term::Neg(Box::new(u))));
            }
            _ => return Ok(t),
        }
    }
}

fn parse_product(lx: &mut Lexer) -> Result<Term, VfError> {
    let mut t = parse_primary(lx)?;
    loop {
        let (tok, after) = lx.peek_tok()?;
        if tok == Tok::Sym('*') {
            lx.pos = after;
            let u = parse_primary(lx)?;
            t = Term::Mul(Box::new(t), Box::new(u));
        } else {
            return Ok(t);
        }
    }
}

fn parse_primary(lx: &mut Lexer) -> Result<Term, VfError> {
    let tok = lx.next_tok()?;
    let mut t = match tok {
        Tok::Sym('-') => Term::Neg(Box::new(parse_primary(lx)?)),
        Tok::Sym('(') => {
            let t = parse_sum(lx)?;
            lx.expect_sym(')')?;
            t
        }
        Tok::Nat(n) => Term::numeral(n),
        Tok::Ident(v) => {
            if v == "E" || v == "A" || is_power_predicate(&v) {
                return Err(lx.err(&format!("reserved name '{v}' used as a variable")));
            }
            Term::Var(v)
        }
        other => return Err(lx.err(&format!("expected a term, found {other:?}"))),
    };
    loop {
        let (tok, after) = lx.peek_tok()?;
        if tok == Tok::Sym('^') {
            lx.pos = after;
            match lx.next_tok()? {
                Tok::Nat(n) => t = Term::Pow(Box::new(t), n),
                other => return Err(lx.err(&format!("expected exponent, found {other:?}"))),
            }
        } else {
            return Ok(t);
        }
    }
}

// ---------------------------------------------------------------------------
// classification

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormulaClass {
    QuantifierFree,
    /// the quantifiers reduce to solvability tests handled by the solvers
    SolvabilityPattern,
    /// quantifiers can only be probed against a user-supplied witness pool
    BoundedSearch,
    Unsupported,
}

pub fn classify(f: &Formula) -> FormulaClass {
    if f.is_quantifier_free() {
        return FormulaClass::QuantifierFree;
    }
    if match_schema(f).is_some() || match_solvability(f).is_some() {
        return FormulaClass::SolvabilityPattern;
    }
    if has_searchable_quantifiers(f) {
        return FormulaClass::BoundedSearch;
    }
    FormulaClass::Unsupported
}

fn has_searchable_quantifiers(f: &Formula) -> bool {
    match f {
        Formula::Eq(..) | Formula::Pn(..) => true,
        Formula::Not(g) => has_searchable_quantifiers(g),
        Formula::And(a, b) | Formula::Or(a, b) => {
            has_searchable_quantifiers(a) && has_searchable_quantifiers(b)
        }
        Formula::Exists(_, g) | Formula::Forall(_, g) => has_searchable_quantifiers(g),
    }
}

/// E y. y^n = rhs  or  E y. y^n + (-y) = rhs with y not free in rhs.
fn match_solvability(f: &Formula) -> Option<(String, u64, bool, &Term)> {
    let Formula::Exists(y, body) = f else {
        return None;
    };
    let Formula::Eq(lhs, rhs) = body.as_ref() else {
        return None;
    };
    if rhs.has_var(y) {
        return None;
    }
    match lhs {
        Term::Pow(b, n) => match b.as_ref() {
            Term::Var(v) if v == y => Some((y.clone(), *n, false, rhs)),
            _ => None,
        },
        Term::Add(a, b) => {
            let Term::Pow(base, n) = a.as_ref() else {
                return None;
            };
            let Term::Var(v) = base.as_ref() else {
                return None;
            };
            let Term::Neg(m) = b.as_ref() else {
                return None;
            };
            let Term::Var(w) = m.as_ref() else {
                return None;
            };
            if v == y && w == y {
                Some((y.clone(), *n, true, rhs))
            } else {
                None
            }
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// registered schemas

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schema {
    /// E y. y * y = 1 + p * x * x
    Robinson { p: u64 },
    /// the three-existential, 2p^2-universal membership sentence
    PhiZ { p: u64, artin_schreier: bool },
}

/// f(Y) applied to a term: Y^p - 1 (Kummer) or Y^p - Y (Artin–Schreier).
fn f_of(case_as: bool, p: u64, y: &Term) -> Term {
    let yp = Term::Pow(Box::new(y.clone()), p);
    let tail = if case_as {
        y.clone()
    } else {
        Term::One
    };
    Term::Add(Box::new(yp), Box::new(Term::Neg(Box::new(tail))))
}

pub fn robinson_schema(p: u64) -> Formula {
    let x = Term::var("x");
    let y = Term::var("y");
    let rhs = Term::Add(
        Box::new(Term::One),
        Box::new(Term::Mul(
            Box::new(Term::numeral(p)),
            Box::new(Term::Mul(Box::new(x.clone()), Box::new(x))),
        )),
    );
    Formula::exists(
        "y",
        Formula::Eq(Term::Mul(Box::new(y.clone()), Box::new(y)), rhs),
    )
}

/// The membership sentence with free variable x:
/// (E a, y, y0)(A y1..y_{p^2}, z1..z_{p^2})
///   !(a = 0) & f(y) = a * x^p & f(y0) = a
///   & !( a * z1 * ... * z_{p^2} = 1 & AND_i f(yi) = a * zi^p )
pub fn phi_z_schema(p: u64, artin_schreier: bool) -> Formula {
    let pp = (p * p) as usize;
    let a = Term::var("a");
    let x = Term::var("x");
    let not_zero = Formula::Eq(a.clone(), Term::Zero).not();
    let main_eq = Formula::Eq(
        f_of(artin_schreier, p, &Term::var("y")),
        Term::Mul(Box::new(a.clone()), Box::new(Term::Pow(Box::new(x), p))),
    );
    let unit_eq = Formula::Eq(f_of(artin_schreier, p, &Term::var("y0")), a.clone());
    let mut zprod = a.clone();
    for i in 1..=pp {
        zprod = Term::Mul(Box::new(zprod), Box::new(Term::var(&format!("z{i}"))));
    }
    let mut inner = Formula::Eq(zprod, Term::One);
    for i in 1..=pp {
        let eq = Formula::Eq(
            f_of(artin_schreier, p, &Term::var(&format!("y{i}"))),
            Term::Mul(
                Box::new(a.clone()),
                Box::new(Term::Pow(Box::new(Term::var(&format!("z{i}"))), p)),
            ),
        );
        inner = inner.and(eq);
    }
    let mut body = not_zero.and(main_eq).and(unit_eq).and(inner.not());
    for i in (1..=pp).rev() {
        body = Formula::forall(&format!("z{i}"), body);
    }
    for i in (1..=pp).rev() {
        body = Formula::forall(&format!("y{i}"), body);
    }
    body = Formula::exists("y0", body);
    body = Formula::exists("y", body);
    Formula::exists("a", body)
}

/// Structural recognition of the registered schemas.
pub fn match_schema(f: &Formula) -> Option<Schema> {
    for p in [2u64, 3, 5, 7, 11, 13] {
        if *f == robinson_schema(p) {
            return Some(Schema::Robinson { p });
        }
        for artin_schreier in [false, true] {
            if *f == phi_z_schema(p, artin_schreier) {
                return Some(Schema::PhiZ { p, artin_schreier });
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// evaluation

#[derive(Clone, Default)]
pub struct EvalOptions {
    /// witnesses used when a quantifier can only be searched
    pub pool: Vec<FieldElement>,
    pub seed: u64,
}

pub type Assignment = BTreeMap<String, FieldElement>;

pub fn eval_term(
    t: &Term,
    desc: &Arc<FieldDescriptor>,
    env: &Assignment,
) -> Result<FieldElement, VfError> {
    match t {
        Term::Var(v) => env
            .get(v)
            .cloned()
            .ok_or_else(|| VfError::Parse(format!("unbound variable '{v}'"))),
        Term::Zero => Ok(FieldElement::zero(desc)),
        Term::One => Ok(FieldElement::one(desc)),
        Term::Neg(a) => Ok(eval_term(a, desc, env)?.neg()),
        Term::Add(a, b) => eval_term(a, desc, env)?.add(&eval_term(b, desc, env)?),
        Term::Mul(a, b) => eval_term(a, desc, env)?.mul(&eval_term(b, desc, env)?),
        Term::Pow(a, n) => eval_term(a, desc, env)?.pow(*n),
    }
}

/// Three-valued evaluation. Registered schemas are evaluated semantically;
/// solvability patterns go through the equation solvers; remaining
/// quantifiers are probed against the witness pool, which can witness an
/// existential or refute a universal but never conversely.
pub fn evaluate(
    f: &Formula,
    desc: &Arc<FieldDescriptor>,
    handle: ValuationHandle,
    env: &Assignment,
    opts: &EvalOptions,
) -> Result<DecisionResult, VfError> {
    if let Some(schema) = match_schema(f) {
        let x = env
            .get("x")
            .ok_or_else(|| VfError::Parse("schema needs x in the assignment".into()))?;
        return match schema {
            Schema::Robinson { p } => solvers::robinson_evaluate(x, p)
                .map(|r| r.push("matched the registered square schema")),
            Schema::PhiZ { p, artin_schreier } => {
                let case_hint = if artin_schreier {
                    None
                } else {
                    Some(CaseKind::KummerZeta)
                };
                let setting = match case_hint {
                    Some(c) => Setting::with_case(desc, handle, p, c)?,
                    None => Setting::new(desc, handle, p)?,
                };
                solvers::phi_z_evaluate(&setting, x, opts.seed)
                    .map(|r| r.push("matched the registered membership schema"))
            }
        };
    }
    match f {
        Formula::Eq(a, b) => {
            let va = eval_term(a, desc, env)?;
            let vb = eval_term(b, desc, env)?;
            if va.sub(&vb)?.is_zero() {
                Ok(DecisionResult::yes(None, "terms agree at working precision"))
            } else {
                Ok(DecisionResult::no("terms differ"))
            }
        }
        Formula::Pn(n, t) => is_nth_power_valued(&eval_term(t, desc, env)?, *n),
        Formula::Not(g) => {
            let r = evaluate(g, desc, handle, env, opts)?;
            Ok(DecisionResult {
                decision: r.decision.not(),
                witness: None,
                certificate: r.certificate,
            })
        }
        Formula::And(a, b) => {
            let ra = evaluate(a, desc, handle, env, opts)?;
            if ra.decision == Decision::False {
                return Ok(ra);
            }
            let rb = evaluate(b, desc, handle, env, opts)?;
            Ok(DecisionResult {
                decision: ra.decision.and(rb.decision),
                witness: None,
                certificate: [ra.certificate, rb.certificate].concat(),
            })
        }
        Formula::Or(a, b) => {
            let ra = evaluate(a, desc, handle, env, opts)?;
            if ra.decision == Decision::True {
                return Ok(ra);
            }
            let rb = evaluate(b, desc, handle, env, opts)?;
            Ok(DecisionResult {
                decision: ra.decision.or(rb.decision),
                witness: rb.witness,
                certificate: [ra.certificate, rb.certificate].concat(),
            })
        }
        Formula::Exists(y, body) => {
            if let Some((_, n, artin_schreier, rhs)) = match_solvability(f) {
                let c = eval_term(rhs, desc, env)?;
                let res = if artin_schreier {
                    let setting = Setting::new(desc, handle, n)?;
                    if setting.case == CaseKind::KummerZeta {
                        return Err(VfError::Unsupported(
                            "no Artin–Schreier case applies here".into(),
                        ));
                    }
                    solvers::solve(&setting, &c)?
                } else {
                    is_nth_power_valued(&c, n)?
                };
                return Ok(res.push("existential reduced to a solvability test"));
            }
            if opts.pool.is_empty() {
                return Err(VfError::Unsupported(
                    "existential quantifier needs a witness pool".into(),
                ));
            }
            for w in &opts.pool {
                let mut env2 = env.clone();
                env2.insert(y.clone(), w.clone());
                let r = evaluate(body, desc, handle, &env2, opts)?;
                if r.decision == Decision::True {
                    return Ok(DecisionResult::yes(
                        Some(w.clone()),
                        format!("pool witness for {y}"),
                    ));
                }
            }
            Ok(DecisionResult::indeterminate(
                "no pool element witnessed the existential",
            ))
        }
        Formula::Forall(y, body) => {
            if opts.pool.is_empty() {
                return Err(VfError::Unsupported(
                    "universal quantifier needs a witness pool".into(),
                ));
            }
            for w in &opts.pool {
                let mut env2 = env.clone();
                env2.insert(y.clone(), w.clone());
                let r = evaluate(body, desc, handle, &env2, opts)?;
                if r.decision == Decision::False {
                    return Ok(DecisionResult {
                        decision: Decision::False,
                        witness: Some(w.clone()),
                        certificate: vec![format!("pool counterexample for {y}")],
                    });
                }
            }
            Ok(DecisionResult::indeterminate(
                "no pool element refuted the universal",
            ))
        }
    }
}

/// Replace every P_n(t) with E w_k. w_k ^ n = t, using fresh variables.
pub fn eliminate_power_predicates(f: &Formula) -> Formula {
    fn go(f: &Formula, counter: &mut usize) -> Formula {
        match f {
            Formula::Eq(..) => f.clone(),
            Formula::Pn(n, t) => {
                *counter += 1;
                let w = format!("w{counter}");
                Formula::exists(
                    &w,
                    Formula::Eq(Term::Pow(Box::new(Term::Var(w.clone())), *n), t.clone()),
                )
            }
            Formula::Not(g) => go(g, counter).not(),
            Formula::And(a, b) => go(a, counter).and(go(b, counter)),
            Formula::Or(a, b) => go(a, counter).or(go(b, counter)),
            Formula::Exists(v, g) => Formula::Exists(v.clone(), Box::new(go(g, counter))),
            Formula::Forall(v, g) => Formula::Forall(v.clone(), Box::new(go(g, counter))),
        }
    }
    go(f, &mut 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valued_fields::{parse_descriptor, parse_element_expr};
    use proptest::prelude::*;

    #[test]
    fn parse_print_basics() {
        for src in [
            "x = 0",
            "E y. y ^ 2 = (1 + x)",
            "P_3((x * x))",
            "!((x = 0) & (y = 1))",
            "A z. ((z = 0) | P_2(z))",
            "(- x) = (1 + (1 + 1))",
        ] {
            let f = parse_formula(src).unwrap();
            let printed = f.to_string();
            assert_eq!(parse_formula(&printed).unwrap(), f, "{src} -> {printed}");
        }
    }

    #[test]
    fn numerals_expand_to_sums_of_one() {
        let t = parse_term("3").unwrap();
        assert_eq!(
            t,
            Term::Add(
                Box::new(Term::Add(Box::new(Term::One), Box::new(Term::One))),
                Box::new(Term::One)
            )
        );
        assert_eq!(parse_term("0").unwrap(), Term::Zero);
        assert!(!t.to_string().contains('3'));
    }

    #[test]
    fn parser_reports_positions() {
        let err = parse_formula("x = $").unwrap_err();
        assert!(err.to_string().contains("byte 4"), "{err}");
        assert!(parse_formula("E . x = 0").is_err());
        assert!(parse_formula("P_0(x)").is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(
            classify(&parse_formula("x = 1 & P_2(x)").unwrap()),
            FormulaClass::QuantifierFree
        );
        assert_eq!(
            classify(&parse_formula("E y. y ^ 2 = x").unwrap()),
            FormulaClass::SolvabilityPattern
        );
        assert_eq!(
            classify(&parse_formula("E y. y ^ 3 - y = x").unwrap()),
            FormulaClass::SolvabilityPattern
        );
        assert_eq!(
            classify(&robinson_schema(5)),
            FormulaClass::SolvabilityPattern
        );
        assert_eq!(classify(&phi_z_schema(2, false)), FormulaClass::SolvabilityPattern);
        assert_eq!(
            classify(&parse_formula("A y. y * x = x * y").unwrap()),
            FormulaClass::BoundedSearch
        );
    }

    #[test]
    fn schema_shapes() {
        for p in [2u64, 3, 5] {
            for case_as in [false, true] {
                let f = phi_z_schema(p, case_as);
                let (e, u) = f.quantifier_counts();
                assert_eq!(e, 3);
                assert_eq!(u, 2 * (p * p) as usize);
                assert_eq!(f.free_vars(), vec!["x".to_string()]);
                let printed = f.to_string();
                assert_eq!(parse_formula(&printed).unwrap(), f);
                assert_eq!(match_schema(&f), Some(Schema::PhiZ { p, artin_schreier: case_as }));
            }
            let r = robinson_schema(p);
            assert_eq!(r.quantifier_counts(), (1, 0));
            assert_eq!(match_schema(&r), Some(Schema::Robinson { p }));
        }
    }

    #[test]
    fn golden_schema_prints() {
        assert_eq!(
            robinson_schema(3).to_string(),
            "E y. (y * y) = (1 + (((1 + 1) + 1) * (x * x)))"
        );
        let phi = phi_z_schema(2, false).to_string();
        assert!(phi.starts_with("E a. E y. E y0. A y1. A y2. A y3. A y4. A z1. A z2. A z3. A z4. "));
        assert!(phi.contains("!(a = 0)"));
        assert!(phi.contains("((y ^ 2) + (- 1))"));
    }

    #[test]
    fn evaluation_over_q5() {
        let q5 = parse_descriptor("Qp(5)").unwrap();
        let h = q5.full_handle();
        let opts = EvalOptions::default();
        let mut env = Assignment::new();
        env.insert("x".into(), parse_element_expr(&q5, "6").unwrap());
        // 6 = 1 mod 5 is a square in Q_5
        let f = parse_formula("P_2(x)").unwrap();
        assert_eq!(
            evaluate(&f, &q5, h, &env, &opts).unwrap().decision,
            Decision::True
        );
        let f = parse_formula("E y. y ^ 2 = x").unwrap();
        assert_eq!(
            evaluate(&f, &q5, h, &env, &opts).unwrap().decision,
            Decision::True
        );
        env.insert("x".into(), parse_element_expr(&q5, "5").unwrap());
        assert_eq!(
            evaluate(&f, &q5, h, &env, &opts).unwrap().decision,
            Decision::False
        );
        // registered square schema agrees with integrality
        let rob = robinson_schema(5);
        env.insert("x".into(), parse_element_expr(&q5, "7").unwrap());
        assert_eq!(
            evaluate(&rob, &q5, h, &env, &opts).unwrap().decision,
            Decision::True
        );
        env.insert("x".into(), parse_element_expr(&q5, "1/5").unwrap());
        assert_eq!(
            evaluate(&rob, &q5, h, &env, &opts).unwrap().decision,
            Decision::False
        );
    }

    #[test]
    fn membership_schema_evaluates_semantically() {
        let k = parse_descriptor("Laurent(Fp(3))").unwrap();
        let h = k.full_handle();
        let opts = EvalOptions::default();
        let phi = phi_z_schema(2, false);
        let mut env = Assignment::new();
        env.insert("x".into(), parse_element_expr(&k, "1 + t").unwrap());
        assert_eq!(
            evaluate(&phi, &k, h, &env, &opts).unwrap().decision,
            Decision::True
        );
        env.insert("x".into(), parse_element_expr(&k, "t^-1").unwrap());
        assert_eq!(
            evaluate(&phi, &k, h, &env, &opts).unwrap().decision,
            Decision::False
        );
    }

    #[test]
    fn pool_search_semantics() {
        let q5 = parse_descriptor("Qp(5)").unwrap();
        let h = q5.full_handle();
        let pool: Vec<_> = (0..5)
            .map(|i| FieldElement::from_i64(&q5, i))
            .collect();
        let opts = EvalOptions { pool, seed: 0 };
        let env = Assignment::new();
        // A y. y = 0 is refuted by the pool
        let f = parse_formula("A y. y = 0").unwrap();
        assert_eq!(
            evaluate(&f, &q5, h, &env, &opts).unwrap().decision,
            Decision::False
        );
        // A y. y * 0 = 0 survives the pool but is not proven
        let f = parse_formula("A y. y * 0 = 0").unwrap();
        assert_eq!(
            evaluate(&f, &q5, h, &env, &opts).unwrap().decision,
            Decision::Indeterminate
        );
        // empty pool: quantifier is unsupported
        let f = parse_formula("A y. y = 0").unwrap();
        assert!(evaluate(&f, &q5, h, &env, &EvalOptions::default()).is_err());
    }

    #[test]
    fn power_predicate_elimination() {
        let f = parse_formula("P_2(x) & !(P_3(x + 1))").unwrap();
        let g = eliminate_power_predicates(&f);
        assert_eq!(
            g.to_string(),
            "((E w1. (w1 ^ 2) = x) & (!(E w2. (w2 ^ 3) = (x + 1))))"
        );
        // semantics preserved on a decidable instance
        let q5 = parse_descriptor("Qp(5)").unwrap();
        let h = q5.full_handle();
        let mut env = Assignment::new();
        env.insert("x".into(), parse_element_expr(&q5, "4").unwrap());
        let opts = EvalOptions::default();
        let a = evaluate(&f, &q5, h, &env, &opts).unwrap().decision;
        let b = evaluate(&g, &q5, h, &env, &opts).unwrap().decision;
        assert_eq!(a, b);
    }

    fn arb_term(depth: u32) -> BoxedStrategy<Term> {
        let leaf = prop_oneof![
            Just(Term::Zero),
            Just(Term::One),
            "[a-d]".prop_map(Term::Var),
        ];
        leaf.prop_recursive(depth, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|t| Term::Neg(Box::new(t))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Term::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Term::Mul(Box::new(a), Box::new(b))),
                (inner, 1u64..6).prop_map(|(t, n)| Term::Pow(Box::new(t), n)),
            ]
        })
        .boxed()
    }

    fn arb_formula() -> BoxedStrategy<Formula> {
        let atom = prop_oneof![
            (arb_term(3), arb_term(3)).prop_map(|(a, b)| Formula::Eq(a, b)),
            (2u64..6, arb_term(3)).prop_map(|(n, t)| Formula::Pn(n, t)),
        ];
        atom.prop_recursive(6, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
                ("[x-z]", inner.clone()).prop_map(|(v, f)| Formula::Exists(v, Box::new(f))),
                ("[x-z]", inner).prop_map(|(v, f)| Formula::Forall(v, Box::new(f))),
            ]
        })
        .boxed()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn printer_parser_round_trip(f in arb_formula()) {
            let printed = f.to_string();
            let reparsed = parse_formula(&printed).unwrap();
            prop_assert_eq!(reparsed, f);
        }
    }
}
