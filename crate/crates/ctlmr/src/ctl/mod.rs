//! CTL formulas: concrete syntax, abstract syntax, normalization to the
//! `{atomic, ¬, ∨, EX, EG, EU}` basis, and atomic-predicate evaluation on
//! state markings.
//!
//! Labels are computed, not stored: an atomic predicate compares token
//! counts of named places (`m(Active) != m(Memory)`), and a state's label
//! set is whatever predicates evaluate to true on its marking. No marking
//! comparison holds on the error state, so compound predicates follow the
//! usual propositional semantics over an empty label set there, while the
//! constant `true` keeps denoting the whole state space.

mod parser;

use std::fmt;

use crate::kripke::StateRecord;
use crate::{Error, Result};

pub use parser::parse;

/// Comparison operator between two marking terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    fn apply(self, a: i64, b: i64) -> bool {
        match self {
            Cmp::Eq => a == b,
            Cmp::Ne => a != b,
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
            Cmp::Gt => a > b,
            Cmp::Ge => a >= b,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "=",
            Cmp::Ne => "!=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }
}

/// A term inside an atomic predicate: a place's token count or a constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Place(String),
    Const(i64),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Place(name) => write!(f, "m({name})"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

/// State predicate over a marking. Comparisons are the atomic propositions;
/// connectives allow compound predicates like the benchmark properties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomicPredicate {
    True,
    False,
    Cmp(Term, Cmp, Term),
    Not(Box<AtomicPredicate>),
    And(Box<AtomicPredicate>, Box<AtomicPredicate>),
    Or(Box<AtomicPredicate>, Box<AtomicPredicate>),
}

impl fmt::Display for AtomicPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomicPredicate::True => write!(f, "true"),
            AtomicPredicate::False => write!(f, "false"),
            AtomicPredicate::Cmp(a, op, b) => write!(f, "{a} {} {b}", op.symbol()),
            AtomicPredicate::Not(p) => write!(f, "!({p})"),
            AtomicPredicate::And(a, b) => write!(f, "({a} & {b})"),
            AtomicPredicate::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

impl AtomicPredicate {
    pub fn cmp(a: Term, op: Cmp, b: Term) -> Self {
        AtomicPredicate::Cmp(a, op, b)
    }

    /// Resolves every place name against the given place list, yielding an
    /// index-based predicate that can never fail during evaluation.
    pub fn resolve(&self, place_names: &[String]) -> Result<ResolvedPredicate> {
        let node = self.resolve_node(place_names)?;
        Ok(ResolvedPredicate(node))
    }

    fn resolve_node(&self, place_names: &[String]) -> Result<PredNode> {
        Ok(match self {
            AtomicPredicate::True => PredNode::Const(true),
            AtomicPredicate::False => PredNode::Const(false),
            AtomicPredicate::Cmp(a, op, b) => PredNode::Cmp(
                resolve_term(a, place_names)?,
                *op,
                resolve_term(b, place_names)?,
            ),
            AtomicPredicate::Not(p) => PredNode::Not(Box::new(p.resolve_node(place_names)?)),
            AtomicPredicate::And(a, b) => PredNode::And(
                Box::new(a.resolve_node(place_names)?),
                Box::new(b.resolve_node(place_names)?),
            ),
            AtomicPredicate::Or(a, b) => PredNode::Or(
                Box::new(a.resolve_node(place_names)?),
                Box::new(b.resolve_node(place_names)?),
            ),
        })
    }
}

fn resolve_term(term: &Term, place_names: &[String]) -> Result<ResolvedTerm> {
    Ok(match term {
        Term::Const(c) => ResolvedTerm::Const(*c),
        Term::Place(name) => {
            let index = place_names
                .iter()
                .position(|p| p == name)
                .ok_or_else(|| Error::UnknownPlace(name.clone()))?;
            ResolvedTerm::Place(index)
        }
    })
}

#[derive(Debug, Clone)]
enum ResolvedTerm {
    Place(usize),
    Const(i64),
}

#[derive(Debug, Clone)]
enum PredNode {
    Const(bool),
    Cmp(ResolvedTerm, Cmp, ResolvedTerm),
    Not(Box<PredNode>),
    And(Box<PredNode>, Box<PredNode>),
    Or(Box<PredNode>, Box<PredNode>),
}

/// An [`AtomicPredicate`] with all place names resolved to marking indices.
#[derive(Debug, Clone)]
pub struct ResolvedPredicate(PredNode);

impl ResolvedPredicate {
    /// Pure function of the record's marking. Marking comparisons never hold
    /// on the error state (its label set is empty); constants and
    /// connectives keep their propositional meaning.
    pub fn eval(&self, record: &StateRecord) -> bool {
        eval_node(&self.0, record)
    }
}

fn eval_node(node: &PredNode, record: &StateRecord) -> bool {
    match node {
        PredNode::Const(b) => *b,
        PredNode::Cmp(a, op, b) => {
            if record.is_error {
                return false;
            }
            op.apply(term_value(a, record), term_value(b, record))
        }
        PredNode::Not(p) => !eval_node(p, record),
        PredNode::And(a, b) => eval_node(a, record) && eval_node(b, record),
        PredNode::Or(a, b) => eval_node(a, record) || eval_node(b, record),
    }
}

fn term_value(term: &ResolvedTerm, record: &StateRecord) -> i64 {
    match term {
        ResolvedTerm::Place(index) => i64::from(record.marking[*index]),
        ResolvedTerm::Const(c) => *c,
    }
}

/// Convenience wrapper: resolve against `place_names` and evaluate on one
/// record. Callers that evaluate many records should resolve once instead.
pub fn eval_atomic(
    predicate: &AtomicPredicate,
    place_names: &[String],
    record: &StateRecord,
) -> Result<bool> {
    Ok(predicate.resolve(place_names)?.eval(record))
}

/// Surface CTL syntax: every temporal operator is a path quantifier (`A`
/// or `E`) immediately followed by `X`, `F`, `G`, or `U`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Atomic(AtomicPredicate),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    AX(Box<Formula>),
    EX(Box<Formula>),
    AF(Box<Formula>),
    EF(Box<Formula>),
    AG(Box<Formula>),
    EG(Box<Formula>),
    AU(Box<Formula>, Box<Formula>),
    EU(Box<Formula>, Box<Formula>),
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atomic(p) => write!(f, "{p}"),
            Formula::Not(x) => write!(f, "!{x}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::AX(x) => write!(f, "AX {x}"),
            Formula::EX(x) => write!(f, "EX {x}"),
            Formula::AF(x) => write!(f, "AF {x}"),
            Formula::EF(x) => write!(f, "EF {x}"),
            Formula::AG(x) => write!(f, "AG {x}"),
            Formula::EG(x) => write!(f, "EG {x}"),
            Formula::AU(a, b) => write!(f, "A[{a} U {b}]"),
            Formula::EU(a, b) => write!(f, "E[{a} U {b}]"),
        }
    }
}

/// Formula restricted to the `{atomic, ¬, ∨, EX, EG, EU}` basis — the only
/// shapes the distributed evaluator has to handle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormalFormula {
    Atomic(AtomicPredicate),
    Not(Box<NormalFormula>),
    Or(Box<NormalFormula>, Box<NormalFormula>),
    EX(Box<NormalFormula>),
    EG(Box<NormalFormula>),
    EU(Box<NormalFormula>, Box<NormalFormula>),
}

impl fmt::Display for NormalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalFormula::Atomic(p) => write!(f, "{p}"),
            NormalFormula::Not(x) => write!(f, "!{x}"),
            NormalFormula::Or(a, b) => write!(f, "({a} | {b})"),
            NormalFormula::EX(x) => write!(f, "EX {x}"),
            NormalFormula::EG(x) => write!(f, "EG {x}"),
            NormalFormula::EU(a, b) => write!(f, "E[{a} U {b}]"),
        }
    }
}

impl From<NormalFormula> for Formula {
    fn from(n: NormalFormula) -> Formula {
        match n {
            NormalFormula::Atomic(p) => Formula::Atomic(p),
            NormalFormula::Not(x) => Formula::Not(Box::new((*x).into())),
            NormalFormula::Or(a, b) => Formula::Or(Box::new((*a).into()), Box::new((*b).into())),
            NormalFormula::EX(x) => Formula::EX(Box::new((*x).into())),
            NormalFormula::EG(x) => Formula::EG(Box::new((*x).into())),
            NormalFormula::EU(a, b) => Formula::EU(Box::new((*a).into()), Box::new((*b).into())),
        }
    }
}

/// Negation that cancels double negations, so the rewrites below never pile
/// up `!!`.
fn neg(f: NormalFormula) -> NormalFormula {
    match f {
        NormalFormula::Not(inner) => *inner,
        other => NormalFormula::Not(Box::new(other)),
    }
}

fn or(a: NormalFormula, b: NormalFormula) -> NormalFormula {
    NormalFormula::Or(Box::new(a), Box::new(b))
}

/// Conjunction via De Morgan: `a & b  ==  !(!a | !b)`.
fn and(a: NormalFormula, b: NormalFormula) -> NormalFormula {
    neg(or(neg(a), neg(b)))
}

/// Rewrites a formula into the basis:
///
/// * `AX φ` → `¬EX ¬φ`
/// * `EF φ` → `E[true U φ]`
/// * `AF φ` → `¬EG ¬φ`
/// * `AG φ` → `¬E[true U ¬φ]`
/// * `A[φ U ψ]` → `¬E[¬ψ U (¬φ ∧ ¬ψ)] ∧ ¬EG ¬ψ`
/// * `φ ∧ ψ` → `¬(¬φ ∨ ¬ψ)`
///
/// The result is semantically equivalent and `normalize` is idempotent.
pub fn normalize(f: &Formula) -> NormalFormula {
    match f {
        Formula::Atomic(p) => NormalFormula::Atomic(p.clone()),
        Formula::Not(x) => neg(normalize(x)),
        Formula::And(a, b) => and(normalize(a), normalize(b)),
        Formula::Or(a, b) => or(normalize(a), normalize(b)),
        Formula::AX(x) => neg(NormalFormula::EX(Box::new(neg(normalize(x))))),
        Formula::EX(x) => NormalFormula::EX(Box::new(normalize(x))),
        Formula::AF(x) => neg(NormalFormula::EG(Box::new(neg(normalize(x))))),
        Formula::EF(x) => NormalFormula::EU(
            Box::new(NormalFormula::Atomic(AtomicPredicate::True)),
            Box::new(normalize(x)),
        ),
        Formula::AG(x) => neg(NormalFormula::EU(
            Box::new(NormalFormula::Atomic(AtomicPredicate::True)),
            Box::new(neg(normalize(x))),
        )),
        Formula::EG(x) => NormalFormula::EG(Box::new(normalize(x))),
        Formula::EU(a, b) => NormalFormula::EU(Box::new(normalize(a)), Box::new(normalize(b))),
        Formula::AU(a, b) => {
            let na = neg(normalize(a));
            let nb = neg(normalize(b));
            let eu = NormalFormula::EU(Box::new(nb.clone()), Box::new(and(na, nb.clone())));
            let eg = NormalFormula::EG(Box::new(nb));
            and(neg(eu), neg(eg))
        }
    }
}

/// Every place name mentioned anywhere in the formula.
pub fn place_names(f: &Formula) -> Vec<String> {
    fn walk_pred(p: &AtomicPredicate, out: &mut Vec<String>) {
        match p {
            AtomicPredicate::True | AtomicPredicate::False => {}
            AtomicPredicate::Cmp(a, _, b) => {
                for t in [a, b] {
                    if let Term::Place(name) = t {
                        if !out.contains(name) {
                            out.push(name.clone());
                        }
                    }
                }
            }
            AtomicPredicate::Not(x) => walk_pred(x, out),
            AtomicPredicate::And(a, b) | AtomicPredicate::Or(a, b) => {
                walk_pred(a, out);
                walk_pred(b, out);
            }
        }
    }
    fn walk(f: &Formula, out: &mut Vec<String>) {
        match f {
            Formula::Atomic(p) => walk_pred(p, out),
            Formula::Not(x)
            | Formula::AX(x)
            | Formula::EX(x)
            | Formula::AF(x)
            | Formula::EF(x)
            | Formula::AG(x)
            | Formula::EG(x) => walk(x, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::AU(a, b) | Formula::EU(a, b) => {
                walk(a, out);
                walk(b, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(f, &mut out);
    out
}
