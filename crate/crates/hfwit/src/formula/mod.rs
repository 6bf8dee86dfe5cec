//! Terms and negation-normal-form formulas over ∈, =, function symbols and
//! the 𝒟 predicate, together with class conditions.

mod classify;
mod eval;
pub(crate) mod parse;
mod witness;

pub use classify::{
    check_stratified, classify, is_delta0, sigma1_parts, Clause, FormulaClass, StratViolation,
};
pub use eval::{class_members, condition_members, eval, eval_term, EvalCtx, Universe, Valuation};
pub use parse::{parse_condition, parse_formula, parse_term, ParseOpts};
pub use witness::{
    expand_classes, expand_classes_term, fun_on, not_unique, not_unique_in, replace_param,
    replace_param_term, tuple, tuple_component, unique_in, witness_bang_predicate,
    witness_predicate,
};

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::classes::FunctionDef;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Normal,
    Safe,
    Plain,
}

impl Sort {
    pub fn name(self) -> &'static str {
        match self {
            Sort::Normal => "normal",
            Sort::Safe => "safe",
            Sort::Plain => "plain",
        }
    }
}

/// A variable. Identity is the name; the sort is an annotation.
#[derive(Clone, Debug)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl PartialEq for Var {
    fn eq(&self, o: &Self) -> bool {
        self.name == o.name
    }
}
impl Eq for Var {}
impl Hash for Var {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.name.hash(h)
    }
}
impl PartialOrd for Var {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Var {
    fn cmp(&self, o: &Self) -> Ordering {
        self.name.cmp(&o.name)
    }
}

/// Function symbol: a registry name or an inline definition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    Name(String),
    Def(Arc<FunctionDef>),
}

impl Sym {
    pub fn label(&self) -> String {
        match self {
            Sym::Name(n) => n.clone(),
            Sym::Def(d) => d.name.clone(),
        }
    }
}

/// Terms. Besides variables, 0 and applications, witness terms use a few
/// comprehension forms; each denotes an anonymous set function of its free
/// variables and compiles to a `FunctionDef`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Zero,
    App(Sym, Vec<Term>, Vec<Term>),
    /// `∪{body : y ∈ bound}`
    BUnion(String, Box<Term>, Box<Term>),
    /// `{body : y ∈ bound}`
    Image(String, Box<Term>, Box<Term>),
    /// `{y ∈ bound : φ}`
    Sep(String, Box<Term>, Box<Formula>),
    /// `e1` if φ else `e2`
    Cases(Box<Formula>, Box<Term>, Box<Term>),
    /// the unique member of `{body : y ∈ bound}`, else ∅
    Iota(String, Box<Term>, Box<Term>),
    /// `F(arg)` where `F(x) = step[x, prev := {F(z) : z ∈ x}]`
    Rec(Box<RecTerm>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecTerm {
    pub x: String,
    pub prev: String,
    pub step: Term,
    pub arg: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    In(Term, Term),
    NotIn(Term, Term),
    Eq(Term, Term),
    Neq(Term, Term),
    DPred(Term),
    NotDPred(Term),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    BEx(String, Term, Box<Formula>),
    BAll(String, Term, Box<Formula>),
    Ex(String, Box<Formula>),
    All(String, Box<Formula>),
    ExBang(String, Box<Formula>),
    /// `∀!v φ`, i.e. `¬∃!v ¬φ`.
    AllBangNeg(String, Box<Formula>),
    /// `∀d ∈ X φ` for a class `X`.
    ClassAll(String, ClassRef, Box<Formula>),
    /// `∃d ∈ X φ`.
    ClassEx(String, ClassRef, Box<Formula>),
}

/// A class: either the class parameter `X` or one given by a condition.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassRef {
    Param,
    Cond(Box<Condition>),
}

/// Conditions `λ(*)`; `X_λ = {d : λ(*:=d)}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Point(Term),
    Or(Box<Condition>, Box<Condition>),
    BEx(String, Term, Box<Condition>),
}

// ---------------------------------------------------------------- builders

pub fn var(name: &str) -> Term {
    Term::Var(Var {
        name: name.to_string(),
        sort: Sort::Plain,
    })
}

pub fn nvar(name: &str) -> Term {
    Term::Var(Var {
        name: name.to_string(),
        sort: Sort::Normal,
    })
}

pub fn svar(name: &str) -> Term {
    Term::Var(Var {
        name: name.to_string(),
        sort: Sort::Safe,
    })
}

pub fn sorted_var(name: &str, sort: Sort) -> Term {
    Term::Var(Var {
        name: name.to_string(),
        sort,
    })
}

/// Application of a named symbol with all arguments in safe position.
pub fn app(name: &str, args: Vec<Term>) -> Term {
    Term::App(Sym::Name(name.to_string()), vec![], args)
}

/// Application of a named symbol with an explicit normal/safe split.
pub fn app2(name: &str, normals: Vec<Term>, safes: Vec<Term>) -> Term {
    Term::App(Sym::Name(name.to_string()), normals, safes)
}

pub fn and(a: Formula, b: Formula) -> Formula {
    Formula::And(Box::new(a), Box::new(b))
}

pub fn or(a: Formula, b: Formula) -> Formula {
    Formula::Or(Box::new(a), Box::new(b))
}

pub fn truth() -> Formula {
    Formula::Eq(Term::Zero, Term::Zero)
}

pub fn falsity() -> Formula {
    Formula::Neq(Term::Zero, Term::Zero)
}

pub fn and_all(v: Vec<Formula>) -> Formula {
    let mut it = v.into_iter().rev();
    match it.next() {
        None => truth(),
        Some(last) => it.fold(last, |acc, f| and(f, acc)),
    }
}

pub fn or_all(v: Vec<Formula>) -> Formula {
    let mut it = v.into_iter().rev();
    match it.next() {
        None => falsity(),
        Some(last) => it.fold(last, |acc, f| or(f, acc)),
    }
}

pub fn bex(v: &str, t: Term, f: Formula) -> Formula {
    Formula::BEx(v.to_string(), t, Box::new(f))
}

pub fn ball(v: &str, t: Term, f: Formula) -> Formula {
    Formula::BAll(v.to_string(), t, Box::new(f))
}

pub fn ex(v: &str, f: Formula) -> Formula {
    Formula::Ex(v.to_string(), Box::new(f))
}

pub fn all(v: &str, f: Formula) -> Formula {
    Formula::All(v.to_string(), Box::new(f))
}

pub fn exbang(v: &str, f: Formula) -> Formula {
    Formula::ExBang(v.to_string(), Box::new(f))
}

pub fn singleton(t: Term) -> Term {
    app("singleton", vec![t])
}

pub fn apply(c: Term, x: Term) -> Term {
    app("apply", vec![c, x])
}

/// Flattens nested conjunctions.
pub fn conjuncts(f: &Formula) -> Vec<&Formula> {
    let mut out = Vec::new();
    fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
        match f {
            Formula::And(a, b) => {
                go(a, out);
                go(b, out);
            }
            _ => out.push(f),
        }
    }
    go(f, &mut out);
    out
}

/// Flattens nested disjunctions.
pub fn disjuncts(f: &Formula) -> Vec<&Formula> {
    let mut out = Vec::new();
    fn go<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
        match f {
            Formula::Or(a, b) => {
                go(a, out);
                go(b, out);
            }
            _ => out.push(f),
        }
    }
    go(f, &mut out);
    out
}

// ---------------------------------------------------------------- fresh names

thread_local! {
    static FRESH: Cell<usize> = const { Cell::new(0) };
}

/// Names starting with `%` are reserved for generated variables.
pub const RESERVED: char = '%';

pub fn fresh(base: &str) -> String {
    let base: String = base
        .chars()
        .filter(|c| c.is_ascii_alphabetic())
        .take(4)
        .collect();
    let base = if base.is_empty() {
        "v".to_string()
    } else {
        base
    };
    FRESH.with(|c| {
        let n = c.get();
        c.set(n + 1);
        format!("{}{}{}", RESERVED, base, n)
    })
}

/// Restarts the fresh-name counter of the current thread.
pub fn reset_fresh() {
    FRESH.with(|c| c.set(0));
}

// ---------------------------------------------------------------- negation

pub fn negate(f: &Formula) -> Formula {
    use Formula::*;
    match f {
        In(a, b) => NotIn(a.clone(), b.clone()),
        NotIn(a, b) => In(a.clone(), b.clone()),
        Eq(a, b) => Neq(a.clone(), b.clone()),
        Neq(a, b) => Eq(a.clone(), b.clone()),
        DPred(t) => NotDPred(t.clone()),
        NotDPred(t) => DPred(t.clone()),
        Or(a, b) => And(Box::new(negate(a)), Box::new(negate(b))),
        And(a, b) => Or(Box::new(negate(a)), Box::new(negate(b))),
        BEx(v, t, p) => BAll(v.clone(), t.clone(), Box::new(negate(p))),
        BAll(v, t, p) => BEx(v.clone(), t.clone(), Box::new(negate(p))),
        Ex(v, p) => All(v.clone(), Box::new(negate(p))),
        All(v, p) => Ex(v.clone(), Box::new(negate(p))),
        ExBang(v, p) => AllBangNeg(v.clone(), Box::new(negate(p))),
        AllBangNeg(v, p) => ExBang(v.clone(), Box::new(negate(p))),
        ClassAll(v, c, p) => ClassEx(v.clone(), c.clone(), Box::new(negate(p))),
        ClassEx(v, c, p) => ClassAll(v.clone(), c.clone(), Box::new(negate(p))),
    }
}

// ---------------------------------------------------------------- free variables

pub fn fv_term(t: &Term) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    add_fv_term(t, &mut s);
    s
}

pub fn fv_formula(f: &Formula) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    add_fv_formula(f, &mut s);
    s
}

pub fn fv_condition(c: &Condition) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    add_fv_condition(c, &mut s);
    s
}

fn bound_scope(v: &str, inner: BTreeSet<String>, out: &mut BTreeSet<String>) {
    for x in inner {
        if x != v {
            out.insert(x);
        }
    }
}

pub fn add_fv_term(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Var(v) => {
            out.insert(v.name.clone());
        }
        Term::Zero => {}
        Term::App(_, ns, ss) => {
            for a in ns.iter().chain(ss) {
                add_fv_term(a, out);
            }
        }
        Term::BUnion(y, b, e) | Term::Image(y, b, e) | Term::Iota(y, b, e) => {
            add_fv_term(b, out);
            bound_scope(y, fv_term(e), out);
        }
        Term::Sep(y, b, f) => {
            add_fv_term(b, out);
            bound_scope(y, fv_formula(f), out);
        }
        Term::Cases(f, a, b) => {
            add_fv_formula(f, out);
            add_fv_term(a, out);
            add_fv_term(b, out);
        }
        Term::Rec(r) => {
            add_fv_term(&r.arg, out);
            for x in fv_term(&r.step) {
                if x != r.x && x != r.prev {
                    out.insert(x);
                }
            }
        }
    }
}

pub fn add_fv_formula(f: &Formula, out: &mut BTreeSet<String>) {
    use Formula::*;
    match f {
        In(a, b) | NotIn(a, b) | Eq(a, b) | Neq(a, b) => {
            add_fv_term(a, out);
            add_fv_term(b, out);
        }
        DPred(t) | NotDPred(t) => add_fv_term(t, out),
        Or(a, b) | And(a, b) => {
            add_fv_formula(a, out);
            add_fv_formula(b, out);
        }
        BEx(v, t, p) | BAll(v, t, p) => {
            add_fv_term(t, out);
            bound_scope(v, fv_formula(p), out);
        }
        Ex(v, p) | All(v, p) | ExBang(v, p) | AllBangNeg(v, p) => {
            bound_scope(v, fv_formula(p), out)
        }
        ClassAll(v, c, p) | ClassEx(v, c, p) => {
            if let ClassRef::Cond(l) = c {
                add_fv_condition(l, out);
            }
            bound_scope(v, fv_formula(p), out);
        }
    }
}

pub fn add_fv_condition(c: &Condition, out: &mut BTreeSet<String>) {
    match c {
        Condition::Point(t) => add_fv_term(t, out),
        Condition::Or(a, b) => {
            add_fv_condition(a, out);
            add_fv_condition(b, out);
        }
        Condition::BEx(v, t, l) => {
            add_fv_term(t, out);
            bound_scope(v, fv_condition(l), out);
        }
    }
}

/// Whether the class parameter `X` occurs.
pub fn mentions_param(f: &Formula) -> bool {
    use Formula::*;
    match f {
        In(a, b) | NotIn(a, b) | Eq(a, b) | Neq(a, b) => {
            term_mentions_param(a) || term_mentions_param(b)
        }
        DPred(t) | NotDPred(t) => term_mentions_param(t),
        Or(a, b) | And(a, b) => mentions_param(a) || mentions_param(b),
        BEx(_, t, p) | BAll(_, t, p) => term_mentions_param(t) || mentions_param(p),
        Ex(_, p) | All(_, p) | ExBang(_, p) | AllBangNeg(_, p) => mentions_param(p),
        ClassAll(_, c, p) | ClassEx(_, c, p) => match c {
            ClassRef::Param => true,
            ClassRef::Cond(l) => cond_mentions_param(l) || mentions_param(p),
        },
    }
}

pub fn term_mentions_param(t: &Term) -> bool {
    match t {
        Term::Var(_) | Term::Zero => false,
        Term::App(_, ns, ss) => ns.iter().chain(ss).any(term_mentions_param),
        Term::BUnion(_, b, e) | Term::Image(_, b, e) | Term::Iota(_, b, e) => {
            term_mentions_param(b) || term_mentions_param(e)
        }
        Term::Sep(_, b, f) => term_mentions_param(b) || mentions_param(f),
        Term::Cases(f, a, b) => {
            mentions_param(f) || term_mentions_param(a) || term_mentions_param(b)
        }
        Term::Rec(r) => term_mentions_param(&r.step) || term_mentions_param(&r.arg),
    }
}

fn cond_mentions_param(c: &Condition) -> bool {
    match c {
        Condition::Point(t) => term_mentions_param(t),
        Condition::Or(a, b) => cond_mentions_param(a) || cond_mentions_param(b),
        Condition::BEx(_, t, l) => term_mentions_param(t) || cond_mentions_param(l),
    }
}

// ---------------------------------------------------------------- substitution

/// Simultaneous capture-avoiding substitution. Bound variables that would
/// capture a free variable of a replacement are renamed.
#[derive(Clone, Debug, Default)]
pub struct Subst {
    map: Vec<(String, Term)>,
    renames: Vec<(String, String)>,
    avoid: BTreeSet<String>,
}

impl Subst {
    pub fn new(pairs: Vec<(String, Term)>) -> Subst {
        let mut avoid = BTreeSet::new();
        for (_, t) in &pairs {
            add_fv_term(t, &mut avoid);
        }
        Subst {
            map: pairs,
            renames: Vec::new(),
            avoid,
        }
    }

    pub fn one(v: &str, t: Term) -> Subst {
        Subst::new(vec![(v.to_string(), t)])
    }

    /// Adds names that must not be captured even though they are not
    /// replacements (used when splicing in a condition).
    pub fn avoiding(mut self, names: &BTreeSet<String>) -> Subst {
        self.avoid.extend(names.iter().cloned());
        self
    }

    fn is_empty(&self) -> bool {
        self.map.is_empty() && self.renames.is_empty() && self.avoid.is_empty()
    }

    /// Enters the scope of binder `v`; returns the (possibly renamed) binder
    /// and the substitution to use inside.
    fn enter(&self, v: &str) -> (String, Subst) {
        let mut inner = Subst {
            map: self.map.iter().filter(|(x, _)| x != v).cloned().collect(),
            renames: self
                .renames
                .iter()
                .filter(|(x, _)| x != v)
                .cloned()
                .collect(),
            avoid: self.avoid.clone(),
        };
        if self.avoid.contains(v) {
            let nv = fresh(v.trim_start_matches(RESERVED));
            inner.renames.push((v.to_string(), nv.clone()));
            inner.avoid.insert(nv.clone());
            (nv, inner)
        } else {
            (v.to_string(), inner)
        }
    }

    pub fn term(&self, t: &Term) -> Term {
        if self.is_empty() {
            return t.clone();
        }
        match t {
            Term::Var(v) => {
                if let Some((_, nn)) = self.renames.iter().rev().find(|(x, _)| *x == v.name) {
                    return Term::Var(Var {
                        name: nn.clone(),
                        sort: v.sort,
                    });
                }
                if let Some((_, r)) = self.map.iter().find(|(x, _)| *x == v.name) {
                    return r.clone();
                }
                t.clone()
            }
            Term::Zero => Term::Zero,
            Term::App(s, ns, ss) => Term::App(
                s.clone(),
                ns.iter().map(|a| self.term(a)).collect(),
                ss.iter().map(|a| self.term(a)).collect(),
            ),
            Term::BUnion(y, b, e) => {
                let (ny, inner) = self.enter(y);
                Term::BUnion(ny, Box::new(self.term(b)), Box::new(inner.term(e)))
            }
            Term::Image(y, b, e) => {
                let (ny, inner) = self.enter(y);
                Term::Image(ny, Box::new(self.term(b)), Box::new(inner.term(e)))
            }
            Term::Iota(y, b, e) => {
                let (ny, inner) = self.enter(y);
                Term::Iota(ny, Box::new(self.term(b)), Box::new(inner.term(e)))
            }
            Term::Sep(y, b, f) => {
                let (ny, inner) = self.enter(y);
                Term::Sep(ny, Box::new(self.term(b)), Box::new(inner.formula(f)))
            }
            Term::Cases(f, a, b) => Term::Cases(
                Box::new(self.formula(f)),
                Box::new(self.term(a)),
                Box::new(self.term(b)),
            ),
            Term::Rec(r) => {
                let (nx, i1) = self.enter(&r.x);
                let (np, i2) = i1.enter(&r.prev);
                Term::Rec(Box::new(RecTerm {
                    x: nx,
                    prev: np,
                    step: i2.term(&r.step),
                    arg: self.term(&r.arg),
                }))
            }
        }
    }

    pub fn formula(&self, f: &Formula) -> Formula {
        use Formula::*;
        if self.is_empty() {
            return f.clone();
        }
        match f {
            In(a, b) => In(self.term(a), self.term(b)),
            NotIn(a, b) => NotIn(self.term(a), self.term(b)),
            Eq(a, b) => Eq(self.term(a), self.term(b)),
            Neq(a, b) => Neq(self.term(a), self.term(b)),
            DPred(t) => DPred(self.term(t)),
            NotDPred(t) => NotDPred(self.term(t)),
            Or(a, b) => Or(Box::new(self.formula(a)), Box::new(self.formula(b))),
            And(a, b) => And(Box::new(self.formula(a)), Box::new(self.formula(b))),
            BEx(v, t, p) => {
                let (nv, inner) = self.enter(v);
                BEx(nv, self.term(t), Box::new(inner.formula(p)))
            }
            BAll(v, t, p) => {
                let (nv, inner) = self.enter(v);
                BAll(nv, self.term(t), Box::new(inner.formula(p)))
            }
            Ex(v, p) => {
                let (nv, inner) = self.enter(v);
                Ex(nv, Box::new(inner.formula(p)))
            }
            All(v, p) => {
                let (nv, inner) = self.enter(v);
                All(nv, Box::new(inner.formula(p)))
            }
            ExBang(v, p) => {
                let (nv, inner) = self.enter(v);
                ExBang(nv, Box::new(inner.formula(p)))
            }
            AllBangNeg(v, p) => {
                let (nv, inner) = self.enter(v);
                AllBangNeg(nv, Box::new(inner.formula(p)))
            }
            ClassAll(v, c, p) => {
                let (nv, inner) = self.enter(v);
                ClassAll(nv, self.class(c), Box::new(inner.formula(p)))
            }
            ClassEx(v, c, p) => {
                let (nv, inner) = self.enter(v);
                ClassEx(nv, self.class(c), Box::new(inner.formula(p)))
            }
        }
    }

    fn class(&self, c: &ClassRef) -> ClassRef {
        match c {
            ClassRef::Param => ClassRef::Param,
            ClassRef::Cond(l) => ClassRef::Cond(Box::new(self.condition(l))),
        }
    }

    pub fn condition(&self, c: &Condition) -> Condition {
        if self.is_empty() {
            return c.clone();
        }
        match c {
            Condition::Point(t) => Condition::Point(self.term(t)),
            Condition::Or(a, b) => {
                Condition::Or(Box::new(self.condition(a)), Box::new(self.condition(b)))
            }
            Condition::BEx(v, t, l) => {
                let (nv, inner) = self.enter(v);
                Condition::BEx(nv, self.term(t), Box::new(inner.condition(l)))
            }
        }
    }
}

pub fn subst_formula(f: &Formula, v: &str, t: &Term) -> Formula {
    Subst::one(v, t.clone()).formula(f)
}

pub fn subst_term(e: &Term, v: &str, t: &Term) -> Term {
    Subst::one(v, t.clone()).term(e)
}

pub fn subst_condition(c: &Condition, v: &str, t: &Term) -> Condition {
    Subst::one(v, t.clone()).condition(c)
}

// ---------------------------------------------------------------- printing

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => match v.sort {
                Sort::Plain => write!(f, "{}", v.name),
                s => write!(f, "(var {} {})", v.name, s.name()),
            },
            Term::Zero => write!(f, "zero"),
            Term::App(s, ns, ss) => {
                match s {
                    Sym::Name(n) => write!(f, "(app {} (", n)?,
                    Sym::Def(d) => write!(f, "(app {} (", d)?,
                }
                write_list(f, ns)?;
                write!(f, ") (")?;
                write_list(f, ss)?;
                write!(f, "))")
            }
            Term::BUnion(y, b, e) => write!(f, "(bunion {} {} {})", y, b, e),
            Term::Image(y, b, e) => write!(f, "(image {} {} {})", y, b, e),
            Term::Iota(y, b, e) => write!(f, "(iota {} {} {})", y, b, e),
            Term::Sep(y, b, p) => write!(f, "(sep {} {} {})", y, b, p),
            Term::Cases(p, a, b) => write!(f, "(cases {} {} {})", p, a, b),
            Term::Rec(r) => write!(f, "(rec {} {} {} {})", r.x, r.prev, r.step, r.arg),
        }
    }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, v: &[T]) -> fmt::Result {
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{}", x)?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Formula::*;
        match self {
            In(a, b) => write!(f, "(in {} {})", a, b),
            NotIn(a, b) => write!(f, "(notin {} {})", a, b),
            Eq(a, b) => write!(f, "(eq {} {})", a, b),
            Neq(a, b) => write!(f, "(neq {} {})", a, b),
            DPred(t) => write!(f, "(dpred {})", t),
            NotDPred(t) => write!(f, "(notdpred {})", t),
            Or(a, b) => write!(f, "(or {} {})", a, b),
            And(a, b) => write!(f, "(and {} {})", a, b),
            BEx(v, t, p) => write!(f, "(bex {} {} {})", v, t, p),
            BAll(v, t, p) => write!(f, "(ball {} {} {})", v, t, p),
            Ex(v, p) => write!(f, "(ex {} {})", v, p),
            All(v, p) => write!(f, "(all {} {})", v, p),
            ExBang(v, p) => write!(f, "(exu {} {})", v, p),
            AllBangNeg(v, p) => write!(f, "(allu {} {})", v, p),
            ClassAll(v, c, p) => write!(f, "(call {} {} {})", v, c, p),
            ClassEx(v, c, p) => write!(f, "(cex {} {} {})", v, c, p),
        }
    }
}

impl fmt::Display for ClassRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassRef::Param => write!(f, "X"),
            ClassRef::Cond(c) => write!(f, "{}", c),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Point(t) => write!(f, "(point {})", t),
            Condition::Or(a, b) => write!(f, "(cor {} {})", a, b),
            Condition::BEx(v, t, l) => write!(f, "(cbex {} {} {})", v, t, l),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negation_swaps_pairs() {
        let f = Formula::In(var("a"), var("b"));
        assert_eq!(negate(&f), Formula::NotIn(var("a"), var("b")));
        let g = exbang("a", Formula::Eq(var("a"), var("x")));
        assert_eq!(
            negate(&g),
            Formula::AllBangNeg("a".into(), Box::new(Formula::Neq(var("a"), var("x"))))
        );
    }

    #[test]
    fn substitution_avoids_capture() {
        // ∃y∈x (y ∈ z)[z := y] must rename the binder.
        let f = bex("y", var("x"), Formula::In(var("y"), var("z")));
        let g = subst_formula(&f, "z", &var("y"));
        match &g {
            Formula::BEx(nv, _, body) => {
                assert_ne!(nv, "y");
                assert_eq!(**body, Formula::In(var(nv), var("y")));
            }
            _ => panic!(),
        }
        assert_eq!(
            fv_formula(&g),
            ["x", "y"].iter().map(|s| s.to_string()).collect()
        );
    }

    #[test]
    fn free_variables_respect_binders() {
        let t = Term::BUnion(
            "y".into(),
            Box::new(var("z")),
            Box::new(singleton(var("y"))),
        );
        assert_eq!(fv_term(&t), ["z".to_string()].into_iter().collect());
        let r = Term::Rec(Box::new(RecTerm {
            x: "x".into(),
            prev: "p".into(),
            step: app("union2", vec![var("x"), var("q")]),
            arg: var("w"),
        }));
        assert_eq!(
            fv_term(&r),
            ["q".to_string(), "w".to_string()].into_iter().collect()
        );
    }
}
