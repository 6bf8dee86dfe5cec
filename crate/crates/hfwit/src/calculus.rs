//! Fragment sequent calculi T0, T1, T2 and T3: derivation trees, the rule
//! checker, the occurrence audit and the derivation file format.
//!
//! Sequents are sets of formulas in negation normal form. A rule instance
//! names its principal formulas, eigenvariables and parameter terms; the
//! checker rebuilds the formulas each premise must add and compares
//! sequents up to renaming of bound variables. Weakening is implicit:
//! a premise may omit side formulas of the conclusion.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::classes::{synth_sigma1_bang_at, Registry};
use crate::error::{Error, Result};

use crate::formula::parse::{formula_of, name_of, term_of, ParseOpts};

use crate::formula::*;
use crate::sexpr::{self, Sexp};

// ---------------------------------------------------------------- theories

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Theory {
    T0,
    T1,
    /// Submodel applications may nest at most `budget` deep.
    T2 {
        budget: usize,
    },
    /// Symbols up to `level`; Submodel nesting bounded by `budget`.
    T3 {
        level: usize,
        budget: usize,
    },
}

impl Theory {
    pub fn level(self) -> usize {
        match self {
            Theory::T3 { level, .. } => level,
            _ => 0,
        }
    }

    pub fn budget(self) -> usize {
        match self {
            Theory::T2 { budget } | Theory::T3 { budget, .. } => budget,
            _ => 0,
        }
    }

    pub fn has_d(self) -> bool {
        matches!(self, Theory::T2 { .. } | Theory::T3 { .. })
    }

    pub fn admits(self, r: RuleId) -> bool {
        use RuleId::*;
        let logical = matches!(r, Init | Or | And | BEx | BAll | Ex | All | Cut);
        let axioms = matches!(r, Pair | Union | Delta0Sep | OracleG);
        match self {
            Theory::T0 => logical || axioms || matches!(r, BExAll | BAllEx | Delta0Coll),
            Theory::T1 => {
                logical || axioms || matches!(r, BExAll | BAllEx | Delta0Coll | Sigma1Fund)
            }
            Theory::T2 { .. } => {
                logical
                    || axioms
                    || matches!(
                        r,
                        BExAll
                            | BAllEx
                            | Delta0Coll
                            | Sigma1DFund
                            | EqD
                            | TrD
                            | SubmodelRule
                            | PhiRule
                    )
            }
            Theory::T3 { .. } => {
                logical
                    || axioms
                    || matches!(
                        r,
                        ExBang
                            | AllBang
                            | BExDAllBang
                            | BAllDExBang
                            | EqD
                            | TrD
                            | Trcl
                            | DefF
                            | Sigma1DBangFund
                            | Delta0DRepl
                            | Sigma1BangSubmodel
                            | PhiRule
                    )
            }
        }
    }

    fn sexp(self) -> String {
        match self {
            Theory::T0 => "T0".into(),
            Theory::T1 => "T1".into(),
            Theory::T2 { budget } => format!("(T2 {})", budget),
            Theory::T3 { level, budget } => format!("(T3 {} {})", level, budget),
        }
    }

    /// `T0`, `T1`, `T2`, `T2:<budget>`, `T3:<level>` or `T3:<level>:<budget>`.
    pub fn parse(s: &str) -> Option<Theory> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Option<usize> {
            match parts.get(i) {
                None => Some(0),
                Some(p) => p.parse().ok(),
            }
        };
        match parts[0] {
            "T0" if parts.len() == 1 => Some(Theory::T0),
            "T1" if parts.len() == 1 => Some(Theory::T1),
            "T2" if parts.len() <= 2 => Some(Theory::T2 { budget: num(1)? }),
            "T3" if parts.len() <= 3 => Some(Theory::T3 {
                level: num(1)?,
                budget: num(2)?,
            }),
            _ => None,
        }
    }
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theory::T0 => write!(f, "T0"),
            Theory::T1 => write!(f, "T1"),
            Theory::T2 { budget } => write!(f, "T2:{}", budget),
            Theory::T3 { level, budget } => write!(f, "T3:{}:{}", level, budget),
        }
    }
}

// ---------------------------------------------------------------- rules

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    Init,
    Or,
    And,
    BEx,
    BAll,
    Ex,
    All,
    Cut,
    BExAll,
    BAllEx,
    Pair,
    Union,
    Delta0Sep,
    OracleG,
    Delta0Coll,
    Sigma1Fund,
    EqD,
    TrD,
    Sigma1DFund,
    SubmodelRule,
    PhiRule,
    ExBang,
    AllBang,
    BExDAllBang,
    BAllDExBang,
    Trcl,
    DefF,
    Sigma1DBangFund,
    Delta0DRepl,
    Sigma1BangSubmodel,
}

const RULE_NAMES: &[(RuleId, &str)] = &[
    (RuleId::Init, "init"),
    (RuleId::Or, "or"),
    (RuleId::And, "and"),
    (RuleId::BEx, "bex"),
    (RuleId::BAll, "ball"),
    (RuleId::Ex, "ex"),
    (RuleId::All, "all"),
    (RuleId::Cut, "cut"),
    (RuleId::BExAll, "bexall"),
    (RuleId::BAllEx, "ballex"),
    (RuleId::Pair, "pair"),
    (RuleId::Union, "union"),
    (RuleId::Delta0Sep, "sep"),
    (RuleId::OracleG, "g"),
    (RuleId::Delta0Coll, "coll"),
    (RuleId::Sigma1Fund, "fund"),
    (RuleId::EqD, "eqd"),
    (RuleId::TrD, "trd"),
    (RuleId::Sigma1DFund, "dfund"),
    (RuleId::SubmodelRule, "submodel"),
    (RuleId::PhiRule, "phi"),
    (RuleId::ExBang, "exu"),
    (RuleId::AllBang, "allu"),
    (RuleId::BExDAllBang, "bexallu"),
    (RuleId::BAllDExBang, "ballexu"),
    (RuleId::Trcl, "trcl"),
    (RuleId::DefF, "f"),
    (RuleId::Sigma1DBangFund, "dfundu"),
    (RuleId::Delta0DRepl, "repl"),
    (RuleId::Sigma1BangSubmodel, "submodelu"),
];

impl RuleId {
    pub fn name(self) -> &'static str {
        RULE_NAMES
            .iter()
            .find(|(r, _)| *r == self)
            .map(|(_, n)| *n)
            .unwrap()
    }

    pub fn from_name(s: &str) -> Option<RuleId> {
        RULE_NAMES.iter().find(|(_, n)| *n == s).map(|(r, _)| *r)
    }

    pub fn all() -> impl Iterator<Item = RuleId> {
        RULE_NAMES.iter().map(|(r, _)| *r)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// One rule application. `arg` names the oracle for `g`, the definition
/// for `f` and the Φ index for `phi`. `subst` holds named parameter terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleInstance {
    pub id: RuleId,
    pub arg: Option<String>,
    pub principal: Vec<Formula>,
    pub eigen: Vec<String>,
    pub subst: Vec<(String, Term)>,
}

impl RuleInstance {
    pub fn new(id: RuleId) -> RuleInstance {
        RuleInstance {
            id,
            arg: None,
            principal: Vec::new(),
            eigen: Vec::new(),
            subst: Vec::new(),
        }
    }

    pub fn arg(mut self, a: &str) -> Self {
        self.arg = Some(a.to_string());
        self
    }

    pub fn principal(mut self, f: Formula) -> Self {
        self.principal.push(f);
        self
    }

    pub fn eigen(mut self, v: &str) -> Self {
        self.eigen.push(v.to_string());
        self
    }

    pub fn with(mut self, v: &str, t: Term) -> Self {
        self.subst.push((v.to_string(), t));
        self
    }

    pub fn param(&self, v: &str) -> Option<&Term> {
        self.subst.iter().find(|(n, _)| n == v).map(|(_, t)| t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub seq: Vec<Formula>,
    pub rule: RuleInstance,
    pub children: Vec<Node>,
}

impl Node {
    pub fn new(seq: Vec<Formula>, rule: RuleInstance, children: Vec<Node>) -> Node {
        Node {
            seq,
            rule,
            children,
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn walk<'a>(&'a self, path: &mut Vec<usize>, f: &mut dyn FnMut(&[usize], &'a Node)) {
        f(path, self);
        for (i, c) in self.children.iter().enumerate() {
            path.push(i);
            c.walk(path, f);
            path.pop();
        }
    }

    pub fn contains(&self, f: &Formula) -> bool {
        let k = alpha_key(f);
        self.seq.iter().any(|g| alpha_key(g) == k)
    }
}

/// An entry `φ_i(x⃗_i, y)` of the Φ list, written `(ex y φ)`. Its
/// parameters are the other free variables in sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiEntry {
    pub var: String,
    pub body: Formula,
}

impl PhiEntry {
    pub fn new(var: &str, body: Formula) -> PhiEntry {
        PhiEntry {
            var: var.to_string(),
            body,
        }
    }

    pub fn params(&self) -> Vec<String> {
        let mut fv = fv_formula(&self.body);
        fv.remove(&self.var);
        fv.into_iter().collect()
    }

    pub fn formula(&self) -> Formula {
        ex(&self.var, self.body.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub theory: Theory,
    pub phi: Vec<PhiEntry>,
    pub root: Node,
}

impl Derivation {
    pub fn new(theory: Theory, root: Node) -> Derivation {
        Derivation {
            theory,
            phi: Vec::new(),
            root,
        }
    }

    pub fn end_sequent(&self) -> &[Formula] {
        &self.root.seq
    }
}

// ---------------------------------------------------------------- alpha keys

/// `f` with bound variables renamed by binding depth, so that two formulas
/// have equal keys iff they differ only in bound names.
pub fn alpha_key(f: &Formula) -> Formula {
    let mut env = Vec::new();
    key_formula(f, &mut env)
}

pub fn alpha_eq(a: &Formula, b: &Formula) -> bool {
    alpha_key(a) == alpha_key(b)
}

/// Terms equal up to bound names.
pub fn term_alpha_eq(a: &Term, b: &Term) -> bool {
    a == b || key_term(a, &mut Vec::new()) == key_term(b, &mut Vec::new())
}

fn bound_name(depth: usize) -> String {
    format!("%#{}", depth)
}

fn lookup(env: &[(String, String)], v: &str) -> Option<String> {
    env.iter()
        .rev()
        .find(|(n, _)| n == v)
        .map(|(_, k)| k.clone())
}

fn key_term(t: &Term, env: &mut Vec<(String, String)>) -> Term {
    let under = |v: &str, env: &mut Vec<(String, String)>| -> String {
        let k = bound_name(env.len());
        env.push((v.to_string(), k.clone()));
        k
    };
    match t {
        Term::Var(v) => match lookup(env, &v.name) {
            Some(k) => var(&k),
            None => var(&v.name),
        },
        Term::Zero => Term::Zero,
        Term::App(s, ns, ss) => Term::App(
            s.clone(),
            ns.iter().map(|x| key_term(x, env)).collect(),
            ss.iter().map(|x| key_term(x, env)).collect(),
        ),
        Term::BUnion(y, b, e) | Term::Image(y, b, e) | Term::Iota(y, b, e) => {
            let b2 = key_term(b, env);
            let k = under(y, env);
            let e2 = key_term(e, env);
            env.pop();
            let (b2, e2) = (Box::new(b2), Box::new(e2));
            match t {
                Term::BUnion(..) => Term::BUnion(k, b2, e2),
                Term::Image(..) => Term::Image(k, b2, e2),
                _ => Term::Iota(k, b2, e2),
            }
        }
        Term::Sep(y, b, p) => {
            let b2 = key_term(b, env);
            let k = under(y, env);
            let p2 = key_formula(p, env);
            env.pop();
            Term::Sep(k, Box::new(b2), Box::new(p2))
        }
        Term::Cases(p, a, b) => Term::Cases(
            Box::new(key_formula(p, env)),
            Box::new(key_term(a, env)),
            Box::new(key_term(b, env)),
        ),
        Term::Rec(r) => {
            let arg = key_term(&r.arg, env);
            let kx = under(&r.x, env);
            let kp = under(&r.prev, env);
            let step = key_term(&r.step, env);
            env.pop();
            env.pop();
            Term::Rec(Box::new(RecTerm {
                x: kx,
                prev: kp,
                step,
                arg,
            }))
        }
    }
}

fn key_condition(c: &Condition, env: &mut Vec<(String, String)>) -> Condition {
    match c {
        Condition::Point(t) => Condition::Point(key_term(t, env)),
        Condition::Or(a, b) => Condition::Or(
            Box::new(key_condition(a, env)),
            Box::new(key_condition(b, env)),
        ),
        Condition::BEx(v, t, l) => {
            let t2 = key_term(t, env);
            let k = bound_name(env.len());
            env.push((v.clone(), k.clone()));
            let l2 = key_condition(l, env);
            env.pop();
            Condition::BEx(k, t2, Box::new(l2))
        }
    }
}

fn key_formula(f: &Formula, env: &mut Vec<(String, String)>) -> Formula {
    use Formula::*;
    let bind = |v: &str, env: &mut Vec<(String, String)>| -> String {
        let k = bound_name(env.len());
        env.push((v.to_string(), k.clone()));
        k
    };
    match f {
        In(a, b) => In(key_term(a, env), key_term(b, env)),
        NotIn(a, b) => NotIn(key_term(a, env), key_term(b, env)),
        Eq(a, b) => Eq(key_term(a, env), key_term(b, env)),
        Neq(a, b) => Neq(key_term(a, env), key_term(b, env)),
        DPred(t) => DPred(key_term(t, env)),
        NotDPred(t) => NotDPred(key_term(t, env)),
        Or(a, b) => Or(Box::new(key_formula(a, env)), Box::new(key_formula(b, env))),
        And(a, b) => And(Box::new(key_formula(a, env)), Box::new(key_formula(b, env))),
        BEx(v, t, p) | BAll(v, t, p) => {
            let t2 = key_term(t, env);
            let k = bind(v, env);
            let p2 = Box::new(key_formula(p, env));
            env.pop();
            if matches!(f, BEx(..)) {
                BEx(k, t2, p2)
            } else {
                BAll(k, t2, p2)
            }
        }
        Ex(v, p) | All(v, p) | ExBang(v, p) | AllBangNeg(v, p) => {
            let k = bind(v, env);
            let p2 = Box::new(key_formula(p, env));
            env.pop();
            match f {
                Ex(..) => Ex(k, p2),
                All(..) => All(k, p2),
                ExBang(..) => ExBang(k, p2),
                _ => AllBangNeg(k, p2),
            }
        }
        ClassAll(v, c, p) | ClassEx(v, c, p) => {
            let c2 = match c {
                ClassRef::Param => ClassRef::Param,
                ClassRef::Cond(l) => ClassRef::Cond(Box::new(key_condition(l, env))),
            };
            let k = bind(v, env);
            let p2 = Box::new(key_formula(p, env));
            env.pop();
            if matches!(f, ClassAll(..)) {
                ClassAll(k, c2, p2)
            } else {
                ClassEx(k, c2, p2)
            }
        }
    }
}

// ---------------------------------------------------------------- axiom instances

fn binder(base: &str, avoid: &[&Term]) -> String {
    if avoid.iter().any(|t| fv_term(t).contains(base)) {
        fresh(base)
    } else {
        base.to_string()
    }
}

/// `¬(t∈a ∧ s∈a ∧ ∀x∈a(x=t ∨ x=s))`.
pub fn pair_premise(t: &Term, s: &Term, a: &str) -> Formula {
    let x = binder("x", &[t, s, &var(a)]);
    negate(&and_all(vec![
        Formula::In(t.clone(), var(a)),
        Formula::In(s.clone(), var(a)),
        ball(
            &x,
            var(a),
            or(
                Formula::Eq(var(&x), t.clone()),
                Formula::Eq(var(&x), s.clone()),
            ),
        ),
    ]))
}

/// `¬(∀u∈t∀v∈u v∈c ∧ ∀v∈c∃u∈t v∈u)`.
pub fn union_premise(t: &Term, c: &str) -> Formula {
    let u = binder("u", &[t, &var(c)]);
    let v = binder("v", &[t, &var(c), &var(&u)]);
    negate(&and(
        ball(
            &u,
            t.clone(),
            ball(&v, var(&u), Formula::In(var(&v), var(c))),
        ),
        ball(
            &v,
            var(c),
            bex(&u, t.clone(), Formula::In(var(&v), var(&u))),
        ),
    ))
}

/// `¬(∀x∈a(x∈t ∧ φ(x)) ∧ ∀x∈t(¬φ(x) ∨ x∈a))`.
pub fn sep_premise(x: &str, phi: &Formula, t: &Term, a: &str) -> Formula {
    let nx = binder(x, &[t, &var(a)]);
    let phi = subst_formula(phi, x, &var(&nx));
    negate(&and(
        ball(
            &nx,
            var(a),
            and(Formula::In(var(&nx), t.clone()), phi.clone()),
        ),
        ball(
            &nx,
            t.clone(),
            or(negate(&phi), Formula::In(var(&nx), var(a))),
        ),
    ))
}

/// `trcv(u, x) ≡ ∀y∈x y∈u ∧ ∀y∈u ∀z∈y z∈u`.
pub fn trcv(u: &Term, x: &Term) -> Formula {
    let y = fresh("y");
    let z = fresh("z");
    and(
        ball(&y, x.clone(), Formula::In(var(&y), u.clone())),
        ball(
            &y,
            u.clone(),
            ball(&z, var(&y), Formula::In(var(&z), u.clone())),
        ),
    )
}

/// `trcl(y, x, a) ≡ trcv(y, x) ∧ (¬trcv(a, x) ∨ ∀z∈y z∈a)`.
pub fn trcl(y: &Term, x: &Term, a: &Term) -> Formula {
    let z = fresh("z");
    and(
        trcv(y, x),
        or(
            negate(&trcv(a, x)),
            ball(&z, y.clone(), Formula::In(var(&z), a.clone())),
        ),
    )
}

pub fn tc_term(t: &Term) -> Term {
    app2("tc", vec![t.clone()], vec![])
}

/// `TC(t ∪ {t})`.
pub fn tc_succ(t: &Term) -> Term {
    tc_term(&app("union2", vec![t.clone(), singleton(t.clone())]))
}

/// `∃c ¬ψ_g(t⃗, g(t⃗), c)` for an oracle with a declared θ.
pub fn oracle_premise(reg: &Registry, g: &str, args: &[Term]) -> Result<Formula> {
    let o = reg
        .oracle(g)
        .ok_or_else(|| Error::UnknownSymbol(g.to_string()))?;
    let th = o.theta.as_ref().ok_or_else(|| {
        Error::CheckFailed(format!("oracle `{}` declares no defining formula", g))
    })?;
    if args.len() != th.args.len() {
        return Err(Error::Arity(format!("oracle `{}`", g)));
    }
    let value = app2(
        g,
        args[..o.normal_arity].to_vec(),
        args[o.normal_arity..].to_vec(),
    );
    let c = fresh(&th.bound);
    let mut pairs: Vec<(String, Term)> =
        th.args.iter().cloned().zip(args.iter().cloned()).collect();
    pairs.push((th.value.clone(), value));
    pairs.push((th.bound.clone(), var(&c)));
    Ok(ex(&c, negate(&Subst::new(pairs).formula(&th.psi))))
}

/// `θ_f(t⃗, s⃗, b)`: the bounded matrix of the Σ1! definition of `f`.
pub fn def_theta(reg: &Registry, f: &str, args: &[Term], value: &Term) -> Result<Formula> {
    let d = reg
        .def(f)
        .ok_or_else(|| Error::UnknownSymbol(f.to_string()))?;
    if args.len() != d.arity() {
        return Err(Error::Arity(format!("definition `{}`", f)));
    }
    match synth_sigma1_bang_at(d, args, value, reg)? {
        Formula::ExBang(e, body) => Ok(subst_formula(&body, &e, value)),
        o => Err(Error::NotSigmaBang(o.to_string())),
    }
}

/// Argument terms of a `g` or `f` instance, from parameters `x0..`, `a0..`.
fn symbol_args(r: &RuleInstance, n: usize, s: usize) -> std::result::Result<Vec<Term>, String> {
    let mut out = Vec::new();
    for k in 0..n + s {
        let name = if k < n {
            format!("x{}", k)
        } else {
            format!("a{}", k - n)
        };
        out.push(
            r.param(&name)
                .cloned()
                .ok_or_else(|| format!("missing parameter `{}`", name))?,
        );
    }
    Ok(out)
}

/// The Eq axioms and extensionality as sentences.
pub fn builtin_sentences() -> Vec<(&'static str, Formula)> {
    let (a, b, c) = (var("a"), var("b"), var("c"));
    let refl = all("a", Formula::Eq(a.clone(), a.clone()));
    let trans = all(
        "a",
        all(
            "b",
            all(
                "c",
                or_all(vec![
                    Formula::Neq(a.clone(), b.clone()),
                    Formula::Neq(a.clone(), c.clone()),
                    Formula::Eq(b.clone(), c.clone()),
                ]),
            ),
        ),
    );
    let mem = all(
        "a",
        all(
            "b",
            all(
                "c",
                or_all(vec![
                    Formula::Neq(a.clone(), b.clone()),
                    Formula::NotIn(b.clone(), c.clone()),
                    Formula::In(a.clone(), c.clone()),
                ]),
            ),
        ),
    );
    let mem2 = all(
        "a",
        all(
            "b",
            all(
                "c",
                or_all(vec![
                    Formula::Neq(a.clone(), b.clone()),
                    Formula::NotIn(c.clone(), a.clone()),
                    Formula::In(c.clone(), b.clone()),
                ]),
            ),
        ),
    );
    let ext = all(
        "a",
        all(
            "b",
            or_all(vec![
                bex("c", a.clone(), Formula::NotIn(c.clone(), b.clone())),
                bex("c", b.clone(), Formula::NotIn(c.clone(), a.clone())),
                Formula::Eq(a.clone(), b.clone()),
            ]),
        ),
    );
    vec![
        ("Eq-refl", refl),
        ("Eq-trans", trans),
        ("Eq-mem-left", mem),
        ("Eq-mem-right", mem2),
        ("Ext", ext),
    ]
}

/// `¬Eq` and `¬Ext` members, which closed premises may carry.
pub fn is_negated_builtin(f: &Formula) -> bool {
    let k = alpha_key(f);
    builtin_sentences()
        .iter()
        .any(|(_, s)| alpha_key(&negate(s)) == k)
}

/// The negated sentences as a sequent fragment.
pub fn negated_builtins() -> Vec<Formula> {
    builtin_sentences().iter().map(|(_, s)| negate(s)).collect()
}

// ---------------------------------------------------------------- checking

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    /// Rule not part of the theory.
    NotAdmitted,
    /// Missing or ill-shaped principal formulas or parameters.
    Malformed,
    WrongPremiseCount,
    /// Introduced formula absent from the conclusion.
    IntroMissing,
    /// A premise lacks a formula the rule adds.
    PremiseMissing,
    /// A premise side formula is not in the conclusion.
    SideFormula,
    Eigenvariable,
    /// A formula is outside the class the rule requires.
    FormulaClass,
    UnknownSymbol,
    PhiIndex,
    Budget,
    /// A closed premise carries extra formulas.
    NotClosed,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Child indices from the root.
    pub path: Vec<usize>,
    pub rule: RuleId,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
        write!(
            f,
            "node /{} ({}): {}: {}",
            p.join("/"),
            self.rule,
            self.kind,
            self.detail
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct CheckReport {
    pub violations: Vec<Violation>,
    pub nodes: usize,
    pub cut_free: bool,
    pub nesting: usize,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<CheckReport> {
        if self.ok() {
            Ok(self)
        } else {
            Err(Error::CheckFailed(
                self.violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; "),
            ))
        }
    }
}

type Bad = (ViolationKind, String);

fn bad<T>(k: ViolationKind, m: impl Into<String>) -> std::result::Result<T, Bad> {
    Err((k, m.into()))
}

/// What a rule instance demands of its node.
struct Spec {
    intro: Vec<Formula>,
    adds: Vec<Vec<Formula>>,
    /// Extra formulas and terms the eigenvariables must avoid.
    scope: Vec<Formula>,
    /// Premises that must consist of exactly their added formulas.
    closed: Vec<usize>,
    /// Formulas that must be bounded.
    delta0: Vec<Formula>,
}

impl Spec {
    fn new(intro: Vec<Formula>, adds: Vec<Vec<Formula>>) -> Spec {
        Spec {
            intro,
            adds,
            scope: Vec::new(),
            closed: Vec::new(),
            delta0: Vec::new(),
        }
    }

    fn scope_terms(mut self, ts: &[&Term]) -> Spec {
        for t in ts {
            self.scope.push(Formula::Eq((*t).clone(), (*t).clone()));
        }
        self
    }

    fn scope(mut self, fs: &[&Formula]) -> Spec {
        self.scope.extend(fs.iter().map(|f| (*f).clone()));
        self
    }

    fn bounded(mut self, fs: &[&Formula]) -> Spec {
        self.delta0.extend(fs.iter().map(|f| (*f).clone()));
        self
    }
}

fn principal(r: &RuleInstance, i: usize) -> std::result::Result<&Formula, Bad> {
    match r.principal.get(i) {
        Some(f) => Ok(f),
        None => bad(ViolationKind::Malformed, "missing principal formula"),
    }
}

fn eigen(r: &RuleInstance, i: usize) -> std::result::Result<&str, Bad> {
    match r.eigen.get(i) {
        Some(v) => Ok(v),
        None => bad(ViolationKind::Malformed, "missing eigenvariable"),
    }
}

fn param<'a>(r: &'a RuleInstance, v: &str) -> std::result::Result<&'a Term, Bad> {
    match r.param(v) {
        Some(t) => Ok(t),
        None => bad(
            ViolationKind::Malformed,
            format!("missing parameter `{}`", v),
        ),
    }
}

fn shape_err<T>(what: &str, f: &Formula) -> std::result::Result<T, Bad> {
    bad(
        ViolationKind::Malformed,
        format!("expected {}, found {}", what, f),
    )
}

/// Shorthands for `¬Unique_a(φ)`, matching up to bound names.
pub fn neg_unique(a: &str, phi: &Formula) -> Formula {
    not_unique(a, phi)
}

/// Recognises `∃a∃a'(θ(a) ∧ θ(a') ∧ a ≠ a')`, returning `(a, θ)`.
pub fn as_neg_unique(f: &Formula) -> Option<(String, Formula)> {
    if let Formula::Ex(a, p) = f {
        if let Formula::Ex(a2, q) = &**p {
            if let Formula::And(l, r) = &**q {
                if let (Formula::And(t1, t2), Formula::Neq(x, y)) = (&**l, &**r) {
                    if *x == var(a)
                        && *y == var(a2)
                        && a != a2
                        && !fv_formula(t1).contains(a2.as_str())
                        && alpha_eq(&subst_formula(t1, a, &var(a2)), t2)
                    {
                        return Some((a.clone(), (**t1).clone()));
                    }
                }
            }
        }
    }
    None
}

fn d_lits(ts: &[Term]) -> Vec<Formula> {
    ts.iter().map(|t| Formula::NotDPred(t.clone())).collect()
}

fn rule_spec(d: &Derivation, node: &Node, reg: &Registry) -> std::result::Result<Spec, Bad> {
    use Formula as F;
    use RuleId::*;
    let r = &node.rule;
    let th = d.theory;
    let dl = |t: &Term| -> Vec<Formula> {
        if th.has_d() {
            vec![F::NotDPred(t.clone())]
        } else {
            vec![]
        }
    };
    Ok(match r.id {
        Init => {
            let l = principal(r, 0)?;
            let lit = matches!(
                l,
                F::In(..) | F::NotIn(..) | F::Eq(..) | F::Neq(..) | F::DPred(_) | F::NotDPred(_)
            );
            if !lit {
                return shape_err("a literal", l);
            }
            match l {
                F::Eq(a, b) if term_alpha_eq(a, b) => Spec::new(vec![l.clone()], vec![]),
                _ => Spec::new(vec![l.clone(), negate(l)], vec![]),
            }
        }
        Or => match principal(r, 0)? {
            p @ F::Or(a, b) => Spec::new(vec![p.clone()], vec![vec![(**a).clone(), (**b).clone()]]),
            p => return shape_err("a disjunction", p),
        },
        And => match principal(r, 0)? {
            p @ F::And(a, b) => Spec::new(
                vec![p.clone()],
                vec![vec![(**a).clone()], vec![(**b).clone()]],
            ),
            p => return shape_err("a conjunction", p),
        },
        BEx => match principal(r, 0)? {
            p @ F::BEx(v, a, body) => {
                let t = param(r, v)?;
                Spec::new(
                    vec![p.clone()],
                    vec![
                        vec![F::In(t.clone(), a.clone())],
                        vec![subst_formula(body, v, t)],
                    ],
                )
            }
            p => return shape_err("a bounded existential", p),
        },
        BAll => match principal(r, 0)? {
            p @ F::BAll(v, a, body) => {
                let e = eigen(r, 0)?;
                Spec::new(
                    vec![p.clone()],
                    vec![vec![
                        F::NotIn(var(e), a.clone()),
                        subst_formula(body, v, &var(e)),
                    ]],
                )
            }
            p => return shape_err("a bounded universal", p),
        },
        Ex => {
            let p = principal(r, 0)?;
            let mut cur = p;
            let mut pairs = Vec::new();
            while let F::Ex(v, body) = cur {
                match r.param(v) {
                    Some(t) => {
                        pairs.push((v.clone(), t.clone()));
                        cur = body;
                    }
                    None => break,
                }
            }
            if pairs.is_empty() {
                return shape_err("an existential with a witness term", p);
            }
            Spec::new(vec![p.clone()], vec![vec![Subst::new(pairs).formula(cur)]])
        }
        All => match principal(r, 0)? {
            p @ F::All(v, body) => {
                let e = eigen(r, 0)?;
                Spec::new(vec![p.clone()], vec![vec![subst_formula(body, v, &var(e))]])
            }
            p => return shape_err("a universal", p),
        },
        Cut => {
            let c = principal(r, 0)?;
            Spec::new(vec![], vec![vec![negate(c)], vec![c.clone()]])
        }
        BExAll => match principal(r, 0)? {
            p @ F::BEx(x, t, inner) => match &**inner {
                F::All(y, phi) => {
                    let s = param(r, x)?;
                    let a = eigen(r, 0)?;
                    let body =
                        Subst::new(vec![(x.clone(), s.clone()), (y.clone(), var(a))]).formula(phi);
                    let mut intro = vec![p.clone()];
                    intro.extend(dl(t));
                    Spec::new(intro, vec![vec![F::In(s.clone(), t.clone())], vec![body]])
                        .scope_terms(&[s])
                        .bounded(&[phi])
                }
                _ => return shape_err("∃x∈t∀y φ", p),
            },
            p => return shape_err("∃x∈t∀y φ", p),
        },
        BAllEx => match principal(r, 0)? {
            p @ F::BAll(x, t, inner) => match &**inner {
                F::Ex(_, phi) => {
                    let e = eigen(r, 0)?;
                    let mut intro = vec![p.clone()];
                    intro.extend(dl(t));
                    Spec::new(
                        intro,
                        vec![vec![
                            F::NotIn(var(e), t.clone()),
                            subst_formula(inner, x, &var(e)),
                        ]],
                    )
                    .bounded(&[phi])
                }
                _ => return shape_err("∀x∈t∃y φ", p),
            },
            p => return shape_err("∀x∈t∃y φ", p),
        },
        Pair => {
            let (t, s) = (param(r, "t")?, param(r, "s")?);
            let a = eigen(r, 0)?;
            Spec::new(vec![], vec![vec![pair_premise(t, s, a)]]).scope_terms(&[t, s])
        }
        Union => {
            let t = param(r, "t")?;
            let c = eigen(r, 0)?;
            Spec::new(vec![], vec![vec![union_premise(t, c)]]).scope_terms(&[t])
        }
        Delta0Sep => {
            let phi = principal(r, 0)?;
            let x = r.arg.clone().unwrap_or_else(|| "x".into());
            let t = param(r, "t")?;
            let a = eigen(r, 0)?;
            let mut scope_f = phi.clone();
            if let Some(n) = fv_formula(phi).get(&x) {
                scope_f = subst_formula(phi, n, &Term::Zero);
            }
            Spec::new(vec![], vec![vec![sep_premise(&x, phi, t, a)]])
                .scope_terms(&[t])
                .scope(&[&scope_f])
                .bounded(&[phi])
        }
        OracleG => {
            let g = match &r.arg {
                Some(g) => g.clone(),
                None => return bad(ViolationKind::Malformed, "`g` needs an oracle name"),
            };
            let o = match reg.oracle(&g) {
                Some(o) => o.clone(),
                None => return bad(ViolationKind::UnknownSymbol, format!("no oracle `{}`", g)),
            };
            if o.theta.is_none() {
                return bad(
                    ViolationKind::UnknownSymbol,
                    format!("oracle `{}` declares no defining formula", g),
                );
            }
            let args = symbol_args(r, o.normal_arity, o.safe_arity)
                .map_err(|m| (ViolationKind::Malformed, m))?;
            let prem = oracle_premise(reg, &g, &args)
                .map_err(|e| (ViolationKind::Malformed, e.to_string()))?;
            let intro = if th.has_d() {
                d_lits(&args[..o.normal_arity])
            } else {
                vec![]
            };
            Spec::new(intro, vec![vec![prem]])
        }
        Delta0Coll => match principal(r, 0)? {
            p @ F::BAll(x, t, inner) => match &**inner {
                F::Ex(a, phi) => {
                    let (xe, c) = (eigen(r, 0)?, eigen(r, 1)?);
                    let p0 = vec![
                        F::NotIn(var(xe), t.clone()),
                        subst_formula(inner, x, &var(xe)),
                    ];
                    let p1 = bex(x, t.clone(), ball(a, var(c), negate(phi)));
                    Spec::new(vec![], vec![p0, vec![p1]])
                        .scope(&[p])
                        .bounded(&[phi])
                }
                _ => return shape_err("∀x∈t∃a φ", p),
            },
            p => return shape_err("∀x∈t∃a φ", p),
        },
        Sigma1Fund | Sigma1DFund => match principal(r, 0)? {
            p @ F::All(x, inner) => match &**inner {
                F::Ex(a, phi) => {
                    let t = param(r, x)?;
                    let (y, ae) = (eigen(r, 0)?, eigen(r, 1)?);
                    let below = negate(&ball(x, var(y), (**inner).clone()));
                    let here = subst_formula(inner, x, &var(y));
                    let mut p0 = vec![below, here];
                    let mut intro = vec![];
                    if r.id == Sigma1DFund {
                        p0.push(F::NotDPred(var(y)));
                        intro.push(F::NotDPred(t.clone()));
                    }
                    let p1 = negate(
                        &Subst::new(vec![(x.clone(), t.clone()), (a.clone(), var(ae))])
                            .formula(phi),
                    );
                    Spec::new(intro, vec![p0, vec![p1]])
                        .scope(&[p])
                        .scope_terms(&[t])
                        .bounded(&[phi])
                }
                _ => return shape_err("∀x∃a φ", p),
            },
            p => return shape_err("∀x∃a φ", p),
        },
        EqD | TrD => match principal(r, 0)? {
            p @ F::NotDPred(t) => {
                let s = param(r, "s")?;
                let rel = if r.id == EqD {
                    F::Eq(s.clone(), t.clone())
                } else {
                    F::In(s.clone(), t.clone())
                };
                Spec::new(
                    vec![p.clone()],
                    vec![vec![rel], vec![F::NotDPred(s.clone())]],
                )
            }
            p => return shape_err("¬D(t)", p),
        },
        SubmodelRule | Sigma1BangSubmodel => {
            let p = principal(r, 0)?;
            let (a, phi) = match (r.id, p) {
                (SubmodelRule, F::Ex(a, phi)) | (Sigma1BangSubmodel, F::ExBang(a, phi)) => (a, phi),
                _ => return shape_err("a submodel formula", p),
            };
            let mut params: Vec<String> = fv_formula(p).into_iter().collect();
            params.sort();
            let ts: Vec<Term> = params
                .iter()
                .map(|x| param(r, x).cloned())
                .collect::<std::result::Result<_, _>>()?;
            let y = eigen(r, 0)?;
            let mut p0 = d_lits(&params.iter().map(|x| var(x)).collect::<Vec<_>>());
            p0.push(p.clone());
            let mut pairs: Vec<(String, Term)> =
                params.iter().cloned().zip(ts.iter().cloned()).collect();
            pairs.push((a.clone(), var(y)));
            let p1 = vec![F::NotDPred(var(y)), negate(&Subst::new(pairs).formula(phi))];
            let mut s = Spec::new(d_lits(&ts), vec![p0, p1]).bounded(&[phi]);
            s.closed.push(0);
            let scope: Vec<&Term> = ts.iter().collect();
            s.scope_terms(&scope)
        }
        PhiRule => {
            let i: usize = match r.arg.as_deref().map(|a| a.parse()) {
                Some(Ok(i)) => i,
                _ => return bad(ViolationKind::Malformed, "`phi` needs an index"),
            };
            let e = match d.phi.get(i) {
                Some(e) => e,
                None => {
                    return bad(
                        ViolationKind::PhiIndex,
                        format!("Φ has {} entries, rule uses {}", d.phi.len(), i),
                    )
                }
            };
            let params = e.params();
            let ts: Vec<Term> = params
                .iter()
                .map(|x| param(r, x).cloned())
                .collect::<std::result::Result<_, _>>()?;
            let y = eigen(r, 0)?;
            let mut pairs: Vec<(String, Term)> =
                params.iter().cloned().zip(ts.iter().cloned()).collect();
            pairs.push((e.var.clone(), var(y)));
            let p0 = vec![
                F::NotDPred(var(y)),
                negate(&Subst::new(pairs).formula(&e.body)),
            ];
            let scope: Vec<&Term> = ts.iter().collect();
            Spec::new(d_lits(&ts), vec![p0])
                .scope_terms(&scope)
                .bounded(&[&e.body])
        }
        ExBang => match principal(r, 0)? {
            p @ F::ExBang(a, phi) => {
                let s = param(r, a)?;
                let (ae, be) = (eigen(r, 0)?, eigen(r, 1)?);
                let p1 = vec![
                    negate(&subst_formula(phi, a, &var(ae))),
                    negate(&subst_formula(phi, a, &var(be))),
                    F::Eq(var(ae), var(be)),
                ];
                Spec::new(vec![p.clone()], vec![vec![subst_formula(phi, a, s)], p1]).bounded(&[phi])
            }
            p => return shape_err("∃!a φ", p),
        },
        AllBang => match principal(r, 0)? {
            p @ F::AllBangNeg(a, psi) => {
                let b = eigen(r, 0)?;
                let phi = negate(psi);
                Spec::new(
                    vec![p.clone()],
                    vec![vec![subst_formula(psi, a, &var(b)), neg_unique(a, &phi)]],
                )
                .bounded(&[psi])
            }
            p => return shape_err("∀!a φ", p),
        },
        BExDAllBang => match principal(r, 0)? {
            p @ F::BEx(x, t, inner) => match &**inner {
                F::AllBangNeg(a, phi) => {
                    let s = param(r, x)?;
                    let ae = eigen(r, 0)?;
                    let phis = subst_formula(phi, x, s);
                    let p1 = vec![
                        subst_formula(&phis, a, &var(ae)),
                        neg_unique(a, &negate(&phis)),
                    ];
                    let mut intro = vec![p.clone()];
                    intro.extend(dl(t));
                    Spec::new(intro, vec![vec![F::In(s.clone(), t.clone())], p1])
                        .scope_terms(&[s])
                        .bounded(&[phi])
                }
                _ => return shape_err("∃x∈t∀!a φ", p),
            },
            p => return shape_err("∃x∈t∀!a φ", p),
        },
        BAllDExBang => match principal(r, 0)? {
            p @ F::BAll(x, t, inner) => match &**inner {
                F::ExBang(_, phi) => {
                    let e = eigen(r, 0)?;
                    let mut intro = vec![p.clone()];
                    intro.extend(dl(t));
                    Spec::new(
                        intro,
                        vec![vec![
                            F::NotIn(var(e), t.clone()),
                            subst_formula(inner, x, &var(e)),
                        ]],
                    )
                    .bounded(&[phi])
                }
                _ => return shape_err("∀x∈t∃!a φ", p),
            },
            p => return shape_err("∀x∈t∃!a φ", p),
        },
        Trcl => {
            let (t, s) = (param(r, "t")?, param(r, "s")?);
            Spec::new(
                vec![F::NotDPred(t.clone())],
                vec![vec![negate(&trcl(&tc_term(t), t, s))]],
            )
        }
        DefF => {
            let f = match &r.arg {
                Some(f) => f.clone(),
                None => return bad(ViolationKind::Malformed, "`f` needs a definition name"),
            };
            let (def, level) = match (reg.def(&f), reg.level_of(&f)) {
                (Some(d), Some(l)) => (d.clone(), l),
                _ => {
                    return bad(
                        ViolationKind::UnknownSymbol,
                        format!("no definition `{}`", f),
                    )
                }
            };
            if level > th.level() {
                return bad(
                    ViolationKind::UnknownSymbol,
                    format!("`{}` has level {} above {}", f, level, th.level()),
                );
            }
            let args = symbol_args(r, def.normal_arity, def.safe_arity)
                .map_err(|m| (ViolationKind::Malformed, m))?;
            let value = Term::App(
                Sym::Name(f.clone()),
                args[..def.normal_arity].to_vec(),
                args[def.normal_arity..].to_vec(),
            );
            let theta = def_theta(reg, &f, &args, &value)
                .map_err(|e| (ViolationKind::FormulaClass, e.to_string()))?;
            Spec::new(
                d_lits(&args[..def.normal_arity]),
                vec![vec![negate(&theta)]],
            )
            .bounded(&[&theta])
        }
        Sigma1DBangFund => match principal(r, 0)? {
            p @ F::All(x, inner) => match &**inner {
                F::ExBang(_, phi) => {
                    let t = param(r, x)?;
                    let y = eigen(r, 0)?;
                    let p0 = vec![
                        F::NotIn(var(y), tc_succ(t)),
                        negate(&ball(x, var(y), (**inner).clone())),
                        subst_formula(inner, x, &var(y)),
                    ];
                    let p1 = vec![negate(&subst_formula(inner, x, t))];
                    Spec::new(vec![F::NotDPred(t.clone())], vec![p0, p1])
                        .scope(&[p])
                        .scope_terms(&[t])
                        .bounded(&[phi])
                }
                _ => return shape_err("∀x∃!a φ", p),
            },
            p => return shape_err("∀x∃!a φ", p),
        },
        Delta0DRepl => match principal(r, 0)? {
            p @ F::BAll(x, t, inner) => match &**inner {
                F::ExBang(a, phi) => {
                    let (xe, c) = (eigen(r, 0)?, eigen(r, 1)?);
                    let p0 = vec![
                        F::NotIn(var(xe), t.clone()),
                        subst_formula(inner, x, &var(xe)),
                    ];
                    let p1 = negate(&ball(
                        x,
                        t.clone(),
                        subst_formula(phi, a, &apply(var(c), var(x))),
                    ));
                    Spec::new(vec![F::NotDPred(t.clone())], vec![p0, vec![p1]])
                        .scope(&[p])
                        .bounded(&[phi])
                }
                _ => return shape_err("∀x∈t∃!a φ", p),
            },
            p => return shape_err("∀x∈t∃!a φ", p),
        },
    })
}

fn check_node(
    d: &Derivation,
    node: &Node,
    path: &[usize],
    reg: &Registry,
    out: &mut Vec<Violation>,
) {
    let r = &node.rule;
    let mut push = |kind: ViolationKind, detail: String| {
        out.push(Violation {
            path: path.to_vec(),
            rule: r.id,
            kind,
            detail,
        })
    };
    if !d.theory.admits(r.id) {
        push(
            ViolationKind::NotAdmitted,
            format!("{} is not a rule of {}", r.id, d.theory),
        );
        return;
    }
    for f in &node.seq {
        if let Err(e) = classify(f, d.theory.level(), reg) {
            push(ViolationKind::UnknownSymbol, format!("{} in {}", e, f));
        }
        if !d.theory.has_d() && mentions_d(f) {
            push(
                ViolationKind::FormulaClass,
                format!("𝒟 outside T2/T3 in {}", f),
            );
        }
    }
    let spec = match rule_spec(d, node, reg) {
        Ok(s) => s,
        Err((k, m)) => {
            push(k, m);
            return;
        }
    };
    for f in &spec.delta0 {
        if !is_delta0(f) {
            push(ViolationKind::FormulaClass, format!("not bounded: {}", f));
        }
    }
    if spec.adds.len() != node.children.len() {
        push(
            ViolationKind::WrongPremiseCount,
            format!(
                "expected {} premises, found {}",
                spec.adds.len(),
                node.children.len()
            ),
        );
        return;
    }
    let concl: BTreeSet<Formula> = node.seq.iter().map(alpha_key).collect();
    for f in &spec.intro {
        if !concl.contains(&alpha_key(f)) {
            push(ViolationKind::IntroMissing, f.to_string());
        }
    }
    for (i, (child, add)) in node.children.iter().zip(&spec.adds).enumerate() {
        let prem: BTreeSet<Formula> = child.seq.iter().map(alpha_key).collect();
        let added: BTreeSet<Formula> = add.iter().map(alpha_key).collect();
        for k in &added {
            if !prem.contains(k) {
                push(
                    ViolationKind::PremiseMissing,
                    format!("premise {} lacks {}", i, k),
                );
            }
        }
        for (f, k) in child.seq.iter().zip(child.seq.iter().map(alpha_key)) {
            if added.contains(&k) {
                continue;
            }
            if spec.closed.contains(&i) && !is_negated_builtin(f) {
                push(
                    ViolationKind::NotClosed,
                    format!("premise {} carries {}", i, f),
                );
            } else if !concl.contains(&k) {
                push(
                    ViolationKind::SideFormula,
                    format!("premise {} formula {} is not in the conclusion", i, f),
                );
            }
        }
    }
    let mut fv = BTreeSet::new();
    for f in node.seq.iter().chain(spec.scope.iter()) {
        add_fv_formula(f, &mut fv);
    }
    let mut seen = BTreeSet::new();
    for e in &r.eigen {
        if fv.contains(e) {
            push(
                ViolationKind::Eigenvariable,
                format!("eigenvariable `{}` occurs free below", e),
            );
        }
        if !seen.insert(e.clone()) {
            push(
                ViolationKind::Eigenvariable,
                format!("eigenvariable `{}` used twice", e),
            );
        }
    }
}

fn mentions_d(f: &Formula) -> bool {
    use Formula::*;
    match f {
        DPred(_) | NotDPred(_) => true,
        In(..) | NotIn(..) | Eq(..) | Neq(..) => false,
        Or(a, b) | And(a, b) => mentions_d(a) || mentions_d(b),
        BEx(_, _, p)
        | BAll(_, _, p)
        | Ex(_, p)
        | All(_, p)
        | ExBang(_, p)
        | AllBangNeg(_, p)
        | ClassAll(_, _, p)
        | ClassEx(_, _, p) => mentions_d(p),
    }
}

/// Submodel nesting depth: how many Submodel applications lie on a chain
/// each inside the closed premise of the previous one.
pub fn nesting_depth(n: &Node) -> usize {
    match n.rule.id {
        RuleId::SubmodelRule | RuleId::Sigma1BangSubmodel if n.children.len() == 2 => {
            (1 + nesting_depth(&n.children[0])).max(nesting_depth(&n.children[1]))
        }
        _ => n.children.iter().map(nesting_depth).max().unwrap_or(0),
    }
}

/// Checks every rule application. Violations carry the node path and a
/// category; an empty list means the derivation is correct.
pub fn check_derivation(d: &Derivation, reg: &Registry) -> CheckReport {
    let mut violations = Vec::new();
    let mut path = Vec::new();
    let mut nodes = 0;
    d.root.walk(&mut path, &mut |p, n| {
        nodes += 1;
        check_node(d, n, p, reg, &mut violations);
    });
    let nesting = nesting_depth(&d.root);
    if nesting > d.theory.budget() {
        violations.push(Violation {
            path: vec![],
            rule: d.root.rule.id,
            kind: ViolationKind::Budget,
            detail: format!(
                "Submodel nesting {} exceeds budget {}",
                nesting,
                d.theory.budget()
            ),
        });
    }
    CheckReport {
        violations,
        nodes,
        cut_free: is_cut_free(d),
        nesting,
    }
}

pub fn is_cut_free(d: &Derivation) -> bool {
    let mut ok = true;
    d.root.walk(&mut Vec::new(), &mut |_, n| {
        if n.rule.id == RuleId::Cut {
            ok = false;
        }
    });
    ok
}

// ---------------------------------------------------------------- audit

/// Where a formula occurrence falls in the list of admissible shapes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Occurrence {
    Delta0,
    Sigma1,
    /// Negation of a Σ1 or Σ formula.
    NegSigma,
    NegD,
    Sigma1Bang,
    /// Negation of a Σ1! or Σ^D! formula.
    NegSigmaBang,
    NegUnique,
    Other,
}

/// The bucket of a formula for the Lemma's induction.
pub fn occurrence_class(f: &Formula, theory: Theory) -> Occurrence {
    if is_delta0(f) {
        return Occurrence::Delta0;
    }
    if let Formula::NotDPred(_) = f {
        if theory.has_d() {
            return Occurrence::NegD;
        }
    }
    let neg = negate(f);
    if let Theory::T3 { .. } = theory {
        if as_neg_unique(f).is_some() {
            return Occurrence::NegUnique;
        }
        if is_sigma_bang(f) {
            return Occurrence::Sigma1Bang;
        }
        if is_sigma_bang(&neg) || is_sigma_d_bang(&neg) {
            return Occurrence::NegSigmaBang;
        }
        if sigma1_parts(f).is_some() {
            return Occurrence::Sigma1;
        }
        return Occurrence::Other;
    }
    if sigma1_parts(f).is_some() {
        return Occurrence::Sigma1;
    }
    if sigma1_parts(&neg).is_some() || is_sigma(&neg) {
        return Occurrence::NegSigma;
    }
    Occurrence::Other
}

pub fn is_sigma(f: &Formula) -> bool {
    matches!(f, Formula::BAll(_, _, p) if sigma1_parts(p).is_some())
}

pub fn is_sigma_bang(f: &Formula) -> bool {
    matches!(f, Formula::ExBang(_, p) if is_delta0(p))
}

pub fn is_sigma_d_bang(f: &Formula) -> bool {
    matches!(f, Formula::BAll(_, _, p) if is_sigma_bang(p))
}

#[derive(Clone, Debug, Default)]
pub struct AuditReport {
    pub counts: BTreeMap<String, usize>,
    pub offending: Vec<(Vec<usize>, Formula)>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.offending.is_empty()
    }
}

/// Every formula in a cut-free derivation must fall in one of the buckets
/// the Lemma's induction handles.
pub fn audit_formula_occurrences(d: &Derivation) -> AuditReport {
    let mut rep = AuditReport::default();
    d.root.walk(&mut Vec::new(), &mut |p, n| {
        for f in &n.seq {
            let c = occurrence_class(f, d.theory);
            *rep.counts.entry(format!("{:?}", c)).or_insert(0) += 1;
            if c == Occurrence::Other {
                rep.offending.push((p.to_vec(), f.clone()));
            }
        }
    });
    rep
}

// ---------------------------------------------------------------- normalisation

pub fn eigenvariables(d: &Derivation) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    d.root.walk(&mut Vec::new(), &mut |_, n| {
        out.extend(n.rule.eigen.iter().cloned());
    });
    out
}

/// Replaces by 0 every free variable that is neither an eigenvariable nor
/// listed in `keep`.
pub fn normalize_free_variables(d: &Derivation, keep: &BTreeSet<String>) -> Derivation {
    let eig = eigenvariables(d);
    let mut fv = BTreeSet::new();
    d.root.walk(&mut Vec::new(), &mut |_, n| {
        for f in n.seq.iter().chain(n.rule.principal.iter()) {
            add_fv_formula(f, &mut fv);
        }
        for (_, t) in &n.rule.subst {
            add_fv_term(t, &mut fv);
        }
    });
    let pairs: Vec<(String, Term)> = fv
        .into_iter()
        .filter(|v| !eig.contains(v) && !keep.contains(v))
        .map(|v| (v, Term::Zero))
        .collect();
    if pairs.is_empty() {
        return d.clone();
    }
    let s = Subst::new(pairs);
    fn go(n: &Node, s: &Subst) -> Node {
        let mut rule = n.rule.clone();
        rule.principal = rule.principal.iter().map(|f| s.formula(f)).collect();
        rule.subst = rule
            .subst
            .iter()
            .map(|(v, t)| (v.clone(), s.term(t)))
            .collect();
        Node {
            seq: n.seq.iter().map(|f| s.formula(f)).collect(),
            rule,
            children: n.children.iter().map(|c| go(c, s)).collect(),
        }
    }
    Derivation {
        theory: d.theory,
        phi: d
            .phi
            .iter()
            .map(|e| PhiEntry::new(&e.var, s.formula(&e.body)))
            .collect(),
        root: go(&d.root, &s),
    }
}

// ---------------------------------------------------------------- file format

const OPTS: ParseOpts = ParseOpts {
    allow_reserved: true,
};

fn theory_of(s: &Sexp) -> Result<Theory> {
    let num = |x: &Sexp| -> Result<usize> {
        x.expect_atom()?
            .parse()
            .map_err(|_| x.error("expected a number"))
    };
    if let Some(a) = s.atom() {
        return match a {
            "T0" => Ok(Theory::T0),
            "T1" => Ok(Theory::T1),
            "T2" => Ok(Theory::T2 { budget: 0 }),
            "T3" => Ok(Theory::T3 {
                level: 0,
                budget: 0,
            }),
            _ => Err(s.error(format!("unknown theory `{}`", a))),
        };
    }
    let v = s.expect_list()?;
    match (s.head(), v.len()) {
        (Some("T2"), 2) => Ok(Theory::T2 {
            budget: num(&v[1])?,
        }),
        (Some("T3"), 3) => Ok(Theory::T3 {
            level: num(&v[1])?,
            budget: num(&v[2])?,
        }),
        _ => Err(s.error("expected T0, T1, (T2 budget) or (T3 level budget)")),
    }
}

fn rule_of(s: &Sexp) -> Result<RuleInstance> {
    let v = s.expect_list()?;
    if s.head() != Some("rule") || v.len() < 2 {
        return Err(s.error("expected `(rule id ...)`"));
    }
    let id_s = v[1].expect_atom()?;
    let id =
        RuleId::from_name(id_s).ok_or_else(|| v[1].error(format!("unknown rule `{}`", id_s)))?;
    let mut r = RuleInstance::new(id);
    for part in &v[2..] {
        if let Some(a) = part.atom() {
            if r.arg.is_some() {
                return Err(part.error("rule takes one argument"));
            }
            r.arg = Some(a.to_string());
            continue;
        }
        let items = &part.expect_list()?[1..];
        match part.head() {
            Some("principal") => {
                for f in items {
                    r.principal.push(formula_of(f, OPTS)?);
                }
            }
            Some("eigen") => {
                for e in items {
                    r.eigen.push(name_of(e, OPTS)?);
                }
            }
            Some("subst") => {
                for p in items {
                    let pv = p.expect_list()?;
                    if pv.len() != 2 {
                        return Err(p.error("expected `(name term)`"));
                    }
                    r.subst
                        .push((name_of(&pv[0], OPTS)?, term_of(&pv[1], OPTS)?));
                }
            }
            _ => return Err(part.error("expected principal, eigen or subst")),
        }
    }
    Ok(r)
}

fn node_of(s: &Sexp) -> Result<Node> {
    let v = s.expect_list()?;
    if s.head() != Some("node") || v.len() < 3 {
        return Err(s.error("expected `(node (seq ...) (rule ...) child...)`"));
    }
    if v[1].head() != Some("seq") {
        return Err(v[1].error("expected `(seq ...)`"));
    }
    let seq = v[1].expect_list()?[1..]
        .iter()
        .map(|f| formula_of(f, OPTS))
        .collect::<Result<Vec<_>>>()?;
    let rule = rule_of(&v[2])?;
    let children = v[3..].iter().map(node_of).collect::<Result<Vec<_>>>()?;
    Ok(Node {
        seq,
        rule,
        children,
    })
}

pub fn derivation_of(s: &Sexp) -> Result<Derivation> {
    let v = s.expect_list()?;
    if s.head() != Some("deriv") || v.len() != 4 {
        return Err(s.error("expected `(deriv theory (phi ...) node)`"));
    }
    let theory = theory_of(&v[1])?;
    if v[2].head() != Some("phi") {
        return Err(v[2].error("expected `(phi ...)`"));
    }
    let mut phi = Vec::new();
    for e in &v[2].expect_list()?[1..] {
        match formula_of(e, OPTS)? {
            Formula::Ex(y, body) => phi.push(PhiEntry::new(&y, *body)),
            _ => return Err(e.error("Φ entries are written `(ex y φ)`")),
        }
    }
    Ok(Derivation {
        theory,
        phi,
        root: node_of(&v[3])?,
    })
}

pub fn parse_derivation(src: &str) -> Result<Derivation> {
    derivation_of(&sexpr::parse_one(src)?)
}

impl fmt::Display for RuleInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(rule {}", self.id)?;
        if let Some(a) = &self.arg {
            write!(f, " {}", a)?;
        }
        if !self.principal.is_empty() {
            write!(f, " (principal")?;
            for p in &self.principal {
                write!(f, " {}", p)?;
            }
            write!(f, ")")?;
        }
        if !self.eigen.is_empty() {
            write!(f, " (eigen {})", self.eigen.join(" "))?;
        }
        if !self.subst.is_empty() {
            write!(f, " (subst")?;
            for (v, t) in &self.subst {
                write!(f, " ({} {})", v, t)?;
            }
            write!(f, ")")?;
        }
        write!(f, ")")
    }
}

fn write_node(n: &Node, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    out.push_str(&format!("{}(node (seq", pad));
    for f in &n.seq {
        out.push(' ');
        out.push_str(&f.to_string());
    }
    out.push_str(&format!(")\n{}  {}", pad, n.rule));
    for c in &n.children {
        out.push('\n');
        write_node(c, indent + 2, out);
    }
    out.push(')');
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = format!("(deriv {} (phi", self.theory.sexp());
        for e in &self.phi {
            out.push(' ');
            out.push_str(&e.formula().to_string());
        }
        out.push_str(")\n");
        write_node(&self.root, 2, &mut out);
        out.push(')');
        write!(f, "{}", out)
    }
}

// ---------------------------------------------------------------- building

/// Premise sequents of `rule` applied to `seq`: each premise is the
/// conclusion plus the formulas the rule adds, except closed premises,
/// which hold only their added formulas.
pub fn premise_sequents(
    theory: Theory,
    phi: &[PhiEntry],
    seq: &[Formula],
    rule: &RuleInstance,
    reg: &Registry,
) -> Result<Vec<Vec<Formula>>> {
    let d = Derivation {
        theory,
        phi: phi.to_vec(),
        root: Node::new(seq.to_vec(), rule.clone(), vec![]),
    };
    let spec = rule_spec(&d, &d.root, reg)
        .map_err(|(k, m)| Error::CheckFailed(format!("{} ({:?})", m, k)))?;
    Ok(spec
        .adds
        .iter()
        .enumerate()
        .map(|(i, add)| {
            let mut out: Vec<Formula> = Vec::new();
            let mut keys = BTreeSet::new();
            let closed = spec.closed.contains(&i);
            let base = seq.iter().filter(|f| !closed || is_negated_builtin(f));
            for f in base.chain(add) {
                if keys.insert(alpha_key(f)) {
                    out.push(f.clone());
                }
            }
            out
        })
        .collect())
}

/// A proof script: a rule with scripts for its premises, or a call to the
/// bounded search of [`Builder::auto`].
#[derive(Clone, Debug)]
pub enum Tactic {
    Rule(RuleInstance, Vec<Tactic>),
    Auto,
}

pub fn by(rule: RuleInstance, kids: Vec<Tactic>) -> Tactic {
    Tactic::Rule(rule, kids)
}

pub struct Builder<'a> {
    pub theory: Theory,
    pub phi: Vec<PhiEntry>,
    pub reg: &'a Registry,
    pub depth: usize,
    counter: usize,
}

impl<'a> Builder<'a> {
    pub fn new(theory: Theory, reg: &'a Registry) -> Builder<'a> {
        Builder {
            theory,
            phi: Vec::new(),
            reg,
            depth: 10,
            counter: 0,
        }
    }

    pub fn with_phi(mut self, phi: Vec<PhiEntry>) -> Self {
        self.phi = phi;
        self
    }

    pub fn build(&mut self, seq: Vec<Formula>, tac: &Tactic) -> Result<Node> {
        match tac {
            Tactic::Auto => self.auto(&seq).ok_or_else(|| {
                Error::CheckFailed(format!(
                    "no proof found for {}",
                    seq.iter()
                        .map(|f| f.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            }),
            Tactic::Rule(r, kids) => {
                let prems = premise_sequents(self.theory, &self.phi, &seq, r, self.reg)?;
                if prems.len() != kids.len() {
                    return Err(Error::CheckFailed(format!(
                        "{} has {} premises, script gives {}",
                        r.id,
                        prems.len(),
                        kids.len()
                    )));
                }
                let children = prems
                    .into_iter()
                    .zip(kids)
                    .map(|(p, k)| self.build(p, k))
                    .collect::<Result<_>>()?;
                Ok(Node::new(seq, r.clone(), children))
            }
        }
    }

    pub fn derive(&mut self, seq: Vec<Formula>, tac: &Tactic) -> Result<Derivation> {
        let root = self.build(seq, tac)?;
        Ok(Derivation {
            theory: self.theory,
            phi: self.phi.clone(),
            root,
        })
    }

    /// A variable not free in `seq`.
    pub fn fresh_var(&mut self, base: &str, seq: &[Formula]) -> String {
        let mut fv = BTreeSet::new();
        for f in seq {
            add_fv_formula(f, &mut fv);
        }
        loop {
            self.counter += 1;
            let v = format!("{}{}", base, self.counter);
            if !fv.contains(&v) {
                return v;
            }
        }
    }

    /// Bounded search for a cut-free proof using axioms, the propositional
    /// and bounded-quantifier rules. Bounded existentials are instantiated
    /// with terms `t` for which `t ∉ a` is in the sequent.
    pub fn auto(&mut self, seq: &[Formula]) -> Option<Node> {
        let depth = self.depth;
        self.search(seq, &BTreeSet::new(), depth)
    }

    fn search(&mut self, seq: &[Formula], used: &BTreeSet<Formula>, depth: usize) -> Option<Node> {
        let keys: BTreeSet<Formula> = seq.iter().map(alpha_key).collect();
        for f in seq {
            let lit = matches!(f, Formula::In(..) | Formula::Eq(..) | Formula::DPred(_));
            let refl = matches!(f, Formula::Eq(a, b) if term_alpha_eq(a, b));
            if refl || (lit && keys.contains(&alpha_key(&negate(f)))) {
                return Some(Node::new(
                    seq.to_vec(),
                    RuleInstance::new(RuleId::Init).principal(f.clone()),
                    vec![],
                ));
            }
        }
        if depth == 0 {
            return None;
        }
        // Invertible rules first.
        for f in seq {
            let k = alpha_key(f);
            if used.contains(&k) {
                continue;
            }
            let rule = match f {
                Formula::Or(..) => RuleInstance::new(RuleId::Or).principal(f.clone()),
                Formula::And(..) => RuleInstance::new(RuleId::And).principal(f.clone()),
                Formula::BAll(..) if is_delta0(f) => {
                    let e = self.fresh_var("e", seq);
                    RuleInstance::new(RuleId::BAll)
                        .principal(f.clone())
                        .eigen(&e)
                }
                _ => continue,
            };
            let prems = premise_sequents(self.theory, &self.phi, seq, &rule, self.reg).ok()?;
            let mut used2 = used.clone();
            used2.insert(k);
            let mut kids = Vec::new();
            for p in prems {
                kids.push(self.search(&p, &used2, depth - 1)?);
            }
            return Some(Node::new(seq.to_vec(), rule, kids));
        }
        for f in seq {
            if let Formula::BEx(x, a, _) = f {
                if !is_delta0(f) {
                    continue;
                }
                for g in seq {
                    let t = match g {
                        Formula::NotIn(t, b)
                            if alpha_key(&Formula::Eq(b.clone(), b.clone()))
                                == alpha_key(&Formula::Eq(a.clone(), a.clone())) =>
                        {
                            t
                        }
                        _ => continue,
                    };
                    let k = alpha_key(&and(f.clone(), Formula::Eq(t.clone(), t.clone())));
                    if used.contains(&k) {
                        continue;
                    }
                    let rule = RuleInstance::new(RuleId::BEx)
                        .principal(f.clone())
                        .with(x, t.clone());
                    let prems = match premise_sequents(self.theory, &self.phi, seq, &rule, self.reg)
                    {
                        Ok(p) => p,
                        Err(_) => continue,
                    };
                    let mut used2 = used.clone();
                    used2.insert(k);
                    let mut kids = Vec::new();
                    for p in &prems {
                        match self.search(p, &used2, depth - 1) {
                            Some(n) => kids.push(n),
                            None => break,
                        }
                    }
                    if kids.len() == prems.len() {
                        return Some(Node::new(seq.to_vec(), rule, kids));
                    }
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse::parse_formula;

    fn p(s: &str) -> Formula {
        parse_formula(s, OPTS).unwrap()
    }

    fn leaf(seq: Vec<Formula>, lit: Formula) -> Node {
        Node::new(seq, RuleInstance::new(RuleId::Init).principal(lit), vec![])
    }

    #[test]
    fn alpha_keys_ignore_bound_names() {
        assert!(alpha_eq(&p("(bex y x (in y z))"), &p("(bex w x (in w z))")));
        assert!(!alpha_eq(
            &p("(bex y x (in y z))"),
            &p("(bex z x (in z z))")
        ));
        assert!(alpha_eq(
            &p("(ex a (eq (bunion u a (app union2 (u u) ())) zero))"),
            &p("(ex b (eq (bunion v b (app union2 (v v) ())) zero))")
        ));
    }

    #[test]
    fn neg_unique_is_recognised() {
        let phi = p("(in a x)");
        let (a, th) = as_neg_unique(&neg_unique("a", &phi)).unwrap();
        assert_eq!(a, "a");
        assert_eq!(th, phi);
        assert!(
            as_neg_unique(&p("(ex a (ex b (and (and (in a x) (in b y)) (neq a b))))")).is_none()
        );
    }

    #[test]
    fn simple_disjunction_checks() {
        let lit = p("(in a b)");
        let top = p("(or (in a b) (notin a b))");
        let d = Derivation::new(
            Theory::T0,
            Node::new(
                vec![top.clone()],
                RuleInstance::new(RuleId::Or).principal(top),
                vec![leaf(vec![lit.clone(), negate(&lit)], lit)],
            ),
        );
        let rep = check_derivation(&d, &Registry::standard());
        assert!(rep.ok(), "{:?}", rep.violations);
        assert!(rep.cut_free);
    }

    #[test]
    fn eigenvariable_clash_is_caught() {
        // ∀y∈x (y∈x) with eigenvariable x itself.
        let f = p("(ball y x (in y x))");
        let prem = vec![p("(notin x x)"), p("(in x x)")];
        let d = Derivation::new(
            Theory::T0,
            Node::new(
                vec![f.clone()],
                RuleInstance::new(RuleId::BAll).principal(f).eigen("x"),
                vec![leaf(prem, p("(in x x)"))],
            ),
        );
        let rep = check_derivation(&d, &Registry::standard());
        assert!(rep
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::Eigenvariable));
    }

    #[test]
    fn theory_gates_rules() {
        assert!(!Theory::T0.admits(RuleId::Sigma1Fund));
        assert!(Theory::T1.admits(RuleId::Sigma1Fund));
        assert!(!Theory::T2 { budget: 1 }.admits(RuleId::Sigma1Fund));
        assert!(Theory::T3 {
            level: 0,
            budget: 0
        }
        .admits(RuleId::Delta0DRepl));
        assert!(!Theory::T3 {
            level: 0,
            budget: 0
        }
        .admits(RuleId::Delta0Coll));
        assert_eq!(
            Theory::parse("T3:1:2"),
            Some(Theory::T3 {
                level: 1,
                budget: 2
            })
        );
    }

    #[test]
    fn file_roundtrip() {
        let src = "(deriv (T2 1) (phi (ex y (in x y)))
          (node (seq (or (in a b) (notin a b))) (rule or (principal (or (in a b) (notin a b))))
            (node (seq (in a b) (notin a b)) (rule init (principal (in a b))))))";
        let d = parse_derivation(src).unwrap();
        assert_eq!(d.theory, Theory::T2 { budget: 1 });
        assert_eq!(d.phi[0].params(), vec!["x".to_string()]);
        let again = parse_derivation(&d.to_string()).unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn normalisation_keeps_eigenvariables() {
        let f = p("(ball y x (in y z))");
        let d = Derivation::new(
            Theory::T0,
            Node::new(
                vec![f.clone()],
                RuleInstance::new(RuleId::BAll).principal(f).eigen("e"),
                vec![],
            ),
        );
        let keep: BTreeSet<String> = ["x".to_string()].into_iter().collect();
        let n = normalize_free_variables(&d, &keep);
        assert_eq!(n.root.seq[0], p("(ball y x (in y zero))"));
    }

    #[test]
    fn builtin_sentences_are_closed() {
        for (_, s) in builtin_sentences() {
            assert!(fv_formula(&s).is_empty());
        }
    }
}
