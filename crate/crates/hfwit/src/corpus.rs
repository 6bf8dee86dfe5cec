//! Hand-built derivations: a golden set the checker must accept, mutants it
//! must reject, and the extraction suites for each theory.

use crate::calculus::{
    self, by, negated_builtins, Builder, Derivation, PhiEntry, RuleId, RuleInstance, Tactic,
    Theory, ViolationKind,
};
use crate::classes::{parse_def, Registry};
use crate::error::Result;
use crate::extract::PhiWitness;
use crate::formula::parse::parse_formula;
use crate::formula::*;
use crate::hf::HFSet;

pub fn f(s: &str) -> Formula {
    parse_formula(s, ParseOpts::default()).unwrap_or_else(|e| panic!("{}: {}", s, e))
}

fn t(s: &str) -> Term {
    crate::formula::parse::parse_term(s, ParseOpts::default())
        .unwrap_or_else(|e| panic!("{}: {}", s, e))
}

fn r(id: RuleId) -> RuleInstance {
    RuleInstance::new(id)
}

const AUTO: Tactic = Tactic::Auto;

/// Registry for the corpus: the standard one plus a level-1 definition
/// used by the `(f)` rule.
pub fn registry() -> Registry {
    let mut reg = Registry::standard();
    let d = parse_def("(def sing (() (a0)) (comp (pair) (proj 0) (proj 0)))").expect("sing");
    reg.register_def(d, 1).expect("fresh registry");
    reg
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub name: &'static str,
    pub derivation: Derivation,
    /// Witnesses for Φ entries listed in the derivation itself.
    pub given: Vec<PhiWitness>,
    /// Whether the witness extraction applies to the end-sequent.
    pub extractable: bool,
    /// Labels of the extraction cases this entry exercises.
    pub cases: Vec<&'static str>,
}

fn entry(name: &'static str, d: Derivation, cases: &[&'static str]) -> Entry {
    Entry {
        name,
        derivation: d,
        given: vec![],
        extractable: true,
        cases: cases.to_vec(),
    }
}

fn ext() -> Formula {
    negate(
        &calculus::builtin_sentences()
            .into_iter()
            .find(|(n, _)| *n == "Ext")
            .expect("Ext")
            .1,
    )
}

fn eq_trans() -> Formula {
    negate(
        &calculus::builtin_sentences()
            .into_iter()
            .find(|(n, _)| *n == "Eq-trans")
            .expect("Eq-trans")
            .1,
    )
}

fn eq_mem() -> Formula {
    negate(
        &calculus::builtin_sentences()
            .into_iter()
            .find(|(n, _)| *n == "Eq-mem-left")
            .expect("Eq-mem-left")
            .1,
    )
}

/// `a` is an extensional copy of `x`.
fn copy(x: &str, a: &str) -> Formula {
    f(&format!(
        "(and (ball e {a} (in e {x})) (ball e {x} (in e {a})))",
        x = x,
        a = a
    ))
}

fn exu_copy(x: &str) -> Formula {
    f(&format!(
        "(exu a (and (ball e a (in e {x})) (ball e {x} (in e a))))",
        x = x
    ))
}

/// Uniqueness of extensional copies through `¬Ext`.
fn copy_unique() -> Tactic {
    by(
        r(RuleId::Ex)
            .principal(ext())
            .with("a", var("a1"))
            .with("b", var("b1")),
        vec![AUTO],
    )
}

/// `∃!a copy(x, a)` with witness `s`.
fn prove_copy(x: &str, s: Term) -> Tactic {
    let _ = x;
    by(
        r(RuleId::ExBang)
            .principal(exu_copy(x))
            .with("a", s)
            .eigen("a1")
            .eigen("b1"),
        vec![AUTO, copy_unique()],
    )
}

fn build(th: Theory, reg: &Registry, seq: Vec<Formula>, tac: Tactic) -> Derivation {
    let mut b = Builder::new(th, reg);
    b.depth = 32;
    b.derive(seq, &tac)
        .unwrap_or_else(|e| panic!("corpus derivation: {}", e))
}

fn build_phi(
    th: Theory,
    reg: &Registry,
    phi: Vec<PhiEntry>,
    seq: Vec<Formula>,
    tac: Tactic,
) -> Derivation {
    let mut b = Builder::new(th, reg).with_phi(phi);
    b.depth = 32;
    b.derive(seq, &tac)
        .unwrap_or_else(|e| panic!("corpus derivation: {}", e))
}

// ---------------------------------------------------------------- T0 and T1

pub fn t0_t1(reg: &Registry) -> Vec<Entry> {
    let mut out = Vec::new();

    let goal = f("(ex y (and (in a y) (in b y)))");
    out.push(entry(
        "pair",
        build(
            Theory::T0,
            reg,
            vec![goal.clone()],
            by(
                r(RuleId::Pair)
                    .with("t", var("a"))
                    .with("s", var("b"))
                    .eigen("c"),
                vec![by(
                    r(RuleId::Ex).principal(goal).with("y", var("c")),
                    vec![AUTO],
                )],
            ),
        ),
        &["pair", "ex"],
    ));

    let goal = f("(ex c (ball u a (ball v u (in v c))))");
    out.push(entry(
        "union",
        build(
            Theory::T0,
            reg,
            vec![goal.clone()],
            by(
                r(RuleId::Union).with("t", var("a")).eigen("c1"),
                vec![by(
                    r(RuleId::Ex).principal(goal).with("c", var("c1")),
                    vec![AUTO],
                )],
            ),
        ),
        &["union"],
    ));

    let goal =
        f("(ex y (and (ball x y (and (in x a) (in x b))) (ball x a (or (notin x b) (in x y)))))");
    out.push(entry(
        "intersection by separation",
        build(
            Theory::T0,
            reg,
            vec![goal.clone()],
            by(
                r(RuleId::Delta0Sep)
                    .principal(f("(in x b)"))
                    .arg("x")
                    .with("t", var("a"))
                    .eigen("y1"),
                vec![by(
                    r(RuleId::Ex).principal(goal).with("y", var("y1")),
                    vec![AUTO],
                )],
            ),
        ),
        &["sep"],
    ));

    let hyp = f("(all y (notin y b))");
    let goal = f("(ex z (in z b))");
    out.push(entry(
        "assumed witness",
        build(
            Theory::T0,
            reg,
            vec![hyp.clone(), goal.clone()],
            by(
                r(RuleId::All).principal(hyp).eigen("e"),
                vec![by(
                    r(RuleId::Ex).principal(goal).with("z", var("e")),
                    vec![AUTO],
                )],
            ),
        ),
        &["all"],
    ));

    let hyp = f("(bex x t (all y (notin x y)))");
    let goal = f("(ex z (in s z))");
    out.push(entry(
        "bounded assumed witness",
        build(
            Theory::T0,
            reg,
            vec![f("(notin s t)"), hyp.clone(), goal.clone()],
            by(
                r(RuleId::BExAll)
                    .principal(hyp)
                    .with("x", var("s"))
                    .eigen("a"),
                vec![
                    AUTO,
                    by(
                        r(RuleId::Ex).principal(goal).with("z", var("a")),
                        vec![AUTO],
                    ),
                ],
            ),
        ),
        &["bexall"],
    ));

    let goal = f("(ex y (in a y))");
    let prem = calculus::oracle_premise(reg, "powerset", &[var("a")]).expect("powerset premise");
    let c = match &prem {
        Formula::Ex(c, _) => c.clone(),
        _ => unreachable!("oracle premise is existential"),
    };
    out.push(entry(
        "oracle powerset",
        build(
            Theory::T0,
            reg,
            vec![goal.clone()],
            by(
                r(RuleId::OracleG).arg("powerset").with("a0", var("a")),
                vec![by(
                    r(RuleId::Ex)
                        .principal(goal)
                        .with("y", t("(app powerset () (a))")),
                    vec![by(
                        r(RuleId::Ex).principal(prem).with(&c, var("a")),
                        vec![AUTO],
                    )],
                )],
            ),
        ),
        &["g"],
    ));

    let goal = f("(ex c (ball x t (bex a c (in x a))))");
    let coll = f("(ball x t (ex a (in x a)))");
    let inner = f("(ex a (in x1 a))");
    out.push(entry(
        "collection",
        build(
            Theory::T0,
            reg,
            vec![goal.clone()],
            by(
                r(RuleId::Delta0Coll)
                    .principal(coll)
                    .eigen("x1")
                    .eigen("c1"),
                vec![
                    by(
                        r(RuleId::Pair)
                            .with("t", var("x1"))
                            .with("s", var("x1"))
                            .eigen("p"),
                        vec![by(
                            r(RuleId::Ex).principal(inner).with("a", var("p")),
                            vec![AUTO],
                        )],
                    ),
                    by(
                        r(RuleId::Ex).principal(goal).with("c", var("c1")),
                        vec![AUTO],
                    ),
                ],
            ),
        ),
        &["coll"],
    ));

    let goal = f("(ex z (in u z))");
    let here = f("(ex a (in y a))");
    out.push(entry(
        "foundation",
        build(
            Theory::T1,
            reg,
            vec![goal.clone()],
            by(
                r(RuleId::Sigma1Fund)
                    .principal(f("(all x (ex a (in x a)))"))
                    .with("x", var("u"))
                    .eigen("y")
                    .eigen("a1"),
                vec![
                    by(
                        r(RuleId::Pair)
                            .with("t", var("y"))
                            .with("s", var("y"))
                            .eigen("p"),
                        vec![by(
                            r(RuleId::Ex).principal(here).with("a", var("p")),
                            vec![AUTO],
                        )],
                    ),
                    by(
                        r(RuleId::Ex).principal(goal).with("z", var("a1")),
                        vec![AUTO],
                    ),
                ],
            ),
        ),
        &["fund"],
    ));

    out
}

// ---------------------------------------------------------------- T2

pub fn t2(reg: &Registry) -> Vec<Entry> {
    let mut out = Vec::new();
    let th = Theory::T2 { budget: 2 };

    let goal = f("(ex z (in u z))");
    let here = f("(ex a (in y a))");
    out.push(entry(
        "D-foundation",
        build(
            th,
            reg,
            vec![f("(notdpred u)"), goal.clone()],
            by(
                r(RuleId::Sigma1DFund)
                    .principal(f("(all x (ex a (in x a)))"))
                    .with("x", var("u"))
                    .eigen("y")
                    .eigen("a1"),
                vec![
                    by(
                        r(RuleId::Pair)
                            .with("t", var("y"))
                            .with("s", var("y"))
                            .eigen("p"),
                        vec![by(
                            r(RuleId::Ex).principal(here).with("a", var("p")),
                            vec![AUTO],
                        )],
                    ),
                    by(
                        r(RuleId::Ex).principal(goal).with("z", var("a1")),
                        vec![AUTO],
                    ),
                ],
            ),
        ),
        &["depth 0", "dfund"],
    ));

    let goal = f("(ex z (in s z))");
    let pair = |rest: Tactic| {
        by(
            r(RuleId::Pair)
                .with("t", var("s"))
                .with("s", var("s"))
                .eigen("p"),
            vec![by(
                r(RuleId::Ex)
                    .principal(f("(ex z (in s z))"))
                    .with("z", var("p")),
                vec![rest],
            )],
        )
    };
    out.push(entry(
        "D-equality",
        build(
            th,
            reg,
            vec![f("(notdpred t)"), f("(neq s t)"), goal.clone()],
            by(
                r(RuleId::EqD)
                    .principal(f("(notdpred t)"))
                    .with("s", var("s")),
                vec![AUTO, pair(AUTO)],
            ),
        ),
        &["depth 0", "eqd"],
    ));
    out.push(entry(
        "D-transitivity",
        build(
            th,
            reg,
            vec![f("(notdpred t)"), f("(notin s t)"), goal.clone()],
            by(
                r(RuleId::TrD)
                    .principal(f("(notdpred t)"))
                    .with("s", var("s")),
                vec![AUTO, pair(AUTO)],
            ),
        ),
        &["depth 0", "trd"],
    ));

    // One Submodel step.
    let inner = f("(ex a (in x a))");
    let goal = f("(ex z (in u z))");
    let closed = |v: &str| {
        by(
            r(RuleId::Pair)
                .with("t", var("x"))
                .with("s", var("x"))
                .eigen(v),
            vec![by(
                r(RuleId::Ex)
                    .principal(f("(ex a (in x a))"))
                    .with("a", var(v)),
                vec![AUTO],
            )],
        )
    };
    out.push(entry(
        "submodel",
        build(
            th,
            reg,
            vec![f("(notdpred u)"), goal.clone()],
            by(
                r(RuleId::SubmodelRule)
                    .principal(inner.clone())
                    .with("x", var("u"))
                    .eigen("y"),
                vec![
                    closed("p"),
                    by(
                        r(RuleId::Ex).principal(goal.clone()).with("z", var("y")),
                        vec![AUTO],
                    ),
                ],
            ),
        ),
        &["depth 1", "submodel"],
    ));

    // A Submodel step inside the closed premise of another.
    let outer = f("(ex b (in x b))");
    out.push(entry(
        "nested submodel",
        build(
            th,
            reg,
            vec![f("(notdpred u)"), goal.clone()],
            by(
                r(RuleId::SubmodelRule)
                    .principal(outer)
                    .with("x", var("u"))
                    .eigen("y"),
                vec![
                    by(
                        r(RuleId::SubmodelRule)
                            .principal(inner.clone())
                            .with("x", var("x"))
                            .eigen("w"),
                        vec![
                            closed("p"),
                            by(
                                r(RuleId::Ex)
                                    .principal(f("(ex b (in x b))"))
                                    .with("b", var("w")),
                                vec![AUTO],
                            ),
                        ],
                    ),
                    by(
                        r(RuleId::Ex).principal(goal.clone()).with("z", var("y")),
                        vec![AUTO],
                    ),
                ],
            ),
        ),
        &["depth 2", "submodel"],
    ));

    // Φ given up front.
    let phi = vec![PhiEntry::new("a", f("(in x a)"))];
    let mut e = entry(
        "given phi",
        build_phi(
            th,
            reg,
            phi,
            vec![f("(notdpred u)"), goal.clone()],
            by(
                r(RuleId::PhiRule).arg("0").with("x", var("u")).eigen("y"),
                vec![by(
                    r(RuleId::Ex).principal(goal).with("z", var("y")),
                    vec![AUTO],
                )],
            ),
        ),
        &["depth 0", "phi"],
    );
    e.given = vec![PhiWitness {
        params: vec!["x".into()],
        term: singleton(t("(app pair () (x x))")),
    }];
    out.push(e);
    out
}

// ---------------------------------------------------------------- T3

pub fn t3_theory() -> Theory {
    Theory::T3 {
        level: 1,
        budget: 1,
    }
}

/// `∃!b φ` goals for the definable-function check, with the names of their
/// argument variables.
pub fn unique_goals(reg: &Registry) -> Vec<(Entry, Formula, Vec<&'static str>)> {
    let th = t3_theory();
    let mut out = Vec::new();
    let mut eqs = negated_builtins();
    eqs.retain(|f| *f == ext() || *f == eq_mem() || *f == eq_trans());

    // Pair: x ∈ b ∧ y ∈ b ∧ ∀c∈b (c = x ∨ c = y).
    let body = |b: &str| {
        f(&format!(
            "(and (and (in x {b}) (in y {b})) (ball c {b} (or (eq c x) (eq c y))))",
            b = b
        ))
    };
    let goal = f("(exu b (and (and (in x b) (in y b)) (ball c b (or (eq c x) (eq c y)))))");
    let mem = |a: &str, b: &str, c: &str| {
        by(
            r(RuleId::Ex)
                .principal(eq_mem())
                .with("a", var(a))
                .with("b", var(b))
                .with("c", var(c)),
            vec![AUTO],
        )
    };
    // c ∈ a1 gives c = x or c = y; either way c ∈ b1.
    let half = |a: &str, b: &str| {
        by(
            r(RuleId::BAll)
                .principal(f(&format!("(ball c {} (in c {}))", a, b)))
                .eigen("e"),
            vec![by(
                r(RuleId::Or).principal(negate(&body(a))),
                vec![by(
                    r(RuleId::BEx)
                        .principal(f(&format!("(bex c {} (and (neq c x) (neq c y)))", a)))
                        .with("c", var("e")),
                    vec![
                        AUTO,
                        by(
                            r(RuleId::And).principal(f("(and (neq e x) (neq e y))")),
                            vec![mem("e", "x", b), mem("e", "y", b)],
                        ),
                    ],
                )],
            )],
        )
    };
    let uniq = by(
        r(RuleId::Ex)
            .principal(ext())
            .with("a", var("a1"))
            .with("b", var("b1")),
        vec![by(
            r(RuleId::And).principal(f(
                "(and (ball c a1 (in c b1)) (and (ball c b1 (in c a1)) (neq a1 b1)))",
            )),
            vec![
                half("a1", "b1"),
                by(
                    r(RuleId::And).principal(f("(and (ball c b1 (in c a1)) (neq a1 b1))")),
                    vec![half("b1", "a1"), AUTO],
                ),
            ],
        )],
    );
    let mut seq = eqs.clone();
    seq.push(goal.clone());
    let d = build(
        th,
        reg,
        seq,
        by(
            r(RuleId::Pair)
                .with("t", var("x"))
                .with("s", var("y"))
                .eigen("p"),
            vec![by(
                r(RuleId::ExBang)
                    .principal(goal.clone())
                    .with("b", var("p"))
                    .eigen("a1")
                    .eigen("b1"),
                vec![AUTO, uniq],
            )],
        ),
    );
    out.push((entry("unique pair", d, &["1", "5"]), goal, vec!["x", "y"]));

    // Union.
    let goal = f("(exu c (and (ball u a (ball v u (in v c))) (ball v c (bex u a (in v u)))))");
    let d = build(
        th,
        reg,
        vec![ext(), goal.clone()],
        by(
            r(RuleId::Union).with("t", var("a")).eigen("p"),
            vec![by(
                r(RuleId::ExBang)
                    .principal(goal.clone())
                    .with("c", var("p"))
                    .eigen("a1")
                    .eigen("b1"),
                vec![AUTO, copy_unique()],
            )],
        ),
    );
    out.push((entry("unique union", d, &["1", "5"]), goal, vec!["a"]));

    // Transitive closure by set recursion, F(x) = x ∪ ⋃{F(z) : z ∈ x}.
    let rec = "(rec x p (app union2 () (x (app union () (p)))) x)";
    let goal = f(&format!("(exu b (eq {} b))", rec));
    let d = build(
        th,
        reg,
        vec![f("(notdpred x)"), eq_trans(), goal.clone()],
        by(
            r(RuleId::ExBang)
                .principal(goal.clone())
                .with("b", t(rec))
                .eigen("a1")
                .eigen("b1"),
            vec![
                AUTO,
                by(
                    r(RuleId::Ex)
                        .principal(eq_trans())
                        .with("a", t(rec))
                        .with("b", var("a1"))
                        .with("c", var("b1")),
                    vec![AUTO],
                ),
            ],
        ),
    );
    out.push((entry("unique closure", d, &["5"]), goal, vec!["x"]));
    out
}

pub fn t3(reg: &Registry) -> Vec<Entry> {
    let th = t3_theory();
    let mut out: Vec<Entry> = unique_goals(reg).into_iter().map(|(e, _, _)| e).collect();

    // Contraction: the same ∃! formula proved in both branches.
    let split = f("(and (or (in u v) (notin u v)) (or (in u w) (notin u w)))");
    let goal = exu_copy("x");
    out.push(entry(
        "contraction",
        build(
            th,
            reg,
            vec![ext(), split.clone(), goal],
            by(
                r(RuleId::And).principal(split),
                vec![prove_copy("x", var("x")), prove_copy("x", var("x"))],
            ),
        ),
        &["0", "5"],
    ));

    // If x has a unique element then x has at most one element.
    let hyp = f("(allu a (notin a x))");
    let goal = f("(ball e x (ball g x (eq e g)))");
    let nu = calculus::neg_unique("a", &f("(in a x)"));
    let nu_vars = match &nu {
        Formula::Ex(a0, b) => match &**b {
            Formula::Ex(a1, _) => (a0.clone(), a1.clone()),
            _ => unreachable!("¬Unique has two quantifiers"),
        },
        _ => unreachable!("¬Unique has two quantifiers"),
    };
    out.push(entry(
        "unique element",
        build(
            th,
            reg,
            vec![hyp.clone(), goal.clone()],
            by(
                r(RuleId::AllBang).principal(hyp).eigen("b"),
                vec![by(
                    r(RuleId::BAll).principal(goal).eigen("e1"),
                    vec![by(
                        r(RuleId::BAll)
                            .principal(f("(ball g x (eq e1 g))"))
                            .eigen("g1"),
                        vec![by(
                            r(RuleId::Ex)
                                .principal(nu.clone())
                                .with(&nu_vars.0, var("e1"))
                                .with(&nu_vars.1, var("g1")),
                            vec![AUTO],
                        )],
                    )],
                )],
            ),
        ),
        &["4.1", "6", "8"],
    ));

    // Bounded version: each element of t has a unique element, so s ∈ t does.
    let hyp = f("(bex x t (allu a (notin a x)))");
    let goal = f("(ball e s (ball g s (eq e g)))");
    let nu = calculus::neg_unique("a", &f("(in a s)"));
    let (v0, v1) = match &nu {
        Formula::Ex(a0, b) => match &**b {
            Formula::Ex(a1, _) => (a0.clone(), a1.clone()),
            _ => unreachable!("¬Unique has two quantifiers"),
        },
        _ => unreachable!("¬Unique has two quantifiers"),
    };
    out.push(entry(
        "bounded unique element",
        build(
            th,
            reg,
            vec![
                f("(notin s t)"),
                f("(notdpred t)"),
                hyp.clone(),
                goal.clone(),
            ],
            by(
                r(RuleId::BExDAllBang)
                    .principal(hyp)
                    .with("x", var("s"))
                    .eigen("a1"),
                vec![
                    AUTO,
                    by(
                        r(RuleId::BAll).principal(goal).eigen("e1"),
                        vec![by(
                            r(RuleId::BAll)
                                .principal(f("(ball g s (eq e1 g))"))
                                .eigen("g1"),
                            vec![by(
                                r(RuleId::Ex)
                                    .principal(nu)
                                    .with(&v0, var("e1"))
                                    .with(&v1, var("g1")),
                                vec![AUTO],
                            )],
                        )],
                    ),
                ],
            ),
        ),
        &["4.1", "7", "8"],
    ));

    // Submodel for a unique copy, then a copy of u through the Φ rule.
    let goal = exu_copy("u");
    out.push(entry(
        "unique submodel",
        build(
            th,
            reg,
            vec![f("(notdpred u)"), ext(), goal.clone()],
            by(
                r(RuleId::Sigma1BangSubmodel)
                    .principal(exu_copy("x"))
                    .with("x", var("u"))
                    .eigen("y"),
                vec![prove_copy("x", var("x")), prove_copy("u", var("y"))],
            ),
        ),
        &["3", "5"],
    ));

    // Replacement, used for its side premise.
    let goal = exu_copy("t");
    out.push(entry(
        "replacement",
        build(
            th,
            reg,
            vec![f("(notdpred t)"), ext(), goal.clone()],
            by(
                r(RuleId::Delta0DRepl)
                    .principal(f(
                        "(ball x t (exu a (and (ball e a (in e x)) (ball e x (in e a)))))",
                    ))
                    .eigen("x1")
                    .eigen("c"),
                vec![prove_copy("x1", var("x1")), prove_copy("t", var("t"))],
            ),
        ),
        &["9", "5"],
    ));

    // Foundation; the step case is direct and the conclusion uses the
    // assumed unique witness at t.
    let goal = exu_copy("t");
    let at_t = f("(allu a (or (bex e a (notin e t)) (bex e t (notin e a))))");
    out.push(entry(
        "unique foundation",
        build(
            th,
            reg,
            vec![f("(notdpred t)"), ext(), goal.clone()],
            by(
                r(RuleId::Sigma1DBangFund)
                    .principal(f(
                        "(all x (exu a (and (ball e a (in e x)) (ball e x (in e a)))))",
                    ))
                    .with("x", var("t"))
                    .eigen("y"),
                vec![
                    prove_copy("y", var("y")),
                    by(
                        r(RuleId::AllBang).principal(at_t).eigen("b"),
                        vec![prove_copy("t", var("b"))],
                    ),
                ],
            ),
        ),
        &["10", "6", "5"],
    ));

    // Transitive closure and a defined function symbol.
    let goal = f("(ball y t (in y (app tc (t) ())))");
    out.push(entry(
        "closure rule",
        build(
            th,
            reg,
            vec![f("(notdpred t)"), goal],
            by(
                r(RuleId::Trcl).with("t", var("t")).with("s", var("t")),
                vec![AUTO],
            ),
        ),
        &["2"],
    ));
    let theta =
        calculus::def_theta(reg, "sing", &[var("u")], &t("(app sing () (u))")).expect("θ of sing");
    out.push(entry(
        "defined symbol",
        build(
            th,
            reg,
            vec![theta],
            by(r(RuleId::DefF).arg("sing").with("a0", var("u")), vec![AUTO]),
        ),
        &["2"],
    ));
    let _ = copy;
    out
}

/// Derivations the checker accepts but that fall outside the extraction
/// lemmas.
pub fn check_only(reg: &Registry) -> Vec<Entry> {
    let mut out = Vec::new();
    let goal = f("(ball x t (ex y (in x y)))");
    let mut e = entry(
        "bounded collection form",
        build(
            Theory::T0,
            reg,
            vec![goal.clone()],
            by(
                r(RuleId::BAllEx).principal(goal).eigen("e"),
                vec![by(
                    r(RuleId::Pair)
                        .with("t", var("e"))
                        .with("s", var("e"))
                        .eigen("p"),
                    vec![by(
                        r(RuleId::Ex)
                            .principal(f("(ex y (in e y))"))
                            .with("y", var("p")),
                        vec![AUTO],
                    )],
                )],
            ),
        ),
        &[],
    );
    e.extractable = false;
    out.push(e);

    let goal = f("(ball x t (exu a (and (ball e a (in e x)) (ball e x (in e a)))))");
    let mut e = entry(
        "bounded unique collection form",
        build(
            t3_theory(),
            reg,
            vec![f("(notdpred t)"), ext(), goal.clone()],
            by(
                r(RuleId::BAllDExBang).principal(goal).eigen("x1"),
                vec![prove_copy("x1", var("x1"))],
            ),
        ),
        &[],
    );
    e.extractable = false;
    out.push(e);

    let lit = f("(in a b)");
    let mut e = entry(
        "cut",
        build(
            Theory::T0,
            reg,
            vec![lit.clone(), negate(&lit)],
            by(r(RuleId::Cut).principal(lit), vec![AUTO, AUTO]),
        ),
        &[],
    );
    e.extractable = false;
    out.push(e);
    out
}

pub fn golden(reg: &Registry) -> Vec<Entry> {
    let mut out = t0_t1(reg);
    out.extend(t2(reg));
    out.extend(t3(reg));
    out.extend(check_only(reg));
    out
}

// ---------------------------------------------------------------- mutants

#[derive(Clone, Debug)]
pub struct Mutant {
    pub name: &'static str,
    pub derivation: Derivation,
    pub expected: ViolationKind,
}

fn find<'a>(es: &'a [Entry], name: &str) -> &'a Entry {
    es.iter()
        .find(|e| e.name == name)
        .unwrap_or_else(|| panic!("no corpus entry {}", name))
}

/// Single-defect copies of golden derivations.
pub fn mutants(reg: &Registry) -> Vec<Mutant> {
    let g = golden(reg);
    let base = |n: &str| find(&g, n).derivation.clone();
    let mut out = Vec::new();
    let mut push = |name: &'static str, d: Derivation, expected: ViolationKind| {
        out.push(Mutant {
            name,
            derivation: d,
            expected,
        })
    };

    let mut d = base("foundation");
    d.theory = Theory::T0;
    push("foundation in T0", d, ViolationKind::NotAdmitted);

    let mut d = base("closure rule");
    d.theory = Theory::T2 { budget: 2 };
    push("closure rule in T2", d, ViolationKind::NotAdmitted);

    let mut d = base("assumed witness");
    d.root.rule.eigen = vec!["b".into()];
    push("eigenvariable free below", d, ViolationKind::Eigenvariable);

    let mut d = base("collection");
    d.root.rule.eigen = vec!["x1".into(), "x1".into()];
    push("eigenvariable used twice", d, ViolationKind::Eigenvariable);

    let mut d = base("contraction");
    d.root.children.pop();
    push("missing premise", d, ViolationKind::WrongPremiseCount);

    let mut d = base("D-equality");
    d.root.seq.retain(|f| !matches!(f, Formula::NotDPred(_)));
    push("introduced literal dropped", d, ViolationKind::IntroMissing);

    let mut d = base("pair");
    d.root.children[0].children[0]
        .seq
        .retain(|f| !matches!(f, Formula::And(..)));
    push("instance dropped", d, ViolationKind::PremiseMissing);

    let mut d = base("union");
    d.root.children[0].seq.push(f("(in zz a)"));
    push("stray side formula", d, ViolationKind::SideFormula);

    let mut d = base("intersection by separation");
    d.root.rule.principal = vec![f("(ex z (in z b))")];
    push("unbounded separation", d, ViolationKind::FormulaClass);

    let mut d = base("pair");
    d.root.seq.push(f("(notdpred a)"));
    push("D outside T2", d, ViolationKind::FormulaClass);

    let mut d = base("pair");
    d.root.children[0].rule.subst.clear();
    push("witness term missing", d, ViolationKind::Malformed);

    let mut d = base("oracle powerset");
    d.root.rule.arg = Some("nosuch".into());
    push("unknown oracle", d, ViolationKind::UnknownSymbol);

    let mut d = base("given phi");
    d.root.rule.arg = Some("3".into());
    push("Φ index out of range", d, ViolationKind::PhiIndex);

    let mut d = base("nested submodel");
    d.theory = Theory::T2 { budget: 1 };
    push("Submodel budget exceeded", d, ViolationKind::Budget);

    let mut d = base("submodel");
    d.root.children[0].seq.push(f("(in u u)"));
    push(
        "closed premise carries context",
        d,
        ViolationKind::NotClosed,
    );

    let mut d = base("unique element");
    d.root.rule.principal = vec![f("(allu a (notin a y))")];
    push(
        "principal not in conclusion",
        d,
        ViolationKind::IntroMissing,
    );
    out
}

/// Runs every golden derivation through the checker.
pub fn check_all(reg: &Registry) -> Result<()> {
    for e in golden(reg) {
        calculus::check_derivation(&e.derivation, reg).into_result()?;
    }
    Ok(())
}

// ---------------------------------------------------------------- definitions

/// A small library of safe-recursive definitions. Every entry is in
/// PCSF^ι except `tcn`, which uses the `tc` primitive.
pub const LIBRARY: &str = r#"
(def pr (() (a0 a1)) (pair) (class PCSF_IOTA))
(def un (() (a0)) (lib union) (class PCSF_IOTA))
(def sg (() (a0)) (safecomp (pair) () ((proj 0) (proj 0))) (class PCSF_IOTA))
(def succ (() (a0)) (safecomp (lib union2) () ((proj 0) (ref sg))) (class PCSF_IOTA))
(def meet (() (a0 a1)) (sep (in %e %0)) (class PCSF_IOTA))
(def minus (() (a0 a1)) (diff) (class PCSF_IOTA))
(def kp (() (a0 a1)) (lib kpair) (class PCSF_IOTA))
(def the (() (a0)) (iota (proj 0)) (class PCSF_IOTA))
(def cp ((x0) ()) (predrec (proj 1)) (class PCSF_IOTA))
(def tcr ((x0) ()) (predrec (safecomp (lib union2) () ((proj 0) (safecomp (lib union) () ((proj 1)))))) (class PCSF_IOTA))
(def tcn ((x0) ()) (lib tc) (class SRSF))
"#;

pub fn library() -> Vec<crate::classes::FunctionDef> {
    crate::classes::parse_defs(LIBRARY).expect("library parses")
}

/// Registry with the library registered at level 0.
pub fn library_registry() -> Registry {
    let mut reg = Registry::standard();
    for d in library() {
        reg.register_def(d, 0).expect("fresh names");
    }
    reg
}

/// Independent kernel implementations of the library entries.
pub fn library_oracle(name: &str, args: &[HFSet]) -> Option<HFSet> {
    use crate::hf;
    Some(match (name, args) {
        ("pr", [a, b]) => hf::pair(a, b),
        ("un", [a]) => hf::big_union(a),
        ("sg", [a]) => hf::pair(a, a),
        ("succ", [a]) => hf::union2(a, &hf::pair(a, a)),
        ("meet", [a, b]) => hf::intersect(a, b),
        ("minus", [a, b]) => hf::diff(a, b),
        ("kp", [a, b]) => hf::kpair(a, b),
        ("the", [a]) => match a.children() {
            [x] => x.clone(),
            _ => HFSet::empty(),
        },
        ("cp", [x]) => x.clone(),
        ("tcr", [x]) | ("tcn", [x]) => hf::transitive_closure(x),
        _ => return None,
    })
}

// ---------------------------------------------------------------- stratification table

pub struct StratRow {
    pub label: &'static str,
    pub formula: &'static str,
    pub normals: &'static [&'static str],
    pub safes: &'static [&'static str],
    /// `None` when the formula is stratified, else the clause that fails.
    pub expect: Option<Clause>,
}

const N: &[&str] = &["x", "y"];
const S: &[&str] = &["a", "b"];

fn row(label: &'static str, formula: &'static str, expect: Option<Clause>) -> StratRow {
    StratRow {
        label,
        formula,
        normals: N,
        safes: S,
        expect,
    }
}

/// Formulas with hand-classified stratification, over normals `x, y` and
/// safes `a, b` unless stated.
pub fn strat_table() -> Vec<StratRow> {
    use Clause::*;
    let mut v = vec![
        row("normal in safe", "(in x a)", None),
        row("safe equation", "(eq a b)", None),
        row("negated literals", "(or (notin x a) (neq b y))", None),
        row("normal slot, normal var", "(in (app tc (x) ()) a)", None),
        row("normal slot, safe var", "(in (app tc (a) ()) x)", Some(C1b)),
        row("unknown variable", "(in z x)", Some(C1a)),
        row(
            "safe slot takes safe vars",
            "(in (app union () (b)) (app tc (y) ()))",
            None,
        ),
        row(
            "nested normal terms",
            "(neq (app tc ((app tc (x) ())) ()) a)",
            None,
        ),
        row(
            "safe var deep in a normal slot",
            "(in (app tc ((app union2 () (x a))) ()) x)",
            Some(C1b),
        ),
        row("conjunction", "(and (in x a) (in b a))", None),
        row(
            "conjunct fails",
            "(and (in x a) (in (app tc (b) ()) x))",
            Some(C1b),
        ),
        row("safe bound, safe element", "(bex c a (in c x))", None),
        row(
            "normal bound, normal element",
            "(bex z x (in (app tc (z) ()) a))",
            None,
        ),
        row(
            "safe bound, normal element",
            "(bex c a (in (app tc (c) ()) x))",
            None,
        ),
        row(
            "element used both ways",
            "(ball c a (and (in (app tc (c) ()) x) (in c b)))",
            None,
        ),
        row(
            "two bound normals",
            "(bex c a (bex d c (in (app tc (d) ()) x)))",
            None,
        ),
        row("nested bounded", "(ball c x (ball d c (in d a)))", None),
        row(
            "ill-sorted bound",
            "(bex c (app tc (a) ()) (in c x))",
            Some(C5),
        ),
        row("unbounded existential", "(ex c (in c a))", Some(C4)),
        row("unbounded universal", "(all c (in c a))", Some(C4)),
        row("D predicate", "(dpred x)", Some(C2)),
        row(
            "pair term in a safe position",
            "(notin (app kpair () (a (app tc (x) ()))) b)",
            None,
        ),
    ];
    v.push(StratRow {
        label: "variable both normal and safe",
        formula: "(in x a)",
        normals: &["x", "a"],
        safes: &["a"],
        expect: Some(C1a),
    });
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_entries_check() {
        let reg = registry();
        for e in golden(&reg) {
            let rep = calculus::check_derivation(&e.derivation, &reg);
            assert!(rep.ok(), "{}: {:?}", e.name, rep.violations);
        }
    }

    #[test]
    fn mutants_are_rejected_for_the_right_reason() {
        let reg = registry();
        for m in mutants(&reg) {
            let rep = calculus::check_derivation(&m.derivation, &reg);
            assert!(
                rep.violations.iter().any(|v| v.kind == m.expected),
                "{}: {:?}",
                m.name,
                rep.violations
            );
        }
    }

    #[test]
    fn extractable_entries_verify() {
        use crate::extract::{extract_with, verify_bundle, verify_phi, GridOpts};
        let reg = registry();
        let opts = GridOpts {
            max_points: 200,
            max_candidates: 16,
            ..GridOpts::default()
        };
        let mut bad = Vec::new();
        for e in golden(&reg).into_iter().filter(|e| e.extractable) {
            let res = extract_with(&e.derivation, &reg, &e.given).and_then(|b| {
                let rep = verify_bundle(&b, &reg, &opts)?;
                let phi = verify_phi(&b, &reg, &opts)?;
                b.compile(&reg)?;
                Ok((rep, phi))
            });
            match res {
                Ok((rep, phi)) if rep.ok() && phi.ok() && rep.checked > 0 => {}
                Ok((rep, phi)) => bad.push(format!(
                    "{}: checked {} {:?} {:?}",
                    e.name, rep.checked, rep.failures, phi.failures
                )),
                Err(err) => bad.push(format!("{}: {}", e.name, err)),
            }
        }
        assert!(bad.is_empty(), "{:#?}", bad);
    }

    #[test]
    fn library_matches_kernel_on_v2() {
        let reg = library_registry();
        let v2 = crate::hf::universe(2).unwrap();
        for d in library() {
            crate::classes::validate_class(&d, d.tag.unwrap(), &reg).unwrap();
            let k = d.normal_arity + d.safe_arity;
            let tuples: Vec<Vec<HFSet>> = if k == 1 {
                v2.iter().map(|a| vec![a.clone()]).collect()
            } else {
                v2.iter()
                    .flat_map(|a| v2.iter().map(move |b| vec![a.clone(), b.clone()]))
                    .collect()
            };
            for t in tuples {
                let (ns, ss) = t.split_at(d.normal_arity);
                let got = crate::eval::evaluate(&d, ns, ss, &reg).unwrap().result;
                assert_eq!(Some(got), library_oracle(&d.name, &t), "{} {:?}", d.name, t);
            }
        }
    }

    #[test]
    fn strat_table_agrees() {
        use std::collections::BTreeSet;
        for r in strat_table() {
            let n: BTreeSet<String> = r.normals.iter().map(|s| s.to_string()).collect();
            let s: BTreeSet<String> = r.safes.iter().map(|s| s.to_string()).collect();
            let got = check_stratified(&f(r.formula), &n, &s)
                .err()
                .map(|v| v.clause);
            assert_eq!(got, r.expect, "{}", r.label);
        }
    }
}
