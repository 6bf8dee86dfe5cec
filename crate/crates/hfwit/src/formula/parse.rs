use std::sync::Arc;

use super::*;
use crate::classes;
use crate::error::Result;
use crate::hf::HFSet;
use crate::sexpr::{self, Sexp};

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOpts {
    /// Accept `%`-prefixed names. Only machine-written files need this.
    pub allow_reserved: bool,
}

pub fn parse_term(src: &str, opts: ParseOpts) -> Result<Term> {
    term_of(&sexpr::parse_one(src)?, opts)
}

pub fn parse_formula(src: &str, opts: ParseOpts) -> Result<Formula> {
    formula_of(&sexpr::parse_one(src)?, opts)
}

pub fn parse_condition(src: &str, opts: ParseOpts) -> Result<Condition> {
    condition_of(&sexpr::parse_one(src)?, opts)
}

const KEYWORDS: &[&str] = &["zero", "top", "bot", "X"];

pub(crate) fn name_of(s: &Sexp, opts: ParseOpts) -> Result<String> {
    let a = s.expect_atom()?;
    let ok_start = a
        .chars()
        .next()
        .map(|c| c.is_alphabetic() || c == '_' || (opts.allow_reserved && c == RESERVED))
        .unwrap_or(false);
    if !ok_start || KEYWORDS.contains(&a) {
        return Err(s.error(format!("bad variable name `{}`", a)));
    }
    if a.chars().skip(1).any(|c| c == RESERVED) && !opts.allow_reserved {
        return Err(s.error(format!("reserved character in `{}`", a)));
    }
    if !a
        .chars()
        .all(|c| c.is_alphanumeric() || c == '_' || c == '\'' || c == RESERVED)
    {
        return Err(s.error(format!("bad variable name `{}`", a)));
    }
    Ok(a.to_string())
}

fn args(s: &Sexp, n: usize) -> Result<&[Sexp]> {
    let v = s.expect_list()?;
    if v.len() != n + 1 {
        return Err(s.error(format!(
            "`{}` expects {} arguments",
            s.head().unwrap_or("?"),
            n
        )));
    }
    Ok(&v[1..])
}

fn literal_term(set: &HFSet) -> Term {
    if set.is_empty() {
        return Term::Zero;
    }
    let mut parts = set.children().iter().map(|c| singleton(literal_term(c)));
    let first = parts.next().unwrap();
    parts.fold(first, |acc, p| app("union2", vec![acc, p]))
}

pub(crate) fn term_of(s: &Sexp, opts: ParseOpts) -> Result<Term> {
    if let Some(a) = s.atom() {
        if a == "zero" {
            return Ok(Term::Zero);
        }
        if a.starts_with('{') {
            return Ok(literal_term(
                &HFSet::parse(a).map_err(|e| s.error(e.to_string()))?,
            ));
        }
        return Ok(var(&name_of(s, opts)?));
    }
    let head = s.head().ok_or_else(|| s.error("expected a term"))?;
    match head {
        "var" => {
            let a = args(s, 2)?;
            let sort = match a[1].expect_atom()? {
                "normal" => Sort::Normal,
                "safe" => Sort::Safe,
                "plain" => Sort::Plain,
                o => return Err(a[1].error(format!("unknown sort `{}`", o))),
            };
            Ok(sorted_var(&name_of(&a[0], opts)?, sort))
        }
        "app" => {
            let a = args(s, 3)?;
            let sym = match &a[0] {
                Sexp::Atom(n, _) => Sym::Name(n.clone()),
                l => Sym::Def(Arc::new(classes::def_of(l, opts)?)),
            };
            let ns = a[1]
                .expect_list()?
                .iter()
                .map(|x| term_of(x, opts))
                .collect::<Result<Vec<_>>>()?;
            let ss = a[2]
                .expect_list()?
                .iter()
                .map(|x| term_of(x, opts))
                .collect::<Result<Vec<_>>>()?;
            Ok(Term::App(sym, ns, ss))
        }
        "bunion" | "image" | "iota" => {
            let a = args(s, 3)?;
            let y = name_of(&a[0], opts)?;
            let b = Box::new(term_of(&a[1], opts)?);
            let e = Box::new(term_of(&a[2], opts)?);
            Ok(match head {
                "bunion" => Term::BUnion(y, b, e),
                "image" => Term::Image(y, b, e),
                _ => Term::Iota(y, b, e),
            })
        }
        "sep" => {
            let a = args(s, 3)?;
            Ok(Term::Sep(
                name_of(&a[0], opts)?,
                Box::new(term_of(&a[1], opts)?),
                Box::new(formula_of(&a[2], opts)?),
            ))
        }
        "cases" => {
            let a = args(s, 3)?;
            Ok(Term::Cases(
                Box::new(formula_of(&a[0], opts)?),
                Box::new(term_of(&a[1], opts)?),
                Box::new(term_of(&a[2], opts)?),
            ))
        }
        "rec" => {
            let a = args(s, 4)?;
            Ok(Term::Rec(Box::new(RecTerm {
                x: name_of(&a[0], opts)?,
                prev: name_of(&a[1], opts)?,
                step: term_of(&a[2], opts)?,
                arg: term_of(&a[3], opts)?,
            })))
        }
        // shorthand `(f t1 t2 ...)` for an all-safe application
        _ if s.list().map(|v| v[0].atom().is_some()).unwrap_or(false) => {
            let v = s.expect_list()?;
            Ok(app(
                head,
                v[1..]
                    .iter()
                    .map(|x| term_of(x, opts))
                    .collect::<Result<Vec<_>>>()?,
            ))
        }
        _ => Err(s.error("expected a term")),
    }
}

pub(crate) fn formula_of(s: &Sexp, opts: ParseOpts) -> Result<Formula> {
    use Formula as F;
    if let Some(a) = s.atom() {
        return match a {
            "top" => Ok(truth()),
            "bot" => Ok(falsity()),
            _ => Err(s.error(format!("expected a formula, found `{}`", a))),
        };
    }
    let head = s.head().ok_or_else(|| s.error("expected a formula"))?;
    let two_terms = |s: &Sexp| -> Result<(Term, Term)> {
        let a = args(s, 2)?;
        Ok((term_of(&a[0], opts)?, term_of(&a[1], opts)?))
    };
    let two = |s: &Sexp| -> Result<(Box<Formula>, Box<Formula>)> {
        let a = args(s, 2)?;
        Ok((
            Box::new(formula_of(&a[0], opts)?),
            Box::new(formula_of(&a[1], opts)?),
        ))
    };
    match head {
        "in" => two_terms(s).map(|(a, b)| F::In(a, b)),
        "notin" => two_terms(s).map(|(a, b)| F::NotIn(a, b)),
        "eq" => two_terms(s).map(|(a, b)| F::Eq(a, b)),
        "neq" => two_terms(s).map(|(a, b)| F::Neq(a, b)),
        "dpred" => Ok(F::DPred(term_of(&args(s, 1)?[0], opts)?)),
        "notdpred" => Ok(F::NotDPred(term_of(&args(s, 1)?[0], opts)?)),
        "or" => two(s).map(|(a, b)| F::Or(a, b)),
        "and" => two(s).map(|(a, b)| F::And(a, b)),
        "not" => Ok(negate(&formula_of(&args(s, 1)?[0], opts)?)),
        "imp" => {
            let (a, b) = two(s)?;
            Ok(F::Or(Box::new(negate(&a)), b))
        }
        "bex" | "ball" => {
            let a = args(s, 3)?;
            let v = name_of(&a[0], opts)?;
            let t = term_of(&a[1], opts)?;
            let p = Box::new(formula_of(&a[2], opts)?);
            Ok(if head == "bex" {
                F::BEx(v, t, p)
            } else {
                F::BAll(v, t, p)
            })
        }
        "ex" | "all" | "exu" | "allu" => {
            let a = args(s, 2)?;
            let v = name_of(&a[0], opts)?;
            let p = Box::new(formula_of(&a[1], opts)?);
            Ok(match head {
                "ex" => F::Ex(v, p),
                "all" => F::All(v, p),
                "exu" => F::ExBang(v, p),
                _ => F::AllBangNeg(v, p),
            })
        }
        "call" | "cex" => {
            let a = args(s, 3)?;
            let v = name_of(&a[0], opts)?;
            let c = class_of(&a[1], opts)?;
            let p = Box::new(formula_of(&a[2], opts)?);
            Ok(if head == "call" {
                F::ClassAll(v, c, p)
            } else {
                F::ClassEx(v, c, p)
            })
        }
        o => Err(s.error(format!("unknown formula constructor `{}`", o))),
    }
}

fn class_of(s: &Sexp, opts: ParseOpts) -> Result<ClassRef> {
    if s.atom() == Some("X") {
        return Ok(ClassRef::Param);
    }
    Ok(ClassRef::Cond(Box::new(condition_of(s, opts)?)))
}

pub(crate) fn condition_of(s: &Sexp, opts: ParseOpts) -> Result<Condition> {
    match s.head() {
        Some("point") => Ok(Condition::Point(term_of(&args(s, 1)?[0], opts)?)),
        Some("cor") => {
            let a = args(s, 2)?;
            Ok(Condition::Or(
                Box::new(condition_of(&a[0], opts)?),
                Box::new(condition_of(&a[1], opts)?),
            ))
        }
        Some("cbex") => {
            let a = args(s, 3)?;
            Ok(Condition::BEx(
                name_of(&a[0], opts)?,
                term_of(&a[1], opts)?,
                Box::new(condition_of(&a[2], opts)?),
            ))
        }
        _ => Err(s.error("expected a condition")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        parse_formula(s, ParseOpts::default()).unwrap()
    }

    #[test]
    fn print_parse_roundtrip() {
        for src in [
            "(ball x (var y normal) (or (in x z) (eq (app pair () (x z)) zero)))",
            "(exu a (and (notin a x) (dpred a)))",
            "(call d (cor (point x) (cbex u y (point u))) (neq d x))",
            "(cex d X (eq d (iota y x (sep w y (in w w)))))",
            "(all c (allu a (neq (bunion y x (cases (eq zero zero) y zero)) (rec u v (app union2 () (u v)) x))))",
        ] {
            let f = p(src);
            assert_eq!(f.to_string(), src);
            assert_eq!(p(&f.to_string()), f);
        }
    }

    #[test]
    fn sugar() {
        assert_eq!(p("(not (in x y))"), Formula::NotIn(var("x"), var("y")));
        assert_eq!(
            p("(imp (in x y) top)"),
            or(Formula::NotIn(var("x"), var("y")), truth())
        );
        assert_eq!(
            p("(eq x (pair y y))"),
            Formula::Eq(var("x"), app("pair", vec![var("y"), var("y")]))
        );
        assert_eq!(
            p("(eq x {{}})"),
            Formula::Eq(var("x"), singleton(Term::Zero))
        );
    }

    #[test]
    fn rejects_reserved_and_malformed() {
        assert!(parse_formula("(in %a x)", ParseOpts::default()).is_err());
        assert!(parse_formula(
            "(in %a x)",
            ParseOpts {
                allow_reserved: true
            }
        )
        .is_ok());
        assert!(parse_formula("(in x)", ParseOpts::default()).is_err());
        assert!(parse_formula("(frob x y)", ParseOpts::default()).is_err());
        assert!(parse_formula("(in X y)", ParseOpts::default()).is_err());
    }
}
