//! Definition file syntax:
//! `(def name ((x0 ...) (a0 ...)) <scheme> [(class TAG)])`.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::*;
use crate::formula::parse::{formula_of, ParseOpts};
use crate::sexpr::{self, Sexp};

fn default_on(s: usize) -> Sort {
    if s > 0 {
        Sort::Safe
    } else {
        Sort::Normal
    }
}

fn on_prefix(on: Sort, s: usize) -> &'static str {
    if on == default_on(s) {
        ""
    } else if on == Sort::Normal {
        "normal "
    } else {
        "safe "
    }
}

pub fn print_def(d: &FunctionDef) -> String {
    let xs: Vec<String> = (0..d.normal_arity).map(|i| format!("x{}", i)).collect();
    let as_: Vec<String> = (0..d.safe_arity).map(|i| format!("a{}", i)).collect();
    let mut out = format!(
        "(def {} (({}) ({})) {}",
        d.name,
        xs.join(" "),
        as_.join(" "),
        print_scheme(&d.body, d.safe_arity)
    );
    if let Some(t) = d.tag {
        out.push_str(&format!(" (class {})", t));
    }
    out.push(')');
    out
}

fn sub(d: &FunctionDef) -> String {
    print_scheme(&d.body, d.safe_arity)
}

fn print_scheme(b: &SchemeNode, s: usize) -> String {
    use SchemeNode::*;
    match b {
        Proj(i) => format!("(proj {})", i),
        Pair => "(pair)".into(),
        Diff => "(diff)".into(),
        Lib(x) => format!("(lib {})", x.name()),
        Oracle(g) => format!("(oracle {})", g),
        BoundedUnion { g, on } => format!("(bunion {}{})", on_prefix(*on, s), sub(g)),
        Compose { h, gs } => {
            let mut out = format!("(comp {}", sub(h));
            for g in gs {
                out.push(' ');
                out.push_str(&sub(g));
            }
            out.push(')');
            out
        }
        SetRecursion { h } => format!("(setrec {})", sub(h)),
        SafeCompose { h, rs, ts } => format!(
            "(safecomp {} ({}) ({}))",
            sub(h),
            rs.iter().map(|r| sub(r)).collect::<Vec<_>>().join(" "),
            ts.iter().map(|t| sub(t)).collect::<Vec<_>>().join(" ")
        ),
        PredicativeSetRecursion { h } => format!("(predrec {})", sub(h)),
        Delta0Separation { theta, on } => format!("(sep {}{})", on_prefix(*on, s), theta),
        Iota { g, on } => format!("(iota {}{})", on_prefix(*on, s), sub(g)),
        NormalSeparation { g, on } => format!("(nsep {}{})", on_prefix(*on, s), sub(g)),
    }
}

pub fn print_defs(defs: &[FunctionDef]) -> String {
    let mut out = String::new();
    for d in defs {
        out.push_str(&print_def(d));
        out.push('\n');
    }
    out
}

type Env = BTreeMap<String, Arc<FunctionDef>>;

const OPTS: ParseOpts = ParseOpts {
    allow_reserved: true,
};

fn sub_def(e: &Sexp, n: usize, s: usize, env: &Env) -> Result<Arc<FunctionDef>> {
    if e.head() == Some("ref") {
        let v = e.expect_list()?;
        let name = v
            .get(1)
            .ok_or_else(|| e.error("`ref` needs a name"))?
            .expect_atom()?;
        let d = env
            .get(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
        if d.normal_arity != n || d.safe_arity != s {
            return Err(e.error(format!(
                "`{}` has arity ({}/{}), expected ({}/{})",
                name, d.normal_arity, d.safe_arity, n, s
            )));
        }
        return Ok(d.clone());
    }
    Ok(Arc::new(FunctionDef::anon(n, s, scheme_of(e, n, s, env)?)))
}

/// Splits an optional leading `normal`/`safe` keyword.
fn sorted_arg<'a>(v: &'a [Sexp], s: usize) -> Result<(Sort, &'a Sexp)> {
    match v {
        [x] => Ok((default_on(s), x)),
        [k, x] if k.atom() == Some("normal") => Ok((Sort::Normal, x)),
        [k, x] if k.atom() == Some("safe") => Ok((Sort::Safe, x)),
        _ => Err(v
            .first()
            .map(|x| x.error("malformed scheme arguments"))
            .unwrap_or_else(|| Error::Parse {
                line: 0,
                col: 0,
                msg: "missing scheme argument".into(),
            })),
    }
}

pub(crate) fn scheme_of(e: &Sexp, n: usize, s: usize, env: &Env) -> Result<SchemeNode> {
    let v = e.expect_list()?;
    let head = e.head().ok_or_else(|| e.error("expected a scheme"))?;
    let rest = &v[1..];
    let need = |k: usize| -> Result<()> {
        if rest.len() != k {
            Err(e.error(format!("`{}` expects {} arguments", head, k)))
        } else {
            Ok(())
        }
    };
    use SchemeNode::*;
    Ok(match head {
        "proj" => {
            need(1)?;
            let i: usize = rest[0]
                .expect_atom()?
                .parse()
                .map_err(|_| rest[0].error("expected an index"))?;
            Proj(i)
        }
        "pair" => {
            need(0)?;
            Pair
        }
        "diff" => {
            need(0)?;
            Diff
        }
        "lib" => {
            need(1)?;
            let name = rest[0].expect_atom()?;
            Lib(Builtin::from_name(name).ok_or_else(|| Error::UnknownSymbol(name.to_string()))?)
        }
        "oracle" => {
            need(1)?;
            Oracle(rest[0].expect_atom()?.to_string())
        }
        "bunion" => {
            let (on, g) = sorted_arg(rest, s)?;
            BoundedUnion {
                g: sub_def(g, n, s, env)?,
                on,
            }
        }
        "iota" => {
            let (on, g) = sorted_arg(rest, s)?;
            Iota {
                g: sub_def(g, n, s, env)?,
                on,
            }
        }
        "nsep" => {
            let (on, g) = sorted_arg(rest, s)?;
            NormalSeparation {
                g: sub_def(g, n, s, env)?,
                on,
            }
        }
        "sep" => {
            let (on, f) = sorted_arg(rest, s)?;
            Delta0Separation {
                theta: formula_of(f, OPTS)?,
                on,
            }
        }
        "comp" => {
            if rest.is_empty() {
                return Err(e.error("`comp` needs an outer function"));
            }
            let k = rest.len() - 1;
            Compose {
                h: sub_def(&rest[0], k, 0, env)?,
                gs: rest[1..]
                    .iter()
                    .map(|g| sub_def(g, n, s, env))
                    .collect::<Result<_>>()?,
            }
        }
        "setrec" => {
            need(1)?;
            SetRecursion {
                h: sub_def(&rest[0], n + 1, 0, env)?,
            }
        }
        "predrec" => {
            need(1)?;
            PredicativeSetRecursion {
                h: sub_def(&rest[0], n, s + 1, env)?,
            }
        }
        "safecomp" => {
            need(3)?;
            let rs = rest[1].expect_list()?;
            let ts = rest[2].expect_list()?;
            SafeCompose {
                h: sub_def(&rest[0], rs.len(), ts.len(), env)?,
                rs: rs
                    .iter()
                    .map(|r| sub_def(r, n, 0, env))
                    .collect::<Result<_>>()?,
                ts: ts
                    .iter()
                    .map(|t| sub_def(t, n, s, env))
                    .collect::<Result<_>>()?,
            }
        }
        o => return Err(e.error(format!("unknown scheme `{}`", o))),
    })
}

fn def_with_env(e: &Sexp, env: &Env) -> Result<FunctionDef> {
    if e.head() != Some("def") {
        return Err(e.error("expected `(def name ((normals) (safes)) scheme)`"));
    }
    let v = e.expect_list()?;
    if v.len() != 4 && v.len() != 5 {
        return Err(e.error("`def` expects a name, an argument list and a scheme"));
    }
    let name = v[1].expect_atom()?.to_string();
    let args = v[2].expect_list()?;
    if args.len() != 2 {
        return Err(v[2].error("expected ((normals...) (safes...))"));
    }
    let n = args[0].expect_list()?.len();
    let s = args[1].expect_list()?.len();
    let body = scheme_of(&v[3], n, s, env)?;
    let mut d = FunctionDef::new(&name, n, s, body);
    if let Some(c) = v.get(4) {
        let cv = c.expect_list()?;
        if c.head() != Some("class") || cv.len() != 2 {
            return Err(c.error("expected `(class TAG)`"));
        }
        let t = cv[1].expect_atom()?;
        d.tag =
            Some(ClassTag::parse(t).ok_or_else(|| cv[1].error(format!("unknown class `{}`", t)))?);
    }
    Ok(d)
}

/// One definition from an already-read S-expression.
pub fn def_of(e: &Sexp, _opts: ParseOpts) -> Result<FunctionDef> {
    def_with_env(e, &Env::new())
}

pub fn parse_def(src: &str) -> Result<FunctionDef> {
    def_with_env(&sexpr::parse_one(src)?, &Env::new())
}

/// A definition file. Later definitions may use `(ref name)` for earlier ones.
pub fn parse_defs(src: &str) -> Result<Vec<FunctionDef>> {
    let mut env = Env::new();
    let mut out = Vec::new();
    for e in sexpr::parse_all(src)? {
        let d = def_with_env(&e, &env)?;
        if env.contains_key(&d.name) {
            return Err(Error::DuplicateSymbol(d.name));
        }
        env.insert(d.name.clone(), Arc::new(d.clone()));
        out.push(d);
    }
    Ok(out)
}
