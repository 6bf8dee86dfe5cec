//! Size polynomials: bounds on `card TC(f(x⃗/a⃗))` in terms of the normal
//! argument sizes, plus the implicit `Σ card TC(a_i)` over safe arguments.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};

use super::*;

/// A polynomial with nonnegative integer coefficients. Keys are exponent
/// vectors over `nvars` variables, printed `x1..xn`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizePolynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, u64>,
}

impl SizePolynomial {
    pub fn zero(nvars: usize) -> SizePolynomial {
        SizePolynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: u64) -> SizePolynomial {
        let mut p = SizePolynomial::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The variable `x_{i+1}`.
    pub fn var(nvars: usize, i: usize) -> SizePolynomial {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = SizePolynomial::zero(nvars);
        p.add_term(e, 1);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    fn add_term(&mut self, e: Vec<u32>, c: u64) {
        if c == 0 {
            return;
        }
        let slot = self.terms.entry(e).or_insert(0);
        *slot = slot.saturating_add(c);
    }

    pub fn eval(&self, xs: &[u64]) -> u64 {
        assert_eq!(xs.len(), self.nvars, "size polynomial arity");
        self.terms.iter().fold(0u64, |acc, (e, c)| {
            let m = e
                .iter()
                .zip(xs)
                .fold(*c, |m, (k, x)| m.saturating_mul(x.saturating_pow(*k)));
            acc.saturating_add(m)
        })
    }

    pub fn pow(&self, k: u32) -> SizePolynomial {
        (0..k).fold(SizePolynomial::constant(self.nvars, 1), |acc, _| {
            &acc * self
        })
    }

    /// `p(q_1, …, q_n)`; all `q_i` share one variable count.
    pub fn substitute(&self, qs: &[SizePolynomial], nvars: usize) -> SizePolynomial {
        assert_eq!(qs.len(), self.nvars, "substitution arity");
        let mut out = SizePolynomial::zero(nvars);
        for (e, c) in &self.terms {
            let mut m = SizePolynomial::constant(nvars, *c);
            for (q, k) in qs.iter().zip(e) {
                if *k > 0 {
                    m = &m * &q.pow(*k);
                }
            }
            out = &out + &m;
        }
        out
    }

    pub fn parse(src: &str) -> Result<SizePolynomial> {
        let err = |m: &str| Error::Parse {
            line: 1,
            col: 1,
            msg: format!("size polynomial `{}`: {}", src, m),
        };
        let s: String = src.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(err("empty"));
        }
        let mut monos: Vec<(u64, Vec<(usize, u32)>)> = Vec::new();
        let mut nvars = 0;
        for mono in s.split('+') {
            if mono.is_empty() {
                return Err(err("empty term"));
            }
            let mut coef = 1u64;
            let mut vars = Vec::new();
            for factor in mono.split('*') {
                let digits: String = factor.chars().take_while(|c| c.is_ascii_digit()).collect();
                let rest = &factor[digits.len()..];
                if !digits.is_empty() {
                    coef = coef.saturating_mul(digits.parse().map_err(|_| err("bad number"))?);
                }
                if rest.is_empty() {
                    if digits.is_empty() {
                        return Err(err("empty factor"));
                    }
                    continue;
                }
                let rest = rest
                    .strip_prefix('x')
                    .ok_or_else(|| err("expected a variable x<i>"))?;
                let (idx, exp) = match rest.split_once('^') {
                    Some((i, k)) => (i, k.parse::<u32>().map_err(|_| err("bad exponent"))?),
                    None => (rest, 1),
                };
                let i = if idx.is_empty() {
                    1
                } else {
                    idx.parse::<usize>()
                        .map_err(|_| err("bad variable index"))?
                };
                if i == 0 {
                    return Err(err("variables are numbered from x1"));
                }
                nvars = nvars.max(i);
                vars.push((i - 1, exp));
            }
            monos.push((coef, vars));
        }
        let mut p = SizePolynomial::zero(nvars);
        for (c, vars) in monos {
            let mut e = vec![0; nvars];
            for (i, k) in vars {
                e[i] += k;
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// The same polynomial over more variables.
    pub fn widen(&self, nvars: usize) -> SizePolynomial {
        assert!(nvars >= self.nvars);
        let mut p = SizePolynomial::zero(nvars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            e2.resize(nvars, 0);
            p.add_term(e2, *c);
        }
        p
    }
}

impl Add for &SizePolynomial {
    type Output = SizePolynomial;
    fn add(self, o: &SizePolynomial) -> SizePolynomial {
        assert_eq!(self.nvars, o.nvars);
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(e.clone(), *c);
        }
        p
    }
}

impl Mul for &SizePolynomial {
    type Output = SizePolynomial;
    fn mul(self, o: &SizePolynomial) -> SizePolynomial {
        assert_eq!(self.nvars, o.nvars);
        let mut p = SizePolynomial::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, c1.saturating_mul(*c2));
            }
        }
        p
    }
}

impl fmt::Display for SizePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Highest total degree first, constant last.
        let mut ts: Vec<(&Vec<u32>, &u64)> = self.terms.iter().collect();
        ts.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        let mut parts = Vec::new();
        for (e, c) in ts {
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, k)| **k > 0)
                .map(|(i, k)| {
                    if *k == 1 {
                        format!("x{}", i + 1)
                    } else {
                        format!("x{}^{}", i + 1, k)
                    }
                })
                .collect();
            parts.push(match (vars.is_empty(), *c) {
                (true, c) => c.to_string(),
                (false, 1) => vars.join("*"),
                (false, c) => format!("{}{}", c, vars.join("*")),
            });
        }
        write!(f, "{}", parts.join("+"))
    }
}

/// Extra elements a builtin may create beyond the closures of its inputs.
fn builtin_slack(b: Builtin) -> u64 {
    match b {
        Builtin::Empty | Builtin::Tc => 0,
        Builtin::KPair => 4,
        Builtin::Image | Builtin::Firsts => 2,
        _ => 1,
    }
}

fn normal_sum(n: usize, c: u64) -> SizePolynomial {
    (0..n).fold(SizePolynomial::constant(n, c), |acc, i| {
        &acc + &SizePolynomial::var(n, i)
    })
}

/// A candidate `p_f` built by structural recursion. The candidate bounds
/// the elements of `TC(f(x⃗/a⃗))` outside the closures of the safe
/// arguments, hence Theorem-1 style bounds compose through safe
/// composition. It is only a candidate; `eval::check_size_bound` tests it.
pub fn derive_size_poly(d: &FunctionDef, reg: &Registry) -> Result<SizePolynomial> {
    use SchemeNode::*;
    let n = d.normal_arity;
    Ok(match &d.body {
        Proj(i) => {
            if *i < n {
                SizePolynomial::var(n, *i)
            } else {
                SizePolynomial::zero(n)
            }
        }
        Pair => normal_sum(n, 3),
        Diff => normal_sum(n, 0),
        Lib(b) => normal_sum(n, builtin_slack(*b)),
        Oracle(g) => {
            let o = reg
                .oracle(g)
                .ok_or_else(|| Error::UnknownSymbol(g.clone()))?;
            let p = o.size.as_ref().ok_or_else(|| {
                Error::UnsupportedScheme(format!("oracle `{}` declares no size bound", g))
            })?;
            if p.nvars() > o.normal_arity || o.normal_arity > n {
                return Err(Error::Arity(format!("size bound of oracle `{}`", g)));
            }
            let qs: Vec<SizePolynomial> = (0..o.normal_arity)
                .map(|i| SizePolynomial::var(n, i))
                .collect();
            p.widen(o.normal_arity).substitute(&qs, n)
        }
        Compose { h, gs } => {
            let qs = gs
                .iter()
                .map(|g| derive_size_poly(g, reg))
                .collect::<Result<Vec<_>>>()?;
            derive_size_poly(h, reg)?.substitute(&qs, n)
        }
        SafeCompose { h, rs, ts } => {
            let qs = rs
                .iter()
                .map(|r| derive_size_poly(r, reg))
                .collect::<Result<Vec<_>>>()?;
            let mut p = derive_size_poly(h, reg)?.substitute(&qs, n);
            for t in ts {
                p = &p + &derive_size_poly(t, reg)?;
            }
            p
        }
        PredicativeSetRecursion { h } => {
            // Every z in TC(x)∪{x} adds at most p_h(z, y⃗) new elements plus
            // the set {f(z') : z' ∈ z} itself.
            let ph = derive_size_poly(h, reg)?;
            let step = &ph + &SizePolynomial::constant(n, 1);
            let times = &SizePolynomial::constant(n, 1) + &SizePolynomial::var(n, 0);
            &times * &step
        }
        Delta0Separation { on, .. } | NormalSeparation { on, .. } => {
            if *on == Sort::Normal {
                SizePolynomial::var(n, n - 1)
            } else {
                SizePolynomial::zero(n)
            }
        }
        Iota { g, .. } => derive_size_poly(g, reg)?,
        BoundedUnion { .. } => {
            return Err(Error::UnsupportedScheme(
                "bounded union has no polynomial size bound".into(),
            ))
        }
        SetRecursion { .. } => {
            return Err(Error::UnsupportedScheme(
                "set recursion has no polynomial size bound".into(),
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        for s in ["x1+x2+3", "2x1+3", "x1*x2+x1^2+1", "0", "7"] {
            let p = SizePolynomial::parse(s).unwrap();
            assert_eq!(SizePolynomial::parse(&p.to_string()).unwrap(), p, "{}", s);
        }
        assert_eq!(SizePolynomial::parse("x+x").unwrap().to_string(), "2x1");
        assert!(SizePolynomial::parse("y1").is_err());
    }

    #[test]
    fn substitution() {
        let p = SizePolynomial::parse("x1+x2+3").unwrap();
        let x = SizePolynomial::var(1, 0);
        assert_eq!(p.substitute(&[x.clone(), x], 1).to_string(), "2x1+3");
        let sq = SizePolynomial::parse("x1^2").unwrap();
        let q = SizePolynomial::parse("x1+1").unwrap();
        assert_eq!(sq.substitute(&[q], 1).to_string(), "x1^2+2x1+1");
    }

    #[test]
    fn eval_monotone() {
        let p = SizePolynomial::parse("x1*x2+2x1+5").unwrap();
        assert_eq!(p.eval(&[2, 3]), 15);
        assert!(p.eval(&[3, 3]) >= p.eval(&[2, 3]));
    }
}
