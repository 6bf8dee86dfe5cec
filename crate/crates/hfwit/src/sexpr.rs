//! Minimal S-expression reader shared by every file format.
//!
//! Atoms are runs of non-space characters other than parentheses; a balanced
//! `{...}` run is read as one atom so that set literals can appear inline.
//! `;` starts a comment that runs to end of line.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v, _) => Some(v),
            _ => None,
        }
    }

    /// The head atom of a list, if any.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|v| v.first()).and_then(|h| h.atom())
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        let p = self.pos();
        Error::Parse {
            line: p.line,
            col: p.col,
            msg: msg.into(),
        }
    }

    pub fn expect_atom(&self) -> Result<&str> {
        self.atom().ok_or_else(|| self.error("expected an atom"))
    }

    pub fn expect_list(&self) -> Result<&[Sexp]> {
        self.list().ok_or_else(|| self.error("expected a list"))
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(s, _) => write!(f, "{}", s),
            Sexp::List(v, _) => {
                write!(f, "(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{}", x)?;
                }
                write!(f, ")")
            }
        }
    }
}

struct Reader<'a> {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
    _src: &'a str,
}

impl<'a> Reader<'a> {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            line: self.line,
            col: self.col,
            msg: msg.to_string(),
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = *self.chars.get(self.i)?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn skip(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Sexp> {
        self.skip();
        let start = self.pos();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(')') => Err(self.err("unexpected `)`")),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip();
                    match self.peek() {
                        None => return Err(self.err("unterminated list")),
                        Some(')') => {
                            self.bump();
                            return Ok(Sexp::List(items, start));
                        }
                        _ => items.push(self.read()?),
                    }
                }
            }
            Some('{') => {
                let mut depth = 0usize;
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.err("unterminated set literal")),
                        Some(c) => {
                            if c == '{' {
                                depth += 1;
                            } else if c == '}' {
                                depth -= 1;
                            }
                            s.push(c);
                            if depth == 0 {
                                return Ok(Sexp::Atom(s, start));
                            }
                        }
                    }
                }
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Sexp::Atom(s, start))
            }
        }
    }
}

/// Reads every top-level expression in `src`.
pub fn parse_all(src: &str) -> Result<Vec<Sexp>> {
    let mut r = Reader {
        chars: src.chars().collect(),
        i: 0,
        line: 1,
        col: 1,
        _src: src,
    };
    let mut out = Vec::new();
    loop {
        r.skip();
        if r.peek().is_none() {
            return Ok(out);
        }
        out.push(r.read()?);
    }
}

/// Reads exactly one expression.
pub fn parse_one(src: &str) -> Result<Sexp> {
    let mut all = parse_all(src)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => Err(Error::Parse {
            line: 1,
            col: 1,
            msg: "empty input".into(),
        }),
        _ => Err(all[1].error("expected a single expression")),
    }
}

pub fn atom(s: &str) -> Sexp {
    Sexp::Atom(s.to_string(), Pos::default())
}

pub fn list(v: Vec<Sexp>) -> Sexp {
    Sexp::List(v, Pos::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_and_literals() {
        let s = parse_one("(a (b {{} {{}}}) ; note\n c)").unwrap();
        assert_eq!(s.to_string(), "(a (b {{} {{}}}) c)");
        assert_eq!(s.head(), Some("a"));
    }

    #[test]
    fn reports_positions() {
        match parse_one("(a\n  (b") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{:?}", other),
        }
        assert!(parse_one(")").is_err());
        assert!(parse_one("a b").is_err());
    }
}
