//! Propositional formulas over named events: `x & !(y | z)`.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    Const(bool),
    Var(String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn parse(text: &str) -> Result<Formula> {
        let mut p = Parser { text, pos: 0 };
        let f = p.or()?;
        p.skip_ws();
        if p.pos < text.len() {
            return Err(Error::Parse { pos: p.pos, msg: "unexpected trailing input".into() });
        }
        Ok(f)
    }

    pub fn eval(&self, nu: &dyn Fn(&str) -> bool) -> bool {
        match self {
            Formula::Const(b) => *b,
            Formula::Var(x) => nu(x),
            Formula::Not(f) => !f.eval(nu),
            Formula::And(fs) => fs.iter().all(|f| f.eval(nu)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(nu)),
        }
    }

    pub fn events(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Const(_) => {}
            Formula::Var(x) => {
                out.insert(x.clone());
            }
            Formula::Not(f) => f.collect(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect(out)),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, fs: &[Formula], op: &str| -> fmt::Result {
            write!(f, "(")?;
            for (i, x) in fs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, ")")
        };
        match self {
            Formula::Const(b) => write!(f, "{b}"),
            Formula::Var(x) => write!(f, "{x}"),
            Formula::Not(x) => write!(f, "!{x}"),
            Formula::And(fs) => join(f, fs, "&"),
            Formula::Or(fs) => join(f, fs, "|"),
        }
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.text[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<Formula> {
        let mut parts = vec![self.and()?];
        while self.eat('|') {
            parts.push(self.and()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
    }

    fn and(&mut self) -> Result<Formula> {
        let mut parts = vec![self.atom()?];
        while self.eat('&') {
            parts.push(self.atom()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::And(parts) })
    }

    fn atom(&mut self) -> Result<Formula> {
        if self.eat('!') {
            return Ok(Formula::Not(Box::new(self.atom()?)));
        }
        if self.eat('(') {
            let f = self.or()?;
            if !self.eat(')') {
                return Err(Error::Parse { pos: self.pos, msg: "expected ')'".into() });
            }
            return Ok(f);
        }
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest.find(|c: char| !(c == '_' || c.is_ascii_alphanumeric())).unwrap_or(rest.len());
        if len == 0 {
            return Err(Error::Parse { pos: self.pos, msg: "expected an event name".into() });
        }
        self.pos += len;
        Ok(match &rest[..len] {
            "true" => Formula::Const(true),
            "false" => Formula::Const(false),
            x => Formula::Var(x.to_string()),
        })
    }
}
