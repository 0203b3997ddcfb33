//! Unions of conjunctive queries: syntax, brute-force evaluation,
//! compilation to tree automata and `N[X]` provenance.
//!
//! Grammar: `R(x,y), S(y) ; T(x,x)` where `,` is conjunction and `;` is
//! disjunction. All variables are existential unless a head such as
//! `q(x) :- R(x,y)` lists free variables. Repeating an atom raises its
//! multiplicity.

mod compile;
mod eval;
mod provenance;

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

pub use compile::{
    compile_bag, compile_bool, BagAutomaton, BoolAutomaton, DupMerge, ExactlyOne, MatchAutomaton, MatchState,
};
pub use eval::{
    bag_holds, count_projections, enumerate_matches, holds, nx_provenance_bruteforce, tropical_bruteforce, Match,
};
pub use provenance::{bool_provenance, nx_provenance, p_relation};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub rel: String,
    pub args: Vec<String>,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.rel, self.args.join(","))
    }
}

/// A conjunctive query: a list of atoms (repetitions allowed) and
/// inequalities between variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cq {
    pub atoms: Vec<Atom>,
    pub neq: Vec<(String, String)>,
}

impl Cq {
    /// Variables in order of first occurrence.
    pub fn vars(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for a in &self.atoms {
            for v in &a.args {
                if seen.insert(v.clone()) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    /// Number of occurrences of `atom` in the query.
    pub fn multiplicity(&self, atom: &Atom) -> usize {
        self.atoms.iter().filter(|a| *a == atom).count()
    }
}

impl fmt::Display for Cq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.atoms.iter().map(Atom::to_string).collect();
        parts.extend(self.neq.iter().map(|(x, y)| format!("{x}!={y}")));
        write!(f, "{}", parts.join(", "))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ucq {
    pub disjuncts: Vec<Cq>,
    /// Free variables; empty for Boolean queries.
    pub free: Vec<String>,
}

impl Ucq {
    pub fn is_boolean(&self) -> bool {
        self.free.is_empty()
    }

    /// The largest number of atoms in a disjunct.
    pub fn max_atoms(&self) -> usize {
        self.disjuncts.iter().map(|d| d.atoms.len()).max().unwrap_or(0)
    }

    pub fn relations(&self) -> BTreeSet<(String, usize)> {
        self.disjuncts.iter().flat_map(|d| d.atoms.iter().map(|a| (a.rel.clone(), a.args.len()))).collect()
    }

    pub fn parse(text: &str) -> Result<Ucq> {
        parse_ucq(text)
    }
}

impl fmt::Display for Ucq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.free.is_empty() {
            write!(f, "q({}) :- ", self.free.join(","))?;
        }
        let parts: Vec<String> = self.disjuncts.iter().map(Cq::to_string).collect();
        write!(f, "{}", parts.join(" ; "))
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            self.err(format!("expected {token:?}"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest
            .char_indices()
            .find(|&(i, c)| !(c == '_' || c.is_ascii_alphanumeric()) || (i == 0 && c.is_ascii_digit()))
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return self.err("expected an identifier");
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }

    fn args(&mut self) -> Result<Vec<String>> {
        self.expect("(")?;
        let mut args = Vec::new();
        if self.eat(")") {
            return Ok(args);
        }
        loop {
            args.push(self.ident()?);
            if self.eat(")") {
                return Ok(args);
            }
            self.expect(",")?;
        }
    }

    fn cq(&mut self) -> Result<Cq> {
        let mut cq = Cq::default();
        loop {
            let start = self.pos;
            let rel = self.ident()?;
            let args = self.args()?;
            if args.is_empty() {
                self.pos = start;
                return self.err("atoms need at least one argument");
            }
            cq.atoms.push(Atom { rel, args });
            if !self.eat(",") {
                return Ok(cq);
            }
        }
    }
}

/// Parses a UCQ; errors carry the byte offset of the problem.
pub fn parse_ucq(text: &str) -> Result<Ucq> {
    let mut p = Parser { text, pos: 0 };
    let mut free = Vec::new();
    if text.contains(":-") {
        p.ident()?;
        free = p.args()?;
        p.expect(":-")?;
    }
    let mut disjuncts = vec![p.cq()?];
    while p.eat(";") {
        disjuncts.push(p.cq()?);
    }
    if p.peek().is_some() {
        return p.err("unexpected trailing input");
    }
    let q = Ucq { disjuncts, free };
    for (i, d) in q.disjuncts.iter().enumerate() {
        let vars = d.vars();
        if let Some(x) = q.free.iter().find(|x| !vars.contains(x)) {
            return Err(Error::Parse { pos: text.len(), msg: format!("free variable {x} missing from disjunct {}", i + 1) });
        }
    }
    let mut arities = std::collections::HashMap::new();
    for (rel, arity) in q.relations() {
        if let Some(a) = arities.insert(rel.clone(), arity) {
            if a != arity {
                return Err(Error::Parse { pos: text.len(), msg: format!("relation {rel} used with arities {a} and {arity}") });
            }
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing() {
        let q = parse_ucq("R(x,y),R(y,x)").unwrap();
        assert_eq!(q.disjuncts.len(), 1);
        assert_eq!(q.disjuncts[0].atoms.len(), 2);
        assert_eq!(parse_ucq("R(x);S(x)").unwrap().disjuncts.len(), 2);
        let q = parse_ucq("R(x), R(x)").unwrap();
        assert_eq!(q.disjuncts[0].multiplicity(&q.disjuncts[0].atoms[0]), 2);
        let q = parse_ucq("q(x) :- R(x,y)").unwrap();
        assert_eq!(q.free, vec!["x"]);
        assert_eq!(q.to_string(), "q(x) :- R(x,y)");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_ucq("R(x,"), Err(Error::Parse { pos: 4, .. })));
        assert!(matches!(parse_ucq("R(x) S(x)"), Err(Error::Parse { pos: 5, .. })));
        assert!(parse_ucq("R()").is_err());
        assert!(parse_ucq("q(z) :- R(x)").is_err());
        assert!(parse_ucq("R(x), R(x,y)").is_err());
        assert!(parse_ucq("").is_err());
    }
}
