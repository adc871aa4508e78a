//! Propositional formulas over independent probabilistic atoms.
//!
//! Two exact engines are provided. [`infer_enumeration`] sums the weight of
//! every satisfying truth assignment (possible-worlds semantics) and works on
//! any formula. [`infer_compositional`] folds probabilities bottom-up and is
//! only valid when sibling subtrees mention disjoint atoms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Enumeration refuses formulas with more distinct atoms than this.
pub const MAX_ENUMERATION_ATOMS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    And,
    Or,
    Xor,
}

impl Op {
    pub const ALL: [Op; 3] = [Op::And, Op::Or, Op::Xor];

    pub fn symbol(self) -> char {
        match self {
            Op::And => '&',
            Op::Or => '|',
            Op::Xor => '^',
        }
    }

    pub fn apply(self, a: bool, b: bool) -> bool {
        match self {
            Op::And => a && b,
            Op::Or => a || b,
            Op::Xor => a != b,
        }
    }

    /// Combine the probabilities of two independent events.
    pub fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            Op::And => a * b,
            Op::Or => a + b - a * b,
            Op::Xor => a * (1.0 - b) + (1.0 - a) * b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(u32),
    Node(Op, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(id: u32) -> Self {
        Formula::Atom(id)
    }

    pub fn node(op: Op, left: Formula, right: Formula) -> Self {
        Formula::Node(op, Box::new(left), Box::new(right))
    }

    /// Distinct atom ids, ascending.
    pub fn atoms(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<u32>) {
        match self {
            Formula::Atom(id) => {
                out.insert(*id);
            }
            Formula::Node(_, l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    /// Truth value under an assignment given as a lookup from atom id.
    pub fn eval(&self, truth: &impl Fn(u32) -> bool) -> bool {
        match self {
            Formula::Atom(id) => truth(*id),
            Formula::Node(op, l, r) => op.apply(l.eval(truth), r.eval(truth)),
        }
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Formula::Atom(_))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(id) => write!(f, "f{id}"),
            Formula::Node(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

/// Probability of each atom id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbMap(BTreeMap<u32, f64>);

impl ProbMap {
    pub fn new() -> Self {
        ProbMap::default()
    }

    pub fn insert(&mut self, id: u32, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!(
                "probability {p} for f{id} outside [0, 1]"
            )));
        }
        self.0.insert(id, p);
        Ok(())
    }

    pub fn get(&self, id: u32) -> Option<f64> {
        self.0.get(&id).copied()
    }

    fn require(&self, id: u32) -> Result<f64> {
        self.get(id)
            .ok_or_else(|| Error::domain(format!("no probability for atom f{id}")))
    }

    /// Atom `i` gets `probs[i]`.
    pub fn from_slice(probs: &[f64]) -> Result<Self> {
        let mut m = ProbMap::new();
        for (i, &p) in probs.iter().enumerate() {
            m.insert(i as u32, p)?;
        }
        Ok(m)
    }
}

pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let f = p.formula()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        let message = if matches!(p.src[p.pos], b'&' | b'|' | b'^') {
            "binary operators must be enclosed in parentheses".to_owned()
        } else {
            format!("unexpected trailing input {:?}", p.src[p.pos] as char)
        };
        return Err(p.error(message));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn formula(&mut self) -> Result<Formula> {
        match self.peek() {
            Some(b'f') => self.atom(),
            Some(b'(') => {
                self.pos += 1;
                let left = self.formula()?;
                let op = match self.peek() {
                    Some(b'&') => Op::And,
                    Some(b'|') => Op::Or,
                    Some(b'^') => Op::Xor,
                    Some(c) => {
                        return Err(self.error(format!("expected operator, found {:?}", c as char)))
                    }
                    None => return Err(self.error("expected operator, found end of input")),
                };
                self.pos += 1;
                let right = self.formula()?;
                match self.peek() {
                    Some(b')') => self.pos += 1,
                    Some(b'&' | b'|' | b'^') => {
                        return Err(self.error("chained operators must be parenthesized"))
                    }
                    Some(c) => {
                        return Err(self.error(format!("expected ')', found {:?}", c as char)))
                    }
                    None => return Err(self.error("expected ')', found end of input")),
                }
                Ok(Formula::node(op, left, right))
            }
            Some(c) => Err(self.error(format!("expected atom or '(', found {:?}", c as char))),
            None => Err(self.error("expected atom or '(', found end of input")),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected atom index after 'f'"));
        }
        // Only ASCII digits were consumed.
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        digits
            .parse::<u32>()
            .map(Formula::Atom)
            .map_err(|_| Error::Syntax {
                offset: start,
                message: format!("atom index {digits} out of range"),
            })
    }
}

/// Textual rendering of a formula with the given fact fragments.
///
/// Two atoms joined by a connective read plainly ("A and B"). When either
/// operand is itself compound, the connective is preceded by a comma, and a
/// compound conjunction on the right is introduced with "both".
pub fn render_formula_nl(f: &Formula, fact_texts: &[impl AsRef<str>]) -> Result<String> {
    match f {
        Formula::Atom(id) => fact_texts
            .get(*id as usize)
            .map(|t| t.as_ref().to_owned())
            .ok_or_else(|| Error::domain(format!("no fact text for atom f{id}"))),
        Formula::Node(op, l, r) => {
            let left = render_formula_nl(l, fact_texts)?;
            let mut right = render_formula_nl(r, fact_texts)?;
            if matches!(**r, Formula::Node(Op::And, _, _)) {
                right = format!("both {right}");
            }
            let sep = if l.is_atom() && r.is_atom() { "" } else { "," };
            Ok(match op {
                Op::And => format!("{left}{sep} and {right}"),
                Op::Or => format!("{left}{sep} or {right}"),
                Op::Xor => format!("either {left}{sep} or {right}{sep} but not both"),
            })
        }
    }
}

/// Exact probability by summing over all truth assignments of the atoms.
pub fn infer_enumeration(f: &Formula, probs: &ProbMap) -> Result<f64> {
    let atoms: Vec<u32> = f.atoms().into_iter().collect();
    if atoms.len() > MAX_ENUMERATION_ATOMS {
        return Err(Error::Capacity(format!(
            "{} distinct atoms exceeds the enumeration limit of {MAX_ENUMERATION_ATOMS}",
            atoms.len()
        )));
    }
    let p: Vec<f64> = atoms
        .iter()
        .map(|&a| probs.require(a))
        .collect::<Result<_>>()?;
    let slot: BTreeMap<u32, usize> = atoms.iter().enumerate().map(|(i, &a)| (a, i)).collect();

    let mut total = 0.0;
    for world in 0u32..(1u32 << atoms.len()) {
        let truth = |id: u32| world & (1 << slot[&id]) != 0;
        if f.eval(&truth) {
            total += p
                .iter()
                .enumerate()
                .map(|(i, &pi)| if world & (1 << i) != 0 { pi } else { 1.0 - pi })
                .product::<f64>();
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Bottom-up probability for formulas whose sibling subtrees share no atoms.
pub fn infer_compositional(f: &Formula, probs: &ProbMap) -> Result<f64> {
    Ok(compose(f, probs)?.0)
}

fn compose(f: &Formula, probs: &ProbMap) -> Result<(f64, BTreeSet<u32>)> {
    match f {
        Formula::Atom(id) => Ok((probs.require(*id)?, BTreeSet::from([*id]))),
        Formula::Node(op, l, r) => {
            let (a, mut la) = compose(l, probs)?;
            let (b, ra) = compose(r, probs)?;
            if let Some(shared) = la.intersection(&ra).next() {
                return Err(Error::Structure(format!(
                    "atom f{shared} occurs on both sides of {f}"
                )));
            }
            la.extend(ra);
            Ok((op.combine(a, b), la))
        }
    }
}
