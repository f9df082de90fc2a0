//! The `[(X₁|w₁),…,(X_N|w_N)]` cost-expression syntax and its evaluation as a
//! weighted sum of partial costs.
//!
//! Grammar (whitespace allowed between any two tokens):
//!
//! ```text
//! spec   := '[' term (',' term)* ']'
//! term   := '(' id '|' number ')'
//! id     := A | J | SA | SR | E | Y | LC | V | O | D | L | T | TO | TG | K | κ | C | LV | BD
//! number := ['+'|'-'] digits ['.' digits] [('e'|'E') ['+'|'-'] digits]
//! ```

use std::fmt;
use std::str::FromStr;

use crate::costs::{partial_cost, CostId, EvaluationContext};
use crate::error::{Error, Requirement, Result};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub id: CostId,
    pub weight: f64,
}

impl Term {
    pub fn new(id: CostId, weight: f64) -> Self {
        Self { id, weight }
    }
}

/// Weighted list of partial costs. Duplicate identifiers are allowed and
/// simply add up.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    terms: Vec<Term>,
}

impl CostSpec {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidInput("cost spec needs at least one term".into()));
        }
        if let Some(t) = terms.iter().find(|t| !t.weight.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "weight of {} is not finite",
                t.id
            )));
        }
        Ok(Self { terms })
    }

    pub fn from_pairs(pairs: &[(CostId, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(id, w)| Term::new(id, w)).collect())
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.terms
                .iter()
                .map(|t| Term::new(t.id, t.weight * factor))
                .collect(),
        )
    }

    pub fn concat(&self, other: &CostSpec) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self { terms }
    }

    /// Every context requirement the spec's terms leave unmet.
    pub fn missing_requirements(&self, ctx: &EvaluationContext<'_>) -> Vec<Requirement> {
        let mut out: Vec<Requirement> = Vec::new();
        for t in &self.terms {
            if let Some(needs) = ctx.missing_for(t.id) {
                if !out.iter().any(|r| r.partial == t.id) {
                    out.push(Requirement {
                        partial: t.id,
                        needs,
                    });
                }
            }
        }
        out
    }
}

impl fmt::Display for CostSpec {
    /// Canonical form: no spaces, ASCII identifiers, shortest round-trip
    /// decimal weights.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "({}|{})", t.id, t.weight)?;
        }
        f.write_str("]")
    }
}

impl FromStr for CostSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_cost_expr(s)
    }
}

pub fn format_cost_expr(spec: &CostSpec) -> String {
    spec.to_string()
}

pub fn parse_cost_expr(text: &str) -> Result<CostSpec> {
    Parser::new(text).spec()
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self { text, pos: 0 }
    }

    fn error<T>(&self, position: usize, reason: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            position,
            reason: reason.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn expect(&mut self, want: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == want => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(c) => self.error(self.pos, format!("expected '{want}', found '{c}'")),
            None => self.error(self.pos, format!("expected '{want}', found end of input")),
        }
    }

    fn spec(&mut self) -> Result<CostSpec> {
        self.expect('[')?;
        if self.peek() == Some(']') {
            return self.error(self.pos, "empty term list");
        }
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Some(',') => {
                    self.pos += 1;
                    terms.push(self.term()?);
                }
                Some(']') => {
                    self.pos += 1;
                    break;
                }
                Some(c) => return self.error(self.pos, format!("expected ',' or ']', found '{c}'")),
                None => return self.error(self.pos, "unbalanced brackets: missing ']'"),
            }
        }
        if let Some(c) = self.peek() {
            return self.error(self.pos, format!("unexpected '{c}' after closing ']'"));
        }
        CostSpec::new(terms)
    }

    fn term(&mut self) -> Result<Term> {
        self.expect('(')?;
        self.skip_ws();
        let start = self.pos;
        let len: usize = self
            .rest()
            .chars()
            .take_while(|c| c.is_alphabetic())
            .map(char::len_utf8)
            .sum();
        let token = &self.text[start..start + len];
        if token.is_empty() {
            return self.error(start, "missing cost identifier");
        }
        let id = match CostId::from_token(token) {
            Some(id) => id,
            None => return self.error(start, format!("unknown cost identifier '{token}'")),
        };
        self.pos += len;
        self.expect('|')?;
        let weight = self.number()?;
        self.expect(')')?;
        Ok(Term::new(id, weight))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.rest().as_bytes();
        let mut i = 0;
        let digits = |i: &mut usize| {
            let from = *i;
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
            *i - from
        };
        if i < bytes.len() && matches!(bytes[i], b'+' | b'-') {
            i += 1;
        }
        let int_digits = digits(&mut i);
        let mut frac_digits = 0;
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            frac_digits = digits(&mut i);
        }
        if int_digits + frac_digits == 0 {
            return self.error(start, "missing weight");
        }
        if i < bytes.len() && matches!(bytes[i], b'e' | b'E') {
            let mut j = i + 1;
            if j < bytes.len() && matches!(bytes[j], b'+' | b'-') {
                j += 1;
            }
            if digits(&mut j) == 0 {
                return self.error(start + i, "malformed exponent");
            }
            i = j;
        }
        let literal = &self.text[start..start + i];
        let value: f64 = match literal.parse() {
            Ok(v) => v,
            Err(_) => return self.error(start, format!("malformed weight '{literal}'")),
        };
        if !value.is_finite() {
            return self.error(start, format!("weight '{literal}' is not finite"));
        }
        self.pos += i;
        Ok(value)
    }
}

/// One line of an evaluation breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct TermValue {
    pub label: String,
    pub id: Option<CostId>,
    pub weight: f64,
    /// Unweighted partial (or, for state-dependent weights, the integral with
    /// the weight already inside).
    pub value: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub total: f64,
    pub terms: Vec<TermValue>,
}

impl Evaluation {
    pub(crate) fn from_terms(terms: Vec<TermValue>) -> Self {
        let total = terms.iter().map(|t| t.contribution).sum();
        Self { total, terms }
    }
}

/// `Σᵢ wᵢ·J_{Xᵢ}` with a per-term breakdown.
pub fn evaluate(spec: &CostSpec, trajectory: &Trajectory, ctx: &EvaluationContext<'_>) -> Result<Evaluation> {
    let missing = spec.missing_requirements(ctx);
    if !missing.is_empty() {
        return Err(Error::MissingContext(missing));
    }
    let terms = spec
        .terms()
        .iter()
        .enumerate()
        .map(|(index, t)| {
            let value = partial_cost(t.id, trajectory, ctx).map_err(|e| Error::Term {
                index,
                id: t.id,
                source: Box::new(e),
            })?;
            Ok(TermValue {
                label: t.id.to_string(),
                id: Some(t.id),
                weight: t.weight,
                value,
                contribution: t.weight * value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation::from_terms(terms))
}

/// Anything that scores a trajectory: plain specs and named cost functions.
pub trait Objective: Sync {
    fn evaluate(&self, trajectory: &Trajectory, ctx: &EvaluationContext<'_>) -> Result<Evaluation>;

    /// Context requirements left unmet, checked before any candidate runs.
    fn missing_requirements(&self, ctx: &EvaluationContext<'_>) -> Vec<Requirement>;
}

impl Objective for CostSpec {
    fn evaluate(&self, trajectory: &Trajectory, ctx: &EvaluationContext<'_>) -> Result<Evaluation> {
        evaluate(self, trajectory, ctx)
    }

    fn missing_requirements(&self, ctx: &EvaluationContext<'_>) -> Vec<Requirement> {
        CostSpec::missing_requirements(self, ctx)
    }
}
