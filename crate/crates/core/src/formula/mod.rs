//! The tensor formula engine: index-string expressions combining addition,
//! scalar multiplication, contraction, traces, outer products, and partial
//! and covariant derivatives.

mod eval;
mod parse;

pub use parse::parse_formula;

use crate::expr::Expr;

/// A parsed tensor formula: a sum of terms, optionally with a target
/// specification `"ID"["letters"] = ...`.
#[derive(Clone, Debug)]
pub struct Formula {
    pub target: Option<TargetSpec>,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug)]
pub struct TargetSpec {
    pub id: String,
    pub letters: Vec<char>,
}

/// One signed term: a scalar coefficient times a contraction chain.
#[derive(Clone, Debug)]
pub struct Term {
    pub coeff: Expr,
    pub operands: Vec<Operand>,
}

#[derive(Clone, Debug)]
pub enum Operand {
    /// `"ID"["letters"]`
    Tensor { id: String, letters: Vec<char> },
    /// `PartialD["μ"]`, binding to the operand on its right
    PartialD { letter: char },
    /// `CovariantD["μ"]`, binding to the operand on its right
    CovariantD { letter: char },
    /// A parenthesized sub-formula
    Group(Box<Formula>),
}

impl Formula {
    /// Free letters of the first term, in first-appearance order.
    pub fn free_letters(&self) -> Vec<char> {
        match self.terms.first() {
            Some(t) => t.free_letters(),
            None => Vec::new(),
        }
    }

    /// The first tensor reference in the formula, depth first.
    pub fn first_tensor(&self) -> Option<&str> {
        for term in &self.terms {
            for op in &term.operands {
                match op {
                    Operand::Tensor { id, .. } => return Some(id),
                    Operand::Group(g) => {
                        if let Some(id) = g.first_tensor() {
                            return Some(id);
                        }
                    }
                    _ => {}
                }
            }
        }
        None
    }

    pub(crate) fn all_tensor_ids(&self, out: &mut Vec<String>) {
        for term in &self.terms {
            for op in &term.operands {
                match op {
                    Operand::Tensor { id, .. } => {
                        if !out.contains(id) {
                            out.push(id.clone());
                        }
                    }
                    Operand::Group(g) => g.all_tensor_ids(out),
                    _ => {}
                }
            }
        }
    }
}

impl Term {
    /// Letters appearing exactly once in this term, in appearance order.
    pub fn free_letters(&self) -> Vec<char> {
        let occurrences = self.letter_occurrences();
        let mut seen = Vec::new();
        let mut out = Vec::new();
        for c in &occurrences {
            if !seen.contains(c) {
                seen.push(*c);
                if occurrences.iter().filter(|x| **x == *c).count() == 1 {
                    out.push(*c);
                }
            }
        }
        out
    }

    /// All letter occurrences in order; a group contributes its free letters.
    pub(crate) fn letter_occurrences(&self) -> Vec<char> {
        let mut out = Vec::new();
        for op in &self.operands {
            match op {
                Operand::Tensor { letters, .. } => out.extend(letters.iter().copied()),
                Operand::PartialD { letter } | Operand::CovariantD { letter } => out.push(*letter),
                Operand::Group(g) => out.extend(g.free_letters()),
            }
        }
        out
    }
}
