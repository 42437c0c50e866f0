//! Parser for the formula text grammar: tensor references `"ID"["letters"]`,
//! the operators `+ - * . /`, scalar coefficient expressions,
//! `PartialD["μ"]` / `CovariantD["μ"]`, parenthesized sub-formulas, and an
//! optional leading target `"ID"["letters"] = ...`.

use super::{Formula, Operand, TargetSpec, Term};
use crate::error::{Error, Result};
use crate::expr::{parse_expr, Expr};
use std::collections::BTreeMap;

struct Cursor<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor {
            src,
            chars: src.char_indices().collect(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|(_, c)| *c)
    }

    fn byte_pos(&self) -> usize {
        self.chars
            .get(self.pos)
            .map(|(b, _)| *b)
            .unwrap_or(self.src.len())
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).map(|(_, c)| *c);
        self.pos += 1;
        c
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Syntax {
            pos: self.byte_pos(),
            msg: msg.to_string(),
        }
    }

    /// Quoted string: "..."
    fn quoted(&mut self) -> Result<String> {
        self.expect('"')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('"') => return Ok(out),
                Some(c) => out.push(c),
                None => return Err(self.err("unterminated string")),
            }
        }
    }

    /// Identifier starting at the cursor (no leading-whitespace skip).
    fn ident(&mut self) -> String {
        let mut out = String::new();
        while let Some((_, c)) = self.chars.get(self.pos) {
            if c.is_alphanumeric() || *c == '_' {
                out.push(*c);
                self.pos += 1;
            } else {
                break;
            }
        }
        out
    }

    /// Consume a balanced parenthesized span and return the inner text.
    fn balanced_parens(&mut self) -> Result<&'a str> {
        self.expect('(')?;
        let start = self.byte_pos();
        let mut depth = 1usize;
        let mut in_string = false;
        loop {
            let Some((b, c)) = self.chars.get(self.pos).copied() else {
                return Err(self.err("unbalanced parentheses"));
            };
            self.pos += 1;
            match c {
                '"' => in_string = !in_string,
                '(' if !in_string => depth += 1,
                ')' if !in_string => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(&self.src[start..b]);
                    }
                }
                _ => {}
            }
        }
    }

    /// A single scalar factor: number, or identifier with optional argument
    /// list, each with an optional `^exponent`.
    fn scalar_factor(&mut self) -> Result<Expr> {
        let start = self.byte_pos();
        match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                while self
                    .chars
                    .get(self.pos)
                    .is_some_and(|(_, c)| c.is_ascii_digit() || *c == '.')
                {
                    self.pos += 1;
                }
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                self.ident();
                if self.chars.get(self.pos).is_some_and(|(_, c)| *c == '(') {
                    self.balanced_parens()?;
                }
            }
            _ => return Err(self.err("expected a scalar factor")),
        }
        let mut end = self.byte_pos();
        if self.chars.get(self.pos).is_some_and(|(_, c)| *c == '^') {
            self.pos += 1;
            match self.peek() {
                Some('(') => {
                    self.balanced_parens()?;
                }
                Some(c) if c.is_ascii_digit() || c == '-' => {
                    if c == '-' {
                        self.pos += 1;
                    }
                    while self
                        .chars
                        .get(self.pos)
                        .is_some_and(|(_, c)| c.is_ascii_digit())
                    {
                        self.pos += 1;
                    }
                }
                Some(c) if c.is_alphabetic() => {
                    self.ident();
                }
                _ => return Err(self.err("expected an exponent")),
            }
            end = self.byte_pos();
        }
        parse_expr(&self.src[start..end])
    }
}

/// Parse formula text into an AST, checking the structural invariants:
/// at most two occurrences of a letter per term, identical free-letter sets
/// across terms, and a target string that permutes the free letters.
pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut cur = Cursor::new(text);
    let mut formula = parse_sum(&mut cur)?;
    cur.skip_ws();
    if cur.pos != cur.chars.len() {
        return Err(cur.err("trailing input"));
    }
    // a lone leading "term" of the shape "ID"["letters"] followed by '=' was
    // handled inside parse_sum; validate the result
    validate(&mut formula)?;
    Ok(formula)
}

fn parse_sum(cur: &mut Cursor) -> Result<Formula> {
    let mut target = None;
    let mut terms = Vec::new();
    let mut sign = 1i64;
    // optional target: "ID"["letters"] '='
    let backtrack = cur.pos;
    if cur.peek() == Some('"') {
        if let Ok((id, letters)) = parse_tensor_ref(cur) {
            if cur.eat('=') {
                target = Some(TargetSpec { id, letters });
            } else {
                cur.pos = backtrack;
            }
        } else {
            cur.pos = backtrack;
        }
    }
    loop {
        let term = parse_term(cur, sign)?;
        terms.push(term);
        match cur.peek() {
            Some('+') => {
                cur.bump();
                sign = 1;
            }
            Some('-') | Some('−') => {
                cur.bump();
                sign = -1;
            }
            _ => break,
        }
    }
    Ok(Formula { target, terms })
}

fn parse_tensor_ref(cur: &mut Cursor) -> Result<(String, Vec<char>)> {
    let id = cur.quoted()?;
    cur.expect('[')?;
    let letters: Vec<char> = cur.quoted()?.chars().filter(|c| !c.is_whitespace()).collect();
    cur.expect(']')?;
    Ok((id, letters))
}

fn parse_term(cur: &mut Cursor, sign: i64) -> Result<Term> {
    let mut coeff_factors: Vec<Expr> = Vec::new();
    if sign < 0 {
        coeff_factors.push(Expr::int(-1));
    }
    let mut operands: Vec<Operand> = Vec::new();
    let mut after_tensor = false; // most recent factor was tensor-valued, no '.' yet
    loop {
        match cur.peek() {
            None | Some('+') | Some('-') | Some('−') | Some(')') => break,
            Some('*') | Some('·') | Some('×') => {
                cur.bump();
                after_tensor = false;
            }
            Some('.') => {
                cur.bump();
                if operands.is_empty() {
                    return Err(cur.err("'.' with no tensor operand on the left"));
                }
                after_tensor = false;
            }
            Some('/') => {
                cur.bump();
                let f = cur.scalar_factor()?;
                coeff_factors.push(Expr::pow(f, Expr::int(-1)));
            }
            Some('"') => {
                if after_tensor {
                    return Err(cur.err("expected '.' between tensor operands"));
                }
                let (id, letters) = parse_tensor_ref(cur)?;
                operands.push(Operand::Tensor { id, letters });
                after_tensor = true;
            }
            Some('(') => {
                let inner = cur.balanced_parens()?;
                if inner.contains('"') {
                    if after_tensor {
                        return Err(cur.err("expected '.' between tensor operands"));
                    }
                    let mut inner_cur = Cursor::new(inner);
                    let group = parse_sum(&mut inner_cur)?;
                    inner_cur.skip_ws();
                    if inner_cur.pos != inner_cur.chars.len() {
                        return Err(inner_cur.err("trailing input in group"));
                    }
                    if group.target.is_some() {
                        return Err(cur.err("a group may not carry a target"));
                    }
                    operands.push(Operand::Group(Box::new(group)));
                    after_tensor = true;
                } else {
                    coeff_factors.push(parse_expr(inner)?);
                }
            }
            Some(c) if c.is_alphabetic() || c.is_ascii_digit() || c == '_' => {
                // PartialD["μ"] / CovariantD["μ"] or a scalar factor
                let backtrack = cur.pos;
                if c.is_alphabetic() {
                    let name = cur.ident();
                    if (name == "PartialD" || name == "CovariantD") && cur.peek() == Some('[') {
                        cur.expect('[')?;
                        let letters = cur.quoted()?;
                        cur.expect(']')?;
                        let mut it = letters.chars().filter(|c| !c.is_whitespace());
                        let letter = it.next().ok_or_else(|| cur.err("empty derivative index"))?;
                        if it.next().is_some() {
                            return Err(cur.err("derivative takes a single index letter"));
                        }
                        operands.push(if name == "PartialD" {
                            Operand::PartialD { letter }
                        } else {
                            Operand::CovariantD { letter }
                        });
                        after_tensor = false;
                        continue;
                    }
                    cur.pos = backtrack;
                }
                coeff_factors.push(cur.scalar_factor()?);
            }
            Some(c) => return Err(cur.err(&format!("unexpected character '{c}'"))),
        }
    }
    if operands.is_empty() {
        return Err(cur.err("term has no tensor operand"));
    }
    if matches!(
        operands.last(),
        Some(Operand::PartialD { .. }) | Some(Operand::CovariantD { .. })
    ) {
        return Err(Error::DanglingDerivative);
    }
    Ok(Term {
        coeff: Expr::prod(coeff_factors),
        operands,
    })
}

fn validate(formula: &mut Formula) -> Result<()> {
    for term in &formula.terms {
        let occ = term.letter_occurrences();
        let mut counts: BTreeMap<char, usize> = BTreeMap::new();
        for c in occ {
            *counts.entry(c).or_insert(0) += 1;
        }
        for (c, n) in counts {
            if n > 2 {
                return Err(Error::TripleIndex(c));
            }
        }
    }
    let first: Vec<char> = formula.free_letters();
    let mut first_sorted = first.clone();
    first_sorted.sort_unstable();
    for term in &formula.terms[1..] {
        let mut letters = term.free_letters();
        letters.sort_unstable();
        if letters != first_sorted {
            return Err(Error::FreeIndexMismatch(format!(
                "term has free indices {letters:?}, expected a permutation of {first_sorted:?}"
            )));
        }
    }
    if let Some(t) = &formula.target {
        let mut target_sorted = t.letters.clone();
        target_sorted.sort_unstable();
        if target_sorted != first_sorted {
            return Err(Error::FreeIndexMismatch(format!(
                "target indices {:?} are not a permutation of the free indices {first_sorted:?}",
                t.letters
            )));
        }
    }
    Ok(())
}
