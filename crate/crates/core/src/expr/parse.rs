//! Expression text parser: infix `+ - * / ^`, unary minus, parentheses,
//! function application `f(x,y)`, integer/rational literals and Unicode
//! identifiers. Parsing never simplifies beyond the flattening done by the
//! tree constructors.

use super::Expr;
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::pow::Pow as _;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Lexer<'a> {
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_cont(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            chars: src.char_indices().collect(),
            pos: 0,
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>> {
        let mut out = Vec::new();
        while self.pos < self.chars.len() {
            let (byte, c) = self.chars[self.pos];
            if c.is_whitespace() {
                self.pos += 1;
                continue;
            }
            let tok = match c {
                '+' => {
                    self.pos += 1;
                    Tok::Plus
                }
                '-' | '−' => {
                    self.pos += 1;
                    Tok::Minus
                }
                '*' | '·' | '×' => {
                    self.pos += 1;
                    Tok::Star
                }
                '/' => {
                    self.pos += 1;
                    Tok::Slash
                }
                '^' => {
                    self.pos += 1;
                    Tok::Caret
                }
                '(' => {
                    self.pos += 1;
                    Tok::LParen
                }
                ')' => {
                    self.pos += 1;
                    Tok::RParen
                }
                ',' => {
                    self.pos += 1;
                    Tok::Comma
                }
                _ if c.is_ascii_digit() => self.number()?,
                _ if is_ident_start(c) => self.ident(),
                _ => {
                    return Err(Error::Syntax {
                        pos: byte,
                        msg: format!("unexpected character '{c}'"),
                    })
                }
            };
            out.push((tok, byte));
        }
        Ok(out)
    }

    fn number(&mut self) -> Result<Tok> {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_ascii_digit() {
            self.pos += 1;
        }
        let mut frac_digits = 0usize;
        if self.pos < self.chars.len() && self.chars[self.pos].1 == '.' {
            self.pos += 1;
            while self.pos < self.chars.len() && self.chars[self.pos].1.is_ascii_digit() {
                self.pos += 1;
                frac_digits += 1;
            }
        }
        let text: String = self.chars[start..self.pos].iter().map(|(_, c)| *c).collect();
        let digits: String = text.chars().filter(|c| *c != '.').collect();
        let n: BigInt = digits.parse().map_err(|_| Error::Syntax {
            pos: self.chars[start].0,
            msg: format!("bad numeric literal '{text}'"),
        })?;
        let denom = BigInt::from(10u32).pow(frac_digits);
        Ok(Tok::Num(BigRational::new(n, denom)))
    }

    fn ident(&mut self) -> Tok {
        let start = self.pos;
        self.pos += 1;
        while self.pos < self.chars.len() && is_ident_cont(self.chars[self.pos].1) {
            self.pos += 1;
        }
        Tok::Ident(self.chars[start..self.pos].iter().map(|(_, c)| *c).collect())
    }

    fn len(&self) -> usize {
        self.src.len()
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.idx).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.idx).map(|(t, _)| t.clone());
        self.idx += 1;
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if self.peek() == Some(&t) {
            self.idx += 1;
            Ok(())
        } else {
            Err(Error::Syntax {
                pos: self.pos(),
                msg: format!("expected {t:?}"),
            })
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr> {
        let mut lhs = self.atom()?;
        loop {
            let (op, lbp, rbp) = match self.peek() {
                Some(Tok::Plus) => (Tok::Plus, 10, 11),
                Some(Tok::Minus) => (Tok::Minus, 10, 11),
                Some(Tok::Star) => (Tok::Star, 20, 21),
                Some(Tok::Slash) => (Tok::Slash, 20, 21),
                Some(Tok::Caret) => (Tok::Caret, 31, 30), // right-assoc
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.expr(rbp)?;
            lhs = match op {
                Tok::Plus => Expr::sum(vec![lhs, rhs]),
                Tok::Minus => Expr::sub(lhs, rhs),
                Tok::Star => Expr::prod(vec![lhs, rhs]),
                Tok::Slash => Expr::div(lhs, rhs),
                Tok::Caret => Expr::pow(lhs, rhs),
                _ => unreachable!(),
            };
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Num(n)) => Ok(Expr::Num(n)),
            Some(Tok::Minus) => {
                // unary minus binds tighter than * but looser than ^
                let inner = self.expr(25)?;
                Ok(Expr::neg(inner))
            }
            Some(Tok::LParen) => {
                let e = self.expr(0)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.bump();
                    let mut args = Vec::new();
                    if self.peek() != Some(&Tok::RParen) {
                        loop {
                            args.push(self.expr(0)?);
                            if self.peek() == Some(&Tok::Comma) {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    if name == "abs" && args.len() == 1 {
                        return Ok(Expr::abs(args.into_iter().next().unwrap()));
                    }
                    // D(expr, s, ...) differentiates; DD(expr, s[, k]) defers
                    if name == "D" && args.len() >= 2 {
                        let mut it = args.into_iter();
                        let mut e = it.next().unwrap();
                        for var in it {
                            match var {
                                Expr::Sym(s) => e = super::calculus::diff(&e, &s),
                                _ => {
                                    return Err(Error::Syntax {
                                        pos,
                                        msg: "D(...) expects symbols after the expression".into(),
                                    })
                                }
                            }
                        }
                        return Ok(e);
                    }
                    if name == "DD" && (args.len() == 2 || args.len() == 3) {
                        let order = if args.len() == 3 {
                            args[2].as_i64().filter(|k| *k > 0).ok_or(Error::Syntax {
                                pos,
                                msg: "DD(...) order must be a positive integer".into(),
                            })? as u32
                        } else {
                            1
                        };
                        let param = match &args[1] {
                            Expr::Sym(s) => s.clone(),
                            _ => {
                                return Err(Error::Syntax {
                                    pos,
                                    msg: "DD(...) expects a parameter symbol".into(),
                                })
                            }
                        };
                        return Ok(Expr::Deferred {
                            inner: Box::new(args.into_iter().next().unwrap()),
                            param,
                            order,
                        });
                    }
                    Ok(Expr::func(name, args))
                } else {
                    Ok(Expr::sym(name))
                }
            }
            other => Err(Error::Syntax {
                pos,
                msg: match other {
                    Some(t) => format!("unexpected token {t:?}"),
                    None => "unexpected end of input".into(),
                },
            }),
        }
    }
}

/// Parse expression text into an unsimplified tree.
pub fn parse_expr(text: &str) -> Result<Expr> {
    let lexer = Lexer::new(text);
    let end = lexer.len();
    let toks = lexer.tokens()?;
    let mut p = Parser { toks, idx: 0, end };
    let e = p.expr(0)?;
    if p.idx != p.toks.len() {
        return Err(Error::Syntax {
            pos: p.pos(),
            msg: "trailing input".into(),
        });
    }
    Ok(e)
}
