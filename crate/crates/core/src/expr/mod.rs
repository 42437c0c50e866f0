//! Minimal computer-algebra kernel: immutable expression trees over exact
//! rationals, with parsing, printing, differentiation, substitution,
//! assumption-aware simplification and probabilistic zero-testing.

mod calculus;
mod fmt;
mod numeric;
mod parse;
mod poly;
mod simplify;

pub use calculus::{
    activate, diff, diff_atom, substitute, substitute_raw, DiffVar, ReplaceTarget, Replacement,
    SubRule,
};
pub use fmt::{format_expr, DisplayOpts, Style};
pub use numeric::{eval_numeric, is_zero, FuncImpls};
pub(crate) use numeric::is_zero_sampled;
pub use parse::parse_expr;
pub use simplify::simplify;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt::Debug;

/// A symbolic expression. Trees are immutable after construction; all
/// operations build new trees. `Num` is always an exact rational in lowest
/// terms (enforced by `BigRational`).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Expr {
    Num(BigRational),
    Sym(String),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    /// Function application: builtin (sin, cos, ...) or abstract (f, a, v, ...).
    Func(String, Vec<Expr>),
    /// Positional derivative of an abstract function, evaluated at `args`:
    /// `orders[i]` is the number of derivatives taken in argument slot `i`.
    Deriv {
        head: String,
        args: Vec<Expr>,
        orders: Vec<u32>,
    },
    /// A total derivative with respect to `param`, kept unevaluated until
    /// explicitly activated.
    Deferred {
        inner: Box<Expr>,
        param: String,
        order: u32,
    },
    Abs(Box<Expr>),
}

/// Function names the kernel knows how to differentiate and evaluate.
pub const BUILTIN_FUNCS: &[&str] = &[
    "sin", "cos", "tan", "cot", "sec", "csc", "sqrt", "exp", "log", "arcsin", "arccos", "arctan",
    "arctan2",
];

pub fn is_builtin(name: &str) -> bool {
    BUILTIN_FUNCS.contains(&name)
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Num(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::Num(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn num(r: BigRational) -> Expr {
        Expr::Num(r)
    }

    pub fn sym(name: impl Into<String>) -> Expr {
        Expr::Sym(name.into())
    }

    pub fn func(name: impl Into<String>, args: Vec<Expr>) -> Expr {
        let name = name.into();
        // sqrt is kept in power form so the power rules apply uniformly
        if name == "sqrt" && args.len() == 1 {
            return Expr::pow(args.into_iter().next().unwrap(), Expr::rat(1, 2));
        }
        Expr::Func(name, args)
    }

    pub fn abs(inner: Expr) -> Expr {
        if let Expr::Num(n) = &inner {
            return Expr::Num(n.abs());
        }
        Expr::Abs(Box::new(inner))
    }

    /// Flattening sum constructor: drops zeros, folds numeric children,
    /// unwraps singletons. Children are not sorted here; canonical ordering
    /// is simplify's job.
    pub fn sum(children: Vec<Expr>) -> Expr {
        let mut out: Vec<Expr> = Vec::with_capacity(children.len());
        let mut acc = BigRational::zero();
        let mut num_at: Option<usize> = None;
        let mut stack: Vec<Expr> = children;
        stack.reverse();
        while let Some(c) = stack.pop() {
            match c {
                Expr::Sum(inner) => {
                    for x in inner.into_iter().rev() {
                        stack.push(x);
                    }
                }
                Expr::Num(n) => {
                    if num_at.is_none() {
                        num_at = Some(out.len());
                    }
                    acc += n;
                }
                other => out.push(other),
            }
        }
        if let Some(at) = num_at {
            if !acc.is_zero() {
                out.insert(at.min(out.len()), Expr::Num(acc));
            }
        }
        match out.len() {
            0 => Expr::int(0),
            1 => out.into_iter().next().unwrap(),
            _ => Expr::Sum(out),
        }
    }

    /// Flattening product constructor: annihilates on zero, drops ones,
    /// folds numeric children into a single leading coefficient.
    pub fn prod(children: Vec<Expr>) -> Expr {
        let mut out: Vec<Expr> = Vec::with_capacity(children.len());
        let mut acc = BigRational::one();
        let mut stack: Vec<Expr> = children;
        stack.reverse();
        while let Some(c) = stack.pop() {
            match c {
                Expr::Prod(inner) => {
                    for x in inner.into_iter().rev() {
                        stack.push(x);
                    }
                }
                Expr::Num(n) => {
                    if n.is_zero() {
                        return Expr::int(0);
                    }
                    acc *= n;
                }
                other => out.push(other),
            }
        }
        if !acc.is_one() {
            out.insert(0, Expr::Num(acc));
        }
        match out.len() {
            0 => Expr::int(1),
            1 => out.into_iter().next().unwrap(),
            _ => Expr::Prod(out),
        }
    }

    pub fn pow(base: Expr, exp: Expr) -> Expr {
        if let Expr::Num(e) = &exp {
            if e.is_zero() {
                return Expr::int(1);
            }
            if e.is_one() {
                return base;
            }
            if let Expr::Num(b) = &base {
                if e.is_integer() && !(b.is_zero() && e.is_negative()) {
                    if let Some(k) = rational_to_i32(e) {
                        return Expr::Num(rational_pow(b, k));
                    }
                }
            }
        }
        Expr::Pow(Box::new(base), Box::new(exp))
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::prod(vec![Expr::int(-1), e])
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::sum(vec![a, Expr::neg(b)])
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::prod(vec![a, Expr::pow(b, Expr::int(-1))])
    }

    pub fn is_num_zero(&self) -> bool {
        matches!(self, Expr::Num(n) if n.is_zero())
    }

    pub fn is_num_one(&self) -> bool {
        matches!(self, Expr::Num(n) if n.is_one())
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Expr::Num(n) if n.is_integer() => {
                use num_traits::ToPrimitive;
                n.to_integer().to_i64()
            }
            _ => None,
        }
    }

    /// Canonical total order: symbols by name, then constants, then compound
    /// nodes by (kind, arity, children). Used for deterministic output.
    pub fn cmp_canonical(&self, other: &Expr) -> Ordering {
        fn rank(e: &Expr) -> u8 {
            match e {
                Expr::Sym(_) => 0,
                Expr::Num(_) => 1,
                Expr::Abs(_) => 2,
                Expr::Func(..) => 3,
                Expr::Deriv { .. } => 4,
                Expr::Deferred { .. } => 5,
                Expr::Pow(..) => 6,
                Expr::Prod(_) => 7,
                Expr::Sum(_) => 8,
            }
        }
        match (self, other) {
            (Expr::Sym(a), Expr::Sym(b)) => a.cmp(b),
            (Expr::Num(a), Expr::Num(b)) => a.cmp(b),
            (Expr::Abs(a), Expr::Abs(b)) => a.cmp_canonical(b),
            (Expr::Func(na, aa), Expr::Func(nb, ab)) => na
                .cmp(nb)
                .then_with(|| cmp_slices(aa, ab)),
            (
                Expr::Deriv {
                    head: ha,
                    args: aa,
                    orders: oa,
                },
                Expr::Deriv {
                    head: hb,
                    args: ab,
                    orders: ob,
                },
            ) => ha
                .cmp(hb)
                .then_with(|| oa.cmp(ob))
                .then_with(|| cmp_slices(aa, ab)),
            (
                Expr::Deferred {
                    inner: ia,
                    param: pa,
                    order: oa,
                },
                Expr::Deferred {
                    inner: ib,
                    param: pb,
                    order: ob,
                },
            ) => pa
                .cmp(pb)
                .then_with(|| oa.cmp(ob))
                .then_with(|| ia.cmp_canonical(ib)),
            (Expr::Pow(ba, ea), Expr::Pow(bb, eb)) => ba
                .cmp_canonical(bb)
                .then_with(|| ea.cmp_canonical(eb)),
            (Expr::Prod(a), Expr::Prod(b)) => cmp_slices(a, b),
            (Expr::Sum(a), Expr::Sum(b)) => cmp_slices(a, b),
            _ => rank(self).cmp(&rank(other)),
        }
    }

    /// All free symbols of the expression, in first-encounter order.
    pub fn free_symbols(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Sym(s) = e {
                if !out.contains(s) {
                    out.push(s.clone());
                }
            }
        });
        out
    }

    pub fn contains_symbol(&self, name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let Expr::Sym(s) = e {
                if s == name {
                    found = true;
                }
            }
        });
        found
    }

    pub fn contains_deferred(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e, Expr::Deferred { .. }) {
                found = true;
            }
        });
        found
    }

    /// Pre-order traversal over every node of the tree.
    pub fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Num(_) | Expr::Sym(_) => {}
            Expr::Sum(c) | Expr::Prod(c) | Expr::Func(_, c) => {
                for x in c {
                    x.walk(f);
                }
            }
            Expr::Pow(b, e) => {
                b.walk(f);
                e.walk(f);
            }
            Expr::Deriv { args, .. } => {
                for x in args {
                    x.walk(f);
                }
            }
            Expr::Deferred { inner, .. } => inner.walk(f),
            Expr::Abs(inner) => inner.walk(f),
        }
    }

    /// Bottom-up rewrite: children first, then the node itself.
    pub fn map(&self, f: &mut impl FnMut(Expr) -> Expr) -> Expr {
        let rebuilt = match self {
            Expr::Num(_) | Expr::Sym(_) => self.clone(),
            Expr::Sum(c) => Expr::sum(c.iter().map(|x| x.map(f)).collect()),
            Expr::Prod(c) => Expr::prod(c.iter().map(|x| x.map(f)).collect()),
            Expr::Pow(b, e) => Expr::pow(b.map(f), e.map(f)),
            Expr::Func(name, c) => Expr::Func(name.clone(), c.iter().map(|x| x.map(f)).collect()),
            Expr::Deriv { head, args, orders } => Expr::Deriv {
                head: head.clone(),
                args: args.iter().map(|x| x.map(f)).collect(),
                orders: orders.clone(),
            },
            Expr::Deferred {
                inner,
                param,
                order,
            } => Expr::Deferred {
                inner: Box::new(inner.map(f)),
                param: param.clone(),
                order: *order,
            },
            Expr::Abs(inner) => Expr::abs(inner.map(f)),
        };
        f(rebuilt)
    }
}

fn cmp_slices(a: &[Expr], b: &[Expr]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        for (x, y) in a.iter().zip(b) {
            let c = x.cmp_canonical(y);
            if c != Ordering::Equal {
                return c;
            }
        }
        Ordering::Equal
    })
}

pub(crate) fn rational_to_i32(r: &BigRational) -> Option<i32> {
    use num_traits::ToPrimitive;
    if r.is_integer() {
        r.to_integer().to_i32()
    } else {
        None
    }
}

pub(crate) fn rational_pow(b: &BigRational, k: i32) -> BigRational {
    let mut result = BigRational::one();
    let mut base = if k < 0 { b.recip() } else { b.clone() };
    let mut n = k.unsigned_abs();
    while n > 0 {
        if n & 1 == 1 {
            result *= &base;
        }
        let sq = &base * &base;
        base = sq;
        n >>= 1;
    }
    result
}

/// A relation a symbol is assumed to satisfy.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Relation {
    Geq,
    Gt,
    Leq,
    Lt,
    EqConst,
}

/// One assumption predicate: `symbol <relation> bound`.
#[derive(Clone, PartialEq, Debug)]
pub struct Predicate {
    pub symbol: String,
    pub relation: Relation,
    pub bound: Expr,
}

/// Simplification assumptions. By default all symbols are assumed real,
/// which licenses rewrites like `sqrt(u^2) -> |u|`.
#[derive(Clone, Debug)]
pub struct Assumptions {
    pub assume_real: bool,
    pub predicates: Vec<Predicate>,
}

impl Default for Assumptions {
    fn default() -> Self {
        Assumptions {
            assume_real: true,
            predicates: Vec::new(),
        }
    }
}

impl Assumptions {
    pub fn add(&mut self, p: Predicate) {
        if !self.predicates.contains(&p) {
            self.predicates.push(p);
        }
    }

    pub fn clear_user(&mut self) {
        self.predicates.clear();
    }

    /// True when the predicates imply `symbol >= 0`.
    pub fn implies_nonneg(&self, symbol: &str) -> bool {
        self.predicates.iter().any(|p| {
            p.symbol == symbol
                && matches!(p.relation, Relation::Geq | Relation::Gt)
                && matches!(&p.bound, Expr::Num(n) if !n.is_negative())
        })
    }

    /// True when the predicates imply `symbol <= 0`.
    pub fn implies_nonpos(&self, symbol: &str) -> bool {
        self.predicates.iter().any(|p| {
            p.symbol == symbol
                && matches!(p.relation, Relation::Leq | Relation::Lt)
                && matches!(&p.bound, Expr::Num(n) if !n.is_positive())
        })
    }
}
