//! Differentiation (with respect to a symbol, or formally with respect to an
//! arbitrary atom), simultaneous substitution, and activation of deferred
//! derivatives.

use super::{simplify, Assumptions, Expr};

/// What to differentiate by: a symbol (full chain rule through function
/// arguments) or an arbitrary atom treated as an independent variable (other
/// atoms held fixed — the jet-space partial used by Euler-Lagrange).
#[derive(Clone, Copy, Debug)]
pub enum DiffVar<'a> {
    Symbol(&'a str),
    Atom(&'a Expr),
}

/// Derivative of `e` with respect to the symbol `s`.
pub fn diff(e: &Expr, s: &str) -> Expr {
    d(e, DiffVar::Symbol(s))
}

/// Formal partial derivative of `e` with respect to the atom `atom`.
pub fn diff_atom(e: &Expr, atom: &Expr) -> Expr {
    d(e, DiffVar::Atom(atom))
}

fn d(e: &Expr, v: DiffVar) -> Expr {
    if let DiffVar::Atom(a) = v {
        if e == a {
            return Expr::int(1);
        }
    }
    match e {
        Expr::Num(_) => Expr::int(0),
        Expr::Sym(name) => match v {
            DiffVar::Symbol(s) if name == s => Expr::int(1),
            _ => Expr::int(0),
        },
        Expr::Sum(c) => Expr::sum(c.iter().map(|x| d(x, v)).collect()),
        Expr::Prod(c) => {
            let mut terms = Vec::with_capacity(c.len());
            for (i, ci) in c.iter().enumerate() {
                let dci = d(ci, v);
                if dci.is_num_zero() {
                    continue;
                }
                let mut factors = vec![dci];
                for (j, cj) in c.iter().enumerate() {
                    if j != i {
                        factors.push(cj.clone());
                    }
                }
                terms.push(Expr::prod(factors));
            }
            Expr::sum(terms)
        }
        Expr::Pow(base, exp) => {
            let db = d(base, v);
            let de = d(exp, v);
            let mut terms = Vec::new();
            if !db.is_num_zero() {
                // e * base^(e-1) * base'
                terms.push(Expr::prod(vec![
                    (**exp).clone(),
                    Expr::pow((**base).clone(), Expr::sub((**exp).clone(), Expr::int(1))),
                    db,
                ]));
            }
            if !de.is_num_zero() {
                // base^e * log(base) * e'
                terms.push(Expr::prod(vec![
                    e.clone(),
                    Expr::func("log", vec![(**base).clone()]),
                    de,
                ]));
            }
            Expr::sum(terms)
        }
        Expr::Func(name, args) => {
            let mut terms = Vec::new();
            for (i, arg) in args.iter().enumerate() {
                let da = d(arg, v);
                if da.is_num_zero() {
                    continue;
                }
                terms.push(Expr::prod(vec![partial_of_func(name, args, i), da]));
            }
            Expr::sum(terms)
        }
        Expr::Deriv { head, args, orders } => {
            let mut terms = Vec::new();
            for (i, arg) in args.iter().enumerate() {
                let da = d(arg, v);
                if da.is_num_zero() {
                    continue;
                }
                let mut bumped = orders.clone();
                bumped[i] += 1;
                terms.push(Expr::prod(vec![
                    Expr::Deriv {
                        head: head.clone(),
                        args: args.clone(),
                        orders: bumped,
                    },
                    da,
                ]));
            }
            Expr::sum(terms)
        }
        Expr::Deferred {
            inner,
            param,
            order,
        } => match v {
            DiffVar::Symbol(s) if s == param => Expr::Deferred {
                inner: inner.clone(),
                param: param.clone(),
                order: order + 1,
            },
            _ => {
                let di = d(inner, v);
                if di.is_num_zero() {
                    Expr::int(0)
                } else {
                    Expr::Deferred {
                        inner: Box::new(di),
                        param: param.clone(),
                        order: *order,
                    }
                }
            }
        },
        Expr::Abs(inner) => {
            let di = d(inner, v);
            if di.is_num_zero() {
                Expr::int(0)
            } else {
                // d|u| = u u' / |u|  (almost everywhere)
                Expr::prod(vec![
                    (**inner).clone(),
                    di,
                    Expr::pow(e.clone(), Expr::int(-1)),
                ])
            }
        }
    }
}

/// Partial derivative of a function application with respect to argument
/// slot `i`; abstract functions yield `Deriv` nodes.
fn partial_of_func(name: &str, args: &[Expr], i: usize) -> Expr {
    let u = args[i].clone();
    match (name, args.len()) {
        ("sin", 1) => Expr::func("cos", vec![u]),
        ("cos", 1) => Expr::neg(Expr::func("sin", vec![u])),
        ("tan", 1) => Expr::pow(Expr::func("cos", vec![u]), Expr::int(-2)),
        ("cot", 1) => Expr::neg(Expr::pow(Expr::func("sin", vec![u]), Expr::int(-2))),
        ("sec", 1) => Expr::prod(vec![
            Expr::func("sec", vec![u.clone()]),
            Expr::func("tan", vec![u]),
        ]),
        ("csc", 1) => Expr::neg(Expr::prod(vec![
            Expr::func("csc", vec![u.clone()]),
            Expr::func("cot", vec![u]),
        ])),
        ("exp", 1) => Expr::func("exp", vec![u]),
        ("log", 1) => Expr::pow(u, Expr::int(-1)),
        ("arcsin", 1) => Expr::pow(
            Expr::sub(Expr::int(1), Expr::pow(u, Expr::int(2))),
            Expr::rat(-1, 2),
        ),
        ("arccos", 1) => Expr::neg(Expr::pow(
            Expr::sub(Expr::int(1), Expr::pow(u, Expr::int(2))),
            Expr::rat(-1, 2),
        )),
        ("arctan", 1) => Expr::pow(
            Expr::sum(vec![Expr::int(1), Expr::pow(u, Expr::int(2))]),
            Expr::int(-1),
        ),
        // arctan2(x, y): angle of the point (x, y)
        ("arctan2", 2) => {
            let x = args[0].clone();
            let y = args[1].clone();
            let r2 = Expr::sum(vec![
                Expr::pow(x.clone(), Expr::int(2)),
                Expr::pow(y.clone(), Expr::int(2)),
            ]);
            if i == 0 {
                Expr::neg(Expr::div(y, r2))
            } else {
                Expr::div(x, r2)
            }
        }
        _ => {
            let mut orders = vec![0u32; args.len()];
            orders[i] = 1;
            Expr::Deriv {
                head: name.to_string(),
                args: args.to_vec(),
                orders,
            }
        }
    }
}

/// What a substitution rule replaces.
#[derive(Clone, Debug, PartialEq)]
pub enum ReplaceTarget {
    /// A bare symbol.
    Symbol(String),
    /// Every application (and derivative) of an abstract function head.
    FuncHead(String),
    /// An exact subtree, e.g. a first-derivative node.
    Exact(Expr),
}

#[derive(Clone, Debug)]
pub enum Replacement {
    Expr(Expr),
    /// Head replacement by a function of the arguments, as in `f -> (0 &)`.
    FuncBody { params: Vec<String>, body: Expr },
}

#[derive(Clone, Debug)]
pub struct SubRule {
    pub target: ReplaceTarget,
    pub replacement: Replacement,
}

impl SubRule {
    pub fn symbol(name: impl Into<String>, replacement: Expr) -> SubRule {
        SubRule {
            target: ReplaceTarget::Symbol(name.into()),
            replacement: Replacement::Expr(replacement),
        }
    }

    pub fn exact(target: Expr, replacement: Expr) -> SubRule {
        SubRule {
            target: ReplaceTarget::Exact(target),
            replacement: Replacement::Expr(replacement),
        }
    }
}

/// Simultaneous single-pass substitution followed by re-canonicalization.
/// Replaced subtrees are not re-scanned.
pub fn substitute(e: &Expr, rules: &[SubRule]) -> Expr {
    simplify(&substitute_raw(e, rules), &Assumptions::default())
}

/// The structural replacement itself, without simplification.
pub fn substitute_raw(e: &Expr, rules: &[SubRule]) -> Expr {
    for rule in rules {
        match (&rule.target, e) {
            (ReplaceTarget::Exact(t), _) if e == t => {
                if let Replacement::Expr(r) = &rule.replacement {
                    return r.clone();
                }
            }
            (ReplaceTarget::Symbol(s), Expr::Sym(name)) if name == s => {
                if let Replacement::Expr(r) = &rule.replacement {
                    return r.clone();
                }
            }
            (ReplaceTarget::FuncHead(h), Expr::Func(name, args)) if name == h => {
                let args: Vec<Expr> = args.iter().map(|a| substitute_raw(a, rules)).collect();
                match &rule.replacement {
                    Replacement::Expr(r) => return r.clone(),
                    Replacement::FuncBody { params, body } => {
                        return bind_params(body, params, &args);
                    }
                }
            }
            (ReplaceTarget::FuncHead(h), Expr::Deriv { head, args, orders }) if head == h => {
                let args: Vec<Expr> = args.iter().map(|a| substitute_raw(a, rules)).collect();
                match &rule.replacement {
                    Replacement::Expr(_) => {}
                    Replacement::FuncBody { params, body } => {
                        // differentiate the body per slot orders, then bind
                        let mut expr = body.clone();
                        for (slot, k) in orders.iter().enumerate() {
                            for _ in 0..*k {
                                expr = diff(&expr, &params[slot]);
                            }
                        }
                        return bind_params(&expr, params, &args);
                    }
                }
            }
            _ => {}
        }
    }
    match e {
        Expr::Num(_) | Expr::Sym(_) => e.clone(),
        Expr::Sum(c) => Expr::sum(c.iter().map(|x| substitute_raw(x, rules)).collect()),
        Expr::Prod(c) => Expr::prod(c.iter().map(|x| substitute_raw(x, rules)).collect()),
        Expr::Pow(b, ex) => Expr::pow(substitute_raw(b, rules), substitute_raw(ex, rules)),
        Expr::Func(name, args) => Expr::func(
            name.clone(),
            args.iter().map(|x| substitute_raw(x, rules)).collect(),
        ),
        Expr::Deriv { head, args, orders } => Expr::Deriv {
            head: head.clone(),
            args: args.iter().map(|x| substitute_raw(x, rules)).collect(),
            orders: orders.clone(),
        },
        Expr::Deferred {
            inner,
            param,
            order,
        } => Expr::Deferred {
            inner: Box::new(substitute_raw(inner, rules)),
            param: param.clone(),
            order: *order,
        },
        Expr::Abs(inner) => Expr::abs(substitute_raw(inner, rules)),
    }
}

fn bind_params(body: &Expr, params: &[String], args: &[Expr]) -> Expr {
    let rules: Vec<SubRule> = params
        .iter()
        .zip(args)
        .map(|(p, a)| SubRule::symbol(p.clone(), a.clone()))
        .collect();
    substitute_raw(body, &rules)
}

/// Replace every deferred derivative by the actual total derivative with
/// respect to its parameter, then simplify.
pub fn activate(e: &Expr, asm: &Assumptions) -> Expr {
    let expanded = e.map(&mut |node| match node {
        Expr::Deferred {
            inner,
            param,
            order,
        } => {
            let mut out = simplify(&inner, asm);
            for _ in 0..order {
                out = diff(&out, &param);
            }
            out
        }
        other => other,
    });
    simplify(&expanded, asm)
}
