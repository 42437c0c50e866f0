//! The simplification pipeline: bottom-up canonicalization of atom arguments
//! and builtin rewrites, then rational-function normalization of the whole
//! tree, with radical/absolute-value handling under the active assumptions.

use super::poly::{conv, emit, AtomTable};
use super::{Assumptions, Expr};
use num_traits::Signed;

/// Simplify to canonical form. The pipeline is fixed: normalize to a fraction
/// of polynomials over a common denominator, collect like terms, reduce
/// `sin^2 + cos^2`, and rewrite `sqrt(u^2) -> |u|` (and `|u| -> u` when the
/// assumptions imply `u >= 0`). Idempotent by construction.
pub fn simplify(e: &Expr, asm: &Assumptions) -> Expr {
    let prepped = prepare(e, asm);
    normalize(&prepped, asm)
}

/// Polynomial normalization of a prepared tree.
fn normalize(e: &Expr, asm: &Assumptions) -> Expr {
    let table = AtomTable::build(e, asm.assume_real);
    match conv(e, &table) {
        Ok(f) => emit(&f, &table),
        // zero denominator or similar: leave the prepared tree untouched
        Err(_) => e.clone(),
    }
}

/// Bottom-up pass. Arguments of functions, derivatives and absolute values
/// are fully simplified so that value-equal atoms coincide structurally;
/// reciprocal trig functions are rewritten in terms of sin and cos.
fn prepare(e: &Expr, asm: &Assumptions) -> Expr {
    match e {
        Expr::Num(_) | Expr::Sym(_) => e.clone(),
        Expr::Sum(c) => Expr::sum(c.iter().map(|x| prepare(x, asm)).collect()),
        Expr::Prod(c) => Expr::prod(c.iter().map(|x| prepare(x, asm)).collect()),
        Expr::Pow(b, ex) => {
            let ex = simplify(ex, asm);
            match &ex {
                Expr::Num(n) if n.is_integer() => Expr::pow(prepare(b, asm), ex),
                Expr::Num(n) => {
                    let base = simplify(b, asm);
                    // sqrt(u^2) -> |u| for real-valued expressions
                    if asm.assume_real && *n.denom() == num_bigint::BigInt::from(2) {
                        if let Some(root) = perfect_square_root(&base, asm) {
                            use num_traits::ToPrimitive;
                            if let Some(p) = n.numer().to_i64() {
                                return Expr::pow(root, Expr::int(p));
                            }
                        }
                    }
                    Expr::pow(base, ex)
                }
                _ => Expr::pow(simplify(b, asm), ex),
            }
        }
        Expr::Func(name, args) => {
            let args: Vec<Expr> = args.iter().map(|x| simplify(x, asm)).collect();
            rewrite_func(name, args)
        }
        Expr::Deriv { head, args, orders } => Expr::Deriv {
            head: head.clone(),
            args: args.iter().map(|x| simplify(x, asm)).collect(),
            orders: orders.clone(),
        },
        Expr::Deferred {
            inner,
            param,
            order,
        } => Expr::Deferred {
            inner: Box::new(simplify(inner, asm)),
            param: param.clone(),
            order: *order,
        },
        Expr::Abs(inner) => simplify_abs(simplify(inner, asm), asm),
    }
}

/// `sqrt(base)` when `base` is a perfect square: returns `|root|`, collapsed
/// to `root` when the assumptions imply it is non-negative.
fn perfect_square_root(base: &Expr, asm: &Assumptions) -> Option<Expr> {
    let table = AtomTable::build(base, asm.assume_real);
    let f = conv(base, &table).ok()?;
    if !f.den.is_empty() {
        return None;
    }
    let root = f.num.sqrt()?;
    let root_expr = emit(
        &super::poly::Frac {
            num: root,
            den: Vec::new(),
        },
        &table,
    );
    Some(simplify_abs(root_expr, asm))
}

fn simplify_abs(inner: Expr, asm: &Assumptions) -> Expr {
    if let Expr::Num(n) = &inner {
        return Expr::Num(n.abs());
    }
    if is_nonneg(&inner, asm) {
        return inner;
    }
    if is_nonpos(&inner, asm) {
        return simplify(&Expr::neg(inner), asm);
    }
    // pull a numeric coefficient out of products: |c * rest| = |c| * |rest|
    if let Expr::Prod(children) = &inner {
        if let Some(Expr::Num(c)) = children.first() {
            let rest = Expr::prod(children[1..].to_vec());
            return Expr::prod(vec![Expr::Num(c.abs()), simplify_abs(rest, asm)]);
        }
    }
    Expr::Abs(Box::new(inner))
}

/// Syntactic non-negativity under the assumptions.
pub(crate) fn is_nonneg(e: &Expr, asm: &Assumptions) -> bool {
    match e {
        Expr::Num(n) => !n.is_negative(),
        Expr::Sym(s) => asm.implies_nonneg(s),
        Expr::Abs(_) => true,
        Expr::Pow(b, ex) => match &**ex {
            Expr::Num(n) if n.is_integer() && n.numer().is_even() => asm.assume_real,
            Expr::Num(n) if n.denom().is_even() => true, // principal even root
            _ => is_nonneg(b, asm),
        },
        Expr::Prod(c) => c.iter().all(|x| is_nonneg(x, asm)),
        Expr::Sum(c) => c.iter().all(|x| is_nonneg(x, asm)),
        _ => false,
    }
}

fn is_nonpos(e: &Expr, asm: &Assumptions) -> bool {
    match e {
        Expr::Num(n) => !n.is_positive(),
        Expr::Sym(s) => asm.implies_nonpos(s),
        Expr::Sum(c) => c.iter().all(|x| is_nonpos(x, asm)),
        Expr::Prod(c) => {
            if let Some(Expr::Num(n)) = c.first() {
                n.is_negative() && c[1..].iter().all(|x| is_nonneg(x, asm))
            } else {
                false
            }
        }
        _ => false,
    }
}

use num_integer::Integer as _;

fn rewrite_func(name: &str, args: Vec<Expr>) -> Expr {
    if args.len() == 1 {
        let u = &args[0];
        match name {
            "tan" => {
                return Expr::div(
                    Expr::Func("sin".into(), args.clone()),
                    Expr::Func("cos".into(), args),
                )
            }
            "cot" => {
                return Expr::div(
                    Expr::Func("cos".into(), args.clone()),
                    Expr::Func("sin".into(), args),
                )
            }
            "sec" => return Expr::pow(Expr::Func("cos".into(), args), Expr::int(-1)),
            "csc" => return Expr::pow(Expr::Func("sin".into(), args), Expr::int(-1)),
            "sin" | "arcsin" | "arctan" if u.is_num_zero() => return Expr::int(0),
            "cos" if u.is_num_zero() => return Expr::int(1),
            "exp" if u.is_num_zero() => return Expr::int(1),
            "log" if u.is_num_one() => return Expr::int(0),
            _ => {}
        }
    }
    Expr::func(name, args)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Predicate, Relation};

    fn simp(text: &str) -> Expr {
        simplify(&parse_expr(text).unwrap(), &Assumptions::default())
    }

    fn assume_r_nonneg() -> Assumptions {
        let mut asm = Assumptions::default();
        asm.add(Predicate {
            symbol: "r".into(),
            relation: Relation::Geq,
            bound: Expr::int(0),
        });
        asm
    }

    #[test]
    fn pythagorean_identity() {
        assert_eq!(simp("sin(θ)^2 + cos(θ)^2"), Expr::int(1));
    }

    #[test]
    fn rational_cancellation() {
        assert_eq!(simp("(1 - 2*M/r) * 1/(1 - 2*M/r) - 1"), Expr::int(0));
        // x^2 - 1 over x - 1
        assert_eq!(simp("(x^2 - 1)/(x - 1)"), parse_expr("x + 1").unwrap());
    }

    #[test]
    fn sqrt_of_square_respects_assumptions() {
        let abs_r = simp("sqrt(r^2)");
        assert_eq!(abs_r, Expr::abs(Expr::sym("r")));
        let r = simplify(
            &parse_expr("sqrt(r^2)").unwrap(),
            &assume_r_nonneg(),
        );
        assert_eq!(r, Expr::sym("r"));
    }

    #[test]
    fn sqrt_of_square_without_real_assumption_stays() {
        let mut asm = Assumptions::default();
        asm.assume_real = false;
        let e = simplify(&parse_expr("sqrt(r^2)").unwrap(), &asm);
        assert_eq!(e, Expr::pow(Expr::pow(Expr::sym("r"), Expr::int(2)), Expr::rat(1, 2)));
    }

    #[test]
    fn like_terms_collect() {
        assert_eq!(simp("x + y + x - 2*y"), parse_expr("2*x - y").unwrap());
        assert_eq!(simp("x*y - y*x"), Expr::int(0));
    }

    #[test]
    fn half_powers_combine() {
        assert_eq!(simp("sqrt(1-v^2) * sqrt(1-v^2) - 1 + v^2"), Expr::int(0));
        // 1/sqrt * 1/sqrt = 1/(1 - v^2)
        let e = simp("1/sqrt(1-v^2) * 1/sqrt(1-v^2)");
        let diff = Expr::sub(e, parse_expr("1/(1-v^2)").unwrap());
        assert_eq!(simplify(&diff, &Assumptions::default()), Expr::int(0));
    }

    #[test]
    fn fractional_power_overflow_reduces() {
        // sqrt(x^2+y^2+z^2)^6 = (x^2+y^2+z^2)^3
        let e = simp("sqrt(x^2+y^2+z^2)^6 - (x^2+y^2+z^2)^3");
        assert_eq!(e, Expr::int(0));
    }

    #[test]
    fn idempotent_on_assorted_inputs() {
        for text in [
            "1 - 2*M/r",
            "(ρ+p)/(1-v^2) + p",
            "sin(θ)*cos(θ)/(r^2 - 2*M*r)",
            "sqrt(x^2+y^2+z^2)",
            "M*(r - 2*M)/r^3",
            "1/(2*M*r - r^2)",
            "a(t)^2/(1 - k*r^2)",
        ] {
            let once = simp(text);
            let twice = simplify(&once, &Assumptions::default());
            assert_eq!(once, twice, "not idempotent on {text}");
        }
    }

    #[test]
    fn reciprocal_trig_rewrites() {
        assert_eq!(simp("tan(θ)*cot(θ)"), Expr::int(1));
        assert_eq!(simp("csc(θ)^2 - 1/sin(θ)^2"), Expr::int(0));
    }

    #[test]
    fn cosine_square_stays_when_sine_absent() {
        let e = simp("cos(θ)^2");
        assert_eq!(
            e,
            Expr::pow(Expr::func("cos", vec![Expr::sym("θ")]), Expr::int(2))
        );
    }

    #[test]
    fn abs_square_is_square() {
        assert_eq!(simp("abs(r)^2 - r^2"), Expr::int(0));
    }
}
