//! Numeric evaluation and probabilistic zero-testing.

use super::{activate, simplify, Assumptions, Expr, Relation};
use crate::error::{Error, Result};
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Callable implementations for abstract functions, used by `eval_numeric`.
/// Needed derivatives are approximated by central differences.
pub type FuncImpls<'a> = HashMap<String, Box<dyn Fn(&[f64]) -> f64 + 'a>>;

const SINGULAR: f64 = 1e-6;

/// Evaluate to an IEEE double with every free symbol bound and abstract
/// functions supplied as callables.
pub fn eval_numeric(
    e: &Expr,
    bindings: &HashMap<String, f64>,
    funcs: &FuncImpls,
) -> Result<f64> {
    let v = eval(e, &mut |node| match node {
        Expr::Sym(s) => bindings
            .get(s)
            .copied()
            .ok_or_else(|| Error::UnboundSymbol(s.clone())),
        Expr::Func(name, args) => {
            let f = funcs
                .get(name)
                .ok_or_else(|| Error::UnboundSymbol(name.clone()))?;
            let argv = args
                .iter()
                .map(|a| eval_numeric(a, bindings, funcs))
                .collect::<Result<Vec<_>>>()?;
            Ok(f(&argv))
        }
        Expr::Deriv { head, args, orders } => {
            let f = funcs
                .get(head)
                .ok_or_else(|| Error::UnboundSymbol(head.clone()))?;
            let argv = args
                .iter()
                .map(|a| eval_numeric(a, bindings, funcs))
                .collect::<Result<Vec<_>>>()?;
            Ok(central_diff(f, &argv, orders))
        }
        _ => unreachable!(),
    })?;
    Ok(v.0)
}

/// Central-difference approximation of mixed partial derivatives.
fn central_diff(f: &dyn Fn(&[f64]) -> f64, args: &[f64], orders: &[u32]) -> f64 {
    match orders.iter().position(|&k| k > 0) {
        None => f(args),
        Some(slot) => {
            let h = 1e-4 * args[slot].abs().max(1.0);
            let mut lo = args.to_vec();
            let mut hi = args.to_vec();
            lo[slot] -= h;
            hi[slot] += h;
            let mut reduced = orders.to_vec();
            reduced[slot] -= 1;
            (central_diff(f, &hi, &reduced) - central_diff(f, &lo, &reduced)) / (2.0 * h)
        }
    }
}

/// Tree evaluation returning `(value, magnitude)`, where the magnitude tracks
/// the size of the terms before cancellation and serves as the relative scale
/// for zero-testing. The resolver supplies values for symbols and abstract
/// function atoms.
fn eval(
    e: &Expr,
    resolve: &mut dyn FnMut(&Expr) -> Result<f64>,
) -> Result<(f64, f64)> {
    let ok = |v: f64| -> Result<(f64, f64)> {
        if v.is_finite() {
            Ok((v, v.abs()))
        } else {
            Err(Error::Domain("non-finite value".into()))
        }
    };
    match e {
        Expr::Num(n) => {
            let v = n.to_f64().ok_or_else(|| Error::Domain("huge rational".into()))?;
            ok(v)
        }
        Expr::Sym(_) => ok(resolve(e)?),
        Expr::Sum(c) => {
            let mut v = 0.0;
            let mut mag = 0.0;
            for x in c {
                let (xv, xm) = eval(x, resolve)?;
                v += xv;
                mag += xm;
            }
            Ok((v, mag))
        }
        Expr::Prod(c) => {
            let mut v = 1.0;
            let mut mag = 1.0;
            for x in c {
                let (xv, xm) = eval(x, resolve)?;
                v *= xv;
                mag *= xm;
            }
            if !v.is_finite() {
                return Err(Error::Domain("non-finite product".into()));
            }
            Ok((v, mag))
        }
        Expr::Pow(b, ex) => {
            let (bv, bm) = eval(b, resolve)?;
            let (ev, _) = eval(ex, resolve)?;
            let negative_exp = ev < 0.0;
            if negative_exp && bv.abs() < SINGULAR * bm.max(1.0) {
                return Err(Error::Domain("near-singular denominator".into()));
            }
            let v = if ev.fract() == 0.0 {
                bv.powi(ev as i32)
            } else if bv < 0.0 {
                return Err(Error::Domain("fractional power of negative base".into()));
            } else {
                bv.powf(ev)
            };
            if !v.is_finite() {
                return Err(Error::Domain("non-finite power".into()));
            }
            Ok((v, v.abs()))
        }
        Expr::Func(name, args) => {
            let argv: Vec<f64> = args
                .iter()
                .map(|a| eval(a, resolve).map(|(v, _)| v))
                .collect::<Result<Vec<_>>>()?;
            match (name.as_str(), argv.len()) {
                ("sin", 1) => ok(argv[0].sin()),
                ("cos", 1) => ok(argv[0].cos()),
                ("tan", 1) => ok(argv[0].tan()),
                ("cot", 1) => ok(argv[0].cos() / guard(argv[0].sin())?),
                ("sec", 1) => ok(1.0 / guard(argv[0].cos())?),
                ("csc", 1) => ok(1.0 / guard(argv[0].sin())?),
                ("exp", 1) => ok(argv[0].exp()),
                ("log", 1) => {
                    if argv[0] <= 0.0 {
                        Err(Error::Domain("log of non-positive value".into()))
                    } else {
                        ok(argv[0].ln())
                    }
                }
                ("arcsin", 1) => {
                    if argv[0].abs() > 1.0 {
                        Err(Error::Domain("arcsin out of range".into()))
                    } else {
                        ok(argv[0].asin())
                    }
                }
                ("arccos", 1) => {
                    if argv[0].abs() > 1.0 {
                        Err(Error::Domain("arccos out of range".into()))
                    } else {
                        ok(argv[0].acos())
                    }
                }
                ("arctan", 1) => ok(argv[0].atan()),
                // arctan2(x, y): angle of the point (x, y)
                ("arctan2", 2) => ok(argv[1].atan2(argv[0])),
                _ => ok(resolve(e)?),
            }
        }
        Expr::Deriv { .. } => ok(resolve(e)?),
        Expr::Deferred { .. } => Err(Error::Domain(
            "deferred derivative in numeric evaluation".into(),
        )),
        Expr::Abs(inner) => {
            let (v, _) = eval(inner, resolve)?;
            ok(v.abs())
        }
    }
}

fn guard(v: f64) -> Result<f64> {
    if v.abs() < SINGULAR {
        Err(Error::Domain("near-singular denominator".into()))
    } else {
        Ok(v)
    }
}

const ZERO_TOL: f64 = 1e-9;
const SAMPLES: usize = 20;
const MAX_RETRIES: usize = 60;

/// Probabilistic zero test: true when the canonical form is literally zero,
/// or when the expression evaluates below `1e-9` (relative to term scale) at
/// 20 random points admissible under the assumptions. Points that land on
/// singular denominators are resampled.
pub fn is_zero(e: &Expr, asm: &Assumptions) -> Result<bool> {
    let s = simplify(e, asm);
    if s.is_num_zero() {
        return Ok(true);
    }
    if let Expr::Num(_) = s {
        return Ok(false);
    }
    let s = if s.contains_deferred() {
        activate(&s, asm)
    } else {
        s
    };
    sample_zero(&s, asm)
}

/// The sampling half of `is_zero`, for callers whose input is already in
/// canonical form (skips the redundant simplification pass).
pub(crate) fn is_zero_sampled(e: &Expr, asm: &Assumptions) -> Result<bool> {
    if let Expr::Num(n) = e {
        return Ok(n.to_f64().map(|v| v == 0.0).unwrap_or(false));
    }
    let activated;
    let e = if e.contains_deferred() {
        activated = activate(e, asm);
        &activated
    } else {
        e
    };
    sample_zero(e, asm)
}

fn sample_zero(s: &Expr, asm: &Assumptions) -> Result<bool> {
    if s.is_num_zero() {
        return Ok(true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e4_50f1);
    for _ in 0..SAMPLES {
        let mut retries = 0;
        loop {
            // fresh random values for symbols and abstract atoms each try
            let mut cache: HashMap<Expr, f64> = HashMap::new();
            let mut resolve = |node: &Expr| -> Result<f64> {
                if let Some(v) = cache.get(node) {
                    return Ok(*v);
                }
                let v = match node {
                    Expr::Sym(name) => sample_symbol(name, asm, &mut rng)?,
                    _ => sample_value(&mut rng),
                };
                cache.insert(node.clone(), v);
                Ok(v)
            };
            match eval(s, &mut resolve) {
                Ok((v, mag)) => {
                    if v.abs() > ZERO_TOL * mag.max(1.0) {
                        return Ok(false);
                    }
                    break;
                }
                Err(Error::Domain(_)) | Err(Error::UnboundSymbol(_)) => {
                    retries += 1;
                    if retries > MAX_RETRIES {
                        return Err(Error::UnresolvableSample(MAX_RETRIES));
                    }
                }
                Err(other) => return Err(other),
            }
        }
    }
    Ok(true)
}

fn sample_value(rng: &mut ChaCha8Rng) -> f64 {
    let magnitude: f64 = rng.gen_range(0.2..2.0);
    if rng.gen_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

fn sample_symbol(name: &str, asm: &Assumptions, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut v = sample_value(rng);
    for p in &asm.predicates {
        if p.symbol != name {
            continue;
        }
        let bound = match &p.bound {
            Expr::Num(n) => n.to_f64().unwrap_or(0.0),
            other => {
                // bounds are constants in practice; evaluate or skip
                match eval(other, &mut |_| Err(Error::Domain("free bound".into()))) {
                    Ok((b, _)) => b,
                    Err(_) => continue,
                }
            }
        };
        v = match p.relation {
            Relation::Geq | Relation::Gt => bound + v.abs(),
            Relation::Leq | Relation::Lt => bound - v.abs(),
            Relation::EqConst => bound,
        };
    }
    Ok(v)
}
