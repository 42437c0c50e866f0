//! Expression rendering. Plain style is parseable text (the inverse of
//! `parse_expr` up to canonical flattening); display options add the
//! shorthands used when showing tensors: suppressed arguments for reserved
//! functions, `∂`-subscript derivatives, and Newton dots for derivatives
//! with respect to the curve parameter.

use super::Expr;
use num_bigint::BigInt;
use num_traits::{One, Signed};
use std::collections::BTreeSet;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Style {
    Plain,
    Latex,
}

#[derive(Clone, Debug, Default)]
pub struct DisplayOpts {
    /// Function heads whose arguments are hidden; their derivatives render
    /// in `∂`-subscript shorthand.
    pub suppress_args: BTreeSet<String>,
    /// Derivatives with respect to this symbol render in dot notation.
    pub curve_param: Option<String>,
}

impl DisplayOpts {
    pub fn suppressing<I: IntoIterator<Item = String>>(names: I) -> DisplayOpts {
        DisplayOpts {
            suppress_args: names.into_iter().collect(),
            curve_param: None,
        }
    }
}

/// Render an expression deterministically.
pub fn format_expr(e: &Expr, style: Style, opts: &DisplayOpts) -> String {
    let r = Renderer { style, opts };
    r.sum_level(e)
}

struct Renderer<'a> {
    style: Style,
    opts: &'a DisplayOpts,
}

impl Renderer<'_> {
    fn sum_level(&self, e: &Expr) -> String {
        match e {
            Expr::Sum(terms) => {
                let mut out = String::new();
                for (i, t) in terms.iter().enumerate() {
                    let (neg, body) = self.signed_term(t);
                    if i == 0 {
                        if neg {
                            out.push('-');
                        }
                    } else {
                        out.push_str(if neg { " - " } else { " + " });
                    }
                    out.push_str(&body);
                }
                out
            }
            _ => {
                let (neg, body) = self.signed_term(e);
                if neg {
                    format!("-{body}")
                } else {
                    body
                }
            }
        }
    }

    /// Split a leading minus sign off a term.
    fn signed_term(&self, e: &Expr) -> (bool, String) {
        match e {
            Expr::Num(n) if n.is_negative() => (true, self.number(&n.abs())),
            Expr::Prod(factors) => {
                if let Some(Expr::Num(n)) = factors.first() {
                    if n.is_negative() {
                        let abs = n.abs();
                        let mut rest: Vec<Expr> = factors[1..].to_vec();
                        if !abs.is_one() {
                            rest.insert(0, Expr::Num(abs));
                        }
                        return (true, self.product(&rest));
                    }
                }
                (false, self.product(factors))
            }
            _ => (false, self.factor(e, false)),
        }
    }

    fn number(&self, n: &num_rational::BigRational) -> String {
        if n.is_integer() {
            n.numer().to_string()
        } else if self.style == Style::Latex {
            format!("\\frac{{{}}}{{{}}}", n.numer(), n.denom())
        } else {
            format!("{}/{}", n.numer(), n.denom())
        }
    }

    fn product(&self, factors: &[Expr]) -> String {
        // split into numerator and denominator parts
        let mut num_parts: Vec<String> = Vec::new();
        let mut den_parts: Vec<String> = Vec::new();
        let mut coeff_num = BigInt::one();
        let mut coeff_den = BigInt::one();
        for f in factors {
            match f {
                Expr::Num(n) => {
                    coeff_num *= n.numer();
                    coeff_den *= n.denom();
                }
                Expr::Pow(b, ex) => match &**ex {
                    Expr::Num(k) if k.is_integer() && k.is_negative() => {
                        let pos = -k;
                        if pos.is_one() {
                            den_parts.push(self.factor(b, true));
                        } else {
                            den_parts
                                .push(self.power(b, &Expr::Num(pos)));
                        }
                    }
                    _ => num_parts.push(self.factor(f, false)),
                },
                _ => num_parts.push(self.factor(f, false)),
            }
        }
        if !coeff_num.is_one() || num_parts.is_empty() {
            num_parts.insert(0, coeff_num.to_string());
        }
        if !coeff_den.is_one() {
            den_parts.insert(0, coeff_den.to_string());
        }
        let sep = if self.style == Style::Latex { " " } else { "*" };
        let num = num_parts.join(sep);
        if den_parts.is_empty() {
            num
        } else if self.style == Style::Latex {
            format!("\\frac{{{num}}}{{{}}}", den_parts.join(sep))
        } else if den_parts.len() == 1 && !den_parts[0].contains('*') {
            format!("{num}/{}", den_parts[0])
        } else {
            format!("{num}/({})", den_parts.join(sep))
        }
    }

    /// Render with parentheses appropriate for a multiplication operand.
    /// `base_pos` additionally parenthesizes anything that would bind wrong
    /// in a denominator or power base.
    fn factor(&self, e: &Expr, base_pos: bool) -> String {
        match e {
            Expr::Num(n) => {
                if n.is_negative() || (!n.is_integer() && base_pos) {
                    format!("({})", self.number(n))
                } else {
                    self.number(n)
                }
            }
            Expr::Sym(s) => self.symbol(s),
            Expr::Sum(_) => format!("({})", self.sum_level(e)),
            Expr::Prod(_) => format!("({})", self.sum_level(e)),
            Expr::Pow(b, ex) => self.power_or_root(b, ex),
            Expr::Func(name, args) => self.func(name, args),
            Expr::Deriv { head, args, orders } => self.deriv(head, args, orders),
            Expr::Deferred {
                inner,
                param,
                order,
            } => self.deferred(inner, param, *order),
            Expr::Abs(inner) => {
                if self.style == Style::Latex {
                    format!("\\left|{}\\right|", self.sum_level(inner))
                } else {
                    format!("abs({})", self.sum_level(inner))
                }
            }
        }
    }

    fn power_or_root(&self, b: &Expr, ex: &Expr) -> String {
        if let Expr::Num(n) = ex {
            if !n.is_integer() && *n.numer() == BigInt::one() && *n.denom() == BigInt::from(2) {
                return if self.style == Style::Latex {
                    format!("\\sqrt{{{}}}", self.sum_level(b))
                } else {
                    format!("sqrt({})", self.sum_level(b))
                };
            }
            if n.is_negative() {
                // standalone reciprocal: 1/x^k
                let pos = Expr::Num(-n);
                let body = if pos.is_num_one() {
                    self.factor(b, true)
                } else {
                    self.power(b, &pos)
                };
                return if self.style == Style::Latex {
                    format!("\\frac{{1}}{{{body}}}")
                } else if body.contains('*') {
                    format!("1/({body})")
                } else {
                    format!("1/{body}")
                };
            }
        }
        self.power(b, ex)
    }

    fn power(&self, b: &Expr, ex: &Expr) -> String {
        let base = self.factor(b, true);
        let base = match b {
            Expr::Pow(..) | Expr::Deriv { .. } | Expr::Deferred { .. } => format!("({base})"),
            _ => base,
        };
        let exp_str = match ex {
            Expr::Num(n) if n.is_integer() && !n.is_negative() => self.number(n),
            _ => {
                if self.style == Style::Latex {
                    self.sum_level(ex)
                } else {
                    format!("({})", self.sum_level(ex))
                }
            }
        };
        if self.style == Style::Latex {
            format!("{base}^{{{exp_str}}}")
        } else {
            format!("{base}^{exp_str}")
        }
    }

    fn symbol(&self, s: &str) -> String {
        if self.style == Style::Latex {
            latex_ident(s)
        } else {
            s.to_string()
        }
    }

    fn func(&self, name: &str, args: &[Expr]) -> String {
        if self.opts.suppress_args.contains(name) {
            return self.symbol(name);
        }
        if self.style == Style::Latex {
            let known = matches!(
                name,
                "sin" | "cos" | "tan" | "cot" | "sec" | "csc" | "exp" | "log"
            );
            let head = if known {
                format!("\\{name}")
            } else {
                latex_ident(name)
            };
            let args: Vec<String> = args.iter().map(|a| self.sum_level(a)).collect();
            format!("{head}\\left({}\\right)", args.join(", "))
        } else {
            let args: Vec<String> = args.iter().map(|a| self.sum_level(a)).collect();
            format!("{name}({})", args.join(","))
        }
    }

    fn deriv(&self, head: &str, args: &[Expr], orders: &[u32]) -> String {
        // dot notation for curve-parameter derivatives of coordinate functions
        if let Some(param) = &self.opts.curve_param {
            if args.len() == 1 && args[0] == Expr::Sym(param.clone()) {
                let total: u32 = orders.iter().sum();
                if total <= 2 {
                    return if self.style == Style::Latex {
                        let cmd = if total == 1 { "\\dot" } else { "\\ddot" };
                        format!("{cmd}{{{}}}", latex_ident(head))
                    } else {
                        let mark = if total == 1 { '\u{0307}' } else { '\u{0308}' };
                        let mut chars: Vec<char> = head.chars().collect();
                        chars.insert(1.min(chars.len()), mark);
                        chars.into_iter().collect()
                    };
                }
            }
        }
        // ∂-subscript shorthand when the head's arguments are suppressed
        if self.opts.suppress_args.contains(head) {
            let mut subs: Vec<String> = Vec::new();
            for (arg, &k) in args.iter().zip(orders) {
                if k == 0 {
                    continue;
                }
                let label = match arg {
                    Expr::Sym(s) => s.clone(),
                    Expr::Func(inner_head, _) => inner_head.clone(),
                    other => format_expr(other, Style::Plain, &DisplayOpts::default()),
                };
                if self.style == Style::Latex {
                    if k == 1 {
                        subs.push(latex_ident(&label));
                    } else {
                        subs.push(format!("{}^{k}", latex_ident(&label)));
                    }
                } else if k == 1 {
                    subs.push(label);
                } else {
                    subs.push(format!("{label}{}", superscript(k)));
                }
            }
            return if self.style == Style::Latex {
                format!("\\partial_{{{}}}{}", subs.join(","), latex_ident(head))
            } else {
                format!("∂{}{}", subs.join(","), head)
            };
        }
        // exact, parseable form: D(f(args), slot symbols repeated by order)
        if self.style == Style::Latex {
            let mut subs: Vec<String> = Vec::new();
            for (arg, &k) in args.iter().zip(orders) {
                if k > 0 {
                    let a = self.sum_level(arg);
                    subs.push(if k == 1 { a } else { format!("{a}^{k}") });
                }
            }
            return format!(
                "\\partial_{{{}}}{}",
                subs.join(","),
                self.func(head, args)
            );
        }
        let mut parts = vec![self.func(head, args)];
        for (arg, &k) in args.iter().zip(orders) {
            for _ in 0..k {
                parts.push(self.sum_level(arg));
            }
        }
        format!("D({})", parts.join(", "))
    }

    fn deferred(&self, inner: &Expr, param: &str, order: u32) -> String {
        let pretty = self.opts.curve_param.is_some() || !self.opts.suppress_args.is_empty();
        if self.style == Style::Latex {
            let p = latex_ident(param);
            let sub = if order == 1 {
                p
            } else {
                format!("{p}^{order}")
            };
            format!("\\partial_{{{sub}}}\\left({}\\right)", self.sum_level(inner))
        } else if pretty {
            let sup = if order == 1 {
                String::new()
            } else {
                superscript(order)
            };
            format!("∂{param}{sup}({})", self.sum_level(inner))
        } else if order == 1 {
            format!("DD({}, {param})", self.sum_level(inner))
        } else {
            format!("DD({}, {param}, {order})", self.sum_level(inner))
        }
    }
}

fn superscript(k: u32) -> String {
    const DIGITS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    k.to_string()
        .chars()
        .map(|c| DIGITS[c.to_digit(10).unwrap() as usize])
        .collect()
}

/// Map Greek letters in identifiers to LaTeX commands.
fn latex_ident(s: &str) -> String {
    let mut out = String::new();
    let mut plain = String::new();
    let flush = |plain: &mut String, out: &mut String| {
        if !plain.is_empty() {
            out.push_str(plain);
            plain.clear();
        }
    };
    for c in s.chars() {
        let name = greek_name(c);
        match name {
            Some(n) => {
                flush(&mut plain, &mut out);
                out.push('\\');
                out.push_str(n);
                out.push(' ');
            }
            None => plain.push(c),
        }
    }
    flush(&mut plain, &mut out);
    out.trim_end().to_string()
}

fn greek_name(c: char) -> Option<&'static str> {
    Some(match c {
        'α' => "alpha",
        'β' => "beta",
        'γ' => "gamma",
        'δ' => "delta",
        'ε' => "epsilon",
        'ζ' => "zeta",
        'η' => "eta",
        'θ' => "theta",
        'ι' => "iota",
        'κ' => "kappa",
        'λ' => "lambda",
        'μ' => "mu",
        'ν' => "nu",
        'ξ' => "xi",
        'π' => "pi",
        'ρ' => "rho",
        'σ' => "sigma",
        'τ' => "tau",
        'υ' => "upsilon",
        'φ' => "phi",
        'χ' => "chi",
        'ψ' => "psi",
        'ω' => "omega",
        'Γ' => "Gamma",
        'Δ' => "Delta",
        'Θ' => "Theta",
        'Λ' => "Lambda",
        'Σ' => "Sigma",
        'Φ' => "Phi",
        'Ψ' => "Psi",
        'Ω' => "Omega",
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, simplify, Assumptions};

    fn plain(e: &Expr) -> String {
        format_expr(e, Style::Plain, &DisplayOpts::default())
    }

    #[test]
    fn simple_power() {
        assert_eq!(plain(&Expr::pow(Expr::sym("r"), Expr::int(2))), "r^2");
    }

    #[test]
    fn suppressed_function_prints_bare() {
        let opts = DisplayOpts::suppressing(vec!["f".to_string()]);
        let e = parse_expr("f(t,x,y,z)").unwrap();
        assert_eq!(format_expr(&e, Style::Plain, &opts), "f");
    }

    #[test]
    fn suppressed_derivative_uses_partial_shorthand() {
        let opts = DisplayOpts::suppressing(vec!["a".to_string()]);
        let e = Expr::Deriv {
            head: "a".into(),
            args: vec![Expr::sym("t")],
            orders: vec![2],
        };
        assert_eq!(format_expr(&e, Style::Plain, &opts), "∂t²a");
    }

    #[test]
    fn dot_notation_for_curve_derivatives() {
        let opts = DisplayOpts {
            suppress_args: Default::default(),
            curve_param: Some("λ".into()),
        };
        let e = Expr::Deriv {
            head: "t".into(),
            args: vec![Expr::sym("λ")],
            orders: vec![1],
        };
        assert_eq!(format_expr(&e, Style::Plain, &opts), "t\u{0307}");
    }

    #[test]
    fn plain_round_trips_through_parser() {
        let asm = Assumptions::default();
        for text in [
            "1 - 2*M/r",
            "48*M^2/r^6",
            "r^2*sin(θ)^2",
            "(ρ+p)/(1-v^2)",
            "sqrt(x^2+y^2+z^2)",
            "M*(r-2*M)/r^3",
            "-2*t - 3*x*ρ",
            "1/(2*M*r - r^2)",
        ] {
            let canonical = simplify(&parse_expr(text).unwrap(), &asm);
            let rendered = plain(&canonical);
            let reparsed = simplify(&parse_expr(&rendered).unwrap(), &asm);
            assert_eq!(canonical, reparsed, "round trip failed for {text}: {rendered}");
        }
    }

    #[test]
    fn derivative_nodes_round_trip() {
        let asm = Assumptions::default();
        let e = Expr::Deriv {
            head: "f".into(),
            args: vec![Expr::sym("t"), Expr::sym("x")],
            orders: vec![1, 2],
        };
        let rendered = plain(&e);
        assert_eq!(rendered, "D(f(t,x), t, x, x)");
        let reparsed = simplify(&parse_expr(&rendered).unwrap(), &asm);
        assert_eq!(simplify(&e, &asm), reparsed);
    }

    #[test]
    fn latex_uses_frac_and_greek() {
        let e = simplify(
            &parse_expr("48*M^2/r^6").unwrap(),
            &Assumptions::default(),
        );
        let tex = format_expr(&e, Style::Latex, &DisplayOpts::default());
        assert_eq!(tex, "\\frac{48 M^{2}}{r^{6}}");
        let theta = format_expr(
            &parse_expr("sin(θ)").unwrap(),
            Style::Latex,
            &DisplayOpts::default(),
        );
        assert_eq!(theta, "\\sin\\left(\\theta\\right)");
    }
}
