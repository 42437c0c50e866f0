//! Rational-function normal form: expressions are flattened into fractions of
//! multivariate polynomials over "atoms" (symbols, function applications,
//! derivatives, absolute values, fractional powers). Denominators are kept in
//! factored form and cancelled against numerators by exact division. Two
//! relations are reduced away so that value-equal expressions share one shape:
//! `cos(u)^2 -> 1 - sin(u)^2` (when `sin(u)` occurs) and `|u|^2 -> u^2`
//! (for real-valued expressions).

use super::{rational_to_i32, Expr};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;

pub(crate) type Rat = BigRational;

/// Monomial: sorted (atom id, exponent) pairs with positive exponents.
/// The derived ordering is only used as an arbitrary map key; polynomial
/// arithmetic orders monomials with `cmp_grlex`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub(crate) struct Mono(pub Vec<(u32, u32)>);

impl Mono {
    fn one() -> Mono {
        Mono(Vec::new())
    }

    fn atom(id: u32) -> Mono {
        Mono(vec![(id, 1)])
    }

    fn degree(&self) -> u64 {
        self.0.iter().map(|(_, e)| *e as u64).sum()
    }

    fn mul(&self, other: &Mono) -> Mono {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0, self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Mono(out)
    }

    /// Componentwise division; `None` when any exponent would go negative.
    fn try_div(&self, other: &Mono) -> Option<Mono> {
        let mut out = self.0.clone();
        for (id, e) in &other.0 {
            let slot = out.iter_mut().find(|(i, _)| i == id)?;
            if slot.1 < *e {
                return None;
            }
            slot.1 -= *e;
        }
        out.retain(|(_, e)| *e > 0);
        Some(Mono(out))
    }

    fn exp_of(&self, id: u32) -> u32 {
        self.0
            .iter()
            .find(|(i, _)| *i == id)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }
}

/// Graded lexicographic order: higher total degree first, ties broken by the
/// exponent of the earliest atom id where the monomials differ.
pub(crate) fn cmp_grlex(a: &Mono, b: &Mono) -> Ordering {
    match a.degree().cmp(&b.degree()) {
        Ordering::Equal => {}
        other => return other,
    }
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.0.get(i), b.0.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(_), None) => return Ordering::Greater,
            (None, Some(_)) => return Ordering::Less,
            (Some(&(ia, ea)), Some(&(ib, eb))) => match ia.cmp(&ib) {
                // smaller atom id = more significant variable
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
                Ordering::Equal => {
                    match ea.cmp(&eb) {
                        Ordering::Equal => {}
                        other => return other,
                    }
                    i += 1;
                    j += 1;
                }
            },
        }
    }
}

/// Multivariate polynomial: terms sorted descending by grlex, no zero
/// coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub(crate) struct Poly {
    pub terms: Vec<(Mono, Rat)>,
}

impl PartialOrd for Poly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Poly {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut i = 0;
        loop {
            match (self.terms.get(i), other.terms.get(i)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((ma, ca)), Some((mb, cb))) => {
                    match cmp_grlex(ma, mb).then_with(|| ca.cmp(cb)) {
                        Ordering::Equal => i += 1,
                        other => return other,
                    }
                }
            }
        }
    }
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn constant(c: Rat) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![(Mono::one(), c)],
            }
        }
    }

    pub fn one() -> Poly {
        Poly::constant(Rat::one())
    }

    pub fn atom(id: u32) -> Poly {
        Poly {
            terms: vec![(Mono::atom(id), Rat::one())],
        }
    }

    fn from_map(map: BTreeMap<Mono, Rat>) -> Poly {
        let mut terms: Vec<(Mono, Rat)> = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_by(|(a, _), (b, _)| cmp_grlex(b, a));
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0 .0.is_empty() && self.terms[0].1.is_one()
    }

    pub fn as_constant(&self) -> Option<Rat> {
        if self.is_zero() {
            return Some(Rat::zero());
        }
        if self.terms.len() == 1 && self.terms[0].0 .0.is_empty() {
            return Some(self.terms[0].1.clone());
        }
        None
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out: Vec<(Mono, Rat)> = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            match cmp_grlex(&self.terms[i].0, &other.terms[j].0) {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(other.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &self.terms[i].1 + &other.terms[j].1;
                    if !c.is_zero() {
                        out.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&other.terms[j..]);
        Poly { terms: out }
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut map: BTreeMap<Mono, Rat> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb);
                let c = ca * cb;
                match map.get_mut(&m) {
                    Some(acc) => *acc += c,
                    None => {
                        map.insert(m, c);
                    }
                }
            }
        }
        Poly::from_map(map)
    }

    pub fn mul_term(&self, mono: &Mono, coeff: &Rat) -> Poly {
        let mut terms: Vec<(Mono, Rat)> = self
            .terms
            .iter()
            .map(|(m, c)| (m.mul(mono), c * coeff))
            .collect();
        terms.sort_by(|(a, _), (b, _)| cmp_grlex(b, a));
        Poly { terms }
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut n = k;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Exact division; `None` when `self` is not a polynomial multiple of
    /// `divisor`.
    pub fn exact_div(&self, divisor: &Poly) -> Option<Poly> {
        if divisor.is_zero() {
            return None;
        }
        if let Some(c) = divisor.as_constant() {
            return Some(Poly {
                terms: self
                    .terms
                    .iter()
                    .map(|(m, co)| (m.clone(), co / &c))
                    .collect(),
            });
        }
        let mut rem = self.clone();
        let mut quot_terms: Vec<(Mono, Rat)> = Vec::new();
        let (dm, dc) = (&divisor.terms[0].0, &divisor.terms[0].1);
        while !rem.is_zero() {
            let (rm, rc) = (&rem.terms[0].0, &rem.terms[0].1);
            let qm = rm.try_div(dm)?;
            let qc = rc / dc;
            rem = rem.sub(&divisor.mul_term(&qm, &qc));
            quot_terms.push((qm, qc));
        }
        quot_terms.sort_by(|(a, _), (b, _)| cmp_grlex(b, a));
        Some(Poly { terms: quot_terms })
    }

    /// Rational content with the sign of the leading coefficient: dividing by
    /// it leaves coprime integer coefficients with a positive leading term.
    pub fn content(&self) -> Rat {
        if self.is_zero() {
            return Rat::one();
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for (_, c) in &self.terms {
            num_gcd = num_gcd.gcd(&c.numer().abs());
            den_lcm = den_lcm.lcm(&c.denom().abs());
        }
        let mut content = Rat::new(num_gcd, den_lcm);
        if self.terms[0].1.is_negative() {
            content = -content;
        }
        content
    }

    /// Monomial common to every term (minimum exponent per atom).
    pub fn monomial_content(&self) -> Mono {
        let Some(first) = self.terms.first() else {
            return Mono::one();
        };
        let mut out = first.0.clone();
        for (m, _) in &self.terms[1..] {
            out.0.retain(|(id, _)| m.exp_of(*id) > 0);
            for slot in out.0.iter_mut() {
                slot.1 = slot.1.min(m.exp_of(slot.0));
            }
            if out.0.is_empty() {
                break;
            }
        }
        out
    }

    /// Exact polynomial square root, when one exists.
    pub fn sqrt(&self) -> Option<Poly> {
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let (lm, lc) = (&self.terms[0].0, &self.terms[0].1);
        if lc.is_negative() {
            return None;
        }
        let half = Mono(
            lm.0.iter()
                .map(|(id, e)| if e % 2 == 0 { Some((*id, e / 2)) } else { None })
                .collect::<Option<Vec<_>>>()?,
        );
        let coeff_root = rat_sqrt(lc)?;
        let mut s = Poly {
            terms: vec![(half, coeff_root)],
        };
        let mut rem = self.sub(&s.mul(&s));
        let mut guard = self.terms.len() + 4;
        while !rem.is_zero() {
            if guard == 0 {
                return None;
            }
            guard -= 1;
            let (rm, rc) = (&rem.terms[0].0, &rem.terms[0].1);
            let qm = rm.try_div(&s.terms[0].0)?;
            let qc = rc / (&s.terms[0].1 * Rat::from_integer(BigInt::from(2)));
            let t = Poly {
                terms: vec![(qm, qc)],
            };
            s = s.add(&t);
            rem = self.sub(&s.mul(&s));
        }
        Some(s)
    }

    /// Rewrite reducible atom powers: `cos^2 -> 1 - sin^2` when the sine of
    /// the same argument is in play, and `atom^q -> base` for fractional
    /// powers and squared absolute values. Iterates to a fixpoint.
    pub fn reduce(&self, table: &AtomTable) -> Poly {
        // rewriting preserves value, so skipping on oversized polynomials
        // costs only canonicality, never correctness
        if self.terms.len() > 20_000 {
            return self.clone();
        }
        let mut current = self.clone();
        for _ in 0..16 {
            let mut changed = false;
            let mut acc: BTreeMap<Mono, Rat> = BTreeMap::new();
            for (mono, coeff) in &current.terms {
                let mut plain: Vec<(u32, u32)> = Vec::new();
                let mut expansion: Option<Poly> = None;
                for &(id, exp) in &mono.0 {
                    // cos^2 reduction
                    if let Some(sin_id) = table.cos_partner[id as usize] {
                        if exp >= 2 {
                            changed = true;
                            let m = exp / 2;
                            let r = exp % 2;
                            // (1 - sin^2)^m
                            let base = Poly::one().sub(&Poly::atom(sin_id).pow(2));
                            let p = base.pow(m);
                            expansion = Some(match expansion {
                                Some(e) => e.mul(&p),
                                None => p,
                            });
                            if r > 0 {
                                plain.push((id, r));
                            }
                            continue;
                        }
                    }
                    if let Some((base, q)) = &table.sq_base[id as usize] {
                        if exp >= *q {
                            changed = true;
                            let m = exp / q;
                            let r = exp % q;
                            let p = base.pow(m);
                            expansion = Some(match expansion {
                                Some(e) => e.mul(&p),
                                None => p,
                            });
                            if r > 0 {
                                plain.push((id, r));
                            }
                            continue;
                        }
                    }
                    plain.push((id, exp));
                }
                plain.sort_by_key(|(id, _)| *id);
                let base_mono = Mono(plain);
                let pieces = match expansion {
                    Some(p) => p.mul_term(&base_mono, coeff),
                    None => Poly {
                        terms: vec![(base_mono, coeff.clone())],
                    },
                };
                for (m, c) in pieces.terms {
                    match acc.get_mut(&m) {
                        Some(slot) => *slot += c,
                        None => {
                            acc.insert(m, c);
                        }
                    }
                }
            }
            current = Poly::from_map(acc);
            if !changed {
                break;
            }
        }
        current
    }
}

fn rat_sqrt(r: &Rat) -> Option<Rat> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(Rat::new(n, d))
    } else {
        None
    }
}

/// The frozen atom universe for one normalization pass. Atoms are sorted by
/// the canonical expression order, so atom ids double as canonical ranks.
pub(crate) struct AtomTable {
    pub atoms: Vec<Expr>,
    /// cos-atom -> matching sin-atom id, when present.
    cos_partner: Vec<Option<u32>>,
    /// atom^q equals this polynomial (fractional powers, squared abs).
    sq_base: Vec<Option<(Poly, u32)>>,
}

fn is_atom_node(e: &Expr) -> bool {
    match e {
        Expr::Sym(_)
        | Expr::Func(..)
        | Expr::Deriv { .. }
        | Expr::Deferred { .. }
        | Expr::Abs(_) => true,
        Expr::Pow(_, exp) => !matches!(&**exp, Expr::Num(n) if n.is_integer()),
        _ => false,
    }
}

/// The canonical atom for a node: fractional powers are keyed by the
/// primitive root `base^(1/q)`.
fn atom_key(e: &Expr) -> Expr {
    if let Expr::Pow(b, exp) = e {
        if let Expr::Num(n) = &**exp {
            if !n.is_integer() {
                return Expr::Pow(
                    b.clone(),
                    Box::new(Expr::Num(Rat::new(BigInt::one(), n.denom().clone()))),
                );
            }
        }
    }
    e.clone()
}

impl AtomTable {
    pub fn build(root: &Expr, assume_real: bool) -> AtomTable {
        let mut atoms: Vec<Expr> = Vec::new();
        root.walk(&mut |n| {
            if is_atom_node(n) {
                atoms.push(atom_key(n));
            }
        });
        atoms.sort_by(|a, b| a.cmp_canonical(b));
        atoms.dedup();

        let cos_partner = atoms
            .iter()
            .map(|a| match a {
                Expr::Func(name, args) if name == "cos" => {
                    let sin = Expr::Func("sin".into(), args.clone());
                    lookup(&atoms, &sin)
                }
                _ => None,
            })
            .collect();

        let mut table = AtomTable {
            atoms,
            cos_partner,
            sq_base: Vec::new(),
        };
        table.sq_base = vec![None; table.atoms.len()];

        // Second pass: polynomial bases for reducible atom powers. Conversion
        // here runs against the table with reductions still disabled, which
        // is sound: the stored polynomial only needs to be value-equal.
        let mut bases: Vec<Option<(Poly, u32)>> = vec![None; table.atoms.len()];
        for (i, a) in table.atoms.iter().enumerate() {
            match a {
                Expr::Pow(b, exp) => {
                    if let Expr::Num(n) = &**exp {
                        if !n.is_integer() {
                            if let Ok(f) = conv(b, &table) {
                                if f.den.is_empty() {
                                    use num_traits::ToPrimitive;
                                    if let Some(q) = n.denom().to_u32() {
                                        bases[i] = Some((f.num, q));
                                    }
                                }
                            }
                        }
                    }
                }
                Expr::Abs(inner) if assume_real => {
                    if let Ok(f) = conv(inner, &table) {
                        if f.den.is_empty() {
                            bases[i] = Some((f.num.mul(&f.num), 2));
                        }
                    }
                }
                _ => {}
            }
        }
        table.sq_base = bases;
        table
    }

    pub fn atom_expr(&self, id: u32) -> &Expr {
        &self.atoms[id as usize]
    }
}

fn lookup(atoms: &[Expr], key: &Expr) -> Option<u32> {
    atoms
        .binary_search_by(|a| a.cmp_canonical(key))
        .ok()
        .map(|i| i as u32)
}

/// A fraction of polynomials with a factored denominator. Factors are
/// primitive (coprime integer coefficients, positive leading coefficient).
#[derive(Clone, Debug)]
pub(crate) struct Frac {
    pub num: Poly,
    pub den: Vec<(Poly, u32)>,
}

#[derive(Debug)]
pub(crate) enum ConvErr {
    ZeroDenominator,
    MissingAtom,
    /// Expansion would exceed the term budget; normalization is abandoned
    /// and the caller keeps the prepared tree as-is.
    TooLarge,
}

/// Hard ceiling on the cost of a single polynomial product; inputs past it
/// abort normalization instead of expanding for unbounded time.
const MUL_BUDGET: usize = 1_000_000;

fn check_mul(a: &Poly, b: &Poly) -> Result<(), ConvErr> {
    if a.terms.len().saturating_mul(b.terms.len()) > MUL_BUDGET {
        return Err(ConvErr::TooLarge);
    }
    Ok(())
}

impl Frac {
    fn constant(c: Rat) -> Frac {
        Frac {
            num: Poly::constant(c),
            den: Vec::new(),
        }
    }

    fn atom(id: u32) -> Frac {
        Frac {
            num: Poly::atom(id),
            den: Vec::new(),
        }
    }

    fn cancel(&mut self, table: &AtomTable) {
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        let mut den = std::mem::take(&mut self.den);
        for (f, k) in den.iter_mut() {
            while *k > 0 {
                match self.num.exact_div(f) {
                    Some(q) => {
                        self.num = q;
                        *k -= 1;
                    }
                    None => break,
                }
            }
        }
        den.retain(|(_, k)| *k > 0);
        den.sort_by(|(a, _), (b, _)| a.cmp(b));
        self.den = den;
        self.num = self.num.reduce(table);
    }

    fn push_den_factor(&mut self, p: &Poly, k: u32) {
        // normalize to primitive form; the scale moves into the numerator
        let c = p.content();
        let primitive = p
            .exact_div(&Poly::constant(c.clone()))
            .expect("content divides");
        if !c.is_one() {
            let scale = Poly::constant(super::rational_pow(&c, k as i32).recip());
            self.num = self.num.mul(&scale);
        }
        let mono = primitive.monomial_content();
        let core = primitive
            .exact_div(&Poly {
                terms: vec![(mono.clone(), Rat::one())],
            })
            .expect("monomial content divides");
        for &(id, e) in &mono.0 {
            self.merge_den(Poly::atom(id), e * k);
        }
        if !core.is_one() {
            self.merge_den(core, k);
        }
    }

    fn merge_den(&mut self, p: Poly, k: u32) {
        if k == 0 {
            return;
        }
        for (f, kk) in self.den.iter_mut() {
            if *f == p {
                *kk += k;
                return;
            }
        }
        self.den.push((p, k));
    }

    fn mul(&self, other: &Frac, table: &AtomTable) -> Result<Frac, ConvErr> {
        check_mul(&self.num, &other.num)?;
        let mut out = Frac {
            num: self.num.mul(&other.num).reduce(table),
            den: self.den.clone(),
        };
        for (f, k) in &other.den {
            out.merge_den(f.clone(), *k);
        }
        out.cancel(table);
        Ok(out)
    }

    fn add(&self, other: &Frac, table: &AtomTable) -> Result<Frac, ConvErr> {
        // least common denominator as a factor multiset
        let mut lcm: Vec<(Poly, u32)> = self.den.clone();
        for (f, k) in &other.den {
            match lcm.iter_mut().find(|(g, _)| g == f) {
                Some((_, kk)) => *kk = (*kk).max(*k),
                None => lcm.push((f.clone(), *k)),
            }
        }
        let scale = |den: &[(Poly, u32)]| -> Result<Poly, ConvErr> {
            let mut p = Poly::one();
            for (f, k) in &lcm {
                let have = den
                    .iter()
                    .find(|(g, _)| g == f)
                    .map(|(_, kk)| *kk)
                    .unwrap_or(0);
                if *k > have {
                    let factor = f.pow(k - have);
                    check_mul(&p, &factor)?;
                    p = p.mul(&factor);
                }
            }
            Ok(p)
        };
        let ls = scale(&self.den)?;
        let rs = scale(&other.den)?;
        check_mul(&self.num, &ls)?;
        check_mul(&other.num, &rs)?;
        let num = self
            .num
            .mul(&ls)
            .add(&other.num.mul(&rs))
            .reduce(table);
        let mut out = Frac { num, den: lcm };
        out.cancel(table);
        Ok(out)
    }

    fn invert(&self, table: &AtomTable) -> Result<Frac, ConvErr> {
        if self.num.is_zero() {
            return Err(ConvErr::ZeroDenominator);
        }
        let mut num = Poly::one();
        for (f, k) in &self.den {
            let factor = f.pow(*k);
            check_mul(&num, &factor)?;
            num = num.mul(&factor);
        }
        let mut out = Frac {
            num: num.reduce(table),
            den: Vec::new(),
        };
        out.push_den_factor(&self.num, 1);
        out.cancel(table);
        Ok(out)
    }

    fn pow(&self, k: i32, table: &AtomTable) -> Result<Frac, ConvErr> {
        if k == 0 {
            return Ok(Frac::constant(Rat::one()));
        }
        let base = if k < 0 { self.invert(table)? } else { self.clone() };
        let mut out = Frac::constant(Rat::one());
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base, table)?;
        }
        Ok(out)
    }
}

/// Convert an expression to fraction normal form over the table's atoms.
pub(crate) fn conv(e: &Expr, table: &AtomTable) -> Result<Frac, ConvErr> {
    match e {
        Expr::Num(n) => Ok(Frac::constant(n.clone())),
        Expr::Sum(children) => {
            let mut acc = Frac::constant(Rat::zero());
            for c in children {
                let f = conv(c, table)?;
                acc = acc.add(&f, table)?;
            }
            Ok(acc)
        }
        Expr::Prod(children) => {
            let mut acc = Frac::constant(Rat::one());
            for c in children {
                let f = conv(c, table)?;
                acc = acc.mul(&f, table)?;
            }
            Ok(acc)
        }
        Expr::Pow(base, exp) => match &**exp {
            Expr::Num(n) if n.is_integer() => {
                let k = rational_to_i32(n).ok_or(ConvErr::MissingAtom)?;
                // distribute over products and collapse nested integer powers
                // so denominator factorizations survive round trips
                match &**base {
                    Expr::Prod(children) => {
                        let mut acc = Frac::constant(Rat::one());
                        for c in children {
                            let f = conv(&Expr::Pow(Box::new(c.clone()), exp.clone()), table)?;
                            acc = acc.mul(&f, table)?;
                        }
                        Ok(acc)
                    }
                    Expr::Pow(inner, inner_exp)
                        if matches!(&**inner_exp, Expr::Num(m) if m.is_integer()) =>
                    {
                        let a = match &**inner_exp {
                            Expr::Num(m) => rational_to_i32(m).ok_or(ConvErr::MissingAtom)?,
                            _ => unreachable!(),
                        };
                        match a.checked_mul(k) {
                            Some(prod_exp) => conv(inner, table)?.pow(prod_exp, table),
                            None => conv(base, table)?.pow(k, table),
                        }
                    }
                    _ => conv(base, table)?.pow(k, table),
                }
            }
            Expr::Num(n) => {
                // base^(p/q) = base^floor(p/q) * (base^(1/q))^(p mod q)
                let (div, rem) = n.numer().div_mod_floor(n.denom());
                use num_traits::ToPrimitive;
                let div = div.to_i32().ok_or(ConvErr::MissingAtom)?;
                let rem = rem.to_u32().ok_or(ConvErr::MissingAtom)?;
                let key = atom_key(e);
                let id = lookup(&table.atoms, &key).ok_or(ConvErr::MissingAtom)?;
                let int_part = conv(base, table)?.pow(div, table)?;
                let root_part = Frac {
                    num: Poly {
                        terms: vec![(
                            Mono(if rem > 0 { vec![(id, rem)] } else { vec![] }),
                            Rat::one(),
                        )],
                    },
                    den: Vec::new(),
                };
                int_part.mul(&root_part, table)
            }
            _ => {
                let id = lookup(&table.atoms, e).ok_or(ConvErr::MissingAtom)?;
                Ok(Frac::atom(id))
            }
        },
        _ => {
            let id = lookup(&table.atoms, &atom_key(e)).ok_or(ConvErr::MissingAtom)?;
            Ok(Frac::atom(id))
        }
    }
}

/// Emit a polynomial as a canonical expression: terms in descending grlex
/// order, rational and monomial content factored out front.
fn emit_poly(p: &Poly, table: &AtomTable, extract_content: bool) -> Expr {
    if p.is_zero() {
        return Expr::int(0);
    }
    let (content, mono, core) = if extract_content {
        // unsigned content: signs stay on the terms so sums read naturally
        let c = p.content().abs();
        let scaled = p.exact_div(&Poly::constant(c.clone())).expect("content");
        let m = scaled.monomial_content();
        let core = scaled
            .exact_div(&Poly {
                terms: vec![(m.clone(), Rat::one())],
            })
            .expect("monomial content");
        (c, m, core)
    } else {
        (Rat::one(), Mono::one(), p.clone())
    };

    let term_expr = |mono: &Mono, coeff: &Rat| -> Expr {
        let mut factors = Vec::with_capacity(mono.0.len() + 1);
        if !coeff.is_one() {
            factors.push(Expr::Num(coeff.clone()));
        }
        for &(id, e) in &mono.0 {
            let a = table.atom_expr(id).clone();
            factors.push(if e == 1 {
                a
            } else {
                Expr::pow(a, Expr::int(e as i64))
            });
        }
        Expr::prod(factors)
    };

    let body = if core.terms.len() == 1 {
        term_expr(&core.terms[0].0, &core.terms[0].1)
    } else {
        Expr::Sum(
            core.terms
                .iter()
                .map(|(m, c)| term_expr(m, c))
                .collect(),
        )
    };

    let mut factors = Vec::new();
    if !content.is_one() {
        factors.push(Expr::Num(content));
    }
    for &(id, e) in &mono.0 {
        let a = table.atom_expr(id).clone();
        factors.push(if e == 1 {
            a
        } else {
            Expr::pow(a, Expr::int(e as i64))
        });
    }
    factors.push(body);
    Expr::prod(factors)
}

/// Emit a fraction as a canonical expression.
pub(crate) fn emit(f: &Frac, table: &AtomTable) -> Expr {
    if f.num.is_zero() {
        return Expr::int(0);
    }
    let mut factors = vec![emit_poly(&f.num, table, true)];
    for (d, k) in &f.den {
        factors.push(Expr::pow(
            emit_poly(d, table, false),
            Expr::int(-(*k as i64)),
        ));
    }
    Expr::prod(factors)
}
