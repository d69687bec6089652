//! Exact base-field arithmetic: prime fields, small finite fields, and the
//! rationals, together with the residue-level predicates the Hensel
//! arguments bottom out in.

use std::fmt;

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("field order {0} exceeds the supported bound 2^16")]
    TooLarge(u64),
    #[error("element belongs to a different field")]
    FieldMismatch,
    #[error("operation unsupported for this field: {0}")]
    Unsupported(String),
    #[error("the power class index is infinite")]
    InfiniteIndex,
    #[error("no irreducible polynomial on record for ({0}, {1})")]
    NoIrreducible(u64, u32),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Lex-smallest monic irreducible polynomials over F_p, little-endian with
/// leading coefficient included. Shipped as a fixed table so canonical forms
/// are reproducible across runs; each entry is re-verified irreducible by a
/// unit test.
const IRREDUCIBLES: &[(u64, u32, &[u64])] = &[
    (2, 2, &[1, 1, 1]),
    (2, 3, &[1, 0, 1, 1]),
    (2, 4, &[1, 0, 0, 1, 1]),
    (2, 5, &[1, 0, 0, 1, 0, 1]),
    (2, 6, &[1, 0, 0, 0, 0, 1, 1]),
    (2, 7, &[1, 0, 0, 0, 0, 0, 1, 1]),
    (2, 8, &[1, 0, 0, 0, 1, 1, 0, 1, 1]),
    (2, 9, &[1, 0, 0, 0, 0, 0, 0, 0, 1, 1]),
    (2, 10, &[1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1]),
    (3, 2, &[1, 0, 1]),
    (3, 3, &[1, 0, 2, 1]),
    (3, 4, &[1, 0, 1, 1, 1]),
    (3, 5, &[1, 0, 0, 0, 2, 1]),
    (5, 2, &[1, 1, 1]),
    (5, 3, &[1, 0, 1, 1]),
    (5, 4, &[1, 0, 1, 1, 1]),
    (7, 2, &[1, 0, 1]),
    (7, 3, &[1, 0, 1, 1]),
    (11, 2, &[1, 0, 1]),
    (13, 2, &[1, 3, 1]),
];

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BaseField {
    Prime(u64),
    Finite { p: u64, m: u32 },
    Rationals,
}

impl BaseField {
    pub fn prime(p: u64) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(BaseField::Prime(p))
    }

    /// Finite field of order q = p^m, m >= 1. For m = 1 this is the prime field.
    pub fn finite(q: u64) -> Result<Self, FieldError> {
        if q > 1 << 16 {
            return Err(FieldError::TooLarge(q));
        }
        let mut p = 2;
        while p * p <= q {
            if q % p == 0 {
                let mut m = 0;
                let mut n = q;
                while n % p == 0 {
                    n /= p;
                    m += 1;
                }
                if n != 1 {
                    return Err(FieldError::NotPrime(q));
                }
                return if m == 1 {
                    Ok(BaseField::Prime(p))
                } else {
                    irreducible_poly(p, m)?;
                    Ok(BaseField::Finite { p, m })
                };
            }
            p += 1;
        }
        BaseField::prime(q)
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            BaseField::Prime(p) | BaseField::Finite { p, .. } => *p,
            BaseField::Rationals => 0,
        }
    }

    pub fn order(&self) -> Option<u64> {
        match self {
            BaseField::Prime(p) => Some(*p),
            BaseField::Finite { p, m } => Some(p.pow(*m)),
            BaseField::Rationals => None,
        }
    }

    pub fn zero(&self) -> BaseElement {
        match self {
            BaseField::Prime(p) => BaseElement::Fp { p: *p, val: 0 },
            BaseField::Finite { p, m } => BaseElement::Fq {
                p: *p,
                m: *m,
                coeffs: vec![0; *m as usize],
            },
            BaseField::Rationals => BaseElement::Rat(BigRational::zero()),
        }
    }

    pub fn one(&self) -> BaseElement {
        self.from_integer(1)
    }

    pub fn from_integer(&self, n: i64) -> BaseElement {
        match self {
            BaseField::Prime(p) => BaseElement::Fp {
                p: *p,
                val: n.rem_euclid(*p as i64) as u64,
            },
            BaseField::Finite { p, m } => {
                let mut coeffs = vec![0; *m as usize];
                coeffs[0] = n.rem_euclid(*p as i64) as u64;
                BaseElement::Fq {
                    p: *p,
                    m: *m,
                    coeffs,
                }
            }
            BaseField::Rationals => BaseElement::Rat(BigRational::from_integer(BigInt::from(n))),
        }
    }

    /// Image of an exact rational; fails over F_q when the denominator
    /// vanishes mod p.
    pub fn from_rational(&self, r: &BigRational) -> Result<BaseElement, FieldError> {
        match self {
            BaseField::Rationals => Ok(BaseElement::Rat(r.clone())),
            _ => {
                let p = self.characteristic();
                let red = |n: &BigInt| -> u64 {
                    (n % BigInt::from(p) + BigInt::from(p)).mod_floor_u64(p)
                };
                let num = red(r.numer());
                let den = red(r.denom());
                if den == 0 {
                    return Err(FieldError::DivisionByZero);
                }
                let num_el = self.from_integer(num as i64);
                let den_el = self.from_integer(den as i64);
                num_el.mul(&den_el.inv()?)
            }
        }
    }

    pub fn parse_literal(s: &str) -> Result<BaseField, FieldError> {
        let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned == "Q" {
            return Ok(BaseField::Rationals);
        }
        if let Some(inner) = cleaned.strip_prefix("Fp(").and_then(|t| t.strip_suffix(')')) {
            let p: u64 = inner
                .parse()
                .map_err(|_| FieldError::Parse(format!("bad prime {inner:?}")))?;
            return BaseField::prime(p);
        }
        if let Some(inner) = cleaned.strip_prefix("Fq(").and_then(|t| t.strip_suffix(')')) {
            let q: u64 = inner
                .parse()
                .map_err(|_| FieldError::Parse(format!("bad prime power {inner:?}")))?;
            return BaseField::finite(q);
        }
        Err(FieldError::Parse(format!("unknown field literal {s:?}")))
    }

    /// Iterate all elements; only for finite fields.
    pub fn elements(&self) -> Box<dyn Iterator<Item = BaseElement> + '_> {
        match self {
            BaseField::Prime(p) => {
                let p = *p;
                Box::new((0..p).map(move |v| BaseElement::Fp { p, val: v }))
            }
            BaseField::Finite { p, m } => {
                let (p, m) = (*p, *m);
                let q = p.pow(m);
                Box::new((0..q).map(move |mut idx| {
                    let mut coeffs = vec![0; m as usize];
                    for c in coeffs.iter_mut() {
                        *c = idx % p;
                        idx /= p;
                    }
                    BaseElement::Fq { p, m, coeffs }
                }))
            }
            BaseField::Rationals => panic!("cannot enumerate the rationals"),
        }
    }
}

impl fmt::Display for BaseField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseField::Prime(p) => write!(f, "Fp({p})"),
            BaseField::Finite { p, m } => write!(f, "Fq({})", p.pow(*m)),
            BaseField::Rationals => write!(f, "Q"),
        }
    }
}

trait ModFloor {
    fn mod_floor_u64(&self, p: u64) -> u64;
}
impl ModFloor for BigInt {
    fn mod_floor_u64(&self, p: u64) -> u64 {
        use num::Integer;
        let r = self.mod_floor(&BigInt::from(p));
        r.try_into().unwrap()
    }
}

pub fn irreducible_poly(p: u64, m: u32) -> Result<&'static [u64], FieldError> {
    IRREDUCIBLES
        .iter()
        .find(|(tp, tm, _)| *tp == p && *tm == m)
        .map(|(_, _, poly)| *poly)
        .ok_or(FieldError::NoIrreducible(p, m))
}

/// Canonical representative of a base-field element; equality is structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BaseElement {
    Fp { p: u64, val: u64 },
    Fq { p: u64, m: u32, coeffs: Vec<u64> },
    Rat(BigRational),
}

impl BaseElement {
    pub fn field(&self) -> BaseField {
        match self {
            BaseElement::Fp { p, .. } => BaseField::Prime(*p),
            BaseElement::Fq { p, m, .. } => BaseField::Finite { p: *p, m: *m },
            BaseElement::Rat(_) => BaseField::Rationals,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            BaseElement::Fp { val, .. } => *val == 0,
            BaseElement::Fq { coeffs, .. } => coeffs.iter().all(|c| *c == 0),
            BaseElement::Rat(r) => r.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        *self == self.field().one()
    }

    fn binop(
        &self,
        other: &BaseElement,
        fp: impl Fn(u64, u64, u64) -> u64,
        fq: impl Fn(&[u64], &[u64], u64, u32) -> Vec<u64>,
        fr: impl Fn(&BigRational, &BigRational) -> BigRational,
    ) -> Result<BaseElement, FieldError> {
        match (self, other) {
            (BaseElement::Fp { p, val: a }, BaseElement::Fp { p: p2, val: b }) if p == p2 => {
                Ok(BaseElement::Fp {
                    p: *p,
                    val: fp(*a, *b, *p),
                })
            }
            (
                BaseElement::Fq { p, m, coeffs: a },
                BaseElement::Fq {
                    p: p2,
                    m: m2,
                    coeffs: b,
                },
            ) if p == p2 && m == m2 => Ok(BaseElement::Fq {
                p: *p,
                m: *m,
                coeffs: fq(a, b, *p, *m),
            }),
            (BaseElement::Rat(a), BaseElement::Rat(b)) => Ok(BaseElement::Rat(fr(a, b))),
            _ => Err(FieldError::FieldMismatch),
        }
    }

    pub fn add(&self, other: &BaseElement) -> Result<BaseElement, FieldError> {
        self.binop(
            other,
            |a, b, p| (a + b) % p,
            |a, b, p, _| a.iter().zip(b).map(|(x, y)| (x + y) % p).collect(),
            |a, b| a + b,
        )
    }

    pub fn sub(&self, other: &BaseElement) -> Result<BaseElement, FieldError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> BaseElement {
        match self {
            BaseElement::Fp { p, val } => BaseElement::Fp {
                p: *p,
                val: (*p - *val) % *p,
            },
            BaseElement::Fq { p, m, coeffs } => BaseElement::Fq {
                p: *p,
                m: *m,
                coeffs: coeffs.iter().map(|c| (*p - *c) % *p).collect(),
            },
            BaseElement::Rat(r) => BaseElement::Rat(-r),
        }
    }

    pub fn mul(&self, other: &BaseElement) -> Result<BaseElement, FieldError> {
        self.binop(
            other,
            |a, b, p| a * b % p,
            |a, b, p, m| {
                let modulus = irreducible_poly(p, m).expect("validated at construction");
                poly_mul_mod(a, b, modulus, p)
            },
            |a, b| a * b,
        )
    }

    pub fn inv(&self) -> Result<BaseElement, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        match self {
            BaseElement::Fp { p, val } => Ok(BaseElement::Fp {
                p: *p,
                val: pow_mod(*val, *p - 2, *p),
            }),
            BaseElement::Fq { p, m, .. } => {
                // a^(q-2) = a^-1 in F_q^x
                let q = p.pow(*m);
                self.pow(q - 2)
            }
            BaseElement::Rat(r) => Ok(BaseElement::Rat(r.recip())),
        }
    }

    pub fn pow(&self, mut e: u64) -> Result<BaseElement, FieldError> {
        let mut acc = self.field().one();
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            base = base.mul(&base)?;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Decide whether `self` is an n-th power, returning a root when so.
    /// Finite fields use the character test q-1/gcd(n,q-1) with a brute-force
    /// root search; the rationals use exact integer root extraction.
    pub fn is_nth_power(&self, n: u64) -> Option<BaseElement> {
        assert!(n >= 1);
        if self.is_zero() {
            return Some(self.field().zero());
        }
        match self {
            BaseElement::Fp { .. } | BaseElement::Fq { .. } => {
                let field = self.field();
                let q = field.order().unwrap();
                let g = gcd(n, q - 1);
                let test = self.pow((q - 1) / g).unwrap();
                if !test.is_one() {
                    return None;
                }
                let root = field.elements().find(|c| c.pow(n).unwrap() == *self);
                root
            }
            BaseElement::Rat(r) => {
                let num = exact_root(r.numer(), n)?;
                let den = exact_root(r.denom(), n)?;
                Some(BaseElement::Rat(BigRational::new(num, den)))
            }
        }
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        match self {
            BaseElement::Rat(r) => Some(r.clone()),
            BaseElement::Fp { val, .. } => Some(BigRational::from_integer(BigInt::from(*val))),
            BaseElement::Fq { .. } => None,
        }
    }
}

impl fmt::Display for BaseElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseElement::Fp { val, .. } => write!(f, "{val}"),
            BaseElement::Fq { coeffs, .. } => {
                let parts: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
                write!(f, "[{}]", parts.join(","))
            }
            BaseElement::Rat(r) => write!(f, "{r}"),
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

/// Exact n-th root of an integer (sign-aware: negative inputs need odd n).
fn exact_root(x: &BigInt, n: u64) -> Option<BigInt> {
    if x.is_zero() {
        return Some(BigInt::zero());
    }
    if x.is_negative() && n % 2 == 0 {
        return None;
    }
    let mag = x.abs();
    let root = mag.nth_root(n as u32);
    if num::pow(root.clone(), n as usize) == mag {
        Some(if x.is_negative() { -root } else { root })
    } else {
        None
    }
}

fn poly_mul_mod(a: &[u64], b: &[u64], modulus: &[u64], p: u64) -> Vec<u64> {
    let m = modulus.len() - 1;
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    // reduce mod the (monic) irreducible polynomial
    for i in (m..prod.len()).rev() {
        let c = prod[i];
        if c == 0 {
            continue;
        }
        prod[i] = 0;
        for (j, mc) in modulus.iter().enumerate().take(m) {
            let idx = i - m + j;
            prod[idx] = (prod[idx] + c * (p - mc % p)) % p;
        }
    }
    prod.truncate(m);
    prod.resize(m, 0);
    prod
}

/// |F^x / (F^x)^p|. Finite fields: gcd(p, q-1). The rationals have infinite
/// index for p = 2; other field/p combinations are rejected.
pub fn power_class_index(field: &BaseField, p: u64) -> Result<u64, FieldError> {
    match field {
        BaseField::Prime(_) | BaseField::Finite { .. } => {
            let q = field.order().unwrap();
            Ok(gcd(p, q - 1))
        }
        BaseField::Rationals if p == 2 => Err(FieldError::InfiniteIndex),
        BaseField::Rationals => Err(FieldError::Unsupported(
            "power class index over Q only posed for p = 2".into(),
        )),
    }
}

/// All roots of Y^p - Y - c over a field of characteristic p > 0.
pub fn artin_schreier_roots(c: &BaseElement) -> Result<Vec<BaseElement>, FieldError> {
    let field = c.field();
    let p = field.characteristic();
    if p == 0 {
        return Err(FieldError::Unsupported(
            "Artin-Schreier roots need positive characteristic".into(),
        ));
    }
    let mut roots = Vec::new();
    for y in field.elements() {
        if y.pow(p)?.sub(&y)? == *c {
            roots.push(y);
        }
    }
    Ok(roots)
}

/// Polynomial over a base field, little-endian coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasePoly {
    pub coeffs: Vec<BaseElement>,
}

impl BasePoly {
    pub fn new(coeffs: Vec<BaseElement>) -> Self {
        BasePoly { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| !c.is_zero())
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &BaseElement) -> Result<BaseElement, FieldError> {
        let field = x.field();
        let mut acc = field.zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x)?.add(c)?;
        }
        Ok(acc)
    }

    pub fn derivative(&self) -> BasePoly {
        if self.coeffs.len() <= 1 {
            return BasePoly::new(vec![]);
        }
        let field = self.coeffs[0].field();
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| {
                let n = field.from_integer(i as i64);
                c.mul(&n).unwrap()
            })
            .collect();
        BasePoly::new(coeffs)
    }
}

/// All roots over the coefficient field with simplicity flags
/// (f(r) = 0, and simple iff f'(r) != 0). Finite fields enumerate; over Q a
/// rational-root-theorem search on the cleared-denominator form is used.
pub fn simple_roots(f: &BasePoly) -> Result<Vec<(BaseElement, bool)>, FieldError> {
    if f.coeffs.is_empty() {
        return Err(FieldError::Unsupported("zero polynomial".into()));
    }
    let field = f.coeffs[0].field();
    let deriv = f.derivative();
    let check = |r: BaseElement,
                 out: &mut Vec<(BaseElement, bool)>|
     -> Result<(), FieldError> {
        if f.eval(&r)?.is_zero() {
            let simple = !deriv.eval(&r)?.is_zero();
            out.push((r, simple));
        }
        Ok(())
    };
    let mut out = Vec::new();
    match field {
        BaseField::Prime(_) | BaseField::Finite { .. } => {
            for r in field.elements() {
                check(r, &mut out)?;
            }
        }
        BaseField::Rationals => {
            // clear denominators, then candidates are ±(divisor of a0)/(divisor of an)
            let mut lcm = BigInt::one();
            for c in &f.coeffs {
                let r = c.to_rational().unwrap();
                lcm = num::Integer::lcm(&lcm, r.denom());
            }
            let ints: Vec<BigInt> = f
                .coeffs
                .iter()
                .map(|c| {
                    let r = c.to_rational().unwrap();
                    (r * BigRational::from_integer(lcm.clone())).to_integer()
                })
                .collect();
            let lead = ints[f.degree()].clone();
            let tail = ints
                .iter()
                .find(|c| !c.is_zero())
                .cloned()
                .unwrap_or_else(BigInt::zero);
            if tail.is_zero() {
                check(field.zero(), &mut out)?;
            } else {
                check(field.zero(), &mut out)?;
                for pnum in divisors(&tail.abs()) {
                    for pden in divisors(&lead.abs()) {
                        for sign in [1i64, -1] {
                            let cand = BigRational::new(&pnum * BigInt::from(sign), pden.clone());
                            let cand = BaseElement::Rat(cand);
                            if !out.iter().any(|(r, _)| *r == cand) {
                                check(cand, &mut out)?;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    if n.is_zero() {
        return out;
    }
    let mut d = BigInt::one();
    while &d * &d <= *n {
        if (n % &d).is_zero() {
            out.push(d.clone());
            out.push(n / &d);
        }
        d += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(p: u64, v: i64) -> BaseElement {
        BaseField::prime(p).unwrap().from_integer(v)
    }

    #[test]
    fn table_entries_are_irreducible() {
        // oracle: trial division by all lower-degree monic polynomials
        for (p, m, poly) in IRREDUCIBLES {
            assert_eq!(poly.len() as u32, m + 1);
            assert_eq!(*poly.last().unwrap(), 1, "monic");
            for d in 1..=(m / 2) {
                let count = p.pow(d);
                for idx in 0..count {
                    let mut g = vec![0u64; d as usize + 1];
                    let mut k = idx;
                    for c in g.iter_mut().take(d as usize) {
                        *c = k % p;
                        k /= p;
                    }
                    g[d as usize] = 1;
                    assert!(
                        !divides(&g, poly, *p),
                        "({p},{m}) divisible by {g:?}"
                    );
                }
            }
        }
    }

    fn divides(g: &[u64], f: &[u64], p: u64) -> bool {
        let mut rem: Vec<u64> = f.to_vec();
        while rem.iter().any(|c| *c != 0) {
            let deg_r = rem.iter().rposition(|c| *c != 0).unwrap();
            let deg_g = g.len() - 1;
            if deg_r < deg_g {
                return false;
            }
            let c = rem[deg_r]; // g monic
            for (j, gc) in g.iter().enumerate() {
                let idx = deg_r - deg_g + j;
                rem[idx] = (rem[idx] + c * (p - gc % p)) % p;
            }
        }
        true
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(fp(5, 2).inv().unwrap(), fp(5, 3));
        let a = BaseElement::Rat(BigRational::new(2.into(), 3.into()));
        let b = BaseElement::Rat(BigRational::new(1.into(), 6.into()));
        assert_eq!(
            a.add(&b).unwrap(),
            BaseElement::Rat(BigRational::new(5.into(), 6.into()))
        );
        let f9 = BaseField::finite(9).unwrap();
        for a in f9.elements() {
            if !a.is_zero() {
                assert!(a.mul(&a.inv().unwrap()).unwrap().is_one());
            }
        }
        assert_eq!(f9.zero().inv(), Err(FieldError::DivisionByZero));
    }

    #[test]
    fn nth_power_tests_against_brute_force() {
        // oracle: enumerate all squares of F_7 directly
        let f7 = BaseField::prime(7).unwrap();
        let squares: Vec<BaseElement> =
            f7.elements().map(|x| x.mul(&x).unwrap()).collect();
        for a in f7.elements() {
            let claimed = a.is_nth_power(2);
            assert_eq!(claimed.is_some(), squares.contains(&a), "a = {a}");
            if let Some(w) = claimed {
                assert_eq!(w.mul(&w).unwrap(), a);
            }
        }
        assert!(fp(7, 2).is_nth_power(2).is_some()); // 3^2 = 2 mod 7
        assert!(fp(7, 3).is_nth_power(2).is_none());
        let eight = BaseElement::Rat(BigRational::from_integer(8.into()));
        assert_eq!(
            eight.is_nth_power(3),
            Some(BaseElement::Rat(BigRational::from_integer(2.into())))
        );
        let minus_eight = BaseElement::Rat(BigRational::from_integer((-8).into()));
        assert!(minus_eight.is_nth_power(3).is_some());
        assert!(minus_eight.is_nth_power(2).is_none());
    }

    #[test]
    fn nth_powers_sampled_closure() {
        for q in [3u64, 4, 5, 7, 9, 13] {
            let f = BaseField::finite(q).unwrap();
            for a in f.elements() {
                for n in 1..=8u64 {
                    let an = a.pow(n).unwrap();
                    assert!(an.is_nth_power(n).is_some(), "q={q} a={a} n={n}");
                }
            }
        }
    }

    #[test]
    fn power_class_indices() {
        for l in [3u64, 5, 7, 11, 13] {
            assert_eq!(power_class_index(&BaseField::Prime(l), 2).unwrap(), 2);
        }
        assert_eq!(
            power_class_index(&BaseField::finite(4).unwrap(), 2).unwrap(),
            1
        );
        assert_eq!(power_class_index(&BaseField::Prime(7), 3).unwrap(), 3);
        assert_eq!(
            power_class_index(&BaseField::Rationals, 2),
            Err(FieldError::InfiniteIndex)
        );
        // brute-force cross-check: |F^x| / #distinct p-th powers
        for q in [3u64, 4, 5, 7, 8, 9, 11, 13, 16, 25, 27, 49, 121, 169, 243, 343, 512] {
            let f = BaseField::finite(q).unwrap();
            for p in [2u64, 3, 5, 7] {
                let mut powers: Vec<BaseElement> = Vec::new();
                for x in f.elements().filter(|x| !x.is_zero()) {
                    let xp = x.pow(p).unwrap();
                    if !powers.contains(&xp) {
                        powers.push(xp);
                    }
                }
                let idx = (q - 1) / powers.len() as u64;
                assert_eq!(power_class_index(&f, p).unwrap(), idx, "q={q} p={p}");
            }
        }
    }

    #[test]
    fn artin_schreier_examples() {
        let f2 = BaseField::prime(2).unwrap();
        let roots = artin_schreier_roots(&f2.zero()).unwrap();
        assert_eq!(roots.len(), 2); // Y^2 - Y = Y(Y-1)
        let roots = artin_schreier_roots(&f2.one()).unwrap();
        assert!(roots.is_empty()); // Y^2+Y+1 irreducible over F_2
        let f9 = BaseField::finite(9).unwrap();
        let mut nonempty = 0;
        for c in f9.elements() {
            let roots = artin_schreier_roots(&c).unwrap();
            assert!(roots.len() == 0 || roots.len() == 3, "c = {c}");
            if !roots.is_empty() {
                nonempty += 1;
            }
        }
        // image of the additive map Y^p - Y has index p
        assert_eq!(nonempty, 3);
        assert!(artin_schreier_roots(&BaseField::Rationals.zero()).is_err());
    }

    #[test]
    fn artin_schreier_image_has_index_p() {
        for q in [3u64, 4, 8, 9, 25, 27, 49, 121, 169, 243, 343, 512] {
            let f = BaseField::finite(q).unwrap();
            let p = f.characteristic();
            let nonempty = f
                .elements()
                .filter(|c| !artin_schreier_roots(c).unwrap().is_empty())
                .count() as u64;
            assert_eq!(nonempty, q / p, "q = {q}");
        }
    }

    #[test]
    fn simple_root_examples() {
        let f5 = BaseField::prime(5).unwrap();
        // Y^2 - 1
        let f = BasePoly::new(vec![f5.from_integer(-1), f5.zero(), f5.one()]);
        let roots = simple_roots(&f).unwrap();
        assert_eq!(
            roots,
            vec![(fp(5, 1), true), (fp(5, 4), true)]
        );
        // (Y-1)^2 = Y^2 - 2Y + 1
        let f = BasePoly::new(vec![f5.one(), f5.from_integer(-2), f5.one()]);
        assert_eq!(simple_roots(&f).unwrap(), vec![(fp(5, 1), false)]);
        // Y^3 - Y over F_3: f' = -1, all roots simple
        let f3 = BaseField::prime(3).unwrap();
        let f = BasePoly::new(vec![
            f3.zero(),
            f3.from_integer(-1),
            f3.zero(),
            f3.one(),
        ]);
        let roots = simple_roots(&f).unwrap();
        assert_eq!(roots.len(), 3);
        assert!(roots.iter().all(|(_, s)| *s));
    }

    #[test]
    fn rational_roots() {
        // 2x^2 - 3x + 1 = (2x - 1)(x - 1)
        let q = BaseField::Rationals;
        let f = BasePoly::new(vec![
            q.from_integer(1),
            q.from_integer(-3),
            q.from_integer(2),
        ]);
        let roots = simple_roots(&f).unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots
            .iter()
            .any(|(r, s)| *s && *r == BaseElement::Rat(BigRational::new(1.into(), 2.into()))));
    }

    #[test]
    fn field_literals() {
        assert_eq!(BaseField::parse_literal("Fp(5)").unwrap(), BaseField::Prime(5));
        assert_eq!(
            BaseField::parse_literal("Fq(9)").unwrap(),
            BaseField::Finite { p: 3, m: 2 }
        );
        assert_eq!(BaseField::parse_literal("Q").unwrap(), BaseField::Rationals);
        assert!(BaseField::parse_literal("Fp(6)").is_err());
    }
}
