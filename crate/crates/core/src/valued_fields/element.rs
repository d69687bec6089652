//! Field elements: nested finite maps from exponents to coefficients,
//! innermost coefficients base elements or p-adic digit data, with absolute
//! precision bounds propagated through arithmetic.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::bigint::Sign;
use num::{BigInt, BigRational, BigUint, Integer, One, Signed, Zero};
use serde::Serialize;

use super::{FieldDescriptor, Layer, LayerKind, ValuationHandle, VfError};
use crate::ordered_groups::GroupElement;
use crate::residue_fields::{BaseElement, BaseField};

/// p-adic number p^shift * unit, with unit a p-unit known modulo
/// p^(abs_prec - shift). The zero-at-precision element has unit = 0 and
/// shift = abs_prec.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Padic {
    pub p: u64,
    pub shift: i64,
    pub unit: BigUint,
    pub abs_prec: i64,
}

impl Padic {
    pub fn zero(p: u64, abs_prec: i64) -> Self {
        Padic {
            p,
            shift: abs_prec,
            unit: BigUint::zero(),
            abs_prec,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }

    fn pk(p: u64, k: i64) -> BigUint {
        assert!(k >= 0, "negative power of p in a modulus");
        BigUint::from(p).pow(k as u32)
    }

    /// Canonicalize a pair (shift, value mod p^(abs_prec - shift)).
    fn normalize(p: u64, mut shift: i64, mut value: BigUint, abs_prec: i64) -> Self {
        if abs_prec <= shift {
            return Padic::zero(p, abs_prec.max(shift.min(abs_prec)));
        }
        value %= Self::pk(p, abs_prec - shift);
        if value.is_zero() {
            return Padic::zero(p, abs_prec);
        }
        let pb = BigUint::from(p);
        while (&value % &pb).is_zero() {
            value /= &pb;
            shift += 1;
        }
        Padic {
            p,
            shift,
            unit: value,
            abs_prec,
        }
    }

    pub fn from_rational(p: u64, r: &BigRational, abs_prec: i64) -> Result<Self, VfError> {
        if r.is_zero() {
            return Ok(Padic::zero(p, abs_prec));
        }
        let strip = |n: &BigInt| -> (i64, BigInt) {
            let mut v = 0i64;
            let mut n = n.clone();
            let pb = BigInt::from(p);
            while (&n % &pb).is_zero() {
                n /= &pb;
                v += 1;
            }
            (v, n)
        };
        let (vn, num) = strip(r.numer());
        let (vd, den) = strip(r.denom());
        let shift = vn - vd;
        let rel = abs_prec - shift;
        if rel <= 0 {
            return Ok(Padic::zero(p, abs_prec));
        }
        let modulus = Self::pk(p, rel);
        let num_m = big_mod(&num, &modulus);
        let den_m = big_mod(&den, &modulus);
        let den_inv = mod_inverse(&den_m, &modulus).ok_or_else(|| {
            VfError::InsufficientPrecision("denominator not invertible in Z_p".into())
        })?;
        let unit = num_m * den_inv % &modulus;
        Ok(Padic::normalize(p, shift, unit, abs_prec))
    }

    pub fn add(&self, other: &Padic) -> Padic {
        let p = self.p;
        let prec = self.abs_prec.min(other.abs_prec);
        if self.is_zero() {
            return Padic::normalize(p, other.shift, other.unit.clone(), prec);
        }
        if other.is_zero() {
            return Padic::normalize(p, self.shift, self.unit.clone(), prec);
        }
        let s = self.shift.min(other.shift);
        if prec <= s {
            return Padic::zero(p, prec);
        }
        let modulus = Self::pk(p, prec - s);
        let a = &self.unit * Self::pk(p, self.shift - s) % &modulus;
        let b = &other.unit * Self::pk(p, other.shift - s) % &modulus;
        Padic::normalize(p, s, (a + b) % &modulus, prec)
    }

    pub fn neg(&self) -> Padic {
        if self.is_zero() {
            return self.clone();
        }
        let modulus = Self::pk(self.p, self.abs_prec - self.shift);
        Padic {
            p: self.p,
            shift: self.shift,
            unit: &modulus - &self.unit,
            abs_prec: self.abs_prec,
        }
    }

    pub fn mul(&self, other: &Padic) -> Padic {
        let p = self.p;
        if self.is_zero() || other.is_zero() {
            // 0 (mod p^a) * p^s u is 0 (mod p^(a+s))
            let (z, nz) = if self.is_zero() {
                (self, other)
            } else {
                (other, self)
            };
            // v(other) >= other.shift, so the product vanishes mod
            // p^(z.abs_prec + other.shift)
            return Padic::zero(p, z.abs_prec + nz.shift);
        }
        let shift = self.shift + other.shift;
        let rel = (self.abs_prec - self.shift).min(other.abs_prec - other.shift);
        let modulus = Self::pk(p, rel);
        let unit = &self.unit * &other.unit % &modulus;
        Padic::normalize(p, shift, unit, shift + rel)
    }

    pub fn inv(&self) -> Result<Padic, VfError> {
        if self.is_zero() {
            return Err(VfError::InsufficientPrecision(
                "cannot invert an element indistinguishable from 0".into(),
            ));
        }
        let rel = self.abs_prec - self.shift;
        let modulus = Self::pk(self.p, rel);
        let unit = mod_inverse(&self.unit, &modulus).expect("unit is prime to p");
        Ok(Padic {
            p: self.p,
            shift: -self.shift,
            unit,
            abs_prec: -self.shift + rel,
        })
    }

    /// Residue in F_p; requires shift >= 0.
    pub fn residue(&self) -> Result<BaseElement, VfError> {
        if self.is_zero() {
            if self.abs_prec <= 0 {
                return Err(VfError::InsufficientPrecision(
                    "zero-at-precision element has no determined residue".into(),
                ));
            }
            return Ok(BaseField::Prime(self.p).zero());
        }
        if self.shift < 0 {
            return Err(VfError::NegativeValuation);
        }
        if self.shift > 0 {
            return Ok(BaseField::Prime(self.p).zero());
        }
        let r: u64 = (&self.unit % BigUint::from(self.p)).try_into().unwrap();
        Ok(BaseElement::Fp { p: self.p, val: r })
    }

    pub fn digits(&self, count: usize) -> Vec<u64> {
        let mut out = Vec::with_capacity(count);
        let mut u = self.unit.clone();
        let pb = BigUint::from(self.p);
        for _ in 0..count {
            out.push((&u % &pb).try_into().unwrap());
            u /= &pb;
        }
        out
    }
}

fn big_mod(n: &BigInt, modulus: &BigUint) -> BigUint {
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    n.mod_floor(&m).to_biguint().unwrap()
}

fn mod_inverse(a: &BigUint, modulus: &BigUint) -> Option<BigUint> {
    let a = BigInt::from_biguint(Sign::Plus, a.clone());
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let e = a.extended_gcd(&m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(&m).to_biguint().unwrap())
}

/// Finite-support series layer: exponent -> coefficient, known modulo
/// var^prec.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Series {
    pub terms: BTreeMap<BigRational, Repr>,
    pub prec: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Repr {
    Base(BaseElement),
    Padic(Padic),
    Series(Series),
}

impl Repr {
    pub fn is_zero(&self) -> bool {
        match self {
            Repr::Base(b) => b.is_zero(),
            Repr::Padic(p) => p.is_zero(),
            Repr::Series(s) => s.terms.is_empty(),
        }
    }
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Hard cap on stored series terms. Overflowing terms are absorbed into the
/// O(var^prec) tail by coarsening the precision, never silently dropped.
const MAX_TERMS: usize = 512;

fn cap_terms(terms: &mut BTreeMap<BigRational, Repr>, prec: &mut BigRational) {
    if terms.len() <= MAX_TERMS {
        return;
    }
    let cutoff = terms.keys().nth(MAX_TERMS).cloned().unwrap();
    terms.retain(|e, _| *e < cutoff);
    if cutoff < *prec {
        *prec = cutoff;
    }
}

/// Context for recursive operations: the sub-tower a `Repr` lives in.
#[derive(Clone, Copy)]
struct Ctx<'a> {
    base: &'a BaseField,
    layers: &'a [Layer],
    prec: &'a super::Precision,
}

impl<'a> Ctx<'a> {
    fn inner(&self) -> Ctx<'a> {
        Ctx {
            base: self.base,
            layers: &self.layers[..self.layers.len() - 1],
            prec: self.prec,
        }
    }

    fn outer_layer(&self) -> Option<&'a Layer> {
        self.layers.last()
    }

    fn zero(&self, series_prec: BigRational) -> Repr {
        match self.outer_layer() {
            None => Repr::Base(self.base.zero()),
            Some(Layer {
                kind: LayerKind::Completion(p),
                ..
            }) => Repr::Padic(Padic::zero(*p, self.prec.digits)),
            Some(_) => Repr::Series(Series {
                terms: BTreeMap::new(),
                prec: series_prec,
            }),
        }
    }

    fn default_prec(&self) -> BigRational {
        rat(self.prec.series)
    }
}

fn repr_add(ctx: Ctx, a: &Repr, b: &Repr) -> Result<Repr, VfError> {
    match (a, b) {
        (Repr::Base(x), Repr::Base(y)) => Ok(Repr::Base(x.add(y)?)),
        (Repr::Padic(x), Repr::Padic(y)) => Ok(Repr::Padic(x.add(y))),
        (Repr::Series(x), Repr::Series(y)) => {
            let prec = x.prec.clone().min(y.prec.clone());
            let inner = ctx.inner();
            let mut terms = x.terms.clone();
            terms.retain(|e, _| *e < prec);
            for (e, c) in &y.terms {
                if *e >= prec {
                    continue;
                }
                match terms.remove(e) {
                    None => {
                        terms.insert(e.clone(), c.clone());
                    }
                    Some(old) => {
                        let sum = repr_add(inner, &old, c)?;
                        if !sum.is_zero() {
                            terms.insert(e.clone(), sum);
                        }
                    }
                }
            }
            let mut prec = prec;
            cap_terms(&mut terms, &mut prec);
            Ok(Repr::Series(Series { terms, prec }))
        }
        _ => Err(VfError::DescriptorMismatch),
    }
}

fn repr_neg(a: &Repr) -> Repr {
    match a {
        Repr::Base(x) => Repr::Base(x.neg()),
        Repr::Padic(x) => Repr::Padic(x.neg()),
        Repr::Series(x) => Repr::Series(Series {
            terms: x.terms.iter().map(|(e, c)| (e.clone(), repr_neg(c))).collect(),
            prec: x.prec.clone(),
        }),
    }
}

fn min_val_or_prec(s: &Series) -> BigRational {
    s.terms
        .keys()
        .next()
        .cloned()
        .unwrap_or_else(|| s.prec.clone())
}

fn repr_mul(ctx: Ctx, a: &Repr, b: &Repr) -> Result<Repr, VfError> {
    match (a, b) {
        (Repr::Base(x), Repr::Base(y)) => Ok(Repr::Base(x.mul(y)?)),
        (Repr::Padic(x), Repr::Padic(y)) => Ok(Repr::Padic(x.mul(y))),
        (Repr::Series(x), Repr::Series(y)) => {
            let inner = ctx.inner();
            let va = min_val_or_prec(x);
            let vb = min_val_or_prec(y);
            let prec = (x.prec.clone() + vb.clone()).min(y.prec.clone() + va.clone());
            let mut terms: BTreeMap<BigRational, Repr> = BTreeMap::new();
            for (e1, c1) in &x.terms {
                for (e2, c2) in &y.terms {
                    let e = e1 + e2;
                    if e >= prec {
                        continue;
                    }
                    let prod = repr_mul(inner, c1, c2)?;
                    match terms.remove(&e) {
                        None => {
                            if !prod.is_zero() {
                                terms.insert(e, prod);
                            }
                        }
                        Some(old) => {
                            let sum = repr_add(inner, &old, &prod)?;
                            if !sum.is_zero() {
                                terms.insert(e, sum);
                            }
                        }
                    }
                }
            }
            let mut prec = prec;
            cap_terms(&mut terms, &mut prec);
            Ok(Repr::Series(Series { terms, prec }))
        }
        _ => Err(VfError::DescriptorMismatch),
    }
}

fn repr_inv(ctx: Ctx, a: &Repr) -> Result<Repr, VfError> {
    match a {
        Repr::Base(x) => {
            if x.is_zero() {
                return Err(VfError::InsufficientPrecision(
                    "cannot invert zero".into(),
                ));
            }
            Ok(Repr::Base(x.inv()?))
        }
        Repr::Padic(x) => Ok(Repr::Padic(x.inv()?)),
        Repr::Series(x) => {
            let inner = ctx.inner();
            let Some((v, lead)) = x.terms.iter().next() else {
                return Err(VfError::InsufficientPrecision(
                    "cannot invert an element indistinguishable from 0".into(),
                ));
            };
            let v = v.clone();
            let rel = x.prec.clone() - v.clone(); // relative precision, > 0
            let lead_inv = repr_inv(inner, lead)?;
            // normalized = lead_inv * x * var^-v = 1 + u with u of positive valuation
            let mut normalized: BTreeMap<BigRational, Repr> = BTreeMap::new();
            for (e, c) in &x.terms {
                normalized.insert(e - &v, repr_mul(inner, &lead_inv, c)?);
            }
            let one = ctx.inner_one()?;
            let mut u = Series {
                terms: normalized,
                prec: rel.clone(),
            };
            match u.terms.remove(&rat(0)) {
                Some(c0) => {
                    let rest = repr_add(inner, &c0, &repr_neg(&one))?;
                    if !rest.is_zero() {
                        u.terms.insert(rat(0), rest);
                    }
                }
                None => unreachable!("leading term present"),
            }
            if u.terms.contains_key(&rat(0)) || u.terms.keys().next().map(|e| e <= &rat(0)).unwrap_or(false) {
                return Err(VfError::InsufficientPrecision(
                    "inverse: unit part did not normalize".into(),
                ));
            }
            // (1 + u)^-1 = prod_i (1 + w^(2^i)) with w = -u: the product
            // telescopes to (1 - w^(2^m))^-1 * 1, and w^(2^m) vanishes at
            // working precision after logarithmically many doublings
            let mut w = Repr::Series(Series {
                terms: u.terms.iter().map(|(e, c)| (e.clone(), repr_neg(c))).collect(),
                prec: rel.clone(),
            });
            let unit_term = Repr::Series(Series {
                terms: BTreeMap::from([(rat(0), one)]),
                prec: rel.clone(),
            });
            let clamp = |r: Repr| -> Repr {
                let Repr::Series(mut s) = r else { unreachable!() };
                s.terms.retain(|e, _| e < &rel);
                if s.prec > rel {
                    s.prec = rel.clone();
                }
                Repr::Series(s)
            };
            let mut sum = unit_term.clone();
            let mut guard = 0usize;
            while !w.is_zero() {
                let factor = repr_add(ctx, &unit_term, &w)?;
                sum = clamp(repr_mul(ctx, &sum, &factor)?);
                w = clamp(repr_mul(ctx, &w, &w)?);
                guard += 1;
                if guard > 128 {
                    return Err(VfError::InsufficientPrecision(
                        "inversion did not terminate".into(),
                    ));
                }
            }
            // shift back: result = lead_inv-scaled sum * var^-v
            let Repr::Series(sum) = sum else { unreachable!() };
            let mut terms = BTreeMap::new();
            for (e, c) in sum.terms {
                terms.insert(e - &v, repr_mul(inner, &lead_inv, &c)?);
            }
            Ok(Repr::Series(Series {
                terms,
                prec: rel - v,
            }))
        }
    }
}

impl<'a> Ctx<'a> {
    fn inner_one(&self) -> Result<Repr, VfError> {
        let inner = self.inner();
        match inner.outer_layer() {
            None => Ok(Repr::Base(inner.base.one())),
            Some(Layer {
                kind: LayerKind::Completion(p),
                ..
            }) => Ok(Repr::Padic(Padic::from_rational(
                *p,
                &rat(1),
                inner.prec.digits,
            )?)),
            Some(_) => Ok(Repr::Series(Series {
                terms: BTreeMap::from([(rat(0), inner.inner_one()?)]),
                prec: inner.default_prec(),
            })),
        }
    }
}

fn repr_from_rational(ctx: Ctx, r: &BigRational) -> Result<Repr, VfError> {
    match ctx.outer_layer() {
        None => Ok(Repr::Base(ctx.base.from_rational(r)?)),
        Some(Layer {
            kind: LayerKind::Completion(p),
            ..
        }) => Ok(Repr::Padic(Padic::from_rational(*p, r, ctx.prec.digits)?)),
        Some(_) => {
            let inner = repr_from_rational(ctx.inner(), r)?;
            let mut terms = BTreeMap::new();
            if !inner.is_zero() {
                terms.insert(rat(0), inner);
            }
            Ok(Repr::Series(Series {
                terms,
                prec: ctx.default_prec(),
            }))
        }
    }
}

/// A precision-tracked element of a tower field.
#[derive(Clone, Debug)]
pub struct FieldElement {
    pub(crate) desc: Arc<FieldDescriptor>,
    pub(crate) repr: Repr,
}

impl FieldElement {
    fn ctx(desc: &FieldDescriptor) -> Ctx<'_> {
        let base = match desc.base() {
            super::BaseOrFlag::Concrete(b) => b,
            super::BaseOrFlag::AlgClosedChar0 => {
                panic!("algebraically closed bases carry no elements")
            }
        };
        Ctx {
            base,
            layers: desc.layers(),
            prec: desc.precision(),
        }
    }

    pub fn descriptor(&self) -> &Arc<FieldDescriptor> {
        &self.desc
    }

    pub(crate) fn repr(&self) -> &Repr {
        &self.repr
    }

    pub(crate) fn into_repr(self) -> Repr {
        self.repr
    }

    pub(crate) fn from_repr(desc: &Arc<FieldDescriptor>, repr: Repr) -> FieldElement {
        FieldElement {
            desc: desc.clone(),
            repr,
        }
    }

    pub fn zero(desc: &Arc<FieldDescriptor>) -> FieldElement {
        let ctx = Self::ctx(desc);
        FieldElement {
            desc: desc.clone(),
            repr: ctx.zero(ctx.default_prec()),
        }
    }

    pub fn one(desc: &Arc<FieldDescriptor>) -> FieldElement {
        Self::from_rational(desc, &rat(1)).expect("1 always embeds")
    }

    pub fn from_i64(desc: &Arc<FieldDescriptor>, n: i64) -> FieldElement {
        Self::from_rational(desc, &rat(n)).expect("integers always embed")
    }

    pub fn from_rational(desc: &Arc<FieldDescriptor>, r: &BigRational) -> Result<FieldElement, VfError> {
        let repr = repr_from_rational(Self::ctx(desc), r)?;
        Ok(FieldElement {
            desc: desc.clone(),
            repr,
        })
    }

    /// var^exponent for the given layer (0 = innermost).
    pub fn layer_monomial(
        desc: &Arc<FieldDescriptor>,
        layer_idx: usize,
        exponent: &BigRational,
    ) -> Result<FieldElement, VfError> {
        let layers = desc.layers();
        if layer_idx >= layers.len() {
            return Err(VfError::BadLevel(layer_idx, layers.len()));
        }
        match &layers[layer_idx].kind {
            LayerKind::Completion(p) => {
                if !exponent.is_integer() {
                    return Err(VfError::Unsupported(
                        "fractional power of p in a completion layer".into(),
                    ));
                }
                let e: i64 = int_i64(&exponent.to_integer())?;
                let p = BigRational::from_integer(BigInt::from(*p));
                let val = if e >= 0 {
                    num::pow(p, e as usize)
                } else {
                    num::pow(p, (-e) as usize).recip()
                };
                Self::from_rational(desc, &val)
            }
            LayerKind::SeriesZ if !exponent.is_integer() => Err(VfError::Unsupported(
                "fractional exponent in a Laurent layer".into(),
            )),
            _ => {
                // build var^e bottom-up from layer_idx
                let ctx = Self::ctx(desc);
                let mut repr = {
                    let sub = Ctx {
                        base: ctx.base,
                        layers: &ctx.layers[..layer_idx],
                        prec: ctx.prec,
                    };
                    sub.inner_one_at()?
                };
                for (i, _layer) in ctx.layers.iter().enumerate().skip(layer_idx) {
                    let e = if i == layer_idx {
                        exponent.clone()
                    } else {
                        rat(0)
                    };
                    let prec = rat(ctx.prec.series) + e.clone().min(rat(0));
                    repr = Repr::Series(Series {
                        terms: BTreeMap::from([(e, repr)]),
                        prec,
                    });
                }
                Ok(FieldElement {
                    desc: desc.clone(),
                    repr,
                })
            }
        }
    }

    /// Canonical monomial of the given full valuation: the product of layer
    /// variables (and the prime of a completion layer) raised to the
    /// coordinates of `value`.
    pub fn monomial(desc: &Arc<FieldDescriptor>, value: &GroupElement) -> Result<FieldElement, VfError> {
        let layers = desc.layers();
        if value.coords().len() != layers.len() {
            return Err(VfError::DescriptorMismatch);
        }
        let mut acc = Self::one(desc);
        for (i, coord) in value.coords().iter().enumerate() {
            if coord.is_zero() {
                continue;
            }
            let m = Self::layer_monomial(desc, i, coord)?;
            acc = acc.mul(&m)?;
        }
        Ok(acc)
    }

    fn check_desc(&self, other: &FieldElement) -> Result<(), VfError> {
        if self.desc != other.desc {
            return Err(VfError::DescriptorMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement, VfError> {
        self.check_desc(other)?;
        Ok(FieldElement {
            desc: self.desc.clone(),
            repr: repr_add(Self::ctx(&self.desc), &self.repr, &other.repr)?,
        })
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement, VfError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FieldElement {
        FieldElement {
            desc: self.desc.clone(),
            repr: repr_neg(&self.repr),
        }
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement, VfError> {
        self.check_desc(other)?;
        Ok(FieldElement {
            desc: self.desc.clone(),
            repr: repr_mul(Self::ctx(&self.desc), &self.repr, &other.repr)?,
        })
    }

    pub fn inv(&self) -> Result<FieldElement, VfError> {
        Ok(FieldElement {
            desc: self.desc.clone(),
            repr: repr_inv(Self::ctx(&self.desc), &self.repr)?,
        })
    }

    pub fn div(&self, other: &FieldElement) -> Result<FieldElement, VfError> {
        self.mul(&other.inv()?)
    }

    pub fn pow(&self, e: u64) -> Result<FieldElement, VfError> {
        let mut acc = Self::one(&self.desc);
        let mut b = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b)?;
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b)?;
            }
        }
        Ok(acc)
    }

    /// Zero at the current precision (exact elements with empty support are
    /// genuinely zero; truncated ones are only indistinguishable from it).
    pub fn is_zero(&self) -> bool {
        self.repr.is_zero()
    }

    pub fn equal(&self, other: &FieldElement) -> Result<bool, VfError> {
        Ok(self.sub(other)?.is_zero())
    }

    /// Full valuation as coordinates innermost-first (the `ordered_groups`
    /// last-dominant convention).
    fn full_coords(&self) -> Result<Vec<BigRational>, VfError> {
        fn go(repr: &Repr, out: &mut Vec<BigRational>) -> Result<(), VfError> {
            match repr {
                Repr::Base(b) => {
                    if b.is_zero() {
                        return Err(VfError::InsufficientPrecision(
                            "valuation of zero".into(),
                        ));
                    }
                    Ok(())
                }
                Repr::Padic(p) => {
                    if p.is_zero() {
                        return Err(VfError::InsufficientPrecision(
                            "valuation of an element indistinguishable from 0".into(),
                        ));
                    }
                    out.push(rat(p.shift));
                    Ok(())
                }
                Repr::Series(s) => {
                    let Some((e, c)) = s.terms.iter().next() else {
                        return Err(VfError::InsufficientPrecision(
                            "valuation of an element indistinguishable from 0".into(),
                        ));
                    };
                    go(c, out)?;
                    out.push(e.clone());
                    Ok(())
                }
            }
        }
        let mut out = Vec::new();
        go(&self.repr, &mut out)?;
        Ok(out)
    }

    /// Valuation at the coarsening v_j: the minimum support exponent
    /// projected to the outermost j coordinates.
    pub fn valuation(&self, handle: ValuationHandle) -> Result<GroupElement, VfError> {
        let k = self.desc.num_levels();
        if handle.level == 0 || handle.level > k {
            return Err(VfError::BadLevel(handle.level, k));
        }
        let coords = self.full_coords()?;
        let shape = self.desc.shape_at(handle);
        Ok(shape.element(coords[k - handle.level..].to_vec())?)
    }

    pub fn valuation_full(&self) -> Result<GroupElement, VfError> {
        self.valuation(self.desc.full_handle())
    }

    /// Image in the residue field of v_j; requires valuation >= 0 there.
    pub fn residue(&self, handle: ValuationHandle) -> Result<FieldElement, VfError> {
        let k = self.desc.num_levels();
        if handle.level == 0 || handle.level > k {
            return Err(VfError::BadLevel(handle.level, k));
        }
        let res_desc = self.desc.residue_descriptor(handle)?;
        let mut repr = self.repr.clone();
        for _ in 0..handle.level {
            repr = match repr {
                Repr::Series(s) => {
                    if let Some((e, _)) = s.terms.iter().next() {
                        if e.is_negative() {
                            return Err(VfError::NegativeValuation);
                        }
                    }
                    if s.prec <= rat(0) {
                        return Err(VfError::InsufficientPrecision(
                            "series precision does not reach the constant term".into(),
                        ));
                    }
                    match s.terms.get(&rat(0)) {
                        Some(c) => c.clone(),
                        // no constant term: the residue is zero, and so are
                        // all further residues down the chain
                        None => return Ok(FieldElement::zero(&res_desc)),
                    }
                }
                Repr::Padic(p) => Repr::Base(p.residue()?),
                Repr::Base(_) => {
                    return Err(VfError::Unsupported(
                        "no more layers to take residues through".into(),
                    ))
                }
            };
        }
        Ok(FieldElement {
            desc: res_desc,
            repr,
        })
    }

    /// Lift an element of the residue field of the full valuation back as a
    /// constant (a section of the residue map on representatives).
    pub fn lift_residue(
        desc: &Arc<FieldDescriptor>,
        residue: &BaseElement,
    ) -> Result<FieldElement, VfError> {
        match residue {
            BaseElement::Rat(r) => Self::from_rational(desc, r),
            BaseElement::Fp { val, .. } => Self::from_rational(desc, &rat(*val as i64)),
            BaseElement::Fq { .. } => {
                // base field must be the same F_q; embed as a constant
                let ctx = Self::ctx(desc);
                if *ctx.base != residue.field() {
                    return Err(VfError::DescriptorMismatch);
                }
                let mut repr = Repr::Base(residue.clone());
                for _ in ctx.layers {
                    repr = Repr::Series(Series {
                        terms: if repr.is_zero() {
                            BTreeMap::new()
                        } else {
                            BTreeMap::from([(rat(0), repr)])
                        },
                        prec: ctx.default_prec(),
                    });
                }
                Ok(FieldElement {
                    desc: desc.clone(),
                    repr,
                })
            }
        }
    }

    /// Embed an element of the field one layer down as a constant of the
    /// outermost series layer of `outer`.
    pub fn promote_constant(
        outer: &Arc<FieldDescriptor>,
        inner_elem: &FieldElement,
    ) -> Result<FieldElement, VfError> {
        let k = outer.num_levels();
        if k == 0
            || outer.layers()[..k - 1] != inner_elem.desc.layers()[..]
            || outer.base() != inner_elem.desc.base()
            || matches!(outer.layers()[k - 1].kind, LayerKind::Completion(_))
        {
            return Err(VfError::DescriptorMismatch);
        }
        let terms = if inner_elem.repr.is_zero() {
            BTreeMap::new()
        } else {
            BTreeMap::from([(rat(0), inner_elem.repr.clone())])
        };
        Ok(FieldElement {
            desc: outer.clone(),
            repr: Repr::Series(Series {
                terms,
                prec: rat(outer.precision().series),
            }),
        })
    }

    /// Underlying base element, for rank-0 descriptors.
    pub fn as_base(&self) -> Option<&BaseElement> {
        match &self.repr {
            Repr::Base(b) => Some(b),
            _ => None,
        }
    }

    /// Deterministic sparse form (sorted exponents) for serialization.
    pub fn to_sparse(&self) -> SparseRepr {
        fn go(repr: &Repr, layers: &[Layer]) -> SparseRepr {
            match repr {
                Repr::Base(b) => SparseRepr::Base {
                    value: b.to_string(),
                },
                Repr::Padic(p) => SparseRepr::Padic {
                    p: p.p,
                    shift: p.shift,
                    digits: p.digits(((p.abs_prec - p.shift).max(0) as usize).min(16)),
                    prec: p.abs_prec,
                },
                Repr::Series(s) => {
                    let layer = layers.last().expect("series repr has a layer");
                    SparseRepr::Series {
                        var: layer.var.clone(),
                        prec: s.prec.to_string(),
                        terms: s
                            .terms
                            .iter()
                            .map(|(e, c)| {
                                (e.to_string(), go(c, &layers[..layers.len() - 1]))
                            })
                            .collect(),
                    }
                }
            }
        }
        go(&self.repr, self.desc.layers())
    }
}

fn int_i64(n: &BigInt) -> Result<i64, VfError> {
    n.try_into()
        .map_err(|_| VfError::Unsupported("exponent out of i64 range".into()))
}

impl<'a> Ctx<'a> {
    /// `1` of this sub-tower.
    fn inner_one_at(&self) -> Result<Repr, VfError> {
        match self.outer_layer() {
            None => Ok(Repr::Base(self.base.one())),
            Some(Layer {
                kind: LayerKind::Completion(p),
                ..
            }) => Ok(Repr::Padic(Padic::from_rational(*p, &rat(1), self.prec.digits)?)),
            Some(_) => Ok(Repr::Series(Series {
                terms: BTreeMap::from([(rat(0), self.inner().inner_one_at()?)]),
                prec: self.default_prec(),
            })),
        }
    }
}

/// Deterministic serializable form of an element.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SparseRepr {
    Base {
        value: String,
    },
    Padic {
        p: u64,
        shift: i64,
        digits: Vec<u64>,
        prec: i64,
    },
    Series {
        var: String,
        prec: String,
        terms: Vec<(String, SparseRepr)>,
    },
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(
            repr: &Repr,
            layers: &[Layer],
            f: &mut fmt::Formatter<'_>,
        ) -> fmt::Result {
            match repr {
                Repr::Base(b) => write!(f, "{b}"),
                Repr::Padic(p) => {
                    if p.is_zero() {
                        write!(f, "O({}^{})", p.p, p.abs_prec)
                    } else if p.shift == 0 {
                        write!(f, "{} + O({}^{})", p.unit, p.p, p.abs_prec)
                    } else {
                        write!(
                            f,
                            "{}^{}*{} + O({}^{})",
                            p.p, p.shift, p.unit, p.p, p.abs_prec
                        )
                    }
                }
                Repr::Series(s) => {
                    let var = &layers.last().unwrap().var;
                    let inner_layers = &layers[..layers.len() - 1];
                    for (e, c) in &s.terms {
                        write!(f, "(")?;
                        go(c, inner_layers, f)?;
                        write!(f, ")*{var}^{e} + ")?;
                    }
                    write!(f, "O({var}^{})", s.prec)
                }
            }
        }
        go(&self.repr, self.desc.layers(), f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;


    use crate::valued_fields::parse_element_expr;

    fn laurent_f3() -> Arc<FieldDescriptor> {
        let base = FieldDescriptor::base_field(BaseField::Prime(3));
        FieldDescriptor::laurent_over(&base, "t")
    }

    fn qp(p: u64) -> Arc<FieldDescriptor> {
        FieldDescriptor::qp(p).unwrap()
    }

    #[test]
    fn geometric_series_inverse() {
        let k = laurent_f3();
        let x = parse_element_expr(&k, "1 + t").unwrap();
        let inv = x.inv().unwrap();
        assert!(x.mul(&inv).unwrap().sub(&FieldElement::one(&k)).unwrap().is_zero());
        // 1/(1+t) = 1 - t + t^2 - ... over F_3: coefficients 1, 2, 1, 2, ...
        let series_str = inv.to_string();
        assert!(series_str.starts_with("(1)*t^0 + (2)*t^1 + (1)*t^2"));
    }

    #[test]
    fn padic_inverse_of_two() {
        let k = qp(5);
        let two = FieldElement::from_i64(&k, 2);
        let inv = two.inv().unwrap();
        // digits of 1/2 in Q_5: 3 + 2*5 + 2*5^2 + ...
        let Repr::Padic(p) = &inv.repr else { panic!() };
        assert_eq!(p.shift, 0);
        assert_eq!(&p.digits(4), &[3, 2, 2, 2]);
        // independent check: 2 * inv(2) = 1 mod 5^6
        let prod = two.mul(&inv).unwrap();
        assert!(prod.sub(&FieldElement::one(&k)).unwrap().is_zero());
    }

    #[test]
    fn additive_inverse_cancels() {
        let k = laurent_f3();
        let x = parse_element_expr(&k, "2*t^-3 + 1 + t^5").unwrap();
        assert!(x.add(&x.neg()).unwrap().is_zero());
    }

    #[test]
    fn valuations() {
        let k = qp(5);
        let x = FieldElement::from_i64(&k, 75);
        let v = x.valuation_full().unwrap();
        assert_eq!(v.coords()[0], rat(2)); // 75 = 3 * 5^2

        // Q_l((t))((s)) with l = 5
        let tower = FieldDescriptor::laurent_over(&FieldDescriptor::laurent_over(&qp(5), "t"), "s");
        // v2(5 * t^-1): s-exponent 0, t-exponent -1 -> (-1, 0), s dominant (last)
        let x = parse_element_expr(&tower, "5 * t^-1").unwrap();
        let v2 = x.valuation(tower.handle(2).unwrap()).unwrap();
        assert_eq!(v2.coords(), &[rat(-1), rat(0)]);
        assert!(!v2.is_nonnegative());
        // t is in O_v2, t^-1 is not
        let t = parse_element_expr(&tower, "t").unwrap();
        assert!(t.valuation(tower.handle(2).unwrap()).unwrap().is_nonnegative());
        // v1(s^2 * t^-3) = 2 (s-adic only)
        let x = parse_element_expr(&tower, "s^2 * t^-3").unwrap();
        let v1 = x.valuation(tower.handle(1).unwrap()).unwrap();
        assert_eq!(v1.coords(), &[rat(2)]);
    }

    #[test]
    fn residues() {
        let k = qp(5);
        let x = FieldElement::from_i64(&k, 7);
        let r = x.residue(k.full_handle()).unwrap();
        assert_eq!(r.as_base().unwrap(), &BaseElement::Fp { p: 5, val: 2 });

        let k = laurent_f3();
        let x = parse_element_expr(&k, "2 + t").unwrap();
        let r = x.residue(k.full_handle()).unwrap();
        assert_eq!(r.as_base().unwrap(), &BaseElement::Fp { p: 3, val: 2 });

        // Q_5((t)): residue under v1 of (5 + t*u) is 5 in Q_5
        let tower = FieldDescriptor::laurent_over(&qp(5), "t");
        let x = parse_element_expr(&tower, "5 + t*3").unwrap();
        let r = x.residue(tower.handle(1).unwrap()).unwrap();
        assert!(r
            .sub(&FieldElement::from_i64(&r.desc, 5))
            .unwrap()
            .is_zero());
        // negative valuation has no residue
        let x = parse_element_expr(&tower, "t^-1").unwrap();
        assert!(matches!(
            x.residue(tower.handle(1).unwrap()),
            Err(VfError::NegativeValuation)
        ));
    }

    #[test]
    fn valuation_is_additive_and_ultrametric() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let fields = vec![
            qp(5),
            laurent_f3(),
            FieldDescriptor::laurent_over(&qp(3), "t"),
            FieldDescriptor::gen_series_over(
                &FieldDescriptor::base_field(BaseField::Rationals),
                "x",
            ),
        ];
        let cfg = super::super::SampleConfig::default();
        for k in &fields {
            for _ in 0..150 {
                let x = super::super::sample_nonzero(k, &mut rng, &cfg);
                let y = super::super::sample_nonzero(k, &mut rng, &cfg);
                for level in 1..=k.num_levels() {
                    let h = k.handle(level).unwrap();
                    let vx = x.valuation(h).unwrap();
                    let vy = y.valuation(h).unwrap();
                    let vxy = x.mul(&y).unwrap().valuation(h).unwrap();
                    assert_eq!(vxy, vx.add(&vy).unwrap());
                    let s = x.add(&y).unwrap();
                    if !s.is_zero() {
                        let vs = s.valuation(h).unwrap();
                        let min = if vx.cmp_elem(&vy).unwrap() == std::cmp::Ordering::Less {
                            vx.clone()
                        } else {
                            vy.clone()
                        };
                        assert_ne!(
                            vs.cmp_elem(&min).unwrap(),
                            std::cmp::Ordering::Less,
                            "ultrametric violated"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn residue_is_ring_homomorphism() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let cfg = super::super::SampleConfig::default();
        for k in [qp(7), laurent_f3()] {
            let h = k.full_handle();
            for _ in 0..200 {
                let x = super::super::sample_integral(&k, &mut rng, &cfg);
                let y = super::super::sample_integral(&k, &mut rng, &cfg);
                let rx = x.residue(h).unwrap();
                let ry = y.residue(h).unwrap();
                let sum = x.add(&y).unwrap().residue(h).unwrap();
                assert!(sum.equal(&rx.add(&ry).unwrap()).unwrap());
                let prod = x.mul(&y).unwrap().residue(h).unwrap();
                assert!(prod.equal(&rx.mul(&ry).unwrap()).unwrap());
            }
        }
    }

    #[test]
    fn coarsening_chain_of_valuation_rings() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let cfg = super::super::SampleConfig::default();
        let tower = FieldDescriptor::laurent_over(&FieldDescriptor::laurent_over(&qp(5), "t"), "s");
        for _ in 0..300 {
            let x = super::super::sample_nonzero(&tower, &mut rng, &cfg);
            // O_v1 >= O_v2 >= O_v3 as membership predicates
            let mut member = Vec::new();
            for level in 1..=3 {
                let h = tower.handle(level).unwrap();
                member.push(x.valuation(h).unwrap().is_nonnegative());
            }
            for j in 0..2 {
                if member[j + 1] {
                    assert!(member[j], "O_v{} not contained in O_v{}", j + 2, j + 1);
                }
            }
        }
    }
}
