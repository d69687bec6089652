//! Seeded random elements of tower fields, used by the verification
//! batteries. Sampling is fully deterministic given the RNG state.

use std::sync::Arc;

use num::{BigInt, BigRational};
use rand::Rng;

use super::element::FieldElement;
use super::{FieldDescriptor, LayerKind};
use crate::residue_fields::{BaseElement, BaseField};

#[derive(Clone, Copy, Debug)]
pub struct SampleConfig {
    /// series terms per layer
    pub terms: usize,
    /// exponents drawn from [-exp_range, exp_range] (or [0, exp_range] when integral)
    pub exp_range: i64,
    /// denominator bound for generalized-series exponents
    pub exp_denom: u32,
    /// p-adic mantissas drawn below p^mantissa_digits
    pub mantissa_digits: u32,
    /// numerators/denominators of rational coefficients bounded by this
    pub rat_bound: i64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            terms: 4,
            exp_range: 5,
            exp_denom: 4,
            mantissa_digits: 8,
            rat_bound: 40,
        }
    }
}

fn sample_base<R: Rng>(field: &BaseField, rng: &mut R, cfg: &SampleConfig) -> BaseElement {
    match field {
        BaseField::Prime(p) => BaseElement::Fp {
            p: *p,
            val: rng.gen_range(0..*p),
        },
        BaseField::Finite { p, m } => {
            let coeffs = (0..*m).map(|_| rng.gen_range(0..*p)).collect();
            BaseElement::Fq {
                p: *p,
                m: *m,
                coeffs,
            }
        }
        BaseField::Rationals => {
            let n = rng.gen_range(-cfg.rat_bound..=cfg.rat_bound);
            let d = rng.gen_range(1..=cfg.rat_bound);
            BaseElement::Rat(BigRational::new(BigInt::from(n), BigInt::from(d)))
        }
    }
}

fn sample_exponent<R: Rng>(
    kind: &LayerKind,
    rng: &mut R,
    cfg: &SampleConfig,
    integral: bool,
) -> BigRational {
    let lo = if integral { 0 } else { -cfg.exp_range };
    let n = rng.gen_range(lo..=cfg.exp_range);
    match kind {
        LayerKind::SeriesQ => {
            let d = rng.gen_range(1..=cfg.exp_denom as i64);
            BigRational::new(BigInt::from(n), BigInt::from(d))
        }
        _ => BigRational::from_integer(BigInt::from(n)),
    }
}

fn sample_in<R: Rng>(
    desc: &Arc<FieldDescriptor>,
    rng: &mut R,
    cfg: &SampleConfig,
    integral: bool,
) -> FieldElement {
    let layers = desc.layers();
    match layers.last() {
        None => {
            let base = match desc.base() {
                super::BaseOrFlag::Concrete(b) => b,
                super::BaseOrFlag::AlgClosedChar0 => {
                    panic!("cannot sample from an element-free descriptor")
                }
            };
            let b = sample_base(base, rng, cfg);
            FieldElement::lift_residue(desc, &b).expect("base element embeds")
        }
        Some(layer) => match layer.kind {
            LayerKind::Completion(p) => {
                // p^shift * mantissa with mantissa < p^mantissa_digits
                let shift = if integral {
                    rng.gen_range(0..=cfg.exp_range)
                } else {
                    rng.gen_range(-cfg.exp_range..=cfg.exp_range)
                };
                let mut mantissa = BigInt::from(0);
                let pb = BigInt::from(p);
                for _ in 0..cfg.mantissa_digits {
                    mantissa = mantissa * &pb + BigInt::from(rng.gen_range(0..p));
                }
                let pk = if shift >= 0 {
                    BigRational::from_integer(num::pow(pb, shift as usize))
                } else {
                    BigRational::from_integer(num::pow(pb, (-shift) as usize)).recip()
                };
                let value = BigRational::from_integer(mantissa) * pk;
                FieldElement::from_rational(desc, &value).expect("rational embeds in Q_p")
            }
            _ => {
                // a few terms coeff * var^e with coefficients from the inner field
                let inner = desc.residue_descriptor(desc.handle(1).unwrap()).unwrap();
                let mut acc = FieldElement::zero(desc);
                for _ in 0..cfg.terms {
                    let e = sample_exponent(&layer.kind, rng, cfg, integral);
                    let coeff = sample_in(&inner, rng, cfg, integral);
                    let coeff = promote(desc, &coeff);
                    let mono = FieldElement::layer_monomial(desc, layers.len() - 1, &e)
                        .expect("sampled exponent fits the layer");
                    acc = acc.add(&coeff.mul(&mono).unwrap()).unwrap();
                }
                acc
            }
        },
    }
}

/// Re-embed an element of the inner field (one fewer layer) as a constant of
/// the outer series layer.
fn promote(outer: &Arc<FieldDescriptor>, inner_elem: &FieldElement) -> FieldElement {
    FieldElement::promote_constant(outer, inner_elem).expect("inner layers agree")
}

pub fn sample_element<R: Rng>(
    desc: &Arc<FieldDescriptor>,
    rng: &mut R,
    cfg: &SampleConfig,
) -> FieldElement {
    sample_in(desc, rng, cfg, false)
}

/// Sample with full valuation >= 0.
pub fn sample_integral<R: Rng>(
    desc: &Arc<FieldDescriptor>,
    rng: &mut R,
    cfg: &SampleConfig,
) -> FieldElement {
    sample_in(desc, rng, cfg, true)
}

pub fn sample_nonzero<R: Rng>(
    desc: &Arc<FieldDescriptor>,
    rng: &mut R,
    cfg: &SampleConfig,
) -> FieldElement {
    loop {
        let x = sample_in(desc, rng, cfg, false);
        if !x.is_zero() {
            return x;
        }
    }
}
