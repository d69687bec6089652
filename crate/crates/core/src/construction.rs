//! The two-field comparison showing that no uniform existential (or
//! universal) formula can define every henselian valuation ring: an
//! embedding of K1 = F((x^Q))((t)) into K2 = F((s))((y^Q))((z^Q)) that
//! carries the full rank-2 valuation of K1 to the restriction of the
//! outer rank-2 valuation of K2, while the t-adic ring of K1 and the
//! image ring disagree on explicit elements.

use std::sync::Arc;

use num::{BigRational, Zero};
use rand::SeedableRng;
use std::collections::BTreeMap;

use crate::decision::DecisionResult;
use crate::ordered_groups::{is_pure_sublattice, purity_defect, GroupElement, GroupShape};
use num::BigInt;
use crate::valued_fields::element::{Repr, Series};
use crate::valued_fields::{
    sample_element, BaseOrFlag, FieldDescriptor, FieldElement, Precision, SampleConfig,
    ValuationHandle, VfError,
};

/// The fields and valuations of the comparison, over a common coefficient
/// field F.
#[derive(Clone)]
pub struct ConstructionInstance {
    /// F((x^Q))((t))
    pub k1: Arc<FieldDescriptor>,
    /// F((s))((y^Q))((z^Q))
    pub k2: Arc<FieldDescriptor>,
    /// F((s))((y^Q))((z)): the subfield the embedding lands in
    pub k0: Arc<FieldDescriptor>,
    /// F((x^Q))
    pub f1: Arc<FieldDescriptor>,
    /// t-adic valuation on K1
    pub v1: ValuationHandle,
    /// full valuation on K1, pulled back through the embedding
    pub u: ValuationHandle,
    /// outer rank-2 valuation on K2 (the y and z layers)
    pub v2: ValuationHandle,
}

impl ConstructionInstance {
    pub fn new(base: BaseOrFlag) -> Result<ConstructionInstance, VfError> {
        let prec = Precision::default();
        let f = FieldDescriptor::new(base, vec![], prec)?;
        let f1 = FieldDescriptor::gen_series_over(&f, "x");
        let k1 = FieldDescriptor::laurent_over(&f1, "t");
        let s = FieldDescriptor::laurent_over(&f, "s");
        let sy = FieldDescriptor::gen_series_over(&s, "y");
        let k2 = FieldDescriptor::gen_series_over(&sy, "z");
        let k0 = FieldDescriptor::laurent_over(&sy, "z");
        Ok(ConstructionInstance {
            v1: k1.handle(1)?,
            u: k1.handle(2)?,
            v2: k2.handle(2)?,
            k1,
            k2,
            k0,
            f1,
        })
    }

    /// The embedding: sum_gamma f_gamma(x) t^gamma maps to
    /// sum_gamma f_gamma(y) s^gamma z^gamma.
    pub fn phi(&self, a: &FieldElement) -> Result<FieldElement, VfError> {
        self.check_k1(a)?;
        let sprec = BigRational::from_integer(self.k1.precision().series.into());
        let Repr::Series(outer) = a.repr() else {
            return Err(VfError::DescriptorMismatch);
        };
        let mut zterms: BTreeMap<BigRational, Repr> = BTreeMap::new();
        for (gamma, f_gamma) in &outer.terms {
            let Repr::Series(xs) = f_gamma else {
                return Err(VfError::DescriptorMismatch);
            };
            let mut yterms: BTreeMap<BigRational, Repr> = BTreeMap::new();
            for (delta, c) in &xs.terms {
                let sterm = Series {
                    terms: BTreeMap::from([(gamma.clone(), c.clone())]),
                    prec: gamma + &sprec,
                };
                yterms.insert(delta.clone(), Repr::Series(sterm));
            }
            zterms.insert(
                gamma.clone(),
                Repr::Series(Series {
                    terms: yterms,
                    prec: xs.prec.clone(),
                }),
            );
        }
        Ok(FieldElement::from_repr(
            &self.k2,
            Repr::Series(Series {
                terms: zterms,
                prec: outer.prec.clone(),
            }),
        ))
    }

    /// The variable renaming x -> y, t -> z, coefficients untouched.
    pub fn epsilon(&self, a: &FieldElement) -> Result<FieldElement, VfError> {
        self.check_k1(a)?;
        let sprec = BigRational::from_integer(self.k1.precision().series.into());
        let Repr::Series(outer) = a.repr() else {
            return Err(VfError::DescriptorMismatch);
        };
        let mut zterms: BTreeMap<BigRational, Repr> = BTreeMap::new();
        for (gamma, f_gamma) in &outer.terms {
            let Repr::Series(xs) = f_gamma else {
                return Err(VfError::DescriptorMismatch);
            };
            let mut yterms: BTreeMap<BigRational, Repr> = BTreeMap::new();
            for (delta, c) in &xs.terms {
                let sterm = Series {
                    terms: BTreeMap::from([(BigRational::zero(), c.clone())]),
                    prec: sprec.clone(),
                };
                yterms.insert(delta.clone(), Repr::Series(sterm));
            }
            zterms.insert(
                gamma.clone(),
                Repr::Series(Series {
                    terms: yterms,
                    prec: xs.prec.clone(),
                }),
            );
        }
        Ok(FieldElement::from_repr(
            &self.k2,
            Repr::Series(Series {
                terms: zterms,
                prec: outer.prec.clone(),
            }),
        ))
    }

    /// The automorphism of K2 fixing F((s))((y^Q)) with z^gamma mapping to
    /// s^gamma z^gamma.
    pub fn alpha(&self, b: &FieldElement) -> Result<FieldElement, VfError> {
        if b.descriptor().layers() != self.k2.layers() || b.descriptor().base() != self.k2.base() {
            return Err(VfError::DescriptorMismatch);
        }
        let Repr::Series(outer) = b.repr() else {
            return Err(VfError::DescriptorMismatch);
        };
        let mut zterms: BTreeMap<BigRational, Repr> = BTreeMap::new();
        for (gamma, g) in &outer.terms {
            let Repr::Series(ys) = g else {
                return Err(VfError::DescriptorMismatch);
            };
            let mut yterms: BTreeMap<BigRational, Repr> = BTreeMap::new();
            for (delta, ss) in &ys.terms {
                let Repr::Series(ss) = ss else {
                    return Err(VfError::DescriptorMismatch);
                };
                let shifted = Series {
                    terms: ss
                        .terms
                        .iter()
                        .map(|(e, c)| (e + gamma, c.clone()))
                        .collect(),
                    prec: &ss.prec + gamma,
                };
                yterms.insert(delta.clone(), Repr::Series(shifted));
            }
            zterms.insert(
                gamma.clone(),
                Repr::Series(Series {
                    terms: yterms,
                    prec: ys.prec.clone(),
                }),
            );
        }
        Ok(FieldElement::from_repr(
            &self.k2,
            Repr::Series(Series {
                terms: zterms,
                prec: outer.prec.clone(),
            }),
        ))
    }

    fn check_k1(&self, a: &FieldElement) -> Result<(), VfError> {
        if a.descriptor().layers() != self.k1.layers() || a.descriptor().base() != self.k1.base() {
            return Err(VfError::DescriptorMismatch);
        }
        Ok(())
    }
}

/// Ring-homomorphism battery: additivity, multiplicativity, the
/// factorization through the renaming and the twist, and injectivity on
/// distinguishable inputs.
pub fn check_homomorphism(
    inst: &ConstructionInstance,
    seed: u64,
    pairs: usize,
) -> Result<DecisionResult, VfError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cfg = SampleConfig::default();
    for i in 0..pairs {
        let a = sample_element(&inst.k1, &mut rng, &cfg);
        let b = sample_element(&inst.k1, &mut rng, &cfg);
        let pa = inst.phi(&a)?;
        let pb = inst.phi(&b)?;
        if !inst.phi(&a.add(&b)?)?.sub(&pa.add(&pb)?)?.is_zero() {
            return Ok(DecisionResult::no(format!("additivity failed at pair {i}")));
        }
        if !inst.phi(&a.mul(&b)?)?.sub(&pa.mul(&pb)?)?.is_zero() {
            return Ok(DecisionResult::no(format!(
                "multiplicativity failed at pair {i}"
            )));
        }
        if !inst.alpha(&inst.epsilon(&a)?)?.sub(&pa)?.is_zero() {
            return Ok(DecisionResult::no(format!(
                "factorization through the twist failed at pair {i}"
            )));
        }
        if !a.sub(&b)?.is_zero() && pa.sub(&pb)?.is_zero() {
            return Ok(DecisionResult::no(format!("injectivity failed at pair {i}")));
        }
    }
    Ok(DecisionResult::yes(
        None,
        format!("ring embedding verified on {pairs} sampled pairs"),
    ))
}

/// The pullback property: the full valuation ring (and maximal ideal) of
/// K1 is exactly the preimage of the outer rank-2 ring of K2.
pub fn check_valuation_restriction(
    inst: &ConstructionInstance,
    seed: u64,
    samples: usize,
) -> Result<DecisionResult, VfError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cfg = SampleConfig::default();
    for i in 0..samples {
        let a = sample_element(&inst.k1, &mut rng, &cfg);
        if a.is_zero() {
            continue;
        }
        let ua = a.valuation(inst.u)?;
        let va = inst.phi(&a)?.valuation(inst.v2)?;
        if ua.is_nonnegative() != va.is_nonnegative() {
            return Ok(DecisionResult::no(format!(
                "valuation ring membership disagreed at sample {i}: u = {ua}, v2 = {va}"
            )));
        }
        if ua.is_positive_elem() != va.is_positive_elem() {
            return Ok(DecisionResult::no(format!(
                "maximal ideal membership disagreed at sample {i}"
            )));
        }
    }
    Ok(DecisionResult::yes(
        None,
        format!("pullback of the rank-2 ring verified on {samples} samples"),
    ))
}

fn r(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Image of the value group of K1: (delta, gamma) maps to
/// (gamma, delta, gamma) in the given rank-3 shape.
pub fn pushforward(g: &GroupElement, target: &GroupShape) -> Result<GroupElement, VfError> {
    let c = g.coords();
    if c.len() != 2 {
        return Err(VfError::Unsupported("expected a rank-2 value".into()));
    }
    Ok(target.element(vec![c[1].clone(), c[0].clone(), c[1].clone()])?)
}

/// The image lattice {(gamma, delta, gamma)} is pure in Z^3, so p-th power
/// classes transfer; the certificate includes a deliberately impure control.
pub fn check_purity(n_max: u64) -> Result<DecisionResult, VfError> {
    let ambient: GroupShape = "Z*Z*Z".parse()?;
    let rank2: GroupShape = "Z*Z".parse()?;
    let gens = vec![
        pushforward(&rank2.element(vec![r(1), r(0)])?, &ambient)?,
        pushforward(&rank2.element(vec![r(0), r(1)])?, &ambient)?,
    ];
    if !is_pure_sublattice(&gens, &ambient, n_max)? {
        return Ok(DecisionResult::no("image lattice is not pure"));
    }
    let control = vec![
        ambient.element(vec![r(0), r(2), r(0)])?,
        ambient.element(vec![r(1), r(0), r(1)])?,
    ];
    match purity_defect(&control, &ambient, n_max)? {
        Some(2) => {}
        other => {
            return Ok(DecisionResult::no(format!(
                "impure control lattice misreported: defect {other:?}"
            )));
        }
    }
    let mut out = DecisionResult::yes(None, "image lattice pure up to the requested exponent");
    out.certificate
        .push(format!("generators (0,1,0) and (1,0,1) pure for n <= {n_max}"));
    out.certificate
        .push("control generators (0,2,0), (1,0,1) correctly impure at n = 2".into());
    Ok(out)
}

/// The explicit element separating the two rings: x^{-1} lies in the
/// t-adic ring of K1 but its image leaves the transported ring. Also
/// documents that t itself separates nothing.
pub fn nondefinability_witness(
    inst: &ConstructionInstance,
) -> Result<(FieldElement, DecisionResult), VfError> {
    let x = FieldElement::layer_monomial(&inst.k1, 0, &BigRational::from_integer(1.into()))?;
    let w = x.inv()?;
    let v1w = w.valuation(inst.v1)?;
    let uw = w.valuation(inst.u)?;
    let v2w = inst.phi(&w)?.valuation(inst.v2)?;
    if !v1w.is_nonnegative() || uw.is_nonnegative() || v2w.is_nonnegative() {
        return Ok((
            w,
            DecisionResult::no("witness valuations did not separate the rings"),
        ));
    }
    let mut out = DecisionResult::yes(Some(w.clone()), "x^{-1} separates the rings");
    out.certificate
        .push(format!("v1(x^-1) = {v1w} >= 0: inside the t-adic ring"));
    out.certificate
        .push(format!("u(x^-1) = {uw} < 0: outside the pulled-back ring"));
    out.certificate.push(format!(
        "v2(phi(x^-1)) = {v2w} < 0: the image leaves the rank-2 ring of K2"
    ));
    // negative control: t is in both rings, so it separates nothing
    let t = FieldElement::layer_monomial(&inst.k1, 1, &BigRational::from_integer(1.into()))?;
    let tv1 = t.valuation(inst.v1)?;
    let tu = t.valuation(inst.u)?;
    if !tv1.is_nonnegative() || !tu.is_nonnegative() {
        return Ok((w, DecisionResult::no("control element t misbehaved")));
    }
    out.certificate
        .push("control: t lies in both rings and is not a witness".into());
    Ok((w, out))
}

/// Hypothesis audit for transferring sentences between K1 and K2: the
/// value group of the full valuation has a proper convex subgroup with
/// regular quotient, and the coefficient field must be elementarily
/// equivalent to its generalized power series extension.
pub fn audit_transfer_hypotheses(inst: &ConstructionInstance) -> Result<Vec<String>, VfError> {
    let mut lines = Vec::new();
    let shape = inst.k1.shape_at(inst.u);
    if shape.has_regular_quotient() {
        lines.push(format!(
            "value group {shape}: some proper convex subgroup has regular quotient"
        ));
    } else {
        lines.push(format!("value group {shape}: no regular quotient found"));
    }
    let f = inst.k1.residue_descriptor(inst.k1.full_handle())?;
    if qualifies_for_no_existential(&f) {
        lines.push(format!(
            "coefficient field {f} is elementarily equivalent to its series extension"
        ));
    } else {
        lines.push(format!(
            "coefficient field {f}: equivalence with its series extension not established"
        ));
    }
    Ok(lines)
}

/// Recognized sufficient conditions for F to be elementarily equivalent to
/// F((Q)): algebraically closed; a p-adic completion of Q; or henselian of
/// rank one with residue characteristic zero (an outermost plain series
/// layer over a characteristic-zero field).
pub fn qualifies_for_no_existential(f: &Arc<FieldDescriptor>) -> bool {
    use crate::valued_fields::LayerKind;
    if f.layers().is_empty() {
        return matches!(f.base(), BaseOrFlag::AlgClosedChar0);
    }
    let outer = f.layers().last().unwrap();
    match outer.kind {
        LayerKind::Completion(_) => {
            f.layers().len() == 1
                && matches!(
                    f.base(),
                    BaseOrFlag::Concrete(b) if b.characteristic() == 0
                )
        }
        LayerKind::SeriesZ => {
            let res = f
                .residue_descriptor(f.handle(1).expect("outermost handle"))
                .expect("series residue");
            res.characteristic() == 0
        }
        LayerKind::SeriesQ => false,
    }
}
