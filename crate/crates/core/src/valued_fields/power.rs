//! Power predicates in tower fields: the n-th power decision, the index of
//! the p-th power classes, and a sampled lifting battery.
//!
//! The n-th power decision peels one layer at a time. At a series layer with
//! residue characteristic prime to n, x = var^v * u is an n-th power exactly
//! when n divides v and the leading coefficient is an n-th power one layer
//! down; the root then lifts by the unit-derivative Newton iteration. When
//! the (equal) characteristic r divides n, x^r distributes over a series
//! term by term, so the r-part of n reduces to coefficient-wise root
//! extraction. In a p-adic completion with e = v_p(n), a unit u is an n-th
//! power exactly when y^n = u is solvable modulo p^(2e+1), which seeds the
//! strong Newton iteration.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::bigint::Sign;
use num::{BigInt, BigRational, BigUint, One, Zero};
use rand::SeedableRng;
use serde::Serialize;

use super::element::{FieldElement, Padic, Repr, Series};
use super::hensel::{hensel_lift, newton_lift, Poly};
use super::{FieldDescriptor, LayerKind, VfError};
use crate::decision::{Decision, DecisionResult};
use crate::residue_fields::{simple_roots, BaseField, BasePoly};

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Decide whether x is an n-th power in its field, with a root as witness.
/// Elements indistinguishable from zero give `Indeterminate` unless their
/// support is exactly empty, in which case zero itself is the root.
pub fn is_nth_power_valued(x: &FieldElement, n: u64) -> Result<DecisionResult, VfError> {
    assert!(n >= 1);
    if n == 1 {
        return Ok(DecisionResult::yes(Some(x.clone()), "every element is a 1st power"));
    }
    if x.is_zero() {
        return Ok(DecisionResult::yes(
            Some(FieldElement::zero(x.descriptor())),
            "zero at working precision; 0^n = 0",
        ));
    }
    decide(x, n)
}

fn decide(x: &FieldElement, n: u64) -> Result<DecisionResult, VfError> {
    let desc = x.descriptor().clone();
    match x.repr() {
        Repr::Base(b) => match b.field() {
            BaseField::Rationals => match b.is_nth_power(n) {
                Some(root) => Ok(DecisionResult::yes(
                    Some(FieldElement::lift_residue(&desc, &root)?),
                    format!("exact rational root of order {n}"),
                )),
                None => Ok(DecisionResult::no(format!(
                    "no exact rational root of order {n}"
                ))),
            },
            _ => match b.is_nth_power(n) {
                Some(root) => Ok(DecisionResult::yes(
                    Some(FieldElement::lift_residue(&desc, &root)?),
                    format!("root of order {n} in {}", b.field()),
                )),
                None => Ok(DecisionResult::no(format!(
                    "character test fails in {}",
                    b.field()
                ))),
            },
        },
        Repr::Padic(pad) => decide_padic(&desc, pad, n),
        Repr::Series(_) => decide_series(&desc, x, n),
    }
}

fn decide_padic(
    desc: &Arc<FieldDescriptor>,
    pad: &Padic,
    n: u64,
) -> Result<DecisionResult, VfError> {
    let p = pad.p;
    if pad.shift % n as i64 != 0 {
        return Ok(DecisionResult::no(format!(
            "valuation {} is not divisible by {n}",
            pad.shift
        )));
    }
    let e = {
        let mut e = 0u32;
        let mut m = n;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        e
    };
    let needed = 2 * e as i64 + 1;
    if pad.abs_prec - pad.shift < needed {
        return Ok(DecisionResult::indeterminate(format!(
            "unit only known modulo {p}^{}, need {p}^{needed}",
            pad.abs_prec - pad.shift
        )));
    }
    let modulus = BigUint::from(p).pow(needed as u32);
    let unit = pad.unit.clone() % &modulus;
    let mut seed: Option<BigUint> = None;
    let mut y = BigUint::one();
    while y < modulus {
        if (&y % p).is_zero() {
            y += 1u32;
            continue;
        }
        if y.modpow(&BigUint::from(n), &modulus) == unit {
            seed = Some(y.clone());
            break;
        }
        y += 1u32;
    }
    let Some(seed) = seed else {
        return Ok(DecisionResult::no(format!(
            "y^{n} = u has no solution modulo {p}^{needed}"
        )));
    };
    // refine the unit root, then restore the p-power part
    let u = unit_part(desc, pad)?;
    let f = Poly::nth_power_minus(desc, n, &u);
    let start = FieldElement::from_rational(
        desc,
        &BigRational::from_integer(BigInt::from_biguint(Sign::Plus, seed.clone())),
    )?;
    let (root, _) = newton_lift(&f, desc.full_handle(), &start)?;
    let shift_root = FieldElement::layer_monomial(
        desc,
        0,
        &BigRational::from_integer(BigInt::from(pad.shift / n as i64)),
    )?;
    let witness = root.mul(&shift_root)?;
    verify_witness(desc, pad_elem(desc, pad), &witness, n, needed)
}

fn pad_elem(desc: &Arc<FieldDescriptor>, pad: &Padic) -> FieldElement {
    FieldElement::from_repr(desc, Repr::Padic(pad.clone()))
}

fn unit_part(desc: &Arc<FieldDescriptor>, pad: &Padic) -> Result<FieldElement, VfError> {
    let mut u = pad.clone();
    u.abs_prec -= u.shift;
    u.shift = 0;
    Ok(FieldElement::from_repr(desc, Repr::Padic(u)))
}

fn verify_witness(
    _desc: &Arc<FieldDescriptor>,
    x: FieldElement,
    witness: &FieldElement,
    n: u64,
    congruence_level: i64,
) -> Result<DecisionResult, VfError> {
    if witness.pow(n)?.sub(&x)?.is_zero() {
        Ok(DecisionResult::yes(
            Some(witness.clone()),
            format!("congruence solvable modulo p^{congruence_level}; Newton refinement verified"),
        ))
    } else {
        Ok(DecisionResult::indeterminate(
            "Newton refinement did not verify at working precision",
        ))
    }
}

fn decide_series(
    desc: &Arc<FieldDescriptor>,
    x: &FieldElement,
    n: u64,
) -> Result<DecisionResult, VfError> {
    let r = desc.characteristic();
    if r > 0 && n % r == 0 {
        return decide_frobenius(desc, x, n, r);
    }
    decide_tame(desc, x, n)
}

/// char(K) = r divides n: split n = r^e * m, take the r^e-th root term by
/// term (exponents divide, coefficients recurse), then decide the m-part.
fn decide_frobenius(
    desc: &Arc<FieldDescriptor>,
    x: &FieldElement,
    n: u64,
    r: u64,
) -> Result<DecisionResult, VfError> {
    let mut e = 0u32;
    let mut m = n;
    while m % r == 0 {
        m /= r;
        e += 1;
    }
    let re = r.pow(e);
    let re_rat = BigRational::from_integer(BigInt::from(re));
    let Repr::Series(s) = x.repr() else {
        unreachable!("series layer")
    };
    let outer_kind = &desc.layers().last().unwrap().kind;
    let inner_desc = desc.residue_descriptor(desc.handle(1)?)?;
    let mut root_terms: BTreeMap<BigRational, Repr> = BTreeMap::new();
    for (exp, coeff) in &s.terms {
        let divided = exp / &re_rat;
        if matches!(outer_kind, LayerKind::SeriesZ) && !divided.is_integer() {
            return Ok(DecisionResult::no(format!(
                "exponent {exp} is not divisible by {re}"
            )));
        }
        let coeff_elem = FieldElement::from_repr(&inner_desc, coeff.clone());
        let sub = is_nth_power_valued(&coeff_elem, re)?;
        match sub.decision {
            Decision::False => {
                return Ok(DecisionResult::no(format!(
                    "coefficient at exponent {exp} is not a {re}-th power"
                )))
            }
            Decision::Indeterminate => {
                return Ok(DecisionResult::indeterminate(format!(
                    "coefficient at exponent {exp} undecided"
                )))
            }
            Decision::True => {
                let w = sub.witness.expect("true decision carries a root");
                if !w.is_zero() {
                    root_terms.insert(divided, w.into_repr());
                }
            }
        }
    }
    let root = FieldElement::from_repr(
        desc,
        Repr::Series(Series {
            terms: root_terms,
            prec: &s.prec / &re_rat,
        }),
    );
    if m == 1 {
        return verify_witness(desc, x.clone(), &root, n, 0)
            .map(|res| res.push(format!("characteristic-{r} root taken term by term")));
    }
    let rest = is_nth_power_valued(&root, m)?;
    match rest.decision {
        Decision::True => {
            let w = rest.witness.expect("true decision carries a root");
            verify_witness(desc, x.clone(), &w, n, 0)
                .map(|res| res.push(format!("split as {re} * {m} through the Frobenius")))
        }
        _ => Ok(rest.push(format!("after extracting the {re}-th root"))),
    }
}

/// n prime to the residue characteristic of the outermost layer: divisibility
/// of the leading exponent plus the decision one layer down, then one
/// Hensel lift.
fn decide_tame(
    desc: &Arc<FieldDescriptor>,
    x: &FieldElement,
    n: u64,
) -> Result<DecisionResult, VfError> {
    let Repr::Series(s) = x.repr() else {
        unreachable!("series layer")
    };
    let Some((v, _)) = s.terms.iter().next() else {
        return Ok(DecisionResult::indeterminate(
            "element indistinguishable from zero",
        ));
    };
    let v = v.clone();
    let n_rat = BigRational::from_integer(BigInt::from(n));
    let v_over_n = &v / &n_rat;
    let outer_kind = &desc.layers().last().unwrap().kind;
    if matches!(outer_kind, LayerKind::SeriesZ) && !v_over_n.is_integer() {
        return Ok(DecisionResult::no(format!(
            "leading exponent {v} is not divisible by {n}"
        )));
    }
    let k = desc.num_levels();
    let back = FieldElement::layer_monomial(desc, k - 1, &(-v.clone()))?;
    let u = x.mul(&back)?;
    let lead = u.residue(desc.handle(1)?)?;
    let sub = is_nth_power_valued(&lead, n)?;
    match sub.decision {
        Decision::False => Ok(DecisionResult::no(format!(
            "leading coefficient is not an n-th power one layer down"
        ))
        .push(sub.certificate.join("; "))),
        Decision::Indeterminate => Ok(sub.push("leading coefficient undecided")),
        Decision::True => {
            let w = sub.witness.expect("true decision carries a root");
            let start = FieldElement::promote_constant(desc, &w)?;
            let f = Poly::nth_power_minus(desc, n, &u);
            let (unit_root, _) = hensel_lift(&f, desc.handle(1)?, &start)?;
            let shift_root = FieldElement::layer_monomial(desc, k - 1, &v_over_n)?;
            let witness = unit_root.mul(&shift_root)?;
            verify_witness(desc, x.clone(), &witness, n, 0)
                .map(|r| r.push("leading coefficient root lifted through the outermost layer"))
        }
    }
}

/// Index of the p-th power classes [K^x : (K^x)^p] for a prime p.
/// Errors with `Unsupported` when the index is infinite.
pub fn power_class_index_valued(desc: &Arc<FieldDescriptor>, p: u64) -> Result<u64, VfError> {
    assert!(crate::residue_fields::is_prime(p));
    let mut acc: u64 = 1;
    let char_k = desc.characteristic();
    for layer in desc.layers().iter().rev() {
        match layer.kind {
            LayerKind::SeriesZ | LayerKind::SeriesQ => {
                if char_k == p {
                    return Err(VfError::Unsupported(
                        "p-th power classes of an equal-characteristic-p series field are infinite"
                            .into(),
                    ));
                }
                if matches!(layer.kind, LayerKind::SeriesZ) {
                    acc *= p;
                }
            }
            LayerKind::Completion(l) => {
                // innermost: [Q_l^x : (Q_l^x)^p]
                acc *= if l != p {
                    p * gcd(p, l - 1)
                } else if p == 2 {
                    8
                } else {
                    p * p
                };
                return Ok(acc);
            }
        }
    }
    match desc.base() {
        super::BaseOrFlag::AlgClosedChar0 => Ok(acc),
        super::BaseOrFlag::Concrete(BaseField::Rationals) => Err(VfError::Unsupported(
            "p-th power classes of the rationals are infinite".into(),
        )),
        super::BaseOrFlag::Concrete(f) => {
            let q = f.order().unwrap();
            acc *= if f.characteristic() == p {
                1
            } else {
                gcd(p, q - 1)
            };
            Ok(acc)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PHenselianReport {
    pub attempts: usize,
    pub residue_roots_tested: usize,
    pub lifts_succeeded: usize,
    pub failures: Vec<String>,
}

impl PHenselianReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.lifts_succeeded > 0
    }
}

/// Sampled lifting battery for the full valuation: random monic integral
/// polynomials, every simple residue root must lift to an exact root.
pub fn p_henselian_check(
    desc: &Arc<FieldDescriptor>,
    degree: u64,
    seed: u64,
    samples: usize,
) -> Result<PHenselianReport, VfError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cfg = super::SampleConfig::default();
    let handle = desc.full_handle();
    let res_desc = desc.residue_descriptor(handle)?;
    if matches!(res_desc.base(), super::BaseOrFlag::AlgClosedChar0) {
        return Err(VfError::Unsupported(
            "residue field carries no elements to enumerate".into(),
        ));
    }
    let mut report = PHenselianReport {
        attempts: 0,
        residue_roots_tested: 0,
        lifts_succeeded: 0,
        failures: Vec::new(),
    };
    for i in 0..samples {
        report.attempts += 1;
        let mut coeffs: Vec<FieldElement> = (0..degree)
            .map(|_| super::sample_integral(desc, &mut rng, &cfg))
            .collect();
        coeffs.push(FieldElement::one(desc));
        let f = Poly::new(coeffs.clone());
        let residue_coeffs: Result<Vec<_>, _> = coeffs
            .iter()
            .map(|c| {
                c.residue(handle).map(|r| {
                    r.as_base()
                        .cloned()
                        .expect("full residue is a base element")
                })
            })
            .collect();
        let residue_poly = BasePoly::new(residue_coeffs?);
        let roots = simple_roots(&residue_poly)?;
        for (root, simple) in roots {
            if !simple {
                continue;
            }
            report.residue_roots_tested += 1;
            let start = FieldElement::lift_residue(desc, &root)?;
            match hensel_lift(&f, handle, &start) {
                Ok((lifted, log)) => {
                    let ok = f.eval(&lifted)?.is_zero()
                        && lifted
                            .residue(handle)?
                            .as_base()
                            .map(|b| *b == root)
                            .unwrap_or(false);
                    if ok && log.converged_to_zero {
                        report.lifts_succeeded += 1;
                    } else {
                        report
                            .failures
                            .push(format!("sample {i}: lift did not verify"));
                    }
                }
                Err(e) => report
                    .failures
                    .push(format!("sample {i}: lift failed: {e}")),
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valued_fields::parse_descriptor;
    use crate::valued_fields::parse_element_expr;

    fn yes(x: &FieldElement, n: u64) -> bool {
        is_nth_power_valued(x, n).unwrap().decision == Decision::True
    }

    fn no(x: &FieldElement, n: u64) -> bool {
        is_nth_power_valued(x, n).unwrap().decision == Decision::False
    }

    #[test]
    fn squares_in_q2_match_the_mod_8_rule() {
        let k = FieldDescriptor::qp(2).unwrap();
        // odd integers: square iff = 1 mod 8
        for a in (1..200i64).step_by(2) {
            let x = FieldElement::from_i64(&k, a);
            assert_eq!(yes(&x, 2), a % 8 == 1, "a = {a}");
        }
        // valuation parity
        assert!(yes(&FieldElement::from_i64(&k, 4), 2));
        assert!(no(&FieldElement::from_i64(&k, 2), 2));
        assert!(yes(&FieldElement::from_i64(&k, 17), 2));
        // brute-force oracle modulo 2^10: a is a square iff some y^2 = a mod 2^10
        // (for odd a below 2^7 the congruence settles the question)
        for a in (1..128i64).step_by(2) {
            let brute = (1..1024i64).any(|y| (y * y - a) % 1024 == 0);
            let x = FieldElement::from_i64(&k, a);
            assert_eq!(yes(&x, 2), brute, "a = {a}");
        }
    }

    #[test]
    fn tame_powers_in_qp() {
        let k = FieldDescriptor::qp(5).unwrap();
        // cubes in Q_5: unit cubes are residues that are cubes in F_5 (all of F_5^x)
        for a in [1i64, 2, 3, 4, 6] {
            assert!(yes(&FieldElement::from_i64(&k, a), 3), "a = {a}");
        }
        assert!(no(&FieldElement::from_i64(&k, 5), 3));
        assert!(yes(&FieldElement::from_i64(&k, 125), 3));
        // squares: residue must be a QR mod 5
        assert!(yes(&FieldElement::from_i64(&k, 4), 2));
        assert!(no(&FieldElement::from_i64(&k, 2), 2));
        assert!(yes(&FieldElement::from_i64(&k, 6), 2)); // 6 = 1 mod 5
    }

    #[test]
    fn wild_fifth_powers_in_q5() {
        let k = FieldDescriptor::qp(5).unwrap();
        // u in (Z_5^x)^5 iff y^5 = u solvable mod 5^3; brute oracle mod 5^6
        let m = 5i64.pow(6);
        for a in [1i64, 2, 7, 32, 57, 182, 243, 3125 + 1] {
            let brute = (1..5i64.pow(3))
                .filter(|y| y % 5 != 0)
                .any(|y| (y.pow(5) - a).rem_euclid(5i64.pow(3)) == 0);
            let _ = m;
            let x = FieldElement::from_i64(&k, a);
            assert_eq!(yes(&x, 5), brute, "a = {a}");
        }
    }

    #[test]
    fn laurent_layers_peel() {
        let k = parse_descriptor("Laurent(Fp(3))").unwrap();
        let t = parse_element_expr(&k, "t").unwrap();
        assert!(no(&t, 2));
        assert!(yes(&parse_element_expr(&k, "t^2").unwrap(), 2));
        // 1 + t = (1 + ...)^2 since 1 is a square in F_3
        assert!(yes(&parse_element_expr(&k, "1 + t").unwrap(), 2));
        // 2 is not a square in F_3
        assert!(no(&parse_element_expr(&k, "2 + t").unwrap(), 2));
        // cubes in char 3 go through the Frobenius: t^3 yes, t no
        assert!(yes(&parse_element_expr(&k, "t^3").unwrap(), 3));
        assert!(no(&parse_element_expr(&k, "t").unwrap(), 3));
        assert!(yes(&parse_element_expr(&k, "1 + t^3 + 2*t^6").unwrap(), 3));
        assert!(no(&parse_element_expr(&k, "1 + t^2").unwrap(), 3));
    }

    #[test]
    fn mixed_tower_q2_laurent() {
        // Q_2((t)): squares need even t-exponent and leading coefficient a
        // square in Q_2
        let k = parse_descriptor("Laurent(Qp(2))").unwrap();
        assert!(yes(&parse_element_expr(&k, "t^2").unwrap(), 2));
        assert!(no(&parse_element_expr(&k, "t").unwrap(), 2));
        assert!(yes(&parse_element_expr(&k, "17*t^2 + t^3").unwrap(), 2));
        assert!(no(&parse_element_expr(&k, "3*t^2 + t^3").unwrap(), 2));
        assert!(no(&parse_element_expr(&k, "2 + t").unwrap(), 2));
        assert!(yes(&parse_element_expr(&k, "9 + t").unwrap(), 2));
    }

    #[test]
    fn witnesses_square_to_the_input() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let cfg = crate::valued_fields::SampleConfig::default();
        for name in ["Qp(3)", "Laurent(Fp(5))", "Laurent(Qp(2))"] {
            let k = parse_descriptor(name).unwrap();
            for _ in 0..60 {
                let x = crate::valued_fields::sample_nonzero(&k, &mut rng, &cfg);
                let sq = x.mul(&x).unwrap();
                let res = is_nth_power_valued(&sq, 2).unwrap();
                assert_eq!(res.decision, Decision::True, "{name}: {sq}");
                let w = res.witness.unwrap();
                assert!(w.pow(2).unwrap().sub(&sq).unwrap().is_zero(), "{name}");
            }
        }
    }

    #[test]
    fn power_class_indices_for_towers() {
        for l in [3u64, 5, 7] {
            let ql = FieldDescriptor::qp(l).unwrap();
            assert_eq!(power_class_index_valued(&ql, 2).unwrap(), 4, "Q_{l}");
            let qlt = FieldDescriptor::laurent_over(&ql, "t");
            assert_eq!(power_class_index_valued(&qlt, 2).unwrap(), 8, "Q_{l}((t))");
        }
        let q2 = FieldDescriptor::qp(2).unwrap();
        assert_eq!(power_class_index_valued(&q2, 2).unwrap(), 8);
        let ct = parse_descriptor("Laurent(C)").unwrap();
        assert_eq!(power_class_index_valued(&ct, 2).unwrap(), 2);
        let f3t = parse_descriptor("Laurent(Fp(3))").unwrap();
        assert_eq!(power_class_index_valued(&f3t, 2).unwrap(), 4);
        assert!(power_class_index_valued(&f3t, 3).is_err());
        let qt = parse_descriptor("Laurent(Q)").unwrap();
        assert!(power_class_index_valued(&qt, 2).is_err());
    }

    #[test]
    fn index_matches_sampled_class_counting() {
        // count square classes among sampled elements; must not exceed the
        // computed index and should reach it for small fields
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let cfg = crate::valued_fields::SampleConfig::default();
        for (name, expected) in [("Qp(3)", 4u64), ("Laurent(Fp(3))", 4), ("Qp(2)", 8)] {
            let k = parse_descriptor(name).unwrap();
            assert_eq!(power_class_index_valued(&k, 2).unwrap(), expected);
            let mut reps: Vec<FieldElement> = Vec::new();
            for _ in 0..300 {
                let x = crate::valued_fields::sample_nonzero(&k, &mut rng, &cfg);
                let mut fresh = true;
                for r in &reps {
                    let ratio = x.div(r).unwrap();
                    if is_nth_power_valued(&ratio, 2).unwrap().decision == Decision::True {
                        fresh = false;
                        break;
                    }
                }
                if fresh {
                    reps.push(x);
                }
            }
            assert_eq!(reps.len() as u64, expected, "{name}");
        }
    }

    #[test]
    fn hensel_batteries_pass() {
        // lifting is precision-uniform, so a reduced cap keeps the battery fast
        let prec = super::super::Precision {
            series: 12,
            digits: 24,
            denom_bound: 8,
        };
        for name in ["Qp(5)", "Laurent(Fp(3))", "Laurent(Qp(3))", "GenSeries(Q,Q)"] {
            let k = parse_descriptor(name).unwrap().with_precision(prec);
            let report = p_henselian_check(&k, 3, 41, 20).unwrap();
            assert!(report.passed(), "{name}: {:?}", report.failures);
        }
    }
}
