//! Newton–Hensel root refinement with a per-step residual log.

use std::sync::Arc;

use serde::Serialize;

use super::element::FieldElement;
use super::{FieldDescriptor, ValuationHandle, VfError};
use crate::ordered_groups::GroupElement;

/// Polynomial over a tower field, coefficients in ascending degree.
#[derive(Clone, Debug)]
pub struct Poly {
    coeffs: Vec<FieldElement>,
}

impl Poly {
    pub fn new(coeffs: Vec<FieldElement>) -> Poly {
        Poly { coeffs }
    }

    /// Y^n - c
    pub fn nth_power_minus(desc: &Arc<FieldDescriptor>, n: u64, c: &FieldElement) -> Poly {
        let mut coeffs = vec![FieldElement::zero(desc); n as usize + 1];
        coeffs[0] = c.neg();
        coeffs[n as usize] = FieldElement::one(desc);
        Poly { coeffs }
    }

    /// Y^p - Y - c
    pub fn artin_schreier(desc: &Arc<FieldDescriptor>, p: u64, c: &FieldElement) -> Poly {
        let mut coeffs = vec![FieldElement::zero(desc); p as usize + 1];
        coeffs[0] = c.neg();
        coeffs[1] = FieldElement::from_i64(desc, -1);
        coeffs[p as usize] = FieldElement::one(desc);
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn eval(&self, x: &FieldElement) -> Result<FieldElement, VfError> {
        let desc = x.descriptor();
        let mut acc = FieldElement::zero(desc);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x)?.add(c)?;
        }
        Ok(acc)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly {
                coeffs: self
                    .coeffs
                    .first()
                    .map(|c| vec![FieldElement::zero(c.descriptor())])
                    .unwrap_or_default(),
            };
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| {
                let deg = FieldElement::from_i64(c.descriptor(), i as i64);
                c.mul(&deg).expect("same field")
            })
            .collect();
        Poly { coeffs }
    }
}

/// One Newton step: residual valuations before the update.
#[derive(Clone, Debug, Serialize)]
pub struct HenselStep {
    /// v(f(a)) at the lifting valuation, as coordinate strings
    pub residual: Vec<String>,
    pub iteration: usize,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct HenselLog {
    pub steps: Vec<HenselStep>,
    /// true when the final residual vanished at working precision
    pub converged_to_zero: bool,
}

fn record(log: &mut HenselLog, iteration: usize, v: &GroupElement) {
    log.steps.push(HenselStep {
        residual: v.coords().iter().map(|c| c.to_string()).collect(),
        iteration,
    });
}

/// Newton iteration under the strong hypothesis v(f(a)) > 2 v(f'(a)) at the
/// given valuation. Residual valuations are logged each step; the gain over
/// 2 v(f'(a)) at least doubles per iteration.
pub fn newton_lift(
    f: &Poly,
    handle: ValuationHandle,
    start: &FieldElement,
) -> Result<(FieldElement, HenselLog), VfError> {
    let df = f.derivative();
    let mut a = start.clone();
    let mut log = HenselLog::default();

    let fa0 = f.eval(&a)?;
    if !fa0.is_zero() {
        let vf = fa0.valuation(handle)?;
        let dfa0 = df.eval(&a)?;
        if dfa0.is_zero() {
            return Err(VfError::NonSimpleRoot);
        }
        let vdf = dfa0.valuation(handle)?;
        let twice = vdf.scalar_mul(2);
        if vf.cmp_elem(&twice)? != std::cmp::Ordering::Greater {
            return Err(VfError::NonSimpleRoot);
        }
    }

    for iteration in 0..200 {
        let fa = f.eval(&a)?;
        if fa.is_zero() {
            log.converged_to_zero = true;
            return Ok((a, log));
        }
        record(&mut log, iteration, &fa.valuation(handle)?);
        let dfa = df.eval(&a)?;
        a = a.sub(&fa.div(&dfa)?)?;
    }
    // residual stopped reaching working precision; accept the refinement if
    // it at least stopped moving
    Err(VfError::InsufficientPrecision(
        "newton iteration did not reach working precision".into(),
    ))
}

/// Classic form: start is a unit-derivative approximate root
/// (v(f(a)) > 0, v(f'(a)) = 0).
pub fn hensel_lift(
    f: &Poly,
    handle: ValuationHandle,
    start: &FieldElement,
) -> Result<(FieldElement, HenselLog), VfError> {
    let fa = f.eval(start)?;
    if !fa.is_zero() {
        if !fa.valuation(handle)?.is_positive_elem() {
            return Err(VfError::NonSimpleRoot);
        }
        let dfa = f.derivative().eval(start)?;
        if dfa.is_zero() || !dfa.valuation(handle)?.is_zero() {
            return Err(VfError::NonSimpleRoot);
        }
    }
    newton_lift(f, handle, start)
}
