//! Precision-tracked arithmetic in p-adic fields, Laurent-series towers and
//! finite-support generalized power series, plus valuations, residues and
//! Hensel lifting.
//!
//! A field is described by a base field plus an ordered list of layers,
//! innermost first. Each layer contributes one factor to the value group of
//! the full rank-k valuation; the composite shape lists factors innermost
//! first, so the outermost layer is the dominant (last) factor, matching the
//! `ordered_groups` convention. The named henselian valuations v_1..v_k are
//! the successive coarsenings: v_j sees the outermost j layers only.

pub(crate) mod element;
mod hensel;
mod parse;
mod power;
mod sample;

pub use element::{FieldElement, SparseRepr};
pub use hensel::{hensel_lift, newton_lift, HenselLog, Poly};
pub use power::{
    is_nth_power_valued, p_henselian_check, power_class_index_valued, PHenselianReport,
};
pub use sample::{sample_element, sample_integral, sample_nonzero, SampleConfig};

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::ordered_groups::{Factor, GroupError, GroupShape};
use crate::residue_fields::{BaseField, FieldError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VfError {
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("element has negative valuation, no residue")]
    NegativeValuation,
    #[error("element belongs to a different field")]
    DescriptorMismatch,
    #[error("the residue root is not simple")]
    NonSimpleRoot,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid valuation level {0} for a rank-{1} tower")]
    BadLevel(usize, usize),
    #[error(transparent)]
    Base(#[from] FieldError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Precision caps. Every element carries absolute precision bounds that
/// arithmetic propagates pessimistically; these caps bound how far decision
/// operations escalate before returning `Indeterminate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Precision {
    /// absolute series precision per layer (element known modulo var^series)
    pub series: i64,
    /// p-adic digit precision
    pub digits: i64,
    /// denominator bound for generalized-series exponents
    pub denom_bound: u32,
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            series: 64,
            digits: 64,
            denom_bound: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum LayerKind {
    /// p-adic completion; only valid as the innermost layer over Q.
    Completion(u64),
    /// Laurent-series layer, exponent group Z.
    SeriesZ,
    /// generalized-series layer, exponent group Q (finite support,
    /// denominators bounded by the precision configuration).
    SeriesQ,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Layer {
    pub kind: LayerKind,
    pub var: String,
}

/// Base of a tower: a concrete field or the algebraically-closed flag.
/// Algebraically closed residue fields are never represented by elements;
/// they only steer predicate behavior (every element an n-th power, char 0).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum BaseOrFlag {
    Concrete(BaseField),
    AlgClosedChar0,
}

impl BaseOrFlag {
    pub fn characteristic(&self) -> u64 {
        match self {
            BaseOrFlag::Concrete(f) => f.characteristic(),
            BaseOrFlag::AlgClosedChar0 => 0,
        }
    }
}

/// Recursive description of a field: base plus series/completion layers
/// (innermost first) and the precision configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDescriptor {
    base: BaseOrFlag,
    layers: Vec<Layer>,
    prec: Precision,
}

impl FieldDescriptor {
    pub fn new(base: BaseOrFlag, layers: Vec<Layer>, prec: Precision) -> Result<Arc<Self>, VfError> {
        for (i, layer) in layers.iter().enumerate() {
            if let LayerKind::Completion(p) = layer.kind {
                if i != 0 || base != BaseOrFlag::Concrete(BaseField::Rationals) {
                    return Err(VfError::Unsupported(
                        "completion layers are only supported innermost over Q".into(),
                    ));
                }
                if !crate::residue_fields::is_prime(p) {
                    return Err(VfError::Base(FieldError::NotPrime(p)));
                }
            }
        }
        Ok(Arc::new(FieldDescriptor { base, layers, prec }))
    }

    pub fn base_field(base: BaseField) -> Arc<Self> {
        Self::new(BaseOrFlag::Concrete(base), vec![], Precision::default()).unwrap()
    }

    pub fn qp(p: u64) -> Result<Arc<Self>, VfError> {
        Self::new(
            BaseOrFlag::Concrete(BaseField::Rationals),
            vec![Layer {
                kind: LayerKind::Completion(p),
                var: format!("{p}"),
            }],
            Precision::default(),
        )
    }

    /// F((var)) over an existing descriptor.
    pub fn laurent_over(inner: &Arc<Self>, var: &str) -> Arc<Self> {
        let mut layers = inner.layers.clone();
        layers.push(Layer {
            kind: LayerKind::SeriesZ,
            var: var.to_string(),
        });
        Arc::new(FieldDescriptor {
            base: inner.base.clone(),
            layers,
            prec: inner.prec,
        })
    }

    pub fn gen_series_over(inner: &Arc<Self>, var: &str) -> Arc<Self> {
        let mut layers = inner.layers.clone();
        layers.push(Layer {
            kind: LayerKind::SeriesQ,
            var: var.to_string(),
        });
        Arc::new(FieldDescriptor {
            base: inner.base.clone(),
            layers,
            prec: inner.prec,
        })
    }

    pub fn with_precision(self: &Arc<Self>, prec: Precision) -> Arc<Self> {
        Arc::new(FieldDescriptor {
            base: self.base.clone(),
            layers: self.layers.clone(),
            prec,
        })
    }

    pub fn base(&self) -> &BaseOrFlag {
        &self.base
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn precision(&self) -> &Precision {
        &self.prec
    }

    /// Number of nontrivial valuation levels (= number of layers).
    pub fn num_levels(&self) -> usize {
        self.layers.len()
    }

    pub fn characteristic(&self) -> u64 {
        if self.layers.iter().any(|l| matches!(l.kind, LayerKind::Completion(_))) {
            0
        } else {
            self.base.characteristic()
        }
    }

    /// Value-group shape of the full rank-k valuation: one factor per layer,
    /// innermost first (so the outermost layer dominates).
    pub fn full_shape(&self) -> GroupShape {
        GroupShape::new(
            self.layers
                .iter()
                .map(|l| match l.kind {
                    LayerKind::Completion(_) | LayerKind::SeriesZ => Factor::Z,
                    LayerKind::SeriesQ => Factor::Q,
                })
                .collect(),
        )
    }

    /// Value-group shape of the coarsening v_j (outermost j factors).
    pub fn shape_at(&self, handle: ValuationHandle) -> GroupShape {
        let k = self.num_levels();
        GroupShape::new(self.full_shape().factors()[k - handle.level..].to_vec())
    }

    /// Residue field of v_j, as a descriptor: strip the outermost j layers.
    /// At j = k an innermost completion layer leaves the prime field F_p.
    pub fn residue_descriptor(&self, handle: ValuationHandle) -> Result<Arc<Self>, VfError> {
        let k = self.num_levels();
        let j = handle.level;
        if j == 0 || j > k {
            return Err(VfError::BadLevel(j, k));
        }
        let remaining = &self.layers[..k - j];
        if let Some(Layer {
            kind: LayerKind::Completion(p),
            ..
        }) = remaining.last()
        {
            // handle peels down to (but not through) the completion only at j = k
            let _ = p;
        }
        if remaining.is_empty() {
            if let Some(Layer {
                kind: LayerKind::Completion(p),
                ..
            }) = self.layers.first()
            {
                return Ok(Arc::new(FieldDescriptor {
                    base: BaseOrFlag::Concrete(BaseField::Prime(*p)),
                    layers: vec![],
                    prec: self.prec,
                }));
            }
            return Ok(Arc::new(FieldDescriptor {
                base: self.base.clone(),
                layers: vec![],
                prec: self.prec,
            }));
        }
        Ok(Arc::new(FieldDescriptor {
            base: self.base.clone(),
            layers: remaining.to_vec(),
            prec: self.prec,
        }))
    }

    /// Residue field of the full (finest) valuation.
    pub fn final_residue(&self) -> BaseOrFlag {
        if let Some(Layer {
            kind: LayerKind::Completion(p),
            ..
        }) = self.layers.first()
        {
            BaseOrFlag::Concrete(BaseField::Prime(*p))
        } else {
            self.base.clone()
        }
    }

    pub fn full_handle(&self) -> ValuationHandle {
        ValuationHandle {
            level: self.num_levels(),
        }
    }

    pub fn handle(&self, level: usize) -> Result<ValuationHandle, VfError> {
        if level == 0 || level > self.num_levels() {
            return Err(VfError::BadLevel(level, self.num_levels()));
        }
        Ok(ValuationHandle { level })
    }

    /// Whether a primitive p-th root of unity lies in the field.
    pub fn has_zeta(&self, p: u64) -> bool {
        if p == 2 {
            return true;
        }
        match self.final_residue() {
            BaseOrFlag::AlgClosedChar0 => true,
            BaseOrFlag::Concrete(f) => match f.order() {
                // tame henselian towers lift the roots of unity of the residue field
                Some(q) => q % p == 1 || f.characteristic() == p,
                None => false, // Q contains no odd zeta_p
            },
        }
    }
}

impl fmt::Display for FieldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = match &self.base {
            BaseOrFlag::Concrete(b) => b.to_string(),
            BaseOrFlag::AlgClosedChar0 => "C".to_string(),
        };
        for layer in &self.layers {
            s = match layer.kind {
                LayerKind::Completion(p) => format!("Qp({p})"),
                LayerKind::SeriesZ => format!("Laurent({s})"),
                LayerKind::SeriesQ => format!("GenSeries(Q,{s})"),
            };
        }
        write!(f, "{s}")
    }
}

/// Selects one of the named henselian valuations v_1..v_k of a tower
/// (v_1 coarsest, v_k the full composite valuation).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ValuationHandle {
    pub level: usize,
}

pub use parse::{parse_descriptor, parse_element_expr};
