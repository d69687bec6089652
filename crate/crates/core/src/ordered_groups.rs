//! Finite-rank ordered abelian groups built as lexicographic products of Z
//! and Q factors, with exact rational coordinates.
//!
//! Convention: the product is inverse lexicographic and the LAST listed
//! factor dominates comparison. So in the shape `Z*Q` the second (Q) factor
//! decides order first. This is the convention under which the outer series
//! variable of a tower dominates the value of a monomial; the witness checks
//! in `construction` pin it down.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("shape mismatch: {0} vs {1}")]
    ShapeMismatch(String, String),
    #[error("coordinate {0} of a Z factor is not an integer")]
    NotInteger(usize),
    #[error("operation requires a nontrivial group")]
    TrivialGroup,
    #[error("generators are linearly dependent")]
    DependentGenerators,
    #[error("unsupported shape for this operation: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Factor {
    Z,
    Q,
}

/// Shape of a finite-rank lexicographic product. Rank 0 is the trivial group.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupShape {
    factors: Vec<Factor>,
}

impl GroupShape {
    pub fn new(factors: Vec<Factor>) -> Self {
        GroupShape { factors }
    }

    pub fn trivial() -> Self {
        GroupShape { factors: vec![] }
    }

    pub fn z() -> Self {
        GroupShape::new(vec![Factor::Z])
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn is_trivial(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement {
            shape: self.clone(),
            coords: vec![BigRational::zero(); self.rank()],
        }
    }

    pub fn element(&self, coords: Vec<BigRational>) -> Result<GroupElement, GroupError> {
        if coords.len() != self.rank() {
            return Err(GroupError::ShapeMismatch(
                self.to_string(),
                format!("{} coordinates", coords.len()),
            ));
        }
        for (i, (f, c)) in self.factors.iter().zip(&coords).enumerate() {
            if *f == Factor::Z && !c.is_integer() {
                return Err(GroupError::NotInteger(i));
            }
        }
        Ok(GroupElement {
            shape: self.clone(),
            coords,
        })
    }

    pub fn element_from_i64(&self, coords: &[i64]) -> Result<GroupElement, GroupError> {
        self.element(
            coords
                .iter()
                .map(|&c| BigRational::from_integer(BigInt::from(c)))
                .collect(),
        )
    }

    /// Indices j = 0..=rank, each denoting the convex subgroup generated by
    /// the first j factors.
    pub fn convex_subgroups(&self) -> Vec<usize> {
        (0..=self.rank()).collect()
    }

    /// Whether the group has a smallest positive element; returns it when so.
    /// Under the last-dominant order this holds iff the first factor is Z.
    pub fn is_discrete(&self) -> Result<Option<GroupElement>, GroupError> {
        if self.is_trivial() {
            return Err(GroupError::TrivialGroup);
        }
        if self.factors[0] == Factor::Z {
            let mut coords = vec![BigRational::zero(); self.rank()];
            coords[0] = BigRational::one();
            Ok(Some(GroupElement {
                shape: self.clone(),
                coords,
            }))
        } else {
            Ok(None)
        }
    }

    /// Every quotient by a nontrivial convex subgroup is p-divisible.
    /// The quotient by the first j factors (j >= 1) is the product of the
    /// remaining factors, which is p-divisible iff they are all Q.
    pub fn is_p_regular(&self, _p: u64) -> bool {
        self.factors.iter().skip(1).all(|f| *f == Factor::Q)
    }

    pub fn is_regular(&self) -> bool {
        // for Z/Q lexicographic shapes p-regularity does not depend on p
        self.is_p_regular(2)
    }

    pub fn is_z_group(&self) -> Result<bool, GroupError> {
        Ok(self.is_discrete()?.is_some() && self.is_regular())
    }

    /// Some proper convex subgroup H has regular quotient. For nontrivial
    /// finite-rank shapes this always holds (the top factor is archimedean).
    pub fn has_regular_quotient(&self) -> bool {
        if self.is_trivial() {
            return false;
        }
        (0..self.rank()).any(|j| {
            // quotient = factors j.., regular iff all but its first are Q
            self.factors.iter().skip(j + 1).all(|f| *f == Factor::Q)
        })
    }
}

impl fmt::Display for GroupShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let parts: Vec<&str> = self
            .factors
            .iter()
            .map(|k| match k {
                Factor::Z => "Z",
                Factor::Q => "Q",
            })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

impl FromStr for GroupShape {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned == "0" {
            return Ok(GroupShape::trivial());
        }
        let mut factors = Vec::new();
        for part in cleaned.split('*') {
            match part {
                "Z" => factors.push(Factor::Z),
                "Q" => factors.push(Factor::Q),
                other => return Err(GroupError::Parse(format!("unknown factor {other:?}"))),
            }
        }
        Ok(GroupShape::new(factors))
    }
}

/// A point of a lexicographic product, one exact rational per factor
/// (integer-valued where the factor is Z).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement {
    shape: GroupShape,
    coords: Vec<BigRational>,
}

impl GroupElement {
    pub fn shape(&self) -> &GroupShape {
        &self.shape
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    fn check_shape(&self, other: &GroupElement) -> Result<(), GroupError> {
        if self.shape != other.shape {
            return Err(GroupError::ShapeMismatch(
                self.shape.to_string(),
                other.shape.to_string(),
            ));
        }
        Ok(())
    }

    /// Total order: scan coordinates from last to first, the first nonzero
    /// difference decides.
    pub fn cmp_elem(&self, other: &GroupElement) -> Result<Ordering, GroupError> {
        self.check_shape(other)?;
        for (a, b) in self.coords.iter().rev().zip(other.coords.iter().rev()) {
            match a.cmp(b) {
                Ordering::Equal => continue,
                ord => return Ok(ord),
            }
        }
        Ok(Ordering::Equal)
    }

    pub fn is_positive_elem(&self) -> bool {
        self.cmp_elem(&self.shape.zero()).unwrap() == Ordering::Greater
    }

    pub fn is_nonnegative(&self) -> bool {
        self.cmp_elem(&self.shape.zero()).unwrap() != Ordering::Less
    }

    pub fn add(&self, other: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check_shape(other)?;
        Ok(GroupElement {
            shape: self.shape.clone(),
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn neg(&self) -> GroupElement {
        GroupElement {
            shape: self.shape.clone(),
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    pub fn sub(&self, other: &GroupElement) -> Result<GroupElement, GroupError> {
        self.add(&other.neg())
    }

    pub fn scalar_mul(&self, n: i64) -> GroupElement {
        let n = BigRational::from_integer(BigInt::from(n));
        GroupElement {
            shape: self.shape.clone(),
            coords: self.coords.iter().map(|c| c * &n).collect(),
        }
    }

    /// Returns d with n*d = self when such d exists in the group.
    /// In a Q factor division always succeeds; in a Z factor the coordinate
    /// must be divisible by n.
    pub fn divide_by(&self, n: u64) -> Option<GroupElement> {
        assert!(n >= 1);
        let n = BigRational::from_integer(BigInt::from(n));
        let mut coords = Vec::with_capacity(self.coords.len());
        for (f, c) in self.shape.factors.iter().zip(&self.coords) {
            let d = c / &n;
            if *f == Factor::Z && !d.is_integer() {
                return None;
            }
            coords.push(d);
        }
        Some(GroupElement {
            shape: self.shape.clone(),
            coords,
        })
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coords.len() == 1 {
            return write!(f, "{}", self.coords[0]);
        }
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Parse an element like "(1,-2)" or "3/2" (rank 1) against a shape.
pub fn parse_element(shape: &GroupShape, s: &str) -> Result<GroupElement, GroupError> {
    let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = cleaned
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .unwrap_or(&cleaned);
    let coords: Result<Vec<BigRational>, GroupError> = if inner.is_empty() {
        Ok(vec![])
    } else {
        inner
            .split(',')
            .map(|part| {
                BigRational::from_str(part)
                    .map_err(|e| GroupError::Parse(format!("bad coordinate {part:?}: {e}")))
            })
            .collect()
    };
    shape.element(coords?)
}

// ---------------------------------------------------------------------------
// Purity of sublattices via the Smith normal form.

/// Invariant factors of an integer matrix (rows are generators).
fn smith_invariant_factors(mut m: Vec<Vec<BigInt>>) -> Vec<BigInt> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut factors = Vec::new();
    let mut top = 0usize;
    let mut left = 0usize;
    while top < rows && left < cols {
        // find a pivot of minimal nonzero absolute value
        let mut pivot: Option<(usize, usize)> = None;
        for i in top..rows {
            for j in left..cols {
                if !m[i][j].is_zero()
                    && pivot
                        .map(|(pi, pj)| m[i][j].abs() < m[pi][pj].abs())
                        .unwrap_or(true)
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        m.swap(top, pi);
        for row in m.iter_mut() {
            row.swap(left, pj);
        }
        // clear the pivot row and column
        let mut dirty = true;
        while dirty {
            dirty = false;
            for i in (top + 1)..rows {
                if !m[i][left].is_zero() {
                    let q = &m[i][left] / &m[top][left];
                    for j in left..cols {
                        let t = &m[top][j] * &q;
                        m[i][j] -= t;
                    }
                    if !m[i][left].is_zero() {
                        m.swap(top, i);
                        dirty = true;
                    }
                }
            }
            for j in (left + 1)..cols {
                if !m[top][j].is_zero() {
                    let q = &m[top][j] / &m[top][left];
                    for i in top..rows {
                        let t = &m[i][left] * &q;
                        m[i][j] -= t;
                    }
                    if !m[top][j].is_zero() {
                        for row in m.iter_mut() {
                            row.swap(left, j);
                        }
                        dirty = true;
                    }
                }
            }
        }
        factors.push(m[top][left].abs());
        top += 1;
        left += 1;
    }
    factors
}

/// Check that the sublattice spanned by `gens` is n-pure in the ambient
/// lattice for every 1 <= n <= n_max: every ambient element that is
/// n-divisible in the ambient and lies in the span is n-divisible within the
/// span. Requires integer coordinates and a Z ambient (Q factors must be
/// cleared to a lattice slice before calling).
pub fn is_pure_sublattice(
    gens: &[GroupElement],
    ambient: &GroupShape,
    n_max: u64,
) -> Result<bool, GroupError> {
    if gens.is_empty() {
        return Ok(true); // vacuously pure
    }
    if ambient.factors().iter().any(|f| *f == Factor::Q) {
        return Err(GroupError::Unsupported(
            "purity testing requires an all-Z ambient lattice".into(),
        ));
    }
    let mut matrix = Vec::with_capacity(gens.len());
    for g in gens {
        if g.shape() != ambient {
            return Err(GroupError::ShapeMismatch(
                ambient.to_string(),
                g.shape().to_string(),
            ));
        }
        matrix.push(
            g.coords()
                .iter()
                .map(|c| {
                    debug_assert!(c.is_integer());
                    c.to_integer()
                })
                .collect::<Vec<BigInt>>(),
        );
    }
    let factors = smith_invariant_factors(matrix);
    if factors.len() < gens.len() || factors.iter().any(|d| d.is_zero()) {
        return Err(GroupError::DependentGenerators);
    }
    // the span is n-pure iff no invariant factor shares a divisor with n
    for n in 1..=n_max {
        let n = BigInt::from(n);
        for d in &factors {
            if num::Integer::gcd(d, &n) > BigInt::one() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// As `is_pure_sublattice` but reports the smallest n witnessing impurity.
pub fn purity_defect(
    gens: &[GroupElement],
    ambient: &GroupShape,
    n_max: u64,
) -> Result<Option<u64>, GroupError> {
    if gens.is_empty() {
        return Ok(None);
    }
    for n in 1..=n_max {
        if !is_pure_sublattice(gens, ambient, n)? {
            return Ok(Some(n));
        }
    }
    Ok(None)
}
