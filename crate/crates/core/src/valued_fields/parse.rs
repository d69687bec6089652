//! Text forms for field descriptors and element expressions.
//!
//! Descriptors: `Q`, `Fp(5)`, `Fq(9)`, `C`, `Qp(5)`, `Laurent(inner)`,
//! `Laurent(inner,var)`, `GenSeries(Q,inner)`, `GenSeries(Q,inner,var)`.
//! Series layers without an explicit variable get `t`, `s`, `u`, `w`, ...
//! innermost first.
//!
//! Element expressions are sums of products of factors, e.g.
//! `2*t^-3 + 1/2 + x^(1/2)*t^2`. A factor is an integer, a layer variable
//! with an optional integer or parenthesized rational exponent, or a
//! parenthesized subexpression; `/` divides.

use std::sync::Arc;

use num::{BigInt, BigRational};

use super::element::FieldElement;
use super::{BaseOrFlag, FieldDescriptor, LayerKind, Precision, VfError};
use crate::residue_fields::BaseField;

const DEFAULT_VARS: &[&str] = &["t", "s", "u", "w", "r", "m"];

pub fn parse_descriptor(input: &str) -> Result<Arc<FieldDescriptor>, VfError> {
    let (desc, rest) = parse_desc_inner(input.trim())?;
    if !rest.trim().is_empty() {
        return Err(VfError::Parse(format!(
            "trailing input after descriptor: {rest:?}"
        )));
    }
    // assign default variable names to anonymous series layers
    let mut taken: Vec<String> = desc
        .layers
        .iter()
        .filter(|l| !l.var.is_empty())
        .map(|l| l.var.clone())
        .collect();
    let mut layers = desc.layers.clone();
    for layer in layers.iter_mut() {
        if layer.var.is_empty() {
            if let LayerKind::Completion(p) = layer.kind {
                layer.var = p.to_string();
                continue;
            }
            let var = DEFAULT_VARS
                .iter()
                .find(|v| !taken.iter().any(|t| t == *v))
                .ok_or_else(|| VfError::Parse("too many anonymous series layers".into()))?;
            layer.var = var.to_string();
            taken.push(layer.var.clone());
        }
    }
    FieldDescriptor::new(desc.base.clone(), layers, Precision::default())
}

struct RawDesc {
    base: BaseOrFlag,
    layers: Vec<super::Layer>,
}

fn parse_desc_inner(input: &str) -> Result<(RawDesc, &str), VfError> {
    let input = input.trim_start();
    let err = |m: &str| VfError::Parse(m.to_string());
    if let Some(rest) = input.strip_prefix("Laurent(") {
        let (inner, rest) = parse_desc_inner(rest)?;
        let (var, rest) = parse_opt_var(rest)?;
        let rest = expect(rest, ')')?;
        let mut d = inner;
        d.layers.push(super::Layer {
            kind: LayerKind::SeriesZ,
            var,
        });
        return Ok((d, rest));
    }
    if let Some(rest) = input.strip_prefix("GenSeries(Q,") {
        let (inner, rest) = parse_desc_inner(rest)?;
        let (var, rest) = parse_opt_var(rest)?;
        let rest = expect(rest, ')')?;
        let mut d = inner;
        d.layers.push(super::Layer {
            kind: LayerKind::SeriesQ,
            var,
        });
        return Ok((d, rest));
    }
    if let Some(rest) = input.strip_prefix("Qp(") {
        let (p, rest) = parse_u64(rest)?;
        let rest = expect(rest, ')')?;
        return Ok((
            RawDesc {
                base: BaseOrFlag::Concrete(BaseField::Rationals),
                layers: vec![super::Layer {
                    kind: LayerKind::Completion(p),
                    var: p.to_string(),
                }],
            },
            rest,
        ));
    }
    if let Some(rest) = input.strip_prefix("Fp(") {
        let (p, rest) = parse_u64(rest)?;
        let rest = expect(rest, ')')?;
        return Ok((
            RawDesc {
                base: BaseOrFlag::Concrete(BaseField::prime(p)?),
                layers: vec![],
            },
            rest,
        ));
    }
    if let Some(rest) = input.strip_prefix("Fq(") {
        let (q, rest) = parse_u64(rest)?;
        let rest = expect(rest, ')')?;
        return Ok((
            RawDesc {
                base: BaseOrFlag::Concrete(BaseField::finite(q)?),
                layers: vec![],
            },
            rest,
        ));
    }
    if let Some(rest) = input.strip_prefix('Q') {
        if !rest.starts_with(|c: char| c.is_alphanumeric()) {
            return Ok((
                RawDesc {
                    base: BaseOrFlag::Concrete(BaseField::Rationals),
                    layers: vec![],
                },
                rest,
            ));
        }
    }
    if let Some(rest) = input.strip_prefix('C') {
        if !rest.starts_with(|c: char| c.is_alphanumeric()) {
            return Ok((
                RawDesc {
                    base: BaseOrFlag::AlgClosedChar0,
                    layers: vec![],
                },
                rest,
            ));
        }
    }
    Err(err(&format!("unrecognized descriptor at {input:?}")))
}

fn parse_opt_var(input: &str) -> Result<(String, &str), VfError> {
    let input = input.trim_start();
    if let Some(rest) = input.strip_prefix(',') {
        let rest = rest.trim_start();
        let end = rest
            .find(|c: char| !c.is_alphanumeric() && c != '_')
            .unwrap_or(rest.len());
        if end == 0 {
            return Err(VfError::Parse("expected a variable name after ','".into()));
        }
        Ok((rest[..end].to_string(), &rest[end..]))
    } else {
        Ok((String::new(), input))
    }
}

fn parse_u64(input: &str) -> Result<(u64, &str), VfError> {
    let input = input.trim_start();
    let end = input
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(input.len());
    input[..end]
        .parse::<u64>()
        .map(|n| (n, &input[end..]))
        .map_err(|_| VfError::Parse(format!("expected a number at {input:?}")))
}

fn expect(input: &str, c: char) -> Result<&str, VfError> {
    let input = input.trim_start();
    input
        .strip_prefix(c)
        .ok_or_else(|| VfError::Parse(format!("expected {c:?} at {input:?}")))
}

struct ExprParser<'a> {
    src: &'a str,
    pos: usize,
    desc: &'a Arc<FieldDescriptor>,
}

impl<'a> ExprParser<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn error(&self, msg: &str) -> VfError {
        VfError::Parse(format!("{msg} at byte {} ({:?})", self.pos, self.rest()))
    }

    fn parse_expr(&mut self) -> Result<FieldElement, VfError> {
        let mut acc = if self.eat('-') {
            self.parse_term()?.neg()
        } else {
            self.parse_term()?
        };
        loop {
            if self.eat('+') {
                acc = acc.add(&self.parse_term()?)?;
            } else if self.eat('-') {
                acc = acc.sub(&self.parse_term()?)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_term(&mut self) -> Result<FieldElement, VfError> {
        let mut acc = self.parse_factor()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(&self.parse_factor()?)?;
            } else if self.eat('/') {
                acc = acc.div(&self.parse_factor()?)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn parse_factor(&mut self) -> Result<FieldElement, VfError> {
        self.skip_ws();
        let rest = self.rest();
        if let Some(c) = rest.chars().next() {
            if c.is_ascii_digit() {
                let n = self.parse_integer()?;
                let base = FieldElement::from_rational(
                    self.desc,
                    &BigRational::from_integer(n),
                )?;
                return self.maybe_power(base);
            }
            if c.is_alphabetic() || c == '_' {
                let name = self.parse_ident();
                let idx = self
                    .desc
                    .layers()
                    .iter()
                    .position(|l| l.var == name)
                    .ok_or_else(|| self.error(&format!("unknown variable {name:?}")))?;
                let e = if self.eat('^') {
                    self.parse_exponent()?
                } else {
                    BigRational::from_integer(BigInt::from(1))
                };
                return FieldElement::layer_monomial(self.desc, idx, &e);
            }
            if c == '(' {
                self.eat('(');
                let inner = self.parse_expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                return self.maybe_power(inner);
            }
        }
        Err(self.error("expected a factor"))
    }

    fn maybe_power(&mut self, base: FieldElement) -> Result<FieldElement, VfError> {
        if !self.eat('^') {
            return Ok(base);
        }
        let e = self.parse_exponent()?;
        if !e.is_integer() {
            return Err(self.error("fractional exponents only apply to layer variables"));
        }
        let e: i64 = (&e.to_integer())
            .try_into()
            .map_err(|_| self.error("exponent out of range"))?;
        if e >= 0 {
            base.pow(e as u64)
        } else {
            base.inv()?.pow((-e) as u64)
        }
    }

    /// Integer, or `(a/b)` with optional signs.
    fn parse_exponent(&mut self) -> Result<BigRational, VfError> {
        self.skip_ws();
        if self.eat('(') {
            let neg = self.eat('-');
            let n = self.parse_integer()?;
            let n = if neg { -n } else { n };
            let r = if self.eat('/') {
                let d = self.parse_integer()?;
                if d.bits() == 0 {
                    return Err(self.error("zero denominator"));
                }
                BigRational::new(n, d)
            } else {
                BigRational::from_integer(n)
            };
            if !self.eat(')') {
                return Err(self.error("expected ')' closing the exponent"));
            }
            Ok(r)
        } else {
            let neg = self.eat('-');
            let n = self.parse_integer()?;
            Ok(BigRational::from_integer(if neg { -n } else { n }))
        }
    }

    fn parse_integer(&mut self) -> Result<BigInt, VfError> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(rest.len());
        if end == 0 {
            return Err(self.error("expected a number"));
        }
        let n: BigInt = rest[..end].parse().unwrap();
        self.pos += end;
        Ok(n)
    }

    fn parse_ident(&mut self) -> String {
        self.skip_ws();
        let rest = self.rest();
        let end = rest
            .find(|c: char| !c.is_alphanumeric() && c != '_')
            .unwrap_or(rest.len());
        let name = rest[..end].to_string();
        self.pos += end;
        name
    }
}

pub fn parse_element_expr(
    desc: &Arc<FieldDescriptor>,
    input: &str,
) -> Result<FieldElement, VfError> {
    let mut p = ExprParser {
        src: input,
        pos: 0,
        desc,
    };
    let elem = p.parse_expr()?;
    p.skip_ws();
    if !p.rest().is_empty() {
        return Err(p.error("trailing input"));
    }
    Ok(elem)
}
