//! One-stop verification batteries over every module, consumed by the
//! command-line `suite` verb. Each section runs a fixed, seeded battery and
//! reports pass/fail counts with a note per failure.

use serde::Serialize;

use crate::construction::{
    check_homomorphism, check_purity, check_valuation_restriction, nondefinability_witness,
    ConstructionInstance,
};
use crate::decision::Decision;
use crate::ordered_groups::GroupShape;
use crate::residue_fields::BaseField;
use crate::solvers::{lemma_b_check, PhiZContext, Setting};
use crate::valued_fields::{
    p_henselian_check, parse_descriptor, power_class_index_valued, sample_element, BaseOrFlag,
    SampleConfig, VfError,
};
use rand::SeedableRng;

#[derive(Clone, Debug, Serialize)]
pub struct SectionReport {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    pub notes: Vec<String>,
}

impl SectionReport {
    fn new(name: &str) -> SectionReport {
        SectionReport {
            name: name.to_string(),
            passed: 0,
            failed: 0,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, note: &str) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            self.notes.push(note.to_string());
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub sections: Vec<SectionReport>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.sections.iter().all(|s| s.failed == 0)
    }
}

pub fn run_all(seed: u64, samples: usize) -> Result<SuiteReport, VfError> {
    Ok(SuiteReport {
        sections: vec![
            groups_section()?,
            power_section(seed, samples)?,
            hensel_section(seed, samples)?,
            solver_section(seed, samples)?,
            construction_section(seed, samples)?,
        ],
    })
}

fn groups_section() -> Result<SectionReport, VfError> {
    let mut sec = SectionReport::new("ordered groups");
    let table: &[(&str, bool, bool, bool)] = &[
        // shape, discrete, 2-regular, Z-group
        ("Z", true, true, true),
        ("Q", false, true, false),
        ("Z*Z", true, false, false),
        ("Z*Q", true, true, true),
        ("Q*Z", false, false, false),
        ("Z*Z*Z", true, false, false),
    ];
    for (name, disc, reg, zg) in table {
        let shape: GroupShape = name.parse()?;
        sec.check(
            (shape.is_discrete()?.is_some()) == *disc,
            &format!("{name}: discreteness"),
        );
        sec.check(shape.is_p_regular(2) == *reg, &format!("{name}: 2-regularity"));
        sec.check(shape.is_z_group()? == *zg, &format!("{name}: Z-group"));
    }
    Ok(sec)
}

fn power_section(seed: u64, samples: usize) -> Result<SectionReport, VfError> {
    let mut sec = SectionReport::new("power classes");
    for (field, p, expect) in [
        ("Fp(5)", 2u64, 2u64),
        ("Qp(5)", 2, 4),
        ("Laurent(Qp(5))", 2, 8),
        ("Qp(2)", 2, 8),
        ("Qp(3)", 3, 9),
    ] {
        let desc = parse_descriptor(field)?;
        let idx = power_class_index_valued(&desc, p)?;
        sec.check(idx == expect, &format!("{field}: index {idx} != {expect}"));
    }
    // index by direct class counting on a sampled set
    for (field, p, expect) in [("Qp(3)", 2u64, 4usize), ("Laurent(Fp(3))", 2, 4)] {
        let desc = parse_descriptor(field)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let cfg = SampleConfig::default();
        let mut reps: Vec<crate::valued_fields::FieldElement> = Vec::new();
        for _ in 0..samples.max(60) {
            let x = sample_element(&desc, &mut rng, &cfg);
            if x.is_zero() {
                continue;
            }
            let mut fresh = true;
            for r in &reps {
                let q = x.div(r)?;
                if crate::valued_fields::is_nth_power_valued(&q, p)?.decision == Decision::True {
                    fresh = false;
                    break;
                }
            }
            if fresh {
                reps.push(x);
            }
        }
        sec.check(
            reps.len() == expect,
            &format!("{field}: counted {} classes, expected {expect}", reps.len()),
        );
    }
    Ok(sec)
}

fn hensel_section(seed: u64, samples: usize) -> Result<SectionReport, VfError> {
    let mut sec = SectionReport::new("hensel lifting");
    let prec = crate::valued_fields::Precision {
        series: 12,
        digits: 24,
        denom_bound: 8,
    };
    for field in ["Qp(7)", "Laurent(Fp(3))", "Laurent(Qp(5))"] {
        let desc = parse_descriptor(field)?.with_precision(prec);
        let report = p_henselian_check(&desc, 3, seed, samples.min(20))?;
        sec.check(
            report.passed(),
            &format!("{field}: {} lift failures", report.failures.len()),
        );
    }
    Ok(sec)
}

fn solver_section(seed: u64, samples: usize) -> Result<SectionReport, VfError> {
    let mut sec = SectionReport::new("definability solvers");
    for (field, p) in [
        ("Laurent(Fp(3))", 2u64),
        ("Laurent(Fp(3))", 3),
        ("Qp(5)", 2),
        ("Qp(2)", 2),
    ] {
        let desc = parse_descriptor(field)?;
        let setting = Setting::new(&desc, desc.full_handle(), p)?;
        let ctx = PhiZContext::new(setting.clone(), seed)?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 1);
        let cfg = SampleConfig::default();
        let mut agree = true;
        let mut sufficiency = true;
        for _ in 0..samples {
            let x = sample_element(&desc, &mut rng, &cfg);
            let res = ctx.evaluate(&x)?;
            let oracle = x.is_zero() || x.valuation(desc.full_handle())?.is_nonnegative();
            if (res.decision == Decision::True) != oracle {
                agree = false;
            }
            // low-valuation sufficiency: a of negative valuation admits a^{-1}
            if !x.is_zero() && !x.valuation(desc.full_handle())?.is_nonnegative() {
                let r = lemma_b_check(&setting, &x, &x.inv()?)?;
                if r.decision != Decision::True {
                    sufficiency = false;
                }
            }
        }
        sec.check(agree, &format!("{field} p={p}: membership vs valuation"));
        sec.check(
            sufficiency,
            &format!("{field} p={p}: low-valuation sufficiency"),
        );
    }
    Ok(sec)
}

fn construction_section(seed: u64, samples: usize) -> Result<SectionReport, VfError> {
    let mut sec = SectionReport::new("two-field comparison");
    for base in [
        BaseOrFlag::Concrete(BaseField::Rationals),
        BaseOrFlag::Concrete(BaseField::prime(3)?),
    ] {
        let tag = format!("{base:?}");
        let inst = ConstructionInstance::new(base)?;
        sec.check(
            check_homomorphism(&inst, seed, samples.min(40))?.decision == Decision::True,
            &format!("{tag}: embedding"),
        );
        sec.check(
            check_valuation_restriction(&inst, seed, samples)?.decision == Decision::True,
            &format!("{tag}: valuation pullback"),
        );
        let (_, res) = nondefinability_witness(&inst)?;
        sec.check(res.decision == Decision::True, &format!("{tag}: witness"));
    }
    sec.check(
        check_purity(12)?.decision == Decision::True,
        "image lattice purity",
    );
    let audit = crate::construction::audit_transfer_hypotheses(&ConstructionInstance::new(
        BaseOrFlag::AlgClosedChar0,
    )?)?;
    sec.check(
        audit.iter().any(|l| l.contains("elementarily equivalent")),
        "transfer hypothesis audit over an algebraically closed base",
    );
    Ok(sec)
}
