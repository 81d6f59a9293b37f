//! Exact cardinality arguments: counting all transformations of a memory
//! against the number of behaviors a bounded machine-and-thread budget can
//! produce. Everything is integer-exact; the numbers involved are far too
//! large to materialize, so powers of two are compared through their
//! exponents.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use super::{TpfcError, TpfcParams};

/// An exact natural that may only be representable as a power of two with a
/// huge exponent. Comparison never materializes large powers.
#[derive(Clone, Debug)]
pub enum ExactNat {
    Value(BigUint),
    PowerOfTwo(BigUint),
}

impl ExactNat {
    pub fn value(v: impl Into<BigUint>) -> Self {
        ExactNat::Value(v.into())
    }

    pub fn pow2(exponent: impl Into<BigUint>) -> Self {
        ExactNat::PowerOfTwo(exponent.into())
    }

    /// The plain integer, if it fits in `max_bits`.
    pub fn to_biguint(&self, max_bits: u64) -> Option<BigUint> {
        match self {
            ExactNat::Value(v) => (v.bits() <= max_bits).then(|| v.clone()),
            ExactNat::PowerOfTwo(e) => {
                let e = e.to_u64()?;
                (e < max_bits).then(|| BigUint::one() << e as usize)
            }
        }
    }
}

/// `a` versus `2^e`, using only the bit length of `a` unless the power is
/// small enough to build.
fn cmp_value_pow(a: &BigUint, e: &BigUint) -> Ordering {
    let bits = BigUint::from(a.bits());
    if *e >= bits {
        // a < 2^bits(a) <= 2^e; covers a = 0 as well.
        Ordering::Less
    } else {
        let e = e.to_u64().expect("smaller than a bit count");
        a.cmp(&(BigUint::one() << e as usize))
    }
}

impl Ord for ExactNat {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExactNat::*;
        match (self, other) {
            (Value(a), Value(b)) => a.cmp(b),
            (PowerOfTwo(e), PowerOfTwo(f)) => e.cmp(f),
            (Value(a), PowerOfTwo(e)) => cmp_value_pow(a, e),
            (PowerOfTwo(e), Value(a)) => cmp_value_pow(a, e).reverse(),
        }
    }
}

impl PartialOrd for ExactNat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for ExactNat {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExactNat {}

impl fmt::Display for ExactNat {
    /// Decimal when reasonably sized, `2^e` otherwise. Both forms are exact.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_biguint(4096) {
            Some(v) => write!(f, "{v}"),
            None => match self {
                ExactNat::Value(v) => write!(f, "{v}"),
                ExactNat::PowerOfTwo(e) => write!(f, "2^{e}"),
            },
        }
    }
}

/// How many transformations a data memory of `2^aw` cells of `wl` bits
/// admits: `2^(2^(2^aw·wl+aw)·wl)`, which is the number of its states raised
/// to itself.
pub fn count_transformations(aw: u32, wl: u32) -> ExactNat {
    assert!(aw <= 20 && (1..=32).contains(&wl), "supported parameter range");
    let data_bits = (1u64 << aw) * wl as u64;
    let exponent = BigUint::from(wl) << (data_bits + aw as u64) as usize;
    ExactNat::pow2(exponent)
}

/// Exact counts showing a parameter class cannot reach every transformation
/// of the checked memory half, following one budget line at a time:
/// operations per instruction, transformations per thread, threads worth
/// distinguishing, and finally everything a full budget can achieve against
/// the total.
#[derive(Clone, Debug)]
pub struct IncompletenessCertificate {
    pub params: TpfcParams,
    /// Bits of the checked memory region.
    pub external_bits: u64,
    /// All transformations of the checked region.
    pub total: ExactNat,
    /// Operations available to one instruction when the operating unit is
    /// held to half the checked bits.
    pub per_instruction_ops: ExactNat,
    /// Transformations one thread can induce over such instructions.
    pub per_thread_bound: ExactNat,
    /// Threads within the state bound, counted by their equation shapes.
    pub thread_count_bound: BigUint,
    /// A rounder upper bound on the same count.
    pub thread_count_majorant: BigUint,
    /// Threads that can matter, by the hypothesis that internal memory
    /// cannot distinguish more.
    pub applicable_threads_bound: ExactNat,
    /// Everything achievable: per-thread transformations times applicable
    /// threads.
    pub achievable_bound: ExactNat,
    /// When the instruction and state budgets fit the counting hypotheses
    /// (`iss ≤ 2^wl − 4`, `ssb ≤ 2^(aw−2)`): whether the thread count stays
    /// under its majorant, and the majorant under the applicable-threads
    /// bound. Not every in-range parameter point satisfies the second step.
    pub thread_chain: Option<[bool; 2]>,
    /// The hypotheses of the counting argument hold: checked half only,
    /// `aw > 1`, operating unit at most half the checked bits, instruction
    /// count at most `2^(external_bits/2)`.
    pub applicable: bool,
    /// The budget falls short of the total.
    pub verdict: bool,
}

impl IncompletenessCertificate {
    /// The class is certified incomplete: hypotheses hold and the bound is
    /// strict.
    pub fn is_incomplete(&self) -> bool {
        self.applicable && self.verdict
    }
}

impl fmt::Display for IncompletenessCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        writeln!(
            f,
            "parameters: aw {} wl {} ous {} iss {} ssb {} waf {}",
            p.aw,
            p.wl,
            p.ous,
            p.iss,
            p.ssb,
            if p.waf { "T" } else { "F" }
        )?;
        writeln!(f, "external-bits: {}", self.external_bits)?;
        writeln!(f, "total-transformations: {}", self.total)?;
        writeln!(f, "per-instruction-operations: {}", self.per_instruction_ops)?;
        writeln!(f, "per-thread-transformations: {}", self.per_thread_bound)?;
        writeln!(f, "thread-count-bound: {}", self.thread_count_bound)?;
        writeln!(f, "thread-count-majorant: {}", self.thread_count_majorant)?;
        writeln!(f, "applicable-threads-bound: {}", self.applicable_threads_bound)?;
        writeln!(f, "achievable-transformations: {}", self.achievable_bound)?;
        let chain = match self.thread_chain {
            None => "outside the budget hypotheses".to_string(),
            Some(c) => format!(
                "count under majorant: {}; majorant under applicable threads: {}",
                c[0], c[1]
            ),
        };
        writeln!(f, "thread-chain: {chain}")?;
        writeln!(f, "{}", if self.is_incomplete() { "INCOMPLETE" } else { "NOT-APPLICABLE" })
    }
}

/// Evaluates the counting argument at `params`, exactly.
///
/// The count fields are computed at any valid parameter point; they certify
/// incompleteness only when `applicable` holds. Parameter domain violations
/// (zero word length, instruction count, or state bound; a free half of a
/// one-cell memory) are errors.
pub fn incompleteness_check(
    params: &TpfcParams,
) -> Result<IncompletenessCertificate, TpfcError> {
    params.validate()?;
    let p = *params;
    let ems = p.external_bits();
    let h = ems / 2;

    // ems is capped near 2^24, so 2^ems fits comfortably in memory even
    // though anything built on top of it must stay in exponent form.
    let two_ems = BigUint::one() << ems as usize;
    let total = ExactNat::pow2(BigUint::from(ems) << ems as usize);
    let per_instruction_ops = ExactNat::pow2(BigUint::from(h) << h as usize);
    let per_thread_exp = BigUint::from(h) << ems as usize;
    let per_thread_bound = ExactNat::pow2(per_thread_exp.clone());
    let achievable_bound = ExactNat::pow2(per_thread_exp + ems);
    let applicable_threads_bound = ExactNat::pow2(ems);

    let ssb = BigUint::from(p.ssb);
    let thread_count_bound =
        ((BigUint::from(p.iss) + 2u32) * &ssb * &ssb + 2u32).pow(p.ssb);
    let thread_count_majorant = ((BigUint::from(p.iss) + 4u32) * &ssb * &ssb).pow(p.ssb);

    let in_budget = p.wl >= 3
        && u64::from(p.iss) <= (1u64 << p.wl) - 4
        && p.aw >= 2
        && u64::from(p.ssb) <= 1u64 << (p.aw - 2);
    let thread_chain = in_budget.then(|| {
        [thread_count_bound <= thread_count_majorant, thread_count_majorant <= two_ems]
    });

    let applicable = p.waf
        && p.aw > 1
        && 2 * u64::from(p.ous) <= ems
        && BigUint::from(p.iss) * p.iss <= two_ems;
    let verdict = achievable_bound < total;

    Ok(IncompletenessCertificate {
        params: p,
        external_bits: ems,
        total,
        per_instruction_ops,
        per_thread_bound,
        thread_count_bound,
        thread_count_majorant,
        applicable_threads_bound,
        achievable_bound,
        thread_chain,
        applicable,
        verdict,
    })
}
