//! Exact rational scalars and the extended value lattice used for
//! delivery-time results.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::fmt;

/// Workhorse scalar. Every analytic quantity in this crate is a `Rat`;
/// floating point appears only at the Gaussian-to-deterministic boundary.
pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rint(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

pub fn rat_u(num: u64, den: u64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Delivery time per bit, extended with the value taken when a user is
/// unreachable. `Unbounded` compares greater than every finite value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum Dtb {
    Finite(Rat),
    Unbounded,
}

impl Dtb {
    pub fn finite(&self) -> Option<&Rat> {
        match self {
            Dtb::Finite(r) => Some(r),
            Dtb::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Dtb::Unbounded)
    }

    /// Reduced numerator/denominator pair; the unreachable value is
    /// rendered as 1/0.
    pub fn num_den(&self) -> (BigInt, BigInt) {
        match self {
            Dtb::Finite(r) => (r.numer().clone(), r.denom().clone()),
            Dtb::Unbounded => (BigInt::one(), BigInt::zero()),
        }
    }
}

impl fmt::Display for Dtb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dtb::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Dtb::Unbounded => write!(f, "1/0"),
        }
    }
}

/// One candidate in a pointwise maximum of ratios whose denominators are
/// channel strengths. A zero denominator means the constraint cannot be
/// served at all: binding (infinite) if its numerator is positive,
/// vacuous otherwise.
pub fn max_term(num: Rat, den: u64) -> Option<Dtb> {
    if den == 0 {
        if num.is_positive() {
            Some(Dtb::Unbounded)
        } else {
            None
        }
    } else {
        Some(Dtb::Finite(num / rint(den as i64)))
    }
}

/// Maximum of active terms. At least one term must be active; callers
/// always include an unconditional term such as the interference floor.
pub fn max_of(terms: impl IntoIterator<Item = Option<Dtb>>) -> Dtb {
    terms
        .into_iter()
        .flatten()
        .max()
        .expect("at least one active term")
}

pub fn clamp01(r: Rat) -> Rat {
    if r.is_negative() {
        Rat::zero()
    } else if r > Rat::one() {
        Rat::one()
    } else {
        r
    }
}

/// Decimal rendering with a fixed number of fractional digits,
/// round-half-away-from-zero. Used only for display.
pub fn dec_string(r: &Rat, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let scaled = r * Rat::from_integer(scale.clone());
    let rounded = scaled.round().to_integer();
    let neg = rounded.is_negative();
    let abs = rounded.abs();
    let (int, frac) = (&abs / &scale, &abs % &scale);
    let sign = if neg { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac:0>width$}", width = digits as usize)
    }
}

/// Least common multiple of the denominators of a set of rationals.
pub fn denom_lcm<'a>(vals: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    vals.into_iter()
        .fold(BigInt::one(), |acc, v| num::integer::lcm(acc, v.denom().clone()))
}

/// Exact conversion to u64; panics if the value is not a small
/// nonnegative integer. Used for bit counts that are integral by
/// construction.
pub fn to_u64(r: &Rat) -> u64 {
    assert!(r.is_integer(), "expected integer, got {r}");
    r.to_integer().to_u64().unwrap_or_else(|| panic!("out of range: {r}"))
}
