//! Exact real descriptors and certified Diophantine machinery.
//!
//! Scaling parameters enter as one of three descriptor kinds:
//!
//! - `p/r` — an exact rational,
//! - `surd:p,r,d,s` — the quadratic irrational `(p + r sqrt(d)) / s` with
//!   `d >= 2` squarefree and `r != 0`, `s > 0`,
//! - `dec:<digits>[:irrational]` — a decimal literal; with the `irrational`
//!   marker it stands for an unknown real within `10^-places` of the literal,
//!   without it the literal *is* the (rational) value.
//!
//! Arithmetic on these is done through [`ExactReal`], which keeps rationals
//! and quadratic surds exact and falls back to certified rational enclosures
//! otherwise. Floors, signs, and comparisons either resolve exactly or report
//! [`Error::AmbiguousFloor`] / [`Error::PrecisionExhausted`] — they never
//! silently guess.
//!
//! On top of that sit continued-fraction expansions (exact for rationals and
//! surds, enclosure-synchronized for decimals) and the inhomogeneous
//! approximation searches: `approx_search` certifies `|n theta - m - beta| <
//! omega n^-rho` by strict interval comparison, `chebyshev_search` uses the
//! threshold `3/n` available for every irrational shift, and
//! `simultaneous_search` intersects two such conditions at a shared `n`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rug::ops::{DivRounding, Pow};
use rug::{Assign, Complete, Float, Integer, Rational};

use crate::error::{Error, Result};

/// Precision cap for comparison-escalation loops.
const MAX_ESCALATION_BITS: u32 = 16_384;

// ---------------------------------------------------------------------------
// Descriptors
// ---------------------------------------------------------------------------

/// An input real number, remembered exactly enough to certify every
/// comparison made against it.
#[derive(Debug, Clone, PartialEq)]
pub enum RealDescriptor {
    /// An exact rational.
    Rational(Rational),
    /// `(p + r sqrt(d)) / s` with `d >= 2` squarefree, `r != 0`, `s > 0`.
    Surd {
        p: Integer,
        r: Integer,
        d: Integer,
        s: Integer,
    },
    /// A decimal literal with `places` digits after the point. When
    /// `irrational` is set the described number is only known to lie within
    /// `10^-places` of `value`.
    Decimal {
        value: Rational,
        places: u32,
        irrational: bool,
    },
}

impl RealDescriptor {
    pub fn rational(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Parse("rational denominator must be nonzero".into()));
        }
        Ok(RealDescriptor::Rational(Rational::from((num, den))))
    }

    pub fn integer(n: i64) -> Self {
        RealDescriptor::Rational(Rational::from(n))
    }

    pub fn surd(p: i64, r: i64, d: i64, s: i64) -> Result<Self> {
        let desc = RealDescriptor::Surd {
            p: Integer::from(p),
            r: Integer::from(r),
            d: Integer::from(d),
            s: Integer::from(s),
        };
        desc.validate()?;
        Ok(desc)
    }

    fn validate(&self) -> Result<()> {
        if let RealDescriptor::Surd { r, d, s, .. } = self {
            if *s <= 0 {
                return Err(Error::Parse("surd requires s > 0".into()));
            }
            if r.is_zero() {
                return Err(Error::Parse(
                    "surd requires r != 0 (use a plain rational instead)".into(),
                ));
            }
            if *d < 2 {
                return Err(Error::Parse("surd requires d >= 2".into()));
            }
            if !is_squarefree(d) {
                return Err(Error::Parse(format!("surd requires squarefree d, got {d}")));
            }
        }
        Ok(())
    }

    /// True when the descriptor denotes an irrational number.
    pub fn is_irrational(&self) -> bool {
        match self {
            RealDescriptor::Rational(_) => false,
            RealDescriptor::Surd { .. } => true,
            RealDescriptor::Decimal { irrational, .. } => *irrational,
        }
    }

    /// Exact rational value, when the descriptor denotes one.
    pub fn as_rational(&self) -> Option<Rational> {
        match self {
            RealDescriptor::Rational(x) => Some(x.clone()),
            RealDescriptor::Decimal {
                value,
                irrational: false,
                ..
            } => Some(value.clone()),
            _ => None,
        }
    }

    /// Half-width of the input uncertainty interval: zero except for
    /// `dec:...:irrational`, where it is `10^-places`.
    pub fn uncertainty(&self) -> Rational {
        match self {
            RealDescriptor::Decimal {
                places,
                irrational: true,
                ..
            } => {
                let den = Integer::from(10).pow(*places);
                Rational::from((Integer::from(1), den))
            }
            _ => Rational::new(),
        }
    }

    /// Numerical value at `prec` bits (midpoint for uncertain decimals).
    pub fn eval(&self, prec: u32) -> Float {
        match self {
            RealDescriptor::Rational(x) => Float::with_val(prec, x),
            RealDescriptor::Surd { p, r, d, s } => {
                let sq = Float::with_val(prec, d).sqrt();
                (Float::with_val(prec, p) + Float::with_val(prec, r) * sq)
                    / Float::with_val(prec, s)
            }
            RealDescriptor::Decimal { value, .. } => Float::with_val(prec, value),
        }
    }

    /// Exact-arithmetic view of the descriptor.
    pub fn to_exact(&self) -> ExactReal {
        match self {
            RealDescriptor::Rational(x) => ExactReal::Rat(x.clone()),
            RealDescriptor::Surd { p, r, d, s } => ExactReal::new_surd(
                Rational::from((p.clone(), s.clone())),
                Rational::from((r.clone(), s.clone())),
                d.clone(),
            ),
            RealDescriptor::Decimal {
                value,
                irrational,
                places,
            } => {
                if *irrational {
                    let u = Rational::from((
                        Integer::from(1),
                        Integer::from(10).pow(*places),
                    ));
                    ExactReal::Interval {
                        lo: (value - &u).complete(),
                        hi: (value + &u).complete(),
                    }
                } else {
                    ExactReal::Rat(value.clone())
                }
            }
        }
    }
}

impl fmt::Display for RealDescriptor {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealDescriptor::Rational(x) => {
                if x.denom() == &1 {
                    write!(out, "{}", x.numer())
                } else {
                    write!(out, "{}/{}", x.numer(), x.denom())
                }
            }
            RealDescriptor::Surd { p, r, d, s } => write!(out, "surd:{p},{r},{d},{s}"),
            RealDescriptor::Decimal {
                value,
                places,
                irrational,
            } => {
                let scale = Integer::from(10).pow(*places);
                let scaled = (value * Rational::from(scale)).abs();
                debug_assert_eq!(scaled.denom(), &1);
                let digits = scaled.numer().to_string();
                let sign = if *value < 0 { "-" } else { "" };
                let (int_part, frac_part) = if *places == 0 {
                    (digits.clone(), String::new())
                } else if digits.len() <= *places as usize {
                    (
                        "0".to_string(),
                        format!("{digits:0>width$}", width = *places as usize),
                    )
                } else {
                    let cut = digits.len() - *places as usize;
                    (digits[..cut].to_string(), digits[cut..].to_string())
                };
                write!(out, "dec:{sign}{int_part}")?;
                if !frac_part.is_empty() {
                    write!(out, ".{frac_part}")?;
                }
                if *irrational {
                    write!(out, ":irrational")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for RealDescriptor {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some(rest) = text.strip_prefix("surd:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!(
                    "surd descriptor needs four comma-separated integers, got `{text}`"
                )));
            }
            let nums: Result<Vec<Integer>> = parts
                .iter()
                .map(|t| {
                    Integer::parse(t.trim())
                        .map(|i| i.complete())
                        .map_err(|e| Error::Parse(format!("bad integer `{t}`: {e}")))
                })
                .collect();
            let nums = nums?;
            let desc = RealDescriptor::Surd {
                p: nums[0].clone(),
                r: nums[1].clone(),
                d: nums[2].clone(),
                s: nums[3].clone(),
            };
            desc.validate()?;
            return Ok(desc);
        }
        if let Some(rest) = text.strip_prefix("dec:") {
            let (digits, irrational) = match rest.strip_suffix(":irrational") {
                Some(head) => (head, true),
                None => (rest, false),
            };
            return parse_decimal(digits, irrational);
        }
        if let Some((num, den)) = text.split_once('/') {
            let n = Integer::parse(num.trim())
                .map_err(|e| Error::Parse(format!("bad numerator `{num}`: {e}")))?
                .complete();
            let d = Integer::parse(den.trim())
                .map_err(|e| Error::Parse(format!("bad denominator `{den}`: {e}")))?
                .complete();
            if d.is_zero() {
                return Err(Error::Parse("rational denominator must be nonzero".into()));
            }
            return Ok(RealDescriptor::Rational(Rational::from((n, d))));
        }
        let n = Integer::parse(text)
            .map_err(|e| Error::Parse(format!("not a real descriptor: `{text}` ({e})")))?
            .complete();
        Ok(RealDescriptor::Rational(Rational::from(n)))
    }
}

fn parse_decimal(digits: &str, irrational: bool) -> Result<RealDescriptor> {
    let digits = digits.trim();
    let (sign, body) = match digits.strip_prefix('-') {
        Some(b) => (-1i32, b),
        None => (1i32, digits.strip_prefix('+').unwrap_or(digits)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("empty decimal literal `{digits}`")));
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(Error::Parse(format!("bad decimal literal `{digits}`")));
    }
    let places = frac_part.len() as u32;
    let joined = format!("{}{}", if int_part.is_empty() { "0" } else { int_part }, frac_part);
    let numer = Integer::parse(&joined)
        .map_err(|e| Error::Parse(format!("bad decimal literal `{digits}`: {e}")))?
        .complete()
        * sign;
    let denom = Integer::from(10).pow(places);
    Ok(RealDescriptor::Decimal {
        value: Rational::from((numer, denom)),
        places,
        irrational,
    })
}

/// Squarefree test by trial division; factors above 10^6 are vetted by a
/// perfect-square check on the remaining cofactor (sufficient for the sizes
/// this crate meets).
fn is_squarefree(d: &Integer) -> bool {
    if d.is_perfect_square() {
        return false;
    }
    let mut rest = d.clone();
    let mut f = Integer::from(2);
    let limit = Integer::from(1_000_000);
    while f <= limit {
        let fsq = f.clone() * &f;
        if fsq > rest {
            break;
        }
        if rest.is_divisible(&f) {
            rest /= &f;
            if rest.is_divisible(&f) {
                return false;
            }
        }
        f += 1;
    }
    !rest.is_perfect_square() || rest == 1
}

// ---------------------------------------------------------------------------
// Exact arithmetic
// ---------------------------------------------------------------------------

/// A real number carried exactly (rational or quadratic surd) or as a
/// certified rational enclosure.
#[derive(Debug, Clone)]
pub enum ExactReal {
    Rat(Rational),
    /// `a + b sqrt(d)`, `b != 0`, `d >= 2` squarefree.
    Surd { a: Rational, b: Rational, d: Integer },
    /// The described number lies in `[lo, hi]`.
    Interval { lo: Rational, hi: Rational },
}

impl ExactReal {
    pub fn new_surd(a: Rational, b: Rational, d: Integer) -> Self {
        if b == 0 {
            ExactReal::Rat(a)
        } else {
            ExactReal::Surd { a, b, d }
        }
    }

    pub fn zero() -> Self {
        ExactReal::Rat(Rational::new())
    }

    pub fn from_rational(x: Rational) -> Self {
        ExactReal::Rat(x)
    }

    /// Exact rational value, when there is one.
    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            ExactReal::Rat(x) => Some(x),
            _ => None,
        }
    }

    /// Multiply by an exact rational.
    pub fn mul_rat(&self, c: &Rational) -> ExactReal {
        match self {
            ExactReal::Rat(x) => ExactReal::Rat((x * c).complete()),
            ExactReal::Surd { a, b, d } => ExactReal::new_surd(
                (a * c).complete(),
                (b * c).complete(),
                d.clone(),
            ),
            ExactReal::Interval { lo, hi } => {
                let x = (lo * c).complete();
                let y = (hi * c).complete();
                if x <= y {
                    ExactReal::Interval { lo: x, hi: y }
                } else {
                    ExactReal::Interval { lo: y, hi: x }
                }
            }
        }
    }

    pub fn mul_int(&self, n: i64) -> ExactReal {
        self.mul_rat(&Rational::from(n))
    }

    /// Add an exact rational.
    pub fn add_rat(&self, c: &Rational) -> ExactReal {
        match self {
            ExactReal::Rat(x) => ExactReal::Rat((x + c).complete()),
            ExactReal::Surd { a, b, d } => ExactReal::Surd {
                a: (a + c).complete(),
                b: b.clone(),
                d: d.clone(),
            },
            ExactReal::Interval { lo, hi } => ExactReal::Interval {
                lo: (lo + c).complete(),
                hi: (hi + c).complete(),
            },
        }
    }

    pub fn neg(&self) -> ExactReal {
        self.mul_int(-1)
    }

    /// `self + other`, exact when the kinds are compatible (rational with
    /// anything, surds over the same `d`); otherwise both sides are enclosed
    /// at `fallback_bits` and the sum is an interval.
    pub fn add(&self, other: &ExactReal, fallback_bits: u32) -> ExactReal {
        match (self, other) {
            (ExactReal::Rat(x), _) => other.add_rat(x),
            (_, ExactReal::Rat(y)) => self.add_rat(y),
            (
                ExactReal::Surd { a, b, d },
                ExactReal::Surd {
                    a: a2,
                    b: b2,
                    d: d2,
                },
            ) if d == d2 => ExactReal::new_surd(
                (a + a2).complete(),
                (b + b2).complete(),
                d.clone(),
            ),
            _ => {
                let (lo1, hi1) = self.enclose(fallback_bits);
                let (lo2, hi2) = other.enclose(fallback_bits);
                ExactReal::Interval {
                    lo: lo1 + lo2,
                    hi: hi1 + hi2,
                }
            }
        }
    }

    pub fn sub(&self, other: &ExactReal, fallback_bits: u32) -> ExactReal {
        self.add(&other.neg(), fallback_bits)
    }

    /// Certified rational enclosure `[lo, hi]` with `hi - lo <= 2^-bits`
    /// for exact kinds (intervals return themselves).
    pub fn enclose(&self, bits: u32) -> (Rational, Rational) {
        match self {
            ExactReal::Rat(x) => (x.clone(), x.clone()),
            ExactReal::Surd { a, b, d } => {
                // sqrt(d) in [s, s+1] / 2^k with s = isqrt(d 4^k); pick k so
                // that |b| / 2^k <= 2^-bits.
                let extra = bit_length(&abs_ceil(b)) + 1;
                let k = bits + extra;
                let shifted = d.clone() << (2 * k as usize);
                let s = shifted.sqrt();
                let den = Integer::from(1) << (k as usize);
                let sq_lo = Rational::from((s.clone(), den.clone()));
                let sq_hi = Rational::from((s + 1u32, den));
                let (t1, t2) = (
                    (a + (b * &sq_lo).complete()),
                    (a + (b * &sq_hi).complete()),
                );
                if t1 <= t2 {
                    (t1, t2)
                } else {
                    (t2, t1)
                }
            }
            ExactReal::Interval { lo, hi } => (lo.clone(), hi.clone()),
        }
    }

    /// Exact sign: -1, 0, or +1. Fails only for enclosures that straddle zero.
    pub fn sign(&self) -> Result<i32> {
        match self {
            ExactReal::Rat(x) => Ok(sign_of(x)),
            ExactReal::Surd { a, b, d } => {
                // sign(a + b sqrt(d)) by comparing a^2 with b^2 d.
                let sa = sign_of(a);
                let sb = sign_of(b);
                if sa == sb {
                    return Ok(sa); // same sign (b != 0 here, so never 0)
                }
                if sa == 0 {
                    return Ok(sb);
                }
                let a2 = (a * a).complete();
                let b2d = (b * b).complete() * Rational::from(d.clone());
                // |a| vs |b| sqrt(d): a^2 vs b^2 d decides, winner keeps its sign.
                Ok(match a2.cmp(&b2d) {
                    std::cmp::Ordering::Greater => sa,
                    std::cmp::Ordering::Less => sb,
                    std::cmp::Ordering::Equal => 0, // impossible for squarefree d
                })
            }
            ExactReal::Interval { lo, hi } => {
                if *lo > 0 {
                    Ok(1)
                } else if *hi < 0 {
                    Ok(-1)
                } else if lo.is_zero() && hi.is_zero() {
                    Ok(0)
                } else {
                    Err(Error::PrecisionExhausted(
                        "sign of an enclosure straddling zero".into(),
                    ))
                }
            }
        }
    }

    /// Exact floor. Fails with [`Error::AmbiguousFloor`] when an enclosure
    /// straddles an integer.
    pub fn floor(&self) -> Result<Integer> {
        match self {
            ExactReal::Rat(x) => Ok(rational_floor(x)),
            ExactReal::Surd { .. } => {
                // A surd is never an integer, so refining the enclosure
                // eventually separates it from every integer.
                let mut bits = 32u32;
                loop {
                    let (lo, hi) = self.enclose(bits);
                    let (fl, fh) = (rational_floor(&lo), rational_floor(&hi));
                    if fl == fh {
                        return Ok(fl);
                    }
                    bits *= 2;
                    if bits > MAX_ESCALATION_BITS {
                        return Err(Error::AmbiguousFloor(
                            "surd enclosure kept straddling an integer".into(),
                        ));
                    }
                }
            }
            ExactReal::Interval { lo, hi } => {
                let (fl, fh) = (rational_floor(lo), rational_floor(hi));
                if fl == fh {
                    Ok(fl)
                } else {
                    Err(Error::AmbiguousFloor(format!(
                        "interval [{lo}, {hi}] straddles an integer"
                    )))
                }
            }
        }
    }

    /// Exact fractional part `self - floor(self)`.
    pub fn frac(&self) -> Result<ExactReal> {
        let fl = self.floor()?;
        Ok(self.add_rat(&Rational::from(-fl)))
    }

    /// Nearest integer, with ties rounding up (`floor(x + 1/2)`).
    pub fn round_nearest(&self) -> Result<Integer> {
        self.add_rat(&Rational::from((1, 2))).floor()
    }

    /// `|self|` as an enclosure-friendly pair: exact kinds stay exact.
    pub fn abs(&self) -> Result<ExactReal> {
        match self.sign() {
            Ok(s) if s >= 0 => Ok(self.clone()),
            Ok(_) => Ok(self.neg()),
            Err(_) => {
                // Straddling interval: |x| lies in [0, max(|lo|, |hi|)].
                if let ExactReal::Interval { lo, hi } = self {
                    let m = lo.clone().abs().max(hi.clone().abs());
                    Ok(ExactReal::Interval {
                        lo: Rational::new(),
                        hi: m,
                    })
                } else {
                    unreachable!("sign() only fails on intervals")
                }
            }
        }
    }

    /// Value at `prec` bits (midpoint for intervals).
    pub fn to_float(&self, prec: u32) -> Float {
        match self {
            ExactReal::Rat(x) => Float::with_val(prec, x),
            ExactReal::Surd { a, b, d } => {
                let sq = Float::with_val(prec, d).sqrt();
                Float::with_val(prec, a) + Float::with_val(prec, b) * sq
            }
            ExactReal::Interval { lo, hi } => {
                let mid = ((lo + hi).complete()) / Rational::from(2);
                Float::with_val(prec, mid)
            }
        }
    }
}

fn sign_of(x: &Rational) -> i32 {
    match x.cmp0() {
        std::cmp::Ordering::Less => -1,
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Greater => 1,
    }
}

fn rational_floor(x: &Rational) -> Integer {
    x.numer().clone().div_floor(x.denom().clone())
}

fn abs_ceil(x: &Rational) -> Integer {
    let a = x.clone().abs();
    let fl = rational_floor(&a);
    if a == Rational::from(fl.clone()) {
        fl
    } else {
        fl + 1u32
    }
}

fn bit_length(x: &Integer) -> u32 {
    x.significant_bits()
}

// ---------------------------------------------------------------------------
// Small integer helpers
// ---------------------------------------------------------------------------

/// Parity indicator `chi(n) = n mod 2 in {0, 1}`, correct for negatives.
pub fn chi(n: i64) -> i64 {
    n.rem_euclid(2)
}

/// `ceil(log2(x))` for `x >= 1`.
pub fn ceil_log2(x: u64) -> u32 {
    debug_assert!(x >= 1);
    64 - (x - 1).leading_zeros().min(64) as u32
}

/// Working precision for residuals `n theta - m - beta`: the target accuracy
/// plus headroom for the magnitude of `n` and bookkeeping rounding.
pub fn residual_precision(target_bits: u32, n: u64) -> u32 {
    target_bits + 2 * ceil_log2(n + 1) + 32
}

/// Working precision for phase accumulation over `k <= n` steps of size up to
/// `n`: headroom scales with `n^2`.
pub fn phase_precision(target_bits: u32, n: u64) -> u32 {
    target_bits + 2 * ceil_log2(n.saturating_mul(n) + 1) + 32
}

/// The forward orbit `{ frac(k x) : k >= 0 }` of a rational rotation,
/// enumerated until it repeats.
pub fn orbit_set(x: &Rational) -> BTreeSet<Rational> {
    let mut out = BTreeSet::new();
    let mut cur = Rational::new();
    loop {
        if !out.insert(cur.clone()) {
            return out;
        }
        cur += x;
        cur -= Rational::from(rational_floor(&cur));
    }
}

// ---------------------------------------------------------------------------
// Continued fractions
// ---------------------------------------------------------------------------

/// One convergent `h/k` of a continued fraction, with its partial quotient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Convergent {
    pub a: Integer,
    pub h: Integer,
    pub k: Integer,
}

/// Up to `count` continued-fraction convergents of `x`.
///
/// - rationals: exact Euclidean expansion (terminates; fewer than `count`
///   convergents may be returned),
/// - quadratic surds: the exact periodic algorithm on
///   `(P + sqrt(D)) / Q` with all-integer state,
/// - exact decimals: treated as rationals,
/// - uncertain decimals: the expansions of the two interval endpoints are
///   advanced in lockstep and convergents are emitted while their partial
///   quotients agree; requesting more ends with
///   [`Error::PrecisionExhausted`].
pub fn cf_convergents(x: &RealDescriptor, count: usize) -> Result<Vec<Convergent>> {
    match x {
        RealDescriptor::Rational(v) => Ok(cf_of_rational(v, count)),
        RealDescriptor::Decimal {
            value,
            irrational: false,
            ..
        } => Ok(cf_of_rational(value, count)),
        RealDescriptor::Decimal {
            value,
            places,
            irrational: true,
        } => {
            let u = Rational::from((Integer::from(1), Integer::from(10).pow(*places)));
            cf_of_interval(&(value - &u).complete(), &(value + &u).complete(), count)
        }
        RealDescriptor::Surd { p, r, d, s } => Ok(cf_of_surd(p, r, d, s, count)),
    }
}

struct ConvergentAccumulator {
    h1: Integer,
    h0: Integer,
    k1: Integer,
    k0: Integer,
    out: Vec<Convergent>,
}

impl ConvergentAccumulator {
    fn new() -> Self {
        ConvergentAccumulator {
            h1: Integer::from(1),
            h0: Integer::from(0),
            k1: Integer::from(0),
            k0: Integer::from(1),
            out: Vec::new(),
        }
    }

    fn push(&mut self, a: Integer) {
        let h = (&a * &self.h1).complete() + &self.h0;
        let k = (&a * &self.k1).complete() + &self.k0;
        self.h0 = std::mem::replace(&mut self.h1, h.clone());
        self.k0 = std::mem::replace(&mut self.k1, k.clone());
        self.out.push(Convergent { a, h, k });
    }
}

fn cf_of_rational(x: &Rational, count: usize) -> Vec<Convergent> {
    let mut acc = ConvergentAccumulator::new();
    let mut num = x.numer().clone();
    let mut den = x.denom().clone();
    while acc.out.len() < count && !den.is_zero() {
        let a = num.clone().div_floor(den.clone());
        let rem = num - (&a * &den).complete();
        acc.push(a);
        num = den;
        den = rem;
    }
    acc.out
}

/// Exact CF of `(p + r sqrt(d)) / s` via the integer `(P, Q, D)` recurrence.
fn cf_of_surd(p: &Integer, r: &Integer, d: &Integer, s: &Integer, count: usize) -> Vec<Convergent> {
    // Normalize to x = (P + sqrt(D)) / Q with D = r^2 d; a negative r flips
    // the signs of both numerator terms and the denominator.
    let (mut pp, mut qq) = if *r > 0 {
        (p.clone(), s.clone())
    } else {
        ((-p).complete(), (-s).complete())
    };
    let mut dd = (r * r).complete() * d;
    // The recurrence needs Q | (D - P^2); scale by |Q| if violated.
    let check = &dd - (&pp * &pp).complete();
    if !check.is_divisible(&qq) {
        let scale = qq.clone().abs();
        pp *= &scale;
        dd *= (&scale * &scale).complete();
        qq *= &scale;
    }
    let sqrt_dd = dd.clone().sqrt(); // floor(sqrt(D)), D never a perfect square
    let mut acc = ConvergentAccumulator::new();
    while acc.out.len() < count {
        // floor((P + sqrt(D))/Q): floor(sqrt(D)) suffices for Q > 0; for
        // Q < 0 use ceil(sqrt(D)) = floor + 1.
        let num = if qq > 0 {
            (&pp + &sqrt_dd).complete()
        } else {
            (&pp + &sqrt_dd).complete() + 1u32
        };
        let a = num.div_floor(qq.clone());
        let p_next = (&a * &qq).complete() - &pp;
        let q_next = (&dd - (&p_next * &p_next).complete()) / &qq;
        acc.push(a);
        pp = p_next;
        qq = q_next;
    }
    acc.out
}

fn cf_of_interval(lo: &Rational, hi: &Rational, count: usize) -> Result<Vec<Convergent>> {
    let mut acc = ConvergentAccumulator::new();
    let mut lo = lo.clone();
    let mut hi = hi.clone();
    while acc.out.len() < count {
        let la = rational_floor(&lo);
        let ha = rational_floor(&hi);
        if la != ha {
            return Err(Error::PrecisionExhausted(format!(
                "decimal uncertainty exhausted after {} convergents",
                acc.out.len()
            )));
        }
        let a_rat = Rational::from(la.clone());
        let u = (&lo - &a_rat).complete(); // >= 0
        let v = hi - a_rat;
        acc.push(la);
        if v.is_zero() {
            break; // the value is exactly this integer tail; expansion ends
        }
        if u.is_zero() {
            return Err(Error::PrecisionExhausted(format!(
                "decimal uncertainty exhausted after {} convergents",
                acc.out.len()
            )));
        }
        // Reciprocal maps [u, v] (0 < u <= v) to [1/v, 1/u].
        lo = v.recip();
        hi = u.recip();
    }
    Ok(acc.out)
}

// ---------------------------------------------------------------------------
// Diophantine searches
// ---------------------------------------------------------------------------

/// A certified solution of `|n theta - m - beta| < threshold(n)`.
#[derive(Debug, Clone)]
pub struct Hit {
    pub n: u64,
    pub m: Integer,
    /// Signed residual `n theta - m - beta` (64-bit display value).
    pub residual: f64,
}

/// A certified simultaneous solution at a shared `n`.
#[derive(Debug, Clone)]
pub struct SimultaneousHit {
    pub n: u64,
    pub m1: Integer,
    pub m2: Integer,
    pub residual1: f64,
    pub residual2: f64,
}

enum Threshold {
    /// `omega * n^-rho`.
    Power { omega: f64, rho: f64 },
    /// `3 / n`.
    Chebyshev,
}

impl Threshold {
    /// Exact rational value when one exists (integer `rho`).
    fn exact(&self, n: u64) -> Option<Rational> {
        match self {
            Threshold::Chebyshev => Some(Rational::from((3, Integer::from(n)))),
            Threshold::Power { omega, rho } => {
                if rho.fract() != 0.0 || *rho < 0.0 || *rho > 62.0 {
                    return None;
                }
                let omega_rat = Rational::from_f64(*omega)?;
                let np = Integer::from(n).pow(*rho as u32);
                Some(omega_rat / Rational::from(np))
            }
        }
    }

    /// Certified enclosure `[lo, hi]` at `prec` bits.
    fn enclose(&self, n: u64, prec: u32) -> (Rational, Rational) {
        if let Some(x) = self.exact(n) {
            return (x.clone(), x);
        }
        let Threshold::Power { omega, rho } = self else {
            unreachable!("chebyshev is always exact")
        };
        // t = omega e^{-rho ln n}, computed at prec bits and widened by a
        // relative 2^(8-prec) margin covering the handful of roundings.
        let t = Float::with_val(prec, *omega)
            * (-Float::with_val(prec, *rho) * Float::with_val(prec, n).ln()).exp();
        let t_rat = t.to_rational().unwrap_or_else(Rational::new);
        let margin = Rational::from((Integer::from(1), Integer::from(1) << (prec - 8) as usize));
        let slack = (&t_rat * &margin).complete();
        ((&t_rat - &slack).complete(), t_rat + slack)
    }
}

/// Outcome of one certified threshold comparison.
enum Verdict {
    Hit { m: Integer, residual: f64 },
    Miss,
}

/// Certify `|n theta - m - beta| < threshold` (strict) or its negation.
fn certify_one(
    theta: &ExactReal,
    beta: &ExactReal,
    n: u64,
    threshold: &Threshold,
) -> Result<Verdict> {
    let mut bits = residual_precision(64, n);
    loop {
        let y = theta.mul_int(n as i64).sub(beta, bits);
        let m = match y.round_nearest() {
            Ok(m) => m,
            Err(Error::AmbiguousFloor(_)) => {
                // Exactly-half residual: |y - m| = 1/2 for both choices; no
                // threshold below 1/2 admits it, and thresholds >= 1/2 do.
                let (lo, _) = y.enclose(bits);
                rational_floor(&lo)
            }
            Err(e) => return Err(e),
        };
        let residual = y.add_rat(&Rational::from(-m.clone()));
        let (rlo, rhi) = residual.enclose(bits);
        let (alo, ahi) = abs_interval(&rlo, &rhi);
        let (tlo, thi) = threshold.enclose(n, bits);
        if ahi < tlo {
            let res_f = residual.to_float(64).to_f64();
            return Ok(Verdict::Hit { m, residual: res_f });
        }
        if alo >= thi {
            return Ok(Verdict::Miss);
        }
        if bits >= MAX_ESCALATION_BITS {
            return Err(Error::PrecisionExhausted(format!(
                "cannot separate |{n} theta - m - beta| from the threshold; \
                 the input uncertainty spans the decision boundary"
            )));
        }
        bits *= 2;
    }
}

fn abs_interval(lo: &Rational, hi: &Rational) -> (Rational, Rational) {
    if *lo >= 0 {
        (lo.clone(), hi.clone())
    } else if *hi <= 0 {
        ((-hi).complete(), (-lo).complete())
    } else {
        (Rational::new(), lo.clone().abs().max(hi.clone().abs()))
    }
}

/// All `n` in `[n_lo, n_hi]` with `|n theta - m - beta| < omega n^-rho` for
/// some integer `m`, each certified by strict interval comparison.
pub fn approx_search(
    theta: &RealDescriptor,
    beta: &RealDescriptor,
    rho: f64,
    omega: f64,
    n_lo: u64,
    n_hi: u64,
) -> Result<Vec<Hit>> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::Domain(format!("rho must be finite and >= 0, got {rho}")));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    if n_lo == 0 {
        return Err(Error::Domain("n range must start at 1 or later".into()));
    }
    let threshold = Threshold::Power { omega, rho };
    search_core(theta, beta, &threshold, n_lo, n_hi)
}

/// All `n` in `[n_lo, n_hi]` with `|n theta - m - beta| < 3/n`: the
/// inhomogeneous-approximation threshold that admits infinitely many `n`
/// for every irrational `theta` and every real `beta`.
pub fn chebyshev_search(
    theta: &RealDescriptor,
    beta: &RealDescriptor,
    n_lo: u64,
    n_hi: u64,
) -> Result<Vec<Hit>> {
    if n_lo == 0 {
        return Err(Error::Domain("n range must start at 1 or later".into()));
    }
    search_core(theta, beta, &Threshold::Chebyshev, n_lo, n_hi)
}

fn search_core(
    theta: &RealDescriptor,
    beta: &RealDescriptor,
    threshold: &Threshold,
    n_lo: u64,
    n_hi: u64,
) -> Result<Vec<Hit>> {
    let te = theta.to_exact();
    let be = beta.to_exact();
    let mut hits = Vec::new();
    for n in n_lo..=n_hi {
        if let Verdict::Hit { m, residual } = certify_one(&te, &be, n, threshold)? {
            hits.push(Hit { n, m, residual });
        }
    }
    Ok(hits)
}

/// All `n` where *both* `|n x1 - m1 - b1| < omega n^-rho` and
/// `|n x2 - m2 - b2| < omega n^-rho` hold, certified independently.
pub fn simultaneous_search(
    x1: &RealDescriptor,
    b1: &RealDescriptor,
    x2: &RealDescriptor,
    b2: &RealDescriptor,
    rho: f64,
    omega: f64,
    n_lo: u64,
    n_hi: u64,
) -> Result<Vec<SimultaneousHit>> {
    if n_lo == 0 {
        return Err(Error::Domain("n range must start at 1 or later".into()));
    }
    let threshold = Threshold::Power { omega, rho };
    let (e1, eb1, e2, eb2) = (x1.to_exact(), b1.to_exact(), x2.to_exact(), b2.to_exact());
    let mut hits = Vec::new();
    for n in n_lo..=n_hi {
        let first = certify_one(&e1, &eb1, n, &threshold)?;
        let Verdict::Hit { m: m1, residual: r1 } = first else {
            continue;
        };
        let second = certify_one(&e2, &eb2, n, &threshold)?;
        if let Verdict::Hit { m: m2, residual: r2 } = second {
            hits.push(SimultaneousHit {
                n,
                m1,
                m2,
                residual1: r1,
                residual2: r2,
            });
        }
    }
    Ok(hits)
}

// Keep `Assign` in scope for integer assignment idioms used above.
#[allow(unused)]
fn _assign_marker(i: &mut Integer) {
    i.assign(0);
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> RealDescriptor {
        s.parse().unwrap()
    }

    #[test]
    fn descriptor_parse_and_roundtrip() {
        for s in [
            "1/3",
            "-2/7",
            "5",
            "0",
            "surd:0,1,2,1",
            "surd:1,-2,3,4",
            "dec:1.41421356",
            "dec:-0.50",
            "dec:2.718:irrational",
            "dec:3",
        ] {
            let d = parse(s);
            assert_eq!(d.to_string(), s, "round-trip of `{s}`");
            let d2 = parse(&d.to_string());
            assert_eq!(d, d2);
        }
        // Canonical reduction still round-trips through the value.
        assert_eq!(parse("2/6"), parse("1/3"));
        assert_eq!(parse(" 7 / -3 "), parse("-7/3"));
    }

    #[test]
    fn descriptor_rejects_malformed() {
        for s in [
            "surd:1,0,2,1",  // r = 0
            "surd:1,1,4,1",  // d a perfect square
            "surd:1,1,12,1", // d not squarefree
            "surd:1,1,2,0",  // s = 0
            "surd:1,1,2,-3", // s < 0
            "surd:1,1,2",    // wrong arity
            "1/0",
            "dec:",
            "dec:1.2.3",
            "abc",
            "dec:1e5",
        ] {
            assert!(s.parse::<RealDescriptor>().is_err(), "`{s}` should fail");
        }
    }

    #[test]
    fn descriptor_values_and_uncertainty() {
        let sqrt2 = parse("surd:0,1,2,1");
        let v = sqrt2.eval(128);
        let want = Float::with_val(128, 2).sqrt();
        assert!((v - want).abs() < Float::with_val(128, 1e-30));
        assert!(sqrt2.is_irrational());
        assert_eq!(sqrt2.uncertainty(), Rational::new());

        let d = parse("dec:1.414:irrational");
        assert!(d.is_irrational());
        assert_eq!(d.uncertainty(), Rational::from((1, 1000)));
        let dr = parse("dec:1.414");
        assert!(!dr.is_irrational());
        assert_eq!(dr.as_rational().unwrap(), Rational::from((1414, 1000)));
        assert_eq!(parse("1/3").uncertainty(), Rational::new());
    }

    #[test]
    fn chi_is_euclidean_parity() {
        assert_eq!(chi(4), 0);
        assert_eq!(chi(5), 1);
        assert_eq!(chi(0), 0);
        assert_eq!(chi(-3), 1);
        assert_eq!(chi(-4), 0);
    }

    #[test]
    fn exact_floor_and_frac() {
        // Rational: 7/3 -> (2, 1/3); negative -1/3 -> (-1, 2/3).
        let x = parse("7/3").to_exact();
        assert_eq!(x.floor().unwrap(), Integer::from(2));
        assert_eq!(
            x.frac().unwrap().as_rational().unwrap(),
            &Rational::from((1, 3))
        );
        let x = parse("-1/3").to_exact();
        assert_eq!(x.floor().unwrap(), Integer::from(-1));
        assert_eq!(
            x.frac().unwrap().as_rational().unwrap(),
            &Rational::from((2, 3))
        );
        // Surds: floor(sqrt(2)) = 1; floor(-sqrt(2)) = -2;
        // floor((1 + 2 sqrt(2))/3) = floor(1.276) = 1.
        let s2 = parse("surd:0,1,2,1").to_exact();
        assert_eq!(s2.floor().unwrap(), Integer::from(1));
        assert_eq!(s2.neg().floor().unwrap(), Integer::from(-2));
        let mixed = parse("surd:1,2,2,3").to_exact();
        assert_eq!(mixed.floor().unwrap(), Integer::from(1));
        // 50 sqrt(2) = 70.71...: scaled floors stay exact.
        assert_eq!(s2.mul_int(50).floor().unwrap(), Integer::from(70));
        // Decimal-irrational near an integer is ambiguous; the exact decimal
        // is not.
        let amb = parse("dec:2.000:irrational").to_exact();
        assert!(matches!(amb.floor(), Err(Error::AmbiguousFloor(_))));
        let ok = parse("dec:2.000").to_exact();
        assert_eq!(ok.floor().unwrap(), Integer::from(2));
    }

    #[test]
    fn exact_sign_cases() {
        // sqrt(2) - 1.5 < 0 < sqrt(2) - 1.4 without leaving exact arithmetic.
        let s2 = parse("surd:0,1,2,1").to_exact();
        let above = s2.add_rat(&Rational::from((-7, 5)));
        let below = s2.add_rat(&Rational::from((-3, 2)));
        assert_eq!(above.sign().unwrap(), 1);
        assert_eq!(below.sign().unwrap(), -1);
        assert_eq!(ExactReal::zero().sign().unwrap(), 0);
        // 1 - sqrt(2) has mixed-sign parts dominated by the surd.
        let m = ExactReal::new_surd(
            Rational::from(1),
            Rational::from(-1),
            Integer::from(2),
        );
        assert_eq!(m.sign().unwrap(), -1);
        let p = ExactReal::new_surd(
            Rational::from(2),
            Rational::from(-1),
            Integer::from(2),
        );
        assert_eq!(p.sign().unwrap(), 1);
        // Straddling interval cannot decide.
        let i = ExactReal::Interval {
            lo: Rational::from((-1, 10)),
            hi: Rational::from((1, 10)),
        };
        assert!(i.sign().is_err());
    }

    #[test]
    fn surd_addition_same_root_stays_exact() {
        // (1 - sqrt(2)) + (sqrt(2)/2) = 1 - sqrt(2)/2.
        let a = ExactReal::new_surd(Rational::from(1), Rational::from(-1), Integer::from(2));
        let b = ExactReal::new_surd(Rational::new(), Rational::from((1, 2)), Integer::from(2));
        match a.add(&b, 64) {
            ExactReal::Surd { a, b, d } => {
                assert_eq!(a, Rational::from(1));
                assert_eq!(b, Rational::from((-1, 2)));
                assert_eq!(d, Integer::from(2));
            }
            other => panic!("expected exact surd, got {other:?}"),
        }
        // Cancellation back to a rational collapses the representation.
        let c = ExactReal::new_surd(Rational::from(3), Rational::from(1), Integer::from(2));
        let d = ExactReal::new_surd(Rational::new(), Rational::from(-1), Integer::from(2));
        assert!(matches!(c.add(&d, 64), ExactReal::Rat(x) if x == 3));
        // Different roots fall back to a certified enclosure.
        let e = ExactReal::new_surd(Rational::new(), Rational::from(1), Integer::from(3));
        let sum = c.add(&e, 128);
        let (lo, hi) = sum.enclose(128);
        assert!(hi - &lo <= Rational::from((Integer::from(1), Integer::from(1) << 100)));
        let mid = Float::with_val(96, &lo);
        let want = Float::with_val(96, 3) + Float::with_val(96, 2).sqrt() + Float::with_val(96, 3).sqrt();
        assert!((mid - want).abs() < 1e-20);
    }

    #[test]
    fn orbit_sets_of_rational_rotations() {
        let o = orbit_set(&Rational::from((2, 3)));
        let want: BTreeSet<Rational> = [
            Rational::new(),
            Rational::from((1, 3)),
            Rational::from((2, 3)),
        ]
        .into_iter()
        .collect();
        assert_eq!(o, want);
        assert_eq!(orbit_set(&Rational::from((1, 4))).len(), 4);
        assert_eq!(orbit_set(&Rational::new()).len(), 1);
        // Negative rotation wraps into [0,1).
        let o = orbit_set(&Rational::from((-1, 3)));
        assert_eq!(o.len(), 3);
        assert!(o.contains(&Rational::from((2, 3))));
    }

    #[test]
    fn convergents_of_sqrt2() {
        let s2 = parse("surd:0,1,2,1");
        let cv = cf_convergents(&s2, 12).unwrap();
        let want: [(i64, i64); 12] = [
            (1, 1),
            (3, 2),
            (7, 5),
            (17, 12),
            (41, 29),
            (99, 70),
            (239, 169),
            (577, 408),
            (1393, 985),
            (3363, 2378),
            (8119, 5741),
            (19601, 13860),
        ];
        for (c, (h, k)) in cv.iter().zip(want) {
            assert_eq!(c.h, Integer::from(h));
            assert_eq!(c.k, Integer::from(k));
        }
        // Partial quotients: [1; 2, 2, 2, ...].
        assert_eq!(cv[0].a, Integer::from(1));
        assert!(cv[1..].iter().all(|c| c.a == Integer::from(2)));
    }

    #[test]
    fn convergents_of_other_surds() {
        // sqrt(2)/2 = [0; 1, 2, 2, ...]: denominators include 239, 577, ...
        let half = parse("surd:0,1,2,2");
        let cv = cf_convergents(&half, 12).unwrap();
        let denoms: Vec<i64> = cv.iter().map(|c| c.k.to_i64().unwrap()).collect();
        assert_eq!(denoms[..8], [1, 1, 3, 7, 17, 41, 99, 239]);
        // Golden ratio (1 + sqrt(5))/2: all quotients 1, Fibonacci convergents.
        let phi = parse("surd:1,1,5,2");
        let cv = cf_convergents(&phi, 10).unwrap();
        assert!(cv.iter().all(|c| c.a == Integer::from(1)));
        let ks: Vec<i64> = cv.iter().map(|c| c.k.to_i64().unwrap()).collect();
        assert_eq!(ks, [1, 1, 2, 3, 5, 8, 13, 21, 34, 55]);
        // sqrt(2) - 1 = [0; 2, 2, 2, ...]: denominators 1, 2, 5, 12, ...
        let sm1 = parse("surd:-1,1,2,1");
        let cv = cf_convergents(&sm1, 8).unwrap();
        let ks: Vec<i64> = cv.iter().map(|c| c.k.to_i64().unwrap()).collect();
        assert_eq!(ks, [1, 2, 5, 12, 29, 70, 169, 408]);
        // Negative value: -sqrt(2) = [-2; 1, 1, 2, 2, ...] under floor-CF.
        let neg = parse("surd:0,-1,2,1");
        let cv = cf_convergents(&neg, 6).unwrap();
        assert_eq!(cv[0].a, Integer::from(-2));
        for c in &cv {
            // h/k must approximate -sqrt(2): |h/k + sqrt(2)| < 1/k^2.
            let approx = Rational::from((c.h.clone(), c.k.clone()));
            let err = parse("surd:0,1,2,1")
                .to_exact()
                .add(&ExactReal::Rat(approx), 64)
                .abs()
                .unwrap();
            let cap = Rational::from((Integer::from(1), (&c.k * &c.k).complete()));
            let diff = err.add_rat(&-cap);
            assert_eq!(diff.sign().unwrap(), -1, "convergent {}/{}", c.h, c.k);
        }
    }

    #[test]
    fn convergents_of_rationals_terminate() {
        let x = parse("355/113");
        let cv = cf_convergents(&x, 10).unwrap();
        let pairs: Vec<(i64, i64)> = cv
            .iter()
            .map(|c| (c.h.to_i64().unwrap(), c.k.to_i64().unwrap()))
            .collect();
        assert_eq!(pairs, [(3, 1), (22, 7), (355, 113)]);
        // Last convergent reproduces the value exactly.
        assert_eq!(
            Rational::from((cv[2].h.clone(), cv[2].k.clone())),
            Rational::from((355, 113))
        );
        let x = parse("1/3");
        let cv = cf_convergents(&x, 10).unwrap();
        assert_eq!(cv.len(), 2);
        assert_eq!((cv[1].h.to_i64().unwrap(), cv[1].k.to_i64().unwrap()), (1, 3));
    }

    #[test]
    fn convergents_of_decimals_stop_at_uncertainty() {
        // 20 digits of sqrt(2): the certified prefix matches the surd's
        // convergents, and asking for many more exhausts the interval.
        let d = parse("dec:1.41421356237309504880:irrational");
        let exact = cf_convergents(&parse("surd:0,1,2,1"), 30).unwrap();
        let got = cf_convergents(&d, 12).unwrap();
        for (g, e) in got.iter().zip(&exact) {
            assert_eq!(g.h, e.h);
            assert_eq!(g.k, e.k);
        }
        assert!(matches!(
            cf_convergents(&d, 60),
            Err(Error::PrecisionExhausted(_))
        ));
        // The exact decimal is just a rational: terminates without error.
        let r = parse("dec:1.50");
        let cv = cf_convergents(&r, 10).unwrap();
        assert_eq!(cv.len(), 2);
    }

    #[test]
    fn approx_search_sqrt2_unit_threshold() {
        // |n sqrt(2) - m| < 1/n on 1..=10 picks out n in {1, 2, 3, 5, 7}.
        let theta = parse("surd:0,1,2,1");
        let beta = parse("0");
        let hits = approx_search(&theta, &beta, 1.0, 1.0, 1, 10).unwrap();
        let ns: Vec<u64> = hits.iter().map(|h| h.n).collect();
        assert_eq!(ns, [1, 2, 3, 5, 7]);
        let five = hits.iter().find(|h| h.n == 5).unwrap();
        assert_eq!(five.m, Integer::from(7));
        assert!((five.residual - 0.071067812).abs() < 1e-6, "{}", five.residual);
        // Convergent denominators keep appearing for larger ranges.
        let hits = approx_search(&theta, &beta, 1.0, 1.0, 1, 600).unwrap();
        let ns: Vec<u64> = hits.iter().map(|h| h.n).collect();
        for k in [12u64, 29, 70, 169, 408] {
            assert!(ns.contains(&k), "missing convergent denominator {k}");
        }
    }

    #[test]
    fn approx_search_rational_progression() {
        // theta = beta = 1/3: residual (n-1)/3 mod 1; strict threshold 1/n.
        let theta = parse("1/3");
        let beta = parse("1/3");
        let hits = approx_search(&theta, &beta, 1.0, 1.0, 1, 10).unwrap();
        let ns: Vec<u64> = hits.iter().map(|h| h.n).collect();
        // n = 3 has residual exactly 1/3 = threshold: excluded by strictness.
        assert_eq!(ns, [1, 2, 4, 7, 10]);
        for h in &hits {
            if h.n % 3 == 1 {
                assert_eq!(h.residual, 0.0, "n = {}", h.n);
            }
        }
        // With the full-orbit threshold everything passes.
        let all = approx_search(&theta, &beta, 0.0, 2.0, 1, 10).unwrap();
        assert_eq!(all.len(), 10);
    }

    #[test]
    fn approx_search_certifies_decimals_or_gives_up() {
        // Liouville-flavored literal: digits of sum 10^-k! for k! <= 120,
        // stated to 126 places. 100 x has fractional part ~ 1.0001e-4,
        // certifiably below 100^-1.8 ~ 2.5e-4.
        let mut digits = vec!['0'; 126];
        for pos in [1usize, 2, 6, 24, 120] {
            digits[pos - 1] = '1';
        }
        let literal: String = digits.into_iter().collect();
        let x: RealDescriptor = format!("dec:0.{literal}:irrational").parse().unwrap();
        let beta = parse("0");
        let hits = approx_search(&x, &beta, 1.8, 1.0, 90, 100).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].n, 100);
        assert!((hits[0].residual - 1.0001e-4).abs() < 1e-8);
        // A 4-digit literal cannot separate residuals near a 1e-4 threshold:
        // 100 x has uncertainty 100 * 1e-4 = 1e-2 >> threshold.
        let crude = parse("dec:0.1100:irrational");
        assert!(matches!(
            approx_search(&crude, &beta, 1.8, 1.0, 100, 100),
            Err(Error::PrecisionExhausted(_))
        ));
    }

    #[test]
    fn approx_search_validates_arguments() {
        let t = parse("surd:0,1,2,1");
        let b = parse("0");
        assert!(approx_search(&t, &b, -1.0, 1.0, 1, 5).is_err());
        assert!(approx_search(&t, &b, 1.0, 0.0, 1, 5).is_err());
        assert!(approx_search(&t, &b, 1.0, 1.0, 0, 5).is_err());
        assert!(approx_search(&t, &b, f64::NAN, 1.0, 1, 5).is_err());
    }

    #[test]
    fn chebyshev_threshold_admits_hits() {
        // |n sqrt(2) - m - 3/10| < 3/n: certified hits exist and every
        // reported residual honors the bound with room for float display.
        let theta = parse("surd:0,1,2,1");
        let beta = parse("3/10");
        let hits = chebyshev_search(&theta, &beta, 1, 300).unwrap();
        assert!(hits.len() >= 5, "only {} hits", hits.len());
        for h in &hits {
            assert!(
                h.residual.abs() < 3.0 / h.n as f64 + 1e-9,
                "n = {} residual {}",
                h.n,
                h.residual
            );
        }
        // Non-strict tail of the range still certifies misses: no panic, and
        // n values outside the hit list genuinely fail the bound.
        let ns: BTreeSet<u64> = hits.iter().map(|h| h.n).collect();
        for n in 1..=40u64 {
            if !ns.contains(&n) {
                let y = theta.to_exact().mul_int(n as i64);
                let m = y.round_nearest().unwrap();
                let r = y.add_rat(&Rational::from(-m)).add_rat(&Rational::from((-3, 10)));
                // |r| may exceed 1/2 because beta shifted the nearest integer;
                // recompute against the best m directly.
                let best = theta
                    .to_exact()
                    .mul_int(n as i64)
                    .add_rat(&Rational::from((-3, 10)));
                let mb = best.round_nearest().unwrap();
                let res = best.add_rat(&Rational::from(-mb)).abs().unwrap();
                let gap = res.add_rat(&-Rational::from((3, Integer::from(n))));
                assert_eq!(gap.sign().unwrap(), 1, "n = {n} wrongly excluded");
                let _ = r;
            }
        }
    }

    #[test]
    fn simultaneous_search_is_the_intersection() {
        let x1 = parse("surd:0,1,2,1"); // sqrt(2)
        let x2 = parse("surd:0,1,2,2"); // sqrt(2)/2
        let b = parse("0");
        let (rho, omega) = (0.5, 1.0);
        let joint = simultaneous_search(&x1, &b, &x2, &b, rho, omega, 1, 120).unwrap();
        let a1 = approx_search(&x1, &b, rho, omega, 1, 120).unwrap();
        let a2 = approx_search(&x2, &b, rho, omega, 1, 120).unwrap();
        let s1: BTreeSet<u64> = a1.iter().map(|h| h.n).collect();
        let s2: BTreeSet<u64> = a2.iter().map(|h| h.n).collect();
        let want: Vec<u64> = s1.intersection(&s2).copied().collect();
        let got: Vec<u64> = joint.iter().map(|h| h.n).collect();
        assert_eq!(got, want);
        assert!(!joint.is_empty(), "expected at least one simultaneous hit");
        for h in &joint {
            let lookup = a1.iter().find(|x| x.n == h.n).unwrap();
            assert_eq!(h.m1, lookup.m);
        }
    }

    #[test]
    fn precision_schedules_scale_with_n() {
        assert_eq!(residual_precision(128, 1), 128 + 2 + 32);
        assert!(residual_precision(128, 1 << 20) >= 128 + 40 + 32);
        assert!(phase_precision(128, 1 << 20) > residual_precision(128, 1 << 20));
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(3), 2);
        assert_eq!(ceil_log2(1024), 10);
        assert_eq!(ceil_log2(1025), 11);
    }

    #[test]
    fn squarefree_screening() {
        assert!(is_squarefree(&Integer::from(2)));
        assert!(is_squarefree(&Integer::from(3)));
        assert!(is_squarefree(&Integer::from(2 * 3 * 5 * 7)));
        assert!(!is_squarefree(&Integer::from(4)));
        assert!(!is_squarefree(&Integer::from(12)));
        assert!(!is_squarefree(&Integer::from(49)));
        assert!(!is_squarefree(&Integer::from(1_000_003i64 * 1_000_003)));
    }
}
