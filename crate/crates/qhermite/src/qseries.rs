//! Core q-series building blocks at arbitrary precision.
//!
//! Everything downstream (polynomial evaluation, regime verification) reduces
//! to a handful of objects defined for a fixed base `0 < q < 1`:
//!
//! - finite and infinite q-Pochhammer products `(a;q)_n`, `(a;q)_oo`,
//! - the Gaussian binomial `[n,k]_q` in log-space,
//! - the entire functions `A_q(z) = sum q^{k^2} (-z)^k / (q;q)_k` and
//!   `B_q(x) = sum q^{k^2} x^k / (q;q)_k`,
//! - the theta sum `Theta(z|q) = sum_{n in Z} q^{n^2} z^n`,
//! - the remainder factors `R1`, `R2` of `(a q^n; q)_oo` and its reciprocal,
//!   together with their proven envelopes.
//!
//! Every truncated evaluation returns a [`SeriesResult`] whose `tail_bound`
//! is a *certified* majorant of the discarded tail: series stop at the first
//! index where the term majorant falls below the context tolerance and the
//! term-ratio majorant has dropped under 1/2, so the tail is dominated by a
//! geometric series. Bound arithmetic is inflated by a factor
//! `1 + 2^-(prec/2)` to absorb rounding in the bound computation itself
//! (a few dozen operations, each contributing at most half an ulp).

use rug::float::Special;
use rug::ops::CompleteRound;
use rug::{Complex, Float};

use crate::error::{Error, Result};

/// Iteration safeguard for all truncated series/products.
const MAX_TERMS: usize = 1_000_000;

// ---------------------------------------------------------------------------
// Context
// ---------------------------------------------------------------------------

/// Shared evaluation context: the base `q`, the working precision in bits,
/// and the tail tolerance that truncation certifies against.
///
/// Construction validates `0 < q < 1`, `precision_bits >= 64` and
/// `tail_tol >= 2^-(precision_bits - 8)`, and precomputes `(q;q)_oo` with a
/// certified enclosure (it appears in nearly every tail majorant).
#[derive(Debug, Clone)]
pub struct QContext {
    q: Float,
    precision_bits: u32,
    tail_tol: Float,
    qq_inf: Float,
    qq_inf_rad: Float,
}

impl QContext {
    pub fn new(q: Float, precision_bits: u32, tail_tol: Float) -> Result<Self> {
        if !q.is_finite() || q <= 0 || q >= 1 {
            return Err(Error::Domain(format!("q must lie in (0,1), got {q}")));
        }
        if precision_bits < 64 {
            return Err(Error::Domain(format!(
                "precision_bits must be at least 64, got {precision_bits}"
            )));
        }
        let tol_floor = Float::with_val(precision_bits, Float::i_exp(1, 8 - precision_bits as i32));
        if !tail_tol.is_finite() || tail_tol <= 0 || tail_tol < tol_floor {
            return Err(Error::Domain(format!(
                "tail_tol must satisfy tail_tol >= 2^-(precision_bits-8), got {tail_tol}"
            )));
        }
        let q = Float::with_val(precision_bits, q);
        let tail_tol = Float::with_val(precision_bits, tail_tol);
        // Enclosure for (q;q)_oo, tighter than tail_tol so downstream bound
        // arithmetic is not limited by it.
        let tight = Float::with_val(precision_bits, Float::i_exp(1, -(precision_bits as i32)));
        let (qq_inf, qq_inf_rad, _) =
            real_qpoch_inf_enclosure(&q.as_neg().as_neg(), &q, precision_bits, &tight)?;
        Ok(QContext {
            q,
            precision_bits,
            tail_tol,
            qq_inf,
            qq_inf_rad,
        })
    }

    /// Context with the default tail tolerance `2^-(3 bits / 4)`.
    pub fn with_default_tol(q: Float, precision_bits: u32) -> Result<Self> {
        let tol = Float::with_val(
            precision_bits,
            Float::i_exp(1, -(3 * precision_bits as i32 / 4)),
        );
        QContext::new(q, precision_bits, tol)
    }

    /// Same `q` and tolerance policy at a different precision.
    pub fn at_precision(&self, precision_bits: u32) -> Result<Self> {
        QContext::with_default_tol(
            Float::with_val(precision_bits, &self.q),
            precision_bits,
        )
    }

    pub fn q(&self) -> &Float {
        &self.q
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn tail_tol(&self) -> &Float {
        &self.tail_tol
    }

    /// Midpoint of the precomputed `(q;q)_oo` enclosure.
    pub fn qq_inf(&self) -> &Float {
        &self.qq_inf
    }

    /// Certified lower bound of `(q;q)_oo`; use when it sits in a denominator
    /// of an upper bound.
    pub fn qq_inf_lower(&self) -> Float {
        (&self.qq_inf - &self.qq_inf_rad).complete(self.precision_bits)
    }

    /// Certified upper bound of `(q;q)_oo`.
    pub fn qq_inf_upper(&self) -> Float {
        (&self.qq_inf + &self.qq_inf_rad).complete(self.precision_bits)
    }

    /// New real at the context precision.
    pub fn float<T>(&self, v: T) -> Float
    where
        Float: rug::Assign<T>,
    {
        Float::with_val(self.precision_bits, v)
    }

    /// New complex at the context precision.
    pub fn complex<T>(&self, v: T) -> Complex
    where
        Complex: rug::Assign<T>,
    {
        Complex::with_val(self.precision_bits, v)
    }

    /// Multiply a bound by `1 + 2^-(prec/2)` so that rounding committed while
    /// *computing* the bound cannot make it understate the true tail.
    pub(crate) fn inflate(&self, bound: Float) -> Float {
        let one_plus = Float::with_val(
            self.precision_bits,
            Float::i_exp(1, -(self.precision_bits as i32 / 2)),
        ) + 1u32;
        bound * one_plus
    }
}

/// A truncated series/product evaluation: the partial value, a certified
/// absolute bound on everything discarded, and the number of terms summed.
#[derive(Debug, Clone)]
pub struct SeriesResult {
    pub value: Complex,
    pub tail_bound: Float,
    pub terms_used: usize,
}

impl SeriesResult {
    /// `|value| + tail_bound`: a certified upper bound for the absolute value
    /// of the full (untruncated) quantity.
    pub fn abs_upper(&self, ctx: &QContext) -> Float {
        let a = Float::with_val(ctx.precision_bits(), self.value.abs_ref());
        ctx.inflate(a + &self.tail_bound)
    }

    /// Real part plus tail, for quantities known to be real and positive.
    pub fn real_upper(&self, ctx: &QContext) -> Float {
        ctx.inflate((self.value.real() + &self.tail_bound).complete(ctx.precision_bits()))
    }

    /// Real part minus tail (clamped at zero), a lower bound for real
    /// positive quantities.
    pub fn real_lower(&self, ctx: &QContext) -> Float {
        let lo = (self.value.real() - &self.tail_bound).complete(ctx.precision_bits());
        if lo < 0 {
            ctx.float(0)
        } else {
            lo
        }
    }
}

// ---------------------------------------------------------------------------
// Pochhammer products
// ---------------------------------------------------------------------------

/// Finite product `(a;q)_n = prod_{k=0}^{n-1} (1 - a q^k)`; empty product is 1.
pub fn qpoch_finite(a: &Complex, ctx: &QContext, n: u64) -> Complex {
    let prec = ctx.precision_bits();
    let mut p = Complex::with_val(prec, 1);
    let mut aqk = a.clone();
    for _ in 0..n {
        let factor = (1u32 - &aqk).complete((prec, prec));
        p *= factor;
        aqk *= ctx.q();
    }
    p
}

/// Real-argument variant of [`qpoch_finite`].
pub fn qpoch_finite_real(a: &Float, ctx: &QContext, n: u64) -> Float {
    let prec = ctx.precision_bits();
    let mut p = Float::with_val(prec, 1);
    let mut aqk = a.clone();
    for _ in 0..n {
        p *= (1u32 - &aqk).complete(prec);
        aqk *= ctx.q();
    }
    p
}

/// `(q;q)_n` — the special case that shows up in every normalization.
pub fn qq_finite(ctx: &QContext, n: u64) -> Float {
    qpoch_finite_real(ctx.q(), ctx, n)
}

/// Infinite product `(a;q)_oo` with a certified tail bound.
///
/// The product is cut after `N` factors; the remaining factor is
/// `(a q^N; q)_oo = 1 + R1` with
/// `|R1| <= (-|a| q^2; q)_oo |a| q^N / (1-q) <= e^{|a| q^2/(1-q)} |a| q^N/(1-q)`,
/// so the reported tail bound is `|P_N|` times that envelope.
pub fn qpoch_infinite(a: &Complex, ctx: &QContext) -> Result<SeriesResult> {
    let prec = ctx.precision_bits();
    let q = ctx.q();
    let abs_a = Float::with_val(prec, a.abs_ref());
    if abs_a.is_zero() {
        return Ok(SeriesResult {
            value: Complex::with_val(prec, 1),
            tail_bound: ctx.float(0),
            terms_used: 1,
        });
    }
    // Envelope constant: e^{|a| q^2 / (1-q)} >= (-|a| q^2; q)_oo.
    let one_minus_q = (1u32 - q).complete(prec);
    let mut env_arg = (&abs_a * q).complete(prec);
    env_arg *= q;
    env_arg /= &one_minus_q;
    let envelope = env_arg.exp();

    let mut p = Complex::with_val(prec, 1);
    let mut aqk = a.clone();
    let mut abs_aqk = abs_a; // |a| q^k
    for k in 0..MAX_TERMS {
        let factor = (1u32 - &aqk).complete((prec, prec));
        if factor.is_zero() {
            // a = q^-k exactly: the product is exactly zero from here on.
            return Ok(SeriesResult {
                value: Complex::with_val(prec, 0),
                tail_bound: ctx.float(0),
                terms_used: k + 1,
            });
        }
        p *= factor;
        aqk *= q;
        abs_aqk *= q;
        // Remaining-product envelope after k+1 factors.
        let abs_p = Float::with_val(prec, p.abs_ref());
        let tail = abs_p * &envelope * &abs_aqk / &one_minus_q;
        if tail <= *ctx.tail_tol() {
            return Ok(SeriesResult {
                value: p,
                tail_bound: ctx.inflate(tail),
                terms_used: k + 1,
            });
        }
    }
    Err(Error::TailNotConverged {
        max_terms: MAX_TERMS,
    })
}

/// Certified enclosure `(mid, rad, factors)` of a *real* infinite product
/// `(a;q)_oo`, used where products sit inside other bounds.
fn real_qpoch_inf_enclosure(
    a: &Float,
    q: &Float,
    prec: u32,
    tol: &Float,
) -> Result<(Float, Float, usize)> {
    let abs_a = a.clone().abs();
    if abs_a.is_zero() {
        return Ok((Float::with_val(prec, 1), Float::with_val(prec, 0), 1));
    }
    let one_minus_q = (1u32 - q).complete(prec);
    let mut env_arg = (&abs_a * q).complete(prec);
    env_arg *= q;
    env_arg /= &one_minus_q;
    let envelope = env_arg.exp();
    let mut p = Float::with_val(prec, 1);
    let mut aqk = a.clone();
    let mut abs_aqk = abs_a;
    for k in 0..MAX_TERMS {
        p *= (1u32 - &aqk).complete(prec);
        aqk *= q;
        abs_aqk *= q;
        let tail = p.clone().abs() * &envelope * &abs_aqk / &one_minus_q;
        if tail <= *tol {
            // Inflate the radius directly (same role as QContext::inflate,
            // which is not available while the context is under construction).
            let slack =
                Float::with_val(prec, Float::i_exp(1, -(prec as i32 / 2))) + 1u32;
            return Ok((p, tail * slack, k + 1));
        }
    }
    Err(Error::TailNotConverged {
        max_terms: MAX_TERMS,
    })
}

/// `(a;q)_oo` for real `a`, as `(midpoint, radius)` with `tol`-certified radius.
pub(crate) fn qpoch_infinite_real_enclosure(
    a: &Float,
    ctx: &QContext,
    tol: &Float,
) -> Result<(Float, Float)> {
    let (mid, rad, _) = real_qpoch_inf_enclosure(a, ctx.q(), ctx.precision_bits(), tol)?;
    Ok((mid, rad))
}

// ---------------------------------------------------------------------------
// Gaussian binomial
// ---------------------------------------------------------------------------

/// `log (q;q)_m = sum_{j=1}^m log(1 - q^j)`, truncated once `q^j` is far below
/// one ulp of the running sum (the omitted `log(1-q^j)` terms sum to less than
/// `2 q^{J+1}/(1-q)`, which is kept under `2^-(prec+16)`).
fn log_qq_finite(ctx: &QContext, m: u64) -> Float {
    let prec = ctx.precision_bits();
    let q = ctx.q();
    let cutoff = Float::with_val(prec, Float::i_exp(1, -(prec as i32) - 20));
    let mut acc = Float::with_val(prec, 0);
    let mut qj = q.clone();
    for _ in 0..m {
        if qj < cutoff {
            break;
        }
        acc += (-qj.clone()).ln_1p();
        qj *= q;
    }
    acc
}

/// Gaussian binomial `[n,k]_q = (q;q)_n / ((q;q)_k (q;q)_{n-k})`, computed in
/// log-space so that very large `n` cannot underflow intermediate products.
///
/// Errors with [`Error::Domain`] when `k > n`.
pub fn qbinomial(ctx: &QContext, n: u64, k: u64) -> Result<Float> {
    if k > n {
        return Err(Error::Domain(format!(
            "qbinomial requires k <= n, got n = {n}, k = {k}"
        )));
    }
    if k == 0 || k == n {
        return Ok(ctx.float(1));
    }
    let l = log_qq_finite(ctx, n) - log_qq_finite(ctx, k) - log_qq_finite(ctx, n - k);
    Ok(l.exp())
}

// ---------------------------------------------------------------------------
// Entire functions A_q, B_q and the theta sum
// ---------------------------------------------------------------------------

/// `A_q(z) = sum_{k>=0} q^{k^2} (-z)^k / (q;q)_k` with a certified tail.
///
/// Truncation: stop before term `K` once the majorant
/// `mu_K = q^{K^2} |z|^K / (q;q)_oo` satisfies `mu_K / (1 - r) <= tail_tol`
/// with ratio majorant `r = q^{2K+1} |z| / (1-q) <= 1/2`.
pub fn ramanujan_aq(z: &Complex, ctx: &QContext) -> Result<SeriesResult> {
    ramanujan_aq_impl(z, ctx, 0)
}

pub(crate) fn ramanujan_aq_impl(
    z: &Complex,
    ctx: &QContext,
    mut extra_terms: usize,
) -> Result<SeriesResult> {
    let prec = ctx.precision_bits();
    let q = ctx.q();
    let abs_z = Float::with_val(prec, z.abs_ref());
    let neg_z = (-z).complete((prec, prec));
    let one_minus_q = (1u32 - q).complete(prec);
    let qq_lo = ctx.qq_inf_lower();

    let mut sum = Complex::with_val(prec, 1);
    let mut term = Complex::with_val(prec, 1);
    let mut q_pow_odd = q.clone(); // q^{2k+1} for the current k
    let mut qk1 = q.clone(); // q^{k+1}
    let mut majorant = (&abs_z * &q_pow_odd).complete(prec) / &qq_lo; // mu_{k+1}
    for k in 0..MAX_TERMS {
        // Candidate cut before summing term K = k+1.
        let mut ratio = (&q_pow_odd * q).complete(prec);
        ratio *= q;
        ratio *= &abs_z;
        ratio /= &one_minus_q;
        if ratio <= 0.5f32 {
            let tail = majorant.clone() / (1u32 - &ratio).complete(prec);
            if tail <= *ctx.tail_tol() {
                if extra_terms == 0 {
                    return Ok(SeriesResult {
                        value: sum,
                        tail_bound: ctx.inflate(tail),
                        terms_used: k + 1,
                    });
                }
                extra_terms -= 1;
            }
        }
        // term_{k+1} = term_k * q^{2k+1} * (-z) / (1 - q^{k+1})
        term *= (&q_pow_odd * &neg_z).complete((prec, prec));
        term /= (1u32 - &qk1).complete(prec);
        sum += &term;
        q_pow_odd *= q.clone().square();
        qk1 *= q;
        majorant *= (&q_pow_odd * &abs_z).complete(prec);
    }
    Err(Error::TailNotConverged {
        max_terms: MAX_TERMS,
    })
}

/// `B_q(x) = sum_{k>=0} q^{k^2} x^k / (q;q)_k` for real `x >= 0`.
///
/// All terms are nonnegative, so `B_q` majorizes `|A_q|` on circles; the
/// truncation rule matches [`ramanujan_aq`].
pub fn ramanujan_bq(x: &Float, ctx: &QContext) -> Result<SeriesResult> {
    if !x.is_finite() || *x < 0 {
        return Err(Error::Domain(format!(
            "ramanujan_bq requires x >= 0, got {x}"
        )));
    }
    let z = Complex::with_val(ctx.precision_bits(), (-x.clone(), 0));
    // B_q(x) = A_q(-x): reuse the same certified loop.
    ramanujan_aq(&z, ctx)
}

/// Bilateral theta sum `Theta(z|q) = 1 + sum_{n>=1} q^{n^2} (z^n + z^-n)`.
///
/// Requires `z != 0`. Truncation: stop after the pair `N` once
/// `mu = q^{(N+1)^2} M^{N+1} (1 + M^{-2(N+1)})` (with `M = max(|z|, 1/|z|)`)
/// satisfies `2 mu / (1-r) <= tail_tol` with `r = q^{2N+3} M <= 1/2`.
pub fn theta(z: &Complex, ctx: &QContext) -> Result<SeriesResult> {
    theta_impl(z, ctx, 0)
}

pub(crate) fn theta_impl(z: &Complex, ctx: &QContext, mut extra_terms: usize) -> Result<SeriesResult> {
    let prec = ctx.precision_bits();
    if z.is_zero() {
        return Err(Error::Domain("theta requires z != 0".into()));
    }
    let q = ctx.q();
    let abs_z = Float::with_val(prec, z.abs_ref());
    let m_big = if abs_z >= 1 {
        abs_z.clone()
    } else {
        abs_z.clone().recip()
    };
    let z_inv = z.clone().recip();

    let mut sum = Complex::with_val(prec, 1);
    let mut zp = Complex::with_val(prec, 1); // z^n
    let mut zm = Complex::with_val(prec, 1); // z^-n
    let mut qsq = Float::with_val(prec, 1); // q^{n^2}
    let mut q_odd = q.clone(); // q^{2n+1} for current n
    let mut mu_pow = m_big.clone(); // M^{n+1}
    let mut pairs = 0usize;
    for n in 0..MAX_TERMS {
        // Candidate cut: next pair index is n+1.
        let mu_next = (&qsq * &q_odd).complete(prec); // q^{(n+1)^2}
        let mut ratio = (&q_odd * q).complete(prec);
        ratio *= q;
        ratio *= &m_big;
        if ratio <= 0.5f32 {
            let tail = ctx.float(2) * &mu_next * &mu_pow / (1u32 - &ratio).complete(prec);
            if tail <= *ctx.tail_tol() {
                if extra_terms == 0 {
                    return Ok(SeriesResult {
                        value: sum,
                        tail_bound: ctx.inflate(tail),
                        terms_used: 1 + 2 * pairs,
                    });
                }
                extra_terms -= 1;
            }
        }
        let _ = n;
        zp *= z;
        zm *= &z_inv;
        qsq *= &q_odd;
        let pair = (&zp + &zm).complete((prec, prec));
        sum += pair * &qsq;
        q_odd *= q.clone().square();
        mu_pow *= &m_big;
        pairs += 1;
    }
    Err(Error::TailNotConverged {
        max_terms: MAX_TERMS,
    })
}

// ---------------------------------------------------------------------------
// Remainder factors R1, R2 and their envelopes
// ---------------------------------------------------------------------------

/// `R1(a;n) = (a q^n; q)_oo - 1` for real `a > 0`.
pub fn r1_actual(a: &Float, ctx: &QContext, n: u64) -> Result<Float> {
    check_r_domain(a, "r1", ctx, n)?;
    let arg = shifted_arg(a, ctx, n);
    let (mid, _) = qpoch_infinite_real_enclosure(&arg, ctx, ctx.tail_tol())?;
    Ok(mid - 1u32)
}

/// Envelope `|R1(a;n)| <= (-a q^2; q)_oo a q^n / (1-q)` (valid for `n >= 1`).
pub fn r1_bound(a: &Float, ctx: &QContext, n: u64) -> Result<Float> {
    check_r_domain(a, "r1", ctx, n)?;
    let prec = ctx.precision_bits();
    let neg_aq2 = (-a.clone()) * ctx.q() * ctx.q();
    let (mid, rad) = qpoch_infinite_real_enclosure(&neg_aq2, ctx, ctx.tail_tol())?;
    let upper = mid + rad;
    let one_minus_q = (1u32 - ctx.q()).complete(prec);
    Ok(ctx.inflate(upper * shifted_arg(a, ctx, n) / one_minus_q))
}

/// `R2(a;n) = 1/(a q^n; q)_oo - 1` for real `a` with `0 < a q < 1`.
pub fn r2_actual(a: &Float, ctx: &QContext, n: u64) -> Result<Float> {
    check_r2_domain(a, ctx, n)?;
    let arg = shifted_arg(a, ctx, n);
    let (mid, _) = qpoch_infinite_real_enclosure(&arg, ctx, ctx.tail_tol())?;
    Ok(mid.recip() - 1u32)
}

/// Envelope `|R2(a;n)| <= a q^n / ((1-q) (a q; q)_oo)` (valid for `n >= 1`).
pub fn r2_bound(a: &Float, ctx: &QContext, n: u64) -> Result<Float> {
    check_r2_domain(a, ctx, n)?;
    let prec = ctx.precision_bits();
    let aq = (a * ctx.q()).complete(prec);
    let (mid, rad) = qpoch_infinite_real_enclosure(&aq, ctx, ctx.tail_tol())?;
    let lower = mid - rad;
    if lower <= 0 {
        return Err(Error::PrecisionExhausted(
            "(a q; q)_oo enclosure straddles zero".into(),
        ));
    }
    let one_minus_q = (1u32 - ctx.q()).complete(prec);
    Ok(ctx.inflate(shifted_arg(a, ctx, n) / (one_minus_q * lower)))
}

fn shifted_arg(a: &Float, ctx: &QContext, n: u64) -> Float {
    let prec = ctx.precision_bits();
    let qn = Float::with_val(prec, ctx.q().pow_u64_ref(n));
    a * qn
}

fn check_r_domain(a: &Float, which: &str, _ctx: &QContext, _n: u64) -> Result<()> {
    if !a.is_finite() || *a <= 0 {
        return Err(Error::Domain(format!("{which} requires a > 0, got {a}")));
    }
    Ok(())
}

fn check_r2_domain(a: &Float, ctx: &QContext, n: u64) -> Result<()> {
    check_r_domain(a, "r2", ctx, n)?;
    let aq = (a * ctx.q()).complete(ctx.precision_bits());
    if aq >= 1 {
        return Err(Error::Domain(format!(
            "r2 requires 0 < a q < 1, got a q = {aq}"
        )));
    }
    Ok(())
}

// Small extension trait: rug has pow_u for u32; lift to u64 by squaring.
trait PowU64 {
    fn pow_u64_ref(&self, n: u64) -> Float;
}

impl PowU64 for Float {
    fn pow_u64_ref(&self, mut n: u64) -> Float {
        let prec = self.prec();
        let mut base = self.clone();
        let mut acc = Float::with_val(prec, 1);
        while n > 0 {
            if n & 1 == 1 {
                acc *= &base;
            }
            n >>= 1;
            if n > 0 {
                base.square_mut();
            }
        }
        acc
    }
}

/// `q^e` for a real exponent `e` (via `exp(e log q)`), used for fractional
/// powers like `q^{tau n}` and `q^{chi(m)+lambda}`.
pub fn q_pow_real(ctx: &QContext, e: &Float) -> Float {
    let prec = ctx.precision_bits();
    let logq = Float::with_val(prec, ctx.q().ln_ref());
    let _ = prec;
    (e * logq).exp()
}

// Silence the unused import warning for Special (used in tests).
#[allow(unused)]
fn _special_marker(_s: Special) {}

// ---------------------------------------------------------------------------
