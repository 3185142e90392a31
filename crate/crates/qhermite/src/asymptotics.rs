//! Seven-regime asymptotic analysis of the scaled polynomial family.
//!
//! The behaviour of the normalized sum `H_n = h_n(sinh xi_n | q) / (z^n
//! q^{-n^2 s})` for large `n` is governed by the scale exponent `tau` and the
//! rotation number `theta`: the sign of `tau` and the rationality of the two
//! parameters split the parameter space into seven regimes, each with its own
//! closed-form main term and explicit error bound.  This module classifies
//! parameters into regimes, assembles the per-`n` arithmetic data (integer
//! parts, fractional parts, Diophantine hit residuals, depth indices),
//! evaluates main terms and certified error bounds, and compares them against
//! the exactly evaluated sum.
//!
//! Every comparison is honest: the reported `pass` flag uses the proved bound
//! plus a certified evaluation tolerance (series truncation tails on both
//! sides and a rounding allowance far above the working precision), never a
//! fudge factor.  Hit indices `n` that fail their Diophantine admissibility
//! condition are rejected with an error instead of being silently scored.

use std::fmt;

use rug::ops::{CompleteRound, DivRounding, Pow};
use rug::{Complex, Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::ismail_masson::{hn_normalized, nu_n_log, nu_n_strip, prefactor_log, ScalingParams};
use crate::numtheory::{residual_precision, ExactReal, RealDescriptor};
use crate::qseries::{
    q_pow_real, qpoch_infinite_real_enclosure, ramanujan_aq, ramanujan_bq, theta, QContext,
    SeriesResult,
};

// ---------------------------------------------------------------------------
// Regimes and classification
// ---------------------------------------------------------------------------

/// The seven asymptotic regimes, determined by the sign of the scale exponent
/// `tau` and the rationality of `tau` and the rotation number `theta`.
///
/// | regime | `tau`              | `theta`    | main term                |
/// |--------|--------------------|------------|--------------------------|
/// | 1      | `> 0`              | any        | `1`                      |
/// | 2      | `= 0`              | rational   | entire-function value    |
/// | 3      | `= 0`              | irrational | entire-function value    |
/// | 4      | `(-1,0)` rational  | rational   | theta-function value     |
/// | 5      | `(-1,0)` rational  | irrational | theta-function value     |
/// | 6      | `(-1,0)` irrational| rational   | theta-function value     |
/// | 7      | `(-1,0)` irrational| irrational | theta-function value     |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `tau > 0`: the normalized sum converges to `1`.
    TauPositive,
    /// `tau = 0` with rational `theta`: main term along residue-class
    /// progressions of `n`.
    CriticalRational,
    /// `tau = 0` with irrational `theta`: main term along certified
    /// Diophantine hit sequences.
    CriticalIrrational,
    /// `-1 < tau < 0`, both parameters rational: exact orbit arithmetic.
    StripRationalRational,
    /// `-1 < tau < 0` rational scale, irrational rotation.
    StripRationalIrrational,
    /// `-1 < tau < 0` irrational scale, rational rotation.
    StripIrrationalRational,
    /// `-1 < tau < 0`, both parameters irrational.
    StripIrrationalIrrational,
}

impl Regime {
    /// Conventional index `1..=7` of the regime.
    pub fn index(self) -> u8 {
        match self {
            Regime::TauPositive => 1,
            Regime::CriticalRational => 2,
            Regime::CriticalIrrational => 3,
            Regime::StripRationalRational => 4,
            Regime::StripRationalIrrational => 5,
            Regime::StripIrrationalRational => 6,
            Regime::StripIrrationalIrrational => 7,
        }
    }

    /// Whether the regime's error bound involves a depth index `nu_n`.
    pub fn needs_depth_index(self) -> bool {
        !matches!(
            self,
            Regime::TauPositive | Regime::CriticalRational
        )
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let desc = match self {
            Regime::TauPositive => "tau > 0",
            Regime::CriticalRational => "tau = 0, rational rotation",
            Regime::CriticalIrrational => "tau = 0, irrational rotation",
            Regime::StripRationalRational => "-1 < tau < 0, rational scale and rotation",
            Regime::StripRationalIrrational => "-1 < tau < 0, rational scale, irrational rotation",
            Regime::StripIrrationalRational => "-1 < tau < 0, irrational scale, rational rotation",
            Regime::StripIrrationalIrrational => "-1 < tau < 0, irrational scale and rotation",
        };
        write!(f, "regime {} ({desc})", self.index())
    }
}

/// Decide which regime the scaling parameters fall into.
///
/// The sign of `tau` is decided exactly (rationals and quadratic surds are
/// compared symbolically; decimal inputs by their certified enclosure).  A
/// decimal claimed irrational whose enclosure straddles a decision boundary
/// is rejected rather than guessed at.
pub fn classify(params: &ScalingParams) -> Result<Regime> {
    let tau = params.tau.to_exact();
    let sign = tau.sign()?;
    if sign > 0 {
        return Ok(Regime::TauPositive);
    }
    let theta_irrational = params.theta.is_irrational();
    if sign == 0 {
        return Ok(if theta_irrational {
            Regime::CriticalIrrational
        } else {
            Regime::CriticalRational
        });
    }
    // The constructor already guarantees tau > -1; re-verify so that
    // classification stays safe for any value it is handed.
    if tau.add_rat(&Rational::from(1)).sign()? <= 0 {
        return Err(Error::Domain(
            "the scale exponent must exceed -1".into(),
        ));
    }
    Ok(match (params.tau.is_irrational(), theta_irrational) {
        (false, false) => Regime::StripRationalRational,
        (false, true) => Regime::StripRationalIrrational,
        (true, false) => Regime::StripIrrationalRational,
        (true, true) => Regime::StripIrrationalIrrational,
    })
}

// ---------------------------------------------------------------------------
// Diophantine targets
// ---------------------------------------------------------------------------

/// Targets for the Diophantine hit equations used by the irrational-parameter
/// regimes.
///
/// A hit at index `n` means `n x = m + beta + residual` with `m` the nearest
/// integer to `n x - beta` and `|residual| <= n^-rho`.  In regimes 3 and 5 the
/// hit equation runs on `theta` with target `beta1`; in regime 6 on `-tau`
/// with target `beta1`; in regime 7 on both parameters with targets `beta1`
/// (for `-tau`) and `beta2` (for `theta`).
#[derive(Debug, Clone)]
pub struct Targets {
    /// Fractional target for the first hit equation, in `[0, 1)`.
    pub beta1: RealDescriptor,
    /// Fractional target for the second hit equation (regime 7 only).
    pub beta2: RealDescriptor,
    /// Approximation-rate exponent: hits must satisfy `|residual| <= n^-rho`.
    /// Must be positive, and for the bounds to be meaningful it should stay
    /// below `omega - 1` where `omega` is the approximation exponent of the
    /// parameter relative to the target.
    pub rho: f64,
}

impl Default for Targets {
    /// Zero targets with `rho = 0.9`, valid for every quadratic surd (whose
    /// approximation exponent relative to `0` is exactly `2`).
    fn default() -> Self {
        Targets {
            beta1: RealDescriptor::integer(0),
            beta2: RealDescriptor::integer(0),
            rho: 0.9,
        }
    }
}

impl Targets {
    /// Check that the exponent is positive and both targets lie in `[0, 1)`.
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Domain(format!(
                "approximation-rate exponent rho must be positive and finite, got {}",
                self.rho
            )));
        }
        for (name, beta) in [("beta1", &self.beta1), ("beta2", &self.beta2)] {
            let b = beta.to_exact();
            if b.sign()? < 0 || b.add_rat(&Rational::from(-1)).sign()? >= 0 {
                return Err(Error::Domain(format!(
                    "hit target {name} must lie in [0, 1), got {beta}"
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Per-n arithmetic data
// ---------------------------------------------------------------------------

/// The integer and fractional data entering a regime's main term and error
/// bound at one index `n`.  Fields are populated per regime:
///
/// | regime | populated fields                             |
/// |--------|----------------------------------------------|
/// | 1      | none                                         |
/// | 2      | `m`, `lambda`                                |
/// | 3      | `m`, `beta`, `gamma_n`, `nu_n`, `rho`        |
/// | 4      | `m`, `m1`, `lambda`, `lambda1`, `nu_n`       |
/// | 5      | `m`, `m1`, `c_n`, `beta`, `b_n`, `nu_n`, `rho` |
/// | 6      | `m`, `m1`, `d_n`, `beta`, `a_n`, `nu_n`, `rho` |
/// | 7      | `m`, `m1`, `beta1`, `beta2`, `a_n`, `b_n`, `nu_n`, `rho` |
///
/// `m` is the integer part (or hit integer) attached to the scale equation
/// where one exists, and the rotation equation in regimes 2 and 3; `m1` is
/// the rotation-equation integer in regimes 4-7.  `lambda`/`lambda1` are
/// exact rational fractional parts; `c_n = {-tau n}` and `d_n = {n theta}`
/// are the same quantities when only needed as floats; `beta`, `beta1`,
/// `beta2` are hit targets and `gamma_n`, `a_n`, `b_n` the signed hit
/// residuals; `nu_n` is the truncation depth index of the error bound.
#[derive(Debug, Clone, Default)]
pub struct RegimeArithmetic {
    pub m: Option<Integer>,
    pub m1: Option<Integer>,
    pub lambda: Option<Rational>,
    pub lambda1: Option<Rational>,
    pub beta: Option<Float>,
    pub beta1: Option<Float>,
    pub beta2: Option<Float>,
    pub gamma_n: Option<Float>,
    pub a_n: Option<Float>,
    pub b_n: Option<Float>,
    pub c_n: Option<Float>,
    pub d_n: Option<Float>,
    pub nu_n: Option<u64>,
    pub rho: Option<f64>,
}

fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T> {
    field.as_ref().ok_or_else(|| {
        Error::Domain(format!(
            "arithmetic data is missing `{name}`, which this regime requires"
        ))
    })
}

/// Split `n x` for rational `x` into `(floor(n x), {n x})`, exactly.
fn split_scaled(x: &Rational, n: u64) -> (Integer, Rational) {
    let scaled = x * Rational::from(Integer::from(n));
    let fl = scaled.numer().clone().div_floor(scaled.denom().clone());
    let frac = scaled - Rational::from(fl.clone());
    (fl, frac)
}

fn rational_of(x: &RealDescriptor, role: &str) -> Result<Rational> {
    x.as_rational()
        .ok_or_else(|| Error::Domain(format!("{role} must be rational in this regime")))
}

/// One certified Diophantine hit: `n x = m + beta + residual`.
struct CertifiedHit {
    m: Integer,
    residual: Float,
}

/// Certify `n x = m + beta + residual` with `m` nearest to `n x - beta` and
/// `|residual| <= n^-rho`, by interval comparison with the threshold deflated
/// one part in `2^{prec/2}` so borderline residuals are rejected, never
/// admitted.
fn certified_hit(
    x: &ExactReal,
    beta: &RealDescriptor,
    n: u64,
    rho: f64,
    prec: u32,
) -> Result<CertifiedHit> {
    let n_i64 = i64::try_from(n).map_err(|_| Error::Overflow)?;
    let bits = residual_precision(prec, n);
    let y = x.mul_int(n_i64).sub(&beta.to_exact(), bits);
    let m = y.round_nearest()?;
    let residual = y.add_rat(&Rational::from(-m.clone()));
    let (lo, hi) = residual.enclose(bits);
    let abs_hi = Float::with_val(prec, std::cmp::max(lo.abs(), hi.abs()));
    let thr = (-Float::with_val(prec, rho) * Float::with_val(prec, n).ln()).exp();
    let slack = Float::with_val(prec, Float::i_exp(1, -((prec / 2) as i32)));
    let thr_lo = thr * (1u32 - slack);
    if abs_hi > thr_lo {
        return Err(Error::Domain(format!(
            "index n = {n} is not admissible: |n x - {m} - beta| ~ {:.3e} exceeds n^-rho ~ {:.3e}",
            abs_hi.to_f64(),
            thr_lo.to_f64()
        )));
    }
    Ok(CertifiedHit {
        m,
        residual: residual.to_float(prec),
    })
}

/// Classify the parameters and assemble the arithmetic data for index `n`.
///
/// Rational splits are computed exactly; hit equations are certified against
/// the `|residual| <= n^-rho` admissibility condition and rejected with an
/// error when `n` does not satisfy it.
pub fn arithmetic_for(
    params: &ScalingParams,
    ctx: &QContext,
    n: u64,
    targets: &Targets,
) -> Result<(Regime, RegimeArithmetic)> {
    if n == 0 {
        return Err(Error::Domain("the index n must be at least 1".into()));
    }
    targets.validate()?;
    let regime = classify(params)?;
    let prec = ctx.precision_bits();
    let mut arith = RegimeArithmetic::default();
    match regime {
        Regime::TauPositive => {}
        Regime::CriticalRational => {
            let theta = rational_of(&params.theta, "the rotation number")?;
            let (m, lambda) = split_scaled(&theta, n);
            arith.m = Some(m);
            arith.lambda = Some(lambda);
        }
        Regime::CriticalIrrational => {
            let hit = certified_hit(&params.theta.to_exact(), &targets.beta1, n, targets.rho, prec)?;
            arith.m = Some(hit.m);
            arith.beta = Some(targets.beta1.eval(prec));
            arith.gamma_n = Some(hit.residual);
            arith.nu_n = Some(nu_n_log(ctx, n)?);
            arith.rho = Some(targets.rho);
        }
        Regime::StripRationalRational => {
            let neg_tau = -rational_of(&params.tau, "the scale exponent")?;
            let (m, lambda) = split_scaled(&neg_tau, n);
            let theta = rational_of(&params.theta, "the rotation number")?;
            let (m1, lambda1) = split_scaled(&theta, n);
            arith.m = Some(m);
            arith.m1 = Some(m1);
            arith.lambda = Some(lambda);
            arith.lambda1 = Some(lambda1);
            arith.nu_n = Some(nu_n_strip(&params.tau, n)?);
        }
        Regime::StripRationalIrrational => {
            let neg_tau = -rational_of(&params.tau, "the scale exponent")?;
            let (m, c_n) = split_scaled(&neg_tau, n);
            let hit = certified_hit(&params.theta.to_exact(), &targets.beta1, n, targets.rho, prec)?;
            arith.m = Some(m);
            arith.m1 = Some(hit.m);
            arith.c_n = Some(Float::with_val(prec, &c_n));
            arith.beta = Some(targets.beta1.eval(prec));
            arith.b_n = Some(hit.residual);
            arith.nu_n = Some(nu_n_log(ctx, n)?);
            arith.rho = Some(targets.rho);
        }
        Regime::StripIrrationalRational => {
            let hit = certified_hit(
                &params.tau.to_exact().neg(),
                &targets.beta1,
                n,
                targets.rho,
                prec,
            )?;
            let theta = rational_of(&params.theta, "the rotation number")?;
            let (m1, d_n) = split_scaled(&theta, n);
            arith.m = Some(hit.m);
            arith.m1 = Some(m1);
            arith.d_n = Some(Float::with_val(prec, &d_n));
            arith.beta = Some(targets.beta1.eval(prec));
            arith.a_n = Some(hit.residual);
            arith.nu_n = Some(nu_n_log(ctx, n)?);
            arith.rho = Some(targets.rho);
        }
        Regime::StripIrrationalIrrational => {
            let hit1 = certified_hit(
                &params.tau.to_exact().neg(),
                &targets.beta1,
                n,
                targets.rho,
                prec,
            )?;
            let hit2 =
                certified_hit(&params.theta.to_exact(), &targets.beta2, n, targets.rho, prec)?;
            arith.m = Some(hit1.m);
            arith.m1 = Some(hit2.m);
            arith.beta1 = Some(targets.beta1.eval(prec));
            arith.beta2 = Some(targets.beta2.eval(prec));
            arith.a_n = Some(hit1.residual);
            arith.b_n = Some(hit2.residual);
            arith.nu_n = Some(nu_n_log(ctx, n)?);
            arith.rho = Some(targets.rho);
        }
    }
    Ok((regime, arith))
}

// ---------------------------------------------------------------------------
// Main terms
// ---------------------------------------------------------------------------

/// `e^{2 pi i t}` at `prec` bits.
fn unit_phase(t: Float, prec: u32) -> Complex {
    let two_pi = 2u32 * Float::with_val(prec, rug::float::Constant::Pi);
    let (sin, cos) = (t * two_pi).sin_cos(Float::new(prec));
    Complex::with_val(prec, (cos, sin))
}

/// Entire-function main term `A(e^{2 pi i t} / z^2)` shared by regimes 2/3.
fn critical_main(params: &ScalingParams, ctx: &QContext, t: Float) -> Result<SeriesResult> {
    let prec = ctx.precision_bits();
    let z_sq = (&params.z * &params.z).complete((prec, prec));
    let w = unit_phase(t, prec) / z_sq;
    ramanujan_aq(&w, ctx)
}

/// Theta-function main term `Theta(-z^2 q^{chi(m) + u} e^{-2 pi i v} | q)`
/// shared by regimes 4-7.
fn strip_main(
    params: &ScalingParams,
    ctx: &QContext,
    m: &Integer,
    u: &Float,
    v: &Float,
) -> Result<SeriesResult> {
    let prec = ctx.precision_bits();
    let parity = u32::from(m.is_odd());
    let exponent = (parity + u).complete(prec);
    let mag = q_pow_real(ctx, &exponent);
    let z_sq = (&params.z * &params.z).complete((prec, prec));
    let mut w = z_sq * mag;
    w *= unit_phase(-v.clone(), prec);
    theta(&(-w), ctx)
}

/// Evaluate the regime's main term with a certified truncation tail.
///
/// Regime 1's main term is the constant `1`; regimes 2/3 evaluate the entire
/// function `A` at a point on the circle of radius `|z|^-2`; regimes 4-7
/// evaluate a theta function whose argument combines the parity of `m`, a
/// fractional power of `q`, and a unit phase.
pub fn main_term(
    params: &ScalingParams,
    ctx: &QContext,
    regime: Regime,
    arith: &RegimeArithmetic,
) -> Result<SeriesResult> {
    let prec = ctx.precision_bits();
    match regime {
        Regime::TauPositive => Ok(SeriesResult {
            value: ctx.complex(1),
            tail_bound: ctx.float(0),
            terms_used: 1,
        }),
        Regime::CriticalRational => {
            let lambda = require(&arith.lambda, "lambda")?;
            critical_main(params, ctx, Float::with_val(prec, lambda))
        }
        Regime::CriticalIrrational => {
            let beta = require(&arith.beta, "beta")?;
            critical_main(params, ctx, beta.clone())
        }
        Regime::StripRationalRational => {
            let m = require(&arith.m, "m")?;
            let lambda = Float::with_val(prec, require(&arith.lambda, "lambda")?);
            let lambda1 = Float::with_val(prec, require(&arith.lambda1, "lambda1")?);
            strip_main(params, ctx, m, &lambda, &lambda1)
        }
        Regime::StripRationalIrrational => {
            let m = require(&arith.m, "m")?;
            let c_n = require(&arith.c_n, "c_n")?;
            let beta = require(&arith.beta, "beta")?;
            strip_main(params, ctx, m, c_n, beta)
        }
        Regime::StripIrrationalRational => {
            let m = require(&arith.m, "m")?;
            let beta = require(&arith.beta, "beta")?;
            let d_n = require(&arith.d_n, "d_n")?;
            strip_main(params, ctx, m, beta, d_n)
        }
        Regime::StripIrrationalIrrational => {
            let m = require(&arith.m, "m")?;
            let beta1 = require(&arith.beta1, "beta1")?;
            let beta2 = require(&arith.beta2, "beta2")?;
            strip_main(params, ctx, m, beta1, beta2)
        }
    }
}

// ---------------------------------------------------------------------------
// Error bounds
// ---------------------------------------------------------------------------

/// Certified upper value of `(-q^3; q)_oo`.
fn aux_product_upper(ctx: &QContext) -> Result<Float> {
    let neg_q3 = -(ctx.q().clone().pow(3u32));
    let (mid, rad) = qpoch_infinite_real_enclosure(&neg_q3, ctx, ctx.tail_tol())?;
    Ok(mid + rad)
}

/// `x^e` for positive real `x` and real `e`, via `exp(e ln x)`.
fn pow_real(prec: u32, x: &Float, e: &Float) -> Float {
    (Float::with_val(prec, x.ln_ref()) * e).exp()
}

/// Shared constant of the critical-line bounds:
/// `k (-q^3; q)_oo B(|z|^-2) / ((1-q) (q; q)_oo)`, rounded upward.
fn critical_constant(params: &ScalingParams, ctx: &QContext, k: u32) -> Result<Float> {
    let prec = ctx.precision_bits();
    let aux_up = aux_product_upper(ctx)?;
    let x = params.abs_z(ctx).square().recip();
    let envelope_up = ramanujan_bq(&x, ctx)?.real_upper(ctx);
    let denom = (1u32 - ctx.q()).complete(prec) * ctx.qq_inf_lower();
    Ok(Float::with_val(prec, k) * aux_up * envelope_up / denom)
}

/// Shared constant of the strip bounds:
/// `k (-q^3; q)_oo^2 Theta(|z|^2 | q^{1/2}) / ((1-q)^2 (q; q)_oo)`, rounded
/// upward.
fn strip_constant(params: &ScalingParams, ctx: &QContext, k: u32) -> Result<Float> {
    let prec = ctx.precision_bits();
    let aux_sq_up = aux_product_upper(ctx)?.square();
    // Theta at the square-root nome needs its own evaluation context.
    let half_nome_ctx = QContext::new(
        ctx.q().clone().sqrt(),
        prec,
        ctx.tail_tol().clone(),
    )?;
    let arg = half_nome_ctx.complex(params.abs_z(ctx).square());
    let theta_up = theta(&arg, &half_nome_ctx)?.real_upper(&half_nome_ctx);
    let denom = (1u32 - ctx.q()).complete(prec).square() * ctx.qq_inf_lower();
    Ok(Float::with_val(prec, k) * aux_sq_up * theta_up / denom)
}

/// `ln^2 n / n^rho` at `prec` bits.
fn hit_decay(prec: u32, n: u64, rho: f64) -> Float {
    let ln_n = Float::with_val(prec, n).ln();
    let power = (-Float::with_val(prec, rho) * &ln_n).exp();
    ln_n.square() * power
}

fn depth_index(regime: Regime, arith: &RegimeArithmetic, n: u64) -> Result<u64> {
    let nu = *require(&arith.nu_n, "nu_n")?;
    if nu < 1 {
        return Err(Error::NSmall {
            n,
            reason: format!(
                "{regime} requires a truncation depth of at least 1, but nu_n = {nu}; \
                 increase n until the depth index becomes positive"
            ),
        });
    }
    Ok(nu)
}

/// Evaluate the regime's proved error bound at index `n`, rounded upward.
///
/// All infinite products and series entering the constants are replaced by
/// certified one-sided enclosures (upper in the numerator, lower in the
/// denominator), and the assembled bound is inflated by one part in
/// `2^{prec/2}` to absorb the remaining roundings.  Returns
/// [`Error::NSmall`] when the regime's truncation depth `nu_n` has not yet
/// reached `1`, i.e. when `n` is too small for the bound to apply.
pub fn error_bound(
    params: &ScalingParams,
    ctx: &QContext,
    n: u64,
    regime: Regime,
    arith: &RegimeArithmetic,
) -> Result<Float> {
    if n == 0 {
        return Err(Error::Domain("the index n must be at least 1".into()));
    }
    let prec = ctx.precision_bits();
    let abs_z = params.abs_z(ctx);
    let bound = match regime {
        Regime::TauPositive => {
            // q B(q^2 |z|^-2) q^{n tau} / ((1 - q) |z|^2)
            let z_sq = abs_z.square();
            let x = ctx.q().clone().square() / &z_sq;
            let envelope_up = ramanujan_bq(&x, ctx)?.real_upper(ctx);
            let n_tau = params
                .tau
                .to_exact()
                .mul_int(i64::try_from(n).map_err(|_| Error::Overflow)?)
                .to_float(prec);
            let decay = q_pow_real(ctx, &n_tau);
            let denom = (1u32 - ctx.q()).complete(prec) * z_sq;
            ctx.q().clone() * envelope_up * decay / denom
        }
        Regime::CriticalRational => {
            // C2 { q^{n/2} + q^{n^2/4} / |z|^{2 floor(n/2)} }
            let constant = critical_constant(params, ctx, 3)?;
            let half_n = Float::with_val(prec, n) / 2u32;
            let quarter_n_sq = Float::with_val(prec, n).square() / 4u32;
            let z_power = Float::with_val(prec, 2 * (n / 2));
            let brace =
                q_pow_real(ctx, &half_n) + q_pow_real(ctx, &quarter_n_sq) / pow_real(prec, &abs_z, &z_power);
            constant * brace
        }
        Regime::CriticalIrrational => {
            // C3 { ln^2 n / n^rho + q^{nu^2} / |z|^{2 nu} }
            let constant = critical_constant(params, ctx, 48)?;
            let nu = depth_index(regime, arith, n)?;
            let rho = *require(&arith.rho, "rho")?;
            let nu_sq = Float::with_val(prec, nu).square();
            let z_power = Float::with_val(prec, 2 * nu);
            let brace =
                hit_decay(prec, n, rho) + q_pow_real(ctx, &nu_sq) / pow_real(prec, &abs_z, &z_power);
            constant * brace
        }
        Regime::StripRationalRational => {
            // C4 { q^nu + q^{nu^2} |z|^{2 nu} + q^{nu^2/2} / |z|^{2 nu} }
            let constant = strip_constant(params, ctx, 14)?;
            let nu = depth_index(regime, arith, n)?;
            let nu_f = Float::with_val(prec, nu);
            let nu_sq = nu_f.clone().square();
            let half_nu_sq = nu_sq.clone() / 2u32;
            let z_power = pow_real(prec, &abs_z, &Float::with_val(prec, 2 * nu));
            let brace = q_pow_real(ctx, &nu_f)
                + q_pow_real(ctx, &nu_sq) * &z_power
                + q_pow_real(ctx, &half_nu_sq) / &z_power;
            constant * brace
        }
        Regime::StripRationalIrrational
        | Regime::StripIrrationalRational
        | Regime::StripIrrationalIrrational => {
            // C5 { |z|^{2 nu} q^{nu^2} + q^{nu^2/2} / |z|^{2 nu} + ln^2 n / n^rho }
            let constant = strip_constant(params, ctx, 62)?;
            let nu = depth_index(regime, arith, n)?;
            let rho = *require(&arith.rho, "rho")?;
            let nu_sq = Float::with_val(prec, nu).square();
            let half_nu_sq = nu_sq.clone() / 2u32;
            let z_power = pow_real(prec, &abs_z, &Float::with_val(prec, 2 * nu));
            let brace = q_pow_real(ctx, &nu_sq) * &z_power
                + q_pow_real(ctx, &half_nu_sq) / &z_power
                + hit_decay(prec, n, rho);
            constant * brace
        }
    };
    Ok(ctx.inflate(bound))
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Outcome of comparing the exactly evaluated sum against a regime's main
/// term at one index `n`.
///
/// `exact` is the normalized sum itself in regimes 1-3 and the
/// prefactor-scaled, theta-comparable quantity in regimes 4-7.  `pass` holds
/// when `abs_diff <= bound + tolerance`, where `tolerance` collects the
/// certified truncation tails of both sides plus a rounding allowance of
/// `2^{16-prec} (1 + |exact| + |main|)`.  When the bound does not yet apply
/// because the truncation depth is zero, `n_small` is set, `bound` is NaN,
/// and `pass` is false.
#[derive(Debug, Clone)]
pub struct RegimeReport {
    pub regime: Regime,
    pub n: u64,
    pub arithmetic: RegimeArithmetic,
    pub exact: Complex,
    pub main: Complex,
    pub abs_diff: Float,
    pub bound: Float,
    pub tolerance: Float,
    pub pass: bool,
    pub n_small: bool,
}

/// Evaluate both sides of the regime comparison at index `n` and report the
/// outcome.
pub fn verify(
    params: &ScalingParams,
    ctx: &QContext,
    n: u64,
    targets: &Targets,
) -> Result<RegimeReport> {
    let (regime, arithmetic) = arithmetic_for(params, ctx, n, targets)?;
    let prec = ctx.precision_bits();

    let h = hn_normalized(params, ctx, n)?;
    let (exact, exact_tail) = match regime {
        Regime::TauPositive | Regime::CriticalRational | Regime::CriticalIrrational => {
            let value = Complex::with_val(prec, &h.value);
            (value, h.tail_bound.clone())
        }
        _ => {
            let m = require(&arithmetic.m, "m")?;
            let prefactor = prefactor_log(params, ctx, n, m)?.materialize(prec)?;
            let scaled = (&h.value * &prefactor).complete((prec, prec));
            let scale = Float::with_val(prec, prefactor.abs_ref());
            (scaled, h.tail_bound.clone() * scale)
        }
    };

    let main = main_term(params, ctx, regime, &arithmetic)?;
    let (bound, n_small) = match error_bound(params, ctx, n, regime, &arithmetic) {
        Ok(b) => (b, false),
        Err(Error::NSmall { .. }) => (Float::with_val(prec, f64::NAN), true),
        Err(e) => return Err(e),
    };

    let diff = (&exact - &main.value).complete((prec, prec));
    let abs_diff = Float::with_val(prec, diff.abs_ref());

    let magnitudes = Float::with_val(prec, exact.abs_ref())
        + Float::with_val(prec, main.value.abs_ref())
        + 1u32;
    let allowance = magnitudes * Float::with_val(prec, Float::i_exp(1, 16 - prec as i32));
    let tolerance = exact_tail + &main.tail_bound + allowance;

    let pass = !n_small && abs_diff <= bound.clone() + &tolerance;

    Ok(RegimeReport {
        regime,
        n,
        arithmetic,
        exact,
        main: main.value,
        abs_diff,
        bound,
        tolerance,
        pass,
        n_small,
    })
}

/// Verify every index in `n_list` (sorted, deduplicated) and locate the
/// smallest tested threshold `N0` such that every tested index `>= N0`
/// passes.  Returns `None` for the threshold when the largest tested index
/// fails.  The reports come back sorted by `n`.
pub fn find_threshold(
    params: &ScalingParams,
    ctx: &QContext,
    n_list: &[u64],
    targets: &Targets,
) -> Result<(Option<u64>, Vec<RegimeReport>)> {
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut reports = Vec::with_capacity(ns.len());
    for &n in &ns {
        reports.push(verify(params, ctx, n, targets)?);
    }
    let mut threshold = None;
    for report in reports.iter().rev() {
        if report.pass {
            threshold = Some(report.n);
        } else {
            break;
        }
    }
    Ok((threshold, reports))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
