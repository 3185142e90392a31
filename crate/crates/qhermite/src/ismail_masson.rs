//! Evaluation of the scaled q^{-1}-Hermite family `h_n(sinh xi | q)`.
//!
//! The polynomials satisfy `h_0 = 1`, `h_1 = 2x`, and
//! `h_{k+1}(x) = 2x h_k(x) + (1 - q^{-k}) h_{k-1}(x)`; equivalently
//! `h_n(sinh xi | q) = sum_{k=0}^n [n,k]_q q^{k^2 - nk} (-1)^k e^{(n-2k) xi}`.
//!
//! Arguments follow the exponential scaling `sinh xi_n = (q^{-ns} z - q^{ns}
//! z^{-1}) / 2` with `s = (1+tau)/2 + i pi theta / log q`, so the polynomial
//! value explodes like `z^n q^{-n^2 s}`. Everything here therefore works with
//! the *normalized* sum
//!
//! `H_n = h_n(sinh xi_n | q) / (z^n q^{-n^2 s})
//!      = sum_{k=0}^n [n,k]_q q^{k^2} (-q^{tau n} z^{-2})^k e^{2 pi i k n theta}`,
//!
//! whose terms are explicitly summable: magnitudes follow a three-factor
//! ratio recurrence and the phase advances linearly in `k`. Rational `theta`
//! gets an exact integer-residue phase path; irrational `theta` runs at a
//! precision schedule wide enough for the `k n theta` products. The gigantic
//! normalization factor itself is only ever touched through [`LogComplex`].

use rug::ops::{CompleteRound, DivRounding, Pow, RemRounding, RemRoundingAssign};
use rug::{Complete, Complex, Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::numtheory::{phase_precision, RealDescriptor};
use crate::qseries::{QContext, SeriesResult};

// ---------------------------------------------------------------------------
// Log-space complex numbers
// ---------------------------------------------------------------------------

/// A nonzero complex number stored as `exp(log_mag) * e^{2 pi i turns}` so
/// that magnitudes like `q^{-n^2 s}` stay representable for any `n` this
/// crate meets. `turns` is kept normalized to `(-1/2, 1/2]`.
#[derive(Debug, Clone)]
pub struct LogComplex {
    pub log_mag: Float,
    pub turns: Float,
}

impl LogComplex {
    pub fn new(log_mag: Float, turns: Float) -> Self {
        let mut lc = LogComplex { log_mag, turns };
        lc.normalize();
        lc
    }

    pub fn one(prec: u32) -> Self {
        LogComplex {
            log_mag: Float::with_val(prec, 0),
            turns: Float::with_val(prec, 0),
        }
    }

    /// Logarithm of a nonzero complex value.
    pub fn from_complex(z: &Complex, prec: u32) -> Result<Self> {
        if z.is_zero() {
            return Err(Error::Domain("log of zero".into()));
        }
        let mag = Float::with_val(prec, z.abs_ref()).ln();
        let two_pi = Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
        let turns = Float::with_val(prec, z.arg_ref()) / two_pi;
        Ok(LogComplex::new(mag, turns))
    }

    fn normalize(&mut self) {
        // turns -> (-1/2, 1/2]
        let mut shifted = self.turns.clone();
        shifted += 0.5f32;
        self.turns -= shifted.floor();
        if self.turns == -0.5f32 {
            let prec = self.turns.prec();
            self.turns = Float::with_val(prec, 0.5);
        }
    }

    pub fn mul(&self, other: &LogComplex) -> LogComplex {
        let prec = self.log_mag.prec().max(other.log_mag.prec());
        LogComplex::new(
            (&self.log_mag + &other.log_mag).complete(prec),
            (&self.turns + &other.turns).complete(prec),
        )
    }

    pub fn inv(&self) -> LogComplex {
        LogComplex::new(
            (-&self.log_mag).complete(self.log_mag.prec()),
            (-&self.turns).complete(self.turns.prec()),
        )
    }

    pub fn pow_int(&self, e: i64) -> LogComplex {
        let prec = self.log_mag.prec();
        let ef = Float::with_val(prec, e);
        LogComplex::new(self.log_mag.clone() * &ef, self.turns.clone() * &ef)
    }

    /// Back to rectangular form. Fails with [`Error::Overflow`] when the
    /// magnitude exceeds the floating-point exponent range.
    pub fn materialize(&self, prec: u32) -> Result<Complex> {
        let mag = Float::with_val(prec, &self.log_mag).exp();
        if mag.is_infinite() || (mag.is_zero() && !self.log_mag.is_finite()) {
            return Err(Error::Overflow);
        }
        let two_pi = Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
        let ang = Float::with_val(prec, &self.turns) * two_pi;
        let (sin, cos) = ang.sin_cos(Float::new(prec));
        Ok(Complex::with_val(prec, (mag.clone() * cos, mag * sin)))
    }
}

// ---------------------------------------------------------------------------
// Scaling parameters
// ---------------------------------------------------------------------------

/// The scaled evaluation point: exponent rate `tau > -1`, rotation `theta`,
/// and the nonzero complex anchor `z` of `sinh xi_n`.
#[derive(Debug, Clone)]
pub struct ScalingParams {
    pub tau: RealDescriptor,
    pub theta: RealDescriptor,
    pub z: Complex,
}

impl ScalingParams {
    pub fn new(tau: RealDescriptor, theta: RealDescriptor, z: Complex) -> Result<Self> {
        // tau > -1, decided exactly.
        let shifted = tau.to_exact().add_rat(&Rational::from(1));
        match shifted.sign() {
            Ok(1) => {}
            Ok(_) => {
                return Err(Error::Domain(format!("tau must exceed -1, got {tau}")));
            }
            Err(_) => {
                return Err(Error::Domain(
                    "tau is not separated from -1 at its stated uncertainty".into(),
                ));
            }
        }
        if z.is_zero() {
            return Err(Error::Domain("z must be nonzero".into()));
        }
        Ok(ScalingParams { tau, theta, z })
    }

    /// `|z|` at the context precision.
    pub fn abs_z(&self, ctx: &QContext) -> Float {
        Float::with_val(ctx.precision_bits(), self.z.abs_ref())
    }

    /// `arg(z) / pi` at the given precision.
    fn arg_z_over_pi(&self, prec: u32) -> Float {
        let arg = Float::with_val(prec, self.z.arg_ref());
        let pi = Float::with_val(prec, rug::float::Constant::Pi);
        arg / pi
    }

    /// Fractional part of `n theta`: the exact rational when `theta` is
    /// rational (or a decimal taken at face value), otherwise a certified
    /// evaluation at `prec` bits.
    pub fn frac_n_theta(&self, n: u64, prec: u32) -> Result<(Option<Rational>, Float)> {
        if let Some(t) = self.theta.as_rational() {
            let num = (t.numer() * &Integer::from(n)).complete();
            let res = num.rem_euc(t.denom().clone());
            let frac = Rational::from((res, t.denom().clone()));
            let f = Float::with_val(prec, &frac);
            return Ok((Some(frac), f));
        }
        let frac = self.theta.to_exact().mul_int(n as i64).frac()?;
        Ok((None, frac.to_float(prec)))
    }
}

/// The complex scaling exponent `s = (1+tau)/2 + i pi theta / log q`.
pub fn s_of(params: &ScalingParams, ctx: &QContext) -> Complex {
    let prec = ctx.precision_bits();
    let re = (params.tau.eval(prec) + 1u32) / 2u32;
    let pi = Float::with_val(prec, rug::float::Constant::Pi);
    let logq = Float::with_val(prec, ctx.q().ln_ref());
    let im = params.theta.eval(prec) * pi / logq;
    Complex::with_val(prec, (re, im))
}

/// `sinh xi_n = (q^{-ns} z - q^{ns} z^{-1}) / 2`, in rectangular form.
///
/// Useful for modest `n` only: the magnitude grows like `q^{-n(1+tau)/2}`,
/// and the result degrades once that leaves the exponent range.
pub fn sinh_xi_n(params: &ScalingParams, ctx: &QContext, n: u64) -> Complex {
    let prec = ctx.precision_bits();
    let s = s_of(params, ctx);
    let logq = Float::with_val(prec, ctx.q().ln_ref());
    let w = s * Float::with_val(prec, n) * logq; // n s log q
    let q_ns = w.exp(); // q^{ns}
    let fwd = (&params.z / &q_ns).complete((prec, prec));
    let bwd = q_ns * params.z.clone().recip();
    (fwd - bwd) / 2u32
}

// ---------------------------------------------------------------------------
// Direct evaluation (small n)
// ---------------------------------------------------------------------------

/// Largest `n` accepted by [`hn_direct`]; beyond this the unnormalized value
/// is numerically meaningless next to the normalized path.
pub const HN_DIRECT_MAX_N: u64 = 64;

/// `h_n(x | q)` by the three-term recurrence, for `n <= 64`.
pub fn hn_direct(x: &Complex, ctx: &QContext, n: u64) -> Result<Complex> {
    if n > HN_DIRECT_MAX_N {
        return Err(Error::Domain(format!(
            "hn_direct supports n <= {HN_DIRECT_MAX_N}, got {n}; use the normalized evaluation"
        )));
    }
    let prec = ctx.precision_bits();
    let two_x = (x * 2u32).complete((prec, prec));
    let mut h_prev = Complex::with_val(prec, 1);
    if n == 0 {
        return Ok(h_prev);
    }
    let mut h = two_x.clone();
    let q_inv = Float::with_val(prec, ctx.q().recip_ref());
    let mut q_minus_k = Float::with_val(prec, 1); // q^{-k} while h has degree k
    for _ in 1..n {
        // h_{k+1} = 2x h_k + (1 - q^{-k}) h_{k-1}
        q_minus_k *= &q_inv;
        let coeff = (1u32 - &q_minus_k).complete(prec);
        let next =
            (&two_x * &h).complete((prec, prec)) + (&h_prev * &coeff).complete((prec, prec));
        h_prev = std::mem::replace(&mut h, next);
    }
    Ok(h)
}

// ---------------------------------------------------------------------------
// Normalized evaluation
// ---------------------------------------------------------------------------

/// Phase of the k-th normalized term, as turns in [0, 1):
/// `t_k = frac(k (1/2 - arg(z)/pi)) (+) k n theta mod 1`.
///
/// For rational `theta = p/r` the theta part is carried as an exact integer
/// residue `res_k = 2 n k p mod 2r`, immune to accumulation error; the
/// remaining dyadic-plus-arg part advances by one reduced addition per step.
struct PhaseSequence {
    cur: Float,
    step: Float,
    residue: Option<ResidueTrack>,
}

struct ResidueTrack {
    res: Integer,
    step: Integer,
    modulus: Integer, // 2r
}

impl PhaseSequence {
    fn new(params: &ScalingParams, n: u64, prec: u32) -> Result<Self> {
        let half = Float::with_val(prec, 0.5);
        let base = half - params.arg_z_over_pi(prec);
        let (exact, frac_float) = params.frac_n_theta(n, prec)?;
        match exact {
            Some(frac) => {
                // res_k = 2 n k p mod 2r advances by 2 (n p mod r) each step.
                let modulus = frac.denom().clone() * 2u32;
                let step_int = (frac.numer() * &Integer::from(2)).complete();
                Ok(PhaseSequence {
                    cur: Float::with_val(prec, 0),
                    step: frac_part(base),
                    residue: Some(ResidueTrack {
                        res: Integer::from(0),
                        step: step_int,
                        modulus,
                    }),
                })
            }
            None => {
                let step = frac_part(base + frac_float);
                Ok(PhaseSequence {
                    cur: Float::with_val(prec, 0),
                    step,
                    residue: None,
                })
            }
        }
    }

    /// Turns of the current term, then advance to the next `k`.
    fn next_turn(&mut self) -> Float {
        let prec = self.cur.prec();
        let out = match &self.residue {
            Some(track) => {
                let extra = Rational::from((track.res.clone(), track.modulus.clone()));
                let ex = Float::with_val(prec, &extra);
                frac_part((&self.cur + &ex).complete(prec))
            }
            None => self.cur.clone(),
        };
        self.cur = frac_part((&self.cur + &self.step).complete(prec));
        if let Some(track) = &mut self.residue {
            track.res += &track.step;
            track.res.rem_euc_assign(&track.modulus);
        }
        out
    }
}

fn frac_part(x: Float) -> Float {
    let fl = x.clone().floor();
    x - fl
}

/// Normalized polynomial value
/// `H_n = h_n(sinh xi_n | q) / (z^n q^{-n^2 s})`, with a certified bound on
/// the truncated part of its defining sum.
///
/// Truncation: the k-th term is majorized by
/// `mu_k = q^{k^2 + tau n k} |z|^{-2k} / (q;q)_oo`; summation stops at the
/// first `K` (at most `n+1`) where the onward term-ratio majorant
/// `q^{2K+1+tau n} / ((1-q) |z|^2)` has fallen to 1/2 or below — it only
/// decreases from there — and the remaining geometric tail clears the
/// context tolerance.
pub fn hn_normalized(params: &ScalingParams, ctx: &QContext, n: u64) -> Result<SeriesResult> {
    let target = ctx.precision_bits();
    let wp = phase_precision(target, n).max(target);
    let q = Float::with_val(wp, ctx.q());
    let q_sq = q.clone().square();
    let logq = q.clone().ln();
    let one_minus_q = (1u32 - &q).complete(wp);
    let abs_z2 = Float::with_val(wp, params.z.abs_ref()).square();
    let tau_n = params.tau.to_exact().mul_int(n as i64).to_float(wp);
    let q_tau_n = (tau_n * &logq).exp();
    let x_factor = (&q_tau_n / &abs_z2).complete(wp); // q^{tau n} |z|^{-2}
    let qq_lo = Float::with_val(wp, ctx.qq_inf_lower());
    let two_pi = Float::with_val(wp, rug::float::Constant::Pi) * 2u32;

    let mut phases = PhaseSequence::new(params, n, wp)?;
    let mut sum = Complex::with_val(wp, 0);
    let mut mag = Float::with_val(wp, 1); // [n,k]_q q^{k^2} (q^{tau n}/|z|^2)^k
    let mut q_pow_nk = (Float::with_val(wp, n) * &logq).exp(); // q^{n-k}
    let mut q_pow_k1 = q.clone(); // q^{k+1}
    let mut q_odd = q.clone(); // q^{2k+1}
    let mut mu = qq_lo.recip(); // mu_k at k = 0
    let mut terms_used = 0usize;
    let mut tail = Float::with_val(wp, 0);

    for k in 0..=n {
        let t = phases.next_turn();
        let ang = (&t * &two_pi).complete(wp);
        let (sin, cos) = ang.sin_cos(Float::new(wp));
        sum += Complex::with_val(wp, (cos * &mag, sin * &mag));
        terms_used += 1;

        if k == n {
            break; // the sum is finite: nothing was truncated
        }
        // Stop test for the first omitted index K = k+1.
        let mu_ratio = (&q_odd * &x_factor).complete(wp); // q^{2k+1+tau n}/|z|^2
        let mu_next = (&mu * &mu_ratio).complete(wp);
        let ratio_bound = (&mu_ratio / &one_minus_q).complete(wp);
        if ratio_bound <= 0.5f32 {
            let denom = (1u32 - &ratio_bound).complete(wp);
            let cand = (&mu_next / &denom).complete(wp);
            if cand <= *ctx.tail_tol() {
                tail = ctx.inflate(cand);
                break;
            }
        }
        // Advance the magnitude to k+1:
        // [n,k+1]/[n,k] = (1 - q^{n-k})/(1 - q^{k+1}).
        let num = (1u32 - &q_pow_nk).complete(wp);
        let den = (1u32 - &q_pow_k1).complete(wp);
        mag *= num / den;
        q_pow_nk /= &q;
        mag *= &mu_ratio;
        mu = mu_next;
        q_pow_k1 *= &q;
        q_odd *= &q_sq;
    }
    Ok(SeriesResult {
        value: sum,
        tail_bound: tail,
        terms_used,
    })
}

/// The normalization factor `z^n q^{-n^2 s}` in log space, with the huge
/// rotation count `-n^2 theta / 2` reduced exactly before it ever becomes a
/// float.
pub fn normalization_log(params: &ScalingParams, ctx: &QContext, n: u64) -> Result<LogComplex> {
    let wp = phase_precision(ctx.precision_bits(), n).max(ctx.precision_bits());
    let logq = Float::with_val(wp, ctx.q().ln_ref());
    let abs_z = Float::with_val(wp, params.z.abs_ref());
    let n_f = Float::with_val(wp, n);
    let n_sq = Integer::from(n) * Integer::from(n);
    // log magnitude: n log|z| - n^2 (1+tau)/2 log q
    let re_s = params
        .tau
        .to_exact()
        .add_rat(&Rational::from(1))
        .mul_rat(&Rational::from((1, 2)))
        .to_float(wp);
    let log_mag = n_f.clone() * abs_z.ln() - Float::with_val(wp, &n_sq) * re_s * &logq;
    // turns: n arg(z)/2pi - n^2 theta / 2, the theta part reduced exactly.
    let two_pi = Float::with_val(wp, rug::float::Constant::Pi) * 2u32;
    let arg_turns = Float::with_val(wp, params.z.arg_ref()) / two_pi * n_f;
    let theta_half_turns = params
        .theta
        .to_exact()
        .mul_rat(&Rational::from((-n_sq, Integer::from(2))))
        .frac()?
        .to_float(wp);
    Ok(LogComplex::new(
        log_mag,
        frac_part(arg_turns) + theta_half_turns,
    ))
}

// ---------------------------------------------------------------------------
// Decomposition around a split index
// ---------------------------------------------------------------------------

/// The re-centered series
/// `G = sum_{j=-mh}^{n-mh} c_j q^{j^2} w^j` with `w = -q^{tau n + 2 mh}
/// z^{-2} e^{2 pi i {n theta}}` and `mh = floor(m/2)`: coefficient arrays and
/// the two half-sums, used to inspect how close `G` sits to a theta function.
#[derive(Debug, Clone)]
pub struct DecompositionSums {
    /// `floor(m/2)`.
    pub m_half: Integer,
    /// `e(k) = (q;q)_oo [n, mh-k]_q` for `k = 0..e.len()` (zero past the
    /// sum's edge).
    pub e: Vec<Float>,
    /// `f(k) = (q;q)_oo [n, mh+k]_q` likewise.
    pub f: Vec<Float>,
    /// Half-sum over negative offsets `j <= -1`.
    pub s1: Complex,
    /// Half-sum over offsets `j >= 0`.
    pub s2: Complex,
}

/// Split the normalized sum at `mh = floor(m/2)` and expose the coefficient
/// deviations the error analysis runs on. `coeff_count` controls how many
/// `e`/`f` entries are reported.
pub fn decomposition_sums(
    params: &ScalingParams,
    ctx: &QContext,
    n: u64,
    m: &Integer,
    coeff_count: usize,
) -> Result<DecompositionSums> {
    let prec = ctx.precision_bits();
    let wp = phase_precision(prec, n).max(prec);
    let m_half = m.clone().div_floor(Integer::from(2));
    let mh_i = m_half
        .to_i64()
        .ok_or_else(|| Error::Domain(format!("split index floor(m/2) = {m_half} out of range")))?;
    if mh_i < 0 || mh_i as u64 > n {
        return Err(Error::Domain(format!(
            "split index floor(m/2) = {mh_i} must lie in [0, n = {n}]"
        )));
    }

    // Coefficient arrays: (q;q)_oo [n, mh -/+ k]_q, zero once the index
    // leaves [0, n].
    let qq = ctx.qq_inf().clone();
    let coeff = |idx: i64| -> Result<Float> {
        if idx < 0 || idx as u64 > n {
            Ok(Float::with_val(prec, 0))
        } else {
            Ok(crate::qseries::qbinomial(ctx, n, idx as u64)? * &qq)
        }
    };
    let mut e = Vec::with_capacity(coeff_count);
    let mut f = Vec::with_capacity(coeff_count);
    for k in 0..coeff_count as i64 {
        e.push(coeff(mh_i - k)?);
        f.push(coeff(mh_i + k)?);
    }

    let (s1, s2) = half_sums(params, ctx, n, mh_i as u64, wp)?;
    Ok(DecompositionSums {
        m_half,
        e,
        f,
        s1,
        s2,
    })
}

/// Both halves of `G = F * H_n` accumulated separately around the split
/// index: `(sum over k < mh, sum over k >= mh)` of the prefactor-scaled
/// normalized terms, each term built directly in its re-centered form
/// `(q;q)_oo [n, mh+j]_q q^{j^2} w^j` so no intermediate is astronomical.
fn half_sums(
    params: &ScalingParams,
    ctx: &QContext,
    n: u64,
    mh: u64,
    wp: u32,
) -> Result<(Complex, Complex)> {
    let q = Float::with_val(wp, ctx.q());
    let qq = Float::with_val(wp, ctx.qq_inf());
    let two_pi = Float::with_val(wp, rug::float::Constant::Pi) * 2u32;
    let abs_z2 = Float::with_val(wp, params.z.abs_ref()).square();
    let tau_n = params.tau.to_exact().mul_int(n as i64).to_float(wp);
    let logq = q.clone().ln();
    // |w| = q^{tau n + 2 mh} / |z|^2
    let exponent = tau_n + Float::with_val(wp, 2 * mh);
    let abs_w = (exponent * &logq).exp() / &abs_z2;
    // Phase of w in turns: 1/2 - arg(z)/pi + {n theta} (mod 1).
    let (_, frac_nt) = params.frac_n_theta(n, wp)?;
    let w_turns = frac_part(Float::with_val(wp, 0.5) - params.arg_z_over_pi(wp) + frac_nt);

    let mut s1 = Complex::with_val(wp, 0);
    let mut s2 = Complex::with_val(wp, 0);
    for k in 0..=n {
        let j = k as i64 - mh as i64;
        let c = crate::qseries::qbinomial(ctx, n, k)?;
        let jj = Integer::from(j) * Integer::from(j);
        let mag = Float::with_val(wp, &c)
            * &qq
            * (Float::with_val(wp, &jj) * &logq).exp()
            * abs_w.clone().pow(Float::with_val(wp, j));
        let t = frac_part(w_turns.clone() * Float::with_val(wp, j));
        let ang = t * &two_pi;
        let (sin, cos) = ang.sin_cos(Float::new(wp));
        let term = Complex::with_val(wp, (cos * &mag, sin * &mag));
        if j < 0 {
            s1 += term;
        } else {
            s2 += term;
        }
        // Magnitudes die off like q^{j^2} once past the center; when the
        // remaining wing is far below tolerance the rest cannot matter.
        if j > 0 {
            let floor = (&mag / &qq).complete(wp);
            if floor < *ctx.tail_tol() {
                break;
            }
        }
    }
    Ok((s1, s2))
}

// ---------------------------------------------------------------------------
// Prefactor
// ---------------------------------------------------------------------------

/// The factor `F = (q;q)_oo (-z^2 e^{-2 pi i {n theta}})^{mh} q^{-mh (tau n +
/// mh)}` (with `mh = floor(m/2)`) that turns the normalized sum into the
/// theta-comparable quantity `G = F H_n`, in log space.
pub fn prefactor_log(
    params: &ScalingParams,
    ctx: &QContext,
    n: u64,
    m: &Integer,
) -> Result<LogComplex> {
    let wp = phase_precision(ctx.precision_bits(), n).max(ctx.precision_bits());
    let m_half = m.clone().div_floor(Integer::from(2));
    let logq = Float::with_val(wp, ctx.q().ln_ref());
    let abs_z = Float::with_val(wp, params.z.abs_ref());
    let qq_ln = Float::with_val(wp, ctx.qq_inf().ln_ref());

    // magnitude: ln(q;q)_oo + 2 mh ln|z| - mh (tau n + mh) ln q
    let mh_f = Float::with_val(wp, &m_half);
    let tau_n_plus_mh = params
        .tau
        .to_exact()
        .mul_int(n as i64)
        .add_rat(&Rational::from(m_half.clone()));
    let log_mag = qq_ln + (&mh_f * 2u32).complete(wp) * abs_z.ln()
        - mh_f.clone() * tau_n_plus_mh.to_float(wp) * &logq;

    // turns: mh (1/2 + arg(z)/pi - {n theta}), rational part reduced exactly.
    let (exact_frac, frac_float) = params.frac_n_theta(n, wp)?;
    let turns = match exact_frac {
        Some(fr) => {
            let rat_part = Rational::from((m_half.clone(), Integer::from(2)))
                - Rational::from(m_half.clone()) * fr;
            let reduced = rat_part.clone() - Rational::from(rational_floor(&rat_part));
            Float::with_val(wp, &reduced) + frac_part(params.arg_z_over_pi(wp) * &mh_f)
        }
        None => {
            let raw = (Float::with_val(wp, 0.5) + params.arg_z_over_pi(wp) - frac_float) * &mh_f;
            frac_part(raw)
        }
    };
    Ok(LogComplex::new(log_mag, turns))
}

fn rational_floor(x: &Rational) -> Integer {
    x.numer().clone().div_floor(x.denom().clone())
}

// ---------------------------------------------------------------------------
// Strip and logarithmic depth indices
// ---------------------------------------------------------------------------

/// Depth index for oscillatory-strip error terms:
/// `nu_n = min(floor((1+tau) n / 4), floor(-tau n / 4))`, exact.
pub fn nu_n_strip(tau: &RealDescriptor, n: u64) -> Result<u64> {
    let te = tau.to_exact();
    let a = te
        .add_rat(&Rational::from(1))
        .mul_rat(&Rational::from((Integer::from(n), Integer::from(4))))
        .floor()?;
    let b = te
        .mul_rat(&Rational::from((-Integer::from(n), Integer::from(4))))
        .floor()?;
    let v = a.min(b);
    if v < 0 {
        return Err(Error::Domain(format!(
            "strip depth index is negative (tau outside (-1,0)): {v}"
        )));
    }
    Ok(v.to_u64().unwrap_or(0))
}

/// Depth index for the slow-decay regimes:
/// `nu_n = floor(q^4 ln^2 n / (1 + ln(1/q)))` (natural logarithms).
pub fn nu_n_log(ctx: &QContext, n: u64) -> Result<u64> {
    let prec = 192.max(ctx.precision_bits());
    let q4 = Float::with_val(prec, ctx.q()).pow(4u32);
    let ln_n = Float::with_val(prec, n).ln();
    let ln_inv_q = -Float::with_val(prec, ctx.q().ln_ref());
    let x = q4 * ln_n.clone() * ln_n / (Float::with_val(prec, 1) + ln_inv_q);
    // Certify the floor: reject if x sits within a rounding band of an
    // integer.
    let fl = x.clone().floor();
    let gap = (&x - &fl).complete(prec);
    let band = Float::with_val(prec, 1) >> (prec - 64);
    let upper = (1u32 - &band).complete(prec);
    if gap < band || gap > upper {
        return Err(Error::AmbiguousFloor(format!(
            "logarithmic depth index at n = {n} is too close to an integer"
        )));
    }
    fl.to_integer()
        .and_then(|i| i.to_u64())
        .ok_or_else(|| Error::Domain("depth index out of range".into()))
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(q: f64, bits: u32) -> QContext {
        QContext::with_default_tol(Float::with_val(bits, q), bits).unwrap()
    }

    fn f(bits: u32, s: &str) -> Float {
        Float::with_val(bits, Float::parse(s).unwrap())
    }

    fn params(tau: &str, theta: &str, z: (f64, f64)) -> ScalingParams {
        ScalingParams::new(
            tau.parse().unwrap(),
            theta.parse().unwrap(),
            Complex::with_val(192, z),
        )
        .unwrap()
    }

    #[test]
    fn scaling_validation() {
        assert!(ScalingParams::new(
            "-1".parse().unwrap(),
            "0".parse().unwrap(),
            Complex::with_val(64, 2),
        )
        .is_err());
        assert!(ScalingParams::new(
            "-3/2".parse().unwrap(),
            "0".parse().unwrap(),
            Complex::with_val(64, 2),
        )
        .is_err());
        assert!(ScalingParams::new(
            "0".parse().unwrap(),
            "0".parse().unwrap(),
            Complex::with_val(64, 0),
        )
        .is_err());
        // tau = -1 + a tiny surd excess is fine.
        assert!(ScalingParams::new(
            "surd:-100,1,2,100".parse().unwrap(),
            "0".parse().unwrap(),
            Complex::with_val(64, 2),
        )
        .is_ok());
    }

    #[test]
    fn s_matches_hand_value() {
        // q = e^{-pi}, tau = 0, theta = 1: s = 1/2 + i pi / (-pi) = 1/2 - i.
        let prec = 128;
        let q = (-Float::with_val(prec, rug::float::Constant::Pi)).exp();
        let c = QContext::with_default_tol(q, prec).unwrap();
        let p = params("0", "1", (2.0, 0.0));
        let s = s_of(&p, &c);
        let half = f(prec, "0.5");
        assert!((s.real() - &half).complete(prec).abs() < f(prec, "1e-30"));
        assert!((s.imag() + 1u32).complete(prec).abs() < f(prec, "1e-30"));
    }

    #[test]
    fn sinh_xi_at_n_zero() {
        // n = 0: sinh xi_0 = (z - 1/z)/2 = 0.75 at z = 2.
        let c = ctx(0.5, 128);
        let p = params("0", "1/3", (2.0, 0.0));
        let v = sinh_xi_n(&p, &c, 0);
        let want = f(128, "0.75");
        assert!((v.real() - &want).complete(128).abs() < f(128, "1e-30"));
        assert!(v.imag().clone().abs() < f(128, "1e-30"));
    }

    #[test]
    fn hn_direct_hand_values() {
        let c = ctx(0.5, 128);
        let x = Complex::with_val(128, (0.75, 0));
        // h_0 = 1, h_1 = 2x = 1.5, h_2 = 2x h_1 + (1 - q^{-1}) h_0 = 1.25.
        assert_eq!(hn_direct(&x, &c, 0).unwrap(), Complex::with_val(128, 1));
        let h1 = hn_direct(&x, &c, 1).unwrap();
        let w1 = f(128, "1.5");
        assert!((h1.real() - &w1).complete(128).abs() < f(128, "1e-30"));
        let h2 = hn_direct(&x, &c, 2).unwrap();
        let w2 = f(128, "1.25");
        assert!((h2.real() - &w2).complete(128).abs() < f(128, "1e-30"));
        assert!(hn_direct(&x, &c, 65).is_err());
    }

    #[test]
    fn hn_direct_matches_explicit_sum() {
        // Cross-check the recurrence against
        // h_n = sum_k [n,k]_q q^{k^2-nk} (-1)^k e^{(n-2k) xi} at e^xi = 2.
        let c = ctx(0.5, 192);
        let e_xi = Float::with_val(192, 2);
        let x = Complex::with_val(192, ((e_xi.clone() - e_xi.clone().recip()) / 2u32, 0));
        for n in [1u64, 2, 3, 5, 8, 13, 20] {
            let direct = hn_direct(&x, &c, n).unwrap();
            let mut sum = Float::with_val(192, 0);
            for k in 0..=n {
                let b = crate::qseries::qbinomial(&c, n, k).unwrap();
                let expo = (k * k) as i64 - (n * k) as i64;
                let qp = Float::with_val(192, c.q()).pow(Float::with_val(192, expo));
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let epow = e_xi
                    .clone()
                    .pow(Float::with_val(192, n as i64 - 2 * k as i64));
                sum += Float::with_val(192, &b) * qp * sign * epow;
            }
            let scale = sum.clone().abs() + 1u32;
            let d = (direct.real() - &sum).complete(192).abs();
            assert!(d < scale.clone() * f(192, "1e-40"), "n = {n}: {d}");
            assert!(direct.imag().clone().abs() < scale * f(192, "1e-40"));
        }
    }

    #[test]
    fn normalized_matches_direct_for_small_n() {
        // H_n * (z^n q^{-n^2 s}) must equal h_n(sinh xi_n) while the latter
        // is still representable, across scaling shapes.
        for (tau, theta) in [
            ("0", "1/3"),
            ("-1/2", "1/3"),
            ("1/2", "2/7"),
            ("0", "surd:0,1,2,1"),
        ] {
            let c = ctx(0.5, 192);
            let p = params(tau, theta, (2.0, 0.0));
            for n in [1u64, 2, 3, 5, 9, 12] {
                let x = sinh_xi_n(&p, &c, n);
                let direct = hn_direct(&x, &c, n).unwrap();
                let h = hn_normalized(&p, &c, n).unwrap();
                let norm = normalization_log(&p, &c, n)
                    .unwrap()
                    .materialize(192)
                    .unwrap();
                let recon = h.value.clone() * norm;
                let d = Float::with_val(192, (&recon - &direct).complete((192, 192)).abs_ref());
                let scale = Float::with_val(192, direct.abs_ref()) + 1u32;
                assert!(
                    d <= scale * f(192, "1e-36"),
                    "tau={tau} theta={theta} n={n}: diff {d}"
                );
            }
        }
    }

    #[test]
    fn normalized_matches_direct_complex_z() {
        let c = ctx(0.5, 192);
        let p = params("-1/2", "1/3", (1.2, 0.9));
        for n in [1u64, 4, 7, 10] {
            let x = sinh_xi_n(&p, &c, n);
            let direct = hn_direct(&x, &c, n).unwrap();
            let h = hn_normalized(&p, &c, n).unwrap();
            let norm = normalization_log(&p, &c, n)
                .unwrap()
                .materialize(192)
                .unwrap();
            let recon = h.value.clone() * norm;
            let d = Float::with_val(192, (&recon - &direct).complete((192, 192)).abs_ref());
            let scale = Float::with_val(192, direct.abs_ref()) + 1u32;
            assert!(d <= scale * f(192, "1e-34"), "n={n}: diff {d}");
        }
    }

    #[test]
    fn normalized_n1_symbolic() {
        // H_1 = 1 - q^{1+tau} e^{2 pi i theta} / z^2 exactly.
        let c = ctx(0.5, 192);
        let p = params("1/2", "1/3", (2.0, 0.0));
        let h = hn_normalized(&p, &c, 1).unwrap();
        let q32 = Float::with_val(192, c.q()).pow(Float::with_val(192, 1.5));
        let ang = Float::with_val(192, rug::float::Constant::Pi) * 2u32 / 3u32;
        let (sin, cos) = ang.sin_cos(Float::new(192));
        let want = Complex::with_val(192, (1, 0))
            - Complex::with_val(192, (cos, sin)) * q32 / Float::with_val(192, 4);
        let d = Float::with_val(192, (&h.value - &want).complete((192, 192)).abs_ref());
        assert!(d < f(192, "1e-45"), "diff {d}");
    }

    #[test]
    fn phase_sequence_is_periodic_for_rational_theta() {
        // theta = 2/7, z real positive: the residue path makes turns exactly
        // periodic with period dividing 2r = 14.
        let p = params("0", "2/7", (2.0, 0.0));
        let mut seq = PhaseSequence::new(&p, 3, 192).unwrap();
        let first: Vec<Float> = (0..14).map(|_| seq.next_turn()).collect();
        let second: Vec<Float> = (0..14).map(|_| seq.next_turn()).collect();
        for (a, b) in first.iter().zip(&second) {
            assert_eq!(a, b, "phase drifted between periods");
        }
        // And the residue really contributes: turns are not all equal.
        assert!(first.iter().any(|t| t != &first[0]));
    }

    #[test]
    fn frac_n_theta_paths_agree() {
        let c = 192;
        // Rational: exact residue. 7 * 5/12 = 35/12 -> 11/12.
        let p = params("0", "5/12", (2.0, 0.0));
        let (ex, fl) = p.frac_n_theta(7, c).unwrap();
        assert_eq!(ex.unwrap(), Rational::from((11, 12)));
        assert!((fl - Float::with_val(c, Rational::from((11, 12)))).abs() < f(c, "1e-50"));
        // Surd: float value matches direct computation.
        let p = params("0", "surd:0,1,2,1", (2.0, 0.0));
        let (ex, fl) = p.frac_n_theta(5, c).unwrap();
        assert!(ex.is_none());
        let direct = Float::with_val(c, 2).sqrt() * 5u32;
        let frac = direct.clone() - direct.floor();
        assert!((fl - frac).abs() < f(c, "1e-50"));
    }

    #[test]
    fn log_complex_round_trips() {
        let z = Complex::with_val(128, (-1.5, 2.25));
        let lc = LogComplex::from_complex(&z, 128).unwrap();
        let back = lc.materialize(128).unwrap();
        let d = Float::with_val(128, (&back - &z).complete((128, 128)).abs_ref());
        assert!(d < f(128, "1e-33"), "diff {d}");
        // Multiplication and integer powers act on logs.
        let sq = lc.mul(&lc).materialize(128).unwrap();
        let want = (&z * &z).complete((128, 128));
        let d = Float::with_val(128, (&sq - &want).complete((128, 128)).abs_ref());
        assert!(d < f(128, "1e-32"));
        let p3 = lc.pow_int(3).materialize(128).unwrap();
        let want3 = (&z * &z).complete((128, 128)) * &z;
        let d = Float::with_val(128, (&p3 - &want3).complete((128, 128)).abs_ref());
        assert!(d < f(128, "1e-31"));
        let inv = lc.inv().materialize(128).unwrap();
        let wanti = z.clone().recip();
        let d = Float::with_val(128, (&inv - &wanti).complete((128, 128)).abs_ref());
        assert!(d < f(128, "1e-35"));
        // Materializing an astronomically large log overflows loudly.
        let huge = LogComplex::new(Float::with_val(128, 1e300), Float::with_val(128, 0));
        assert!(matches!(huge.materialize(128), Err(Error::Overflow)));
        assert!(LogComplex::from_complex(&Complex::with_val(128, 0), 128).is_err());
    }

    #[test]
    fn prefactor_magnitude_golden() {
        // tau = -1/2, theta = 0, z = 2, q = 1/2, n = 8, m = 4: the
        // normalization-to-theta factor z^n q^{-n^2 s} / F has magnitude
        // 2^8 q^{-16} / (q;q)_oo = 16777216 / (q;q)_oo (the (-z^2)^2 = 16
        // cancels against q^{-2(tau n + 2)} = 1/16).
        let c = ctx(0.5, 192);
        let p = params("-1/2", "0", (2.0, 0.0));
        let norm = normalization_log(&p, &c, 8).unwrap();
        let pref = prefactor_log(&p, &c, 8, &Integer::from(4)).unwrap();
        let factor = norm.mul(&pref.inv());
        let mag = factor.log_mag.clone().exp();
        let want = Float::with_val(192, 16777216u64) / c.qq_inf();
        let rel = ((mag - &want) / want).abs();
        assert!(rel < f(192, "1e-40"), "rel {rel}");
        // Phase: theta = 0, z real positive, mh even: both factors real
        // positive, so the combined turn count vanishes.
        let turns = factor.turns.clone().abs();
        assert!(turns < f(192, "1e-40"));
    }

    #[test]
    fn decomposition_coefficients_bounded_by_one() {
        let c = ctx(0.5, 160);
        let p = params("-1/2", "1/3", (2.0, 0.0));
        let n = 30;
        let m = Integer::from(15);
        let d = decomposition_sums(&p, &c, n, &m, 6).unwrap();
        assert_eq!(d.m_half, Integer::from(7));
        for (k, v) in d.e.iter().chain(d.f.iter()).enumerate() {
            assert!(v.clone().abs() <= 1.0000001f64, "coefficient {k} = {v}");
        }
        // The two wings share the central coefficient.
        assert_eq!(d.e[0], d.f[0]);
        // s1 + s2 equals F * H_n.
        let h = hn_normalized(&p, &c, n).unwrap();
        let pref = prefactor_log(&p, &c, n, &m)
            .unwrap()
            .materialize(192)
            .unwrap();
        let g = h.value.clone() * pref;
        let total = (&d.s1 + &d.s2).complete((192, 192));
        let diff = Float::with_val(192, (&total - &g).complete((192, 192)).abs_ref());
        let scale = Float::with_val(192, g.abs_ref()) + 1u32;
        assert!(diff <= scale * f(192, "1e-28"), "diff {diff}");
    }

    #[test]
    fn depth_indices() {
        // Strip form: tau = -1/2, n = 40 -> min(floor(5), floor(5)) = 5.
        let tau: RealDescriptor = "-1/2".parse().unwrap();
        assert_eq!(nu_n_strip(&tau, 40).unwrap(), 5);
        assert_eq!(nu_n_strip(&tau, 10).unwrap(), 1);
        // Asymmetric: tau = -2/3, n = 30: min(floor(30/12), floor(20/4)) = 2.
        let tau: RealDescriptor = "-2/3".parse().unwrap();
        assert_eq!(nu_n_strip(&tau, 30).unwrap(), 2);
        // Surd tau stays exact: -sqrt(2)/2 at n = 40 ->
        // min(floor(2.928...), floor(7.071...)) = 2.
        let tau: RealDescriptor = "surd:0,-1,2,2".parse().unwrap();
        assert_eq!(nu_n_strip(&tau, 40).unwrap(), 2);
        // Log form at q = 1/2.
        let c = ctx(0.5, 128);
        assert_eq!(nu_n_log(&c, 200).unwrap(), 1);
        assert_eq!(nu_n_log(&c, 2378).unwrap(), 2);
        assert_eq!(nu_n_log(&c, 13860).unwrap(), 3);
    }

    #[test]
    fn normalized_tail_bound_is_honest() {
        // Whenever the sum truncates, the certified tail must dominate what
        // a full summation adds. Cases are chosen so the peak term magnitude
        // keeps accumulated rounding far below the certified tail.
        for (tau, n) in [("0", 40u64), ("0", 101), ("-1/2", 24)] {
            let c = ctx(0.5, 160);
            let p = params(tau, "1/3", (2.0, 0.0));
            let h = hn_normalized(&p, &c, n).unwrap();
            assert!(
                h.terms_used < n as usize + 1,
                "tau={tau} n={n}: expected truncation, used {} terms",
                h.terms_used
            );
            assert!(h.tail_bound > 0);
            let full = brute_force_normalized(&p, &c, n);
            let d = Float::with_val(320, (&h.value - &full).complete((320, 320)).abs_ref());
            assert!(
                d <= h.tail_bound,
                "tau={tau} n={n}: d={d} tail={}",
                h.tail_bound
            );
        }
    }

    fn brute_force_normalized(p: &ScalingParams, c: &QContext, n: u64) -> Complex {
        // Everything — the Gaussian binomials included — at 320 bits, so
        // this reference is sharper than any certified tail it checks.
        let wp = 320;
        let c = &c.at_precision(wp).unwrap();
        let q = Float::with_val(wp, c.q());
        let two_pi = Float::with_val(wp, rug::float::Constant::Pi) * 2u32;
        let tau_n = p.tau.to_exact().mul_int(n as i64).to_float(wp);
        let (_, frac_nt) = p.frac_n_theta(n, wp).unwrap();
        let mut sum = Complex::with_val(wp, 0);
        for k in 0..=n {
            let b = Float::with_val(wp, &crate::qseries::qbinomial(c, n, k).unwrap());
            let kk = Float::with_val(wp, k);
            let expo = kk.clone().square() + kk.clone() * &tau_n;
            let mag = b * (expo * q.clone().ln()).exp()
                / Float::with_val(wp, p.z.abs_ref()).pow(Float::with_val(wp, 2 * k));
            let turns = frac_part(
                (Float::with_val(wp, 0.5) - p.arg_z_over_pi(wp) + frac_nt.clone()) * &kk,
            );
            let ang = turns * &two_pi;
            let (sin, cos) = ang.sin_cos(Float::new(wp));
            sum += Complex::with_val(wp, (cos * &mag, sin * &mag));
        }
        sum
    }
}
