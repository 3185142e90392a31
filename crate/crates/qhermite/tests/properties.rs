//! Randomized invariants: descriptor round-trips, parity arithmetic,
//! series symmetries, split-sum recombination, main-term path agreement,
//! bound monotonicity, and report self-consistency.

use proptest::prelude::*;
use rug::ops::CompleteRound;
use rug::{Complex, Float, Integer, Rational};

use qhermite::asymptotics::{arithmetic_for, error_bound, main_term, verify, Targets};
use qhermite::ismail_masson::{
    decomposition_sums, hn_normalized, prefactor_log, ScalingParams,
};
use qhermite::numtheory::{chi, orbit_set, RealDescriptor};
use qhermite::qseries::{qbinomial, theta, QContext};
use qhermite::Regime;

const PREC: u32 = 128;

fn ctx() -> QContext {
    QContext::with_default_tol(Float::with_val(PREC, 0.5), PREC).expect("valid context")
}

fn params(tau: &str, theta: &str, z: (f64, f64)) -> ScalingParams {
    ScalingParams::new(
        tau.parse().expect("tau descriptor"),
        theta.parse().expect("theta descriptor"),
        Complex::with_val(PREC, z),
    )
    .expect("valid scaling")
}

fn abs_of(z: &Complex) -> Float {
    Float::with_val(PREC, z.abs_ref())
}

// ---------------------------------------------------------------------------
// Descriptor round-trips
// ---------------------------------------------------------------------------

fn descriptor_strategy() -> impl Strategy<Value = RealDescriptor> {
    let rational = (-1_000_000i64..=1_000_000, 1i64..=1_000_000)
        .prop_map(|(p, r)| RealDescriptor::rational(p, r).expect("nonzero denominator"));
    let surd = (
        -50i64..=50,
        prop_oneof![-50i64..=-1, 1i64..=50],
        prop_oneof![Just(2i64), Just(3), Just(5), Just(6), Just(7), Just(10), Just(13)],
        1i64..=50,
    )
        .prop_map(|(p, r, d, s)| RealDescriptor::surd(p, r, d, s).expect("valid surd"));
    let decimal = (-3_000_000i64..=3_000_000, 0usize..=9, any::<bool>()).prop_map(
        |(scaled, places, irrational)| {
            // The decimal value is scaled / 10^places, written digit by digit.
            let digits = scaled.unsigned_abs().to_string();
            let (int_part, frac_part) = if places == 0 {
                (digits, String::new())
            } else if digits.len() <= places {
                ("0".to_string(), format!("{digits:0>places$}"))
            } else {
                let cut = digits.len() - places;
                (digits[..cut].to_string(), digits[cut..].to_string())
            };
            let sign = if scaled < 0 { "-" } else { "" };
            let dot = if frac_part.is_empty() { "" } else { "." };
            let suffix = if irrational { ":irrational" } else { "" };
            format!("dec:{sign}{int_part}{dot}{frac_part}{suffix}")
                .parse::<RealDescriptor>()
                .expect("decimal descriptor")
        },
    );
    prop_oneof![rational, surd, decimal]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn descriptor_strings_round_trip(desc in descriptor_strategy()) {
        let text = desc.to_string();
        let reparsed: RealDescriptor = text.parse().expect("canonical form reparses");
        prop_assert_eq!(&reparsed, &desc);
        prop_assert_eq!(reparsed.to_string(), text);
    }
}

// ---------------------------------------------------------------------------
// Parity character and rational rotations
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parity_character_matches_its_floor_form(n in -1_000_000_000_000i64..=1_000_000_000_000) {
        let expected = n - 2 * n.div_euclid(2);
        prop_assert_eq!(chi(n), expected);
        prop_assert!(chi(n) == 0 || chi(n) == 1);
        prop_assert_eq!(chi(n), chi(n + 2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_rotations_stay_on_their_orbit(
        a in -200i64..=200,
        b in 1i64..=40,
        n in 0u64..=10_000,
    ) {
        let theta = RealDescriptor::rational(a, b).expect("nonzero denominator");
        let scaling = ScalingParams::new(
            RealDescriptor::integer(0),
            theta.clone(),
            Complex::with_val(PREC, (2, 0)),
        )
        .expect("valid scaling");
        let (exact, float_part) = scaling
            .frac_n_theta(n, PREC)
            .expect("rational rotation");
        let exact = exact.expect("rational theta has an exact part");

        let direct = {
            let scaled = Rational::from((a, b)) * Rational::from(n);
            let fl = scaled.clone().floor();
            scaled - fl
        };
        prop_assert_eq!(&exact, &direct);
        prop_assert!(exact >= 0u32);
        prop_assert!(exact < 1u32);
        let orbit = orbit_set(&Rational::from((a, b)));
        prop_assert!(orbit.contains(&exact));

        let as_float = Float::with_val(PREC, &exact);
        let gap = (float_part - as_float).abs();
        prop_assert!(gap < Float::with_val(PREC, 1e-35));
    }
}

// ---------------------------------------------------------------------------
// Series symmetries
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gaussian_binomials_are_symmetric_and_bounded(n in 0u64..=50, pick in 0.0f64..=1.0) {
        let ctx = ctx();
        let k = ((n as f64) * pick).round() as u64;
        let left = qbinomial(&ctx, n, k).expect("binomial");
        let right = qbinomial(&ctx, n, n - k).expect("mirrored binomial");
        let gap = (left.clone() - &right).abs();
        let scale = left.clone().abs() + 1u32;
        prop_assert!(gap / scale < Float::with_val(PREC, 1e-30));

        prop_assert!(left >= Float::with_val(PREC, 1) - Float::with_val(PREC, 1e-30));
        let cap = ctx.qq_inf_lower().recip() + Float::with_val(PREC, 1e-30);
        prop_assert!(left <= cap);
    }

    #[test]
    fn theta_series_is_inversion_symmetric(
        re in -3.0f64..=3.0,
        im in -3.0f64..=3.0,
    ) {
        prop_assume!((re * re + im * im) > 0.05 && (re * re + im * im) < 16.0);
        let ctx = ctx();
        let z = Complex::with_val(PREC, (re, im));
        let direct = theta(&z, &ctx).expect("series converges");
        let inverted = theta(&z.clone().recip(), &ctx).expect("series converges");
        let gap = abs_of(&(direct.value.clone() - &inverted.value));
        let budget = direct.tail_bound.clone()
            + &inverted.tail_bound
            + Float::with_val(PREC, 1e-30);
        prop_assert!(gap <= budget, "gap {} exceeds {}", gap, budget);
    }
}

// ---------------------------------------------------------------------------
// Split-sum recombination
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn split_sums_recombine_for_strip_scales(
        tau_idx in 0usize..4,
        theta_idx in 0usize..3,
        z_idx in 0usize..3,
        n in 5u64..=40,
    ) {
        let tau = ["-1/2", "-1/3", "-2/3", "-3/4"][tau_idx];
        let theta_s = ["0", "1/3", "2/5"][theta_idx];
        let z = [(2.0, 0.0), (1.0, 1.0), (0.5, 0.5)][z_idx];
        let ctx = ctx();
        let p = params(tau, theta_s, z);

        let m = p.tau.to_exact().neg().mul_int(n as i64).floor().expect("finite scale");
        let sums = decomposition_sums(&p, &ctx, n, &m, 2).expect("split sums");
        let recombined = (&sums.s1 + &sums.s2).complete((PREC, PREC));

        let h = hn_normalized(&p, &ctx, n).expect("normalized sum");
        let f = prefactor_log(&p, &ctx, n, &m)
            .expect("prefactor")
            .materialize(PREC)
            .expect("materializes");
        let scaled = (&h.value * &f).complete((PREC, PREC));

        let denom = abs_of(&scaled) + 1e-30f64;
        let rel = abs_of(&(scaled - recombined)) / denom;
        prop_assert!(
            rel < Float::with_val(PREC, 1e-25),
            "relative gap {} at tau = {}, theta = {}, n = {}",
            rel,
            tau,
            theta_s,
            n
        );
    }
}

// ---------------------------------------------------------------------------
// Main-term path agreement and bound monotonicity
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn critical_main_terms_agree_between_rational_and_hit_paths(
        a in 0i64..=30,
        b in 1i64..=31,
        z_idx in 0usize..2,
    ) {
        prop_assume!(a < b);
        let z = [(2.0, 0.0), (1.0, 1.0)][z_idx];
        let ctx = ctx();
        let p = params("0", "1/3", z);

        let mut rational_arith = qhermite::RegimeArithmetic::default();
        rational_arith.m = Some(Integer::from(0));
        rational_arith.lambda = Some(Rational::from((a, b)));
        let via_rational = main_term(&p, &ctx, Regime::CriticalRational, &rational_arith)
            .expect("rational path");

        let mut hit_arith = qhermite::RegimeArithmetic::default();
        hit_arith.m = Some(Integer::from(0));
        hit_arith.beta = Some(Float::with_val(PREC, Rational::from((a, b))));
        hit_arith.gamma_n = Some(Float::new(PREC));
        hit_arith.nu_n = Some(1);
        hit_arith.rho = Some(0.9);
        let via_hit = main_term(&p, &ctx, Regime::CriticalIrrational, &hit_arith)
            .expect("hit path");

        let gap = abs_of(&(via_rational.value.clone() - &via_hit.value));
        let budget = via_rational.tail_bound.clone()
            + &via_hit.tail_bound
            + Float::with_val(PREC, 1e-30);
        prop_assert!(gap <= budget, "gap {} exceeds {}", gap, budget);
    }

    #[test]
    fn positive_scale_bounds_decrease_monotonically(
        tau_idx in 0usize..3,
        z_idx in 0usize..2,
        theta_idx in 0usize..2,
    ) {
        let tau = ["1/4", "1/2", "1"][tau_idx];
        let z = [(2.0, 0.0), (1.0, 1.0)][z_idx];
        let theta_s = ["0", "1/3"][theta_idx];
        let ctx = ctx();
        let p = params(tau, theta_s, z);
        let targets = Targets::default();

        let mut previous: Option<Float> = None;
        for n in 1..=40u64 {
            let (regime, arith) = arithmetic_for(&p, &ctx, n, &targets).expect("arithmetic");
            prop_assert_eq!(regime, Regime::TauPositive);
            let bound = error_bound(&p, &ctx, n, regime, &arith).expect("bound");
            if let Some(prev) = previous {
                prop_assert!(
                    bound < prev,
                    "bound fails to decrease at n = {} for tau = {}",
                    n,
                    tau
                );
            }
            previous = Some(bound);
        }
    }
}

// ---------------------------------------------------------------------------
// Report self-consistency
// ---------------------------------------------------------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn verified_reports_respect_their_own_pass_predicate(
        n in 1u64..=60,
        branch in 0usize..3,
    ) {
        let ctx = ctx();
        let p = match branch {
            0 => params("1/2", "0", (2.0, 0.0)),
            1 => params("0", "1/3", (2.0, 0.0)),
            _ => params("-1/2", "1/3", (2.0, 0.0)),
        };
        let report = verify(&p, &ctx, n, &Targets::default()).expect("report");
        if report.n_small {
            prop_assert!(!report.pass);
            prop_assert!(report.bound.is_nan());
        } else {
            let threshold = report.bound.clone() + &report.tolerance;
            prop_assert_eq!(report.pass, report.abs_diff <= threshold);
            prop_assert!(report.abs_diff.is_finite());
            prop_assert!(report.bound.is_finite());
        }
    }
}
