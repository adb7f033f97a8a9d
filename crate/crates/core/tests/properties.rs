//! Randomized invariants across modules.

use gabor_core::certify::{case_polys, q, sturm, trig_reduce, Case, RationalPoly, Q};
use gabor_core::frameset::{self, cell_verdict, ExclusionReason, LineStats, Verdict};
use gabor_core::lattice::{m_value, m_value_side};
use gabor_core::sampling::{self, SamplingSet};
use gabor_core::special;
use gabor_core::{LatticeOpts, Side, Window};
use proptest::prelude::*;

fn opts() -> LatticeOpts {
    LatticeOpts::with_grid(512)
}

fn catalog() -> impl Strategy<Value = Window> {
    prop_oneof![
        (2u32..=5).prop_map(Window::bspline),
        Just(Window::gaussian()),
        Just(Window::two_sided_exp()),
        (0u32..=4).prop_map(Window::hermite),
        Just("two-pole:1,-3".parse::<Window>().unwrap()),
        Just("type1:0.5,-0.3".parse::<Window>().unwrap()),
        Just("type2-exp:0.3".parse::<Window>().unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn m_is_at_least_quarter_h_squared(w in catalog(), h in 0.3f64..3.0) {
        prop_assume!(!(matches!(w.kind, gabor_core::WindowKind::BSpline { .. }) && (1.0 / h).fract() == 0.0));
        let m = m_value(&w, h, &opts()).unwrap();
        prop_assert!(m >= 0.25 / (h * h) * (1.0 - 1e-12), "M = {m}, h = {h}");
    }

    /// `M_{φ_γ,h} = γ² M_{φ,γh}`.
    #[test]
    fn dilation_scaling(w in catalog(), h in 0.4f64..2.5, gamma in 0.5f64..2.0) {
        prop_assume!(!matches!(w.kind, gabor_core::WindowKind::BSpline { .. }));
        let lhs = m_value(&w.dilate(gamma).unwrap(), h, &opts()).unwrap();
        let rhs = gamma * gamma * m_value(&w, gamma * h, &opts()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs, "{lhs} vs {rhs}");
    }

    #[test]
    fn delta_primal_increases_in_alpha(beta in 0.1f64..2.0, a1 in 0.05f64..2.0, a2 in 0.05f64..2.0) {
        prop_assume!(a1 < a2);
        let m = m_value(&Window::gaussian(), 1.0 / beta, &opts()).unwrap();
        prop_assert!(2.0 * a1 * m.sqrt() < 2.0 * a2 * m.sqrt());
    }

    #[test]
    fn self_dual_windows_swap_exactly(n in 0u32..=4, alpha in 0.1f64..2.0, beta in 0.1f64..2.0) {
        let w = Window::hermite(n);
        let dual = 2.0 * beta * m_value_side(&w, Side::Dual, 1.0 / alpha, &opts()).unwrap().m.sqrt();
        let primal_swapped = 2.0 * beta * m_value_side(&w, Side::Primal, 1.0 / alpha, &opts()).unwrap().m.sqrt();
        prop_assert_eq!(dual, primal_swapped);
        let (d, e) = frameset::hermite_delta(n, alpha, beta, &opts()).unwrap();
        let (e2, d2) = frameset::hermite_delta(n, beta, alpha, &opts()).unwrap();
        prop_assert_eq!((d, e), (d2, e2));
    }

    #[test]
    fn density_exclusion_wins(alpha in 0.01f64..4.0, beta in 0.01f64..4.0, m in 0.0f64..1.0, stable: bool) {
        let line = LineStats { m: Some(m), stable, error: None };
        let c = cell_verdict(&Window::bspline(2), alpha, beta, &line, &line);
        if alpha * beta >= 1.0 {
            prop_assert_eq!(c.verdict, Verdict::Excluded(ExclusionReason::DensityTheorem));
        } else if c.verdict.is_frame() {
            prop_assert!(c.delta_primal.unwrap() < 1.0 || c.delta_dual.unwrap() < 1.0);
        }
    }

    #[test]
    fn bernstein_inequality(m in 2u32..=5, seed in 0u64..10_000, h in prop_oneof![Just(0.5), Just(1.0), Just(0.75)]) {
        let w = Window::bspline(m);
        let f = sampling::synth(&w, h, 10, seed).unwrap();
        let bound = m_value(&w, h, &LatticeOpts::default()).unwrap().sqrt();
        prop_assert!(sampling::bernstein_ratio(&f).unwrap() <= bound * (1.0 + 1e-8));
    }

    #[test]
    fn sampling_bounds_and_translation(seed in 0u64..10_000, frac in 0.2f64..0.9, tau in -3.0f64..3.0) {
        let w = Window::bspline(3);
        let f = sampling::synth(&w, 1.0, 6, seed).unwrap();
        let m = m_value(&w, 1.0, &LatticeOpts::default()).unwrap();
        let step = frac / (2.0 * m.sqrt()) / 1.6;
        let s = SamplingSet::covering(&f, step, 0.3, seed).unwrap();
        let r = sampling::sampling_bounds_check_with_m(&f, &s, m).unwrap();
        prop_assert!(r.lower_ok && r.upper_ok, "{:?}", r);
        let r2 = sampling::sampling_bounds_check_with_m(&f.shifted(tau), &s.shifted(tau), m).unwrap();
        prop_assert!(r2.lower_ok && r2.upper_ok);
        prop_assert!((r2.weighted_sum - r.weighted_sum).abs() <= 1e-9 * r.norm_sq.max(1e-300));
    }

    /// For `x_n = x + αn`, the normalized sum lies between `(1∓2α√M)²‖f‖²/α`.
    #[test]
    fn uniform_shift_consistency(seed in 0u64..1000, x in 0.0f64..1.0, frac in 0.1f64..0.95) {
        let w = Window::bspline(2);
        let f = sampling::synth(&w, 1.0, 6, seed).unwrap();
        let m = m_value(&w, 1.0, &LatticeOpts::default()).unwrap();
        let alpha = frac / (2.0 * m.sqrt());
        let (lo, hi) = f.support(30.0);
        let s = SamplingSet::uniform(x, alpha, lo - 3.0 * alpha, hi + 3.0 * alpha).unwrap();
        let norm_sq = f.l2_norm().unwrap().powi(2);
        let sum: f64 = s.points.iter().map(|x| f.eval(*x).powi(2)).sum();
        let d = 2.0 * alpha * m.sqrt();
        prop_assert!(sum >= (1.0 - d).powi(2) * norm_sq / alpha * (1.0 - 1e-9));
        prop_assert!(sum <= (1.0 + d).powi(2) * norm_sq / alpha * (1.0 + 1e-9));
    }

    #[test]
    fn theta_even_and_periodic(w in -2.0f64..2.0, t in 0.05f64..5.0) {
        let a = special::theta_series(w, t);
        prop_assert!((a - special::theta_series(-w, t)).abs() <= 1e-12 * a);
        prop_assert!((a - special::theta_series(w + 1.0, t)).abs() <= 1e-12 * a);
    }

    #[test]
    fn trig_reduce_round_trip(coeffs in prop::collection::vec(-20i64..20, 1..6), y in 0.0f64..std::f64::consts::PI) {
        let series: Vec<Q> = coeffs.iter().map(|c| Q::from_integer((*c).into())).collect();
        let p = trig_reduce(&series);
        let direct: f64 = coeffs.iter().enumerate().map(|(k, c)| *c as f64 * (k as f64 * y).cos()).sum();
        prop_assert!((p.eval_f64(y.cos()) - direct).abs() <= 1e-12 * (1.0 + direct.abs()) * 20.0);
    }

    #[test]
    fn div_rem_identity(a in prop::collection::vec(-9i64..9, 1..7), b in prop::collection::vec(-9i64..9, 1..4)) {
        let a = RationalPoly::from_ints(&a);
        let b = RationalPoly::from_ints(&b);
        prop_assume!(!b.is_zero());
        let (quo, rem) = a.div_rem(&b);
        prop_assert_eq!(&(&quo * &b) + &rem, a);
        prop_assert!(rem.is_zero() || rem.degree() < b.degree());
    }

    #[test]
    fn case2_polynomials_positive(num in 65i64..=96) {
        let beta = q(num, 64);
        let p = case_polys(Case::Case2, &beta).unwrap();
        prop_assert_eq!(sturm(&p, &q(-1, 1), &q(1, 1)).unwrap().zero_count_bound, 0);
    }

    #[test]
    fn window_spec_round_trip(w in catalog(), gamma in 0.1f64..10.0) {
        let w = w.dilate(gamma).unwrap();
        let json = serde_json::to_string(&w).unwrap();
        prop_assert_eq!(json.parse::<Window>().unwrap(), w.clone());
        prop_assert_eq!(w.to_inline().parse::<Window>().unwrap(), w);
    }
}
