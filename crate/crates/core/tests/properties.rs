use bergman_lab::approximation::boundary_parameters;
use bergman_lab::domains::DomainSpec;
use bergman_lab::harness::{parse_symbol, ExperimentConfig};
use bergman_lab::kernel::KernelEngine;
use bergman_lab::operators::tail_trend;
use bergman_lab::Complex64;
use proptest::prelude::*;

/// Point of the unit ball of C² scaled to modulus `< 0.95`.
fn ball_point() -> impl Strategy<Value = Vec<Complex64>> {
    (prop::array::uniform4(-1.0f64..1.0), 0.0f64..0.95).prop_map(|(v, r)| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
        vec![Complex64::new(v[0], v[1]) * (r / n), Complex64::new(v[2], v[3]) * (r / n)]
    })
}

fn polydisc_point() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((0.0f64..0.95, 0.0f64..6.3).prop_map(|(r, a)| Complex64::from_polar(r, a)), 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ball_kernel_is_hermitian_and_positive(z in ball_point(), w in ball_point()) {
        let e = KernelEngine::closed_form(DomainSpec::ball(2)).unwrap();
        let zw = e.kernel(&z, &w).unwrap();
        let wz = e.kernel(&w, &z).unwrap();
        prop_assert!((zw - wz.conj()).norm() <= 1e-12 * zw.norm());
        let (bz, bw) = (e.kernel(&z, &z).unwrap(), e.kernel(&w, &w).unwrap());
        prop_assert!(bz.re > 0.0 && bz.im == 0.0);
        // Cauchy-Schwarz for a reproducing kernel
        prop_assert!(zw.norm_sqr() <= bz.re * bw.re * (1.0 + 1e-12));
    }

    #[test]
    fn polydisc_metric_is_positive_definite(z in polydisc_point()) {
        let e = KernelEngine::closed_form(DomainSpec::polydisc(2)).unwrap();
        let m = e.metric_exact(&z).unwrap();
        prop_assert!(m.min_eigenvalue() > 0.0);
        let want: f64 = z.iter().map(|c| 2.0 / (1.0 - c.norm_sqr()).powi(2)).product();
        prop_assert!((m.det - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn parsed_symbols_have_consistent_dbar(
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        k in 1u32..4,
        z in polydisc_point(),
    ) {
        let expr = format!("{a} * conj(z1)^{k} * z2 + {b} * abs2(z2) - z1^{k}");
        let s = parse_symbol(&expr, 2).unwrap();
        let analytic = s.dbar(&z).unwrap();
        let fd = s.dbar_fd(&z, 1e-6);
        for (x, y) in analytic.iter().zip(&fd) {
            prop_assert!((x - y).norm() <= 1e-5 * (1.0 + x.norm()), "{expr}: {x} vs {y}");
        }
        let holo = parse_symbol(&format!("{a} * z1^{k} * z2 + {b}"), 2).unwrap();
        prop_assert!(holo.holomorphic);
        prop_assert!(holo.dbar(&z).unwrap().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn config_round_trips(
        radius in 0.1f64..3.0,
        seed in 0..=i64::MAX as u64,
        degree in 1usize..60,
        res in prop::option::of(0.005f64..0.3),
        steps in 1usize..20,
    ) {
        let cfg = ExperimentConfig { radius, seed, degree, resolution: res, steps, ..Default::default() };
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn boundary_parameters_are_increasing(steps in 2usize..40, lo in 0.0f64..0.5, span in 0.01f64..0.49) {
        let hi = lo + span;
        let ts = boundary_parameters(steps, lo, hi);
        prop_assert_eq!(ts.len(), steps);
        prop_assert!((ts[0] - lo).abs() < 1e-12 && (ts[steps - 1] - hi).abs() < 1e-12);
        prop_assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn tail_trend_is_scale_invariant(v in prop::collection::vec(0.01f64..10.0, 1..30), s in 0.1f64..100.0) {
        let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
        let (a, b) = (tail_trend(&v, 1e-12), tail_trend(&scaled, 1e-12));
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }
}
