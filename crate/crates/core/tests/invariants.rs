use oscillab_core::hermite::pure_hermite;
use oscillab_core::hermite_process::{lambda_norm, IntegrandFn};
use oscillab_core::homogenize::{decompose, flux_defect, solve_on, Medium, ProblemSpec, Source};
use oscillab_core::limit::{aligned_delta, chaos_covariance};
use oscillab_core::stats::Moments;
use oscillab_core::{CoefficientSampler, KernelSpec, MovingAverage, RankedFunction};
use proptest::prelude::*;

fn unit_spec(source: Source, b: f64, eps: f64, a: f64) -> ProblemSpec {
    let c = CoefficientSampler::new(RankedFunction::constant(0.0), a).unwrap();
    ProblemSpec::new(source, b, eps, c, 400).unwrap()
}

fn source(k: u8) -> Source {
    match k % 3 {
        0 => Source::Const(1.0),
        1 => Source::Linear(2.0),
        _ => Source::Sin,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_has_unit_energy(m in 1u32..=3, frac in 0.05f64..0.95) {
        let lo = 1.0 - 1.0 / (2.0 * m as f64);
        let h0 = lo + frac * (1.0 - lo);
        let e = KernelSpec::default_for(m, h0).unwrap().energy();
        prop_assert!((e - 1.0).abs() < 1e-6, "{e}");
    }

    #[test]
    fn h0_below_threshold_is_rejected(m in 1u32..=4, frac in 0.0f64..1.0) {
        let lo = 1.0 - 1.0 / (2.0 * m as f64);
        prop_assert!(KernelSpec::default_for(m, frac * lo).is_err());
    }

    #[test]
    fn pure_chaos_covariance(m in 1usize..=4, r in -1.0f64..1.0) {
        let phi = pure_hermite(m).unwrap();
        let want = (1..=m).product::<usize>() as f64 * r.powi(m as i32);
        prop_assert!((chaos_covariance(&phi.expansion, r) - want).abs() < 1e-9 * (1.0 + want.abs()));
    }

    #[test]
    fn indicator_norm_closed_form(t in 0.01f64..5.0, h in 0.55f64..0.99) {
        let v = lambda_norm(&IntegrandFn::indicator(0.0, t).unwrap(), h);
        prop_assert!((v - t.powf(2.0 * h)).abs() < 1e-10 * (1.0 + v));
    }

    #[test]
    fn step_norm_is_stationary(a in 0.0f64..2.0, w in 0.1f64..1.0, s in 0.0f64..3.0, h in 0.55f64..0.95) {
        let f = IntegrandFn::step(vec![a, a + w], vec![1.0]).unwrap();
        let g = IntegrandFn::step(vec![a + s, a + s + w], vec![1.0]).unwrap();
        prop_assert!((lambda_norm(&f, h) - lambda_norm(&g, h)).abs() < 1e-10);
    }

    #[test]
    fn linear_combination_is_pointwise(al in -2.0f64..2.0, be in -2.0f64..2.0, x in 0.0f64..1.0) {
        let f = IntegrandFn::step(vec![0.0, 0.3, 1.0], vec![1.0, -1.0]).unwrap();
        let g = IntegrandFn::step(vec![0.1, 0.6, 1.0], vec![2.0, 0.5]).unwrap();
        let c = IntegrandFn::linear_combination(al, &f, be, &g).unwrap();
        prop_assert!((c.eval(x) - (al * f.eval(x) + be * g.eval(x))).abs() < 1e-12);
    }

    #[test]
    fn moments_shift_invariance(xs in prop::collection::vec(-10.0f64..10.0, 5..60), c in -100.0f64..100.0) {
        let a = Moments::of(&xs);
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let b = Moments::of(&shifted);
        prop_assert!((a.variance - b.variance).abs() < 1e-8 * (1.0 + a.variance));
        prop_assert!((a.mean + c - b.mean).abs() < 1e-9 * (1.0 + c.abs()));
    }

    #[test]
    fn aligned_grid_has_integer_cells(eps in 1e-3f64..0.5, spu in 1.0f64..50.0) {
        let d = aligned_delta(eps, spu);
        let n = 1.0 / (eps * d);
        prop_assert!((n - n.round()).abs() < 1e-6);
        prop_assert!(d <= 1.0 / spu + 1e-12);
    }

    #[test]
    fn constant_coefficient_is_exact(a in 0.3f64..4.0, b in -2.0f64..2.0, k in 0u8..3, cells in 50usize..400) {
        let s = unit_spec(source(k), b, 0.1, a);
        let m = Medium::constant(a, cells).unwrap();
        let p = solve_on(&s, &m);
        let err = p.u_eps.iter().zip(&p.u_bar).fold(0.0f64, |e, (x, y)| e.max((x - y).abs()));
        prop_assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn flux_and_reconstruction_on_random_media(
        a in prop::collection::vec(0.4f64..2.5, 200..600),
        b in -1.0f64..1.0,
        k in 0u8..3,
    ) {
        let s = unit_spec(source(k), b, 0.01, 1.0);
        let m = Medium::from_values(0.01, 1.0, a).unwrap();
        let p = solve_on(&s, &m);
        prop_assert_eq!(p.u_eps[0], 0.0);
        prop_assert!((p.u_eps.last().unwrap() - b).abs() < 1e-12);
        prop_assert!(flux_defect(&p, &m) < 1e-9);
        let d = decompose(&s, &m, &p, 0.1).unwrap();
        prop_assert!(d.reconstruction_error < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn paths_are_reproducible(seed in any::<u64>(), n in 10usize..200) {
        let k = KernelSpec::default_for(1, 0.8).unwrap();
        let ma = MovingAverage::new(&k, 0.5, None).unwrap();
        prop_assert_eq!(ma.sample(n, seed), ma.sample(n, seed));
    }
}
