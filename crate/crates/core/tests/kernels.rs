use approx::assert_abs_diff_eq;
use kramers_core::kernels::{t_at_zero, T1_AT_ZERO};
use kramers_core::{eval_j, eval_l, eval_phi0, eval_s, eval_t, QuadratureSpec};
use proptest::prelude::*;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn t(n: usize, k: f64) -> f64 {
    eval_t(n, k, &spec()).unwrap().value
}

#[test]
fn tabulated_values() {
    assert_abs_diff_eq!(t(1, 0.0), 0.375, epsilon = 1e-15);
    assert_abs_diff_eq!(t(2, 0.0), 0.2, epsilon = 1e-15);
    assert_abs_diff_eq!(t(3, 0.0), 0.125, epsilon = 1e-15);
    assert_abs_diff_eq!(t(0, 1.0), 0.856194, epsilon = 5e-7);
    assert_abs_diff_eq!(eval_j(1, 0.0, 0.0, &spec()).unwrap().value, 0.375, epsilon = 1e-15);
    assert_abs_diff_eq!(eval_l(0.0, &spec()).unwrap().value, 0.0);
    assert_abs_diff_eq!(eval_l(1.0, &spec()).unwrap().value, 0.143806, epsilon = 5e-7);
    assert_abs_diff_eq!(eval_phi0(0.0, &spec()).unwrap().value, -2.0 / 105.0, epsilon = 1e-15);
    assert_abs_diff_eq!(eval_phi0(0.0, &spec()).unwrap().value, -0.0190476, epsilon = 5e-8);
}

#[test]
fn j_reduces_to_t() {
    for n in 0..=5 {
        for &k in &[0.5, 1.0, 2.0] {
            let j = eval_j(n, k, 0.0, &spec()).unwrap().value;
            assert_abs_diff_eq!(j, t(n, k), epsilon = 1e-12);
        }
    }
}

#[test]
fn l_against_one_minus_t0() {
    for &k in &[0.25, 1.0, 4.0] {
        let l = eval_l(k, &spec()).unwrap().value;
        assert!((l - (1.0 - t(0, k))).abs() < 1e-9);
    }
}

#[test]
fn l_approaches_one_slowly() {
    // 1 − L = T₀ ≈ 3π/(4k), so the gap at k = 100 is about 0.024
    let l100 = eval_l(100.0, &spec()).unwrap().value;
    assert!((1.0 - l100 - 3.0 * std::f64::consts::PI / 400.0).abs() < 5e-4, "{l100}");
    let l = eval_l(1e4, &spec()).unwrap().value;
    assert!((1.0 - l).abs() < 1e-3);
}

#[test]
fn phi0_decomposition_and_decay() {
    for &k in &[0.5, 1.0, 3.0] {
        let p = eval_phi0(k, &spec()).unwrap().value;
        assert!((p - (8.0 / 15.0 * t(3, k) - t(4, k))).abs() < 1e-10);
    }
    let mut prev = f64::INFINITY;
    for &k in &[10.0, 100.0, 1000.0, 1e4] {
        let p = eval_phi0(k, &spec()).unwrap().value.abs();
        assert!(p < prev);
        prev = p;
    }
    assert!(prev < 1e-8);
}

#[test]
fn s_on_the_axes() {
    for &k in &[0.0, 0.3, 2.0, 50.0] {
        assert_eq!(eval_s(k, 0.0, &spec()).unwrap().value, 0.0);
    }
    for &k1 in &[0.2, 1.0, 3.0] {
        let expect = k1 * k1 * (t(3, k1) / 3.0 - t(5, k1));
        assert_abs_diff_eq!(eval_s(0.0, k1, &spec()).unwrap().value, expect, epsilon = 1e-12);
    }
}

#[test]
fn s_at_one_one_by_midpoint_rule() {
    // S(1,1) = T₃(1)²/T₁(0) − J₅(1,1), each integral by 10⁶ midpoints
    let n = 1_000_000;
    let h = 1.0 / n as f64;
    let (mut t3, mut j5) = (0.0, 0.0);
    for i in 0..n {
        let x = (i as f64 + 0.5) * h;
        let d = 1.0 + x * x;
        t3 += 1.5 * x.powi(3) * (1.0 - x * x) / d * h;
        j5 += 1.5 * x.powi(5) * (1.0 - x * x) / (d * d) * h;
    }
    let brute = t3 * t3 / T1_AT_ZERO - j5;
    assert_abs_diff_eq!(eval_s(1.0, 1.0, &spec()).unwrap().value, brute, epsilon = 1e-7);
}

#[test]
fn recurrence_in_order() {
    for n in 0..=3 {
        for &k in &[0.1, 1.0, 5.0] {
            let r = t(n, k) - (t_at_zero(n) - k * k * t(n + 2, k));
            assert!(r.abs() < 1e-9, "n={n} k={k}: {r}");
        }
    }
}

#[test]
fn identity_suite_on_twenty_points() {
    let ks: Vec<f64> = (0..20).map(|i| 0.05 * 1.6f64.powi(i)).collect();
    for &k in &ks {
        let l = eval_l(k, &spec()).unwrap().value;
        assert!((l - k * k * t(2, k)).abs() < 1e-9);
        for n in 0..=4 {
            assert!((t(n, k) - (t_at_zero(n) - k * k * t(n + 2, k))).abs() < 1e-9);
            assert!((eval_j(n, k, 0.0, &spec()).unwrap().value - t(n, k)).abs() < 1e-9);
        }
        assert!(eval_s(k, 0.0, &spec()).unwrap().value.abs() < 1e-9);
    }
}

#[test]
fn monotone_on_sampled_grid() {
    let ks: Vec<f64> = (0..30).map(|i| 0.01 * 1.5f64.powi(i)).collect();
    for n in 0..=6 {
        let vals: Vec<f64> = ks.iter().map(|&k| t(n, k)).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "n={n}");
    }
    for &k in &ks {
        let vals: Vec<f64> = (0..=8).map(|n| t(n, k)).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "k={k}");
    }
}

#[test]
fn deterministic_and_thread_safe() {
    let a: Vec<u64> = (0..50).map(|i| eval_j(3, 0.1 * i as f64, 2.5, &spec()).unwrap().value.to_bits()).collect();
    let handles: Vec<_> = (0..4)
        .map(|_| {
            std::thread::spawn(|| {
                (0..50)
                    .map(|i| eval_j(3, 0.1 * i as f64, 2.5, &QuadratureSpec::default()).unwrap().value.to_bits())
                    .collect::<Vec<u64>>()
            })
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn j_is_symmetric_and_bounded(n in 0usize..=8, k in 0.0f64..200.0, k1 in 0.0f64..200.0) {
        let a = eval_j(n, k, k1, &spec()).unwrap();
        let b = eval_j(n, k1, k, &spec()).unwrap();
        prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
        prop_assert!(a.value >= 0.0);
        prop_assert!(a.value <= t(n, k.min(k1)) + 1e-14);
        prop_assert!(a.est_error >= 0.0);
        prop_assert!(a.est_error <= spec().target(a.value));
    }

    #[test]
    fn l_positive_away_from_zero(k in 1e-6f64..1e6) {
        prop_assert!(eval_l(k, &spec()).unwrap().value > 0.0);
    }

    #[test]
    fn s_definitional_form(k in 0.0f64..30.0, k1 in 0.0f64..30.0) {
        // S = k₁²[T₃(k)T₃(k₁)/T₁(0) − J₅(k,k₁)]
        let def = k1 * k1 * (t(3, k) * t(3, k1) / T1_AT_ZERO - eval_j(5, k, k1, &spec()).unwrap().value);
        let s = eval_s(k, k1, &spec()).unwrap().value;
        prop_assert!((s - def).abs() < 1e-9 * (1.0 + def.abs()), "{} vs {}", s, def);
    }
}
