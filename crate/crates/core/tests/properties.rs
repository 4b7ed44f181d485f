use std::f64::consts::PI;

use apxbsp_core::classes::{
    bari_ratio, log_grid, membership_by_best_approx, membership_by_modulus, power_tail_spectrum, Majorant,
};
use apxbsp_core::inverse::{abel_transform, inverse_bound_power, max_gap};
use apxbsp_core::jackson::{
    constant_from_measure, sharp_constant, stieltjes_phi_integral, uniform_bound, WeightMeasure,
};
use apxbsp_core::minimax::{solve_minimax, MinimaxProblem};
use apxbsp_core::quadrature::{integrate, sigma_series, sine_power_integral, QuadratureSettings};
use apxbsp_core::smoothness::{generalized_modulus, StepWeight};
use apxbsp_core::{ExponentLadder, Spectrum, SpectrumEntry};
use num_complex::Complex64;
use proptest::prelude::*;

fn arithmetic_spectrum(p: f64, coeffs: &[(f64, f64, f64, f64)], mean: f64) -> Spectrum {
    let mut entries = vec![SpectrumEntry::real(0, 0.0, mean)];
    for (i, &(a, b, c, d)) in coeffs.iter().enumerate() {
        let k = i as i64 + 1;
        entries.push(SpectrumEntry::new(-k, -(k as f64), Complex64::new(a, b)));
        entries.push(SpectrumEntry::new(k, k as f64, Complex64::new(c, d)));
    }
    Spectrum::with_ladder(p, entries, ExponentLadder::arithmetic(coeffs.len())).unwrap()
}

fn coeffs(max: usize) -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((0.05..1.0f64, -1.0..1.0f64, 0.05..1.0f64, -1.0..1.0f64), 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn norm_is_absolutely_homogeneous(c in coeffs(10), p in 1.0..4.0f64, re in -3.0..3.0f64, im in -3.0..3.0f64) {
        let s = arithmetic_spectrum(p, &c, 0.7);
        let z = Complex64::new(re, im);
        let lhs = s.scaled(z).lp_norm();
        prop_assert!((lhs - z.norm() * s.lp_norm()).abs() <= 1e-12 * (1.0 + lhs));
    }

    #[test]
    fn best_approximation_decreases(c in coeffs(12), p in 1.0..4.0f64, mean in 0.0..1.0f64) {
        let s = arithmetic_spectrum(p, &c, mean);
        let mut prev = f64::INFINITY;
        for n in 1..=c.len() + 1 {
            let e = s.best_approximation(n).unwrap();
            prop_assert!(e <= prev);
            prev = e;
        }
        let e1 = s.best_approximation(1).unwrap();
        prop_assert!(e1 <= s.lp_norm() + 1e-15);
        if mean == 0.0 {
            prop_assert!((e1 - s.lp_norm()).abs() < 1e-14);
        } else {
            prop_assert!(e1 < s.lp_norm());
        }
    }

    #[test]
    fn tail_is_the_best_approximation(c in coeffs(10), g in coeffs(10), p in 1.0..3.0f64, n in 1usize..10) {
        let s = arithmetic_spectrum(p, &c, 0.3);
        let top = c.len();
        let n = n.min(top);
        // competitor supported on |k| < n
        let mut entries = vec![SpectrumEntry::real(0, 0.0, g[0].0)];
        for k in 1..n.min(g.len() + 1) {
            let (a, b, cc, d) = g[k - 1];
            entries.push(SpectrumEntry::new(-(k as i64), -(k as f64), Complex64::new(a, b)));
            entries.push(SpectrumEntry::new(k as i64, k as f64, Complex64::new(cc, d)));
        }
        let comp = Spectrum::with_ladder(p, entries, ExponentLadder::arithmetic(top)).unwrap();
        let dist = s.sub(&comp).unwrap().lp_norm();
        prop_assert!(dist >= s.best_approximation(n).unwrap() - 1e-12);
    }

    #[test]
    fn modulus_is_monotone(c in coeffs(8), p in 1.0..3.0f64, alpha in 0.5..2.5f64, d1 in 0.01..1.5f64, d2 in 0.01..1.5f64) {
        let s = arithmetic_spectrum(p, &c, 0.0);
        let phi = StepWeight::alpha(alpha).unwrap();
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let a = generalized_modulus(&s, &phi, lo, 2048).unwrap();
        let b = generalized_modulus(&s, &phi, hi, 2048).unwrap();
        prop_assert!(a <= b + 1e-12, "{a} > {b}");
    }

    #[test]
    fn modulus_is_subadditive(c in coeffs(8), g in coeffs(8), p in 1.0..3.0f64, alpha in 0.5..2.0f64, d in 0.05..2.0f64) {
        let n = c.len().min(g.len());
        let f1 = arithmetic_spectrum(p, &c[..n], 0.0);
        let f2 = arithmetic_spectrum(p, &g[..n], 0.0);
        let phi = StepWeight::alpha(alpha).unwrap();
        let sum = generalized_modulus(&f1.add(&f2).unwrap(), &phi, d, 4096).unwrap();
        let a = generalized_modulus(&f1, &phi, d, 4096).unwrap();
        let b = generalized_modulus(&f2, &phi, d, 4096).unwrap();
        prop_assert!(sum <= a + b + 2e-9, "{sum} > {a} + {b}");
    }

    #[test]
    fn modulus_is_bounded_by_weight_sup(c in coeffs(8), p in 1.0..3.0f64, alpha in 0.5..2.0f64, d in 0.05..6.0f64) {
        let s = arithmetic_spectrum(p, &c, 0.4);
        let phi = StepWeight::alpha(alpha).unwrap();
        let w = generalized_modulus(&s, &phi, d, 2048).unwrap();
        prop_assert!(w <= phi.sup_bound().unwrap() * s.lp_norm() + 1e-12);
    }

    #[test]
    fn integrals_are_additive(a in -2.0..2.0f64, w in 0.1..4.0f64, m in 0.0..1.0f64, c0 in -2.0..2.0f64, c1 in 0.1..5.0f64) {
        let q = QuadratureSettings::default();
        let g = |t: f64| c0 * (c1 * t).sin() + (t * t * 0.3).exp();
        let b = a + w;
        let mid = a + m * w;
        let whole = integrate(g, a, b, &q).unwrap();
        let split = integrate(g, a, mid, &q).unwrap() + integrate(g, mid, b, &q).unwrap();
        prop_assert!((whole - split).abs() <= 2.0 * q.abs_tol);
    }

    #[test]
    fn cosine_integral_lower_bound(theta in 1.0..20.0f64, s in 1u32..=3) {
        let q = QuadratureSettings::new(1e-12, 50).unwrap();
        let s = f64::from(s);
        let v = integrate(|t: f64| (1.0 - (theta * t).cos()).powf(s) * t.sin(), 0.0, PI, &q).unwrap();
        prop_assert!(v >= 2f64.powf(s + 1.0) / (s + 1.0) - 1e-8, "θ = {theta}: {v}");
    }

    #[test]
    fn cosine_integral_sigma_bound(theta in 1.0..20.0f64, idx in 0usize..3) {
        let s = [0.5, 1.5, 2.5][idx];
        let q = QuadratureSettings::new(1e-12, 50).unwrap();
        let sigma = sigma_series(s, 1e-12).unwrap().value;
        // panels between zeros of 1 - cos θt keep the fractional power smooth
        let period = 2.0 * PI / theta;
        let mut v = 0.0;
        let mut a = 0.0;
        while a < PI {
            let b = (a + period).min(PI);
            v += integrate(|t: f64| (1.0 - (theta * t).cos()).powf(s) * t.sin(), a, b, &q).unwrap();
            a = b;
        }
        prop_assert!(v >= 2f64.powf(s + 1.0) / (s + 1.0) + sigma - 1e-6, "θ = {theta}, s = {s}: {v}");
    }

    #[test]
    fn minimax_certificates(m in prop::collection::vec(prop::collection::vec(0.0..2.0f64, 4), 3..12)) {
        let nodes: Vec<f64> = (0..m.len()).map(|i| i as f64).collect();
        let prob = MinimaxProblem::new(m.clone(), nodes, vec![1, 2, 3, 4]).unwrap();
        let sol = solve_minimax(&prob).unwrap();
        let scale = 1.0 + sol.value;
        prop_assert!((prob.primal_value(&sol.rho) - sol.value).abs() <= 1e-9 * scale);
        let cols = prob.column_integrals(&sol.dual_weights);
        for (r, c) in sol.rho.iter().zip(&cols) {
            prop_assert!(*c >= sol.value - 1e-8 * scale);
            if *r > 1e-8 {
                prop_assert!((c - sol.value).abs() <= 1e-6 * scale);
            }
        }
        // adding rows can only raise the min-max
        let mut more = m.clone();
        more.push(vec![1.5, 0.5, 1.0, 2.0]);
        let nodes: Vec<f64> = (0..more.len()).map(|i| i as f64).collect();
        let bigger = solve_minimax(&MinimaxProblem::new(more, nodes, vec![1, 2, 3, 4]).unwrap()).unwrap();
        prop_assert!(bigger.value >= sol.value - 1e-9);
    }

    #[test]
    fn abel_identity(beta in prop::collection::vec(-5.0..5.0f64, 2..40), c in prop::collection::vec(-3.0..3.0f64, 0..50), a in 0usize..40, b in 0usize..40) {
        let len = beta.len();
        let (n1, n2) = (a % len + 1, b % len + 1);
        let (n1, n2) = (n1.min(n2), n1.max(n2));
        let (lhs, rhs) = abel_transform(&beta, &c, n1, n2).unwrap();
        let scale: f64 = beta.iter().map(|x| x.abs()).sum::<f64>() * c.iter().map(|x| x.abs()).sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + scale));
    }

    #[test]
    fn inverse_rhs_grows_with_tails(c in coeffs(10), idx in 0usize..10, factor in 1.0..3.0f64, p in 1.0..3.0f64) {
        let s = arithmetic_spectrum(p, &c, 0.0);
        let top = c.len();
        let mut bigger = c.clone();
        let i = idx % top;
        bigger[i].2 *= factor;
        let t = arithmetic_spectrum(p, &bigger, 0.0);
        let alpha = 1.0;
        for n in 1..=top {
            let a = inverse_bound_power(&s, n, alpha).unwrap().rhs;
            let b = inverse_bound_power(&t, n, alpha).unwrap().rhs;
            prop_assert!(b >= a * (1.0 - 1e-14));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sharp_constant_is_the_infimum_over_grid_measures(w in prop::collection::vec(0.0..1.0f64, 128), n in 1usize..4) {
        let lad = ExponentLadder::arithmetic(24);
        let phi = StepWeight::alpha(1.0).unwrap();
        let sharp = sharp_constant(&lad, n, &phi, 2.0, PI, 128, 24).unwrap();
        // measures on the same u grid as the discrete problem
        let nodes: Vec<f64> = (0..128).map(|i| if i == 127 { PI } else { PI * i as f64 / 127.0 }).collect();
        let mut incs = w.clone();
        incs[0] = 0.0;
        let v = WeightMeasure::new(nodes, incs).unwrap();
        let c = constant_from_measure(&lad, n, &phi, 2.0, &v, 24).unwrap();
        prop_assert!(sharp.k_value <= c + 1e-6, "{} > {c}", sharp.k_value);
    }

    #[test]
    fn sharp_constant_dominates_sample_functions(c in coeffs(12), n in 1usize..6) {
        let s = arithmetic_spectrum(2.0, &c, 0.5);
        let top = c.len();
        let n = n.min(top);
        let phi = StepWeight::alpha(1.0).unwrap();
        let sharp = sharp_constant(s.ladder(), n, &phi, 2.0, PI, 256, top).unwrap();
        let e = s.best_approximation(n).unwrap();
        let w = generalized_modulus(&s, &phi, PI / n as f64, 4096).unwrap();
        prop_assert!(e / w <= sharp.k_value + 1e-6, "{} > {}", e / w, sharp.k_value);
    }
}

#[test]
fn sine_power_integral_matches_beta_function() {
    let q = QuadratureSettings::default();
    for beta in [1.0, 1.7, 2.0, 3.3, 6.0] {
        let exact = statrs::function::beta::beta(0.5, (beta + 1.0) / 2.0);
        let v = sine_power_integral(PI, beta, &q).unwrap();
        assert!((v - exact).abs() < 1e-9, "β = {beta}: {v} vs {exact}");
        let two = sine_power_integral(2.0 * PI, beta, &q).unwrap();
        assert!((two - 2.0 * exact).abs() < 2e-9);
    }
}

#[test]
fn f_beta_is_smallest_at_the_left_end() {
    let q = QuadratureSettings::new(1e-12, 50).unwrap();
    for h in [0.5, 1.5, 2.3] {
        for beta in [1.0, 2.0, 3.7] {
            // running integral over the scan grid
            let step = 1e-3;
            let start = h / 2.0;
            let mut x = start;
            let mut acc = sine_power_integral(start, beta, &q).unwrap();
            let first = acc / start;
            let mut min = (first, start);
            while x + step <= 50.0 {
                acc += integrate(|t: f64| t.sin().abs().powf(beta), x, x + step, &q).unwrap();
                x += step;
                if acc / x < min.0 {
                    min = (acc / x, x);
                }
            }
            assert!(min.1 - start <= step + 1e-12, "h = {h}, β = {beta}: min at {}", min.1);
        }
    }
}

#[test]
fn extremal_measure_reproduces_the_min_max() {
    let lad = ExponentLadder::arithmetic(32);
    for (alpha, p) in [(1.0, 2.0), (2.0, 1.0), (1.0, 1.0)] {
        let phi = StepWeight::alpha(alpha).unwrap();
        let sharp = sharp_constant(&lad, 2, &phi, p, PI, 256, 32).unwrap();
        let i = stieltjes_phi_integral(&lad, 2, &phi, p, &sharp.v_star, 32).unwrap();
        let k = (sharp.v_star.total() / i.value).powf(1.0 / p);
        assert!((k - sharp.k_value).abs() < 1e-6);
        assert!((sharp.k_value.powf(-p) - i.value / sharp.v_star.total()).abs() < 1e-6);
    }
}

#[test]
fn uniform_bounds_dominate_sharp_constants() {
    let lad = ExponentLadder::arithmetic(64);
    for alpha in [1.0, 2.0] {
        for p in [1.0, 2.0] {
            let phi = StepWeight::alpha(alpha).unwrap();
            let u = uniform_bound(alpha, p, None).unwrap();
            for n in [1, 4] {
                let sharp = sharp_constant(&lad, n, &phi, p, PI, 512, 64).unwrap();
                assert!(
                    sharp.k_value <= u.value + 1e-3,
                    "α = {alpha}, p = {p}, n = {n}: {} > {}",
                    sharp.k_value,
                    u.value
                );
            }
        }
    }
}

#[test]
fn modulus_bound_transfers_to_best_approximation() {
    // E ≤ (4/3)^{1/p} 2^{-α/2} ω_α(f, π/λ_n), so a bound B on ω_α(f, δ)/δ^r
    // over δ = π/λ_n bounds E_n/λ_n^{-r} by (4/3)^{1/p} 2^{-α/2} π^r B
    for (r, p, alpha) in [(0.25, 2.0, 1.0), (0.5, 2.0, 1.0), (0.5, 1.0, 1.0), (0.8, 1.0, 2.0)] {
        let s = power_tail_spectrum(96, r, p).unwrap();
        let omega = Majorant::power(r).unwrap();
        let ns: Vec<usize> = (4..=96).collect();
        let deltas: Vec<f64> = ns.iter().map(|&n| PI / n as f64).collect();
        let by_mod = membership_by_modulus(&s, &omega, alpha, &deltas).unwrap();
        let by_e = membership_by_best_approx(&s, &omega, Some(4..=96)).unwrap();
        let c = (4.0f64 / 3.0).powf(1.0 / p) / 2f64.powf(alpha / 2.0);
        assert!(
            by_e.sup_ratio <= c * PI.powf(r) * by_mod.sup_ratio + 1e-8,
            "r = {r}: {} vs {}",
            by_e.sup_ratio,
            by_mod.sup_ratio
        );
    }
}

#[test]
fn bari_condition_bounds_the_modulus() {
    let alpha = 1.0;
    let p = 2.0;
    for r in [0.25, 0.5, 0.9] {
        let size = 128;
        let omega = Majorant::power(r).unwrap();
        let lad = ExponentLadder::arithmetic(size);
        let bari = bari_ratio(&omega, alpha * p, &lad, 1..=size, p).unwrap();
        for scale in [1.0, 0.5] {
            let s = power_tail_spectrum(size, r, p)
                .unwrap()
                .scaled(Complex64::new(scale, 0.0));
            let c = max_gap(&s).unwrap();
            let k_thm = (alpha * p * (2.0 * PI).powf(alpha * p) * c * bari.max_ratio).powf(1.0 / p);
            // δ ≥ π/λ_size keeps every δ inside the range the ladder resolves
            let deltas = log_grid(PI / size as f64, 1.0, 24).unwrap();
            let m = membership_by_modulus(&s, &omega, alpha, &deltas).unwrap();
            assert!(m.sup_ratio <= k_thm + 1e-6, "r = {r}: {} > {k_thm}", m.sup_ratio);
        }
    }
}
