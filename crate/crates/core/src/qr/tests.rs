use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::*;

fn lvl(t: f64) -> QuantileLevel {
    QuantileLevel::new(t).unwrap()
}

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

fn fit_ok(x: &DMatrix<f64>, y: &[f64], tau: f64) -> QrFit {
    let f = fit_matrix(x, y, lvl(tau), &names(x.ncols())).unwrap();
    let cert = check_optimality(x, y, &f);
    assert!(cert.optimal, "certificate violation {}", cert.violation);
    f
}

fn intercept_only(y: &[f64]) -> DMatrix<f64> {
    DMatrix::from_element(y.len(), 1, 1.0)
}

/// Minimum objective over every nonsingular p-row interpolating basis.
fn enumerate_bases(x: &DMatrix<f64>, y: &[f64], tau: f64) -> f64 {
    let (n, p) = x.shape();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..p).collect();
    loop {
        let xh = DMatrix::from_fn(p, p, |k, j| x[(idx[k], j)]);
        if xh.determinant().abs() > 1e-12 {
            if let Some(b) = xh.lu().solve(&nalgebra::DVector::from_fn(p, |k, _| y[idx[k]])) {
                let obj: f64 = (0..n)
                    .map(|i| {
                        let r = y[i] - (0..p).map(|j| x[(i, j)] * b[j]).sum::<f64>();
                        pinball(r, lvl(tau))
                    })
                    .sum();
                best = best.min(obj);
            }
        }
        // next combination
        let mut k = p;
        while k > 0 && idx[k - 1] == n - p + k - 1 {
            k -= 1;
        }
        if k == 0 {
            return best;
        }
        idx[k - 1] += 1;
        for m in k..p {
            idx[m] = idx[m - 1] + 1;
        }
    }
}

fn random_design(rng: &mut ChaCha20Rng, n: usize, p: usize) -> (DMatrix<f64>, Vec<f64>) {
    let x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.random::<f64>() * 4.0 - 2.0 });
    let y = (0..n)
        .map(|i| (0..p).map(|j| x[(i, j)] * (j as f64 + 0.5)).sum::<f64>() + rng.random::<f64>() * 3.0 - 1.0)
        .collect();
    (x, y)
}

#[test]
fn pinball_values() {
    assert_eq!(pinball(0.0, lvl(0.3)), 0.0);
    assert_eq!(pinball(-2.0, lvl(0.5)), 1.0);
    assert!((pinball(1.0, lvl(0.9)) - 0.9).abs() < 1e-15);
    assert!((pinball(-1.0, lvl(0.9)) - 0.1).abs() < 1e-15);
    assert!(QuantileLevel::new(0.0).is_err() && QuantileLevel::new(1.0).is_err());
    assert!(QuantileLevel::new(f64::NAN).is_err());
}

#[test]
fn median_of_three() {
    let y = [1.0, 2.0, 100.0];
    let f = fit_ok(&intercept_only(&y), &y, 0.5);
    assert_eq!(f.beta, vec![2.0]);
    assert!((f.objective - 0.5 * 99.0).abs() < 1e-12);
}

#[test]
fn lower_quartile_flat_region() {
    let y = [1.0, 2.0, 3.0, 4.0];
    let f = fit_ok(&intercept_only(&y), &y, 0.25);
    let at = |b: f64| y.iter().map(|v| pinball(v - b, lvl(0.25))).sum::<f64>();
    assert!((f.objective - at(1.0)).abs() < 1e-12);
    assert!((f.objective - at(2.0)).abs() < 1e-12);
    assert!(f.beta[0] >= 1.0 && f.beta[0] <= 2.0);
}

#[test]
fn matches_basis_enumeration_n10_p2() {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let (x, y) = random_design(&mut rng, 10, 2);
    let f = fit_ok(&x, &y, 0.1);
    let oracle = enumerate_bases(&x, &y, 0.1);
    assert!((f.objective - oracle).abs() <= 1e-9 * oracle.abs().max(1e-12));
}

#[test]
fn matches_enumeration_on_small_instances() {
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    for _ in 0..60 {
        let p = rng.random_range(1..=3);
        let n = rng.random_range(p + 1..=12);
        let tau = rng.random_range(0.05..0.95);
        let (x, y) = random_design(&mut rng, n, p);
        let f = fit_ok(&x, &y, tau);
        let oracle = enumerate_bases(&x, &y, tau);
        assert!((f.objective - oracle).abs() <= 1e-9 * oracle.abs().max(1e-12));
        assert!(f.basic_indices.len() == p);
    }
}

#[test]
fn degenerate_integer_data() {
    // Heavy ties: many optimal vertices, zero residuals outside the basis.
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for _ in 0..100 {
        let n = rng.random_range(4..30);
        let x = DMatrix::from_fn(n, 2, |_, j| if j == 0 { 1.0 } else { rng.random_range(0..3) as f64 });
        if crate::qr::dependent_columns(&x).len() > 0 {
            continue;
        }
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..4) as f64).collect();
        let tau = [0.1, 0.25, 0.5, 0.75][rng.random_range(0..4)];
        let f = fit_ok(&x, &y, tau);
        if n <= 12 {
            let oracle = enumerate_bases(&x, &y, tau);
            assert!((f.objective - oracle).abs() <= 1e-9 * oracle.max(1e-12));
        }
    }
}

#[test]
fn perturbed_solution_fails_certificate() {
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let (x, y) = random_design(&mut rng, 40, 3);
    let f = fit_ok(&x, &y, 0.3);
    for j in 0..3 {
        let mut g = f.clone();
        g.beta[j] += 0.01;
        assert!(!check_optimality(&x, &y, &g).optimal);
    }
    let mut g = f.clone();
    g.beta[0] += 0.01;
    let caught = std::panic::catch_unwind(|| super::self_check::record(&x, &y, &g));
    assert!(caught.is_err());
    let (fits, worst) = super::self_check::stats();
    assert!(fits >= 1 && worst > 1e-8);
}

#[test]
fn median_certificate_on_three_points() {
    let y = [1.0, 2.0, 3.0];
    let x = intercept_only(&y);
    let f = fit_ok(&x, &y, 0.5);
    let cert = check_optimality(&x, &y, &f);
    assert_eq!(cert.zero_residual_rows, vec![1]);
    assert_eq!(cert.multipliers, vec![-0.5, 0.0, 0.5]);
    assert!(cert.multipliers.iter().all(|v| (-0.5..=0.5).contains(v)));
    assert_eq!(cert.multipliers.iter().sum::<f64>(), 0.0);
}

#[test]
fn residual_sign_fractions_bracket_tau() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    for &tau in &[0.01, 0.1, 0.37, 0.5, 0.9, 0.99] {
        let (x, y) = random_design(&mut rng, 90, 4);
        let f = fit_ok(&x, &y, tau);
        let n = f.n as f64;
        let neg = f.residuals.iter().filter(|r| **r < 0.0).count() as f64;
        let nonpos = f.residuals.iter().filter(|r| **r <= 0.0).count() as f64;
        assert!(neg / n <= tau + 1e-12 && tau <= nonpos / n + 1e-12);
    }
}

#[test]
fn coordinate_perturbations_do_not_improve() {
    let mut rng = ChaCha20Rng::seed_from_u64(31);
    let (x, y) = random_design(&mut rng, 60, 3);
    let f = fit_ok(&x, &y, 0.8);
    for j in 0..3 {
        for d in [1e-4, -1e-4] {
            let mut b = f.beta.clone();
            b[j] += d;
            let obj: f64 = (0..60)
                .map(|i| pinball(y[i] - (0..3).map(|k| x[(i, k)] * b[k]).sum::<f64>(), f.tau))
                .sum();
            assert!(f.objective <= obj + 1e-12);
        }
    }
}

#[test]
fn intercept_only_quantiles_are_monotone() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let y: Vec<f64> = (0..57).map(|_| rng.random::<f64>()).collect();
    let x = intercept_only(&y);
    let mut prev = f64::NEG_INFINITY;
    for k in 1..20 {
        let b = fit_ok(&x, &y, k as f64 / 20.0).beta[0];
        assert!(b >= prev);
        prev = b;
    }
}

#[test]
fn rank_deficiency_names_columns() {
    let x = DMatrix::from_fn(8, 3, |i, j| match j {
        0 => 1.0,
        1 => i as f64,
        _ => 2.0 * i as f64 + 1e-14,
    });
    let y: Vec<f64> = (0..8).map(|i| i as f64).collect();
    let cols = vec!["intercept".to_string(), "a".into(), "b".into()];
    match fit_matrix(&x, &y, lvl(0.5), &cols) {
        Err(Error::SingularDesign { columns }) => {
            assert_eq!(columns.len(), 1);
            assert!(columns[0] == "a" || columns[0] == "b" || columns[0] == "intercept");
        }
        other => panic!("expected singular design, got {other:?}"),
    }
}

#[test]
fn insufficient_rows() {
    let x = DMatrix::from_element(2, 2, 1.0);
    assert!(matches!(
        fit_matrix(&x, &[1.0, 2.0], lvl(0.5), &names(2)),
        Err(Error::InsufficientData { n: 2, p: 2 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn equivariance(seed in 0u64..10_000, c in 0.1f64..10.0, tau in 0.05f64..0.95) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (x, y) = random_design(&mut rng, 30, 3);
        let base = fit_ok(&x, &y, tau);

        let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
        let scaled = fit_ok(&x, &ys, tau);
        for (a, b) in scaled.beta.iter().zip(&base.beta) {
            prop_assert!((a - c * b).abs() < 1e-8 * (1.0 + (c * b).abs()));
        }

        let gamma = [0.7, -1.3, 2.1];
        let yg: Vec<f64> = (0..30).map(|i| y[i] + (0..3).map(|j| x[(i, j)] * gamma[j]).sum::<f64>()).collect();
        let shifted = fit_ok(&x, &yg, tau);
        for j in 0..3 {
            prop_assert!((shifted.beta[j] - base.beta[j] - gamma[j]).abs() < 1e-8);
        }
    }
}
