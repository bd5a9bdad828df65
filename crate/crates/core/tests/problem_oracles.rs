use muonkit::problems::{ProblemInstance, ProblemKind, ProblemSpec, SampleBatch};
use muonkit::Matrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

const KINDS: [ProblemKind; 3] = [
    ProblemKind::MatrixQuadratic,
    ProblemKind::MatrixLeastSquares,
    ProblemKind::SmoothNonconvex,
];

fn instance(kind: ProblemKind, n: usize, seed: u64) -> ProblemInstance {
    ProblemInstance::generate(&ProblemSpec::new(kind, n, 5, 3, seed)).unwrap()
}

/// Central differences of `f` at `w`, entry by entry.
fn central_difference(f: impl Fn(&Matrix) -> f64, w: &Matrix, h: f64) -> Matrix {
    Matrix::from_fn(w.rows(), w.cols(), |i, j| {
        let mut plus = w.clone();
        let mut minus = w.clone();
        plus[(i, j)] += h;
        minus[(i, j)] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    })
}

fn point(seed: u64, scale: f64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::gaussian(5, 3, &mut rng).scaled(scale)
}

#[test]
fn gradients_agree_with_finite_differences() {
    for kind in KINDS {
        let p = instance(kind, 6, 11);
        for s in 0..5 {
            let w = point(100 + s, 2.0);
            let fd = central_difference(|x| p.loss(x).unwrap(), &w, 1e-5);
            let g = p.full_gradient(&w).unwrap();
            assert!(
                fd.distance(&g).unwrap() <= 1e-6 * g.frobenius_norm().max(1.0),
                "{kind:?}"
            );
            for i in [0, 5] {
                let fd = central_difference(|x| p.component_loss(i, x).unwrap(), &w, 1e-5);
                let g = p.component_gradient(i, &w).unwrap();
                assert!(
                    fd.distance(&g).unwrap() <= 1e-6 * g.frobenius_norm().max(1.0),
                    "{kind:?} i={i}"
                );
            }
        }
    }
}

#[test]
fn full_gradient_is_the_component_average() {
    for kind in KINDS {
        let p = instance(kind, 9, 3);
        let w = point(4, 1.5);
        let all = SampleBatch {
            indices: (0..9).collect(),
        };
        let avg = p.minibatch_gradient(&w, &all).unwrap();
        assert!(
            avg.distance(&p.full_gradient(&w).unwrap()).unwrap() < 1e-12,
            "{kind:?}"
        );
    }
}

#[test]
fn nonconvex_curvature_never_exceeds_two() {
    // s(x) = x²/(1+x²); s'' on a dense grid from its closed form, checked
    // against second differences of s itself.
    let s = |x: f64| x * x / (1.0 + x * x);
    let s2 = |x: f64| (2.0 - 6.0 * x * x) / (1.0 + x * x).powi(3);
    let h = 1e-4;
    let mut worst = 0.0f64;
    for k in -200_000..=200_000 {
        let x = k as f64 * 1e-4;
        let fd = (s(x + h) - 2.0 * s(x) + s(x - h)) / (h * h);
        assert!((fd - s2(x)).abs() < 1e-4, "x = {x}");
        worst = worst.max(s2(x).abs());
    }
    assert!((worst - 2.0).abs() < 1e-12);
    let c = instance(ProblemKind::SmoothNonconvex, 8, 2)
        .constants()
        .unwrap();
    assert_eq!(c.l, 2.0);
}

#[test]
fn quadratic_constants_are_exact() {
    let p = instance(ProblemKind::MatrixQuadratic, 12, 21);
    let c = p.constants().unwrap();
    assert!(c.sigma2_exact);
    assert_eq!(c.l, 1.0);
    // For the quadratic the per-sample variance does not depend on W.
    for s in 0..4 {
        let v = p.single_sample_variance(&point(s, 5.0)).unwrap();
        assert!((v - c.sigma2).abs() <= 1e-10 * c.sigma2);
    }
    let xstar = c.minimizer.unwrap();
    assert!(p.full_gradient(&xstar).unwrap().frobenius_norm() < 1e-12);
}

#[test]
fn least_squares_minimizer_is_stationary() {
    let p = instance(ProblemKind::MatrixLeastSquares, 10, 8);
    let c = p.constants().unwrap();
    let xstar = c.minimizer.unwrap();
    assert!(p.full_gradient(&xstar).unwrap().frobenius_norm() < 1e-9);
    for s in 0..10 {
        assert!(p.loss(&point(50 + s, 1.0)).unwrap() >= c.f_star - 1e-12);
    }
}

#[test]
fn sigma2_dominates_variance_at_probes() {
    for kind in KINDS {
        let p = instance(kind, 16, 5);
        let c = p.constants().unwrap();
        let center = match kind {
            ProblemKind::MatrixLeastSquares => c.minimizer.clone().unwrap(),
            _ => p.mean_target().unwrap().clone(),
        };
        for w in p.probe_points(&center) {
            assert!(
                p.single_sample_variance(&w).unwrap() <= c.sigma2 * (1.0 + 1e-12),
                "{kind:?}"
            );
        }
    }
}

#[test]
fn batch_indices_are_uniform() {
    let p = instance(ProblemKind::MatrixQuadratic, 16, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut counts = [0u64; 16];
    let draws = 1_000_000;
    for _ in 0..draws / 1000 {
        for i in p.sample_batch(&mut rng, 1000).unwrap().indices {
            counts[i] += 1;
        }
    }
    let expected = draws as f64 / 16.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    let p_value = 1.0 - ChiSquared::new(15.0).unwrap().cdf(chi2);
    assert!(p_value > 0.001, "chi2 = {chi2}, p = {p_value}");
}

#[test]
fn singleton_gradients_are_unbiased() {
    let p = instance(ProblemKind::MatrixLeastSquares, 8, 13);
    let w = point(6, 1.0);
    let g = p.full_gradient(&w).unwrap();
    let var = p.single_sample_variance(&w).unwrap();
    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut acc = Matrix::zeros(5, 3);
    for _ in 0..draws {
        let b = p.sample_batch(&mut rng, 1).unwrap();
        acc.axpy(1.0, &p.minibatch_gradient(&w, &b).unwrap())
            .unwrap();
    }
    let err = acc.scaled(1.0 / draws as f64).distance(&g).unwrap();
    // E‖mean − g‖² = var / draws, so 3 standard errors in norm.
    assert!(err <= 3.0 * (var / draws as f64).sqrt(), "err {err}");
}

#[test]
fn minibatch_variance_scales_inversely_with_batch() {
    let p = instance(ProblemKind::MatrixQuadratic, 32, 17);
    let w = point(8, 1.0);
    let g = p.full_gradient(&w).unwrap();
    let sigma2 = p.single_sample_variance(&w).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for b in [1usize, 4, 8] {
        let draws = 20_000;
        let mut total = 0.0;
        for _ in 0..draws {
            let batch = p.sample_batch(&mut rng, b).unwrap();
            let d = p
                .minibatch_gradient(&w, &batch)
                .unwrap()
                .distance(&g)
                .unwrap();
            total += d * d;
        }
        let ratio = total / draws as f64 / (sigma2 / b as f64);
        assert!((ratio - 1.0).abs() < 0.05, "b = {b}: ratio {ratio}");
    }
}

#[test]
fn empty_batches_and_bad_shapes_are_rejected() {
    let p = instance(ProblemKind::MatrixQuadratic, 4, 0);
    let w = Matrix::zeros(5, 3);
    assert!(p
        .minibatch_gradient(&w, &SampleBatch { indices: vec![] })
        .is_err());
    assert!(p
        .minibatch_gradient(&w, &SampleBatch { indices: vec![4] })
        .is_err());
    assert!(p.loss(&Matrix::zeros(3, 5)).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(p.sample_batch(&mut rng, 0).is_err());
    assert!(
        ProblemInstance::generate(&ProblemSpec::new(ProblemKind::MatrixQuadratic, 0, 5, 3, 0))
            .is_err()
    );
    assert!(
        ProblemInstance::generate(&ProblemSpec::new(ProblemKind::MatrixQuadratic, 2, 2, 3, 0))
            .is_err()
    );
}

#[test]
fn generation_is_deterministic_in_the_seed() {
    for kind in KINDS {
        let a = instance(kind, 5, 42);
        let b = instance(kind, 5, 42);
        let c = instance(kind, 5, 43);
        let w = point(1, 1.0);
        assert_eq!(a.loss(&w).unwrap(), b.loss(&w).unwrap());
        assert_ne!(a.loss(&w).unwrap(), c.loss(&w).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_is_l_lipschitz(kind_ix in 0usize..3, seed in 0u64..1000, sx in 0u64..1000, sy in 0u64..1000) {
        let p = instance(KINDS[kind_ix], 6, seed);
        let l = p.constants().unwrap().l;
        let x = point(sx, 3.0);
        let y = point(sy + 5000, 3.0);
        let dg = p.full_gradient(&x).unwrap().distance(&p.full_gradient(&y).unwrap()).unwrap();
        prop_assert!(dg <= l * x.distance(&y).unwrap() * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn descent_lemma_holds(kind_ix in 0usize..3, seed in 0u64..1000, sx in 0u64..1000, sy in 0u64..1000) {
        let p = instance(KINDS[kind_ix], 6, seed);
        let l = p.constants().unwrap().l;
        let x = point(sx, 3.0);
        let y = point(sy + 5000, 3.0);
        let d = x.sub(&y).unwrap();
        let model = p.loss(&y).unwrap()
            + p.full_gradient(&y).unwrap().frobenius_inner(&d).unwrap()
            + 0.5 * l * d.frobenius_norm().powi(2);
        let fx = p.loss(&x).unwrap();
        prop_assert!(fx <= model + 1e-9 * model.abs().max(1.0), "{} > {}", fx, model);
    }
}
