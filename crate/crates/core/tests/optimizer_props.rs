use muonkit::muon::{muon_step, run, MuonConfig, MuonState};
use muonkit::orthogonalize::{polar_factor_exact, OrthoMethod};
use muonkit::problems::{ProblemInstance, ProblemKind, ProblemSpec};
use muonkit::schedules::{BsSchedule, LrSchedule};
use muonkit::verify::lemma_check;
use muonkit::Matrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quadratic(n: usize, seed: u64) -> ProblemInstance {
    ProblemInstance::generate(&ProblemSpec::new(
        ProblemKind::MatrixQuadratic,
        n,
        8,
        4,
        seed,
    ))
    .unwrap()
}

#[test]
fn momentum_and_nesterov_blend_follow_the_recurrence() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let beta = 0.8;
    let gs: Vec<Matrix> = (0..5).map(|_| Matrix::gaussian(6, 3, &mut rng)).collect();
    for nesterov in [false, true] {
        let cfg = MuonConfig::new(beta, nesterov);
        let mut state = MuonState::new(Matrix::zeros(6, 3));
        let mut w = Matrix::zeros(6, 3);
        let mut m = Matrix::zeros(6, 3);
        for (t, g) in gs.iter().enumerate() {
            let eta = 0.1 / (t + 1) as f64;
            m = Matrix::lincomb(beta, &m, 1.0 - beta, g).unwrap();
            let c = if nesterov {
                Matrix::lincomb(beta, &m, 1.0 - beta, g).unwrap()
            } else {
                m.clone()
            };
            w.axpy(-eta, &polar_factor_exact(&c).unwrap()).unwrap();
            let (next, diag) = muon_step(&state, &cfg, g, eta).unwrap();
            assert!(diag.m.distance(&m).unwrap() < 1e-14);
            assert!(diag.c.distance(&c).unwrap() < 1e-14);
            assert!(next.w.distance(&w).unwrap() < 1e-14);
            assert_eq!(next.t, t + 1);
            state = next;
        }
    }
}

#[test]
fn zero_direction_skips_the_update() {
    let cfg = MuonConfig::new(0.9, true);
    let w0 = Matrix::from_fn(8, 4, |i, j| (i + j) as f64);
    let state = MuonState::new(w0.clone());
    let (next, diag) = muon_step(&state, &cfg, &Matrix::zeros(8, 4), 0.1).unwrap();
    assert!(diag.skipped);
    assert_eq!(next.w, w0);
    assert!(diag.o.is_zero());
}

#[test]
fn run_starting_at_the_minimizer_of_a_noiseless_problem_never_moves() {
    let p = quadratic(1, 9);
    let w0 = p.mean_target().unwrap().clone();
    let trace = run(
        &p,
        &MuonConfig::new(0.9, false),
        &LrSchedule::constant(0.1),
        &BsSchedule::constant(1),
        20,
        &w0,
        0,
    )
    .unwrap();
    assert!(trace
        .records
        .iter()
        .all(|r| r.skipped && r.grad_norm == 0.0));
    assert_eq!(trace.final_w, w0);
}

#[test]
fn runs_are_deterministic_in_the_seed() {
    let p = quadratic(64, 3);
    let cfg = MuonConfig::new(0.9, true);
    let lr = LrSchedule::cosine(0.05, 50);
    let bs = BsSchedule::exponential(2, 1.1).with_cap(64);
    let w0 = Matrix::zeros(8, 4);
    let a = run(&p, &cfg, &lr, &bs, 50, &w0, 11).unwrap();
    let b = run(&p, &cfg, &lr, &bs, 50, &w0, 11).unwrap();
    let c = run(&p, &cfg, &lr, &bs, 50, &w0, 12).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.final_w, c.final_w);
}

#[test]
fn trace_records_the_schedules() {
    let p = quadratic(64, 3);
    let lr = LrSchedule::diminishing(0.05);
    let bs = BsSchedule::exponential(2, 2.0).with_cap(40);
    let trace = run(
        &p,
        &MuonConfig::new(0.9, false),
        &lr,
        &bs,
        8,
        &Matrix::zeros(8, 4),
        0,
    )
    .unwrap();
    let sizes: Vec<usize> = trace.records.iter().map(|r| r.b).collect();
    assert_eq!(sizes, vec![2, 4, 8, 16, 32, 40, 40, 40]);
    for r in &trace.records {
        assert!((r.eta - 0.05 / ((r.t + 1) as f64).sqrt()).abs() < 1e-15);
    }
    assert_eq!(trace.losses().len(), 9);
}

#[test]
fn newton_schulz_runs_track_exact_runs() {
    let p = quadratic(32, 5);
    let exact = MuonConfig::new(0.9, false);
    let ns = MuonConfig {
        ortho: OrthoMethod::newton_schulz(40).unwrap(),
        ..exact
    };
    let lr = LrSchedule::constant(0.01);
    let bs = BsSchedule::constant(8);
    let w0 = Matrix::zeros(8, 4);
    let a = run(&p, &exact, &lr, &bs, 30, &w0, 1).unwrap();
    let b = run(&p, &ns, &lr, &bs, 30, &w0, 1).unwrap();
    assert!(a.final_w.distance(&b.final_w).unwrap() < 1e-3);
    assert!(b.records.iter().all(|r| r.ortho_defect < 1e-3));
}

#[test]
fn invalid_configurations_are_rejected() {
    let p = quadratic(4, 0);
    let w0 = Matrix::zeros(8, 4);
    let lr = LrSchedule::constant(0.01);
    let bs = BsSchedule::constant(2);
    assert!(run(&p, &MuonConfig::new(1.0, false), &lr, &bs, 5, &w0, 0).is_err());
    assert!(run(&p, &MuonConfig::new(0.9, false), &lr, &bs, 0, &w0, 0).is_err());
    assert!(run(
        &p,
        &MuonConfig::new(0.9, false),
        &lr,
        &bs,
        5,
        &Matrix::zeros(4, 8),
        0
    )
    .is_err());
    assert!(run(
        &p,
        &MuonConfig::new(0.9, false),
        &LrSchedule::constant(-1.0),
        &bs,
        5,
        &w0,
        0
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn deterministic_lemmas_hold(beta in 0.0f64..0.99, eta in 1e-3f64..0.2, nesterov in any::<bool>(), seed in 0u64..500) {
        let p = quadratic(1, seed);
        let l = p.constants().unwrap().l;
        let report = lemma_check(
            &p,
            l,
            &MuonConfig::new(beta, nesterov),
            &LrSchedule::constant(eta),
            120,
            &Matrix::zeros(8, 4),
        )
        .unwrap();
        prop_assert!(report.min_lemma1_slack >= -1e-9, "{:?}", report);
        prop_assert!(report.min_lemma2_slack >= -1e-9, "{:?}", report);
    }

    #[test]
    fn update_has_norm_eta_sqrt_n(seed in any::<u64>(), eta in 1e-4f64..1.0, beta in 0.0f64..0.99, nesterov in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = MuonConfig::new(beta, nesterov);
        let mut state = MuonState::new(Matrix::gaussian(8, 4, &mut rng));
        for _ in 0..5 {
            let g = Matrix::gaussian(8, 4, &mut rng);
            let (next, _) = muon_step(&state, &cfg, &g, eta).unwrap();
            let step = next.w.distance(&state.w).unwrap();
            prop_assert!((step - 2.0 * eta).abs() <= 1e-12 * eta.max(1.0));
            state = next;
        }
    }

    #[test]
    fn positive_gradient_scaling_leaves_the_trajectory_unchanged(seed in any::<u64>(), alpha in 1e-3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = MuonConfig::new(0.0, false);
        let mut a = MuonState::new(Matrix::zeros(5, 3));
        let mut b = a.clone();
        for _ in 0..10 {
            let g = Matrix::gaussian(5, 3, &mut rng);
            a = muon_step(&a, &cfg, &g, 0.05).unwrap().0;
            b = muon_step(&b, &cfg, &g.scaled(alpha), 0.05).unwrap().0;
        }
        prop_assert!(a.w.distance(&b.w).unwrap() <= 1e-10);
    }
}
