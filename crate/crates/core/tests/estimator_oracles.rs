mod common;

use common::random_unit;
use eigenvi_core::estimator::EigenPath;
use eigenvi_core::{
    assemble, fit, fit_cached, min_eigenpair, AssemblyOptions, BasisFamily, CountingTarget, EigenOptions, FitOptions,
    MomentMatrix, OfeDensity, ProductBasis, Proposal, ScoreCache, ScoreTarget, SymmetricMatrix, SyntheticTarget,
    WeightVector,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn hermite(orders: &[usize]) -> ProductBasis {
    ProductBasis::new(vec![BasisFamily::hermite(); orders.len()], orders.to_vec()).unwrap()
}

/// Σ_b q(z)/π(z) ‖∇log q − ∇log p‖², evaluated from the density itself.
fn direct_fisher<S: ScoreTarget<f64>>(
    q: &OfeDensity<f64>,
    target: &S,
    proposal: &Proposal<f64>,
    pts: &[Vec<f64>],
) -> f64 {
    pts.iter()
        .map(|z| {
            let sq = q.score(z).unwrap();
            let sp = target.score(z);
            let d2: f64 = sq.iter().zip(&sp).map(|(a, b)| (a - b) * (a - b)).sum();
            q.density(z).unwrap() / proposal.density(z).unwrap() * d2
        })
        .sum()
}

#[test]
fn quadratic_form_equals_direct_estimator() {
    let targets = [
        SyntheticTarget::<f64>::mixture_2d(),
        SyntheticTarget::<f64>::funnel_2d(),
        SyntheticTarget::<f64>::sinh_arcsinh_2d(3).unwrap(),
    ];
    let basis = hermite(&[3, 3]);
    let proposal = Proposal::centered_box(2, 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    for target in &targets {
        let pts = proposal.sample(&mut rng, 200);
        let cache = ScoreCache::from_samples(target, &proposal, pts.clone()).unwrap();
        let m = assemble(&basis, &cache, AssemblyOptions::default()).unwrap();
        for _ in 0..100 {
            let alpha = WeightVector::new(random_unit(&mut rng, basis.len())).unwrap();
            let quad = m.quadratic_form(alpha.as_slice());
            let q = OfeDensity::new(basis.clone(), alpha).unwrap();
            let direct = direct_fisher(&q, target, &proposal, &pts);
            assert!(
                (direct - quad).abs() / (quad + 1e-30) < 1e-10,
                "{} {direct} vs {quad}",
                target.name()
            );
        }
    }
}

#[test]
fn minimizer_beats_random_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for target in [SyntheticTarget::<f64>::cross(), SyntheticTarget::<f64>::mixture_2d()] {
        let basis = hermite(&[4, 4]);
        let proposal = Proposal::centered_box(2, 6.0).unwrap();
        let cache = ScoreCache::draw(&target, &proposal, 400, &mut rng).unwrap();
        let m = assemble(&basis, &cache, AssemblyOptions::default()).unwrap();
        let sol = min_eigenpair(&m, EigenOptions::default()).unwrap();
        let norm = m.matrix.frobenius_norm();
        assert!(sol.lambda_min >= -1e-10 * norm);
        let best = m.quadratic_form(sol.alpha.as_slice());
        for _ in 0..1000 {
            let v = random_unit(&mut rng, basis.len());
            assert!(best <= m.quadratic_form(&v) + 1e-12 * norm);
        }
        assert!(sol.residual <= 1e-8 * norm);
    }
}

#[test]
fn eigenpair_matches_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(203);
    let n = 12;
    for _ in 0..5 {
        // A Aᵀ with A 12×15 is PSD
        let a: Vec<f64> = (0..n * 15)
            .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
            .collect();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = (0..15).map(|k| a[i * 15 + k] * a[j * 15 + k]).sum();
            }
        }
        let m = MomentMatrix {
            matrix: SymmetricMatrix::from_row_major(n, data.clone()).unwrap(),
            batch_size: 15,
        };
        let sol = min_eigenpair(&m, EigenOptions::default()).unwrap();
        let oracle = nalgebra::DMatrix::from_row_slice(n, n, &data).symmetric_eigen();
        let (imin, lmin) = oracle
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        assert!((sol.lambda_min - lmin).abs() < 1e-9);
        let v = oracle.eigenvectors.column(imin);
        let dot: f64 = (0..n).map(|i| v[i] * sol.alpha.as_slice()[i]).sum();
        let sign = dot.signum();
        for i in 0..n {
            assert!((sol.alpha.as_slice()[i] - sign * v[i]).abs() < 1e-7);
        }
    }
}

#[test]
fn iterative_path_agrees_with_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(204);
    let target = SyntheticTarget::<f64>::mixture_2d();
    let basis = hermite(&[5, 5]);
    let proposal = Proposal::centered_box(2, 6.0).unwrap();
    let cache = ScoreCache::draw(&target, &proposal, 500, &mut rng).unwrap();
    let m = assemble(&basis, &cache, AssemblyOptions::default()).unwrap();
    let dense = min_eigenpair(&m, EigenOptions::default()).unwrap();
    let iter = min_eigenpair(
        &m,
        EigenOptions {
            dense_limit: 4,
            ..EigenOptions::default()
        },
    )
    .unwrap();
    assert_ne!(iter.path, EigenPath::Dense);
    assert!((dense.lambda_min - iter.lambda_min).abs() <= 1e-8 * m.matrix.frobenius_norm());
    let dot: f64 = dense
        .alpha
        .as_slice()
        .iter()
        .zip(iter.alpha.as_slice())
        .map(|(a, b)| a * b)
        .sum();
    assert!(dot.abs() > 1.0 - 1e-8);
}

fn recovery(orders: &[usize], seed: u64, half_width: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = hermite(orders);
    let star = WeightVector::new(random_unit(&mut rng, basis.len())).unwrap();
    let target = OfeDensity::new(basis.clone(), star.clone()).unwrap();
    let proposal = Proposal::centered_box(orders.len(), half_width).unwrap();
    let b = 10 * basis.len();
    let (q, diag) = fit(&basis, &target, &proposal, b, &mut rng, FitOptions::default()).unwrap();
    assert!(diag.lambda_min < 1e-6, "lambda_min {}", diag.lambda_min);
    let err_plus: f64 = q
        .alpha()
        .as_slice()
        .iter()
        .zip(star.as_slice())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let err_minus: f64 = q
        .alpha()
        .as_slice()
        .iter()
        .zip(star.as_slice())
        .map(|(a, b)| (a + b).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(
        err_plus.min(err_minus) < 1e-3,
        "alpha error {}",
        err_plus.min(err_minus)
    );
}

#[test]
fn recovers_in_family_target_1d() {
    recovery(&[5], 205, 8.0);
}

#[test]
fn recovers_in_family_target_2d() {
    recovery(&[3, 3], 206, 6.0);
}

#[test]
fn cached_scores_are_reused_across_orders() {
    let target = CountingTarget::new(SyntheticTarget::<f64>::mixture_2d());
    let proposal = Proposal::centered_box(2, 6.0).unwrap();
    let b = 250;
    let cache = ScoreCache::draw(&target, &proposal, b, &mut ChaCha8Rng::seed_from_u64(207)).unwrap();
    let small = hermite(&[3, 3]);
    let large = hermite(&[5, 5]);
    fit_cached(&small, &cache, FitOptions::default()).unwrap();
    fit_cached(&large, &cache, FitOptions::default()).unwrap();
    assert_eq!(target.score_evaluations(), b);
    let ms = assemble(&small, &cache, AssemblyOptions::default()).unwrap();
    let ml = assemble(&large, &cache, AssemblyOptions::default()).unwrap();
    for i in 0..small.len() {
        let mi = small.unflatten(i + 1).unwrap();
        let li = large.flatten(&mi).unwrap() - 1;
        for j in 0..small.len() {
            let lj = large.flatten(&small.unflatten(j + 1).unwrap()).unwrap() - 1;
            assert_eq!(ms.matrix.get(i, j).to_bits(), ml.matrix.get(li, lj).to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn assembled_matrix_is_psd(seed in any::<u64>(), k in 1usize..7, b in 1usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = SyntheticTarget::<f64>::bimodal_1d();
        let basis = hermite(&[k]);
        let proposal = Proposal::centered_box(1, 5.0).unwrap();
        let cache = ScoreCache::draw(&target, &proposal, b, &mut rng).unwrap();
        let m = assemble(&basis, &cache, AssemblyOptions { chunk_size: 7 }).unwrap();
        for i in 0..k {
            for j in 0..k {
                prop_assert_eq!(m.matrix.get(i, j).to_bits(), m.matrix.get(j, i).to_bits());
            }
        }
        let sol = min_eigenpair(&m, EigenOptions::default()).unwrap();
        prop_assert!(sol.lambda_min >= -1e-10 * m.matrix.frobenius_norm());
    }

    #[test]
    fn weight_vectors_are_unit_and_canonical(v in prop::collection::vec(-10.0f64..10.0, 1..40)) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let w = WeightVector::new(v).unwrap();
        let s = w.as_slice();
        let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        let big = s.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let first = s.iter().find(|x| x.abs() == big).unwrap();
        prop_assert!(*first >= 0.0);
    }
}
