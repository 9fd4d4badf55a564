use learnwidth::clique::{brute_force_clique, Graph};
use learnwidth::incoherence::{verify_certificate, Answer, Certificate, Config};
use learnwidth::learnability::states_to_gram;
use learnwidth::matrix::{self, c, eig_hermitian, gram_factorize, real, CMat, CVec};
use learnwidth::HermitianMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gauss(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

fn hermitian(seed: u64, n: usize) -> HermitianMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = CMat::from_fn(n, n, |_, _| c(gauss(&mut rng), gauss(&mut rng)));
    HermitianMatrix::new((&a + a.adjoint()) * real(0.5)).unwrap()
}

/// Trace-one sum of `terms` rank-one matrices with supports of size `≤ k`.
fn sparse_psd(seed: u64, n: usize, k: usize, terms: usize) -> HermitianMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = CMat::zeros(n, n);
    for _ in 0..terms {
        m += {
            let v = sparse_vector(&mut rng, n, k);
            &v * v.adjoint()
        };
    }
    let h = HermitianMatrix::new(m).unwrap();
    h.scale(1.0 / h.trace())
}

fn sparse_vector(rng: &mut impl Rng, n: usize, k: usize) -> CVec {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        idx.swap(i, rng.gen_range(0..=i));
    }
    let size = rng.gen_range(1..=k);
    let mut v = CVec::zeros(n);
    for &i in &idx[..size] {
        v[i] = c(gauss(rng), gauss(rng));
    }
    if v.norm() == 0.0 {
        v[idx[0]] = real(1.0);
    }
    v
}

fn shuffle(seed: u64, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, rng.gen_range(0..=i));
    }
    p
}

fn graph(seed: u64, n: usize, p: f64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 1..=n {
        for v in u + 1..=n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, &edges).unwrap()
}

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..=7) {
        let h = hermitian(seed, n);
        let e = eig_hermitian(&h).unwrap();
        let mut r = CMat::zeros(n, n);
        for (l, v) in e.values.iter().zip(&e.vectors) {
            r += v * v.adjoint() * real(*l);
        }
        prop_assert!((r - h.as_matrix()).norm() <= 1e-10 * (1.0 + h.frobenius_norm()));
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn adding_psd_raises_the_spectrum(seed in any::<u64>(), n in 1usize..=6) {
        let h = hermitian(seed, n);
        let p = sparse_psd(seed ^ 1, n, n, 2);
        let before = matrix::eigenvalues(&h).unwrap();
        let after = matrix::eigenvalues(&h.add(&p).unwrap()).unwrap();
        for (b, a) in before.iter().zip(&after) {
            prop_assert!(a >= &(b - 1e-10));
        }
    }

    #[test]
    fn gram_factorization_round_trips(seed in any::<u64>(), n in 1usize..=6, r in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = CMat::from_fn(n, r, |_, _| c(gauss(&mut rng), gauss(&mut rng)));
        let g = HermitianMatrix::new(&b * b.adjoint()).unwrap();
        let s = gram_factorize(&g, 1e-12).unwrap();
        prop_assert!(s.dim() <= r.min(n));
        prop_assert!(states_to_gram(&s).max_abs_diff(&g) <= 1e-9 * (1.0 + g.frobenius_norm()));
    }

    #[test]
    fn oracle_value_is_permutation_invariant(seed in any::<u64>(), n in 1usize..=6, k in 1usize..=6) {
        let k = k.min(n);
        let cfg = Config::default();
        let h = hermitian(seed, n);
        let a = cfg.mu_oracle(&h, k).unwrap().value;
        let b = cfg.mu_oracle(&h.permuted(&shuffle(seed, n)), k).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn clique_graphs_attain_k_minus_one(seed in any::<u64>(), n in 2usize..=7, k in 2usize..=7) {
        let k = k.min(n);
        let base = graph(seed, n, 0.3);
        let members = &shuffle(seed, n)[..k];
        let mut edges: Vec<(usize, usize)> = base.edges().collect();
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                let e = (u.min(v) + 1, u.max(v) + 1);
                if !edges.contains(&e) {
                    edges.push(e);
                }
            }
        }
        let g = Graph::new(n, &edges).unwrap();
        prop_assert!(brute_force_clique(&g, k).unwrap());
        let mu = Config::default().mu_oracle(&g.adjacency(), k).unwrap().value;
        prop_assert!((mu - (k as f64 - 1.0)).abs() <= 1e-9);
    }

    #[test]
    fn spectral_radius_respects_clique_number(seed in any::<u64>(), n in 2usize..=8, p in 0.1f64..0.9) {
        let g = graph(seed, n, p);
        let f = g.edge_count() as f64;
        let omega = (1..=n).rev().find(|&k| brute_force_clique(&g, k).unwrap()).unwrap();
        let lmax = matrix::lambda_max(&g.adjacency()).unwrap();
        let bound = (2.0 * f * (omega as f64 - 1.0) / omega as f64).sqrt();
        prop_assert!(lmax <= bound + 1e-9, "lambda {} vs bound {}", lmax, bound);
    }

    #[test]
    fn honest_certificates_verify(seed in any::<u64>(), n in 1usize..=5, k in 1usize..=5, count in 1usize..=8) {
        let k = k.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vectors: Vec<CVec> = (0..count.min(n * n + 1)).map(|_| sparse_vector(&mut rng, n, k)).collect();
        let total: f64 = vectors.iter().map(|v| v.norm_squared()).sum();
        vectors.iter_mut().for_each(|v| *v /= real(total.sqrt()));
        let cert = Certificate { n, k, vectors };
        let x = cert.sum();
        prop_assert!(verify_certificate(&x, &cert, 1e-9).valid);
        // any accepted certificate reproduces the matrix
        let shifted = x.add(&HermitianMatrix::identity(n).scale(1e-3 / n as f64)).unwrap();
        if n > 1 {
            prop_assert!(!verify_certificate(&shifted.scale(1.0 / shifted.trace()), &cert, 1e-9).valid);
        }
    }
}

proptest! {
    #![proptest_config(cases(16))]

    #[test]
    fn membership_is_monotone_in_k(seed in any::<u64>(), n in 2usize..=5, k0 in 1usize..=5, terms in 1usize..=6) {
        let cfg = Config::default();
        let x = sparse_psd(seed, n, k0.min(n), terms);
        let verdicts: Vec<bool> = (1..=n).map(|k| cfg.is_k_incoherent(&x, k, 1e-7).unwrap()).collect();
        prop_assert!(verdicts.windows(2).all(|w| !w[0] || w[1]), "{:?}", verdicts);
        prop_assert!(verdicts[k0.min(n) - 1]);
    }

    #[test]
    fn factor_width_is_invariant(seed in any::<u64>(), n in 2usize..=5, k0 in 1usize..=5, terms in 1usize..=6) {
        let cfg = Config::default();
        let x = sparse_psd(seed, n, k0.min(n), terms);
        let w = cfg.factor_width(&x, 1e-7).unwrap();
        prop_assert!(w <= k0.min(n));
        prop_assert_eq!(cfg.factor_width(&x.permuted(&shuffle(seed, n)), 1e-7).unwrap(), w);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..3.0)).collect();
        let xd = x.conjugate_by(HermitianMatrix::diagonal(&d).as_matrix());
        prop_assert_eq!(cfg.factor_width(&xd.scale(1.0 / xd.trace()), 1e-7).unwrap(), w);
        // a diagonal unitary is a congruence by unit-modulus phases
        let phases = CMat::from_diagonal(&CVec::from_fn(n, |i, _| c(0.0, d[i]).exp()));
        prop_assert_eq!(cfg.factor_width(&x.conjugate_by(&phases), 1e-7).unwrap(), w);
    }

    #[test]
    fn one_incoherent_exactly_when_diagonal(seed in any::<u64>(), n in 2usize..=5, diagonal in any::<bool>()) {
        let cfg = Config::default();
        let x = if diagonal {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let h = HermitianMatrix::diagonal(&d);
            h.scale(1.0 / h.trace().max(1e-3))
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = CVec::from_fn(n, |_, _| c(gauss(&mut rng), gauss(&mut rng)));
            HermitianMatrix::outer(&v.normalize())
        };
        prop_assert_eq!(cfg.is_k_incoherent(&x, 1, 1e-7).unwrap(), x.is_diagonal(1e-9));
    }

    #[test]
    fn full_width_distance_vanishes(seed in any::<u64>(), n in 1usize..=5) {
        let x = sparse_psd(seed, n, n, n);
        let d = Config::default().distance_to_ik(&x, n, 1e-10).unwrap();
        prop_assert!(d <= 1e-4, "distance {}", d);
    }

    #[test]
    fn extreme_points_are_inside(seed in any::<u64>(), n in 2usize..=5, k in 1usize..=5) {
        let k = k.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = sparse_vector(&mut rng, n, k);
        let x = HermitianMatrix::outer(&v.normalize());
        prop_assert_eq!(Config::default().wmem(&x, k, 1e-3).unwrap().answer, Answer::Inside);
    }

    #[test]
    fn sdp_optimum_matches_oracle(seed in any::<u64>(), n in 1usize..=5, k in 1usize..=5) {
        let k = k.min(n);
        let cfg = Config::default();
        let h = hermitian(seed, n);
        let exact = cfg.mu_oracle(&h, k).unwrap().value;
        let sdp = cfg.mu_sdp(&h, k, 1e-6).unwrap();
        prop_assert!((sdp - exact).abs() <= 2e-6, "{} vs {}", sdp, exact);
    }

    #[test]
    fn sdp_scales_and_ignores_block_order(seed in any::<u64>(), n in 2usize..=5, k in 1usize..=5, s in 0.1f64..10.0) {
        let k = k.min(n);
        let cfg = Config::default();
        let h = hermitian(seed, n);
        let base = cfg.mu_sdp(&h, k, 1e-7).unwrap();
        let scaled = cfg.mu_sdp(&h.scale(s), k, 1e-7).unwrap();
        prop_assert!((scaled - s * base).abs() <= 1e-6 * (1.0 + s), "{} vs {}", scaled, s * base);
        let permuted = cfg.mu_sdp(&h.permuted(&shuffle(seed, n)), k, 1e-7).unwrap();
        prop_assert!((permuted - base).abs() <= 1e-6);
    }
}
