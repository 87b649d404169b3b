mod common;

use common::*;
use lamplighter::animal::{counts_by_size, enumerate_animals, residual_mass};
use lamplighter::exact::{ratio, rational_to_f64, Arithmetic, Probability};
use lamplighter::graph::kernel;
use lamplighter::percolation::mc_expected_return;
use lamplighter::spectral::{mixture_measure, moments};
use lamplighter::walk::{
    apply, expected_return_animal_sum, return_prob_config_space, return_prob_path_sum, Configuration, LampVector,
    LamplighterOperator,
};

#[test]
fn z2_animal_counts_match_subset_oracle() {
    let g = ball("z2", 5);
    let brute = brute_animals(&g, 0, 4);
    assert_eq!(common::counts_by_size(&brute, 4), vec![1, 4, 18, 76]);
    let animals = enumerate_animals(&g, 0, 4).unwrap();
    let mut fast: Vec<Vec<usize>> = animals.iter().map(|a| a.vertices.clone()).collect();
    let mut slow = brute;
    fast.sort();
    slow.sort();
    assert_eq!(fast, slow);
}

#[test]
fn finite_graph_animals_match_subset_oracle() {
    for (text, root) in [("grid:3x3", "1,1"), ("cycle:6", "0"), ("grid:4x2", "0,0")] {
        let g = whole(text, root);
        let max = g.len();
        let animals = enumerate_animals(&g, 0, max).unwrap();
        let brute = brute_animals(&g, 0, max);
        assert_eq!(
            counts_by_size(&animals, max),
            common::counts_by_size(&brute, max),
            "{text}"
        );
    }
}

#[test]
fn z2_size_five_count() {
    // 5 × 63 fixed pentominoes
    let g = ball("z2", 6);
    let c = counts_by_size(&enumerate_animals(&g, 0, 5).unwrap(), 5);
    assert_eq!(c[4], 315);
    assert_eq!(common::counts_by_size(&brute_animals(&g, 0, 5), 5), c);
}

#[test]
fn engines_match_path_expansion() {
    for (text, root) in [
        ("grid:2x1", "0,0"),
        ("grid:3x1", "1,0"),
        ("cycle:4", "0"),
        ("cycle:5", "0"),
    ] {
        let g = whole(text, root);
        let k = kernel(&g).unwrap();
        for m in [2, 3] {
            for n in 0..=7 {
                let want = lamplighter_by_paths(&k, 0, m, n);
                let cs = return_prob_config_space(&k, 0, m, n, Arithmetic::Rational).unwrap();
                let ps = return_prob_path_sum(&k, 0, m, n, Arithmetic::Rational).unwrap();
                assert_eq!(cs.value.exact.as_ref(), Some(&want), "{text} m={m} n={n}");
                assert_eq!(ps.value.exact.as_ref(), Some(&want), "{text} m={m} n={n}");
            }
        }
    }
}

#[test]
fn config_space_matches_iterated_operator() {
    for (text, root) in [("grid:3x1", "0,0"), ("cycle:4", "0"), ("grid:2x2", "0,0")] {
        let g = whole(text, root);
        let k = kernel(&g).unwrap();
        for m in [2, 3] {
            let op = LamplighterOperator::new(&k, m).unwrap();
            let mut v = LampVector::basis(Configuration::empty(), 0);
            for n in 0..=6 {
                let engine = return_prob_config_space(&k, 0, m, n, Arithmetic::Float)
                    .unwrap()
                    .float_value();
                let oracle = v.get(&Configuration::empty(), 0).re;
                assert!(
                    (engine - oracle).abs() < 1e-14,
                    "{text} m={m} n={n}: {engine} vs {oracle}"
                );
                v = apply(&op, &v);
            }
        }
    }
}

#[test]
fn animal_sum_matches_site_configuration_oracle() {
    let cases = [
        ("grid:2x1", "0,0"),
        ("grid:3x1", "1,0"),
        ("cycle:4", "0"),
        ("cycle:5", "0"),
        ("grid:3x2", "0,0"),
        ("grid:3x3", "1,1"),
    ];
    for (text, root) in cases {
        let g = whole(text, root);
        let k = kernel(&g).unwrap();
        for p in [ratio(1, 2), ratio(1, 3), ratio(3, 4)] {
            let prob = Probability::parse(&p.to_string()).unwrap();
            for n in [0, 1, 2, 4, 6] {
                let oracle = expected_return_by_site_configurations(&k, 0, &p, n);
                let exact = expected_return_animal_sum(&k, 0, &prob, n, g.len(), Arithmetic::Rational).unwrap();
                assert_eq!(exact.value.exact.as_ref(), Some(&oracle), "{text} p={p} n={n}");
                let float = expected_return_animal_sum(&k, 0, &prob, n, g.len(), Arithmetic::Float).unwrap();
                assert!((float.float_value() - rational_to_f64(&oracle)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn monte_carlo_lands_near_site_configuration_oracle() {
    for (text, root) in [("grid:3x1", "1,0"), ("cycle:5", "0"), ("grid:3x2", "0,0")] {
        let g = whole(text, root);
        let k = kernel(&g).unwrap();
        let want = rational_to_f64(&expected_return_by_site_configurations(&k, 0, &ratio(1, 2), 4));
        for seed in [1, 2, 3] {
            let est = mc_expected_return(&k, 0, 0.5, 4, 20_000, seed).unwrap();
            assert!(
                (est.estimate - want).abs() <= 4.0 * est.stderr,
                "{text} seed {seed}: {} ± {} vs {want}",
                est.estimate,
                est.stderr
            );
        }
    }
}

#[test]
fn mixture_moments_match_oracle_and_lamplighter() {
    for (text, root) in [("grid:3x1", "1,0"), ("cycle:4", "0"), ("grid:3x3", "0,0")] {
        let g = whole(text, root);
        let k = kernel(&g).unwrap();
        for m in [2u32, 3] {
            let p = Probability::reciprocal(m);
            let mu = mixture_measure(&k, 0, &p, g.len()).unwrap();
            let mom = moments(&mu, 8);
            for (n, got) in mom.iter().enumerate() {
                let want = rational_to_f64(&lamplighter_by_paths(&k, 0, m, n as u32));
                assert!((got - want).abs() < 1e-10, "{text} m={m} n={n}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn line_residual_is_the_geometric_tail() {
    let g = ball("line", 30);
    let r = residual_mass(&g, 0, &Probability::parse("1/2").unwrap(), 10).unwrap();
    // Σ_{k>10} k 2^{-k} / 4
    let tail: f64 = (11..200).map(|k| k as f64 * 0.5f64.powi(k)).sum::<f64>() / 4.0;
    assert!((r.value - tail).abs() < 1e-15);
    assert_eq!(r.exact.unwrap(), ratio(12, 1) / ratio(1 << 12, 1));
}
