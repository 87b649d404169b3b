mod common;

use common::*;
use lamplighter::animal::{enumerate_animals, Animal};
use lamplighter::eigenbasis::{
    build_eigenfunctions, completeness_probe, gram_defect, intertwine_check, lemma_orthogonality, projector_rank,
    projector_trace, range_basis, rooted_eigenfunctions, verify_eigen, ProjectionSpec, Trials,
};
use lamplighter::exact::ratio;
use lamplighter::graph::{kernel, Graph};
use lamplighter::walk::{apply, LampVector, LamplighterOperator};
use num_bigint::BigUint;

/// Every connected vertex set of a finite graph, each once.
fn all_animals(g: &Graph) -> Vec<Animal> {
    (0..g.len())
        .flat_map(|r| {
            enumerate_animals(g, r, g.len())
                .unwrap()
                .into_iter()
                .filter(move |a| a.vertices[0] == r)
        })
        .collect()
}

#[test]
fn finite_graph_eigenbasis_is_complete_with_kernel_part() {
    for (text, root, m) in [("grid:3x1", "0,0", 2u32), ("grid:2x1", "0,0", 3), ("cycle:4", "0", 2)] {
        let g = whole(text, root);
        let k = kernel(&g).unwrap();
        let op = LamplighterOperator::symmetric(&k, m).unwrap();
        let window: Vec<usize> = (0..g.len()).collect();
        let mut vectors = Vec::new();
        for a in all_animals(&g) {
            for ef in build_eigenfunctions(&a, &k, m, &window).unwrap() {
                assert!(verify_eigen(&ef, &op) < 1e-12);
                vectors.push(ef.vector);
            }
        }
        // (I − Θ_x) ⊗ δ_x is annihilated by the operator
        for x in 0..g.len() {
            let spec = ProjectionSpec::new(vec![], vec![x], m).unwrap();
            for phi in range_basis(&spec, &window).unwrap() {
                let v = phi.tensor(&[x], &[1.0]);
                assert!(apply(&op, &v).norm() < 1e-14);
                vectors.push(v);
            }
        }
        let dim = g.len() * (m as usize).pow(g.len() as u32);
        assert_eq!(vectors.len(), dim, "{text}");
        assert!(gram_defect(&vectors) < 1e-10, "{text}");
    }
}

#[test]
fn animal_ranges_sum_to_theta_root() {
    // Σ_{A∋x} rank Θ_{A,dA} = rank Θ_x = m^{|V|-1}
    for (text, root, m) in [("grid:3x1", "0,0", 2u32), ("cycle:4", "0", 3), ("grid:2x2", "0,0", 2)] {
        let g = whole(text, root);
        let window: Vec<usize> = (0..g.len()).collect();
        let total: BigUint = enumerate_animals(&g, 0, g.len())
            .unwrap()
            .iter()
            .map(|a| ProjectionSpec::from_animal(a, m).unwrap().rank(window.len()))
            .sum();
        assert_eq!(total, BigUint::from(m).pow(g.len() as u32 - 1), "{text}");
    }
}

#[test]
fn rooted_eigenfunctions_on_irregular_ball() {
    let g = z2_ball_graph(2);
    let k = kernel(&g).unwrap();
    let op = LamplighterOperator::symmetric(&k, 2).unwrap();
    let efs = rooted_eigenfunctions(&k, 0, 2, 3).unwrap();
    let expected: usize = enumerate_animals(&g, 0, 3).unwrap().iter().map(|a| a.size()).sum();
    assert_eq!(efs.len(), expected);
    for ef in &efs {
        assert!(verify_eigen(ef, &op) < 1e-10);
    }
    let vectors: Vec<LampVector> = efs.into_iter().map(|e| e.vector).collect();
    assert!(gram_defect(&vectors) < 1e-10);
}

#[test]
fn probability_coordinates_break_orthogonality_on_irregular_graphs() {
    // the lifted eigenvectors are orthonormal only in symmetric coordinates
    let g = whole("grid:3x1", "1,0");
    let k = kernel(&g).unwrap();
    let op = LamplighterOperator::new(&k, 2).unwrap();
    let a = Animal::new(&g, 0, g.labels().iter().enumerate().map(|(i, _)| i).collect());
    let ef = &build_eigenfunctions(&a, &k, 2, &a.closure()).unwrap()[2];
    assert!(verify_eigen(ef, &op) > 1e-3);
}

#[test]
fn intertwining_on_all_small_animals() {
    for (text, root) in [("grid:3x3", "1,1"), ("cycle:5", "0")] {
        let g = whole(text, root);
        let k = kernel(&g).unwrap();
        let op = LamplighterOperator::symmetric(&k, 2).unwrap();
        for a in enumerate_animals(&g, 0, 3).unwrap() {
            let trials = Trials::Random { trials: 300, seed: 17 };
            let r = intertwine_check(&a, &op, &a.closure(), trials).unwrap();
            assert!(r.max_residual <= 1e-12, "{text} {:?}", a.vertices);
            assert_eq!(r.max_outside, 0.0);
        }
    }
}

#[test]
fn intertwining_rejects_a_wrong_boundary() {
    let g = whole("grid:3x1", "0,0");
    let k = kernel(&g).unwrap();
    let op = LamplighterOperator::symmetric(&k, 2).unwrap();
    // pretend {a} has no boundary: the identity fails
    let fake = Animal {
        root: 0,
        vertices: vec![0],
        boundary: vec![],
    };
    let fake_two = Animal {
        root: 0,
        vertices: vec![0, 1],
        boundary: vec![],
    };
    let r = intertwine_check(&fake_two, &op, &[0, 1, 2], Trials::Exhaustive).unwrap();
    assert!(r.max_residual > 1e-3);
    let r = intertwine_check(&fake, &op, &[0, 1, 2], Trials::Exhaustive).unwrap();
    assert!(r.max_residual > 1e-3);
}

#[test]
fn lemma_orthogonality_on_lattice() {
    let g = ball("z2", 6);
    let (pairs, worst) = lemma_orthogonality(&g, 0, 2, 4).unwrap();
    assert_eq!(pairs, 99 * 98);
    assert!(worst <= 1e-14);
    let (_, worst) = lemma_orthogonality(&g, 0, 3, 3).unwrap();
    assert!(worst <= 1e-14);
}

#[test]
fn completeness_mass_is_one_over_m() {
    let line = ball("line", 25);
    let r = completeness_probe(&line, 0, 2, 20).unwrap();
    assert!((r.by_application - 0.5).abs() < 1e-4);
    assert!(r.agreement < 1e-12);
    assert!((r.root_conditioned - 1.0).abs() < 2e-4);
    assert!((r.with_closed_root - 1.0).abs() < 1e-4);

    let k2 = whole("grid:2x1", "0,0");
    let r = completeness_probe(&k2, 0, 2, 2).unwrap();
    assert_eq!(r.closed_form, 0.5);

    let g = ball("z2", 3);
    let r = completeness_probe(&g, 0, 3, 1).unwrap();
    assert!((r.closed_form - (1.0 / 3.0) * (2.0f64 / 3.0).powi(4)).abs() < 1e-15);
}

#[test]
fn rank_law_by_trace_elimination_and_basis() {
    let g = whole("grid:3x3", "0,0");
    for m in [2u32, 3] {
        for a in enumerate_animals(&g, 0, 3).unwrap() {
            let spec = ProjectionSpec::from_animal(&a, m).unwrap();
            let window = a.closure();
            if (m as usize).pow(window.len() as u32) > 256 {
                continue;
            }
            let rank = spec.rank(window.len());
            let trace = projector_trace(&spec, &window).unwrap();
            assert_eq!(trace, ratio(rank.clone(), 1u32));
            assert_eq!(BigUint::from(projector_rank(&spec, &window).unwrap()), rank);
            assert_eq!(BigUint::from(range_basis(&spec, &window).unwrap().len()), rank);
        }
    }
}

#[test]
fn eigenfunctions_have_finite_window_support() {
    let g = ball("z2", 6);
    let k = kernel(&g).unwrap();
    for ef in rooted_eigenfunctions(&k, 0, 2, 3).unwrap() {
        let window = ef.animal.closure();
        for (c, x, a) in ef.vector.iter() {
            assert!(c.is_within(&window));
            assert!(ef.animal.contains(x));
            assert!(a.norm() > 0.0);
        }
        assert!((ef.vector.norm() - 1.0).abs() < 1e-12);
    }
}
