#![allow(clippy::needless_range_loop)]

use std::sync::Arc;

use geofem_core::analysis::laplacian_min_eig;
use geofem_core::assembly::{coriolis_op_with, gradient_op_with, norm_inf, velocity_mass_with, Operators};
use geofem_core::linalg::generalized_symmetric_eigenvalues;
use geofem_core::mesh::{generate_square_mesh, Mesh};
use geofem_core::spaces::{ElementPair, PairKind, VectorSpace};
use geofem_core::sparse::{SparseOperator, Symmetry};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mesh(n: usize) -> Arc<Mesh> {
    Arc::new(generate_square_mesh(n, 0.2, 2).unwrap())
}

fn random(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn symmetry_tags_hold() {
    for kind in PairKind::ALL {
        let pair = ElementPair::new(kind, mesh(4)).unwrap();
        let ops = Operators::assemble(&pair).unwrap();
        for (op, skew) in [(&ops.mass_u, false), (&ops.mass_eta, false), (&ops.stiffness, false), (&ops.coriolis, true)] {
            let expected = if skew { Symmetry::Skew } else { Symmetry::Symmetric };
            assert_eq!(op.symmetry(), expected);
            assert!(op.symmetry_defect(skew) <= 1e-13 * op.max_abs(), "{kind}");
        }
    }
}

#[test]
fn masses_integrate_the_unit_function() {
    for kind in PairKind::ALL {
        let pair = ElementPair::new(kind, mesh(4)).unwrap();
        let ops = Operators::assemble(&pair).unwrap();
        let one_h = vec![1.0; pair.h.ndof()];
        assert!((dot(&one_h, &ops.mass_eta.mul_vec(&one_h)) - 1.0).abs() < 1e-13);
        let ex: Vec<f64> = (0..pair.v.ndof()).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        assert!((dot(&ex, &ops.mass_u.mul_vec(&ex)) - 1.0).abs() < 1e-13);
    }
}

#[test]
fn linear_mass_row_sums_are_lumped_areas() {
    let pair = ElementPair::new(PairKind::P1P1, Arc::new(generate_square_mesh(1, 0.0, 0).unwrap())).unwrap();
    let ops = Operators::assemble(&pair).unwrap();
    let rows = ops.mass_eta.mul_vec(&[1.0; 4]);
    let m = pair.mesh();
    let mut lumped = [0.0; 4];
    for (e, t) in m.triangles().iter().enumerate() {
        for &v in t {
            lumped[v] += m.triangle_area(e) / 3.0;
        }
    }
    for (r, l) in rows.iter().zip(lumped) {
        assert!((r - l).abs() < 1e-15);
    }
    assert!((rows.iter().sum::<f64>() - 1.0).abs() < 1e-15);
}

#[test]
fn masses_are_positive_definite() {
    let pair = ElementPair::new(PairKind::P1DgP2, mesh(4)).unwrap();
    let ops = Operators::assemble(&pair).unwrap();
    for m in [&ops.mass_eta, &ops.mass_u] {
        let ev = m.to_dense().symmetric_eigenvalues();
        assert!(ev.min() > 0.0);
    }
}

#[test]
fn gradient_annihilates_constants() {
    for kind in PairKind::ALL {
        let pair = ElementPair::new(kind, mesh(4)).unwrap();
        let ops = Operators::assemble(&pair).unwrap();
        let g = ops.gradient.mul_vec(&vec![1.0; pair.h.ndof()]);
        assert!(norm_inf(&g) < 1e-14 * ops.gradient.max_abs(), "{kind}");
        assert!(norm_inf(&ops.stiffness.mul_vec(&vec![1.0; pair.h.ndof()])) < 1e-13 * ops.stiffness.max_abs());
    }
}

#[test]
fn discrete_gradient_of_x_is_the_unit_field() {
    for kind in [PairKind::P0P1, PairKind::P1DgP2, PairKind::P2DgP3] {
        let pair = ElementPair::new(kind, mesh(4)).unwrap();
        let ops = Operators::assemble(&pair).unwrap();
        let model = geofem_core::model::Model::with_operators(pair.clone(), ops.clone(), Default::default(), geofem_core::model::SolverKind::Direct).unwrap();
        let eta = pair.h.interpolate(|p| p[0]);
        let q = model.discrete_gradient(&eta);
        for c in q.chunks_exact(2) {
            assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12, "{kind}: {c:?}");
        }
    }
}

#[test]
fn coriolis_is_energy_neutral() {
    let pair = ElementPair::new(PairKind::P2DgP3, mesh(4)).unwrap();
    let ops = Operators::assemble(&pair).unwrap();
    for seed in 0..10 {
        let u = random(pair.v.ndof(), seed);
        let n2 = dot(&u, &u);
        assert!(dot(&u, &ops.coriolis.mul_vec(&u)).abs() <= 1e-13 * n2);
    }
}

#[test]
fn coriolis_on_constants_is_a_quarter_turn() {
    let pair = ElementPair::new(PairKind::P0P1, mesh(4)).unwrap();
    let ops = Operators::assemble(&pair).unwrap();
    let m = pair.mesh();
    for e in 0..m.num_triangles() {
        let a = m.triangle_area(e);
        let (i, j) = (2 * e, 2 * e + 1);
        assert!((ops.coriolis.get(i, j) + a).abs() < 1e-16);
        assert!((ops.coriolis.get(j, i) - a).abs() < 1e-16);
        assert!((ops.mass_u.get(i, i) - a).abs() < 1e-16 && (ops.mass_u.get(j, j) - a).abs() < 1e-16);
    }
    let model = geofem_core::model::Model::with_operators(pair.clone(), ops.clone(), Default::default(), geofem_core::model::SolverKind::Direct).unwrap();
    let u = random(pair.v.ndof(), 3);
    let once = model.solve_velocity_mass(&ops.coriolis.mul_vec(&u));
    let twice = model.solve_velocity_mass(&ops.coriolis.mul_vec(&once));
    for (t, x) in twice.iter().zip(&u) {
        assert!((t + x).abs() < 1e-12);
    }
    assert!(once.iter().zip(VectorSpace::perp(&u)).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn stiffness_on_the_reference_triangle() {
    let m = Arc::new(Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap());
    let ops = Operators::assemble(&ElementPair::new(PairKind::P0P1, m).unwrap()).unwrap();
    let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
    for i in 0..3 {
        for j in 0..3 {
            assert!((ops.stiffness.get(i, j) - expected[i][j]).abs() < 1e-15);
        }
    }
}

#[test]
fn neumann_eigenvalue_of_the_square() {
    let pair = ElementPair::new(PairKind::P1P1, mesh(16)).unwrap();
    let ops = Operators::assemble(&pair).unwrap();
    let pi2 = std::f64::consts::PI.powi(2);
    let l16 = laplacian_min_eig(&pair, &ops).unwrap();
    assert!((l16 / pi2 - 1.0).abs() < 0.05, "{l16}");
    let coarse = ElementPair::new(PairKind::P1DgP2, mesh(4)).unwrap();
    let fine = ElementPair::new(PairKind::P1DgP2, mesh(8)).unwrap();
    let a = laplacian_min_eig(&coarse, &Operators::assemble(&coarse).unwrap()).unwrap();
    let b = laplacian_min_eig(&fine, &Operators::assemble(&fine).unwrap()).unwrap();
    assert!(a > 0.0 && ((a - b) / b).abs() < 0.02, "{a} {b}");
}

#[test]
fn gradient_and_divergence_are_adjoint() {
    let pair = ElementPair::new(PairKind::P1DgP2, mesh(4)).unwrap();
    let ops = Operators::assemble(&pair).unwrap();
    for seed in 0..5 {
        let eta = random(pair.h.ndof(), seed);
        let u = random(pair.v.ndof(), seed + 100);
        let lhs = dot(&u, &ops.gradient.mul_vec(&eta));
        let rhs = dot(&eta, &ops.gradient.mul_transpose_vec(&u));
        assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs().max(1.0));
    }
}

#[test]
fn doubling_quadrature_changes_nothing() {
    for kind in [PairKind::P0P1, PairKind::P1DgP2] {
        let pair = ElementPair::new(kind, mesh(3)).unwrap();
        let ops = Operators::assemble(&pair).unwrap();
        let d = 2 * pair.quadrature_degree();
        let pairs = [
            (ops.mass_u.clone(), velocity_mass_with(&pair, d).unwrap()),
            (ops.coriolis.clone(), coriolis_op_with(&pair, d).unwrap()),
            (ops.gradient.clone(), gradient_op_with(&pair, d).unwrap()),
        ];
        for (a, b) in pairs {
            let diff = a.add_scaled(1.0, &b, -1.0);
            assert!(diff.max_abs() <= 1e-13 * a.max_abs(), "{kind}");
        }
    }
}

fn generalized_spectrum(kind: PairKind, m: Arc<Mesh>) -> Vec<f64> {
    let pair = ElementPair::new(kind, m).unwrap();
    let ops = Operators::assemble(&pair).unwrap();
    let ones = DVector::from_element(pair.h.ndof(), 1.0);
    generalized_symmetric_eigenvalues(&ops.stiffness.to_dense(), &ops.mass_eta.to_dense(), Some(&ones)).unwrap()
}

#[test]
fn spectra_survive_node_renumbering() {
    let base = mesh(4);
    let reference = generalized_spectrum(PairKind::P1DgP2, base.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..2 {
        let mut perm: Vec<usize> = (0..base.num_nodes()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let renumbered = Arc::new(base.renumbered(&perm).unwrap());
        let ev = generalized_spectrum(PairKind::P1DgP2, renumbered);
        let scale = reference.last().unwrap();
        for (a, b) in ev.iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn dense_round_trip_of_sparse_products() {
    let a = SparseOperator::from_triplets(3, 2, &[(0, 0, 1.0), (2, 1, -2.0), (1, 0, 0.5)], Symmetry::General).unwrap();
    let d: DMatrix<f64> = a.to_dense();
    let x = [0.3, -1.2];
    let y = a.mul_vec(&x);
    let yd = &d * DVector::from_row_slice(&x);
    assert!(y.iter().zip(yd.iter()).all(|(p, q)| p == q));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gradient_adjointness_is_exact(seed in any::<u64>(), kind in prop::sample::select(PairKind::ALL.to_vec())) {
        let pair = ElementPair::new(kind, mesh(2)).unwrap();
        let ops = Operators::assemble(&pair).unwrap();
        let eta = random(pair.h.ndof(), seed);
        let u = random(pair.v.ndof(), seed ^ 0x5555);
        let gt = ops.gradient.transpose();
        let lhs = dot(&u, &ops.gradient.mul_vec(&eta));
        let rhs = dot(&eta, &gt.mul_vec(&u));
        prop_assert!((lhs - rhs).abs() <= 1e-13 * lhs.abs().max(1.0));
    }
}
