use std::sync::Arc;

use geofem_core::analysis::{
    compute_spectrum, convergence_study, infsup_constant, infsup_study, laplacian_min_eig, observed_order, pointwise_gradient_error,
    poisson_sparsity_check, gradient_l2_norm,
};
use geofem_core::assembly::Operators;
use geofem_core::mesh::{generate_square_mesh, Mesh};
use geofem_core::model::{params_from_ro_fr, Model, SolverKind};
use geofem_core::spaces::{ElementPair, PairKind};

fn mesh(n: usize) -> Arc<Mesh> {
    Arc::new(generate_square_mesh(n, 0.2, 0).unwrap())
}

#[test]
fn discrete_gradient_is_pointwise_for_embedding_pairs() {
    for kind in [PairKind::P0P1, PairKind::P1DgP2, PairKind::P2DgP3] {
        let pair = ElementPair::new(kind, mesh(4)).unwrap();
        let m = Model::new(pair, params_from_ro_fr(0.1, 1.0).unwrap(), SolverKind::Direct).unwrap();
        for seed in 0..3 {
            let eta = m.random_eta(seed);
            let err = pointwise_gradient_error(&m.pair, &m.ops, &eta).unwrap();
            assert!(err <= 1e-12 * gradient_l2_norm(&m.pair, &eta).unwrap(), "{kind}: {err}");
        }
        let c = vec![0.7; m.pair.h.ndof()];
        assert!(pointwise_gradient_error(&m.pair, &m.ops, &c).unwrap() < 1e-13);
        assert!(m.discrete_gradient(&c).iter().all(|v| v.abs() < 1e-13));
    }
}

#[test]
fn quadratic_bowl_breaks_the_continuous_pair() {
    let pair = ElementPair::new(PairKind::P1P1, mesh(8)).unwrap();
    let ops = Operators::assemble(&pair).unwrap();
    let eta = pair.h.interpolate(|p| p[0] * p[0] + p[1] * p[1]);
    let err = pointwise_gradient_error(&pair, &ops, &eta).unwrap();
    assert!(err > 1e-3 * gradient_l2_norm(&pair, &eta).unwrap());
}

#[test]
fn single_triangle_infsup_is_the_laplacian_bound() {
    let m = Arc::new(Mesh::new(vec![[0.1, 0.0], [1.3, 0.2], [0.4, 0.9]], vec![[0, 1, 2]]).unwrap());
    let pair = ElementPair::new(PairKind::P0P1, m).unwrap();
    let ops = Operators::assemble(&pair).unwrap();
    let beta = infsup_constant(&pair, &ops).unwrap();
    let lam = laplacian_min_eig(&pair, &ops).unwrap();
    assert!((beta - lam.sqrt()).abs() < 1e-12, "{beta} {}", lam.sqrt());
}

#[test]
fn infsup_bound_on_a_short_sequence() {
    let meshes = [mesh(2), mesh(4)];
    for kind in [PairKind::P0P1, PairKind::P1DgP2] {
        let r = infsup_study(kind, &meshes).unwrap();
        assert!(r.min_margin() >= -1e-10, "{kind}");
        assert!(r.lambda_min.iter().all(|l| *l > 0.0));
        assert_eq!(r.h.len(), 2);
    }
}

#[test]
fn poisson_identity_holds_only_under_embedding() {
    for kind in [PairKind::P0P1, PairKind::P1DgP2, PairKind::P2DgP3] {
        let pair = ElementPair::new(kind, mesh(4)).unwrap();
        let ops = Operators::assemble(&pair).unwrap();
        assert!(poisson_sparsity_check(&pair, &ops).unwrap().relative() <= 1e-10, "{kind}");
    }
    let pair = ElementPair::new(PairKind::P1P1, mesh(4)).unwrap();
    let ops = Operators::assemble(&pair).unwrap();
    assert!(poisson_sparsity_check(&pair, &ops).unwrap().relative() >= 1e-2);
}

#[test]
fn spectrum_is_skew_with_a_balanced_kernel() {
    let pair = ElementPair::new(PairKind::P0P1, mesh(3)).unwrap();
    let m = Model::new(pair, params_from_ro_fr(0.1, 1.0).unwrap(), SolverKind::Direct).unwrap();
    let s = compute_spectrum(&m, 3).unwrap();
    assert!(s.max_real <= 1e-10 * s.max_abs);
    assert!(s.balanced_residual <= 1e-11);
    assert!(s.zero_modes >= s.interior_h_dofs);
    assert_eq!(s.omegas.len(), m.pair.v.ndof() + m.pair.h.ndof());
    assert!(s.min_nonzero_frequency().unwrap() > 0.0);
}

#[test]
fn lowest_order_pair_converges() {
    let r = convergence_study(PairKind::P0P1, &[mesh(2), mesh(4), mesh(8)], 1.0, 1.0, 0.25).unwrap();
    assert!(r.err_eta.windows(2).all(|w| w[1] < w[0]));
    assert!(r.err_eta.iter().all(|e| *e > 0.0));
    assert!(r.order_u >= 0.8, "{}", r.order_u);
    assert!((observed_order(&r.h, &r.err_eta) - r.order_eta).abs() < 1e-15);
}

#[test]
fn initial_interpolation_error_follows_the_degree() {
    let meshes: Vec<_> = [4, 8].iter().map(|&n| Arc::new(generate_square_mesh(n, 0.0, 0).unwrap())).collect();
    for (kind, k) in [(PairKind::P0P1, 1), (PairKind::P1DgP2, 2)] {
        let r = convergence_study(kind, &meshes, 1.0, 1.0, 0.01).unwrap();
        let ratio = r.initial_err_eta[0] / r.initial_err_eta[1];
        let expected = 2f64.powi(k + 1);
        assert!((ratio / expected - 1.0).abs() < 0.25, "{kind}: {ratio}");
    }
}
