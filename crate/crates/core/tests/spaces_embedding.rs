use std::sync::Arc;

use geofem_core::analysis::{gradient_l2_norm, pointwise_gradient_error};
use geofem_core::assembly::Operators;
use geofem_core::mesh::{generate_square_mesh, Mesh};
use geofem_core::spaces::{l2_error, make_pair, Continuity, ElementPair, PairKind, ScalarSpace, VectorSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mesh(n: usize) -> Arc<Mesh> {
    Arc::new(generate_square_mesh(n, 0.2, 5).unwrap())
}

fn random_coeffs(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_ref_point(rng: &mut ChaCha8Rng) -> [f64; 2] {
    loop {
        let p = [rng.random::<f64>(), rng.random::<f64>()];
        if p[0] + p[1] < 1.0 {
            return p;
        }
    }
}

#[test]
fn dof_counts_follow_euler_counts() {
    let m = Arc::new(generate_square_mesh(4, 0.0, 0).unwrap());
    let p1 = ScalarSpace::new(m.clone(), 1, Continuity::Continuous).unwrap();
    let p2 = ScalarSpace::new(m.clone(), 2, Continuity::Continuous).unwrap();
    let p1dg = ScalarSpace::new(m.clone(), 1, Continuity::Discontinuous).unwrap();
    assert_eq!(p1.ndof(), 25);
    assert_eq!(p2.ndof(), m.num_nodes() + m.num_edges());
    assert_eq!(p2.ndof(), 81);
    assert_eq!(p1dg.ndof(), 96);
    assert!(ScalarSpace::new(m, 0, Continuity::Continuous).is_err());
}

#[test]
fn pair_metadata() {
    let m = Arc::new(generate_square_mesh(4, 0.0, 0).unwrap());
    let p = make_pair("P1DG-P2", m.clone()).unwrap();
    assert_eq!((p.h.ndof(), p.v.ndof()), (81, 192));
    assert!(p.embeds_gradient && p.closed_under_perp);
    let c = make_pair("P1-P1", m.clone()).unwrap();
    assert!(!c.embeds_gradient && c.closed_under_perp && !c.is_embedding());
    let tiny = make_pair("P0-P1", Arc::new(generate_square_mesh(1, 0.0, 0).unwrap())).unwrap();
    assert_eq!((tiny.v.ndof(), tiny.h.ndof()), (4, 4));
    assert_eq!(make_pair("p2dg-p3", m.clone()).unwrap().kind, PairKind::P2DgP3);
    assert!(make_pair("RT0-P0", m).is_err());
}

#[test]
fn continuous_dofs_are_shared_across_edges() {
    let m = mesh(3);
    let s = ScalarSpace::new(m.clone(), 3, Continuity::Continuous).unwrap();
    for e in 0..m.num_triangles() {
        let map = m.affine_map(e).unwrap();
        for (i, &d) in s.element_dofs(e).iter().enumerate() {
            let x = map.to_physical(s.basis().dof_points()[i]);
            let y = s.dof_coords()[d];
            assert!((x[0] - y[0]).abs() < 1e-14 && (x[1] - y[1]).abs() < 1e-14);
        }
    }
}

#[test]
fn boundary_dofs_are_those_on_the_boundary() {
    let m = mesh(4);
    for k in 1..=3 {
        let s = ScalarSpace::new(m.clone(), k, Continuity::Continuous).unwrap();
        for (d, p) in s.dof_coords().iter().enumerate() {
            let on = p[0].abs() < 1e-12 || p[1].abs() < 1e-12 || (1.0 - p[0]).abs() < 1e-12 || (1.0 - p[1]).abs() < 1e-12;
            assert_eq!(on, s.is_boundary_dof(d), "degree {k} dof {d}");
        }
        assert_eq!(s.boundary_dofs().len(), 16 * k);
    }
}

#[test]
fn constants_and_hats_evaluate_exactly() {
    let m = mesh(3);
    let s = ScalarSpace::new(m.clone(), 2, Continuity::Continuous).unwrap();
    let one = s.interpolate(|_| 1.0);
    assert!(one.iter().all(|v| *v == 1.0));
    assert!((s.evaluate(&one, 4, [0.2, 0.3]) - 1.0).abs() < 1e-15);
    let p1 = ScalarSpace::new(m.clone(), 1, Continuity::Continuous).unwrap();
    let [a, _, _] = m.triangles()[2];
    let mut hat = vec![0.0; p1.ndof()];
    hat[a] = 1.0;
    assert!((p1.evaluate(&hat, 2, [0.0, 0.0]) - 1.0).abs() < 1e-15);
}

#[test]
fn linears_are_reproduced() {
    let m = mesh(4);
    let s = ScalarSpace::new(m.clone(), 1, Continuity::Continuous).unwrap();
    let c = s.interpolate(|p| p[0]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for e in 0..m.num_triangles() {
        let xi = random_ref_point(&mut rng);
        let x = m.affine_map(e).unwrap().to_physical(xi);
        assert!((s.evaluate(&c, e, xi) - x[0]).abs() < 1e-14);
    }
}

#[test]
fn quadratic_interpolation_is_third_order() {
    let f = |p: [f64; 2]| (std::f64::consts::PI * p[0]).cos() * (std::f64::consts::PI * p[1]).cos();
    let err = |n: usize| {
        let s = ScalarSpace::new(Arc::new(generate_square_mesh(n, 0.0, 0).unwrap()), 2, Continuity::Continuous).unwrap();
        l2_error(&s, &s.interpolate(f), f).unwrap()
    };
    let ratio = err(4) / err(8);
    assert!((ratio / 8.0 - 1.0).abs() < 0.25, "ratio {ratio}");
}

#[test]
fn gradients_match_finite_differences() {
    let m = mesh(3);
    let s = ScalarSpace::new(m.clone(), 2, Continuity::Continuous).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c = random_coeffs(s.ndof(), &mut rng);
    for _ in 0..10 {
        let e = rng.random_range(0..m.num_triangles());
        let map = m.affine_map(e).unwrap();
        let xi = random_ref_point(&mut rng);
        let x = map.to_physical(xi);
        let at = |dx: f64, dy: f64| s.evaluate(&c, e, map.to_reference([x[0] + dx, x[1] + dy]));
        let h = 1e-5;
        let fd = [(at(h, 0.0) - at(-h, 0.0)) / (2.0 * h), (at(0.0, h) - at(0.0, -h)) / (2.0 * h)];
        let g = s.gradient(&c, e, xi);
        assert!((g[0] - fd[0]).abs() < 1e-6 && (g[1] - fd[1]).abs() < 1e-6);
    }
}

fn max_witness_error(pair: &ElementPair, seed: u64, field: impl Fn(&ElementPair, usize, [f64; 2], &[f64]) -> [f64; 2]) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = random_coeffs(pair.h.ndof(), &mut rng);
    let u = pair.v.interpolate_elementwise(|e, xi, _| field(pair, e, xi, &coeffs));
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for e in 0..pair.mesh().num_triangles() {
        for _ in 0..10 {
            let xi = random_ref_point(&mut rng);
            let exact = field(pair, e, xi, &coeffs);
            let got = pair.v.evaluate(&u, e, xi);
            err = err.max((exact[0] - got[0]).abs()).max((exact[1] - got[1]).abs());
            scale = scale.max(exact[0].abs()).max(exact[1].abs());
        }
    }
    (err, scale)
}

fn grad_field(pair: &ElementPair, e: usize, xi: [f64; 2], eta: &[f64]) -> [f64; 2] {
    pair.h.gradient(eta, e, xi)
}

#[test]
fn gradient_embedding_witness() {
    let m = mesh(4);
    for kind in [PairKind::P0P1, PairKind::P1DgP2, PairKind::P2DgP3] {
        let pair = ElementPair::new(kind, m.clone()).unwrap();
        for seed in 0..3 {
            let (err, scale) = max_witness_error(&pair, seed, grad_field);
            assert!(err <= 1e-13 * scale.max(1.0), "{kind}: {err} at scale {scale}");
        }
    }
    let pair = ElementPair::new(PairKind::P1P1, m).unwrap();
    let (err, scale) = max_witness_error(&pair, 0, grad_field);
    assert!(err > 1e-3 * scale, "P1-P1 unexpectedly embeds gradients: {err}");
}

#[test]
fn perp_closure_witness() {
    let m = mesh(4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for kind in PairKind::ALL {
        let pair = ElementPair::new(kind, m.clone()).unwrap();
        let u = random_coeffs(pair.v.ndof(), &mut rng);
        let perp = pair.v.interpolate_elementwise(|e, xi, _| {
            let v = pair.v.evaluate(&u, e, xi);
            [-v[1], v[0]]
        });
        let direct = VectorSpace::perp(&u);
        assert!(perp.iter().zip(&direct).all(|(a, b)| (a - b).abs() < 1e-13));
        for e in 0..m.num_triangles() {
            let xi = random_ref_point(&mut rng);
            let a = pair.v.evaluate(&u, e, xi);
            let b = pair.v.evaluate(&perp, e, xi);
            assert!((b[0] + a[1]).abs() < 1e-13 && (b[1] - a[0]).abs() < 1e-13, "{kind}");
        }
    }
}

#[test]
fn projected_gradient_fails_for_the_continuous_pair() {
    let pair = ElementPair::new(PairKind::P1P1, mesh(8)).unwrap();
    let ops = Operators::assemble(&pair).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eta = random_coeffs(pair.h.ndof(), &mut rng);
    let err = pointwise_gradient_error(&pair, &ops, &eta).unwrap();
    assert!(err > 1e-3 * gradient_l2_norm(&pair, &eta).unwrap());
}
