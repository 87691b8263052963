use geofem::config::{parse_config, RunConfig};
use geofem::matrix_market::{read_matrix_market, write_matrix_market};
use geofem::meshfile::{load_mesh, write_mesh};
use geofem_core::mesh::generate_square_mesh;
use geofem_core::sparse::{SparseOperator, Symmetry};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn meshes_survive_a_round_trip(n in 1usize..6, p in 0.0f64..=0.3, seed in any::<u64>()) {
        let m = generate_square_mesh(n, p, seed).unwrap();
        let back = load_mesh(&write_mesh(&m)).unwrap();
        prop_assert_eq!(back.nodes(), m.nodes());
        prop_assert_eq!(back.triangles(), m.triangles());
    }

    #[test]
    fn matrices_survive_a_round_trip(entries in prop::collection::vec((0usize..7, 0usize..5, -1e6f64..1e6), 0..40)) {
        let a = SparseOperator::from_triplets(7, 5, &entries, Symmetry::General).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, "", &mut buf).unwrap();
        prop_assert_eq!(read_matrix_market(std::str::from_utf8(&buf).unwrap()).unwrap(), a);
    }

    #[test]
    fn config_accepts_any_positive_timestep(dt in 1e-6f64..10.0) {
        let c = parse_config(&format!("dt = {dt}")).unwrap();
        prop_assert_eq!(c.dt, dt);
    }
}

#[test]
fn empty_config_reproduces_the_reference_experiment() {
    let c = parse_config("").unwrap();
    assert_eq!(c, RunConfig::default());
    assert_eq!(c.pair.name(), "P1DG-P2");
    assert_eq!(c.nsteps, 1000);
}
