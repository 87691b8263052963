//! Legacy ASCII VTK snapshots.
//!
//! The elevation space is drawn on a P1-refined mesh: every element is split
//! along its Lagrange lattice, the points are the elevation DOF locations and
//! `eta` is point data. Velocity is cell data, sampled at the centroid of
//! each sub-triangle.

use std::io::{self, Write};

use geofem_core::model::State;
use geofem_core::spaces::ElementPair;

const VTK_TRIANGLE: u8 = 5;

pub fn write_vtk(pair: &ElementPair, state: &State, title: &str, out: &mut impl Write) -> io::Result<()> {
    let h = &pair.h;
    let mesh = pair.mesh();
    let subs = h.basis().sub_triangles();
    let ncells = mesh.num_triangles() * subs.len();
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();

    writeln!(out, "# vtk DataFile Version 2.0")?;
    writeln!(out, "{title}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", h.ndof())?;
    for p in h.dof_coords() {
        writeln!(out, "{:?} {:?} 0", p[0], p[1])?;
    }
    writeln!(out, "CELLS {} {}", ncells, 4 * ncells)?;
    for e in 0..mesh.num_triangles() {
        let dofs = h.element_dofs(e);
        for t in &subs {
            writeln!(out, "3 {} {} {}", dofs[t[0]], dofs[t[1]], dofs[t[2]])?;
        }
    }
    writeln!(out, "CELL_TYPES {ncells}")?;
    for _ in 0..ncells {
        writeln!(out, "{VTK_TRIANGLE}")?;
    }
    writeln!(out, "POINT_DATA {}", h.ndof())?;
    writeln!(out, "SCALARS eta double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for v in &state.eta.coeffs {
        writeln!(out, "{v:?}")?;
    }
    writeln!(out, "CELL_DATA {ncells}")?;
    writeln!(out, "VECTORS velocity double")?;
    let pts = h.basis().dof_points();
    for e in 0..mesh.num_triangles() {
        for t in &subs {
            let c = [
                (pts[t[0]][0] + pts[t[1]][0] + pts[t[2]][0]) / 3.0,
                (pts[t[0]][1] + pts[t[1]][1] + pts[t[2]][1]) / 3.0,
            ];
            let v = pair.v.evaluate(&state.u.coeffs, e, c);
            writeln!(out, "{:?} {:?} 0", v[0], v[1])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use geofem_core::mesh::generate_square_mesh;
    use geofem_core::spaces::PairKind;
    use std::sync::Arc;

    #[test]
    fn sections_have_consistent_sizes() {
        let pair = ElementPair::new(PairKind::P1DgP2, Arc::new(generate_square_mesh(2, 0.0, 0).unwrap())).unwrap();
        let state = State::zeros(&pair);
        let mut buf = Vec::new();
        write_vtk(&pair, &state, "t", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 2.0\n"));
        assert!(text.contains("POINTS 25 double"));
        assert!(text.contains("CELLS 32 128"));
        assert!(text.contains("CELL_DATA 32"));
        assert_eq!(text.lines().filter(|l| *l == "5").count(), 32);
    }
}
