use crate::mesh_io::{index_mesh, TriangleSoup};

/// Brute-force opening width of a soup: welds it with `weld_tol`, then takes
/// the largest distance from a free-edge endpoint to the nearest free-edge
/// endpoint owned by a different face. Zero for closed surfaces.
pub fn gap_width(soup: &TriangleSoup, weld_tol: f64) -> f64 {
    let mesh = index_mesh(soup, weld_tol);
    let mut ends: Vec<(usize, usize)> = Vec::new();
    for edge in mesh.edges() {
        if let [face] = edge.faces[..] {
            ends.push((face, edge.vertices[0]));
            ends.push((face, edge.vertices[1]));
        }
    }
    ends.sort_unstable();
    ends.dedup();
    let v = mesh.vertices();
    ends.iter()
        .filter_map(|&(f, a)| {
            ends.iter()
                .filter(|&&(g, _)| g != f)
                .map(|&(_, b)| (v[a] - v[b]).norm())
                .min_by(f64::total_cmp)
        })
        .fold(0.0, f64::max)
}
