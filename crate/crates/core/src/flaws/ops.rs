use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::geom::{Point, Vector};
use crate::mesh_io::{Face, IndexedMesh, TriangleSoup};

/// Ids handed out by [`op_deep_copy`] start here, far above any mesh index.
const FRESH_ID_BASE: u64 = 1 << 40;
static NEXT_ID: AtomicU64 = AtomicU64::new(FRESH_ID_BASE);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// One face of a segment, referencing segment vertex ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentFace {
    pub id: u64,
    pub vertices: [u64; 3],
    pub normal: Vector,
}

/// Faces cut out of a body together with their vertices and geometry, but
/// without adjacency to the rest of the body.
///
/// A segment from [`op_select`] aliases the mesh: its ids are mesh indices.
/// [`op_deep_copy`] replaces every id with a fresh one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Segment {
    pub faces: Vec<SegmentFace>,
    pub vertices: BTreeMap<u64, Point>,
    aliases_mesh: bool,
}

impl Segment {
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Distinct undirected edges of the segment faces.
    pub fn edge_count(&self) -> usize {
        let mut edges: Vec<(u64, u64)> = self
            .faces
            .iter()
            .flat_map(|f| (0..3).map(move |k| (f.vertices[k], f.vertices[(k + 1) % 3])))
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    pub fn aliases_mesh(&self) -> bool {
        self.aliases_mesh
    }

    /// All entity ids (faces and vertices).
    pub fn ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.faces.iter().map(|f| f.id).chain(self.vertices.keys().copied()).collect();
        ids.sort_unstable();
        ids
    }

    pub fn translate(&mut self, d: Vector) {
        for p in self.vertices.values_mut() {
            *p += d;
        }
    }
}

fn live_face(mesh: &IndexedMesh, face: usize) -> Result<Face> {
    mesh.face(face).copied().ok_or(Error::UnknownEntity { kind: "face", id: face })
}

/// Shallow selection of one face.
pub fn op_select(mesh: &IndexedMesh, face: usize) -> Result<Segment> {
    let f = live_face(mesh, face)?;
    let vertices = f.vertices.iter().map(|&v| (v as u64, mesh.vertices()[v])).collect();
    Ok(Segment {
        faces: vec![SegmentFace {
            id: face as u64,
            vertices: f.vertices.map(|v| v as u64),
            normal: f.normal,
        }],
        vertices,
        aliases_mesh: true,
    })
}

/// Copies every entity of the segment under fresh ids, re-pointing the
/// faces to the copied vertices.
pub fn op_deep_copy(segment: &Segment) -> Segment {
    let remap: BTreeMap<u64, u64> = segment.vertices.keys().map(|&v| (v, fresh_id())).collect();
    Segment {
        faces: segment
            .faces
            .iter()
            .map(|f| SegmentFace {
                id: fresh_id(),
                vertices: f.vertices.map(|v| remap[&v]),
                normal: f.normal,
            })
            .collect(),
        vertices: segment.vertices.iter().map(|(v, p)| (remap[v], *p)).collect(),
        aliases_mesh: false,
    }
}

/// Result of [`op_join`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JoinOutcome {
    pub new_faces: Vec<usize>,
    /// Face corners that point at vertices already owned by the mesh, i.e.
    /// references duplicated by joining a segment that was not deep-copied.
    pub aliased_references: usize,
}

/// Appends the segment's faces. A shallow segment re-uses the mesh vertices
/// it aliases; a deep copy brings its own vertices. Nothing is welded.
pub fn op_join(mesh: &mut IndexedMesh, segment: &Segment) -> JoinOutcome {
    let mut outcome = JoinOutcome::default();
    let mut index: BTreeMap<u64, (usize, bool)> = BTreeMap::new();
    for (&id, p) in &segment.vertices {
        let existing = segment.aliases_mesh
            && (id as usize) < mesh.vertices().len()
            && mesh.vertices()[id as usize] == *p;
        let v = if existing {
            id as usize
        } else {
            mesh.vertices_mut().push(*p);
            mesh.vertices().len() - 1
        };
        index.insert(id, (v, existing));
    }
    for f in &segment.faces {
        let vertices = f.vertices.map(|v| index[&v].0);
        outcome.aliased_references += f.vertices.iter().filter(|v| index[v].1).count();
        mesh.faces_mut().push(Some(Face { vertices, normal: f.normal }));
        outcome.new_faces.push(mesh.faces().len() - 1);
    }
    mesh.rebuild_adjacency();
    outcome
}

/// Removes a face whose inscribed-circle diameter is below `eps`.
/// Returns the measured diameter.
pub fn op_delete(mesh: &mut IndexedMesh, face: usize, eps: f64) -> Result<f64> {
    let f = live_face(mesh, face)?;
    let delta = mesh.triangle(&f).incircle_diameter();
    if delta >= eps {
        return Err(Error::EpsViolation { op: "delete", measured: delta, eps });
    }
    mesh.faces_mut()[face] = None;
    mesh.rebuild_adjacency();
    Ok(delta)
}

/// Independent triangles, one per live face.
pub fn op_explode(mesh: &IndexedMesh) -> TriangleSoup {
    mesh.to_soup()
}

/// The mesh with every face given private vertex copies. Face ids are kept.
pub fn exploded(mesh: &IndexedMesh) -> IndexedMesh {
    let mut vertices = Vec::new();
    let faces = mesh
        .faces()
        .iter()
        .map(|f| {
            f.map(|f| {
                let start = vertices.len();
                vertices.extend(f.vertices.map(|v| mesh.vertices()[v]));
                Face {
                    vertices: [start, start + 1, start + 2],
                    normal: f.normal,
                }
            })
        })
        .collect();
    IndexedMesh::new(vertices, faces, mesh.weld_tol())
}

/// Negates the stored normal and reverses the winding.
pub fn op_flip(mesh: &mut IndexedMesh, face: usize) -> Result<()> {
    let f = live_face(mesh, face)?;
    let [a, b, c] = f.vertices;
    mesh.faces_mut()[face] = Some(Face {
        vertices: [a, c, b],
        normal: -f.normal,
    });
    mesh.rebuild_adjacency();
    Ok(())
}

/// Point to move: a mesh vertex (all incident faces follow) or one corner
/// of one face (only that face follows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveTarget {
    Vertex(usize),
    Corner([usize; 2]),
}

/// Outcome of a geometric perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveOutcome {
    pub distance: f64,
    /// Largest distance between a moved point and a point it coincided with
    /// before the step (zero when nothing separated).
    pub gap: f64,
    pub faces: Vec<usize>,
    pub vertices: Vec<usize>,
}

fn check_magnitude(op: &'static str, d: &Vector, eps: f64) -> Result<f64> {
    let m = d.norm();
    if !(m > 0.0) {
        return Err(Error::Refused { op, reason: "displacement must be non-zero".into() });
    }
    if m >= eps {
        return Err(Error::EpsViolation { op, measured: m, eps });
    }
    Ok(m)
}

/// Gives `face` its own copy of its corner `k` if any other face uses the
/// same vertex. Returns the (possibly new) vertex index.
fn privatize(mesh: &mut IndexedMesh, face: usize, k: usize) -> usize {
    let f = mesh.face(face).copied().expect("live face");
    let v = f.vertices[k];
    let shared = mesh
        .live_faces()
        .any(|(i, g)| i != face && g.vertices.contains(&v));
    if !shared {
        return v;
    }
    let p = mesh.vertices()[v];
    mesh.vertices_mut().push(p);
    let nv = mesh.vertices().len() - 1;
    let mut nf = f;
    nf.vertices[k] = nv;
    mesh.faces_mut()[face] = Some(nf);
    nv
}

/// Positions of corners of other faces that coincide with `p`.
fn coincident_partners(mesh: &IndexedMesh, p: &Point, except_vertex: usize) -> Vec<Point> {
    mesh.live_faces()
        .flat_map(|(_, f)| f.vertices)
        .filter(|&v| v != except_vertex && mesh.vertices()[v] == *p)
        .map(|v| mesh.vertices()[v])
        .collect()
}

/// Moves a vertex or a single corner by `d` with `0 < |d| < eps`.
pub fn op_move(mesh: &mut IndexedMesh, target: MoveTarget, d: Vector, eps: f64) -> Result<MoveOutcome> {
    let distance = check_magnitude("move", &d, eps)?;
    let (v, faces) = match target {
        MoveTarget::Vertex(v) => {
            if v >= mesh.vertices().len() {
                return Err(Error::UnknownEntity { kind: "vertex", id: v });
            }
            let faces = mesh
                .live_faces()
                .filter(|(_, f)| f.vertices.contains(&v))
                .map(|(i, _)| i)
                .collect();
            (v, faces)
        }
        MoveTarget::Corner([face, k]) => {
            live_face(mesh, face)?;
            if k > 2 {
                return Err(Error::UnknownEntity { kind: "corner", id: k });
            }
            (privatize(mesh, face, k), vec![face])
        }
    };
    let old = mesh.vertices()[v];
    let partners = coincident_partners(mesh, &old, v);
    mesh.vertices_mut()[v] = old + d;
    mesh.rebuild_adjacency();
    let gap = partners.iter().map(|q| (old + d - q).norm()).fold(0.0, f64::max);
    Ok(MoveOutcome {
        distance,
        gap,
        faces,
        vertices: vec![v],
    })
}

/// Which edge to detach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTarget {
    /// Edge id; the incident face with the higher id is detached.
    Id(usize),
    /// The edge shared by `[kept, detached]`.
    Faces([usize; 2]),
}

/// Splits a manifold edge: the detached face receives private copies of
/// the edge's two vertices, translated by `offset`.
pub fn op_detach(mesh: &mut IndexedMesh, target: EdgeTarget, offset: Vector, eps: f64) -> Result<MoveOutcome> {
    let distance = check_magnitude("detach", &offset, eps)?;
    let (edge, detached) = match target {
        EdgeTarget::Id(e) => {
            let edge = mesh.edges().get(e).cloned().ok_or(Error::UnknownEntity { kind: "edge", id: e })?;
            let detached = edge.faces.last().copied().unwrap_or(usize::MAX);
            (edge, detached)
        }
        EdgeTarget::Faces([kept, detached]) => {
            let a = live_face(mesh, kept)?;
            let b = live_face(mesh, detached)?;
            let shared: Vec<usize> = a.vertices.iter().copied().filter(|v| b.vertices.contains(v)).collect();
            if shared.len() != 2 {
                return Err(Error::Refused {
                    op: "detach",
                    reason: format!("faces {kept} and {detached} share no edge"),
                });
            }
            let id = mesh.edge_id(shared[0], shared[1]).expect("shared edge exists");
            (mesh.edges()[id].clone(), detached)
        }
    };
    if edge.faces.len() != 2 {
        return Err(Error::Refused {
            op: "detach",
            reason: format!("edge has {} incident faces, need 2", edge.faces.len()),
        });
    }
    let mut f = mesh.face(detached).copied().expect("live face");
    let mut moved = Vec::new();
    for k in 0..3 {
        if edge.vertices.contains(&f.vertices[k]) {
            let p = mesh.vertices()[f.vertices[k]] + offset;
            mesh.vertices_mut().push(p);
            f.vertices[k] = mesh.vertices().len() - 1;
            moved.push(f.vertices[k]);
        }
    }
    mesh.faces_mut()[detached] = Some(f);
    mesh.rebuild_adjacency();
    Ok(MoveOutcome {
        distance,
        gap: distance,
        faces: vec![detached],
        vertices: moved,
    })
}

/// Translates a face by `d` with `|d| < eps`, after giving it private
/// vertices. With `duplicate`, a deep copy of the face is joined first and
/// the copy is moved instead (an offset artifact); a zero displacement is
/// then allowed and yields a pure double face.
pub fn op_intersect_move(
    mesh: &mut IndexedMesh,
    face: usize,
    d: Vector,
    eps: f64,
    duplicate: bool,
) -> Result<MoveOutcome> {
    let distance = d.norm();
    if !duplicate || distance > 0.0 {
        check_magnitude("intersect_move", &d, eps)?;
    }
    let mut target = face;
    if duplicate {
        let seg = op_deep_copy(&op_select(mesh, face)?);
        target = op_join(mesh, &seg).new_faces[0];
    } else {
        live_face(mesh, face)?;
    }
    let mut vertices = Vec::new();
    let mut gap: f64 = 0.0;
    for k in 0..3 {
        let v = privatize(mesh, target, k);
        let old = mesh.vertices()[v];
        if !duplicate {
            for q in coincident_partners(mesh, &old, v) {
                gap = gap.max((old + d - q).norm());
            }
        }
        mesh.vertices_mut()[v] = old + d;
        vertices.push(v);
    }
    mesh.rebuild_adjacency();
    Ok(MoveOutcome {
        distance,
        gap,
        faces: vec![target],
        vertices,
    })
}
