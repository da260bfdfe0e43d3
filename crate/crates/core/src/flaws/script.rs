use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vector;
use crate::mesh_io::{index_mesh, IndexedMesh, TriangleSoup};

use super::ops::*;

pub const SCRIPT_VERSION: u32 = 1;

/// Explicit vector or a random direction with fixed magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Displacement {
    Fixed([f64; 3]),
    Random { random_magnitude: f64 },
}

impl Displacement {
    fn resolve(&self, rng: &mut ChaCha8Rng) -> Vector {
        match *self {
            Displacement::Fixed(v) => Vector::from(v),
            Displacement::Random { random_magnitude } => loop {
                let v = Vector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let n = v.norm();
                if n > 1e-3 && n <= 1.0 {
                    break v * (random_magnitude / n);
                }
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum FlawStep {
    /// Give every face private vertices.
    Explode,
    Delete {
        face: usize,
        eps: f64,
    },
    Flip {
        face: usize,
    },
    Move {
        target: MoveTarget,
        displacement: Displacement,
        eps: f64,
    },
    Detach {
        edge: EdgeTarget,
        offset: Displacement,
        eps: f64,
    },
    IntersectMove {
        face: usize,
        displacement: Displacement,
        eps: f64,
        #[serde(default)]
        duplicate: bool,
    },
    /// Select a face and join it back, deep-copied unless `deep` is false.
    CopyJoin {
        face: usize,
        #[serde(default = "default_true")]
        deep: bool,
    },
}

fn default_true() -> bool {
    true
}

impl FlawStep {
    fn name(&self) -> &'static str {
        match self {
            FlawStep::Explode => "explode",
            FlawStep::Delete { .. } => "delete",
            FlawStep::Flip { .. } => "flip",
            FlawStep::Move { .. } => "move",
            FlawStep::Detach { .. } => "detach",
            FlawStep::IntersectMove { .. } => "intersect_move",
            FlawStep::CopyJoin { .. } => "copy_join",
        }
    }
}

/// Versioned, seeded list of flaw operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlawScript {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub steps: Vec<FlawStep>,
}

impl FlawScript {
    pub fn new(seed: u64, steps: Vec<FlawStep>) -> Self {
        FlawScript {
            version: SCRIPT_VERSION,
            seed,
            steps,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let script: FlawScript = serde_json::from_str(text)?;
        if script.version != SCRIPT_VERSION {
            return Err(Error::Config(format!(
                "unsupported flaw script version {} (expected {SCRIPT_VERSION})",
                script.version
            )));
        }
        Ok(script)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub step: usize,
    pub op: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Magnitude of the applied displacement.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub move_distance: Option<f64>,
    /// Opening created by the step: separation of formerly coincident
    /// points, or the inscribed diameter of a deleted face.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_gap: Option<f64>,
    pub faces: Vec<usize>,
    pub vertices: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aliased_references: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intersection_achieved: Option<bool>,
}

impl LedgerEntry {
    fn new(step: usize, op: &str) -> Self {
        LedgerEntry {
            step,
            op: op.to_string(),
            eps: None,
            move_distance: None,
            measured_gap: None,
            faces: Vec::new(),
            vertices: Vec::new(),
            aliased_references: None,
            intersection_achieved: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FlawLedger {
    pub entries: Vec<LedgerEntry>,
    /// Largest opening over all gap-creating steps.
    pub eps_gap: f64,
}

fn intersecting_pairs(mesh: &IndexedMesh) -> usize {
    let welded = index_mesh(&mesh.to_soup(), mesh.weld_tol());
    crate::mesh_io::topology_report(&welded).self_intersection_pair_count
}

fn apply_step(mesh: &mut IndexedMesh, step: &FlawStep, rng: &mut ChaCha8Rng, entry: &mut LedgerEntry) -> Result<()> {
    let with_move = |entry: &mut LedgerEntry, eps: f64, out: MoveOutcome, gap: bool| {
        entry.eps = Some(eps);
        entry.move_distance = Some(out.distance);
        if gap {
            entry.measured_gap = Some(out.gap);
        }
        entry.faces = out.faces;
        entry.vertices = out.vertices;
    };
    match step {
        FlawStep::Explode => *mesh = exploded(mesh),
        FlawStep::Delete { face, eps } => {
            let delta = op_delete(mesh, *face, *eps)?;
            entry.eps = Some(*eps);
            entry.measured_gap = Some(delta);
            entry.faces = vec![*face];
        }
        FlawStep::Flip { face } => {
            op_flip(mesh, *face)?;
            entry.faces = vec![*face];
        }
        FlawStep::Move { target, displacement, eps } => {
            let d = displacement.resolve(rng);
            let out = op_move(mesh, *target, d, *eps)?;
            with_move(entry, *eps, out, true);
        }
        FlawStep::Detach { edge, offset, eps } => {
            let d = offset.resolve(rng);
            let out = op_detach(mesh, *edge, d, *eps)?;
            with_move(entry, *eps, out, true);
        }
        FlawStep::IntersectMove {
            face,
            displacement,
            eps,
            duplicate,
        } => {
            let d = displacement.resolve(rng);
            let before = intersecting_pairs(mesh);
            let out = op_intersect_move(mesh, *face, d, *eps, *duplicate)?;
            entry.intersection_achieved = Some(intersecting_pairs(mesh) > before);
            with_move(entry, *eps, out, !duplicate);
        }
        FlawStep::CopyJoin { face, deep } => {
            let mut seg = op_select(mesh, *face)?;
            if *deep {
                seg = op_deep_copy(&seg);
            }
            let out = op_join(mesh, &seg);
            entry.faces = out.new_faces;
            entry.aliased_references = Some(out.aliased_references);
        }
    }
    Ok(())
}

/// Runs the script on a copy of `mesh` and returns the exploded result.
/// A failing step aborts with its index.
pub fn apply_script(mesh: &IndexedMesh, script: &FlawScript) -> Result<(TriangleSoup, FlawLedger)> {
    let mut work = mesh.clone();
    let mut ledger = FlawLedger::default();
    for (i, step) in script.steps.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
        rng.set_stream(i as u64);
        let mut entry = LedgerEntry::new(i, step.name());
        apply_step(&mut work, step, &mut rng, &mut entry).map_err(|e| Error::ScriptStep {
            step: i,
            source: Box::new(e),
        })?;
        if let Some(g) = entry.measured_gap {
            ledger.eps_gap = ledger.eps_gap.max(g);
        }
        ledger.entries.push(entry);
    }
    Ok((op_explode(&work), ledger))
}
