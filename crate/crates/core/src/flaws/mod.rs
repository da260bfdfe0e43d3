//! Flaw operators that turn a valid mesh into a graded dirty model.

mod gap;
mod ops;
mod script;

pub use gap::gap_width;
pub use ops::{
    exploded, op_deep_copy, op_delete, op_detach, op_explode, op_flip, op_intersect_move, op_join, op_move,
    op_select, EdgeTarget, JoinOutcome, MoveOutcome, MoveTarget, Segment, SegmentFace,
};
pub use script::{apply_script, Displacement, FlawLedger, FlawScript, FlawStep, LedgerEntry, SCRIPT_VERSION};
