//! Segment dynamics: how straight pieces of curve move under the shears.
//!
//! Pieces live in the fundamental square and carry an integer wrap counter,
//! so the lifted position is always recoverable. All routines here expect a
//! canonical map (`k > 0`, `m < 0`); call [`TwistMap::canonical`] first.

mod first_return;
mod limit;
mod orbit;
mod propagate;
mod situation;
mod slope;

pub use first_return::{first_return, ReturnCase, ReturnEvent};
pub use limit::{chain_step, chain_via_propagate, limit_rectangle, limit_rectangle_backward, ChainMap, LimitRectangle};
pub use orbit::{excision_sequence, orbit_denominator, rational_orbit, Anchor, ExcisionSequence, ExcisionStep, RationalOrbit};
pub use propagate::{normalize, propagate, propagate_pieces, step, Piece, Propagation};
pub use situation::{classify_situation, Situation};
pub use slope::{growth_trace, slope_step, GrowthTrace};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::twist::{TwistError, TwistMap};

/// Pieces shorter than this are dropped (and counted) during propagation.
pub const MIN_PIECE_LEN: f64 = 1e-9;

/// Default iteration budget for returns and excision.
pub const DEFAULT_MAX_ITER: u64 = 100_000;

/// Default budget for the situation classifier.
pub const DEFAULT_SITUATION_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Which {
    F,
    G,
    Phi,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentError {
    #[error(transparent)]
    Twist(#[from] TwistError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("map must be canonical (k > 0, m < 0)")]
    NonCanonical,
    #[error("segment is not contained in S")]
    NotInS,
    #[error("no return to S within {0} iterations")]
    NoReturn(u64),
    #[error("degenerate interval: vertical length {l_v} with alpha*l_v = {product}")]
    DegenerateInterval { l_v: f64, product: f64 },
    #[error("excision requires a case II or case III return under F, got {0}")]
    WrongCase(String),
    #[error("excision bound violated at step {m}: length {l_h} < bound {bound}")]
    BoundViolated { m: u64, l_h: f64, bound: f64 },
    #[error("no insertion into S within {steps} steps")]
    NoInsertion { steps: u64 },
    #[error("strip geometry admits no limit rectangle: {0}")]
    NoRectangle(String),
    #[error("chain did not close: {0}")]
    ChainBroken(String),
    #[error("empty history")]
    EmptyHistory,
    #[error("situation undetermined after {0} snapshots")]
    Undetermined(usize),
}

pub(crate) fn require_canonical(map: &TwistMap) -> Result<(), SegmentError> {
    if map.is_canonical() {
        Ok(())
    } else {
        Err(SegmentError::NonCanonical)
    }
}
