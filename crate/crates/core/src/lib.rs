//! Linear linked twist maps on the torus: the two shears and their
//! composition, segment dynamics inside the overlap square, the inequality
//! ledger behind the critical twist, and orbit diagnostics.

pub mod certificate;
pub mod diagnostics;
pub mod geometry;
pub mod segment;
pub mod twist;

pub use geometry::{Cone, LiftedSegment, Point2, Rect};
pub use twist::{CompositionOrder, TwistConfig, TwistMap};
