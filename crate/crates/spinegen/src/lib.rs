//! Spine data for the example branched self-covers, computed by lifting
//! planar spines through explicit degree-2 maps.

pub mod catalog;
pub mod fit;
pub mod lift;
pub mod spine;
