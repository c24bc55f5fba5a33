//! Directed cycle double covers of cubic graphs through mixed-graph reductions along
//! ear decompositions.

pub mod closure;
pub mod ear;
pub mod embedding;
pub mod error;
pub mod gadget;
pub mod gen;
pub mod graph;
pub mod io;
pub mod mixed;
pub mod pipeline;
pub mod process;
pub mod reduce;
pub mod search;
pub mod toroidal;

pub use error::{Error, Result};
