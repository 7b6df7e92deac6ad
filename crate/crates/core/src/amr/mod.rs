//! Typed AMR graphs and their PENMAN form.

mod graph;
mod penman;
mod select;

pub use graph::{normalize_role, AmrGraph, Constant, Edge, EdgeTarget, GraphError};
pub use penman::{
    canonical_order, is_inverse_role, linearize, parse_penman, parse_penman_many, serialize_penman,
    serialize_penman_pretty, PenmanError,
};
pub use select::{find_nodes, is_frame, NodeSelector, FRAME_PATTERN};

