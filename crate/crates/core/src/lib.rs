//! Steady states of the Kuramoto model on weighted graphs, indexed by the
//! lattice points of a winding map over a polytope of cycle coordinates.
//!
//! The crate is organised bottom-up: [`graph`] holds the combinatorics,
//! [`winding`] the maps `L`, `W` and the polytope `A`, [`enumeration`] turns
//! lattice points into states, [`stability`] classifies and simulates them,
//! and [`measure`] integrates `|det W'|` for counting asymptotics.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod enumeration;
pub mod families;
pub mod graph;
pub mod measure;
pub mod stability;
pub mod winding;
