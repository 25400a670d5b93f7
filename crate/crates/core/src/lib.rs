#![no_std]
//! Local invariants and normal forms of pairs of transverse contact
//! structures on three-manifolds, computed in the normalized chart
//! `ξ = {dy = p dx}`, `ξ̃ = {dy = f(x, y, p) dx}`.

extern crate alloc;

pub mod error;
pub mod expr;
pub mod frames;
pub mod invariants;
pub mod classifier;
pub mod symmetry;
pub mod flows;
pub mod jet;

pub use error::{Error, Result};
pub use expr::{evaluate, evaluate_jet, parse_expression, Expr, Params, Point, Var};
pub use frames::{ContactPair, Orientation};
pub use jet::Jet;
