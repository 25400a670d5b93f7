use alloc::string::String;

use crate::expr::Point;

/// Everything that can go wrong in the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("`{name}` at byte {offset} expects {expected} argument(s), found {found}")]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        found: usize,
    },

    #[error("parameter `{0}` has no binding")]
    UnboundParameter(String),

    #[error("domain error in `{expr}` at {point}: {reason}")]
    Domain {
        expr: String,
        point: Point,
        reason: &'static str,
    },

    #[error("`{expr}` is not smooth at {point} (argument is zero)")]
    Nonsmooth { expr: String, point: Point },

    #[error("jet order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("jets are based at different points")]
    BaseMismatch,

    #[error("insufficient jet order for {what}: needs {needed}, have {available}")]
    InsufficientOrder {
        what: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("point {point} is inadmissible: {reason}")]
    Inadmissible { point: Point, reason: String },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid fixture parameters: {0}")]
    InvalidParameter(String),

    #[error("plane map is not invertible at {point}: {reason}")]
    NotInvertible { point: Point, reason: String },

    #[error("flow left the admissible domain after s = {last_good_s} at {point}: {reason}")]
    FlowBreach {
        last_good_s: f64,
        point: Point,
        reason: String,
    },

    #[error("Riccati solution escaped (|rho| > 1e8) at s = {s}")]
    Blowup { s: f64 },

    #[error("no admissible point in region; first failure at {point}: {reason}")]
    EmptyRegion { point: Point, reason: String },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
