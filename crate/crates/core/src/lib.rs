#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod chart;
pub mod decay;
pub mod error;
pub mod jet;
pub mod levelset;
pub mod models;
pub mod ode;
pub mod verify;

pub use error::{Error, Result};
