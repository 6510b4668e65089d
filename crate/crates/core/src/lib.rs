//! Multi-agent trajectory planning through potential differential games.
//!
//! When every pair of agents penalizes proximity to each other identically,
//! the interaction game admits a potential: the sum of all tracking costs
//! plus each pairwise coupling counted once. Minimizing that potential with a
//! single iLQR solve yields an open-loop Nash equilibrium, which
//! [`game::nash_gap`] checks independently by best response.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod costs;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod ilqr;
pub mod par;
pub mod runner;
pub mod scenarios;

pub use error::{Error, Result};
