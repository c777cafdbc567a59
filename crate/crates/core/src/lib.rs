//! Four-mode bosonic Wheatstone bridge: linear open-system dynamics, adiabatic
//! reduction, balance detection and coupling-estimation precision.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod balance;
pub mod compare;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod metrology;
pub mod network;
pub mod reduction;
pub mod sweep;

pub use error::{BridgeError, Result};
pub use linalg::C64;
pub use network::BridgeConfig;
