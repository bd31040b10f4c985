//! Adaptive binary physical-layer network coding for a two-stage
//! network-MIMO uplink.
//!
//! Terminals transmit simultaneously to several access points. Each access
//! point maps the superimposed signal to a GF(2) linear combination of the
//! joint message (its network codeword) with a mapping matrix chosen to
//! resolve singular fade states, and a central unit inverts the stacked
//! matrices to recover every terminal's data.

pub mod detect;
pub mod error;
pub mod fec;
pub mod gf2;
pub mod mapper;
pub mod modem;
pub mod phy;
pub mod sfs;
pub mod sim;
pub mod superposition;

pub use error::{PncError, Result};
