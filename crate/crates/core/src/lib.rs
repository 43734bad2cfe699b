//! Forward-link system simulator for multibeam satellites whose beams are
//! split into clusters, each cluster fed by its own gateway.
//!
//! Four transmission strategies are modelled and compared on identical
//! channel realizations:
//!
//! * 4-colour frequency reuse with single-feed beams,
//! * per-cluster regularized zero-forcing (no gateway cooperation),
//! * hyper-cluster SLNR beamforming with CSI sharing between gateways,
//! * hyper-cluster SLNR beamforming with CSI and user-data sharing, where
//!   cluster-edge users are served coherently by several gateways.
//!
//! The crate is organised bottom-up: [`geometry`] builds the beam layout and
//! drops users, [`channel`] synthesizes complex channel gains, [`precoding`]
//! and [`power_alloc`] design transmit vectors and powers per gateway,
//! [`schemes`] evaluates achieved rates with all inter-cluster interference,
//! and [`harness`] drives seeded Monte-Carlo power sweeps.

pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod power_alloc;
pub mod precoding;
pub mod schemes;
pub mod special;

pub use error::{Result, SimError};
