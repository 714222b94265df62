//! Multilevel lattices built from linear codes over prime-power rings via
//! the Chinese remainder theorem, with multistage decoders, nested lattice
//! codes and Monte Carlo tooling.

pub mod algebra;
pub mod codes;
pub mod decoders;
pub mod error;
pub mod lattice;
pub mod nested;
pub mod rng;
pub mod sim;

pub use algebra::{CrtMap, MapKind, PrimePower, PrimeTower};
pub use codes::{LinearCode, NestedCodePair};
pub use decoders::{DecodeResult, DecoderKind, DecoderOptions, WrappedGaussian};
pub use error::{Error, Result};
pub use lattice::{LatticePoint, MultilevelLattice};
pub use nested::{ChannelState, NestedConfig, NestedLatticeCode};

/// Library version recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
