//! BLADE: blanket-masked (1+1) evolutionary search with hub-and-spoke
//! distribution.
//!
//! The crate is organized around the pipeline from mechanism to
//! measurement:
//!
//! - [`genome`]: packed bitstring genotypes and the AllOnes / OneMax /
//!   LeadingOnes fitness functions.
//! - [`mutation`]: rate schedules, standard bitwise mutation, and
//!   blanket-masked mutation with the compensated rate.
//! - [`ea`]: the single-client (1+1) EA loop in baseline and blanket
//!   variants.
//! - [`hub`]: atomic best-candidate exchange, the deterministic lock-step
//!   multi-client simulator, and a TCP line-protocol hub.
//! - [`markov`]: exact transition matrices, spectra, convergence stepping,
//!   and expected absorption times for small N.
//! - [`theory`]: fitness-level improvement bounds and the single-client,
//!   distributed, and simplified runtime bounds.
//! - [`bench`]: repeated-trial statistics, sweeps, and speedup ratios.

pub mod bench;
pub mod ea;
pub mod error;
pub mod genome;
pub mod hub;
pub mod linalg;
pub mod markov;
pub mod mutation;
pub mod rng;
pub mod theory;

pub use ea::{EAConfig, RunRecord, Variant};
pub use error::{Error, Result};
pub use genome::{BitString, Problem};
pub use hub::{DistConfig, DistMode, DistRunRecord, HubState};
pub use mutation::{Blanket, MutationSchedule};
pub use rng::{derive_seed, seed_rng, RandomSource};
