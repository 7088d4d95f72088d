//! Dense statevector simulation of charge-conserving brick-wall circuits
//! on even-length spin-1/2 chains, with entanglement spectra, charge
//! transport diagnostics, and an overlap harness that ties Renyi entropy
//! growth across the middle cut to diffusive charge leakage.
//!
//! Runnable examples, one per capability (`cargo run --release --example NAME`):
//! - `entropy_growth`: ensemble entropy time series with growth-law fits
//! - `transport_diffusion`: domain-wall spreading and leakage collapse
//! - `proof_walkthrough`: the full overlap inequality chain on one run
//! - `markov_ensemble`: exhaustive sign-ensemble tail bounds
//! - `gate_table`: keyed gate sampling and the dump format round trip
//!
//! The `simulate` binary exposes the same machinery behind flags; see the
//! repository README for the CSV schema and config file keys.

pub mod circuit;
pub mod entanglement;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod gate;
pub mod proof;
pub mod rng;
pub mod state;
pub mod transport;

pub use circuit::{CircuitSpec, Evolution};
pub use entanglement::{Alpha, EntanglementSpectrum};
pub use error::Error;
pub use gate::ChargeGate;
pub use state::{Sign, SignPattern, Statevector};

pub type Result<T> = std::result::Result<T, Error>;
