//! Simulation harness for `radon-spectral`: error laws, phantoms, synthetic
//! sinograms, Monte Carlo studies, configuration and file formats.
//!
//! The `radon-spectral` binary wraps these behind a small CLI.

pub mod config;
pub mod error;
pub mod io;
pub mod law;
pub mod phantom;
pub mod selfcheck;
pub mod simulate;
pub mod study;

pub use config::ExperimentConfig;
pub use error::{SimError, SimResult};
pub use law::{Law, LawSpec};
pub use phantom::{Phantom, PhantomSpec};
pub use simulate::{generate_data, Simulated, Simulator};
