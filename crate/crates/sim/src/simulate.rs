//! Synthetic sinograms `Y_k = Rg(z_k) + eps_k`.

use radon_spectral::estimator::{radon_trace, DataMeta};
use radon_spectral::{DesignGrid, SinogramData};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::SimResult;
use crate::law::{Law, LawSpec};
use crate::phantom::Phantom;

/// Generator and stream derivation, recorded in every output for reproducibility.
pub const RNG_NAME: &str = "ChaCha20Rng::seed_from_u64(base_seed + replication)";

/// Seed of replication `rep`: `base_seed + rep`, wrapping.
pub fn replication_seed(base_seed: u64, rep: u64) -> u64 {
    base_seed.wrapping_add(rep)
}

/// One simulated data set together with the errors that produced it.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub data: SinogramData,
    pub errors: Vec<f64>,
}

/// Draws repeated data sets for one phantom and grid. The noise-free trace is
/// computed once.
#[derive(Debug, Clone)]
pub struct Simulator {
    grid: DesignGrid,
    trace: Vec<f64>,
    law: Law,
    law_label: String,
    phantom_label: String,
}

impl Simulator {
    pub fn new(phantom: &Phantom, grid: DesignGrid, law: &LawSpec) -> SimResult<Self> {
        let trace = radon_trace(phantom.field(), &grid)?;
        Ok(Self {
            grid,
            trace,
            law: law.build()?,
            law_label: law.label(),
            phantom_label: phantom.label(),
        })
    }

    pub fn grid(&self) -> &DesignGrid {
        &self.grid
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    /// `Rg(z_k)` of the phantom.
    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn draw(&self, seed: u64) -> SimResult<Simulated> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut errors = vec![0.0; self.grid.n()];
        self.law.fill(&mut rng, &mut errors);
        let y = self.trace.iter().zip(&errors).map(|(r, e)| r + e).collect();
        let meta = DataMeta {
            seed: Some(seed),
            error_law: self.law_label.clone(),
            phantom: self.phantom_label.clone(),
        };
        let data = SinogramData::new(self.grid.clone(), y)?.with_meta(meta);
        Ok(Simulated { data, errors })
    }
}

/// One-shot data generation.
pub fn generate_data(
    phantom: &Phantom,
    grid: &DesignGrid,
    law: &LawSpec,
    seed: u64,
) -> SimResult<Simulated> {
    Simulator::new(phantom, grid.clone(), law)?.draw(seed)
}
