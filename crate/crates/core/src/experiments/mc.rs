use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::report::CostEstimate;
use crate::error::{Error, Result};
use crate::noise::{FactorVariant, NoiseSampler, PathNoise};
use crate::problem::{ProblemSpec, TimeGrid};
use crate::sim::{accumulate_cost, design, DesignTables, Policy, Simulator};

/// Sample mean and standard error; the error is undefined below two samples.
pub fn mean_stderr(samples: &[f64]) -> (f64, Option<f64>) {
    let m = samples.len();
    if m == 0 {
        return (f64::NAN, None);
    }
    let mean = samples.iter().sum::<f64>() / m as f64;
    if m < 2 {
        return (mean, None);
    }
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
    (mean, Some((var / m as f64).sqrt()))
}

/// Hex SHA-256 of every number a path consumes.
pub fn noise_digest(noise: &PathNoise) -> String {
    let mut h = Sha256::new();
    for part in [&noise.xi, &noise.state_incr, &noise.obs_incr] {
        for v in part.iter() {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

pub fn combine_digests<'a>(digests: impl IntoIterator<Item = &'a String>) -> String {
    let mut h = Sha256::new();
    for d in digests {
        h.update(d.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Map `f` over path indices `0..m` in parallel; results come back in path order.
pub fn map_paths<T: Send>(m: usize, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..m as u64).into_par_iter().map(f).collect()
}

/// A problem with its design tables and a noise sampler, ready for Monte Carlo.
#[derive(Debug, Clone)]
pub struct McSetup<'a> {
    pub spec: &'a ProblemSpec,
    pub design: DesignTables,
    pub sampler: NoiseSampler,
}

impl<'a> McSetup<'a> {
    pub fn new(spec: &'a ProblemSpec, grid: &TimeGrid, variant: FactorVariant) -> Result<Self> {
        Ok(Self {
            spec,
            design: design(spec, grid)?,
            sampler: NoiseSampler::new(spec, grid, variant)?,
        })
    }

    pub fn with_design(
        spec: &'a ProblemSpec,
        design: DesignTables,
        variant: FactorVariant,
    ) -> Result<Self> {
        let sampler = NoiseSampler::new(spec, &design.grid, variant)?;
        Ok(Self {
            spec,
            design,
            sampler,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.design.grid
    }

    pub fn noise(&self, seed: u64, path: u64) -> PathNoise {
        self.sampler
            .sample(seed, path, self.grid(), self.spec.dims().0)
    }

    /// Realized costs and noise digests of paths `0..m`.
    pub fn costs(&self, policy: &Policy, m: usize, seed: u64) -> Result<Vec<(f64, String)>> {
        let sim = Simulator::new(self.spec, &self.design)?;
        map_paths(m, |p| {
            let noise = self.noise(seed, p);
            let traj = sim.run(&noise, policy, p)?;
            Ok((accumulate_cost(&traj, self.spec), noise_digest(&noise)))
        })
    }
}

pub fn estimate(samples: &[f64], seed: u64) -> CostEstimate {
    let (mean, stderr) = mean_stderr(samples);
    CostEstimate {
        mean,
        stderr,
        paths: samples.len(),
        seed,
    }
}

/// Mean realized cost of `policy` over `m ≥ 2` paths (lower-factor relaxing function).
pub fn mc_cost(
    spec: &ProblemSpec,
    grid: &TimeGrid,
    policy: &Policy,
    m: usize,
    seed: u64,
) -> Result<CostEstimate> {
    if m < 2 {
        return Err(Error::TooFewPaths(m));
    }
    let setup = McSetup::new(spec, grid, FactorVariant::LowerFactor)?;
    let costs: Vec<f64> = setup
        .costs(policy, m, seed)?
        .into_iter()
        .map(|(c, _)| c)
        .collect();
    Ok(estimate(&costs, seed))
}
