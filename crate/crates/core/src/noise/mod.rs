//! Wide-band and delayed noise: kernels on the grid, relaxing functions and seeded sample paths.

mod delayed;
mod factor;
mod kernel;
mod paths;

pub use delayed::{generate_delayed_wn, grid_schedule, DelayWeights};
pub use factor::{
    factor_covariance, smooth_obs_factor, FactorVariant, RelaxingFunction, SmoothedFactor, Window,
};
pub use kernel::{CovarianceKernel, KernelKind};
pub use paths::{
    bn_family, bn_path, cell_increments, generate_bn, generate_bn_path, master_increments,
    path_rng, standard_normals, NoisePathBundle, Stream,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::psd_sqrt;
use crate::problem::{KernelShape, NoiseModel, ProblemSpec, TimeGrid};

/// Grid kernels of a problem: `Λ` (Case 1) or `Λ¹¹, Λ²², Λ¹²` (Case 2).
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKernels {
    Case1 {
        lambda: CovarianceKernel,
    },
    Case2 {
        lambda11: CovarianceKernel,
        lambda22: CovarianceKernel,
        lambda12: CovarianceKernel,
    },
    Case3,
}

impl ProblemKernels {
    pub fn new(spec: &ProblemSpec, grid: &TimeGrid) -> Self {
        let (n, _, k) = spec.dims();
        match spec.noise() {
            NoiseModel::Case1 { lambda, .. } => ProblemKernels::Case1 {
                lambda: CovarianceKernel::from_shape(lambda, grid, n, n, KernelKind::Auto),
            },
            NoiseModel::Case2 {
                lambda11,
                lambda22,
                lambda12,
                ..
            } => ProblemKernels::Case2 {
                lambda11: CovarianceKernel::from_shape(lambda11, grid, n, n, KernelKind::Auto),
                lambda22: CovarianceKernel::from_shape(lambda22, grid, k, k, KernelKind::Auto),
                lambda12: CovarianceKernel::from_shape(lambda12, grid, n, k, KernelKind::Cross),
            },
            NoiseModel::Case3 { .. } => ProblemKernels::Case3,
        }
    }

    /// The kernel that must be factored to sample the BN (stacked in Case 2).
    pub fn sampling_kernel(&self) -> Result<Option<CovarianceKernel>> {
        Ok(match self {
            ProblemKernels::Case1 { lambda } => Some(lambda.clone()),
            ProblemKernels::Case2 {
                lambda11,
                lambda22,
                lambda12,
            } => Some(CovarianceKernel::stacked(lambda11, lambda22, lambda12)?),
            ProblemKernels::Case3 => None,
        })
    }
}

/// Everything needed to draw the noises of one closed-loop path.
#[derive(Debug, Clone)]
pub enum NoiseSampler {
    /// BN `φ` (Case 1: state only; Case 2: `[φ¹; φ²]`) plus white observation noise.
    Wideband {
        phi: RelaxingFunction,
        state_dim: usize,
        obs_dim: usize,
        stacked: bool,
    },
    /// Delayed copy of the observation noise.
    Delayed {
        d: DMatrix<f64>,
        weights: DelayWeights,
        obs_dim: usize,
    },
}

/// Noises of one path, aligned with the steps `0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathNoise {
    /// Standard normals for the initial state.
    pub xi: Vec<f64>,
    /// State-noise integral over each step, `N × n`.
    pub state_incr: Vec<f64>,
    /// Observation-noise integral over each step, `N × k`.
    pub obs_incr: Vec<f64>,
    /// White component of the observation noise, `N × k`.
    pub obs_white: Vec<f64>,
}

impl NoiseSampler {
    /// Choose Φ by `variant` (Cases 1–2); Case 3 ignores it.
    pub fn new(spec: &ProblemSpec, grid: &TimeGrid, variant: FactorVariant) -> Result<Self> {
        let (n, _, k) = spec.dims();
        match spec.noise() {
            NoiseModel::Case3 { d, schedule } => {
                let weights = DelayWeights::new(&grid_schedule(schedule, grid), grid)?;
                Ok(NoiseSampler::Delayed {
                    d: d.clone(),
                    weights,
                    obs_dim: k,
                })
            }
            model => {
                let stacked = matches!(model, NoiseModel::Case2 { .. });
                let phi = match variant {
                    FactorVariant::Analytic => analytic_factor(model, grid, n, k)?,
                    v => {
                        let kernel = ProblemKernels::new(spec, grid)
                            .sampling_kernel()?
                            .expect("wide-band model");
                        factor_covariance(&kernel, grid, v)?
                    }
                };
                Ok(NoiseSampler::Wideband {
                    phi,
                    state_dim: n,
                    obs_dim: k,
                    stacked,
                })
            }
        }
    }

    pub fn sample(&self, seed: u64, path: u64, grid: &TimeGrid, xi_dim: usize) -> PathNoise {
        let mut rng = path_rng(seed, path, Stream::InitialState);
        let xi = standard_normals(&mut rng, xi_dim);
        let n_steps = grid.n;
        match self {
            NoiseSampler::Wideband {
                phi,
                state_dim,
                obs_dim,
                stacked,
            } => {
                let (dim, dim_w) = phi.shape();
                let mut rng = path_rng(seed, path, Stream::BnDriver);
                let cells = cell_increments(&master_increments(&mut rng, grid, dim_w), grid, dim_w);
                let bn = bn_path(phi, &cells);
                let mut rng = path_rng(seed, path, Stream::Observation);
                let obs_white =
                    cell_increments(&master_increments(&mut rng, grid, *obs_dim), grid, *obs_dim);
                let mut state_incr = vec![0.0; n_steps * state_dim];
                let mut obs_incr = obs_white.clone();
                for i in 0..n_steps {
                    let row = &bn[i * dim..(i + 1) * dim];
                    for a in 0..*state_dim {
                        state_incr[i * state_dim + a] = row[a] * grid.dt;
                    }
                    if *stacked {
                        for b in 0..*obs_dim {
                            obs_incr[i * obs_dim + b] += row[state_dim + b] * grid.dt;
                        }
                    }
                }
                PathNoise {
                    xi,
                    state_incr,
                    obs_incr,
                    obs_white,
                }
            }
            NoiseSampler::Delayed {
                d,
                weights,
                obs_dim,
            } => {
                let mut rng = path_rng(seed, path, Stream::Observation);
                let cells =
                    cell_increments(&master_increments(&mut rng, grid, *obs_dim), grid, *obs_dim);
                let state_incr = weights.plant_increments(d, &cells);
                PathNoise {
                    xi,
                    state_incr,
                    obs_incr: cells.clone(),
                    obs_white: cells,
                }
            }
        }
    }
}

/// Constant Φ = √S on `[−ε, 0]` for triangular (or zero) kernels.
fn analytic_factor(
    model: &NoiseModel,
    grid: &TimeGrid,
    n: usize,
    k: usize,
) -> Result<RelaxingFunction> {
    let scale = |shape: &KernelShape, r: usize, c: usize| match shape {
        KernelShape::Zero => Ok(DMatrix::zeros(r, c)),
        KernelShape::Triangular(s) => Ok(s.clone()),
        KernelShape::Tabulated(_) => Err(Error::Unsupported(
            "no closed-form relaxing function for a tabulated kernel".into(),
        )),
    };
    let s = match model {
        NoiseModel::Case1 { lambda, .. } => scale(lambda, n, n)?,
        NoiseModel::Case2 {
            lambda11,
            lambda22,
            lambda12,
            ..
        } => {
            let mut s = DMatrix::zeros(n + k, n + k);
            s.view_mut((0, 0), (n, n))
                .copy_from(&scale(lambda11, n, n)?);
            s.view_mut((n, n), (k, k))
                .copy_from(&scale(lambda22, k, k)?);
            let s12 = scale(lambda12, n, k)?;
            s.view_mut((0, n), (n, k)).copy_from(&s12);
            s.view_mut((n, 0), (k, n)).copy_from(&s12.transpose());
            s
        }
        NoiseModel::Case3 { .. } => unreachable!(),
    };
    let root = psd_sqrt(&s);
    let d = root.nrows();
    Ok(RelaxingFunction::analytic(grid, d, d, |_, _| root.clone()))
}
