use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::factor::RelaxingFunction;
use crate::error::{Error, Result};
use crate::linalg::{matvec_acc, MatTable};
use crate::problem::TimeGrid;

/// Independent random streams of one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    InitialState = 0,
    BnDriver = 1,
    Observation = 2,
}

/// Generator for stream `stream` of path `path`; pure in `(seed, path, stream)`.
pub fn path_rng(seed: u64, path: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path.wrapping_mul(4).wrapping_add(stream as u64));
    rng
}

pub fn standard_normals(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    (0..count)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Wiener increments on the refined grid: `ρN` rows of `dim` independent `N(0, dt/ρ)` entries.
pub fn master_increments(rng: &mut ChaCha8Rng, grid: &TimeGrid, dim: usize) -> Vec<f64> {
    let sd = (grid.dt / grid.rho as f64).sqrt();
    let mut w = standard_normals(rng, grid.n * grid.rho * dim);
    w.iter_mut().for_each(|v| *v *= sd);
    w
}

/// Sum the refined increments into the `N` grid cells.
pub fn cell_increments(master: &[f64], grid: &TimeGrid, dim: usize) -> Vec<f64> {
    let mut cells = vec![0.0; grid.n * dim];
    for (j, cell) in cells.chunks_mut(dim).enumerate() {
        for sub in 0..grid.rho {
            let row = &master[(j * grid.rho + sub) * dim..][..dim];
            cell.iter_mut().zip(row).for_each(|(c, w)| *c += w);
        }
    }
    cells
}

/// `Σ_{m ≥ m_start} Φ[target][m]·ΔW_cell(target, m)` into `out`; the single summation path behind
/// both `φ` and the family `ϕ̃`.
#[inline]
fn partial_sum(
    phi: &RelaxingFunction,
    cells: &[f64],
    target: usize,
    m_start: usize,
    out: &mut [f64],
) {
    let (dim, dim_w) = phi.shape();
    out.iter_mut().for_each(|v| *v = 0.0);
    for m in m_start..phi.lag_steps() {
        if let Some(c) = phi.cell(target, m) {
            matvec_acc(
                out,
                phi.values.block(target, m),
                dim,
                dim_w,
                &cells[(c - 1) * dim_w..c * dim_w],
                1.0,
            );
        }
    }
}

/// BN path `φ_0..φ_N` (row-major, `φ_0 = 0`) from cell increments.
pub fn bn_path(phi: &RelaxingFunction, cells: &[f64]) -> Vec<f64> {
    let (dim, _) = phi.shape();
    let n = phi.steps();
    let mut out = vec![0.0; (n + 1) * dim];
    for i in 1..=n {
        partial_sum(phi, cells, i, 0, &mut out[i * dim..(i + 1) * dim]);
    }
    out
}

/// Family `ϕ̃[i][l]`: the part of `φ_{i+l}` driven by cells up to `i`; zero once `i + l > N`.
pub fn bn_family(phi: &RelaxingFunction, cells: &[f64]) -> Result<MatTable> {
    if !phi.variant.is_causal() {
        return Err(Error::Unsupported(
            "the BN family needs a causal relaxing function".into(),
        ));
    }
    let (dim, _) = phi.shape();
    let (n, lags) = (phi.steps(), phi.lag_steps());
    let mut fam = MatTable::zeros(n + 1, lags + 1, dim, 1);
    for i in 1..=n {
        for l in 0..=lags.min(n - i) {
            partial_sum(phi, cells, i + l, l, fam.block_mut(i, l));
        }
    }
    Ok(fam)
}

/// One sampled realization of the BN machinery.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePathBundle {
    pub seed: u64,
    pub path: u64,
    /// Refined driver increments, `ρN × dim_w`.
    pub master_w: Vec<f64>,
    /// `φ_0..φ_N`, `(N+1) × dim`.
    pub phi: Vec<f64>,
    /// `ϕ̃[i][l]` as `dim × 1` blocks; present for causal factors.
    pub family: Option<MatTable>,
}

/// Sample path `path` of the BN with relaxing function `phi`.
pub fn generate_bn_path(
    phi: &RelaxingFunction,
    grid: &TimeGrid,
    seed: u64,
    path: u64,
    with_family: bool,
) -> Result<NoisePathBundle> {
    if phi.steps() != grid.n || phi.lag_steps() != grid.lag_steps {
        return Err(Error::DimensionMismatch(
            "relaxing function and grid disagree".into(),
        ));
    }
    let (_, dim_w) = phi.shape();
    let mut rng = path_rng(seed, path, Stream::BnDriver);
    let master_w = master_increments(&mut rng, grid, dim_w);
    let cells = cell_increments(&master_w, grid, dim_w);
    let phi_path = bn_path(phi, &cells);
    let family = if with_family && phi.variant.is_causal() {
        Some(bn_family(phi, &cells)?)
    } else {
        None
    };
    Ok(NoisePathBundle {
        seed,
        path,
        master_w,
        phi: phi_path,
        family,
    })
}

/// First path of the seeded ensemble, with its family when defined.
pub fn generate_bn(phi: &RelaxingFunction, grid: &TimeGrid, seed: u64) -> Result<NoisePathBundle> {
    generate_bn_path(phi, grid, seed, 0, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::factor::{factor_covariance, FactorVariant};
    use crate::noise::kernel::tests::grid;
    use crate::noise::kernel::{CovarianceKernel, KernelKind};
    use crate::problem::KernelShape;
    use nalgebra::DMatrix;

    fn tri_phi(n: usize, variant: FactorVariant) -> (TimeGrid, RelaxingFunction) {
        let g = grid(n, 0.25);
        let k = CovarianceKernel::from_shape(
            &KernelShape::Triangular(DMatrix::from_element(1, 1, 4.0)),
            &g,
            1,
            1,
            KernelKind::Auto,
        );
        let phi = factor_covariance(&k, &g, variant).unwrap();
        (g, phi)
    }

    #[test]
    fn zero_factor_gives_zero_paths() {
        let g = grid(40, 0.25);
        let phi = RelaxingFunction::zero(&g, 1, 1, FactorVariant::LowerFactor);
        let b = generate_bn(&phi, &g, 3).unwrap();
        assert!(b.phi.iter().all(|v| *v == 0.0));
        assert_eq!(b.family.unwrap().max_abs(), 0.0);
    }

    #[test]
    fn family_boundaries_and_diagonal() {
        let (g, phi) = tri_phi(40, FactorVariant::LowerFactor);
        let b = generate_bn(&phi, &g, 11).unwrap();
        let fam = b.family.unwrap();
        for i in 0..=g.n {
            assert_eq!(fam.block(i, 0)[0].to_bits(), b.phi[i].to_bits());
            assert_eq!(fam.block(i, g.lag_steps)[0], 0.0);
        }
        for l in 0..=g.lag_steps {
            assert_eq!(fam.block(0, l)[0], 0.0);
        }
    }

    #[test]
    fn seeding_is_deterministic_and_path_dependent() {
        let (g, phi) = tri_phi(40, FactorVariant::LowerFactor);
        let a = generate_bn_path(&phi, &g, 5, 2, true).unwrap();
        let b = generate_bn_path(&phi, &g, 5, 2, true).unwrap();
        let c = generate_bn_path(&phi, &g, 5, 3, true).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.phi, c.phi);
    }

    #[test]
    fn upper_factor_has_no_family() {
        let (g, phi) = tri_phi(40, FactorVariant::UpperFactor);
        let b = generate_bn(&phi, &g, 1).unwrap();
        assert!(b.family.is_none());
        assert!(bn_family(&phi, &vec![0.0; g.n]).is_err());
    }

    #[test]
    fn refined_cells_sum() {
        let mut g = grid(10, 0.25);
        g.rho = 4;
        let master: Vec<f64> = (0..40).map(|v| v as f64).collect();
        let cells = cell_increments(&master, &g, 1);
        assert_eq!(cells[0], 0.0 + 1.0 + 2.0 + 3.0);
        assert_eq!(cells.len(), 10);
    }
}
