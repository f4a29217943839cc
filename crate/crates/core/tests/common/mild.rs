//! Scalar mild solutions of the filter kernel equations by Picard iteration of their integral
//! form along characteristics, with trapezoid quadrature in time.
//!
//! Tables are indexed `[i][l]`: node `t_i`, lag `θ = −l·dt`. The characteristic through
//! `(t_i, −l·dt)` passes `(t_j, −(l + i − j)·dt)`.

use acausal_lqg::problem::{NoiseModel, ProblemSpec, TimeGrid};

pub type Table = Vec<Vec<f64>>;

#[derive(Debug, Clone)]
pub struct Mild {
    pub p: Vec<f64>,
    pub q: Table,
    /// `R(t, θ, 0)`
    pub r0: Table,
    pub m: Option<Table>,
    pub n0: Option<Table>,
    pub s0: Option<Table>,
    /// `S(t, 0, α)`
    pub s_row0: Option<Table>,
    pub sweeps: usize,
}

const TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 400;

fn zeros(n: usize, lags: usize) -> Table {
    vec![vec![0.0; lags + 1]; n + 1]
}

fn max_change(a: &Table, b: &Table) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `∫_{t_{j0}}^{t_i} f(s)` by the trapezoid rule on the nodes `j0..=i`.
fn trap(j0: usize, i: usize, dt: f64, f: impl Fn(usize) -> f64) -> f64 {
    if j0 >= i {
        return 0.0;
    }
    let inner: f64 = (j0 + 1..i).map(&f).sum();
    dt * (inner + 0.5 * (f(j0) + f(i)))
}

/// First node on the characteristic through `(i, l)` that stays inside the lag window.
fn start(i: usize, l: usize, lags: usize) -> usize {
    i.saturating_sub(lags - l)
}

struct Coeffs {
    a: f64,
    c: f64,
    p0: f64,
}

fn coeffs(spec: &ProblemSpec) -> Coeffs {
    assert_eq!(spec.dims(), (1, 1, 1), "the mild oracle is scalar");
    Coeffs {
        a: spec.a()[(0, 0)],
        c: spec.c()[(0, 0)],
        p0: spec.initial_cov()[(0, 0)],
    }
}

fn kernel_table(shape: &acausal_lqg::problem::KernelShape, grid: &TimeGrid) -> Table {
    let mut out = zeros(grid.n, grid.lag_steps);
    for (i, row) in out.iter_mut().enumerate() {
        for (l, v) in row.iter_mut().enumerate() {
            *v = shape.eval(grid.t(i), l as f64 * grid.dt, grid.eps, 1, 1)[(0, 0)];
        }
    }
    out
}

/// State-noise kernel only.
pub fn case1(spec: &ProblemSpec, grid: &TimeGrid) -> Mild {
    let NoiseModel::Case1 { lambda, .. } = spec.noise() else {
        panic!("case 1 expected")
    };
    let k = coeffs(spec);
    let lam = kernel_table(lambda, grid);
    let (n, lags, dt) = (grid.n, grid.lag_steps, grid.dt);
    let (mut p, mut q, mut r0) = (vec![k.p0; n + 1], zeros(n, lags), zeros(n, lags));
    for sweep in 1..=MAX_SWEEPS {
        let src =
            |j: usize, c: usize| q[j][c] * k.a + lam[j][c] - r0[j][c] - q[j][c] * k.c * k.c * p[j];
        let mut q_new = zeros(n, lags);
        let mut r_new = zeros(n, lags);
        let mut p_new = vec![k.p0; n + 1];
        for i in 0..=n {
            for l in 0..=lags {
                let j0 = start(i, l, lags);
                q_new[i][l] = trap(j0, i, dt, |j| src(j, l + i - j));
                r_new[i][l] = trap(j0, i, dt, |j| q[j][l + i - j] * k.c * k.c * q[j][i - j]);
            }
            p_new[i] = k.p0
                + trap(0, i, dt, |j| {
                    2.0 * k.a * p[j] + 2.0 * q[j][0] - (k.c * p[j]).powi(2)
                });
        }
        let change = max_change(&q_new, &q).max(max_change(&r_new, &r0));
        let change = change.max(
            p_new
                .iter()
                .zip(&p)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        );
        (p, q, r0) = (p_new, q_new, r_new);
        if change < TOL {
            return Mild {
                p,
                q,
                r0,
                m: None,
                n0: None,
                s0: None,
                s_row0: None,
                sweeps: sweep,
            };
        }
    }
    panic!("Picard iteration did not converge");
}

/// State and observation noise kernels with cross-correlation.
pub fn case2(spec: &ProblemSpec, grid: &TimeGrid) -> Mild {
    let NoiseModel::Case2 {
        lambda11,
        lambda22,
        lambda12,
        ..
    } = spec.noise()
    else {
        panic!("case 2 expected")
    };
    let k = coeffs(spec);
    let (l11, l22, l12) = (
        kernel_table(lambda11, grid),
        kernel_table(lambda22, grid),
        kernel_table(lambda12, grid),
    );
    let (n, lags, dt) = (grid.n, grid.lag_steps, grid.dt);
    let mut p = vec![k.p0; n + 1];
    let (mut q, mut m, mut r0, mut n0, mut s0, mut sr) = (
        zeros(n, lags),
        zeros(n, lags),
        zeros(n, lags),
        zeros(n, lags),
        zeros(n, lags),
        zeros(n, lags),
    );
    for sweep in 1..=MAX_SWEEPS {
        let x = |j: usize, c: usize| q[j][c] * k.c + l12[j][c] - s0[j][c];
        let y = |j: usize, c: usize| m[j][c] * k.c + l22[j][c] - n0[j][c];
        let gain = |j: usize| k.c * p[j] + m[j][0];
        let q_src = |j: usize, c: usize| q[j][c] * k.a + l11[j][c] - r0[j][c] - x(j, c) * gain(j);
        let m_src = |j: usize, c: usize| m[j][c] * k.a + l12[j][c] - sr[j][c] - y(j, c) * gain(j);
        let mut next = [
            zeros(n, lags),
            zeros(n, lags),
            zeros(n, lags),
            zeros(n, lags),
            zeros(n, lags),
            zeros(n, lags),
        ];
        let mut p_new = vec![k.p0; n + 1];
        for i in 0..=n {
            for l in 0..=lags {
                let j0 = start(i, l, lags);
                next[0][i][l] = trap(j0, i, dt, |j| q_src(j, l + i - j));
                next[1][i][l] = trap(j0, i, dt, |j| m_src(j, l + i - j));
                next[2][i][l] = trap(j0, i, dt, |j| x(j, l + i - j) * x(j, i - j));
                next[3][i][l] = trap(j0, i, dt, |j| y(j, l + i - j) * y(j, i - j));
                next[4][i][l] = trap(j0, i, dt, |j| x(j, l + i - j) * y(j, i - j));
                next[5][i][l] = trap(j0, i, dt, |j| x(j, i - j) * y(j, l + i - j));
            }
            p_new[i] = k.p0
                + trap(0, i, dt, |j| {
                    2.0 * k.a * p[j] + 2.0 * q[j][0] - gain(j).powi(2)
                });
        }
        let olds = [&q, &m, &r0, &n0, &s0, &sr];
        let mut change = p_new
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        for (new, old) in next.iter().zip(olds) {
            change = change.max(max_change(new, old));
        }
        let [q1, m1, r1, n1, s1, sr1] = next;
        (p, q, m, r0, n0, s0, sr) = (p_new, q1, m1, r1, n1, s1, sr1);
        if change < TOL {
            return Mild {
                p,
                q,
                r0,
                m: Some(m),
                n0: Some(n0),
                s0: Some(s0),
                s_row0: Some(sr),
                sweeps: sweep,
            };
        }
    }
    panic!("Picard iteration did not converge");
}

/// Constant-lag delayed observation noise: `λ_t = t − ε` with `ε = L·dt`, so every boundary
/// crossing `λ_{t−θ}` falls on a node.
pub fn case3_constant_lag(spec: &ProblemSpec, grid: &TimeGrid) -> Mild {
    let NoiseModel::Case3 { d, .. } = spec.noise() else {
        panic!("case 3 expected")
    };
    let d = d[(0, 0)];
    let k = coeffs(spec);
    let (n, lags, dt) = (grid.n, grid.lag_steps, grid.dt);
    let (mut p, mut q, mut r0) = (vec![k.p0; n + 1], zeros(n, lags), zeros(n, lags));
    // boundary crossing of the characteristic through (i, l); None when it starts at t = 0
    let crossing = |i: usize, l: usize| (i + l).checked_sub(lags);
    for sweep in 1..=MAX_SWEEPS {
        let src = |j: usize, c: usize| q[j][c] * k.a - r0[j][c] - q[j][c] * k.c * k.c * p[j];
        let mut q_new = zeros(n, lags);
        let mut r_new = zeros(n, lags);
        let mut p_new = vec![k.p0; n + 1];
        for i in 0..=n {
            for l in 0..=lags {
                let (j0, q_b, r_b) = match crossing(i, l) {
                    Some(j0) => (j0, -d * k.c * p[j0], d * k.c * q[j0][i - j0]),
                    None => (0, 0.0, 0.0),
                };
                q_new[i][l] = q_b + trap(j0, i, dt, |j| src(j, l + i - j));
                r_new[i][l] = r_b + trap(j0, i, dt, |j| q[j][l + i - j] * k.c * k.c * q[j][i - j]);
            }
            p_new[i] = k.p0
                + trap(0, i, dt, |j| {
                    2.0 * k.a * p[j] + 2.0 * q[j][0] - (k.c * p[j]).powi(2)
                });
        }
        let change = max_change(&q_new, &q).max(max_change(&r_new, &r0));
        let change = change.max(
            p_new
                .iter()
                .zip(&p)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        );
        (p, q, r0) = (p_new, q_new, r_new);
        if change < TOL {
            return Mild {
                p,
                q,
                r0,
                m: None,
                n0: None,
                s0: None,
                s_row0: None,
                sweeps: sweep,
            };
        }
    }
    panic!("Picard iteration did not converge");
}

/// `max |table[i][l] − oracle[i][l]|` over the grid.
pub fn sup_error(table: &acausal_lqg::linalg::MatTable, oracle: &Table) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in oracle.iter().enumerate() {
        for (l, v) in row.iter().enumerate() {
            worst = worst.max((table.view(i, l)[(0, 0)] - v).abs());
        }
    }
    worst
}

/// Sup errors of every transport table against the oracle for a scalar preset, one entry per
/// table, each listing the errors for `steps` in order.
pub fn preset_errors(name: &str, steps: &[usize]) -> Vec<(&'static str, Vec<f64>)> {
    use acausal_lqg::kernels::{solve_filter, KernelOptions};
    use acausal_lqg::problem::{make_grid, scenario_preset};

    let (spec, _) = scenario_preset(name).expect("preset");
    let mut out: Vec<(&'static str, Vec<f64>)> = Vec::new();
    let mut push = |label: &'static str, e: f64| match out.iter_mut().find(|(l, _)| *l == label) {
        Some((_, v)) => v.push(e),
        None => out.push((label, vec![e])),
    };
    for &n in steps {
        let grid = make_grid(&spec, n, 1).expect("grid");
        let oracle = match spec.noise() {
            NoiseModel::Case1 { .. } => case1(&spec, &grid),
            NoiseModel::Case2 { .. } => case2(&spec, &grid),
            NoiseModel::Case3 { .. } => case3_constant_lag(&spec, &grid),
        };
        let f = solve_filter(&spec, &grid, KernelOptions::default()).expect("filter");
        let ep =
            f.p.p
                .iter()
                .zip(&oracle.p)
                .map(|(a, b)| (a[(0, 0)] - b).abs())
                .fold(0.0, f64::max);
        push("P", ep);
        push("Q", sup_error(&f.kernels.q, &oracle.q));
        push("R0", sup_error(&f.corr.r0, &oracle.r0));
        if let Some(m) = &oracle.m {
            push("M", sup_error(f.kernels.m.as_ref().unwrap(), m));
            push(
                "N0",
                sup_error(f.corr.n0.as_ref().unwrap(), oracle.n0.as_ref().unwrap()),
            );
            push(
                "S0",
                sup_error(f.corr.s0.as_ref().unwrap(), oracle.s0.as_ref().unwrap()),
            );
            push(
                "S_row0",
                sup_error(
                    f.corr.s_row0.as_ref().unwrap(),
                    oracle.s_row0.as_ref().unwrap(),
                ),
            );
        }
    }
    out
}
