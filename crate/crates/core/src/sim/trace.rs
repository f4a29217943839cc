use std::io::Write;

use super::engine::TrajectoryBundle;
use crate::error::Result;
use crate::problem::TimeGrid;

/// Per-node CSV of one path. Vector quantities are expanded into one column per component;
/// step quantities (`zbar`) are blank on the last node.
pub fn write_trace<W: Write>(traj: &TrajectoryBundle, grid: &TimeGrid, out: W) -> Result<()> {
    let (n, m, k) = traj.dims;
    let pd = traj.psi_dim;
    let mut w = csv::Writer::from_writer(out);
    let cols = |name: &str, count: usize| -> Vec<String> {
        if count == 1 {
            vec![name.to_string()]
        } else {
            (0..count).map(|j| format!("{name}_{j}")).collect()
        }
    };
    let mut header = vec!["t".to_string()];
    for (name, count) in [
        ("x", n),
        ("zbar", k),
        ("xhat", n),
        ("u0", m),
        ("u1", m),
        ("psi0", pd),
        ("alpha_hat", n),
    ] {
        header.extend(cols(name, count));
    }
    w.write_record(&header)?;
    let steps = traj.steps();
    for i in 0..=steps {
        let mut row = vec![grid.t(i).to_string()];
        let mut push = |v: &[f64]| row.extend(v.iter().map(|x| x.to_string()));
        push(&traj.x[i * n..(i + 1) * n]);
        if i < steps {
            push(&traj.innovation[i * k..(i + 1) * k]);
        } else {
            row.extend(std::iter::repeat_n(String::new(), k));
        }
        let mut push = |v: &[f64]| row.extend(v.iter().map(|x| x.to_string()));
        push(&traj.xhat[i * n..(i + 1) * n]);
        push(&traj.u0[i * m..(i + 1) * m]);
        push(&traj.u1[i * m..(i + 1) * m]);
        push(&traj.psi0[i * pd..(i + 1) * pd]);
        push(&traj.alpha_hat[i * n..(i + 1) * n]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
