//! Write every design table of a preset as CSV with a checksummed manifest.
//!
//! `cargo run --example export_tables -- out_dir`

use acausal_lqg::experiments::Scenario;
use acausal_lqg::io::{verify_manifest, write_design, Artifacts};
use acausal_lqg::kernels::{derive_noise_stats, KernelOptions};
use acausal_lqg::noise::ProblemKernels;
use acausal_lqg::sim::design_with;

fn main() -> acausal_lqg::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "tables".into());
    let sc = Scenario::preset("case1-default", Some(100), None)?;
    let d = design_with(&sc.spec, &sc.grid, KernelOptions { store_full: true })?;
    let kernels = ProblemKernels::new(&sc.spec, &sc.grid);
    let stats = derive_noise_stats(&d.filter, &kernels, sc.spec.c());
    let mut art = Artifacts::create(&dir)?;
    write_design(&mut art, &d, Some(&stats), &kernels, true)?;
    let manifest = art.finish()?;
    for e in &manifest.files {
        println!("{:<20} {:>10} bytes  {}", e.file, e.bytes, &e.sha256[..16]);
    }
    println!(
        "checksum mismatches: {}",
        verify_manifest(dir.as_ref())?.len()
    );
    Ok(())
}
