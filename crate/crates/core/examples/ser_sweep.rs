//! A short SER-vs-SNR sweep of all three detectors, written as CSV to stdout.

use rcmimo::harness::{sweep_with, write_results_to, SimConfig};

fn main() -> rcmimo::Result<()> {
    let cfg = SimConfig { snr_grid_db: vec![5.0, 15.0], frames_per_point: 3, nd: 5, ..SimConfig::desk() };
    let outcome = sweep_with(&cfg, |snr, frame, r| {
        eprintln!("snr index {snr}, frame {frame}: {:?}", r.counts.iter().map(|c| c.errors).collect::<Vec<_>>());
    })?;
    write_results_to(&outcome.records, std::io::stdout().lock())
}
