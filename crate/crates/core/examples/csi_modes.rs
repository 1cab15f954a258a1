//! Perfect versus pilot-estimated channel knowledge for every detector on
//! the same frames.

use rcmimo::baselines::CsiSource;
use rcmimo::harness::{frame_seed, run_frame, SimConfig};

fn main() -> rcmimo::Result<()> {
    let snr = 5.0;
    for mode in [CsiSource::Perfect, CsiSource::Estimated] {
        let cfg = SimConfig { csi_mode: mode, nd: 5, ..SimConfig::desk() };
        let mut tallies = vec![(0usize, 0usize); cfg.detectors.len()];
        for f in 0..4 {
            let r = run_frame(&cfg, snr, frame_seed(cfg.master_seed, 0, f))?;
            for (t, c) in tallies.iter_mut().zip(&r.counts) {
                t.0 += c.errors;
                t.1 += c.total;
            }
        }
        let line: Vec<String> = cfg
            .detectors
            .iter()
            .zip(&tallies)
            .map(|(d, (e, n))| format!("{d} {:.4}", *e as f64 / *n as f64))
            .collect();
        println!("{mode} csi at {snr} dB: {}", line.join(", "));
    }
    Ok(())
}
