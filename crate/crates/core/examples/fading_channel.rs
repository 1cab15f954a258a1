//! Exponential power-delay profile Rayleigh taps and their frequency response.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rcmimo::channel::{exponential_pdp, freq_domain_channel, sample_channel};
use rcmimo::waveform::FourierOps;

fn main() -> rcmimo::Result<()> {
    let (l, decay) = (12, 3.0);
    let pdp = exponential_pdp(l, decay)?;
    println!("pdp: {}", pdp.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(" "));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws = 4000;
    let mut power = vec![0.0; l];
    for _ in 0..draws {
        let ch = sample_channel(l, 2, 2, decay, &mut rng)?;
        for (p, h) in power.iter_mut().zip(ch.taps()) {
            *p += h.iter().map(|v| v.norm_sqr()).sum::<f64>() / 4.0;
        }
    }
    println!("empirical tap power:");
    for (ell, (p, want)) in power.iter().zip(&pdp).enumerate() {
        println!("  tap {ell:2}: {:.4} (profile {want:.4})", p / draws as f64);
    }

    // correlation of G[0,0] between subcarriers k apart; the last case is the
    // 256-subcarrier channel squeezed onto 64 subcarriers
    for (nc, l, decay) in [(64, 12, 3.0), (256, 12, 3.0), (64, 3, 0.75)] {
        let ops = FourierOps::new(nc)?;
        let mut corr = [num_complex::Complex64::new(0.0, 0.0); 4];
        let mut energy = 0.0;
        for _ in 0..200 {
            let g = freq_domain_channel(&sample_channel(l, 2, 2, decay, &mut rng)?, &ops);
            for j in 0..nc {
                energy += g[j][[0, 0]].norm_sqr();
                for (k, c) in corr.iter_mut().enumerate() {
                    *c += g[j][[0, 0]] * g[(j + 2 * k + 1) % nc][[0, 0]].conj();
                }
            }
        }
        let row: Vec<String> = corr.iter().enumerate().map(|(k, c)| format!("{}: {:.2}", 2 * k + 1, c.norm() / energy)).collect();
        println!("nc {nc}, {l} taps: |corr| at offsets {}", row.join(", "));
    }
    Ok(())
}
