//! LMMSE and exhaustive ML detection with true and pilot-estimated channels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rcmimo::baselines::{estimate_channel, lmmse_detect, ml_detect, CsiEstimate};
use rcmimo::channel::{add_awgn, forward, sample_channel};
use rcmimo::waveform::{FourierOps, Frame};

fn main() -> rcmimo::Result<()> {
    let (nt, nr, nc) = (2, 2, 64);
    let ops = FourierOps::new(nc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    println!("snr_db  lmmse/perfect  ml/perfect  lmmse/est  ml/est");
    for snr in [0.0, 10.0, 20.0] {
        let mut errors = [0usize; 4];
        let mut total = 0;
        for _ in 0..10 {
            let ch = sample_channel(3, nr, nt, 0.75, &mut rng)?;
            let frame = Frame::random(nt, nc, 6, 10, &mut rng)?;
            let mut yf = Vec::new();
            let mut noise_var = 0.0;
            for x in frame.symbols() {
                let (y, var) = add_awgn(&forward(x, &ch, &ops)?, snr, 10.0 * nt as f64, &mut rng)?;
                noise_var = var;
                yf.push(ops.to_freq(&y));
            }
            let perfect = CsiEstimate::perfect(&ch, &ops, noise_var);
            let estimated = estimate_channel(&yf[..nt], &frame.pilots, noise_var)?;
            for (y, x) in yf[nt..].iter().zip(&frame.data) {
                let dets = [
                    lmmse_detect(y, &perfect)?,
                    ml_detect(y, &perfect)?,
                    lmmse_detect(y, &estimated)?,
                    ml_detect(y, &estimated)?,
                ];
                for (e, d) in errors.iter_mut().zip(&dets) {
                    *e += d.iter().zip(x.iter()).filter(|(a, b)| a != b).count();
                }
                total += x.len();
            }
        }
        let ser: Vec<String> = errors.iter().map(|&e| format!("{:.4}", e as f64 / total as f64)).collect();
        println!("{snr:6}  {}", ser.join("         "));
    }
    Ok(())
}
