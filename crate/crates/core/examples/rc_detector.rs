//! Train the reservoir detector on the two pilot symbols of one frame and
//! detect its data symbols, printing a few 4-PAM posteriors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rcmimo::channel::{add_awgn, forward, sample_channel};
use rcmimo::detector::{train_bank, DetectorBank};
use rcmimo::harness::SimConfig;
use rcmimo::realmap::{to_real, Coord};
use rcmimo::reservoir::init_reservoir;
use rcmimo::waveform::{FourierOps, Frame};

fn main() -> rcmimo::Result<()> {
    let cfg = SimConfig::desk();
    let snr: f64 = std::env::args().nth(1).map(|s| s.parse().expect("snr in dB")).unwrap_or(15.0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ops = FourierOps::new(cfg.nc)?;
    let ch = sample_channel(cfg.l, cfg.nr, cfg.nt, cfg.pdp_decay, &mut rng)?;
    let frame = Frame::random(cfg.nt, cfg.nc, cfg.ncp, 5, &mut rng)?;
    let rx = frame
        .symbols()
        .map(|x| Ok(to_real(&add_awgn(&forward(x, &ch, &ops)?, snr, 10.0 * cfg.nt as f64, &mut rng)?.0)))
        .collect::<rcmimo::Result<Vec<_>>>()?;
    let (pilots, data) = rx.split_at(cfg.q);

    let reservoir = init_reservoir(&cfg.reservoir_spec(), &mut rng)?;
    let mut bank = DetectorBank::new(reservoir, &ch, &ops, cfg.layout())?;
    let report = train_bank(&mut bank, &frame.pilots, pilots, &ops, &cfg.training_hyper())?;
    println!(
        "trained on {} shifted samples, loss {:.3} -> {:.3}",
        report.samples,
        report.losses.first().unwrap_or(&f64::NAN),
        report.losses.last().unwrap_or(&f64::NAN)
    );

    let detections = bank.detect_frame(data)?;
    let mut errors = 0;
    for (d, x) in detections.iter().zip(&frame.data) {
        errors += d.symbols.iter().zip(x.iter()).filter(|(a, b)| a != b).count();
    }
    println!("{errors} of {} symbols wrong at {snr} dB", frame.data.len() * cfg.nt * cfg.nc);

    let first = &detections[0];
    for idx in [0, 1, 2 * cfg.nc + 7] {
        let c = Coord::from_index(idx, cfg.nt, cfg.nc);
        let sent = c.part.of(frame.data[0][[c.ntx, c.nsc]]);
        let p = first.posteriors[idx].p.map(|v| format!("{v:.3}"));
        println!("{c:?}: sent {sent:+}, P(-3,-1,+1,+3) = [{}]", p.join(", "));
    }
    Ok(())
}
