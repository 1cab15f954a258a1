//! Gray-labelled 16-QAM: bits to points, noisy points back to bits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcmimo::waveform::{hard_decision_4pam, qam16_demodulate, qam16_modulate, Constellation16Qam};

fn main() -> rcmimo::Result<()> {
    let constellation = Constellation16Qam::new();
    println!("label  point");
    for (label, p) in constellation.points().iter().enumerate() {
        println!("{label:04b}   {:+}{:+}j", p.re, p.im);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let count = 1000;
    let bits: Vec<u8> = (0..4 * count).map(|_| rng.random_range(0..2)).collect();
    let symbols = qam16_modulate(&bits, count)?;
    let energy = symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / count as f64;
    println!("mean symbol energy {energy:.3}");

    // neighbours differ in exactly one bit, so small noise costs at most one bit per symbol
    let noisy: Vec<_> = symbols.iter().map(|s| s + num_complex::Complex64::new(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2))).collect();
    let back = qam16_demodulate(&noisy)?;
    let bit_errors = bits.iter().zip(&back).filter(|(a, b)| a != b).count();
    let symbol_errors = bits.chunks(4).zip(back.chunks(4)).filter(|(a, b)| a != b).count();
    println!("{symbol_errors} symbol errors, {bit_errors} bit errors");

    for v in [-2.0, -0.3, 0.0, 2.7] {
        println!("slice({v}) = {}", hard_decision_4pam(v)?);
    }
    Ok(())
}
