//! The real-valued composite model and the shift vectors of single coordinates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rcmimo::channel::{forward, sample_channel};
use rcmimo::realmap::{elementary, real_forward, shift_vector, to_real, Coord, Part};
use rcmimo::waveform::{random_qam16, FourierOps};

fn main() -> rcmimo::Result<()> {
    let (nt, nc) = (2, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ops = FourierOps::new(nc)?;
    let ch = sample_channel(3, 2, nt, 0.75, &mut rng)?;
    let x = random_qam16(nt, nc, &mut rng);

    let complex = to_real(&forward(&x, &ch, &ops)?);
    let real = real_forward(&to_real(&x), &ch, &ops)?;
    let gap = complex.data().iter().zip(real.data().iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("real model vs complex model: max abs {gap:.2e}");

    // moving one coordinate by +2 moves the received block by exactly 2·S
    let key = Coord::new(1, 4, Part::Im);
    let s = shift_vector(&ch, &ops, key.ntx, key.nsc, key.part)?;
    let mut moved = x.clone();
    moved[[1, 4]].im += 2.0;
    let y_moved = to_real(&forward(&moved, &ch, &ops)?);
    let predicted = complex.axpy(2.0, &s.s);
    let gap = y_moved.data().iter().zip(predicted.data().iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("Y(x + 2e) vs Y(x) + 2S: max abs {gap:.2e}");

    let direct = to_real(&forward(&elementary(nt, nc, key), &ch, &ops)?);
    let gap = direct.data().iter().zip(s.s.data().iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("S vs response to the elementary block: max abs {gap:.2e}");
    println!("coordinate {key:?} has flat index {}", key.index(nt, nc));
    Ok(())
}
