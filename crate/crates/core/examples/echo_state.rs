//! Fading memory of the windowed reservoir: two runs from different initial
//! states under the same input forget where they started.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcmimo::linalg::spectral_radius;
use rcmimo::reservoir::{init_reservoir, ReservoirSpec};

fn main() -> rcmimo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for rho in [0.5, 0.9, 0.99] {
        let spec = ReservoirSpec { spectral_radius: rho, ..Default::default() };
        let w = init_reservoir(&spec, &mut rng)?;
        let n = spec.n_neurons;
        let steps = 500;
        let u = Array2::from_shape_simple_fn((spec.in_dim, steps), || rng.random_range(-1.0..1.0));
        let a = Array1::from_shape_simple_fn(n, || rng.random_range(-1.0..1.0));
        let b = Array1::from_shape_simple_fn(n, || rng.random_range(-1.0..1.0));
        let sa = w.run_states_from(u.view(), &a)?;
        let sb = w.run_states_from(u.view(), &b)?;
        let start = (&a - &b).mapv(|v| v * v).sum().sqrt();
        let at = |t: usize| (0..n).map(|i| (sa[[i, t]] - sb[[i, t]]).powi(2)).sum::<f64>().sqrt() / start;
        println!(
            "rho {rho} (measured {:.3}): distance ratio after 10 {:.2e}, 100 {:.2e}, 499 {:.2e}",
            spectral_radius(w.w_res()),
            at(10),
            at(100),
            at(steps - 1)
        );
    }
    Ok(())
}
