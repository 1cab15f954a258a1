//! Oracle checks that tie the fast code paths to their defining formulas.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::{lmmse_detect, ml_detect, CsiEstimate};
use super::SimConfig;
use crate::channel::{forward, freq_domain_channel, propagate, sample_channel, ChannelTaps};
use crate::detector::{solve_posterior_chain, train_bank, DetectorBank};
use crate::realmap::{real_forward, to_real};
use crate::reservoir::{init_reservoir, ReservoirSpec};
use crate::waveform::{ofdm_time_signal, random_qam16, strip_cyclic_prefix, FourierOps, Frame};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Largest deviation between the real-stacked composite model and the complex forward model.
pub fn model_equivalence(instances: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for i in 0..instances {
        let nc = [8, 64][i % 2];
        let l = [1, 4, 12][i % 3];
        let ops = FourierOps::new(nc)?;
        let ch = sample_channel(l, 2, 2, 3.0, &mut rng)?;
        let x = random_qam16(2, nc, &mut rng);
        let a = to_real(&forward(&x, &ch, &ops)?);
        let b = real_forward(&to_real(&x), &ch, &ops)?;
        worst = a.data().iter().zip(b.data().iter()).map(|(p, q)| (p - q).abs()).fold(worst, f64::max);
    }
    Ok(worst)
}

/// Largest deviation between the CP-OFDM time-domain link and `G_j·x_j` per subcarrier.
pub fn diagonalization(channels: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nc, ncp, l) = (64, 16, 12);
    let ops = FourierOps::new(nc)?;
    let mut worst: f64 = 0.0;
    for _ in 0..channels {
        let ch = sample_channel(l, 2, 2, 3.0, &mut rng)?;
        let x = random_qam16(2, nc, &mut rng);
        let rx = strip_cyclic_prefix(&propagate(&ofdm_time_signal(&x, &ops, ncp)?, &ch)?, ncp)?;
        let yf = ops.to_freq(&rx);
        for (j, g) in freq_domain_channel(&ch, &ops).iter().enumerate() {
            let expect = g.dot(&x.column(j));
            for (a, b) in expect.iter().zip(yf.column(j)) {
                worst = worst.max((a - b).norm());
            }
        }
    }
    Ok(worst)
}

/// Worst `|Σp − 1|` over random ratio triples, and whether unit ratios give exactly ¼ each.
pub fn posterior_chain(triples: usize, seed: u64) -> (f64, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..triples {
        // log-uniform over many decades, including the clamped extremes
        let mut r = || 10f64.powf(rng.random_range(-15.0..15.0));
        let q = solve_posterior_chain(r(), r(), r());
        worst = worst.max((q.p.iter().sum::<f64>() - 1.0).abs());
        if q.p.iter().any(|&p| p < 0.0) {
            worst = f64::INFINITY;
        }
    }
    (worst, solve_posterior_chain(1.0, 1.0, 1.0).p == [0.25; 4])
}

/// `‖s_a[T] − s_b[T]‖ / ‖s_a[−1] − s_b[−1]‖` for two random initial states under a common input.
pub fn echo_state_ratio(spec: &ReservoirSpec, steps: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = init_reservoir(spec, &mut rng)?;
    let n = spec.n_neurons;
    let u = Array2::from_shape_simple_fn((spec.in_dim, steps), || rng.random_range(-1.0..1.0));
    let a = Array1::from_shape_simple_fn(n, || rng.random_range(-1.0..1.0));
    let b = Array1::from_shape_simple_fn(n, || rng.random_range(-1.0..1.0));
    let sa = w.run_states_from(u.view(), &a)?;
    let sb = w.run_states_from(u.view(), &b)?;
    let last = steps - 1;
    let end: f64 = (0..n).map(|i| (sa[[i, last]] - sb[[i, last]]).powi(2)).sum::<f64>().sqrt();
    let start: f64 = (&a - &b).mapv(|v| v * v).sum().sqrt();
    Ok(end / start)
}

/// Symbol errors of ML and LMMSE with perfect CSI on noiseless frames of `cfg`'s link.
pub fn noiseless_baselines(cfg: &SimConfig, frames: usize, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ops = FourierOps::new(cfg.nc)?;
    let mut errors = 0;
    for _ in 0..frames {
        let ch = sample_channel(cfg.l, cfg.nr, cfg.nt, cfg.pdp_decay, &mut rng)?;
        let csi = CsiEstimate::perfect(&ch, &ops, 0.0);
        for _ in 0..cfg.nd {
            let x = random_qam16(cfg.nt, cfg.nc, &mut rng);
            let yf = ops.to_freq(&forward(&x, &ch, &ops)?);
            for det in [ml_detect(&yf, &csi)?, lmmse_detect(&yf, &csi)?] {
                errors += det.iter().zip(x.iter()).filter(|(a, b)| a != b).count();
            }
        }
    }
    Ok(errors)
}

/// RC symbol errors and symbol count on noiseless frames through the
/// single-tap identity channel, with `cfg`'s reservoir and training.
pub fn rc_identity_toy(cfg: &SimConfig, frames: usize, seed: u64) -> Result<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ops = FourierOps::new(cfg.nc)?;
    let ch = ChannelTaps::identity(cfg.nt);
    let (mut errors, mut total) = (0, 0);
    for _ in 0..frames {
        let frame = Frame::random(cfg.nt, cfg.nc, cfg.ncp, cfg.nd, &mut rng)?;
        let reservoir = init_reservoir(&cfg.reservoir_spec(), &mut rng)?;
        let mut bank = DetectorBank::new(reservoir, &ch, &ops, cfg.layout())?;
        let rx = frame.symbols().map(|x| Ok(to_real(&forward(x, &ch, &ops)?))).collect::<Result<Vec<_>>>()?;
        let (pilots, data) = rx.split_at(frame.pilots.len());
        train_bank(&mut bank, &frame.pilots, pilots, &ops, &cfg.training_hyper())?;
        for (d, x) in bank.detect_frame(data)?.iter().zip(&frame.data) {
            errors += d.symbols.iter().zip(x.iter()).filter(|(a, b)| a != b).count();
            total += x.len();
        }
    }
    Ok((errors, total))
}

/// Runs every check with fixed seeds.
pub fn run_all() -> Result<Vec<Check>> {
    let eq = model_equivalence(100, 1)?;
    let diag = diagonalization(50, 2)?;
    let (chain, uniform) = posterior_chain(10_000, 3);
    let spec = ReservoirSpec::default();
    let esp = echo_state_ratio(&spec, 500, 4)?;
    let desk = SimConfig::desk();
    let base = noiseless_baselines(&desk, 10, 5)?;
    let toy = SimConfig { nd: 4, ..desk };
    let (rc_err, rc_total) = rc_identity_toy(&toy, 2, 6)?;
    Ok(vec![
        Check { name: "real model equivalence", passed: eq < 1e-10, detail: format!("max abs {eq:.2e}") },
        Check { name: "subcarrier diagonalization", passed: diag < 1e-9, detail: format!("max abs {diag:.2e}") },
        Check {
            name: "posterior chain",
            passed: chain < 1e-12 && uniform,
            detail: format!("sum err {chain:.2e}, uniform {uniform}"),
        },
        Check { name: "echo state property", passed: esp < 1e-3, detail: format!("ratio {esp:.2e}") },
        Check { name: "noiseless baselines", passed: base == 0, detail: format!("{base} symbol errors") },
        Check {
            name: "rc identity toy",
            passed: rc_err == 0,
            detail: format!("{rc_err} of {rc_total} symbols wrong"),
        },
    ])
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all().unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
