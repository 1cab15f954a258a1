//! Block-fading multipath MIMO channel, the circulant forward model and AWGN.
//!
//! The received block of one OFDM symbol with the cyclic prefix removed is
//! `Y = Σ_ℓ H[ℓ]·X·F·J_ℓ + N`, where `J_ℓ` delays the time index by ℓ
//! samples cyclically. Multiplying by `Fᴴ` diagonalizes every `J_ℓ`, so each
//! subcarrier `j` sees the flat channel `G_j = Σ_ℓ exp(−2πi·jℓ/Nc)·H[ℓ]`.

use ndarray::{s, Array2, Axis};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use crate::waveform::FourierOps;
use crate::{ComplexMat, Error, Result};

/// Multipath taps `H[0..L]`, each `Nr × Nt`, with the power-delay profile used to draw them.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTaps {
    taps: Vec<ComplexMat>,
    pdp: Vec<f64>,
}

impl ChannelTaps {
    pub fn new(taps: Vec<ComplexMat>, pdp: Vec<f64>) -> Result<Self> {
        let first = taps
            .first()
            .ok_or_else(|| Error::Config("channel needs at least one tap".into()))?;
        let dim = first.dim();
        if taps.iter().any(|t| t.dim() != dim) {
            return Err(Error::Shape("all taps must share the Nr × Nt shape".into()));
        }
        if pdp.len() != taps.len() || pdp.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::Config("power-delay profile must be L nonnegative powers".into()));
        }
        Ok(Self { taps, pdp })
    }

    /// Taps without a stated profile, such as channel estimates. The
    /// profile is the normalized empirical tap energy.
    pub fn from_taps(taps: Vec<ComplexMat>) -> Result<Self> {
        let energy: Vec<f64> = taps.iter().map(|t| t.iter().map(|z| z.norm_sqr()).sum()).collect();
        let total: f64 = energy.iter().sum();
        let pdp = if total > 0.0 {
            energy.iter().map(|e| e / total).collect()
        } else {
            vec![1.0 / taps.len().max(1) as f64; taps.len()]
        };
        Self::new(taps, pdp)
    }

    /// Single tap `H[0] = I`.
    pub fn identity(n: usize) -> Self {
        let eye = Array2::from_shape_fn((n, n), |(i, j)| {
            Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        });
        Self { taps: vec![eye], pdp: vec![1.0] }
    }

    pub fn taps(&self) -> &[ComplexMat] {
        &self.taps
    }

    pub fn pdp(&self) -> &[f64] {
        &self.pdp
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn nr(&self) -> usize {
        self.taps[0].nrows()
    }

    pub fn nt(&self) -> usize {
        self.taps[0].ncols()
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

/// Exponential power-delay profile `c·exp(−ℓ/decay)`, normalized to unit sum.
pub fn exponential_pdp(l: usize, decay: f64) -> Result<Vec<f64>> {
    if l == 0 {
        return Err(Error::Config("channel needs at least one tap".into()));
    }
    if !(decay > 0.0) || !decay.is_finite() {
        return Err(Error::Config(format!("pdp decay must be positive, got {decay}")));
    }
    let raw: Vec<f64> = (0..l).map(|ell| (-(ell as f64) / decay).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|p| p / total).collect())
}

/// Draws a Rayleigh block-fading channel: tap ℓ has i.i.d. CN(0, pdp[ℓ]) entries.
pub fn sample_channel<R: Rng + ?Sized>(
    l: usize,
    nr: usize,
    nt: usize,
    decay: f64,
    rng: &mut R,
) -> Result<ChannelTaps> {
    let pdp = exponential_pdp(l, decay)?;
    let taps = pdp
        .iter()
        .map(|&p| Array2::from_shape_simple_fn((nr, nt), || complex_gaussian(rng, p)))
        .collect();
    ChannelTaps::new(taps, pdp)
}

/// The cyclic delay `J_ℓ` acting on the columns of an `· × Nc` block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclicShift {
    pub ell: usize,
    pub nc: usize,
}

impl CyclicShift {
    pub fn new(ell: usize, nc: usize) -> Result<Self> {
        if ell >= nc {
            return Err(Error::Index(format!("delay {ell} out of range for Nc = {nc}")));
        }
        Ok(Self { ell, nc })
    }

    /// `M·J_ℓ`: column k of the result is column (k − ℓ) mod Nc of `m`.
    pub fn apply(&self, m: &ComplexMat) -> ComplexMat {
        let mut out = Array2::zeros(m.raw_dim());
        let split = self.nc - self.ell;
        out.slice_mut(s![.., self.ell..]).assign(&m.slice(s![.., ..split]));
        out.slice_mut(s![.., ..self.ell]).assign(&m.slice(s![.., split..]));
        out
    }

    /// Explicit permutation matrix, for tests and diagnostics.
    pub fn matrix(&self) -> ComplexMat {
        let mut j = Array2::zeros((self.nc, self.nc));
        for k in 0..self.nc {
            j[[(k + self.nc - self.ell) % self.nc, k]] = Complex64::new(1.0, 0.0);
        }
        j
    }
}

pub fn apply_cyclic_shift(m: &ComplexMat, ell: usize) -> Result<ComplexMat> {
    Ok(CyclicShift::new(ell, m.ncols())?.apply(m))
}

/// Noiseless received block `Σ_ℓ H[ℓ]·X·F·J_ℓ`.
pub fn forward(x: &ComplexMat, taps: &ChannelTaps, fourier: &FourierOps) -> Result<ComplexMat> {
    let nc = fourier.nc();
    if x.ncols() != nc || x.nrows() != taps.nt() {
        return Err(Error::Shape(format!(
            "symbol is {}×{}, channel expects {}×{nc}",
            x.nrows(),
            x.ncols(),
            taps.nt()
        )));
    }
    let time = fourier.to_time(x);
    let mut y = Array2::zeros((taps.nr(), nc));
    for (ell, h) in taps.taps().iter().enumerate() {
        // J_ℓ depends on ℓ only modulo Nc
        let delayed = CyclicShift { ell: ell % nc, nc }.apply(&time);
        y += &h.dot(&delayed);
    }
    Ok(y)
}

/// Linear convolution of a CP-prefixed transmit block with the taps, as a
/// receiver sampling the same window would see it (zero state before the block).
pub fn propagate(tx: &ComplexMat, taps: &ChannelTaps) -> Result<ComplexMat> {
    if tx.nrows() != taps.nt() {
        return Err(Error::Shape(format!(
            "transmit block has {} streams, channel expects {}",
            tx.nrows(),
            taps.nt()
        )));
    }
    let n = tx.ncols();
    let mut rx = Array2::zeros((taps.nr(), n));
    for (ell, h) in taps.taps().iter().enumerate().take(n) {
        let contrib = h.dot(&tx.slice(s![.., ..n - ell]));
        let mut dst = rx.slice_mut(s![.., ell..]);
        dst += &contrib;
    }
    Ok(rx)
}

/// Noise level passed as `snr_db` for a noiseless link.
pub const NOISELESS: f64 = f64::INFINITY;

/// Adds CN(0, σ²) noise with σ² = signal_power / 10^(snr_db/10); returns σ².
pub fn add_awgn<R: Rng + ?Sized>(
    y: &ComplexMat,
    snr_db: f64,
    signal_power: f64,
    rng: &mut R,
) -> Result<(ComplexMat, f64)> {
    if !(signal_power > 0.0) {
        return Err(Error::Config(format!("signal power must be positive, got {signal_power}")));
    }
    if snr_db == NOISELESS {
        return Ok((y.clone(), 0.0));
    }
    if snr_db.is_nan() {
        return Err(Error::Numeric("SNR is NaN".into()));
    }
    let noise_var = signal_power / 10f64.powf(snr_db / 10.0);
    let noisy = y.mapv(|v| v + complex_gaussian(rng, noise_var));
    Ok((noisy, noise_var))
}

/// Eigenvalue of `J_ℓ` on subcarrier `j`: exp(−2πi·jℓ/Nc).
pub fn shift_eigenvalue(ell: usize, j: usize, nc: usize) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * ((ell * j) % nc) as f64 / nc as f64)
}

/// Per-subcarrier channels `G_j = Σ_ℓ l_ℓ(j)·H[ℓ]`, j = 0..Nc.
pub fn freq_domain_channel(taps: &ChannelTaps, fourier: &FourierOps) -> Vec<ComplexMat> {
    let nc = fourier.nc();
    (0..nc)
        .map(|j| {
            let mut g = Array2::zeros((taps.nr(), taps.nt()));
            for (ell, h) in taps.taps().iter().enumerate() {
                g.scaled_add(shift_eigenvalue(ell, j, nc), h);
            }
            g
        })
        .collect()
}

/// Inverse of [`freq_domain_channel`] truncated to the first `l` taps.
pub fn taps_from_freq_response(g: &[ComplexMat], l: usize) -> Result<ChannelTaps> {
    let nc = g.len();
    if nc == 0 || l == 0 || l > nc {
        return Err(Error::Config(format!("cannot recover {l} taps from {nc} subcarriers")));
    }
    let dim = g[0].raw_dim();
    let taps = (0..l)
        .map(|ell| {
            let mut h = Array2::zeros(dim.clone());
            for (j, gj) in g.iter().enumerate() {
                h.scaled_add(shift_eigenvalue(ell, j, nc).conj() / nc as f64, gj);
            }
            h
        })
        .collect();
    ChannelTaps::from_taps(taps)
}

/// Mean per-entry power of a block.
pub fn mean_power(y: &ComplexMat) -> f64 {
    y.iter().map(|z| z.norm_sqr()).sum::<f64>() / y.len().max(1) as f64
}

/// Energy of each receive row, for diagnostics.
pub fn row_energy(y: &ComplexMat) -> Vec<f64> {
    y.axis_iter(Axis(0)).map(|r| r.iter().map(|z| z.norm_sqr()).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{ofdm_time_signal, random_qam16, strip_cyclic_prefix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs(a: &ComplexMat, b: &ComplexMat) -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn single_tap_pdp() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ch = sample_channel(1, 2, 2, 3.0, &mut rng).unwrap();
        assert_eq!(ch.pdp(), &[1.0]);
        let ch = sample_channel(12, 2, 2, 3.0, &mut rng).unwrap();
        assert_eq!(ch.len(), 12);
        assert!((ch.pdp().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(sample_channel(4, 2, 2, 0.0, &mut rng), Err(Error::Config(_))));
        assert!(sample_channel(4, 2, 2, -1.0, &mut rng).is_err());
    }

    #[test]
    fn tap_variance_matches_pdp() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 10_000;
        let l = 6;
        let mut acc = vec![0.0; l];
        for _ in 0..draws {
            let ch = sample_channel(l, 1, 1, 3.0, &mut rng).unwrap();
            for (a, t) in acc.iter_mut().zip(ch.taps()) {
                *a += t[[0, 0]].norm_sqr();
            }
        }
        let pdp = exponential_pdp(l, 3.0).unwrap();
        for (a, p) in acc.iter().zip(&pdp) {
            let v = a / draws as f64;
            assert!((v - p).abs() / p < 0.05, "{v} vs {p}");
        }
    }

    #[test]
    fn cyclic_shift_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = random_qam16(3, 8, &mut rng);
        assert_eq!(apply_cyclic_shift(&m, 0).unwrap(), m);
        let mut e0 = Array2::zeros((1, 8));
        e0[[0, 0]] = Complex64::new(1.0, 0.0);
        let d = apply_cyclic_shift(&e0, 1).unwrap();
        assert_eq!(d[[0, 1]], Complex64::new(1.0, 0.0));
        assert_eq!(d.iter().filter(|z| z.norm() > 0.0).count(), 1);
        assert!(matches!(apply_cyclic_shift(&m, 8), Err(Error::Index(_))));
        let shift = CyclicShift::new(3, 8).unwrap();
        assert_eq!(shift.apply(&m), m.dot(&shift.matrix()));
    }

    #[test]
    fn shift_diagonalized_by_fourier() {
        let nc = 16;
        let ops = FourierOps::new(nc).unwrap();
        for ell in [0, 1, 5] {
            let j = CyclicShift::new(ell, nc).unwrap().matrix();
            let d = ops.f.dot(&j).dot(&ops.fh);
            for r in 0..nc {
                for c in 0..nc {
                    let expect = if r == c { shift_eigenvalue(ell, r, nc) } else { Complex64::new(0.0, 0.0) };
                    assert!((d[[r, c]] - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cp_convolution_matches_circulant_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ops = FourierOps::new(64).unwrap();
        for l in [1, 4, 12] {
            let ch = sample_channel(l, 2, 2, 3.0, &mut rng).unwrap();
            let x = random_qam16(2, 64, &mut rng);
            let tx = ofdm_time_signal(&x, &ops, 11).unwrap();
            let rx = strip_cyclic_prefix(&propagate(&tx, &ch).unwrap(), 11).unwrap();
            assert!(max_abs(&rx, &forward(&x, &ch, &ops).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn forward_identity_and_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ops = FourierOps::new(32).unwrap();
        let x1 = random_qam16(2, 32, &mut rng);
        let x2 = random_qam16(2, 32, &mut rng);
        assert!(max_abs(&forward(&x1, &ChannelTaps::identity(2), &ops).unwrap(), &ops.to_time(&x1)) < 1e-12);
        let ch = sample_channel(5, 2, 2, 3.0, &mut rng).unwrap();
        let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.5));
        let lhs = forward(&(x1.mapv(|z| z * a) + x2.mapv(|z| z * b)), &ch, &ops).unwrap();
        let rhs = forward(&x1, &ch, &ops).unwrap().mapv(|z| z * a) + forward(&x2, &ch, &ops).unwrap().mapv(|z| z * b);
        assert!(max_abs(&lhs, &rhs) < 1e-12);
        assert!(matches!(forward(&random_qam16(3, 32, &mut rng), &ch, &ops), Err(Error::Shape(_))));
    }

    #[test]
    fn frequency_response_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ops = FourierOps::new(32).unwrap();
        let ch = sample_channel(6, 2, 2, 3.0, &mut rng).unwrap();
        let g = freq_domain_channel(&ch, &ops);
        let back = taps_from_freq_response(&g, 6).unwrap();
        for (a, b) in back.taps().iter().zip(ch.taps()) {
            assert!(max_abs(a, b) < 1e-12);
        }
        let flat = freq_domain_channel(&ChannelTaps::identity(2), &ops);
        assert!(flat.iter().all(|gj| max_abs(gj, &ChannelTaps::identity(2).taps()[0]) == 0.0));
    }

    #[test]
    fn noiseless_sentinel() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y = random_qam16(2, 8, &mut rng);
        let (out, var) = add_awgn(&y, NOISELESS, 20.0, &mut rng).unwrap();
        assert_eq!(out, y);
        assert_eq!(var, 0.0);
        assert!(add_awgn(&y, 10.0, 0.0, &mut rng).is_err());
    }
}
