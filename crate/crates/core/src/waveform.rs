//! 16-QAM mapping, 4-PAM slicing, pilot design and the unitary (I)DFT.

use ndarray::{s, Array2};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

use crate::{ComplexMat, Error, Result};

/// The 4-PAM levels of one constellation axis, in ascending order.
pub const PAM4_LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];

/// Mean energy of the unnormalized 16-QAM alphabet.
pub const QAM16_ENERGY: f64 = 10.0;

/// Gray labels of [`PAM4_LEVELS`]: 00 → −3, 01 → −1, 11 → +1, 10 → +3.
const AXIS_GRAY: [u8; 4] = [0b00, 0b01, 0b11, 0b10];

fn level_from_axis_bits(bits: u8) -> f64 {
    let idx = AXIS_GRAY.iter().position(|&g| g == bits).expect("2-bit label");
    PAM4_LEVELS[idx]
}

/// Index of a 4-PAM level in [`PAM4_LEVELS`]; `None` if `v` is not a level.
pub fn pam4_index(v: f64) -> Option<usize> {
    PAM4_LEVELS.iter().position(|&l| l == v)
}

/// The 16-QAM alphabet {−3,−1,+1,+3} × {−3j,−1j,+1j,+3j} with a Gray
/// label on each axis. A 4-bit label is `[I1 I0 Q1 Q0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation16Qam {
    points: [Complex64; 16],
    labels: [u8; 16],
}

impl Default for Constellation16Qam {
    fn default() -> Self {
        Self::new()
    }
}

impl Constellation16Qam {
    pub fn new() -> Self {
        let mut points = [Complex64::new(0.0, 0.0); 16];
        let mut labels = [0u8; 16];
        for label in 0..16u8 {
            points[label as usize] = Complex64::new(
                level_from_axis_bits(label >> 2),
                level_from_axis_bits(label & 0b11),
            );
            labels[label as usize] = label;
        }
        Self { points, labels }
    }

    /// Points indexed by their 4-bit label.
    pub fn points(&self) -> &[Complex64; 16] {
        &self.points
    }

    pub fn labels(&self) -> &[u8; 16] {
        &self.labels
    }

    pub fn point(&self, label: u8) -> Complex64 {
        self.points[(label & 0x0f) as usize]
    }

    /// Label of an exact constellation point.
    pub fn label_of(&self, z: Complex64) -> Option<u8> {
        let i = pam4_index(z.re)?;
        let q = pam4_index(z.im)?;
        Some((AXIS_GRAY[i] << 2) | AXIS_GRAY[q])
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.label_of(z).is_some()
    }
}

/// Maps `4 * count` bits (each 0 or 1, MSB first within a symbol) to 16-QAM points.
pub fn qam16_modulate(bits: &[u8], count: usize) -> Result<Vec<Complex64>> {
    if bits.len() != 4 * count {
        return Err(Error::Shape(format!(
            "expected {} bits for {count} symbols, got {}",
            4 * count,
            bits.len()
        )));
    }
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::Shape(format!("bit value {b} is not 0 or 1")));
    }
    let constellation = Constellation16Qam::new();
    Ok(bits
        .chunks_exact(4)
        .map(|c| constellation.point((c[0] << 3) | (c[1] << 2) | (c[2] << 1) | c[3]))
        .collect())
}

/// Hard-decides every symbol and returns its 4-bit label, MSB first.
pub fn qam16_demodulate(symbols: &[Complex64]) -> Result<Vec<u8>> {
    let constellation = Constellation16Qam::new();
    let mut bits = Vec::with_capacity(4 * symbols.len());
    for &z in symbols {
        let point = Complex64::new(hard_decision_4pam(z.re)?, hard_decision_4pam(z.im)?);
        let label = constellation.label_of(point).expect("sliced point");
        bits.extend((0..4).rev().map(|k| (label >> k) & 1));
    }
    Ok(bits)
}

/// Nearest 4-PAM level. Ties at −2, 0 and +2 resolve to the smaller level.
pub fn hard_decision_4pam(v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::Numeric(format!("cannot slice non-finite value {v}")));
    }
    Ok(slice_4pam(v))
}

/// Infallible slicer used on equalizer outputs; NaN maps to −3.
pub(crate) fn slice_4pam(v: f64) -> f64 {
    if v > 2.0 {
        3.0
    } else if v > 0.0 {
        1.0
    } else if v > -2.0 {
        -1.0
    } else {
        -3.0
    }
}

pub(crate) fn slice_qam16(z: Complex64) -> Complex64 {
    Complex64::new(slice_4pam(z.re), slice_4pam(z.im))
}

/// Uniformly random 16-QAM matrix.
pub fn random_qam16<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMat {
    let c = Constellation16Qam::new();
    Array2::from_shape_simple_fn((rows, cols), || c.point(rng.random_range(0..16u8)))
}

/// Unitary IDFT matrix: entry (n, k) = exp(+2πi·nk/Nc) / √Nc.
pub fn idft_matrix(nc: usize) -> ComplexMat {
    let scale = 1.0 / (nc as f64).sqrt();
    Array2::from_shape_fn((nc, nc), |(n, k)| {
        // reduce nk mod Nc before scaling keeps the phase exact for large Nc
        let phase = 2.0 * PI * ((n * k) % nc) as f64 / nc as f64;
        Complex64::from_polar(scale, phase)
    })
}

/// The IDFT matrix `f` and its conjugate transpose `fh` (the DFT).
#[derive(Debug, Clone)]
pub struct FourierOps {
    nc: usize,
    pub f: ComplexMat,
    pub fh: ComplexMat,
}

impl FourierOps {
    pub fn new(nc: usize) -> Result<Self> {
        if nc == 0 {
            return Err(Error::Config("subcarrier count must be at least 1".into()));
        }
        let f = idft_matrix(nc);
        let fh = f.t().mapv(|z| z.conj());
        Ok(Self { nc, f, fh })
    }

    pub fn nc(&self) -> usize {
        self.nc
    }

    /// Frequency → time, row-wise: `X · F`.
    pub fn to_time(&self, x: &ComplexMat) -> ComplexMat {
        x.dot(&self.f)
    }

    /// Time → frequency, row-wise: `Y · Fᴴ`.
    pub fn to_freq(&self, y: &ComplexMat) -> ComplexMat {
        y.dot(&self.fh)
    }
}

/// Sylvester–Hadamard matrix of order `n` (a power of two).
fn hadamard(n: usize) -> Array2<f64> {
    let mut h = Array2::from_elem((1, 1), 1.0);
    while h.nrows() < n {
        let m = h.nrows();
        let mut next = Array2::zeros((2 * m, 2 * m));
        next.slice_mut(s![..m, ..m]).assign(&h);
        next.slice_mut(s![..m, m..]).assign(&h);
        next.slice_mut(s![m.., ..m]).assign(&h);
        next.slice_mut(s![m.., m..]).assign(&(-&h));
        h = next;
    }
    h
}

/// Orthogonal pilot stack of `Q = Nt` OFDM symbols, each `Nt × Nc`.
///
/// Pilot symbol `q`, antenna `n`, subcarrier `j` carries `H[q][n]·s[j][n]`
/// where `H` is a Hadamard matrix and `s` is drawn from the eight
/// constant-modulus 16-QAM points (|s|² = 10). The per-subcarrier Q × Nt
/// pilot matrix therefore satisfies `PᴴP = 10·Nt·I`.
pub fn build_pilots<R: Rng + ?Sized>(nt: usize, nc: usize, rng: &mut R) -> Result<Vec<ComplexMat>> {
    if nt == 0 {
        return Err(Error::Config("need at least one transmit antenna".into()));
    }
    if nc < nt {
        return Err(Error::Config(format!(
            "pilot design needs Nc >= Nt (Nc = {nc}, Nt = {nt})"
        )));
    }
    if !nt.is_power_of_two() {
        return Err(Error::Config(format!(
            "orthogonal 16-QAM pilots are built for power-of-two Nt, got {nt}"
        )));
    }
    let constellation = Constellation16Qam::new();
    let unimodular: Vec<Complex64> = constellation
        .points()
        .iter()
        .copied()
        .filter(|z| z.norm_sqr() == QAM16_ENERGY)
        .collect();
    let h = hadamard(nt);
    let base: Array2<Complex64> = Array2::from_shape_simple_fn((nt, nc), || {
        unimodular[rng.random_range(0..unimodular.len())]
    });
    Ok((0..nt)
        .map(|q| Array2::from_shape_fn((nt, nc), |(n, j)| base[[n, j]] * h[[q, n]]))
        .collect())
}

/// Per-subcarrier pilot matrix `P_j` (Q × Nt): row q is pilot symbol q at subcarrier j.
pub fn pilot_matrix(pilots: &[ComplexMat], j: usize) -> ComplexMat {
    let nt = pilots.first().map_or(0, |p| p.nrows());
    Array2::from_shape_fn((pilots.len(), nt), |(q, n)| pilots[q][[n, j]])
}

/// One block-fading transmission unit: `Q` pilot and `Nd` data OFDM symbols.
#[derive(Debug, Clone)]
pub struct Frame {
    pub pilots: Vec<ComplexMat>,
    pub data: Vec<ComplexMat>,
    pub nc: usize,
    pub ncp: usize,
}

impl Frame {
    pub fn random<R: Rng + ?Sized>(
        nt: usize,
        nc: usize,
        ncp: usize,
        nd: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if ncp >= nc {
            return Err(Error::Config(format!("cyclic prefix {ncp} must be shorter than Nc = {nc}")));
        }
        let pilots = build_pilots(nt, nc, rng)?;
        let data = (0..nd).map(|_| random_qam16(nt, nc, rng)).collect();
        Ok(Self { pilots, data, nc, ncp })
    }

    /// Pilot symbols followed by data symbols, in transmission order.
    pub fn symbols(&self) -> impl Iterator<Item = &ComplexMat> {
        self.pilots.iter().chain(self.data.iter())
    }
}

/// Time-domain OFDM block `X·F` with the last `Ncp` samples prepended.
pub fn ofdm_time_signal(x: &ComplexMat, fourier: &FourierOps, ncp: usize) -> Result<ComplexMat> {
    let nc = fourier.nc();
    if x.ncols() != nc {
        return Err(Error::Shape(format!("symbol has {} columns, expected {nc}", x.ncols())));
    }
    if ncp >= nc {
        return Err(Error::Config(format!("cyclic prefix {ncp} must be shorter than Nc = {nc}")));
    }
    let body = fourier.to_time(x);
    let mut out = Array2::zeros((x.nrows(), nc + ncp));
    out.slice_mut(s![.., ..ncp]).assign(&body.slice(s![.., nc - ncp..]));
    out.slice_mut(s![.., ncp..]).assign(&body);
    Ok(out)
}

/// Drops the first `ncp` columns of a received block.
pub fn strip_cyclic_prefix(y: &ComplexMat, ncp: usize) -> Result<ComplexMat> {
    if ncp > y.ncols() {
        return Err(Error::Shape(format!("cannot strip {ncp} samples from {}", y.ncols())));
    }
    Ok(y.slice(s![.., ncp..]).to_owned())
}
