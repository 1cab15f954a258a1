//! Model-based references: pilot channel estimation, LMMSE and ML detection.
//!
//! All three work per subcarrier on the frequency-domain block `Y·Fᴴ`,
//! where the link is flat: `y_j = G_j·x_j + n_j`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{freq_domain_channel, ChannelTaps};
use crate::linalg::{hermitian, pinv_complex, solve_complex};
use crate::waveform::{pilot_matrix, slice_qam16, Constellation16Qam, FourierOps, QAM16_ENERGY};
use crate::{ComplexMat, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsiSource {
    Perfect,
    Estimated,
}

impl std::fmt::Display for CsiSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CsiSource::Perfect => "perfect",
            CsiSource::Estimated => "estimated",
        })
    }
}

/// Per-subcarrier channel matrices available to a detector.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiEstimate {
    pub g: Vec<ComplexMat>,
    pub noise_var: f64,
    pub source: CsiSource,
}

impl CsiEstimate {
    pub fn perfect(taps: &ChannelTaps, fourier: &FourierOps, noise_var: f64) -> Self {
        Self { g: freq_domain_channel(taps, fourier), noise_var, source: CsiSource::Perfect }
    }

    pub fn nc(&self) -> usize {
        self.g.len()
    }

    pub fn nr(&self) -> usize {
        self.g.first().map_or(0, |g| g.nrows())
    }

    pub fn nt(&self) -> usize {
        self.g.first().map_or(0, |g| g.ncols())
    }

    fn check(&self, yf: &ComplexMat) -> Result<()> {
        if self.g.is_empty() || yf.ncols() != self.nc() || yf.nrows() != self.nr() {
            return Err(Error::Shape(format!(
                "received block {:?} does not match CSI for {} subcarriers, {} receive antennas",
                yf.dim(),
                self.nc(),
                self.nr()
            )));
        }
        Ok(())
    }
}

/// Pilot-based estimate `Ĝ_j = Y_j·P_jᴴ·(P_j·P_jᴴ + σ²·I)⁻¹`.
///
/// `Y_j` stacks the received pilot vectors of subcarrier `j` as columns
/// (Nr × Q) and `P_j` the transmitted ones (Nt × Q). With σ² = 0 this is
/// least squares.
pub fn estimate_channel(yf_pilots: &[ComplexMat], x_pilots: &[ComplexMat], noise_var: f64) -> Result<CsiEstimate> {
    if yf_pilots.is_empty() || yf_pilots.len() != x_pilots.len() {
        return Err(Error::Shape(format!(
            "{} received pilots for {} transmitted",
            yf_pilots.len(),
            x_pilots.len()
        )));
    }
    let nc = x_pilots[0].ncols();
    let nt = x_pilots[0].nrows();
    if yf_pilots.iter().any(|y| y.ncols() != nc) {
        return Err(Error::Shape("pilot blocks disagree on the subcarrier count".into()));
    }
    let g = (0..nc)
        .map(|j| {
            let p = pilot_matrix(x_pilots, j).t().to_owned();
            let y = pilot_matrix(yf_pilots, j).t().to_owned();
            let ph = hermitian(&p);
            let mut gram = p.dot(&ph);
            for k in 0..nt {
                gram[[k, k]] += noise_var;
            }
            // Ĝ = Y·Pᴴ·A⁻¹ ⇔ Aᴴ·Ĝᴴ = P·Yᴴ with A Hermitian
            let gh = solve_complex(&gram, &p.dot(&hermitian(&y)))?;
            Ok(hermitian(&gh))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CsiEstimate { g, noise_var, source: CsiSource::Estimated })
}

/// Averages each `Ĝ_j` with its neighbours within `radius` subcarriers (circularly).
pub fn smooth_across_subcarriers(csi: &CsiEstimate, radius: usize) -> CsiEstimate {
    let nc = csi.nc();
    if radius == 0 || nc == 0 {
        return csi.clone();
    }
    let g = (0..nc)
        .map(|j| {
            let mut acc = Array2::zeros(csi.g[j].raw_dim());
            for d in 0..=2 * radius {
                acc += &csi.g[(j + nc + d - radius) % nc];
            }
            acc / Complex64::new((2 * radius + 1) as f64, 0.0)
        })
        .collect();
    CsiEstimate { g, ..csi.clone() }
}

/// Unsliced LMMSE estimate `(GᴴG + σ²/E_s·I)⁻¹Gᴴy` per subcarrier.
///
/// With σ² = 0 the pseudo-inverse (zero-forcing) solution is returned.
pub fn lmmse_equalize(yf: &ComplexMat, csi: &CsiEstimate) -> Result<ComplexMat> {
    csi.check(yf)?;
    let nt = csi.nt();
    let mut out = Array2::zeros((nt, csi.nc()));
    for (j, g) in csi.g.iter().enumerate() {
        let y = yf.column(j).to_owned().insert_axis(ndarray::Axis(1));
        let x = if csi.noise_var > 0.0 {
            let gh = hermitian(g);
            let mut a = gh.dot(g);
            for k in 0..nt {
                a[[k, k]] += csi.noise_var / QAM16_ENERGY;
            }
            solve_complex(&a, &gh.dot(&y))?
        } else {
            pinv_complex(g)?.dot(&y)
        };
        out.column_mut(j).assign(&x.column(0));
    }
    Ok(out)
}

/// LMMSE equalization followed by per-axis 4-PAM slicing.
pub fn lmmse_detect(yf: &ComplexMat, csi: &CsiEstimate) -> Result<ComplexMat> {
    Ok(lmmse_equalize(yf, csi)?.mapv(slice_qam16))
}

/// Default bound on the number of ML candidates per subcarrier (16^3).
pub const DEFAULT_ML_CANDIDATE_CAP: usize = 4096;

/// Exhaustive per-subcarrier ML search with the candidate images `G_j·c`
/// precomputed once per channel.
#[derive(Debug, Clone)]
pub struct MlDetector {
    candidates: Vec<Array1<Complex64>>,
    /// images[j][c] = G_j·candidates[c]
    images: Vec<Vec<Array1<Complex64>>>,
    nr: usize,
}

impl MlDetector {
    pub fn new(csi: &CsiEstimate, cap: usize) -> Result<Self> {
        let nt = csi.nt();
        let count = 16usize
            .checked_pow(nt as u32)
            .filter(|&c| c <= cap)
            .ok_or_else(|| Error::Config(format!("16^{nt} ML candidates exceed the cap of {cap}")))?;
        let points = Constellation16Qam::new();
        let candidates: Vec<Array1<Complex64>> = (0..count)
            .map(|mut c| {
                Array1::from_shape_fn(nt, |_| {
                    let p = points.point((c % 16) as u8);
                    c /= 16;
                    p
                })
            })
            .collect();
        let images = csi.g.iter().map(|g| candidates.iter().map(|c| g.dot(c)).collect()).collect();
        Ok(Self { candidates, images, nr: csi.nr() })
    }

    pub fn detect(&self, yf: &ComplexMat) -> Result<ComplexMat> {
        if yf.ncols() != self.images.len() || yf.nrows() != self.nr {
            return Err(Error::Shape(format!("received block {:?} does not match the detector", yf.dim())));
        }
        let nt = self.candidates[0].len();
        let mut out = Array2::zeros((nt, yf.ncols()));
        for (j, images) in self.images.iter().enumerate() {
            let y = yf.column(j);
            let mut best = (f64::INFINITY, 0);
            for (c, img) in images.iter().enumerate() {
                let d: f64 = y.iter().zip(img.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
                if d < best.0 {
                    best = (d, c);
                }
            }
            out.column_mut(j).assign(&self.candidates[best.1]);
        }
        Ok(out)
    }
}

/// One-shot ML detection of a frequency-domain block.
pub fn ml_detect(yf: &ComplexMat, csi: &CsiEstimate) -> Result<ComplexMat> {
    csi.check(yf)?;
    MlDetector::new(csi, DEFAULT_ML_CANDIDATE_CAP)?.detect(yf)
}
