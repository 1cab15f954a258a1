//! Real-valued recasting of the complex link model and the per-coordinate
//! shift vectors used by the shifting detector.
//!
//! A complex `m × n` block `C` is represented as the `2m × n` real stack
//! `[Re(C); Im(C)]`. Under this map each real coordinate of the transmitted
//! block is a 4-PAM symbol.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use num_complex::Complex64;

use crate::channel::{shift_eigenvalue, ChannelTaps, CyclicShift};
use crate::waveform::FourierOps;
use crate::{ComplexMat, Error, Result};

/// Real or imaginary axis of a 16-QAM symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    Re,
    Im,
}

impl Part {
    pub const BOTH: [Part; 2] = [Part::Re, Part::Im];

    /// The complex unit a unit step along this axis adds: 1 or j.
    pub fn unit(self) -> Complex64 {
        match self {
            Part::Re => Complex64::new(1.0, 0.0),
            Part::Im => Complex64::new(0.0, 1.0),
        }
    }

    pub fn of(self, z: Complex64) -> f64 {
        match self {
            Part::Re => z.re,
            Part::Im => z.im,
        }
    }
}

/// One real coordinate `(ntx, nsc, part)` of the transmitted block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub ntx: usize,
    pub nsc: usize,
    pub part: Part,
}

impl Coord {
    pub fn new(ntx: usize, nsc: usize, part: Part) -> Self {
        Self { ntx, nsc, part }
    }

    /// Row of this coordinate in the real stack `X̃`.
    pub fn row(&self, nt: usize) -> usize {
        match self.part {
            Part::Re => self.ntx,
            Part::Im => nt + self.ntx,
        }
    }

    /// Position in the flattened `X̃` (row-major), used to index heads and shifts.
    pub fn index(&self, nt: usize, nc: usize) -> usize {
        self.row(nt) * nc + self.nsc
    }

    pub fn from_index(index: usize, nt: usize, nc: usize) -> Self {
        let row = index / nc;
        let nsc = index % nc;
        if row < nt {
            Self::new(row, nsc, Part::Re)
        } else {
            Self::new(row - nt, nsc, Part::Im)
        }
    }

    /// All `2·Nt·Nc` coordinates in index order.
    pub fn all(nt: usize, nc: usize) -> impl Iterator<Item = Coord> {
        (0..2 * nt * nc).map(move |i| Coord::from_index(i, nt, nc))
    }
}

/// `[Re(C); Im(C)]` of an `m × n` complex block.
#[derive(Debug, Clone, PartialEq)]
pub struct RealStack(Array2<f64>);

impl RealStack {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() % 2 != 0 {
            return Err(Error::Shape(format!("real stack needs an even row count, got {}", data.nrows())));
        }
        Ok(Self(data))
    }

    pub fn zeros(complex_rows: usize, cols: usize) -> Self {
        Self(Array2::zeros((2 * complex_rows, cols)))
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn data_mut(&mut self) -> &mut Array2<f64> {
        &mut self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    /// Number of complex rows `m`.
    pub fn complex_rows(&self) -> usize {
        self.0.nrows() / 2
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    /// `self + alpha·other`.
    pub fn axpy(&self, alpha: f64, other: &RealStack) -> RealStack {
        let mut out = self.0.clone();
        out.scaled_add(alpha, &other.0);
        RealStack(out)
    }

    pub fn scaled(&self, alpha: f64) -> RealStack {
        RealStack(&self.0 * alpha)
    }
}

pub fn to_real(c: &ComplexMat) -> RealStack {
    let re = c.mapv(|z| z.re);
    let im = c.mapv(|z| z.im);
    RealStack(concatenate![Axis(0), re, im])
}

pub fn from_real(r: &RealStack) -> ComplexMat {
    let m = r.complex_rows();
    let d = &r.0;
    Array2::from_shape_fn((m, d.ncols()), |(i, k)| Complex64::new(d[[i, k]], d[[m + i, k]]))
}

/// Real block form `[[Re A, −Im A], [Im A, Re A]]` of a complex matrix.
fn real_block(a: &ComplexMat) -> Array2<f64> {
    let re = a.mapv(|z| z.re);
    let im = a.mapv(|z| z.im);
    let top = concatenate![Axis(1), re, -&im];
    let bottom = concatenate![Axis(1), im, re];
    concatenate![Axis(0), top, bottom]
}

/// The link map evaluated entirely in real arithmetic: for each tap, the
/// cyclic IDFT acts on `[Re(X)ᵀ; Im(X)ᵀ]` as a real block matrix, the result
/// is restacked, and the tap `H[ℓ]` acts through its own real block matrix.
pub fn real_forward(xr: &RealStack, taps: &ChannelTaps, fourier: &FourierOps) -> Result<RealStack> {
    let nc = fourier.nc();
    let nt = xr.complex_rows();
    if nt != taps.nt() || xr.ncols() != nc {
        return Err(Error::Shape(format!(
            "real input is {}×{}, expected {}×{nc}",
            xr.0.nrows(),
            xr.ncols(),
            2 * taps.nt()
        )));
    }
    let x = &xr.0;
    // [Re(X)ᵀ; Im(X)ᵀ], 2Nc × Nt
    let xt = concatenate![Axis(0), x.slice(s![..nt, ..]).t(), x.slice(s![nt.., ..]).t()];
    let mut out = Array2::zeros((2 * taps.nr(), nc));
    for (ell, h) in taps.taps().iter().enumerate() {
        let fj = CyclicShift::new(ell % nc, nc)?.apply(&fourier.f);
        let fjt = fj.t().to_owned();
        // [Re(XFJ)ᵀ; Im(XFJ)ᵀ] = [[Re(FJ)ᵀ, −Im(FJ)ᵀ], [Im(FJ)ᵀ, Re(FJ)ᵀ]]·[Re(X)ᵀ; Im(X)ᵀ]
        let stacked_t = real_block(&fjt).dot(&xt);
        let xfj = concatenate![Axis(0), stacked_t.slice(s![..nc, ..]).t(), stacked_t.slice(s![nc.., ..]).t()];
        out += &real_block(h).dot(&xfj);
    }
    Ok(RealStack(out))
}

/// Received-signal displacement caused by a unit step of one transmitted coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftVector {
    pub coord: Coord,
    pub s: RealStack,
}

/// Shift vector of `(ntx, nsc, part)`: the noiseless response to the
/// elementary block with 1 (or j) at that resource element.
///
/// The response factorizes as `G_nsc[:, ntx] ⊗ F[nsc, :]`, which is what
/// gets evaluated here; it equals `real_forward(to_real(E))`.
pub fn shift_vector(
    taps: &ChannelTaps,
    fourier: &FourierOps,
    ntx: usize,
    nsc: usize,
    part: Part,
) -> Result<ShiftVector> {
    let nc = fourier.nc();
    if ntx >= taps.nt() || nsc >= nc {
        return Err(Error::Index(format!(
            "resource element ({ntx}, {nsc}) outside {}×{nc}",
            taps.nt()
        )));
    }
    let column: Vec<Complex64> = (0..taps.nr())
        .map(|r| {
            taps.taps()
                .iter()
                .enumerate()
                .map(|(ell, h)| h[[r, ntx]] * shift_eigenvalue(ell, nsc, nc))
                .sum::<Complex64>()
                * part.unit()
        })
        .collect();
    let row = fourier.f.row(nsc);
    let response = Array2::from_shape_fn((taps.nr(), nc), |(r, k)| column[r] * row[k]);
    Ok(ShiftVector { coord: Coord::new(ntx, nsc, part), s: to_real(&response) })
}

/// Shift vectors of every coordinate, in [`Coord::index`] order.
pub fn all_shift_vectors(taps: &ChannelTaps, fourier: &FourierOps) -> Result<Vec<ShiftVector>> {
    Coord::all(taps.nt(), fourier.nc())
        .map(|c| shift_vector(taps, fourier, c.ntx, c.nsc, c.part))
        .collect()
}

/// Elementary transmit block with `part.unit()` at `(ntx, nsc)`.
pub fn elementary(nt: usize, nc: usize, coord: Coord) -> ComplexMat {
    let mut e = Array2::zeros((nt, nc));
    e[[coord.ntx, coord.nsc]] = coord.part.unit();
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{forward, sample_channel};
    use crate::waveform::random_qam16;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn stacking_examples() {
        let c = Array2::from_elem((1, 1), Complex64::new(1.0, 2.0));
        assert_eq!(to_real(&c).data(), &ndarray::array![[1.0], [2.0]]);
        let real_only = Array2::from_elem((2, 3), Complex64::new(4.0, 0.0));
        let r = to_real(&real_only);
        assert!(r.data().slice(s![2.., ..]).iter().all(|&v| v == 0.0));
        assert_eq!(from_real(&r), real_only);
        assert!(matches!(RealStack::new(Array2::zeros((3, 2))), Err(Error::Shape(_))));
    }

    #[test]
    fn coord_index_round_trip() {
        for (i, c) in Coord::all(2, 8).enumerate() {
            assert_eq!(c.index(2, 8), i);
        }
        assert_eq!(Coord::new(1, 3, Part::Im).row(2), 3);
    }

    #[test]
    fn real_forward_identity_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ops = FourierOps::new(8).unwrap();
        let x = random_qam16(2, 8, &mut rng).mapv(|z| Complex64::new(z.re, 0.0));
        let y = real_forward(&to_real(&x), &ChannelTaps::identity(2), &ops).unwrap();
        let xf = ops.to_time(&x);
        assert!(max_abs(&y.data().slice(s![..2, ..]).to_owned(), &xf.mapv(|z| z.re)) < 1e-12);
        assert!(max_abs(&y.data().slice(s![2.., ..]).to_owned(), &xf.mapv(|z| z.im)) < 1e-12);
    }

    #[test]
    fn shift_vector_matches_forward_of_elementary_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ops = FourierOps::new(8).unwrap();
        let ch = sample_channel(3, 2, 2, 3.0, &mut rng).unwrap();
        let x = random_qam16(2, 8, &mut rng);
        for c in Coord::all(2, 8) {
            let sv = shift_vector(&ch, &ops, c.ntx, c.nsc, c.part).unwrap();
            let e = elementary(2, 8, c);
            let oracle = real_forward(&to_real(&e), &ch, &ops).unwrap();
            assert!(max_abs(sv.s.data(), oracle.data()) < 1e-12);
            // superposition: forward(X + 2E) − forward(X) = 2·S
            let diff = forward(&(&x + &e.mapv(|z| z * 2.0)), &ch, &ops).unwrap() - forward(&x, &ch, &ops).unwrap();
            assert!(max_abs(&to_real(&diff).into_inner(), &(sv.s.data() * 2.0)) < 1e-12);
        }
        let re = from_real(&shift_vector(&ch, &ops, 1, 4, Part::Re).unwrap().s);
        let im = from_real(&shift_vector(&ch, &ops, 1, 4, Part::Im).unwrap().s);
        let j = Complex64::new(0.0, 1.0);
        assert!(re.iter().zip(im.iter()).all(|(a, b)| (a * j - b).norm() < 1e-15));
        assert!(matches!(shift_vector(&ch, &ops, 2, 0, Part::Re), Err(Error::Index(_))));
        assert!(shift_vector(&ch, &ops, 0, 8, Part::Re).is_err());
    }

    #[test]
    fn identity_channel_shift_is_subcarrier_waveform() {
        let ops = FourierOps::new(8).unwrap();
        let sv = from_real(&shift_vector(&ChannelTaps::identity(2), &ops, 1, 3, Part::Re).unwrap().s);
        for k in 0..8 {
            assert!(sv[[0, k]].norm() == 0.0);
            assert!((sv[[1, k]] - ops.f[[3, k]]).norm() < 1e-15);
        }
    }
}
